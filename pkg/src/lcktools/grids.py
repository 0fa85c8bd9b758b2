"""Grid domains in C^N (N = 1 or 2), grid functions, regions and polynomial maps.

A domain samples each complex coordinate z_j = x_j + i y_j on a uniform
lattice of spacing h; the value array is indexed [x1, y1(, x2, y2)] in row
major order.  Central-difference stencils need two nodes of margin, so every
axis carries at least five samples.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import GridBoundsError, ValidationError

INTERIOR_MARGIN = 2


@dataclass(frozen=True)
class GridDomain:
    dim: int
    box: tuple[tuple[float, float, float, float], ...]
    h: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValidationError("complex dimension must be 1 or 2 at desk scale")
        if len(self.box) != self.dim:
            raise ValidationError("one (re_min, re_max, im_min, im_max) box per coordinate")
        if self.h <= 0:
            raise ValidationError("grid spacing must be positive")
        for n in self.shape:
            if n < 5:
                raise ValidationError("at least 5 samples per axis (stencils need 2-wide margins)")

    @property
    def shape(self) -> tuple[int, ...]:
        out = []
        for re_min, re_max, im_min, im_max in self.box:
            out.append(int(round((re_max - re_min) / self.h)) + 1)
            out.append(int(round((im_max - im_min) / self.h)) + 1)
        return tuple(out)

    def axes(self) -> list[np.ndarray]:
        out = []
        for (re_min, _, im_min, _), n_pair in zip(self.box, _pairs(self.shape)):
            out.append(re_min + self.h * np.arange(n_pair[0]))
            out.append(im_min + self.h * np.arange(n_pair[1]))
        return out

    def complex_coordinates(self) -> list[np.ndarray]:
        """One full-shape complex array per coordinate."""
        axes = self.axes()
        grids = np.meshgrid(*axes, indexing="ij")
        return [grids[2 * j] + 1j * grids[2 * j + 1] for j in range(self.dim)]

    def interior_mask(self, margin: int = INTERIOR_MARGIN) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        for axis, n in enumerate(self.shape):
            index = [slice(None)] * len(self.shape)
            index[axis] = slice(0, margin)
            mask[tuple(index)] = False
            index[axis] = slice(n - margin, n)
            mask[tuple(index)] = False
        return mask

    def nearest_index(self, point: Sequence[complex]) -> tuple[int, ...]:
        if len(point) != self.dim:
            raise ValidationError(f"point must have {self.dim} complex coordinates")
        idx: list[int] = []
        for j, z in enumerate(point):
            re_min, re_max, im_min, im_max = self.box[j]
            i_re = int(round((z.real - re_min) / self.h))
            i_im = int(round((z.imag - im_min) / self.h))
            n_re, n_im = self.shape[2 * j], self.shape[2 * j + 1]
            if not (0 <= i_re < n_re and 0 <= i_im < n_im):
                raise GridBoundsError(f"point {point} outside the domain box")
            idx.extend((i_re, i_im))
        return tuple(idx)

    def point_of_index(self, idx: Sequence[int]) -> tuple[complex, ...]:
        axes = self.axes()
        return tuple(
            complex(axes[2 * j][idx[2 * j]], axes[2 * j + 1][idx[2 * j + 1]])
            for j in range(self.dim)
        )


def _pairs(shape: tuple[int, ...]):
    return [(shape[i], shape[i + 1]) for i in range(0, len(shape), 2)]


@dataclass(frozen=True)
class GridFunction:
    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != self.domain.shape:
            raise ValidationError(f"values shape {values.shape} != domain shape {self.domain.shape}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("grid function must be finite everywhere")
        object.__setattr__(self, "values", values)

    def __eq__(self, other):
        return (
            isinstance(other, GridFunction)
            and self.domain == other.domain
            and np.array_equal(self.values, other.values)
        )


def grid_function_from(domain: GridDomain, fn) -> GridFunction:
    """Sample a callable of complex coordinates (vectorized) on the domain."""
    zs = domain.complex_coordinates()
    return GridFunction(domain, np.asarray(fn(*zs), dtype=np.float64))


@dataclass(frozen=True)
class Region:
    """A box with optional per-coordinate modulus (annulus) bounds."""

    box: Optional[tuple[tuple[float, float, float, float], ...]] = None
    annuli: tuple[tuple[int, float, float], ...] = ()

    def mask(self, domain: GridDomain) -> np.ndarray:
        return self.contains(domain.complex_coordinates())

    def contains(self, zs: Sequence[np.ndarray]) -> np.ndarray:
        """Membership of arbitrary complex coordinate arrays."""
        zs = [np.asarray(z) for z in zs]
        mask = np.ones(zs[0].shape, dtype=bool)
        if self.box is not None:
            if len(self.box) != len(zs):
                raise ValidationError("region box must match the coordinate count")
            for j, (re_min, re_max, im_min, im_max) in enumerate(self.box):
                mask &= (zs[j].real >= re_min) & (zs[j].real <= re_max)
                mask &= (zs[j].imag >= im_min) & (zs[j].imag <= im_max)
        for coord, r_min, r_max in self.annuli:
            if not 0 <= coord < len(zs):
                raise ValidationError(f"annulus coordinate {coord} out of range")
            r = np.abs(zs[coord])
            mask &= (r >= r_min) & (r <= r_max)
        return mask


Monomial = tuple[int, ...]


@dataclass(frozen=True)
class HolomorphicMapSpec:
    """Polynomial map C^N -> C^M with exact coefficient differentiation."""

    dim_in: int
    dim_out: int
    polys: tuple[Mapping[Monomial, complex], ...]
    discrete_fibers: bool = True

    def __post_init__(self):
        if len(self.polys) != self.dim_out:
            raise ValidationError("one component polynomial per output coordinate")
        frozen = []
        for poly in self.polys:
            entries = {}
            for mono, coeff in poly.items():
                mono = tuple(int(e) for e in mono)
                if len(mono) != self.dim_in or any(e < 0 for e in mono):
                    raise ValidationError(f"bad monomial exponents {mono}")
                entries[mono] = complex(coeff)
            frozen.append(tuple(sorted(entries.items())))
        object.__setattr__(self, "polys", tuple(frozen))

    def component(self, m: int) -> dict[Monomial, complex]:
        return dict(self.polys[m])

    def evaluate(self, zs: Sequence[np.ndarray]) -> list[np.ndarray]:
        if len(zs) != self.dim_in:
            raise ValidationError(f"map expects {self.dim_in} coordinates")
        out = []
        for poly in self.polys:
            acc = np.zeros(np.broadcast(*zs).shape if len(zs) > 1 else np.shape(zs[0]), dtype=complex)
            for mono, coeff in poly:
                term = np.full_like(acc, coeff)
                for j, e in enumerate(mono):
                    if e:
                        term = term * zs[j] ** e
                acc = acc + term
            out.append(acc)
        return out

    def derivative(self, m: int, n: int) -> dict[Monomial, complex]:
        """d(component m)/d z_n by exact coefficient differentiation."""
        out: dict[Monomial, complex] = {}
        for mono, coeff in self.polys[m]:
            e = mono[n]
            if e == 0:
                continue
            lowered = tuple(x - 1 if j == n else x for j, x in enumerate(mono))
            out[lowered] = out.get(lowered, 0) + e * coeff
        return out

    def evaluate_jacobian(self, zs: Sequence[np.ndarray]) -> np.ndarray:
        """Array of shape (*points, M, N)."""
        base = np.broadcast(*zs).shape if len(zs) > 1 else np.shape(zs[0])
        jac = np.zeros(base + (self.dim_out, self.dim_in), dtype=complex)
        for m in range(self.dim_out):
            for n in range(self.dim_in):
                for mono, coeff in sorted(self.derivative(m, n).items()):
                    term = np.full(base, coeff, dtype=complex)
                    for j, e in enumerate(mono):
                        if e:
                            term = term * zs[j] ** e
                    jac[..., m, n] += term
        return jac


def compose_with_map(
    target: GridFunction, map_spec: HolomorphicMapSpec, source: GridDomain
) -> GridFunction:
    """target o map on the source grid, via C^2 cubic-spline interpolation.

    Cubic splines reproduce polynomials up to degree three, so quadratic
    model potentials compose exactly up to rounding.  Raises when the image
    of a source node leaves the target box.
    """
    if map_spec.dim_in != source.dim or map_spec.dim_out != target.domain.dim:
        raise ValidationError("map dimensions do not match the domains")
    zs = source.complex_coordinates()
    images = map_spec.evaluate(zs)
    coords = []
    for j, w in enumerate(images):
        re_min, re_max, im_min, im_max = target.domain.box[j]
        eps = 1e-9 * max(1.0, abs(re_max), abs(im_max))
        if (
            w.real.min() < re_min - eps
            or w.real.max() > re_max + eps
            or w.imag.min() < im_min - eps
            or w.imag.max() > im_max + eps
        ):
            raise GridBoundsError(
                f"image of the source grid leaves the target box on coordinate {j}; "
                "enlarge the target domain to cover the map image"
            )
        coords.extend((np.clip(w.real, re_min, re_max), np.clip(w.imag, im_min, im_max)))

    axes = target.domain.axes()
    if target.domain.dim == 1:
        from scipy.interpolate import RectBivariateSpline

        spline = RectBivariateSpline(axes[0], axes[1], target.values, kx=3, ky=3, s=0)
        values = spline.ev(coords[0].ravel(), coords[1].ravel()).reshape(source.shape)
    else:
        from scipy.interpolate import RegularGridInterpolator

        interp = RegularGridInterpolator(tuple(axes), target.values, method="cubic")
        pts = np.stack([c.ravel() for c in coords], axis=-1)
        values = interp(pts).reshape(source.shape)
    return GridFunction(source, values)


@dataclass(frozen=True)
class BumpSpec:
    """Radial polynomial-smoothstep cutoff: 1 inside r_one, 0 outside r_zero.

    The quintic profile is C^2, which the Levi estimates need (two stable
    derivatives of the cutoff); the cubic profile is only C^1 and exists for
    comparison experiments.
    """

    center: tuple[complex, ...]
    r_one: float
    r_zero: float
    kind: str = "quintic"

    def __post_init__(self):
        if not 0 <= self.r_one < self.r_zero:
            raise ValidationError("need 0 <= r_one < r_zero")
        if self.kind not in ("quintic", "cubic"):
            raise ValidationError("bump kind must be quintic or cubic")
        object.__setattr__(self, "center", tuple(complex(c) for c in self.center))

    def __call__(self, *zs: np.ndarray) -> np.ndarray:
        if len(zs) != len(self.center):
            raise ValidationError("bump expects one array per coordinate")
        dist2 = np.zeros(np.broadcast(*zs).shape if len(zs) > 1 else np.shape(zs[0]))
        for z, c in zip(zs, self.center):
            dist2 = dist2 + np.abs(np.asarray(z) - c) ** 2
        d = np.sqrt(dist2)
        t = np.clip((d - self.r_one) / (self.r_zero - self.r_one), 0.0, 1.0)
        if self.kind == "quintic":
            s = t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
        else:
            s = t * t * (3.0 - 2.0 * t)
        return 1.0 - s

    def materialize(self, domain: GridDomain) -> GridFunction:
        return grid_function_from(domain, self)
