"""Complex Hessians by central differences, psh and pluriharmonicity checks.

The complex Hessian recombines real second derivatives:
d2/dz_j dz_k^bar = ((d_xj d_xk + d_yj d_yk) + i (d_xj d_yk - d_yj d_xk)) / 4.
Diagonal entries are a quarter of the coordinate Laplacian; the matrix is
Hermitian by construction of the symmetric stencils.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import GridBoundsError, ValidationError
from .grids import INTERIOR_MARGIN, GridDomain, GridFunction, Region


def hessian_entry_fields(f: GridFunction) -> tuple[np.ndarray, ...]:
    """Per-node Hessian entries, NaN on the 2-node margin; cached on the function.

    Dimension 1: (H,).  Dimension 2: (H11, H22, Re H12, Im H12).
    """
    cache = f.__dict__.get("_hessian_fields")
    if cache is None:
        if f.domain.dim == 1:
            cache = (_kernels.hessian_1d(f.values, f.domain.h),)
        else:
            cache = tuple(_kernels.hessian_2d(f.values, f.domain.h))
        object.__setattr__(f, "_hessian_fields", cache)
    return cache


def min_eigenvalue_field(f: GridFunction) -> np.ndarray:
    cache = f.__dict__.get("_mineig_field")
    if cache is None:
        fields = hessian_entry_fields(f)
        if f.domain.dim == 1:
            cache = fields[0]
        else:
            cache = _kernels.mineig_2d(*fields)
        object.__setattr__(f, "_mineig_field", cache)
    return cache


def max_abs_eigenvalue_field(f: GridFunction) -> np.ndarray:
    """Operator norm of the Hermitian Hessian per node."""
    fields = hessian_entry_fields(f)
    if f.domain.dim == 1:
        return np.abs(fields[0])
    h11, h22, h12r, h12i = fields
    mean = 0.5 * (h11 + h22)
    radius = np.sqrt(0.25 * (h11 - h22) ** 2 + h12r**2 + h12i**2)
    return np.maximum(np.abs(mean - radius), np.abs(mean + radius))


def complex_hessian(f: GridFunction, point: tuple[int, ...]) -> np.ndarray:
    """Hermitian N x N complex Hessian at a grid multi-index.

    The point must be at least two nodes from every boundary.
    """
    shape = f.domain.shape
    if len(point) != len(shape):
        raise ValidationError(f"point must be a grid multi-index of length {len(shape)}")
    for i, n in zip(point, shape):
        if not INTERIOR_MARGIN <= i < n - INTERIOR_MARGIN:
            raise GridBoundsError(f"point {point} within 2 nodes of the boundary")
    fields = hessian_entry_fields(f)
    if f.domain.dim == 1:
        return np.array([[fields[0][point]]], dtype=complex)
    h11, h22, h12r, h12i = (field[point] for field in fields)
    off = h12r + 1j * h12i
    return np.array([[h11, off], [np.conj(off), h22]], dtype=complex)


def holomorphic_gradient_fields(f: GridFunction) -> list[np.ndarray]:
    """d f / d z_j = (f_x - i f_y) / 2 per coordinate, NaN on a 1-node margin.

    For real-valued f the antiholomorphic gradient is the conjugate, so its
    norm equals this one's.
    """
    cache = f.__dict__.get("_grad_fields")
    if cache is not None:
        return cache
    h = f.domain.h
    out = []
    for j in range(f.domain.dim):
        ax_x, ax_y = 2 * j, 2 * j + 1
        fx = (np.roll(f.values, -1, axis=ax_x) - np.roll(f.values, 1, axis=ax_x)) / (2 * h)
        fy = (np.roll(f.values, -1, axis=ax_y) - np.roll(f.values, 1, axis=ax_y)) / (2 * h)
        g = 0.5 * (fx - 1j * fy)
        _kernels._mask_margin(g.real, 1)
        gi = g.imag
        _kernels._mask_margin(gi, 1)
        out.append(g.real + 1j * gi)
    object.__setattr__(f, "_grad_fields", out)
    return out


@dataclass(frozen=True)
class PshReport:
    ok: bool
    worst_index: Optional[tuple[int, ...]]
    worst_point: Optional[tuple[complex, ...]]
    worst_eigenvalue: Optional[float]
    n_samples: int
    threshold: float

    def __bool__(self) -> bool:
        return self.ok


def _sample_mask(domain: GridDomain, region: Optional[Region], extra_mask=None) -> np.ndarray:
    mask = domain.interior_mask()
    if region is not None:
        rmask = region.mask(domain)
        if not rmask.any():
            raise GridBoundsError("region contains no grid nodes")
        mask &= rmask
    if extra_mask is not None:
        mask &= extra_mask
    if not mask.any():
        raise GridBoundsError("region has no interior sample nodes")
    return mask


def strong_psh_report(
    f: GridFunction,
    region: Optional[Region] = None,
    margin: float = 0.0,
    extra_mask=None,
) -> PshReport:
    """Min Hessian eigenvalue >= margin at every sampled interior node."""
    mask = _sample_mask(f.domain, region, extra_mask)
    eig = min_eigenvalue_field(f)
    sampled = np.where(mask, eig, np.inf)
    flat = int(np.argmin(sampled))
    idx = np.unravel_index(flat, f.domain.shape)
    worst = float(sampled[idx])
    ok = bool(worst >= margin)
    return PshReport(ok, tuple(int(i) for i in idx), f.domain.point_of_index(idx), worst, int(mask.sum()), margin)


def is_strongly_psh(
    f: GridFunction, region: Optional[Region] = None, margin: float = 0.0
) -> PshReport:
    return strong_psh_report(f, region, margin)


def pluriharmonic_report(
    domain: GridDomain,
    values: np.ndarray,
    region: Optional[Region] = None,
    tol: float = 1e-6,
    extra_mask=None,
) -> PshReport:
    """All Hessian entries within tol of zero at every sampled node."""
    f = GridFunction(domain, values)
    mask = _sample_mask(domain, region, extra_mask)
    fields = hessian_entry_fields(f)
    worst_entry = np.zeros(domain.shape)
    for field in fields:
        worst_entry = np.maximum(worst_entry, np.abs(field))
    sampled = np.where(mask, worst_entry, -np.inf)
    flat = int(np.argmax(sampled))
    idx = np.unravel_index(flat, domain.shape)
    worst = float(sampled[idx])
    ok = bool(worst <= tol)
    return PshReport(ok, tuple(int(i) for i in idx), domain.point_of_index(idx), worst, int(mask.sum()), tol)


def is_pluriharmonic(f: GridFunction, region: Optional[Region] = None, tol: float = 1e-6) -> PshReport:
    return pluriharmonic_report(f.domain, f.values, region, tol)
