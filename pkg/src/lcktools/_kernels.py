"""Hot grid-sweep kernels: complex-Hessian stencils and 2x2 min-eigenvalues.

Each kernel has a numba @njit implementation and a pure-numpy fallback.  The
numpy path is selected by setting the environment variable
``LCKTOOLS_NO_NUMBA`` (or automatically when numba is unavailable).  Both
paths produce bitwise-identical results on the interior and NaN on the
2-node boundary margin; ``benchmarks/bench_kernels.py`` compares them.
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("LCKTOOLS_NO_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

if not _DISABLED:
    try:
        from numba import njit

        NUMBA_ACTIVE = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ACTIVE = False
else:
    NUMBA_ACTIVE = False

if not NUMBA_ACTIVE:
    def njit(*args, **kwargs):  # passthrough decorator
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


# -- complex dimension 1: values indexed [x, y] ------------------------------


def _hessian_1d_numpy(values: np.ndarray, h: float) -> np.ndarray:
    out = np.full(values.shape, np.nan)
    c = 1.0 / (4.0 * h * h)
    f = values
    out[2:-2, 2:-2] = (
        f[3:-1, 2:-2] + f[1:-3, 2:-2] + f[2:-2, 3:-1] + f[2:-2, 1:-3] - 4.0 * f[2:-2, 2:-2]
    ) * c
    return out


@njit(cache=True)
def _hessian_1d_numba(values: np.ndarray, h: float) -> np.ndarray:  # pragma: no cover - jitted
    nx, ny = values.shape
    out = np.full((nx, ny), np.nan)
    c = 1.0 / (4.0 * h * h)
    for i in range(2, nx - 2):
        for j in range(2, ny - 2):
            out[i, j] = (
                values[i + 1, j]
                + values[i - 1, j]
                + values[i, j + 1]
                + values[i, j - 1]
                - 4.0 * values[i, j]
            ) * c
    return out


# -- complex dimension 2: values indexed [x1, y1, x2, y2] ---------------------


def _second_diff_numpy(f: np.ndarray, axis: int) -> np.ndarray:
    plus = np.roll(f, -1, axis=axis)
    minus = np.roll(f, 1, axis=axis)
    return plus + minus - 2.0 * f


def _mixed_diff_numpy(f: np.ndarray, a: int, b: int) -> np.ndarray:
    pp = np.roll(np.roll(f, -1, axis=a), -1, axis=b)
    pm = np.roll(np.roll(f, -1, axis=a), 1, axis=b)
    mp = np.roll(np.roll(f, 1, axis=a), -1, axis=b)
    mm = np.roll(np.roll(f, 1, axis=a), 1, axis=b)
    return pp - pm - mp + mm


def _hessian_2d_numpy(values: np.ndarray, h: float):
    inv4h2 = 1.0 / (4.0 * h * h)
    invh2 = 1.0 / (h * h)
    h11 = (_second_diff_numpy(values, 0) + _second_diff_numpy(values, 1)) * invh2 * 0.25
    h22 = (_second_diff_numpy(values, 2) + _second_diff_numpy(values, 3)) * invh2 * 0.25
    h12r = (_mixed_diff_numpy(values, 0, 2) + _mixed_diff_numpy(values, 1, 3)) * inv4h2 * 0.25
    h12i = (_mixed_diff_numpy(values, 0, 3) - _mixed_diff_numpy(values, 1, 2)) * inv4h2 * 0.25
    for arr in (h11, h22, h12r, h12i):
        _mask_margin(arr)
    return h11, h22, h12r, h12i


def _mask_margin(arr: np.ndarray, margin: int = 2) -> None:
    for axis, n in enumerate(arr.shape):
        index = [slice(None)] * arr.ndim
        index[axis] = slice(0, margin)
        arr[tuple(index)] = np.nan
        index[axis] = slice(n - margin, n)
        arr[tuple(index)] = np.nan


@njit(cache=True)
def _hessian_2d_numba(values: np.ndarray, h: float):  # pragma: no cover - jitted
    n0, n1, n2, n3 = values.shape
    h11 = np.full((n0, n1, n2, n3), np.nan)
    h22 = np.full((n0, n1, n2, n3), np.nan)
    h12r = np.full((n0, n1, n2, n3), np.nan)
    h12i = np.full((n0, n1, n2, n3), np.nan)
    q = 0.25 / (h * h)
    q4 = 0.25 / (4.0 * h * h)
    for i in range(2, n0 - 2):
        for j in range(2, n1 - 2):
            for k in range(2, n2 - 2):
                for l in range(2, n3 - 2):
                    f0 = values[i, j, k, l]
                    h11[i, j, k, l] = (
                        values[i + 1, j, k, l]
                        + values[i - 1, j, k, l]
                        + values[i, j + 1, k, l]
                        + values[i, j - 1, k, l]
                        - 4.0 * f0
                    ) * q
                    h22[i, j, k, l] = (
                        values[i, j, k + 1, l]
                        + values[i, j, k - 1, l]
                        + values[i, j, k, l + 1]
                        + values[i, j, k, l - 1]
                        - 4.0 * f0
                    ) * q
                    d_x1x2 = (
                        values[i + 1, j, k + 1, l]
                        - values[i + 1, j, k - 1, l]
                        - values[i - 1, j, k + 1, l]
                        + values[i - 1, j, k - 1, l]
                    )
                    d_y1y2 = (
                        values[i, j + 1, k, l + 1]
                        - values[i, j + 1, k, l - 1]
                        - values[i, j - 1, k, l + 1]
                        + values[i, j - 1, k, l - 1]
                    )
                    d_x1y2 = (
                        values[i + 1, j, k, l + 1]
                        - values[i + 1, j, k, l - 1]
                        - values[i - 1, j, k, l + 1]
                        + values[i - 1, j, k, l - 1]
                    )
                    d_y1x2 = (
                        values[i, j + 1, k + 1, l]
                        - values[i, j + 1, k - 1, l]
                        - values[i, j - 1, k + 1, l]
                        + values[i, j - 1, k - 1, l]
                    )
                    h12r[i, j, k, l] = (d_x1x2 + d_y1y2) * q4
                    h12i[i, j, k, l] = (d_x1y2 - d_y1x2) * q4
    return h11, h22, h12r, h12i


def _mineig_2d_numpy(h11, h22, h12r, h12i):
    mean = 0.5 * (h11 + h22)
    radius = np.sqrt(0.25 * (h11 - h22) ** 2 + h12r**2 + h12i**2)
    return mean - radius


@njit(cache=True)
def _mineig_2d_numba(h11, h22, h12r, h12i):  # pragma: no cover - jitted
    flat11 = h11.ravel()
    flat22 = h22.ravel()
    flatr = h12r.ravel()
    flati = h12i.ravel()
    out = np.empty(flat11.shape[0])
    for i in range(flat11.shape[0]):
        mean = 0.5 * (flat11[i] + flat22[i])
        d = 0.5 * (flat11[i] - flat22[i])
        out[i] = mean - np.sqrt(d * d + flatr[i] * flatr[i] + flati[i] * flati[i])
    return out.reshape(h11.shape)


def hessian_1d(values: np.ndarray, h: float) -> np.ndarray:
    """Laplacian/4 field: the 1x1 complex Hessian; NaN on the margin."""
    if NUMBA_ACTIVE:
        return _hessian_1d_numba(values, h)
    return _hessian_1d_numpy(values, h)


def hessian_2d(values: np.ndarray, h: float):
    """(H11, H22, Re H12, Im H12) fields; NaN on the margin."""
    if NUMBA_ACTIVE:
        return _hessian_2d_numba(values, h)
    return _hessian_2d_numpy(values, h)


def mineig_2d(h11, h22, h12r, h12i) -> np.ndarray:
    if NUMBA_ACTIVE:
        return _mineig_2d_numba(h11, h22, h12r, h12i)
    return _mineig_2d_numpy(h11, h22, h12r, h12i)
