"""Schwarzian derivatives on sampled paths and projective-flatness checks.

For u'' + Q u = 0 with independent solutions u1, u2 the ratio w = u1/u2
satisfies Sch[w] = 2Q.  The convex damping ODE x'' + (c/t) x' + w^2 x = 0 has
normal form Q = w^2 + c(2 - c)/(4 t^2), so with w = 0 the ratio is a Moebius
map exactly when c = 0 or c = 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .flows import rk4

Array = np.ndarray

HALF_WIDTH = 3
FLAT_TOL = 1e-5


class NonInvertibleError(ValueError):
    """w' vanishes (to 1e-8) where a Schwarzian was requested."""


@dataclass(frozen=True)
class ScalarPath:
    times: Array
    values: Array

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        w = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != w.shape:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if t.size >= 2:
            dt = np.diff(t)
            if np.any(dt <= 0):
                raise ValueError("times must increase")
            if np.max(np.abs(dt - dt[0])) > 1e-9 * dt[0]:
                raise ValueError("grid must be uniform")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", w)

    @classmethod
    def sample(cls, fn: Callable[[Array], Array], start: float, stop: float, step: float) -> "ScalarPath":
        n = int(round((stop - start) / step)) + 1
        t = start + step * np.arange(n)
        return cls(t, fn(t))

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0])

    def index_of(self, t: float) -> int:
        return int(round((t - self.times[0]) / self.step))


@lru_cache(maxsize=None)
def central_weights(order: int, half_width: int = HALF_WIDTH) -> Array:
    """Weights of the central stencil on offsets -m..m for the given derivative.

    Solves the Vandermonde moment conditions sum_j w_j j^p = p! [p == order].
    """
    offsets = np.arange(-half_width, half_width + 1, dtype=float)
    n = offsets.size
    V = np.vander(offsets, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    w = np.linalg.solve(V, rhs)
    w.setflags(write=False)
    return w


def _stencil_derivatives(win: Array, h: float) -> tuple[Array, Array, Array]:
    # rows of `win` are 7-point neighbourhoods
    return (win @ central_weights(1) / h,
            win @ central_weights(2) / h**2,
            win @ central_weights(3) / h**3)


def _derivatives(values: Array, h: float) -> tuple[Array, Array, Array]:
    win = np.lib.stride_tricks.sliding_window_view(values, 2 * HALF_WIDTH + 1)
    return _stencil_derivatives(win, h)


def _sch(d1, d2, d3):
    r = d2 / d1
    return d3 / d1 - 1.5 * r * r


def schwarzian(path: ScalarPath, t_index: int) -> float:
    """Sch[w] = w'''/w' - 3/2 (w''/w')^2 at one grid point (7-point stencils)."""
    m = HALF_WIDTH
    if t_index < m or t_index > path.values.size - 1 - m:
        raise IndexError(f"index {t_index} needs {m} grid points on both sides")
    seg = path.values[t_index - m: t_index + m + 1]
    d1, d2, d3 = (float(a[0]) for a in _derivatives(seg, path.step))
    if abs(d1) <= 1e-8:
        raise NonInvertibleError(f"|w'| = {abs(d1):.3g} at t = {path.times[t_index]:.6g}")
    return float(_sch(d1, d2, d3))


def schwarzian_series(path: ScalarPath) -> tuple[Array, Array]:
    """Schwarzian at every interior point; returns (times, values)."""
    if path.values.size < 2 * HALF_WIDTH + 1:
        raise ValueError("path too short for a 7-point stencil")
    d1, d2, d3 = _derivatives(path.values, path.step)
    if np.any(np.abs(d1) <= 1e-8):
        raise NonInvertibleError("w' vanishes on the path")
    return path.times[HALF_WIDTH:-HALF_WIDTH], _sch(d1, d2, d3)


def solve_normal_form(Q: Callable[[float], float], t0: float, window: float, step: float = 1e-3
                      ) -> tuple[Array, Array, Array]:
    """Solutions of u'' + Q u = 0 on [t0, t0 + window] with unit Wronskian.

    u1(t0) = 1, u1'(t0) = 0 and u2(t0) = 0, u2'(t0) = 1.
    """
    if window <= 0:
        raise ValueError("window must be positive")

    def fun(t, y):
        q = Q(t)
        return np.array([y[1], -q * y[0], y[3], -q * y[2]])

    n = int(round(window / step))
    times, ys = rk4(fun, [1.0, 0.0, 0.0, 1.0], step, n, t0=t0)
    return times, ys[:, 0], ys[:, 2]


def ratio_schwarzian(Q: Callable[[float], float], t0: float, window: float, step: float = 1e-3
                     ) -> tuple[Array, Array]:
    """Sch of the solution ratio at every interior grid point.

    Around each point the ratio is formed with whichever solution stays larger
    on the stencil as denominator; Sch[1/w] = Sch[w] makes the choice harmless
    and removes the zeros of u2 from the picture.
    """
    times, u1, u2 = solve_normal_form(Q, t0, window, step)
    m = HALF_WIDTH
    w1 = np.lib.stride_tricks.sliding_window_view(u1, 2 * m + 1)
    w2 = np.lib.stride_tricks.sliding_window_view(u2, 2 * m + 1)
    use_u2 = np.min(np.abs(w2), axis=1) >= np.min(np.abs(w1), axis=1)
    num = np.where(use_u2[:, None], w1, w2)
    den = np.where(use_u2[:, None], w2, w1)
    d1, d2, d3 = _stencil_derivatives(num / den, step)
    return times[m:-m], _sch(d1, d2, d3)


def ratio_schwarzian_check(Q: Callable[[float], float], t0: float, window: float, step: float = 1e-3) -> float:
    """max |Sch[u1/u2] - 2Q| over the interior of [t0, t0 + window]."""
    t, s = ratio_schwarzian(Q, t0, window, step)
    target = 2.0 * np.array([Q(tt) for tt in t])
    return float(np.max(np.abs(s - target)))


def convex_normal_form_Q(c: float, omega: float, t: float) -> float:
    """Q(t) = omega^2 + c(2 - c)/(4 t^2)."""
    if t <= 0:
        raise ValueError("normal form is defined for t > 0")
    return omega**2 + c * (2.0 - c) / (4.0 * t * t)


def intrinsic_schwarzian(c: float, omega: float = 0.0, t_eval: float = 2.0,
                         t0: float = 1.0, window: float = 2.0, step: float = 1e-3) -> float:
    """Signed numerical Sch of the solution ratio of the convex normal form at t_eval."""
    t, s = ratio_schwarzian(lambda tt: convex_normal_form_Q(c, omega, tt), t0, window, step)
    return float(s[int(np.argmin(np.abs(t - t_eval)))])


@dataclass(frozen=True)
class FlatnessPoint:
    c: float
    magnitude: float
    is_flat: bool


def flatness_scan(c_grid: Sequence[float], omega: float = 0.0, flat_tol: float = FLAT_TOL
                  ) -> list[FlatnessPoint]:
    """|Sch| of the convex normal-form ratio at t = 2 (window [1, 3]) for each c."""
    c_grid = list(c_grid)
    if not c_grid:
        raise ValueError("c_grid is empty")
    out = []
    for c in c_grid:
        mag = abs(intrinsic_schwarzian(c, omega))
        out.append(FlatnessPoint(float(c), mag, mag <= flat_tol))
    return out


def bisect_flat_root(lo: float, hi: float, omega: float = 0.0, tol: float = 1e-4) -> float:
    """Bisection on the signed Schwarzian; [lo, hi] must bracket a sign change."""
    f_lo = intrinsic_schwarzian(lo, omega)
    f_hi = intrinsic_schwarzian(hi, omega)
    if f_lo * f_hi > 0:
        raise ValueError(f"[{lo}, {hi}] does not bracket a sign change")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = intrinsic_schwarzian(mid, omega)
        if f_mid == 0.0:
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def flat_dampings(c_grid: Sequence[float], omega: float = 0.0, flat_tol: float = FLAT_TOL,
                  tol: float = 1e-4) -> list[float]:
    """Flat values of c: grid points within flat_tol plus bisected sign changes."""
    c_grid = sorted(float(c) for c in c_grid)
    vals = [intrinsic_schwarzian(c, omega) for c in c_grid]
    roots = [c for c, v in zip(c_grid, vals) if abs(v) <= flat_tol]
    for (c0, v0), (c1, v1) in zip(zip(c_grid, vals), zip(c_grid[1:], vals[1:])):
        if abs(v0) > flat_tol and abs(v1) > flat_tol and v0 * v1 < 0:
            roots.append(bisect_flat_root(c0, c1, omega, tol))
    return sorted(roots)
