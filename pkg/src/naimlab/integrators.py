"""Discrete schemes: Cayley multiplier, Lie-Trotter splittings, Nesterov and Heavy-Ball.

The damped ODE x' = v, v' = -2a v - grad f(x) splits into the exact
dissipative subflow phi_A and the gradient kick phi_B.  Composing them as
phi_B o phi_A (kick evaluated after the drift) gives the Nesterov ordering,
phi_A o phi_B gives Heavy-Ball.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .flows import PhaseState
from .objectives import Objective

Array = np.ndarray

ORDERINGS = ("NAG", "HB")


@dataclass
class IterateLog:
    scheme: str
    ks: Array
    xs: Array
    aux: Array
    f_gap: Array
    residual: Optional[Array] = None
    params: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        finite = self.f_gap[np.isfinite(self.f_gap)]
        if finite.size and finite.min() < -1e-12 * max(1.0, float(np.max(np.abs(finite)))):
            raise ValueError("negative objective gap: min_value is wrong")

    def __len__(self) -> int:
        return len(self.ks)

    @property
    def iterates(self) -> list[tuple[int, Array, Array, float]]:
        return [(int(k), x, y, float(g)) for k, x, y, g in zip(self.ks, self.xs, self.aux, self.f_gap)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "f_gap", "residual"])
        res = self.residual if self.residual is not None else np.full(len(self.ks), np.nan)
        for k, g, r in zip(self.ks, self.f_gap, res):
            w.writerow([int(k), f"{g:.17g}", "" if np.isnan(r) else f"{r:.17g}"])
        return buf.getvalue()

    def summary(self) -> dict:
        out = {
            "scheme": self.scheme,
            "iterations": int(self.ks[-1]) if len(self.ks) else 0,
            "params": {k: float(v) for k, v in self.params.items()},
            "final_gap": float(self.f_gap[-1]),
            "flags": self.flags,
        }
        if self.residual is not None:
            out["final_residual"] = float(self.residual[-1])
        return out

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


@dataclass(frozen=True)
class SplitStepConfig:
    a: float
    h: float
    ordering: str = "NAG"

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("half-damping a must be nonnegative")
        if self.h <= 0:
            raise ValueError("step h must be positive")
        if self.ordering not in ORDERINGS:
            raise ValueError(f"ordering must be one of {ORDERINGS}, got {self.ordering!r}")

    @property
    def beta(self) -> float:
        """Velocity multiplier exp(-2 a h) of the exact dissipative subflow."""
        return float(np.exp(-2.0 * self.a * self.h))


# Cayley --------------------------------------------------------------------

def cayley_multiplier(q: float, h: float) -> float:
    """(1 - qh) / (1 + qh), the Pade(1,1) approximation of exp(-2qh)."""
    qh = q * h
    if 1.0 + qh == 0.0:
        raise ValueError("Cayley multiplier has a pole at qh = -1")
    return (1.0 - qh) / (1.0 + qh)


def pade_errors(q_values) -> Array:
    q = np.asarray(q_values, dtype=float)
    return np.abs((1.0 - q) / (1.0 + q) - np.exp(-2.0 * q))


def pade_error_order(q_values) -> float:
    """Least-squares exponent p in |beta(q) - exp(-2q)| ~ C q^p."""
    q = np.asarray(q_values, dtype=float)
    if q.size < 4:
        raise ValueError("need at least 4 q values")
    if np.any(q <= 0) or np.any(q > 0.5):
        raise ValueError("q values must lie in (0, 0.5]")
    if np.unique(q).size < 2:
        raise ValueError("degenerate fit: q values coincide")
    err = pade_errors(q)
    if np.any(err <= 0):
        raise ValueError("degenerate fit: zero error")
    return float(np.polyfit(np.log(q), np.log(err), 1)[0])


def cayley_convex_coefficient(k: int) -> tuple[float, float]:
    """Momentum ((k-1)/(k+1), (k-1)/(k+2)): Cayley stage and its index-shifted form."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return (k - 1) / (k + 1), (k - 1) / (k + 2)


# Splitting -----------------------------------------------------------------

def dissipative_subflow(state: PhaseState, cfg: SplitStepConfig) -> PhaseState:
    """Exact flow of x' = v, v' = -2a v over time h."""
    a, h = cfg.a, cfg.h
    if a == 0.0:
        return PhaseState(state.x + h * state.v, state.v, state.t + h)
    z = 2.0 * a * h
    decay = np.exp(-z)
    if z < 1e-8:
        # series of (1 - e^-z)/z; expm1 loses bits once z is subnormal
        drift = h * (1.0 - z / 2.0 + z * z / 6.0)
    else:
        drift = -np.expm1(-z) / (2.0 * a)
    return PhaseState(state.x + drift * state.v, decay * state.v, state.t + h)


def gradient_kick(state: PhaseState, obj: Objective, h: float) -> PhaseState:
    """v -> v - h grad f(x) with x frozen."""
    return PhaseState(state.x, state.v - h * obj.grad(state.x), state.t)


def fiber_residual(state: PhaseState, obj: Objective, a: float) -> float:
    """|v + grad f(x) / (2a)|, the distance from the discrete slow fiber."""
    if a <= 0:
        raise ValueError("fiber residual needs a > 0")
    return float(np.linalg.norm(state.v + obj.grad(state.x) / (2.0 * a)))


def on_slow_fiber(obj: Objective, x, a: float, t: float = 0.0) -> PhaseState:
    """State (x, -grad f(x)/(2a)) with zero fiber residual."""
    x = np.asarray(x, dtype=float)
    return PhaseState(x, -obj.grad(x) / (2.0 * a), t)


def lie_trotter_step(state: PhaseState, obj: Objective, cfg: SplitStepConfig) -> tuple[PhaseState, float]:
    """One first-order splitting step and the fiber residual of the result.

    The residual is only defined for a > 0; with a = 0 it is reported as nan.
    """
    if cfg.ordering == "NAG":
        new = gradient_kick(dissipative_subflow(state, cfg), obj, cfg.h)
    else:
        new = dissipative_subflow(gradient_kick(state, obj, cfg.h), cfg)
    res = fiber_residual(new, obj, cfg.a) if cfg.a > 0 else float("nan")
    return new, res


def _gap(obj: Objective, x) -> float:
    return obj.gap(x) if obj.min_value is not None else float("nan")


def split_scheme(obj: Objective, x0, K: int, ordering: str = "NAG", a: Optional[float] = None,
                 h: Optional[float] = None, v0=None) -> IterateLog:
    """Iterate a Lie-Trotter composition K times.

    Defaults: a = sqrt(mu), h = 1/sqrt(L) (so a h = sqrt(mu/L)), and a start on
    the slow fiber v0 = -grad f(x0)/(2a).
    """
    a = np.sqrt(obj.mu) if a is None else float(a)
    h = 1.0 / np.sqrt(obj.L) if h is None else float(h)
    cfg = SplitStepConfig(a, h, ordering)
    x0 = np.asarray(x0, dtype=float)
    if v0 is None:
        state = on_slow_fiber(obj, x0, a) if a > 0 else PhaseState(x0, np.zeros_like(x0))
    else:
        state = PhaseState(x0, v0)
    xs, vs, gaps, res = [state.x], [state.v], [_gap(obj, state.x)], [
        fiber_residual(state, obj, a) if a > 0 else np.nan]
    for _ in range(K):
        state, r = lie_trotter_step(state, obj, cfg)
        xs.append(state.x)
        vs.append(state.v)
        gaps.append(_gap(obj, state.x))
        res.append(r)
    return IterateLog(
        scheme=f"split-{ordering}",
        ks=np.arange(K + 1),
        xs=np.array(xs),
        aux=np.array(vs),
        f_gap=np.array(gaps),
        residual=np.array(res),
        params={"a": a, "h": h, "mu": obj.mu, "L": obj.L, "beta": cfg.beta},
    )


def heavy_ball(obj: Objective, x0, K: int, a: Optional[float] = None, h: Optional[float] = None,
               v0=None) -> IterateLog:
    """Heavy-Ball ordering phi_A o phi_B with the Nesterov-ordering conventions."""
    if obj.mu <= 0:
        raise ValueError("heavy_ball needs mu > 0")
    return split_scheme(obj, x0, K, "HB", a=a, h=h, v0=v0)


# Two-stage Nesterov --------------------------------------------------------

def strongly_convex_beta(mu: float, L: float) -> float:
    """Cayley momentum (1 - sqrt(mu/L)) / (1 + sqrt(mu/L))."""
    return cayley_multiplier(np.sqrt(mu / L), 1.0)


def nesterov_strongly_convex(obj: Objective, x0, K: int) -> IterateLog:
    """x+ = y - grad f(y)/L, y+ = x+ + beta (x+ - x), starting from y0 = x0."""
    if obj.mu <= 0:
        raise ValueError("nesterov_strongly_convex needs mu > 0; use nesterov_convex")
    beta = strongly_convex_beta(obj.mu, obj.L)
    x = np.asarray(x0, dtype=float).copy()
    y = x.copy()
    xs, ys, gaps = [x], [y], [_gap(obj, x)]
    for _ in range(K):
        x_new = y - obj.grad(y) / obj.L
        y = x_new + beta * (x_new - x)
        x = x_new
        xs.append(x)
        ys.append(y)
        gaps.append(_gap(obj, x))
    return IterateLog(
        scheme="nesterov-sc",
        ks=np.arange(K + 1),
        xs=np.array(xs),
        aux=np.array(ys),
        f_gap=np.array(gaps),
        params={"beta": beta, "mu": obj.mu, "L": obj.L, "h": 1.0},
    )


def nesterov_convex(obj: Objective, x0, h: float, K: int) -> IterateLog:
    """x_{k+1} = y_k - h^2 grad f(y_k), y_{k+1} = x_{k+1} + (k-1)/(k+2) (x_{k+1} - x_k).

    Indices start at k = 1 with y_1 = x_1 = x0; the log holds k = 1..K+1.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    if h * h > (1.0 + 1e-12) / obj.L:
        raise ValueError(f"step violates h^2 <= 1/L (h^2={h * h:.6g}, 1/L={1.0 / obj.L:.6g})")
    x = np.asarray(x0, dtype=float).copy()
    y = x.copy()
    xs, ys, gaps = [x], [y], [_gap(obj, x)]
    for k in range(1, K + 1):
        x_new = y - h * h * obj.grad(y)
        y = x_new + (k - 1) / (k + 2) * (x_new - x)
        x = x_new
        xs.append(x)
        ys.append(y)
        gaps.append(_gap(obj, x))
    return IterateLog(
        scheme="nesterov-convex",
        ks=np.arange(1, K + 2),
        xs=np.array(xs),
        aux=np.array(ys),
        f_gap=np.array(gaps),
        params={"h": h, "mu": obj.mu, "L": obj.L},
    )


@dataclass
class BoundCheck:
    holds: bool
    max_ratio: float
    first_violation: Optional[int]


def check_geometric_bound(log: IterateLog, factor: float, tol: float = 1.05, k_max: Optional[int] = None,
                          floor: float = 0.0) -> BoundCheck:
    """Test f_gap[k] <= tol * factor^k * f_gap[0] for k <= k_max.

    Gaps below ``floor`` (rounding level) are treated as satisfied.
    """
    ks = log.ks - log.ks[0]
    gaps = log.f_gap
    sel = ks <= (k_max if k_max is not None else ks[-1])
    ks, gaps = ks[sel], gaps[sel]
    bound = gaps[0] * factor ** ks.astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(gaps > floor, gaps / bound, 0.0)
    ratio = np.nan_to_num(ratio, nan=0.0, posinf=np.inf)
    bad = np.nonzero(ratio > tol)[0]
    return BoundCheck(
        holds=bad.size == 0,
        max_ratio=float(ratio.max()),
        first_violation=int(ks[bad[0]]) if bad.size else None,
    )
