"""Continuous-time dynamics in the lifted (x, v) phase space.

Fields take a :class:`PhaseState` and return the pair ``(xdot, vdot)``.  The
reference integrator is classical fixed-step RK4; every continuous-time
statement in the test-suite is checked against it.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .objectives import Objective, SpectralBounds
from .riccati import scalar_are_roots

Array = np.ndarray
FieldFn = Callable[["PhaseState"], tuple[Array, Array]]


class IntegrationError(RuntimeError):
    """The integrated state stopped being finite."""

    def __init__(self, t: float, last: "PhaseState"):
        super().__init__(f"non-finite state at t={t:.6g} (last finite |x|={np.linalg.norm(last.x):.3g}, "
                         f"|v|={np.linalg.norm(last.v):.3g})")
        self.t = t
        self.last = last


@dataclass(frozen=True)
class PhaseState:
    x: Array
    v: Array
    t: float = 0.0

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        v = np.atleast_1d(np.asarray(self.v, dtype=float))
        if x.shape != v.shape:
            raise ValueError(f"x and v differ in shape: {x.shape} vs {v.shape}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise ValueError("PhaseState entries must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)

    @property
    def dim(self) -> int:
        return self.x.size


@dataclass
class Trajectory:
    times: Array
    xs: Array
    vs: Array
    objective_id: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.xs = np.atleast_2d(np.asarray(self.xs, dtype=float))
        self.vs = np.atleast_2d(np.asarray(self.vs, dtype=float))
        if len(self.times) > 1:
            dt = np.diff(self.times)
            if np.any(dt <= 0):
                raise ValueError("trajectory times must increase strictly")
            if np.max(np.abs(dt - dt[0])) > 1e-12 * max(1.0, abs(self.times[-1])):
                raise ValueError("trajectory step is not uniform")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def samples(self) -> list[PhaseState]:
        return [PhaseState(x, v, t) for t, x, v in zip(self.times, self.xs, self.vs)]

    @property
    def final(self) -> PhaseState:
        return PhaseState(self.xs[-1], self.vs[-1], self.times[-1])

    def energy(self, obj: Objective) -> Array:
        """V = f - f* + |v|^2 / 2 at every sample."""
        if obj.min_value is None:
            raise ValueError("energy needs a known minimum value")
        f = np.array([obj(x) for x in self.xs])
        return f - obj.min_value + 0.5 * np.sum(self.vs**2, axis=1)

    def to_csv(self, obj: Optional[Objective] = None) -> str:
        """CSV text with columns t, x0.., v0.., V (V left empty without obj)."""
        n = self.xs.shape[1]
        V = self.energy(obj) if obj is not None and obj.min_value is not None else None
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"x{i}" for i in range(n)] + [f"v{i}" for i in range(n)] + ["V"])
        for k in range(len(self.times)):
            row = [self.times[k], *self.xs[k], *self.vs[k]]
            w.writerow([f"{val:.17g}" for val in row] + ([f"{V[k]:.17g}"] if V is not None else [""]))
        return buf.getvalue()


# Fields --------------------------------------------------------------------

def gradient_flow_field(obj: Objective, state) -> Array:
    """xdot = -(1/L) grad f(x); accepts a PhaseState or a bare position."""
    x = state.x if isinstance(state, PhaseState) else np.asarray(state, dtype=float)
    return -obj.grad(x) / obj.L


def lifted_controls(obj: Objective, x1, x2, mu: float) -> tuple[Array, Array]:
    """Virtual controls of the lifted system x1' = x2, x2' = u_in + u_a.

    u_in cancels the drift of z = x2 + grad f(x1)/L and u_a contracts it, so
    z' = -mu z holds exactly along the controlled flow.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    u_in = -(obj.hess(x1) @ x2) / obj.L
    u_a = -mu * (x2 + obj.grad(x1) / obj.L)
    return u_in, u_a


def lifted_field(obj: Objective, mu: float) -> FieldFn:
    def f(state: PhaseState):
        u_in, u_a = lifted_controls(obj, state.x, state.v, mu)
        return state.v, u_in + u_a
    return f


def adapted_coordinate(obj: Objective, x1, x2) -> Array:
    """z = x2 + grad f(x1)/L, zero exactly on the manifold M0."""
    return np.asarray(x2, dtype=float) + obj.grad(np.asarray(x1, dtype=float)) / obj.L


def nag_field(obj: Objective, state: PhaseState, damping: float) -> tuple[Array, Array]:
    """(xdot, vdot) = (v, -damping v - grad f(x))."""
    if damping < 0:
        raise ValueError("damping must be nonnegative")
    return state.v, -damping * state.v - obj.grad(state.x)


def nag_system(obj: Objective, damping: Optional[float] = None) -> FieldFn:
    """Closure over :func:`nag_field`; damping defaults to 2 sqrt(mu)."""
    d = 2.0 * np.sqrt(obj.mu) if damping is None else damping
    return lambda state: nag_field(obj, state, d)


def fast_slow_field(obj: Objective, state: PhaseState, epsilon: float) -> tuple[Array, Array]:
    """Derivatives in tau of eps x' = v, eps v' = -v - (eps/sqrt(mu)) grad f(x)."""
    if not (0.0 < epsilon <= 1.0):
        raise ValueError("epsilon must lie in (0, 1]")
    if obj.mu <= 0:
        raise ValueError("fast-slow form needs mu > 0")
    g = obj.grad(state.x)
    return state.v / epsilon, (-state.v - (epsilon / np.sqrt(obj.mu)) * g) / epsilon


@dataclass(frozen=True)
class FastSlowConjugacy:
    """Maps between the fast-slow form (tau, v_fs, f) and the NAG ODE (t, v, gamma f).

    t = time_scale * tau, v = velocity_scale * v_fs, and the NAG objective is
    gradient_scale * f with damping 2 sqrt(mu).
    """

    mu: float
    epsilon: float

    @property
    def time_scale(self) -> float:
        return 1.0 / (2.0 * np.sqrt(self.mu) * self.epsilon)

    @property
    def velocity_scale(self) -> float:
        return 2.0 * np.sqrt(self.mu)

    @property
    def gradient_scale(self) -> float:
        return 4.0 * np.sqrt(self.mu) * self.epsilon

    @property
    def damping(self) -> float:
        return 2.0 * np.sqrt(self.mu)

    def nag_rates_from_fast_slow(self, dx_dtau: Array, dvfs_dtau: Array) -> tuple[Array, Array]:
        c = self.time_scale
        return dx_dtau / c, self.velocity_scale * dvfs_dtau / c


def scaled_objective(obj: Objective, scale: float) -> Objective:
    """The objective scale * f with consistently scaled constants."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    return Objective(
        dim=obj.dim,
        value_fn=lambda x: scale * obj.value_fn(x),
        grad_fn=lambda x: scale * obj.grad_fn(x),
        hess_fn=lambda x: scale * obj.hess_fn(x),
        mu=scale * obj.mu,
        L=scale * obj.L,
        minimizer=obj.minimizer,
        min_value=None if obj.min_value is None else scale * obj.min_value,
        name=f"{scale:g}*{obj.name}",
        quadratic_matrix=None if obj.quadratic_matrix is None else scale * obj.quadratic_matrix,
    )


def canonical_triple_coefficients(mu: float, L: float) -> tuple[float, float, float]:
    """(alpha0, alpha1, alpha2) = (w^2, w(w + 2), 2w + 1) with w = sqrt(mu L)."""
    w = np.sqrt(mu * L)
    return w * w, w * (w + 2.0), 2.0 * w + 1.0


def triple_momentum_field(obj: Objective, x, v, a, coefficients) -> tuple[Array, Array, Array]:
    """(xdot, vdot, adot) = (v, a, -a2 a - a1 v - a0 Q x) for a quadratic with Hessian Q."""
    if not obj.is_quadratic:
        raise ValueError("triple-momentum dynamics need a quadratic objective (constant Q)")
    a0, a1, a2 = coefficients
    Q = obj.quadratic_matrix
    x, v, a = (np.asarray(u, dtype=float) for u in (x, v, a))
    return v, a, -a2 * a - a1 * v - a0 * (Q @ x)


def triple_momentum_modes(sigma: float, coefficients) -> Array:
    """Roots of s^3 + a2 s^2 + a1 s + a0 sigma, the exponents of one Hessian mode."""
    a0, a1, a2 = coefficients
    return np.roots([1.0, a2, a1, a0 * sigma])


# Integration ---------------------------------------------------------------

def rk4(fun: Callable[[float, Array], Array], y0, step: float, n_steps: int,
        t0: float = 0.0, sample_every: int = 1) -> tuple[Array, Array]:
    """Classical RK4 on a flat state vector; returns (times, samples).

    Raises FloatingPointError on a non-finite state, carrying the last good index.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    y = np.array(y0, dtype=float)
    h = step
    n_out = n_steps // sample_every + 1
    out = np.empty((n_out, y.size))
    times = t0 + np.arange(n_out) * (h * sample_every)
    out[0] = y
    j = 1
    for k in range(n_steps):
        t = t0 + k * h
        k1 = fun(t, y)
        k2 = fun(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = fun(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = fun(t + h, y + h * k3)
        y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y_new)):
            err = FloatingPointError(f"non-finite state after step {k + 1}")
            err.t = t + h
            err.last = y
            raise err
        y = y_new
        if (k + 1) % sample_every == 0:
            out[j] = y
            j += 1
    return times[:j], out[:j]


def integrate(field_fn: FieldFn, initial: PhaseState, step: float, horizon: float,
              sample_every: int = 1, objective_id: str = "", params: Optional[dict] = None) -> Trajectory:
    """Integrate a phase-space field with fixed-step RK4 up to ``horizon``."""
    if step <= 0:
        raise ValueError("step must be positive")
    if horizon < step:
        raise ValueError("horizon must cover at least one step")
    n = initial.dim
    n_steps = int(round(horizon / step))

    def fun(t, y):
        dx, dv = field_fn(_unchecked_state(y[:n], y[n:], t))
        return np.concatenate([np.asarray(dx, dtype=float), np.asarray(dv, dtype=float)])

    y0 = np.concatenate([initial.x, initial.v])
    try:
        times, ys = rk4(fun, y0, step, n_steps, t0=initial.t, sample_every=sample_every)
    except FloatingPointError as exc:
        last = exc.last
        raise IntegrationError(exc.t, PhaseState(last[:n], last[n:], exc.t - step)) from None
    p = {"step": step}
    p.update(params or {})
    return Trajectory(times, ys[:, :n], ys[:, n:], objective_id=objective_id, params=p)


def _unchecked_state(x, v, t) -> PhaseState:
    # hot path: skip validation, the integrator checks finiteness per step
    s = object.__new__(PhaseState)
    object.__setattr__(s, "x", x)
    object.__setattr__(s, "v", v)
    object.__setattr__(s, "t", t)
    return s


def integrate_triple(obj: Objective, x0, v0, a0, coefficients, step: float, horizon: float,
                     sample_every: int = 1) -> tuple[Array, Array, Array, Array]:
    """RK4 for the third-order system; returns (times, xs, vs, as)."""
    n = obj.dim
    if not obj.is_quadratic:
        raise ValueError("triple-momentum dynamics need a quadratic objective (constant Q)")

    def fun(t, y):
        return np.concatenate(triple_momentum_field(obj, y[:n], y[n:2 * n], y[2 * n:], coefficients))

    y0 = np.concatenate([np.asarray(u, dtype=float) for u in (x0, v0, a0)])
    times, ys = rk4(fun, y0, step, int(round(horizon / step)), sample_every=sample_every)
    return times, ys[:, :n], ys[:, n:2 * n], ys[:, 2 * n:]


# Linearisation -------------------------------------------------------------

def linearized_nag_matrix(H, damping: float) -> Array:
    """Companion matrix [[0, I], [-H, -damping I]] of the linearised NAG ODE."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    n = H.shape[0]
    return np.block([[np.zeros((n, n)), np.eye(n)], [-H, -damping * np.eye(n)]])


def linearized_spectrum(H, damping: float) -> Array:
    """Eigenvalues of the companion matrix, computed mode by mode.

    Each Hessian mode sigma contributes the two roots of s^2 + damping s + sigma,
    with the same critical snapping as the scalar Riccati roots.  Dense
    eigensolvers resolve the double root only to about sqrt(machine eps).
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    sig = np.linalg.eigvalsh(0.5 * (H + H.T))
    out = []
    for s in sig:
        r = scalar_are_roots(damping, s)
        out.extend([r.p_plus, r.p_minus])
    return np.array(out)


# Diagnostics ---------------------------------------------------------------

@dataclass
class LyapunovSeries:
    times: Array
    V: Array
    Vdot: Array

    def rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.times.tolist(), self.V.tolist(), self.Vdot.tolist()))

    @property
    def max_increase(self) -> float:
        return float(np.max(np.diff(self.V))) if len(self.V) > 1 else 0.0


def lyapunov_series(traj: Trajectory, obj: Objective) -> LyapunovSeries:
    """V = f - f* + |v|^2/2 with a second-order finite-difference Vdot.

    Vdot uses central differences inside and one-sided second-order formulas
    at the ends (np.gradient).
    """
    V = traj.energy(obj)
    if len(V) >= 3:
        Vdot = np.gradient(V, traj.step, edge_order=2)
    else:
        Vdot = np.full_like(V, np.nan)
    return LyapunovSeries(traj.times.copy(), V, Vdot)


def upper_envelope(values: Array) -> Array:
    """Smallest nonincreasing sequence dominating ``values`` (running max from the right)."""
    return np.maximum.accumulate(np.asarray(values)[::-1])[::-1]


@dataclass
class FenichelReport:
    envelope_rate: float
    target_rate: float
    rate_rel_error: float
    confined: bool
    max_energy_increase: float
    gamma_perp: float
    gamma_F: float
    slow_proximity: float
    n_fit_samples: int

    def as_dict(self) -> dict:
        return {k: (v.item() if isinstance(v, np.generic) else v) for k, v in asdict(self).items()}


def fenichel_report(traj: Trajectory, bounds: SpectralBounds, obj: Optional[Objective] = None,
                    window: tuple[float, float] = (5.0, 30.0)) -> FenichelReport:
    """Persistence diagnostics for a NAG trajectory at damping 2 sqrt(mu).

    The decay rate of |v| is fitted on the log of its monotone upper envelope
    over t in [window[0], window[1]] / sqrt(mu).  The envelope, unlike local
    maxima, is well defined for critically damped modes that do not oscillate.
    """
    sq = np.sqrt(bounds.mu)
    t = traj.times
    vnorm = np.linalg.norm(traj.vs, axis=1)
    mask = (t >= window[0] / sq) & (t <= window[1] / sq)
    env = upper_envelope(vnorm)
    sel = mask & (env > 0)
    if np.count_nonzero(sel) < 10:
        raise ValueError("fewer than 10 samples past the transient; extend the horizon")
    slope = np.polyfit(t[sel], np.log(env[sel]), 1)[0]
    rate = -float(slope)

    if obj is not None:
        # monotonicity only involves differences, so an unknown f* is harmless
        f = np.array([obj(x) for x in traj.xs])
        V = f + 0.5 * np.sum(traj.vs**2, axis=1)
        max_inc = float(np.max(np.diff(V))) if len(V) > 1 else 0.0
        confined = bool(np.all(V <= V[0]))
    else:
        max_inc = float("nan")
        confined = False

    eps = bounds.epsilon
    late = t >= window[0] / sq
    xnorm = np.linalg.norm(traj.xs, axis=1)
    prox = float(np.max(vnorm[late] / (eps * (1.0 + xnorm[late])))) if np.any(late) else float("nan")
    return FenichelReport(
        envelope_rate=rate,
        target_rate=float(sq),
        rate_rel_error=abs(rate - sq) / sq,
        confined=confined,
        max_energy_increase=max_inc,
        gamma_perp=float(sq),
        gamma_F=float(sq * (1.0 - eps)),
        slow_proximity=prox,
        n_fit_samples=int(np.count_nonzero(sel)),
    )
