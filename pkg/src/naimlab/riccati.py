"""Riccati machinery for the slope of invariant graphs v = P x.

The tangency condition of the graph under the damped flow
``x' = v, v' = -lam v - grad f(x)`` is the differential Riccati equation

    P' + P^2 + lam P + H = 0,

whose equilibria solve the algebraic equation P^2 + lam P + H = 0.  Modes of
H with lam^2 < 4 sigma have complex roots, so slopes are assembled as complex
matrices in the Hessian eigenbasis.

Branch convention: the "stable" root of a mode is the one with the larger real
part.  It is the attracting equilibrium of the scalar DRE and keeps every
eigenvalue of (lam I + P) in the right half plane.  For complex pairs the +i
root is taken.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numba
import numpy as np

Array = np.ndarray

CRITICAL_TOL = 1e-12
BLOWUP_NORM = 1e8


class RiccatiBlowUp(RuntimeError):
    """Raised when a DRE solution leaves every bounded region (unstable branch)."""

    def __init__(self, t: float, norm: float, path: list):
        super().__init__(f"DRE solution blew up at t={t:.6g} (|P|={norm:.3g})")
        self.t = t
        self.norm = norm
        self.path = path


@dataclass
class SlopeOperator:
    matrix: Array
    damping: float
    basis: Optional[Array] = None

    def __post_init__(self):
        self.matrix = np.atleast_2d(np.asarray(self.matrix))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrix) or np.allclose(self.matrix.imag, 0.0)

    def transverse_spectrum(self) -> Array:
        """Eigenvalues of (lam I + P), the contraction rates of w = v - P x."""
        return np.linalg.eigvals(self.damping * np.eye(self.n) + self.matrix)


@dataclass(frozen=True)
class ScalarModeRoots:
    sigma: float
    damping: float
    p_plus: complex
    p_minus: complex
    regime: str

    @property
    def stable(self) -> complex:
        return self.p_plus

    @property
    def decay_rate(self) -> float:
        """Asymptotic contraction rate of the mode, -Re(stable root)."""
        return float(-self.p_plus.real)


def scalar_are_roots(alpha: float, sigma: float) -> ScalarModeRoots:
    """Roots of p^2 + alpha p + sigma = 0 and the damping regime of the mode.

    The discriminant is snapped to zero when |alpha^2 - 4 sigma| <= 1e-12, so a
    critically damped mode reports an exact double root.
    """
    disc = alpha * alpha - 4.0 * sigma
    if abs(disc) <= CRITICAL_TOL:
        p = complex(-alpha / 2.0)
        return ScalarModeRoots(sigma, alpha, p, p, "critically_damped")
    if disc > 0:
        r = np.sqrt(disc)
        # the small root via Vieta avoids cancellation in -alpha + r
        p_minus = (-alpha - r) / 2.0
        p_plus = sigma / p_minus
        return ScalarModeRoots(sigma, alpha, complex(p_plus), complex(p_minus), "overdamped")
    r = np.sqrt(-disc)
    return ScalarModeRoots(
        sigma, alpha, complex(-alpha / 2.0, r / 2.0), complex(-alpha / 2.0, -r / 2.0), "underdamped"
    )


def _check_spd(H: Array) -> tuple[Array, Array]:
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if H.shape[0] != H.shape[1]:
        raise ValueError("H must be square")
    scale = max(1.0, np.linalg.norm(H))
    if np.linalg.norm(H - H.T) > 1e-10 * scale:
        raise ValueError("H is not symmetric")
    sig, U = np.linalg.eigh(0.5 * (H + H.T))
    if np.any(sig <= 0):
        raise ValueError("H must be positive definite")
    return sig, U


def stable_slope(H, damping: float) -> SlopeOperator:
    """Stable solution of P^2 + lam P + H = 0 assembled mode by mode."""
    if damping <= 0:
        raise ValueError("damping must be positive")
    sig, U = _check_spd(H)
    roots = np.array([scalar_are_roots(damping, s).stable for s in sig])
    if np.all(roots.imag == 0):
        roots = roots.real
    P = (U * roots) @ U.T
    return SlopeOperator(P, float(damping), basis=U)


def are_residual(P: SlopeOperator, H) -> float:
    """Frobenius norm of P^2 + lam P + H."""
    M = P.matrix
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if M.shape != H.shape:
        raise ValueError(f"shape mismatch: P {M.shape} vs H {H.shape}")
    return float(np.linalg.norm(M @ M + P.damping * M + H))


def tilt_error(P: SlopeOperator, H, x) -> Array:
    """Normal velocity -(P^2 + alpha P + H) x of the field on the graph v = P x."""
    M = P.matrix
    H = np.atleast_2d(np.asarray(H, dtype=float))
    x = np.asarray(x)
    if M.shape != H.shape or M.shape[1] != x.shape[0]:
        raise ValueError("shape mismatch between P, H and x")
    return -((M @ M + P.damping * M + H) @ x)


def optimal_damping(mu: float) -> float:
    """Resonant damping 2 sqrt(mu)."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    return 2.0 * float(np.sqrt(mu))


def resonance_report(spectrum, damping: float) -> list[tuple[float, float]]:
    """Per-mode contraction rate rho = lam/2 - Re sqrt(lam^2/4 - sigma).

    This is the decay rate of the slowest component of each mode, equal to
    -Re(stable root) and to Re(lam + p) on the other branch.
    """
    spectrum = list(spectrum)
    if not spectrum:
        raise ValueError("spectrum is empty")
    if damping <= 0:
        raise ValueError("damping must be positive")
    return [(float(s), scalar_are_roots(damping, s).decay_rate) for s in spectrum]


# DRE integration -----------------------------------------------------------

def _dre_rhs(P: Array, H: Array, lam: float) -> Array:
    return -H - lam * P - P @ P


def integrate_dre(
    P0,
    hessian_path: Callable[[float], Array],
    step: float,
    horizon: float,
    damping: Optional[float] = None,
    sample_every: int = 1,
    t0: float = 0.0,
) -> list[tuple[float, SlopeOperator]]:
    """Classical RK4 for P' = -H(t) - lam P - P^2 at a fixed step.

    ``P0`` is a SlopeOperator (its damping is used) or a bare matrix together
    with ``damping``.  Complex initial slopes are integrated in complex
    arithmetic.  Raises RiccatiBlowUp once |P| exceeds 1e8.
    """
    if isinstance(P0, SlopeOperator):
        lam = P0.damping if damping is None else damping
        P = np.array(P0.matrix)
    else:
        if damping is None:
            raise ValueError("damping is required when P0 is a bare matrix")
        lam = damping
        P = np.atleast_2d(np.array(P0))
    if step <= 0:
        raise ValueError("step must be positive")
    if horizon < step:
        raise ValueError("horizon must be at least one step")
    if not np.iscomplexobj(P):
        P = P.astype(float)

    n_steps = int(round(horizon / step))
    h = step
    path = [(t0, SlopeOperator(P.copy(), lam))]
    for k in range(n_steps):
        t = t0 + k * h
        Hm = np.atleast_2d(hessian_path(t))
        Hh = np.atleast_2d(hessian_path(t + 0.5 * h))
        H1 = np.atleast_2d(hessian_path(t + h))
        k1 = _dre_rhs(P, Hm, lam)
        k2 = _dre_rhs(P + 0.5 * h * k1, Hh, lam)
        k3 = _dre_rhs(P + 0.5 * h * k2, Hh, lam)
        k4 = _dre_rhs(P + h * k3, H1, lam)
        P = P + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        nrm = np.linalg.norm(P)
        if not np.isfinite(nrm) or nrm > BLOWUP_NORM:
            raise RiccatiBlowUp(t0 + (k + 1) * h, float(nrm), path)
        if (k + 1) % sample_every == 0 or k + 1 == n_steps:
            path.append((t0 + (k + 1) * h, SlopeOperator(P.copy(), lam)))
    return path


@numba.njit(cache=True)
def _rk4_mode_real(p, sigma, lam, h, n_steps, every, out):
    j = 1
    out[0] = p
    for i in range(n_steps):
        k1 = -(p * p + lam * p + sigma)
        q = p + 0.5 * h * k1
        k2 = -(q * q + lam * q + sigma)
        q = p + 0.5 * h * k2
        k3 = -(q * q + lam * q + sigma)
        q = p + h * k3
        k4 = -(q * q + lam * q + sigma)
        p = p + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if not abs(p) <= 1e8:
            return p, i + 1
        if (i + 1) % every == 0:
            out[j] = p
            j += 1
    return p, n_steps


@numba.njit(cache=True)
def _rk4_mode_complex(p, sigma, lam, h, n_steps, every, out):
    j = 1
    out[0] = p
    for i in range(n_steps):
        k1 = -(p * p + lam * p + sigma)
        q = p + 0.5 * h * k1
        k2 = -(q * q + lam * q + sigma)
        q = p + 0.5 * h * k2
        k3 = -(q * q + lam * q + sigma)
        q = p + h * k3
        k4 = -(q * q + lam * q + sigma)
        p = p + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if not abs(p) <= 1e8:
            return p, i + 1
        if (i + 1) % every == 0:
            out[j] = p
            j += 1
    return p, n_steps


@dataclass
class ModeDRERun:
    sigma: float
    damping: float
    times: Array
    values: Array
    terminal: complex
    blew_up: bool
    steps_done: int
    roots: ScalarModeRoots = field(repr=False)

    @property
    def status(self) -> str:
        if self.blew_up:
            return "blow-up"
        if self.roots.regime == "underdamped":
            return "complex-mode"
        return "converging"


def integrate_mode_dre(
    p0: complex,
    sigma: float,
    damping: float,
    step: float,
    horizon: float,
    sample_every: int = 1,
) -> ModeDRERun:
    """RK4 for the scalar DRE p' = -(p^2 + lam p + sigma), compiled.

    Same scheme as :func:`integrate_dre` restricted to one eigenmode of a
    frozen Hessian; meant for very long horizons.  A real p0 stays real.
    """
    if step <= 0 or horizon < step:
        raise ValueError("need step > 0 and horizon >= step")
    n_steps = int(round(horizon / step))
    n_out = n_steps // sample_every + 1
    if isinstance(p0, complex) or np.iscomplexobj(p0):
        out = np.full(n_out, np.nan + 0j)
        p, done = _rk4_mode_complex(complex(p0), float(sigma), float(damping), float(step),
                                    n_steps, sample_every, out)
    else:
        out = np.full(n_out, np.nan)
        p, done = _rk4_mode_real(float(p0), float(sigma), float(damping), float(step),
                                 n_steps, sample_every, out)
    times = np.arange(n_out) * (step * sample_every)
    return ModeDRERun(
        sigma=float(sigma),
        damping=float(damping),
        times=times,
        values=out,
        terminal=p,
        blew_up=done < n_steps,
        steps_done=done,
        roots=scalar_are_roots(damping, sigma),
    )


def dre_mode_report(P0, H, damping: float, step: float, horizon: float) -> list[ModeDRERun]:
    """Integrate the frozen-H DRE mode by mode in the eigenbasis of H.

    Real modes converge to the stable root; complex modes have no real
    attractor, and a real start in such a mode blows up in finite time.
    """
    sig, U = _check_spd(H)
    P0 = np.atleast_2d(np.asarray(P0))
    p0_modes = np.diag(U.T @ P0 @ U)
    runs = []
    for p0, s in zip(p0_modes, sig):
        start = complex(p0) if np.iscomplexobj(P0) else float(np.real(p0))
        runs.append(integrate_mode_dre(start, s, damping, step, horizon,
                                       sample_every=max(1, int(round(horizon / step)) // 1000)))
    return runs


# Triple momentum -----------------------------------------------------------

@dataclass
class TripleMomentumState:
    P1: Array
    P2: Array
    omega: float
    alpha0: float
    alpha1: float
    alpha2: float

    @classmethod
    def canonical(cls, P1, P2, omega: float) -> "TripleMomentumState":
        """alpha0 = omega^2, alpha1 = omega(omega + 2), alpha2 = 2 omega + 1."""
        return cls(
            np.atleast_2d(np.asarray(P1, dtype=float)),
            np.atleast_2d(np.asarray(P2, dtype=float)),
            float(omega),
            omega**2,
            omega * (omega + 2.0),
            2.0 * omega + 1.0,
        )

    @classmethod
    def from_bounds(cls, P1, P2, mu: float, L: float) -> "TripleMomentumState":
        return cls.canonical(P1, P2, float(np.sqrt(mu * L)))

    @property
    def coefficients(self) -> tuple[float, float, float]:
        return self.alpha0, self.alpha1, self.alpha2


def triple_invariance_rhs(state: TripleMomentumState, Q) -> tuple[Array, Array]:
    """Right-hand sides of the invariance equations for (v, a) = (P1 x, P2 x)."""
    P1, P2 = state.P1, state.P2
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    P1dot = P2 - P1 @ P1
    P2dot = -state.alpha2 * P2 - state.alpha1 * P1 - state.alpha0 * Q - P2 @ P1
    return P1dot, P2dot


def triple_invariance_residuals(state: TripleMomentumState, P1dot, P2dot, Q) -> tuple[float, float]:
    f1, f2 = triple_invariance_rhs(state, Q)
    return (float(np.linalg.norm(np.atleast_2d(P1dot) - f1)),
            float(np.linalg.norm(np.atleast_2d(P2dot) - f2)))


def triple_factorize(state: TripleMomentumState) -> tuple[Array, Array]:
    """(R, S) = (P1, P2 - P1^2); S = 0 is the slow manifold."""
    R = state.P1.copy()
    S = state.P2 - state.P1 @ state.P1
    return R, S


def nesterov_riccati_residual(R, Q, omega: float, Rdot=None) -> Array:
    """Rdot + R^2 + 2 omega R + omega^2 Q (Rdot = 0 when omitted)."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    out = R @ R + 2.0 * omega * R + omega**2 * Q
    if Rdot is not None:
        out = out + np.atleast_2d(Rdot)
    return out


def cubic_riccati_residual(R, Q, state: TripleMomentumState) -> Array:
    """Equilibrium cubic R^3 + a2 R^2 + a1 R + a0 Q, i.e. the second
    invariance equation evaluated on S = 0 with R frozen."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    return R @ R @ R + state.alpha2 * (R @ R) + state.alpha1 * R + state.alpha0 * Q


def factorization_defect(R, Q, omega: float) -> Array:
    """omega^2 R (I - Q): cubic = (R + I) N(R) + defect for canonical coefficients,
    with N the Nesterov residual.  The defect vanishes when Q = I."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    return omega**2 * R @ (np.eye(R.shape[0]) - Q)


def factorized_flow(state: TripleMomentumState, Q) -> tuple[Array, Array]:
    """(Rdot, Sdot) implied by the invariance equations.

    Rdot = S and Sdot = -a2 S - 2 S R - R S - cubic(R), exact for any
    matrices, where cubic is :func:`cubic_riccati_residual`.
    """
    R, S = triple_factorize(state)
    Sdot = -state.alpha2 * S - 2.0 * S @ R - R @ S - cubic_riccati_residual(R, Q, state)
    return S, Sdot
