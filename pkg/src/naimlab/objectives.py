"""Test objectives with analytic value, gradient and Hessian.

Every objective carries declared curvature constants ``mu`` (strong convexity,
0 for merely convex problems) and ``L`` (smoothness).  Quadratics additionally
keep their constant Hessian in ``quadratic_matrix``, which the third-order
dynamics in :mod:`naimlab.flows` require.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp, softmax

Array = np.ndarray


@dataclass(frozen=True)
class Objective:
    dim: int
    value_fn: Callable[[Array], float]
    grad_fn: Callable[[Array], Array]
    hess_fn: Callable[[Array], Array]
    mu: float
    L: float
    minimizer: Optional[Array] = None
    min_value: Optional[float] = None
    name: str = ""
    quadratic_matrix: Optional[Array] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if not (0.0 <= self.mu <= self.L) or self.L <= 0:
            raise ValueError(f"need 0 <= mu <= L and L > 0, got mu={self.mu}, L={self.L}")

    def __call__(self, x):
        return self.value_fn(np.asarray(x, dtype=float))

    def grad(self, x) -> Array:
        return self.grad_fn(np.asarray(x, dtype=float))

    def hess(self, x) -> Array:
        return self.hess_fn(np.asarray(x, dtype=float))

    @property
    def is_quadratic(self) -> bool:
        return self.quadratic_matrix is not None

    @property
    def bounds(self) -> "SpectralBounds":
        return SpectralBounds(self.mu, self.L)

    def gap(self, x) -> float:
        """f(x) - f*, requires ``min_value``."""
        if self.min_value is None:
            raise ValueError(f"objective {self.name!r} has no known minimum value")
        return float(self(x) - self.min_value)


@dataclass(frozen=True)
class SpectralBounds:
    mu: float
    L: float

    def __post_init__(self):
        if not (0.0 < self.mu <= self.L):
            raise ValueError("SpectralBounds needs 0 < mu <= L")

    @property
    def kappa(self) -> float:
        return self.L / self.mu

    @property
    def epsilon(self) -> float:
        return float(np.sqrt(self.mu / self.L))


def random_rotation(dim: int, seed: int) -> Array:
    """Seeded orthogonal matrix from the QR factorisation of a Gaussian matrix."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    # sign fix makes the factorisation unique
    return q * np.sign(np.diag(r))


def make_quadratic(eigenvalues, rotation_seed: Optional[int] = None, name: str = "") -> Objective:
    """f(x) = 1/2 x^T H x with H = U^T diag(eigenvalues) U."""
    ev = np.asarray(eigenvalues, dtype=float).ravel()
    if ev.size == 0:
        raise ValueError("eigenvalue list is empty")
    if np.any(ev <= 0):
        raise ValueError("quadratic eigenvalues must be positive")
    n = ev.size
    if rotation_seed is None:
        H = np.diag(ev)
    else:
        U = random_rotation(n, rotation_seed)
        H = U.T @ np.diag(ev) @ U
        H = 0.5 * (H + H.T)
    H.setflags(write=False)

    return Objective(
        dim=n,
        value_fn=lambda x: 0.5 * float(x @ H @ x),
        grad_fn=lambda x: H @ x,
        hess_fn=lambda x: H,
        mu=float(ev.min()),
        L=float(ev.max()),
        minimizer=np.zeros(n),
        min_value=0.0,
        name=name or f"quadratic(n={n})",
        quadratic_matrix=H,
    )


def make_logsumexp_ridge(A, b, mu: float, name: str = "") -> Objective:
    """f(x) = log sum_i exp(a_i^T x - b_i) + mu/2 |x|^2.

    The smoothness constant is the conservative bound mu + sigma_max(A)^2.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape[0] < 1:
        raise ValueError("A needs at least one row")
    if A.shape[0] != b.size:
        raise ValueError(f"A has {A.shape[0]} rows but b has {b.size} entries")
    if mu <= 0:
        raise ValueError("ridge weight mu must be positive")
    n = A.shape[1]
    smax = np.linalg.norm(A, 2)

    def value(x):
        return float(logsumexp(A @ x - b) + 0.5 * mu * (x @ x))

    def grad(x):
        return A.T @ softmax(A @ x - b) + mu * x

    def hess(x):
        s = softmax(A @ x - b)
        return A.T @ (np.diag(s) - np.outer(s, s)) @ A + mu * np.eye(n)

    return Objective(
        dim=n,
        value_fn=value,
        grad_fn=grad,
        hess_fn=hess,
        mu=float(mu),
        L=float(mu + smax**2),
        name=name or f"logsumexp_ridge(m={A.shape[0]}, n={n})",
    )


def make_rank_deficient_lsq(A, b, name: str = "") -> Objective:
    """f(x) = 1/2 |Ax - b|^2 with a nontrivial nullspace (mu = 0).

    When b lies in range(A) (to 1e-10) the minimum value 0 and the
    minimum-norm minimiser are recorded; otherwise both stay unset.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape[0] != b.size:
        raise ValueError(f"A has {A.shape[0]} rows but b has {b.size} entries")
    n = A.shape[1]
    if np.linalg.matrix_rank(A) >= n:
        raise ValueError("A has full column rank; the problem is strongly convex")
    AtA = A.T @ A
    AtA.setflags(write=False)
    Atb = A.T @ b

    x_ls = np.linalg.lstsq(A, b, rcond=None)[0]
    consistent = np.linalg.norm(A @ x_ls - b) <= 1e-10 * max(1.0, np.linalg.norm(b))

    def value(x):
        r = A @ x - b
        return 0.5 * float(r @ r)

    return Objective(
        dim=n,
        value_fn=value,
        grad_fn=lambda x: AtA @ x - Atb,
        hess_fn=lambda x: AtA,
        mu=0.0,
        L=float(np.linalg.norm(A, 2) ** 2),
        minimizer=x_ls if consistent else None,
        min_value=0.0 if consistent else None,
        name=name or f"rank_deficient_lsq(m={A.shape[0]}, n={n})",
    )


def check_gradient(obj: Objective, x, h: float = 1e-5) -> float:
    """Worst relative error of analytic derivatives against central differences.

    Compares grad_fn with differences of value_fn, and every Hessian column with
    differences of grad_fn.  Errors are scaled by max(1, |analytic|_inf).  A
    degenerate step (x + h == x) simply yields a large error.
    """
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    x = np.asarray(x, dtype=float)
    n = x.size
    g = obj.grad(x)
    Hx = obj.hess(x)
    fd_g = np.empty(n)
    fd_H = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        fd_g[i] = (obj(x + e) - obj(x - e)) / (2 * h)
        fd_H[:, i] = (obj.grad(x + e) - obj.grad(x - e)) / (2 * h)
    err_g = np.max(np.abs(fd_g - g)) / max(1.0, np.max(np.abs(g)))
    err_H = np.max(np.abs(fd_H - Hx)) / max(1.0, np.max(np.abs(Hx)))
    err = max(err_g, err_H)
    return float(err) if np.isfinite(err) else float("inf")


# Built-in suite ------------------------------------------------------------

SUITE_DIM = 10


def _quadratic_kappa(kappa: float) -> Callable[[], Objective]:
    def build():
        ev = np.geomspace(1.0 / kappa, 1.0, SUITE_DIM)
        return make_quadratic(ev, rotation_seed=int(kappa), name=f"quad:k{kappa:g}")

    return build


def _lse_ridge() -> Objective:
    rng = np.random.default_rng(11)
    A = rng.standard_normal((20, SUITE_DIM)) / np.sqrt(SUITE_DIM)
    b = rng.standard_normal(20)
    return make_logsumexp_ridge(A, b, mu=0.05, name="lse:ridge")


def _log_spread_lsq(rows: int, cols: int, rank: int, smallest: float, seed: int, name: str):
    # log-spaced squared singular values put curvature at every scale down to
    # `smallest`, the regime where accelerated methods stay on the 1/k^2 curve
    rng = np.random.default_rng(seed)
    U = random_rotation(rows, seed)[:, :rank]
    V = random_rotation(cols, seed + 1)[:, :rank]
    s = np.sqrt(np.geomspace(1.0, smallest, rank))
    A = U @ np.diag(s) @ V.T
    b = A @ rng.standard_normal(cols)
    return make_rank_deficient_lsq(A, b, name=name)


def _lsq_deficient() -> Objective:
    return _log_spread_lsq(80, 80, 70, 1e-8, seed=21, name="lsq:deficient")


def _lsq_wide() -> Objective:
    return _log_spread_lsq(50, 100, 50, 1e-8, seed=41, name="lsq:wide")


OBJECTIVES: dict[str, Callable[[], Objective]] = {
    "quad:k1": _quadratic_kappa(1),
    "quad:k4": _quadratic_kappa(4),
    "quad:k25": _quadratic_kappa(25),
    "quad:k100": _quadratic_kappa(100),
    "lse:ridge": _lse_ridge,
    "lsq:deficient": _lsq_deficient,
    "lsq:wide": _lsq_wide,
}

STRONGLY_CONVEX = ("quad:k1", "quad:k4", "quad:k25", "quad:k100", "lse:ridge")
MERELY_CONVEX = ("lsq:deficient", "lsq:wide")


def get_objective(objective_id: str) -> Objective:
    try:
        return OBJECTIVES[objective_id]()
    except KeyError:
        raise KeyError(
            f"unknown objective {objective_id!r}; known: {sorted(OBJECTIVES)}"
        ) from None
