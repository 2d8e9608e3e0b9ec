import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from naimlab import flows
from naimlab.flows import (
    FastSlowConjugacy,
    IntegrationError,
    PhaseState,
    Trajectory,
    adapted_coordinate,
    fast_slow_field,
    fenichel_report,
    gradient_flow_field,
    integrate,
    lifted_controls,
    lifted_field,
    lyapunov_series,
    nag_field,
    nag_system,
    scaled_objective,
    triple_momentum_field,
)
from naimlab.objectives import STRONGLY_CONVEX, SpectralBounds, get_objective, make_quadratic


def half_square():
    return make_quadratic([1.0])


# states and trajectories ------------------------------------------------------

def test_phase_state_validation():
    with pytest.raises(ValueError):
        PhaseState([1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        PhaseState([np.nan], [0.0])
    assert PhaseState(1.0, 2.0).dim == 1


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory([0.0, 1.0, 1.0], np.zeros((3, 1)), np.zeros((3, 1)))
    with pytest.raises(ValueError):
        Trajectory([0.0, 1.0, 3.0], np.zeros((3, 1)), np.zeros((3, 1)))


def test_trajectory_csv_columns():
    f = make_quadratic([1.0, 2.0])
    traj = integrate(nag_system(f), PhaseState([1.0, 0.0], [0.0, 0.0]), 0.1, 0.3)
    lines = traj.to_csv(f).splitlines()
    assert lines[0] == "t,x0,x1,v0,v1,V"
    assert len(lines) == 5
    assert float(lines[1].split(",")[-1]) == pytest.approx(0.5)


# fields -------------------------------------------------------------------

def test_gradient_flow_field():
    f = make_quadratic([1.0, 4.0])
    assert gradient_flow_field(f, PhaseState([1.0, 0.0], [0.0, 0.0])) == pytest.approx([-0.25, 0.0])
    assert np.all(gradient_flow_field(f, np.zeros(2)) == 0.0)
    assert gradient_flow_field(half_square(), np.array([2.0])) == pytest.approx([-2.0])


def test_lifted_controls_examples():
    f = make_quadratic([1.0, 1.0])
    x1 = np.array([0.3, -0.2])
    _, u_a = lifted_controls(f, x1, -f.grad(x1) / f.L, 0.5)
    assert np.allclose(u_a, 0.0)
    u_in, u_a = lifted_controls(f, np.array([1.0, 0.0]), np.zeros(2), 0.25)
    assert np.allclose(u_in, 0.0) and np.allclose(u_a, [-0.25, 0.0])


@pytest.mark.parametrize("oid", ["quad:k25", "lse:ridge"])
def test_adapted_coordinate_contracts(oid):
    # z = x2 + grad f(x1)/L obeys z' = -mu z along the controlled flow
    f = get_objective(oid)
    mu = 0.3
    rng = np.random.default_rng(1)
    start = PhaseState(rng.standard_normal(f.dim), rng.standard_normal(f.dim))
    traj = integrate(lifted_field(f, mu), start, 1e-3, 5.0)
    z = np.array([adapted_coordinate(f, x, v) for x, v in zip(traj.xs, traj.vs)])
    zdot = np.gradient(z, traj.step, axis=0, edge_order=2)
    assert np.max(np.abs(zdot + mu * z)) <= 1e-6 * np.max(np.abs(z))
    assert np.allclose(z[-1], np.exp(-mu * 5.0) * z[0], rtol=1e-8, atol=1e-12)


def test_adapted_coordinate_rate_ratio():
    f = get_objective("quad:k100")
    mu = 0.2
    traj = integrate(lifted_field(f, mu), PhaseState(np.ones(f.dim), np.zeros(f.dim)), 1e-2, 20.0)
    zn = np.array([np.linalg.norm(adapted_coordinate(f, x, v)) for x, v in zip(traj.xs, traj.vs)])
    ratio = np.diff(np.log(zn)) / traj.step
    assert np.all(np.abs(ratio[500:] / -mu - 1) <= 0.05)


def test_nag_field_examples():
    f = half_square()
    assert nag_field(f, PhaseState([0.0], [0.0]), 2.0) == (pytest.approx([0.0]), pytest.approx([0.0]))
    dx, dv = nag_field(f, PhaseState([1.0], [0.0]), 2.0)
    assert dx == pytest.approx([0.0]) and dv == pytest.approx([-1.0])
    with pytest.raises(ValueError):
        nag_field(f, PhaseState([1.0], [0.0]), -1.0)


def test_undamped_energy_conserved():
    f = make_quadratic([1.0, 3.0])
    traj = integrate(nag_system(f, 0.0), PhaseState([1.0, -0.5], [0.2, 0.0]), 1e-3, 10.0)
    V = traj.energy(f)
    assert np.max(np.abs(V - V[0])) <= 1e-10


def test_fast_slow_examples():
    f = half_square()
    dx, dv = fast_slow_field(f, PhaseState([0.0], [0.0]), 0.5)
    assert dx == 0.0 and dv == 0.0
    # eps = 1: dv/dtau = -v - grad f / sqrt(mu)
    g = make_quadratic([4.0])
    _, dv = fast_slow_field(g, PhaseState([1.0], [2.0]), 1.0)
    assert dv == pytest.approx([-2.0 - 4.0 / 2.0])
    with pytest.raises(ValueError):
        fast_slow_field(f, PhaseState([0.0], [0.0]), 0.0)


def test_layer_problem_decays_exponentially():
    # with the gradient frozen at zero, dv/dtau = -v/eps, i.e. v e^(-s) in fast time s = tau/eps
    f = half_square()
    eps = 0.1
    traj = integrate(lambda s: fast_slow_field(f, PhaseState(np.zeros(1), s.v), eps),
                     PhaseState([0.0], [1.0]), 1e-4, 0.3)
    assert traj.vs[-1, 0] == pytest.approx(np.exp(-3.0), rel=1e-10)


@pytest.mark.parametrize("oid", ["quad:k100", "lse:ridge"])
def test_fast_slow_conjugate_to_nag(oid):
    f = get_objective(oid)
    eps = np.sqrt(f.mu / f.L)
    conj = FastSlowConjugacy(f.mu, eps)
    g = scaled_objective(f, conj.gradient_scale)
    rng = np.random.default_rng(3)
    for _ in range(100):
        x, v = rng.standard_normal((2, f.dim))
        nx, nv = nag_field(g, PhaseState(x, v), conj.damping)
        fx, fv = fast_slow_field(f, PhaseState(x, v / conj.velocity_scale), eps)
        mx, mv = conj.nag_rates_from_fast_slow(fx, fv)
        scale = 1.0 + np.linalg.norm(nv)
        assert np.linalg.norm(mx - nx) <= 1e-10 * scale
        assert np.linalg.norm(mv - nv) <= 1e-10 * scale


def test_fast_slow_trajectories_match_nag():
    f = get_objective("quad:k25")
    eps = np.sqrt(f.mu / f.L)
    conj = FastSlowConjugacy(f.mu, eps)
    g = scaled_objective(f, conj.gradient_scale)
    x0 = np.linspace(-1, 1, f.dim)
    dtau = 1e-3
    fs = integrate(lambda s: fast_slow_field(f, s, eps), PhaseState(x0, np.zeros(f.dim)), dtau, 2.0)
    nag = integrate(nag_system(g, conj.damping), PhaseState(x0, np.zeros(f.dim)),
                    dtau * conj.time_scale, 2.0 * conj.time_scale)
    assert np.allclose(fs.xs[-1], nag.xs[-1], atol=1e-10)
    assert np.allclose(fs.vs[-1] * conj.velocity_scale, nag.vs[-1], atol=1e-10)


def test_triple_momentum_field_examples():
    f = half_square()
    coeffs = (1.0, 3.0, 3.0)
    out = triple_momentum_field(f, [0.0], [0.0], [0.0], coeffs)
    assert all(np.all(c == 0.0) for c in out)
    _, _, adot = triple_momentum_field(f, [1.0], [2.0], [3.0], coeffs)
    assert adot == pytest.approx([-3 * 3 - 3 * 2 - 1])
    with pytest.raises(ValueError):
        triple_momentum_field(get_objective("lse:ridge"), np.zeros(10), np.zeros(10), np.zeros(10), coeffs)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 10.0), st.floats(0.01, 10.0))
def test_triple_modes_match_companion(sigma, omega):
    # repeated roots scatter by eps^(1/3) in any solver, so compare symmetric functions
    coeffs = (omega**2, omega * (omega + 2), 2 * omega + 1)
    roots = flows.triple_momentum_modes(sigma, coeffs)
    C = np.array([[0, 1, 0], [0, 0, 1], [-coeffs[0] * sigma, -coeffs[1], -coeffs[2]]])
    ref = np.linalg.eigvals(C)
    for r in (roots, ref):
        e1 = r.sum()
        e2 = r[0] * r[1] + r[0] * r[2] + r[1] * r[2]
        e3 = r.prod()
        scale = 1 + coeffs[2]
        assert abs(e1 + coeffs[2]) <= 1e-12 * scale
        assert abs(e2 - coeffs[1]) <= 1e-12 * scale**2
        assert abs(e3 + coeffs[0] * sigma) <= 1e-12 * scale**3


def test_triple_modes_simple_roots_match_companion():
    coeffs = flows.canonical_triple_coefficients(0.04, 1.0)
    ours = np.sort_complex(flows.triple_momentum_modes(0.5, coeffs))
    C = np.array([[0, 1, 0], [0, 0, 1], [-coeffs[0] * 0.5, -coeffs[1], -coeffs[2]]])
    assert np.allclose(ours, np.sort_complex(np.linalg.eigvals(C)), atol=1e-12)


def test_triple_slowest_mode_frozen():
    # kappa = 25 with L = 1: omega = 0.2, slowest root of s^3 + 1.4 s^2 + 0.44 s + 0.0016
    coeffs = flows.canonical_triple_coefficients(0.04, 1.0)
    roots = flows.triple_momentum_modes(0.04, coeffs)
    assert max(roots.real) == pytest.approx(-0.00367932406181133096702921799882281, rel=1e-10)


# integrator ---------------------------------------------------------------

def test_oscillator_period():
    f = half_square()
    traj = integrate(nag_system(f, 0.0), PhaseState([1.0], [0.0]), 1e-3, 2 * np.pi)
    # grid ends at round(2 pi / h) steps; compare against the exact state there
    t = traj.times[-1]
    assert traj.xs[-1, 0] == pytest.approx(np.cos(t), abs=1e-6)
    assert traj.vs[-1, 0] == pytest.approx(-np.sin(t), abs=1e-6)
    assert abs(traj.xs[-1, 0] - 1.0) <= 1e-6


def test_critically_damped_closed_form():
    f = half_square()
    traj = integrate(nag_system(f), PhaseState([1.0], [0.0]), 1e-3, 1.0)
    assert traj.xs[-1, 0] == pytest.approx(0.73575888234288464, abs=1e-10)


def test_zero_field_constant():
    traj = integrate(lambda s: (np.zeros(2), np.zeros(2)), PhaseState([1.0, 2.0], [3.0, 4.0]), 0.1, 1.0)
    assert np.all(traj.xs == [1.0, 2.0]) and np.all(traj.vs == [3.0, 4.0])


def test_rk4_fourth_order():
    f = make_quadratic([1.0, 9.0])
    start = PhaseState([1.0, 1.0], [0.0, 0.0])
    exact = integrate(nag_system(f), start, 1e-4, 2.0).xs[-1]
    errs = [np.linalg.norm(integrate(nag_system(f), start, h, 2.0).xs[-1] - exact) for h in (0.04, 0.02, 0.01)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 4.0) <= 0.3)


def test_integration_error_on_blowup():
    with pytest.raises(IntegrationError) as info, np.errstate(over="ignore", invalid="ignore"):
        integrate(lambda s: (s.x**3, np.zeros(1)), PhaseState([10.0], [0.0]), 0.1, 10.0)
    assert np.isfinite(info.value.last.x).all()


def test_integrate_argument_errors():
    with pytest.raises(ValueError):
        integrate(nag_system(half_square()), PhaseState([1.0], [0.0]), 0.0, 1.0)


# Lyapunov and Fenichel ------------------------------------------------------

def test_lyapunov_equilibrium():
    f = half_square()
    traj = integrate(nag_system(f), PhaseState([0.0], [0.0]), 0.1, 1.0)
    ly = lyapunov_series(traj, f)
    assert np.all(ly.V == 0.0) and np.all(ly.Vdot == 0.0)
    assert len(ly.rows()) == len(traj)


def test_lyapunov_monotone_1d():
    f = make_quadratic([0.25])
    traj = integrate(nag_system(f), PhaseState([2.0], [1.0]), 1e-2, 50.0)
    assert lyapunov_series(traj, f).max_increase <= 1e-10


def test_lyapunov_undamped_constant():
    f = make_quadratic([2.0])
    ly = lyapunov_series(integrate(nag_system(f, 0.0), PhaseState([1.0], [0.0]), 1e-3, 5.0), f)
    assert np.ptp(ly.V) <= 1e-10


def test_energy_dissipation_rate_second_order():
    # Vdot = -2 sqrt(mu) |v|^2; the finite-difference mismatch shrinks like step^2
    f = get_objective("quad:k25")
    lam = 2 * np.sqrt(f.mu)
    start = PhaseState(np.ones(f.dim), np.zeros(f.dim))
    errs = []
    for h in (0.04, 0.02, 0.01):
        traj = integrate(nag_system(f), start, h, 4.0)
        ly = lyapunov_series(traj, f)
        target = -lam * np.sum(traj.vs**2, axis=1)
        errs.append(np.max(np.abs(ly.Vdot[1:-1] - target[1:-1])))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.8)


@pytest.mark.slow
def test_fenichel_kappa100():
    f = get_objective("quad:k100")
    sq = np.sqrt(f.mu)
    traj = integrate(nag_system(f), PhaseState(np.ones(f.dim), np.zeros(f.dim)), 1e-2, 30 / sq)
    rep = fenichel_report(traj, f.bounds, f)
    assert abs(rep.envelope_rate - sq) <= 0.3 * sq
    assert rep.confined and rep.max_energy_increase <= 1e-10
    assert rep.gamma_perp == sq


def test_fenichel_gap_arithmetic():
    traj = Trajectory(np.arange(40.0), np.zeros((40, 1)), np.exp(-np.arange(40.0))[:, None])
    rep = fenichel_report(traj, SpectralBounds(1.0, 100.0), window=(5.0, 30.0))
    assert rep.gamma_F == pytest.approx(0.9, abs=1e-15)
    assert rep.envelope_rate == pytest.approx(1.0)


def test_fenichel_requires_samples():
    traj = Trajectory(np.arange(5.0), np.zeros((5, 1)), np.ones((5, 1)))
    with pytest.raises(ValueError):
        fenichel_report(traj, SpectralBounds(1.0, 4.0))


@pytest.mark.parametrize("oid", STRONGLY_CONVEX)
def test_confinement_on_suite(oid):
    f = get_objective(oid)
    sq = np.sqrt(f.mu)
    x0 = np.random.default_rng(0).standard_normal(f.dim)
    traj = integrate(nag_system(f), PhaseState(x0, np.zeros(f.dim)), 0.05, 30 / sq, sample_every=2)
    assert fenichel_report(traj, f.bounds, f).confined


# linearisation --------------------------------------------------------------

def test_linearized_spectrum_uniform_real_part():
    f = get_objective("quad:k100")
    H = f.quadratic_matrix
    mu = np.linalg.eigvalsh(H).min()
    lam = 2 * np.sqrt(mu)
    ev = flows.linearized_spectrum(H, lam)
    assert np.max(np.abs(ev.real + np.sqrt(mu))) <= 1e-10
    # the sigma = mu mode contributes the double root -sqrt(mu)
    assert np.sum(ev == -np.sqrt(mu)) == 2
    dense = np.linalg.eigvals(flows.linearized_nag_matrix(H, lam))
    # the defective double root splits by ~1e-8 in the dense solver, so match by distance
    assert max(np.min(np.abs(dense - e)) for e in ev) <= 1e-6
    assert max(np.min(np.abs(ev - d)) for d in dense) <= 1e-6


def test_linearized_matrix_shape():
    M = flows.linearized_nag_matrix(np.diag([1.0, 2.0]), 0.5)
    assert M.shape == (4, 4)
    assert np.array_equal(M[2:, :2], -np.diag([1.0, 2.0]))
    assert np.array_equal(M[2:, 2:], -0.5 * np.eye(2))
