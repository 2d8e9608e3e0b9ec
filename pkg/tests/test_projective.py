import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from naimlab.projective import (
    FLAT_TOL,
    NonInvertibleError,
    ScalarPath,
    bisect_flat_root,
    central_weights,
    convex_normal_form_Q,
    flat_dampings,
    flatness_scan,
    intrinsic_schwarzian,
    ratio_schwarzian_check,
    schwarzian,
    schwarzian_series,
    solve_normal_form,
)


def path(fn, lo=0.5, hi=1.5, step=1e-3):
    return ScalarPath.sample(fn, lo, hi, step)


def test_path_validation():
    with pytest.raises(ValueError):
        ScalarPath([0.0, 1.0], [1.0])
    with pytest.raises(ValueError):
        ScalarPath([0.0, 1.0, 1.5], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        ScalarPath([0.0, -1.0], [1.0, 2.0])
    p = path(np.sin)
    assert p.index_of(1.0) == 500 and p.times[500] == pytest.approx(1.0)


@pytest.mark.parametrize("order,expected", [
    (1, [-1 / 60, 3 / 20, -3 / 4, 0, 3 / 4, -3 / 20, 1 / 60]),
    (2, [1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90]),
    (3, [1 / 8, -1, 13 / 8, 0, -13 / 8, 1, -1 / 8]),
])
def test_central_weights(order, expected):
    assert np.allclose(central_weights(order), expected, atol=1e-12)


def test_moebius_is_flat():
    p = path(lambda t: (2 * t + 1) / (t + 3))
    assert abs(schwarzian(p, p.index_of(1.0))) <= 1e-6


def test_square_and_tangent():
    p = path(lambda t: t**2)
    assert schwarzian(p, p.index_of(1.0)) == pytest.approx(-1.5, abs=1e-6)
    q = path(np.tan, 0.0, 1.0)
    assert schwarzian(q, q.index_of(0.5)) == pytest.approx(2.0, abs=1e-6)


def test_series_matches_pointwise():
    p = path(np.exp)
    t, s = schwarzian_series(p)
    assert t.size == p.times.size - 6
    assert np.allclose(s, -0.5, atol=1e-5)
    # same stencils, different summation order: agree to rounding amplified by 1/h^3
    assert s[100] == pytest.approx(schwarzian(p, 103), abs=1e-6)


def test_grid_halving_order():
    # the 7-point third-derivative stencil is fourth order, so errors fall by about 2^4
    errs = []
    for h in (0.04, 0.02, 0.01):
        p = path(np.tan, 0.0, 1.12, h)
        errs.append(abs(schwarzian(p, p.index_of(0.56)) - 2.0))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 4.0) <= 0.25)


def test_edges_and_degeneracy():
    p = path(lambda t: t**2)
    with pytest.raises(IndexError):
        schwarzian(p, 2)
    flat = path(lambda t: np.ones_like(t))
    with pytest.raises(NonInvertibleError):
        schwarzian(flat, 500)
    with pytest.raises(NonInvertibleError):
        schwarzian_series(path(lambda t: (t - 1.0) ** 2))
    with pytest.raises(ValueError):
        schwarzian_series(ScalarPath(np.arange(5.0), np.arange(5.0)))


def test_composition_chain_rule():
    # Sch[exp(t^2)] = Sch[exp](t^2) (2t)^2 + Sch[t^2] = -2 t^2 - 3/(2 t^2)
    p = path(lambda t: np.exp(t**2))
    t, s = schwarzian_series(p)
    assert np.max(np.abs(s - (-2 * t**2 - 1.5 / t**2))) <= 1e-5


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_moebius_invariance(a, b, c, d):
    # compose tan with a Moebius map; truncation error grows near poles of the composite,
    # so keep its pole arctan(-d/c) at least 0.5 outside the window [0, 0.8]
    if abs(a * d - b * c) < 0.5:
        return
    if c != 0.0 and -0.5 <= np.arctan(-d / c) <= 1.3:
        return
    base = path(np.tan, 0.0, 0.8, 2e-3)
    mapped = path(lambda t: (a * np.tan(t) + b) / (c * np.tan(t) + d), 0.0, 0.8, 2e-3)
    _, s0 = schwarzian_series(base)
    _, s1 = schwarzian_series(mapped)
    assert np.max(np.abs(s1 - s0)) <= 1e-5


def test_normal_form_solutions():
    t, u1, u2 = solve_normal_form(lambda s: 1.0, 0.0, 1.0)
    assert np.allclose(u1, np.cos(t), atol=1e-12) and np.allclose(u2, np.sin(t), atol=1e-12)
    with pytest.raises(ValueError):
        solve_normal_form(lambda s: 1.0, 0.0, 0.0)


@pytest.mark.parametrize("Q", [lambda t: 0.0, lambda t: 1.0, lambda t: 4.0, lambda t: 0.25 / t**2])
def test_ratio_identity(Q):
    assert ratio_schwarzian_check(Q, 1.0, 3.0) <= 1e-4


def test_normal_form_Q():
    assert convex_normal_form_Q(0.0, 0.0, 1.0) == 0.0
    assert convex_normal_form_Q(2.0, 0.0, 5.0) == 0.0
    assert convex_normal_form_Q(1.0, 0.0, 1.0) == 0.25
    assert convex_normal_form_Q(3.0, 1.0, 2.0) == pytest.approx(1 - 3 / 16)
    with pytest.raises(ValueError):
        convex_normal_form_Q(1.0, 0.0, 0.0)


@pytest.mark.parametrize("c", [1.0, 3.0, -0.5])
def test_intrinsic_schwarzian_value(c):
    # Sch = 2Q = c(2 - c) / (2 t^2) at t = 2
    assert intrinsic_schwarzian(c) == pytest.approx(c * (2 - c) / 8, abs=1e-5)


def test_flatness_scan():
    pts = flatness_scan([0.0, 1.0, 2.0, 3.0])
    assert [p.is_flat for p in pts] == [True, False, True, False]
    assert all(p.magnitude <= FLAT_TOL for p in pts if p.is_flat)
    with pytest.raises(ValueError):
        flatness_scan([])


def test_bisection_roots():
    assert bisect_flat_root(1.5, 2.6) == pytest.approx(2.0, abs=1e-4)
    assert bisect_flat_root(-0.7, 0.4) == pytest.approx(0.0, abs=1e-4)
    with pytest.raises(ValueError):
        bisect_flat_root(0.5, 1.5)


def test_flat_dampings_off_grid():
    roots = flat_dampings(np.linspace(-0.7, 3.1, 7))
    assert len(roots) == 2
    assert np.allclose(roots, [0.0, 2.0], atol=1e-4)
