"""Acceptance suite: every criterion runs its bundled harness spec at the stated tolerance.

Criteria that the mathematics does not support are left failing; the
blocking analysis for each is recorded outside the package.
"""

import numpy as np
import pytest

from naimlab.harness.core import load_specs, run

SPECS = {s.id: s for s in load_specs()}
_REPORTS = {}


def report(spec_id):
    if spec_id not in _REPORTS:
        _REPORTS[spec_id] = run(SPECS[spec_id])
    return _REPORTS[spec_id]


def failing(rep, prefix=""):
    return {k: rep.summary["checks"][k] for k, ok in rep.status.items() if k.startswith(prefix) and not ok}


def assert_all(rep, prefix=""):
    keys = [k for k in rep.status if k.startswith(prefix)]
    assert keys, f"no checks named {prefix!r}"
    assert not failing(rep, prefix), failing(rep, prefix)


@pytest.mark.criterion("1", "ARE residual <= 1e-10 |H|_F on 20 seeded quadratics")
def test_criterion_1_are_exactness():
    rep = report("verify-riccati")
    assert rep.summary["info"]["instances"] >= 20
    assert_all(rep)


@pytest.mark.criterion("2", "per-mode contraction sqrt(mu) to 1e-12 up to kappa 1e4")
def test_criterion_2_spectral_resonance():
    assert_all(report("spectral-resonance"))


@pytest.mark.slow
@pytest.mark.criterion("3", "scalar DRE closed form and ARE root to 1e-6 at step 1e-3")
def test_criterion_3_dre_convergence():
    rep = report("dre-convergence")
    assert rep.summary["checks"]["closed_form_max_error"]["threshold"] == 1e-6
    assert_all(rep)


@pytest.mark.criterion("4", "Cayley-Pade error exponent 3 +/- 0.2")
def test_criterion_4_cayley_pade_order():
    assert_all(report("cayley-pade"))


@pytest.mark.criterion("5a", "f-gap <= 1.05 beta^(2k) gap0 for k <= 300")
def test_criterion_5a_beta_squared_bound():
    assert_all(report("strongly-convex-rate"), "beta2k_bound")


@pytest.mark.criterion("5b", "fitted geometric rate <= 1 - 0.8 sqrt(mu/L)")
def test_criterion_5b_fitted_rate():
    rep = report("strongly-convex-rate")
    assert_all(rep, "fitted_rate")
    assert_all(rep, "fallback_bound")


@pytest.mark.criterion("6", "convex power-law slope in [-2.4, -1.6]")
def test_criterion_6_convex_rate():
    assert_all(report("convex-rate"), "power_slope")


@pytest.mark.criterion("7a", "NAG-ordering fiber residual slope >= 1.0")
def test_criterion_7a_nag_ordering():
    assert_all(report("compare-orderings"), "nag_residual_slope")


@pytest.mark.criterion("7b", "HB-ordering fiber residual slope <= 0.2")
def test_criterion_7b_hb_ordering():
    assert_all(report("compare-orderings"), "hb_residual_slope")


@pytest.mark.criterion("8", "Moebius, ratio identity and flat dampings {0, 2}")
def test_criterion_8_schwarzian():
    rep = report("schwarzian")
    assert_all(rep)
    assert np.allclose(rep.summary["checks"]["flat_roots"]["roots"], [0.0, 2.0], atol=1e-3)


@pytest.mark.criterion("9", "Lyapunov, envelope rate within 30%, exact gamma_F")
def test_criterion_9_fenichel():
    assert_all(report("fenichel"))


@pytest.mark.criterion("10", "companion spectrum real parts -sqrt(mu) to 1e-10")
def test_criterion_10_linearized_spectrum():
    assert_all(report("linearized-spectrum"))


@pytest.mark.criterion("11", "cubic Riccati factorization and TM rate vs NAG")
def test_criterion_11_triple_momentum():
    rep = report("triple-momentum")
    assert_all(rep)
    assert "rate_discrepancy_vs_claim[quad:k25]" in rep.summary["info"]


@pytest.mark.criterion("12", "finite-difference gradients <= 1e-5 on every objective")
def test_criterion_12_gradient_check():
    rep = report("gradient-check")
    assert len(rep.status) == 7
    assert_all(rep)
