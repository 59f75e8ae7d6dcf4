import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degree_ldp import penalty as P
from degree_ldp import tilted as T
from degree_ldp.errors import DomainError
from degree_ldp.penalty import PenaltyModel, Regime

FIG1 = PenaltyModel.from_e_gamma(1.2, 0.5)
FIG2 = PenaltyModel.from_e_gamma(6.5, 0.04)
FIG3 = PenaltyModel.from_e_gamma(5.89, 0.05)


# --- closed forms ----------------------------------------------------------


@pytest.mark.parametrize("theta", [0.0, 0.3, 2.0, 7.5, 45.0])
def test_gamma_zero_reduces_to_poisson(theta):
    assert P.penalty_normalizer(theta, 0.0) == pytest.approx(theta, abs=1e-12)
    assert P.penalty_mean(theta, 0.0) == pytest.approx(theta, abs=1e-12)


@pytest.mark.parametrize("gamma", [-3.0, -0.2, 0.0, 1.1])
def test_closed_forms_vanish_at_zero(gamma):
    assert P.penalty_normalizer(0.0, gamma) == 0.0
    assert P.penalty_mean(0.0, gamma) == 0.0


def test_normalizer_example():
    assert P.penalty_normalizer(1.0, math.log(0.5)) == pytest.approx(math.log(1 + 0.5 * (math.e - 1)), abs=1e-14)
    assert P.penalty_normalizer(1.0, math.log(0.5)) == pytest.approx(0.6201, abs=1e-4)


def test_mean_example_matches_series():
    g = math.log(0.04)
    assert P.penalty_mean(2.0, g) == pytest.approx(T.tilted_mean(2.0, T.penalty(g)), abs=1e-10)


def test_closed_forms_match_series_on_grid():
    thetas = np.linspace(0.5, 10.0, 20)
    for eg in np.linspace(0.01, 5.0, 20):
        g = math.log(eg)
        logc, m, _ = T.tilted_moments(thetas, T.penalty(g))
        np.testing.assert_allclose(P.penalty_normalizer(thetas, g), logc, rtol=0, atol=1e-10)
        np.testing.assert_allclose(P.penalty_mean(thetas, g), m, rtol=0, atol=1e-10)


def test_normalizer_stable_for_large_theta():
    g = math.log(0.01)
    assert P.penalty_normalizer(800.0, g) == pytest.approx(800.0 + g, rel=1e-14)
    assert P.penalty_mean(800.0, g) == pytest.approx(800.0, rel=1e-14)


# --- objective -------------------------------------------------------------


def test_objective_examples():
    for g in (-2.0, 0.0, 0.7):
        assert P.objective_H(0.0, PenaltyModel(2.0, g)) == 1.0
    assert P.objective_H(3.0, PenaltyModel(3.0, 0.0)) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 12), st.floats(0.2, 8), st.floats(-4, 2))
def test_objective_matches_generic(theta, beta, gamma):
    model = PenaltyModel(beta, gamma)
    assert P.objective_H(theta, model) == pytest.approx(T.variational_objective(theta, T.penalty(gamma), beta), abs=1e-8)


def test_figure1_curve_has_one_interior_minimum():
    theta, h = P.penalty_curve(FIG1, 8.0)
    assert theta.size == 2048
    interior = np.nonzero((h[1:-1] < h[:-2]) & (h[1:-1] < h[2:]))[0]
    assert interior.size == 1


@pytest.mark.parametrize("model", [FIG1, FIG2, FIG3, PenaltyModel(2.0, 1.0)])
def test_zero_is_never_a_local_minimum(model):
    assert P.objective_H(1e-4, model) < P.objective_H(0.0, model)


# --- fixed-point map -------------------------------------------------------


def test_map_examples():
    assert P.fixed_point_map(3.7, 2.5, 1.0) == pytest.approx(2.5)
    assert P.fixed_point_map(0.0, 2.0, 0.5) == pytest.approx(1.0)
    assert P.fixed_point_map(40.0, 3.0, 0.1) == pytest.approx(3.0, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 60), st.floats(0.01, 20), st.floats(0.01, 20).filter(lambda b: abs(b - 1) > 1e-6))
def test_map_range(x, a, b):
    v = P.fixed_point_map(x, a, b)
    assert min(a, a * b) * (1 - 1e-12) <= v <= max(a, a * b) * (1 + 1e-12)


def test_map_domain():
    with pytest.raises(DomainError):
        P.fixed_point_map(1.0, 0.0, 1.0)


def test_slope_matches_finite_difference():
    x, a, b = 1.3, 5.0, 0.05
    h = 1e-6
    fd = (P.fixed_point_map(x + h, a, b) - P.fixed_point_map(x - h, a, b)) / (2 * h)
    assert P.fixed_point_slope(x, a, b) == pytest.approx(fd, rel=1e-7)


# --- roots and phases ------------------------------------------------------


def test_root_count_examples():
    assert len(P.find_fixed_points(FIG1)) == 1
    assert len(P.find_fixed_points(PenaltyModel.from_e_gamma(2.0, 3.0))) == 1
    assert len(P.find_fixed_points(FIG2)) == 3


def test_frozen_roots():
    np.testing.assert_allclose(P.find_fixed_points(FIG1), [0.83753], atol=1e-5)
    np.testing.assert_allclose(P.find_fixed_points(FIG2), [0.36967, 3.0626, 6.19735], atol=1e-4)
    np.testing.assert_allclose(P.find_fixed_points(FIG3), [0.44847, 2.94325, 5.44232], atol=1e-5)


def test_b_equal_one_short_circuits():
    assert P.find_fixed_points(PenaltyModel(3.3, 0.0)) == [3.3]


@pytest.mark.parametrize("model", [FIG1, FIG2, FIG3])
def test_roots_satisfy_stationarity(model):
    for r in P.find_fixed_points(model):
        assert abs(r - math.sqrt(model.beta * P.penalty_mean(r, model.gamma))) <= 1e-8


@pytest.mark.slow
def test_root_counts_on_random_grid():
    rng = np.random.default_rng(200)
    betas = rng.uniform(0.1, 12.0, 200)
    e_gammas = np.exp(rng.uniform(math.log(1e-3), math.log(5.0), 200))
    counts = {1: 0, 2: 0, 3: 0}
    for a in betas:
        for b in e_gammas:
            fp = P.fixed_points(PenaltyModel.from_e_gamma(a, b))
            k = len(fp.roots)
            assert k in (1, 3) or (k == 2 and fp.tangency)
            counts[k] += 1
    assert counts[3] > 0  # the grid reaches the bistable region


def test_unique_root_region_property():
    # the acceptance suite repeats this with 10^4 draws
    rng = np.random.default_rng(5)
    for j in range(2_000):
        if j % 2:
            a, b = rng.uniform(0.01, 20), rng.uniform(1 + 1e-9, 20)
        else:
            a, b = rng.uniform(0.01, 4 - 1e-9), rng.uniform(1e-3, 1 - 1e-9)
        assert len(P.find_fixed_points(PenaltyModel.from_e_gamma(a, b))) == 1


def test_tangency_reported():
    # tune b so that the upper critical point of h is also a fixed point
    a = 6.0
    def gap(b):
        xs = P._critical_points(a, b)
        return P.fixed_point_map(xs[-1], a, b) - xs[-1]
    from scipy.optimize import brentq

    b = brentq(gap, 0.03, 0.12, xtol=1e-15)
    fp = P.fixed_points(PenaltyModel.from_e_gamma(a, b))
    assert fp.tangency and len(fp.roots) == 2
    cls = P.classify_phase(PenaltyModel.from_e_gamma(a, b))
    assert cls.tangency and cls.regime is Regime.THREE_ROOTS_UNIQUE_GLOBAL


def test_classify_figures():
    c1 = P.classify_phase(FIG1)
    assert c1.regime is Regime.UNIQUE_MIN and c1.gap == 0
    c2 = P.classify_phase(FIG2)
    assert c2.regime is Regime.THREE_ROOTS_UNIQUE_GLOBAL
    assert c2.global_minima == (c2.roots[2],)
    assert c2.h_values[1] > max(c2.h_values[0], c2.h_values[2])
    c3 = P.classify_phase(FIG3, tie_tol=0.05)
    assert c3.regime is Regime.TWO_GLOBAL_MINIMA
    assert len(c3.local_minima) == 2 and c3.gap <= 0.05
    assert P.classify_phase(FIG3).regime is Regime.THREE_ROOTS_UNIQUE_GLOBAL


def test_frozen_objective_values():
    np.testing.assert_allclose(P.classify_phase(FIG1).h_values, [0.38828], atol=1e-5)
    np.testing.assert_allclose(P.classify_phase(FIG2).h_values, [3.24278, 3.37524, 3.17824], atol=1e-5)
    np.testing.assert_allclose(P.classify_phase(FIG3).h_values, [2.934171, 3.039116, 2.933695], atol=1e-6)


@pytest.mark.parametrize("model", [FIG1, FIG2, FIG3, PenaltyModel.from_e_gamma(8.0, 0.02), PenaltyModel.from_e_gamma(3.0, 2.0)])
def test_global_minimum_matches_generic_solver(model):
    cls = P.classify_phase(model)
    sol = T.solve_J(T.penalty(model.gamma), model.beta)
    np.testing.assert_allclose(sorted(sol.thetas), sorted(cls.global_minima), atol=1e-6)


def test_phase_scan_order_and_regime_regions():
    cells = P.phase_scan((1.0, 7.0), (0.02, 2.0), 7)
    assert len(cells) == 49
    assert [c.model.beta for c in cells[:7]] == [1.0] * 7
    for c in cells:
        if c.model.b > 1 or c.model.beta < 4:
            assert c.regime is Regime.UNIQUE_MIN
    fig2 = P.phase_scan((6.5, 6.5), (0.04, 0.04), 1)[0]
    assert fig2.regime is Regime.THREE_ROOTS_UNIQUE_GLOBAL
    assert P.phase_scan((1.0, 7.0), (0.02, 2.0), 7) == cells


def test_phase_csv_layout():
    text = P.phase_csv(P.phase_scan((6.5, 6.5), (0.04, 0.5), (1, 2)))
    lines = text.splitlines()
    assert lines[0] == "beta,e_gamma,regime,root1,root2,root3"
    assert lines[1].split(",")[2] == "ThreeRootsUniqueGlobal"
    assert lines[2].endswith(",,")


def test_curve_csv_layout():
    theta, h = P.penalty_curve(FIG1, 4.0, points=5)
    rows = P.curve_csv(theta, h).splitlines()
    assert rows[0] == "theta,H" and len(rows) == 6
    assert float(rows[1].split(",")[1]) == pytest.approx(0.6)


def test_model_validation():
    with pytest.raises(DomainError):
        PenaltyModel(0.0, 1.0)
    with pytest.raises(DomainError):
        PenaltyModel.from_e_gamma(1.0, 0.0)
