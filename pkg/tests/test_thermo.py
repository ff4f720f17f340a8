import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinstar.errors import DegenerateAlpha, NonConvergent
from spinstar.model import ModelParams, XState, build_state
from spinstar.thermo import (
    f_quadrature,
    f_series,
    f_small_alpha,
    f_values,
    g_function,
    g_function_erf_form,
    g_small_alpha,
    g_small_alpha_enveloped,
    g_values,
    limit_functions,
    limit_validity,
    population_limit,
    population_limit_grid,
)

from reference import limit_fg_quadrature, two_spin_population

SPOTS = [(0.3, 0.2), (1.0, 1.0), (2.5, 0.5), (4.0, 0.05), (6.0, 2.0), (7.7, 0.25), (10.0, 1.5), (13.0, 0.8),
         (20.0, 0.1), (35.0, 3.0)]


def test_zero_time():
    s = f_series(0.0, 1.0, 0.5)
    assert (s.value, s.terms_used) == (0.0, 0)
    assert g_function(0.0, 1.0, 0.5) == 0.0


@pytest.mark.parametrize("t, alpha", SPOTS)
def test_against_gaussian_average(t, alpha):
    f_ref, g_ref = limit_fg_quadrature(t, 1.0, alpha)
    assert abs(g_function(t, 1.0, alpha) - g_ref) < 1e-10
    lf = limit_functions(t, 1.0, alpha)
    assert abs(lf.f_val - f_ref) < 1e-10
    assert abs(lf.g_val - g_ref) < 1e-10


def test_gamma_rescaling():
    # f and g only depend on gamma t and alpha / gamma
    for t, alpha in SPOTS[:5]:
        assert g_function(t / 2.0, 2.0, 2.0 * alpha) == pytest.approx(g_function(t, 1.0, alpha), abs=1e-13)
        assert f_values([t / 3.0], 3.0, 3.0 * alpha)[0] == pytest.approx(f_values([t], 1.0, alpha)[0], abs=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 12.0), st.floats(0.05, 4.0))
def test_series_agrees_with_integrated_g(t, alpha):
    try:
        s = f_series(t, 1.0, alpha)
    except NonConvergent:
        return
    assert s.residual <= 1e-16 * max(abs(s.value), 1e-300) or s.value == 0
    assert s.value == pytest.approx(f_quadrature([t], 1.0, alpha)[0], abs=1e-11)


def test_ill_conditioned_series_detected_and_replaced():
    with pytest.raises(NonConvergent):
        f_series(60.0, 1.0, 0.3)
    f_ref, _ = limit_fg_quadrature(60.0, 1.0, 0.3)
    assert f_values([60.0], 1.0, 0.3)[0] == pytest.approx(f_ref, abs=1e-10)


def test_quadrature_independent_of_other_times():
    t = np.array([0.3, 5.0, 17.2])
    full = f_quadrature(t, 1.0, 0.7)
    for i, ti in enumerate(t):
        assert f_quadrature([ti], 1.0, 0.7)[0] == full[i]


def test_erf_form_agrees_in_moderate_regime():
    for t, alpha in [(1.0, 1.0), (3.0, 0.5), (8.0, 2.0)]:
        assert g_function_erf_form(t, 1.0, alpha) == pytest.approx(g_function(t, 1.0, alpha), abs=1e-12)
    with pytest.raises(NonConvergent):
        g_function_erf_form(1.0, 1.0, 0.01)


def test_derivative_relation():
    # f' = (gamma / 2) g, checked with a centred difference
    t, h, alpha = np.array([1.0, 4.0, 9.0]), 1e-4, 0.6
    deriv = (f_values(t + h, 1.0, alpha) - f_values(t - h, 1.0, alpha)) / (2 * h)
    np.testing.assert_allclose(deriv, 0.5 * g_values(t, 1.0, alpha), atol=1e-7)


@pytest.mark.parametrize("alpha", [0.0, -1.0])
def test_degenerate_alpha(alpha):
    with pytest.raises(DegenerateAlpha):
        f_series(1.0, 1.0, alpha)
    with pytest.raises(DegenerateAlpha):
        g_function(1.0, 1.0, alpha)


def _max_residual(fn, exact, alpha):
    t = np.linspace(0, 20, 401)
    return np.max(np.abs(fn(t, 1.0, alpha) - exact(t, 1.0, alpha)))


def test_f_expansion_is_fourth_order():
    r = [_max_residual(f_small_alpha, f_values, a) for a in (0.04, 0.02, 0.01)]
    # halving alpha shrinks the residual by 2^4
    assert r[0] / r[1] == pytest.approx(16, rel=0.1)
    assert r[1] / r[2] == pytest.approx(16, rel=0.1)


def test_consistent_g_expansion_is_fourth_order():
    r = [_max_residual(g_small_alpha, g_values, a) for a in (0.04, 0.02, 0.01)]
    assert r[0] / r[1] == pytest.approx(16, rel=0.1)
    assert r[1] / r[2] == pytest.approx(16, rel=0.1)


def test_enveloped_g_expansion_is_only_second_order():
    # the enveloped form carries a wrong alpha^2 coefficient: its error shrinks like alpha^2
    r = [_max_residual(g_small_alpha_enveloped, g_values, a) for a in (0.04, 0.02, 0.01)]
    assert r[0] / r[1] == pytest.approx(4, rel=0.1)
    assert r[1] / r[2] == pytest.approx(4, rel=0.1)


def test_large_alpha_decay():
    t = np.linspace(1.0, 50.0, 491)
    assert np.max(np.abs(f_values(t, 1.0, 100.0))) < 1e-2
    assert np.max(np.abs(g_values(t, 1.0, 100.0))) < 1e-2


def test_validity_flag():
    assert limit_validity(ModelParams(1.0, 0.5)) == "ok"
    assert limit_validity(ModelParams(1.0, 2.0)) == "questionable"


def test_population_initial_value():
    x0 = build_state("phi+", math.pi / 3, math.pi / 2)
    assert population_limit(0.0, ModelParams(1.0, 0.4), x0) == pytest.approx(x0.initial_population(), abs=1e-15)


def test_population_collapses_to_two_spin_rabi():
    t = np.linspace(0, 4 * math.pi, 97)
    pop = population_limit_grid(t, ModelParams(1.0, 1e-6), XState(0, 1, 0, 0))
    assert np.max(np.abs(pop - np.cos(t / 2) ** 2)) < 1e-6
    x0 = build_state("phi+", math.pi / 3, math.pi / 2)
    pop = population_limit_grid(t, ModelParams(1.0, 1e-6), x0)
    ref = np.array([two_spin_population(tt, 1.0, x0) for tt in t])
    assert np.max(np.abs(pop - ref)) < 1e-6


def test_population_distinct_for_phases():
    t = np.linspace(0, 20, 201)
    pops = [population_limit_grid(t, ModelParams(1.0, 0.25), build_state("phi-", math.pi / 3, b))
            for b in (0.0, math.pi / 4, math.pi / 2)]
    assert np.max(np.abs(pops[0] - pops[1])) > 0.05
    assert np.max(np.abs(pops[1] - pops[2])) > 0.05
    assert all(np.all((p >= 0) & (p <= 1)) for p in pops)
