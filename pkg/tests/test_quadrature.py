import math

import numpy as np
import pytest

from torus_spectra.quadrature import (
    GAUSS_WEIGHTS,
    KRONROD_WEIGHTS,
    NODES,
    AnalyticTail,
    ExponentialDecay,
    PolynomialDecay,
    QuadratureError,
    QuadratureProblem,
    integrate,
    integrate_dt_over_t,
)
from torus_spectra.special_functions import bessel_i_e, heat_kernel_power_tail


def moment(k):
    return 2.0 / (k + 1) if k % 2 == 0 else 0.0


def test_kronrod_rule_exact_through_degree_22():
    for k in range(23):
        assert NODES ** k @ KRONROD_WEIGHTS == pytest.approx(moment(k), abs=1e-15)


def test_gauss_rule_exact_through_degree_13():
    for k in range(14):
        assert NODES ** k @ GAUSS_WEIGHTS == pytest.approx(moment(k), abs=1e-15)


def frullani(w):
    return lambda t: np.exp(-t) - np.exp(-w * t)


def test_frullani_log_two():
    res = integrate(frullani(2.0), tail_model=ExponentialDecay(rate=1.0))
    assert res.value == pytest.approx(math.log(2), abs=1e-10)
    assert res.error_estimate <= 1e-10


def test_bessel_heat_kernel_log_two():
    # int_0^oo e^{-2t}(I_0(2t) - 1) dt/t = log 2
    f = lambda t: bessel_i_e(0, 2 * t) - np.exp(-2 * t)
    tail = AnalyticTail(200.0, lambda: heat_kernel_power_tail(1, 200.0))
    res = integrate(f, tail_model=tail, small_t_power=2.0)
    assert res.value == pytest.approx(math.log(2), abs=1e-10)


def test_zero_integrand():
    res = integrate(lambda t: np.zeros_like(t), tail_model=ExponentialDecay(rate=1.0))
    assert res.value == 0.0


def test_linearity():
    f = frullani(3.0)
    g = lambda t: t * np.exp(-t)
    a, b = 2.5, -0.7
    tail = ExponentialDecay(rate=0.5, bound=10.0)
    tol = 1e-10
    lhs = integrate(lambda t: a * f(t) + b * g(t), tail_model=tail, abs_tol=tol).value
    rhs = a * integrate(f, tail_model=tail, abs_tol=tol).value + b * integrate(g, tail_model=tail, abs_tol=tol).value
    assert abs(lhs - rhs) <= 2 * tol


def test_refinement_monotone_error():
    f = frullani(5.0)
    exact = math.log(5.0)
    tols = [1e-4 / 2 ** k for k in range(20)]
    errs = [abs(integrate(f, tail_model=ExponentialDecay(rate=1.0), abs_tol=tol).value - exact) for tol in tols]
    assert all(e <= tol for e, tol in zip(errs, tols))
    # halving the tolerance never pushes the achieved error above the previous target
    assert all(e1 <= t0 for t0, e1 in zip(tols, errs[1:]))


def test_polynomial_tail_model_is_split_independent():
    # (1 + t)^{-3/2} t decays like t^{-1/2}; int_0^oo t/(1+t)^{3/2} dt/t = 2
    f = lambda t: t * (1 + t) ** -1.5
    tail = PolynomialDecay(p=0.5, bound=1.0)
    r1 = integrate(f, tail_model=tail, split=1.0, abs_tol=1e-8)
    r2 = integrate(f, tail_model=tail, split=2.0, abs_tol=1e-8)
    assert abs(r1.value - r2.value) < 1e-8
    assert r1.value == pytest.approx(2.0, abs=1e-8)


def test_finite_interval():
    res = integrate(lambda t: t, upper=3.0, abs_tol=1e-12)
    assert res.value == pytest.approx(3.0, abs=1e-12)
    res = integrate(lambda t: t * t, lower=1.0, upper=2.0, abs_tol=1e-12)
    assert res.value == pytest.approx(1.5, abs=1e-12)


def test_complex_integrand():
    w = 2.0 + 1.0j
    res = integrate(lambda t: np.exp(-t) - np.exp(-w * t), tail_model=ExponentialDecay(rate=1.0))
    assert abs(res.value - np.log(w)) < 1e-10


def test_nan_integrand_fails_immediately():
    with pytest.raises(QuadratureError):
        integrate(lambda t: np.full_like(t, np.nan), tail_model=ExponentialDecay(rate=1.0))


def test_budget_exhaustion_carries_estimate():
    with pytest.raises(QuadratureError) as info:
        integrate(lambda t: t * np.exp(-t) * np.cos(40 * t), tail_model=ExponentialDecay(rate=1.0),
                  abs_tol=1e-12, max_panels=12)
    assert math.isfinite(info.value.value)
    assert info.value.error_estimate > 0


def test_problem_validation():
    with pytest.raises(ValueError):
        QuadratureProblem(lambda t: t, abs_tol=0.0, tail_model=ExponentialDecay(1.0))
    with pytest.raises(ValueError):
        QuadratureProblem(lambda t: t, split=-1.0, tail_model=ExponentialDecay(1.0))
    with pytest.raises(ValueError):
        QuadratureProblem(lambda t: t)


def test_deterministic():
    p = QuadratureProblem(frullani(7.0), tail_model=ExponentialDecay(rate=1.0), abs_tol=1e-12)
    assert integrate_dt_over_t(p).value == integrate_dt_over_t(p).value


def test_relative_tolerance_for_large_values():
    # int_0^1 t^{0.1} dt/t = 10; scaled up it cannot meet a 1e-14 absolute target in doubles
    f = lambda t: 1e6 * t ** 0.1
    with pytest.raises(QuadratureError):
        integrate(f, upper=1.0, abs_tol=1e-14, small_t_power=0.1)
    res = integrate(f, upper=1.0, abs_tol=1e-14, rel_tol=1e-13, small_t_power=0.1)
    assert res.value == pytest.approx(1e7, rel=1e-13)


def test_tail_bound_covering_whole_range():
    # e^{-200 t} is below any sensible tolerance beyond t = 1
    res = integrate(lambda t: np.exp(-200 * t), lower=1.0, tail_model=ExponentialDecay(rate=200.0), abs_tol=1e-12)
    assert res.value == 0.0
    assert res.error_estimate <= 1e-12
