"""Rectangle filter construction: frozen degrees, bands, and conditioning."""

import math
from types import SimpleNamespace

import numpy as np
import pytest

from eigensampler import (
    DegreeOverflowError,
    RectanglePolynomial,
    ValidationError,
    build_rectangle_polynomial,
    coefficient_l1,
    eval_poly,
)
from eigensampler.polyfilter import (
    band_report,
    constant_one_polynomial,
    eval_monomial_extended,
)

XI12 = 1 / 12

# minimal certified degrees, frozen from the deterministic construction
FROZEN_DEGREES = {
    (0.0, 0.25, XI12): 18,
    (0.25, 0.25, XI12): 20,
    (0.5, 0.25, 0.05): 22,
    (0.5, 0.125, XI12): 34,
    (0.25, 0.125, XI12): 44,
    (0.25, 0.125, 0.05): 54,
    (0.0, 0.125, 0.05): 64,
}


@pytest.mark.parametrize("params,degree", sorted(FROZEN_DEGREES.items()))
def test_minimal_degree_frozen(params, degree):
    P = build_rectangle_polynomial(*params)
    assert P.degree == degree
    assert P.verified
    assert len(P.coeffs) == degree + 1


def test_frozen_band_profile():
    """Measured band extremes of the tau=0.25, theta=0.25, xi=1/12 filter."""
    P = build_rectangle_polynomial(0.25, 0.25, XI12)
    rep = band_report(P)
    assert rep["low_min"] == pytest.approx(0.9494595314641999, abs=1e-12)
    assert rep["high_max"] == pytest.approx(0.0790982769453547, abs=1e-12)
    assert rep["max_abs"] == pytest.approx(0.9794325714614912, abs=1e-12)
    assert coefficient_l1(P) == pytest.approx(959691.4966047746, rel=1e-12)


@pytest.mark.parametrize("params", sorted(FROZEN_DEGREES))
def test_bands_hold_on_finer_grid(params):
    # re-verification at 10x the construction resolution
    tau, theta, xi = params
    P = build_rectangle_polynomial(*params)
    rep = band_report(P, grid_points=1_000_001)
    assert rep["max_abs"] <= 1 + 1e-9
    assert rep["min_val"] >= -1e-9
    assert rep["low_min"] >= 1 - xi - 1e-9
    assert rep["high_max"] <= xi + 1e-9


@pytest.mark.parametrize("params", sorted(FROZEN_DEGREES))
def test_coefficient_l1_within_sherstov_bound(params):
    P = build_rectangle_polynomial(*params)
    assert math.log(coefficient_l1(P)) <= P.degree * math.log(4.0)


def test_degree_monotone_in_theta_and_xi():
    taus = [0.0, 0.25, 0.5]
    thetas = [0.25, 0.1875, 0.125]
    xis = [XI12, 0.05, 0.02]
    for tau in taus:
        for xi in xis:
            degs = [build_rectangle_polynomial(tau, th, xi).degree for th in thetas]
            assert degs == sorted(degs)
        for th in thetas:
            degs = [build_rectangle_polynomial(tau, th, xi).degree for xi in xis]
            assert degs == sorted(degs)


def test_low_degree_endpoint_case():
    # tau=0, theta=1, xi=0.5 leans on the whole interval
    P = build_rectangle_polynomial(0.0, 1.0, 0.5)
    assert P.eval_stable(0.0) >= 0.5
    assert P.eval_stable(1.0) <= 0.5


def test_eval_poly_horner_examples():
    T2 = SimpleNamespace(coeffs=np.array([-1.0, 0.0, 2.0]))
    assert eval_poly(T2, 1.0) == pytest.approx(1.0)
    assert eval_poly(T2, 0.0) == pytest.approx(-1.0)
    assert eval_poly(T2, 0.5) == pytest.approx(-0.5)
    assert coefficient_l1(T2) == pytest.approx(3.0)


def test_constant_polynomial():
    C = constant_one_polynomial(0.9, 0.3, XI12)
    assert C.degree == 0
    assert coefficient_l1(C) == pytest.approx(1.0)
    xs = np.linspace(-1, 1, 7)
    assert np.allclose(C.eval_stable(xs), 1.0)
    assert np.allclose(eval_poly(C, xs), 1.0)


@pytest.mark.parametrize(
    "params",
    [p for p in sorted(FROZEN_DEGREES) if FROZEN_DEGREES[p] <= 60],
)
def test_chebyshev_monomial_round_trip(params):
    """Basis conversion is exact: both forms agree on the verification grid."""
    P = build_rectangle_polynomial(*params)
    xs = np.linspace(-1.0, 1.0, 2001)
    stable = P.eval_stable(xs)
    mono = eval_monomial_extended(P, xs)
    assert np.max(np.abs(stable - mono)) <= 1e-7


def test_double_precision_horner_degrades_gracefully():
    # the double-precision monomial path carries l1 * machine-eps noise; the
    # mild filters stay well inside 1e-7 while sharp ones do not
    P = build_rectangle_polynomial(0.0, 0.25, XI12)
    xs = np.linspace(-1.0, 1.0, 501)
    assert np.max(np.abs(P.eval_stable(xs) - eval_poly(P, xs))) <= 1e-7


def test_construction_is_cached():
    a = build_rectangle_polynomial(0.25, 0.25, XI12)
    b = build_rectangle_polynomial(0.25, 0.25, XI12)
    assert a is b


def test_polynomial_is_immutable():
    P = build_rectangle_polynomial(0.0, 0.25, XI12)
    with pytest.raises((ValueError, AttributeError)):
        P.coeffs[0] = 99.0


@pytest.mark.parametrize(
    "tau,theta,xi",
    [
        (-0.1, 0.25, XI12),
        (1.0, 0.25, XI12),
        (0.25, 0.0, XI12),
        (0.25, -0.5, XI12),
        (0.25, 0.25, 0.0),
        (0.25, 0.25, 1.5),
        (0.5, 0.6, XI12),  # tau + theta beyond 1
    ],
)
def test_parameter_validation(tau, theta, xi):
    with pytest.raises(ValidationError):
        build_rectangle_polynomial(tau, theta, xi)


def test_degree_overflow_reports_best_error():
    with pytest.raises(DegreeOverflowError) as info:
        build_rectangle_polynomial(0.25, 0.125, 1 / 96, degree_cap=40)
    err = info.value
    assert err.degree_cap == 40
    assert 0 < err.best_error < 1


def test_metadata_round_trip():
    P = build_rectangle_polynomial(0.5, 0.25, 0.05)
    assert (P.tau, P.theta, P.xi) == (0.5, 0.25, 0.05)
    assert P.grid_points == 100_001
    assert isinstance(P, RectanglePolynomial)
