"""Weighted norms, rate fitting, Fourier duality, threshold verdicts."""

import dataclasses
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schrodecay.decay import (classify, duality_product, fit_rate,
                              fourier_decay, threshold_value, weighted_norm)
from schrodecay.grids import GridSpec, field_from_callable
from schrodecay.specfun import qho_eigenfunction


def gaussian_field(grid, c):
    return field_from_callable(lambda xs: np.exp(-c * sum(x * x for x in xs)), grid)


def test_weighted_norm_analytic_value(grid1d):
    f = gaussian_field(grid1d, 1.0)
    assert weighted_norm(f, 2.0) == pytest.approx(math.pi ** 0.25, rel=1e-10)


def test_weighted_norm_divergent_marker(grid1d):
    f = gaussian_field(grid1d, 1.0)
    assert weighted_norm(f, 1.0) == math.inf


def test_weighted_norm_oscillator_split(grid1d):
    psi = qho_eigenfunction(0, 1.0, grid1d).field
    assert math.isfinite(weighted_norm(psi, 4.5))
    assert weighted_norm(psi, 3.5) == math.inf


def test_weighted_norm_monotone_in_inverse_alpha(grid1d):
    f = gaussian_field(grid1d, 1.0)
    alphas = [1.5, 2.0, 3.0, 8.0]
    vals = [weighted_norm(f, a) for a in alphas]
    assert all(math.isfinite(v) for v in vals)
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_weighted_norm_profile(grid1d):
    f = gaussian_field(grid1d, 1.0)
    value, profile = weighted_norm(f, 2.0, return_profile=True)
    assert math.isfinite(value)
    assert profile.ndim == 1 and len(profile) > 100


def test_fit_rate_exact_gaussian(grid1d):
    rep = fit_rate(gaussian_field(grid1d, 3.0))
    assert rep.rate == pytest.approx(3.0, abs=1e-6)
    assert rep.poly_correction == pytest.approx(0.0, abs=1e-6)
    assert rep.trusted()


def test_fit_rate_excited_state(grid1d):
    rep = fit_rate(qho_eigenfunction(5, 2.0, grid1d).field)
    assert rep.rate == pytest.approx(0.5, rel=0.01)
    assert rep.poly_correction == pytest.approx(5.0, abs=1.0)


def test_fit_rate_endpoint_counterexample(grid1d):
    from schrodecay.closedform import CounterexampleParams, counterexample_field
    par = CounterexampleParams(1.0, 1, 1.0)
    fld = counterexample_field(par, grid1d, 0.5)
    rep = fit_rate(fld)
    assert rep.rate == pytest.approx(1.0 / (8.0 * math.sin(1.0)), rel=0.01)
    assert rep.poly_correction == pytest.approx(-2.0, abs=0.5)


def test_fit_rate_too_few_shells():
    g = GridSpec(1, 4.0, 64)
    rep = fit_rate(gaussian_field(g, 1.0), window=(3.9, 4.0))
    assert rep.rate == 0.0 and rep.floor_hit
    assert rep.fit_residual == math.inf


@settings(max_examples=25, deadline=None)
@given(c=st.floats(0.1, 5.0), p=st.floats(-6.0, 6.0))
def test_fit_rate_self_consistency(c, p):
    g = GridSpec(1, 16.0, 1024)

    def model(xs):
        r = np.maximum(np.abs(xs[0]), 1e-12)
        return r ** p * np.exp(-c * r * r)

    hi = min(12.0, math.sqrt(270.0 / c))
    rep = fit_rate(field_from_callable(model, g), window=(2.0, hi))
    assert rep.rate == pytest.approx(c, rel=1e-6, abs=1e-9)
    assert rep.poly_correction == pytest.approx(p, rel=1e-6, abs=1e-6)


def test_fourier_self_duality(grid1d):
    f = gaussian_field(grid1d, 0.25)
    prod = duality_product(fit_rate(f), fourier_decay(f))
    assert prod == pytest.approx(4.0, rel=1e-4)


def test_fourier_duality_monotone(grid1d):
    # widening in space narrows the transform: the dual decay scale
    # 4/rate shrinks monotonically
    narrow = fourier_decay(gaussian_field(grid1d, 1.0))
    wide = fourier_decay(gaussian_field(grid1d, 0.25))
    assert 4.0 / wide.rate < 4.0 / narrow.rate


def test_fourier_bump_untrusted(grid1d):
    def bump(xs):
        inside = np.abs(xs[0]) < 1.0
        arg = np.where(inside, 1.0 - xs[0] ** 2, 1.0)
        return np.where(inside, np.exp(-1.0 / arg), 0.0)

    rep = fourier_decay(field_from_callable(bump, grid1d))
    assert not rep.trusted()


def test_duality_product_nonpositive_rate(grid1d):
    rep = fit_rate(gaussian_field(grid1d, 1.0))
    bad = dataclasses.replace(rep, rate=-0.5)
    assert duality_product(bad, rep) == math.inf


def test_threshold_values():
    assert threshold_value("free_4T", {"T": 1.0}) == 4.0
    assert threshold_value("harmonic_4sin", {"omega": 1.0, "T": 1.0}) == \
        pytest.approx(4.0 * math.sin(1.0), rel=1e-14)
    assert threshold_value("magnetic_4sin", {"b": -1.0, "T": 0.5}) == \
        pytest.approx(4.0 * math.sin(0.5), rel=1e-14)
    assert threshold_value("repulsive_4sinh", {"nu": 0.5, "T": 1.0}) == \
        pytest.approx(4.0 * math.sinh(0.5) / 0.5, rel=1e-14)


@pytest.mark.parametrize("nu", [1e-6, 1e-8])
def test_repulsive_threshold_small_coefficient_limit(nu):
    for T in (0.25, 1.0):
        assert abs(threshold_value("repulsive_4sinh", {"nu": nu, "T": T})
                   - 4.0 * T) <= 1e-10


def test_threshold_guards():
    with pytest.raises(ValueError, match="guard violated: omega"):
        threshold_value("harmonic_4sin", {"omega": 2.0, "T": 1.0})
    with pytest.raises(ValueError, match="guard violated: nu"):
        threshold_value("repulsive_4sinh", {"nu": 2.0, "T": 0.5})
    with pytest.raises(ValueError, match="guard violated: b"):
        threshold_value("magnetic_4sin", {"b": 4.0, "T": 0.5})
    with pytest.raises(ValueError, match="unknown threshold kind"):
        threshold_value("quartic", {"T": 1.0})
    with pytest.raises(ValueError):
        threshold_value("free_4T", {"T": -1.0})


def test_classify_examples():
    v = classify(4.0, 4.0, "free_4T", {"T": 1.0})
    assert v.classification == "at_threshold" and v.product == 4.0

    a = 4.0 * math.sin(1.0)
    v = classify(a, a, "harmonic_4sin", {"omega": 1.0, "T": 1.0})
    assert v.classification == "at_threshold"

    v = classify(4.0, 4.0, "harmonic_4sin", {"omega": 1.0, "T": 1.0})
    assert v.classification == "above_threshold"
    assert v.threshold == pytest.approx(4.0 * math.sin(1.0))

    v = classify(1.0, 1.0, "free_4T", {"T": 1.0})
    assert v.classification == "below_threshold"

    with pytest.raises(ValueError):
        classify(-1.0, 4.0, "free_4T", {"T": 1.0})


def test_hardy_free_gaussian_product(grid1d):
    # exact free evolution of a Gaussian, rates read back by the fitter;
    # the scale product can never undercut the flat-case threshold
    mu0, T = 1.0, 0.5
    u0 = gaussian_field(grid1d, mu0)
    mu_T = mu0 / (1.0 + 16.0 * mu0 ** 2 * T ** 2)

    def evolved(xs):
        mu = mu0 / (1.0 - 4.0j * mu0 * T)
        return (1.0 - 4.0j * mu0 * T) ** -0.5 * np.exp(-mu * xs[0] ** 2)

    uT = field_from_callable(evolved, grid1d, time=T)
    r0 = fit_rate(u0).rate
    rT = fit_rate(uT).rate
    assert rT == pytest.approx(mu_T, rel=1e-6)
    product = 1.0 / math.sqrt(r0 * rT)
    assert product >= 4.0 * T
    assert product == pytest.approx(
        4.0 * T * math.sqrt(1.0 + 1.0 / (16.0 * mu0 ** 2 * T ** 2)), rel=1e-6)


def test_report_serializes():
    g = GridSpec(1, 10.0, 256)
    rep = fit_rate(gaussian_field(g, 1.0))
    blob = json.loads(json.dumps(dataclasses.asdict(rep)))
    assert set(blob) == {"rate", "poly_correction", "fit_window",
                         "fit_residual", "floor_hit"}
    verdict = classify(4.0, 4.0, "free_4T", {"T": 1.0})
    row = dataclasses.asdict(verdict)
    assert set(row) == {"product", "threshold", "kind", "classification"}
