"""Spectral operators, split-step propagation, exact-flow oracles."""

import math

import numpy as np
import pytest

from schrodecay.engine import (EquationSpec, GuardError, default_grid,
                               free_oracle, gradient, harmonic_oracle,
                               laplacian, magnetic_laplacian, magnetic_oracle,
                               propagate, residual)
from schrodecay.fields import (ElectricPotential, MagneticPotential,
                               make_uniform_magnetic)
from schrodecay.grids import GridSpec, WaveField, field_from_callable
from schrodecay.specfun import landau_eigenfunction, qho_eigenfunction

OSC = EquationSpec(ElectricPotential(quadratic_coeff=0.25))
FREE = EquationSpec(ElectricPotential())


def test_default_grids():
    assert default_grid(1) == GridSpec(1, 20.0, 1024)
    assert default_grid(2) == GridSpec(2, 12.0, 256)


def test_laplacian_fourier_mode(grid1d):
    k = 2.0 * math.pi
    f = field_from_callable(lambda xs: np.exp(1j * k * xs[0]), grid1d)
    out = laplacian(f)
    np.testing.assert_allclose(out.values, -k * k * f.values, atol=1e-10)


def test_laplacian_gaussian(grid1d):
    f = field_from_callable(lambda xs: np.exp(-xs[0] ** 2), grid1d)
    expected = (4.0 * grid1d.mesh()[0] ** 2 - 2.0) * f.values
    np.testing.assert_allclose(laplacian(f).values, expected, atol=1e-10)


def test_laplacian_constant(grid1d):
    f = field_from_callable(lambda xs: np.ones_like(xs[0]), grid1d)
    np.testing.assert_allclose(laplacian(f).values, 0.0, atol=1e-10)


def test_gradient_mode(grid1d):
    k = math.pi
    f = field_from_callable(lambda xs: np.exp(1j * k * xs[0]), grid1d)
    (g,) = gradient(f)
    np.testing.assert_allclose(g, 1j * k * f.values, atol=1e-10)


def test_magnetic_laplacian_zero_potential(grid2d):
    f = field_from_callable(
        lambda xs: np.exp(-(xs[0] ** 2 + xs[1] ** 2) / 2.0), grid2d)
    out = magnetic_laplacian(f, MagneticPotential())
    np.testing.assert_allclose(out.values, laplacian(f).values, atol=1e-12)


def test_magnetic_laplacian_landau_eigenvalue(grid2d):
    mag = make_uniform_magnetic(2, 1.0)
    samp = landau_eigenfunction(0, 0, 1.0, grid2d)
    lhs = -magnetic_laplacian(samp.field, mag).values
    res = np.linalg.norm(lhs - samp.entry.energy * samp.field.values)
    assert res / np.linalg.norm(samp.field.values) < 1e-8


def test_magnetic_laplacian_gauge_covariance(grid2d):
    x1, x2 = grid2d.mesh()
    r2 = x1 ** 2 + x2 ** 2
    chi = 0.5 * np.exp(-r2)

    def swirl(xs, t):
        y1, y2 = xs
        g = np.exp(-(y1 ** 2 + y2 ** 2))
        return np.stack([-y2 * g, y1 * g])

    def swirl_plus_grad(xs, t):
        y1, y2 = xs
        r2l = y1 ** 2 + y2 ** 2
        base = swirl(xs, t)
        gchi = -1.0 * np.exp(-r2l) * np.stack([y1, y2])
        return base + gchi

    u = field_from_callable(
        lambda xs: (1 + 0.3 * xs[0]) * np.exp(-(xs[0] ** 2 + xs[1] ** 2) / 2.0),
        grid2d)
    lhs = magnetic_laplacian(WaveField(grid2d, np.exp(1j * chi) * u.values, 0.0),
                             MagneticPotential(a_fn=swirl_plus_grad)).values
    rhs = np.exp(1j * chi) * magnetic_laplacian(
        u, MagneticPotential(a_fn=swirl)).values
    scale = np.max(np.abs(rhs))
    assert np.max(np.abs(lhs - rhs)) / scale < 1e-8


def test_sign_convention_free_multiplier(grid1d):
    k = 2.0 * math.pi
    f = field_from_callable(lambda xs: np.exp(1j * k * xs[0]), grid1d)
    out = free_oracle(f, 0.3)
    expected = np.exp(1j * k * k * 0.3) * f.values
    np.testing.assert_allclose(out.values, expected, atol=1e-10)
    assert out.time == pytest.approx(0.3)


def test_propagate_standing_wave_phase(grid1d):
    samp = qho_eigenfunction(0, 1.0, grid1d)
    out = propagate(samp.field, OSC, 0.4, 1e-3)
    expected = np.exp(0.5j * 0.4) * samp.field.values
    assert np.max(np.abs(out.values - expected)) < 1e-6
    assert np.max(np.abs(np.abs(out.values) - np.abs(samp.field.values))) < 1e-8


def test_propagate_free_matches_oracle(grid1d):
    f = field_from_callable(lambda xs: np.exp(-0.5 * xs[0] ** 2) * (1 + 0.2 * xs[0]),
                            grid1d)
    out = propagate(f, FREE, 0.3, 1e-3)
    exact = free_oracle(f, 0.3)
    assert np.max(np.abs(out.values - exact.values)) < 1e-10


def test_propagate_matches_harmonic_pullback(grid1d):
    f = field_from_callable(lambda xs: np.exp(-0.5 * xs[0] ** 2) * (1 + 0.1 * xs[0]),
                            grid1d)
    out = propagate(f, OSC, 0.3, 1.6e-3)
    exact = harmonic_oracle(f, 1.0, 0.3)
    assert np.max(np.abs(out.values - exact.values)) < 1e-5


def test_propagate_strang_order(grid1d):
    f = field_from_callable(lambda xs: np.exp(-0.5 * xs[0] ** 2) * (1 + 0.1 * xs[0]),
                            grid1d)
    exact = harmonic_oracle(f, 1.0, 0.3)
    errs = []
    for dt in (1.6e-3, 8e-4):
        out = propagate(f, OSC, 0.3, dt)
        errs.append(np.max(np.abs(out.values - exact.values)))
    assert 3.3 < errs[0] / errs[1] < 4.7


def test_propagate_dissipation_sign(grid1d):
    f = field_from_callable(lambda xs: np.exp(-0.5 * xs[0] ** 2), grid1d)
    sink = EquationSpec(ElectricPotential(
        v2=lambda xs, t: -0.4j * np.exp(-xs[0] ** 2)))
    norms = [propagate(f, sink, t, 1.5e-3).norm() for t in (0.3, 0.6, 1.0)]
    assert norms[0] > f.norm() and norms[1] > norms[0] and norms[2] > norms[1]
    source = EquationSpec(ElectricPotential(
        v2=lambda xs, t: +0.4j * np.exp(-xs[0] ** 2)))
    assert propagate(f, source, 0.5, 1.5e-3).norm() < f.norm()


def test_propagate_unitary_for_real_potentials(grid1d):
    samp = qho_eigenfunction(2, 1.0, grid1d)
    out = propagate(samp.field, OSC, 1.0, 1.5e-3)
    assert abs(out.norm() - samp.field.norm()) < 1e-10


def test_propagate_guards(grid1d, grid2d):
    f = field_from_callable(lambda xs: np.exp(-0.5 * xs[0] ** 2), grid1d)
    with pytest.raises(ValueError, match="dt must be positive"):
        propagate(f, FREE, 0.5, -1e-3)
    with pytest.raises(GuardError, match="bandwidth"):
        propagate(f, FREE, 0.5, 0.1)
    stiff = EquationSpec(ElectricPotential(v1=lambda xs: 1e4 * np.exp(-xs[0] ** 2)))
    with pytest.raises(GuardError, match="resolve the potential"):
        propagate(f, stiff, 0.5, 1e-3)
    f2 = field_from_callable(
        lambda xs: np.exp(-(xs[0] ** 2 + xs[1] ** 2) / 2.0), grid2d)
    mag_eq = EquationSpec(ElectricPotential(), make_uniform_magnetic(2, 1.0))
    with pytest.raises(GuardError, match="drift guard"):
        propagate(f2, mag_eq, 0.5, 5e-3)
    windowed = EquationSpec(ElectricPotential(), window=(0.0, 0.25))
    with pytest.raises(ValueError, match="outside equation window"):
        propagate(f, windowed, 0.5, 1e-3)


def test_propagate_boundary_guard():
    g = GridSpec(1, 6.0, 128)
    f = field_from_callable(lambda xs: np.exp(1j * 4.0 * xs[0] - xs[0] ** 2), g)
    with pytest.raises(GuardError, match="enlarge the box"):
        propagate(f, FREE, 1.0, 5e-3)


def test_harmonic_oracle_standing_waves(grid1d):
    for m, omega in ((0, 1.0), (3, 1.0)):
        samp = qho_eigenfunction(m, omega, grid1d)
        out = harmonic_oracle(samp.field, omega, 0.45)
        expected = np.exp(1j * samp.entry.energy * 0.45) * samp.field.values
        assert np.max(np.abs(out.values - expected)) < 1e-8


def test_harmonic_oracle_identity_at_zero(gaussian1d):
    out = harmonic_oracle(gaussian1d, 1.0, 0.0)
    np.testing.assert_allclose(out.values, gaussian1d.values, atol=1e-12)


def test_harmonic_oracle_guards(grid1d, gaussian1d):
    with pytest.raises(ValueError, match="below pi/2"):
        harmonic_oracle(gaussian1d, 2.0, 1.0)
    with pytest.raises(ValueError, match="time 0"):
        harmonic_oracle(WaveField(grid1d, gaussian1d.values, 0.3), 1.0, 0.1)
    with pytest.raises(ValueError, match="positive"):
        harmonic_oracle(gaussian1d, -1.0, 0.1)


def test_magnetic_oracle_standing_waves(grid2d):
    for m, l, tol in ((0, 0, 1e-7), (1, -1, 1e-6)):
        samp = landau_eigenfunction(m, l, 1.0, grid2d)
        out = magnetic_oracle(samp.field, 1.0, 0.4)
        expected = np.exp(1j * samp.entry.energy * 0.4) * samp.field.values
        assert np.max(np.abs(out.values - expected)) < tol


def test_magnetic_oracle_identity_and_radial(grid2d):
    samp = landau_eigenfunction(0, 0, 1.0, grid2d)
    out0 = magnetic_oracle(samp.field, 1.0, 0.0)
    np.testing.assert_allclose(out0.values, samp.field.values, atol=1e-12)
    out = magnetic_oracle(samp.field, 1.0, 0.35)
    well = harmonic_oracle(samp.field, 1.0, 0.35)
    np.testing.assert_allclose(np.abs(out.values), np.abs(well.values),
                               atol=1e-10)


def test_magnetic_oracle_guards(grid1d, gaussian1d, grid2d):
    with pytest.raises(ValueError, match="two-dimensional"):
        magnetic_oracle(gaussian1d, 1.0, 0.1)
    f2 = field_from_callable(
        lambda xs: np.exp(-(xs[0] ** 2 + xs[1] ** 2) / 2.0), grid2d)
    with pytest.raises(ValueError, match="nonzero"):
        magnetic_oracle(f2, 0.0, 0.1)


def test_residual_standing_wave(grid1d):
    omega = 1.0
    norm = (omega / (2.0 * math.pi)) ** 0.25

    def solution(xs, t):
        return norm * np.exp(-omega * xs[0] ** 2 / 4.0 + 0.5j * omega * t)

    assert residual(solution, OSC, grid1d, 0.2) < 1e-8
    wrong = EquationSpec(ElectricPotential(quadratic_coeff=-0.25))
    assert residual(solution, wrong, grid1d, 0.2) > 1e-2


def test_residual_endpoint_counterexample(grid1d):
    from schrodecay.closedform import (CounterexampleParams,
                                       counterexample_equation,
                                       counterexample_u)
    par = CounterexampleParams(1.0, 1, 1.0, phase_reading="quadratic",
                               orientation=-1)
    eq = counterexample_equation(par)

    def solution(xs, t):
        return counterexample_u(xs, t, par)

    assert residual(solution, eq, grid1d, 0.2) < 1e-6
