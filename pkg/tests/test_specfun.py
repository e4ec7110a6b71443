"""Polynomial recurrences, oscillator and Landau eigenfunctions."""

import math

import numpy as np
import pytest
import sympy

from schrodecay.engine import gradient, laplacian, magnetic_laplacian
from schrodecay.fields import make_uniform_magnetic
from schrodecay.grids import GridSpec
from schrodecay.specfun import (hermite, laguerre, landau_entry,
                                landau_eigenfunction, oscillator_entry,
                                qho_eigenfunction)


@pytest.mark.parametrize("m, x, expected", [
    (0, 3.7, 1.0),
    (1, 2.0, 4.0),
    (2, 0.0, -2.0),
])
def test_hermite_values(m, x, expected):
    assert hermite(m, x) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("m, alpha, x, expected", [
    (0, 2.0, 5.0, 1.0),
    (1, 0.0, 1.0, 0.0),
    (1, 2.0, 0.0, 3.0),
])
def test_laguerre_values(m, alpha, x, expected):
    assert laguerre(m, alpha, x) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("m", [3, 7, 12])
def test_hermite_against_symbolic(m):
    xs = sympy.Symbol("x")
    poly = sympy.hermite(m, xs)
    for x in (-1.3, 0.4, 2.1):
        exact = float(poly.subs(xs, sympy.Rational(x).limit_denominator(10**6)))
        assert hermite(m, x) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("m, alpha", [(3, 0.0), (5, 2.0), (8, 1.5)])
def test_laguerre_against_symbolic(m, alpha):
    xs = sympy.Symbol("x")
    poly = sympy.assoc_laguerre(m, sympy.Rational(alpha).limit_denominator(100), xs)
    for x in (0.3, 1.7, 6.0):
        exact = float(poly.subs(xs, sympy.Rational(x).limit_denominator(10**6)))
        assert laguerre(m, alpha, x) == pytest.approx(exact, rel=1e-10)


def test_polynomial_argument_errors():
    with pytest.raises(ValueError):
        hermite(-1, 0.0)
    with pytest.raises((ValueError, OverflowError)):
        hermite(2, math.inf)
    with pytest.raises(ValueError):
        laguerre(-2, 0.0, 1.0)
    with pytest.raises(ValueError):
        laguerre(2, -1.5, 1.0)  # alpha <= -1 breaks the recurrence
    with pytest.raises((ValueError, OverflowError)):
        laguerre(3, 0.0, math.nan)


def test_oscillator_entry_energies():
    assert oscillator_entry(0, 2.0).energy == pytest.approx(1.0)
    energies = [oscillator_entry(m, 1.0).energy for m in range(5)]
    assert energies == pytest.approx([0.5, 1.5, 2.5, 3.5, 4.5])
    assert all(np.diff(energies) > 0)
    with pytest.raises(ValueError):
        oscillator_entry(-1, 1.0)
    with pytest.raises(ValueError):
        oscillator_entry(0, 0.0)


def test_landau_entry_level_index():
    # level index folds the angular index only for spin against the field
    assert landau_entry(0, -1, 1.0).k == 1
    assert landau_entry(0, 1, 1.0).k == 0
    assert landau_entry(1, 2, 1.0).k == 1
    assert landau_entry(0, 2, -1.0).k == 2
    with pytest.raises(ValueError):
        landau_entry(0, 0, 0.0)
    with pytest.raises(ValueError):
        landau_entry(-1, 0, 1.0)


def test_landau_energy_spacing_matches_operator():
    # uniform-field levels are |b|-spaced starting at |b|; the eigen
    # residual test below ties the constants to the actual operator
    assert landau_entry(0, 0, 1.0).energy == pytest.approx(1.0)
    assert landau_entry(0, -1, 1.0).energy == pytest.approx(3.0)
    assert landau_entry(1, 2, 2.0).energy == pytest.approx(6.0)


def test_qho_ground_state_profile(grid1d):
    samp = qho_eigenfunction(0, 2.0, grid1d)
    xs = grid1d.mesh()[0]
    expected = np.exp(-xs ** 2 / 2.0)
    expected /= np.linalg.norm(expected) * grid1d.spacing ** 0.5
    np.testing.assert_allclose(samp.field.values.real, expected, atol=1e-12)
    assert samp.l2norm == pytest.approx(1.0, abs=1e-10)
    assert samp.entry.energy == pytest.approx(1.0)


def test_qho_first_excited_is_odd(grid1d):
    samp = qho_eigenfunction(1, 2.0, grid1d)
    mid = grid1d.points_per_dim // 2
    assert abs(samp.field.values[mid]) < 1e-14
    vals = samp.field.values
    np.testing.assert_allclose(vals[1:], -vals[1:][::-1], atol=1e-12)


@pytest.mark.parametrize("m", [0, 1, 4, 9])
def test_qho_parity(grid1d, m):
    vals = qho_eigenfunction(m, 1.0, grid1d).field.values
    sign = (-1.0) ** m
    np.testing.assert_array_equal(vals[1:], sign * vals[1:][::-1])


def test_qho_orthonormality(grid1d):
    h = grid1d.spacing
    basis = np.stack([qho_eigenfunction(m, 1.0, grid1d).field.values
                      for m in range(11)])
    gram = (basis.conj() @ basis.T) * h
    np.testing.assert_allclose(gram, np.eye(11), atol=1e-8)
    assert abs(gram[3, 0]) < 1e-10


@pytest.mark.parametrize("omega", [1.0, 2.0])
def test_qho_eigen_residual(grid1d, omega):
    r2 = grid1d.radius_sq()
    for m in range(11):
        samp = qho_eigenfunction(m, omega, grid1d)
        psi = samp.field
        h_psi = -laplacian(psi).values + (omega ** 2 / 4.0) * r2 * psi.values
        res = np.linalg.norm(h_psi - samp.entry.energy * psi.values)
        assert res / np.linalg.norm(psi.values) < 1e-8


def test_qho_requires_1d(grid2d):
    with pytest.raises(ValueError):
        qho_eigenfunction(0, 1.0, grid2d)


def test_qho_decay_rate_quarter_omega(grid1d):
    from schrodecay.decay import fit_rate
    # auto window handles low excitation
    for m, omega in ((0, 1.0), (5, 2.0)):
        rep = fit_rate(qho_eigenfunction(m, omega, grid1d).field)
        assert rep.rate == pytest.approx(omega / 4.0, rel=0.01)
    # higher states need the window past the classical turning point,
    # where the polynomial envelope stops bending the log profile
    for omega in (1.0, 2.0):
        for m in range(11):
            x_t = 2.0 * math.sqrt((m + 0.5) / omega)
            win = (x_t + 4.5 / math.sqrt(omega), x_t + 9.0 / math.sqrt(omega))
            rep = fit_rate(qho_eigenfunction(m, omega, grid1d).field, window=win)
            assert rep.rate == pytest.approx(omega / 4.0, rel=0.01)


def test_landau_ground_state_radial_gaussian(grid2d):
    samp = landau_eigenfunction(0, 0, 1.0, grid2d)
    r2 = grid2d.radius_sq()
    expected = np.exp(-r2 / 4.0)
    expected /= np.linalg.norm(expected) * grid2d.spacing
    np.testing.assert_allclose(samp.field.values, expected, atol=1e-12)
    assert samp.l2norm == pytest.approx(1.0, abs=1e-10)


def test_landau_eigen_residual(grid2d):
    mag = make_uniform_magnetic(2, 1.0)
    for m in (0, 1):
        for l in range(-2, 3):
            samp = landau_eigenfunction(m, l, 1.0, grid2d)
            phi = samp.field
            h_phi = -magnetic_laplacian(phi, mag).values
            res = np.linalg.norm(h_phi - samp.entry.energy * phi.values)
            assert res / np.linalg.norm(phi.values) < 1e-8


def test_landau_angular_momentum_eigenvalue(grid2d):
    x1, x2 = grid2d.mesh()
    for m, l in ((0, 2), (1, -1)):
        phi = landau_eigenfunction(m, l, 1.0, grid2d).field
        g1, g2 = gradient(phi)
        l_phi = -1j * (x1 * g2 - x2 * g1)
        res = np.linalg.norm(l_phi - l * phi.values)
        assert res / np.linalg.norm(phi.values) < 1e-8


def test_landau_rotation_phase(grid2d):
    from schrodecay.resample import sample_rotated
    phi = landau_eigenfunction(1, 2, 1.0, grid2d).field
    angle = 0.7
    rotated = sample_rotated(phi.values, grid2d, -angle)
    np.testing.assert_allclose(
        rotated, np.exp(-1j * 2 * angle) * phi.values, atol=1e-8)
    np.testing.assert_allclose(np.abs(rotated), np.abs(phi.values), atol=1e-8)


def test_landau_requires_2d(grid1d):
    with pytest.raises(ValueError):
        landau_eigenfunction(0, 0, 1.0, grid1d)
