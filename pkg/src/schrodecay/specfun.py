"""Oscillator and magnetic-shell eigenfunctions on sampled grids.

The one-dimensional reference operator is -d^2/dx^2 + (omega^2/4) x^2 with
spectrum omega*(m + 1/2).  In two dimensions, the transverse gauge field
A(x) = (b/2)(-x2, x1) (curl A = b) produces shell levels |b|*(2k + 1),
where k = m + (|l| - sign(b) l)/2 counts the shell for the joint
eigenfunctions of the angular momentum operator (eigenvalue l) and the
isotropic oscillator with frequency |b|; each shell is infinitely
degenerate across (m, l) with equal k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .grids import GridSpec, WaveField


def hermite(m: int, x) -> np.ndarray:
    """Physicists' Hermite polynomial H_m by the three-term recurrence.

    Raises OverflowError if intermediate values leave float64 range
    (the recurrence is used unnormalized; callers needing large m should
    work with the normalized eigenfunctions instead).
    """
    if m < 0 or m != int(m):
        raise ValueError(f"degree must be a nonnegative integer, got {m}")
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.ones_like(x)
    if m == 0:
        return h_prev
    h = 2.0 * x
    for j in range(1, int(m)):
        h, h_prev = 2.0 * x * h - 2.0 * j * h_prev, h
    if not np.all(np.isfinite(h)):
        raise OverflowError(f"Hermite recurrence overflowed at degree {m}")
    return h


def laguerre(m: int, alpha: float, x) -> np.ndarray:
    """Generalized Laguerre polynomial L_m^(alpha) by recurrence."""
    if m < 0 or m != int(m):
        raise ValueError(f"degree must be a nonnegative integer, got {m}")
    if alpha <= -1:
        raise ValueError(f"alpha must exceed -1, got {alpha}")
    x = np.asarray(x, dtype=np.float64)
    l_prev = np.ones_like(x)
    if m == 0:
        return l_prev
    l = 1.0 + alpha - x
    for j in range(1, int(m)):
        l, l_prev = ((2 * j + 1 + alpha - x) * l - (j + alpha) * l_prev) / (j + 1), l
    if not np.all(np.isfinite(l)):
        raise OverflowError(f"Laguerre recurrence overflowed at degree {m}")
    return l


@dataclass(frozen=True)
class OscillatorSpectrumEntry:
    """One level of -d^2/dx^2 + (omega^2/4) x^2."""

    m: int
    omega: float
    energy: float

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("level index must be nonnegative")
        if not self.omega > 0:
            raise ValueError("omega must be positive")


@dataclass(frozen=True)
class LandauSpectrumEntry:
    """One level of the transverse-gauge magnetic Laplacian in 2D.

    k is the shell index; energy = |b| * (2k + 1).
    """

    m: int
    l: int
    b: float
    k: int
    energy: float

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("radial index must be nonnegative")
        if self.b == 0:
            raise ValueError("field strength must be nonzero")
        expected_k = self.m + (abs(self.l) - int(np.sign(self.b)) * self.l) // 2
        if self.k != expected_k:
            raise ValueError(f"shell index {self.k} != {expected_k} for (m,l,b)")


@dataclass(frozen=True)
class EigenfunctionSample:
    """A spectrum entry together with its grid samples."""

    entry: object
    field: WaveField
    l2norm: float


def oscillator_entry(m: int, omega: float) -> OscillatorSpectrumEntry:
    return OscillatorSpectrumEntry(m=m, omega=omega, energy=omega * (m + 0.5))


def landau_entry(m: int, l: int, b: float) -> LandauSpectrumEntry:
    k = m + (abs(l) - int(np.sign(b)) * l) // 2
    return LandauSpectrumEntry(m=m, l=l, b=b, k=k, energy=abs(b) * (2 * k + 1))


def oscillator_spectrum(omega: float, m_max: int) -> list:
    return [oscillator_entry(m, omega) for m in range(m_max + 1)]


def landau_spectrum(b: float, pairs) -> list:
    return [landau_entry(m, l, b) for (m, l) in pairs]


def _hermite_functions_normalized(m: int, y: np.ndarray) -> np.ndarray:
    """Unit-norm oscillator eigenfunctions of -d^2/dy^2 + y^2 (stable form)."""
    psi_prev = np.pi**-0.25 * np.exp(-0.5 * y * y)
    if m == 0:
        return psi_prev
    psi = np.sqrt(2.0) * y * psi_prev
    for j in range(1, m):
        psi, psi_prev = (
            np.sqrt(2.0 / (j + 1)) * y * psi - np.sqrt(j / (j + 1.0)) * psi_prev,
            psi,
        )
    return psi


def qho_eigenfunction(m: int, omega: float, grid: GridSpec) -> EigenfunctionSample:
    """Normalized m-th eigenfunction of -d^2/dx^2 + (omega^2/4) x^2 on a 1D grid.

    Uses the normalized two-term recurrence, so arbitrary m is reachable
    without the raw-polynomial overflow of ``hermite``.
    """
    if grid.dimension != 1:
        raise ValueError("oscillator eigenfunctions are one-dimensional")
    entry = oscillator_entry(m, omega)
    (x,) = grid.mesh()
    scale = np.sqrt(omega / 2.0)
    vals = np.sqrt(scale) * _hermite_functions_normalized(int(m), scale * x)
    fld = WaveField(grid, vals.astype(np.complex128), 0.0)
    return EigenfunctionSample(entry=entry, field=fld, l2norm=fld.norm())


def landau_eigenfunction(m: int, l: int, b: float, grid: GridSpec) -> EigenfunctionSample:
    """Normalized joint eigenfunction on a 2D grid.

    phi_{m,l} = N * (x1 + i sgn(l) x2)^{|l|} * L_m^{(|l|)}(|b| r^2 / 2)
                  * exp(-|b| r^2 / 4)

    with N chosen for unit continuum L2 norm.  It carries angular
    momentum l and magnetic energy |b|(2k + 1).
    """
    if grid.dimension != 2:
        raise ValueError("magnetic-shell eigenfunctions are two-dimensional")
    entry = landau_entry(m, l, b)
    x1, x2 = grid.mesh()
    r2 = x1 * x1 + x2 * x2
    la = abs(int(l))
    ab = abs(b)
    if l == 0:
        angular = np.ones_like(x1, dtype=np.complex128)
    else:
        angular = (x1 + 1j * np.sign(l) * x2) ** la
    log_norm = 0.5 * (
        (la + 1) * np.log(ab)
        - np.log(2.0 * np.pi)
        - la * np.log(2.0)
        + gammaln(m + 1)
        - gammaln(m + la + 1)
    )
    vals = (
        np.exp(log_norm)
        * angular
        * laguerre(int(m), float(la), ab * r2 / 2.0)
        * np.exp(-ab * r2 / 4.0)
    )
    fld = WaveField(grid, vals.astype(np.complex128), 0.0)
    return EigenfunctionSample(entry=entry, field=fld, l2norm=fld.norm())
