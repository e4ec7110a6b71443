"""Spectral operators, the split-step propagator, and exact evolution oracles.

Sign convention (used consistently across the package): the equation is

    i du/dt - Lap_A u + V(x,t) u + quadratic(t) |x|^2 u + ... = 0,

equivalently du/dt = -i Lap_A u + i (V + quadratic |x|^2 + E.x + k) u, so a
standing wave built from an eigenpair (E_m, psi_m) of -d^2/dx^2 + (w^2/4)x^2
evolves with phase e^{+i E_m t}, the free Fourier multiplier is
e^{+i |xi|^2 t}, and a potential with negative imaginary part makes the L2
norm grow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .fields import ElectricPotential, MagneticPotential
from .grids import GridSpec, WaveField
from .resample import sample_rotated, sample_scaled_fourier

BOUNDARY_GUARD = 1e-6


class GuardError(RuntimeError):
    """A stability or adequacy guard failed."""


@dataclass
class EquationSpec:
    electric: ElectricPotential
    magnetic: Optional[MagneticPotential] = None
    window: tuple = (-math.inf, math.inf)

    def __post_init__(self):
        t0, t1 = self.window
        if not t0 < t1:
            raise ValueError(f"window must be an interval, got {self.window}")
        if self.electric is None:
            self.electric = ElectricPotential()

    def has_magnetic(self) -> bool:
        return self.magnetic is not None and not self.magnetic.is_zero()

    def check_time(self, t: float):
        t0, t1 = self.window
        if not (t0 - 1e-12 <= t <= t1 + 1e-12):
            raise ValueError(f"time {t} outside equation window {self.window}")


def default_grid(n: int) -> GridSpec:
    """Desk-scale grids sized so acceptance fields vanish at the boundary."""
    if n == 1:
        return GridSpec(1, 20.0, 1024)
    if n == 2:
        return GridSpec(2, 12.0, 256)
    raise ValueError(f"no default grid for dimension {n}")


def _ksq(grid: GridSpec) -> np.ndarray:
    return sum(k * k for k in grid.wavenumbers())


def laplacian(fld: WaveField) -> WaveField:
    """Fourier-multiplier Laplacian (exact for band-limited fields)."""
    out = np.fft.ifftn(-_ksq(fld.grid) * np.fft.fftn(fld.values))
    return fld.with_values(out)


def gradient(fld: WaveField) -> np.ndarray:
    """Spectral gradient, stacked with the component axis first."""
    vhat = np.fft.fftn(fld.values)
    ks = fld.grid.wavenumbers()
    return np.stack([np.fft.ifftn(1j * k * vhat) for k in ks])


def _spectral_div(stacked: np.ndarray, grid: GridSpec) -> np.ndarray:
    ks = grid.wavenumbers()
    out = np.zeros(grid.shape, dtype=np.complex128)
    for j in range(grid.dimension):
        out += np.fft.ifftn(1j * ks[j] * np.fft.fftn(stacked[j]))
    return out


def magnetic_laplacian(fld: WaveField, mag) -> WaveField:
    """Lap_A u = Lap u - 2i A.grad(u) - i div(A) u - |A|^2 u."""
    if isinstance(mag, MagneticPotential):
        a = mag.total_a(fld.grid.mesh(), fld.time)
    else:
        a = np.asarray(mag)
    if a.shape[0] != fld.grid.dimension:
        raise ValueError("vector potential has wrong component count")
    vhat = np.fft.fftn(fld.values)
    ks = fld.grid.wavenumbers()
    lap = np.fft.ifftn(-_ksq(fld.grid) * vhat)
    a_grad = np.zeros_like(fld.values)
    for j in range(fld.grid.dimension):
        a_grad += a[j] * np.fft.ifftn(1j * ks[j] * vhat)
    div_a = _spectral_div(a.astype(np.complex128), fld.grid)
    asq = np.sum(np.abs(a) ** 2, axis=0)
    out = lap - 2j * a_grad - 1j * div_a * fld.values - asq * fld.values
    return fld.with_values(out)


def _potential_multiplier(eq: EquationSpec, grid: GridSpec, t: float) -> np.ndarray:
    return eq.electric.total(grid.mesh(), t)


def _kinetic_rhs(values: np.ndarray, grid: GridSpec, a: np.ndarray, div_a, asq):
    """Right-hand side of du/dt = -i Lap_A u, A frozen."""
    vhat = np.fft.fftn(values)
    lap = np.fft.ifftn(-_ksq(grid) * vhat)
    if a is None:
        return -1j * lap
    ks = grid.wavenumbers()
    a_grad = np.zeros_like(values)
    for j in range(grid.dimension):
        a_grad += a[j] * np.fft.ifftn(1j * ks[j] * vhat)
    return -1j * lap - 2.0 * a_grad - div_a * values + 1j * asq * values


def propagate(fld: WaveField, eq: EquationSpec, t_target: float, dt: float) -> WaveField:
    """Strang split-step integration of the equation up to t_target.

    Pointwise potential half-steps exp(+i dt/2 V_total) sandwich the
    kinetic step; with a vector potential the kinetic flow does not
    diagonalize in either representation and is integrated by RK4
    substeps sized to the spectral radius of the Laplacian.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    eq.check_time(fld.time)
    eq.check_time(t_target)
    total = t_target - fld.time
    if abs(total) < 1e-15:
        return fld.copy()
    nstep = max(1, int(math.ceil(abs(total) / dt - 1e-12)))
    h = total / nstep
    grid = fld.grid
    kmax_sq = grid.dimension * grid.kmax() ** 2
    if abs(h) * kmax_sq > 4.0 * math.pi:
        raise GuardError(
            f"dt={abs(h):.3g} does not resolve the grid bandwidth "
            f"(dt*kmax^2 = {abs(h) * kmax_sq:.3g} > 4pi); refine dt"
        )
    vmax = max(
        float(np.max(np.abs(_potential_multiplier(eq, grid, fld.time)))),
        float(np.max(np.abs(_potential_multiplier(eq, grid, t_target)))),
    )
    if abs(h) * vmax > 1.0:
        raise GuardError(
            f"dt={abs(h):.3g} does not resolve the potential "
            f"(dt*sup|V| = {abs(h) * vmax:.3g} > 1); refine dt"
        )
    magnetic = eq.has_magnetic()
    if magnetic:
        a0 = eq.magnetic.total_a(grid.mesh(), fld.time)
        amax = float(np.max(np.linalg.norm(a0, axis=0)))
        if amax * grid.kmax() * abs(h) >= 0.5:
            raise GuardError(
                f"dt={abs(h):.3g} violates the drift guard "
                f"(|A|*kmax*dt = {amax * grid.kmax() * abs(h):.3g} >= 0.5)"
            )
    values = fld.values.copy()
    t = fld.time
    kin_mult = np.exp(1j * _ksq(grid) * h)
    peak0 = float(np.max(np.abs(values)))
    for step in range(nstep):
        v_now = _potential_multiplier(eq, grid, t)
        values *= np.exp(0.5j * h * v_now)
        if not magnetic:
            values = np.fft.ifftn(kin_mult * np.fft.fftn(values))
        else:
            a = eq.magnetic.total_a(grid.mesh(), t + 0.5 * h)
            a = a.astype(np.complex128)
            div_a = _spectral_div(a, grid)
            asq = np.sum(np.abs(a) ** 2, axis=0).real
            nsub = max(1, int(math.ceil(abs(h) * kmax_sq / 2.5)))
            hs = h / nsub
            for _ in range(nsub):
                k1 = _kinetic_rhs(values, grid, a, div_a, asq)
                k2 = _kinetic_rhs(values + 0.5 * hs * k1, grid, a, div_a, asq)
                k3 = _kinetic_rhs(values + 0.5 * hs * k2, grid, a, div_a, asq)
                k4 = _kinetic_rhs(values + hs * k3, grid, a, div_a, asq)
                values = values + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        v_next = _potential_multiplier(eq, grid, t + h)
        values *= np.exp(0.5j * h * v_next)
        t = fld.time + (step + 1) * h
        if step % 25 == 24:
            out = WaveField(grid, values, t)
            peak = float(np.max(np.abs(values)))
            if peak > 0 and out.boundary_ratio() > BOUNDARY_GUARD:
                raise GuardError(
                    f"field reached the box boundary at t={t:.4g} "
                    f"(edge/peak = {out.boundary_ratio():.3g}); enlarge the box"
                )
            del out
    if not np.all(np.isfinite(values)):
        raise GuardError("propagation produced non-finite values")
    return WaveField(grid, values, t_target, dict(fld.meta))


def free_oracle(data: WaveField, t: float) -> WaveField:
    """Exact free evolution: Fourier multiplier e^{+i |xi|^2 t}."""
    vhat = np.fft.fftn(data.values)
    out = np.fft.ifftn(np.exp(1j * _ksq(data.grid) * t) * vhat)
    return WaveField(data.grid, out, data.time + t, dict(data.meta))


def harmonic_oracle(data: WaveField, omega: float, t: float) -> WaveField:
    """Exact evolution under the +omega^2/4 |x|^2 well, from time 0.

    Assembled from the free multiplier and the lens map: the free solution
    at remapped time tan(wt)/w is dilated by cos(wt) and dressed with the
    quadratic chirp, which is the inverse of the well-removal transform.
    """
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    if abs(data.time) > 1e-12:
        raise ValueError("oracle data must be given at time 0")
    if abs(omega * t) >= math.pi / 2:
        raise ValueError(
            f"|omega*t| = {abs(omega * t):.6g} must be below pi/2 for the lens map"
        )
    c = math.cos(omega * t)
    sigma = math.tan(omega * t) / omega
    free_vals = np.fft.ifftn(
        np.exp(1j * _ksq(data.grid) * sigma) * np.fft.fftn(data.values)
    )
    scaled = sample_scaled_fourier(free_vals, data.grid, 1.0 / c)
    n = data.grid.dimension
    r2 = data.grid.radius_sq()
    out = c ** (-n / 2.0) * np.exp(0.25j * omega * math.tan(omega * t) * r2) * scaled
    return WaveField(data.grid, out, t, dict(data.meta))


def magnetic_oracle(data: WaveField, b: float, t: float) -> WaveField:
    """Exact evolution under the transverse gauge A = (b/2)(-x2, x1) in 2D.

    The flow factorizes as the |b|-well evolution composed with a frame
    rotation of angle -bt (the angular-momentum factor), which makes each
    magnetic-shell eigenfunction a standing wave at its shell energy.
    """
    if data.grid.dimension != 2:
        raise ValueError("the transverse-gauge oracle is two-dimensional")
    if b == 0:
        raise ValueError("b must be nonzero")
    well = harmonic_oracle(data, abs(b), t)
    out = sample_rotated(well.values, data.grid, -b * t)
    return WaveField(data.grid, out, t, dict(data.meta))


def residual(solution_fn: Callable, eq: EquationSpec, grid: GridSpec, t: float, dt_fd: float = 2e-4) -> float:
    """Relative L2 residual of the equation on a sampled solution.

    Spatial derivatives are spectral; the time derivative is the centered
    4th-order difference with step dt_fd.
    """
    xs = grid.mesh()
    u = np.asarray(solution_fn(xs, t), dtype=np.complex128)
    um2 = np.asarray(solution_fn(xs, t - 2 * dt_fd), dtype=np.complex128)
    um1 = np.asarray(solution_fn(xs, t - dt_fd), dtype=np.complex128)
    up1 = np.asarray(solution_fn(xs, t + dt_fd), dtype=np.complex128)
    up2 = np.asarray(solution_fn(xs, t + 2 * dt_fd), dtype=np.complex128)
    du_dt = (-up2 + 8.0 * up1 - 8.0 * um1 + um2) / (12.0 * dt_fd)
    fld = WaveField(grid, u, t)
    if eq.has_magnetic():
        lap = magnetic_laplacian(fld, eq.magnetic).values
    else:
        lap = laplacian(fld).values
    expr = 1j * du_dt - lap + _potential_multiplier(eq, grid, t) * u
    return float(np.linalg.norm(expr) / np.linalg.norm(u))
