"""Invertible changes of variables acting on wavefields.

Each factory returns a TransformRecord describing an affine substitution

    target(x, t_tgt) = weight(x, t_tgt) * source(scale*(R x) + shift, t_src),

together with the exact rewrite of the potentials so that solutions map to
solutions.  Records compose (TransformChain) and invert; rewrites are kept
as closures over the original potential specs, never as sampled arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.linalg import expm
from scipy.optimize import brentq

from .engine import EquationSpec, GuardError
from .fields import ElectricPotential, MagneticPotential, stack_coords
from .grids import WaveField
from .resample import (
    rotation_angle,
    sample_rotated,
    sample_scaled_fourier,
    sample_scaled_spline,
    sample_shifted,
)


def _identity(t: float) -> float:
    return t


def _identity_rewrite(eq: EquationSpec) -> EquationSpec:
    return eq


def _intersect(w1: tuple, w2: tuple) -> tuple:
    return (max(w1[0], w2[0]), min(w1[1], w2[1]))


class _QuadCache:
    """Adaptive quadrature from 0 to t, memoized per endpoint."""

    def __init__(self, integrand: Callable[[float], float]):
        self.integrand = integrand
        self._cache = {}

    def __call__(self, t: float) -> float:
        key = float(t)
        if key not in self._cache:
            val, _ = quad(self.integrand, 0.0, key, epsabs=1e-13, epsrel=1e-12, limit=200)
            self._cache[key] = val
        return self._cache[key]


def _fd1(fn: Callable, t: float, h: float = 1e-4) -> np.ndarray:
    return (
        -np.asarray(fn(t + 2 * h))
        + 8.0 * np.asarray(fn(t + h))
        - 8.0 * np.asarray(fn(t - h))
        + np.asarray(fn(t - 2 * h))
    ) / (12.0 * h)


def _fd2(fn: Callable, t: float, h: float = 1e-3) -> np.ndarray:
    return (
        -np.asarray(fn(t + 2 * h))
        + 16.0 * np.asarray(fn(t + h))
        - 30.0 * np.asarray(fn(t))
        + 16.0 * np.asarray(fn(t - h))
        - np.asarray(fn(t - 2 * h))
    ) / (12.0 * h * h)


@dataclass(frozen=True)
class TransformRecord:
    """One invertible change of variables.

    time_map sends source times to target times (strictly monotone);
    space_scale / space_rotation / space_shift are evaluated at the target
    time and assemble the sampling map y = scale*(R x) + shift; weight is
    the pointwise multiplier at target coordinates.
    """

    name: str
    time_map: Callable = _identity
    time_map_inverse: Callable = _identity
    domain: tuple = (-math.inf, math.inf)
    space_scale: Optional[Callable] = None
    space_rotation: Optional[Callable] = None
    space_shift: Optional[Callable] = None
    weight: Optional[Callable] = None
    potential_rewrite: Callable = _identity_rewrite
    inverse_builder: Optional[Callable] = None
    uses_dilation: bool = False
    params: dict = dc_field(default_factory=dict)

    def inverse(self) -> "TransformRecord":
        if self.inverse_builder is None:
            raise NotImplementedError(f"record {self.name} has no inverse")
        return self.inverse_builder()

    def space_map(self, xs, t_tgt: float) -> np.ndarray:
        """Sampling points as a stacked coordinate array."""
        y = stack_coords(xs)
        if self.space_rotation is not None:
            rmat = np.asarray(self.space_rotation(t_tgt))
            y = np.einsum("jk,k...->j...", rmat, y)
        if self.space_scale is not None:
            y = self.space_scale(t_tgt) * y
        if self.space_shift is not None:
            shift = np.asarray(self.space_shift(t_tgt), dtype=np.float64)
            y = y + shift.reshape((-1,) + (1,) * (y.ndim - 1))
        return y

    def describe(self) -> dict:
        return {
            "name": self.name,
            "domain": [self.domain[0], self.domain[1]],
            "uses_dilation": self.uses_dilation,
            "params": dict(self.params),
        }


@dataclass(frozen=True)
class TransformChain:
    records: Tuple[TransformRecord, ...]

    def __post_init__(self):
        recs = tuple(self.records)
        object.__setattr__(self, "records", recs)
        for left, right in zip(recs, recs[1:]):
            lo, hi = left.domain
            image = sorted(
                left.time_map(v) for v in (max(lo, -1e12), min(hi, 1e12))
            )
            if image[1] < right.domain[0] - 1e-12 or image[0] > right.domain[1] + 1e-12:
                raise ValueError(
                    f"records {left.name} -> {right.name} have incompatible "
                    f"time domains ({image} vs {right.domain})"
                )

    @property
    def domain(self) -> tuple:
        return self.records[0].domain if self.records else (-math.inf, math.inf)

    def apply(self, fld: WaveField, **kwargs) -> WaveField:
        for rec in self.records:
            fld = apply(rec, fld, **kwargs)
        return fld

    def rewrite(self, eq: EquationSpec) -> EquationSpec:
        for rec in self.records:
            eq = rec.potential_rewrite(eq)
        return eq

    def inverse(self) -> "TransformChain":
        return TransformChain(tuple(rec.inverse() for rec in reversed(self.records)))

    def describe(self) -> list:
        return [rec.describe() for rec in self.records]


def _truncation_ratio(values: np.ndarray, grid, scale: float) -> float:
    """Largest magnitude in the shell whose images fall outside the box."""
    cut = grid.half_width / scale
    axis = np.abs(grid.axis())
    mask = axis >= cut
    if not np.any(mask):
        return 0.0
    peak = float(np.max(np.abs(values)))
    if peak == 0.0:
        return 0.0
    outer = 0.0
    for dim in range(grid.dimension):
        sl = [slice(None)] * grid.dimension
        sl[dim] = mask
        outer = max(outer, float(np.max(np.abs(values[tuple(sl)]))))
    return outer / peak


def apply(record: TransformRecord, fld: WaveField, dilation: str = "spline",
          boundary_tol: float = 1e-9) -> WaveField:
    """Resample a wavefield through a transform record.

    Shifts and rotations are Fourier-exact on band-limited fields;
    dilations interpolate (quintic splines by default, semidiscrete
    Fourier evaluation with dilation="fourier").
    """
    lo, hi = record.domain
    if not (lo - 1e-12 <= fld.time <= hi + 1e-12):
        raise GuardError(
            f"field time {fld.time:.6g} lies outside the record domain "
            f"[{lo:.6g}, {hi:.6g}] of {record.name}"
        )
    t_tgt = float(record.time_map(fld.time))
    values = fld.values
    grid = fld.grid
    if record.space_shift is not None:
        shift = np.asarray(record.space_shift(t_tgt), dtype=np.float64)
        if np.any(shift != 0.0):
            values = sample_shifted(values, grid, shift)
    if record.space_scale is not None:
        scale = float(record.space_scale(t_tgt))
        if not scale > 0:
            raise GuardError(f"scale factor {scale:.6g} must stay positive")
        if abs(scale - 1.0) > 1e-15:
            if scale > 1.0:
                ratio = _truncation_ratio(values, grid, scale)
                if ratio > boundary_tol:
                    raise GuardError(
                        f"space map samples outside the grid: truncated "
                        f"magnitude ratio {ratio:.3e} exceeds {boundary_tol:.1e}; "
                        f"enlarge the box"
                    )
            if dilation == "fourier":
                values = sample_scaled_fourier(values, grid, scale)
            elif dilation == "spline":
                values = sample_scaled_spline(values, grid, scale)
            else:
                raise ValueError(f"unknown dilation method {dilation!r}")
    if record.space_rotation is not None:
        rmat = np.asarray(record.space_rotation(t_tgt), dtype=np.float64)
        if not np.allclose(rmat, np.eye(rmat.shape[0]), atol=1e-14):
            values = sample_rotated(values, grid, rotation_angle(rmat))
    if record.weight is not None:
        values = values * record.weight(grid.mesh(), t_tgt)
    values = np.ascontiguousarray(values, dtype=np.complex128)
    return WaveField(grid, values, t_tgt, dict(fld.meta))


# ---------------------------------------------------------------------------
# phase removal


def phase_removal(k_fn: Callable[[float], float], domain: tuple = (-math.inf, math.inf),
                  _sign: float = -1.0) -> TransformRecord:
    """Strip a spatially uniform real drive k(t) by a unimodular phase.

    target = e^{-i int_0^t k} * source solves the equation with the k(t)
    term dropped; space and time maps are identities.
    """
    kint = _QuadCache(k_fn)

    def weight(xs, t):
        return complex(np.exp(1j * _sign * kint(t)))

    def rewrite(eq: EquationSpec) -> EquationSpec:
        old = eq.electric
        old_k = old.phase_drive

        if old_k is None:
            def new_k(t):
                return _sign * k_fn(t)
        else:
            def new_k(t):
                return old_k(t) + _sign * k_fn(t)

        electric = ElectricPotential(
            v1=old.v1, v2=old.v2, e_drive=old.e_drive,
            phase_drive=new_k, quadratic_coeff=old.quadratic_coeff,
        )
        return EquationSpec(electric, eq.magnetic, _intersect(eq.window, domain))

    return TransformRecord(
        name="phase_removal",
        domain=domain,
        weight=weight,
        potential_rewrite=rewrite,
        inverse_builder=lambda: phase_removal(k_fn, domain, _sign=-_sign),
        params={"sign": _sign},
    )


# ---------------------------------------------------------------------------
# generalized Galilean boosts


def _shifted_magnetic(mag: Optional[MagneticPotential], path: Callable) -> Optional[MagneticPotential]:
    if mag is None or mag.is_zero():
        return mag
    a_old, m_uni = mag.a_fn, mag.uniform_part

    def a_new(xs, t):
        p = np.asarray(path(t), dtype=np.float64)
        arg = tuple(x + p[j] for j, x in enumerate(xs))
        x = stack_coords(xs)
        out = np.zeros_like(x, dtype=np.float64)
        if a_old is not None:
            out = out + np.asarray(a_old(arg, t))
        if m_uni is not None:
            const = 0.5 * (m_uni @ p)
            out = out + const.reshape((-1,) + (1,) * (x.ndim - 1))
        return out

    # the shifted field matrix is time dependent; leave it to the
    # finite-difference fallback rather than misreport a frozen closure
    return MagneticPotential(a_fn=a_new, b_matrix_fn=None,
                             uniform_part=m_uni, xi=mag.xi)


def _galilean_record(name: str, path: Callable, dpath: Callable, ddpath: Callable,
                     gdot: Callable, g0: float, domain: tuple,
                     inverse_builder: Callable, params: dict) -> TransformRecord:
    gint = _QuadCache(gdot)

    def weight(xs, t):
        dp = np.asarray(dpath(t), dtype=np.float64)
        lin = sum(0.5 * dp[j] * np.asarray(x) for j, x in enumerate(xs))
        return np.exp(1j * (lin + g0 + gint(t)))

    def shift(t):
        return np.asarray(path(t), dtype=np.float64)

    def rewrite(eq: EquationSpec) -> EquationSpec:
        old = eq.electric
        mag_new = _shifted_magnetic(eq.magnetic, path)

        def e_old_vec(t, _probe=path):
            if old.e_drive is not None:
                return np.asarray(old.e_drive(t), dtype=np.float64)
            return np.zeros_like(np.asarray(_probe(t), dtype=np.float64))

        def e_new(t):
            out = e_old_vec(t) + 0.5 * np.asarray(ddpath(t), dtype=np.float64)
            q = old.quadratic_at(t)
            if q != 0.0:
                out = out + 2.0 * q * np.asarray(path(t), dtype=np.float64)
            return out

        def k_new(t):
            p = np.asarray(path(t), dtype=np.float64)
            dp = np.asarray(dpath(t), dtype=np.float64)
            base = old.phase_drive(t) if old.phase_drive is not None else 0.0
            bracket = gdot(t) - 0.25 * float(dp @ dp) + float(e_old_vec(t) @ p)
            return base + old.quadratic_at(t) * float(p @ p) + bracket

        needs_v2 = old.v1 is not None or old.v2 is not None or (
            mag_new is not None and not mag_new.is_zero())
        v2_new = None
        if needs_v2:
            def v2_new(xs, t):
                p = np.asarray(path(t), dtype=np.float64)
                arg = tuple(x + p[j] for j, x in enumerate(xs))
                val = 0.0
                if old.v1 is not None:
                    val = val + old.v1(arg)
                if old.v2 is not None:
                    val = val + old.v2(arg, t)
                if mag_new is not None and not mag_new.is_zero():
                    a_here = mag_new.total_a(xs, t)
                    dp = np.asarray(dpath(t), dtype=np.float64)
                    val = val + sum(dp[j] * a_here[j] for j in range(len(dp)))
                return val

        electric = ElectricPotential(
            v1=None, v2=v2_new, e_drive=e_new, phase_drive=k_new,
            quadratic_coeff=old.quadratic_coeff,
        )
        return EquationSpec(electric, mag_new, _intersect(eq.window, domain))

    return TransformRecord(
        name=name,
        domain=domain,
        space_shift=shift,
        weight=weight,
        potential_rewrite=rewrite,
        inverse_builder=inverse_builder,
        params=params,
    )


def galilean(e_fn: Optional[Callable], s_fn: Callable, ds_fn: Optional[Callable] = None,
             dds_fn: Optional[Callable] = None, domain: tuple = (-math.inf, math.inf),
             name: str = "galilean") -> TransformRecord:
    """Boost along a C^2 path: target(x,t) = weight * source(x + S(t), t).

    The weight phase is (Sdot/2).x + int_0^t (|Sdot|^2/4 - E.S); the
    rewritten equation carries the drive E + Sddot/2 (plus the bookkeeping
    terms 2qS and q|S|^2 when a quadratic potential is present) and
    potentials shifted to x + S(t), with the Sdot.A cross term folded into
    the scalar part.  Analytic derivatives of S may be supplied; otherwise
    centered differences are used.
    """
    ds = ds_fn if ds_fn is not None else (lambda t: _fd1(s_fn, t))
    dds = dds_fn if dds_fn is not None else (lambda t: _fd2(s_fn, t))

    def edot_s(t):
        if e_fn is None:
            return 0.0
        return float(np.asarray(e_fn(t), dtype=np.float64)
                     @ np.asarray(s_fn(t), dtype=np.float64))

    def gdot(t):
        dp = np.asarray(ds(t), dtype=np.float64)
        return 0.25 * float(dp @ dp) - edot_s(t)

    def build_inverse():
        def path_inv(t):
            return -np.asarray(s_fn(t), dtype=np.float64)

        def dpath_inv(t):
            return -np.asarray(ds(t), dtype=np.float64)

        def ddpath_inv(t):
            return -np.asarray(dds(t), dtype=np.float64)

        def gdot_inv(t):
            s = np.asarray(s_fn(t), dtype=np.float64)
            dp = np.asarray(ds(t), dtype=np.float64)
            return 0.5 * float(np.asarray(dds(t), dtype=np.float64) @ s) \
                + 0.25 * float(dp @ dp) + edot_s(t)

        g0_inv = 0.5 * float(np.asarray(ds(0.0), dtype=np.float64)
                             @ np.asarray(s_fn(0.0), dtype=np.float64))
        return _galilean_record(
            name + "_inverse", path_inv, dpath_inv, ddpath_inv, gdot_inv,
            g0_inv, domain, lambda: galilean(e_fn, s_fn, ds_fn, dds_fn, domain, name),
            params={"direction": "inverse"},
        )

    return _galilean_record(name, s_fn, ds, dds, gdot, 0.0, domain,
                            build_inverse, params={"direction": "forward"})


def electric_removal(e_fn: Callable, T: float) -> TransformRecord:
    """Boost that cancels a uniform drive E(t) on [0, T].

    The path S(t) = -2[I2(t) - (t/T) I2(T)], with I2 the iterated integral
    of E, satisfies Sddot = -2E and S(0) = S(T) = 0, so the rewritten
    equation is drive-free and the boost is weight-only at both endpoints.
    """
    if not T > 0:
        raise GuardError(f"window length T = {T:.6g} must be positive")

    e0 = np.atleast_1d(np.asarray(e_fn(0.0), dtype=np.float64))
    dim = e0.shape[0]

    i1_cache = [_QuadCache(lambda s, j=j: float(np.atleast_1d(
        np.asarray(e_fn(s), dtype=np.float64))[j])) for j in range(dim)]

    def i1(t):
        return np.array([c(t) for c in i1_cache])

    i2_cache = [_QuadCache(lambda s, j=j: i1_cache[j](s)) for j in range(dim)]

    def i2(t):
        return np.array([c(t) for c in i2_cache])

    i2_T = i2(T)

    def s_fn(t):
        return -2.0 * (i2(t) - (t / T) * i2_T)

    def ds_fn(t):
        return -2.0 * (i1(t) - i2_T / T)

    def dds_fn(t):
        return -2.0 * np.atleast_1d(np.asarray(e_fn(t), dtype=np.float64))

    rec = galilean(e_fn, s_fn, ds_fn, dds_fn, domain=(0.0, T),
                   name="electric_removal")
    rec.params.update({"T": T})
    return rec


# ---------------------------------------------------------------------------
# comoving frames (dilations)


def _comoving_record(name: str, a: Callable, da: Callable, dda: Callable,
                     to_target: Callable, to_source: Callable, domain: tuple,
                     inverse_builder: Callable, params: dict) -> TransformRecord:
    def checked_a(t):
        val = float(a(t))
        if not val > 0.0:
            raise GuardError(f"scale function a({t:.6g}) = {val:.6g} must stay positive")
        return val

    def scale(t):
        return 1.0 / checked_a(t)

    def weight(xs, t):
        av = checked_a(t)
        n = len(xs)
        r2 = sum(np.asarray(x) ** 2 for x in xs)
        return av ** (-n / 2.0) * np.exp(-0.25j * (float(da(t)) / av) * r2)

    def rewrite(eq: EquationSpec) -> EquationSpec:
        old = eq.electric
        mag_old = eq.magnetic

        mag_new = None
        if mag_old is not None and not mag_old.is_zero():
            def a_fn_new(xs, t):
                av = checked_a(t)
                arg = tuple(np.asarray(x) / av for x in xs)
                return np.asarray(mag_old.total_a(arg, to_source(t))) / av

            mag_new = MagneticPotential(a_fn=a_fn_new, xi=mag_old.xi)

        def q_new(t):
            av = checked_a(t)
            return old.quadratic_at(to_source(t)) / av ** 4 - float(dda(t)) / (4.0 * av)

        e_new = None
        if old.e_drive is not None:
            def e_new(t):
                return np.asarray(old.e_drive(to_source(t)), dtype=np.float64) \
                    / checked_a(t) ** 3

        k_new = None
        if old.phase_drive is not None:
            def k_new(t):
                return old.phase_drive(to_source(t)) / checked_a(t) ** 2

        v2_new = None
        if old.v1 is not None or old.v2 is not None or mag_new is not None:
            def v2_new(xs, t):
                av = checked_a(t)
                arg = tuple(np.asarray(x) / av for x in xs)
                val = 0.0
                if old.v1 is not None:
                    val = val + old.v1(arg)
                if old.v2 is not None:
                    val = val + old.v2(arg, to_source(t))
                val = val / av ** 2
                if mag_new is not None:
                    a_here = mag_new.total_a(xs, t)
                    drift = float(da(t)) / av
                    val = val - drift * sum(np.asarray(x) * a_here[j]
                                            for j, x in enumerate(xs))
                return val

        electric = ElectricPotential(v1=None, v2=v2_new, e_drive=e_new,
                                     phase_drive=k_new, quadratic_coeff=q_new)
        w0, w1 = _intersect(eq.window, domain)
        new_window = tuple(
            to_target(w) if math.isfinite(w) else w for w in (w0, w1))
        return EquationSpec(electric, mag_new, new_window)

    return TransformRecord(
        name=name,
        time_map=to_target,
        time_map_inverse=to_source,
        domain=domain,
        space_scale=scale,
        weight=weight,
        potential_rewrite=rewrite,
        inverse_builder=inverse_builder,
        uses_dilation=True,
        params=params,
    )


def comoving(a_fn: Callable, da_fn: Optional[Callable] = None,
             dda_fn: Optional[Callable] = None,
             window: tuple = (-math.inf, math.inf)) -> TransformRecord:
    """Dilating frame built from a positive C^2 scale function.

    a is a function of the transformed time; the source time is the
    cumulative integral of a^-2, inverted numerically for the forward
    time map.  Harmonic and repulsive removals are the closed-form
    instances of this record.
    """
    da = da_fn if da_fn is not None else (lambda t: float(_fd1(a_fn, t)))
    dda = dda_fn if dda_fn is not None else (lambda t: float(_fd2(a_fn, t)))

    tau = _QuadCache(lambda s: 1.0 / float(a_fn(s)) ** 2)

    def to_source(t_tgt):
        return tau(t_tgt)

    def to_target(t_src):
        if t_src == 0.0:
            return 0.0
        lo, hi = sorted((0.0, 2.0 * t_src))
        for _ in range(80):
            if tau(lo) <= t_src <= tau(hi):
                break
            lo, hi = lo - abs(t_src), hi + abs(t_src)
        return brentq(lambda s: tau(s) - t_src, lo, hi, xtol=1e-14, rtol=1e-14)

    source_domain = tuple(
        to_source(w) if math.isfinite(w) else w for w in window)

    def build_inverse():
        def b(t):
            return 1.0 / float(a_fn(to_target(t)))

        def db(t):
            return -float(da(to_target(t)))

        def ddb(t):
            sig = to_target(t)
            return -float(dda(sig)) * float(a_fn(sig)) ** 2

        return _comoving_record(
            "comoving_inverse", b, db, ddb, to_source, to_target, window,
            lambda: comoving(a_fn, da_fn, dda_fn, window),
            params={"direction": "inverse"},
        )

    return _comoving_record(
        "comoving", a_fn, da, dda, to_target, to_source, source_domain,
        build_inverse, params={"direction": "forward"},
    )


def harmonic_removal(omega: float, T: float) -> TransformRecord:
    """Map solutions in a confining quadratic well to free-type solutions.

    Valid while omega*T stays below pi/2; the forward map contracts space
    by cos(omega t), remaps time to tan(omega t)/omega, and carries the
    lens chirp; the rewrite cancels the quadratic coefficient omega^2/4.
    """
    if not (omega > 0 and T > 0):
        raise GuardError(f"omega = {omega:.6g} and T = {T:.6g} must be positive")
    if omega * T >= math.pi / 2:
        raise GuardError(
            f"omega*T = {omega * T:.6g} must lie below pi/2 = {math.pi / 2:.6g}"
        )
    sigma_T = math.tan(omega * T) / omega
    params = {"omega": omega, "T": T}

    def a(s):
        return math.sqrt(1.0 + (omega * s) ** 2)

    def da(s):
        return omega ** 2 * s / a(s)

    def dda(s):
        return omega ** 2 / a(s) ** 3

    def to_target(t):
        return math.tan(omega * t) / omega

    def to_source(s):
        return math.atan(omega * s) / omega

    def build_inverse():
        def b(t):
            return math.cos(omega * t)

        def db(t):
            return -omega * math.sin(omega * t)

        def ddb(t):
            return -omega ** 2 * math.cos(omega * t)

        return _comoving_record(
            "harmonic_restore", b, db, ddb, to_source, to_target,
            (-sigma_T, sigma_T), lambda: harmonic_removal(omega, T), params,
        )

    return _comoving_record(
        "harmonic_removal", a, da, dda, to_target, to_source, (-T, T),
        build_inverse, params,
    )


def repulsive_removal(nu: float, T: float) -> TransformRecord:
    """Map solutions in a repulsive quadratic potential to free-type ones.

    Valid while nu*T stays below 1; the forward map expands space by
    cosh(nu t), remaps time to tanh(nu t)/nu, and the rewrite cancels the
    quadratic coefficient -nu^2/4.
    """
    if not (nu > 0 and T > 0):
        raise GuardError(f"nu = {nu:.6g} and T = {T:.6g} must be positive")
    if nu * T >= 1.0:
        raise GuardError(f"nu*T = {nu * T:.6g} must lie below 1")
    sigma_T = math.tanh(nu * T) / nu
    params = {"nu": nu, "T": T}

    def a(s):
        return math.sqrt(1.0 - (nu * s) ** 2)

    def da(s):
        return -nu ** 2 * s / a(s)

    def dda(s):
        return -nu ** 2 / a(s) ** 3

    def to_target(t):
        return math.tanh(nu * t) / nu

    def to_source(s):
        return math.atanh(nu * s) / nu

    def build_inverse():
        def b(t):
            return math.cosh(nu * t)

        def db(t):
            return nu * math.sinh(nu * t)

        def ddb(t):
            return nu ** 2 * math.cosh(nu * t)

        return _comoving_record(
            "repulsive_restore", b, db, ddb, to_source, to_target,
            (-sigma_T, sigma_T), lambda: repulsive_removal(nu, T), params,
        )

    return _comoving_record(
        "repulsive_removal", a, da, dda, to_target, to_source, (-T, T),
        build_inverse, params,
    )


# ---------------------------------------------------------------------------
# rotating frame


def _rotation_cache(m: np.ndarray):
    cache = {}

    def rot(t):
        key = float(t)
        if key not in cache:
            cache[key] = expm(m * key)
        return cache[key]

    return rot


def rotating_frame(m, domain: tuple = (-math.inf, math.inf)) -> TransformRecord:
    """Co-rotating frame absorbing the uniform part of a vector potential.

    target(x,t) = source(e^{Mt} x, t); the rewritten equation drops the
    uniform magnetic part M and gains the quadratic coefficient b^2/4
    where M^T M = b^2 I, plus the rotated remainder of the potentials.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("M must be a square matrix")
    if not np.allclose(m, -m.T, atol=1e-12):
        raise ValueError("M must be antisymmetric")
    gram = m.T @ m
    b_sq = float(gram[0, 0])
    if not np.allclose(gram, b_sq * np.eye(m.shape[0]), atol=1e-12 * (1.0 + b_sq)):
        raise ValueError("M^T M must be proportional to the identity")
    return _rotating_record(m, b_sq, +1.0, domain)


def _rotating_record(m: np.ndarray, b_sq: float, direction: float,
                     domain: tuple) -> TransformRecord:
    rot = _rotation_cache(direction * m)
    dim = m.shape[0]

    def rewrite(eq: EquationSpec) -> EquationSpec:
        old = eq.electric
        mag_old = eq.magnetic

        if direction > 0:
            if mag_old is None or mag_old.uniform_part is None:
                if b_sq > 0:
                    raise ValueError(
                        "rotating_frame removes a uniform magnetic part; the "
                        "equation does not carry one"
                    )
            elif not np.allclose(mag_old.uniform_part, m, atol=1e-12):
                raise ValueError(
                    "rotating_frame was built for a different uniform part "
                    "than the equation carries"
                )
            gen_fn = mag_old.a_fn if mag_old is not None else None
            uniform_new = None
            q_shift = b_sq / 4.0
        else:
            # restoring direction: reattach the uniform part
            gen_fn = mag_old.a_fn if mag_old is not None else None
            uniform_new = m
            q_shift = -b_sq / 4.0

        mag_new = None
        if gen_fn is not None or uniform_new is not None:
            a_fn_new = None
            if gen_fn is not None:
                def a_fn_new(xs, t):
                    r = rot(t)
                    x = stack_coords(xs)
                    y = np.einsum("jk,k...->j...", r, x)
                    vals = np.asarray(gen_fn(tuple(y), t))
                    return np.einsum("kj,k...->j...", r, vals)

            mag_new = MagneticPotential(a_fn=a_fn_new, uniform_part=uniform_new)

        old_q = old.quadratic_coeff
        if callable(old_q):
            def q_new(t):
                return old.quadratic_at(t) + q_shift
        else:
            q_new = float(old_q) + q_shift

        e_new = None
        if old.e_drive is not None:
            def e_new(t):
                return rot(t).T @ np.asarray(old.e_drive(t), dtype=np.float64)

        v2_new = None
        cross = mag_new if direction > 0 else mag_old
        if old.v1 is not None or old.v2 is not None or (
                cross is not None and cross.a_fn is not None):
            def v2_new(xs, t):
                r = rot(t)
                x = stack_coords(xs)
                y = np.einsum("jk,k...->j...", r, x)
                args = tuple(y)
                val = 0.0
                if old.v1 is not None:
                    val = val + old.v1(args)
                if old.v2 is not None:
                    val = val + old.v2(args, t)
                if cross is not None and cross.a_fn is not None:
                    if direction > 0:
                        a_here = np.asarray(mag_new.a_fn(xs, t))
                        mx = np.einsum("jk,k...->j...", m, x)
                        val = val + sum(mx[j] * a_here[j] for j in range(dim))
                    else:
                        mx = np.einsum("jk,k...->j...", m, y)
                        a_there = np.asarray(mag_old.a_fn(args, t))
                        val = val - sum(mx[j] * a_there[j] for j in range(dim))
                return val

        electric = ElectricPotential(v1=None, v2=v2_new, e_drive=e_new,
                                     phase_drive=old.phase_drive,
                                     quadratic_coeff=q_new)
        return EquationSpec(electric, mag_new, _intersect(eq.window, domain))

    return TransformRecord(
        name="rotating_frame" if direction > 0 else "rotating_frame_inverse",
        domain=domain,
        space_rotation=rot,
        potential_rewrite=rewrite,
        inverse_builder=lambda: _rotating_record(m, b_sq, -direction, domain),
        params={"b_sq": b_sq, "direction": "forward" if direction > 0 else "inverse"},
    )
