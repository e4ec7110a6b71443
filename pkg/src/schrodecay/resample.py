"""Resampling of periodic grid fields: shifts, rotations, dilations.

All routines use the sampling convention out(x) = f(map(x)): the returned
array holds the input field evaluated at mapped grid points.  Shifts and
rotations evaluate the trigonometric interpolant exactly (FFT phase ramps
and a three-shear factorization), so they are exact for band-limited
periodic data.  Dilations cannot stay band-limited on a fixed grid; the
default path evaluates the trigonometric interpolant at the scaled points
(semidiscrete, exact up to periodic wrap), and a quintic-spline path is
available for the transform pipeline.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.interpolate import RectBivariateSpline, make_interp_spline

from .grids import GridSpec


def sample_shifted(values: np.ndarray, grid: GridSpec, shift) -> np.ndarray:
    """out(x) = f(x + shift), exact for the periodic interpolant."""
    shift = np.atleast_1d(np.asarray(shift, dtype=np.float64))
    if shift.shape != (grid.dimension,):
        raise ValueError(f"shift must have {grid.dimension} components")
    if not np.any(shift):
        return values.copy()
    out = np.fft.fftn(values)
    k1 = 2.0 * np.pi * np.fft.fftfreq(grid.points_per_dim, d=grid.spacing)
    for ax in range(grid.dimension):
        shape = [1] * grid.dimension
        shape[ax] = grid.points_per_dim
        out *= np.exp(1j * k1 * shift[ax]).reshape(shape)
    return np.fft.ifftn(out)


def _shear(values: np.ndarray, grid: GridSpec, axis: int, amount: float) -> np.ndarray:
    """out(x) = f(..., x_axis + amount * x_other, ...) for a 2D field."""
    other = 1 - axis
    k1 = 2.0 * np.pi * np.fft.fftfreq(grid.points_per_dim, d=grid.spacing)
    x_other = grid.axis()
    out = np.fft.fft(values, axis=axis)
    ramp = np.exp(1j * amount * np.outer(k1, x_other))
    if axis == 1:
        ramp = ramp.T
    return np.fft.ifft(out * ramp, axis=axis)


def _quarter_turns(values: np.ndarray, turns: int) -> np.ndarray:
    """out(x) = f(R(turns * pi/2) x) on the symmetric periodic grid."""
    n = values.shape[0]
    neg = (n - np.arange(n)) % n
    out = values
    for _ in range(turns % 4):
        # out'(x1, x2) = out(-x2, x1)
        out = out[neg, :].T
    return out


def sample_rotated(values: np.ndarray, grid: GridSpec, angle: float) -> np.ndarray:
    """out(x) = f(R(angle) x), R the counterclockwise rotation matrix.

    Factored into exact quarter turns plus a three-shear FFT rotation for
    the remainder (|remainder| <= pi/4), each shear exact for periodic
    band-limited data.
    """
    if grid.dimension != 2:
        raise ValueError("rotation sampling requires a 2D grid")
    turns = int(np.round(angle / (math.pi / 2)))
    rem = angle - turns * math.pi / 2
    out = _quarter_turns(values, turns)
    if abs(rem) > 1e-15:
        a = -math.tan(rem / 2.0)
        b = math.sin(rem)
        out = _shear(out, grid, 0, a)
        out = _shear(out, grid, 1, b)
        out = _shear(out, grid, 0, a)
    return out


def rotation_angle(rmat: np.ndarray) -> float:
    """Angle of a 2x2 rotation matrix."""
    rmat = np.asarray(rmat, dtype=np.float64)
    if rmat.shape != (2, 2) or not np.allclose(
        rmat.T @ rmat, np.eye(2), atol=1e-10
    ) or np.linalg.det(rmat) < 0:
        raise ValueError("expected a proper 2x2 rotation matrix")
    return math.atan2(rmat[1, 0], rmat[0, 0])


def sample_scaled_fourier(values: np.ndarray, grid: GridSpec, scale: float) -> np.ndarray:
    """out(x) = f(scale * x) by direct evaluation of the trig interpolant.

    Exact for the periodic interpolant at any real scale; points mapped
    outside the box wrap around periodically, so callers must keep the
    field negligible near the boundary.  Cost O(N^(d+1)).
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    if scale == 1.0:
        return values.copy()
    npts = grid.points_per_dim
    k1 = 2.0 * np.pi * np.fft.fftfreq(npts, d=grid.spacing)
    # the DFT interpolant is anchored at the first sample position
    targets = scale * grid.axis() - grid.axis()[0]
    emat = np.exp(1j * np.outer(targets, k1)) / npts
    if grid.dimension == 1:
        return emat @ np.fft.fft(values)
    if grid.dimension == 2:
        fhat = np.fft.fft2(values)
        return emat @ fhat @ emat.T
    out = np.fft.fftn(values)
    for ax in range(grid.dimension):
        out = np.moveaxis(np.tensordot(emat, out, axes=(1, ax)), 0, ax)
    return out


def sample_scaled_spline(values: np.ndarray, grid: GridSpec, scale: float) -> np.ndarray:
    """out(x) = f(scale * x) by quintic spline; zero outside the box."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    if scale == 1.0:
        return values.copy()
    axis = grid.axis()
    targets = scale * axis
    lo, hi = axis[0], axis[-1]
    inside = (targets >= lo) & (targets <= hi)
    clipped = np.clip(targets, lo, hi)
    if grid.dimension == 1:
        spl_re = make_interp_spline(axis, values.real, k=5)
        spl_im = make_interp_spline(axis, values.imag, k=5)
        out = spl_re(clipped) + 1j * spl_im(clipped)
        out[~inside] = 0.0
        return out
    if grid.dimension == 2:
        spl_re = RectBivariateSpline(axis, axis, values.real, kx=5, ky=5)
        spl_im = RectBivariateSpline(axis, axis, values.imag, kx=5, ky=5)
        out = spl_re(clipped, clipped) + 1j * spl_im(clipped, clipped)
        out[~inside, :] = 0.0
        out[:, ~inside] = 0.0
        return out
    raise NotImplementedError("spline dilation implemented for 1D and 2D grids")
