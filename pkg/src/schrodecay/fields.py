"""Electric and magnetic potential data, and the transverse gauge reduction.

Conventions used throughout the package:

- scalar fields take a tuple of coordinate arrays: ``v1(xs)``, ``v2(xs, t)``
- vector fields return a stacked array with the component axis first:
  ``a_fn(xs, t) -> array of shape (n, ...)``
- the field-strength matrix is ``B = J - J^T`` with the Jacobian in
  component-first layout ``J[j, k] = d A^j / d x_k``, so that
  ``Psi(x)_k = sum_j x_j B[j, k](x)`` and the transverse (x . A = 0)
  representative of the gauge class is ``A_t = -int_0^1 Psi(s x) ds``.

The radial integrals are regular at s=0 for continuously differentiable
potentials and are evaluated by adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad_vec

from .grids import GridSpec


def stack_coords(xs) -> np.ndarray:
    shape = np.broadcast_shapes(*(np.shape(x) for x in xs))
    return np.stack([np.broadcast_to(x, shape) for x in xs])


@dataclass
class ElectricPotential:
    """V = v1(x) + v2(x,t) + phase_drive(t) + e_drive(t).x + quad |x|^2.

    quadratic_coeff is +omega^2/4 for a confining well, -nu^2/4 for a
    repulsive one, 0 for none; transform rewrites may supply it as a
    function of time.
    """

    v1: Optional[Callable] = None
    v2: Optional[Callable] = None
    e_drive: Optional[Callable] = None
    phase_drive: Optional[Callable] = None
    quadratic_coeff: object = 0.0

    def quadratic_at(self, t: float) -> float:
        q = self.quadratic_coeff
        return float(q(t)) if callable(q) else float(q)

    def total(self, xs, t: float) -> np.ndarray:
        """Pointwise complex potential multiplier at time t."""
        shape = np.broadcast_shapes(*(np.shape(x) for x in xs))
        out = np.zeros(shape, dtype=np.complex128)
        if self.v1 is not None:
            out += self.v1(xs)
        if self.v2 is not None:
            out += self.v2(xs, t)
        if self.phase_drive is not None:
            out += self.phase_drive(t)
        if self.e_drive is not None:
            e = np.asarray(self.e_drive(t), dtype=np.float64)
            for j, x in enumerate(xs):
                out += e[j] * x
        q = self.quadratic_at(t)
        if q != 0.0:
            out += q * sum(np.asarray(x) ** 2 for x in xs)
        return out


@dataclass
class MagneticPotential:
    """Vector potential split as A(x,t) + C(x), C(x) = (uniform_part) x / 2."""

    a_fn: Optional[Callable] = None
    b_matrix_fn: Optional[Callable] = None
    uniform_part: Optional[np.ndarray] = None
    xi: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.uniform_part is not None:
            m = np.asarray(self.uniform_part, dtype=np.float64)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError("uniform_part must be a square matrix")
            if not np.allclose(m, -m.T, atol=1e-13):
                raise ValueError("uniform_part must be antisymmetric")
            self.uniform_part = m
        if self.xi is not None:
            xi = np.asarray(self.xi, dtype=np.float64)
            if not math.isclose(float(np.linalg.norm(xi)), 1.0, rel_tol=1e-10):
                raise ValueError("xi must be a unit vector")
            self.xi = xi

    def is_zero(self) -> bool:
        return self.a_fn is None and self.uniform_part is None

    def total_a(self, xs, t: float) -> np.ndarray:
        x = stack_coords(xs)
        out = np.zeros_like(x)
        if self.a_fn is not None:
            out = out + np.asarray(self.a_fn(xs, t))
        if self.uniform_part is not None:
            out = out + 0.5 * np.einsum("jk,k...->j...", self.uniform_part, x)
        return out


@dataclass
class GaugeResult:
    """Transverse-gauge reduction A -> A - grad(phi)."""

    phi: Callable
    a_tilde: MagneticPotential
    psi_fn: Callable
    diagnostics: dict = field(default_factory=dict)


def make_uniform_magnetic(n: int, b: float, pairing=None) -> MagneticPotential:
    """Block-rotation generator M with M^T M = b^2 I and C(x) = M x / 2.

    pairing lists the coordinate pairs (1-based) that form the rotation
    blocks; default ((1,2),(3,4),...).
    """
    if n % 2:
        raise ValueError(
            f"n must be even: no antisymmetric matrix has M^T M proportional "
            f"to the identity in odd dimension (got n={n})"
        )
    if not b > 0:
        raise ValueError(f"b must be positive, got {b}")
    if pairing is None:
        pairing = [(j + 1, j + 2) for j in range(0, n, 2)]
    seen = sorted(i for pair in pairing for i in pair)
    if seen != list(range(1, n + 1)):
        raise ValueError(f"pairing {pairing} does not partition 1..{n}")
    m = np.zeros((n, n))
    for p, q in pairing:
        m[p - 1, q - 1] = -b
        m[q - 1, p - 1] = b
    return MagneticPotential(uniform_part=m, b_matrix_fn=lambda xs, m=m: _const_b(xs, m))


def _const_b(xs, m):
    shape = np.broadcast_shapes(*(np.shape(x) for x in xs))
    return np.broadcast_to(m.reshape(m.shape + (1,) * len(shape)), m.shape + shape)


def fd_jacobian(a_eval: Callable, xs, step: float) -> np.ndarray:
    """Central-difference J[j,k] = dA^j/dx_k of a static vector field."""
    n = len(xs)
    shape = np.broadcast_shapes(*(np.shape(x) for x in xs))
    jac = np.empty((n, n) + shape)
    for k in range(n):
        plus = list(xs)
        minus = list(xs)
        plus[k] = np.asarray(xs[k]) + step
        minus[k] = np.asarray(xs[k]) - step
        jac[:, k] = (np.asarray(a_eval(tuple(plus))) - np.asarray(a_eval(tuple(minus)))) / (
            2.0 * step
        )
    return jac


def b_matrix(mag: MagneticPotential, xs, step: float, t: float = 0.0) -> np.ndarray:
    """Field strength B = J - J^T, analytic when declared, else by differences."""
    if mag.b_matrix_fn is not None:
        return np.asarray(mag.b_matrix_fn(xs))
    jac = fd_jacobian(lambda pts: mag.total_a(pts, t), xs, step)
    return jac - np.swapaxes(jac, 0, 1)


def cronstrom_gauge(mag: MagneticPotential, grid: GridSpec) -> GaugeResult:
    """Reduce A to its transverse representative.

    psi_fn(x) = x^T B(x); the reduced potential -int_0^1 Psi(s x) ds is
    transverse identically because B is antisymmetric, and a uniform part
    C(x) = Mx/2 is reproduced unchanged by the same integral, so C is kept
    aside and only the general part is reduced.
    """
    step = grid.spacing

    def psi_fn(xs):
        bmat = b_matrix(mag, xs, step)
        x = stack_coords(xs)
        return np.einsum("j...,jk...->k...", x, bmat)

    def a_tilde_fn(xs, t=0.0, _quad=[None]):
        value, err = quad_vec(
            lambda s: psi_fn(tuple(s * np.asarray(x) for x in xs)),
            0.0,
            1.0,
            epsabs=1e-13,
            epsrel=1e-10,
        )
        _quad[0] = err
        out = -value
        if mag.uniform_part is not None:
            x = stack_coords(xs)
            out = out - 0.5 * np.einsum("jk,k...->j...", mag.uniform_part, x)
        return out

    def phi_fn(xs):
        value, _ = quad_vec(
            lambda s: mag.total_a(tuple(s * np.asarray(x) for x in xs), 0.0),
            0.0,
            1.0,
            epsabs=1e-13,
            epsrel=1e-10,
        )
        x = stack_coords(xs)
        return np.einsum("j...,j...->...", x, value)

    xs = grid.mesh()
    a_t = a_tilde_fn(xs)
    if mag.uniform_part is not None:
        x = stack_coords(xs)
        a_t = a_t + 0.5 * np.einsum("jk,k...->j...", mag.uniform_part, x)
    x = stack_coords(xs)
    radial = np.einsum("j...,j...->...", x, a_t)
    diagnostics = {
        "max_abs_x_dot_a_tilde": float(np.max(np.abs(radial))),
        "max_abs_a_tilde": float(np.max(np.linalg.norm(a_t, axis=0))),
    }
    reduced = MagneticPotential(
        a_fn=a_tilde_fn,
        b_matrix_fn=mag.b_matrix_fn,
        uniform_part=mag.uniform_part,
        xi=mag.xi,
    )
    return GaugeResult(phi=phi_fn, a_tilde=reduced, psi_fn=psi_fn, diagnostics=diagnostics)


def gauge_identity_residual(result: GaugeResult, grid: GridSpec, step: float = 1e-2,
                            stride: int = 4) -> float:
    """Sup residual of the radial-derivative identity of the reduction.

    Differentiating A_t = -int_0^1 Psi(sx) ds along x and integrating by
    parts in s gives (x . grad) A_t(x) = -Psi(x) - A_t(x); the returned
    sup of the defect (over a stride-subsampled mesh, normalized by
    max(1, sup|Psi|)) therefore measures only quadrature and differencing
    error.
    """
    axis = grid.axis()[::stride]
    xs = tuple(np.meshgrid(*([axis] * grid.dimension), indexing="ij"))
    n = grid.dimension

    def a_eval(pts):
        return np.asarray(result.a_tilde.total_a(pts, 0.0))

    jac = np.empty((n, n) + xs[0].shape)
    for k in range(n):
        shifted = []
        for delta in (2 * step, step, -step, -2 * step):
            pts = list(xs)
            pts[k] = xs[k] + delta
            shifted.append(a_eval(tuple(pts)))
        # five-point stencil so the differencing error sits well below tolerance
        jac[:, k] = (-shifted[0] + 8.0 * shifted[1] - 8.0 * shifted[2] + shifted[3]) / (
            12.0 * step
        )
    x = stack_coords(xs)
    radial_derivative = np.einsum("jk...,k...->j...", jac, x)
    psi = np.asarray(result.psi_fn(xs))
    defect = radial_derivative + psi + a_eval(xs)
    scale = max(1.0, float(np.max(np.linalg.norm(psi, axis=0))))
    return float(np.max(np.linalg.norm(defect, axis=0)) / scale)


def _tail_growing(values: np.ndarray, grid: GridSpec) -> bool:
    """True if radial-shell suprema keep growing in the outer decile."""
    r = np.sqrt(grid.radius_sq()).ravel()
    v = np.abs(values).ravel()
    h = grid.spacing
    idx = np.floor(r / h).astype(np.int64)
    nsh = int(np.floor(grid.half_width / h))
    sup = np.zeros(nsh)
    inside = idx < nsh
    np.maximum.at(sup, idx[inside], v[inside])
    tail = sup[int(0.9 * nsh):]
    return len(tail) >= 3 and bool(
        np.all(np.diff(tail) > 1e-9 * np.maximum(np.abs(tail[:-1]), 1e-300))
    )


def validate_HE(pot: ElectricPotential, alpha: float, beta: float, T: float, grid: GridSpec, n_times: int = 33) -> dict:
    """Sample the two bounded-potential conditions on the grid.

    Checks sup|v1| (with a growth flag standing in for unboundedness) and
    the windowed supremum sup_t || e^{T^2 |x|^2 / (alpha t + beta(T-t))^2}
    v2(.,t) ||_inf together with the exponential of sup_t ||Im v2||_inf.
    Report-only: failures are recorded, not raised.
    """
    if min(alpha, beta, T) <= 0:
        raise ValueError("alpha, beta, T must be positive")
    xs = grid.mesh()
    r2 = grid.radius_sq()
    report = {"v1_sup": 0.0, "v1_growing": False, "weighted_v2_sup_log": -math.inf,
              "im_v2_sup": 0.0, "weighted_v2_growing": False}
    if pot.v1 is not None:
        v1 = np.asarray(pot.v1(xs))
        report["v1_sup"] = float(np.max(np.abs(v1)))
        report["v1_growing"] = _tail_growing(v1, grid)
    if pot.v2 is not None:
        worst = -math.inf
        worst_field = None
        im_sup = 0.0
        for t in np.linspace(0.0, T, n_times):
            v2 = np.asarray(pot.v2(xs, float(t)), dtype=np.complex128)
            im_sup = max(im_sup, float(np.max(np.abs(v2.imag))))
            denom = (alpha * t + beta * (T - t)) ** 2
            with np.errstate(divide="ignore"):
                logw = np.log(np.maximum(np.abs(v2), 1e-300)) + T * T * r2 / denom
            peak = float(np.max(logw))
            if peak > worst:
                worst = peak
                worst_field = logw
        report["weighted_v2_sup_log"] = worst
        report["im_v2_sup"] = im_sup
        report["weighted_v2_growing"] = _tail_growing(np.exp(worst_field - worst), grid)
    report["he_pass"] = not (report["v1_growing"] or report["weighted_v2_growing"])
    return report


def validate_HM(mag: MagneticPotential, grid: GridSpec) -> dict:
    """Sample ||x^T B||_inf and the declared annihilating direction xi."""
    xs = grid.mesh()
    step = grid.spacing
    bmat = b_matrix(mag, xs, step)
    x = stack_coords(xs)
    psi = np.einsum("j...,jk...->k...", x, bmat)
    psi_mag = np.linalg.norm(psi, axis=0)
    report = {
        "psi_sup": float(np.max(psi_mag)),
        "psi_growing": _tail_growing(psi_mag, grid),
        "b_nonzero": bool(np.max(np.abs(bmat)) > 1e-12),
    }
    if mag.xi is not None:
        xib = np.einsum("j,jk...->k...", mag.xi, bmat)
        report["xi_b_sup"] = float(np.max(np.linalg.norm(xib, axis=0)))
        report["xi_pass"] = report["xi_b_sup"] < 1e-8
    elif grid.dimension <= 2 and report["b_nonzero"]:
        report["xi_feasible"] = False
        report["xi_note"] = (
            "no unit vector annihilates a nonzero antisymmetric field in "
            "dimension <= 2"
        )
    report["hm_pass"] = not report["psi_growing"] and report.get("xi_pass", True)
    return report
