"""Named builders behind the ``name{key=value,...}`` reference syntax.

Configuration files and command-line flags refer to model ingredients by
compact registry strings, e.g. ``uniform_magnetic{b=1}`` for a vector
potential or ``gaussian{beta_sq=4}`` for initial data.  This module
parses the strings, validates the parameter maps, and constructs the
objects.  Every builder consumes its parameters explicitly and rejects
leftovers, so a typo fails loudly instead of being silently ignored.
"""

from __future__ import annotations

import math
import re
from typing import Optional

import numpy as np

from . import transforms
from .closedform import CounterexampleParams, counterexample_field, counterexample_V
from .engine import EquationSpec, default_grid
from .fields import ElectricPotential, MagneticPotential, make_uniform_magnetic
from .grids import GridSpec, WaveField, field_from_callable, read_field
from .specfun import landau_eigenfunction, qho_eigenfunction

_REFERENCE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\{(.*)\}\s*)?$", re.S)


def parse_reference(text: str):
    """Split ``name{k=v,...}`` into the name and a typed parameter dict."""
    if not isinstance(text, str):
        raise ValueError(f"registry reference must be a string, got {type(text).__name__}")
    m = _REFERENCE.match(text)
    if m is None:
        raise ValueError(f"malformed registry reference {text!r}")
    name, body = m.group(1), m.group(2)
    params = {}
    if body and body.strip():
        for item in body.split(","):
            key, eq, raw = item.partition("=")
            key = key.strip()
            if not eq or not key:
                raise ValueError(
                    f"registry parameter {item.strip()!r} in {text!r} is not key=value"
                )
            if key in params:
                raise ValueError(f"duplicate parameter {key!r} in {text!r}")
            params[key] = _parse_value(raw.strip())
    return name, params


def _parse_value(raw: str):
    low = raw.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def format_reference(name: str, params: dict) -> str:
    """Canonical (sorted-key) registry string, for deterministic reports."""
    if not params:
        return name
    body = ",".join(f"{k}={_format_value(params[k])}" for k in sorted(params))
    return f"{name}{{{body}}}"


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


class _ParamMap:
    """Typed take-and-check access to a registry parameter map."""

    def __init__(self, owner: str, mapping: dict):
        self.owner = owner
        self.mapping = dict(mapping)

    def take(self, key, default=None, required=False, kind=None):
        if key not in self.mapping:
            if required:
                raise ValueError(f"{self.owner}: missing required parameter {key!r}")
            return default
        value = self.mapping.pop(key)
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValueError(f"{self.owner}: parameter {key}={value!r} must be a number")
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError(f"{self.owner}: parameter {key}={value!r} must be an integer")
            return value
        if kind is str:
            if not isinstance(value, str):
                raise ValueError(f"{self.owner}: parameter {key}={value!r} must be a string")
            return value
        if kind is bool:
            if not isinstance(value, bool):
                raise ValueError(f"{self.owner}: parameter {key}={value!r} must be a boolean")
            return value
        return value

    def finish(self):
        if self.mapping:
            raise ValueError(
                f"{self.owner}: unknown parameters {sorted(self.mapping)}"
            )


def _normalize(spec) -> tuple:
    """Accept either a registry string or an already-parsed (name, params)."""
    if isinstance(spec, str):
        return parse_reference(spec)
    if isinstance(spec, dict) and "name" in spec:
        extra = {k: v for k, v in spec.items() if k != "name"}
        name, inline = parse_reference(spec["name"])
        overlap = set(inline) & set(extra)
        if overlap:
            raise ValueError(f"parameters {sorted(overlap)} given twice for {spec['name']}")
        inline.update(extra)
        return name, inline
    raise ValueError(f"cannot interpret registry reference {spec!r}")


# ---------------------------------------------------------------------------
# grids and initial data


def build_grid(mapping: Optional[dict], dimension_hint: Optional[int] = None) -> GridSpec:
    """GridSpec from a config table; defaults depend on the dimension."""
    if mapping is None:
        if dimension_hint is None:
            raise ValueError("no grid given and no dimension to default from")
        return default_grid(dimension_hint)
    pm = _ParamMap("grid", mapping)
    dim = pm.take("dimension", dimension_hint, kind=int)
    if dim is None:
        raise ValueError("grid table needs a dimension")
    base = default_grid(dim)
    half = pm.take("half_width", base.half_width, kind=float)
    pts = pm.take("points_per_dim", base.points_per_dim, kind=int)
    pm.finish()
    return GridSpec(dim, half, pts)


def build_data(spec, grid: GridSpec, time: float = 0.0) -> WaveField:
    """Initial data on a grid from a registry reference.

    Kinds: gaussian (optionally chirped), eigenfunction (oscillator or
    landau), closed_form, file.
    """
    name, params = _normalize(spec)
    pm = _ParamMap(name, params)
    if name == "gaussian":
        beta_sq = pm.take("beta_sq", required=True, kind=float)
        chirp = pm.take("chirp", 0.0, kind=float)
        amp = pm.take("amplitude", 1.0, kind=float)
        pm.finish()
        if not beta_sq > 0:
            raise ValueError(f"gaussian: beta_sq = {beta_sq:.6g} must be positive")
        rate = 1.0 / beta_sq - 1j * chirp
        return field_from_callable(
            lambda xs: amp * np.exp(-rate * sum(np.asarray(x) ** 2 for x in xs)),
            grid,
            time,
        )
    if name == "eigenfunction":
        kind = pm.take("kind", "oscillator", kind=str)
        if kind == "oscillator":
            m = pm.take("m", required=True, kind=int)
            omega = pm.take("omega", required=True, kind=float)
            pm.finish()
            sample = qho_eigenfunction(m, omega, grid)
        elif kind == "landau":
            m = pm.take("m", required=True, kind=int)
            l = pm.take("l", required=True, kind=int)
            b = pm.take("b", required=True, kind=float)
            pm.finish()
            sample = landau_eigenfunction(m, l, b, grid)
        else:
            raise ValueError(f"eigenfunction: unknown kind {kind!r}")
        fld = sample.field
        fld.time = time
        return fld
    if name == "closed_form":
        cp = _closed_form_params(pm, default_n=grid.dimension)
        t0 = pm.take("time", time, kind=float)
        pm.finish()
        if cp.n != grid.dimension:
            raise ValueError(
                f"closed_form: n = {cp.n} does not match the grid dimension {grid.dimension}"
            )
        return counterexample_field(cp, grid, t0)
    if name == "file":
        path = pm.take("path", required=True, kind=str)
        pm.finish()
        fld = read_field(path)
        if fld.grid != grid:
            raise ValueError(
                f"file {path}: stored grid {fld.grid} does not match the requested {grid}"
            )
        return fld
    raise ValueError(f"unknown initial-data kind {name!r}")


def _closed_form_params(pm: _ParamMap, default_n: int = 1) -> CounterexampleParams:
    omega = pm.take("omega", required=True, kind=float)
    n = pm.take("n", default_n, kind=int)
    k = pm.take("k", required=True, kind=float)
    branch = pm.take("branch", "plus", kind=str)
    reading = pm.take("phase_reading", "quadratic", kind=str)
    orientation = pm.take("orientation", -1, kind=int)
    return CounterexampleParams(
        omega=omega, n=n, k=k, branch=branch,
        phase_reading=reading, orientation=orientation,
    )


# ---------------------------------------------------------------------------
# potentials


def build_electric(spec) -> Optional[ElectricPotential]:
    """One additive piece of the scalar potential from a registry reference."""
    name, params = _normalize(spec)
    pm = _ParamMap(name, params)
    if name == "none":
        pm.finish()
        return None
    if name == "harmonic_well":
        omega = pm.take("omega", required=True, kind=float)
        pm.finish()
        if not omega > 0:
            raise ValueError(f"harmonic_well: omega = {omega:.6g} must be positive")
        return ElectricPotential(quadratic_coeff=omega ** 2 / 4.0)
    if name == "repulsive_well":
        nu = pm.take("nu", required=True, kind=float)
        pm.finish()
        if not nu > 0:
            raise ValueError(f"repulsive_well: nu = {nu:.6g} must be positive")
        return ElectricPotential(quadratic_coeff=-(nu ** 2) / 4.0)
    if name == "counterexample_V":
        cp = _closed_form_params(pm, default_n=1)
        pm.finish()

        def v_fn(xs, t, cp=cp):
            return counterexample_V(xs, t, cp)

        return ElectricPotential(v2=v_fn)
    if name == "sin_drive":
        amp = pm.take("amplitude", 1.0, kind=float)
        freq = pm.take("frequency", 1.0, kind=float)
        axis = pm.take("axis", 0, kind=int)
        dim = pm.take("dimension", required=True, kind=int)
        pm.finish()
        if not 0 <= axis < dim:
            raise ValueError(f"sin_drive: axis {axis} outside dimension {dim}")

        def e_fn(t, amp=amp, freq=freq, axis=axis, dim=dim):
            out = np.zeros(dim)
            out[axis] = amp * math.sin(freq * t)
            return out

        return ElectricPotential(e_drive=e_fn)
    if name == "constant_drive":
        value = pm.take("value", required=True, kind=float)
        axis = pm.take("axis", 0, kind=int)
        dim = pm.take("dimension", required=True, kind=int)
        pm.finish()
        if not 0 <= axis < dim:
            raise ValueError(f"constant_drive: axis {axis} outside dimension {dim}")
        vec = np.zeros(dim)
        vec[axis] = value
        return ElectricPotential(e_drive=lambda t, vec=vec: vec)
    if name == "constant_phase":
        value = pm.take("value", required=True, kind=float)
        pm.finish()
        return ElectricPotential(phase_drive=lambda t, value=value: value)
    raise ValueError(f"unknown electric-potential kind {name!r}")


def merge_electric(parts) -> ElectricPotential:
    """Sum a list of ElectricPotential pieces component by component."""
    parts = [p for p in parts if p is not None]
    if not parts:
        return ElectricPotential()
    if len(parts) == 1:
        return parts[0]

    def chain(attr, combiner):
        fns = [getattr(p, attr) for p in parts if getattr(p, attr) is not None]
        if not fns:
            return None
        if len(fns) == 1:
            return fns[0]
        return combiner(fns)

    v1 = chain("v1", lambda fns: (lambda xs: sum(f(xs) for f in fns)))
    v2 = chain("v2", lambda fns: (lambda xs, t: sum(f(xs, t) for f in fns)))
    e_drive = chain(
        "e_drive",
        lambda fns: (lambda t: sum(np.asarray(f(t), dtype=np.float64) for f in fns)),
    )
    phase = chain("phase_drive", lambda fns: (lambda t: sum(f(t) for f in fns)))
    if any(callable(p.quadratic_coeff) for p in parts):
        quad = lambda t: sum(p.quadratic_at(t) for p in parts)
    else:
        quad = sum(float(p.quadratic_coeff) for p in parts)
    return ElectricPotential(v1=v1, v2=v2, e_drive=e_drive, phase_drive=phase,
                             quadratic_coeff=quad)


def build_magnetic(spec) -> Optional[MagneticPotential]:
    """Vector potential from a registry reference, or None."""
    name, params = _normalize(spec)
    pm = _ParamMap(name, params)
    if name == "none":
        pm.finish()
        return None
    if name == "uniform_magnetic":
        b = pm.take("b", required=True, kind=float)
        n = pm.take("n", 2, kind=int)
        pm.finish()
        return make_uniform_magnetic(n, b)
    if name == "gradient_of_gaussian":
        scale = pm.take("scale", 1.0, kind=float)
        n = pm.take("n", 2, kind=int)
        pm.finish()
        return MagneticPotential(
            a_fn=_gaussian_gradient(scale),
            b_matrix_fn=lambda xs, n=n: _zero_matrix(xs, n),
        )
    if name == "transverse_plus_gradient":
        b = pm.take("b", required=True, kind=float)
        scale = pm.take("scale", 1.0, kind=float)
        n = pm.take("n", 2, kind=int)
        pm.finish()
        uniform = make_uniform_magnetic(n, b)
        return MagneticPotential(
            a_fn=_gaussian_gradient(scale),
            b_matrix_fn=uniform.b_matrix_fn,
            uniform_part=uniform.uniform_part,
        )
    raise ValueError(f"unknown magnetic-potential kind {name!r}")


def _gaussian_gradient(scale: float):
    """grad of scale * exp(-|x|^2): curl-free, so pure gauge."""

    def a_fn(xs, t, scale=scale):
        r2 = sum(np.asarray(x, dtype=np.float64) ** 2 for x in xs)
        damp = -2.0 * scale * np.exp(-r2)
        shape = np.broadcast_shapes(*(np.shape(x) for x in xs))
        return np.stack([damp * np.broadcast_to(x, shape) for x in xs])

    return a_fn


def _zero_matrix(xs, n: int) -> np.ndarray:
    shape = np.broadcast_shapes(*(np.shape(x) for x in xs))
    return np.zeros((n, n) + shape)


def build_equation(mapping: dict, dimension: Optional[int] = None) -> EquationSpec:
    """EquationSpec from a config table.

    Keys: ``electric`` (registry string or list of them, summed),
    ``magnetic`` (registry string), ``window`` ([lo, hi]).
    """
    pm = _ParamMap("equation", mapping)
    electric_spec = pm.take("electric", [])
    magnetic_spec = pm.take("magnetic", "none")
    window = pm.take("window", None)
    pm.finish()
    if isinstance(electric_spec, (str, dict)):
        electric_spec = [electric_spec]
    electric = merge_electric([build_electric(s) for s in electric_spec])
    magnetic = build_magnetic(magnetic_spec)
    if (
        magnetic is not None
        and dimension is not None
        and magnetic.uniform_part is not None
        and magnetic.uniform_part.shape[0] != dimension
    ):
        raise ValueError(
            f"magnetic uniform part is {magnetic.uniform_part.shape[0]}-dimensional, "
            f"grid is {dimension}-dimensional"
        )
    if window is None:
        window = (-math.inf, math.inf)
    else:
        if len(window) != 2:
            raise ValueError(f"window must be [lo, hi], got {window!r}")
        window = (float(window[0]), float(window[1]))
    return EquationSpec(electric, magnetic, window)


# ---------------------------------------------------------------------------
# frame changes


def build_transform(spec, equation: Optional[EquationSpec] = None) -> transforms.TransformRecord:
    """TransformRecord from a registry reference.

    ``electric_removal`` reads the drive it cancels from the supplied
    equation, so it needs the equation context; the other kinds are
    self-contained.
    """
    name, params = _normalize(spec)
    pm = _ParamMap(name, params)
    if name == "harmonic_removal":
        omega = pm.take("omega", required=True, kind=float)
        T = pm.take("T", required=True, kind=float)
        pm.finish()
        return transforms.harmonic_removal(omega, T)
    if name == "repulsive_removal":
        nu = pm.take("nu", required=True, kind=float)
        T = pm.take("T", required=True, kind=float)
        pm.finish()
        return transforms.repulsive_removal(nu, T)
    if name == "electric_removal":
        T = pm.take("T", required=True, kind=float)
        pm.finish()
        if equation is None or equation.electric.e_drive is None:
            raise ValueError(
                "electric_removal needs an equation with a uniform drive to cancel"
            )
        return transforms.electric_removal(equation.electric.e_drive, T)
    if name == "rotating_frame":
        b = pm.take("b", required=True, kind=float)
        n = pm.take("n", 2, kind=int)
        lo = pm.take("t_min", -math.inf, kind=float)
        hi = pm.take("t_max", math.inf, kind=float)
        pm.finish()
        m = make_uniform_magnetic(n, b).uniform_part
        return transforms.rotating_frame(m, (lo, hi))
    if name == "phase_removal":
        value = pm.take("value", required=True, kind=float)
        pm.finish()
        return transforms.phase_removal(lambda t, value=value: value)
    raise ValueError(f"unknown transform kind {name!r}")


def build_chain(specs, equation: Optional[EquationSpec] = None):
    """Build a transform chain, threading the rewritten equation along.

    Returns (chain, final_equation); final_equation is None when no
    equation context was supplied.
    """
    records = []
    eq = equation
    for spec in specs:
        rec = build_transform(spec, eq)
        records.append(rec)
        if eq is not None:
            eq = rec.potential_rewrite(eq)
    return transforms.TransformChain(tuple(records)), eq
