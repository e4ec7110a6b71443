"""Config-driven scenario runner and command-line entry point.

Subcommands cover the supported workflows: verifying closed-form
solution/potential pairs, propagating equations with probe reports,
applying frame-change chains, reducing vector potentials to the
transverse gauge, tabulating oscillator and magnetic-shell spectra,
classifying weight-scale products against sharp thresholds, fitting
decay rates of stored fields, and measuring the dynamical decay product
on exactly evolved Gaussian data.

Scenario configs are TOML files with a [[scenario]] array; all model
ingredients are referenced by registry strings (see ``registry``).
Outputs are deterministic: identical config and seed produce
byte-identical CSV/JSON files (no timestamps; wall time goes to the log
only).

Exit codes: 0 when every check passes, 1 when an acceptance-style check
fails, 2 on configuration or guard errors (including unknown
subcommands and flags).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time as _time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import closedform, decay, engine, fields, registry, specfun
from .closedform import CounterexampleParams
from .engine import GuardError
from .grids import GridSpec, WaveField, write_field, read_field

log = logging.getLogger("schrodecay")


class ConfigError(Exception):
    """The config file or flag set cannot be executed as given."""


# ---------------------------------------------------------------------------
# deterministic serialization


def _fmt(x) -> str:
    """Fixed shortest-round-trip-ish float format for CSV cells."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".12g")


def _jsonify(obj):
    """Recursively convert to JSON-safe values; non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return {"re": _jsonify(obj.real), "im": _jsonify(obj.imag)}
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def _write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonify(obj), indent=2, sort_keys=True) + "\n")
    return path


def _write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([c if isinstance(c, str) else _fmt(c) for c in row])
    return path


# ---------------------------------------------------------------------------
# config plumbing


@dataclass
class RunContext:
    out_dir: Path
    seed: int


def _table(mapping, owner: str, allowed: set) -> dict:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"{owner}: unknown keys {sorted(unknown)}")
    return dict(mapping)


def _require(mapping: dict, owner: str, key: str):
    if key not in mapping:
        raise ConfigError(f"{owner}: missing required key {key!r}")
    return mapping[key]


def _scenario_seed(base: int, name: str) -> int:
    return (int(base) ^ zlib.crc32(name.encode())) & 0xFFFFFFFF


def _read_config_bytes(path) -> tuple:
    """Raw bytes of a config; ``bundled:<name>`` reads from package data."""
    text = str(path)
    if text.startswith("bundled:"):
        name = text[len("bundled:"):]
        res = resources.files("schrodecay").joinpath("configs").joinpath(f"{name}.toml")
        if not res.is_file():
            raise ConfigError(f"no bundled config named {name!r}")
        return res.read_bytes(), text
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} does not exist")
    return p.read_bytes(), str(p)


def load_config(path) -> dict:
    raw, label = _read_config_bytes(path)
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{label}: {exc}") from exc
    scenarios = data.get("scenario")
    if not scenarios or not isinstance(scenarios, list):
        raise ConfigError(f"{label}: config defines no [[scenario]] tables")
    names = [s.get("name") for s in scenarios]
    if any(not isinstance(n, str) or not n for n in names):
        raise ConfigError(f"{label}: every scenario needs a nonempty string name")
    if len(set(names)) != len(names):
        raise ConfigError(f"{label}: scenario names must be unique")
    return data


# ---------------------------------------------------------------------------
# scenario executors


def _scenario_verify(sc: dict, ctx: RunContext) -> dict:
    sc = _table(sc, f"scenario {sc.get('name')}", {
        "name", "task", "omega", "n", "k", "branch", "magnetic", "grid",
        "n_times", "span", "tolerance", "dt_fd",
    })
    name = sc["name"]
    params = CounterexampleParams(
        omega=float(_require(sc, name, "omega")),
        n=int(sc.get("n", 1)),
        k=float(_require(sc, name, "k")),
        branch=sc.get("branch", "plus"),
    )
    magnetic = bool(sc.get("magnetic", False))
    grid = registry.build_grid(sc.get("grid"), dimension_hint=params.n)
    tolerance = float(sc.get("tolerance", 1e-6))
    started = _time.perf_counter()
    report = closedform.verification_report(
        params,
        magnetic=magnetic,
        grid=grid,
        n_times=int(sc.get("n_times", 20)),
        span=float(sc.get("span", 0.45)),
        dt_fd=sc.get("dt_fd"),
    )
    elapsed = _time.perf_counter() - started
    passed = report["max_residual"] < tolerance
    log.info(
        "scenario %s: max residual %.3e (tolerance %.1e, reading %s) in %.1f s",
        name, report["max_residual"], tolerance, report["selected_reading"], elapsed,
    )
    path = _write_json(ctx.out_dir / f"{name}.json", report)
    return {
        "name": name,
        "task": "verify_closed_form",
        "passed": bool(passed),
        "checks": [{
            "check": "max_residual",
            "value": report["max_residual"],
            "bound": tolerance,
            "passed": bool(passed),
        }],
        "outputs": [path.name],
    }


def _oracle_fn(spec: str, data0: WaveField):
    name, params = registry.parse_reference(spec)
    pm = registry._ParamMap(name, params)
    if name == "none":
        pm.finish()
        return None
    if name == "free":
        pm.finish()
        return lambda t: engine.free_oracle(data0, t)
    if name == "harmonic":
        omega = pm.take("omega", required=True, kind=float)
        pm.finish()
        return lambda t: engine.harmonic_oracle(data0, omega, t)
    if name == "magnetic":
        b = pm.take("b", required=True, kind=float)
        pm.finish()
        return lambda t: engine.magnetic_oracle(data0, b, t)
    raise ConfigError(f"unknown oracle kind {name!r}")


def _scenario_simulate(sc: dict, ctx: RunContext) -> dict:
    sc = _table(sc, f"scenario {sc.get('name')}", {
        "name", "task", "grid", "equation", "data", "data_time", "dt", "times",
        "alpha_sq", "fit", "oracle", "oracle_tolerance", "save_fields",
    })
    name = sc["name"]
    grid_tab = _require(sc, name, "grid")
    grid = registry.build_grid(grid_tab)
    eq = registry.build_equation(sc.get("equation", {}), grid.dimension)
    data_time = float(sc.get("data_time", 0.0))
    data = registry.build_data(_require(sc, name, "data"), grid, time=data_time)
    dt = float(_require(sc, name, "dt"))
    times = [float(t) for t in _require(sc, name, "times")]
    if not times:
        raise ConfigError(f"{name}: times must be a nonempty list")
    alpha_sq = [float(a) for a in sc.get("alpha_sq", [])]
    do_fit = bool(sc.get("fit", False))
    oracle = _oracle_fn(sc.get("oracle", "none"), data.copy())
    oracle_tol = sc.get("oracle_tolerance")
    save_fields = bool(sc.get("save_fields", False))

    header = ["time", "l2_norm", "boundary_ratio"]
    header += [f"weighted_{_fmt(a)}" for a in alpha_sq]
    if do_fit:
        header += ["fit_rate", "fit_poly_correction", "fit_residual"]
    if oracle is not None:
        header += ["oracle_error"]

    rows = []
    outputs = []
    checks = []
    fld = data
    started = _time.perf_counter()
    worst_oracle = 0.0
    for idx, t in enumerate(times):
        fld = engine.propagate(fld, eq, t, dt)
        row = [t, fld.norm(), fld.boundary_ratio()]
        for a in alpha_sq:
            row.append(decay.weighted_norm(fld, a))
        if do_fit:
            rep = decay.fit_rate(fld)
            row += [rep.rate, rep.poly_correction, rep.fit_residual]
        if oracle is not None:
            ref = oracle(t)
            err = _rel_l2(fld, ref)
            worst_oracle = max(worst_oracle, err)
            row.append(err)
        rows.append(row)
        if save_fields:
            outputs.append(write_field(fld, ctx.out_dir / f"{name}_{idx:03d}.fld").name)
    log.info("scenario %s: %d probes in %.1f s", name, len(times), _time.perf_counter() - started)
    passed = True
    if oracle is not None and oracle_tol is not None:
        ok = worst_oracle < float(oracle_tol)
        checks.append({
            "check": "oracle_error",
            "value": worst_oracle,
            "bound": float(oracle_tol),
            "passed": bool(ok),
        })
        passed = passed and ok
    path = _write_csv(ctx.out_dir / f"{name}.csv", header, rows)
    outputs.insert(0, path.name)
    return {"name": name, "task": "simulate", "passed": bool(passed),
            "checks": checks, "outputs": outputs}


def _rel_l2(fld: WaveField, ref: WaveField) -> float:
    diff = float(np.sqrt(np.sum(np.abs(fld.values - ref.values) ** 2)))
    base = float(np.sqrt(np.sum(np.abs(ref.values) ** 2)))
    return diff / base if base > 0 else diff


def _equation_summary(eq: engine.EquationSpec, t: float) -> dict:
    el = eq.electric
    return {
        "window": [eq.window[0], eq.window[1]],
        "quadratic_coeff": el.quadratic_at(t),
        "has_static_part": el.v1 is not None,
        "has_time_dependent_part": el.v2 is not None,
        "has_uniform_drive": el.e_drive is not None,
        "has_phase_drive": el.phase_drive is not None,
        "has_magnetic": eq.has_magnetic(),
    }


def _scenario_transform(sc: dict, ctx: RunContext) -> dict:
    sc = _table(sc, f"scenario {sc.get('name')}", {
        "name", "task", "grid", "equation", "data", "data_time", "chain",
        "dilation", "round_trip", "tolerance", "save_fields",
    })
    name = sc["name"]
    grid = registry.build_grid(_require(sc, name, "grid"))
    eq = registry.build_equation(sc.get("equation", {}), grid.dimension) if "equation" in sc else None
    data_time = float(sc.get("data_time", 0.0))
    data = registry.build_data(_require(sc, name, "data"), grid, time=data_time)
    chain, rewritten = registry.build_chain(_require(sc, name, "chain"), eq)
    dilation = sc.get("dilation", "spline")
    transformed = chain.apply(data.copy(), dilation=dilation)
    result = {
        "chain": chain.describe(),
        "input": {"time": data.time, "l2_norm": data.norm(),
                  "boundary_ratio": data.boundary_ratio()},
        "output": {"time": transformed.time, "l2_norm": transformed.norm(),
                   "boundary_ratio": transformed.boundary_ratio()},
    }
    if rewritten is not None:
        result["rewritten_equation"] = _equation_summary(rewritten, transformed.time)
    checks = []
    passed = True
    if bool(sc.get("round_trip", False)):
        back = chain.inverse().apply(transformed.copy(), dilation=dilation)
        err = float(np.max(np.abs(back.values - data.values)))
        result["round_trip_max_error"] = err
        if "tolerance" in sc:
            ok = err < float(sc["tolerance"])
            checks.append({"check": "round_trip_max_error", "value": err,
                           "bound": float(sc["tolerance"]), "passed": bool(ok)})
            passed = passed and ok
        log.info("scenario %s: round-trip max error %.3e", name, err)
    outputs = [_write_json(ctx.out_dir / f"{name}.json", result).name]
    if bool(sc.get("save_fields", False)):
        outputs.append(write_field(transformed, ctx.out_dir / f"{name}.fld").name)
    return {"name": name, "task": "transform", "passed": bool(passed),
            "checks": checks, "outputs": outputs}


def _gauge_report(field_spec: str, grid: GridSpec, step: float, stride: int) -> dict:
    mag = registry.build_magnetic(field_spec)
    if mag is None:
        raise ConfigError("gauge: the field reference resolved to no potential")
    result = fields.cronstrom_gauge(mag, grid)
    report = dict(result.diagnostics)
    report["d_identity_residual"] = fields.gauge_identity_residual(
        result, grid, step=step, stride=stride
    )
    if mag.uniform_part is not None:
        xs = grid.mesh()
        x = fields.stack_coords(xs)
        uniform = 0.5 * np.einsum("jk,k...->j...", mag.uniform_part, x)
        total = result.a_tilde.total_a(xs, 0.0)
        report["transverse_recovery_error"] = float(
            np.max(np.linalg.norm(total - uniform, axis=0))
        )
    report["hm_validation"] = fields.validate_HM(result.a_tilde, grid)
    report["field"] = field_spec
    report["grid"] = {"dimension": grid.dimension, "half_width": grid.half_width,
                      "points_per_dim": grid.points_per_dim}
    return report


def _scenario_gauge(sc: dict, ctx: RunContext) -> dict:
    sc = _table(sc, f"scenario {sc.get('name')}", {
        "name", "task", "field", "grid", "step", "stride",
        "tolerance_radial", "tolerance_identity",
    })
    name = sc["name"]
    grid = registry.build_grid(sc.get("grid"), dimension_hint=2)
    report = _gauge_report(
        _require(sc, name, "field"), grid,
        step=float(sc.get("step", 1e-2)), stride=int(sc.get("stride", 8)),
    )
    tol_r = float(sc.get("tolerance_radial", 1e-9))
    tol_i = float(sc.get("tolerance_identity", 1e-6))
    checks = [
        {"check": "max_abs_x_dot_a_tilde",
         "value": report["max_abs_x_dot_a_tilde"], "bound": tol_r,
         "passed": bool(report["max_abs_x_dot_a_tilde"] < tol_r)},
        {"check": "d_identity_residual",
         "value": report["d_identity_residual"], "bound": tol_i,
         "passed": bool(report["d_identity_residual"] < tol_i)},
    ]
    passed = all(c["passed"] for c in checks)
    log.info("scenario %s: x.A %.3e, identity %.3e", name,
             report["max_abs_x_dot_a_tilde"], report["d_identity_residual"])
    path = _write_json(ctx.out_dir / f"{name}.json", report)
    return {"name": name, "task": "gauge", "passed": bool(passed),
            "checks": checks, "outputs": [path.name]}


def _oscillator_rows(omega: float, max_m: int, grid: GridSpec):
    q = omega ** 2 / 4.0
    r2 = grid.radius_sq()
    for entry in specfun.oscillator_spectrum(omega, max_m):
        sample = specfun.qho_eigenfunction(entry.m, omega, grid)
        fld = sample.field
        h_psi = -engine.laplacian(fld).values + q * r2 * fld.values
        resid = np.sqrt(np.sum(np.abs(h_psi - entry.energy * fld.values) ** 2))
        resid /= np.sqrt(np.sum(np.abs(fld.values) ** 2))
        yield [entry.m, entry.energy, float(resid)]


def _landau_rows(b: float, pairs, grid: GridSpec):
    mag = fields.make_uniform_magnetic(2, b) if b > 0 else _negative_uniform(b)
    for (m, l) in pairs:
        entry = specfun.landau_entry(m, l, b)
        sample = specfun.landau_eigenfunction(m, l, b, grid)
        fld = sample.field
        h_psi = -engine.magnetic_laplacian(fld, mag).values
        resid = np.sqrt(np.sum(np.abs(h_psi - entry.energy * fld.values) ** 2))
        resid /= np.sqrt(np.sum(np.abs(fld.values) ** 2))
        yield [entry.m, entry.l, entry.k, entry.energy, float(resid)]


def _negative_uniform(b: float) -> fields.MagneticPotential:
    mag = fields.make_uniform_magnetic(2, abs(b))
    flipped = -mag.uniform_part
    return fields.MagneticPotential(
        uniform_part=flipped,
        b_matrix_fn=lambda xs, m=flipped: fields._const_b(xs, m),
    )


def _scenario_eigen(sc: dict, ctx: RunContext) -> dict:
    sc = _table(sc, f"scenario {sc.get('name')}", {
        "name", "task", "kind", "omega", "b", "max_m", "l_min", "l_max",
        "grid", "tolerance",
    })
    name = sc["name"]
    kind = sc.get("kind", "oscillator")
    tolerance = float(sc.get("tolerance", 1e-8))
    if kind == "oscillator":
        omega = float(_require(sc, name, "omega"))
        grid = registry.build_grid(sc.get("grid"), dimension_hint=1)
        header = ["m", "energy", "residual"]
        rows = list(_oscillator_rows(omega, int(sc.get("max_m", 10)), grid))
    elif kind == "landau":
        b = float(_require(sc, name, "b"))
        grid = registry.build_grid(sc.get("grid"), dimension_hint=2)
        l_min, l_max = int(sc.get("l_min", -2)), int(sc.get("l_max", 2))
        pairs = [(m, l) for m in range(int(sc.get("max_m", 1)) + 1)
                 for l in range(l_min, l_max + 1)]
        header = ["m", "l", "k", "energy", "residual"]
        rows = list(_landau_rows(b, pairs, grid))
    else:
        raise ConfigError(f"{name}: unknown eigen kind {kind!r}")
    worst = max(row[-1] for row in rows)
    passed = worst < tolerance
    log.info("scenario %s: %d levels, worst residual %.3e", name, len(rows), worst)
    path = _write_csv(ctx.out_dir / f"{name}.csv", header, rows)
    return {"name": name, "task": "eigen", "passed": bool(passed),
            "checks": [{"check": "eigen_residual", "value": worst,
                        "bound": tolerance, "passed": bool(passed)}],
            "outputs": [path.name]}


_THRESHOLD_KINDS = {
    "free": "free_4T",
    "harmonic": "harmonic_4sin",
    "repulsive": "repulsive_4sinh",
    "magnetic": "magnetic_4sin",
}


def _threshold_params(kind: str, case: dict, owner: str) -> dict:
    params = {"T": float(_require(case, owner, "T"))}
    if kind == "harmonic":
        params["omega"] = float(_require(case, owner, "omega"))
    elif kind == "repulsive":
        params["nu"] = float(_require(case, owner, "nu"))
    elif kind == "magnetic":
        params["b"] = float(_require(case, owner, "b"))
    return params


def _scenario_thresholds(sc: dict, ctx: RunContext) -> dict:
    sc = _table(sc, f"scenario {sc.get('name')}", {"name", "task", "cases"})
    name = sc["name"]
    header = ["kind", "T", "coefficient", "alpha_sq", "beta_sq", "product",
              "threshold", "classification"]
    rows = []
    checks = []
    passed = True
    for i, case in enumerate(_require(sc, name, "cases")):
        owner = f"{name}.cases[{i}]"
        case = _table(case, owner, {"kind", "T", "omega", "nu", "b",
                                    "alpha_sq", "beta_sq", "expect"})
        kind = _require(case, owner, "kind")
        if kind not in _THRESHOLD_KINDS:
            raise ConfigError(f"{owner}: unknown kind {kind!r}")
        params = _threshold_params(kind, case, owner)
        alpha_sq = float(_require(case, owner, "alpha_sq"))
        beta_sq = float(_require(case, owner, "beta_sq"))
        verdict = decay.classify(alpha_sq, beta_sq, _THRESHOLD_KINDS[kind], params)
        coeff = params.get("omega", params.get("nu", params.get("b", 0.0)))
        rows.append([kind, params["T"], coeff, alpha_sq, beta_sq,
                     verdict.product, verdict.threshold, verdict.classification])
        if "expect" in case:
            ok = verdict.classification == case["expect"]
            checks.append({"check": owner, "value": verdict.classification,
                           "bound": case["expect"], "passed": bool(ok)})
            passed = passed and ok
    path = _write_csv(ctx.out_dir / f"{name}.csv", header, rows)
    return {"name": name, "task": "thresholds", "passed": bool(passed),
            "checks": checks, "outputs": [path.name]}


def _decay_report_dict(rep: decay.DecayReport) -> dict:
    return {
        "rate": rep.rate,
        "poly_correction": rep.poly_correction,
        "fit_window": [rep.fit_window[0], rep.fit_window[1]],
        "fit_residual": rep.fit_residual,
        "floor_hit": rep.floor_hit,
        "trusted": rep.trusted(),
    }


def _scenario_decay_fit(sc: dict, ctx: RunContext) -> dict:
    sc = _table(sc, f"scenario {sc.get('name')}", {
        "name", "task", "input", "grid", "data", "data_time", "window",
        "alpha_sq", "fourier", "jitter_trials", "jitter_rel",
    })
    name = sc["name"]
    if "input" in sc:
        fld = read_field(sc["input"])
    else:
        grid = registry.build_grid(_require(sc, name, "grid"))
        fld = registry.build_data(_require(sc, name, "data"), grid,
                                  time=float(sc.get("data_time", 0.0)))
    window = sc.get("window")
    if window is not None:
        window = (float(window[0]), float(window[1]))
    rep = decay.fit_rate(fld, window)
    result = {"fit": _decay_report_dict(rep), "time": fld.time,
              "l2_norm": fld.norm()}
    weighted = {}
    for a in sc.get("alpha_sq", []):
        value = decay.weighted_norm(fld, float(a))
        weighted[_fmt(a)] = "divergent" if math.isinf(value) else value
    if weighted:
        result["weighted_norms"] = weighted
    if bool(sc.get("fourier", False)):
        rep_k = decay.fourier_decay(fld)
        result["fourier_fit"] = _decay_report_dict(rep_k)
        result["duality_product"] = decay.duality_product(rep, rep_k)
    trials = int(sc.get("jitter_trials", 0))
    if trials > 0:
        rel = float(sc.get("jitter_rel", 0.05))
        rng = np.random.default_rng(_scenario_seed(ctx.seed, name))
        lo, hi = rep.fit_window
        rates = []
        for _ in range(trials):
            f_lo = 1.0 + rel * float(rng.uniform(-1.0, 1.0))
            f_hi = 1.0 + rel * float(rng.uniform(-1.0, 1.0))
            rates.append(decay.fit_rate(fld, (lo * f_lo, hi * f_hi)).rate)
        result["jitter"] = {
            "trials": trials, "relative_spread": rel,
            "rate_min": float(min(rates)), "rate_max": float(max(rates)),
            "rate_ptp_over_rate": float((max(rates) - min(rates)) / rep.rate)
            if rep.rate else "nan",
        }
    path = _write_json(ctx.out_dir / f"{name}.json", result)
    log.info("scenario %s: rate %.6g, poly %.3g", name, rep.rate, rep.poly_correction)
    return {"name": name, "task": "decay_fit", "passed": True, "checks": [],
            "outputs": [path.name]}


def _scenario_hardy(sc: dict, ctx: RunContext) -> dict:
    """Dynamical decay product on exactly evolved near-extremal Gaussians.

    For each horizon T the data is exp(-(p - i q)|x|^2) with the chirp q
    chosen just inside the focusing extremal, q = (1 - delta_coeff*T)/(4T);
    the product of the measured decay scales at times 0 and T then sits
    just above the sharp free-case value 4T.
    """
    sc = _table(sc, f"scenario {sc.get('name')}", {
        "name", "task", "times", "p", "delta_coeff", "grid", "ratio_bounds",
    })
    name = sc["name"]
    times = [float(t) for t in _require(sc, name, "times")]
    p = float(sc.get("p", 0.25))
    delta_coeff = float(sc.get("delta_coeff", 0.02))
    grid = registry.build_grid(sc.get("grid"), dimension_hint=1)
    bounds = sc.get("ratio_bounds", [1.0, 1.001])
    header = ["T", "rate_initial", "rate_final", "alpha_beta", "threshold",
              "ratio", "classification"]
    rows = []
    checks = []
    passed = True
    for T in times:
        if not T > 0:
            raise ConfigError(f"{name}: horizon T = {T} must be positive")
        q = (1.0 - delta_coeff * T) / (4.0 * T)
        data = registry.build_data(f"gaussian{{beta_sq={1.0 / p!r},chirp={q!r}}}", grid)
        evolved = engine.free_oracle(data, T)
        rep0 = decay.fit_rate(data)
        rep1 = decay.fit_rate(evolved)
        alpha_sq = 1.0 / rep0.rate
        beta_sq = 1.0 / rep1.rate
        verdict = decay.classify(alpha_sq, beta_sq, "free_4T", {"T": T})
        ratio = verdict.product / verdict.threshold
        rows.append([T, rep0.rate, rep1.rate, verdict.product,
                     verdict.threshold, ratio, verdict.classification])
        ok = bounds[0] <= ratio <= bounds[1] and verdict.classification != "below_threshold"
        checks.append({"check": f"ratio_T_{_fmt(T)}", "value": ratio,
                       "bound": [float(bounds[0]), float(bounds[1])],
                       "passed": bool(ok)})
        passed = passed and ok
        log.info("scenario %s: T=%s product %.8g vs 4T=%.8g (ratio %.8f)",
                 name, _fmt(T), verdict.product, verdict.threshold, ratio)
    path = _write_csv(ctx.out_dir / f"{name}.csv", header, rows)
    return {"name": name, "task": "hardy", "passed": bool(passed),
            "checks": checks, "outputs": [path.name]}


_TASKS = {
    "verify_closed_form": _scenario_verify,
    "simulate": _scenario_simulate,
    "transform": _scenario_transform,
    "gauge": _scenario_gauge,
    "eigen": _scenario_eigen,
    "thresholds": _scenario_thresholds,
    "decay_fit": _scenario_decay_fit,
    "hardy": _scenario_hardy,
}


def execute_scenarios(scenarios, ctx: RunContext, jobs: int = 1) -> list:
    """Run scenario tables (in declared order) and return result dicts."""

    def run_one(sc):
        task = sc.get("task")
        if task not in _TASKS:
            raise ConfigError(
                f"scenario {sc.get('name')}: unknown task {task!r}; "
                f"expected one of {sorted(_TASKS)}"
            )
        return _TASKS[task](sc, ctx)

    if jobs > 1 and len(scenarios) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_one, scenarios))
    return [run_one(sc) for sc in scenarios]


def _run_config(config_path, out_dir, jobs: int) -> int:
    data = load_config(config_path)
    ctx = RunContext(out_dir=Path(out_dir), seed=int(data.get("seed", 0)))
    results = execute_scenarios(data["scenario"], ctx, jobs=jobs)
    status = all(r["passed"] for r in results)
    summary = {"status": "pass" if status else "fail", "scenarios": results}
    _write_json(ctx.out_dir / "summary.json", summary)
    for r in results:
        log.info("scenario %-28s %s", r["name"], "PASS" if r["passed"] else "FAIL")
    return 0 if status else 1


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_run(args) -> int:
    return _run_config(args.config, args.out_dir or "out", args.jobs)


def _filtered_run(args, task: str) -> int:
    data = load_config(args.config)
    scenarios = [s for s in data["scenario"] if s.get("task") == task]
    if args.scenario:
        scenarios = [s for s in scenarios if s["name"] == args.scenario]
    if not scenarios:
        raise ConfigError(
            f"{args.config}: no {task} scenario"
            + (f" named {args.scenario!r}" if args.scenario else "")
        )
    ctx = RunContext(out_dir=Path(args.out_dir or "out"), seed=int(data.get("seed", 0)))
    results = execute_scenarios(scenarios, ctx, jobs=args.jobs)
    return 0 if all(r["passed"] for r in results) else 1


def _cmd_simulate(args) -> int:
    return _filtered_run(args, "simulate")


def _cmd_transform(args) -> int:
    return _filtered_run(args, "transform")


def _cmd_verify(args) -> int:
    sc = {
        "name": "verify",
        "task": "verify_closed_form",
        "omega": args.omega,
        "n": args.n,
        "k": args.k,
        "branch": args.branch,
        "magnetic": args.magnetic,
        "n_times": args.n_times,
        "span": args.span,
        "tolerance": args.tolerance,
    }
    if args.points or args.half_width:
        base = engine.default_grid(args.n)
        sc["grid"] = {
            "dimension": args.n,
            "half_width": args.half_width or base.half_width,
            "points_per_dim": args.points or base.points_per_dim,
        }
    ctx = RunContext(out_dir=Path(args.out_dir or "out"), seed=0)
    result = _scenario_verify(sc, ctx)
    report = json.loads((ctx.out_dir / result["outputs"][0]).read_text())
    print(f"selected reading: {report['selected_reading']}")
    print(f"max residual:     {_fmt(report['max_residual'])} "
          f"(tolerance {_fmt(args.tolerance)})")
    for side in ("minus", "plus"):
        end = report["endpoint"][side]
        print(f"endpoint t={'-' if side == 'minus' else '+'}1/2: "
              f"rate {_fmt(end['fit_rate'])} "
              f"(reference {_fmt(end['reference_rate'])}), "
              f"poly {_fmt(end['poly_correction'])}, "
              f"weighted norm at sharp scale: {end['weighted_norm_at_sharp_scale']}")
    print("PASS" if result["passed"] else "FAIL")
    return 0 if result["passed"] else 1


def _cmd_gauge(args) -> int:
    grid = GridSpec(args.dimension, args.half_width, args.points)
    report = _gauge_report(args.field, grid, step=args.step, stride=args.stride)
    ok_r = report["max_abs_x_dot_a_tilde"] < args.tolerance_radial
    ok_i = report["d_identity_residual"] < args.tolerance_identity
    if args.out_dir:
        _write_json(Path(args.out_dir) / "gauge.json", report)
    print(f"field: {args.field}")
    print(f"max |x . A_t|:        {_fmt(report['max_abs_x_dot_a_tilde'])}")
    print(f"max |A_t|:            {_fmt(report['max_abs_a_tilde'])}")
    print(f"D-identity residual:  {_fmt(report['d_identity_residual'])}")
    if "transverse_recovery_error" in report:
        print(f"transverse recovery:  {_fmt(report['transverse_recovery_error'])}")
    print("PASS" if (ok_r and ok_i) else "FAIL")
    return 0 if (ok_r and ok_i) else 1


def _cmd_eigen(args) -> int:
    sc = {"name": "eigen", "task": "eigen", "kind": args.kind,
          "max_m": args.max_m, "tolerance": args.tolerance}
    if args.kind == "oscillator":
        if args.omega is None:
            raise ConfigError("eigen: --omega is required for the oscillator table")
        sc["omega"] = args.omega
    else:
        if args.b is None:
            raise ConfigError("eigen: --b is required for the landau table")
        sc.update({"b": args.b, "l_min": args.l_min, "l_max": args.l_max})
    ctx = RunContext(out_dir=Path(args.out_dir or "out"), seed=0)
    result = _scenario_eigen(sc, ctx)
    text = (ctx.out_dir / result["outputs"][0]).read_text().strip().splitlines()
    for line in text:
        print("  ".join(f"{cell:>12}" for cell in line.split(",")))
    print("PASS" if result["passed"] else "FAIL")
    return 0 if result["passed"] else 1


def _cmd_thresholds(args) -> int:
    case = {"kind": args.kind, "T": args.T,
            "alpha_sq": args.alpha ** 2, "beta_sq": args.beta ** 2}
    if args.kind == "harmonic":
        if args.omega is None:
            raise ConfigError("thresholds: --omega is required for kind harmonic")
        case["omega"] = args.omega
    elif args.kind == "repulsive":
        if args.nu is None:
            raise ConfigError("thresholds: --nu is required for kind repulsive")
        case["nu"] = args.nu
    elif args.kind == "magnetic":
        if args.b is None:
            raise ConfigError("thresholds: --b is required for kind magnetic")
        case["b"] = args.b
    params = _threshold_params(args.kind, case, "thresholds")
    verdict = decay.classify(case["alpha_sq"], case["beta_sq"],
                             _THRESHOLD_KINDS[args.kind], params)
    print(f"{verdict.classification}: product {_fmt(verdict.product)} vs "
          f"threshold {_fmt(verdict.threshold)} ({verdict.kind})")
    return 0


def _cmd_decay_fit(args) -> int:
    sc = {"name": "decay_fit", "task": "decay_fit", "input": args.input}
    if args.window:
        sc["window"] = args.window
    if args.alpha_sq:
        sc["alpha_sq"] = args.alpha_sq
    if args.fourier:
        sc["fourier"] = True
    if args.jitter_trials:
        sc["jitter_trials"] = args.jitter_trials
        sc["jitter_rel"] = args.jitter_rel
    ctx = RunContext(out_dir=Path(args.out_dir or "out"), seed=args.seed)
    result = _scenario_decay_fit(sc, ctx)
    print((ctx.out_dir / result["outputs"][0]).read_text(), end="")
    return 0


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=None,
                        help="directory for reports and snapshots (default ./out)")
    common.add_argument("--jobs", type=int, default=1,
                        help="scenario-level parallelism for config runs")
    common.add_argument("--log-level", default="info",
                        choices=["debug", "info", "warning", "error"])

    parser = argparse.ArgumentParser(
        prog="schrodecay",
        description="Schrodinger-evolution Gaussian-decay toolkit: scenario "
                    "runner and analysis commands.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("run", parents=[common],
                       help="execute every scenario in a TOML config")
    p.add_argument("--config", required=True,
                   help="config path, or bundled:<name> for a packaged config")
    p.set_defaults(handler=_cmd_run)

    p = sub.add_parser("simulate", parents=[common],
                       help="run the simulate scenarios of a config")
    p.add_argument("--config", required=True)
    p.add_argument("--scenario", default=None, help="run only this scenario")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("transform", parents=[common],
                       help="run the transform scenarios of a config")
    p.add_argument("--config", required=True)
    p.add_argument("--scenario", default=None, help="run only this scenario")
    p.set_defaults(handler=_cmd_transform)

    p = sub.add_parser("verify-closed-form", parents=[common],
                       help="residual-verify a closed-form solution/potential pair")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--branch", choices=["plus", "minus"], default="plus")
    p.add_argument("--magnetic", action="store_true",
                   help="verify the two-dimensional transverse-gauge pairing")
    p.add_argument("--n-times", type=int, default=20)
    p.add_argument("--span", type=float, default=0.45)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--half-width", type=float, default=None)
    p.set_defaults(handler=_cmd_verify)

    p = sub.add_parser("gauge", parents=[common],
                       help="transverse-gauge reduction report for a vector potential")
    p.add_argument("--field", default="transverse_plus_gradient{b=1}",
                   help="registry reference of the potential")
    p.add_argument("--dimension", type=int, default=2)
    p.add_argument("--half-width", type=float, default=12.0)
    p.add_argument("--points", type=int, default=128)
    p.add_argument("--step", type=float, default=1e-2)
    p.add_argument("--stride", type=int, default=8)
    p.add_argument("--tolerance-radial", type=float, default=1e-9)
    p.add_argument("--tolerance-identity", type=float, default=1e-6)
    p.set_defaults(handler=_cmd_gauge)

    p = sub.add_parser("eigen", parents=[common],
                       help="spectrum table with spectral eigen-residuals")
    p.add_argument("--kind", choices=["oscillator", "landau"], default="oscillator")
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--max-m", type=int, default=10)
    p.add_argument("--l-min", type=int, default=-2)
    p.add_argument("--l-max", type=int, default=2)
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.set_defaults(handler=_cmd_eigen)

    p = sub.add_parser("thresholds", parents=[common],
                       help="classify a weight-scale product against a sharp threshold")
    p.add_argument("--kind", choices=sorted(_THRESHOLD_KINDS), required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True,
                   help="decay length scale of the data")
    p.add_argument("--beta", type=float, required=True,
                   help="decay length scale of the solution at time T")
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.set_defaults(handler=_cmd_thresholds)

    p = sub.add_parser("decay-fit", parents=[common],
                       help="fit the Gaussian decay rate of a stored field")
    p.add_argument("--input", required=True, help="field snapshot path")
    p.add_argument("--window", type=float, nargs=2, default=None,
                   metavar=("RMIN", "RMAX"))
    p.add_argument("--alpha-sq", type=float, action="append", default=[],
                   help="weighted-norm scale (repeatable)")
    p.add_argument("--fourier", action="store_true",
                   help="also fit the transform side and report the duality product")
    p.add_argument("--jitter-trials", type=int, default=0)
    p.add_argument("--jitter-rel", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=_cmd_decay_fit)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.handler(args)
    except (ConfigError, GuardError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
