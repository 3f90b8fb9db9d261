"""Experiment orchestration: config parsing, single runs, sweeps, reports.

Configs are INI text with sections ``[grid]``, ``[potential]``,
``[command]``, and optionally ``[sweep]``.  A run produces two files in
the output directory, ``<config-stem>-<command>.report`` (JSON with stable
key order and 12-significant-digit floats) and the matching ``.csv`` flat
table with one row per parameter point and the documented column order:

    parameter, lambda1, kl_lhs_p1, kl_rhs_p1, hermite_dist_n2,
    hermite_dist_n3, stein_bound, w1_actual, tv_actual, sep_k30,
    dobs_k30, eta_k30, var_deficit, gap_deficit,
    pass_keylemma, pass_hermite, pass_stein, pass_obschain, pass_all

Sweeps append a ``slope`` footer row with least-squares log-log slopes of
each tracked quantity against the spectral-gap excess.  Exit status is 0
when every asserted inequality passes, 1 when one fails (the first is
named on stderr), and 2 on usage errors, which never write files.

Reports are byte-identical for identical config and seed; wall time goes
to stderr only.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GapLabError, InvalidArgumentError
from .hermite import hermite_residual_report
from .measures import (
    Measure1D,
    build_grid,
    gaussian_measure,
    make_potential,
    normalize,
    read_table_potential,
    sigma_inverse,
)
from .needles import (
    disintegrate_axis,
    fg_h1_report,
    guiding_function_check,
    needle_estimates_report,
    product_measure,
    verify_needle_properties,
)
from .obsdiam import (
    converse_diagnostics,
    isoperimetric_check,
    observable_diameter,
    separation,
)
from .spectrum import decompose, key_lemma_report, gradient_deficit_norm, lp_norm
from .transport import stein_report

COMMANDS = ("spectrum", "keylemma", "hermite", "stein", "obsdiam",
            "converse", "needles", "full-report")

CSV_COLUMNS = (
    "parameter", "lambda1", "kl_lhs_p1", "kl_rhs_p1", "hermite_dist_n2",
    "hermite_dist_n3", "stein_bound", "w1_actual", "tv_actual", "sep_k30",
    "dobs_k30", "eta_k30", "var_deficit", "gap_deficit",
    "pass_keylemma", "pass_hermite", "pass_stein", "pass_obschain", "pass_all",
)

_SLOPE_COLUMNS = ("kl_lhs_p1", "hermite_dist_n2", "hermite_dist_n3",
                  "w1_actual", "eta_k30", "var_deficit")

_SECTIONS = {
    "spectrum": {"spectrum"},
    "keylemma": {"spectrum", "keylemma"},
    "hermite": {"spectrum", "hermite"},
    "stein": {"spectrum", "stein"},
    "obsdiam": {"obsdiam"},
    "converse": {"spectrum", "converse"},
    "needles": {"spectrum", "needles"},
    "full-report": {"spectrum", "keylemma", "hermite", "stein", "obsdiam",
                    "converse", "needles"},
}


@dataclass
class ExperimentConfig:
    half_width: float = 10.0
    n_points: int = 4001
    preset: str = "gaussian"
    params: dict = field(default_factory=dict)
    table_file: str = None
    k: int = 8
    p_list: tuple = (1.0, 1.5)
    kappa_list: tuple = (0.1, 0.3, 0.5)
    hermite_orders: tuple = (2, 3)
    delta: float = 0.5
    alpha: float = 0.5
    theta: float = 0.02
    trials: int = 200
    seed: int = None
    quotient_points: int = 201
    sweep_parameter: str = None
    sweep_values: tuple = ()


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.replace(",", " ").split())


def parse_config(path) -> ExperimentConfig:
    """Read and validate an experiment config; raises on any bad value."""
    parser = configparser.ConfigParser()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise InvalidArgumentError(f"malformed config {path}: {exc}") from exc
    cfg = ExperimentConfig()
    try:
        if parser.has_section("grid"):
            g = parser["grid"]
            cfg.half_width = g.getfloat("half_width", cfg.half_width)
            cfg.n_points = g.getint("n_points", cfg.n_points)
        if parser.has_section("potential"):
            p = parser["potential"]
            cfg.preset = p.get("preset", cfg.preset)
            cfg.table_file = p.get("file", None)
            cfg.params = {key: float(val) for key, val in p.items()
                          if key not in ("preset", "file")}
        if parser.has_section("command"):
            c = parser["command"]
            cfg.k = c.getint("k", cfg.k)
            if "p_list" in c:
                cfg.p_list = _floats(c["p_list"])
            if "kappa_list" in c:
                cfg.kappa_list = _floats(c["kappa_list"])
            if "hermite_orders" in c:
                cfg.hermite_orders = _ints(c["hermite_orders"])
            cfg.delta = c.getfloat("delta", cfg.delta)
            cfg.alpha = c.getfloat("alpha", cfg.alpha)
            cfg.theta = c.getfloat("theta", cfg.theta)
            cfg.trials = c.getint("trials", cfg.trials)
            if "seed" in c:
                cfg.seed = c.getint("seed")
            cfg.quotient_points = c.getint("quotient_points", cfg.quotient_points)
        if parser.has_section("sweep"):
            s = parser["sweep"]
            cfg.sweep_parameter = s.get("parameter", None)
            if "values" in s:
                cfg.sweep_values = _floats(s["values"])
    except ValueError as exc:
        raise InvalidArgumentError(f"bad value in config {path}: {exc}") from exc
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig):
    if cfg.n_points < 3 or cfg.n_points % 2 == 0:
        raise InvalidArgumentError("n_points must be odd and >= 3")
    if cfg.half_width <= 0:
        raise InvalidArgumentError("half_width must be positive")
    if cfg.k < 2:
        raise InvalidArgumentError("k must be >= 2")
    if any(p < 1 for p in cfg.p_list):
        raise InvalidArgumentError("p_list entries must be >= 1")
    if any(not (0 < kap < 1) for kap in cfg.kappa_list):
        raise InvalidArgumentError("kappa_list entries must lie in (0, 1)")
    if not (0 < cfg.delta < 1):
        raise InvalidArgumentError("delta must lie in (0, 1)")
    if cfg.trials < 0:
        raise InvalidArgumentError("trials must be >= 0")
    if cfg.sweep_parameter is not None and len(cfg.sweep_values) < 3:
        raise InvalidArgumentError("a sweep needs at least 3 parameter values")


def build_measure(cfg: ExperimentConfig, parameter: float = None,
                  n_points: int = None) -> Measure1D:
    grid = build_grid(cfg.half_width, n_points or cfg.n_points)
    if cfg.preset == "table":
        if not cfg.table_file:
            raise InvalidArgumentError("table preset needs file= in [potential]")
        text = Path(cfg.table_file).read_text(encoding="utf-8")
        return normalize(read_table_potential(text, grid))
    params = dict(cfg.params)
    if parameter is not None and cfg.sweep_parameter:
        params[cfg.sweep_parameter] = parameter
    return normalize(make_potential(cfg.preset, grid, **params))


def _parameter_of(cfg: ExperimentConfig, override) -> float:
    if override is not None:
        return override
    if cfg.sweep_parameter and cfg.sweep_parameter in cfg.params:
        return cfg.params[cfg.sweep_parameter]
    for key in ("eps", "a"):
        if key in cfg.params:
            return cfg.params[key]
    return 0.0


def _check(checks, name, lhs, rhs, tolerance, passed=None):
    if passed is None:
        passed = lhs <= rhs + tolerance
    checks.append({"name": name, "lhs": float(lhs), "rhs": float(rhs),
                   "tolerance": float(tolerance), "pass": bool(passed)})
    return passed


def compute_point(cfg: ExperimentConfig, sections, parameter=None,
                  resolution_check: bool = False) -> dict:
    """All quantities and checks for one (preset, parameter) point."""
    m = build_measure(cfg, parameter)
    q = {"parameter": _parameter_of(cfg, parameter)}
    checks = []
    d = None
    if sections & {"spectrum", "keylemma", "hermite", "stein", "converse",
                   "needles"}:
        d = decompose(m, cfg.k)
        q["lambda1"] = float(d.eigenvalues[1])
        q["eigenvalues"] = [float(v) for v in d.eigenvalues]
        q["convergence"] = [float(v) for v in d.convergence]
        _check(checks, "lambda0_zero", abs(float(d.eigenvalues[0])), 0.0, 1e-10)
        _check(checks, "lichnerowicz", 1.0 - 1e-6, float(d.eigenvalues[1]), 0.0)
        f1 = d.eigenfunctions[:, 1]
        rayleigh = abs(d.operator.form(f1, f1)
                       - d.eigenvalues[1] * lp_norm(f1, 2.0, m) ** 2)
        _check(checks, "rayleigh_consistency", rayleigh, 0.0, 1e-8)
        gram = d.eigenfunctions.T @ (d.eigenfunctions * m.cell_masses[:, None])
        ortho = float(np.max(np.abs(gram - np.eye(len(d.eigenvalues)))))
        _check(checks, "orthonormality", ortho, 0.0, 1e-8)

    if "keylemma" in sections:
        for p in cfg.p_list:
            if p < 2.0:
                rep = key_lemma_report(d, p)
                tag = f"{p:g}".replace(".", "_")
                q[f"kl_lhs_p{tag}"] = rep["lhs"]
                q[f"kl_rhs_p{tag}"] = rep["rhs"]
                _check(checks, f"keylemma_p{tag}", rep["lhs"], rep["rhs"], 1e-9)
            else:
                q[f"kl_lhs_p{p:g}"] = gradient_deficit_norm(d, p)

    if "hermite" in sections:
        for order in cfg.hermite_orders:
            rep = hermite_residual_report(d, order, strict=False)
            q[f"hermite_dist_n{order}"] = rep["normalized_distance"]
            q[f"hermite_nearest_n{order}"] = rep["nearest_eigenvalue"]
            _check(checks, f"hermite_n{order}",
                   abs(rep["nearest_eigenvalue"] - rep["target"]),
                   rep["normalized_distance"], 1e-3, passed=rep["pass"])

    if "stein" in sections:
        rep = stein_report(d, strict=False)
        q["stein_bound"] = rep["paper_bound"]
        q["gamma_deficit"] = rep["gamma_deficit"]
        q["w1_actual"] = rep["w1_actual"]
        q["tv_actual"] = rep["tv_actual"]
        _check(checks, "stein_chain", rep["w1_actual"],
               4.0 * rep["gamma_deficit"], 1e-3, passed=rep["pass_chain"])
        _check(checks, "stein_bound", rep["w1_actual"], rep["paper_bound"],
               1e-3, passed=rep["pass_bound"])

    if "obsdiam" in sections:
        for kap in cfg.kappa_list:
            obs = observable_diameter(m, kap, strict=False)
            sep_half = separation(m, kap / 2.0)
            tag = f"{round(100 * kap):02d}"
            q[f"dobs_k{tag}"] = obs["dobs"]
            q[f"sep_k{tag}"] = sep_half.sep
            q[f"eta_k{tag}"] = sep_half.eta
            ok = (obs["dobs"] <= sep_half.sep + 1e-3
                  and sep_half.sep <= sep_half.gaussian_sep + 1e-3)
            _check(checks, f"obs_chain_k{tag}", obs["dobs"],
                   sep_half.gaussian_sep, 1e-3, passed=ok)
        iso = isoperimetric_check(m, strict=False)
        q["min_profile_ratio"] = iso["min_profile_ratio"]
        _check(checks, "isoperimetry", 1.0 - 1e-3, iso["min_profile_ratio"],
               0.0, passed=iso["pass"])

    if "converse" in sections:
        diag = converse_diagnostics(m, 0.3)
        q["var_deficit"] = diag.var_deficit
        q["gap_deficit"] = diag.gap_deficit
        q["converse_eta"] = diag.eta
        q["sup_phi_dev_core"] = diag.sup_phi_dev_core
        q["sup_phi_dev_extended"] = diag.sup_phi_dev_extended
        q["b_eta"] = diag.b_eta
        ubm_ok = all(c["pass"] for c in diag.uppboundmass_checks)
        _check(checks, "uppboundmass", 0.0, 0.0, 0.0, passed=ubm_ok)

    if "needles" in sections:
        if cfg.seed is None:
            raise InvalidArgumentError(
                "randomized competitors need a seed (config [command] or --seed)"
            )
        quotient = gaussian_measure(build_grid(cfg.half_width,
                                               cfg.quotient_points))
        prod = product_measure([m, quotient])
        nf = disintegrate_axis(prod, 0, d.eigenfunctions[:, 1])
        props = verify_needle_properties(nf)
        q["disintegration_defect"] = props["disintegration_defect"]
        _check(checks, "disintegration", props["disintegration_defect"],
               0.0, 1e-8)
        guide = guiding_function_check(prod, d.eigenfunctions[:, 1],
                                       cfg.trials, cfg.seed, strict=False)
        q["score_g"] = guide["score_g"]
        q["max_competitor_score"] = guide["max_competitor_score"]
        _check(checks, "guiding_argmax", guide["max_competitor_score"],
               guide["score_g"], 1e-8, passed=guide["pass"])
        est = needle_estimates_report(nf, d, cfg.delta, strict=False)
        q["needle_f_sq"] = est["f_sq"]
        q["needle_grad_sq"] = est["grad_sq"]
        _check(checks, "needle_sandwich", 1.0 - cfg.delta,
               est["passing_mass"], 0.0, passed=est["pass"])
        fg = fg_h1_report(nf, d, cfg.theta)
        q["l2_dev"] = fg["l2_dev"]
        q["h1_dev"] = fg["h1_dev"]
        q["w1_g"] = fg["w1_g"]
        q["tv_g"] = fg["tv_g"]
        gap = prod.spectral_gap()
        q["product_gap"] = gap["gap"]
        _check(checks, "product_gap_min", abs(gap["gap"] - min(gap["factor_gaps"])),
               0.0, 1e-6)

    if resolution_check and d is not None:
        fine = decompose(build_measure(cfg, parameter,
                                       n_points=2 * cfg.n_points - 1), cfg.k)
        changes = [float(abs(a - b))
                   for a, b in zip(d.eigenvalues, fine.eigenvalues)]
        q["resolution_change"] = changes
        q["resolution_dlambda1"] = changes[1]
    return {"quantities": q, "checks": checks}


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _fmt_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return '"nan"'
        if math.isinf(v):
            return '"inf"' if v > 0 else '"-inf"'
        return format(v, ".12g")
    if v is None:
        return "null"
    import json as _json

    return _json.dumps(str(v))


def _serialize(obj) -> str:
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        inner = ", ".join(f"{_fmt_scalar(str(k))}: {_serialize(v)}"
                          for k, v in items)
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_serialize(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _serialize(obj.tolist())
    return _fmt_scalar(obj)


def serialize_report(report: dict) -> bytes:
    """Stable JSON bytes: sorted keys, floats at 12 significant digits."""
    return (_serialize(report) + "\n").encode("utf-8")


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _csv_rows(points, slopes=None, extra_columns=()) -> list:
    columns = CSV_COLUMNS + tuple(extra_columns)
    lines = [",".join(columns)]
    for pt in points:
        q = pt["quantities"]
        flags = {c["name"]: c["pass"] for c in pt["checks"]}

        def group(prefix):
            vals = [v for name, v in flags.items() if name.startswith(prefix)]
            return all(vals) if vals else None

        row = {col: q.get(col) for col in columns}
        row.update({
            "pass_keylemma": group("keylemma"),
            "pass_hermite": group("hermite"),
            "pass_stein": group("stein"),
            "pass_obschain": group("obs_chain"),
            "pass_all": all(c["pass"] for c in pt["checks"]),
        })
        lines.append(",".join(_csv_cell(row.get(c)) for c in columns))
    if slopes:
        cells = {col: slopes.get(col) for col in columns}
        cells["parameter"] = "slope"
        lines.append(",".join(_csv_cell(cells.get(c)) for c in columns))
    return lines


def _slope_footer(points) -> dict:
    gaps = np.array([pt["quantities"].get("lambda1", np.nan) - 1.0
                     for pt in points])
    slopes = {}
    for col in _SLOPE_COLUMNS:
        vals = np.array([pt["quantities"].get(col) or np.nan for pt in points],
                        dtype=float)
        ok = np.isfinite(vals) & (vals > 0) & np.isfinite(gaps) & (gaps > 0)
        if ok.sum() >= 3:
            slope = np.polyfit(np.log(gaps[ok]), np.log(vals[ok]), 1)[0]
            slopes[col] = float(slope)
    return slopes


def run(config_path, command: str, out_dir=".", seed: int = None,
        resolution_check: bool = False) -> int:
    """Execute one command; returns the exit status and writes the files."""
    if command not in COMMANDS:
        print(f"unknown command {command!r}; expected one of {COMMANDS}",
              file=sys.stderr)
        return 2
    try:
        cfg = parse_config(config_path)
        if seed is not None:
            cfg.seed = seed
        sections = _SECTIONS[command]
        if "needles" in sections and cfg.seed is None:
            raise InvalidArgumentError(
                "randomized competitors need a seed (config [command] or --seed)"
            )
        out = Path(out_dir)
        if not out.is_dir():
            raise InvalidArgumentError(f"output directory {out} does not exist")
    except GapLabError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2

    started = time.monotonic()
    if cfg.sweep_parameter:
        values = sorted(cfg.sweep_values)
        points = [compute_point(cfg, sections, v, resolution_check)
                  for v in values]
        slopes = _slope_footer(points)
    else:
        points = [compute_point(cfg, sections, None, resolution_check)]
        slopes = {}

    report = {
        "command": command,
        "config": {
            "half_width": cfg.half_width, "n_points": cfg.n_points,
            "preset": cfg.preset, "params": cfg.params,
            "k": cfg.k, "p_list": list(cfg.p_list),
            "kappa_list": list(cfg.kappa_list),
            "hermite_orders": list(cfg.hermite_orders),
            "delta": cfg.delta, "alpha": cfg.alpha, "theta": cfg.theta,
            "trials": cfg.trials, "seed": cfg.seed,
            "sweep_parameter": cfg.sweep_parameter,
            "sweep_values": list(cfg.sweep_values),
            "resolution_check": resolution_check,
        },
        "points": points,
        "slopes": slopes,
    }
    run_id = f"{Path(config_path).stem}-{command}"
    extra = ("resolution_dlambda1",) if resolution_check else ()
    csv_lines = _csv_rows(points, slopes, extra_columns=extra)
    (out / f"{run_id}.report").write_bytes(serialize_report(report))
    (out / f"{run_id}.csv").write_text("\n".join(csv_lines) + "\n",
                                       encoding="utf-8")
    print(f"wall-time {time.monotonic() - started:.2f}s", file=sys.stderr)

    failing = [c for pt in points for c in pt["checks"] if not c["pass"]]
    if failing:
        c = failing[0]
        print(f"FAILED {c['name']}: lhs {c['lhs']:.6g} vs rhs {c['rhs']:.6g} "
              f"(tolerance {c['tolerance']:.1g})", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gaplab",
        description="spectral-gap stability laboratory for 1D log-concave "
                    "measures",
    )
    parser.add_argument("command", help=f"one of {', '.join(COMMANDS)}")
    parser.add_argument("--config", required=True, help="path to the INI config")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for randomized competitors")
    parser.add_argument("--resolution-check", action="store_true",
                        help="re-run the spectrum at doubled resolution and "
                             "append eigenvalue changes")
    args = parser.parse_args(argv)
    return run(args.config, args.command, args.out, args.seed,
               args.resolution_check)


if __name__ == "__main__":
    sys.exit(main())
