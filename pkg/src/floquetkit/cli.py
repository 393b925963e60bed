"""Command-line front end: JSON configs in, JSON reports and CSV out.

Subcommands::

    floquetkit analyze --config system.json [--output report.json]
                       [--reproducible] [--sweep --config a.json b.json ...]
    floquetkit cholera --config scenario.json [--simulate] [--csv traj.csv]
                       [--gnuplot-script] [--output report.json]
    floquetkit emit-benchmark --A 1 --B 0.5 --alpha 0 --beta 2
                       --m-expr "0.1+0.2*cos(t)" [--output config.json]

Exit codes: 0 = analysis completed (whatever the verdict), 2 = config
error, 3 = numeric failure.  Reports serialize deterministically (sorted
keys, floats at 17 significant digits); ``--reproducible`` drops the
timestamp and wall-clock fields so identical configs give identical bytes.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .cholera import CholeraParams, dfe_stability, simulate
from .expressions import ExprError, parse
from .floquet import (PlanarPeriodicSystem, classify_stability,
                      monodromy_multipliers)
from .ivp import DivergenceError, StepLimitError
from .periodic import NonFiniteSampleError, PeriodicityError
from .riccati import (HypothesisError, KernelUndefinedError,
                      NonConvergenceError, RiccatiProblem,
                      check_ball_conditions, check_explicit_conditions,
                      check_fixed_point_conditions, explicit_multipliers,
                      multipliers_from_solution, picard_solve,
                      riccati_from_planar, schauder_constants, shooting_solve)

__all__ = ["main", "run_analysis", "benchmark_config", "load_config",
           "ConfigError", "dump_report"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_NUMERIC_ERRORS = (DivergenceError, StepLimitError, NonFiniteSampleError,
                   NonConvergenceError, KernelUndefinedError)

KINDS = ("planar", "riccati", "cholera", "benchmark")
METHODS = ("monodromy", "semianalytic", "explicit")


class ConfigError(ValueError):
    """Invalid or missing configuration input."""


# ---------------------------------------------------------------------------
# Deterministic JSON

def _json_scalar(x) -> str:
    if x is None:
        return "null"
    if x is True:
        return "true"
    if x is False:
        return "false"
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x):
            return '"nan"'
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        return format(x, ".17g")
    if isinstance(x, (np.integer, int)):
        return str(int(x))
    raise TypeError(f"not serializable: {x!r}")


def dump_report(obj, indent: int = 0) -> str:
    """Serialize with sorted keys and 17-significant-digit floats.

    Non-finite floats become the strings "inf"/"-inf"/"nan" (JSON has no
    encoding for them); absent analysis sections are {"value": null,
    "reason": ...} rather than silently missing.
    """
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = [f"{inner}{json.dumps(str(k))}: {dump_report(obj[k], indent + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(parts) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        parts = [f"{inner}{dump_report(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(parts) + f"\n{pad}]"
    return _json_scalar(obj)


def _absent(reason: str) -> dict:
    return {"value": None, "reason": reason}


# ---------------------------------------------------------------------------
# Config loading / validation

def load_config(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        cfg = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return validate_config(cfg)


def _require(cfg: dict, key: str, where: str = "config"):
    if key not in cfg:
        raise ConfigError(f"{where} is missing required key {key!r}")
    return cfg[key]


def _positive_float(value, name: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None
    if not (out > 0.0 and math.isfinite(out)):
        raise ConfigError(f"{name} must be positive and finite, got {out}")
    return out


def _expression(value, name: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{name} must be an expression string")
    try:
        parse(value)
    except ExprError as exc:
        raise ConfigError(f"{name} does not parse: {exc}") from None
    return value


def validate_config(cfg: dict) -> dict:
    kind = _require(cfg, "kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
    if kind == "benchmark":
        params = _require(cfg, "parameters")
        cfg = dict(cfg)
        cfg.update(benchmark_config(
            A=float(_require(params, "A", "parameters")),
            B=float(_require(params, "B", "parameters")),
            alpha=float(_require(params, "alpha", "parameters")),
            beta=float(_require(params, "beta", "parameters")),
            m_expr=_expression(_require(params, "m", "parameters"),
                               "parameters.m")))
        kind = "planar"

    period = _positive_float(_require(cfg, "period"), "period")
    methods = cfg.get("methods", "all")
    if methods == "all":
        methods = list(METHODS)
    if (not isinstance(methods, list)
            or any(m not in METHODS for m in methods)):
        raise ConfigError(f"methods must be 'all' or a subset of {METHODS}")
    cfg = dict(cfg)
    cfg["methods"] = methods
    cfg["period"] = period

    if kind == "planar":
        coeffs = _require(cfg, "coefficients")
        for name in ("p11", "p12", "p21", "p22"):
            _expression(_require(coeffs, name, "coefficients"),
                        f"coefficients.{name}")
    elif kind == "riccati":
        coeffs = _require(cfg, "coefficients")
        for name in ("a", "b", "c"):
            _expression(_require(coeffs, name, "coefficients"),
                        f"coefficients.{name}")
    elif kind == "cholera":
        params = _require(cfg, "parameters")
        for name in ("H", "n", "gamma", "K", "K_tilde", "delta", "kappa",
                     "xi", "nu"):
            _require(params, name, "parameters")
        for name in ("d", "e", "m"):
            _expression(_require(params, name, "parameters"),
                        f"parameters.{name}")
    return cfg


def benchmark_config(A: float, B: float, alpha: float, beta: float,
                     m_expr: str) -> dict:
    """Planar config for the built-in closed-form benchmark family:

        u' = (m(t) - A) u + sin(t) v
        v' = ((alpha+1) sin(t) / (beta + cos(t))) u + (m(t) - B) v

    Requires beta > 1 (so the denominator never vanishes) and A - B > 0.
    """
    if not beta > 1.0:
        raise ConfigError(f"benchmark family requires beta > 1, got {beta}")
    if not A - B > 0.0:
        raise ConfigError(f"benchmark family requires A - B > 0, "
                          f"got A - B = {A - B}")
    _expression(m_expr, "m")
    fmt = lambda x: format(float(x), ".17g")
    return {
        "kind": "planar",
        "period": 2.0 * math.pi,
        "coefficients": {
            "p11": f"({m_expr})-({fmt(A)})",
            "p12": "sin(t)",
            "p21": f"({fmt(alpha)}+1)*sin(t)/({fmt(beta)}+cos(t))",
            "p22": f"({m_expr})-({fmt(B)})",
        },
    }


# ---------------------------------------------------------------------------
# Analysis

def _pair_summary(pair) -> dict:
    return pair.as_dict()


def _cross_validation(pairs: dict) -> dict:
    out = {}
    if "monodromy" not in pairs:
        return out
    ref = pairs["monodromy"]
    for name, pair in pairs.items():
        if name == "monodromy":
            continue
        rel1 = abs(pair.lam1 - ref.lam1) / max(abs(ref.lam1), 1e-300)
        rel2 = abs(pair.lam2 - ref.lam2) / max(abs(ref.lam2), 1e-300)
        out[f"{name}_vs_monodromy"] = {"lambda1_rel": rel1, "lambda2_rel": rel2}
    return out


def _analyze_planar(cfg: dict) -> dict:
    coeffs = cfg["coefficients"]
    sys = PlanarPeriodicSystem.from_expressions(
        coeffs["p11"], coeffs["p12"], coeffs["p21"], coeffs["p22"],
        cfg["period"])
    tols = cfg.get("tolerances", {})
    rel = float(tols.get("rel_tol", 1e-10))
    absol = float(tols.get("abs_tol", 1e-12))
    mod_tol = float(tols.get("modulus_tol", 1e-7))
    methods = cfg["methods"]

    pairs = {}
    report: dict = {"kind": "planar", "period": cfg["period"],
                    "trace_integral": sys.trace_integral()}

    if "monodromy" in methods:
        pairs["monodromy"] = monodromy_multipliers(sys, rel, absol, mod_tol)

    ledgers = {}
    certificates = []
    if "semianalytic" in methods:
        ledger = check_fixed_point_conditions(sys)
        ledgers["fixed_point"] = ledger.as_dict()
        result = _absent("no certified periodic solution")
        if ledger.check("nonzero_mean_gap").passed:
            prob = riccati_from_planar(sys)
            certs = []
            try:
                certs = [picard_solve(prob)]
            except NonConvergenceError as exc:
                result = _absent(f"picard did not converge: {exc}")
            if not certs:
                certs = shooting_solve(prob)
            if certs:
                certificates = [c.as_dict() for c in certs]
                pairs["semianalytic"] = multipliers_from_solution(sys, certs[0])
                result = _pair_summary(pairs["semianalytic"])
                if len(certs) > 1:
                    result["ambiguity"] = (
                        f"{len(certs)} periodic solutions found; multipliers "
                        "reported for each certificate in 'alternatives'")
                    result["alternatives"] = [
                        _pair_summary(multipliers_from_solution(sys, c))
                        for c in certs[1:]]
        else:
            result = _absent("kernel undefined: zero-mean diagonal gap")
        semianalytic_summary = result
    if "explicit" in methods:
        ledger = check_explicit_conditions(sys)
        ledgers["explicit"] = ledger.as_dict()
        try:
            pairs["explicit"] = explicit_multipliers(sys)
            explicit_summary = _pair_summary(pairs["explicit"])
        except HypothesisError as exc:
            explicit_summary = _absent(f"hypotheses failed: {exc}")

    multipliers = {}
    for name in METHODS:
        if name not in methods:
            multipliers[name] = _absent("method not requested")
        elif name == "monodromy":
            multipliers[name] = _pair_summary(pairs["monodromy"])
        elif name == "semianalytic":
            multipliers[name] = semianalytic_summary
        else:
            multipliers[name] = explicit_summary

    report["multipliers"] = multipliers
    report["ledgers"] = ledgers
    report["certificates"] = certificates
    report["cross_validation"] = _cross_validation(pairs)
    if "monodromy" in pairs:
        pair = pairs["monodromy"]
        verdict = classify_stability(pair.moduli, pair.multiplicities(mod_tol),
                                     mod_tol)
        report["stability"] = verdict.as_dict()
    else:
        report["stability"] = _absent("monodromy method not requested")
    return report


def _analyze_riccati(cfg: dict) -> dict:
    from .periodic import PeriodicFn
    coeffs = cfg["coefficients"]
    T = cfg["period"]
    prob = RiccatiProblem(a=PeriodicFn(coeffs["a"], T),
                          b=PeriodicFn(coeffs["b"], T),
                          c=PeriodicFn(coeffs["c"], T))
    report: dict = {"kind": "riccati", "period": T}
    ball = check_ball_conditions(prob)
    report["ledgers"] = {"ball": ball.as_dict()}
    try:
        data = schauder_constants(prob)
        report["kernel_constants"] = {"M": data.M, "N": data.N,
                                      "M_upper": data.M_upper,
                                      "N_upper": data.N_upper,
                                      "contraction_bound": data.contraction_bound}
    except KernelUndefinedError as exc:
        report["kernel_constants"] = _absent(str(exc))
    try:
        cert = picard_solve(prob)
        report["picard"] = cert.as_dict()
    except (NonConvergenceError, KernelUndefinedError) as exc:
        report["picard"] = _absent(str(exc))
    shooting_cfg = cfg.get("shooting", {})
    interval = shooting_cfg.get("interval")
    certs = shooting_solve(prob,
                           interval=tuple(interval) if interval else None,
                           grid=int(shooting_cfg.get("grid", 64)))
    report["shooting"] = {"found": len(certs),
                          "certificates": [c.as_dict() for c in certs]}
    if not certs:
        report["shooting"]["note"] = "no periodic solution found in interval"
    return report


def _analyze_cholera(cfg: dict, do_simulate: bool = False,
                     csv_path=None) -> dict:
    params = CholeraParams.from_config(cfg["parameters"], cfg["period"])
    report: dict = {"kind": "cholera", "period": cfg["period"]}
    dfe = dfe_stability(params)
    report["dfe"] = dfe.as_dict()
    if do_simulate:
        sim_cfg = cfg.get("simulate")
        if not sim_cfg:
            raise ConfigError("--simulate requires a 'simulate' config section")
        y0 = [float(v) for v in _require(sim_cfg, "initial_state", "simulate")]
        horizon = _positive_float(_require(sim_cfg, "horizon", "simulate"),
                                  "simulate.horizon")
        result = simulate(params, y0, horizon)
        final = result.final
        dfe_point = params.dfe()
        distance = float(np.linalg.norm(final - dfe_point))
        report["simulation"] = {
            "horizon": horizon,
            "initial_state": y0,
            "final_state": [float(v) for v in final],
            "distance_to_dfe": distance,
            "invariant_violations": [
                {"t": t, "what": what}
                for t, what in result.invariant_violations],
            "steps": int(len(result.trajectory.ts)),
        }
        if csv_path is not None:
            write_trajectory_csv(csv_path, result.trajectory,
                                 ("S", "I", "B", "P"))
            report["simulation"]["trajectory_csv"] = str(csv_path)
    return report


def run_analysis(cfg: dict, do_simulate: bool = False, csv_path=None) -> dict:
    kind = cfg["kind"]
    if kind == "planar":
        return _analyze_planar(cfg)
    if kind == "riccati":
        return _analyze_riccati(cfg)
    if kind == "cholera":
        return _analyze_cholera(cfg, do_simulate, csv_path)
    raise ConfigError(f"unsupported kind {kind!r}")


# ---------------------------------------------------------------------------
# Output files

def write_trajectory_csv(path, trajectory, state_names) -> None:
    """CSV with header t,<state names>, UTF-8, LF endings, '.' decimals."""
    lines = ["t," + ",".join(state_names)]
    for t, row in zip(trajectory.ts, trajectory.ys):
        lines.append(format(float(t), ".17g") + ","
                     + ",".join(format(float(v), ".17g") for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8",
                          newline="\n")


def write_gnuplot_script(csv_path, state_names) -> Path:
    csv_path = Path(csv_path)
    script = csv_path.with_suffix(".gp")
    plots = ", ".join(
        f"'{csv_path.name}' using 1:{i + 2} with lines title '{name}'"
        for i, name in enumerate(state_names))
    script.write_text(
        "set datafile separator ','\n"
        "set xlabel 't'\n"
        f"plot {plots}\n", encoding="utf-8", newline="\n")
    return script


def _finish_report(cfg: dict, analysis: dict, started: float,
                   reproducible: bool) -> dict:
    report = {
        "config": {k: v for k, v in cfg.items()},
        "tool": {"name": "floquetkit", "version": __version__},
        "analysis": analysis,
    }
    if reproducible:
        report["timestamp"] = _absent("excluded by --reproducible")
        report["wall_clock_seconds"] = _absent("excluded by --reproducible")
    else:
        report["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        report["wall_clock_seconds"] = time.perf_counter() - started
    return report


def _write_report(report: dict, path) -> None:
    text = dump_report(report) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# Entry points

def _cmd_analyze(args) -> int:
    paths = args.config
    if not args.sweep and len(paths) != 1:
        raise ConfigError("exactly one --config unless --sweep is given")
    configs = [load_config(p) for p in paths]
    started = time.perf_counter()
    if args.sweep:
        with ThreadPoolExecutor(max_workers=min(4, len(configs))) as pool:
            analyses = list(pool.map(run_analysis, configs))
        report = {
            "tool": {"name": "floquetkit", "version": __version__},
            "sweep": [
                _finish_report(cfg, analysis, started, args.reproducible)
                for cfg, analysis in zip(configs, analyses)],
        }
        _write_report(report, args.output)
        return EXIT_OK
    analysis = run_analysis(configs[0])
    report = _finish_report(configs[0], analysis, started, args.reproducible)
    out = args.output or configs[0].get("output", {}).get("report")
    _write_report(report, out)
    return EXIT_OK


def _cmd_cholera(args) -> int:
    cfg = load_config(args.config)
    if cfg["kind"] != "cholera":
        raise ConfigError("the cholera subcommand needs a config with "
                          "kind 'cholera'")
    csv_path = args.csv or cfg.get("output", {}).get("trajectory_csv")
    if args.simulate and csv_path is None:
        csv_path = str(Path(args.config).with_suffix(".trajectory.csv"))
    started = time.perf_counter()
    analysis = run_analysis(cfg, do_simulate=args.simulate, csv_path=csv_path)
    report = _finish_report(cfg, analysis, started, args.reproducible)
    out = args.output or cfg.get("output", {}).get("report")
    _write_report(report, out)
    if args.simulate and args.gnuplot_script:
        write_gnuplot_script(csv_path, ("S", "I", "B", "P"))
    return EXIT_OK


def _cmd_emit_benchmark(args) -> int:
    cfg = benchmark_config(args.A, args.B, args.alpha, args.beta, args.m_expr)
    _write_report(cfg, args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floquetkit",
        description="Multipliers and stability of periodic planar systems")
    sub = parser.add_subparsers(dest="command", required=True)

    p_an = sub.add_parser("analyze", help="analyze a planar/riccati config")
    p_an.add_argument("--config", nargs="+", required=True,
                      help="config JSON path(s); several with --sweep")
    p_an.add_argument("--output", help="report path (default: config's "
                      "output.report, else stdout)")
    p_an.add_argument("--reproducible", action="store_true",
                      help="omit timestamp and wall clock from the report")
    p_an.add_argument("--sweep", action="store_true",
                      help="run several configs concurrently, aggregate "
                      "reports in input order")
    p_an.set_defaults(func=_cmd_analyze)

    p_ch = sub.add_parser("cholera", help="cholera scenario analysis")
    p_ch.add_argument("--config", required=True)
    p_ch.add_argument("--output")
    p_ch.add_argument("--simulate", action="store_true",
                      help="also integrate the nonlinear model")
    p_ch.add_argument("--csv", help="trajectory CSV path")
    p_ch.add_argument("--gnuplot-script", action="store_true",
                      help="write a gnuplot script next to the CSV")
    p_ch.add_argument("--reproducible", action="store_true")
    p_ch.set_defaults(func=_cmd_cholera)

    p_em = sub.add_parser("emit-benchmark",
                          help="emit a config for the closed-form benchmark "
                          "family")
    p_em.add_argument("--A", type=float, required=True)
    p_em.add_argument("--B", type=float, required=True)
    p_em.add_argument("--alpha", type=float, required=True)
    p_em.add_argument("--beta", type=float, required=True)
    p_em.add_argument("--m-expr", required=True,
                      help="expression for the shared seasonal term m(t)")
    p_em.add_argument("--output")
    p_em.set_defaults(func=_cmd_emit_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ExprError, PeriodicityError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
