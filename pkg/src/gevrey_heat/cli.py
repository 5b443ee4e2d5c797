"""Command line driver.

Commands::

    gevrey-heat solve      [--config P] [--a EXPR] [--f EXPR] [--mode M] [--truncation J,N]
    gevrey-heat analyze    ... [--directions D] [--pipeline S,S,...]
    gevrey-heat transform  ... --kind K
    gevrey-heat reproduce  NAME [--update]

Exit codes: 0 success, 1 reproduction differs from the golden file, 2 bad
configuration or input, 3 solver precondition failed, 4 too few
coefficients for a requested analysis.

Data goes to ``--out`` (stdout for ``-``); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import sys
from fractions import Fraction
from importlib import resources

from .gevrey import (DEFAULT_GRID, check_nagumo_derivative, check_nagumo_product,
                     gevrey_order, majorant_sequence, trace_magnitudes)
from .heat import HeatProblem, SolverError, round_trip_residual, solve, traces
from .parsing import ExpansionError, ParseError, default_radius
from .resum import InsufficientCoefficients, check_trace_family, direction_scan
from .series import Mode, ModeError, format_coeff
from . import transforms

EXIT_OK = 0
EXIT_DIFF = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_INSUFFICIENT = 4

STAGES = ("gevrey", "nagumo", "scan", "trace_family", "criterion")
TRANSFORMS = ("two_laplace", "capF", "g_hat_bz", "traces_const_a", "traces_bz")
FIXTURES = ("classical", "counterexample")
GOLDEN_RTOL = 1e-9

DEFAULTS = {
    "problem": {"a": "1", "f": "1/(1-z)", "truncation": [12, 25], "mode": "exact"},
    "pipeline": list(STAGES),
    "output": {"format": "json", "path": "-"},
    "knobs": {
        "grid": list(DEFAULT_GRID),
        "pade_order": None,
        "clearance_deg": 5.0,
        "directions_deg": [15.0 * k for k in range(24)],
        "probe_t": 0.1,
        "margin_deg": 15.0,
        "radius": None,
        "majorant_rows": 12,
        "fit_window": None,
        "transform": "two_laplace",
    },
}

FIXTURE_CONFIGS = {
    "classical": {"problem": {"a": "1", "f": "1/(1-z)", "truncation": [24, 64], "mode": "exact"}},
    "counterexample": {"problem": {"a": "z^2", "f": "1/(1-z)", "truncation": [120, 24],
                                   "mode": "exact"}},
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


def _merge(base: dict, update: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be an object")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def parse_directions(text: str) -> list[float]:
    """Degrees as ``"0,30,60"`` or an arithmetic progression ``"0,30,...,330"``."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if "..." in parts:
        i = parts.index("...")
        if i < 2 or i != len(parts) - 2:
            raise ConfigError("use 'a,b,...,c' for a progression of directions")
        a, b, c = float(parts[0]), float(parts[1]), float(parts[-1])
        step = b - a
        if step <= 0:
            raise ConfigError("direction progression must increase")
        n = int(round((c - a) / step))
        return [a + k * step for k in range(n + 1)]
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"bad direction list {text!r}") from exc


def _truncation(text: str) -> list[int]:
    try:
        J, N = (int(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"truncation must be 'J,N', got {text!r}") from exc
    return [J, N]


def build_config(args) -> dict:
    """Defaults, then the config file, then command-line flags."""
    cfg = copy.deepcopy(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg = _merge(cfg, data)
    prob, out, knobs = cfg["problem"], cfg["output"], cfg["knobs"]
    if getattr(args, "a", None) is not None:
        prob["a"] = args.a
    if getattr(args, "f", None) is not None:
        prob["f"] = args.f
    if getattr(args, "mode", None):
        prob["mode"] = args.mode
    if getattr(args, "truncation", None):
        prob["truncation"] = _truncation(args.truncation)
    if getattr(args, "directions", None):
        knobs["directions_deg"] = parse_directions(args.directions)
    if getattr(args, "pipeline", None):
        cfg["pipeline"] = [s.strip() for s in args.pipeline.split(",") if s.strip()]
    if getattr(args, "kind", None):
        knobs["transform"] = args.kind
    if getattr(args, "out", None):
        out["path"] = args.out
    if getattr(args, "format", None):
        out["format"] = args.format
    _validate(cfg)
    return cfg


def _validate(cfg: dict):
    if cfg["output"]["format"] not in ("csv", "json"):
        raise ConfigError("output.format must be 'csv' or 'json'")
    if cfg["problem"]["mode"] not in ("exact", "float"):
        raise ConfigError("problem.mode must be 'exact' or 'float'")
    bad = [s for s in cfg["pipeline"] if s not in STAGES]
    if bad:
        raise ConfigError(f"unknown pipeline stages {bad}; known: {list(STAGES)}")
    if cfg["knobs"]["transform"] not in TRANSFORMS:
        raise ConfigError(f"unknown transform {cfg['knobs']['transform']!r}")
    tr = cfg["problem"]["truncation"]
    if len(tr) != 2 or any(not isinstance(x, int) or x < 0 for x in tr):
        raise ConfigError("problem.truncation must be two nonnegative integers")


def load_problem(cfg: dict) -> HeatProblem:
    try:
        return HeatProblem.from_dict(cfg["problem"])
    except SolverError:
        raise
    except (ParseError, ExpansionError, ModeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# pipelines


def _coeffs(series) -> list[str]:
    return [format_coeff(c, series.mode) for c in series.coeffs]


def _masked_table(u) -> list[list]:
    mask = u.mask()
    return [[format_coeff(c, u.mode) if ok else None for c, ok in zip(row, mrow)]
            for row, mrow in zip(u.coeffs, mask)]


def _digest(table) -> str:
    text = json.dumps(table, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def run_solve(cfg: dict) -> dict:
    p = load_problem(cfg)
    u = solve(p)
    u0, u1 = traces(u)
    res = round_trip_residual(p, u)
    return {
        "problem": {k: cfg["problem"][k] for k in ("a", "f", "truncation", "mode")},
        "valid": list(u.valid),
        "coefficients": _masked_table(u),
        "traces": {"u0": _coeffs(u0), "u1": _coeffs(u1)},
        "residual": str(res) if p.mode is Mode.EXACT else repr(float(res)),
        "residual_zero": res == 0,
    }


def _gevrey_stage(u, knobs) -> dict:
    out = {}
    for n in (0, 1):
        rows = trace_magnitudes(u, n)
        window = knobs["fit_window"]
        try:
            if any(not m > 0 for m in rows):
                raise ValueError("trace has vanishing coefficients")
            est = gevrey_order(rows, range(*window) if window else None)
        except ValueError as exc:
            out[f"u{n}"] = {"status": "skipped", "reason": str(exc)}
            continue
        out[f"u{n}"] = {"status": "ok", "order_s": est.order_s, "logK": est.logK,
                        "logC": est.logC, "residual": est.residual,
                        "rows": [est.rows_used.start, est.rows_used.stop], "flag": est.flag}
    return out


FALLBACK_RADIUS = 0.5


def nagumo_radius(problem: dict, knobs: dict) -> float:
    """The configured radius, else half the distance to the nearest pole of ``a`` or ``f``."""
    if knobs["radius"] is not None:
        return float(knobs["radius"])
    found = []
    for text in (problem["a"], problem["f"]):
        if not isinstance(text, str):
            continue
        try:
            r = default_radius(text, "z")
        except ParseError:
            continue  # depends on t as well
        if r is not None:
            found.append(r)
    return min(found, default=FALLBACK_RADIUS)


def _nagumo_stage(p: HeatProblem, u, cfg) -> dict:
    knobs = cfg["knobs"]
    r, grid = nagumo_radius(cfg["problem"], knobs), tuple(knobs["grid"])
    f0 = p.f.t_row(0)
    out = {"radius": r}
    try:
        d = check_nagumo_derivative(f0, 0, r, grid)
        m = check_nagumo_product(p.a, f0, 0, 0, r, grid)
        out["derivative"] = {"holds": d.holds, "lhs": d.lhs, "rhs": d.rhs}
        out["product"] = {"holds": m.holds, "lhs": m.lhs, "rhs": m.rhs}
        J = min(knobs["majorant_rows"], p.truncation[0])
        maj = majorant_sequence(p, r, J, grid, u)
        out["majorant"] = {"holds": maj.holds, "alpha": maj.alpha, "failures": maj.failures,
                           "v": maj.v, "lhs": maj.lhs}
    except OverflowError as exc:
        out["status"] = f"skipped: {exc}"
    return out


def _scan_trace(series, thetas, knobs):
    if series.is_zero():
        return [True] * len(thetas), []
    clearance = math.radians(knobs["clearance_deg"])
    verdicts = direction_scan(series, thetas, clearance, order=knobs["pade_order"])
    poles = [] if not verdicts else _poles(verdicts)
    return [v.summable for v in verdicts], poles


def _poles(verdicts) -> list:
    seen, out = set(), []
    for v in verdicts:
        for s in v.evidence:
            key = (s.location.real, s.location.imag)
            if key not in seen:
                seen.add(key)
                out.append({"re": s.location.real, "im": s.location.imag,
                            "exponent_re": s.exponent.real, "exponent_im": s.exponent.imag})
    return out


def _criterion_case(p: HeatProblem):
    a = p.a.coeffs
    if all(c == 0 for c in a[1:]):
        return {"a": a[0]}
    if a[0] == 0 and all(c == 0 for c in a[2:]):
        return {"b": a[1]}
    return None


def _summary(thetas_deg, verdicts) -> str:
    bad = [d for d, ok in zip(thetas_deg, verdicts) if not ok]
    if not bad:
        return "1-summable in every scanned direction"
    if len(bad) == len(thetas_deg):
        return "1-summable in no direction"
    return "1-summable except in directions " + ", ".join(f"{d:g}" for d in bad) + " (degrees)"


def run_analyze(cfg: dict) -> dict:
    p = load_problem(cfg)
    knobs, stages = cfg["knobs"], cfg["pipeline"]
    u = solve(p)
    u0, u1 = traces(u)
    thetas_deg = [float(d) for d in knobs["directions_deg"]]
    thetas = [math.radians(d) for d in thetas_deg]
    result = {"problem": {k: cfg["problem"][k] for k in ("a", "f", "truncation", "mode")},
              "traces": {"u0": _coeffs(u0), "u1": _coeffs(u1)}}
    if "gevrey" in stages:
        result["gevrey"] = _gevrey_stage(u, knobs)
    if "nagumo" in stages:
        result["nagumo"] = _nagumo_stage(p, u, cfg)
    table = [{"theta_deg": d} for d in thetas_deg]
    combined = [True] * len(thetas)
    if "scan" in stages:
        s0, poles0 = _scan_trace(u0, thetas, knobs)
        s1, poles1 = _scan_trace(u1, thetas, knobs)
        result["singular_points"] = {"u0": poles0, "u1": poles1}
        for row, a, b in zip(table, s0, s1):
            row["u0_summable"], row["u1_summable"] = a, b
        combined = [c and a and b for c, a, b in zip(combined, s0, s1)]
    if "trace_family" in stages:
        for i, th in enumerate(thetas):
            rep = check_trace_family(u, th, knobs["probe_t"], math.radians(knobs["margin_deg"]),
                                     math.radians(knobs["clearance_deg"]))
            table[i]["trace_family"] = rep.verdict
            combined[i] = combined[i] and rep.verdict != "fail"
    if "criterion" in stages:
        case = _criterion_case(p)
        reports = []
        if case is not None:
            for th in thetas:
                try:
                    rep = transforms.criterion_report(p.f, case, th,
                                                      math.radians(knobs["clearance_deg"]))
                except ValueError as exc:
                    if isinstance(exc, InsufficientCoefficients):
                        raise
                    reports = {"status": f"skipped: {exc}"}
                    break
                d = rep.to_dict()
                reports.append({k: d[k] for k in ("case", "theta", "criterion_verdict",
                                                  "direct_verdict")})
        result["criterion"] = reports if case is not None else {"status": "not applicable"}
    for row, ok in zip(table, combined):
        row["summable"] = ok
    result["verdicts"] = table
    result["summary"] = _summary(thetas_deg, combined)
    return result


def _scalar(value, mode: Mode):
    return value if mode is Mode.FLOAT else Fraction(value)


def _both(series) -> dict:
    return {"coefficients": _coeffs(series),
            "raw": [format_coeff(c, series.mode) for c in series.raw()]}


def run_transform(cfg: dict) -> dict:
    p = load_problem(cfg)
    kind = cfg["knobs"]["transform"]
    case = _criterion_case(p)
    f = p.f
    # coefficient lists are divided; single-series transforms also carry raw
    out = {"kind": kind, "normalization": "divided"}
    if kind == "two_laplace":
        out.update(_both(transforms.two_laplace(f.t_row(0))))
    elif kind in ("capF", "traces_const_a"):
        if case is None or "a" not in case:
            raise ConfigError(f"{kind} needs a constant diffusivity")
        try:
            if kind == "capF":
                out.update(_both(transforms.capF_const_a(f, case["a"])))
            else:
                u0, u1 = transforms.traces_const_a(f, case["a"])
                out["u0"], out["u1"] = _coeffs(u0), _coeffs(u1)
        except (ValueError, ModeError) as exc:
            raise ConfigError(str(exc)) from exc
    else:
        if case is None or "b" not in case:
            raise ConfigError(f"{kind} needs a diffusivity of the form b*z")
        if kind == "g_hat_bz":
            out.update(_both(transforms.g_hat_bz(f, case["b"])))
        else:
            u0, u1 = transforms.traces_bz(f, case["b"])
            out["u0"], out["u1"] = _coeffs(u0), _coeffs(u1)
    return out


# ---------------------------------------------------------------------------
# output


def _csv_text(command: str, data: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if command == "solve":
        w.writerow(["j", "n", "coefficient"])
        for j, row in enumerate(data["coefficients"]):
            for n, c in enumerate(row):
                if c is not None:
                    w.writerow([j, n, c])
    elif command == "analyze":
        keys = list(data["verdicts"][0]) if data["verdicts"] else ["theta_deg"]
        w.writerow(keys)
        for row in data["verdicts"]:
            w.writerow([row.get(k, "") for k in keys])
    else:
        cols = [k for k in ("coefficients", "raw", "u0", "u1") if k in data]
        w.writerow(["k"] + cols)
        for k in range(max(len(data[c]) for c in cols)):
            w.writerow([k] + [data[c][k] if k < len(data[c]) else "" for c in cols])
    return buf.getvalue()


def render(command: str, data: dict, fmt: str) -> str:
    if fmt == "csv":
        return _csv_text(command, data)
    return json.dumps(data, indent=2, default=str) + "\n"


def _emit(text: str, path: str):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# golden fixtures


def fixture_config(name: str) -> dict:
    if name not in FIXTURES:
        raise ConfigError(f"unknown fixture {name!r}; known: {list(FIXTURES)}")
    cfg = _merge(DEFAULTS, FIXTURE_CONFIGS[name])
    _validate(cfg)
    return cfg


def reproduce_record(name: str) -> dict:
    """Everything compared against the golden file for fixture ``name``."""
    cfg = fixture_config(name)
    sol = run_solve(cfg)
    table = sol["coefficients"]
    head = [row[:9] for row in table[:9]]
    ana = run_analyze(cfg)
    return {"name": name, "problem": sol["problem"], "table_head": head,
            "table_sha256": _digest(table), "residual_zero": sol["residual_zero"],
            "traces": {k: v[:16] for k, v in sol["traces"].items()},
            "gevrey": ana.get("gevrey"), "verdicts": ana["verdicts"],
            "criterion": ana.get("criterion"), "summary": ana["summary"]}


def golden_path(name: str):
    return resources.files("gevrey_heat") / "golden" / f"{name}.json"


def diff_records(expected, actual, path: str = "$") -> list[str]:
    """Exact comparison except floats, which match to ``GOLDEN_RTOL``."""
    if isinstance(expected, float) or isinstance(actual, float):
        if isinstance(expected, bool) or isinstance(actual, bool):
            same = type(expected) is type(actual) and expected == actual
            return [] if same else [f"{path}: {expected!r} != {actual!r}"]
        try:
            e, a = float(expected), float(actual)
        except (TypeError, ValueError):
            return [f"{path}: {expected!r} != {actual!r}"]
        if math.isclose(e, a, rel_tol=GOLDEN_RTOL, abs_tol=1e-12):
            return []
        return [f"{path}: {e!r} != {a!r}"]
    if isinstance(expected, dict) and isinstance(actual, dict):
        out = []
        for k in sorted(set(expected) | set(actual)):
            if k not in expected or k not in actual:
                out.append(f"{path}.{k}: present on one side only")
            else:
                out += diff_records(expected[k], actual[k], f"{path}.{k}")
        return out
    if isinstance(expected, list) and isinstance(actual, list):
        if len(expected) != len(actual):
            return [f"{path}: length {len(expected)} != {len(actual)}"]
        out = []
        for i, (e, a) in enumerate(zip(expected, actual)):
            out += diff_records(e, a, f"{path}[{i}]")
        return out
    return [] if expected == actual else [f"{path}: {expected!r} != {actual!r}"]


def cmd_reproduce(name: str, update: bool = False) -> int:
    record = json.loads(json.dumps(reproduce_record(name), default=str))
    path = golden_path(name)
    if update:
        with open(str(path), "w") as fh:
            json.dump(record, fh, indent=1, sort_keys=True)
            fh.write("\n")
        print(f"wrote {path}", file=sys.stderr)
        return EXIT_OK
    expected = json.loads(path.read_text())
    diffs = diff_records(expected, record)
    for d in diffs[:50]:
        print(d, file=sys.stderr)
    print(f"{name}: {'FAIL' if diffs else 'ok'}", file=sys.stderr)
    return EXIT_DIFF if diffs else EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _add_problem_flags(sp):
    sp.add_argument("--config", help="JSON config file")
    sp.add_argument("--a", help="diffusivity a(z) as an expression in z")
    sp.add_argument("--f", help="source f(t, z) as an expression in t and z")
    sp.add_argument("--mode", choices=("exact", "float"))
    sp.add_argument("--truncation", help="J,N")
    sp.add_argument("--out", help="output path, '-' for stdout")
    sp.add_argument("--format", choices=("csv", "json"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gevrey-heat",
                                 description="Formal solutions of the heat equation with "
                                             "variable diffusivity and their summability.")
    sub = ap.add_subparsers(dest="command", required=True)
    _add_problem_flags(sub.add_parser("solve", help="coefficient table and traces"))
    sp = sub.add_parser("analyze", help="growth, norms, direction verdicts")
    _add_problem_flags(sp)
    sp.add_argument("--directions", help="degrees, e.g. '0,30,...,330'")
    sp.add_argument("--pipeline", help=f"comma-separated stages from {','.join(STAGES)}")
    sp = sub.add_parser("transform", help="the closed-form transforms of the data")
    _add_problem_flags(sp)
    sp.add_argument("--kind", choices=TRANSFORMS)
    sp = sub.add_parser("reproduce", help="rerun a named example against its golden file")
    sp.add_argument("name")
    sp.add_argument("--update", action="store_true", help=argparse.SUPPRESS)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if args.command == "reproduce":
            return cmd_reproduce(args.name, args.update)
        cfg = build_config(args)
        run = {"solve": run_solve, "analyze": run_analyze, "transform": run_transform}
        data = run[args.command](cfg)
        _emit(render(args.command, data, cfg["output"]["format"]), cfg["output"]["path"])
        if args.command == "analyze":
            print(data["summary"], file=sys.stderr)
        return EXIT_OK
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientCoefficients as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except (SolverError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
