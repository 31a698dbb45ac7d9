"""Command-line front end.

    levypri classify   --config run.json
    levypri criterion  --set triplet.sigma=1
    levypri phase-scan --set scan.steps=30 --format csv --out scan.csv
    levypri simulate   --config sim.json --seed 7
    levypri ladder     --config ladder.json

A run is described by one JSON document; ``--set a.b=value`` overrides
fields after parsing (values are parsed as JSON, falling back to strings).
Unknown fields are rejected. Exit codes: 0 decided, 1 usage or config
error, 2 indeterminate, 3 budget refusal.
"""
from __future__ import annotations

import argparse
import copy
import csv
import dataclasses
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .criteria import (Answer, QuadConfig, Status, corollary_decision, criterion_report, decide_pri,
                       evaluate_J)
from .ladder import (RenewalConfig, SubordinatorSpec, erickson_envelope, evaluate_I, renewal_function)
from .measures import (PLUS, IndeterminateError, LevyTriplet, PowerLawTails, classify_variation,
                       integrability_report, measure_from_dict)
from .simulate import SimConfig, estimate_pri_existence, overshoot_survival_table, paths_to_csv, simulate_path

SCHEMA_VERSION = 1

EXIT_OK, EXIT_CONFIG, EXIT_INDETERMINATE, EXIT_BUDGET = 0, 1, 2, 3

# rough wall-clock cost of one simulated path step including hit detection
SECONDS_PER_PATH_STEP = 3e-6


class ConfigError(ValueError):
    pass


class BudgetError(RuntimeError):
    pass


def _fields(cls) -> dict:
    return {f.name: f.default for f in dataclasses.fields(cls)}


DEFAULT_TRIPLET = {"gamma": 0.0, "sigma": 0.0,
                   "measure": {"variant": "power_law", "alpha": 1.5, "beta": 0.5, "c_minus": 1.0, "c_plus": 1.0}}
DEFAULT_SCAN = {"alpha_min": 1.05, "alpha_max": 1.95, "beta_min": 0.05, "beta_max": 1.95, "steps": 30,
                "boundary_margin": 0.05, "with_mc": False, "budget_seconds": 600.0}
DEFAULT_SUBORDINATOR = {"drift": 1.0, "measure": {"variant": "zero"}, "kill_rate": 0.0}

SECTIONS = {
    "classify": {"triplet": DEFAULT_TRIPLET},
    "criterion": {"triplet": DEFAULT_TRIPLET, "quad": _fields(QuadConfig)},
    "phase-scan": {"scan": DEFAULT_SCAN, "quad": _fields(QuadConfig), "sim": _fields(SimConfig),
                   "n_list": [1, 2, 3, 4, 5, 6]},
    "simulate": {"triplet": DEFAULT_TRIPLET, "sim": _fields(SimConfig), "n_list": [1, 2, 3, 4, 5, 6],
                 "dump_paths": 0},
    "ladder": {"subordinator": DEFAULT_SUBORDINATOR, "renewal": _fields(RenewalConfig),
               "grid": [0.125, 0.25, 0.5, 0.75, 1.0], "sandwich": None, "I": None},
}
# sections whose contents are free-form specifications checked by their own parsers
OPAQUE = {"triplet", "subordinator", "sandwich", "I", "n_list", "grid", "dump_paths"}


def canonical(obj):
    """Sort keys and normalize numbers so equal configs serialize identically."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, float, np.integer, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ConfigError("non-finite number in config")
        return int(x) if x.is_integer() and abs(x) < 2**53 else x
    raise ConfigError(f"unsupported config value {obj!r}")


def canonical_json(cfg: dict) -> str:
    return json.dumps(canonical(cfg), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(cfg: dict) -> str:
    """Stable 64-bit digest (16 hex digits) of the canonical config."""
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()[:16]


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(cfg: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    key, value = assignment.split("=", 1)
    parts = key.strip().split(".")
    node = cfg
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            node[p] = {} if node.get(p) is None else node[p]
            if not isinstance(node[p], dict):
                raise ConfigError(f"cannot set {key}: {p} is not a section")
        node = node[p]
    node[parts[-1]] = _parse_value(value)


def resolve_config(command: str, raw: dict) -> dict:
    """Fill defaults and reject unknown fields; returns the effective config."""
    spec = SECTIONS[command]
    unknown = set(raw) - set(spec)
    if unknown:
        raise ConfigError(f"unknown fields for {command}: {sorted(unknown)}")
    cfg = {}
    for name, default in spec.items():
        given = raw.get(name)
        if name in ("triplet", "subordinator"):
            # top-level fields merge with the defaults; a given measure replaces the default whole
            if given is not None and not isinstance(given, dict):
                raise ConfigError(f"section {name} must be an object")
            cfg[name] = {**copy.deepcopy(default), **copy.deepcopy(given or {})}
            continue
        if name in OPAQUE or not isinstance(default, dict):
            cfg[name] = copy.deepcopy(default if given is None else given)
            continue
        if given is not None and not isinstance(given, dict):
            raise ConfigError(f"section {name} must be an object")
        bad = set(given or {}) - set(default)
        if bad:
            raise ConfigError(f"unknown fields in {name}: {sorted(bad)}")
        cfg[name] = {**default, **(given or {})}
    return canonical(cfg)


def _dc(cls, d: dict):
    try:
        return cls(**d)
    except TypeError as e:
        raise ConfigError(str(e)) from e


def _triplet(cfg) -> LevyTriplet:
    return LevyTriplet.from_dict(cfg["triplet"])


def _subordinator(d: dict) -> SubordinatorSpec:
    bad = set(d) - {"drift", "measure", "kill_rate"}
    if bad:
        raise ConfigError(f"unknown subordinator fields: {sorted(bad)}")
    m = measure_from_dict(d.get("measure", {"variant": "zero"}))
    return SubordinatorSpec(float(d.get("drift", 0.0)), m, float(d.get("kill_rate", 0.0)))


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def to_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r.get(h)) for h in header])
    return buf.getvalue()


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclasses.dataclass
class Outcome:
    payload: dict
    csv: str
    summary: str
    code: int = EXIT_OK


def cmd_classify(cfg: dict, threads: int = 1) -> Outcome:
    t = _triplet(cfg)
    try:
        var = classify_variation(t)
        rep = integrability_report(t.measure)
    except IndeterminateError as e:
        return Outcome({"status": "indeterminate", "reason": str(e)}, to_csv(["status"], [{"status": "indeterminate"}]),
                       f"indeterminate: {e}", EXIT_INDETERMINATE)
    row = {**var.to_dict(), "total": rep.total.value, "first_moment_finite": rep.first_moment_finite}
    payload = {"variation": var.to_dict(), "integrability": rep.to_dict()}
    header = ["kind", "b", "plus_side", "minus_side", "total", "first_moment_finite"]
    summary = f"{var.kind} variation" + (f", drift b={var.b:g}" if var.bounded else "")
    return Outcome(payload, to_csv(header, [row]), summary)


_BRANCH_TEXT = {
    "continuous/sigma": "no jumps, σ>0 or drift up: first hitting times form the inverse",
    "continuous/drift_up": "no jumps, drift coefficient b>0: first hitting times form the inverse",
    "continuous/drift_down": "no jumps and negative drift: positive levels are never reached",
    "continuous/degenerate": "constant process: positive levels are never reached",
    "finite_activity/sigma": "finitely many jumps and σ>0 or drift up before the first jump",
    "finite_activity/drift_up": "finitely many jumps, drift coefficient b>0 before the first jump",
    "finite_activity/drift_nonpos": "finitely many jumps, drift coefficient b≤0: no upward creeping start",
    "spectrally_negative/UV": "finitely many upward jumps, unbounded variation: creeps upward",
    "spectrally_negative/BV_drift_up": "finitely many upward jumps, drift coefficient b>0",
    "spectrally_negative/BV_drift_nonpos": "finitely many upward jumps, drift coefficient b≤0",
    "UV/sigma": "σ>0 or J finite: σ>0 holds",
    "plus_infinite/BV": "bounded variation needs drift coefficient b>0 and finitely many upward jumps",
    "plus_infinite/UV_no_sigma": "infinitely many upward jumps, finitely many downward, σ=0",
    "BV/plus_infinite": "bounded variation needs drift coefficient b>0 and finitely many upward jumps",
    "UV/J-finite": "σ>0 or J finite: J is finite",
    "UV/J-infinite": "σ>0 or J finite: σ=0 and J diverges",
    "UV/J-indeterminate": "σ=0 and the J integral could not be classified",
}


def _criterion_row(rep) -> dict:
    d = rep.decision
    row = {"answer": d.answer.value, "case": d.case.value, "variation": d.variation.kind, "b": d.variation.b}
    for name, r in (("J", rep.J), ("L", rep.L)):
        row[f"{name}_status"] = None if r is None else r.status.value
        row[f"{name}_value"] = None if r is None else r.value
        row[f"{name}_local_exponent"] = None if r is None else r.local_exponent
    return row


def cmd_criterion(cfg: dict, threads: int = 1) -> Outcome:
    t = _triplet(cfg)
    quad = _dc(QuadConfig, cfg["quad"])
    try:
        rep = criterion_report(t, quad)
    except IndeterminateError as e:
        return Outcome({"status": "indeterminate", "reason": str(e)}, to_csv(["answer"], [{"answer": "indeterminate"}]),
                       f"indeterminate: {e}", EXIT_INDETERMINATE)
    header = ["answer", "case", "variation", "b", "J_status", "J_value", "J_local_exponent",
              "L_status", "L_value", "L_local_exponent"]
    d = rep.decision
    summary = f"{d.answer.value} [{d.case.value}]: {_BRANCH_TEXT[d.case.value]}"
    code = EXIT_INDETERMINATE if d.answer is Answer.INDETERMINATE else EXIT_OK
    return Outcome(rep.to_dict(), to_csv(header, [_criterion_row(rep)]), summary, code)


def _scan_grid(scan: dict):
    n = int(scan["steps"])
    if n < 1:
        raise ConfigError("scan.steps must be positive")
    a0, a1, b0, b1 = (float(scan[k]) for k in ("alpha_min", "alpha_max", "beta_min", "beta_max"))
    if not (1 < a0 <= a1 < 2) or not (0 <= b0 <= b1 < 2):
        raise ConfigError("scan needs 1 < alpha < 2 and 0 <= beta < 2")
    return np.linspace(a0, a1, n), np.linspace(b0, b1, n)


def estimate_mc_seconds(sim: SimConfig, cells: int) -> float:
    steps = sim.horizon / sim.dt
    return cells * sim.n_paths * steps * SECONDS_PER_PATH_STEP


def cmd_phase_scan(cfg: dict, threads: int = 1) -> Outcome:
    scan = cfg["scan"]
    unknown = set(scan) - set(DEFAULT_SCAN)
    if unknown:
        raise ConfigError(f"unknown fields in scan: {sorted(unknown)}")
    quad = _dc(QuadConfig, cfg["quad"])
    alphas, betas = _scan_grid(scan)
    margin = float(scan["boundary_margin"])
    with_mc = bool(scan["with_mc"])
    sim = _dc(SimConfig, cfg["sim"]) if with_mc else None
    n_list = [int(n) for n in cfg["n_list"]]
    if with_mc:
        need = estimate_mc_seconds(sim, len(alphas) * len(betas))
        if need > float(scan["budget_seconds"]):
            raise BudgetError(f"Monte Carlo column needs about {need:.0f} s, budget is "
                              f"{float(scan['budget_seconds']):.0f} s; reduce scan.steps, sim.n_paths or "
                              f"sim.horizon/sim.dt, or raise scan.budget_seconds")
    rows = []
    for a in alphas:
        for b in betas:
            a, b = float(a), float(b)
            cor = corollary_decision(a, b)
            t = LevyTriplet(0.0, 0.0, PowerLawTails(a, b))
            near = abs(b - (2 * a - 2)) < margin
            row = {"alpha": a, "beta": b, "analytic_pri": "boundary" if near else cor.pri,
                   "analytic_creep": cor.creeps}
            try:
                row["J_status"] = evaluate_J(t, quad).status.value
                row["decision"] = decide_pri(t, quad).answer.value
            except IndeterminateError:
                row["J_status"], row["decision"] = Status.INDETERMINATE.value, Answer.INDETERMINATE.value
            if with_mc:
                est = estimate_pri_existence(t, sim, n_list, threads=threads)
                row["mc_finite_fraction"] = float(est.finite_fraction[-1])
            rows.append(row)
    header = ["alpha", "beta", "analytic_pri", "analytic_creep", "J_status", "decision"]
    if with_mc:
        header.append("mc_finite_fraction")
    decided = [r for r in rows if r["analytic_pri"] != "boundary"]
    agree = sum((r["decision"] == "exists") == r["analytic_pri"] for r in decided)
    summary = f"{len(rows)} cells, {len(decided)} off the boundary band, {agree} agree with β<2α−2"
    return Outcome({"cells": rows}, to_csv(header, rows), summary)


def cmd_simulate(cfg: dict, threads: int = 1) -> Outcome:
    t = _triplet(cfg)
    sim = _dc(SimConfig, cfg["sim"])
    n_list = [int(n) for n in cfg["n_list"]]
    est = estimate_pri_existence(t, sim, n_list, threads=threads)
    rows = list(est.rows())
    header = ["n", "level", "finite_fraction", "finite_fraction_se", "one_minus_laplace",
              "one_minus_laplace_se", "p_hat", "p_hat_se", "hit_class", "trend"]
    payload = {"rows": rows, "monotone_violations": est.monotone_violations, "horizon_censored": True,
               "K": est.K}
    n_dump = int(cfg.get("dump_paths") or 0)
    if n_dump:
        paths = {i: simulate_path(t, sim, i) for i in range(min(n_dump, sim.n_paths))}
        payload["path_csv"], payload["jump_csv"] = paths_to_csv(paths)
    summary = (f"class {est.hit_class}; finite fraction of K^({n_list[-1]}) by horizon {sim.horizon:g}: "
               f"{est.finite_fraction[-1]:.3f} ± {est.finite_fraction_se[-1]:.3f}; trend {est.trend}; "
               "indicator only")
    return Outcome(payload, to_csv(header, rows), summary)


def cmd_ladder(cfg: dict, threads: int = 1) -> Outcome:
    s = _subordinator(cfg["subordinator"])
    rcfg = _dc(RenewalConfig, cfg["renewal"])
    grid = np.asarray(cfg["grid"], dtype=float)
    U = renewal_function(s, grid, rcfg)
    payload = {"renewal": {"grid": U.grid, "U": U.values, "u0": U.u0, "method": U.method,
                           "se": None if U.se is None else U.se},
               "erickson": [{"x": float(x), "U": float(u), "envelope": erickson_envelope(s, float(x))}
                            for x, u in zip(U.grid, U.values)]}
    code = EXIT_OK
    notes = []
    if cfg.get("I") is not None:
        spec = dict(cfg["I"])
        bad = set(spec) - {"mu_plus"}
        if bad:
            raise ConfigError(f"unknown fields in I: {sorted(bad)}")
        mu = measure_from_dict(spec["mu_plus"])
        try:
            res = evaluate_I(lambda x: mu.tail(PLUS, x), U)
            payload["I"] = {**res.result.to_dict(), "via_convolution": res.via_convolution}
            if res.result.status is Status.INDETERMINATE:
                code = EXIT_INDETERMINATE
            notes.append(f"I {res.result.status.value}")
        except IndeterminateError as e:
            payload["I"] = {"status": "indeterminate", "reason": str(e)}
            code = EXIT_INDETERMINATE
            notes.append("I indeterminate")
    if cfg.get("sandwich") is not None:
        sw = dict(cfg["sandwich"])
        bad = set(sw) - {"x", "y", "n_paths", "epsilon", "seed"}
        if bad:
            raise ConfigError(f"unknown fields in sandwich: {sorted(bad)}")
        sim = SimConfig(epsilon=float(sw.get("epsilon", 1e-3)), n_paths=int(sw.get("n_paths", 10000)),
                        seed=int(sw.get("seed", rcfg.seed)))
        rows, misses = [], 0
        for o in overshoot_survival_table(s, sim, sw["x"], sw["y"]):
            u = U(o.x)
            for y, p, se in zip(o.y, o.survival, o.se):
                lo, hi = float(s.tail(o.x + y)) * u, float(s.tail(y)) * u
                ok = lo - 3 * se <= p <= hi + 3 * se
                misses += not ok
                rows.append({"x": o.x, "y": float(y), "lower": lo, "survival": float(p), "se": float(se),
                             "upper": hi, "inside": ok})
        payload["sandwich"] = rows
        notes.append(f"sandwich violations {misses}/{len(rows)}")
    header = ["x", "U", "se", "envelope"]
    se = U.se if U.se is not None else [None] * len(U.grid)
    rows = [{"x": 0.0, "U": U.u0, "se": None, "envelope": None}] + [
        {"x": float(x), "U": float(u), "se": None if e is None else float(e), "envelope": r["envelope"]}
        for x, u, e, r in zip(U.grid, U.values, se, payload["erickson"])]
    summary = f"renewal function by {U.method} on {len(U.grid)} points" + (f"; {'; '.join(notes)}" if notes else "")
    return Outcome(payload, to_csv(header, rows), summary, code)


COMMANDS = {"classify": cmd_classify, "criterion": cmd_criterion, "phase-scan": cmd_phase_scan,
            "simulate": cmd_simulate, "ladder": cmd_ladder}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field, dotted path")
    common.add_argument("--seed", type=int, help="seed for every random section")
    common.add_argument("--cache", default=os.environ.get("LEVY_PRI_CACHE"),
                        help="result cache directory (default $LEVY_PRI_CACHE)")
    common.add_argument("--out", help="write the payload here instead of stdout")
    common.add_argument("--format", choices=["csv", "json"], default="json")
    common.add_argument("--threads", type=int, default=1)
    p = _Parser(prog="levypri", description="Partial right inverse criteria and Monte Carlo checks.",
                parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=COMMANDS[name].__doc__)
        if name == "phase-scan":
            sp.add_argument("--with-mc", action="store_true", help="add the Monte Carlo finite-fraction column")
    return p


def load_config(args) -> dict:
    raw = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    for a in args.set:
        apply_override(raw, a)
    if getattr(args, "with_mc", False):
        raw.setdefault("scan", {})["with_mc"] = True
    if args.seed is not None:
        for section in ("sim", "renewal"):
            if section in SECTIONS[args.command]:
                raw.setdefault(section, {})["seed"] = args.seed
    return resolve_config(args.command, raw)


def _record(command: str, cfg: dict, h: str, out: Outcome) -> dict:
    return {"config_hash": h, "subcommand": command, "artifact_version": __version__,
            "schema_version": SCHEMA_VERSION,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "config": cfg, "exit_code": out.code, "summary": out.summary,
            "payload": _clean(out.payload), "csv": out.csv}


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = load_config(args)
        h = config_hash({"subcommand": args.command, **cfg})
        record = None
        cache_file = os.path.join(args.cache, f"{args.command}-{h}.json") if args.cache else None
        if cache_file and os.path.exists(cache_file):
            with open(cache_file, encoding="utf-8") as fh:
                record = json.load(fh)
            print(f"cache hit {h}: replaying stored result", file=sys.stderr)
        if record is None:
            start = time.perf_counter()
            out = COMMANDS[args.command](cfg, threads=max(1, args.threads))
            record = _record(args.command, cfg, h, out)
            record["elapsed_seconds"] = round(time.perf_counter() - start, 3)
            if cache_file:
                os.makedirs(args.cache, exist_ok=True)
                with open(cache_file, "w", encoding="utf-8") as fh:
                    json.dump(record, fh, sort_keys=True)
        if args.format == "csv":
            _emit(record["csv"], args.out)
        else:
            body = {k: v for k, v in record.items() if k != "csv"}
            _emit(json.dumps(body, indent=2, sort_keys=True, ensure_ascii=False) + "\n", args.out)
        print(record["summary"], file=sys.stderr)
        return int(record["exit_code"])
    except BudgetError as e:
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except IndeterminateError as e:
        print(f"indeterminate: {e}", file=sys.stderr)
        return EXIT_INDETERMINATE
    except (ConfigError, ValueError, KeyError, TypeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
