"""Command-line front end: ``egkcap {capacity,aux,mgf,simulate,validate}``.

Settings may come from a JSON config file (``--config``); any flag given on the
command line overrides the file, and built-in defaults fill the rest.

Exit codes: 0 success, 1 validation-suite failure, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .capacity import (QuadratureSpec, Scheme, aux_c_closed_form, aux_c_foxh,
                       aux_c_rmsc_closed_form, combiner_params, ergodic_capacity_inid)
from .egk import EgkParams, egk_generalized_mgf, egk_generalized_mgf_derivative, named_special_case
from .errors import EgkcapError
from .montecarlo import SimulationPlan, simulate_capacity, simulate_surrogate_bias

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS = {
    "scheme": "MRC",
    "branches": 1,
    "surrogate_order": None,
    "fading": ["rayleigh"],
    "snr_db": "0:20:5",
    "bandwidth": 1.0,
    "nodes": 256,
    "tolerance": 1e-8,
    "mc_samples": 0,
    "seed": 0,
    "format": "csv",
    "output": None,
    "workers": 1,
}

CAPACITY_COLUMNS = ["snr_db", "capacity_bits_per_hz", "error_estimate", "mc_estimate",
                    "mc_ci95_low", "mc_ci95_high", "abs_diff"]


class ConfigError(Exception):
    pass


class NumericFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing helpers

def parse_grid(spec) -> list[float]:
    """'start:stop:step' (inclusive) or a single value, in dB."""
    if isinstance(spec, dict):
        try:
            start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"snr_db: bad grid object {spec!r}") from exc
    elif isinstance(spec, (int, float)):
        return [float(spec)]
    else:
        parts = str(spec).split(":")
        try:
            nums = [float(p) for p in parts]
        except ValueError:
            raise ConfigError(f"snr_db: cannot parse {spec!r}; expected start:stop:step") from None
        if len(nums) == 1:
            return nums
        if len(nums) != 3:
            raise ConfigError(f"snr_db: expected start:stop:step, got {spec!r}")
        start, stop, step = nums
    if not step > 0:
        raise ConfigError("snr_db: step must be > 0")
    if start > stop:
        raise ConfigError("snr_db: start must not exceed stop")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def parse_fading(desc: str, mean_snr: float) -> EgkParams:
    """Named model ('nakagami_m(2)') or key=value list ('m=2,xi=1,m_s=3,xi_s=1')."""
    desc = desc.strip()
    if "=" in desc:
        fields = {"m": 1.0, "xi": 1.0, "m_s": 50.0, "xi_s": 1.0}
        for item in desc.split(","):
            if not item.strip():
                continue
            key, _, val = item.partition("=")
            key = key.strip()
            if key not in fields:
                raise ConfigError(f"fading: unknown key {key!r} in {desc!r}")
            try:
                fields[key] = float(val)
            except ValueError:
                raise ConfigError(f"fading: bad value for {key!r} in {desc!r}") from None
        return EgkParams(fields["m"], fields["xi"], fields["m_s"], fields["xi_s"], mean_snr)
    return named_special_case(desc, mean_snr)


def _fmt(x):
    if x is None:
        return ""
    return repr(float(x))


def _json_num(x):
    return None if x is None else float(x)


# ---------------------------------------------------------------------------
# configuration

def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a JSON object")
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"config: unknown field(s) {sorted(unknown)}")
    return data


def resolve(args) -> dict:
    """Merge flags over config-file values over defaults."""
    cfg = dict(DEFAULTS)
    cfg.update(_load_config(getattr(args, "config", None)))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if isinstance(cfg["fading"], str):
        cfg["fading"] = [cfg["fading"]]
    try:
        cfg["scheme"] = Scheme.parse(cfg["scheme"])
    except EgkcapError as exc:
        raise ConfigError(f"scheme: {exc}") from None
    for key in ("branches", "nodes", "mc_samples", "seed", "workers"):
        try:
            cfg[key] = int(cfg[key])
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected an integer, got {cfg[key]!r}") from None
    if cfg["branches"] < 1:
        raise ConfigError("branches: must be >= 1")
    if len(cfg["fading"]) not in (1, cfg["branches"]):
        raise ConfigError(f"fading: give one descriptor or one per branch "
                          f"({cfg['branches']}), got {len(cfg['fading'])}")
    if cfg["mc_samples"] and cfg["mc_samples"] < 1000:
        raise ConfigError("mc_samples: must be 0 (disabled) or >= 1000")
    if not 0 <= cfg["seed"] < 2 ** 64:
        raise ConfigError("seed: must be a 64-bit unsigned integer")
    if cfg["workers"] < 1:
        raise ConfigError("workers: must be >= 1")
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("format: must be csv or json")
    if not float(cfg["bandwidth"]) > 0:
        raise ConfigError("bandwidth: must be > 0")
    cfg["snr_grid"] = parse_grid(cfg["snr_db"])
    try:
        cfg["combiner"] = combiner_params(cfg["scheme"], cfg["branches"], cfg["surrogate_order"])
        cfg["quad"] = QuadratureSpec(node_count=cfg["nodes"], tolerance=float(cfg["tolerance"]))
        # resolve every fading descriptor once so errors surface before any work
        for d in cfg["fading"]:
            parse_fading(d, 1.0)
    except EgkcapError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _branches(cfg, snr_db):
    descs = cfg["fading"] * cfg["branches"] if len(cfg["fading"]) == 1 else cfg["fading"]
    return [parse_fading(d, 10.0 ** (snr_db / 10.0)) for d in descs]


def _grid_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# capacity

def _capacity_row(job):
    cfg, index, snr_db = job
    branches = _branches(cfg, snr_db)
    try:
        res = ergodic_capacity_inid(branches, cfg["combiner"], float(cfg["bandwidth"]), cfg["quad"])
    except (EgkcapError, ArithmeticError) as exc:
        return {"error": f"snr_db={snr_db:g}: {type(exc).__name__}: {exc}"}
    row = {"snr_db": snr_db, "capacity_bits_per_hz": res.capacity,
           "error_estimate": res.error_estimate, "mc_estimate": None,
           "mc_ci95_low": None, "mc_ci95_high": None, "abs_diff": None}
    if cfg["mc_samples"]:
        plan = SimulationPlan(branches, cfg["scheme"], cfg["mc_samples"],
                              _grid_seed(cfg["seed"], index), float(cfg["bandwidth"]))
        mc = simulate_capacity(plan)
        row.update(mc_estimate=mc.estimate, mc_ci95_low=mc.ci95[0], mc_ci95_high=mc.ci95[1],
                   abs_diff=abs(res.capacity - mc.estimate))
    return row


def _map_rows(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))     # map keeps grid order
    return [fn(j) for j in jobs]


def _emit(rows, columns, fmt, meta, out):
    if fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([r[c] if isinstance(r[c], str) else _fmt(r[c]) for c in columns])
    else:
        doc = dict(meta)
        doc["columns"] = columns
        doc["rows"] = [{c: (r[c] if isinstance(r[c], str) else _json_num(r[c])) for c in columns}
                       for r in rows]
        out.write(json.dumps(doc, indent=2) + "\n")


def cmd_capacity(cfg, out, err) -> int:
    spec = cfg["combiner"]
    jobs = [(cfg, i, db) for i, db in enumerate(cfg["snr_grid"])]
    rows = _map_rows(_capacity_row, jobs, cfg["workers"])
    for r in rows:
        if "error" in r:
            raise NumericFailure(r["error"])
    meta = {"command": "capacity", "scheme": spec.scheme.value, "branches": spec.L,
            "eta": spec.eta, "p": spec.p, "q": spec.q, "surrogate_order": spec.surrogate_order,
            "fading": list(cfg["fading"]), "bandwidth": float(cfg["bandwidth"]),
            "mc_samples": cfg["mc_samples"], "seed": cfg["seed"]}
    if cfg["mc_samples"]:
        outside = sum(1 for r in rows
                      if not r["mc_ci95_low"] <= r["capacity_bits_per_hz"] <= r["mc_ci95_high"])
        meta["rows_outside_mc_ci95"] = outside
        err.write(f"summary: {outside} of {len(rows)} rows have the analytic capacity "
                  f"outside the Monte-Carlo 95% interval\n")
    _emit(rows, CAPACITY_COLUMNS, cfg["format"], meta, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# aux / mgf / simulate

def cmd_aux(cfg, s_values, rmsc_closed, out, err) -> int:
    spec = cfg["combiner"]
    rows = []
    for s in s_values:
        if not s > 0:
            raise ConfigError(f"s: values must be > 0, got {s}")
        try:
            general = aux_c_foxh(spec.eta, spec.q, spec.L, s)
        except (EgkcapError, ArithmeticError) as exc:
            raise NumericFailure(f"s={s:g}: {type(exc).__name__}: {exc}") from None
        closed = aux_c_closed_form(spec.eta, spec.q, spec.L, s)
        if closed is None and rmsc_closed and spec.scheme is Scheme.RMSC:
            closed = aux_c_rmsc_closed_form(s)
        rows.append({"s": s, "aux_general": general, "aux_closed_form": closed,
                     "abs_diff": None if closed is None else abs(general - closed)})
    meta = {"command": "aux", "scheme": spec.scheme.value, "branches": spec.L, "eta": spec.eta,
            "q": spec.q}
    _emit(rows, ["s", "aux_general", "aux_closed_form", "abs_diff"], cfg["format"], meta, out)
    return EXIT_OK


def cmd_mgf(cfg, p, s_values, out, err) -> int:
    rows = []
    for snr_db in cfg["snr_grid"]:
        b = parse_fading(cfg["fading"][0], 10.0 ** (snr_db / 10.0))
        for s in s_values:
            if not s > 0:
                raise ConfigError(f"s: values must be > 0, got {s}")
            try:
                rows.append({"snr_db": snr_db, "p": p, "s": s,
                             "mgf": egk_generalized_mgf(b, p, s),
                             "mgf_derivative": egk_generalized_mgf_derivative(b, p, s)})
            except (EgkcapError, ArithmeticError) as exc:
                raise NumericFailure(f"snr_db={snr_db:g} s={s:g}: {exc}") from None
    meta = {"command": "mgf", "fading": cfg["fading"][0]}
    _emit(rows, ["snr_db", "p", "s", "mgf", "mgf_derivative"], cfg["format"], meta, out)
    return EXIT_OK


def _simulate_row(job):
    cfg, index, snr_db = job
    branches = _branches(cfg, snr_db)
    plan = SimulationPlan(branches, cfg["scheme"], cfg["mc_samples"],
                          _grid_seed(cfg["seed"], index), float(cfg["bandwidth"]))
    mc = simulate_capacity(plan)
    row = {"snr_db": snr_db, "mc_estimate": mc.estimate, "standard_error": mc.standard_error,
           "mc_ci95_low": mc.ci95[0], "mc_ci95_high": mc.ci95[1],
           "surrogate_estimate": None, "relative_gap": None}
    if cfg["scheme"].is_limit:
        rep = simulate_surrogate_bias(plan, cfg["combiner"])
        row.update(surrogate_estimate=rep.surrogate_estimate, relative_gap=rep.relative_gap)
    return row


def cmd_simulate(cfg, out, err) -> int:
    if not cfg["mc_samples"]:
        cfg = dict(cfg, mc_samples=10 ** 6)
    jobs = [(cfg, i, db) for i, db in enumerate(cfg["snr_grid"])]
    rows = _map_rows(_simulate_row, jobs, cfg["workers"])
    cols = ["snr_db", "mc_estimate", "standard_error", "mc_ci95_low", "mc_ci95_high",
            "surrogate_estimate", "relative_gap"]
    meta = {"command": "simulate", "scheme": cfg["scheme"].value, "branches": cfg["branches"],
            "fading": list(cfg["fading"]), "mc_samples": cfg["mc_samples"], "seed": cfg["seed"]}
    _emit(rows, cols, cfg["format"], meta, out)
    return EXIT_OK


def cmd_validate(args, out, err) -> int:
    from .acceptance import CRITERIA, DEFAULT_TOLERANCES, run_acceptance
    overrides = {}
    for item in args.tolerance_override or []:
        key, _, val = item.partition("=")
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"tolerance-override: unknown key {key!r}; "
                              f"choose from {sorted(DEFAULT_TOLERANCES)}")
        try:
            overrides[key] = float(val)
        except ValueError:
            raise ConfigError(f"tolerance-override: bad value in {item!r}") from None
    numbers = None
    if args.criteria:
        try:
            numbers = [int(x) for x in args.criteria.split(",")]
        except ValueError:
            raise ConfigError(f"criteria: expected comma-separated numbers, got {args.criteria!r}")
        bad = [n for n in numbers if n not in CRITERIA]
        if bad:
            raise ConfigError(f"criteria: unknown criterion {bad}")
    results = run_acceptance(numbers, overrides, workers=args.workers or 1,
                             log=lambda line: out.write(line + "\n"))
    failed = [r for r in results if not r.passed]
    out.write(f"{len(results) - len(failed)}/{len(results)} criteria passed\n")
    for r in failed:
        out.write(f"failed: criterion {r.number} ({r.title})\n")
    return EXIT_OK if not failed else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# argument parser

def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="egkcap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid=True):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--scheme", help="MRC, EGC, SC, RMSC, CASCADED, GEOMETRIC_MEAN, "
                                        "AF_MULTIHOP or MIN_BOUND")
        p.add_argument("--branches", type=int, help="branch / hop count L")
        p.add_argument("--surrogate-order", dest="surrogate_order", type=int,
                       help="finite order for limit schemes (default 8)")
        p.add_argument("--fading", action="append",
                       help="per-branch model: name like nakagami_m(2) or m=..,xi=..,m_s=..,xi_s=..;"
                            " repeat once per branch or give once for all")
        if grid:
            p.add_argument("--snr-db", dest="snr_db", help="mean SNR grid start:stop:step in dB")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--output", help="write the table here instead of stdout")
        p.add_argument("--workers", type=int, help="parallel worker processes")

    p = sub.add_parser("capacity", help="ergodic capacity over a mean-SNR grid")
    common(p)
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--nodes", type=int, help="outer quadrature node count")
    p.add_argument("--tolerance", type=float, help="relative tolerance of the outer quadrature")
    p.add_argument("--mc-samples", dest="mc_samples", type=int, help="0 disables Monte Carlo")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("aux", help="auxiliary function C(s), general and closed form")
    common(p, grid=False)
    p.add_argument("--s", dest="s_values", type=_float_list, required=True,
                   help="comma-separated s values")
    p.add_argument("--rmsc-closed-form", action="store_true",
                   help="cross-check RMSC against its hypergeometric closed form")

    p = sub.add_parser("mgf", help="generalized MGF and its derivative for one branch")
    common(p)
    p.add_argument("--p", dest="p_exp", type=float, default=1.0, help="exponent p (non-zero)")
    p.add_argument("--s", dest="s_values", type=_float_list, required=True)

    p = sub.add_parser("simulate", help="Monte-Carlo capacity with the exact combiner")
    common(p)
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--mc-samples", dest="mc_samples", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("validate", help="run the acceptance checks")
    p.add_argument("--criteria", help="comma-separated subset, e.g. 1,3,6")
    p.add_argument("--tolerance-override", action="append", metavar="KEY=VALUE",
                   help="replace a tolerance (repeatable)")
    p.add_argument("--workers", type=int, default=1)
    return parser


def execute(argv, out, err) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "validate":
            return cmd_validate(args, out, err)
        cfg = resolve(args)
        target = cfg["output"]
        buf = io.StringIO()
        if args.command == "capacity":
            code = cmd_capacity(cfg, buf, err)
        elif args.command == "aux":
            code = cmd_aux(cfg, args.s_values, args.rmsc_closed_form, buf, err)
        elif args.command == "mgf":
            if args.p_exp == 0:
                raise ConfigError("p: must be non-zero")
            code = cmd_mgf(cfg, args.p_exp, args.s_values, buf, err)
        else:
            code = cmd_simulate(cfg, buf, err)
        if target:
            with open(target, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(buf.getvalue())
        else:
            out.write(buf.getvalue())
        return code
    except ConfigError as exc:
        err.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except NumericFailure as exc:
        err.write(f"numerical error: {exc}\n")
        return EXIT_NUMERIC
    except (EgkcapError, ArithmeticError) as exc:
        err.write(f"numerical error: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC


def run_to_string(argv):
    """Run the CLI in-process; returns (exit code, stdout text)."""
    out, err = io.StringIO(), io.StringIO()
    code = execute(list(argv), out, err)
    return code, out.getvalue()


def main(argv=None) -> int:
    return execute(sys.argv[1:] if argv is None else argv, sys.stdout, sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
