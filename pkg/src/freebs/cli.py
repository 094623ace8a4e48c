"""Command-line front end: single runs, parameter sweeps and the oracle self-test.

    freebs run    --config cfg.json [--scheduler S] [--seed n] [--trace t.csv] [--summary s.json]
    freebs sweep  --config cfg.json --param P --values v1,v2 [--reps r] --out dir
    freebs verify --config cfg.json --slots n

Exit codes: 0 success, 1 usage/config/output error, 2 failed verification.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .channel import FadingModel
from .engine import SWEEP_PARAMS, SweepSpec, run, run_sweep, simulate
from .model import ConfigError, RunSummary, VirtualQueueState, validate_config
from .scheduler import brute_force_decide, free_bs_decide

log = logging.getLogger("freebs")

CSV_COLUMNS = (
    "param",
    "value",
    "rep",
    "scheduler",
    "seed",
    "offloading_factor",
    "throughput",
    "min_delivery_ratio",
    "max_queue_drift",
    "qos_all_met",
)


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """Fixed 9-significant-digit float formatting used in every CSV."""
    return f"{float(x):.9g}"


def result_row(summary: RunSummary, param="", value="", rep=0, scheduler="", seed=0) -> dict:
    drift = np.append(summary.queue_drift_y, summary.queue_drift_z)
    return {
        "param": param,
        "value": value if isinstance(value, str) else fmt(value),
        "rep": int(rep),
        "scheduler": scheduler,
        "seed": int(seed),
        "offloading_factor": fmt(summary.offloading_factor),
        "throughput": fmt(summary.throughput),
        "min_delivery_ratio": fmt(np.min(summary.delivery_ratio)),
        "max_queue_drift": fmt(np.max(drift)),
        "qos_all_met": "true" if bool(np.all(summary.qos_met)) else "false",
    }


def emit_csv(results: Iterable[dict], path) -> None:
    """Write sweep/run results (rows from :func:`result_row` or :func:`run_sweep`)."""
    rows = []
    for r in results:
        if "summary" in r:
            r = result_row(r["summary"], r["param"], r["value"], r["rep"], r["scheduler"], r["seed"])
        rows.append(r)
    if not rows:
        raise ValueError("no results to write")
    try:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_trace(records, path) -> None:
    if not records:
        raise ValueError("empty trace")
    n = len(records[0].y)
    header = [
        "slot", "arrival", "phase1_threshold", "phase1_rate", "mu1", "mu2", "relay",
        "relay_threshold", "aux_r", "objective", "infeasible", "n_decoded", "decoded",
    ] + [f"y{m}" for m in range(n)] + ["z"]
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in records:
                w.writerow(
                    [r.slot, int(r.arrival), fmt(r.phase1_threshold), fmt(r.phase1_rate),
                     fmt(r.mu1), fmt(r.mu2), r.relay, fmt(r.relay_threshold), r.aux_r,
                     fmt(r.objective), int(r.infeasible), r.n_decoded,
                     "".join("1" if d else "0" for d in r.decoded)]
                    + [fmt(v) for v in r.y]
                    + [fmt(r.z)]
                )
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc.strerror or exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"malformed config {path}: {exc}"]) from exc
    if not isinstance(data, dict):
        raise ConfigError([f"config {path} must be a JSON object"])
    return validate_config(data)


def verify_oracle(cfg, n_slots: int, seed: Optional[int] = None) -> int:
    """Compare Free-BS against the exhaustive oracle on random slots.

    Queues are drawn uniformly from [0, 5]. Returns the number of slots
    whose objectives differ.
    """
    seed = cfg.seed if seed is None else seed
    fading = FadingModel(cfg.mean_gain_bs, cfg.mean_gain_d2d, seed)
    rng = np.random.default_rng(seed)
    mismatches = 0
    for k in range(1, n_slots + 1):
        gains = fading.sample(k)
        queues = VirtualQueueState(rng.uniform(0, 5, cfg.n_users), float(rng.uniform(0, 5)))
        a = free_bs_decide(gains, queues, True, cfg).objective
        b = brute_force_decide(gains, queues, True, cfg).objective
        if a != b:
            mismatches += 1
            log.warning("slot %d: free_bs %.17g != oracle %.17g", k, a, b)
    return mismatches


def _parse_values(text: str, param: str):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --values {text!r}") from exc
    if param == "n_users":
        if any(v != int(v) for v in vals):
            raise UsageError("n_users values must be integers")
        vals = [int(v) for v in vals]
    return vals


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="freebs", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="simulate one configuration")
    r.add_argument("--config", required=True)
    r.add_argument("--scheduler", default="free_bs", choices=["free_bs", "baseline", "brute_force"])
    r.add_argument("--seed", type=int)
    r.add_argument("--slots", type=int, help="override n_slots")
    r.add_argument("--trace", help="per-slot CSV trace")
    r.add_argument("--summary", help="summary JSON (stdout if omitted)")

    s = sub.add_parser("sweep", help="sweep one parameter over replications")
    s.add_argument("--config", required=True)
    s.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    s.add_argument("--values", required=True)
    s.add_argument("--reps", type=int, default=1)
    s.add_argument("--slots", type=int, help="override n_slots")
    s.add_argument("--schedulers", default="free_bs,baseline")
    s.add_argument("--out", required=True, help="output directory")

    v = sub.add_parser("verify", help="check Free-BS against the brute-force oracle")
    v.add_argument("--config", required=True)
    v.add_argument("--slots", type=int, default=1000)
    return p


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = validate_config(replace(cfg, seed=args.seed))
    if args.slots is not None:
        cfg = validate_config(replace(cfg, n_slots=args.slots))
    if args.trace:
        records, summary = run(cfg, args.scheduler)
        write_trace(records, args.trace)
    else:
        _, summary = simulate(cfg, args.scheduler, record=False)
    out = summary.to_dict()
    out["scheduler"] = args.scheduler
    out["seed"] = cfg.seed
    text = json.dumps(out, indent=2) + "\n"
    if args.summary:
        try:
            with open(args.summary, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {args.summary}: {exc.strerror or exc}") from exc
    else:
        sys.stdout.write(text)
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if args.slots is not None:
        cfg = validate_config(replace(cfg, n_slots=args.slots))
    try:
        spec = SweepSpec(
            args.param,
            _parse_values(args.values, args.param),
            args.reps,
            tuple(s for s in args.schedulers.split(",") if s),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {args.out}: {exc.strerror or exc}") from exc
    results = run_sweep(cfg, spec)
    path = os.path.join(args.out, f"sweep_{args.param}.csv")
    emit_csv(results, path)
    log.info("wrote %d rows to %s", len(results), path)
    return 0


def _cmd_verify(args) -> int:
    cfg = load_config(args.config)
    bad = verify_oracle(cfg, args.slots)
    print(f"verify: {args.slots - bad}/{args.slots} slots match the oracle")
    return 2 if bad else 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"freebs: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    commands = {"run": _cmd_run, "sweep": _cmd_sweep, "verify": _cmd_verify}
    try:
        return commands[args.command](args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 1
    except (UsageError, OSError, ValueError) as exc:
        print(f"freebs: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
