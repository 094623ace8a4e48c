"""K-slot simulation loop, run summaries and parameter sweeps."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .channel import FadingModel
from .model import (
    RunSummary,
    SimConfig,
    VirtualQueueState,
    db_to_linear,
    update_user_queue,
    update_z_queue,
    validate_config,
)
from .scheduler import SCHEDULERS

QOS_TOL = 1e-2
STABILITY_EPS = 1e-2


@dataclass
class SlotRecord:
    slot: int
    arrival: bool
    phase1_threshold: float  # nan when the BS is idle
    phase1_rate: float
    mu1: float
    mu2: float
    relay: int  # -1 for no relay
    relay_threshold: float  # nan without relay
    aux_r: int
    objective: float
    infeasible: bool
    decoded: np.ndarray
    y: np.ndarray  # queues after the end-of-slot update
    z: float

    @property
    def n_decoded(self) -> int:
        return int(self.decoded.sum())


def _nan_if_none(x):
    return float("nan") if x is None else float(x)


def simulate(cfg: SimConfig, scheduler: str = "free_bs", record: bool = True):
    """Run ``cfg.n_slots`` slots; returns ``(records, summary)``.

    With ``record=False`` the record list is empty and only the summary is
    accumulated, which keeps long sweeps light.
    """
    cfg = validate_config(cfg)
    decide = SCHEDULERS[scheduler]
    n, T = cfg.n_users, cfg.slot_duration
    fading = FadingModel.from_config(cfg)
    queues = VirtualQueueState.zeros(n)

    records: List[SlotRecord] = []
    mu2_sum = 0.0
    decoded_count = np.zeros(n, dtype=np.int64)
    arrivals = 0
    infeasible = 0
    for k in range(1, cfg.n_slots + 1):
        arrival, gains = fading.draw(k, cfg.arrival_rate)
        d = decide(gains, queues, arrival, cfg)
        y = update_user_queue(queues.y, int(arrival), cfg.qos, d.decoded)
        z = update_z_queue(queues.z, d.aux_r, d.mu2 / T)
        queues = VirtualQueueState(y, z)

        mu2_sum += d.mu2
        decoded_count += d.decoded
        arrivals += arrival
        infeasible += d.infeasible
        if record:
            records.append(
                SlotRecord(
                    slot=k,
                    arrival=arrival,
                    phase1_threshold=_nan_if_none(d.phase1_threshold),
                    phase1_rate=d.phase1_rate,
                    mu1=d.mu1,
                    mu2=d.mu2,
                    relay=-1 if d.relay is None else int(d.relay),
                    relay_threshold=_nan_if_none(d.relay_threshold),
                    aux_r=d.aux_r,
                    objective=d.objective,
                    infeasible=d.infeasible,
                    decoded=d.decoded,
                    y=y,
                    z=z,
                )
            )

    summary = _make_summary(
        cfg, cfg.n_slots, mu2_sum / T, decoded_count, arrivals, queues, infeasible
    )
    return records, summary


def run(cfg: SimConfig, scheduler: str = "free_bs"):
    """Simulate with the full per-slot trace; see :func:`simulate`."""
    return simulate(cfg, scheduler, record=True)


def _make_summary(cfg, k, mu2_norm_sum, decoded_count, arrivals, queues, infeasible, qos_tol=QOS_TOL):
    q = np.broadcast_to(np.asarray(cfg.qos, dtype=float), (cfg.n_users,))
    if arrivals:
        ratio = decoded_count / arrivals
    else:
        ratio = np.ones(cfg.n_users)  # no packets to deliver
    return RunSummary(
        offloading_factor=mu2_norm_sum / k,
        delivery_ratio=ratio,
        throughput=float(decoded_count.sum()) / k,
        queue_drift_y=queues.y / k,
        queue_drift_z=queues.z / k,
        qos_met=ratio >= q - qos_tol,
        n_slots=k,
        n_arrivals=int(arrivals),
        n_infeasible=int(infeasible),
    )


def summarize(records: Sequence[SlotRecord], cfg: SimConfig, qos_tol: float = QOS_TOL) -> RunSummary:
    """Aggregate a record stream.

    A user meets its QoS target when its delivery ratio is at least
    ``q_i - qos_tol``. Without any arrival every user is vacuously satisfied.
    """
    if not records:
        raise ValueError("cannot summarize an empty record stream")
    k = len(records)
    mu2 = sum(r.mu2 for r in records) / cfg.slot_duration
    decoded = np.sum([r.decoded for r in records], axis=0).astype(np.int64)
    arrivals = sum(r.arrival for r in records)
    last = records[-1]
    infeasible = sum(r.infeasible for r in records)
    return _make_summary(
        cfg, k, mu2, decoded, arrivals, VirtualQueueState(last.y, last.z), infeasible, qos_tol
    )


def check_stability(records: Sequence[SlotRecord], epsilon: float = STABILITY_EPS) -> np.ndarray:
    """Empirical mean-rate stability: ``Q(K)/K < epsilon`` for every queue.

    Returns one flag per user queue followed by the flag for Z.
    """
    k = len(records)
    if k < 1000:
        raise ValueError("need at least 1000 slots to judge stability")
    last = records[-1]
    return np.append(last.y / k < epsilon, last.z / k < epsilon)


# ---- sweeps ---------------------------------------------------------------

SWEEP_PARAMS = ("bs_power_db", "power_db", "n_users", "control_v", "arrival_rate")


@dataclass
class SweepSpec:
    parameter: str
    values: Sequence[float]
    replications: int = 1
    schedulers: Sequence[str] = ("free_bs", "baseline")

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMS:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}")
        vals = list(self.values)
        if not vals:
            raise ValueError("sweep values must be nonempty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        for s in self.schedulers:
            if s not in ("free_bs", "baseline"):
                raise ValueError(f"unknown scheduler {s!r}")


def apply_param(cfg: SimConfig, parameter: str, value) -> SimConfig:
    """Config with one sweep parameter set.

    ``bs_power_db`` changes only the BS power; ``power_db`` sets the BS and
    every user to the same power. Changing ``n_users`` re-broadcasts the
    per-user parameters from their first entry.
    """
    if parameter == "bs_power_db":
        return replace(cfg, bs_power=float(db_to_linear(value)))
    if parameter == "power_db":
        p = float(db_to_linear(value))
        return replace(cfg, bs_power=p, user_powers=p)
    if parameter == "n_users":
        n = int(value)
        first = lambda x: float(np.ravel(x)[0])  # noqa: E731
        return replace(
            cfg,
            n_users=n,
            user_powers=first(cfg.user_powers),
            mean_gain_bs=first(cfg.mean_gain_bs),
            mean_gain_d2d=first(cfg.mean_gain_d2d),
            qos=first(cfg.qos),
        )
    if parameter == "control_v":
        return replace(cfg, control_v=float(value))
    if parameter == "arrival_rate":
        return replace(cfg, arrival_rate=float(value))
    raise ValueError(f"unknown sweep parameter {parameter!r}")


def _sweep_job(job):
    parameter, value, rep, scheduler, cfg = job
    _, summary = simulate(cfg, scheduler, record=False)
    return {
        "param": parameter,
        "value": value,
        "rep": rep,
        "scheduler": scheduler,
        "seed": cfg.seed,
        "summary": summary,
    }


def default_workers() -> int:
    env = os.environ.get("FREEBS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_sweep(cfg: SimConfig, spec: SweepSpec, workers: Optional[int] = None) -> List[dict]:
    """Run every (value, replication, scheduler) point of a sweep.

    Replication ``r`` uses seed ``cfg.seed + r`` for every value and
    scheduler, so scheduler comparisons share channel and arrival draws.
    Results come back in (value, rep, scheduler) order whatever the worker
    count.
    """
    jobs = []
    for value in spec.values:
        point = apply_param(cfg, spec.parameter, value)
        for rep in range(spec.replications):
            seeded = validate_config(replace(point, seed=cfg.seed + rep))
            for sched in spec.schedulers:
                jobs.append((spec.parameter, value, rep, sched, seeded))
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(jobs) == 1:
        return [_sweep_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_sweep_job, jobs))


def mean_over_reps(results: Iterable[dict], field: str = "offloading_factor"):
    """``{(scheduler, value): (mean, standard error)}`` of a summary field."""
    groups = {}
    for row in results:
        groups.setdefault((row["scheduler"], row["value"]), []).append(
            getattr(row["summary"], field)
        )
    out = {}
    for key, vals in groups.items():
        vals = np.asarray(vals, dtype=float)
        se = vals.std(ddof=1) / np.sqrt(len(vals)) if len(vals) > 1 else 0.0
        out[key] = (float(vals.mean()), float(se))
    return out
