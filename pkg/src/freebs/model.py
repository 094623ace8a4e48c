"""Domain types, configuration validation and virtual-queue dynamics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping, Optional

import numpy as np


class ConfigError(ValueError):
    """Raised by :func:`validate_config`; ``errors`` lists every violated invariant."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


@dataclass
class SimConfig:
    """All system and algorithm parameters of one simulation.

    Per-user quantities may be given as scalars; :func:`validate_config`
    broadcasts them to arrays of length ``n_users`` (``mean_gain_d2d`` to an
    ``n_users x n_users`` matrix). Powers are linear, noise is normalized to 1.
    """

    n_users: int = 4
    slot_duration: float = 1.0
    packet_bits: float = 1.0
    bs_power: float = 100.0
    user_powers: Any = 100.0
    mean_gain_bs: Any = 0.3
    mean_gain_d2d: Any = 0.3
    qos: Any = 0.9
    arrival_rate: float = 1.0
    control_v: float = 1000.0
    n_slots: int = 100_000
    seed: int = 0
    log_base: float = 2
    allow_idle: bool = False
    relay_enabled: bool = True

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SimConfig":
        """Build a raw config from a flat mapping (e.g. parsed JSON).

        Keys ending in ``_db`` (``bs_power_db``, ``user_powers_db``) are
        converted to linear. ``slot_duration_ms`` is accepted as an alias of
        ``slot_duration``. Unknown keys raise :class:`ConfigError`.
        """
        data = dict(data)
        errors = []
        if "bs_power_db" in data:
            data["bs_power"] = float(db_to_linear(data.pop("bs_power_db")))
        if "user_powers_db" in data:
            data["user_powers"] = db_to_linear(data.pop("user_powers_db"))
        if "slot_duration_ms" in data:
            data["slot_duration"] = data.pop("slot_duration_ms")
        if "log_base" in data and data["log_base"] in ("e", "E"):
            data["log_base"] = math.e
        known = {f.name for f in fields(cls)}
        for key in sorted(set(data) - known):
            errors.append(f"unknown config key {key!r}")
        if errors:
            raise ConfigError(errors)
        return cls(**data)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, np.ndarray):
                value = value.tolist()
            elif isinstance(value, np.generic):
                value = value.item()
            out[f.name] = value
        return out

    @property
    def log_base_name(self) -> str:
        return "e" if self.log_base == math.e else "2"


def reference_config(n_users: int = 4, **overrides) -> SimConfig:
    """Validated config with the reference values (q=0.9, 20 dB, mean gain 0.3, L=1, V=1000)."""
    raw = dict(
        n_users=n_users,
        slot_duration=1.0,
        packet_bits=1.0,
        bs_power=float(db_to_linear(20.0)),
        user_powers=float(db_to_linear(20.0)),
        mean_gain_bs=0.3,
        mean_gain_d2d=0.3,
        qos=0.9,
        arrival_rate=1.0,
        control_v=1000.0,
    )
    raw.update(overrides)
    return validate_config(SimConfig(**raw))


def _broadcast(name, value, shape, errors):
    try:
        arr = np.broadcast_to(np.asarray(value, dtype=float), shape).copy()
    except (ValueError, TypeError):
        errors.append(f"{name} must be a scalar or have shape {shape}")
        return None
    if not np.all(np.isfinite(arr)):
        errors.append(f"{name} must be finite")
        return None
    return arr


def validate_config(raw: SimConfig | Mapping[str, Any]) -> SimConfig:
    """Check every config invariant and broadcast per-user parameters.

    Accepts a :class:`SimConfig` or a flat mapping (see
    :meth:`SimConfig.from_dict`). All violations are collected and raised
    together in a single :class:`ConfigError`.
    """
    if not isinstance(raw, SimConfig):
        raw = SimConfig.from_dict(raw)
    errors = []

    n = raw.n_users
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        errors.append("n_users must be >= 1")
        raise ConfigError(errors)
    n = int(n)

    if not raw.slot_duration > 0:
        errors.append("slot_duration must be > 0")
    if not raw.packet_bits > 0:
        errors.append("packet_bits must be > 0")
    if not raw.bs_power > 0:
        errors.append("bs_power must be > 0")
    user_powers = _broadcast("user_powers", raw.user_powers, (n,), errors)
    if user_powers is not None and np.any(user_powers <= 0):
        errors.append("user_powers must be > 0")
    mean_bs = _broadcast("mean_gain_bs", raw.mean_gain_bs, (n,), errors)
    if mean_bs is not None and np.any(mean_bs <= 0):
        errors.append("mean_gain_bs must be > 0")
    mean_d2d = _broadcast("mean_gain_d2d", raw.mean_gain_d2d, (n, n), errors)
    if mean_d2d is not None and np.any(mean_d2d <= 0):
        errors.append("mean_gain_d2d must be > 0")
    qos = _broadcast("qos", raw.qos, (n,), errors)
    if qos is not None and np.any((qos < 0) | (qos > 1)):
        errors.append("qos out of range [0, 1]")
    if not 0 <= raw.arrival_rate <= 1:
        errors.append("arrival_rate out of range [0, 1]")
    if not raw.control_v > 0:
        errors.append("control_v must be > 0")
    if isinstance(raw.n_slots, bool) or not isinstance(raw.n_slots, (int, np.integer)) or raw.n_slots < 1:
        errors.append("n_slots must be >= 1")
    if isinstance(raw.seed, bool) or not isinstance(raw.seed, (int, np.integer)) or not 0 <= raw.seed < 2**64:
        errors.append("seed must be an integer in [0, 2**64)")
    if raw.log_base not in (2, math.e):
        errors.append("log_base must be 2 or e")
    if errors:
        raise ConfigError(errors)

    return replace(
        raw,
        n_users=n,
        slot_duration=float(raw.slot_duration),
        packet_bits=float(raw.packet_bits),
        bs_power=float(raw.bs_power),
        user_powers=user_powers,
        mean_gain_bs=mean_bs,
        mean_gain_d2d=mean_d2d,
        qos=qos,
        arrival_rate=float(raw.arrival_rate),
        control_v=float(raw.control_v),
        n_slots=int(raw.n_slots),
        seed=int(raw.seed),
        log_base=2 if raw.log_base == 2 else math.e,
        allow_idle=bool(raw.allow_idle),
        relay_enabled=bool(raw.relay_enabled),
    )


@dataclass
class VirtualQueueState:
    """QoS queues ``y`` (one per user) and the offloading queue ``z``."""

    y: np.ndarray
    z: float = 0.0

    @classmethod
    def zeros(cls, n_users: int) -> "VirtualQueueState":
        return cls(np.zeros(n_users), 0.0)


@dataclass
class GainMatrix:
    """Channel power gains of one slot.

    ``bs_to_user[m]`` is the BS->m gain; ``user_to_user[j, m]`` the j->m gain
    (the diagonal is never read).
    """

    bs_to_user: np.ndarray
    user_to_user: np.ndarray

    @property
    def n_users(self) -> int:
        return len(self.bs_to_user)


@dataclass
class SlotDecision:
    arrival: bool
    phase1_threshold: Optional[float]  # None when the BS stays idle
    phase1_rate: float
    mu1: float
    mu2: float
    relay: Optional[int]
    relay_rate: Optional[float]
    relay_threshold: Optional[float]
    aux_r: int
    decoded: np.ndarray
    objective: float = 0.0
    infeasible: bool = False  # no Phase-I rate fits in the slot; packet lost
    n_candidates: int = 0

    @property
    def idle(self) -> bool:
        return self.phase1_threshold is None


@dataclass
class RunSummary:
    offloading_factor: float
    delivery_ratio: np.ndarray
    throughput: float
    queue_drift_y: np.ndarray
    queue_drift_z: float
    qos_met: np.ndarray
    n_slots: int = 0
    n_arrivals: int = 0
    n_infeasible: int = 0

    def to_dict(self) -> dict:
        return {
            "offloading_factor": float(self.offloading_factor),
            "delivery_ratio": [float(x) for x in self.delivery_ratio],
            "throughput": float(self.throughput),
            "queue_drift": {
                "y": [float(x) for x in self.queue_drift_y],
                "z": float(self.queue_drift_z),
            },
            "qos_met": [bool(x) for x in self.qos_met],
            "n_slots": int(self.n_slots),
            "n_arrivals": int(self.n_arrivals),
            "n_infeasible": int(self.n_infeasible),
        }


def update_user_queue(y, a, q, decoded):
    """One step of a user's QoS queue: ``max(0, y + a*q - decoded)``.

    Works elementwise on arrays as well as on scalars.
    """
    out = np.maximum(0.0, y + a * q - np.asarray(decoded, dtype=float))
    return out if np.ndim(out) else float(out)


def update_z_queue(z, r, mu2):
    """Offloading queue step ``max(0, z + r - mu2)``; ``mu2`` in slot units."""
    out = np.maximum(0.0, z + r - mu2)
    return out if np.ndim(out) else float(out)


def choose_auxiliary(z: float, v: float) -> int:
    # ties (z == v) fall in the r = 0 branch
    return 1 if z < v else 0


def drift_constant(cfg: SimConfig) -> float:
    """Constant of the drift bound, ``(sum(q_i^2 + 1) + 1 + T^2) / 2``.

    The long-run gap to the optimal offloading factor is at most this over V.
    """
    q = np.broadcast_to(np.asarray(cfg.qos, dtype=float), (cfg.n_users,))
    t = float(cfg.slot_duration)
    return float((np.sum(q**2 + 1.0) + 1.0 + t**2) / 2.0)
