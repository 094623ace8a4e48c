"""Per-slot offloading decisions: Free-BS, the relay-disabled baseline and a brute-force oracle.

Every scheduler maximizes the per-slot weight

    sum over decoding users m of Y_m  +  Z * mu2 / T

over the Phase-I gain threshold and the (optional) Phase-II relay. The final
objective of a decision is always produced by :func:`score`, so schedulers
that find the same candidate report bit-identical objectives.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .channel import phase1_duration, rate_from_threshold, relay_threshold, threshold_from_rate
from .model import GainMatrix, SimConfig, SlotDecision, VirtualQueueState, choose_auxiliary

# candidates whose fast-path objective is this close to the best are re-scored exactly
_SCREEN_RTOL = 1e-9


class InfeasibleCandidate(ValueError):
    """The Phase-I threshold implies a transmission longer than the slot."""


@dataclass
class Candidate:
    """One (Phase-I threshold, relay) choice with its durations and weight.

    ``phase1_index`` and ``relay_index`` are ranks in the descending-gain
    order (0 = strongest BS link); ``threshold_user`` and ``relay_user`` are
    the corresponding user indices.
    """

    phase1_index: Optional[int]
    relay_index: Optional[int]
    threshold_user: Optional[int]
    relay_user: Optional[int]
    phase1_threshold: Optional[float]
    relay_threshold: Optional[float]
    mu1: float
    mu2: float
    objective: float
    decoded: np.ndarray


def sort_by_gain(gains: GainMatrix) -> np.ndarray:
    """User indices by descending BS gain, ties by ascending index."""
    g0 = gains.bs_to_user
    return np.lexsort((np.arange(len(g0)), -g0))


def score(gamma0, relay_user, gains: GainMatrix, queues: VirtualQueueState, cfg: SimConfig):
    """Exact evaluation of one choice, or ``None`` if ``gamma0`` does not fit in the slot.

    ``relay_user`` must have decoded in Phase I. A relay on an empty Phase II
    adds nobody.
    """
    T = cfg.slot_duration
    mu1 = phase1_duration(cfg.packet_bits, cfg.bs_power, gamma0, T, cfg.log_base)
    if mu1 is None:
        return None
    mu2 = T - mu1
    decoded = gains.bs_to_user >= gamma0
    gamma_r = None
    if relay_user is not None:
        if not decoded[relay_user]:
            raise ValueError(f"relay {relay_user} did not decode in Phase I")
        if mu2 > 0:
            gamma_r = relay_threshold(
                cfg.packet_bits, mu2, cfg.user_powers[relay_user], cfg.log_base
            )
            heard = gains.user_to_user[relay_user] >= gamma_r
            heard[relay_user] = False
            decoded = decoded | heard
    objective = float(np.dot(queues.y, decoded.astype(float))) + queues.z * (mu2 / T)
    return mu1, mu2, gamma_r, decoded, objective


def evaluate_candidate(i, j, gains, queues, cfg, order=None) -> Candidate:
    """Score threshold rank ``i`` with relay rank ``j`` (``None`` for no relay)."""
    if order is None:
        order = sort_by_gain(gains)
    if j is not None and j > i:
        raise ValueError("relay rank must not exceed the threshold rank")
    user = int(order[i])
    relay_user = None if j is None else int(order[j])
    gamma0 = float(gains.bs_to_user[user])
    res = score(gamma0, relay_user, gains, queues, cfg)
    if res is None:
        raise InfeasibleCandidate(f"threshold {gamma0:g} needs more than one slot")
    mu1, mu2, gamma_r, decoded, objective = res
    return Candidate(i, j, user, relay_user, gamma0, gamma_r, mu1, mu2, objective, decoded)


def _idle_decision(arrival, queues, cfg, infeasible=False) -> SlotDecision:
    n = len(queues.y)
    return SlotDecision(
        arrival=arrival,
        phase1_threshold=None,
        phase1_rate=0.0,
        mu1=0.0,
        mu2=cfg.slot_duration,
        relay=None,
        relay_rate=None,
        relay_threshold=None,
        aux_r=choose_auxiliary(queues.z, cfg.control_v),
        decoded=np.zeros(n, dtype=bool),
        objective=float(queues.z),
        infeasible=infeasible,
    )


def _to_decision(cand: Candidate, queues, cfg, n_candidates) -> SlotDecision:
    relay_rate = None if cand.relay_user is None else cfg.packet_bits / cand.mu2
    return SlotDecision(
        arrival=True,
        phase1_threshold=cand.phase1_threshold,
        phase1_rate=float(rate_from_threshold(cfg.bs_power, cand.phase1_threshold, cfg.log_base)),
        mu1=cand.mu1,
        mu2=cand.mu2,
        relay=cand.relay_user,
        relay_rate=relay_rate,
        relay_threshold=cand.relay_threshold,
        aux_r=choose_auxiliary(queues.z, cfg.control_v),
        decoded=cand.decoded,
        objective=cand.objective,
        n_candidates=n_candidates,
    )


@lru_cache(maxsize=None)
def _lower_triangle(n):
    return np.tri(n, dtype=bool)


def _screen(gains, queues, cfg, order, relays: bool):
    """Vectorized objective of every (rank i, relay rank j) pair.

    Returns ``(obj, feasible_i)`` where ``obj[i, 0]`` is the no-relay value and
    ``obj[i, 1 + j]`` the value with relay rank ``j``; invalid pairs are -inf.
    """
    n = gains.n_users
    T = cfg.slot_duration
    y = queues.y
    g0 = gains.bs_to_user
    sorted_g = g0[order]
    rate = rate_from_threshold(cfg.bs_power, sorted_g, cfg.log_base)
    with np.errstate(divide="ignore"):
        mu1 = np.where(rate > 0, cfg.packet_bits / rate, np.inf)
    feasible = mu1 <= T
    mu2 = np.where(feasible, T - mu1, 0.0)
    p1 = g0[None, :] >= sorted_g[:, None]  # (i, m)
    reward = queues.z * (mu2 / T)

    obj = np.full((n, n + 1), -np.inf)
    obj[:, 0] = p1.astype(float) @ y + reward
    if relays:
        relay_rate = np.where(mu2 > 0, cfg.packet_bits / np.where(mu2 > 0, mu2, 1.0), np.inf)
        powers = cfg.user_powers[order]
        gamma_r = threshold_from_rate(powers[None, :], relay_rate[:, None], cfg.log_base)  # (i, j)
        g_rel = gains.user_to_user[order]  # (j, m), rows in rank order
        heard = g_rel[None, :, :] >= gamma_r[:, :, None]  # (i, j, m)
        heard[:, np.arange(n), order] = False
        dec = heard | p1[:, None, :]
        rel_obj = dec.astype(float) @ y + reward[:, None]
        valid = _lower_triangle(n) & (mu2 > 0)[:, None]
        obj[:, 1:] = np.where(valid, rel_obj, -np.inf)
    obj[~feasible] = -np.inf
    return obj, feasible


def _decide(gains, queues, arrival, cfg, relays: bool) -> SlotDecision:
    if not arrival:
        return _idle_decision(False, queues, cfg)
    relays = relays and cfg.relay_enabled
    order = sort_by_gain(gains)
    obj, feasible = _screen(gains, queues, cfg, order, relays)
    n_feasible = int(feasible.sum())
    n_candidates = n_feasible + (int(np.isfinite(obj[:, 1:]).sum()) if relays else 0)
    if cfg.allow_idle:
        n_candidates += 1
    if n_feasible == 0:
        if cfg.allow_idle:
            return _idle_decision(True, queues, cfg)
        return _idle_decision(True, queues, cfg, infeasible=True)

    best = obj.max()
    tol = _SCREEN_RTOL * max(1.0, abs(best))
    # row-major order over (i, column) is exactly the tie-break order
    best_cand = None
    for i, col in zip(*np.nonzero(obj >= best - tol)):
        j = None if col == 0 else int(col) - 1
        cand = evaluate_candidate(int(i), j, gains, queues, cfg, order)
        if best_cand is None or cand.objective > best_cand.objective:
            best_cand = cand
    if cfg.allow_idle and queues.z > best_cand.objective:
        decision = _idle_decision(True, queues, cfg)
        decision.n_candidates = n_candidates
        return decision
    return _to_decision(best_cand, queues, cfg, n_candidates)


def free_bs_decide(gains: GainMatrix, queues: VirtualQueueState, arrival: bool, cfg: SimConfig) -> SlotDecision:
    """Free-BS decision for one slot.

    For every Phase-I threshold taken from the sorted BS gains, each user
    that decodes at that threshold is tried as the Phase-II relay (plus no
    relay), and the best pair overall is returned. Ties go to the higher
    threshold, then no relay, then the stronger relay.

    With no feasible threshold (and ``allow_idle`` off) the packet is lost:
    the returned decision is idle with ``infeasible`` set.
    """
    return _decide(gains, queues, arrival, cfg, relays=True)


def baseline_decide(gains: GainMatrix, queues: VirtualQueueState, arrival: bool, cfg: SimConfig) -> SlotDecision:
    """Same as :func:`free_bs_decide` with Phase-II relaying disabled."""
    return _decide(gains, queues, arrival, cfg, relays=False)


def brute_force_decide(
    gains: GainMatrix,
    queues: VirtualQueueState,
    arrival: bool,
    cfg: SimConfig,
    gamma_grid: Optional[Sequence[float]] = None,
) -> SlotDecision:
    """Exhaustive reference scheduler, meant for small ``n_users`` in tests.

    Tries every threshold in the BS gains plus ``gamma_grid``, and for each
    every user that decodes it as relay. A threshold nobody can decode is a
    wasted transmission and is treated as the idle option, which is only
    available with ``allow_idle``.
    """
    if not arrival:
        return _idle_decision(False, queues, cfg)
    relays = cfg.relay_enabled
    g0 = gains.bs_to_user
    thresholds = set(float(g) for g in g0)
    if gamma_grid is not None:
        thresholds.update(float(g) for g in gamma_grid)

    best = None  # (objective, candidate)
    count = 0
    for gamma0 in sorted(thresholds, reverse=True):
        decoders = [m for m in range(len(g0)) if g0[m] >= gamma0]
        if not decoders:
            continue
        for relay in [None] + (decoders if relays else []):
            res = score(gamma0, relay, gains, queues, cfg)
            if res is None:
                break
            count += 1
            mu1, mu2, gamma_r, decoded, objective = res
            if best is None or objective > best[0]:
                best = (
                    objective,
                    Candidate(None, None, None, relay, gamma0, gamma_r, mu1, mu2, objective, decoded),
                )
    if cfg.allow_idle:
        count += 1
        if best is None or queues.z > best[0]:
            decision = _idle_decision(True, queues, cfg)
            decision.n_candidates = count
            return decision
    if best is None:
        return _idle_decision(True, queues, cfg, infeasible=True)
    return _to_decision(best[1], queues, cfg, count)


SCHEDULERS = {
    "free_bs": free_bs_decide,
    "baseline": baseline_decide,
    "brute_force": brute_force_decide,
}
