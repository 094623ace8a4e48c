"""Block-fading channel draws and rate / gain-threshold / duration conversions.

Noise power is normalized to one, so a transmission at power ``P`` and rate
``R`` is decodable by every receiver whose power gain is at least
``(base**R - 1) / P``.
"""

from __future__ import annotations

import math

import numpy as np

from .model import GainMatrix, SimConfig


class NoPhaseTwo(ValueError):
    """A relay was requested for an empty Phase II."""


def _ln_base(log_base) -> float:
    return math.log(log_base)


def rate_from_threshold(power, gamma, log_base=2):
    """Rate (bits or nats per unit time) whose decoding threshold is ``gamma``."""
    return np.log1p(power * gamma) / _ln_base(log_base)


def threshold_from_rate(power, rate, log_base=2):
    """Minimum power gain needed to decode at ``rate``; inverse of :func:`rate_from_threshold`."""
    with np.errstate(over="ignore"):
        return np.expm1(rate * _ln_base(log_base)) / power


def phase1_duration(packet_bits, power, gamma, slot_duration, log_base=2):
    """Time the BS needs to send one packet at the rate set by threshold ``gamma``.

    Returns ``None`` when the packet does not fit in the slot, including
    ``gamma == 0`` (zero rate).
    """
    rate = rate_from_threshold(power, gamma, log_base)
    if rate <= 0:
        return None
    mu1 = packet_bits / rate
    if mu1 > slot_duration:
        return None
    return float(mu1)


def relay_threshold(packet_bits, mu2, relay_power, log_base=2):
    if mu2 <= 0:
        raise NoPhaseTwo("Phase II has zero length; no relay transmission fits")
    return float(threshold_from_rate(relay_power, packet_bits / mu2, log_base))


class FadingModel:
    """I.i.d. exponential power gains (Rayleigh envelope) with per-link means.

    Slots are grouped in blocks of ``BLOCK`` and each block is drawn from its
    own counter-addressed Philox stream, so slot ``k`` always sees the same
    arrival and gains for a given seed, whatever was sampled before it.
    """

    BLOCK = 256
    # counter spacing between blocks; one block never consumes 2**64 Philox blocks
    _BLOCK_STRIDE = 1 << 64

    def __init__(self, mean_gain_bs, mean_gain_d2d, seed: int = 0):
        self.mean_gain_bs = np.asarray(mean_gain_bs, dtype=float)
        self.mean_gain_d2d = np.asarray(mean_gain_d2d, dtype=float)
        self.rng_seed = int(seed)
        self._key = np.random.SeedSequence(self.rng_seed).generate_state(2, np.uint64)
        self._block_id = None
        self._block = None

    @classmethod
    def from_config(cls, cfg: SimConfig) -> "FadingModel":
        return cls(cfg.mean_gain_bs, cfg.mean_gain_d2d, cfg.seed)

    @property
    def n_users(self) -> int:
        return len(self.mean_gain_bs)

    def _load_block(self, block_id: int):
        rng = np.random.Generator(
            np.random.Philox(key=self._key, counter=block_id * self._BLOCK_STRIDE)
        )
        n, b = self.n_users, self.BLOCK
        u = rng.random(b)
        bs = rng.standard_exponential((b, n)) * self.mean_gain_bs
        d2d = rng.standard_exponential((b, n, n)) * self.mean_gain_d2d
        # exact zeros have probability ~2**-53; keep the strict positivity contract
        tiny = np.finfo(float).tiny
        np.maximum(bs, tiny, out=bs)
        np.maximum(d2d, tiny, out=d2d)
        self._block_id, self._block = block_id, (u, bs, d2d)

    def draw(self, slot: int, arrival_rate: float = 1.0):
        """Return ``(arrival, GainMatrix)`` for one slot."""
        block_id, idx = divmod(int(slot), self.BLOCK)
        if block_id != self._block_id:
            self._load_block(block_id)
        u, bs, d2d = self._block
        return bool(u[idx] < arrival_rate), GainMatrix(bs[idx].copy(), d2d[idx].copy())

    def sample(self, slot: int) -> GainMatrix:
        return self.draw(slot)[1]


def sample_slot_gains(model: FadingModel, cfg: SimConfig, slot: int) -> GainMatrix:
    return model.draw(slot, cfg.arrival_rate)[1]
