"""BEC and BI-AWGN channels, BPSK mapping and SNR bookkeeping.

Randomness comes from :class:`RngStream`: a Philox4x64-10 counter-based
generator keyed by ``(master_seed, stream_id)``. The same key gives the same
samples on every platform, and distinct stream ids are independent, so a
simulation trial can be replayed from its index alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ERASED = -1


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int

    def generator(self) -> np.random.Generator:
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def _rng(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


@dataclass(frozen=True, eq=False)
class BecWord:
    """Received erasure word: entries 0, 1 or ``ERASED`` (-1)."""

    symbols: np.ndarray

    @property
    def erased(self) -> np.ndarray:
        return self.symbols == ERASED

    @property
    def weight(self) -> int:
        """Number of erasures."""
        return int(np.count_nonzero(self.erased))

    def __len__(self):
        return len(self.symbols)


@dataclass(frozen=True, eq=False)
class SoftWord:
    r: np.ndarray
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def hard(self) -> np.ndarray:
        return hard_decision(self.r)

    @property
    def alpha(self) -> np.ndarray:
        """Confidence values |r_i|."""
        return np.abs(self.r)

    def __len__(self):
        return len(self.r)


def bec_transmit(c, eps: float, rng) -> BecWord:
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    c = np.asarray(c, dtype=np.int8)
    u = _rng(rng).random(c.shape[-1])
    return BecWord(np.where(u < eps, np.int8(ERASED), c))


def bpsk_map(c) -> np.ndarray:
    """Bit 0 -> -1, bit 1 -> +1."""
    return 2.0 * np.asarray(c, dtype=float) - 1.0


def awgn_transmit(c, sigma: float, rng) -> SoftWord:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    s = bpsk_map(c)
    return SoftWord(s + sigma * _rng(rng).standard_normal(s.shape[-1]), sigma)


def hard_decision(r) -> np.ndarray:
    """1 where r >= 0, else 0 (a zero sample decides 1)."""
    return (np.asarray(r) >= 0).astype(np.uint8)


def sigma_from_ebn0(ebn0_db: float, R: float) -> float:
    """Noise std dev for unit-energy symbols: Eb/N0 = 1 / (2 R sigma^2)."""
    if not 0 < R <= 1:
        raise ValueError("rate must lie in (0, 1]")
    if not math.isfinite(ebn0_db):
        raise ValueError("Eb/N0 must be finite")
    return math.sqrt(1.0 / (2.0 * R * 10.0 ** (ebn0_db / 10.0)))


def ebn0_from_sigma(sigma: float, R: float) -> float:
    return 10.0 * math.log10(1.0 / (2.0 * R * sigma * sigma))


def llr(sw: SoftWord) -> np.ndarray:
    """2 r / sigma^2; positive values favour bit 1 under the BPSK map above."""
    return 2.0 * sw.r / sw.sigma**2
