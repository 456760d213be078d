"""Soft-decision decoding on the BI-AWGN channel.

Ordered statistics decoding (OSD) works on the most reliable basis (MRB):
the received positions are sorted by confidence, the generator is brought to
systematic form on the k most reliable independent positions, and test error
patterns (TEPs) of increasing Hamming weight are added to the hard decisions
there and re-encoded. The candidate with the smallest weighted Hamming
distance (WHD) to the hard decisions wins.

A flooding sum-product decoder is included as the iterative baseline for
LDPC codes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numba
import numpy as np

from . import binlin
from .channel import SoftWord, hard_decision, llr
from .codebook import LinearCode
from .decode_bec import tanner_lists


@dataclass(frozen=True)
class OsdConfig:
    """``order``: max TEP weight. ``max_teps``: cap on re-encodings, the
    order-0 one included. ``early_stop``: prune TEPs that provably cannot
    beat the incumbent and stop once no remaining weight can (ML certificate).
    """

    order: int = 2
    max_teps: int = 10**9
    early_stop: bool = True

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("OSD order must be >= 0")
        if self.max_teps < 1:
            raise ValueError("max_teps must be >= 1")


@dataclass(frozen=True, eq=False)
class MrbContext:
    pi1: np.ndarray
    pi2: np.ndarray
    G_tilde: np.ndarray
    y_tilde: np.ndarray
    alpha_tilde: np.ndarray

    @property
    def positions(self) -> np.ndarray:
        """Original index of each permuted position (pi1 then pi2)."""
        return self.pi1[self.pi2]


@dataclass(frozen=True, eq=False)
class OsdOutcome:
    c_hat: np.ndarray
    whd: float
    teps_processed: int
    ml_certified: bool


def prepare_mrb(C: LinearCode, sw: SoftWord) -> MrbContext:
    alpha = sw.alpha
    y = hard_decision(sw.r)
    pi1 = np.argsort(-alpha, kind="stable")
    G_tilde, pi2 = binlin.to_systematic(C.G[:, pi1])
    pos = pi1[pi2]
    return MrbContext(pi1, pi2, G_tilde, y[pos], alpha[pos])


def iter_teps(k: int, order: int) -> Iterator[tuple[int, ...]]:
    """Supports of the TEPs: weight-major, lexicographic within a weight."""
    if not 0 <= order <= k:
        raise ValueError("need 0 <= order <= k")
    for w in range(order + 1):
        yield from itertools.combinations(range(k), w)


def tep_iterate(k: int, order: int, visitor: Callable[[tuple[int, ...]], object]) -> int:
    count = 0
    for support in iter_teps(k, order):
        visitor(support)
        count += 1
    return count


def tep_count(k: int, order: int) -> int:
    return sum(math.comb(k, w) for w in range(order + 1))


def whd(c_hat, y, alpha) -> float:
    """Sum of confidences where the candidate disagrees with the hard decision."""
    c_hat = np.asarray(c_hat)
    y = np.asarray(y)
    if c_hat.shape != y.shape or y.shape != np.shape(alpha):
        raise ValueError("length mismatch")
    return float(np.asarray(alpha, dtype=float)[c_hat != y].sum())


@numba.njit(cache=True)
def _osd_search(P, y, a, order, max_teps, early_stop):
    """TEP sweep over the systematic form ``[I | P]``.

    Returns (best support padded with -1, best WHD, re-encodings, certified).
    """
    k, r = P.shape
    a_info = a[:k]
    a_par = a[k:]
    diff0 = np.zeros(r, dtype=np.uint8)
    for i in range(k):
        if y[i]:
            for j in range(r):
                diff0[j] ^= P[i, j]
    best = 0.0
    for j in range(r):
        diff0[j] ^= y[k + j]
        if diff0[j]:
            best += a_par[j]
    support = np.full(max(order, 1), -1, dtype=np.int64)
    teps = 1
    certified = order >= k

    # suffix_min[i, q]: sum of the q smallest info confidences among i..k-1
    qmax = max(order, 1)
    suffix_min = np.full((k + 1, qmax + 1), np.inf)
    suffix_min[:, 0] = 0.0
    if early_stop:
        tail = np.empty(0)
        for i in range(k - 1, -1, -1):
            tail = np.sort(np.append(tail, a_info[i]))
            acc = 0.0
            for q in range(1, min(qmax, tail.shape[0]) + 1):
                acc += tail[q - 1]
                suffix_min[i, q] = acc

    idx = np.zeros(qmax, dtype=np.int64)
    vec = np.zeros((qmax + 1, r), dtype=np.uint8)
    cinfo = np.zeros(qmax + 1)
    capped = False
    for w in range(1, min(order, k) + 1):
        if early_stop and suffix_min[0, w] >= best:
            certified = True
            break
        for j in range(r):
            vec[0, j] = diff0[j]
        cinfo[0] = 0.0
        d = 0
        idx[0] = 0
        while True:
            if idx[d] > k - (w - d):
                d -= 1
                if d < 0:
                    break
                idx[d] += 1
                continue
            i = idx[d]
            c = cinfo[d] + a_info[i]
            if early_stop and c + suffix_min[i + 1, w - d - 1] >= best:
                idx[d] += 1
                continue
            if d == w - 1:
                if teps >= max_teps:
                    capped = True
                    break
                teps += 1
                tot = c
                for j in range(r):
                    if vec[d, j] ^ P[i, j]:
                        tot += a_par[j]
                        if tot >= best:
                            break
                if tot < best:
                    best = tot
                    for q in range(support.shape[0]):
                        support[q] = idx[q] if q < w else -1
                idx[d] += 1
            else:
                for j in range(r):
                    vec[d + 1, j] = vec[d, j] ^ P[i, j]
                cinfo[d + 1] = c
                idx[d + 1] = i + 1
                d += 1
        if capped:
            certified = False
            break
    return support, best, teps, certified


def osd_decode(C: LinearCode, sw: SoftWord, cfg: OsdConfig = OsdConfig()) -> OsdOutcome:
    ctx = prepare_mrb(C, sw)
    k = C.k
    P = np.ascontiguousarray(ctx.G_tilde[:, k:])
    support, _, teps, certified = _osd_search(
        P, ctx.y_tilde, ctx.alpha_tilde.astype(np.float64), min(cfg.order, k), cfg.max_teps, cfg.early_stop
    )
    info = ctx.y_tilde[:k].copy()
    for i in support:
        if i >= 0:
            info[i] ^= 1
    c_tilde = binlin.matmul(info, ctx.G_tilde)
    c_hat = np.empty_like(c_tilde)
    c_hat[ctx.positions] = c_tilde
    y = hard_decision(sw.r)
    return OsdOutcome(c_hat, whd(c_hat, y, sw.alpha), int(teps), bool(certified))


def ml_lower_bound_check(c_true, outcome: OsdOutcome, sw: SoftWord) -> bool:
    """True if an ML decoder would also have erred: the decoder's output is
    at least as close to the received word as the transmitted codeword."""
    y = hard_decision(sw.r)
    return whd(outcome.c_hat, y, sw.alpha) <= whd(c_true, y, sw.alpha)


# ---------------------------------------------------------------------------
# sum-product


@numba.njit(cache=True)
def _sum_product(offsets, variables, lch, max_iters):
    m = offsets.shape[0] - 1
    n = lch.shape[0]
    E = variables.shape[0]
    v2c = np.empty(E)
    c2v = np.zeros(E)
    for e in range(E):
        v2c[e] = lch[variables[e]]
    total = lch.copy()
    bits = np.zeros(n, dtype=np.uint8)
    clip = 1.0 - 1e-15
    converged = False
    for _ in range(max_iters):
        for c in range(m):
            lo, hi = offsets[c], offsets[c + 1]
            deg = hi - lo
            t = np.empty(deg)
            for q in range(deg):
                t[q] = math.tanh(0.5 * v2c[lo + q])
            prefix = 1.0
            for q in range(deg):
                c2v[lo + q] = prefix
                prefix *= t[q]
            suffix = 1.0
            for q in range(deg - 1, -1, -1):
                x = c2v[lo + q] * suffix
                if x > clip:
                    x = clip
                elif x < -clip:
                    x = -clip
                c2v[lo + q] = 2.0 * math.atanh(x)
                suffix *= t[q]
        for v in range(n):
            total[v] = lch[v]
        for e in range(E):
            total[variables[e]] += c2v[e]
        for e in range(E):
            v2c[e] = total[variables[e]] - c2v[e]
        for v in range(n):
            bits[v] = 1 if total[v] < 0 else 0
        ok = True
        for c in range(m):
            s = 0
            for e in range(offsets[c], offsets[c + 1]):
                s ^= bits[variables[e]]
            if s:
                ok = False
                break
        if ok:
            converged = True
            break
    return bits, converged


def sum_product_decode(C: LinearCode, sw: SoftWord, max_iters: int = 50, adjacency=None) -> tuple[np.ndarray, bool]:
    """Flooding sum-product (tanh rule) on the Tanner graph of ``C.H``.

    Channel LLRs are ``llr(sw)``, positive for bit 1; they are negated
    internally so that positive messages favour bit 0.
    """
    offsets, variables = adjacency if adjacency is not None else tanner_lists(C.H)
    bits, converged = _sum_product(offsets, variables, -llr(sw), max_iters)
    return bits, bool(converged)
