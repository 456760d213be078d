"""Erasure decoding: ML by Gaussian elimination, and iterative peeling."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .binlin import _eliminate_packed
from .channel import ERASED, BecWord
from .codebook import LinearCode, is_codeword

UNIQUE = "unique"
AMBIGUOUS = "ambiguous"


@dataclass(frozen=True, eq=False)
class ErasureVerdict:
    """Decoder outcome.

    ``filled`` carries every position the decoder could determine, with
    ``ERASED`` left where it could not; ``codeword`` is set only when the
    fill is complete.
    """

    status: str
    filled: np.ndarray
    unresolved: np.ndarray

    @property
    def unique(self) -> bool:
        return self.status == UNIQUE

    @property
    def codeword(self) -> np.ndarray | None:
        return self.filled.astype(np.uint8) if self.unique else None


@numba.njit(cache=True)
def _solve_erasures(H, erased, y):
    m, n = H.shape
    w = erased.shape[0]
    nwords = (w + 64) // 64
    rows = np.zeros((m, nwords), dtype=np.uint64)
    one = np.uint64(1)
    for r in range(m):
        s = 0
        for j in range(n):
            if H[r, j] and y[j] == 1:
                s ^= 1
        for t in range(w):
            if H[r, erased[t]]:
                rows[r, t >> 6] |= one << np.uint64(t & 63)
        if s:
            rows[r, w >> 6] |= one << np.uint64(w & 63)
    order = np.arange(w, dtype=np.int64)
    rank, pivots = _eliminate_packed(rows, order)
    consistent = True
    for r in range(rank, m):
        if (rows[r, w >> 6] >> np.uint64(w & 63)) & one:
            consistent = False
    free = np.zeros(nwords, dtype=np.uint64)
    is_pivot = np.zeros(w, dtype=np.bool_)
    for i in range(rank):
        is_pivot[pivots[i]] = True
    for t in range(w):
        if not is_pivot[t]:
            free[t >> 6] |= one << np.uint64(t & 63)
    values = np.full(w, -1, dtype=np.int8)
    for i in range(rank):
        hit = False
        for j in range(nwords):
            if rows[i, j] & free[j]:
                hit = True
        if not hit:
            values[pivots[i]] = np.int8((rows[i, w >> 6] >> np.uint64(w & 63)) & one)
    return rank, values, consistent


def ml_erasure_decode(C: LinearCode, y: BecWord) -> ErasureVerdict:
    """Fill erasures by solving ``H c^T = 0`` restricted to the erased columns.

    The decode is unique iff the erased columns of ``H`` are independent;
    otherwise every erased bit whose value is fixed by the known bits is
    still filled and the rest are reported as unresolved.
    """
    sym = np.asarray(y.symbols, dtype=np.int8)
    if sym.shape != (C.n,):
        raise ValueError(f"received word has length {sym.shape}, code has n={C.n}")
    erased = np.flatnonzero(sym == ERASED).astype(np.int64)
    filled = sym.copy()
    if erased.size == 0:
        if is_codeword(C, sym):
            return ErasureVerdict(UNIQUE, filled, erased)
        raise ValueError("received word agrees with no codeword")
    rank, values, consistent = _solve_erasures(C.H, erased, sym)
    if not consistent:
        raise ValueError("received word agrees with no codeword")
    filled[erased] = values
    unresolved = erased[values < 0]
    status = UNIQUE if rank == erased.size else AMBIGUOUS
    return ErasureVerdict(status, filled, unresolved)


def tanner_lists(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """CSR adjacency of the check nodes: ``(offsets, variables)``."""
    rows, cols = np.nonzero(H)
    offsets = np.zeros(H.shape[0] + 1, dtype=np.int64)
    np.add.at(offsets, rows + 1, 1)
    return np.cumsum(offsets), cols.astype(np.int64)


@numba.njit(cache=True)
def _peel(offsets, variables, sym, max_iters):
    m = offsets.shape[0] - 1
    it = 0
    progress = True
    while progress and it < max_iters:
        progress = False
        it += 1
        for c in range(m):
            missing = -1
            count = 0
            parity = 0
            for e in range(offsets[c], offsets[c + 1]):
                v = variables[e]
                if sym[v] < 0:
                    count += 1
                    missing = v
                    if count > 1:
                        break
                else:
                    parity ^= sym[v]
            if count == 1:
                sym[missing] = parity
                progress = True
    return it


def peel_decode(C: LinearCode, y: BecWord, max_iters: int = 1000, adjacency=None) -> ErasureVerdict:
    """Iterative erasure decoding on the Tanner graph of ``C.H``.

    Any check with a single erased neighbour fixes it; stops at a fixpoint
    (a stopping set, if erasures remain) or after ``max_iters`` sweeps.
    """
    sym = np.asarray(y.symbols, dtype=np.int8).copy()
    if sym.shape != (C.n,):
        raise ValueError(f"received word has length {sym.shape}, code has n={C.n}")
    offsets, variables = adjacency if adjacency is not None else tanner_lists(C.H)
    _peel(offsets, variables, sym, max_iters)
    unresolved = np.flatnonzero(sym == ERASED)
    return ErasureVerdict(UNIQUE if unresolved.size == 0 else AMBIGUOUS, sym, unresolved)
