"""Dense GF(2) linear algebra and GF(2^m) arithmetic.

Binary matrices are plain ``numpy`` arrays of dtype ``uint8`` holding 0/1
entries. Internally the elimination kernels pack rows into 64-bit words; the
packing never leaks out of this module.

Binary polynomials are Python ints, bit ``i`` holding the coefficient of
``x**i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numba
import numpy as np

WORD_BITS = 64

# Standard primitive polynomials, one per extension degree.
PRIMITIVE_POLYS = {
    2: 0b111,
    3: 0b1011,
    4: 0b10011,  # x^4 + x + 1
    5: 0b100101,
    6: 0b1000011,
    7: 0b10001001,  # x^7 + x^3 + 1
    8: 0b100011101,  # x^8 + x^4 + x^3 + x^2 + 1
    9: 0b1000010001,
    10: 0b10000001001,
    11: 0b100000000101,
    12: 0b1000001010011,
    13: 0b10000000011011,
    14: 0b100010001000011,
    15: 0b1000000000000011,
    16: 0b10001000000001011,
}


class RankDeficient(ValueError):
    """Raised when a generator matrix does not have full row rank."""


class DivideByZero(ZeroDivisionError):
    pass


def as_bits(a, ndim: int | None = None) -> np.ndarray:
    """Return ``a`` as a contiguous uint8 0/1 array (copying only if needed)."""
    arr = np.ascontiguousarray(a, dtype=np.uint8)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d binary array, got shape {arr.shape}")
    if arr.size and arr.max() > 1:
        raise ValueError("binary arrays may only hold 0 and 1")
    return arr


def pack_rows(M: np.ndarray) -> np.ndarray:
    """Pack each row of a 0/1 matrix into little-endian 64-bit words."""
    M = np.atleast_2d(M)
    rows, cols = M.shape
    words = max(1, -(-cols // WORD_BITS))
    padded = np.zeros((rows, words * WORD_BITS), dtype=np.uint8)
    padded[:, :cols] = M
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64)


def unpack_rows(P: np.ndarray, cols: int) -> np.ndarray:
    as_bytes = np.ascontiguousarray(P.astype("<u8")).view(np.uint8)
    return np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :cols].copy()


@numba.njit(cache=True)
def _eliminate_packed(rows, order):
    """In-place Gauss-Jordan elimination over packed rows.

    Columns are visited in ``order``; the pivot for a column is the
    lowest-index not-yet-used row holding a 1 there. Pivot rows are swapped
    into positions 0, 1, ... in the order they are found. Returns the rank
    and the pivot columns (padded with -1).
    """
    nrows, nwords = rows.shape
    pivots = np.full(len(order), -1, dtype=np.int64)
    rank = 0
    for t in range(len(order)):
        if rank == nrows:
            break
        col = order[t]
        w = col >> 6
        bit = np.uint64(1) << np.uint64(col & 63)
        piv = -1
        for r in range(rank, nrows):
            if rows[r, w] & bit:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for j in range(nwords):
                tmp = rows[rank, j]
                rows[rank, j] = rows[piv, j]
                rows[piv, j] = tmp
        for r in range(nrows):
            if r != rank and (rows[r, w] & bit):
                for j in range(nwords):
                    rows[r, j] ^= rows[rank, j]
        pivots[rank] = col
        rank += 1
    return rank, pivots


class Elimination(NamedTuple):
    reduced: np.ndarray
    rank: int
    pivot_cols: list[int]
    row_transform: np.ndarray


def gauss_eliminate(M, pivot_column_order: Sequence[int] | None = None) -> Elimination:
    """Gauss-Jordan elimination of ``M`` over GF(2).

    Only the columns in ``pivot_column_order`` (default: all, left to right)
    are considered as pivots. ``row_transform @ M == reduced (mod 2)``.
    """
    M = as_bits(M, ndim=2)
    rows, cols = M.shape
    if pivot_column_order is None:
        order = np.arange(cols, dtype=np.int64)
    else:
        order = np.asarray(pivot_column_order, dtype=np.int64)
        if order.size and (order.min() < 0 or order.max() >= cols or len(set(order.tolist())) != order.size):
            raise ValueError("pivot_column_order must list distinct column indices")
    augmented = np.concatenate([M, np.eye(rows, dtype=np.uint8)], axis=1)
    packed = pack_rows(augmented)
    rank, pivots = _eliminate_packed(packed, order)
    full = unpack_rows(packed, cols + rows)
    return Elimination(full[:, :cols], int(rank), [int(p) for p in pivots[:rank]], full[:, cols:])


def rank(M) -> int:
    M = as_bits(M, ndim=2)
    packed = pack_rows(M)
    r, _ = _eliminate_packed(packed, np.arange(M.shape[1], dtype=np.int64))
    return int(r)


def matmul(A, B) -> np.ndarray:
    """Matrix product over GF(2)."""
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    return ((A @ B) & 1).astype(np.uint8)


def to_systematic(G) -> tuple[np.ndarray, np.ndarray]:
    """Bring a full-rank generator to the form ``[I_k | P]``.

    Returns ``(G_sys, col_perm)`` where column ``i`` of ``G_sys`` comes from
    column ``col_perm[i]`` of the row-reduced ``G``. Pivots are found by a
    left-to-right scan; a pivot found at column ``p > j`` is swapped into
    position ``j``, so an already systematic ``G`` keeps the identity
    permutation.
    """
    G = as_bits(G, ndim=2)
    k, n = G.shape
    packed = pack_rows(G)
    r, pivots = _eliminate_packed(packed, np.arange(n, dtype=np.int64))
    if r < k:
        raise RankDeficient(f"generator has rank {r} < {k}")
    reduced = unpack_rows(packed, n)
    perm = np.arange(n)
    for j, p in enumerate(pivots[:k]):
        if p != j:
            perm[j], perm[p] = perm[p], perm[j]
    return reduced[:, perm], perm


def nullspace_basis(G) -> np.ndarray:
    """Rows spanning the dual of the row space of a full-rank ``G``."""
    G = as_bits(G, ndim=2)
    k, n = G.shape
    G_sys, perm = to_systematic(G)
    H_perm = np.concatenate([G_sys[:, k:].T, np.eye(n - k, dtype=np.uint8)], axis=1)
    H = np.empty_like(H_perm)
    H[:, perm] = H_perm
    return H


def row_basis(M) -> np.ndarray:
    """Independent rows spanning the row space of ``M`` (reduced echelon form)."""
    e = gauss_eliminate(M)
    return e.reduced[: e.rank].copy()


# ---------------------------------------------------------------------------
# binary polynomials


def poly_degree(p: int) -> int:
    return p.bit_length() - 1


def poly_mul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def poly_divmod(a: int, b: int) -> tuple[int, int]:
    if b == 0:
        raise DivideByZero("polynomial division by zero")
    q = 0
    db = poly_degree(b)
    while a and poly_degree(a) >= db:
        shift = poly_degree(a) - db
        q ^= 1 << shift
        a ^= b << shift
    return q, a


def poly_mod(a: int, b: int) -> int:
    return poly_divmod(a, b)[1]


def poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, poly_mod(a, b)
    return a


def poly_lcm(a: int, b: int) -> int:
    return poly_divmod(poly_mul(a, b), poly_gcd(a, b))[0]


def poly_to_str(p: int) -> str:
    terms = []
    for i in range(poly_degree(p), -1, -1):
        if (p >> i) & 1:
            terms.append("1" if i == 0 else "x" if i == 1 else f"x^{i}")
    return " + ".join(terms) or "0"


# ---------------------------------------------------------------------------
# GF(2^m)


@dataclass(frozen=True)
class GF2mField:
    """GF(2^m) with log/antilog tables; element ``alpha**i`` is ``antilog[i]``."""

    m: int
    primitive_poly: int = 0
    log_table: np.ndarray = field(init=False, repr=False, compare=False)
    antilog_table: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 1 < self.m <= 16:
            raise ValueError("extension degree must satisfy 2 <= m <= 16")
        poly = self.primitive_poly or PRIMITIVE_POLYS[self.m]
        if poly_degree(poly) != self.m:
            raise ValueError(f"polynomial {poly_to_str(poly)} does not have degree {self.m}")
        order = (1 << self.m) - 1
        antilog = np.zeros(2 * order, dtype=np.int64)
        log = np.full(order + 1, -1, dtype=np.int64)
        x = 1
        for i in range(order):
            if log[x] != -1:
                raise ValueError(f"{poly_to_str(poly)} is not primitive")
            antilog[i] = x
            log[x] = i
            x <<= 1
            if x >> self.m:
                x ^= poly
        antilog[order:] = antilog[:order]
        object.__setattr__(self, "primitive_poly", poly)
        object.__setattr__(self, "log_table", log)
        object.__setattr__(self, "antilog_table", antilog)

    @property
    def order(self) -> int:
        """Multiplicative group order, 2^m - 1."""
        return (1 << self.m) - 1

    def alpha(self, i: int) -> int:
        return int(self.antilog_table[i % self.order])

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.antilog_table[self.log_table[a] + self.log_table[b]])

    def inv(self, a: int) -> int:
        if a == 0:
            raise DivideByZero("0 has no inverse in GF(2^m)")
        return int(self.antilog_table[(self.order - self.log_table[a]) % self.order])

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            return 0 if e else 1
        return int(self.antilog_table[(self.log_table[a] * e) % self.order])

    def conjugates(self, a: int) -> list[int]:
        out = [a]
        b = self.mul(a, a)
        while b != a:
            out.append(b)
            b = self.mul(b, b)
        return out

    def min_poly(self, a: int) -> int:
        """Minimal polynomial of ``a`` over GF(2), as a binary polynomial int."""
        if a == 0:
            return 0b10
        # product of (x + c) over the conjugacy class, coefficients in GF(2^m)
        coeffs = [1]
        for c in self.conjugates(a):
            nxt = [0] * (len(coeffs) + 1)
            for i, v in enumerate(coeffs):
                nxt[i + 1] ^= v
                nxt[i] ^= self.mul(v, c)
            coeffs = nxt
        if any(v > 1 for v in coeffs):
            raise AssertionError("minimal polynomial has non-binary coefficients")
        return sum(v << i for i, v in enumerate(coeffs))

    def eval_poly(self, p: int, a: int) -> int:
        """Evaluate a binary polynomial at a field element (Horner)."""
        acc = 0
        for i in range(poly_degree(p), -1, -1):
            acc = self.mul(acc, a) ^ ((p >> i) & 1)
        return acc


def gf2m_mul(f: GF2mField, a: int, b: int) -> int:
    return f.mul(a, b)


def gf2m_inv(f: GF2mField, a: int) -> int:
    return f.inv(a)


def gf2m_min_poly(f: GF2mField, a: int) -> int:
    return f.min_poly(a)
