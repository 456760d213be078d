"""Construction of short binary linear block codes.

Families: Reed-Muller and Polar codes (rows of the Kronecker power of the
2x2 kernel), narrow-sense primitive BCH codes with optional parity
extension, random regular (3,6) LDPC codes, and serial concatenation with a
CRC outer code. Codes are persisted in a small text format (``save_code`` /
``load_code``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import integrate, interpolate, special

from . import binlin
from .binlin import RankDeficient, as_bits, matmul

CODE_FILE_MAGIC = "shortcodes-code v1"

KERNEL = np.array([[1, 0], [1, 1]], dtype=np.uint8)


class InvalidDesign(ValueError):
    pass


class ConstructionFailed(RuntimeError):
    pass


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LinearCode:
    """A binary linear ``(n, k)`` code given by generator and parity-check matrices.

    ``H`` spans the dual code but need not have independent rows (LDPC codes
    keep their Tanner-graph matrix); a rate-1 code has an empty ``H``.
    ``meta`` records how the code was built so it can be rebuilt.
    """

    G: np.ndarray
    H: np.ndarray
    label: str
    d_H: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        G = as_bits(self.G, ndim=2)
        H = as_bits(self.H, ndim=2)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "H", H)
        k, n = G.shape
        if not 1 <= k <= n:
            raise InvalidDesign(f"need 1 <= k <= n, got k={k}, n={n}")
        if H.shape[1] != n:
            raise InvalidDesign("G and H have different lengths")
        if matmul(G, H.T).any():
            raise InvalidDesign("G H^T != 0")
        r = binlin.rank(G)
        if r != k:
            raise RankDeficient(f"generator rank {r} != {k} rows")
        if binlin.rank(H) != n - k:
            raise InvalidDesign("H does not span the dual code")
        G.flags.writeable = False
        H.flags.writeable = False

    @property
    def n(self) -> int:
        return self.G.shape[1]

    @property
    def k(self) -> int:
        return self.G.shape[0]

    @property
    def rate(self) -> float:
        return self.k / self.n

    def __repr__(self):
        return f"LinearCode({self.label!r}, n={self.n}, k={self.k}, d_H={self.d_H})"


def _make_code(G, label: str, meta: dict, H=None, d_H=None) -> LinearCode:
    G = as_bits(G, ndim=2)
    if H is None:
        H = binlin.nullspace_basis(G)
    if d_H is None and G.shape[0] <= 16:
        d_H = min_distance(G)
    return LinearCode(G=G, H=H, label=label, d_H=d_H, meta=meta)


def encode(C: LinearCode, b) -> np.ndarray:
    """Codeword ``b @ G`` over GF(2)."""
    b = np.asarray(b, dtype=np.uint8)
    if b.shape[-1] != C.k:
        raise LengthMismatch(f"message has length {b.shape[-1]}, code has k={C.k}")
    return matmul(b, C.G)


def all_codewords(G) -> np.ndarray:
    """Every codeword of the row space of ``G`` (2^k rows; keep k small)."""
    G = as_bits(G, ndim=2)
    k = G.shape[0]
    if k > 24:
        raise ValueError("refusing to enumerate more than 2^24 codewords")
    msgs = ((np.arange(1 << k)[:, None] >> np.arange(k)) & 1).astype(np.uint8)
    return matmul(msgs, G)


def min_distance(G) -> int:
    words = all_codewords(G)
    w = words.sum(axis=1)
    return int(w[w > 0].min())


def is_codeword(C: LinearCode, c) -> bool:
    return not matmul(C.H, np.asarray(c, dtype=np.uint8)).any()


# ---------------------------------------------------------------------------
# Reed-Muller / Polar


def kron_power(ell: int) -> np.ndarray:
    """``ell``-fold Kronecker power of ``[[1, 0], [1, 1]]``."""
    if not 1 <= ell <= 12:
        raise ValueError("ell must be in 1..12")
    M = KERNEL
    for _ in range(ell - 1):
        M = np.kron(M, KERNEL)
    return M.astype(np.uint8)


def _popcount(i: np.ndarray) -> np.ndarray:
    i = np.asarray(i, dtype=np.int64)
    return np.array([bin(int(v)).count("1") for v in i.ravel()]).reshape(i.shape)


def build_rm(ell: int, k: int) -> LinearCode:
    """The ``k`` heaviest rows of the kernel power; ties go to the lower row index."""
    n = 1 << ell
    if not 1 <= k <= n:
        raise InvalidDesign(f"k must be in 1..{n}")
    F = kron_power(ell)
    weights = 1 << _popcount(np.arange(n))
    order = sorted(range(n), key=lambda i: (-weights[i], i))
    rows = sorted(order[:k])
    d_H = None
    # classical RM(r, ell) at dyadic dimensions
    dims = np.cumsum([math.comb(ell, i) for i in range(ell + 1)])
    if k in dims:
        r = int(np.searchsorted(dims, k))
        d_H = 1 << (ell - r)
    meta = {"family": "rm", "ell": ell, "k": k}
    return _make_code(F[rows], f"RM({n},{k})", meta, d_H=d_H)


def polar_bec_reliabilities(ell: int, eps: float) -> np.ndarray:
    """Exact erasure probabilities of the synthesized channels on a BEC(eps).

    Index ``i`` matches row ``i`` of ``kron_power(ell)``; the first split
    corresponds to the most significant bit of ``i``.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    z = np.array([eps], dtype=float)
    for _ in range(ell):
        z = np.stack([2 * z - z * z, z * z], axis=1).ravel()
    return z


# phi(x) = 1 - E[tanh(u/2)], u ~ N(x, 2x); tabulated below x = _PHI_SPLIT,
# closed-form asymptote above
_PHI_SPLIT = 800.0


def _phi_exact(x: float) -> float:
    if x <= 0:
        return 1.0
    s = math.sqrt(2 * x)

    def f(u):
        return 2.0 * special.expit(-u) * math.exp(-((u - x) ** 2) / (4 * x)) / (s * math.sqrt(2 * math.pi))

    val, _ = integrate.quad(f, x - 40 * s, x + 40 * s, epsabs=0, epsrel=1e-11, limit=400, points=[0.0] if x < 40 * s else None)
    return val


def _phi_asymptotic_log(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * np.log(np.pi / x) - x / 4 + np.log1p(-10 / (7 * x))


_PHI_GRID = np.geomspace(1e-6, _PHI_SPLIT, 800)
_PHI_SPLINE = None


def _phi_table():
    """Cubic spline of log phi against log x."""
    global _PHI_SPLINE
    if _PHI_SPLINE is None:
        _PHI_SPLINE = interpolate.CubicSpline(np.log(_PHI_GRID), np.log([_phi_exact(x) for x in _PHI_GRID]))
    return _PHI_SPLINE


def log_phi(x) -> np.ndarray:
    """log of the Gaussian-approximation check-node function."""
    x = np.asarray(x, dtype=float)
    spline = _phi_table()
    lx = np.log(np.clip(x, _PHI_GRID[0], _PHI_SPLIT))
    inside = spline(lx)
    out = np.where(x > _PHI_SPLIT, _phi_asymptotic_log(np.maximum(x, _PHI_SPLIT)), inside)
    return np.where(x <= 0, 0.0, out)


def inv_log_phi(target) -> np.ndarray:
    """Solve ``log_phi(x) = target`` for x >= 0 (vectorised bisection)."""
    target = np.asarray(target, dtype=float)
    lo = np.zeros_like(target)
    hi = np.full_like(target, 10.0)
    while np.any(log_phi(hi) > target):
        hi = np.where(log_phi(hi) > target, hi * 2, hi)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        above = log_phi(mid) > target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return 0.5 * (lo + hi)


def polar_awgn_reliabilities(ell: int, design_sigma: float) -> np.ndarray:
    """Gaussian-approximation density evolution on LLR means.

    Returns ``log Q(sqrt(mean/2))`` per synthesized channel: the log of the
    approximate bit error probability, so lower means more reliable. Index
    convention as in ``polar_bec_reliabilities``.
    """
    if design_sigma <= 0:
        raise ValueError("design_sigma must be positive")
    m = np.array([2.0 / design_sigma**2])
    for _ in range(ell):
        lp = log_phi(m)
        # 1 - (1 - phi)^2 = phi (2 - phi)
        minus = inv_log_phi(lp + np.log(2 - np.exp(lp)))
        m = np.stack([minus, 2 * m], axis=1).ravel()
    return special.log_ndtr(-np.sqrt(m / 2))


def build_polar(ell: int, k: int, reliabilities: Sequence[float], design: str = "") -> LinearCode:
    """Rows of the kernel power at the ``k`` most reliable (lowest-score) indices."""
    n = 1 << ell
    rel = np.asarray(reliabilities, dtype=float)
    if rel.shape != (n,):
        raise ValueError(f"expected {n} reliabilities")
    if not 1 <= k <= n:
        raise InvalidDesign(f"k must be in 1..{n}")
    chosen = np.sort(np.argsort(rel, kind="stable")[:k])
    meta = {"family": "polar", "ell": ell, "k": k, "design": design}
    label = f"Polar({n},{k})" + (f" @ {design}" if design else "")
    return _make_code(kron_power(ell)[chosen], label, meta)


def polar_for_channel(ell: int, k: int, channel: str, param: float, rate: float | None = None) -> LinearCode:
    """Polar code designed for a BEC erasure probability or an AWGN Eb/N0 (dB)."""
    if channel == "bec":
        rel = polar_bec_reliabilities(ell, param)
        return build_polar(ell, k, rel, design=f"bec eps={param:g}")
    if channel == "awgn":
        R = rate if rate is not None else k / (1 << ell)
        sigma = math.sqrt(1.0 / (2 * R * 10 ** (param / 10)))
        rel = polar_awgn_reliabilities(ell, sigma)
        return build_polar(ell, k, rel, design=f"awgn ebn0={param:g}dB")
    raise ValueError(f"unknown channel {channel!r}")


# ---------------------------------------------------------------------------
# BCH


def bch_generator_poly(m: int, t: int) -> int:
    """lcm of the minimal polynomials of alpha^1 .. alpha^2t."""
    f = binlin.GF2mField(m)
    g = 1
    seen = set()
    for i in range(1, 2 * t + 1):
        a = f.alpha(i)
        if a in seen:
            continue
        seen.update(f.conjugates(a))
        g = binlin.poly_lcm(g, f.min_poly(a))
    return g


def build_bch(m: int, t: int) -> LinearCode:
    """Narrow-sense primitive binary BCH code of length 2^m - 1, systematic."""
    if not 2 <= m <= 10:
        raise InvalidDesign("m must be in 2..10")
    if not 1 <= t < 1 << (m - 1):
        raise InvalidDesign(f"t must be in 1..{(1 << (m - 1)) - 1}")
    n = (1 << m) - 1
    g = bch_generator_poly(m, t)
    deg = binlin.poly_degree(g)
    if deg >= n:
        raise InvalidDesign(f"generator degree {deg} leaves no information bits")
    k = n - deg
    gbits = np.array([(g >> i) & 1 for i in range(deg + 1)], dtype=np.uint8)
    shifts = np.zeros((k, n), dtype=np.uint8)
    for i in range(k):
        shifts[i, i : i + deg + 1] = gbits
    G_sys, perm = binlin.to_systematic(shifts)
    if np.any(perm != np.arange(n)):
        raise AssertionError("cyclic generator should systematize without column swaps")
    meta = {"family": "bch", "m": m, "t": t, "generator": hex(g), "designed_distance": 2 * t + 1}
    return _make_code(G_sys, f"BCH({n},{k},t={t})", meta)


def hamming_7_4() -> LinearCode:
    """(7,4) Hamming code as the single-error-correcting BCH code, m = 3."""
    return build_bch(3, 1)


def extend_code(C: LinearCode) -> LinearCode:
    """Append an overall even-parity bit to every codeword."""
    parity = (C.G.sum(axis=1) & 1).astype(np.uint8)[:, None]
    G = np.concatenate([C.G, parity], axis=1)
    d_H = C.d_H
    if d_H is not None and d_H % 2:
        d_H += 1
    meta = dict(C.meta, extended=True)
    if "designed_distance" in meta and meta["designed_distance"] % 2:
        meta["designed_distance"] += 1
    label = f"e{C.label}" if not C.label.startswith("e") else C.label + "+parity"
    label = label.replace(f"({C.n},", f"({C.n + 1},", 1)
    return _make_code(G, label, meta, d_H=d_H)


# ---------------------------------------------------------------------------
# LDPC


def four_cycle_count(H) -> int:
    """Number of length-4 cycles: sum over check pairs of C(overlap, 2)."""
    A = np.asarray(H, dtype=np.int64)
    O = A @ A.T
    iu = np.triu_indices(O.shape[0], 1)
    o = O[iu]
    return int((o * (o - 1) // 2).sum())


def _random_stub_matching(n: int, rng: np.random.Generator, dv: int = 3, dc: int = 6):
    m = n * dv // dc
    var_stubs = np.repeat(np.arange(n), dv)
    check_stubs = rng.permutation(np.repeat(np.arange(m), dc))
    return var_stubs.copy(), check_stubs


def _multiplicity(ev, ec, n, m):
    A = np.zeros((m, n), dtype=np.int64)
    np.add.at(A, (ec, ev), 1)
    return A


def _pair_cost(o: np.ndarray) -> int:
    return int((o * (o - 1) // 2).sum())


def _repair(ev, ec, n, m, rng, passes):
    """Double-edge swaps removing parallel edges first, then 4-cycles."""
    A = _multiplicity(ev, ec, n, m)
    O = A @ A.T
    np.fill_diagonal(O, 0)
    E = len(ev)
    for _ in range(passes):
        parallel = np.flatnonzero(A[ec, ev] > 1)
        if parallel.size:
            e1 = int(rng.choice(parallel))
        else:
            ci, cj = np.nonzero(np.triu(O, 1) >= 2)
            if ci.size == 0:
                break
            p = int(rng.integers(ci.size))
            c1, c2 = ci[p], cj[p]
            shared = np.flatnonzero((A[c1] > 0) & (A[c2] > 0))
            v = int(rng.choice(shared))
            e1 = int(np.flatnonzero((ev == v) & (ec == c1))[0])
        v1, c1 = ev[e1], ec[e1]
        e2 = int(rng.integers(E))
        v2, c2 = ev[e2], ec[e2]
        if c1 == c2 or v1 == v2 or A[c2, v1] or A[c1, v2]:
            continue
        touched = [c1, c2]
        before = _pair_cost(O[touched]) - _pair_cost(np.array([O[c1, c2]]))
        penalty_before = int(A[c1, v1] > 1) + int(A[c2, v2] > 1)
        A[c1, v1] -= 1
        A[c2, v2] -= 1
        A[c2, v1] += 1
        A[c1, v2] += 1
        rows = A[touched] @ A.T
        rows[0, c1] = 0
        rows[1, c2] = 0
        after = _pair_cost(rows) - _pair_cost(np.array([rows[0, c2]]))
        penalty_after = int(A[c1, v1] > 1) + int(A[c2, v2] > 1)
        if (penalty_after, after) <= (penalty_before, before):
            ev[e1], ec[e1] = v1, c2
            ev[e2], ec[e2] = v2, c1
            O[touched, :] = rows
            O[:, touched] = rows.T
        else:
            A[c1, v1] += 1
            A[c2, v2] += 1
            A[c2, v1] -= 1
            A[c1, v2] -= 1
    return A


def build_ldpc_regular(n: int, seed: int, max_retries: int = 10, return_initial: bool = False):
    """Random regular (3,6) LDPC code from a stub matching plus swap repair.

    ``H`` is the (n/2) x n Tanner-graph matrix; its rows may be dependent,
    in which case ``k = n - rank(H)`` exceeds n/2. With ``return_initial``
    the unrepaired matching's multiplicity matrix is returned as well.
    """
    if n < 8 or n % 2:
        raise InvalidDesign("n must be even and at least 8")
    m = n // 2
    rng = np.random.default_rng(seed)
    for _attempt in range(max_retries):
        ev, ec = _random_stub_matching(n, rng)
        initial = _multiplicity(ev, ec, n, m)
        A = _repair(ev, ec, n, m, rng, passes=50 * n)
        if A.max() <= 1:
            break
    else:
        raise ConstructionFailed(f"could not remove parallel edges after {max_retries} matchings")
    H = A.astype(np.uint8)
    Hb = binlin.row_basis(H)
    G = binlin.nullspace_basis(Hb)
    k = G.shape[0]
    meta = {"family": "ldpc", "n": n, "seed": seed, "dv": 3, "dc": 6, "four_cycles": four_cycle_count(H)}
    code = _make_code(G, f"LDPC(3,6)({n},{k}) seed={seed}", meta, H=H)
    if return_initial:
        return code, initial
    return code


# ---------------------------------------------------------------------------
# CRC concatenation


@dataclass(frozen=True)
class CrcSpec:
    m: int
    g: int
    name: str = ""

    def __post_init__(self):
        if binlin.poly_degree(self.g) != self.m:
            raise ValueError("CRC polynomial degree must equal m")
        if not self.g & 1:
            raise ValueError("CRC polynomial needs a nonzero constant term")


CRC_CCITT16 = CrcSpec(16, (1 << 16) | (1 << 12) | (1 << 5) | 1, "ccitt16")

CRCS = {"ccitt16": CRC_CCITT16}


def crc_generator_matrix(crc: CrcSpec, k: int) -> np.ndarray:
    """Systematic (k-m) x k generator: message bits, then m check bits.

    Message bit ``i`` is the coefficient of ``x^(k-1-i)`` in the shifted
    message polynomial; check bit ``j`` is the coefficient of ``x^(m-1-j)``
    of the remainder, i.e. most significant bit first.
    """
    kk = k - crc.m
    if kk < 1:
        raise InvalidDesign("CRC degree must be smaller than the inner dimension")
    Gc = np.zeros((kk, k), dtype=np.uint8)
    for i in range(kk):
        rem = binlin.poly_mod(1 << (k - 1 - i), crc.g)
        Gc[i, i] = 1
        for j in range(crc.m):
            Gc[i, kk + j] = (rem >> (crc.m - 1 - j)) & 1
    return Gc


def crc_concat(C: LinearCode, crc: CrcSpec) -> LinearCode:
    """Outer CRC, inner ``C``: generator ``G_CRC @ G``."""
    if crc.m >= C.k:
        raise InvalidDesign("CRC degree must be smaller than k")
    Gc = crc_generator_matrix(crc, C.k)
    G = matmul(Gc, C.G)
    meta = dict(C.meta, crc=crc.name or hex(crc.g), inner_k=C.k)
    return _make_code(G, f"{C.label}+CRC{crc.m}", meta)


# ---------------------------------------------------------------------------
# code files


def _hex_row(row: np.ndarray) -> str:
    return np.packbits(row).tobytes().hex()


def _unhex_row(text: str, n: int) -> np.ndarray:
    return np.unpackbits(np.frombuffer(bytes.fromhex(text), dtype=np.uint8))[:n]


def save_code(C: LinearCode, path) -> Path:
    """Write a code file: ``key: value`` header, then hex rows of G and H."""
    path = Path(path)
    meta = dict(C.meta)
    lines = [
        CODE_FILE_MAGIC,
        f"label: {C.label}",
        f"family: {meta.get('family', 'custom')}",
        f"n: {C.n}",
        f"k: {C.k}",
        f"d_H: {'' if C.d_H is None else C.d_H}",
        f"seed: {meta.get('seed', '')}",
        f"design: {meta.get('design', '')}",
        f"meta: {json.dumps(meta, sort_keys=True)}",
        f"G: {C.k}",
        *(_hex_row(r) for r in C.G),
        f"H: {C.H.shape[0]}",
        *(_hex_row(r) for r in C.H),
    ]
    path.write_text("\n".join(lines) + "\n")
    return path


def load_code(path) -> LinearCode:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != CODE_FILE_MAGIC:
        raise ValueError(f"{path}: not a code file")
    header = {}
    i = 1
    while not lines[i].startswith("G:"):
        key, _, value = lines[i].partition(":")
        header[key.strip()] = value.strip()
        i += 1
    n = int(header["n"])
    kg = int(lines[i].split(":")[1])
    G = np.array([_unhex_row(t, n) for t in lines[i + 1 : i + 1 + kg]], dtype=np.uint8)
    i += 1 + kg
    mh = int(lines[i].split(":")[1])
    H = np.array([_unhex_row(t, n) for t in lines[i + 1 : i + 1 + mh]], dtype=np.uint8).reshape(mh, n)
    d_H = int(header["d_H"]) if header.get("d_H") else None
    return LinearCode(G=G, H=H, label=header["label"], d_H=d_H, meta=json.loads(header.get("meta", "{}")))
