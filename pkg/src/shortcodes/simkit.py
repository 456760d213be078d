"""Monte Carlo word-error-rate sweeps.

Each grid point runs independent trials until ``target_errors`` word errors
have been seen or ``max_trials`` is reached. Trial ``t`` draws its message
and channel noise from ``RngStream(master_seed, t)``, so a record depends
only on the sweep spec and never on how trials are spread across worker
processes. The same stream ids are reused at every grid point, so points
share common random numbers (on the BEC, erasure patterns are nested in
eps).
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from . import __version__
from .channel import RngStream, awgn_transmit, bec_transmit, sigma_from_ebn0
from .codebook import CRCS, LinearCode, crc_concat, encode, polar_for_channel
from .decode_awgn import OsdConfig, ml_lower_bound_check, osd_decode, sum_product_decode, whd
from .decode_bec import ml_erasure_decode, peel_decode, tanner_lists

log = logging.getLogger(__name__)

CSV_COLUMNS = ["param", "trials", "errors", "wer", "ml_lb_errors", "mean_teps", "seconds", "partial"]
BEC_DECODERS = ("ml", "peel")
AWGN_DECODERS = ("osd", "bp")
DEFAULT_MAX_TRIALS = 10**8


@dataclass(frozen=True)
class PolarDesign:
    """Polar code rebuilt for every grid point's channel parameter."""

    ell: int
    k: int
    crc: str | None = None

    def build(self, channel: str, param: float) -> LinearCode:
        rate = None
        if channel == "awgn" and self.crc:
            rate = (self.k - CRCS[self.crc].m) / (1 << self.ell)
        code = polar_for_channel(self.ell, self.k, channel, param, rate=rate)
        return crc_concat(code, CRCS[self.crc]) if self.crc else code

    @property
    def label(self) -> str:
        n = 1 << self.ell
        return f"Polar({n},{self.k})" + (f"+CRC{CRCS[self.crc].m}" if self.crc else "")


@dataclass(frozen=True)
class SweepSpec:
    code: LinearCode | PolarDesign
    channel: str
    grid: Sequence[float]
    decoder: str = "ml"
    osd: OsdConfig = OsdConfig()
    bp_iters: int = 50
    target_errors: int = 100
    max_trials: int = DEFAULT_MAX_TRIALS
    master_seed: int = 0
    chunk: int = 200

    def __post_init__(self):
        if self.channel not in ("bec", "awgn"):
            raise ValueError(f"unknown channel {self.channel!r}")
        allowed = BEC_DECODERS if self.channel == "bec" else AWGN_DECODERS
        if self.decoder not in allowed:
            raise ValueError(f"decoder {self.decoder!r} does not apply to the {self.channel} channel")
        if self.target_errors < 1:
            raise ValueError("target_errors must be >= 1")
        if self.max_trials < 1:
            raise ValueError("max_trials must be >= 1")
        grid = [float(x) for x in self.grid]
        if not grid or grid != sorted(grid):
            raise ValueError("grid must be nonempty and sorted")
        object.__setattr__(self, "grid", tuple(grid))

    def code_at(self, param: float) -> LinearCode:
        if isinstance(self.code, PolarDesign):
            return self.code.build(self.channel, param)
        return self.code

    @property
    def code_label(self) -> str:
        return self.code.label

    def decoder_config(self) -> dict:
        cfg = {"decoder": self.decoder}
        if self.decoder == "osd":
            cfg.update(asdict(self.osd))
        elif self.decoder == "bp":
            cfg["bp_iters"] = self.bp_iters
        return cfg


@dataclass
class SimRecord:
    param: float
    trials: int
    errors: int
    wer: float
    ml_lb_errors: int
    mean_teps: float | None
    seconds: float
    partial: bool = False

    def wilson(self, confidence: float = 0.95) -> tuple[float, float]:
        return wilson_interval(self.errors, self.trials, confidence)


def wilson_interval(errors: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    z = stats.norm.isf((1 - confidence) / 2)
    p = errors / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if errors == 0 else max(0.0, centre - half)
    hi = 1.0 if errors == trials else min(1.0, centre + half)
    return lo, hi


# ---------------------------------------------------------------------------
# trials


class TrialRunner:
    """Runs single trials of one (code, channel parameter, decoder) point."""

    def __init__(self, spec: SweepSpec, code: LinearCode, param: float):
        self.spec = spec
        self.code = code
        self.param = param
        self.adjacency = tanner_lists(code.H) if spec.decoder in ("peel", "bp") else None
        self.sigma = sigma_from_ebn0(param, code.rate) if spec.channel == "awgn" else None

    def run(self, trial: int) -> tuple[bool, bool, int]:
        """Returns (word error, ML decoder would also err, TEPs processed)."""
        spec, C = self.spec, self.code
        rng = RngStream(spec.master_seed, trial).generator()
        b = rng.integers(0, 2, C.k, dtype=np.uint8)
        c = encode(C, b)
        if spec.channel == "bec":
            y = bec_transmit(c, self.param, rng)
            if spec.decoder == "ml":
                v = ml_erasure_decode(C, y)
                err = not v.unique or bool((v.codeword != c).any())
                return err, err, 0
            v = peel_decode(C, y, adjacency=self.adjacency)
            if v.unique:
                return bool((v.codeword != c).any()), False, 0
            return True, not ml_erasure_decode(C, y).unique, 0
        sw = awgn_transmit(c, self.sigma, rng)
        if spec.decoder == "osd":
            out = osd_decode(C, sw, spec.osd)
            err = bool((out.c_hat != c).any())
            return err, err and ml_lower_bound_check(c, out, sw), out.teps_processed
        bits, converged = sum_product_decode(C, sw, spec.bp_iters, adjacency=self.adjacency)
        err = bool((bits != c).any())
        ml_err = False
        if err and converged:
            ml_err = whd(bits, sw.hard, sw.alpha) <= whd(c, sw.hard, sw.alpha)
        return err, ml_err, 0

    def run_range(self, start: int, stop: int) -> np.ndarray:
        out = np.zeros((stop - start, 3), dtype=np.int64)
        for i, t in enumerate(range(start, stop)):
            out[i] = self.run(t)
        return out


_WORKER: dict = {}


def _init_worker(spec: SweepSpec):
    _WORKER.clear()
    _WORKER["spec"] = spec


def _worker_chunk(point: int, start: int, stop: int) -> np.ndarray:
    spec = _WORKER["spec"]
    if _WORKER.get("point") != point:
        param = spec.grid[point]
        _WORKER.update(point=point, runner=TrialRunner(spec, spec.code_at(param), param))
    return _WORKER["runner"].run_range(start, stop)


def _chunks(spec: SweepSpec):
    start = 0
    while start < spec.max_trials:
        stop = min(start + spec.chunk, spec.max_trials)
        yield start, stop
        start = stop


def _run_point(spec: SweepSpec, point: int, pool: ProcessPoolExecutor | None, jobs: int) -> SimRecord:
    param = spec.grid[point]
    t0 = time.perf_counter()
    errors = ml_lb = teps = trials = 0
    done = False

    def absorb(block: np.ndarray):
        nonlocal errors, ml_lb, teps, trials, done
        for err, mlerr, tp in block:
            trials += 1
            teps += int(tp)
            if err:
                errors += 1
                ml_lb += int(mlerr)
                if errors >= spec.target_errors:
                    done = True
                    return

    if pool is None:
        runner = TrialRunner(spec, spec.code_at(param), param)
        for start, stop in _chunks(spec):
            absorb(runner.run_range(start, stop))
            if done:
                break
    else:
        pending = []
        chunks = _chunks(spec)
        for start, stop in chunks:
            pending.append(pool.submit(_worker_chunk, point, start, stop))
            if len(pending) >= 2 * jobs:
                absorb(pending.pop(0).result())
                if done:
                    break
        while pending and not done:
            absorb(pending.pop(0).result())
        for f in pending:
            f.cancel()
    rec = SimRecord(
        param=param,
        trials=trials,
        errors=errors,
        wer=errors / trials if trials else 0.0,
        ml_lb_errors=ml_lb,
        mean_teps=teps / trials if spec.decoder == "osd" and trials else None,
        seconds=time.perf_counter() - t0,
        partial=not done,
    )
    lo, hi = rec.wilson()
    log.info(
        "%s %s=%g: %d/%d errors, WER %.3e [%.2e, %.2e]%s",
        spec.code_label, "eps" if spec.channel == "bec" else "EbN0", param,
        errors, trials, rec.wer, lo, hi, " (budget exhausted)" if rec.partial else "",
    )
    return rec


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[SimRecord]:
    """Simulate every grid point; see the module docstring for the contract."""
    if jobs <= 1:
        return [_run_point(spec, i, None, 1) for i in range(len(spec.grid))]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(spec,)) as pool:
        return [_run_point(spec, i, pool, jobs) for i in range(len(spec.grid))]


# ---------------------------------------------------------------------------
# persistence


def metadata_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def sweep_metadata(spec: SweepSpec, extra: dict | None = None) -> dict:
    code = spec.code
    meta = {
        "code": spec.code_label,
        "channel": spec.channel,
        "decoder": spec.decoder_config(),
        "seed": spec.master_seed,
        "target_errors": spec.target_errors,
        "max_trials": spec.max_trials,
        "grid": list(spec.grid),
        "polar_rebuild": isinstance(code, PolarDesign),
        "version": __version__,
    }
    if isinstance(code, LinearCode):
        meta.update(n=code.n, k=code.k)
    else:
        n = 1 << code.ell
        meta.update(n=n, k=code.k - (CRCS[code.crc].m if code.crc else 0))
    if extra:
        meta.update(extra)
    return meta


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def persist(records: Sequence[SimRecord], spec: SweepSpec | None, path, meta: dict | None = None) -> Path:
    """Write records as CSV plus a ``<stem>.meta.json`` sidecar."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for r in records:
                w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
        block = sweep_metadata(spec, meta) if spec is not None else dict(meta or {})
        metadata_path(path).write_text(json.dumps(block, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"could not write results to {path}: {exc}") from exc
    return path


def load(path) -> tuple[list[SimRecord], dict]:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        mp = metadata_path(path)
        meta = json.loads(mp.read_text()) if mp.exists() else {}
    except OSError as exc:
        raise OSError(f"could not read results from {path}: {exc}") from exc
    records = [
        SimRecord(
            param=float(r["param"]),
            trials=int(r["trials"]),
            errors=int(r["errors"]),
            wer=float(r["wer"]),
            ml_lb_errors=int(r["ml_lb_errors"]),
            mean_teps=float(r["mean_teps"]) if r["mean_teps"] else None,
            seconds=float(r["seconds"]),
            partial=bool(int(r["partial"])),
        )
        for r in rows
    ]
    return records, meta


def interpolate_param(records: Sequence[SimRecord], target_wer: float) -> float:
    """Channel parameter where the (log-)WER curve crosses ``target_wer``.

    Linear interpolation of log WER between the two bracketing grid points;
    the curve may be increasing (BEC) or decreasing (AWGN) in the parameter.
    """
    pts = [(r.param, r.wer) for r in records if r.wer > 0]
    lt = math.log(target_wer)
    for (x0, w0), (x1, w1) in zip(pts, pts[1:]):
        l0, l1 = math.log(w0), math.log(w1)
        if min(l0, l1) <= lt <= max(l0, l1) and l0 != l1:
            return x0 + (lt - l0) * (x1 - x0) / (l1 - l0)
    raise ValueError(f"WER {target_wer:g} is not bracketed by the sweep")
