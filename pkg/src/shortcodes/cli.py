"""Command-line front end.

    shortcodes construct {bch,rm,polar,ldpc} ... --out CODE_FILE
    shortcodes simulate [CONFIG.ini] [overrides] --out RESULTS.csv
    shortcodes bounds {ppv,shannon} ... [--out BOUNDS.csv]
    shortcodes plotdata RESULTS.csv ... [--bounds BOUNDS.csv ...] --out MERGED.csv [--figure FIG.png]

Exit codes: 0 ok, 1 usage error, 2 runtime error, 3 a grid point ran out of
its trial budget.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import bounds, codebook, simkit
from .codebook import CRCS
from .decode_awgn import OsdConfig

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_BUDGET = 0, 1, 2, 3

log = logging.getLogger("shortcodes")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# value parsing


def parse_grid(text: str) -> list[float]:
    """``a:step:b`` (inclusive) or a comma-separated list."""
    text = str(text).strip()
    try:
        if ":" in text:
            a, step, b = (float(x) for x in text.split(":"))
            if step <= 0 or b < a:
                raise ValueError
            count = int(round((b - a) / step)) + 1
            return [round(a + i * step, 10) for i in range(count)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad grid {text!r}; use a:step:b or a comma list") from None


def parse_rate(text: str) -> float:
    try:
        return float(Fraction(str(text)))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"bad rate {text!r}") from None


def parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"bad boolean {text!r}")


# ---------------------------------------------------------------------------
# construct


def build_code(family: str, p: dict) -> codebook.LinearCode:
    def need(key, cast=int):
        if p.get(key) in (None, ""):
            raise UsageError(f"{family} codes need --{key.replace('_', '-')}")
        try:
            return cast(p[key])
        except ValueError:
            raise UsageError(f"bad value for {key}: {p[key]!r}") from None

    try:
        if family == "bch":
            C = codebook.build_bch(need("m"), need("t"))
            if parse_bool(p.get("extend", False)):
                C = codebook.extend_code(C)
        elif family == "rm":
            C = codebook.build_rm(need("ell"), need("k"))
        elif family == "polar":
            channel = p.get("design_channel") or "bec"
            C = codebook.polar_for_channel(need("ell"), need("k"), channel, need("design", float))
        elif family == "ldpc":
            C = codebook.build_ldpc_regular(need("n"), need("seed"))
        else:
            raise UsageError(f"unknown code family {family!r}")
    except codebook.InvalidDesign as exc:
        raise UsageError(str(exc)) from None
    crc = p.get("crc")
    if crc:
        if crc not in CRCS:
            raise UsageError(f"unknown CRC {crc!r}; known: {', '.join(CRCS)}")
        C = codebook.crc_concat(C, CRCS[crc])
    return C


def cmd_construct(args) -> int:
    params = {k: v for k, v in vars(args).items() if v is not None}
    C = build_code(args.family, params)
    out = Path(args.out or f"{args.family}_{C.n}_{C.k}.code")
    codebook.save_code(C, out)
    print(f"n={C.n} k={C.k} label={C.label} -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate

CONFIG_KEYS = {
    "code": {"file", "family", "m", "t", "extend", "ell", "k", "n", "seed", "design", "design_channel", "crc", "rebuild"},
    "channel": {"kind", "grid"},
    "decoder": {"kind", "order", "max_teps", "early_stop", "bp_iters"},
    "run": {"target_errors", "max_trials", "seed", "jobs", "out", "chunk"},
}

# flag name -> (section, key)
SIM_FLAGS = {
    "code": ("code", "file"),
    "family": ("code", "family"),
    "crc": ("code", "crc"),
    "channel": ("channel", "kind"),
    "grid": ("channel", "grid"),
    "decoder": ("decoder", "kind"),
    "order": ("decoder", "order"),
    "max_teps": ("decoder", "max_teps"),
    "early_stop": ("decoder", "early_stop"),
    "bp_iters": ("decoder", "bp_iters"),
    "target_errors": ("run", "target_errors"),
    "max_trials": ("run", "max_trials"),
    "seed": ("run", "seed"),
    "jobs": ("run", "jobs"),
    "out": ("run", "out"),
}


def read_config(path) -> dict[str, dict[str, str]]:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise UsageError(f"malformed config {path}: {exc}") from None
    cfg: dict[str, dict[str, str]] = {s: {} for s in CONFIG_KEYS}
    for section in cp.sections():
        if section not in CONFIG_KEYS:
            raise UsageError(f"unknown config section [{section}]")
        for key, value in cp.items(section):
            if key not in CONFIG_KEYS[section]:
                raise UsageError(f"unknown key {key!r} in [{section}]")
            cfg[section][key] = value
    return cfg


def effective_config(args) -> dict[str, dict[str, str]]:
    cfg = read_config(args.config) if args.config else {s: {} for s in CONFIG_KEYS}
    for flag, (section, key) in SIM_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            cfg[section][key] = str(value)
    for item in args.set or []:
        name, sep, value = item.partition("=")
        section, _, key = name.partition(".")
        if not sep or section not in CONFIG_KEYS or key not in CONFIG_KEYS[section]:
            raise UsageError(f"bad --set {item!r}; use section.key=value")
        cfg[section][key] = value
    cfg["run"].setdefault("target_errors", "100")
    cfg["run"].setdefault("max_trials", str(simkit.DEFAULT_MAX_TRIALS))
    cfg["run"].setdefault("seed", "0")
    cfg["run"].setdefault("jobs", "1")
    return cfg


def spec_from_config(cfg: dict[str, dict[str, str]]) -> simkit.SweepSpec:
    code_cfg, ch, dec, run = cfg["code"], cfg["channel"], cfg["decoder"], cfg["run"]
    channel = ch.get("kind")
    if channel not in ("bec", "awgn"):
        raise UsageError("channel kind must be 'bec' or 'awgn'")
    if "grid" not in ch:
        raise UsageError("a channel grid is required")
    grid = parse_grid(ch["grid"])
    crc = code_cfg.get("crc") or None
    if crc and crc not in CRCS:
        raise UsageError(f"unknown CRC {crc!r}; known: {', '.join(CRCS)}")
    if "file" in code_cfg:
        try:
            code = codebook.load_code(code_cfg["file"])
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot load code file {code_cfg['file']}: {exc}") from None
        meta = code.meta
        if meta.get("family") == "polar" and parse_bool(code_cfg.get("rebuild", False)):
            code = simkit.PolarDesign(meta["ell"], meta["k"], crc or meta.get("crc"))
        elif crc and meta.get("crc"):
            raise UsageError(f"code file {code_cfg['file']} is already CRC-concatenated")
        elif crc:
            code = codebook.crc_concat(code, CRCS[crc])
    elif code_cfg.get("family") == "polar" and parse_bool(code_cfg.get("rebuild", True)):
        try:
            code = simkit.PolarDesign(int(code_cfg["ell"]), int(code_cfg["k"]), crc)
        except (KeyError, ValueError):
            raise UsageError("polar codes need integer ell and k") from None
    elif code_cfg.get("family"):
        params = dict(code_cfg)
        if params["family"] == "polar":
            params.setdefault("design_channel", channel)
        code = build_code(params.pop("family"), params)
    else:
        raise UsageError("no code given: set [code] file or family (or --code)")
    decoder = dec.get("kind") or ("ml" if channel == "bec" else "osd")
    try:
        osd = OsdConfig(
            order=int(dec.get("order", 2)),
            max_teps=int(dec.get("max_teps", 10**9)),
            early_stop=parse_bool(dec.get("early_stop", True)),
        )
        return simkit.SweepSpec(
            code=code,
            channel=channel,
            grid=grid,
            decoder=decoder,
            osd=osd,
            bp_iters=int(dec.get("bp_iters", 50)),
            target_errors=int(run["target_errors"]),
            max_trials=int(run["max_trials"]),
            master_seed=int(run["seed"]),
            chunk=int(run.get("chunk", 200)),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_simulate(args) -> int:
    cfg = effective_config(args)
    spec = spec_from_config(cfg)
    out = Path(cfg["run"].get("out") or "results.csv")
    jobs = int(cfg["run"]["jobs"])
    if isinstance(spec.code, codebook.LinearCode):
        n, k = spec.code.n, spec.code.k
    else:
        meta = simkit.sweep_metadata(spec)
        n, k = meta["n"], meta["k"]
    print(f"code {spec.code_label}: n={n} k={k} effective rate {k}/{n} = {k / n:.4f}")
    records = simkit.run_sweep(spec, jobs=jobs)
    echoed = {s: dict(sorted(v.items())) for s, v in cfg.items()}
    simkit.persist(records, spec, out, meta={"effective_config": echoed, "rate": k / n})
    for r in records:
        print(f"{r.param:g}\t{r.trials}\t{r.errors}\t{r.wer:.4e}\t{r.ml_lb_errors}{'  PARTIAL' if r.partial else ''}")
    print(f"wrote {out}")
    return EXIT_BUDGET if any(r.partial for r in records) else EXIT_OK


# ---------------------------------------------------------------------------
# bounds

BOUND_COLUMNS = ["channel_param", "p_ew"]


def cmd_bounds(args) -> int:
    R = parse_rate(args.R)
    points = []
    if args.kind == "ppv":
        if args.eps is None:
            raise UsageError("ppv needs --eps")
        for e in parse_grid(args.eps):
            if not 0 < e < 1:
                raise UsageError(f"eps={e:g} outside (0, 1)")
            points.append(bounds.ppv_bec(args.n, R, e))
        meta = {"bound": bounds.PPV_NAME, "channel": "bec"}
    else:
        if args.ebn0 is None:
            raise UsageError("shannon needs --ebn0")
        if not 0 < R < 1:
            raise UsageError("rate must lie in (0, 1)")
        theta0 = bounds.shannon_cone_angle(args.n, R)
        for x in parse_grid(args.ebn0):
            try:
                points.append(bounds.shannon_sphere_bound(args.n, R, x, theta0))
            except bounds.DomainError as exc:
                print(f"skipping {x:g} dB: {exc}", file=sys.stderr)
        meta = {"bound": bounds.SHANNON_NAME, "channel": "awgn", "theta0": theta0}
    meta.update(n=args.n, R=R, label=args.label or f"{meta['bound'].split(' (')[0]} n={args.n} R={R:.4g}")
    rows = [[repr(p.channel_param), repr(p.p_ew)] for p in points]
    if args.out:
        out = Path(args.out)
        with out.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(BOUND_COLUMNS)
            w.writerows(rows)
        simkit.metadata_path(out).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        print(f"wrote {out}")
    else:
        w = csv.writer(sys.stdout)
        w.writerow(BOUND_COLUMNS)
        w.writerows(rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# plotdata

MERGED_COLUMNS = ["series", "kind", "param", "wer", "lo", "hi", "trials", "errors"]


def _read_meta(path: Path) -> dict:
    mp = simkit.metadata_path(path)
    if not mp.exists():
        raise UsageError(f"{path} has no metadata sidecar {mp.name}")
    return json.loads(mp.read_text())


def merge_plotdata(results: list, bound_files: list) -> tuple[list[dict], str]:
    rows: list[dict] = []
    channels = set()
    for path in map(Path, results):
        try:
            records, meta = simkit.load(path)
        except OSError as exc:
            raise UsageError(str(exc)) from None
        meta = meta or _read_meta(path)
        channels.add(meta.get("channel"))
        dec = meta.get("decoder", {}).get("decoder", "")
        series = f"{meta.get('code', path.stem)} [{dec}]" if dec else meta.get("code", path.stem)
        for r in records:
            lo, hi = r.wilson()
            rows.append({"series": series, "kind": "sim", "param": r.param, "wer": r.wer, "lo": lo, "hi": hi, "trials": r.trials, "errors": r.errors})
    for path in map(Path, bound_files):
        meta = _read_meta(path)
        channels.add(meta.get("channel"))
        with path.open(newline="") as fh:
            for r in csv.DictReader(fh):
                rows.append({"series": meta["label"], "kind": "bound", "param": float(r["channel_param"]), "wer": float(r["p_ew"]), "lo": None, "hi": None, "trials": None, "errors": None})
    if len(channels) > 1:
        raise UsageError(f"cannot mix channels in one plot: {sorted(map(str, channels))}")
    rows.sort(key=lambda r: (r["series"], r["param"]))
    return rows, channels.pop() if channels else ""


def cmd_plotdata(args) -> int:
    rows, channel = merge_plotdata(args.results, args.bounds or [])
    out = Path(args.out or "plotdata.csv")
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MERGED_COLUMNS)
        for r in rows:
            w.writerow(["" if r[c] is None else (repr(r[c]) if isinstance(r[c], float) else r[c]) for c in MERGED_COLUMNS])
    print(f"wrote {out} ({len({r['series'] for r in rows})} series, {len(rows)} rows)")
    if args.figure:
        from .plotting import wer_figure

        wer_figure(rows, channel, args.figure, title=args.title)
        print(f"wrote {args.figure}")
    return EXIT_OK


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--jobs", type=int, help="worker processes for simulation")
    common.add_argument("--out", help="output path")
    common.add_argument("-v", "--verbose", action="store_true", help="log one line per grid point")

    p = _Parser(prog="shortcodes", description="Short-length binary codes: construction, simulation, bounds.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("construct", parents=[common], help="build a code and write a code file")
    c.add_argument("family", choices=["bch", "rm", "polar", "ldpc"])
    c.add_argument("--m", type=int, help="BCH field degree")
    c.add_argument("--t", type=int, help="BCH error-correcting radius")
    c.add_argument("--extend", action="store_true", default=None, help="append an overall parity bit")
    c.add_argument("--ell", type=int, help="log2 of the length (RM, Polar)")
    c.add_argument("--k", type=int, help="dimension (RM, Polar)")
    c.add_argument("--n", type=int, help="length (LDPC)")
    c.add_argument("--design", type=float, help="Polar design parameter: eps (bec) or Eb/N0 dB (awgn)")
    c.add_argument("--design-channel", choices=["bec", "awgn"], help="Polar design channel")
    c.add_argument("--crc", help="concatenate an outer CRC (ccitt16)")
    c.set_defaults(func=cmd_construct)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo WER sweep")
    s.add_argument("config", nargs="?", help="INI file with [code] [channel] [decoder] [run] sections")
    s.add_argument("--code", help="code file")
    s.add_argument("--family", help="build the code from [code] parameters instead of a file")
    s.add_argument("--crc", help="outer CRC for joint decoding (ccitt16)")
    s.add_argument("--channel", choices=["bec", "awgn"])
    s.add_argument("--grid", help="eps or Eb/N0 grid: a:step:b or a,b,c")
    s.add_argument("--decoder", choices=["ml", "peel", "osd", "bp"])
    s.add_argument("--order", type=int, help="OSD order")
    s.add_argument("--max-teps", type=int, help="OSD re-encoding cap")
    s.add_argument("--early-stop", choices=["true", "false"], help="OSD pruning and ML certificate")
    s.add_argument("--bp-iters", type=int)
    s.add_argument("--target-errors", type=int)
    s.add_argument("--max-trials", type=int)
    s.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override any config key")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bounds", parents=[common], help="finite-length reference curves as CSV")
    b.add_argument("kind", choices=["ppv", "shannon"])
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--R", required=True, help="rate, e.g. 0.5 or 115/256")
    b.add_argument("--eps", help="erasure probability grid (ppv)")
    b.add_argument("--ebn0", help="Eb/N0 grid in dB (shannon)")
    b.add_argument("--label", help="series label in plot data")
    b.set_defaults(func=cmd_bounds)

    d = sub.add_parser("plotdata", parents=[common], help="merge results and bounds into long-format CSV")
    d.add_argument("results", nargs="*", help="simulation CSVs")
    d.add_argument("--bounds", action="append", help="bounds CSV (repeatable)")
    d.add_argument("--figure", help="also render a PNG/PDF figure here")
    d.add_argument("--title")
    d.set_defaults(func=cmd_plotdata)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
