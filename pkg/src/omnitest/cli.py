"""Command-line front end: ``omnitest {test,nulltable,power,minimax}``.

Exit status is 0 on success whatever the test outcome, 2 for invalid
input and 3 for configuration errors.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .errors import CapacityError, ConfigurationError, TableFileError, ValidationError
from .methods import METHODS, Calibration, parse_methods, run_method
from .montecarlo import DEFAULT_MEMORY_BUDGET
from .omnibus import build_null_table
from .persistence import load_null_table, read_pvalues, save_null_table
from .rng import RNG_ID
from .scenarios import CSV_HEADER, FAMILIES, ScenarioSpec, estimate_power, m1_grid, minimax_power
from .transforms import TAGS, TransformKind

EXIT_INPUT = 2
EXIT_CONFIG = 3

REPORT_FIELDS = ["method", "statistic", "p_value", "m", "replicates", "seed", "rng_id", "version"]


def _stderr(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _csv_text(rows, header, preamble=()) -> str:
    buf = io.StringIO()
    for line in preamble:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _fmt(v):
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else str(v)


# -- test ------------------------------------------------------------------------


def cmd_test(args) -> int:
    p = read_pvalues(args.input, clamp_zero=args.clamp_zero)
    methods = parse_methods(args.method or None)
    cal = Calibration(args.replicates, args.seed, args.alpha0, args.power_alpha, args.threads)
    for path in args.table or ():
        table = load_null_table(path)
        if table.m != p.m:
            raise ConfigurationError(f"{path}: null table was built for m={table.m}, input has m={p.m}")
        cal.add(table)
    _stderr(f"m={p.m} replicates={args.replicates} seed={args.seed} rng_id={RNG_ID}")
    reports = [run_method(meth, p, cal) for meth in methods]
    rows = []
    for rep in reports:
        d = rep.as_dict()
        d["version"] = __version__
        rows.append(d)
    if args.format == "json":
        sys.stdout.write(json.dumps(rows, indent=2) + "\n")
    else:
        sys.stdout.write(_csv_text([[_fmt(r[k]) for k in REPORT_FIELDS] for r in rows], REPORT_FIELDS))
    return 0


# -- nulltable -------------------------------------------------------------------


def cmd_nulltable(args) -> int:
    kind = TransformKind(args.transform, args.power_alpha)
    budget = int(args.memory_budget * 2**30) if args.memory_budget else DEFAULT_MEMORY_BUDGET
    table = build_null_table(args.m, kind, args.replicates, args.seed, threads=args.threads, memory_budget=budget)
    save_null_table(table, args.out)
    _stderr(f"wrote {args.out}: m={table.m} transform={kind.tag} replicates={table.replicates} "
            f"seed={table.seed} rng_id={table.rng_id} version={__version__}")
    return 0


# -- power -----------------------------------------------------------------------

_INT_KEYS = {"m", "nsim", "seed", "replicates"}
_FLOAT_KEYS = {"gamma", "exp_rate_scale", "p0", "p1", "alpha", "alpha0", "power_alpha"}
_BOOL_KEYS = {"continuity", "minimax"}
_LIST_KEYS = {"m1", "n"}
_KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | _BOOL_KEYS | _LIST_KEYS | {"family", "methods"}
_REQUIRED = {"family", "m", "m1", "n"}


def _parse_int_list(key, raw, section):
    try:
        return [int(x) for x in raw.replace(",", " ").split()]
    except ValueError:
        raise ConfigurationError(f"[{section}] {key}: expected integer(s), got {raw!r}") from None


def parse_power_config(path) -> list[dict]:
    """Read a power-study file: INI-style, one ``[section]`` per study."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    if not cp.sections():
        raise ConfigurationError(f"{path}: no [study] sections")
    studies = []
    for sec in cp.sections():
        raw = dict(cp[sec])
        unknown = set(raw) - _KNOWN_KEYS
        if unknown:
            raise ConfigurationError(f"[{sec}] unknown key(s): {', '.join(sorted(unknown))}")
        missing = _REQUIRED - set(raw)
        if missing:
            raise ConfigurationError(f"[{sec}] missing key(s): {', '.join(sorted(missing))}")
        st = {"name": sec}
        for key, val in raw.items():
            try:
                if key in _INT_KEYS:
                    st[key] = int(val)
                elif key in _FLOAT_KEYS:
                    st[key] = float(val)
                elif key in _BOOL_KEYS:
                    st[key] = cp[sec].getboolean(key)
                elif key == "family":
                    if val not in FAMILIES:
                        raise ConfigurationError(f"[{sec}] family: {val!r} not one of {', '.join(FAMILIES)}")
                    st[key] = val
                elif key == "methods":
                    st[key] = parse_methods(val)
            except ValueError as exc:
                if isinstance(exc, ValidationError):
                    raise ConfigurationError(f"[{sec}] {key}: {exc}") from None
                raise ConfigurationError(f"[{sec}] {key}: cannot parse {val!r}") from None
        st["n"] = _parse_int_list("n", raw["n"], sec)
        st["m1"] = m1_grid(st["m"]) if raw["m1"].strip() == "all" else _parse_int_list("m1", raw["m1"], sec)
        if not st["n"] or not st["m1"]:
            raise ConfigurationError(f"[{sec}] m1 and n need at least one value")
        studies.append(st)
    return studies


def run_power_study(st: dict, threads=None, progress=None) -> list:
    cal = Calibration(st.get("replicates", 10_000), st.get("seed", 0), st.get("alpha0", 0.5),
                      st.get("power_alpha", 0.5), threads)
    methods = st.get("methods") or list(METHODS)
    seed = st.get("seed", 0)
    nsim = st.get("nsim", 10_000)
    kw = {k: st[k] for k in ("gamma", "exp_rate_scale", "p0", "p1", "alpha", "continuity") if k in st}
    try:
        base = ScenarioSpec(st["family"], st["m"], st["m1"][0], st["n"][0], **kw)
    except ValidationError as exc:
        raise ConfigurationError(f"[{st['name']}] {exc}") from None
    rows = []
    for n in st["n"]:
        if st.get("minimax"):
            res = minimax_power(st["m"], n, base.gamma, methods, nsim, seed, cal, family=base.family,
                                m1_values=st["m1"], threads=threads, progress=progress,
                                **{k: v for k, v in kw.items() if k != "gamma"})
            rows.extend(res.minima[meth] for meth in methods)
            continue
        for m1 in st["m1"]:
            try:
                spec = replace(base, m1=m1, n=n)
            except ValidationError as exc:
                raise ConfigurationError(f"[{st['name']}] {exc}") from None
            res = estimate_power(spec, methods, nsim, seed, cal, threads)
            if progress:
                progress(f"[{st['name']}] m1={m1} n={n}: " + " ".join(f"{r.method}={r.power:.4f}" for r in res))
            rows.extend(res)
    return rows


def _power_preamble(kind, studies_meta):
    yield f"omnitest {__version__} {kind} rng_id={RNG_ID}"
    for name, replicates, seed in studies_meta:
        yield f"study={name} replicates={replicates} seed={seed}"


def cmd_power(args) -> int:
    studies = parse_power_config(args.config)
    rows, meta = [], []
    for st in studies:
        meta.append((st["name"], st.get("replicates", 10_000), st.get("seed", 0)))
        _stderr(f"study {st['name']}: seed={st.get('seed', 0)} replicates={st.get('replicates', 10_000)} rng_id={RNG_ID}")
        rows.extend(r.csv_row() for r in run_power_study(st, args.threads, _stderr))
    _emit(_csv_text(rows, CSV_HEADER, _power_preamble("power", meta)), args.out)
    return 0


def cmd_minimax(args) -> int:
    methods = parse_methods(args.methods)
    cal = Calibration(args.replicates, args.seed, args.alpha0, args.power_alpha, args.threads)
    _stderr(f"m={args.m} seed={args.seed} replicates={args.replicates} rng_id={RNG_ID}")
    grid = None
    if args.m1:
        grid = _parse_int_list("m1", args.m1, "cli")
    rows = []
    for n in args.n:
        res = minimax_power(args.m, n, args.gamma, methods, args.nsim, args.seed, cal, family=args.family,
                            m1_values=grid, threads=args.threads, progress=_stderr)
        rows.extend(res.minima[meth].csv_row() for meth in methods)
    meta = [("minimax", args.replicates, args.seed)]
    _emit(_csv_text(rows, CSV_HEADER, _power_preamble("minimax", meta)), args.out)
    return 0


# -- parser ----------------------------------------------------------------------


def _n_list(text):
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("expected at least one value")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="omnitest", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, replicates):
        sp.add_argument("--replicates", "-B", type=int, default=replicates, help="Monte-Carlo null replicates")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=None, help="worker cap (results do not depend on it)")
        sp.add_argument("--power-alpha", type=float, default=0.5, help="exponent of the power transform")

    t = sub.add_parser("test", help="apply global tests to a p-value file")
    t.add_argument("input")
    t.add_argument("--method", action="append", choices=METHODS + ("all",),
                   help="repeatable; default: all methods")
    common(t, 100_000)
    t.add_argument("--alpha0", type=float, default=0.5, help="HC tuning parameter")
    t.add_argument("--table", action="append", help="precomputed null table (repeatable)")
    t.add_argument("--format", choices=("csv", "json"), default="csv")
    t.add_argument("--clamp-zero", action="store_true", help="map p = 0 to 1e-300 instead of rejecting")
    t.set_defaults(func=cmd_test)

    nt = sub.add_parser("nulltable", help="build and save an omnibus null table")
    nt.add_argument("--m", type=int, required=True)
    nt.add_argument("--transform", choices=TAGS, default="logp")
    common(nt, 100_000)
    nt.add_argument("--memory-budget", type=float, default=None, help="GiB (default 4)")
    nt.add_argument("--out", required=True)
    nt.set_defaults(func=cmd_nulltable)

    pw = sub.add_parser("power", help="run power studies from a config file")
    pw.add_argument("--config", required=True)
    pw.add_argument("--out", default=None)
    pw.add_argument("--threads", type=int, default=None)
    pw.set_defaults(func=cmd_power)

    mm = sub.add_parser("minimax", help="minimum power over m1 at constant cumulative effect")
    mm.add_argument("--m", type=int, required=True)
    mm.add_argument("--n", type=_n_list, required=True, help="sample size(s), comma separated")
    mm.add_argument("--gamma", type=float, default=0.3)
    mm.add_argument("--methods", default="all")
    mm.add_argument("--nsim", type=int, default=10_000)
    common(mm, 10_000)
    mm.add_argument("--alpha0", type=float, default=0.5)
    mm.add_argument("--family", choices=FAMILIES[:4], default="ZTestEqual")
    mm.add_argument("--m1", default=None, help="override the m1 grid, comma separated")
    mm.add_argument("--out", default=None)
    mm.set_defaults(func=cmd_minimax)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        _stderr(f"error: {exc}")
        return EXIT_INPUT
    except (ConfigurationError, TableFileError, CapacityError) as exc:
        _stderr(f"configuration error: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
