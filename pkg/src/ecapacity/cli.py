"""Command-line front end.

Subcommands::

    ecapacity capacity --channel W.json
    ecapacity curve --channel W.json --kind sp [--emin 0 --emax 1 --epoints 64 | --egrid ...]
    ecapacity ecrit --channel W.json
    ecapacity types-verify --N 12 --kx 2 [--ky 2]
    ecapacity simulate --channel W.json --codebook C.txt --rule ml --trials 10000 --seed 0

Exit codes are 0 on success, 2 on bad input and 3 when a solver or a
verification step fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .decoding import EXHAUSTIVE_LIMIT, DecodeRule, exhaustive_error_probability, monte_carlo_error
from .errors import CapabilityError, ResourceLimitError, SolverError, ValidationError
from .exponents import (DEFAULT_CONFIG, THREADS_ENV, ExponentKind, SolverConfig, _blahut_arimoto,
                        critical_reliability, default_grid_end, maximize_over_inputs, point_solver,
                        sphere_packing_exponent, tilted_solution)
from .prob_core import Channel, _mutual_information, channel_digest
from .types_lab import Codebook, verify_types

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_FAILURE = 3
DEFAULT_POINTS = 64


class InputError(ValueError):
    """Malformed file or flag; maps to exit code 2."""


# ---------------------------------------------------------------------------
# file formats


def emit_channel(W, name: str | None = None) -> str:
    """JSON text for a channel; ``parse_channel`` reads it back bit-exactly."""
    w = W.rows if isinstance(W, Channel) else Channel(W).rows
    obj = {"input_size": w.shape[0], "output_size": w.shape[1],
           "rows": [[float(v) for v in row] for row in w]}
    if name is not None:
        obj["name"] = name
    return json.dumps(obj, indent=2) + "\n"


def _parse_csv_rows(text: str) -> list[list[float]]:
    rows = []
    for lineno, rec in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not rec or all(not f.strip() for f in rec) or rec[0].lstrip().startswith("#"):
            continue
        row = []
        for col, field in enumerate(rec, start=1):
            try:
                row.append(float(field))
            except ValueError:
                raise InputError(f"line {lineno}, field {col}: not a number: {field.strip()!r}") from None
        rows.append(row)
    if not rows:
        raise InputError("no channel rows found")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InputError(f"rows have differing lengths {sorted(widths)}")
    return rows


def parse_channel(text: str) -> tuple[Channel, str | None]:
    """Parse a JSON channel object, or bare CSV rows with sizes inferred."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        for key in ("input_size", "output_size", "rows"):
            if key not in obj:
                raise InputError(f"missing field {key!r}")
        rows = obj["rows"]
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise InputError("field 'rows' must be an array of arrays")
        for i, r in enumerate(rows):
            for j, v in enumerate(r):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise InputError(f"rows[{i}][{j}]: not a number: {v!r}")
        kx, ky = obj["input_size"], obj["output_size"]
        if len(rows) != kx:
            raise InputError(f"field 'input_size' is {kx} but {len(rows)} rows given")
        for i, r in enumerate(rows):
            if len(r) != ky:
                raise InputError(f"rows[{i}] has {len(r)} entries, 'output_size' is {ky}")
        name = obj.get("name")
    else:
        rows, name = _parse_csv_rows(text), None
    try:
        return Channel(np.array(rows, dtype=float)), name
    except ValidationError as exc:
        raise InputError(str(exc)) from None


def load_channel(path) -> tuple[Channel, str | None]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read channel file {path}: {exc.strerror}") from None
    return parse_channel(text)


def parse_codebook(text: str) -> Codebook:
    """JSON ``{"words": [...]}`` or one codeword per line.

    A line is either a run of digits (``0110``) or comma/space separated
    symbols.
    """
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)["words"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InputError(f"codebook JSON needs a 'words' array: {exc}") from None
        lines = [w if isinstance(w, str) else list(w) for w in raw]
    else:
        lines = [ln.strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith("#")]
    words = []
    for n, item in enumerate(lines, start=1):
        try:
            if isinstance(item, str):
                parts = item.replace(",", " ").split()
                word = [int(c) for c in parts[0]] if len(parts) == 1 else [int(c) for c in parts]
            else:
                word = [int(c) for c in item]
        except ValueError:
            raise InputError(f"codeword {n}: non-integer symbol in {item!r}") from None
        words.append(word)
    try:
        return Codebook.from_words(words)
    except ValidationError as exc:
        raise InputError(str(exc)) from None


def format_curve(points, fmt: str) -> str:
    if fmt == "json":
        return json.dumps([{"E": float(e), "R": float(r)} for e, r in points], indent=2) + "\n"
    return "E,R\n" + "".join(f"{e:.17g},{r:.17g}\n" for e, r in points)


# ---------------------------------------------------------------------------
# helpers


def _config(args) -> SolverConfig:
    cfg = DEFAULT_CONFIG
    if getattr(args, "tol", None) is not None:
        if not args.tol > 0:
            raise InputError("--tol must be positive")
        cfg = replace(cfg, inner_tolerance=args.tol)
    return cfg


def _grid(args, w, cfg) -> tuple[list[float], dict]:
    if args.egrid is not None:
        try:
            grid = [float(t) for t in args.egrid.split(",") if t.strip()]
        except ValueError:
            raise InputError(f"--egrid: cannot parse {args.egrid!r}") from None
        if not grid:
            raise InputError("--egrid is empty")
        if any(not math.isfinite(e) or e < 0 for e in grid):
            raise InputError("--egrid values must be finite and nonnegative")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise InputError("--egrid must be strictly increasing")
        return grid, {"explicit": grid}
    count = DEFAULT_POINTS if args.epoints is None else args.epoints
    emin = 0.0 if args.emin is None else args.emin
    emax = default_grid_end(w, cfg) if args.emax is None else args.emax
    if count < 1:
        raise InputError("--epoints must be at least 1")
    if not (math.isfinite(emin) and math.isfinite(emax)) or emin < 0:
        raise InputError("--emin must be nonnegative and both grid ends finite")
    if count > 1 and not emin < emax:
        raise InputError("--emin must be below --emax when --epoints > 1")
    grid = [emin] if count == 1 else [float(e) for e in np.linspace(emin, emax, count)]
    return grid, {"min": emin, "max": emax, "count": count}


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _fmt_vec(v) -> str:
    return "[" + ", ".join(_fmt(float(t)) for t in v) + "]"


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# ---------------------------------------------------------------------------
# commands


def cmd_capacity(args) -> int:
    W, name = load_channel(args.channel)
    tol = 1e-12 if args.tol is None else args.tol
    if not tol > 0:
        raise InputError("--tol must be positive")
    p, iters, gap = _blahut_arimoto(W.rows, tol, 1_000_000)
    lines = [
        f"channel: {name or args.channel}",
        f"capacity_bits: {_fmt(_mutual_information(p, W.rows))}",
        f"optimal_input: {_fmt_vec(p)}",
        f"iterations: {iters}",
        f"bound_gap: {gap:.3e}",
        f"tolerance: {tol:g}",
    ]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_curve(args) -> int:
    W, name = load_channel(args.channel)
    cfg = _config(args)
    grid, grid_meta = _grid(args, W, cfg)
    kind = ExponentKind(args.kind)
    fn = point_solver(kind, W, cfg)
    vals, failures = [], []
    for i, e in enumerate(grid):
        try:
            vals.append(maximize_over_inputs(fn, e, W, cfg)[0])
        except (SolverError, CapabilityError) as exc:
            vals.append(math.nan)
            failures.append({"index": i, "E": e, "error": str(exc)})
    # best value at smaller E is never below a larger-E value
    for i in range(len(vals) - 2, -1, -1):
        if not math.isnan(vals[i + 1]) and vals[i] < vals[i + 1]:
            vals[i] = vals[i + 1]
    meta = {
        "tool": "ecapacity",
        "version": __version__,
        "command": "curve",
        "kind": kind.value,
        "channel": {"name": name, "digest": channel_digest(W),
                    "input_size": W.input_size, "output_size": W.output_size},
        "grid": grid_meta,
        "config": asdict(cfg),
        "maximized_over_inputs": True,
        "interpolation": "linear between nodes",
        "threads_env": THREADS_ENV,
        "failures": failures,
    }
    _emit(format_curve(zip(grid, vals), args.format), args.out)
    meta_text = json.dumps(meta, indent=2, sort_keys=True) + "\n"
    if args.out is None:
        sys.stderr.write(meta_text)
    else:
        Path(str(args.out) + ".meta.json").write_text(meta_text)
    for f in failures:
        print(f"error: grid index {f['index']} (E={f['E']!r}): {f['error']}", file=sys.stderr)
    return EXIT_FAILURE if failures else EXIT_OK


def max_critical_reliability(W, cfg: SolverConfig = DEFAULT_CONFIG):
    """``max_P E_cr(P, W)``, its maximizer, and ``R_sp`` there.

    The search uses the multiplier characterization (the test channel at
    ``s = 1/2`` sits where the curve has slope -1); the reported value is
    then cross-checked by locating the slope numerically at the maximizer.
    """
    w = W.rows if isinstance(W, Channel) else Channel(W).rows

    def fn(p, _E):
        if _mutual_information(p, w) <= 1e-15:
            return 0.0  # R_sp is identically 0
        return tilted_solution(p, w, 0.5, cfg)[1]

    e_cr, P = maximize_over_inputs(fn, 0.0, W, cfg)
    r = sphere_packing_exponent(P, e_cr, W, cfg)
    e_slope = critical_reliability(P, W, cfg)
    return e_cr, P, r, e_slope


def cmd_ecrit(args) -> int:
    W, name = load_channel(args.channel)
    cfg = _config(args)
    e_cr, P, r, e_slope = max_critical_reliability(W, cfg)
    lines = [
        f"channel: {name or args.channel}",
        f"critical_reliability: {_fmt(e_cr)}",
        f"sphere_packing_rate: {_fmt(r)}",
        f"optimal_input: {_fmt_vec(P.probs)}",
        f"slope_search_value: {_fmt(e_slope)}",
    ]
    if e_cr == 0.0:
        lines.append("note: the sphere-packing slope never reaches -1 above E=0; E_cr reported as 0")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_types_verify(args) -> int:
    if args.N < 1 or args.kx < 1 or (args.ky is not None and args.ky < 1):
        raise InputError("--N, --kx and --ky must be positive")
    checks = verify_types(args.N, args.kx, args.ky, instances=args.instances, seed=args.seed)
    lines = [f"{c.status.upper():4s} {c.name}" + (f": {c.detail}" if c.detail else "") for c in checks]
    failed = sum(c.status == "fail" for c in checks)
    lines.append(f"summary: {len(checks) - failed} of {len(checks)} checks without failure")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_FAILURE if failed else EXIT_OK


def cmd_simulate(args) -> int:
    W, name = load_channel(args.channel)
    try:
        book = parse_codebook(Path(args.codebook).read_text())
    except OSError as exc:
        raise InputError(f"cannot read codebook {args.codebook}: {exc.strerror}") from None
    top = max(max(w) for w in book.words)
    if top >= W.input_size:
        raise InputError(f"codeword symbol {top} outside the input alphabet of size {W.input_size}")
    rule = DecodeRule(args.rule)
    if args.trials < 1:
        raise InputError("--trials must be at least 1")
    lines = [f"channel: {name or args.channel}", f"rule: {rule.value}",
             f"codewords: {book.M}", f"blocklength: {book.N}"]
    if W.output_size ** book.N * book.M <= EXHAUSTIVE_LIMIT:
        res = exhaustive_error_probability(book, W, rule)
        lines += ["method: exhaustive", f"max_error: {res.max_error:.17g}",
                  f"avg_error: {res.avg_error:.17g}"]
    else:
        res = monte_carlo_error(book, W, rule, args.trials, args.seed)
        lines += ["method: monte-carlo", f"trials: {args.trials}", f"seed: {args.seed}",
                  f"max_error: {res.max_error:.17g}", f"avg_error: {res.avg_error:.17g}",
                  f"half_width_95: {res.half_width:.17g}"]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ecapacity", description="E-capacity bounds of discrete memoryless channels")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, channel=True):
        if channel:
            p.add_argument("--channel", required=True, help="channel file (JSON object or CSV rows)")
        p.add_argument("--out", help="write the result here instead of stdout")
        p.add_argument("--tol", type=float, help="solver tolerance override")

    p = sub.add_parser("capacity", help="capacity by Blahut-Arimoto")
    common(p)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("curve", help="sample a bound function on an E grid")
    common(p)
    p.add_argument("--kind", choices=[k.value for k in ExponentKind], default="sp")
    p.add_argument("--emin", type=float)
    p.add_argument("--emax", type=float)
    p.add_argument("--epoints", type=int)
    p.add_argument("--egrid", help="explicit comma-separated grid")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("ecrit", help="critical reliability maximized over inputs")
    common(p)
    p.set_defaults(func=cmd_ecrit)

    p = sub.add_parser("types-verify", help="exact method-of-types checks")
    common(p, channel=False)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--kx", type=int, default=2)
    p.add_argument("--ky", type=int)
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_types_verify)

    p = sub.add_parser("simulate", help="block error probability of a codebook")
    common(p)
    p.add_argument("--codebook", required=True)
    p.add_argument("--rule", choices=[r.value for r in DecodeRule], default="ml")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, CapabilityError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
