"""Command-line front end.

Subcommands::

    twc check <file> [--conditions LIST] [--trials N] [--seed S] [--tol T] [--json]
    twc region <file> --bound inner|outer|both [--grid G] [--directions D] [-o out.csv]
    twc gen <family> [params] -o file.json
    twc madb check|support|gen ...
    twc memsim --n N --seed S
    twc repro <example-id>

Exit codes: 0 success, 2 invalid input or schema, 3 non-convergence,
4 search budget exceeded.  A ``Fails`` verdict is a result, not an error.
The environment variable ``TWC_THREADS`` caps the worker threads used for
independent library calls; output is assembled in input order, so it does not
depend on scheduling.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .chanlib import (
    FIXTURES,
    fixture,
    gen_binary_additive,
    gen_data_access,
    gen_qary_noise_erasure,
    noiseless_echo,
)
from .core import TwoWayChannel
from .errors import InvalidInput, NonConvergence, SearchBudgetExceeded
from .madb import (
    MadbChannel,
    MadbOptions,
    check_madb_exMain,
    check_madb_exMain2,
    check_madb_exSC,
    gen_madb_additive,
    gen_madb_erasure,
    gen_madb_example10,
    madb_support,
)
from .memory import (
    MarkovNoise,
    MemoryChannelSpec,
    check_theorem9_hypotheses,
    example8_simulate,
    theorem9_region,
)
from .region import RegionOptions, compute_region, region_to_csv
from .repro import EXAMPLES, reproduce
from .symmetry import CONDITIONS, DEFAULT_SEARCH_BUDGET, run_all_conditions

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGENCE = 3
EXIT_BUDGET = 4

DEFAULT_TRIALS = 10_000
DEFAULT_TOL = 1e-8
DEFAULT_GRID = 50
DEFAULT_DIRECTIONS = 91
DEFAULT_SEED = 42

MADB_CONDITIONS = ("exSC", "exMain", "exMain2")


class CliError(InvalidInput):
    """A command line that parses but cannot be executed."""


def n_threads() -> int:
    """Worker cap from ``TWC_THREADS`` (default: CPU count)."""
    raw = os.environ.get("TWC_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise CliError(f"TWC_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise CliError(f"TWC_THREADS must be a positive integer, got {raw!r}")
    return n


def parallel_map(fn, items) -> list:
    """``[fn(x) for x in items]`` on up to ``TWC_THREADS`` threads, in input order."""
    items = list(items)
    workers = min(n_threads(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _split(raw: str | None, known) -> tuple:
    if not raw:
        return tuple(known)
    names = tuple(s.strip() for s in raw.split(",") if s.strip())
    bad = [n for n in names if n not in known]
    if bad:
        raise CliError(f"unknown condition(s) {', '.join(bad)}; known: {', '.join(known)}")
    return names


# ---------------------------------------------------------------------------
# check


def _check_madb(ch: MadbChannel, args) -> dict:
    names = _split(args.conditions, MADB_CONDITIONS)
    runners = {
        "exSC": lambda: check_madb_exSC(ch, budget=args.budget),
        "exMain": lambda: check_madb_exMain(ch, args.trials, args.seed, args.tol),
        "exMain2": lambda: check_madb_exMain2(ch, args.trials, args.seed, args.tol),
    }
    reports = parallel_map(lambda n: runners[n](), names)
    return {"kind": "madb", "reports": [r.to_dict() for r in reports]}


def _check_memory(spec: MemoryChannelSpec, args) -> dict:
    from .errors import StructuralViolation

    try:
        check_theorem9_hypotheses(spec)
    except StructuralViolation as exc:
        return {"kind": "memory", "hypotheses": "Fails", "violated": exc.hypothesis}
    reg = theorem9_region(spec)
    return {"kind": "memory", "hypotheses": "Holds",
            "region": {"R1_max": reg.r1_max, "R2_max": reg.r2_max}}


def _format_reports(reports: list[dict]) -> str:
    lines = []
    for r in reports:
        tag = r["verdict"] + ("" if r.get("exact", True) else " (sampled)")
        lines.append(f"{r['condition_id']}: {tag}")
        for note in r.get("notes", []):
            lines.append(f"  note: {note}")
    return "\n".join(lines) + "\n"


def cmd_check(args) -> int:
    ch = io.load(args.file)
    if isinstance(ch, TwoWayChannel):
        names = _split(args.conditions, CONDITIONS)
        res = run_all_conditions(ch, args.trials, args.seed, args.tol, args.budget,
                                 conditions=names)
        out = {"kind": "twc", **res.to_dict()}
    elif isinstance(ch, MadbChannel):
        out = _check_madb(ch, args)
    else:
        out = _check_memory(ch, args)
    if args.json:
        sys.stdout.write(json.dumps(out, indent=1, sort_keys=True) + "\n")
    elif out["kind"] == "memory":
        line = f"hypotheses: {out['hypotheses']}"
        if out["hypotheses"] == "Fails":
            line += f" ({out['violated']})"
        else:
            line += f"\nregion: R1 <= {out['region']['R1_max']:.9g}, R2 <= {out['region']['R2_max']:.9g}"
        sys.stdout.write(line + "\n")
    else:
        text = _format_reports(out["reports"])
        if out["kind"] == "twc":
            text += f"implication audit: {'consistent' if out['consistent'] else 'VIOLATED'}\n"
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# region


def cmd_region(args) -> int:
    ch = io.load(args.file)
    if isinstance(ch, MadbChannel):
        raise CliError("region is planar; use 'twc madb support' for MA/DB channels")
    if isinstance(ch, MemoryChannelSpec):
        reg = theorem9_region(ch)
        regions = {"inner": reg, "outer": reg}
    else:
        opts = RegionOptions(grid=args.grid, seed=args.seed)
        modes = ["inner", "outer"] if args.bound == "both" else [args.bound]
        got = parallel_map(lambda m: compute_region(ch, m, args.directions, opts), modes)
        regions = dict(zip(modes, got))
    if args.bound == "both":
        rows = ["R1,R2,bound"]
        for mode in ("inner", "outer"):
            body = region_to_csv(regions[mode]).splitlines()[1:]
            rows += [f"{line},{mode}" for line in body]
        text = "\n".join(rows) + "\n"
    else:
        text = region_to_csv(regions[args.bound])
    _emit(text, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen


def _stay_chain(n: int, stay: float) -> MarkovNoise:
    if n == 1:
        return MarkovNoise(np.ones((1, 1)))
    off = (1 - stay) / (n - 1)
    return MarkovNoise(np.full((n, n), off) + np.eye(n) * (stay - off))


def gen_memory_markov(q: int, stay1: float, stay2: float) -> MemoryChannelSpec:
    """Additive q-ary TWC whose noises are symmetric Markov chains.

    ``Y1 = X2 + Z1`` and ``Y2 = X1 + Z2`` (mod q); each noise stays in its
    state with probability ``stay`` and otherwise moves uniformly.
    """
    a, b, z = np.meshgrid(np.arange(q), np.arange(q), np.arange(q), indexing="ij")
    f1 = (b + z) % q   # F1[x1, x2, z1]
    f2 = (a + z) % q   # F2[x1, x2, z2]
    return MemoryChannelSpec(f1, f2, (_stay_chain(q, stay1), _stay_chain(q, stay2)), q, q)


def _pmf(raw: str | None, q: int, name: str):
    if raw is None:
        return None
    try:
        vals = [float(v) for v in raw.split(",")]
    except ValueError:
        raise CliError(f"--{name} must be a comma-separated list of numbers") from None
    if len(vals) != q:
        raise CliError(f"--{name} needs {q} entries, got {len(vals)}")
    return vals


def _build(family: str, a) -> object:
    if family == "qary-erasure":
        return gen_qary_noise_erasure(a.q, a.a1, a.e1, a.a2, a.e2)
    if family == "binary-additive":
        return gen_binary_additive(a.z1, a.z2)
    if family == "data-access":
        return gen_data_access(a.m, a.a1, a.e1, a.a2, a.e2)
    if family == "fixture":
        return fixture(a.name)
    if family == "echo":
        return noiseless_echo(a.q)
    if family == "madb-additive":
        pz3 = _pmf(a.pz3, a.q, "pz3")
        if pz3 is None:
            raise CliError("madb-additive needs --pz3")
        return gen_madb_additive(a.q, _pmf(a.pz1, a.q, "pz1") or _point(a.q),
                                 _pmf(a.pz2, a.q, "pz2") or _point(a.q), pz3)
    if family == "madb-example10":
        return gen_madb_example10(a.eps, _pmf(a.pz1, 2, "pz1"), _pmf(a.pz2, 2, "pz2"))
    if family == "madb-erasure":
        return gen_madb_erasure(a.eps, _pmf(a.pz1, 2, "pz1"), _pmf(a.pz2, 2, "pz2"))
    if family == "memory-markov":
        return gen_memory_markov(a.q, a.stay1, a.stay2)
    raise CliError(f"unknown family {family!r}")


def _point(q: int) -> list:
    return [1.0] + [0.0] * (q - 1)


GEN_FAMILIES = ("qary-erasure", "binary-additive", "data-access", "fixture", "echo",
                "madb-additive", "madb-example10", "madb-erasure", "memory-markov")


def _add_gen_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q", type=int, default=2, help="alphabet size")
    p.add_argument("--m", type=int, default=1, help="data-access block length")
    for name in ("a1", "e1", "a2", "e2", "z1", "z2", "eps"):
        p.add_argument(f"--{name}", type=float, default=0.0)
    p.add_argument("--stay1", type=float, default=0.9)
    p.add_argument("--stay2", type=float, default=0.9)
    p.add_argument("--name", default="motivational", help=f"fixture: {', '.join(FIXTURES)}")
    for name in ("pz1", "pz2", "pz3"):
        p.add_argument(f"--{name}", default=None, help="comma-separated pmf")
    p.add_argument("-o", "--output", default=None, help="output file (default stdout)")


def cmd_gen(args) -> int:
    obj = _build(args.family, args)
    _emit(io.dumps(obj, args.family), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# madb


def _load_madb(path) -> MadbChannel:
    ch = io.load(path)
    if not isinstance(ch, MadbChannel):
        raise CliError(f"{path} is not an MA/DB channel file")
    return ch


def _directions(raw: str) -> list:
    out = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            w = [float(v) for v in chunk.split(",")]
        except ValueError:
            raise CliError(f"bad direction {chunk!r}") from None
        if len(w) != 4:
            raise CliError(f"direction {chunk!r} needs 4 weights w13,w23,w31,w32")
        out.append(w)
    if not out:
        raise CliError("no directions given")
    return out


def cmd_madb(args) -> int:
    if args.madb_cmd == "gen":
        args.family = "madb-" + args.example
        return cmd_gen(args)
    ch = _load_madb(args.file)
    if args.madb_cmd == "check":
        out = _check_madb(ch, args)
        if args.json:
            sys.stdout.write(json.dumps(out, indent=1, sort_keys=True) + "\n")
        else:
            sys.stdout.write(_format_reports(out["reports"]))
        return EXIT_OK
    opts = MadbOptions(n_starts=args.starts, seed=args.seed)
    dirs = _directions(args.directions)
    jobs = [(w, m) for w in dirs for m in ("inner", "outer")]
    vals = parallel_map(lambda job: madb_support(ch, job[0], job[1], opts).value, jobs)
    lines = ["w13,w23,w31,w32,inner,outer"]
    for i, w in enumerate(dirs):
        lines.append(",".join(f"{v:.9g}" for v in (*w, vals[2 * i], vals[2 * i + 1])))
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# memsim and repro


def cmd_memsim(args) -> int:
    rep = example8_simulate(args.n, args.seed)
    out = {"errors": rep.errors, "rate": rep.rate, "shannon_type_bound": rep.shannon_type_bound}
    sys.stdout.write(json.dumps(out, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_repro(args) -> int:
    ids = list(EXAMPLES) if args.example == "all" else [args.example]
    reps = [reproduce(e, args.trials, args.seed) for e in ids]
    sys.stdout.write("\n\n".join(r.summary() for r in reps) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_check_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--conditions", default=None, help="comma-separated condition ids")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--budget", type=int, default=DEFAULT_SEARCH_BUDGET,
                   help="largest permutation search allowed")
    p.add_argument("--json", action="store_true", help="emit JSON reports")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twc", description="Two-way channel toolkit.")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("check", help="run the symmetry condition checkers")
    p.add_argument("file")
    _add_check_opts(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("region", help="export an inner/outer rate region as CSV")
    p.add_argument("file")
    p.add_argument("--bound", choices=("inner", "outer", "both"), default="inner")
    p.add_argument("--grid", type=int, default=DEFAULT_GRID)
    p.add_argument("--directions", type=int, default=DEFAULT_DIRECTIONS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("gen", help="write a channel file from a generator family")
    p.add_argument("family", choices=GEN_FAMILIES)
    _add_gen_params(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("madb", help="three-user MA/DB channels")
    msub = p.add_subparsers(dest="madb_cmd", required=True)
    m = msub.add_parser("check")
    m.add_argument("file")
    _add_check_opts(m)
    m.set_defaults(func=cmd_madb)
    m = msub.add_parser("support")
    m.add_argument("file")
    m.add_argument("--directions", default="1,1,0,0",
                   help="semicolon-separated weight vectors w13,w23,w31,w32")
    m.add_argument("--starts", type=int, default=6)
    m.add_argument("--seed", type=int, default=DEFAULT_SEED)
    m.add_argument("-o", "--output", default=None)
    m.set_defaults(func=cmd_madb)
    m = msub.add_parser("gen")
    m.add_argument("example", choices=("additive", "example10", "erasure"))
    _add_gen_params(m)
    m.set_defaults(func=cmd_madb)

    p = sub.add_parser("memsim", help="simulate the adaptive scheme over the memory example")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_memsim)

    p = sub.add_parser("repro", help="re-run a worked example and compare with its claims")
    p.add_argument("example", choices=(*EXAMPLES, "all"))
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_repro)
    return parser


def main(argv=None) -> int:
    """Run the CLI and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors exit with 2
        return int(exc.code or 0)
    try:
        n_threads()  # reject a malformed TWC_THREADS before any work
        return args.func(args)
    except InvalidInput as exc:
        print(f"twc: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NonConvergence as exc:
        print(f"twc: did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except SearchBudgetExceeded as exc:
        print(f"twc: search budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET


run_cli = main


if __name__ == "__main__":
    sys.exit(main())
