"""Command-line surface: simulation campaigns, chain sampling, verification.

Commands
--------
simulate   forward trees conditioned on survival; one CSV row per run.
chain      backward-chain runs (truncated, fixed-length, or closed-form).
verify     exact cross-checks; nonzero exit on any failing check.
eta        dump the per-level spine-sibling law tables.
tail       dump the tail curve of the first coalescent time.

CSV schemas (also shown by ``--help`` of each command):
  simulate / chain:  run_id,K,A       A is semicolon-joined, empty when K=1
  chain --trace:     step,A,state     state entries semicolon-joined
  eta:               level,k,p
  tail:              n,tail

Exit codes: 0 ok, 1 check or validation failure, 2 configuration error,
3 degenerate environment, 4 enumeration guard tripped.
"""

from __future__ import annotations

import argparse
import io
import json
import sys

from .chains import b_run, d_run, lf_run, validate_b_run, validate_d_run
from .environment import Environment, load_environment
from .errors import (
    AttemptCapError,
    ChainStateError,
    DegenerateEnvironmentError,
    EnumerationGuardError,
    EnvFormatError,
    GwcoalError,
    NotLinearFractionalError,
)
from .pgf import a1_tail, eta_law_at_depth
from .sampling import indexed_map, stream_for_run
from .tree import condition_on_survival, coalescent_times
from .verify import run_verify_suite, figure1_consistency

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3
EXIT_GUARD = 4


# ---------------------------------------------------------------------------
# Option plumbing.
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, needs_env: bool = True) -> None:
    p.add_argument("--env", required=needs_env, help="environment JSON file")
    p.add_argument("--seed", type=int, default=0, help="64-bit master seed")
    p.add_argument("--samples", type=int, default=1, help="number of runs")
    p.add_argument(
        "--horizon",
        type=int,
        default=None,
        help="override: keep only the newest H generations of the environment",
    )
    p.add_argument("--threads", type=int, default=1, help="worker threads")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gwcoal",
        description="Branching-tree genealogies and their backward-chain representations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser(
        "simulate",
        help="forward trees conditioned on survival",
        description="Simulates trees conditioned on at least one survivor and "
        "writes one row per run: run_id,K,A (A semicolon-joined).",
    )
    _add_common(p_sim)
    p_sim.add_argument(
        "--max-attempts",
        type=int,
        default=100_000,
        help="rejection-sampling cap per run",
    )
    p_sim.set_defaults(func=cmd_simulate)

    p_chain = sub.add_parser(
        "chain",
        help="backward-chain genealogy sampling",
        description="Runs a backward chain per sample and writes run_id,K,A "
        "rows, or a step,A,state trace with --trace (single run only).",
    )
    _add_common(p_chain)
    p_chain.add_argument(
        "--process",
        choices=("b", "d", "lf"),
        default="b",
        help="truncated chain, fixed-length chain, or LF closed form",
    )
    p_chain.add_argument(
        "--max-individuals",
        type=int,
        default=1_000_000,
        help="abort a run that emits this many values without terminating",
    )
    p_chain.add_argument(
        "--trace",
        action="store_true",
        help="emit per-step states instead of summaries (requires --samples 1)",
    )
    p_chain.add_argument(
        "--validate",
        action="store_true",
        help="check structural invariants along every run (exit 1 on violation)",
    )
    p_chain.set_defaults(func=cmd_chain)

    p_ver = sub.add_parser(
        "verify",
        help="exact cross-checks of tree law vs chain law",
        description="Runs the verification battery and prints one PASS/FAIL "
        "line per check.",
    )
    _add_common(p_ver, needs_env=False)
    p_ver.add_argument("--figure1", action="store_true",
                       help="only re-derive the embedded reference genealogy")
    p_ver.add_argument("--witness", action="store_true",
                       help="also search for a history dependence of the reduced sequence")
    p_ver.add_argument("--witness-mc-samples", type=int, default=0,
                       help="cross-validate a found witness with this many simulations")
    p_ver.add_argument("--rational", action="store_true",
                       help="repeat the main comparison in exact rational arithmetic")
    p_ver.add_argument("--guard", type=int, default=2_000_000,
                       help="enumeration work budget")
    p_ver.set_defaults(func=cmd_verify)

    p_eta = sub.add_parser(
        "eta",
        help="dump spine-sibling law tables",
        description="Writes the spine-sibling law at each ancestor level as "
        "level,k,p rows.",
    )
    _add_common(p_eta)
    p_eta.add_argument("--tol", type=float, default=1e-13,
                       help="tail mass cutoff for geometric laws")
    p_eta.set_defaults(func=cmd_eta)

    p_tail = sub.add_parser(
        "tail",
        help="dump the first-coalescent-time tail curve",
        description="Writes n,tail rows for n = 1..horizon, where tail is the "
        "probability that the first coalescent time exceeds n.",
    )
    _add_common(p_tail)
    p_tail.set_defaults(func=cmd_tail)

    return parser


def _load_env(args) -> Environment:
    if args.env is None:
        raise EnvFormatError("this command requires --env")
    env = load_environment(args.env)
    if args.horizon is not None:
        if not 1 <= args.horizon <= env.horizon:
            raise EnvFormatError(
                f"--horizon must be in 1..{env.horizon}, got {args.horizon}"
            )
        env = env.shift(env.horizon - args.horizon)
    return env


def _check_campaign(args) -> None:
    if args.samples < 1:
        raise EnvFormatError("--samples must be >= 1")
    if args.threads < 1:
        raise EnvFormatError("--threads must be >= 1")
    if args.seed < 0:
        raise EnvFormatError("--seed must be >= 0")


def _emit(args, text: str) -> None:
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


def _rows_to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(str(x) for x in row) + "\n")
    return buf.getvalue()


def _rows_to_json(header: list[str], rows: list[list]) -> str:
    docs = [dict(zip(header, row)) for row in rows]
    return json.dumps(docs, sort_keys=True, indent=2) + "\n"


def _write_rows(args, header: list[str], rows: list[list]) -> None:
    if args.format == "csv":
        _emit(args, _rows_to_csv(header, rows))
    else:
        _emit(args, _rows_to_json(header, rows))


# ---------------------------------------------------------------------------
# Commands.
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    env = _load_env(args)
    _check_campaign(args)

    def one(run_id: int):
        stream = stream_for_run(args.seed, run_id)
        tree = condition_on_survival(env, stream, max_attempts=args.max_attempts)
        cpp = coalescent_times(tree)
        return [run_id, cpp.k, ";".join(str(a) for a in cpp.a)]

    rows = indexed_map(one, args.samples, args.threads)
    _write_rows(args, ["run_id", "K", "A"], rows)
    ks = [row[1] for row in rows]
    mean_k = sum(ks) / len(ks)
    # K = 1 means the first coalescent time lies beyond every level
    tails = []
    for n in range(1, env.horizon + 1):
        hits = sum(1 for row in rows if row[1] == 1 or int(row[2].split(";")[0]) > n)
        tails.append(f"P(A1>{n})={hits / len(rows):.6f}")
    print(f"runs={len(rows)} mean_K={mean_k:.6f} " + " ".join(tails), file=sys.stderr)
    return EXIT_OK


def _run_chain(env: Environment, args, run_id: int):
    stream = stream_for_run(args.seed, run_id)
    if args.process == "b":
        return b_run(env, stream, max_individuals=args.max_individuals)
    if args.process == "d":
        return d_run(env, stream, max_individuals=args.max_individuals)
    return lf_run(env, stream, max_individuals=args.max_individuals)


def cmd_chain(args) -> int:
    env = _load_env(args)
    _check_campaign(args)
    if args.trace and args.samples != 1:
        raise EnvFormatError("--trace requires --samples 1")
    if args.process == "lf" and not env.is_linear_fractional:
        raise NotLinearFractionalError(
            "--process lf requires every law in the environment to be linear fractional"
        )

    runs = indexed_map(lambda i: _run_chain(env, args, i), args.samples, args.threads)
    if args.validate:
        for run in runs:
            if args.process == "b":
                validate_b_run(run, env.horizon)
            elif args.process == "d":
                validate_d_run(run, env.horizon)
    if args.trace:
        run = runs[0]
        rows = []
        for step, a in enumerate(run.a_values, start=1):
            if args.process == "lf":
                state = ""
            elif args.process == "b":
                state = ";".join(str(v) for v in run.states[step - 1].b)
            else:
                state = ";".join(str(v) for v in run.states[step - 1])
            rows.append([step, a, state])
        _write_rows(args, ["step", "A", "state"], rows)
    else:
        rows = []
        for run_id, run in enumerate(runs):
            k = run.k if run.terminated else ""
            rows.append([run_id, k, ";".join(str(a) for a in run.a_values)])
        _write_rows(args, ["run_id", "K", "A"], rows)
    unfinished = sum(1 for r in runs if not r.terminated)
    print(f"runs={len(runs)} unfinished={unfinished}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.figure1:
        report = figure1_consistency()
        line = "PASS" if report.passed else "FAIL"
        print(f"{line} reference-table " + ("; ".join(report.mismatches) or "all rows re-derived"))
        return EXIT_OK if report.passed else EXIT_CHECK_FAILED
    env = _load_env(args)
    results = run_verify_suite(
        env,
        rational=args.rational,
        witness=args.witness,
        witness_mc_samples=args.witness_mc_samples,
        seed=args.seed,
        guard=args.guard,
    )
    rows = []
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {res.name} metric={res.metric:.3e} threshold={res.threshold:.3e} {res.detail}")
        rows.append([status, res.name, repr(res.metric), repr(res.threshold), res.detail])
    if args.out is not None:
        if args.format == "json":
            _emit(args, json.dumps(
                [json.loads(r.to_json()) for r in results], sort_keys=True, indent=2
            ) + "\n")
        else:
            _write_rows(args, ["status", "name", "metric", "threshold", "detail"], rows)
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


def cmd_eta(args) -> int:
    env = _load_env(args)
    rows = []
    for level in range(1, env.horizon + 1):
        law = eta_law_at_depth(env, level)
        if law.geom is not None:
            law = law.materialized(args.tol)
        for k, p in enumerate(law.probs):
            rows.append([level, k, repr(float(p))])
    _write_rows(args, ["level", "k", "p"], rows)
    return EXIT_OK


def cmd_tail(args) -> int:
    env = _load_env(args)
    rows = []
    for n in range(1, env.horizon + 1):
        rows.append([n, repr(float(a1_tail(env, n)))])
    _write_rows(args, ["n", "tail"], rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry points.
# ---------------------------------------------------------------------------


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else EXIT_CONFIG
        return EXIT_OK if code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except (EnvFormatError, NotLinearFractionalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, IsADirectoryError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateEnvironmentError, AttemptCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except EnumerationGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except ChainStateError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except GwcoalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
