"""Command-line front end: run programs, compare engines, verify bounds, sweep.

Exit codes: 0 success, 1 parse/validate failure, 2 update clash,
3 fuel exhausted, 4 engine divergence, 5 bound violation.
"""

from __future__ import annotations

import argparse
import random
import sys
from importlib import resources
from pathlib import Path

from .cost import DEFAULT_BOUNDS, emit_report, run_all_checks
from .engine import CLASH, FUEL_EXHAUSTED, OUTPUT, UNDEF_OUTPUT, compare_engines, run
from .syntax import Program, parse_program_file, validate_program
from .terms import (
    Term,
    TermSyntaxError,
    Vocabulary,
    decode_nat_binary,
    encode_nat_binary,
    format_term,
    parse_term,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CLASH = 2
EXIT_FUEL = 3
EXIT_DIVERGED = 4
EXIT_BOUND = 5

BUNDLED = {
    "toggle": "two-rule flip-flop; terminates with output d0(eps)",
    "bin_succ": "successor on binary numerals (enumerate-and-convert)",
    "bin_add": "addition on binary numerals via unary counting",
    "bin_mul": "multiplication with oracles dec/addu/enc (repeated addition)",
    "str_reverse": "string reversal over the two-letter alphabet a, b",
    "merge_demo": "builds f(c,c) and g(c,c) in one store: 4 vertices, 4 edges",
}


def bundled_dir() -> Path:
    return Path(resources.files("esmtangle") / "programs")


def resolve_program(name: str) -> Path | None:
    path = Path(name)
    if path.is_file():
        return path
    stem = name.removesuffix(".esm")
    if stem in BUNDLED:
        cand = bundled_dir() / f"{stem}.esm"
        if cand.is_file():
            return cand
    return None


def load_program(name: str) -> Program:
    path = resolve_program(name)
    if path is None:
        raise SystemExit(_fail(f"program not found: {name}"))
    try:
        program = parse_program_file(path)
    except TermSyntaxError as exc:
        raise SystemExit(_fail(f"{path}: {exc}"))
    diags = validate_program(program)
    if diags:
        for d in diags:
            print(f"{path}: {d}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    return program


def _fail(message: str) -> int:
    print(message, file=sys.stderr)
    return EXIT_USAGE


# --- Input codecs -----------------------------------------------------------------
# Inferred from the program's constructor signature; binary numerals win when
# several match (bin_* programs also carry the unary counters).


def input_codec(vocab: Vocabulary) -> str | None:
    def has(name, arity, kind="constructor"):
        s = vocab.get(name)
        return s is not None and s.arity == arity and s.kind == kind

    if has("eps", 0) and has("d0", 1) and has("d1", 1):
        return "binary"
    if has("eps", 0) and has("a", 1) and has("b", 1):
        return "string"
    if has("zero", 0) and has("s", 1):
        return "unary"
    return None


def encode_size(vocab: Vocabulary, codec: str, size: int) -> Term:
    if codec == "binary":
        return encode_nat_binary(size, vocab)
    if codec == "unary":
        t = Term(vocab.get("zero"))
        for _ in range(size):
            t = Term(vocab.get("s"), (t,))
        return t
    if codec == "string":
        t = Term(vocab.get("eps"))
        for i in range(size):
            t = Term(vocab.get("a" if i % 2 else "b"), (t,))
        return t
    raise ValueError(f"no input codec for {codec!r}")


def encode_nat(vocab: Vocabulary, value: int) -> Term:
    codec = input_codec(vocab)
    if codec == "binary":
        return encode_nat_binary(value, vocab)
    if codec == "unary":
        return encode_size(vocab, "unary", value)
    raise ValueError("program has no numeral input codec")


def decode_nat(vocab: Vocabulary, t: Term) -> int | None:
    try:
        return decode_nat_binary(t)
    except ValueError:
        pass
    n = 0
    while t.head.name == "s" and t.head.arity == 1:
        n += 1
        t = t.args[0]
    if t.head.name == "zero" and t.head.arity == 0:
        return n
    return None


def random_input(vocab: Vocabulary, rng: random.Random) -> Term:
    codec = input_codec(vocab)
    if codec == "binary":
        return encode_nat_binary(rng.randint(1, 16), vocab)
    if codec == "unary":
        return encode_size(vocab, "unary", rng.randint(0, 24))
    if codec == "string":
        length = rng.randint(0, 5)
        t = Term(vocab.get("eps"))
        for _ in range(length):
            t = Term(vocab.get(rng.choice("ab")), (t,))
        return t
    raise ValueError("program has no input codec; give explicit --input")


def parse_inputs(program: Program, pairs: list[str], as_nat: bool) -> list[Term]:
    given: dict[str, Term] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"--input expects NAME=TERM, got {pair!r}")
        name, _, text = pair.partition("=")
        name = name.strip()
        if program.vocab.get(name) is None or not any(
            s.name == name for s in program.inputs
        ):
            raise ValueError(f"{name!r} is not an input of this program")
        if name in given:
            raise ValueError(f"duplicate --input for {name!r}")
        if as_nat:
            given[name] = encode_nat(program.vocab, int(text))
        else:
            given[name] = parse_term(text, program.vocab)
    missing = [s.name for s in program.inputs if s.name not in given]
    if missing:
        raise ValueError(f"missing --input for: {', '.join(missing)}")
    return [given[s.name] for s in program.inputs]


def sweep_sizes(range_text: str) -> list[int]:
    lo, _, hi = range_text.partition(":")
    lo_v, hi_v = int(lo), int(hi)
    if lo_v < 1 or hi_v < lo_v:
        raise ValueError(f"bad sweep range {range_text!r}")
    sizes = []
    size = lo_v
    while size <= hi_v:
        sizes.append(size)
        size *= 2
    return sizes


# --- Subcommands --------------------------------------------------------------------


def _write_report(args, report) -> None:
    if args.report:
        Path(args.report).write_bytes(emit_report(report, format=args.format))


def _outcome_exit(result) -> int:
    if result.outcome == CLASH:
        print(f"clash at location {result.clash}", file=sys.stderr)
        return EXIT_CLASH
    if result.outcome == FUEL_EXHAUSTED:
        print("fuel exhausted", file=sys.stderr)
        return EXIT_FUEL
    return EXIT_OK


def cmd_run(args) -> int:
    program = load_program(args.program)
    try:
        inputs = parse_inputs(program, args.input, args.nat)
    except (ValueError, TermSyntaxError) as exc:
        return _fail(str(exc))
    result = run(
        program, inputs, fuel=args.fuel, engine=args.engine,
        oracle_mode=args.oracle_cost,
    )
    if result.outcome == OUTPUT:
        if args.nat:
            value = decode_nat(program.vocab, result.output)
            shown = str(value) if value is not None else format_term(result.output)
        else:
            shown = format_term(result.output)
        print(f"output: {shown}")
    elif result.outcome == UNDEF_OUTPUT:
        print("output undefined")
    print(f"steps: {result.steps}")
    print(f"n: {result.n}")
    print(f"ram_ops: {result.cost.total_ops}")
    last = result.cost.per_step[-1]
    print(f"tangle: vertices={last.vertices} edges={last.edges}")
    _write_report(args, result.cost)
    return _outcome_exit(result)


def cmd_compare(args) -> int:
    program = load_program(args.program)
    trials: list[list[Term]] = []
    if args.input:
        try:
            trials.append(parse_inputs(program, args.input, args.nat))
        except (ValueError, TermSyntaxError) as exc:
            return _fail(str(exc))
    else:
        rng = random.Random(args.seed)
        count = args.random if args.random else 1
        try:
            for _ in range(count):
                trials.append([random_input(program.vocab, rng) for _ in program.inputs])
        except ValueError as exc:
            return _fail(str(exc))
    for i, inputs in enumerate(trials):
        verdict = compare_engines(program, inputs, fuel=args.fuel)
        if not verdict.equivalent:
            d = verdict.divergence
            where = format_term(d.term) if d.term is not None else "run outcome"
            print(
                f"divergence on trial {i}: step {d.step}, {where}: "
                f"critical={d.critical_value} reference={d.reference_value}",
                file=sys.stderr,
            )
            return EXIT_DIVERGED
    print(f"equivalent ({len(trials)} trial{'s' if len(trials) != 1 else ''})")
    return EXIT_OK


def _verify_runs(program, args) -> list:
    runs = []
    if args.sweep:
        codec = input_codec(program.vocab)
        if codec is None:
            raise ValueError("program has no input codec; verify needs --input")
        for size in sweep_sizes(args.sweep):
            inputs = [encode_size(program.vocab, codec, size) for _ in program.inputs]
            runs.append(run(program, inputs, fuel=args.fuel, oracle_mode=args.oracle_cost))
    else:
        inputs = parse_inputs(program, args.input, args.nat)
        runs.append(run(program, inputs, fuel=args.fuel, oracle_mode=args.oracle_cost))
    return runs


def cmd_verify(args) -> int:
    program = load_program(args.program)
    try:
        runs = _verify_runs(program, args)
    except (ValueError, TermSyntaxError) as exc:
        return _fail(str(exc))
    worst: dict[str, tuple[bool, str]] = {}
    for result in runs:
        verdicts, _ = run_all_checks(result.cost, DEFAULT_BOUNDS)
        for name, v in verdicts.items():
            if name not in worst or (worst[name][0] and not v.passed):
                worst[name] = (v.passed, v.detail)
    failed = False
    for name in ("growth", "step_linear", "total_bound"):
        passed, detail = worst[name]
        print(f"{name}: {'PASS' if passed else 'FAIL'}{' - ' + detail if not passed else ''}")
        failed = failed or not passed
    if args.report and runs:
        Path(args.report).write_bytes(emit_report(runs[-1].cost, format=args.format))
    return EXIT_BOUND if failed else EXIT_OK


def cmd_bench(args) -> int:
    program = load_program(args.program)
    codec = input_codec(program.vocab)
    if codec is None:
        return _fail("program has no input codec; bench needs a sweepable program")
    if not args.sweep:
        return _fail("bench requires --sweep LO:HI")
    rows = ["size,n,steps,init_ops,total_ops,word_bits_max"]
    for size in sweep_sizes(args.sweep):
        inputs = [encode_size(program.vocab, codec, size) for _ in program.inputs]
        result = run(program, inputs, fuel=args.fuel, oracle_mode=args.oracle_cost)
        c = result.cost
        rows.append(
            f"{size},{c.n},{c.steps},{c.init_ops},{c.total_ops},{c.word_bits_max}"
        )
    text = "\n".join(rows) + "\n"
    if args.report:
        Path(args.report).write_text(text)
    else:
        print(text, end="")
    return EXIT_OK


def cmd_examples(args) -> int:
    for name, blurb in BUNDLED.items():
        print(f"{name:12s} {blurb}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="esm",
        description="Run and measure effective state machine programs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, program=True):
        if program:
            p.add_argument("program", help="program file or bundled example name")
        p.add_argument("--input", action="append", default=[], metavar="NAME=TERM",
                       help="input binding; repeatable")
        p.add_argument("--nat", action="store_true",
                       help="treat inputs/outputs as numerals via the program codec")
        p.add_argument("--fuel", type=int, default=10**6)
        p.add_argument("--engine", choices=["critical", "reference"], default="critical")
        p.add_argument("--oracle-cost", choices=["unit", "inline"], default="inline")
        p.add_argument("--report", metavar="PATH")
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--sweep", metavar="LO:HI")
        p.add_argument("--random", type=int, metavar="COUNT")

    run_p = sub.add_parser("run", help="execute a program")
    common(run_p)
    run_p.set_defaults(fn=cmd_run)

    cmp_p = sub.add_parser("compare", help="differentially test the two engines")
    common(cmp_p)
    cmp_p.set_defaults(fn=cmd_compare)

    ver_p = sub.add_parser("verify", help="check the cost bounds on runs")
    common(ver_p)
    ver_p.set_defaults(fn=cmd_verify)

    bench_p = sub.add_parser("bench", help="sweep input sizes and emit CSV")
    common(bench_p)
    bench_p.set_defaults(fn=cmd_bench)

    ex_p = sub.add_parser("examples", help="list bundled programs")
    ex_p.set_defaults(fn=cmd_examples)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else EXIT_USAGE
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
