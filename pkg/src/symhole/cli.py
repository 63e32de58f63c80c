"""Command-line entry point: ``symhole <command> ...``."""

from __future__ import annotations

import argparse
import sys

from .errors import FillError, HoleIRError, NotFound, ParseError
from .holes import list_holes
from .interp import Sampled, run
from .ir import Constant, value_names
from .synth import SynthConfig, default_pools, fill, superopt
from .textio import format_assignments, parse_assignments, parse_module, print_function, print_module
from .verifier import verify


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="symhole", description="Symbolic holes in an LLVM-like SSA IR.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="check a module; exit 1 on any diagnostic")
    v.add_argument("file")

    pr = sub.add_parser("print", help="print a module in canonical form")
    pr.add_argument("file")
    pr.add_argument("-o", "--output")

    h = sub.add_parser("holes", help="list the holes of a module")
    h.add_argument("file")
    h.add_argument("-o", "--output")

    f = sub.add_parser("fill", help="assign values to holes")
    f.add_argument("file")
    f.add_argument("--assign", required=True, metavar="FILE")
    f.add_argument("-o", "--output")

    r = sub.add_parser("run", help="execute a hole-free function")
    r.add_argument("file")
    r.add_argument("--fn", required=True)
    r.add_argument("--args", default="")
    r.add_argument("--width-check", action="store_true",
                   help="reject arguments that do not fit their parameter type")
    r.add_argument("--fuel", type=int, default=10**6)
    r.add_argument("-o", "--output")

    s = sub.add_parser("superopt", help="fill a sketch so it matches a target")
    s.add_argument("file")
    s.add_argument("--target", required=True)
    s.add_argument("--sketch", required=True)
    s.add_argument("--consts", help="comma-separated constant seeds")
    s.add_argument("--ops", help="comma-separated opcode pool")
    s.add_argument("--budget", type=int, default=100_000)
    s.add_argument("--sample", type=int, help="use N sampled inputs instead of exhaustive checking")
    s.add_argument("--seed", type=int, default=0xC0FFEE)
    s.add_argument("-o", "--output")
    return p


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _emit(args, text: str) -> None:
    out = getattr(args, "output", None)
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(path: str):
    return parse_module(_read(path))


def _int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise _UsageError(f"{flag}: expected comma-separated integers, got {text!r}") from None


def _holes_table(module) -> str:
    rows = [("NAME", "DECLARED", "RESOLVED", "DEPS")]
    for h in list_holes(module):
        call = h.call_site
        deps = "-"
        if call is not None and h.deps:
            names = value_names(call.function)
            deps = ", ".join(str(d) if isinstance(d, Constant) else f"{d.type} %{names[d]}"
                             for d in h.deps)
        rows.append((f"@{h.name}", str(h.declared_type),
                     str(h.resolved_type) if h.resolved_type is not None else "-", deps))
    widths = [max(len(r[k]) for r in rows) for k in range(3)]
    return "".join(f"{r[0]:<{widths[0]}}  {r[1]:<{widths[1]}}  {r[2]:<{widths[2]}}  {r[3]}".rstrip() + "\n"
                   for r in rows)


def _cmd_verify(args) -> int:
    diags = verify(_load(args.file))
    for d in diags:
        print(d.format(args.file), file=sys.stderr)
    return 1 if diags else 0


def _cmd_print(args) -> int:
    _emit(args, print_module(_load(args.file)))
    return 0


def _cmd_holes(args) -> int:
    _emit(args, _holes_table(_load(args.file)))
    return 0


def _cmd_fill(args) -> int:
    module = _load(args.file)
    try:
        assignments = parse_assignments(_read(args.assign))
    except ParseError as e:
        for d in e.diagnostics:
            print(d.format(args.assign), file=sys.stderr)
        return 1
    try:
        filled = fill(module, assignments)
    except FillError as e:
        print(f"{args.assign}:{e.line}: error: @{e.hole}: {e.error}", file=sys.stderr)
        return 1
    _emit(args, print_module(filled))
    return 0


def _cmd_run(args) -> int:
    module = _load(args.file)
    fn = module.function(args.fn)
    raw = _int_list(args.args, "--args")
    if len(raw) != len(fn.type.params):
        raise _UsageError(f"--args: @{fn.name} takes {len(fn.type.params)} argument(s), got {len(raw)}")
    values = []
    for n, ty in zip(raw, fn.type.params):
        if args.width_check:
            try:
                values.append(Constant.of(ty, n))
            except ValueError as e:
                raise _UsageError(f"--args: {e}") from None
        else:
            values.append(Constant.wrap(ty, n))
    result = run(module, fn, values, fuel=args.fuel)
    _emit(args, f"{result}\n")
    return 0


def _cmd_superopt(args) -> int:
    module = _load(args.file)
    consts = _int_list(args.consts, "--consts") if args.consts else None
    ops = tuple(o.strip() for o in args.ops.split(",")) if args.ops else None
    pools = default_pools(module, args.target, args.sketch, consts, ops)
    policy = Sampled(args.sample, args.seed) if args.sample else None
    cfg = SynthConfig(max_candidates=args.budget, policy=policy, seed=args.seed)
    try:
        sol = superopt(module, args.target, args.sketch, pools, cfg)
    except NotFound as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    text = format_assignments(sol.assignments) + "\n" + print_function(
        sol.filled_module.function(sol.sketch)) + "\n"
    _emit(args, text)
    return 0


_COMMANDS = {"verify": _cmd_verify, "print": _cmd_print, "holes": _cmd_holes,
             "fill": _cmd_fill, "run": _cmd_run, "superopt": _cmd_superopt}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as e:
        print(f"symhole {args.command}: error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"symhole: error: {e}", file=sys.stderr)
        return 1
    except ParseError as e:
        path = getattr(args, "file", "<input>")
        for d in e.diagnostics:
            print(d.format(path), file=sys.stderr)
        return 1
    except HoleIRError as e:
        print(f"symhole {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
