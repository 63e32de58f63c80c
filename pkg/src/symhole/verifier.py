"""Structural and type validation of modules, including hole conventions."""

from __future__ import annotations

from .dom import DominanceCache, DomTree, dominators
from .holes import is_hole_name, is_reserved_name, parse_hole_op_name
from .ir import (BINARY_OPS, I1, ICMP_PREDS, Argument, Constant, Function, HoleType,
                 Instruction, IntType, Module, VoidType)
from .textio import Diagnostic

__all__ = ["verify", "dominators", "DomTree", "is_closed"]


class _Checker:
    def __init__(self, module: Module):
        self.module = module
        self.diags: list[Diagnostic] = []
        self.dom = DominanceCache()

    def error(self, where, message):
        loc = getattr(where, "loc", None) or (0, 0)
        self.diags.append(Diagnostic("error", loc[0], loc[1], message))

    # (a) signatures and operand typing

    def check_types(self, fn: Function, inst: Instruction):
        op, ops = inst.opcode, inst.operands
        where = f"in @{fn.name}"
        for v in ops:
            if v is None:
                self.error(inst, f"missing operand to {op} {where}")
                return
        if op in BINARY_OPS or op == "icmp":
            if len(ops) != 2:
                self.error(inst, f"{op} expects 2 operands, got {len(ops)} {where}")
                return
            a, b = ops
            if a.type != b.type:
                self.error(inst, f"{op} operands differ in type: {a.type} and {b.type} {where}")
            elif not isinstance(a.type, IntType):
                self.error(inst, f"{op} operands must be integers, got {a.type} {where}")
            if op == "icmp":
                if inst.pred not in ICMP_PREDS:
                    self.error(inst, f"unknown icmp predicate {inst.pred!r} {where}")
                if inst.type != I1:
                    self.error(inst, f"icmp must produce i1 {where}")
            elif inst.type != a.type:
                self.error(inst, f"{op} result type {inst.type} differs from operand type {a.type} {where}")
        elif op == "select":
            if len(ops) != 3:
                self.error(inst, f"select expects 3 operands, got {len(ops)} {where}")
                return
            c, a, b = ops
            if c.type != I1:
                self.error(inst, f"select condition must be i1, got {c.type} {where}")
            if not (a.type == b.type == inst.type) or not isinstance(a.type, IntType):
                self.error(inst, f"select arms must share the integer result type {where}")
        elif op == "call":
            callee = inst.callee
            if callee is None or callee.module is not self.module:
                self.error(inst, f"call to a function outside the module {where}")
                return
            params = callee.type.params
            if len(ops) != len(params):
                self.error(inst, f"call to @{callee.name} passes {len(ops)} argument(s), "
                                 f"signature has {len(params)} {where}")
            for k, (v, p) in enumerate(zip(ops, params)):
                if v.type != p:
                    self.error(inst, f"argument {k} of call to @{callee.name} has type {v.type}, "
                                     f"signature expects {p} {where}")
            if inst.type != callee.type.ret:
                self.error(inst, f"call to @{callee.name} produces {inst.type}, "
                                 f"signature returns {callee.type.ret} {where}")
        elif op == "phi":
            if not ops or len(ops) != len(inst.targets):
                self.error(inst, f"malformed phi {where}")
                return
            if not isinstance(inst.type, IntType):
                self.error(inst, f"phi must have an integer type {where}")
            for v in ops:
                if v.type != inst.type:
                    self.error(inst, f"phi incoming value of type {v.type}, expected {inst.type} {where}")
        elif op == "condbr":
            if len(ops) != 1 or len(inst.targets) != 2:
                self.error(inst, f"malformed conditional branch {where}")
            elif ops[0].type != I1:
                self.error(inst, f"branch condition must be i1, got {ops[0].type} {where}")
        elif op == "br":
            if ops or len(inst.targets) != 1:
                self.error(inst, f"malformed branch {where}")
        elif op == "ret":
            ret = fn.type.ret
            if isinstance(ret, VoidType):
                if ops:
                    self.error(inst, f"returning a value from void function {where}")
            elif len(ops) != 1 or ops[0].type != ret:
                got = ops[0].type if ops else "void"
                self.error(inst, f"return of {got} from function returning {ret} {where}")
        for t in inst.targets:
            if t is None or t.parent is not fn:
                self.error(inst, f"{op} refers to a block outside @{fn.name}")

    # (b) def-before-use

    def check_dominance(self, fn: Function, inst: Instruction, tree: DomTree):
        if not tree.reachable(inst.parent):
            return
        for pos, v in enumerate(inst.operands):
            if v is None or isinstance(v, Constant):
                continue
            if isinstance(v, Argument):
                if v.function is not fn:
                    self.error(inst, f"use of argument of @{v.function.name} in @{fn.name}")
                continue
            if not isinstance(v, Instruction) or v.function is not fn:
                self.error(inst, f"operand {pos} of {inst.opcode} is not defined in @{fn.name}")
                continue
            if isinstance(v.type, VoidType):
                self.error(inst, f"use of a void value in @{fn.name}")
            elif not self.dom.value_dominates(v, inst, pos):
                self.error(inst, f"use of %{_name(fn, v)} is not dominated by its definition in @{fn.name}")

    # (c) block structure

    def check_blocks(self, fn: Function, tree: DomTree):
        preds = {b: [] for b in fn.blocks}
        for b in fn.blocks:
            for s in b.successors():
                if s in preds:
                    preds[s].append(b)
        for b in fn.blocks:
            label = b.name or f"#{fn.blocks.index(b)}"
            if not b.instructions:
                self.error(fn, f"block %{label} in @{fn.name} is empty")
                continue
            for k, inst in enumerate(b.instructions):
                last = k == len(b.instructions) - 1
                if inst.is_terminator and not last:
                    self.error(inst, f"terminator in the middle of block %{label} in @{fn.name}")
                if inst.opcode == "phi" and any(p.opcode != "phi" for p in b.instructions[:k]):
                    self.error(inst, f"phi after a non-phi in block %{label} in @{fn.name}")
                if inst.opcode == "phi":
                    incoming = [id(t) for t in inst.targets]
                    if len(set(incoming)) != len(incoming) or set(incoming) != {id(p) for p in preds[b]}:
                        self.error(inst, f"phi incoming blocks do not match the predecessors of %{label} in @{fn.name}")
            if not b.instructions[-1].is_terminator:
                self.error(b.instructions[-1], f"block %{label} in @{fn.name} does not end in a terminator")
            if b is fn.blocks[0] and preds[b]:
                self.error(b.instructions[0], f"entry block of @{fn.name} has predecessors")
        for b in tree.unreachable:
            where = b.instructions[0] if b.instructions else fn
            self.error(where, f"block %{b.name or '?'} in @{fn.name} is unreachable")

    # (d) hole conventions

    def check_holes(self):
        for fn in self.module.functions:
            sig = fn.type
            if is_hole_name(fn.name):
                if not fn.is_declaration:
                    self.error(fn, f"hole @{fn.name} must be a declaration")
                if isinstance(sig.ret, VoidType):
                    self.error(fn, f"hole @{fn.name} must produce a value")
                n = len(self.module.callers_of(fn))
                if n != 1:
                    self.error(fn, f"hole @{fn.name} has {n} call sites, expected exactly 1")
                continue
            if fn.name.startswith("hole."):
                kind = parse_hole_op_name(fn.name)
                if kind is None:
                    self.error(fn, f"unknown hole operation @{fn.name}")
                    continue
                if not fn.is_declaration:
                    self.error(fn, f"hole operation @{fn.name} must be a declaration")
                if sig != kind.signature:
                    self.error(fn, f"hole operation @{fn.name} must have signature {kind.signature}")
                continue
            if isinstance(sig.ret, HoleType) or any(isinstance(p, HoleType) for p in sig.params):
                self.error(fn, f"%hole.t in the signature of non-hole function @{fn.name}")
        for fn in self.module.functions:
            for inst in fn.instructions():
                takes_holes = (inst.opcode == "call" and inst.callee is not None
                               and is_reserved_name(inst.callee.name))
                if isinstance(inst.type, HoleType) and not takes_holes:
                    self.error(inst, f"{inst.opcode} produces %hole.t in @{fn.name}")
                if not takes_holes:
                    for v in inst.operands:
                        if v is not None and isinstance(v.type, HoleType):
                            self.error(inst, f"%hole.t value used by {inst.opcode} in @{fn.name}; "
                                             f"only hole calls may take unknown-typed operands")
                            break

    # (e) constants

    def check_constants(self, inst: Instruction):
        for v in inst.operands:
            if isinstance(v, Constant) and not v.fits():
                self.error(inst, f"constant {v.bits} does not fit in {v.type}")

    def run(self) -> list[Diagnostic]:
        fns = self.module.functions
        seen = set()
        for fn in fns:
            if fn.name in seen:
                self.error(fn, f"duplicate function @{fn.name}")
            seen.add(fn.name)
            for t in list(fn.type.params):
                if isinstance(t, VoidType):
                    self.error(fn, f"void parameter in @{fn.name}")
        defs = [fn for fn in fns if not fn.is_declaration]
        trees = {fn: dominators(fn) for fn in defs}
        for fn in defs:
            names = set()
            for v in list(fn.args) + [i for i in fn.instructions() if not isinstance(i.type, VoidType)]:
                if v.name is not None:
                    if v.name in names:
                        self.error(v if isinstance(v, Instruction) else fn,
                                   f"duplicate value name %{v.name} in @{fn.name}")
                    names.add(v.name)
        for fn in defs:
            for inst in fn.instructions():
                self.check_types(fn, inst)
        for fn in defs:
            for inst in fn.instructions():
                self.check_dominance(fn, inst, trees[fn])
        for fn in defs:
            self.check_blocks(fn, trees[fn])
        self.check_holes()
        for fn in defs:
            for inst in fn.instructions():
                self.check_constants(inst)
        # stable, so diagnostics without a position keep check order
        return sorted(self.diags, key=lambda d: (d.line, d.column))


def _name(fn: Function, v) -> str:
    from .ir import value_names
    return value_names(fn).get(v, "?")


def verify(module: Module) -> list[Diagnostic]:
    """Return every problem found; an empty list means the module is valid."""
    return _Checker(module).run()


def is_closed(module: Module) -> bool:
    """True for a valid module that mentions no holes at all."""
    if verify(module):
        return False
    for fn in module.functions:
        if is_reserved_name(fn.name):
            return False
        if isinstance(fn.type.ret, HoleType) or any(isinstance(p, HoleType) for p in fn.type.params):
            return False
    return True
