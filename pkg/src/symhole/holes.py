"""Symbolic holes encoded as calls to body-less functions.

A hole is a declaration ``@holeN`` with exactly one call site; its call
arguments are the values the hole depends on.  Operations over values of
unknown type are calls to the reserved ``@hole.op.*`` declarations and are
turned into real opcodes once their operand type is known.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .dom import DominanceCache
from .errors import ScopeError, TypeConflict, TypeMismatch
from .ir import (BINARY_OPS, HOLE, I1, ICMP_PREDS, Function, FnType, HoleType,
                 Instruction, IntType, Module, Value)

HOLE_NAME = re.compile(r"hole(0|[1-9][0-9]*)$")
HOLE_OP_PREFIX = "hole.op."


@dataclass(frozen=True)
class HoleOpKind:
    opcode: str
    pred: str | None = None

    @property
    def name(self) -> str:
        if self.opcode == "icmp":
            return f"{HOLE_OP_PREFIX}icmp.{self.pred}"
        return HOLE_OP_PREFIX + self.opcode

    @property
    def signature(self) -> FnType:
        if self.opcode == "select":
            return FnType(HOLE, (I1, HOLE, HOLE))
        if self.opcode == "icmp":
            return FnType(I1, (HOLE, HOLE))
        return FnType(HOLE, (HOLE, HOLE))

    @property
    def hole_positions(self) -> tuple:
        return (1, 2) if self.opcode == "select" else (0, 1)

    @property
    def result_in_class(self) -> bool:
        # icmp results are always i1; every other op shares its operands' type
        return self.opcode != "icmp"

    @property
    def concrete(self) -> str:
        return f"icmp {self.pred}" if self.opcode == "icmp" else self.opcode


def hole_op_kind(spec: str) -> HoleOpKind:
    """Accepts ``add``, ``icmp.slt``, ``icmp slt`` or ``select``."""
    parts = spec.replace(" ", ".").split(".")
    if len(parts) == 1 and (parts[0] in BINARY_OPS or parts[0] == "select"):
        return HoleOpKind(parts[0])
    if len(parts) == 2 and parts[0] == "icmp" and parts[1] in ICMP_PREDS:
        return HoleOpKind("icmp", parts[1])
    raise ValueError(f"unsupported hole operation {spec!r}")


def parse_hole_op_name(name: str) -> HoleOpKind | None:
    if not name.startswith(HOLE_OP_PREFIX):
        return None
    try:
        return hole_op_kind(name[len(HOLE_OP_PREFIX):])
    except ValueError:
        return None


def is_hole_name(name: str) -> bool:
    return HOLE_NAME.match(name) is not None


def is_reserved_name(name: str) -> bool:
    return is_hole_name(name) or name.startswith("hole.")


def is_hole_call(inst) -> bool:
    return (isinstance(inst, Instruction) and inst.opcode == "call"
            and inst.callee is not None and is_hole_name(inst.callee.name))


def is_hole_op_call(inst) -> bool:
    return (isinstance(inst, Instruction) and inst.opcode == "call"
            and inst.callee is not None and parse_hole_op_name(inst.callee.name) is not None)


@dataclass
class HoleInfo:
    name: str
    declaration: Function
    call_site: Instruction | None
    declared_type: object
    deps: list
    resolved_type: IntType | None = None

    @property
    def value(self) -> Instruction | None:
        return self.call_site


@dataclass
class HoleOp:
    op_name: str
    call_site: Instruction
    operands: tuple


def _next_hole_index(module: Module) -> int:
    used = {int(fn.name[4:]) for fn in module.functions if is_hole_name(fn.name)}
    n = 0
    while n in used:
        n += 1
    return n


def _check_insertion(function: Function, insert_before: Instruction, values) -> None:
    if insert_before.function is not function:
        raise ValueError(f"{insert_before!r} is not in @{function.name}")
    if insert_before.opcode == "phi":
        raise ValueError("cannot insert before a phi")
    cache = DominanceCache()
    for v in values:
        if not cache.value_dominates(v, insert_before):
            raise ScopeError(f"{v!r} is not in scope at {insert_before!r}")


def new_hole(module: Module, function: Function, insert_before: Instruction,
             ty: IntType | None = None, deps=()) -> HoleInfo:
    """Declare a fresh ``@holeN`` and call it just before ``insert_before``.

    ``ty`` of None gives a hole of unknown type.
    """
    if ty is not None and not isinstance(ty, IntType):
        raise TypeMismatch(f"hole type must be an integer type or omitted, got {ty}")
    deps = list(deps)
    _check_insertion(function, insert_before, deps)
    decl = Function(f"hole{_next_hole_index(module)}",
                    FnType(HOLE if ty is None else ty, tuple(d.type for d in deps)))
    module.add_function(decl, module.first_definition_index())
    call = Instruction("call", deps, decl.type.ret, callee=decl)
    module.insert_before(insert_before, call)
    return HoleInfo(decl.name, decl, call, decl.type.ret, deps, ty)


def _op_declaration(module: Module, kind: HoleOpKind) -> Function:
    decl = module.get_function(kind.name)
    if decl is None:
        decl = module.add_function(Function(kind.name, kind.signature),
                                   module.first_definition_index())
    return decl


def _emit_hole_op(module, function, insert_before, kind: HoleOpKind, operands) -> Value:
    from .rewrite import TypeClasses, materialize

    for pos in kind.hole_positions:
        if not isinstance(operands[pos].type, (IntType, HoleType)):
            raise TypeMismatch(f"operand {pos} has type {operands[pos].type}")
    concrete = []
    for pos in kind.hole_positions:
        t = operands[pos].type
        if isinstance(t, IntType) and t not in concrete:
            concrete.append(t)
    if len(concrete) > 1:
        raise TypeConflict(concrete[0], concrete[1], message=(
            f"operands of {kind.concrete} must share one type, got {concrete[0]} and {concrete[1]}"))
    _check_insertion(function, insert_before, operands)

    if all(isinstance(operands[p].type, IntType) for p in kind.hole_positions):
        t = concrete[0]
        if kind.opcode == "icmp":
            inst = Instruction("icmp", operands, I1, pred=kind.pred)
        else:
            inst = Instruction(kind.opcode, operands, t)
        return module.insert_before(insert_before, inst)

    call = Instruction("call", operands, kind.signature.ret)
    engine = TypeClasses.from_module(module)
    engine.add_hole_op_call(call, kind)  # raises on conflict, before any mutation
    var = call if kind.result_in_class else engine.operand_slot(call)
    resolved = engine.resolved_type(var) is not None
    call.callee = _op_declaration(module, kind)
    module.insert_before(insert_before, call)
    if resolved:
        report = materialize(module)
        return report.replacements.get(call, call)
    return call


def new_hole_op(module: Module, function: Function, insert_before: Instruction,
                opcode: str, lhs: Value, rhs: Value) -> Value:
    """Insert an operation whose operand type may still be unknown.

    If either operand already has a concrete type the equality constraint
    fixes the whole class and the concrete instruction is returned instead
    of a ``@hole.op`` call.
    """
    kind = hole_op_kind(opcode)
    if kind.opcode == "select":
        raise ValueError("use new_hole_select for select")
    return _emit_hole_op(module, function, insert_before, kind, [lhs, rhs])


def new_hole_select(module: Module, function: Function, insert_before: Instruction,
                    cond: Value, a: Value, b: Value) -> Value:
    if cond.type != I1:
        raise TypeMismatch(f"select condition must be i1, got {cond.type}")
    return _emit_hole_op(module, function, insert_before, HoleOpKind("select"), [cond, a, b])


def list_holes(module: Module) -> list[HoleInfo]:
    from .rewrite import TypeClasses

    engine = TypeClasses.from_module(module)
    out = []
    for fn in module.functions:
        if not is_hole_name(fn.name) or not fn.is_declaration:
            continue
        callers = module.callers_of(fn)
        call = callers[0] if callers else None
        declared = fn.type.ret
        if isinstance(declared, IntType):
            resolved = declared
        elif call is not None and call in engine:
            resolved = engine.resolved_type(call)
        else:
            resolved = None
        out.append(HoleInfo(fn.name, fn, call, declared,
                            list(call.operands) if call is not None else [], resolved))
    return out


def find_hole(module: Module, name: str) -> HoleInfo | None:
    name = name.lstrip("@")
    for info in list_holes(module):
        if info.name == name:
            return info
    return None


def list_hole_ops(module: Module) -> list[HoleOp]:
    out = []
    for fn in module.functions:
        for inst in fn.instructions():
            if is_hole_op_call(inst):
                out.append(HoleOp(inst.callee.name, inst, tuple(inst.operands)))
    return out
