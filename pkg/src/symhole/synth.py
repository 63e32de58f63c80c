"""A client of the hole interface: filling holes from an assignment set, and
a small enumerative superoptimizer built on top of it."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .dom import DominanceCache
from .errors import ConfigError, FillError, HoleIRError, NotFound, TypeMismatch, UnknownValue
from .holes import find_hole, is_hole_call, is_hole_op_call, list_holes
from .interp import Equivalent, check_equiv, default_policy
from .ir import (BINARY_OPS, I1, ICMP_PREDS, Constant, Function, Instruction, IntType,
                 Module, VoidType, value_names)
from .rewrite import materialize, rauw_nt
from .textio import Assignment, AssignmentSet, OpExpr, ValueRef
from .verifier import verify

DEFAULT_SEEDS = (0, 1, -1, 2)
OPCODE_ORDER = BINARY_OPS + tuple(f"icmp.{p}" for p in ICMP_PREDS)


class _Refs:
    """Resolves ``%name`` references against the input module's numbering,
    following values through the replacements made while filling."""

    def __init__(self, original: Module, vmap: dict):
        self.tables = {}
        for fn in original.functions:
            if not fn.is_declaration:
                self.tables[vmap[fn]] = {name: vmap[v] for v, name in value_names(fn).items()}
        self.forward = {}

    def lookup(self, fn: Function, ref: ValueRef):
        value = self.tables.get(fn, {}).get(ref.name)
        if value is None:
            raise UnknownValue(f"no value %{ref.name} in @{fn.name}")
        while value in self.forward:
            value = self.forward[value]
        if ref.type is not None and value.type != ref.type:
            raise TypeMismatch(f"%{ref.name} has type {value.type}, assignment says {ref.type}")
        return value


def _operand(refs: _Refs, fn: Function, v, ty: IntType):
    if isinstance(v, Constant):
        return v
    value = refs.lookup(fn, v)
    if value.type != ty:
        raise TypeMismatch(f"%{v.name} has type {value.type}, operation expects {ty}")
    return value


def _build_rhs(module: Module, refs: _Refs, call: Instruction, rhs):
    if isinstance(rhs, Constant):
        return rhs
    fn = call.function
    if isinstance(rhs, ValueRef):
        return refs.lookup(fn, rhs)
    ops = [_operand(refs, fn, v, rhs.type) for v in rhs.operands]
    cache = DominanceCache()
    for v in ops:
        if not cache.value_dominates(v, call):
            raise UnknownValue(f"{v!r} is not in scope at the hole")
    if rhs.opcode == "icmp":
        inst = Instruction("icmp", ops, I1, pred=rhs.pred)
    else:
        inst = Instruction(rhs.opcode, ops, rhs.type)
    return module.insert_before(call, inst)


def _drop_if_dead(module: Module, call: Instruction) -> None:
    if module.owns(call) and not module.has_uses(call):
        decl = call.callee
        module.remove_instruction(call)
        if not module.callers_of(decl):
            module.remove_function(decl)


def fill(module: Module, assignments) -> Module:
    """Apply ``assignments`` in order to a copy of ``module``.

    Value references use the input module's printed names.  The first
    failing entry raises :class:`FillError` naming its line.
    """
    work, vmap = module.clone_with_map()
    refs = _Refs(module, vmap)
    for entry in assignments:
        try:
            hole = find_hole(work, entry.hole)
            if hole is None or hole.call_site is None:
                raise UnknownValue(f"no hole @{entry.hole}")
            call = hole.call_site
            value = _build_rhs(work, refs, call, entry.value)
            report = rauw_nt(work, call, value)
        except HoleIRError as e:
            raise FillError(entry.line, entry.hole, e) from e
        refs.forward.update(report.replacements)
        _drop_if_dead(work, call)
    materialize(work)
    return work


# -- superoptimization ---------------------------------------------------------


@dataclass
class CandidatePools:
    constants: list
    operands: dict          # hole name -> list of in-scope values of the input module
    opcodes: tuple = BINARY_OPS


@dataclass
class SynthConfig:
    max_candidates: int = 100_000
    policy: object = None
    seed: int = 0xC0FFEE

    def __post_init__(self):
        if self.max_candidates <= 0:
            raise ConfigError("max_candidates must be positive")


@dataclass
class Solution:
    assignments: AssignmentSet
    filled_module: Module
    candidates_tried: int
    sketch: str = field(default="")


def seed_constants(widths, seeds=None) -> list:
    out = []
    for w in sorted(set(widths)):
        ty = IntType(w)
        values = list(DEFAULT_SEEDS) + [w - 1] if seeds is None else list(seeds)
        for n in values:
            c = Constant.wrap(ty, n)
            if c not in out:
                out.append(c)
    return out


def _widths(*fns) -> set:
    widths = set()
    for fn in fns:
        for t in list(fn.type.params) + [fn.type.ret]:
            if isinstance(t, IntType):
                widths.add(t.width)
        for inst in fn.instructions():
            if isinstance(inst.type, IntType) and not (is_hole_call(inst) or is_hole_op_call(inst)):
                widths.add(inst.type.width)
    return widths


def _sketch_holes(module: Module, sketch: Function) -> list:
    return [h for h in list_holes(module) if h.call_site is not None and h.call_site.function is sketch]


def default_pools(module: Module, target, sketch, consts=None, opcodes=None) -> CandidatePools:
    """Constants at every width used by the two functions, plus per hole the
    arguments and earlier non-hole results that dominate its call."""
    target, sketch = module.function(_fname(target)), module.function(_fname(sketch))
    constants = seed_constants(_widths(target, sketch), consts)
    cache = DominanceCache()
    operands = {}
    for hole in _sketch_holes(module, sketch):
        call = hole.call_site
        pool = list(sketch.args)
        for inst in sketch.instructions():
            if inst is call:
                continue
            if isinstance(inst.type, VoidType) or is_hole_call(inst) or is_hole_op_call(inst):
                continue
            if cache.value_dominates(inst, call):
                pool.append(inst)
        operands[hole.name] = pool
    ops = tuple(o for o in OPCODE_ORDER if o in (opcodes or BINARY_OPS))
    return CandidatePools(constants, operands, ops)


def _fname(f) -> str:
    return f.name if isinstance(f, Function) else f.lstrip("@")


def _candidates(hole, names, pools: CandidatePools) -> list:
    out = [ValueRef(names[v], v.type) for v in pools.operands.get(hole.name, [])]
    out.extend(pools.constants)
    deps = hole.deps
    if len(deps) == 2 and deps[0].type == deps[1].type and isinstance(deps[0].type, IntType):
        ty = deps[0].type
        args = tuple(d if isinstance(d, Constant) else ValueRef(names[d]) for d in deps)
        for op in pools.opcodes:
            if op.startswith("icmp."):
                out.append(OpExpr("icmp", ty, args, op[5:]))
            else:
                out.append(OpExpr(op, ty, args))
    return out


def superopt(module: Module, target, sketch, pools: CandidatePools | None = None,
             cfg: SynthConfig | None = None) -> Solution:
    """Search hole assignments making ``sketch`` equivalent to ``target``.

    Candidate tuples are tried in lexicographic order over the per-hole
    lists (operands, then constants, then operations over the hole's two
    dependencies).  Raises :class:`NotFound` when the budget runs out.
    """
    cfg = cfg or SynthConfig()
    target_fn = module.get_function(_fname(target))
    sketch_fn = module.get_function(_fname(sketch))
    if target_fn is None or sketch_fn is None:
        raise ConfigError("unknown target or sketch function")
    if target_fn.type != sketch_fn.type:
        raise ConfigError(f"@{target_fn.name} and @{sketch_fn.name} have different signatures")
    holes = _sketch_holes(module, sketch_fn)
    if not holes:
        raise ConfigError(f"@{sketch_fn.name} contains no holes")
    if pools is None:
        pools = default_pools(module, target_fn, sketch_fn)
    policy = cfg.policy or default_policy(target_fn, cfg.seed)
    names = value_names(sketch_fn)
    lists = [_candidates(h, names, pools) for h in holes]

    tried = 0
    for combo in itertools.product(*lists):
        if tried >= cfg.max_candidates:
            break
        tried += 1
        aset = AssignmentSet([Assignment(h.name, v, k + 1) for k, (h, v) in enumerate(zip(holes, combo))])
        try:
            filled = fill(module, aset)
        except FillError:
            continue
        if verify(filled):
            continue
        try:
            verdict = check_equiv(filled, target_fn.name, sketch_fn.name, policy)
        except HoleIRError:
            continue
        if isinstance(verdict, Equivalent):
            return Solution(aset, filled, tried, sketch_fn.name)
    raise NotFound(tried)
