"""Type-changing replacement of holes (RAUW-NT).

Values of unknown type are grouped into type classes: every hole-typed slot
that the typing rules force to share one concrete type lands in the same
union-find class.  Assigning a concrete value to a hole resolves its class,
and everything in the class is then rewritten at the concrete type.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import NotAHole, TypeConflict, TypeMismatch, UnknownValue
from .holes import (HoleOpKind, is_hole_call, is_hole_name, parse_hole_op_name)
from .ir import (I1, FnType, Function, HoleType, Instruction, IntType, Module,
                 check_in_scope, rauw)


@dataclass(frozen=True)
class ParamSlot:
    """A hole-typed parameter of a hole declaration."""

    function: Function
    index: int

    def remap(self, vmap):
        return ParamSlot(vmap[self.function], self.index)

    def describe(self):
        return f"@{self.function.name}.param{self.index}"


@dataclass(frozen=True)
class OperandSlot:
    """The shared operand type of an ``icmp`` hole operation."""

    call: Instruction

    def remap(self, vmap):
        return OperandSlot(vmap[self.call])

    def describe(self):
        return f"operands of @{self.call.callee.name if self.call.callee else '?'}"


class TypeClasses:
    """Union-find over hole-typed slots, annotated with resolved types.

    Slots are arbitrary hashable objects, so the engine also works on plain
    graphs built with :meth:`add_slot` and :meth:`union`.
    """

    def __init__(self):
        self._parent = {}
        self._members = {}
        self._type = {}  # root -> (concrete type, slot that introduced it)
        self._adj = {}

    def __contains__(self, slot):
        return slot in self._parent

    def __len__(self):
        return len(self._parent)

    def add_slot(self, slot):
        if slot not in self._parent:
            self._parent[slot] = slot
            self._members[slot] = [slot]
            self._adj[slot] = []

    def find(self, slot):
        root = slot
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[slot] != root:
            self._parent[slot], slot = root, self._parent[slot]
        return root

    def union(self, a, b):
        self.add_slot(a)
        self.add_slot(b)
        self._adj[a].append(b)
        self._adj[b].append(a)
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        ta, tb = self._type.get(ra), self._type.get(rb)
        if ta and tb and ta[0] != tb[0]:
            # leave the edge recorded so the witness can cross it
            raise TypeConflict(ta[0], tb[0], self.witness(ta[1], tb[1]))
        if len(self._members[ra]) < len(self._members[rb]):
            ra, rb = rb, ra
            ta, tb = tb, ta
        self._parent[rb] = ra
        self._members[ra].extend(self._members.pop(rb))
        if ta is None and tb is not None:
            self._type[ra] = tb
        self._type.pop(rb, None)

    def resolve(self, slot, ty) -> set:
        """Fix ``slot``'s class to ``ty``; return the slots newly resolved."""
        if not isinstance(ty, IntType):
            raise TypeMismatch(f"can only resolve to an integer type, not {ty}")
        if slot not in self._parent:
            raise UnknownValue(f"{slot!r} is not a hole-typed slot")
        root = self.find(slot)
        current = self._type.get(root)
        if current is not None:
            if current[0] == ty:
                return set()
            raise TypeConflict(ty, current[0], self.witness(slot, current[1]))
        self._type[root] = (ty, slot)
        return set(self._members[root])

    def resolved_type(self, slot):
        if slot not in self._parent:
            return None
        entry = self._type.get(self.find(slot))
        return entry[0] if entry else None

    def members(self, slot) -> list:
        return list(self._members[self.find(slot)])

    def classes(self) -> list:
        return [list(m) for m in self._members.values()]

    def witness(self, src, dst) -> list:
        """Shortest chain of equality edges from ``src`` to ``dst``."""
        prev = {src: None}
        queue = deque([src])
        while queue:
            node = queue.popleft()
            if node == dst:
                break
            for nxt in self._adj.get(node, ()):
                if nxt not in prev:
                    prev[nxt] = node
                    queue.append(nxt)
        if dst not in prev:
            return [src, dst]
        chain = [dst]
        while prev[chain[-1]] is not None:
            chain.append(prev[chain[-1]])
        return chain[::-1]

    # module construction

    @staticmethod
    def operand_slot(call) -> OperandSlot:
        return OperandSlot(call)

    def _link(self, slot, arg, substitute):
        arg = substitute.get(arg, arg) if substitute else arg
        self.add_slot(slot)
        if isinstance(arg.type, HoleType):
            self.union(slot, arg)
        elif isinstance(arg.type, IntType):
            self.resolve(slot, arg.type)

    def add_hole_op_call(self, call, kind: HoleOpKind, substitute=None):
        var = call if kind.result_in_class else OperandSlot(call)
        self.add_slot(var)
        for pos in kind.hole_positions:
            if pos < len(call.operands):
                self._link(var, call.operands[pos], substitute)

    def add_hole_call(self, call, substitute=None):
        callee = call.callee
        for i, p in enumerate(callee.type.params):
            if isinstance(p, HoleType) and i < len(call.operands):
                self._link(ParamSlot(callee, i), call.operands[i], substitute)

    @classmethod
    def from_module(cls, module: Module, substitute=None) -> TypeClasses:
        """Build the classes implied by ``module``'s hole calls.

        ``substitute`` maps values to stand-ins, letting a caller check a
        replacement before performing it.  Concrete arguments passed where a
        hole-typed one is expected act as type annotations.
        """
        eng = cls()
        for fn in module.functions:
            if is_hole_name(fn.name):
                for i, p in enumerate(fn.type.params):
                    if isinstance(p, HoleType):
                        eng.add_slot(ParamSlot(fn, i))
            for inst in fn.instructions():
                if isinstance(inst.type, HoleType):
                    eng.add_slot(inst)
        for fn in module.functions:
            for inst in fn.instructions():
                if inst.opcode != "call" or inst.callee is None:
                    continue
                if is_hole_name(inst.callee.name):
                    eng.add_hole_call(inst, substitute)
                else:
                    kind = parse_hole_op_name(inst.callee.name)
                    if kind is not None:
                        eng.add_hole_op_call(inst, kind, substitute)
        for slot, ty in module.pending.items():
            if slot in eng:
                eng.resolve(slot, ty)
        return eng


@dataclass
class RewriteReport:
    replaced_uses: int = 0
    replaced_calls: int = 0
    redeclared_functions: list = field(default_factory=list)
    materialized_ops: list = field(default_factory=list)
    deleted: list = field(default_factory=list)
    replacements: dict = field(default_factory=dict, repr=False)

    @property
    def empty(self) -> bool:
        return not (self.replaced_uses or self.replaced_calls or self.redeclared_functions
                    or self.materialized_ops or self.deleted)

    def merge(self, other: RewriteReport) -> RewriteReport:
        self.replaced_uses += other.replaced_uses
        self.replaced_calls += other.replaced_calls
        self.redeclared_functions += other.redeclared_functions
        self.materialized_ops += other.materialized_ops
        self.deleted += other.deleted
        # chain forwarding so callers can follow a value through several rewrites
        for old, new in list(self.replacements.items()):
            self.replacements[old] = other.replacements.get(new, new)
        for old, new in other.replacements.items():
            self.replacements.setdefault(old, new)
        return self


def _swap(module: Module, old: Instruction, new: Instruction) -> None:
    new.name, new.loc = old.name, old.loc
    module.insert_before(old, new)
    module.replace_all_uses(old, new)
    module.remove_instruction(old)


def materialize(module: Module, engine: TypeClasses | None = None) -> RewriteReport:
    """Rewrite everything whose type class is resolved at its concrete type."""
    if engine is None:
        engine = TypeClasses.from_module(module)
    report = RewriteReport()

    for fn in list(module.functions):
        if not (is_hole_name(fn.name) and fn.is_declaration):
            continue
        calls = module.callers_of(fn)
        params = list(fn.type.params)
        for i, p in enumerate(params):
            if isinstance(p, HoleType):
                params[i] = engine.resolved_type(ParamSlot(fn, i)) or p
        ret = fn.type.ret
        if isinstance(ret, HoleType) and calls:
            ret = engine.resolved_type(calls[0]) or ret
        new_type = FnType(ret, tuple(params))
        if new_type == fn.type:
            continue
        new_fn = Function(fn.name, new_type)
        new_fn.loc = fn.loc
        module.replace_function(fn, new_fn)
        for call in calls:
            new_call = Instruction("call", call.operands, ret, callee=new_fn)
            _swap(module, call, new_call)
            report.replaced_calls += 1
            report.replacements[call] = new_call
        report.redeclared_functions.append(fn.name)

    emptied = set()
    for fn in module.functions:
        for inst in list(fn.instructions()):
            if inst.opcode != "call" or inst.callee is None:
                continue
            kind = parse_hole_op_name(inst.callee.name)
            if kind is None:
                continue
            var = inst if kind.result_in_class else OperandSlot(inst)
            ty = engine.resolved_type(var)
            if ty is None:
                continue
            if kind.opcode == "icmp":
                concrete = Instruction("icmp", inst.operands, I1, pred=kind.pred)
            else:
                concrete = Instruction(kind.opcode, inst.operands, ty)
            emptied.add(inst.callee)
            _swap(module, inst, concrete)
            report.materialized_ops.append((inst.callee.name, kind.concrete))
            report.replacements[inst] = concrete

    for decl in emptied:
        if decl.module is module and not module.callers_of(decl):
            module.remove_function(decl)
            report.deleted.append(decl.name)
    module.pending.clear()
    return report


def resolve_class(module: Module, slot, concrete) -> set:
    """Record that ``slot``'s class has type ``concrete``.

    The resolution is held on the module until :func:`materialize` runs.
    """
    engine = TypeClasses.from_module(module)
    newly = engine.resolve(slot, concrete)
    for s in newly:
        module.pending[s] = concrete
    return newly


def _erase_hole_call(module: Module, call: Instruction, report: RewriteReport) -> None:
    decl = call.callee
    module.remove_instruction(call)
    if decl.module is module and not module.callers_of(decl):
        module.remove_function(decl)
        report.deleted.append(decl.name)


def rauw_nt(module: Module, old, new) -> RewriteReport:
    """Replace ``old`` with ``new`` even when ``old``'s type is unknown.

    Same-typed replacement is exactly :func:`rauw`.  Otherwise ``old`` must
    have the hole type; its type class is resolved to ``new``'s type and
    every affected hole declaration and hole operation is rewritten.  All
    checks run before the first mutation, so a failure leaves the module
    untouched.
    """
    if not module.owns(old):
        raise UnknownValue(f"{old!r} does not belong to this module")
    if not module.owns(new):
        raise UnknownValue(f"{new!r} does not belong to this module")
    report = RewriteReport()
    if old.type == new.type:
        report.replaced_uses = rauw(module, old, new)
        return report
    if not isinstance(old.type, HoleType):
        if is_hole_call(old):
            raise TypeConflict(old.type, new.type, [old], message=(
                f"@{old.callee.name} already has type {old.type}, cannot assign {new.type}"))
        raise NotAHole(f"cannot change the type of {old!r} from {old.type} to {new.type}")
    if not isinstance(new.type, IntType):
        raise TypeMismatch(f"replacement must have an integer type, got {new.type}")

    slots = module.use_list(old)
    check_in_scope(module, new, slots)
    engine = TypeClasses.from_module(module, substitute={old: new})
    if old in engine:
        engine.resolve(old, new.type)

    for inst, pos in slots:
        module.set_operand(inst, pos, new)
    report.replaced_uses = len(slots)
    if is_hole_call(old):
        _erase_hole_call(module, old, report)
        report.merge(materialize(module))
        return report
    module.pending[old] = new.type
    report.merge(materialize(module))
    leftover = report.replacements.get(old, old)
    if isinstance(leftover, Instruction) and module.owns(leftover) and not module.has_uses(leftover):
        module.remove_instruction(leftover)
    return report
