"""In-memory SSA program representation.

A :class:`Module` owns its functions and keeps an exact use-def index that is
updated eagerly by every mutation primitive.  Instructions double as the
values they define, as in LLVM.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

from .errors import ScopeError, StillInUse, TypeMismatch, UnknownValue

MAX_WIDTH = 128

BINARY_OPS = ("add", "sub", "mul", "and", "or", "xor", "shl", "lshr", "ashr")
ICMP_PREDS = ("eq", "ne", "ult", "ule", "ugt", "uge", "slt", "sle", "sgt", "sge")
TERMINATORS = frozenset({"br", "condbr", "ret"})
OPCODES = BINARY_OPS + ("icmp", "select", "call", "phi", "br", "condbr", "ret")


# -- types -------------------------------------------------------------------


@dataclass(frozen=True)
class IntType:
    width: int

    def __post_init__(self):
        if not isinstance(self.width, int) or not 1 <= self.width <= MAX_WIDTH:
            raise ValueError(f"integer width must be in [1, {MAX_WIDTH}], got {self.width!r}")

    @property
    def mask(self) -> int:
        return (1 << self.width) - 1

    def __str__(self):
        return f"i{self.width}"


@dataclass(frozen=True)
class VoidType:
    def __str__(self):
        return "void"


@dataclass(frozen=True)
class HoleType:
    """The single opaque type carried by values whose type is not yet known."""

    def __str__(self):
        return "%hole.t"


Type = Union[IntType, VoidType, HoleType]


@dataclass(frozen=True)
class FnType:
    ret: Type
    params: tuple = ()

    def __str__(self):
        return f"{self.ret} ({', '.join(map(str, self.params))})"


VOID = VoidType()
HOLE = HoleType()
I1 = IntType(1)


def is_concrete(ty) -> bool:
    return isinstance(ty, IntType)


# -- values ------------------------------------------------------------------


class Value:
    type: Type
    name: str | None = None


class Argument(Value):
    def __init__(self, function: Function, index: int, type: Type, name: str | None = None):
        self.function = function
        self.index = index
        self.type = type
        self.name = name

    def __repr__(self):
        return f"<Argument {self.name or self.index}: {self.type} of @{self.function.name}>"


@dataclass(frozen=True, eq=True)
class Constant(Value):
    """An integer constant; ``bits`` is the unsigned two's-complement encoding."""

    type: IntType
    bits: int

    @classmethod
    def of(cls, ty: IntType, n: int) -> Constant:
        """Build a constant from a signed or unsigned literal in range for ``ty``."""
        if not -(1 << (ty.width - 1)) <= n <= ty.mask:
            raise ValueError(f"{n} does not fit in {ty}")
        return cls(ty, n & ty.mask)

    @classmethod
    def wrap(cls, ty: IntType, n: int) -> Constant:
        return cls(ty, n & ty.mask)

    @property
    def name(self):
        return None

    @property
    def signed(self) -> int:
        w = self.type.width
        return self.bits - (1 << w) if self.bits >> (w - 1) & 1 else self.bits

    def fits(self) -> bool:
        return 0 <= self.bits <= self.type.mask

    def __str__(self):
        return f"{self.type} {self.bits if self.type.width == 1 else self.signed}"

    def __repr__(self):
        return f"Constant({self})"


class Instruction(Value):
    """One SSA instruction.

    ``operands`` holds value operands only.  ``targets`` holds block
    references: successors for ``br``/``condbr`` and the incoming blocks of a
    ``phi`` (parallel to its operands).  ``callee`` is set for ``call``.
    Operand lists must be mutated through the owning :class:`Module`.
    """

    def __init__(self, opcode: str, operands: Iterable = (), type: Type = VOID, *,
                 pred: str | None = None, callee: Function | None = None,
                 targets: Iterable = (), name: str | None = None):
        if opcode not in OPCODES:
            raise ValueError(f"unknown opcode {opcode!r}")
        self.opcode = opcode
        self.operands = list(operands)
        self.type = type
        self.pred = pred
        self.callee = callee
        self.targets = list(targets)
        self.name = name
        self.parent: Block | None = None
        self.loc: tuple[int, int] | None = None

    @property
    def is_terminator(self) -> bool:
        return self.opcode in TERMINATORS

    @property
    def function(self) -> Function | None:
        return self.parent.parent if self.parent is not None else None

    def __repr__(self):
        head = f"%{self.name} = " if self.name else ""
        if self.opcode == "call" and self.callee is not None:
            return f"<Instruction {head}call @{self.callee.name}>"
        return f"<Instruction {head}{self.opcode}{' ' + self.pred if self.pred else ''}>"


class Block:
    def __init__(self, parent: Function, name: str | None = None):
        self.parent = parent
        self.name = name
        self.instructions: list[Instruction] = []

    @property
    def terminator(self) -> Instruction | None:
        if self.instructions and self.instructions[-1].is_terminator:
            return self.instructions[-1]
        return None

    def successors(self) -> list[Block]:
        term = self.terminator
        return list(term.targets) if term is not None and term.opcode != "ret" else []

    def __repr__(self):
        return f"<Block {self.name or '?'} of @{self.parent.name}>"


class Function:
    def __init__(self, name: str, type: FnType, arg_names: Iterable | None = None):
        self.name = name
        self.type = type
        names = list(arg_names) if arg_names is not None else [None] * len(type.params)
        self.args = [Argument(self, i, t, n) for i, (t, n) in enumerate(zip(type.params, names))]
        self.blocks: list[Block] = []
        self.module: Module | None = None
        self.loc: tuple[int, int] | None = None

    @property
    def is_declaration(self) -> bool:
        return not self.blocks

    @property
    def entry(self) -> Block:
        return self.blocks[0]

    def add_block(self, name: str | None = None) -> Block:
        block = Block(self, name)
        self.blocks.append(block)
        return block

    def instructions(self):
        for block in self.blocks:
            yield from block.instructions

    def __repr__(self):
        kind = "declare" if self.is_declaration else "define"
        return f"<Function {kind} {self.type.ret} @{self.name}>"


# -- naming ------------------------------------------------------------------


def value_names(fn: Function) -> dict:
    """Map every non-void local value of ``fn`` to its printed name.

    Unnamed values are numbered sequentially (arguments first, then
    instruction results in block order).
    """
    names = {}
    counter = 0
    for arg in fn.args:
        if arg.name is None:
            names[arg] = str(counter)
            counter += 1
        else:
            names[arg] = arg.name
    for inst in fn.instructions():
        if isinstance(inst.type, VoidType):
            continue
        if inst.name is None:
            names[inst] = str(counter)
            counter += 1
        else:
            names[inst] = inst.name
    return names


def block_names(fn: Function) -> dict:
    taken = {b.name for b in fn.blocks if b.name is not None}
    names = {}
    counter = 0
    for block in fn.blocks:
        if block.name is not None:
            names[block] = block.name
            continue
        while f"bb{counter}" in taken:
            counter += 1
        names[block] = f"bb{counter}"
        taken.add(names[block])
    return names


def lookup_value(fn: Function, name: str):
    """Find a local value of ``fn`` by its printed name (``%`` optional)."""
    name = name.lstrip("%")
    for value, printed in value_names(fn).items():
        if printed == name:
            return value
    raise UnknownValue(f"no value %{name} in @{fn.name}")


# -- module ------------------------------------------------------------------


class Module:
    def __init__(self):
        self.functions: list[Function] = []
        self._by_name: dict[str, Function] = {}
        self._uses: dict = {}
        self._callers: dict = {}
        # type-class resolutions recorded by resolve_class, consumed by materialize
        self.pending: dict = {}

    # functions

    def get_function(self, name: str) -> Function | None:
        return self._by_name.get(name.lstrip("@"))

    def function(self, name: str) -> Function:
        fn = self.get_function(name)
        if fn is None:
            raise UnknownValue(f"no function @{name.lstrip('@')}")
        return fn

    def add_function(self, fn: Function, index: int | None = None) -> Function:
        if fn.name in self._by_name:
            raise ValueError(f"duplicate function @{fn.name}")
        fn.module = self
        if index is None:
            self.functions.append(fn)
        else:
            self.functions.insert(index, fn)
        self._by_name[fn.name] = fn
        self._callers.setdefault(fn, {})
        for inst in fn.instructions():
            self._register(inst)
        return fn

    def declare(self, name: str, ret: Type, params: Iterable = (), index: int | None = None) -> Function:
        return self.add_function(Function(name, FnType(ret, tuple(params))), index)

    def define(self, name: str, ret: Type, params: Iterable = (), arg_names=None) -> Function:
        return self.add_function(Function(name, FnType(ret, tuple(params)), arg_names))

    def first_definition_index(self) -> int:
        for i, fn in enumerate(self.functions):
            if not fn.is_declaration:
                return i
        return len(self.functions)

    def replace_function(self, old: Function, new: Function) -> None:
        """Swap ``new`` into ``old``'s position; callers are not rewritten."""
        i = self.functions.index(old)
        self.functions[i] = new
        del self._by_name[old.name]
        self._by_name[new.name] = new
        new.module = self
        self._callers.setdefault(new, {})
        for inst in new.instructions():
            self._register(inst)
        for inst in list(old.instructions()):
            self._unregister(inst)
        if not self._callers.get(old):
            self._callers.pop(old, None)
        old.module = None

    def remove_function(self, fn: Function) -> None:
        for inst in list(fn.instructions()):
            self._unregister(inst)
        self.functions.remove(fn)
        del self._by_name[fn.name]
        self._callers.pop(fn, None)
        fn.module = None

    def callers_of(self, fn: Function) -> list[Instruction]:
        return list(self._callers.get(fn, ()))

    # instructions

    def insert(self, block: Block, index: int, inst: Instruction) -> Instruction:
        if inst.parent is not None:
            raise ValueError("instruction is already attached")
        block.instructions.insert(index, inst)
        inst.parent = block
        if block.parent.module is self:
            self._register(inst)
        return inst

    def append(self, block: Block, inst: Instruction) -> Instruction:
        return self.insert(block, len(block.instructions), inst)

    def insert_before(self, anchor: Instruction, inst: Instruction) -> Instruction:
        block = anchor.parent
        return self.insert(block, block.instructions.index(anchor), inst)

    def remove_instruction(self, inst: Instruction) -> None:
        """Detach ``inst`` without checking its uses."""
        self._unregister(inst)
        inst.parent.instructions.remove(inst)
        inst.parent = None

    def set_operand(self, inst: Instruction, pos: int, value) -> None:
        attached = self.owns(inst)
        old = inst.operands[pos]
        if attached:
            self._uses[old].pop((inst, pos), None)
            if not self._uses[old]:
                del self._uses[old]
        inst.operands[pos] = value
        if attached:
            self._uses.setdefault(value, {})[(inst, pos)] = None

    def replace_all_uses(self, old, new) -> int:
        """Unchecked replacement of every operand slot holding ``old``."""
        slots = list(self._uses.get(old, ()))
        for inst, pos in slots:
            self.set_operand(inst, pos, new)
        return len(slots)

    def _register(self, inst: Instruction) -> None:
        for pos, v in enumerate(inst.operands):
            self._uses.setdefault(v, {})[(inst, pos)] = None
        if inst.callee is not None:
            self._callers.setdefault(inst.callee, {})[inst] = None

    def _unregister(self, inst: Instruction) -> None:
        for pos, v in enumerate(inst.operands):
            slots = self._uses.get(v)
            if slots is not None:
                slots.pop((inst, pos), None)
                if not slots:
                    del self._uses[v]
        if inst.callee is not None:
            self._callers.get(inst.callee, {}).pop(inst, None)

    # queries

    def owns(self, v) -> bool:
        if isinstance(v, Constant):
            return True
        if isinstance(v, Argument):
            return v.function.module is self
        if isinstance(v, Instruction):
            return v.parent is not None and v.parent.parent.module is self
        if isinstance(v, Function):
            return v.module is self
        return False

    def use_list(self, v) -> list[tuple[Instruction, int]]:
        """Ordered operand slots referencing ``v``."""
        return list(self._uses.get(v, ()))

    def has_uses(self, v) -> bool:
        return bool(self._uses.get(v))

    def index_snapshot(self) -> dict:
        return {v: set(slots) for v, slots in self._uses.items() if slots}

    def clone_with_map(self) -> tuple[Module, dict]:
        """Deep copy plus a map from every original object to its copy."""
        m = Module()
        vmap: dict = {}
        for fn in self.functions:
            nf = Function(fn.name, fn.type, [a.name for a in fn.args])
            nf.loc = fn.loc
            vmap[fn] = nf
            vmap.update(zip(fn.args, nf.args))
            for block in fn.blocks:
                vmap[block] = nf.add_block(block.name)
        pairs = []
        for fn in self.functions:
            for block in fn.blocks:
                nb = vmap[block]
                for inst in block.instructions:
                    ni = Instruction(inst.opcode, (), inst.type, pred=inst.pred,
                                     callee=vmap[inst.callee] if inst.callee is not None else None,
                                     targets=[vmap[t] for t in inst.targets], name=inst.name)
                    ni.loc = inst.loc
                    ni.parent = nb
                    nb.instructions.append(ni)
                    vmap[inst] = ni
                    pairs.append((inst, ni))
        for inst, ni in pairs:
            ni.operands = [vmap.get(o, o) if not isinstance(o, Constant) else o for o in inst.operands]
        for fn in self.functions:
            m.add_function(vmap[fn])
        for slot, ty in self.pending.items():
            key = vmap[slot] if isinstance(slot, Instruction) else slot.remap(vmap)
            m.pending[key] = ty
        return m, vmap

    def clone(self) -> Module:
        return self.clone_with_map()[0]

    def __str__(self):
        from .textio import print_module
        return print_module(self)


# -- module-level operations ---------------------------------------------------


def uses_of(module: Module, v) -> set:
    if not module.owns(v):
        raise UnknownValue(f"{v!r} does not belong to this module")
    return set(module.use_list(v))


def check_in_scope(module: Module, new, slots) -> None:
    """Raise ScopeError unless ``new`` is available at every slot."""
    from .dom import DominanceCache

    if isinstance(new, Constant):
        return
    cache = DominanceCache()
    for inst, pos in slots:
        if not cache.value_dominates(new, inst, pos):
            raise ScopeError(f"{new!r} does not dominate its use in {inst!r}")


def rauw(module: Module, old, new) -> int:
    """Replace all uses of ``old`` with ``new``; both must share one type."""
    if not module.owns(old):
        raise UnknownValue(f"{old!r} does not belong to this module")
    if not module.owns(new):
        raise UnknownValue(f"{new!r} does not belong to this module")
    if old.type != new.type:
        raise TypeMismatch(f"cannot replace {old.type} value with {new.type} value; use rauw_nt")
    if old is new or old == new:
        return 0
    slots = module.use_list(old)
    check_in_scope(module, new, slots)
    return module.replace_all_uses(old, new)


def erase(module: Module, target) -> None:
    if isinstance(target, Function):
        callers = module.callers_of(target)
        if callers:
            raise StillInUse(target, callers)
        if target.module is not module:
            raise UnknownValue(f"{target!r} does not belong to this module")
        module.remove_function(target)
        return
    if not module.owns(target):
        raise UnknownValue(f"{target!r} does not belong to this module")
    uses = module.use_list(target)
    if uses:
        raise StillInUse(target, uses)
    module.remove_instruction(target)


def clone(module: Module) -> Module:
    return module.clone()


# -- builder -------------------------------------------------------------------


class IRBuilder:
    """Appends instructions to a block, or inserts them before an anchor."""

    def __init__(self, module: Module, block: Block, before: Instruction | None = None):
        self.module = module
        self.block = block
        self.before = before

    def _emit(self, inst: Instruction) -> Instruction:
        if self.before is not None:
            return self.module.insert_before(self.before, inst)
        return self.module.append(self.block, inst)

    def binop(self, opcode, lhs, rhs, name=None):
        return self._emit(Instruction(opcode, [lhs, rhs], lhs.type, name=name))

    def icmp(self, pred, lhs, rhs, name=None):
        return self._emit(Instruction("icmp", [lhs, rhs], I1, pred=pred, name=name))

    def select(self, cond, a, b, name=None):
        return self._emit(Instruction("select", [cond, a, b], a.type, name=name))

    def call(self, callee: Function, args=(), name=None):
        return self._emit(Instruction("call", args, callee.type.ret, callee=callee, name=name))

    def phi(self, ty, incoming, name=None):
        incoming = list(incoming)
        return self._emit(Instruction("phi", [v for v, _ in incoming], ty,
                                      targets=[b for _, b in incoming], name=name))

    def br(self, dest: Block):
        return self._emit(Instruction("br", targets=[dest]))

    def condbr(self, cond, then: Block, otherwise: Block):
        return self._emit(Instruction("condbr", [cond], targets=[then, otherwise]))

    def ret(self, value=None):
        return self._emit(Instruction("ret", [] if value is None else [value]))

    def __getattr__(self, opcode):
        if opcode in BINARY_OPS:
            return lambda lhs, rhs, name=None: self.binop(opcode, lhs, rhs, name)
        if opcode.rstrip("_") in BINARY_OPS:
            return getattr(self, opcode.rstrip("_"))
        raise AttributeError(opcode)
