"""Reference evaluator for hole-free functions and an equivalence checker."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import (FuelExhausted, InterpError, PolicyInfeasible, TypeMismatch,
                     UnresolvedHoles)
from .holes import is_reserved_name
from .ir import Constant, Function, Module, VoidType

DEFAULT_FUEL = 10**6


def to_signed(bits: int, width: int) -> int:
    return bits - (1 << width) if bits >> (width - 1) & 1 else bits


def eval_binop(op: str, width: int, a: int, b: int) -> int:
    """Evaluate a binary opcode on unsigned ``width``-bit encodings.

    Shift amounts are read unsigned; amounts of ``width`` or more give 0,
    or all ones for ``ashr`` of a negative value.
    """
    mask = (1 << width) - 1
    if op == "add":
        return (a + b) & mask
    if op == "sub":
        return (a - b) & mask
    if op == "mul":
        return (a * b) & mask
    if op == "and":
        return a & b
    if op == "or":
        return a | b
    if op == "xor":
        return a ^ b
    if op == "shl":
        return 0 if b >= width else (a << b) & mask
    if op == "lshr":
        return 0 if b >= width else a >> b
    if op == "ashr":
        s = to_signed(a, width)
        return (s >> min(b, width)) & mask
    raise InterpError(f"unknown binary opcode {op!r}")


def eval_icmp(pred: str, width: int, a: int, b: int) -> int:
    if pred[0] == "s":
        a, b = to_signed(a, width), to_signed(b, width)
    rel = pred[-2:] if pred not in ("eq", "ne") else pred
    return int({"eq": a == b, "ne": a != b, "lt": a < b, "le": a <= b,
                "gt": a > b, "ge": a >= b}[rel])


@dataclass(frozen=True)
class RunResult:
    value: Constant | None
    steps: int

    def __str__(self):
        return "void" if self.value is None else str(self.value)


def _reachable_functions(fn: Function) -> list[Function]:
    seen, stack = [fn], [fn]
    while stack:
        f = stack.pop()
        for inst in f.instructions():
            if inst.opcode == "call" and inst.callee not in seen:
                seen.append(inst.callee)
                stack.append(inst.callee)
    return seen


def check_runnable(fn: Function) -> None:
    for f in _reachable_functions(fn):
        if is_reserved_name(f.name):
            raise UnresolvedHoles(f"@{fn.name} still calls @{f.name}")
        if f.is_declaration:
            raise InterpError(f"@{fn.name} calls external function @{f.name}")


class _Machine:
    def __init__(self, fuel: int):
        self.fuel = fuel
        self.steps = 0

    def call(self, fn: Function, args: list[int]):
        env = dict(zip(fn.args, args))

        def val(v):
            return v.bits if isinstance(v, Constant) else env[v]

        block, prev = fn.blocks[0], None
        while True:
            insts = block.instructions
            k = 0
            # phis read their inputs simultaneously on block entry
            phis = []
            while k < len(insts) and insts[k].opcode == "phi":
                phi = insts[k]
                phis.append((phi, val(phi.operands[phi.targets.index(prev)])))
                k += 1
            for phi, v in phis:
                self._tick()
                env[phi] = v
            for inst in insts[k:]:
                self._tick()
                op = inst.opcode
                if op == "icmp":
                    a, b = inst.operands
                    env[inst] = eval_icmp(inst.pred, a.type.width, val(a), val(b))
                elif op == "select":
                    c, a, b = inst.operands
                    env[inst] = val(a) if val(c) else val(b)
                elif op == "call":
                    r = self.call(inst.callee, [val(v) for v in inst.operands])
                    if r is not None:
                        env[inst] = r
                elif op == "br":
                    prev, block = block, inst.targets[0]
                    break
                elif op == "condbr":
                    prev, block = block, inst.targets[0 if val(inst.operands[0]) else 1]
                    break
                elif op == "ret":
                    return val(inst.operands[0]) if inst.operands else None
                else:
                    a, b = inst.operands
                    env[inst] = eval_binop(op, inst.type.width, val(a), val(b))
            else:
                raise InterpError(f"fell off the end of a block in @{fn.name}")

    def _tick(self):
        self.steps += 1
        if self.steps > self.fuel:
            raise FuelExhausted(f"exceeded {self.fuel} steps")


def _coerce_args(fn: Function, args) -> list[int]:
    params = fn.type.params
    if len(args) != len(params):
        raise TypeMismatch(f"@{fn.name} takes {len(params)} argument(s), got {len(args)}")
    out = []
    for a, p in zip(args, params):
        if isinstance(a, Constant):
            if a.type != p:
                raise TypeMismatch(f"argument of type {a.type} passed for {p}")
            out.append(a.bits)
        else:
            out.append(Constant.of(p, a).bits)
    return out


def _function(module: Module, fn) -> Function:
    return fn if isinstance(fn, Function) else module.function(fn)


def run(module: Module, fn_name, args, fuel: int = DEFAULT_FUEL) -> RunResult:
    """Execute a hole-free function; ``args`` are Constants or plain ints."""
    fn = _function(module, fn_name)
    if fn.is_declaration:
        raise InterpError(f"@{fn.name} has no body")
    check_runnable(fn)
    machine = _Machine(fuel)
    bits = machine.call(fn, _coerce_args(fn, list(args)))
    ret = fn.type.ret
    value = None if isinstance(ret, VoidType) else Constant(ret, bits)
    return RunResult(value, machine.steps)


# -- equivalence ---------------------------------------------------------------


@dataclass(frozen=True)
class Exhaustive:
    max_input_bits: int = 16


@dataclass(frozen=True)
class Sampled:
    n: int = 1024
    seed: int = 0xC0FFEE


@dataclass(frozen=True)
class Equivalent:
    inputs_checked: int


@dataclass(frozen=True)
class Counterexample:
    args: tuple
    lhs: Constant | None
    rhs: Constant | None


class Lcg64:
    """64-bit linear congruential generator (Knuth's MMIX constants).

    ``next()`` returns the high 32 bits of the advanced state, so sampled
    inputs are reproducible across platforms and Python versions.
    """

    A = 6364136223846793005
    C = 1442695040888963407
    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self.MASK

    def next(self) -> int:
        self.state = (self.state * self.A + self.C) & self.MASK
        return self.state >> 32

    def bits(self, width: int) -> int:
        out, have = 0, 0
        while have < width:
            out = (out << 32) | self.next()
            have += 32
        return out & ((1 << width) - 1)


def input_bits(fn: Function) -> int:
    return sum(p.width for p in fn.type.params)


def default_policy(fn: Function, seed: int = 0xC0FFEE):
    return Exhaustive(16) if input_bits(fn) <= 16 else Sampled(1024, seed)


def _inputs(fn: Function, policy):
    widths = [p.width for p in fn.type.params]
    if isinstance(policy, Exhaustive):
        if sum(widths) > policy.max_input_bits:
            raise PolicyInfeasible(f"@{fn.name} has {sum(widths)} input bits, "
                                   f"limit is {policy.max_input_bits}")
        return itertools.product(*(range(1 << w) for w in widths))
    if isinstance(policy, Sampled):
        rng = Lcg64(policy.seed)
        return (tuple(rng.bits(w) for w in widths) for _ in range(policy.n))
    raise TypeError(f"unknown policy {policy!r}")


def check_equiv(module: Module, f, g, policy=None, fuel: int = DEFAULT_FUEL):
    """Compare two hole-free functions with identical signatures."""
    f, g = _function(module, f), _function(module, g)
    if f.type != g.type:
        raise TypeMismatch(f"@{f.name} and @{g.name} have different signatures")
    for fn in (f, g):
        if fn.is_declaration:
            raise InterpError(f"@{fn.name} has no body")
        check_runnable(fn)
    if policy is None:
        policy = default_policy(f)
    ret = f.type.ret
    count = 0
    for bits in _inputs(f, policy):
        a = _Machine(fuel).call(f, list(bits))
        b = _Machine(fuel).call(g, list(bits))
        count += 1
        if a != b:
            args = tuple(Constant(p, v) for p, v in zip(f.type.params, bits))
            wrap = (lambda v: None) if isinstance(ret, VoidType) else (lambda v: Constant(ret, v))
            return Counterexample(args, wrap(a), wrap(b))
    return Equivalent(count)
