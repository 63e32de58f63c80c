"""Dominator trees over function CFGs and value-level dominance queries."""

from __future__ import annotations

from dataclasses import dataclass, field

from .ir import Argument, Constant, Function, Instruction


def reverse_postorder(entry) -> list:
    order, seen = [], {entry}
    stack = [(entry, iter(entry.successors()))]
    while stack:
        node, succs = stack[-1]
        for s in succs:
            if s not in seen:
                seen.add(s)
                stack.append((s, iter(s.successors())))
                break
        else:
            stack.pop()
            order.append(node)
    order.reverse()
    return order


@dataclass
class DomTree:
    entry: object
    idom: dict
    order: list
    unreachable: list = field(default_factory=list)

    def dominates(self, a, b) -> bool:
        """True if block ``a`` dominates block ``b`` (reflexive)."""
        if b not in self.idom:
            return False
        node = b
        while node is not None:
            if node is a:
                return True
            node = self.idom[node]
        return False

    def reachable(self, block) -> bool:
        return block in self.idom


def dominators(fn: Function) -> DomTree:
    """Iterative dominator computation (Cooper, Harvey and Kennedy)."""
    if fn.is_declaration:
        raise ValueError(f"@{fn.name} is a declaration")
    entry = fn.blocks[0]
    order = reverse_postorder(entry)
    index = {b: i for i, b in enumerate(order)}
    preds = {b: [] for b in order}
    for b in order:
        for s in b.successors():
            if s in preds and b not in preds[s]:
                preds[s].append(b)

    idom = {entry: entry}

    def intersect(a, b):
        while a is not b:
            while index[a] > index[b]:
                a = idom[a]
            while index[b] > index[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for b in order[1:]:
            new = None
            for p in preds[b]:
                if p in idom:
                    new = p if new is None else intersect(p, new)
            if idom.get(b) is not new:
                idom[b] = new
                changed = True
    idom[entry] = None
    unreachable = [b for b in fn.blocks if b not in index]
    return DomTree(entry, idom, order, unreachable)


class DominanceCache:
    """Caches dominator trees per function for repeated value queries."""

    def __init__(self):
        self._trees = {}
        self._positions = {}

    def tree(self, fn: Function) -> DomTree:
        if fn not in self._trees:
            self._trees[fn] = dominators(fn)
        return self._trees[fn]

    def _pos(self, inst: Instruction) -> int:
        block = inst.parent
        if block not in self._positions:
            self._positions[block] = {id(i): k for k, i in enumerate(block.instructions)}
        return self._positions[block][id(inst)]

    def value_dominates(self, value, user: Instruction, pos: int | None = None) -> bool:
        """True if ``value`` is available at operand ``pos`` of ``user``.

        With ``pos`` None the query is for a plain use located at ``user``.
        """
        if isinstance(value, Constant):
            return True
        fn = user.function
        if isinstance(value, Argument):
            return value.function is fn
        if not isinstance(value, Instruction) or value.function is not fn:
            return False
        tree = self.tree(fn)
        if pos is not None and user.opcode == "phi":
            incoming = user.targets[pos]
            return tree.dominates(value.parent, incoming)
        if value.parent is user.parent:
            return self._pos(value) < self._pos(user)
        return tree.dominates(value.parent, user.parent)
