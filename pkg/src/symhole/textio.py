"""Parser and canonical printer for the textual IR subset, plus the
line-oriented hole-assignment format."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ParseError
from .ir import (BINARY_OPS, HOLE, I1, ICMP_PREDS, VOID, Constant, FnType, Function,
                 Instruction, IntType, Module, VoidType, block_names, value_names)


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    line: int
    column: int
    message: str

    def format(self, path: str = "<input>") -> str:
        return f"{path}:{self.line}:{self.column}: {self.severity}: {self.message}"

    def __str__(self):
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


# -- printing ----------------------------------------------------------------


def format_constant(c: Constant) -> str:
    return str(c.bits if c.type.width == 1 else c.signed)


class _FunctionPrinter:
    def __init__(self, fn: Function):
        self.fn = fn
        self.names = value_names(fn)
        self.labels = block_names(fn)

    def ref(self, v) -> str:
        if isinstance(v, Constant):
            return format_constant(v)
        name = self.names.get(v)
        return "%<badref>" if name is None else f"%{name}"

    def typed(self, v) -> str:
        return f"{v.type} {self.ref(v)}"

    def label(self, b) -> str:
        return f"%{self.labels.get(b, '<badref>')}"

    def instruction(self, inst: Instruction) -> str:
        op = inst.opcode
        ops = inst.operands
        if op in BINARY_OPS:
            body = f"{op} {inst.type} {self.ref(ops[0])}, {self.ref(ops[1])}"
        elif op == "icmp":
            body = f"icmp {inst.pred} {ops[0].type} {self.ref(ops[0])}, {self.ref(ops[1])}"
        elif op == "select":
            body = "select " + ", ".join(self.typed(v) for v in ops)
        elif op == "call":
            args = ", ".join(self.typed(v) for v in ops)
            body = f"call {inst.type} @{inst.callee.name}({args})"
        elif op == "phi":
            pairs = ", ".join(f"[ {self.ref(v)}, {self.label(b)} ]"
                              for v, b in zip(ops, inst.targets))
            body = f"phi {inst.type} {pairs}"
        elif op == "br":
            body = f"br label {self.label(inst.targets[0])}"
        elif op == "condbr":
            t, f = inst.targets
            body = f"br {self.typed(ops[0])}, label {self.label(t)}, label {self.label(f)}"
        else:
            body = f"ret {self.typed(ops[0])}" if ops else "ret void"
        if isinstance(inst.type, VoidType):
            return body
        return f"{self.ref(inst)} = {body}"

    def render(self) -> str:
        fn = self.fn
        if fn.is_declaration:
            params = ", ".join(str(t) for t in fn.type.params)
            return f"declare {fn.type.ret} @{fn.name}({params})"
        params = ", ".join(self.typed(a) for a in fn.args)
        lines = [f"define {fn.type.ret} @{fn.name}({params}) {{"]
        for block in fn.blocks:
            lines.append(f"{self.labels[block]}:")
            lines.extend("  " + self.instruction(i) for i in block.instructions)
        lines.append("}")
        return "\n".join(lines)


def print_function(fn: Function) -> str:
    return _FunctionPrinter(fn).render()


def print_module(module: Module) -> str:
    """Canonical text: declarations one per line, a blank line around each
    definition, exactly one trailing newline (none for an empty module)."""
    out = []
    prev = None
    for fn in module.functions:
        if prev is not None and not (prev.is_declaration and fn.is_declaration):
            out.append("")
        out.append(print_function(fn))
        prev = fn
    return "\n".join(out) + "\n" if out else ""


# -- lexing ------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>;[^\n]*)
  | (?P<local>%[-A-Za-z$._0-9]+)
  | (?P<global>@[-A-Za-z$._0-9]+)
  | (?P<label>[-A-Za-z$._0-9]+:)
  | (?P<int>-?[0-9]+)
  | (?P<word>[A-Za-z_][A-Za-z_0-9.]*)
  | (?P<punct>[=,(){}\[\]])
""", re.X)

_INT_TYPE = re.compile(r"i([0-9]+)$")


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int
    first: bool  # first token on its line


def _tokenize(text: str, diags: list) -> list:
    toks = []
    line, line_start, pos, first = 1, 0, 0, True
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            diags.append(Diagnostic("error", line, pos - line_start + 1,
                                    f"unexpected character {text[pos]!r}"))
            pos += 1
            continue
        kind = m.lastgroup
        if kind == "nl":
            line, line_start, first = line + 1, m.end(), True
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, m.start() - line_start + 1, first))
            first = False
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1, True))
    return toks


class _Fail(Exception):
    def __init__(self, tok, message):
        self.diag = Diagnostic("error", tok.line, tok.col, message)


@dataclass
class _Ref:
    name: str
    type: object
    tok: _Tok


@dataclass
class _BlockRef:
    name: str
    tok: _Tok


@dataclass
class _PendingFn:
    fn: Function
    calls: list = field(default_factory=list)


class _Parser:
    def __init__(self, text: str):
        self.diags: list = []
        self.toks = _tokenize(text, self.diags)
        self.i = 0

    # token helpers

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind in ("punct", "word"):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> _Tok:
        if not self.accept(text):
            raise _Fail(self.tok, f"expected '{text}', found {self._desc(self.tok)}")
        return self.toks[self.i - 1]

    @staticmethod
    def _desc(t: _Tok) -> str:
        return "end of input" if t.kind == "eof" else f"'{t.text}'"

    def skip_line(self, line: int) -> None:
        while self.tok.kind != "eof" and self.tok.line <= line:
            self.i += 1

    # grammar

    def type(self, allow_void=False):
        t = self.next()
        if t.kind == "local" and t.text == "%hole.t":
            return HOLE
        if t.kind == "word":
            if t.text == "void":
                if allow_void:
                    return VOID
                raise _Fail(t, "void is only allowed as a return type")
            m = _INT_TYPE.match(t.text)
            if m:
                try:
                    return IntType(int(m.group(1)))
                except ValueError as e:
                    raise _Fail(t, str(e)) from None
        raise _Fail(t, f"expected a type, found {self._desc(t)}")

    def global_name(self) -> tuple:
        t = self.next()
        if t.kind != "global":
            raise _Fail(t, f"expected a global name, found {self._desc(t)}")
        return t.text[1:], t

    def operand(self, ty):
        t = self.next()
        if t.kind == "local":
            return _Ref(t.text[1:], ty, t)
        if t.kind == "int" or (t.kind == "word" and t.text in ("true", "false")):
            if not isinstance(ty, IntType):
                raise _Fail(t, f"constant of non-integer type {ty}")
            n = {"true": 1, "false": 0}.get(t.text)
            n = int(t.text) if n is None else n
            try:
                return Constant.of(ty, n)
            except ValueError as e:
                raise _Fail(t, str(e)) from None
        raise _Fail(t, f"expected a value, found {self._desc(t)}")

    def typed_operand(self):
        ty = self.type()
        return self.operand(ty)

    def block_ref(self) -> _BlockRef:
        t = self.next()
        if t.kind != "local":
            raise _Fail(t, f"expected a block label, found {self._desc(t)}")
        return _BlockRef(t.text[1:], t)

    def parse(self) -> Module:
        pending = []
        while self.tok.kind != "eof":
            t = self.tok
            try:
                if t.kind == "word" and t.text == "declare":
                    pending.append(self.declaration())
                elif t.kind == "word" and t.text == "define":
                    pending.append(self.definition())
                else:
                    raise _Fail(t, f"expected 'declare' or 'define', found {self._desc(t)}")
            except _Fail as f:
                self.diags.append(f.diag)
                self.i += 1
                while self.tok.kind != "eof" and not (
                        self.tok.first and self.tok.text in ("declare", "define")):
                    self.i += 1
        module = Module()
        by_name = {}
        for p in pending:
            if p.fn.name in by_name:
                line, col = p.fn.loc
                self.diags.append(Diagnostic("error", line, col, f"redefinition of @{p.fn.name}"))
                continue
            by_name[p.fn.name] = p
        for p in by_name.values():
            for inst, tok in p.calls:
                target = by_name.get(inst.callee)
                if target is None:
                    self.diags.append(Diagnostic("error", tok.line, tok.col,
                                                 f"call to undeclared function @{inst.callee}"))
                    inst.callee = None
                else:
                    inst.callee = target.fn
        if self.diags:
            raise ParseError(sorted(self.diags, key=lambda d: (d.line, d.column)))
        for p in by_name.values():
            module.add_function(p.fn)
        return module

    def declaration(self) -> _PendingFn:
        self.expect("declare")
        ret = self.type(allow_void=True)
        name, tok = self.global_name()
        self.expect("(")
        params = []
        if not self.accept(")"):
            while True:
                params.append(self.type())
                if self.tok.kind == "local":
                    self.next()
                if self.accept(")"):
                    break
                self.expect(",")
        fn = Function(name, FnType(ret, tuple(params)))
        fn.loc = (tok.line, tok.col)
        return _PendingFn(fn)

    def definition(self) -> _PendingFn:
        self.expect("define")
        ret = self.type(allow_void=True)
        name, ftok = self.global_name()
        self.expect("(")
        params, arg_toks = [], []
        if not self.accept(")"):
            while True:
                params.append(self.type())
                arg_toks.append(self.next() if self.tok.kind == "local" else None)
                if self.accept(")"):
                    break
                self.expect(",")
        fn = Function(name, FnType(ret, tuple(params)),
                      [t.text[1:] if t else None for t in arg_toks])
        fn.loc = (ftok.line, ftok.col)
        self.expect("{")
        result = _PendingFn(fn)
        refs = []      # (inst, operand index, _Ref)
        brefs = []     # (inst, target index, _BlockRef)
        defs = {}
        for arg, t in zip(fn.args, arg_toks):
            if t is None:
                continue
            if arg.name in defs:
                self.diags.append(Diagnostic("error", t.line, t.col, f"redefinition of %{arg.name}"))
            defs[arg.name] = arg
        labels = {}
        block = None
        while not (self.tok.kind == "punct" and self.tok.text == "}"):
            t = self.tok
            if t.kind == "eof":
                raise _Fail(t, f"unterminated body of @{name}")
            if t.kind == "label":
                self.next()
                label = t.text[:-1]
                if label in labels:
                    self.diags.append(Diagnostic("error", t.line, t.col, f"redefinition of label %{label}"))
                block = fn.add_block(label)
                labels[label] = block
                continue
            if block is None:
                block = fn.add_block(None)
            try:
                inst, res_tok = self.instruction(refs, brefs, result)
            except _Fail as f:
                self.diags.append(f.diag)
                self.skip_line(t.line)
                continue
            inst.parent = block
            block.instructions.append(inst)
            if inst.name is not None:
                if inst.name in defs:
                    self.diags.append(Diagnostic("error", res_tok.line, res_tok.col,
                                                 f"redefinition of %{inst.name}"))
                defs[inst.name] = inst
        self.expect("}")
        if not fn.blocks:
            self.diags.append(Diagnostic("error", ftok.line, ftok.col, f"@{name} has no blocks"))
        for inst, k, ref in refs:
            value = defs.get(ref.name)
            if value is None:
                self.diags.append(Diagnostic("error", ref.tok.line, ref.tok.col,
                                             f"use of undefined value %{ref.name}"))
            elif ref.type is not None and value.type != ref.type:
                self.diags.append(Diagnostic("error", ref.tok.line, ref.tok.col,
                                             f"%{ref.name} has type {value.type}, annotated {ref.type}"))
            inst.operands[k] = value
        for inst, k, bref in brefs:
            target = labels.get(bref.name)
            if target is None:
                self.diags.append(Diagnostic("error", bref.tok.line, bref.tok.col,
                                             f"use of undefined label %{bref.name}"))
            inst.targets[k] = target
        for value in defs.values():
            if value.name is not None and value.name.isdigit():
                value.name = None
        for b in fn.blocks:
            if b.name is not None and b.name.isdigit():
                b.name = None
        return result

    def instruction(self, refs, brefs, pending_fn):
        res_tok = None
        name = None
        if self.tok.kind == "local" and self.toks[self.i + 1].text == "=":
            res_tok = self.next()
            name = res_tok.text[1:]
            self.expect("=")
        op_tok = self.next()
        op = op_tok.text
        loc = (op_tok.line, op_tok.col)
        if op_tok.kind != "word":
            raise _Fail(op_tok, f"expected an instruction, found {self._desc(op_tok)}")

        values, my_refs = [], []

        def add(v):
            if isinstance(v, _Ref):
                my_refs.append((len(values), v))
            values.append(v)

        targets, my_brefs = [], []

        def add_block(b):
            my_brefs.append((len(targets), b))
            targets.append(b)

        pred = callee = None
        if op in BINARY_OPS:
            ty = self.type()
            add(self.operand(ty))
            self.expect(",")
            add(self.operand(ty))
            rty, opcode = ty, op
        elif op == "icmp":
            pt = self.next()
            if pt.text not in ICMP_PREDS:
                raise _Fail(pt, f"unknown icmp predicate '{pt.text}'")
            pred = pt.text
            ty = self.type()
            add(self.operand(ty))
            self.expect(",")
            add(self.operand(ty))
            rty, opcode = I1, "icmp"
        elif op == "select":
            add(self.typed_operand())
            self.expect(",")
            rty = self.type()
            add(self.operand(rty))
            self.expect(",")
            add(self.operand(self.type()))
            opcode = "select"
        elif op == "call":
            rty = self.type(allow_void=True)
            callee, ctok = self.global_name()
            self.expect("(")
            if not self.accept(")"):
                while True:
                    add(self.typed_operand())
                    if self.accept(")"):
                        break
                    self.expect(",")
            opcode = "call"
        elif op == "phi":
            rty = self.type()
            while True:
                self.expect("[")
                add(self.operand(rty))
                self.expect(",")
                add_block(self.block_ref())
                self.expect("]")
                if not self.accept(","):
                    break
            opcode = "phi"
        elif op == "br":
            if self.accept("label"):
                add_block(self.block_ref())
                rty, opcode = VOID, "br"
            else:
                add(self.typed_operand())
                self.expect(",")
                self.expect("label")
                add_block(self.block_ref())
                self.expect(",")
                self.expect("label")
                add_block(self.block_ref())
                rty, opcode = VOID, "condbr"
        elif op == "ret":
            if not self.accept("void"):
                add(self.typed_operand())
            rty, opcode = VOID, "ret"
        else:
            raise _Fail(op_tok, f"unknown instruction '{op}'")

        if name is not None and isinstance(rty, VoidType):
            raise _Fail(res_tok, "cannot name an instruction of void type")
        placeholder_values = [None if isinstance(v, _Ref) else v for v in values]
        inst = Instruction(opcode, placeholder_values, rty, pred=pred, targets=[None] * len(targets), name=name)
        inst.callee = callee
        inst.loc = loc
        refs.extend((inst, k, r) for k, r in my_refs)
        brefs.extend((inst, k, b) for k, b in my_brefs)
        if opcode == "call":
            pending_fn.calls.append((inst, ctok))
        return inst, res_tok


def parse_module(text: str) -> Module:
    """Parse IR text; raises :class:`ParseError` carrying every diagnostic."""
    return _Parser(text).parse()


# -- assignments -------------------------------------------------------------


@dataclass(frozen=True)
class ValueRef:
    """A reference to a local value by printed name, optionally typed."""

    name: str
    type: IntType | None = None

    def __str__(self):
        return f"{self.type} %{self.name}" if self.type is not None else f"%{self.name}"


@dataclass(frozen=True)
class OpExpr:
    """A concrete operation over in-scope values, e.g. ``and i4 %x, %y``."""

    opcode: str
    type: IntType
    operands: tuple
    pred: str | None = None

    def __str__(self):
        def ref(v):
            return format_constant(v) if isinstance(v, Constant) else f"%{v.name}"
        head = f"icmp {self.pred}" if self.opcode == "icmp" else self.opcode
        return f"{head} {self.type} {ref(self.operands[0])}, {ref(self.operands[1])}"


@dataclass(frozen=True)
class Assignment:
    hole: str
    value: object  # Constant | ValueRef | OpExpr
    line: int = 0

    def __str__(self):
        return f"@{self.hole} = {self.value}"


@dataclass
class AssignmentSet:
    entries: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def holes(self) -> list:
        return [e.hole for e in self.entries]


def format_assignments(assignments) -> str:
    return "".join(f"{e}\n" for e in assignments)


_ASSIGN_TOKEN = re.compile(r"\s*(%[-A-Za-z$._0-9]+|@[-A-Za-z$._0-9]+|-?[0-9]+|[A-Za-z_][A-Za-z_0-9.]*|[=,]|\S)")


def _assign_tokens(line: str) -> list:
    out, pos = [], 0
    while pos < len(line):
        m = _ASSIGN_TOKEN.match(line, pos)
        if m is None:
            break
        out.append((m.group(1), m.start(1) + 1))
        pos = m.end()
    return out


def _parse_assignment(tokens, lineno) -> Assignment:
    toks = list(tokens)
    k = 0
    end_col = toks[-1][1] + len(toks[-1][0]) if toks else 1

    def fail(message, at=None):
        col = toks[at][1] if at is not None and at < len(toks) else end_col
        raise _Fail(_Tok("x", "", lineno, col, False), message)

    def take():
        nonlocal k
        if k >= len(toks):
            fail("unexpected end of line")
        k += 1
        return toks[k - 1][0]

    def int_type(text, at):
        m = _INT_TYPE.match(text)
        if not m:
            fail(f"expected an integer type, found '{text}'", at)
        try:
            return IntType(int(m.group(1)))
        except ValueError as e:
            fail(str(e), at)

    def literal(text, ty, at):
        n = {"true": 1, "false": 0}.get(text)
        if n is None:
            if not re.fullmatch(r"-?[0-9]+", text):
                fail(f"expected a constant, found '{text}'", at)
            n = int(text)
        try:
            return Constant.of(ty, n)
        except ValueError as e:
            fail(str(e), at)

    def operand(ty):
        at = k
        text = take()
        return ValueRef(text[1:]) if text.startswith("%") else literal(text, ty, at)

    hole = take()
    if not hole.startswith("@"):
        fail(f"expected a hole name, found '{hole}'", 0)
    if take() != "=":
        fail("expected '='", 1)
    at = k
    head = take()
    if head.startswith("%"):
        value = ValueRef(head[1:])
    elif head in BINARY_OPS or head == "icmp":
        pred = None
        if head == "icmp":
            pat = k
            pred = take()
            if pred not in ICMP_PREDS:
                fail(f"unknown icmp predicate '{pred}'", pat)
        ty = int_type(take(), k - 1)
        lhs = operand(ty)
        if take() != ",":
            fail("expected ','", k - 1)
        value = OpExpr(head, ty, (lhs, operand(ty)), pred)
    else:
        ty = int_type(head, at)
        vat = k
        text = take()
        value = ValueRef(text[1:], ty) if text.startswith("%") else literal(text, ty, vat)
    if k < len(toks):
        fail(f"unexpected '{toks[k][0]}'", k)
    return Assignment(hole[1:], value, lineno)


def parse_assignments(text: str) -> AssignmentSet:
    """Parse ``@holeN = <rhs>`` lines; ``#`` starts a comment."""
    diags, entries, seen = [], [], {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        try:
            entry = _parse_assignment(_assign_tokens(line), lineno)
        except _Fail as f:
            diags.append(f.diag)
            continue
        if entry.hole in seen:
            col = line.index("@") + 1
            diags.append(Diagnostic("error", lineno, col,
                                    f"duplicate assignment to @{entry.hole} (first on line {seen[entry.hole]})"))
            continue
        seen[entry.hole] = lineno
        entries.append(entry)
    if diags:
        raise ParseError(diags)
    return AssignmentSet(entries)
