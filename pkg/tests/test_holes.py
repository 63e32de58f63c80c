import random

import pytest
from hypothesis import given, settings, strategies as st

from symhole import (HOLE, Constant, IntType, IRBuilder, Module, find_hole, list_hole_ops,
                     list_holes, new_hole, new_hole_op, new_hole_select, parse_module,
                     print_module, rauw_nt, verify)
from symhole.errors import ScopeError, TypeConflict
from symhole.holes import hole_op_kind, is_hole_name, parse_hole_op_name

from randgen import random_module

I32, I64 = IntType(32), IntType(64)


def sketch(params=(), ret=I32):
    m = Module()
    fn = m.define("f", ret, list(params))
    ret_inst = IRBuilder(m, fn.add_block("entry")).ret(Constant.of(ret, 0))
    return m, fn, ret_inst


def test_typed_hole():
    m, fn, ret = sketch()
    h = new_hole(m, fn, ret, I32)
    assert h.name == "hole0" and h.declared_type == I32 and h.resolved_type == I32
    text = print_module(m)
    assert text.startswith("declare i32 @hole0()\n\n")
    assert "  %0 = call i32 @hole0()\n" in text
    assert verify(m) == []


def test_dependency_hole():
    m, fn, ret = sketch([I32, I32])
    a, b = fn.args
    new_hole(m, fn, ret)
    new_hole(m, fn, ret)
    new_hole(m, fn, ret)
    h = new_hole(m, fn, ret, None, [a, b])
    assert h.name == "hole3"
    assert h.deps == [a, b]
    text = print_module(m)
    assert "declare %hole.t @hole3(i32, i32)\n" in text
    assert "call %hole.t @hole3(i32 %0, i32 %1)" in text
    assert verify(m) == []


def test_numbering_reuses_smallest_free_index():
    m, fn, ret = sketch()
    h0 = new_hole(m, fn, ret)
    h1 = new_hole(m, fn, ret)
    assert (h0.name, h1.name) == ("hole0", "hole1")
    rauw_nt(m, h0.call_site, Constant.of(I32, 1))
    assert new_hole(m, fn, ret).name == "hole0"


def test_hole_dep_out_of_scope():
    m, fn, ret = sketch([I32])
    b = IRBuilder(m, fn.entry, before=ret)
    first = b.add(fn.args[0], fn.args[0])
    later = b.mul(first, first)
    before = print_module(m)
    with pytest.raises(ScopeError):
        new_hole(m, fn, first, None, [later])
    assert print_module(m) == before


def test_declarations_precede_definitions():
    m = parse_module("define i32 @g() {\nentry:\n  ret i32 1\n}\n")
    fn = m.function("g")
    new_hole(m, fn, fn.entry.terminator, I32)
    assert [f.name for f in m.functions] == ["hole0", "g"]


def test_hole_op_over_two_holes():
    m, fn, ret = sketch()
    h0 = new_hole(m, fn, ret)
    h1 = new_hole(m, fn, ret)
    r = new_hole_op(m, fn, ret, "add", h0.value, h1.value)
    assert r.type == HOLE
    text = print_module(m)
    assert "declare %hole.t @hole.op.add(%hole.t, %hole.t)\n" in text
    assert "%2 = call %hole.t @hole.op.add(%hole.t %0, %hole.t %1)" in text
    assert verify(m) == []
    (op,) = list_hole_ops(m)
    assert op.call_site is r and op.operands == (h0.value, h1.value)


def test_hole_op_declaration_shared():
    m, fn, ret = sketch()
    hs = [new_hole(m, fn, ret).value for _ in range(3)]
    new_hole_op(m, fn, ret, "add", hs[0], hs[1])
    new_hole_op(m, fn, ret, "add", hs[1], hs[2])
    assert print_module(m).count("declare %hole.t @hole.op.add") == 1
    assert len(m.callers_of(m.function("hole.op.add"))) == 2
    assert verify(m) == []


def test_hole_op_with_concrete_operand_materializes():
    m, fn, ret = sketch([I32])
    h = new_hole(m, fn, ret)
    r = new_hole_op(m, fn, ret, "add", fn.args[0], h.value)
    assert r.opcode == "add" and r.type == I32
    text = print_module(m)
    assert "declare i32 @hole0()" in text
    assert "%2 = add i32 %0, %1" in text
    assert "hole.op" not in text
    assert verify(m) == []
    assert find_hole(m, "hole0").resolved_type == I32


def test_hole_op_conflicting_operands():
    m, fn, ret = sketch([I32, I64])
    before = print_module(m)
    with pytest.raises(TypeConflict):
        new_hole_op(m, fn, ret, "add", fn.args[0], fn.args[1])
    assert print_module(m) == before


def test_hole_op_conflict_through_class():
    m, fn, ret = sketch([I32, I64])
    h = new_hole(m, fn, ret)
    new_hole_op(m, fn, ret, "add", fn.args[0], h.value)  # hole0 is now i32
    hv = find_hole(m, "hole0").value
    before = print_module(m)
    with pytest.raises(TypeConflict):
        new_hole_op(m, fn, ret, "xor", fn.args[1], hv)
    assert print_module(m) == before


def test_icmp_hole_op():
    m, fn, ret = sketch(ret=IntType(1))
    a, b = new_hole(m, fn, ret).value, new_hole(m, fn, ret).value
    c = new_hole_op(m, fn, ret, "icmp.slt", a, b)
    assert c.type == IntType(1)
    assert "declare i1 @hole.op.icmp.slt(%hole.t, %hole.t)" in print_module(m)
    m.set_operand(ret, 0, c)
    assert verify(m) == []


def test_select_hole_op():
    m, fn, ret = sketch([IntType(1)])
    a, b = new_hole(m, fn, ret).value, new_hole(m, fn, ret).value
    s = new_hole_select(m, fn, ret, fn.args[0], a, b)
    assert "declare %hole.t @hole.op.select(i1, %hole.t, %hole.t)" in print_module(m)
    assert s.type == HOLE
    assert verify(m) == []


def test_list_holes_mixed():
    m, fn, ret = sketch()
    h0 = new_hole(m, fn, ret, I32)
    h1 = new_hole(m, fn, ret)
    h2 = new_hole(m, fn, ret)
    h3 = new_hole(m, fn, ret, None, [h0.value, h1.value])
    new_hole_op(m, fn, ret, "add", h2.value, h3.value)
    holes = list_holes(m)
    assert [h.name for h in holes] == ["hole0", "hole1", "hole2", "hole3"]
    assert [h.resolved_type for h in holes] == [I32, None, None, None]
    assert holes[3].deps == [h0.value, h1.value]
    assert verify(m) == []


def test_list_holes_empty_and_after_fill():
    assert list_holes(parse_module("define i8 @f() {\nentry:\n  ret i8 0\n}\n")) == []
    m, fn, ret = sketch()
    h0 = new_hole(m, fn, ret)
    new_hole(m, fn, ret, None, [h0.value])
    rauw_nt(m, h0.value, Constant.of(I32, 5))
    assert [h.name for h in list_holes(m)] == ["hole1"]


def test_names():
    assert is_hole_name("hole0") and is_hole_name("hole12")
    assert not is_hole_name("hole") and not is_hole_name("hole.op.add") and not is_hole_name("holex")
    assert parse_hole_op_name("hole.op.icmp.uge").pred == "uge"
    assert parse_hole_op_name("hole.op.icmp.bogus") is None
    assert parse_hole_op_name("hole.op.udiv") is None
    assert hole_op_kind("mul").name == "hole.op.mul"


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_api_built_modules_verify(seed):
    m = random_module(random.Random(seed))
    assert verify(m) == []
    for h in list_holes(m):
        assert len(m.callers_of(h.declaration)) == 1
        assert len(h.deps) == len(h.declaration.type.params)
    for op in list_hole_ops(m):
        assert len(op.operands) == (3 if op.op_name == "hole.op.select" else 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32))
def test_numbering_deterministic(seed):
    a = print_module(random_module(random.Random(seed)))
    b = print_module(random_module(random.Random(seed)))
    assert a == b
