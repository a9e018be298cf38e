import pytest

from faultres.circuit_model import (
    ArityMismatch,
    CombinationalCycle,
    GateInstance,
    InvalidK,
    UnknownBlacklistGate,
    build_and_validate,
    fault_locations,
    unroll,
)
from faultres.netlist_io import GateStmt, NetlistDoc, parse_netlist
from faultres.oracle import random_netlist

SEQ_TEXT = ".inputs i\n.outputs g\n.reg r init=0\ngate g = xor(i, r)\nnext r = g\n"


def test_build_rect(rect_parity):
    c = rect_parity
    assert len(c.gates) == 22
    topo = list(c.topo_order)
    assert topo.index("s2") < topo.index("s4")
    assert topo.index("s2") < topo.index("s5")
    assert set(topo) == {g.name for g in c.gates}


def test_combinational_cycle():
    text = ".inputs i\n.outputs a\ngate a = not(b)\ngate b = not(a)\n"
    with pytest.raises(CombinationalCycle) as exc:
        build_and_validate(parse_netlist(text))
    assert set(exc.value.path) >= {"a", "b"}


def test_build_arity_mismatch():
    # Construct the doc directly; the parser would reject this earlier.
    doc = NetlistDoc("t", ["a", "b"], ["g"], None, [],
                     [GateStmt("g", "not", ("a", "b"))], {})
    with pytest.raises(ArityMismatch):
        build_and_validate(doc)


def test_unroll_rect(rect_parity):
    u = unroll(rect_parity, 1)
    assert u.logic_instance_count == 22
    assert len(u.instances) == 22
    assert all(not inst.is_register for inst in u.instances)


def test_unroll_sequential():
    c = build_and_validate(parse_netlist(SEQ_TEXT))
    u = unroll(c, 3)
    logic = [i for i in u.instances if not i.is_register]
    regs = [i for i in u.instances if i.is_register]
    assert [i.label for i in logic] == ["g@1", "g@2", "g@3"]
    assert [i.label for i in regs] == ["r@1", "r@2", "r@3"]


def test_unroll_k_zero():
    c = build_and_validate(parse_netlist(SEQ_TEXT))
    with pytest.raises(InvalidK):
        unroll(c, 0)


def test_fault_locations_rect(rect_parity_unrolled):
    blacklist = {"p1", "p2", "p3", "p4", "p5", "p6", "c1", "c2", "c3", "flag"}
    locs = fault_locations(rect_parity_unrolled, blacklist, "c")
    assert {i.label for i in locs} == {
        f"{n}@1" for n in ["s1", "s2", "s3", "s4", "s5", "s6", "s7", "s8",
                           "w", "x", "y", "z"]}
    assert len(locs) == 12


def test_fault_locations_r_on_combinational(rect_parity_unrolled):
    assert fault_locations(rect_parity_unrolled, set(), "r") == set()


def test_fault_locations_cr_with_register():
    c = build_and_validate(parse_netlist(SEQ_TEXT))
    u = unroll(c, 2)
    locs = fault_locations(u, set(), "cr")
    assert {i.label for i in locs} == {"g@1", "g@2", "r@1", "r@2"}
    assert {i.label for i in locs if i.is_register} == {"r@1", "r@2"}


def test_fault_locations_class_partition():
    for seed in range(10):
        doc = random_netlist(seed, max_gates=8, max_regs=2).doc
        u = unroll(build_and_validate(doc), 2)
        c_locs = fault_locations(u, set(), "c")
        r_locs = fault_locations(u, set(), "r")
        cr_locs = fault_locations(u, set(), "cr")
        assert c_locs & r_locs == set()
        assert c_locs | r_locs == cr_locs


def test_fault_locations_blacklist_antitone(rect_parity_unrolled):
    b1 = {"s1"}
    b2 = {"s1", "s2", "w"}
    l1 = fault_locations(rect_parity_unrolled, b1, "c")
    l2 = fault_locations(rect_parity_unrolled, b2, "c")
    assert l2 <= l1


def test_fault_locations_unknown_blacklist(rect_parity_unrolled):
    with pytest.raises(UnknownBlacklistGate):
        fault_locations(rect_parity_unrolled, {"ghost"}, "c")


def test_instance_labels():
    inst = GateInstance(3, "s7")
    assert inst.label == "s7@3"
    assert GateInstance(1, "r", is_register=True).label == "r@1"
