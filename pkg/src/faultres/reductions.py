"""Verdict-preserving shrinking of the fault-type set and the vulnerable-gate
set, applied before encoding.

Both gate reductions rest on the same observation: if every path out of a
gate (or a whole sub-circuit) is funneled through a single downstream logic
gate, a fault inside is either absorbed or indistinguishable from one fault
on that exit gate, so the inner gates need no control variables of their own.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .circuit_model import FaultResistanceModel, SequentialCircuit, UnrolledCircuit, check_blacklist
from .simulator import FaultType


class NotApplicable(Exception):
    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class FaultTypeReduction:
    model: FaultResistanceModel
    note: Optional[str] = None


@dataclass
class ExitMap:
    """m1 maps every gate to its exit gate; m2 maps each exit gate to the set
    of gates absorbed into its single-exit sub-circuit (itself included)."""

    m1: dict
    m2: dict

    def absorbed(self):
        """Gates merged into some other gate's sub-circuit."""
        return {g for g, exit_ in self.m1.items() if g != exit_}


@dataclass(frozen=True)
class AppliedReduction:
    name: str
    gates_removed: int
    detail: str = ""


@dataclass(frozen=True)
class SkippedReduction:
    name: str
    reason: str


@dataclass
class ReductionPlan:
    effective_model: FaultResistanceModel
    effective_blacklist: frozenset
    applied: list = field(default_factory=list)
    skipped: list = field(default_factory=list)


def reduce_fault_types(model: FaultResistanceModel) -> FaultTypeReduction:
    """Collapse the type set to {bit-flip} when bit-flip is allowed: any output
    change a set/reset fault produces is a flip of that signal, so restricting
    to flips preserves the verdict in both directions."""

    if FaultType.BITFLIP in model.fault_types:
        if model.fault_types == frozenset({FaultType.BITFLIP}):
            return FaultTypeReduction(model, note="type set already {bf}")
        reduced = FaultResistanceModel(
            n_e=model.n_e, n_c=model.n_c,
            fault_types=frozenset({FaultType.BITFLIP}),
            location=model.location)
        return FaultTypeReduction(reduced)
    return FaultTypeReduction(
        model, note="bf not in the allowed types; reduction would not preserve counterexamples")


def _successor_info(circuit: SequentialCircuit, net):
    gate_succs = circuit.successors.get(net, ())
    taps_output = circuit.drives_output(net)
    feeds_register = circuit.drives_register(net)
    return gate_succs, taps_output, feeds_register


def single_successor_blacklist(unrolled: UnrolledCircuit, blacklist, model) -> set:
    """Logic gates whose output feeds exactly one unprotected logic gate (and
    nothing else: no output port, no register).  Computed on the frame; the
    same set applies in every cycle.  Registers stay vulnerable, mirroring the
    exit-map reduction, so this set is always a subset of the aggressive one."""

    if not (FaultType.BITFLIP in model.fault_types
            or {FaultType.SET, FaultType.RESET} <= model.fault_types):
        raise NotApplicable("needs bf in T or {s,r} subset of T")
    if model.location not in ("c", "cr"):
        raise NotApplicable("needs location c or cr")

    circuit = unrolled.circuit
    blacklist = check_blacklist(circuit, blacklist)
    extra = set()
    for net in list(circuit.gate_map):
        if net in blacklist:
            continue
        succs, taps_output, feeds_register = _successor_info(circuit, net)
        if taps_output or feeds_register or len(succs) != 1:
            continue
        succ = succs[0]
        if succ in blacklist:
            continue
        extra.add(net)
    return extra


def single_exit_map(unrolled: UnrolledCircuit, blacklist) -> ExitMap:
    """Maximal single-exit sub-circuits, by one reverse-topological sweep of
    the frame.  A gate merges into its successors' common exit only when every
    successor (including output ports and register writes) already belongs to
    that exit, the exit is unprotected, and the exit is an internal logic gate.
    Register reads are always their own exits and never merge downstream."""

    circuit = unrolled.circuit
    blacklist = check_blacklist(circuit, blacklist)
    m1, m2 = {}, {}

    def own_exit(net):
        m1[net] = net
        m2.setdefault(net, set()).add(net)

    for net in reversed(circuit.topo_order):
        succs, taps_output, feeds_register = _successor_info(circuit, net)
        if taps_output or feeds_register or not succs:
            own_exit(net)
            continue
        exits = {m1[s] for s in succs}
        if len(exits) != 1:
            own_exit(net)
            continue
        exit_ = exits.pop()
        if exit_ in blacklist or exit_ not in circuit.gate_map:
            own_exit(net)
            continue
        m1[net] = exit_
        m2[exit_].add(net)

    for r in circuit.register_names:
        own_exit(r)
    return ExitMap(m1, m2)


def aggressive_blacklist(exit_map: ExitMap, blacklist, model) -> set:
    """All gates absorbed into some other gate's exit sub-circuit; sound only
    for the pure bit-flip model on combinational locations."""

    if model.fault_types != frozenset({FaultType.BITFLIP}):
        raise NotApplicable("needs T = {bf}")
    if model.location not in ("c", "cr"):
        raise NotApplicable("needs location c or cr")
    return exit_map.absorbed() - set(blacklist)


def plan_reductions(unrolled: UnrolledCircuit, blacklist, model: FaultResistanceModel,
                    flags) -> ReductionPlan:
    """Compose the requested reductions.  Fault types shrink first; then the
    single-exit reduction runs if the model is now pure bit-flip, otherwise
    the single-successor one.  Inapplicable requests are recorded, never
    silently dropped."""

    blacklist = check_blacklist(unrolled.circuit, blacklist)
    plan = ReductionPlan(effective_model=model, effective_blacklist=blacklist)

    if flags.fault_type:
        result = reduce_fault_types(model)
        if result.note is None:
            removed = len(model.fault_types) - 1
            plan.effective_model = result.model
            plan.applied.append(AppliedReduction(
                "fault_type", removed, detail="types -> {bf}"))
        else:
            plan.skipped.append(SkippedReduction("fault_type", result.note))

    gate_reduction_done = False
    if flags.single_exit:
        try:
            exit_map = single_exit_map(unrolled, plan.effective_blacklist)
            extra = aggressive_blacklist(exit_map, plan.effective_blacklist,
                                         plan.effective_model)
            plan.effective_blacklist = plan.effective_blacklist | frozenset(extra)
            plan.applied.append(AppliedReduction("single_exit", len(extra)))
            gate_reduction_done = True
        except NotApplicable as e:
            plan.skipped.append(SkippedReduction("single_exit", e.reason))

    if flags.single_successor and not gate_reduction_done:
        try:
            extra = single_successor_blacklist(unrolled, plan.effective_blacklist,
                                               plan.effective_model)
            plan.effective_blacklist = plan.effective_blacklist | frozenset(extra)
            plan.applied.append(AppliedReduction("single_successor", len(extra)))
        except NotApplicable as e:
            plan.skipped.append(SkippedReduction("single_successor", e.reason))
    elif flags.single_successor and gate_reduction_done:
        plan.skipped.append(SkippedReduction(
            "single_successor", "subsumed by single_exit"))

    return plan
