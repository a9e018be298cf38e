"""Validated in-memory circuit graph, cycle unrolling and fault-location sets.

A circuit is a single combinational frame (a DAG of gates) plus registers
with initial values.  Running it for k clock cycles means instantiating the
frame k times and threading the register values between cycles; we keep the
frame shared and address instances as ``name@cycle``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from .netlist_io import NetlistDoc
    from .simulator import FaultType


class CircuitError(Exception):
    pass


class CombinationalCycle(CircuitError):
    def __init__(self, path):
        super().__init__("combinational cycle: " + " -> ".join(path))
        self.path = list(path)


class ArityMismatch(CircuitError):
    def __init__(self, gate, kind, got):
        super().__init__(f"gate {gate}: {kind} takes {KIND_ARITY[kind]} operands, got {got}")
        self.gate = gate


class InvalidK(CircuitError):
    pass


class UnknownBlacklistGate(CircuitError):
    def __init__(self, name):
        super().__init__(f"blacklisted gate {name!r} is not a gate or register of the circuit")
        self.name = name


class GateKind(Enum):
    AND = "and"
    OR = "or"
    NAND = "nand"
    NOR = "nor"
    XOR = "xor"
    XNOR = "xnor"
    NOT = "not"
    BUF = "buf"
    CONST0 = "const0"
    CONST1 = "const1"


KIND_ARITY = {
    GateKind.AND: 2,
    GateKind.OR: 2,
    GateKind.NAND: 2,
    GateKind.NOR: 2,
    GateKind.XOR: 2,
    GateKind.XNOR: 2,
    GateKind.NOT: 1,
    GateKind.BUF: 1,
    GateKind.CONST0: 0,
    GateKind.CONST1: 0,
}

# Output-inverted counterpart of each kind; flipping twice restores the kind.
BITFLIP_COMPLEMENT = {
    GateKind.AND: GateKind.NAND,
    GateKind.NAND: GateKind.AND,
    GateKind.OR: GateKind.NOR,
    GateKind.NOR: GateKind.OR,
    GateKind.XOR: GateKind.XNOR,
    GateKind.XNOR: GateKind.XOR,
    GateKind.NOT: GateKind.BUF,
    GateKind.BUF: GateKind.NOT,
    GateKind.CONST0: GateKind.CONST1,
    GateKind.CONST1: GateKind.CONST0,
}

# Evaluators over machine words: `ones` is the all-ones lane mask, so the same
# table serves single-bit simulation (ones=1) and bit-parallel sweeps.
KIND_EVAL = {
    GateKind.AND: lambda a, b, ones: a & b,
    GateKind.OR: lambda a, b, ones: a | b,
    GateKind.NAND: lambda a, b, ones: (a & b) ^ ones,
    GateKind.NOR: lambda a, b, ones: (a | b) ^ ones,
    GateKind.XOR: lambda a, b, ones: a ^ b,
    GateKind.XNOR: lambda a, b, ones: (a ^ b) ^ ones,
    GateKind.NOT: lambda a, b, ones: a ^ ones,
    GateKind.BUF: lambda a, b, ones: a,
    GateKind.CONST0: lambda a, b, ones: 0,
    GateKind.CONST1: lambda a, b, ones: ones,
}

LOCATION_CLASSES = ("c", "r", "cr")

# Canonical fault-type order (set < reset < bit-flip), used everywhere a
# deterministic ordering of types is needed.
FAULT_TYPE_ORDER = ("s", "r", "bf")


@dataclass(frozen=True, order=True)
class GateInstance:
    """One gate of the unrolled circuit: gate ``name`` as seen in ``cycle``.

    For a register the instance denotes the value *consumed* during ``cycle``
    (the init value when cycle == 1).
    """

    cycle: int
    name: str
    is_register: bool = False

    @property
    def label(self) -> str:
        return f"{self.name}@{self.cycle}"


@dataclass(frozen=True)
class FaultResistanceModel:
    """Adversary budget: at most n_e events per cycle, events in at most n_c
    cycles, fault types drawn from ``fault_types``, locations limited by
    ``location`` ('c' logic gates, 'r' registers, 'cr' both)."""

    n_e: int
    n_c: int
    fault_types: "frozenset[FaultType]"
    location: str

    def type_tokens(self):
        return tuple(t.token for t in sorted(self.fault_types, key=lambda t: t.order))

    def describe(self) -> str:
        return (f"zeta(ne={self.n_e}, nc={self.n_c}, "
                f"T={{{','.join(self.type_tokens())}}}, l={self.location})")


@dataclass(frozen=True)
class Frame:
    """One combinational frame gate (shared across cycles)."""

    name: str
    kind: GateKind
    operands: tuple


@dataclass
class SequentialCircuit:
    name: str
    inputs: tuple
    outputs: tuple
    flag: Optional[str]
    registers: tuple  # of (name, init_bit)
    gates: tuple  # of Frame, declaration order
    next_state: dict  # register name -> driving net name
    topo_order: tuple = ()
    gate_map: dict = field(default_factory=dict)
    successors: dict = field(default_factory=dict)  # net -> tuple of consumer gate names
    default_cycles: Optional[int] = None

    @property
    def register_names(self):
        return tuple(r for r, _ in self.registers)

    @property
    def init_bits(self):
        return {r: b for r, b in self.registers}

    def net_names(self):
        return set(self.inputs) | set(self.register_names) | set(self.gate_map)

    def drives_output(self, net) -> bool:
        return net in self.outputs

    def drives_register(self, net) -> bool:
        return net in self._register_drivers

    @property
    def _register_drivers(self):
        return set(self.next_state.values())


def build_and_validate(doc: "NetlistDoc") -> SequentialCircuit:
    """Turn a parsed netlist into a validated circuit with a cached topological
    order of the frame.  Raises CombinationalCycle / ArityMismatch."""

    gates = []
    for g in doc.gates:
        kind = GateKind(g.kind)
        if len(g.operands) != KIND_ARITY[kind]:
            raise ArityMismatch(g.name, kind, len(g.operands))
        gates.append(Frame(g.name, kind, tuple(g.operands)))

    gate_map = {g.name: g for g in gates}
    sources = set(doc.inputs) | {r for r, _ in doc.registers}

    # Kahn's algorithm over gate-to-gate edges; inputs and register reads are
    # sources and never part of a combinational cycle.
    indeg = {g.name: 0 for g in gates}
    consumers = {}
    for g in gates:
        for op in g.operands:
            if op in gate_map:
                indeg[g.name] += 1
            consumers.setdefault(op, []).append(g.name)

    ready = [g.name for g in gates if indeg[g.name] == 0]
    ready.reverse()
    topo = []
    while ready:
        n = ready.pop()
        topo.append(n)
        for succ in consumers.get(n, ()):
            indeg[succ] -= 1
            if indeg[succ] == 0:
                ready.append(succ)

    if len(topo) != len(gates):
        raise CombinationalCycle(_find_cycle(gate_map, sources))

    successors = {net: tuple(consumers.get(net, ())) for net in
                  list(sources) + [g.name for g in gates]}

    return SequentialCircuit(
        name=doc.name,
        inputs=tuple(doc.inputs),
        outputs=tuple(doc.outputs),
        flag=doc.flag_output,
        registers=tuple(doc.registers),
        gates=tuple(gates),
        next_state=dict(doc.next_state),
        topo_order=tuple(topo),
        gate_map=gate_map,
        successors=successors,
        default_cycles=doc.default_cycles,
    )


def _find_cycle(gate_map, sources):
    color = {}
    stack = []

    def visit(n):
        color[n] = 1
        stack.append(n)
        for op in gate_map[n].operands:
            if op in sources:
                continue
            c = color.get(op)
            if c == 1:
                return stack[stack.index(op):] + [op]
            if c is None:
                found = visit(op)
                if found:
                    return found
        stack.pop()
        color[n] = 2
        return None

    for g in gate_map:
        if g not in color:
            found = visit(g)
            if found:
                return found
    return []


@dataclass(frozen=True)
class UnrolledCircuit:
    """The k-cycle instantiation of a circuit.  ``faults`` maps instances to
    fault types; an empty map is the golden circuit."""

    circuit: SequentialCircuit
    k: int
    faults: dict = field(default_factory=dict, hash=False)

    @property
    def instances(self):
        """All gate instances, logic then registers, cycle-major."""
        out = []
        for cycle in range(1, self.k + 1):
            for g in self.circuit.gates:
                out.append(GateInstance(cycle, g.name))
            for r in self.circuit.register_names:
                out.append(GateInstance(cycle, r, is_register=True))
        return tuple(out)

    @property
    def logic_instance_count(self):
        return self.k * len(self.circuit.gates)

    def instance_exists(self, inst: GateInstance) -> bool:
        if not 1 <= inst.cycle <= self.k:
            return False
        if inst.is_register:
            return inst.name in self.circuit.init_bits
        return inst.name in self.circuit.gate_map


def unroll(circuit: SequentialCircuit, k: int) -> UnrolledCircuit:
    if k < 1:
        raise InvalidK(f"cycle count must be >= 1, got {k}")
    return UnrolledCircuit(circuit, k)


def check_blacklist(circuit: SequentialCircuit, blacklist) -> frozenset:
    names = set(circuit.gate_map) | set(circuit.register_names)
    for b in blacklist:
        if b not in names:
            raise UnknownBlacklistGate(b)
    return frozenset(blacklist)


def fault_locations(unrolled: UnrolledCircuit, blacklist, location: str) -> set:
    """All fault-injectable instances: internal gates and register reads not
    protected by the blacklist, with whole classes removed per ``location``."""

    assert location in LOCATION_CLASSES
    blacklist = check_blacklist(unrolled.circuit, blacklist)
    circuit = unrolled.circuit
    locations = set()
    for cycle in range(1, unrolled.k + 1):
        if location in ("c", "cr"):
            for g in circuit.gates:
                if g.name not in blacklist:
                    locations.add(GateInstance(cycle, g.name))
        if location in ("r", "cr"):
            for r in circuit.register_names:
                if r not in blacklist:
                    locations.add(GateInstance(cycle, r, is_register=True))
    return locations
