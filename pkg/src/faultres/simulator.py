"""Cycle-accurate evaluation of golden and faulted circuits, and ground-truth
effectiveness checking.

A fault vector is effective for a given input sequence when some non-flag
output diverges from the golden run at a cycle i while the faulty circuit's
error flag is still 0 at every cycle up to and including i (a flag that rises
in the divergence cycle counts as detection).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

from .circuit_model import (
    BITFLIP_COMPLEMENT,
    KIND_EVAL,
    GateInstance,
    GateKind,
    UnrolledCircuit,
)


class SimulationError(Exception):
    pass


class ShapeMismatch(SimulationError):
    pass


class UnknownInstance(SimulationError):
    def __init__(self, inst):
        super().__init__(f"no such instance {inst.label}")
        self.instance = inst


class DuplicateInstance(SimulationError):
    def __init__(self, label):
        super().__init__(f"instance {label} faulted more than once")
        self.label = label


class EmptyVector(SimulationError):
    pass


class TooLargeForExhaustive(SimulationError):
    pass


class FaultType(Enum):
    SET = "s"       # output stuck at 1
    RESET = "r"     # output stuck at 0
    BITFLIP = "bf"  # output inverted

    @property
    def token(self):
        return self.value

    @property
    def order(self):
        return ("s", "r", "bf").index(self.value)


def faulted_kind(kind: GateKind, fault: FaultType) -> GateKind:
    if fault is FaultType.SET:
        return GateKind.CONST1
    if fault is FaultType.RESET:
        return GateKind.CONST0
    return BITFLIP_COMPLEMENT[kind]


@dataclass(frozen=True)
class FaultEvent:
    """A fault of ``fault_type`` on ``instance``.  Blacklist membership is the
    caller's responsibility: events are only built from fault-location sets."""

    instance: GateInstance
    fault_type: FaultType

    @property
    def label(self):
        return f"{self.instance.label}:{self.fault_type.token}"


class FaultVector:
    """A set of fault events with pairwise-distinct gate instances."""

    def __init__(self, events):
        events = frozenset(events)
        keys = {e.instance for e in events}
        if len(keys) != len(events):
            seen = set()
            for e in sorted(events, key=lambda e: (e.instance, e.fault_type.order)):
                if e.instance in seen:
                    raise DuplicateInstance(e.instance.label)
                seen.add(e.instance)
        self.events = events

    def __iter__(self):
        return iter(self.sorted_events)

    def __len__(self):
        return len(self.events)

    def __eq__(self, other):
        return isinstance(other, FaultVector) and self.events == other.events

    def __hash__(self):
        return hash(self.events)

    def __repr__(self):
        return "FaultVector({%s})" % ", ".join(e.label for e in self.sorted_events)

    @property
    def sorted_events(self):
        return sorted(self.events,
                      key=lambda e: (e.instance.cycle, e.instance.name, e.fault_type.order))

    @property
    def sharp_clk(self):
        """Number of distinct fault-active cycles."""
        return len({e.instance.cycle for e in self.events})

    @property
    def max_epc(self):
        """Maximum number of events in any single cycle."""
        if not self.events:
            return 0
        counts = {}
        for e in self.events:
            counts[e.instance.cycle] = counts.get(e.instance.cycle, 0) + 1
        return max(counts.values())


@dataclass
class Trace:
    inputs: list   # per cycle, tuple of input bits
    outputs: list  # per cycle, dict output name -> bit
    flags: list    # per cycle, flag bit (0 when no flag output declared)
    states: list   # per cycle, dict register -> stored bit after the cycle

    def output_bits(self, cycle):
        return tuple(self.outputs[cycle - 1].values())


@dataclass(frozen=True)
class EffectivenessResult:
    effective: bool
    divergence_cycle: Optional[int] = None
    differing_output: Optional[str] = None


def apply_fault_vector(unrolled: UnrolledCircuit, vector: FaultVector) -> UnrolledCircuit:
    """A copy of the circuit with the vector's faults armed.  Set/reset faults
    behave as constant gates (incoming edges irrelevant), bit-flips invert the
    gate's output; register faults disturb the value read in that cycle."""

    faults = dict(unrolled.faults)
    for event in vector:
        if not unrolled.instance_exists(event.instance):
            raise UnknownInstance(event.instance)
        if event.instance in faults:
            raise DuplicateInstance(event.instance.label)
        faults[event.instance] = event.fault_type
    return replace(unrolled, faults=faults)


def _apply_value_fault(value, fault, ones):
    if fault is FaultType.SET:
        return ones
    if fault is FaultType.RESET:
        return 0
    return value ^ ones


def _run_masked(unrolled: UnrolledCircuit, input_values, ones):
    """Shared evaluation core: input_values[cycle-1][input] is an int lane mask
    (plain 0/1 when ones == 1).  Returns per-cycle net environments."""

    circuit = unrolled.circuit
    faults = unrolled.faults
    state = {r: init * ones for r, init in circuit.registers}
    envs = []
    for cycle in range(1, unrolled.k + 1):
        env = dict(input_values[cycle - 1])
        for r in circuit.register_names:
            v = state[r]
            f = faults.get(GateInstance(cycle, r, is_register=True))
            env[r] = _apply_value_fault(v, f, ones) if f else v
        for name in circuit.topo_order:
            g = circuit.gate_map[name]
            a = env[g.operands[0]] if g.operands else 0
            b = env[g.operands[1]] if len(g.operands) > 1 else 0
            f = faults.get(GateInstance(cycle, name))
            if f is FaultType.SET:
                v = ones
            elif f is FaultType.RESET:
                v = 0
            else:
                v = KIND_EVAL[g.kind](a, b, ones)
                if f is FaultType.BITFLIP:
                    v ^= ones
            env[name] = v
        state = {r: env[circuit.next_state[r]] for r in circuit.register_names}
        envs.append((env, state))
    return envs


def run_trace(unrolled: UnrolledCircuit, inputs) -> Trace:
    """Evaluate the circuit for k cycles under the given input bit-vectors."""

    circuit = unrolled.circuit
    inputs = [tuple(v) for v in inputs]
    if len(inputs) != unrolled.k:
        raise ShapeMismatch(f"expected {unrolled.k} input vectors, got {len(inputs)}")
    for vec in inputs:
        if len(vec) != len(circuit.inputs):
            raise ShapeMismatch(
                f"expected {len(circuit.inputs)} input bits per cycle, got {len(vec)}")
        if any(b not in (0, 1) for b in vec):
            raise ShapeMismatch("input bits must be 0 or 1")

    input_values = [dict(zip(circuit.inputs, vec)) for vec in inputs]
    envs = _run_masked(unrolled, input_values, ones=1)

    outputs, flags, states = [], [], []
    for env, state in envs:
        outputs.append({o: env[o] for o in circuit.outputs})
        flags.append(env[circuit.flag] if circuit.flag else 0)
        states.append(dict(state))
    return Trace(inputs=inputs, outputs=outputs, flags=flags, states=states)


def check_effectiveness(golden: UnrolledCircuit, vector: FaultVector,
                        inputs) -> EffectivenessResult:
    """Ground truth for one (vector, inputs) pair, straight from the definition."""

    if len(vector) == 0:
        raise EmptyVector("effectiveness is defined for non-empty fault vectors")
    gold = run_trace(golden, inputs)
    faulty = run_trace(apply_fault_vector(golden, vector), inputs)

    flag_name = golden.circuit.flag
    data_outputs = [o for o in golden.circuit.outputs if o != flag_name]
    for i in range(1, golden.k + 1):
        if faulty.flags[i - 1] != 0:
            break  # detected at cycle i; no later cycle can qualify
        for o in data_outputs:
            if gold.outputs[i - 1][o] != faulty.outputs[i - 1][o]:
                return EffectivenessResult(True, i, o)
    return EffectivenessResult(False)


# -- exhaustive witness search -----------------------------------------------
#
# All 2^(|inputs| * k) input sequences are evaluated at once by packing one
# sequence per bit lane of a big integer.  Lane p assigns the j-th bit of the
# flattened sequence (cycle-major, inputs in declaration order) the value
# (p >> (N-1-j)) & 1, so lane order is exactly lexicographic sequence order
# and the lowest effective lane is the first witness.

MAX_EXHAUSTIVE_BITS = 24


def _lane_masks(num_bits):
    total = 1 << num_bits
    all_ones = (1 << total) - 1
    masks = []
    for j in range(num_bits):
        b = num_bits - 1 - j
        block = (1 << (1 << b)) - 1
        comb = all_ones // ((1 << (1 << (b + 1))) - 1)
        masks.append(comb * (block << (1 << b)))
    return masks, all_ones


def _masked_inputs(circuit, k):
    num_bits = len(circuit.inputs) * k
    masks, ones = _lane_masks(num_bits)
    values = []
    pos = 0
    for _ in range(k):
        row = {}
        for name in circuit.inputs:
            row[name] = masks[pos]
            pos += 1
        values.append(row)
    return values, ones


def _lane_to_inputs(lane, circuit, k):
    num_bits = len(circuit.inputs) * k
    bits = [(lane >> (num_bits - 1 - j)) & 1 for j in range(num_bits)]
    n = len(circuit.inputs)
    return tuple(tuple(bits[c * n:(c + 1) * n]) for c in range(k))


def _effective_lanes(golden_envs, faulty_envs, circuit, k, ones):
    flag = circuit.flag
    data_outputs = [o for o in circuit.outputs if o != flag]
    eff = 0
    flag_ok = ones
    for i in range(k):
        genv, _ = golden_envs[i]
        fenv, _ = faulty_envs[i]
        if flag is not None:
            flag_ok &= fenv[flag] ^ ones
        diff = 0
        for o in data_outputs:
            diff |= genv[o] ^ fenv[o]
        eff |= diff & flag_ok
    return eff


def find_witness(golden: UnrolledCircuit, vector: FaultVector):
    """First input sequence (lexicographic order) on which the vector is
    effective, or None.  Exhausts the whole input space, so the circuit must
    have at most MAX_EXHAUSTIVE_BITS total input bits."""

    if len(vector) == 0:
        raise EmptyVector("witness search needs a non-empty fault vector")
    circuit = golden.circuit
    num_bits = len(circuit.inputs) * golden.k
    if num_bits > MAX_EXHAUSTIVE_BITS:
        raise TooLargeForExhaustive(
            f"{num_bits} input bits exceeds the exhaustive bound {MAX_EXHAUSTIVE_BITS}")

    values, ones = _masked_inputs(circuit, golden.k)
    golden_envs = _run_masked(golden, values, ones)
    faulty_envs = _run_masked(apply_fault_vector(golden, vector), values, ones)
    eff = _effective_lanes(golden_envs, faulty_envs, circuit, golden.k, ones)
    if eff == 0:
        return None
    lane = (eff & -eff).bit_length() - 1
    return _lane_to_inputs(lane, circuit, golden.k)
