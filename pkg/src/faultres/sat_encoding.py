"""The fault-resistance formula, its CNF lowering and the end-to-end verify
pipeline.

The circuit is fault-resistant iff the formula below is unsatisfiable:

    Psi_nc /\\ Psi_ne /\\  \\/_i \\/_o ( psi[i,o] != psi''[i,o]
                                      /\\  /\\_{j<=i} !psi''[j,flag] )

where psi / psi'' are the golden / instrumented output functions, the inner
conjunction says the faulty flag stayed 0 through the divergence cycle, and
the Psi parts bound faults per cycle (n_e) and fault-active cycles (n_c).
A satisfying assignment decodes to a fault vector plus an input trace, which
is replayed on the simulator before a counterexample is ever reported.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from .circuit_model import (
    FaultResistanceModel,
    SequentialCircuit,
    UnrolledCircuit,
    fault_locations,
    unroll,
)
from .fault_encoder import ControlledCircuit, decode_fault_vector, instrument, make_input_vars
from .formula import (
    ROLE_AUX_D,
    ROLE_CONTROL,
    BoolFormula,
    CardinalityConstraint,
    CNF,
    EncodingError,
    FormulaBuilder,
    at_most_k,
    emit_dimacs,
    tseitin_cnf,
)
from .netlist_io import VerificationConfig
from .reductions import ReductionPlan, plan_reductions
from .simulator import FaultVector, ShapeMismatch, check_effectiveness
from .solvers import SatResult, solve_cnf


class InternalEncodingError(Exception):
    """A SAT model whose replay on the simulator does not confirm the
    counterexample; always a bug, never a verdict."""


@dataclass(frozen=True)
class Counterexample:
    fault_vector: FaultVector
    inputs: tuple  # per cycle, tuple of input bits
    divergence_cycle: int
    differing_output: str


@dataclass
class VerifyStats:
    num_vars: int = 0
    num_clauses: int = 0
    encode_time: float = 0.0
    solve_time: float = 0.0
    reductions_applied: list = field(default_factory=list)
    reductions_skipped: list = field(default_factory=list)
    blacklist_original: int = 0
    blacklist_effective: int = 0
    model_used: Optional[FaultResistanceModel] = None
    locations: int = 0


@dataclass
class Verdict:
    status: str  # "resistant" | "not_resistant"
    counterexample: Optional[Counterexample] = None
    stats: VerifyStats = field(default_factory=VerifyStats)

    @property
    def is_resistant(self):
        return self.status == "resistant"


def build_fr_formula(golden: UnrolledCircuit, controlled: ControlledCircuit,
                     model: FaultResistanceModel) -> BoolFormula:
    """Miter of the golden circuit against the instrumented one over shared
    primary inputs, with the flag-silence conjunct and cardinality bounds.
    Bounds that cannot bind (n_c >= k, n_e >= controls in a cycle) are left
    out entirely."""

    b = controlled.builder
    if golden.k != controlled.k:
        raise ShapeMismatch("golden and controlled circuits have different cycle counts")
    gold_names = [o for o in golden.circuit.outputs if o != golden.circuit.flag]
    ctrl_names = [o for o in controlled.outputs if o != controlled.flag]
    if set(gold_names) != set(ctrl_names):
        raise ShapeMismatch("golden and controlled circuits expose different outputs")

    # Golden side, built over the same input variables.
    shared_inputs = {key: node for key, node in controlled.input_vars.items()}
    for (cycle, name) in shared_inputs:
        if name not in golden.circuit.inputs:
            raise ShapeMismatch(f"golden circuit lacks input {name!r}")
    if set(golden.circuit.inputs) != {n for (_, n) in shared_inputs}:
        raise ShapeMismatch("golden and controlled circuits have different inputs")
    reference = instrument(golden, set(), controlled.types, builder=b,
                           input_vars=shared_inputs)

    taps = {}
    for (cycle, o), node in reference.taps.items():
        taps[("golden", cycle, o)] = node
    for (cycle, o), node in controlled.taps.items():
        taps[("controlled", cycle, o)] = node
    for cycle, node in controlled.flag_taps.items():
        taps[("controlled-flag", cycle)] = node

    disjuncts = []
    flag_prefix = b.true
    for cycle in range(1, controlled.k + 1):
        flag_prefix = b.and_(flag_prefix, b.not_(controlled.flag_taps[cycle]))
        for o in ctrl_names:
            differs = b.xor(reference.taps[(cycle, o)], controlled.taps[(cycle, o)])
            disjuncts.append(b.and_(differs, flag_prefix))
    root = b.or_many(disjuncts)

    cardinality = []
    conjuncts = []
    for cycle in range(1, controlled.k + 1):
        controls = controlled.cycle_controls.get(cycle, [])
        if model.n_e < len(controls):
            cardinality.append(CardinalityConstraint(
                tuple(controls), model.n_e, label=f"ne@{cycle}"))

    if model.n_c < controlled.k:
        d_names = []
        for cycle in range(1, controlled.k + 1):
            controls = controlled.cycle_controls.get(cycle, [])
            if not controls:
                continue
            d = b.var(f"d@{cycle}", ROLE_AUX_D)
            any_ctrl = b.or_many([b.var(c, ROLE_CONTROL) for c in controls])
            conjuncts.append(b.iff(d, any_ctrl))
            d_names.append(f"d@{cycle}")
        if model.n_c < len(d_names):
            cardinality.append(CardinalityConstraint(tuple(d_names), model.n_c, label="nc"))
        else:
            # The bound cannot bind after all; drop the d definitions too.
            conjuncts = []

    root = b.and_many(conjuncts + [root])
    return BoolFormula(builder=b, root=root, taps=taps, cardinality=cardinality)


@dataclass
class EncodedProblem:
    golden_unrolled: UnrolledCircuit
    protected_unrolled: UnrolledCircuit
    plan: ReductionPlan
    locations: set
    controlled: ControlledCircuit
    formula: BoolFormula
    cnf: CNF
    encode_time: float


def encode_problem(circuit: SequentialCircuit, config: VerificationConfig,
                   golden: Optional[SequentialCircuit] = None) -> EncodedProblem:
    """unroll -> plan reductions -> fault locations -> instrument -> formula
    -> CNF.  ``golden`` optionally supplies a separate unprotected reference
    circuit for the miter's golden side."""

    start = time.perf_counter()
    unrolled = unroll(circuit, config.unroll_k)
    golden_unrolled = unroll(golden, config.unroll_k) if golden is not None else unrolled

    plan = plan_reductions(unrolled, config.blacklist, config.model, config.reductions)
    locations = fault_locations(unrolled, plan.effective_blacklist,
                                plan.effective_model.location)
    builder = FormulaBuilder()
    input_vars = make_input_vars(builder, circuit, config.unroll_k)
    controlled = instrument(unrolled, locations, plan.effective_model.fault_types,
                            builder=builder, input_vars=input_vars)
    formula = build_fr_formula(golden_unrolled, controlled, plan.effective_model)
    cnf = tseitin_cnf(formula)
    encode_time = time.perf_counter() - start
    return EncodedProblem(golden_unrolled, unrolled, plan, locations, controlled,
                          formula, cnf, encode_time)


def _decode_inputs(model_bits, cnf: CNF, circuit: SequentialCircuit, k: int):
    rows = []
    for cycle in range(1, k + 1):
        row = []
        for name in circuit.inputs:
            idx = cnf.var_index[f"{name}@{cycle}"]
            row.append(1 if model_bits.get(idx, False) else 0)
        rows.append(tuple(row))
    return tuple(rows)


def verify(circuit: SequentialCircuit, config: VerificationConfig,
           golden: Optional[SequentialCircuit] = None,
           solver=None) -> Verdict:
    """Decide fault-resistance of ``circuit`` under ``config``.  Unsat means
    resistant; a model is decoded and replay-confirmed on the simulator before
    being reported (a failed replay raises InternalEncodingError)."""

    problem = encode_problem(circuit, config, golden)
    backend = solver if solver is not None else config.solver

    start = time.perf_counter()
    result = solve_cnf(problem.cnf, backend)
    solve_time = time.perf_counter() - start

    stats = VerifyStats(
        num_vars=problem.cnf.num_vars,
        num_clauses=len(problem.cnf.clauses),
        encode_time=problem.encode_time,
        solve_time=solve_time,
        reductions_applied=list(problem.plan.applied),
        reductions_skipped=list(problem.plan.skipped),
        blacklist_original=len(config.blacklist),
        blacklist_effective=len(problem.plan.effective_blacklist),
        model_used=problem.plan.effective_model,
        locations=len(problem.locations),
    )

    if result.status == "unsat":
        return Verdict("resistant", stats=stats)
    if result.status != "sat":
        raise EncodingError(f"solver could not decide: {result.reason}")

    named = {name: result.model.get(idx, False)
             for name, idx in problem.cnf.var_index.items()}
    vector = decode_fault_vector(named, problem.controlled)
    inputs = _decode_inputs(result.model, problem.cnf, circuit, config.unroll_k)
    if len(vector) == 0:
        raise InternalEncodingError("satisfying assignment decodes to an empty fault vector")
    replay = check_effectiveness(problem.protected_unrolled, vector, inputs)
    if not replay.effective:
        raise InternalEncodingError(
            f"replay of decoded counterexample is not effective: {vector!r} on {inputs}")
    return Verdict(
        "not_resistant",
        counterexample=Counterexample(vector, inputs, replay.divergence_cycle,
                                      replay.differing_output),
        stats=stats)


__all__ = [
    "BoolFormula", "CardinalityConstraint", "CNF", "Counterexample",
    "EncodedProblem", "EncodingError", "InternalEncodingError", "SatResult",
    "Verdict", "VerifyStats", "at_most_k", "build_fr_formula", "emit_dimacs",
    "encode_problem", "solve_cnf", "tseitin_cnf", "verify",
]
