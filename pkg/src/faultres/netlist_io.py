"""Text front end: the line-based netlist grammar and the JSON verification
config.  Nothing else in the package touches raw text.

Grammar (one statement per line, ``#`` starts a comment):

    .name <ident>
    .cycles <n>              # optional default cycle count
    .inputs <ident>+
    .outputs <ident>+
    .flag <ident>            # optional, must be one of the outputs
    .reg <ident> init=<0|1>  # zero or more
    gate <ident> = <kind>(<ident>[, <ident>])
    next <reg-ident> = <ident>

Kinds: and, or, nand, nor, xor, xnor (binary); not, buf (unary);
const0, const1 (nullary).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from .circuit_model import (
    FAULT_TYPE_ORDER,
    GateKind,
    KIND_ARITY,
    FaultResistanceModel,
    LOCATION_CLASSES,
)
from .simulator import FaultType


class NetlistError(Exception):
    """Base for netlist text errors; every instance carries a source location."""

    def __init__(self, msg, line=0, col=0):
        loc = f"{line}:{col}: " if line else ""
        super().__init__(loc + msg)
        self.line = line
        self.col = col


class NetlistSyntaxError(NetlistError):
    pass


class UndefinedNet(NetlistError):
    def __init__(self, name, line=0, col=0):
        super().__init__(f"undefined net {name!r}", line, col)
        self.name = name


class DuplicateName(NetlistError):
    def __init__(self, name, line=0, col=0):
        super().__init__(f"duplicate net name {name!r}", line, col)
        self.name = name


class ArityMismatch(NetlistError):
    def __init__(self, gate, kind, want, got, line=0, col=0):
        super().__init__(f"gate {gate!r}: {kind} takes {want} operands, got {got}", line, col)
        self.gate = gate


class MissingOutputDriver(NetlistError):
    def __init__(self, name, line=0, col=0):
        super().__init__(f"no gate, register or input drives {name!r}", line, col)
        self.name = name


class UnknownGateKind(NetlistError):
    def __init__(self, token, line=0, col=0):
        super().__init__(f"unknown gate kind {token!r}", line, col)
        self.token = token


class ConfigError(Exception):
    pass


class SchemaError(ConfigError):
    pass


class InvalidModel(ConfigError):
    pass


class UnknownBlacklistGate(ConfigError):
    def __init__(self, name):
        super().__init__(f"blacklist gate {name!r} not in netlist")
        self.name = name


@dataclass(frozen=True)
class GateStmt:
    name: str
    kind: str
    operands: tuple
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class NetlistDoc:
    name: str
    inputs: list
    outputs: list
    flag_output: Optional[str]
    registers: list  # of (name, init_bit)
    gates: list  # of GateStmt, declaration order
    next_state: dict  # register -> driving net
    default_cycles: Optional[int] = None
    source_locs: dict = field(default_factory=dict, compare=False, repr=False)


@dataclass(frozen=True)
class ReductionFlags:
    fault_type: bool = True
    single_successor: bool = True
    single_exit: bool = False


@dataclass(frozen=True)
class VerificationConfig:
    unroll_k: int
    model: FaultResistanceModel
    blacklist: frozenset
    reductions: ReductionFlags
    solver: tuple  # ("builtin",) or external argv


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.\[\]]*")
_GATE_RE = re.compile(
    r"gate\s+(?P<name>\S+)\s*=\s*(?P<kind>[A-Za-z0-9_]+)\s*\((?P<ops>[^)]*)\)\s*$")
_NEXT_RE = re.compile(r"next\s+(?P<reg>\S+)\s*=\s*(?P<net>\S+)\s*$")
_REG_RE = re.compile(r"\.reg\s+(?P<name>\S+)\s+init=(?P<init>\S+)\s*$")

_KIND_TOKENS = {k.value: k for k in GateKind}


def _check_ident(tok, line, col):
    if not _IDENT.fullmatch(tok):
        raise NetlistSyntaxError(f"bad identifier {tok!r}", line, col)
    return tok


def parse_netlist(text: str) -> NetlistDoc:
    """Parse netlist text into a validated NetlistDoc.

    Statements may appear in any order; all name resolution happens after the
    whole text is read, so forward references between gates are fine.
    """

    name = None
    cycles = None
    inputs, outputs, registers, gates = [], [], [], []
    flag = None
    next_state = {}
    locs = {}
    seen_stmt = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stmt = raw.split("#", 1)[0].rstrip()
        if not stmt.strip():
            continue
        col = len(stmt) - len(stmt.lstrip()) + 1
        stmt = stmt.strip()
        head = stmt.split()[0]

        if head == ".name":
            parts = stmt.split()
            if len(parts) != 2:
                raise NetlistSyntaxError(".name takes one identifier", lineno, col)
            name = _check_ident(parts[1], lineno, col)
        elif head == ".cycles":
            parts = stmt.split()
            if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) < 1:
                raise NetlistSyntaxError(".cycles takes one positive integer", lineno, col)
            cycles = int(parts[1])
        elif head == ".inputs":
            for tok in stmt.split()[1:]:
                inputs.append(_check_ident(tok, lineno, col))
                locs.setdefault(tok, (lineno, col))
            if len(stmt.split()) == 1:
                raise NetlistSyntaxError(".inputs needs at least one net", lineno, col)
        elif head == ".outputs":
            for tok in stmt.split()[1:]:
                outputs.append(_check_ident(tok, lineno, col))
                seen_stmt.setdefault(("output", tok), (lineno, col))
            if len(stmt.split()) == 1:
                raise NetlistSyntaxError(".outputs needs at least one net", lineno, col)
        elif head == ".flag":
            parts = stmt.split()
            if len(parts) != 2:
                raise NetlistSyntaxError(".flag takes one identifier", lineno, col)
            flag = _check_ident(parts[1], lineno, col)
            seen_stmt[("flag",)] = (lineno, col)
        elif head == ".reg":
            m = _REG_RE.match(stmt)
            if not m:
                raise NetlistSyntaxError(".reg wants `.reg <name> init=<0|1>`", lineno, col)
            rname = _check_ident(m.group("name"), lineno, col)
            if m.group("init") not in ("0", "1"):
                raise NetlistSyntaxError("init must be 0 or 1", lineno, col)
            registers.append((rname, int(m.group("init"))))
            locs.setdefault(rname, (lineno, col))
        elif head == "gate":
            m = _GATE_RE.match(stmt)
            if not m:
                raise NetlistSyntaxError("gate wants `gate <name> = <kind>(<operands>)`",
                                         lineno, col)
            gname = _check_ident(m.group("name"), lineno, col)
            kind = m.group("kind")
            if kind not in _KIND_TOKENS:
                raise UnknownGateKind(kind, lineno, col)
            ops = tuple(o.strip() for o in m.group("ops").split(",") if o.strip())
            for o in ops:
                _check_ident(o, lineno, col)
            gates.append(GateStmt(gname, kind, ops, lineno, col))
            locs.setdefault(gname, (lineno, col))
        elif head == "next":
            m = _NEXT_RE.match(stmt)
            if not m:
                raise NetlistSyntaxError("next wants `next <reg> = <net>`", lineno, col)
            reg = _check_ident(m.group("reg"), lineno, col)
            if reg in next_state:
                raise NetlistSyntaxError(f"duplicate next for register {reg!r}", lineno, col)
            next_state[reg] = _check_ident(m.group("net"), lineno, col)
            seen_stmt[("next", reg)] = (lineno, col)
        else:
            raise NetlistSyntaxError(f"unrecognized statement {head!r}", lineno, col)

    if name is None:
        name = "circuit"

    doc = NetlistDoc(name, inputs, outputs, flag, registers, gates, next_state,
                     default_cycles=cycles, source_locs=locs)
    _validate_doc(doc, seen_stmt)
    return doc


def _validate_doc(doc: NetlistDoc, seen_stmt):
    declared = set()
    for net in list(doc.inputs) + [r for r, _ in doc.registers] + [g.name for g in doc.gates]:
        if net in declared:
            line, col = doc.source_locs.get(net, (0, 0))
            raise DuplicateName(net, line, col)
        declared.add(net)

    for g in doc.gates:
        kind = GateKind(g.kind)
        want = KIND_ARITY[kind]
        if len(g.operands) != want:
            raise ArityMismatch(g.name, g.kind, want, len(g.operands), g.line, g.col)
        for op in g.operands:
            if op not in declared:
                raise UndefinedNet(op, g.line, g.col)

    for out in doc.outputs:
        if out not in declared:
            line, col = seen_stmt.get(("output", out), (0, 0))
            raise MissingOutputDriver(out, line, col)

    regs = {r for r, _ in doc.registers}
    for reg, net in doc.next_state.items():
        line, col = seen_stmt.get(("next", reg), (0, 0))
        if reg not in regs:
            raise UndefinedNet(reg, line, col)
        if net not in declared:
            raise UndefinedNet(net, line, col)
    for reg in regs:
        if reg not in doc.next_state:
            line, col = doc.source_locs.get(reg, (0, 0))
            raise MissingOutputDriver(reg, line, col)

    if doc.flag_output is not None:
        line, col = seen_stmt.get(("flag",), (0, 0))
        if doc.flag_output not in declared:
            raise UndefinedNet(doc.flag_output, line, col)
        if doc.flag_output not in doc.outputs:
            raise NetlistSyntaxError(
                f"flag {doc.flag_output!r} must be listed in .outputs", line, col)


def write_netlist(doc: NetlistDoc) -> str:
    """Serialize to canonical text; parse_netlist(write_netlist(d)) == d."""

    lines = [f".name {doc.name}"]
    if doc.default_cycles is not None:
        lines.append(f".cycles {doc.default_cycles}")
    lines.append(".inputs " + " ".join(doc.inputs))
    lines.append(".outputs " + " ".join(doc.outputs))
    if doc.flag_output is not None:
        lines.append(f".flag {doc.flag_output}")
    for r, init in doc.registers:
        lines.append(f".reg {r} init={init}")
    for g in doc.gates:
        lines.append(f"gate {g.name} = {g.kind}({', '.join(g.operands)})")
    for r, _ in doc.registers:
        lines.append(f"next {r} = {doc.next_state[r]}")
    return "\n".join(lines) + "\n"


_TYPE_TOKENS = {t.token: t for t in FaultType}


def parse_config(text: str, doc: NetlistDoc) -> VerificationConfig:
    """Parse and validate the JSON verification config against a parsed doc."""

    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"config is not valid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise SchemaError("config must be a JSON object")

    try:
        k = raw["k"]
        model_raw = raw["model"]
    except KeyError as e:
        raise SchemaError(f"config missing key {e.args[0]!r}") from None
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise InvalidModel("k must be an integer >= 1")
    if not isinstance(model_raw, dict):
        raise SchemaError("model must be an object")

    try:
        ne, nc = model_raw["ne"], model_raw["nc"]
        types, location = model_raw["types"], model_raw["location"]
    except KeyError as e:
        raise SchemaError(f"model missing key {e.args[0]!r}") from None
    if not isinstance(ne, int) or ne < 1:
        raise InvalidModel("ne must be >= 1")
    if not isinstance(nc, int) or nc < 1:
        raise InvalidModel("nc must be >= 1")
    if not isinstance(types, list) or not types:
        raise InvalidModel("types must be a non-empty list")
    for t in types:
        if t not in _TYPE_TOKENS:
            raise InvalidModel(f"unknown fault type {t!r} (expected subset of {FAULT_TYPE_ORDER})")
    if location not in LOCATION_CLASSES:
        raise InvalidModel(f"location must be one of {LOCATION_CLASSES}")

    # Only k cycles exist, so a larger nc budget changes nothing: cap it.
    model = FaultResistanceModel(
        n_e=ne,
        n_c=min(nc, k),
        fault_types=frozenset(_TYPE_TOKENS[t] for t in types),
        location=location,
    )

    blacklist = raw.get("blacklist", [])
    if not isinstance(blacklist, list):
        raise SchemaError("blacklist must be a list of gate names")
    known = {r for r, _ in doc.registers} | {g.name for g in doc.gates}
    for b in blacklist:
        if b not in known:
            raise UnknownBlacklistGate(b)

    red_raw = raw.get("reductions", {})
    if not isinstance(red_raw, dict):
        raise SchemaError("reductions must be an object")
    unknown = set(red_raw) - {"fault_type", "single_successor", "single_exit"}
    if unknown:
        raise SchemaError(f"unknown reduction flags: {sorted(unknown)}")
    reductions = ReductionFlags(
        fault_type=bool(red_raw.get("fault_type", True)),
        single_successor=bool(red_raw.get("single_successor", True)),
        single_exit=bool(red_raw.get("single_exit", False)),
    )

    solver = raw.get("solver", "builtin")
    if solver == "builtin":
        solver_desc = ("builtin",)
    elif isinstance(solver, list) and solver and all(isinstance(s, str) for s in solver):
        solver_desc = tuple(solver)
    else:
        raise SchemaError("solver must be \"builtin\" or a command argv list")

    return VerificationConfig(
        unroll_k=k,
        model=model,
        blacklist=frozenset(blacklist),
        reductions=reductions,
        solver=solver_desc,
    )
