"""SAT backends: a self-contained CDCL solver and an external-process driver
speaking the DIMACS exit-code convention (10 = SAT, 20 = UNSAT)."""

from __future__ import annotations

import os
import subprocess
import tempfile
from dataclasses import dataclass
from typing import Optional

from .formula import CNF, emit_dimacs


class SolverError(Exception):
    pass


class BackendSpawnFailure(SolverError):
    pass


class ModelParseError(SolverError):
    pass


@dataclass(frozen=True)
class SatResult:
    status: str  # "sat" | "unsat" | "unknown"
    model: Optional[dict] = None  # var index -> bool, total over 1..num_vars
    reason: str = ""

    @property
    def is_sat(self):
        return self.status == "sat"

    @property
    def is_unsat(self):
        return self.status == "unsat"


class CdclSolver:
    """Conflict-driven clause learning with two watched literals, first-UIP
    learning, activity-based decisions and geometric restarts.  Deterministic:
    ties break on variable index, decisions assume False first."""

    def __init__(self, num_vars, clauses):
        self.num_vars = num_vars
        self.assign = {}        # var -> bool
        self.level = {}         # var -> decision level
        self.reason = {}        # var -> clause (list of lits) or None
        self.trail = []
        self.trail_lim = []
        self.watches = {}       # literal -> list of clauses watching it
        self.activity = [0.0] * (num_vars + 1)
        self.act_inc = 1.0
        self.clauses = []
        self.units = []
        self.unsat = False
        for c in clauses:
            self._add(list(dict.fromkeys(c)))

    def _add(self, lits):
        if not lits:
            self.unsat = True
            return
        if any(-l in lits for l in lits):
            return  # tautology
        if len(lits) == 1:
            self.units.append(lits[0])
            return
        self.clauses.append(lits)
        self.watches.setdefault(lits[0], []).append(lits)
        self.watches.setdefault(lits[1], []).append(lits)

    def _value(self, lit):
        v = self.assign.get(abs(lit))
        if v is None:
            return None
        return v if lit > 0 else not v

    def _enqueue(self, lit, reason):
        self.assign[abs(lit)] = lit > 0
        self.level[abs(lit)] = len(self.trail_lim)
        self.reason[abs(lit)] = reason
        self.trail.append(lit)

    def _propagate(self):
        i = getattr(self, "_qhead", 0)
        while i < len(self.trail):
            lit = self.trail[i]
            i += 1
            falsified = -lit
            watchlist = self.watches.get(falsified, [])
            keep = []
            j = 0
            while j < len(watchlist):
                clause = watchlist[j]
                j += 1
                # Make sure the falsified literal sits at position 1.
                if clause[0] == falsified:
                    clause[0], clause[1] = clause[1], clause[0]
                first = clause[0]
                if self._value(first) is True:
                    keep.append(clause)
                    continue
                moved = False
                for idx in range(2, len(clause)):
                    if self._value(clause[idx]) is not False:
                        clause[1], clause[idx] = clause[idx], clause[1]
                        self.watches.setdefault(clause[1], []).append(clause)
                        moved = True
                        break
                if moved:
                    continue
                keep.append(clause)
                if self._value(first) is False:
                    keep.extend(watchlist[j:])
                    self.watches[falsified] = keep
                    self._qhead = len(self.trail)
                    return clause
                self._enqueue(first, clause)
            self.watches[falsified] = keep
        self._qhead = i
        return None

    def _analyze(self, conflict):
        """First-UIP conflict analysis.  Reason clauses keep their implied
        literal at position 0, so expansion skips it when resolving."""
        cur_level = len(self.trail_lim)
        learnt = []
        seen = set()
        path = 0
        p = None
        reason = conflict
        idx = len(self.trail) - 1
        while True:
            for q in (reason if p is None else reason[1:]):
                v = abs(q)
                if v not in seen and self.level[v] > 0:
                    seen.add(v)
                    self.activity[v] += self.act_inc
                    if self.level[v] >= cur_level:
                        path += 1
                    else:
                        learnt.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            seen.discard(abs(p))
            path -= 1
            if path == 0:
                break
            reason = self.reason[abs(p)]
        learnt = [-p] + learnt
        if len(learnt) == 1:
            return learnt, 0
        back = max(self.level[abs(q)] for q in learnt[1:])
        # Watch the asserting literal and one literal from the backjump level.
        for i in range(1, len(learnt)):
            if self.level[abs(learnt[i])] == back:
                learnt[1], learnt[i] = learnt[i], learnt[1]
                break
        return learnt, back

    def _backjump(self, level):
        while len(self.trail_lim) > level:
            lim = self.trail_lim.pop()
            while len(self.trail) > lim:
                lit = self.trail.pop()
                v = abs(lit)
                del self.assign[v]
                del self.level[v]
                self.reason.pop(v, None)
        self._qhead = len(self.trail)

    def _decide(self):
        best, best_act = 0, -1.0
        for v in range(1, self.num_vars + 1):
            if v not in self.assign and self.activity[v] > best_act:
                best, best_act = v, self.activity[v]
        return best

    def solve(self) -> SatResult:
        if self.unsat:
            return SatResult("unsat")
        self._qhead = 0
        for u in self.units:
            val = self._value(u)
            if val is False:
                return SatResult("unsat")
            if val is None:
                self._enqueue(u, None)
        conflicts = 0
        restart_at = 100
        while True:
            conflict = self._propagate()
            if conflict is not None:
                if not self.trail_lim:
                    return SatResult("unsat")
                conflicts += 1
                self.act_inc *= 1.05
                if self.act_inc > 1e100:
                    self.activity = [a / 1e100 for a in self.activity]
                    self.act_inc /= 1e100
                learnt, back = self._analyze(conflict)
                self._backjump(back)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    self.clauses.append(learnt)
                    self.watches.setdefault(learnt[0], []).append(learnt)
                    self.watches.setdefault(learnt[1], []).append(learnt)
                    self._enqueue(learnt[0], learnt)
                if conflicts >= restart_at:
                    restart_at = int(restart_at * 1.5) + 1
                    conflicts = 0
                    self._backjump(0)
            else:
                var = self._decide()
                if var == 0:
                    model = {v: self.assign.get(v, False)
                             for v in range(1, self.num_vars + 1)}
                    return SatResult("sat", model=model)
                self.trail_lim.append(len(self.trail))
                self._enqueue(-var, None)


def solve_builtin(cnf: CNF) -> SatResult:
    return CdclSolver(cnf.num_vars, cnf.clauses).solve()


def solve_external(cnf: CNF, argv) -> SatResult:
    """Run `argv... <dimacs-path>`; exit 10 means SAT (model on `v` lines),
    20 means UNSAT, anything else is reported as unknown."""

    text, _ = emit_dimacs(cnf)
    path = None
    try:
        fd, path = tempfile.mkstemp(suffix=".cnf", prefix="faultres_")
        with os.fdopen(fd, "w") as f:
            f.write(text)
        try:
            proc = subprocess.run(list(argv) + [path], capture_output=True, text=True)
        except OSError as e:
            raise BackendSpawnFailure(f"cannot run {argv!r}: {e}") from None
        if proc.returncode == 20:
            return SatResult("unsat")
        if proc.returncode == 10:
            lits = []
            for line in proc.stdout.splitlines():
                if line.startswith("v ") or line == "v":
                    lits.extend(line[1:].split())
            if not lits:
                raise ModelParseError("SAT answer without `v` model lines")
            try:
                values = [int(t) for t in lits]
            except ValueError as e:
                raise ModelParseError(f"bad literal in model: {e}") from None
            model = {v: False for v in range(1, cnf.num_vars + 1)}
            for lit in values:
                if lit == 0:
                    continue
                if abs(lit) > cnf.num_vars:
                    raise ModelParseError(f"model literal {lit} out of range")
                model[abs(lit)] = lit > 0
            return SatResult("sat", model=model)
        return SatResult("unknown",
                         reason=f"solver exited with {proc.returncode}: {proc.stderr.strip()[:200]}")
    finally:
        if path is not None and os.path.exists(path):
            os.unlink(path)


def solve_cnf(cnf: CNF, backend=("builtin",)) -> SatResult:
    if tuple(backend) == ("builtin",):
        return solve_builtin(cnf)
    return solve_external(cnf, backend)
