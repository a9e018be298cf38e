"""Boolean formula DAGs and their lowering to CNF.

The builder hash-conses nodes and folds constants, so structurally equal
sub-terms share one node.  Cardinality constraints ride along the formula as
a side list and are lowered with the sequential-counter encoding; they are
asserted positively at the top level, never negated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

VAR, CONST, NOT, AND, OR, XOR, IFF, ITE = "var", "const", "not", "and", "or", "xor", "iff", "ite"

# Variable roles, in the order they are numbered in the CNF.
ROLE_INPUT = "primary-input"
ROLE_CONTROL = "control"
ROLE_SELECTION = "selection"
ROLE_AUX_D = "aux-d"
ROLE_TSEITIN = "tseitin"
ROLE_ORDER = (ROLE_INPUT, ROLE_CONTROL, ROLE_SELECTION, ROLE_AUX_D)


class EncodingError(Exception):
    pass


class FormulaBuilder:
    """Hash-consing node store.  Nodes are integers; node 0/1 are reserved for
    the false/true constants."""

    def __init__(self):
        self.kinds = []
        self.args = []
        self.intern = {}
        self.var_names = []
        self.var_roles = {}
        self._var_ids = {}
        self.false = self._new(CONST, (0,))
        self.true = self._new(CONST, (1,))

    def _new(self, kind, args):
        key = (kind, args)
        nid = self.intern.get(key)
        if nid is None:
            nid = len(self.kinds)
            self.kinds.append(kind)
            self.args.append(args)
            self.intern[key] = nid
        return nid

    def var(self, name, role):
        nid = self._var_ids.get(name)
        if nid is not None:
            if self.var_roles[name] != role:
                raise EncodingError(f"variable {name!r} redeclared with a different role")
            return nid
        nid = self._new(VAR, (name,))
        self._var_ids[name] = nid
        self.var_names.append(name)
        self.var_roles[name] = role
        return nid

    def const(self, bit):
        return self.true if bit else self.false

    def not_(self, a):
        if a == self.true:
            return self.false
        if a == self.false:
            return self.true
        if self.kinds[a] == NOT:
            return self.args[a][0]
        return self._new(NOT, (a,))

    def _complementary(self, a, b):
        return ((self.kinds[a] == NOT and self.args[a][0] == b)
                or (self.kinds[b] == NOT and self.args[b][0] == a))

    def and_(self, a, b):
        if a == self.false or b == self.false:
            return self.false
        if a == self.true:
            return b
        if b == self.true:
            return a
        if a == b:
            return a
        if self._complementary(a, b):
            return self.false
        if a > b:
            a, b = b, a
        return self._new(AND, (a, b))

    def or_(self, a, b):
        if a == self.true or b == self.true:
            return self.true
        if a == self.false:
            return b
        if b == self.false:
            return a
        if a == b:
            return a
        if self._complementary(a, b):
            return self.true
        if a > b:
            a, b = b, a
        return self._new(OR, (a, b))

    def xor(self, a, b):
        if a == b:
            return self.false
        if a == self.false:
            return b
        if b == self.false:
            return a
        if a == self.true:
            return self.not_(b)
        if b == self.true:
            return self.not_(a)
        if self._complementary(a, b):
            return self.true
        if a > b:
            a, b = b, a
        return self._new(XOR, (a, b))

    def iff(self, a, b):
        if a == b:
            return self.true
        if a == self.true:
            return b
        if b == self.true:
            return a
        if a == self.false:
            return self.not_(b)
        if b == self.false:
            return self.not_(a)
        if self._complementary(a, b):
            return self.false
        if a > b:
            a, b = b, a
        return self._new(IFF, (a, b))

    def ite(self, c, t, e):
        if c == self.true:
            return t
        if c == self.false:
            return e
        if t == e:
            return t
        if t == self.true and e == self.false:
            return c
        if t == self.false and e == self.true:
            return self.not_(c)
        if t == self.true:
            return self.or_(c, e)
        if t == self.false:
            return self.and_(self.not_(c), e)
        if e == self.true:
            return self.or_(self.not_(c), t)
        if e == self.false:
            return self.and_(c, t)
        return self._new(ITE, (c, t, e))

    def or_many(self, nodes):
        acc = self.false
        for n in nodes:
            acc = self.or_(acc, n)
        return acc

    def and_many(self, nodes):
        acc = self.true
        for n in nodes:
            acc = self.and_(acc, n)
        return acc

    def evaluate(self, root, assignment, default=False):
        """Evaluate a node under a name->bool assignment (iterative, DAG-aware)."""
        memo = {}
        stack = [root]
        while stack:
            n = stack[-1]
            if n in memo:
                stack.pop()
                continue
            kind, args = self.kinds[n], self.args[n]
            if kind == CONST:
                memo[n] = bool(args[0])
                stack.pop()
                continue
            if kind == VAR:
                memo[n] = bool(assignment.get(args[0], default))
                stack.pop()
                continue
            missing = [a for a in args if a not in memo]
            if missing:
                stack.extend(missing)
                continue
            vals = [memo[a] for a in args]
            if kind == NOT:
                memo[n] = not vals[0]
            elif kind == AND:
                memo[n] = vals[0] and vals[1]
            elif kind == OR:
                memo[n] = vals[0] or vals[1]
            elif kind == XOR:
                memo[n] = vals[0] != vals[1]
            elif kind == IFF:
                memo[n] = vals[0] == vals[1]
            elif kind == ITE:
                memo[n] = vals[1] if vals[0] else vals[2]
            else:
                raise EncodingError(f"cannot evaluate node kind {kind}")
            stack.pop()
        return memo[root]


@dataclass(frozen=True)
class CardinalityConstraint:
    """sum(vars) <= bound, asserted positively."""

    var_names: tuple
    bound: int
    label: str = ""


@dataclass
class BoolFormula:
    builder: FormulaBuilder
    root: int
    taps: dict = field(default_factory=dict)
    cardinality: list = field(default_factory=list)

    def evaluate(self, assignment) -> bool:
        if not self.builder.evaluate(self.root, assignment):
            return False
        for c in self.cardinality:
            if sum(1 for v in c.var_names if assignment.get(v, False)) > c.bound:
                return False
        return True


@dataclass
class CNF:
    num_vars: int
    clauses: list
    var_index: dict        # formula variable name -> CNF index
    roles: dict            # formula variable name -> role
    aux_names: dict = field(default_factory=dict)  # CNF index -> generated name

    def index_of(self, name):
        return self.var_index[name]

    def vars_with_role(self, role):
        return [n for n in self.var_index if self.roles.get(n) == role]


def at_most_k(literals, k, first_aux):
    """Sequential-counter (size-accumulator) encoding of sum(literals) <= k.

    Returns (clauses, aux_vars).  Any assignment of the literals with at most
    k true extends to a satisfying assignment of the clauses, and none with
    more than k true does.  O(n*k) clauses and auxiliaries.
    """

    n = len(literals)
    if k < 0:
        raise ValueError("k must be non-negative")
    if k >= n:
        return [], []
    if k == 0:
        return [[-lit] for lit in literals], []

    # s[i][j] (i in 0..n-2) means: at least j+1 of the first i+1 literals hold.
    aux = []
    s = []
    for i in range(n - 1):
        row = []
        for j in range(k):
            row.append(first_aux + len(aux))
            aux.append(first_aux + len(aux))
        s.append(row)

    clauses = []
    x = literals
    clauses.append([-x[0], s[0][0]])
    for j in range(1, k):
        clauses.append([-s[0][j]])
    for i in range(1, n - 1):
        clauses.append([-x[i], s[i][0]])
        clauses.append([-s[i - 1][0], s[i][0]])
        for j in range(1, k):
            clauses.append([-x[i], -s[i - 1][j - 1], s[i][j]])
            clauses.append([-s[i - 1][j], s[i][j]])
        clauses.append([-x[i], -s[i - 1][k - 1]])
    clauses.append([-x[n - 1], -s[n - 2][k - 1]])
    return clauses, aux


def tseitin_cnf(formula: BoolFormula) -> CNF:
    """Equisatisfiable CNF with deterministic variable numbering: primary
    inputs, controls, selections, d auxiliaries, then Tseitin variables in
    first-use order, then cardinality counters."""

    b = formula.builder
    var_index, roles = {}, {}
    next_var = 1
    for role in ROLE_ORDER:
        for name in b.var_names:
            if b.var_roles[name] == role:
                var_index[name] = next_var
                roles[name] = role
                next_var += 1
    for name in b.var_names:
        if name not in var_index:  # any role outside the standard groups
            var_index[name] = next_var
            roles[name] = b.var_roles[name]
            next_var += 1

    clauses = []
    aux_names = {}
    lit_of = {}

    def fresh(tag):
        nonlocal next_var
        v = next_var
        next_var += 1
        aux_names[v] = f"_{tag}{v}"
        return v

    # Iterative postorder over the DAG reachable from the root.
    order = []
    seen = set()
    stack = [(formula.root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if node in seen:
            continue
        seen.add(node)
        stack.append((node, True))
        kind = b.kinds[node]
        if kind in (VAR, CONST):
            continue
        for a in reversed(b.args[node]):
            stack.append((a, False))

    root_const = None
    for node in order:
        kind, args = b.kinds[node], b.args[node]
        if kind == VAR:
            lit_of[node] = var_index[args[0]]
        elif kind == CONST:
            if node == formula.root:
                root_const = bool(args[0])
            else:
                # Folding keeps constants out of operator arguments.
                raise EncodingError("constant node inside formula body")
        elif kind == NOT:
            lit_of[node] = -lit_of[args[0]]
        else:
            g = fresh("t")
            roles[f"_t{g}"] = ROLE_TSEITIN
            lit_of[node] = g
            if kind == AND:
                a, c = lit_of[args[0]], lit_of[args[1]]
                clauses += [[-g, a], [-g, c], [g, -a, -c]]
            elif kind == OR:
                a, c = lit_of[args[0]], lit_of[args[1]]
                clauses += [[g, -a], [g, -c], [-g, a, c]]
            elif kind == XOR:
                a, c = lit_of[args[0]], lit_of[args[1]]
                clauses += [[-g, a, c], [-g, -a, -c], [g, -a, c], [g, a, -c]]
            elif kind == IFF:
                a, c = lit_of[args[0]], lit_of[args[1]]
                clauses += [[g, a, c], [g, -a, -c], [-g, -a, c], [-g, a, -c]]
            elif kind == ITE:
                s, t, e = (lit_of[a] for a in args)
                clauses += [[-g, -s, t], [-g, s, e], [g, -s, -t], [g, s, -e]]
            else:
                raise EncodingError(f"cannot lower node kind {kind}")

    if root_const is not None:
        if root_const is False:
            clauses.append([])
    else:
        clauses.append([lit_of[formula.root]])

    for card in formula.cardinality:
        lits = [var_index[name] for name in card.var_names]
        extra, aux = at_most_k(lits, card.bound, next_var)
        for v in aux:
            aux_names[v] = f"_s{v}"
            roles[f"_s{v}"] = ROLE_TSEITIN
        next_var += len(aux)
        clauses.extend(extra)

    return CNF(num_vars=next_var - 1, clauses=clauses, var_index=var_index,
               roles=roles, aux_names=aux_names)


def emit_dimacs(cnf: CNF):
    """DIMACS text plus the role-tagged name->index sidecar.  Byte-identical
    output for equal CNFs."""

    lines = [f"p cnf {cnf.num_vars} {len(cnf.clauses)}"]
    for clause in cnf.clauses:
        lines.append(" ".join(str(l) for l in clause + [0]))
    sidecar = {
        "num_vars": cnf.num_vars,
        "num_clauses": len(cnf.clauses),
        "vars": {
            name: {"index": idx, "role": cnf.roles.get(name, "tseitin")}
            for name, idx in sorted(cnf.var_index.items(), key=lambda kv: kv[1])
        },
    }
    return "\n".join(lines) + "\n", sidecar
