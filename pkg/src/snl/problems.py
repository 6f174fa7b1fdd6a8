"""Problem instances and their file formats.

Graphs: header line ``n m [digraph]`` followed by ``u v`` edge lines
(vertices 0-based).  Weighted graphs add a weight column.  UK instances are
a single line ``b a1 ... an``.  CNF files use DIMACS.  CSPs are JSON.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .syntax import SnlError, ValidationError


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices 0..n-1."""

    n: int
    edges: frozenset  # frozenset of (u, v) with u < v

    def __post_init__(self):
        norm = set()
        for u, v in self.edges:
            if u == v:
                raise ValidationError("self-loop (%d,%d)" % (u, v))
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValidationError("edge (%d,%d) outside vertex range" % (u, v))
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))

    def adjacent(self, u):
        for a, b in self.edges:
            if a == u:
                yield b
            elif b == u:
                yield a

    def symmetric_pairs(self):
        for u, v in self.edges:
            yield (u, v)
            yield (v, u)


@dataclass(frozen=True)
class DiGraph:
    n: int
    edges: frozenset  # frozenset of (u, v)

    def __post_init__(self):
        for u, v in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValidationError("edge (%d,%d) outside vertex range" % (u, v))
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))

    def successors(self, u):
        return sorted(v for a, v in self.edges if a == u)

    def has_self_loop(self):
        return any(u == v for u, v in self.edges)


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with positive integer edge weights."""

    n: int
    weights: dict  # (u, v) with u < v -> weight

    def __post_init__(self):
        norm = {}
        for (u, v), w in self.weights.items():
            if u == v:
                raise ValidationError("self-loop (%d,%d)" % (u, v))
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValidationError("edge outside vertex range")
            if w <= 0:
                raise ValidationError("weights must be positive")
            key = (min(u, v), max(u, v))
            norm[key] = norm.get(key, 0) + w
        object.__setattr__(self, "weights", dict(sorted(norm.items())))

    @property
    def total_weight(self):
        return sum(self.weights.values())


@dataclass(frozen=True)
class Cnf:
    """CNF formula; literals are DIMACS-style nonzero ints."""

    num_vars: int
    clauses: tuple  # tuple of tuples of literals

    def __post_init__(self):
        cl = []
        for clause in self.clauses:
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValidationError("bad literal %d" % lit)
            cl.append(tuple(clause))
        object.__setattr__(self, "clauses", tuple(cl))

    @property
    def width(self):
        return max((len(c) for c in self.clauses), default=0)

    def polarity(self):
        """'positive', 'negative', 'mixed', or 'none' (for width-1 clauses)."""
        kinds = set()
        for clause in self.clauses:
            if len(clause) != 2:
                return "none"
            a, b = clause
            if a > 0 and b > 0 or a < 0 and b < 0:
                kinds.add("positive")
            else:
                kinds.add("negative")
        if kinds <= {"positive"}:
            return "positive"
        if kinds <= {"negative"}:
            return "negative"
        return "mixed"


@dataclass(frozen=True)
class CspInstance:
    """Arity <= 2 CSP: constraints are (allowed tuple set, variable scope)."""

    num_vars: int
    domain: tuple
    constraints: tuple  # tuple of (frozenset of value tuples, scope tuple)

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(self.domain))
        fixed = []
        for allowed, scope in self.constraints:
            scope = tuple(scope)
            if len(scope) not in (1, 2):
                raise ValidationError("constraint arity must be 1 or 2")
            for x in scope:
                if not 0 <= x < self.num_vars:
                    raise ValidationError("scope variable out of range")
            allowed = frozenset(tuple(t) for t in allowed)
            for t in allowed:
                if len(t) != len(scope) or any(v not in self.domain for v in t):
                    raise ValidationError("constraint table escapes the domain")
            fixed.append((allowed, scope))
        object.__setattr__(self, "constraints", tuple(fixed))


@dataclass(frozen=True)
class UkInstance:
    """Unary 0-1 knapsack: budget b and positive item values.

    Items above the budget can never be chosen and are dropped up front.
    """

    b: int
    values: tuple
    dropped: tuple = field(default=())

    def __post_init__(self):
        if self.b <= 0:
            raise ValidationError("budget must be positive")
        keep, drop = [], []
        for a in self.values:
            if a <= 0:
                raise ValidationError("item values must be positive")
            (keep if a <= self.b else drop).append(a)
        object.__setattr__(self, "values", tuple(keep))
        object.__setattr__(self, "dropped", tuple(drop))

    @property
    def n(self):
        return len(self.values)


# ---------------------------------------------------------------------------
# Parsing

def parse_graph(text: str):
    """Parse the shared graph format; returns Graph or DiGraph."""
    lines = [ln for ln in (l.split("#")[0].strip() for l in text.splitlines()) if ln]
    if not lines:
        raise SnlError("empty graph file")
    head = lines[0].split()
    if len(head) < 2:
        raise SnlError("graph header must be 'n m [digraph]'")
    n, m = int(head[0]), int(head[1])
    directed = len(head) > 2 and head[2] == "digraph"
    edges = set()
    for ln in lines[1:1 + m]:
        parts = ln.split()
        edges.add((int(parts[0]), int(parts[1])))
    if len(lines) - 1 != m:
        raise SnlError("expected %d edge lines, found %d" % (m, len(lines) - 1))
    return DiGraph(n, frozenset(edges)) if directed else Graph(n, frozenset(edges))


def format_graph(g) -> str:
    if isinstance(g, DiGraph):
        lines = ["%d %d digraph" % (g.n, len(g.edges))]
        lines += ["%d %d" % e for e in sorted(g.edges)]
    else:
        lines = ["%d %d" % (g.n, len(g.edges))]
        lines += ["%d %d" % e for e in sorted(g.edges)]
    return "\n".join(lines) + "\n"


def parse_weighted_graph(text: str) -> WeightedGraph:
    lines = [ln for ln in (l.split("#")[0].strip() for l in text.splitlines()) if ln]
    head = lines[0].split()
    n, m = int(head[0]), int(head[1])
    weights = {}
    for ln in lines[1:1 + m]:
        u, v, w = (int(x) for x in ln.split())
        weights[(u, v)] = weights.get((min(u, v), max(u, v)), 0) + w
    return WeightedGraph(n, weights)


def format_weighted_graph(g: WeightedGraph) -> str:
    lines = ["%d %d weighted" % (g.n, len(g.weights))]
    lines += ["%d %d %d" % (u, v, w) for (u, v), w in sorted(g.weights.items())]
    return "\n".join(lines) + "\n"


def parse_uk(text: str) -> UkInstance:
    parts = text.split()
    if len(parts) < 1:
        raise SnlError("UK instance is one line: b a1 ... an")
    return UkInstance(b=int(parts[0]), values=tuple(int(x) for x in parts[1:]))


def format_uk(inst: UkInstance) -> str:
    return " ".join(str(x) for x in (inst.b,) + inst.values + inst.dropped) + "\n"


def parse_dimacs(text: str) -> Cnf:
    num_vars = 0
    clauses = []
    current = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            num_vars = int(parts[2])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            else:
                current.append(lit)
    if current:
        clauses.append(tuple(current))
    if num_vars == 0:
        num_vars = max((abs(l) for c in clauses for l in c), default=1)
    return Cnf(num_vars=num_vars, clauses=tuple(clauses))


def format_dimacs(cnf: Cnf) -> str:
    lines = ["p cnf %d %d" % (cnf.num_vars, len(cnf.clauses))]
    lines += [" ".join(str(l) for l in clause) + " 0" for clause in cnf.clauses]
    return "\n".join(lines) + "\n"


def parse_csp(text: str) -> CspInstance:
    data = json.loads(text)
    return CspInstance(
        num_vars=data["variables"],
        domain=tuple(data["domain"]),
        constraints=tuple(
            (frozenset(tuple(t) for t in c["allowed"]), tuple(c["scope"]))
            for c in data["constraints"]))


def format_csp(inst: CspInstance) -> str:
    return json.dumps({
        "variables": inst.num_vars,
        "domain": list(inst.domain),
        "constraints": [{"scope": list(scope), "allowed": sorted(map(list, allowed))}
                        for allowed, scope in inst.constraints],
    }, indent=1, sort_keys=True)
