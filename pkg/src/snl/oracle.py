"""Independent reference solvers anchoring the differential tests.

These deliberately share no code with the encoders, evaluator, or
reductions: separate traversals, separate DP tables, exhaustive loops.
Exhaustive oracles carry hard size guards and refuse larger inputs.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .problems import Cnf, CspInstance, DiGraph, Graph, UkInstance, WeightedGraph
from .syntax import SnlError

MAX_VERTICES = 20
MAX_VARS = 20
MAX_BUDGET = 10 ** 4


class OracleGuard(SnlError):
    """Input exceeds the oracle's exhaustive-size guard."""


@dataclass
class OracleAnswer:
    decision: Optional[bool] = None
    optimum: Optional[int] = None
    certificate: object = None


def bfs_reachable(g: DiGraph, s: int, t: int) -> bool:
    if not (0 <= s < g.n and 0 <= t < g.n):
        raise SnlError("s/t outside vertex range")
    seen = {s}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        if u == t:
            return True
        for a, b in g.edges:
            if a == u and b not in seen:
                seen.add(b)
                queue.append(b)
    return t in seen


def bipartite_check(g: Graph) -> bool:
    color = {}
    for start in range(g.n):
        if start in color:
            continue
        color[start] = 0
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in g.adjacent(u):
                if v not in color:
                    color[v] = 1 - color[u]
                    queue.append(v)
                elif color[v] == color[u]:
                    return False
    return True


def twosat_decide(cnf: Cnf) -> bool:
    """Implication graph + Kosaraju strongly connected components."""
    if cnf.width > 2:
        raise SnlError("twosat_decide expects width <= 2")
    n = cnf.num_vars

    def node(lit):  # literal -> node id in [0, 2n)
        return 2 * (abs(lit) - 1) + (0 if lit > 0 else 1)

    def neg(lit):
        return -lit

    succ = [[] for _ in range(2 * n)]
    pred = [[] for _ in range(2 * n)]

    def add_edge(a, b):
        succ[node(a)].append(node(b))
        pred[node(b)].append(node(a))

    for clause in cnf.clauses:
        if len(clause) == 1:
            a = clause[0]
            add_edge(neg(a), a)
        else:
            a, b = clause
            add_edge(neg(a), b)
            add_edge(neg(b), a)

    order = []
    seen = [False] * (2 * n)
    for start in range(2 * n):
        if seen[start]:
            continue
        stack = [(start, 0)]
        seen[start] = True
        while stack:
            u, i = stack.pop()
            if i < len(succ[u]):
                stack.append((u, i + 1))
                v = succ[u][i]
                if not seen[v]:
                    seen[v] = True
                    stack.append((v, 0))
            else:
                order.append(u)
    comp = [-1] * (2 * n)
    label = 0
    for u in reversed(order):
        if comp[u] != -1:
            continue
        stack = [u]
        comp[u] = label
        while stack:
            x = stack.pop()
            for y in pred[x]:
                if comp[y] == -1:
                    comp[y] = label
                    stack.append(y)
        label += 1
    for x in range(n):
        if comp[2 * x] == comp[2 * x + 1]:
            return False
    return True


def twosat_model(cnf: Cnf) -> Optional[dict]:
    """A satisfying assignment by exhaustive search (guarded), or None."""
    if cnf.num_vars > MAX_VARS:
        raise OracleGuard("too many variables for exhaustive search")
    for bits in itertools.product((False, True), repeat=cnf.num_vars):
        ok = all(any((l > 0) == bits[abs(l) - 1] for l in clause)
                 for clause in cnf.clauses)
        if ok:
            return {i + 1: bits[i] for i in range(cnf.num_vars)}
    return None


def subset_sum_dp(inst: UkInstance) -> OracleAnswer:
    """Exact-hit decision and best value <= b, by the classic table."""
    if inst.b > MAX_BUDGET:
        raise OracleGuard("budget exceeds the DP guard")
    reachable = [False] * (inst.b + 1)
    reachable[0] = True
    for a in inst.values:
        for s in range(inst.b, a - 1, -1):
            if reachable[s - a]:
                reachable[s] = True
    best = max(s for s in range(inst.b + 1) if reachable[s])
    subset = _recover_subset(inst, best)
    return OracleAnswer(decision=reachable[inst.b], optimum=best,
                        certificate=subset)


def _recover_subset(inst: UkInstance, target: int):
    n = inst.n
    table = [[False] * (inst.b + 1) for _ in range(n + 1)]
    table[0][0] = True
    for i in range(1, n + 1):
        a = inst.values[i - 1]
        for s in range(inst.b + 1):
            table[i][s] = table[i - 1][s] or (s >= a and table[i - 1][s - a])
    if not table[n][target]:
        return None
    subset = []
    s = target
    for i in range(n, 0, -1):
        a = inst.values[i - 1]
        if not table[i - 1][s] and s >= a and table[i - 1][s - a]:
            subset.append(i - 1)
            s -= a
    return tuple(sorted(subset))


def exact_cut(g) -> OracleAnswer:
    """Optimum cut value by exhaustive partition enumeration."""
    if g.n > MAX_VERTICES:
        raise OracleGuard("too many vertices for exhaustive cuts")
    if isinstance(g, WeightedGraph):
        edges = [(u, v, w) for (u, v), w in g.weights.items()]
    else:
        edges = [(u, v, 1) for u, v in g.edges]
    best = 0
    best_side = frozenset()
    for mask in range(1 << max(0, g.n - 1)):  # vertex n-1 pinned to side 0
        side = {v for v in range(g.n - 1) if mask >> v & 1}
        value = sum(w for u, v, w in edges if (u in side) != (v in side))
        if value > best:
            best = value
            best_side = frozenset(side)
    return OracleAnswer(optimum=best, certificate=best_side)


def exact_max2sat(cnf: Cnf) -> OracleAnswer:
    if cnf.num_vars > MAX_VARS:
        raise OracleGuard("too many variables for exhaustive assignments")
    best = -1
    best_assign = None
    for bits in itertools.product((False, True), repeat=cnf.num_vars):
        sat = sum(1 for clause in cnf.clauses
                  if any((l > 0) == bits[abs(l) - 1] for l in clause))
        if sat > best:
            best = sat
            best_assign = bits
    return OracleAnswer(optimum=max(best, 0),
                        certificate={i + 1: best_assign[i]
                                     for i in range(cnf.num_vars)}
                        if best_assign is not None else None)


exact_max3sat = exact_max2sat  # same exhaustive loop; width is irrelevant


def exact_maxip(xs1, xs2) -> OracleAnswer:
    """Max inner product over all pairs of equal-length bit strings."""
    best = 0
    best_pair = None
    for a in xs1:
        for b in xs2:
            if len(a) != len(b):
                raise SnlError("bit strings must have equal length")
            ip = sum(1 for x, y in zip(a, b) if x == "1" and y == "1")
            if best_pair is None or ip > best:
                best = ip
                best_pair = (a, b)
    return OracleAnswer(optimum=best, certificate=best_pair)


def csp_brute(inst: CspInstance) -> bool:
    if inst.num_vars > MAX_VARS:
        raise OracleGuard("too many variables for exhaustive assignments")
    for combo in itertools.product(inst.domain, repeat=inst.num_vars):
        ok = True
        for allowed, scope in inst.constraints:
            if tuple(combo[x] for x in scope) not in allowed:
                ok = False
                break
        if ok:
            return True
    return False
