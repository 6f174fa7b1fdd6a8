"""Problem encoders: sentences, structures, domains, objectives, witnesses.

Vertices and other input objects are identified with small integers; the
constant symbol ``n`` always holds the largest index (vertex, item count,
or variable id) of the instance.  Arithmetic side conditions (pair/triple
index encodings, addition) are materialized as relation tables so the
evaluator can treat them extensionally.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .evaluate import MaxSpec
from .problems import Cnf, CspInstance, DiGraph, Graph, UkInstance
from .syntax import (
    BOTTOM, And, BoolConst, ConstSym, DomStructure, Eq, FoVar, Implies, Le,
    Mu, Not, NumDecl, ObjDecl, Or, RelAtom, RelStructure, Sentence, SnlError,
    SoAtom, SoDecl, SoRange, Suc, Witness, conj, disj, instance_digest, lt,
    num, suc,
)


@dataclass(frozen=True)
class Encoding:
    sentence: Sentence
    rel: RelStructure
    dom: DomStructure
    objective: Optional[MaxSpec] = None
    meta: dict = field(default_factory=dict)


def _v(name):
    return FoVar(name)


def _so(name, clock, *args):
    return SoAtom(name, clock, tuple(args))


def _rel(name, *terms):
    return RelAtom(name, tuple(terms))


def _bfs_dist(n, succ):
    """Distances from vertex 0 along a successor function (own traversal)."""
    dist = {0: 0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in succ(u):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


# ---------------------------------------------------------------------------
# 2COLOR

def encode_2color(g: Graph) -> Encoding:
    if g.n < 1:
        raise SnlError("graph must have at least one vertex")
    n = g.n - 1
    sent = Sentence(
        so_decls=(SoDecl("C", 1),),
        num_decls=(NumDecl("i", 0, "n"), NumDecl("d", 0, 1),
                   NumDecl("i2", 0, "n"), NumDecl("j2", 0, "n"),
                   NumDecl("d2", 0, 1), NumDecl("e2", 0, 1)),
        obj_decls=(),
        conjuncts=(
            Implies(_so("C", _v("i"), _v("d")),
                    And(Le(num(0), _v("d")), Le(_v("d"), num(1)))),
            Implies(And(_rel("E", _v("i2"), _v("j2")),
                        And(_so("C", _v("i2"), _v("d2")),
                            _so("C", _v("j2"), _v("e2")))),
                    Not(Eq(_v("d2"), _v("e2")))),
        ))
    rel = RelStructure(
        universes={"V": tuple(range(g.n))},
        relations={"E": frozenset(g.symmetric_pairs())},
        constants={"n": n},
        signatures={"E": ("V", "V")})
    dom = _domain(sent, rel, {"C": SoRange(n, ((0, 1),))})
    return Encoding(sent, rel, dom,
                    meta=_meta("2color", "%d:%s" % (g.n, sorted(g.edges))))


# ---------------------------------------------------------------------------
# UK (unary knapsack, exact hit) and MAX-UK

def _uk_structure(inst: UkInstance):
    b, n = inst.b, inst.n
    items = frozenset((i + 1, a) for i, a in enumerate(inst.values))
    add = frozenset((s + z, s, z) for s in range(b + 1) for z in range(b + 1)
                    if s + z <= b)
    rel = RelStructure(
        universes={"U": tuple(range(b + 1)), "IDX": tuple(range(n + 1))},
        relations={"I": items, "ADD": add},
        constants={"n": n, "b": b},
        signatures={"I": ("IDX", "U"), "ADD": ("U", "U", "U")})
    return rel


def _uk_transition():
    i, s, t, z = _v("i"), _v("s"), _v("t"), _v("z")
    stay = And(Eq(s, t), Le(t, ConstSym("b")))
    step = And(lt(s, t),
               And(Le(t, ConstSym("b")),
                   Implies(And(_rel("I", suc(i), z), Le(num(1), z)),
                           _rel("ADD", t, s, z))))
    return Implies(And(lt(i, ConstSym("n")),
                       And(_so("P", i, s), _so("P", suc(i), t))),
                   Or(stay, step))


def encode_uk(inst: UkInstance) -> Encoding:
    sent = Sentence(
        so_decls=(SoDecl("P", 1),),
        num_decls=(NumDecl("i", 0, "n"), NumDecl("s", 0, "b"),
                   NumDecl("t", 0, "b"), NumDecl("z", 0, "b")),
        obj_decls=(),
        conjuncts=(
            _so("P", num(0), num(0)),
            _so("P", ConstSym("n"), ConstSym("b")),
            _uk_transition(),
        ))
    rel = _uk_structure(inst)
    dom = _domain(sent, rel,
                  {"P": SoRange(inst.n, (tuple(range(inst.b + 1)),))})
    return Encoding(sent, rel, dom,
                    meta=_meta("uk", "%d:%s" % (inst.b, list(inst.values))))


def encode_maxuk(inst: UkInstance) -> Encoding:
    sent = Sentence(
        so_decls=(SoDecl("P", 1),),
        num_decls=(NumDecl("i", 0, "n"), NumDecl("s", 0, "b"),
                   NumDecl("t", 0, "b"), NumDecl("z", 0, "b")),
        obj_decls=(),
        conjuncts=(
            _so("P", num(0), num(0)),
            _uk_transition(),
        ))
    rel = _uk_structure(inst)
    dom = _domain(sent, rel,
                  {"P": SoRange(inst.n, (tuple(range(inst.b + 1)),))})
    i, s, t, v, j = (_v(x) for x in ("i", "s", "t", "v", "j"))
    objective = MaxSpec(
        so_decls=sent.so_decls,
        num_decls=(NumDecl("i", 0, "n"), NumDecl("s", 0, "b"),
                   NumDecl("t", 0, "b"), NumDecl("v", 0, "b"),
                   NumDecl("j", 0, "b")),
        obj_decls=(),
        formula=conj([
            lt(i, ConstSym("n")),
            Le(num(1), j), Le(j, t),
            _so("P", num(0), num(0)),
            _so("P", i, s),
            _so("P", suc(i), v),
            _rel("ADD", v, s, t),
            Or(Eq(t, num(0)),
               And(Le(v, ConstSym("b")), _rel("I", suc(i), t))),
        ]),
        clock_var="i")
    return Encoding(sent, rel, dom, objective=objective,
                    meta=_meta("maxuk", "%d:%s" % (inst.b, list(inst.values))))


# ---------------------------------------------------------------------------
# exact3DSTCON

def encode_exact3dstcon(g: DiGraph, s: int = 0, t: Optional[int] = None) -> Encoding:
    if g.has_self_loop():
        raise SnlError("self-loops are not allowed")
    if t is None:
        t = g.n - 1
    if any(v == s for _u, v in g.edges):
        raise SnlError("start vertex must have indegree 0")
    g, s, t = _relabel(g, s, t)
    n = g.n - 1
    i, u, v = _v("i"), _v("u"), _v("v")
    v1, v2, v3 = _v("v1"), _v("v2"), _v("v3")
    w1, w2 = _v("w1"), _v("w2")
    cs, ct = ConstSym("s"), ConstSym("t")
    first_step = Implies(
        conj([_so("P", num(0), cs), _so("P", num(1), v),
              _rel("E", cs, v1), _rel("E", cs, v2), _rel("E", cs, v3),
              Not(Eq(v1, v2)), Not(Eq(v2, v3)), Not(Eq(v1, v3))]),
        disj([Eq(v, v1), Eq(v, v2), Eq(v, v3)]))
    inner_step = Implies(
        conj([lt(num(0), i), lt(i, ConstSym("n")),
              _so("P", i, u), _so("P", suc(i), _v("v4")),
              _rel("E", u, w1), _rel("E", u, w2), Not(Eq(w1, w2))]),
        Or(Eq(_v("v4"), w1), Eq(_v("v4"), w2)))
    i2 = _v("i2")
    absorb = Implies(And(lt(i2, ConstSym("n")), _so("P", i2, ct)),
                     _so("P", suc(i2), ct))
    sent = Sentence(
        so_decls=(SoDecl("P", 1),),
        num_decls=(NumDecl("v", 0, "n"), NumDecl("v1", 0, "n"),
                   NumDecl("v2", 0, "n"), NumDecl("v3", 0, "n"),
                   NumDecl("i", 0, "n"), NumDecl("u", 0, "n"),
                   NumDecl("v4", 0, "n"), NumDecl("w1", 0, "n"),
                   NumDecl("w2", 0, "n"), NumDecl("i2", 0, "n")),
        obj_decls=(),
        conjuncts=(
            _so("P", num(0), cs),
            _so("P", ConstSym("n"), ct),
            first_step,
            inner_step,
            absorb,
        ))
    rel = RelStructure(
        universes={"V": tuple(range(g.n))},
        relations={"E": g.edges},
        constants={"n": n, "s": 0, "t": t},
        signatures={"E": ("V", "V")})
    dom = _domain(sent, rel, {"P": SoRange(n, (tuple(range(g.n)),))})
    return Encoding(sent, rel, dom,
                    meta=_meta("exact3dstcon", "%d:%s" % (g.n, sorted(g.edges))))


def _relabel(g: DiGraph, s: int, t: int):
    """Relabel vertices so the source is 0 and the target is n-1."""
    if s == t:
        raise SnlError("source and target must differ")
    order = [s] + [x for x in range(g.n) if x not in (s, t)] + [t]
    table = {old: new for new, old in enumerate(order)}
    edges = frozenset((table[a], table[b]) for a, b in g.edges)
    return DiGraph(g.n, edges), 0, g.n - 1


# ---------------------------------------------------------------------------
# NBG (non-bipartiteness via an odd closed walk)

def encode_nbg(g: Graph) -> Encoding:
    n = g.n - 1
    steps = g.n  # walk positions 0..n+1, so up to n+1 moves
    i, u, k, v = _v("i"), _v("u"), _v("k"), _v("v")
    cn1 = suc(ConstSym("n"))
    sent = Sentence(
        so_decls=(SoDecl("P", 2),),
        num_decls=(NumDecl("u1", 0, "n"), NumDecl("k1", 0, g.n),
                   NumDecl("i", 0, "n"), NumDecl("u", 0, "n"),
                   NumDecl("k", 0, g.n), NumDecl("v", 0, "n"),
                   NumDecl("l", 0, g.n),
                   NumDecl("i3", 0, "n"), NumDecl("u3", 0, "n"),
                   NumDecl("k3", 0, g.n), NumDecl("v3", 0, "n"),
                   NumDecl("u4", 0, "n"), NumDecl("k4", 0, g.n),
                   NumDecl("v4", 0, "n"), NumDecl("l4", 0, g.n),
                   NumDecl("u5", 0, "n"), NumDecl("k5", 0, g.n)),
        obj_decls=(),
        conjuncts=(
            # the walk starts with zero moves made
            Implies(_so("P", num(0), _v("u1"), _v("k1")), Eq(_v("k1"), num(0))),
            # a step either stalls or moves to a different vertex, counting it
            Implies(And(_so("P", i, u, k), _so("P", suc(i), v, _v("l"))),
                    Or(And(Eq(_v("l"), k), Eq(u, v)),
                       And(Eq(_v("l"), suc(k)), Not(Eq(u, v))))),
            # counted moves follow edges
            Implies(And(_so("P", _v("i3"), _v("u3"), _v("k3")),
                        _so("P", suc(_v("i3")), _v("v3"), suc(_v("k3")))),
                    _rel("E", _v("u3"), _v("v3"))),
            # the walk is closed
            Implies(And(_so("P", num(0), _v("u4"), _v("k4")),
                        _so("P", cn1, _v("v4"), _v("l4"))),
                    Eq(_v("u4"), _v("v4"))),
            # and makes an odd number of moves
            Implies(_so("P", cn1, _v("u5"), _v("k5")), _rel("ODD", _v("k5"))),
        ))
    rel = RelStructure(
        universes={"V": tuple(range(g.n)), "K": tuple(range(g.n + 1))},
        relations={"E": frozenset(g.symmetric_pairs()),
                   "ODD": frozenset((x,) for x in range(g.n + 1) if x % 2 == 1)},
        constants={"n": n},
        signatures={"E": ("V", "V"), "ODD": ("K",)})
    dom = _domain(sent, rel,
                  {"P": SoRange(g.n, (tuple(range(g.n)), tuple(range(g.n + 1))))})
    return Encoding(sent, rel, dom,
                    meta=_meta("nbg", "%d:%s" % (g.n, sorted(g.edges))))


# ---------------------------------------------------------------------------
# DSTNCON (non-connectivity by inductive counting)

def _dstncon_tables(g: DiGraph):
    n = g.n - 1
    m = g.n  # n + 1
    enc1 = frozenset((e * m + i, e, i) for e in range(m) for i in range(m))
    enc2 = frozenset((u * m * m + i * m + e, u, e, i)
                     for u in range(m) for i in range(m) for e in range(m))
    return enc1, enc2


def encode_dstncon(g: DiGraph, s: int = 0, t: Optional[int] = None) -> Encoding:
    if g.has_self_loop():
        raise SnlError("self-loops are not allowed")
    if t is None:
        t = g.n - 1
    g, s, t = _relabel(g, s, t)
    n = g.n - 1
    m = g.n
    enc1, enc2 = _dstncon_tables(g)
    rel = RelStructure(
        universes={"V": tuple(range(m)), "H": tuple(range(m + 1)),
                   "W1": tuple(range(m * m)), "W2": tuple(range(m * m * m))},
        relations={"E": g.edges, "ENC1": enc1, "ENC2": enc2},
        constants={"n": n, "t": t},
        signatures={"E": ("V", "V"), "ENC1": ("W1", "V", "V"),
                    "ENC2": ("W2", "V", "V", "V")})

    ct, cn = ConstSym("t"), ConstSym("n")

    conjuncts = []
    decls = []

    def declare(name, hi):
        decls.append(NumDecl(name, 0, hi))
        return _v(name)

    w1_hi, w2_hi, v_hi, h_hi = m * m - 1, m * m * m - 1, n, m

    # walk table P: block start, block-0 base, step and clamp rules
    w, e, u = declare("w", w1_hi), declare("e", v_hi), declare("u", v_hi)
    conjuncts.append(And(
        Not(_rel("E", u, u)),
        Implies(And(_rel("ENC1", w, e, num(0)), _so("P", w, u)),
                And(Eq(e, num(0)), Eq(u, num(0))))))
    wb, ib = declare("wb", w1_hi), declare("ib", v_hi)
    conjuncts.append(Implies(_rel("ENC1", wb, num(0), ib), _so("P", wb, num(0))))
    wc, ec, ic, uc, vc = (declare(x, h) for x, h in
                          (("wc", w1_hi), ("ec", v_hi), ("ic", v_hi),
                           ("uc", v_hi), ("vc", v_hi)))
    conjuncts.append(Implies(
        conj([_rel("ENC1", wc, ec, ic), _so("P", wc, uc),
              _rel("ENC1", suc(wc), ec, suc(ic)), _so("P", suc(wc), vc),
              Not(Eq(uc, ec)), Not(Eq(uc, vc))]),
        _rel("E", uc, vc)))
    wd, ed, id_, ud = (declare(x, h) for x, h in
                       (("wd", w1_hi), ("ed", v_hi), ("id", v_hi), ("ud", v_hi)))
    conjuncts.append(Implies(
        conj([_rel("ENC1", wd, ed, id_), _so("P", wd, ed),
              _rel("ENC1", suc(wd), ed, suc(id_)), _so("P", suc(wd), ud)]),
        Eq(ud, ed)))
    # the target is never reached
    we = declare("we", w1_hi)
    conjuncts.append(Implies(_rel("ENC1", we, ct, cn), Not(_so("P", we, ct))))

    # reach-count table N: bases and propagation along the low digit
    wf, uf, if_ = (declare(x, h) for x, h in
                   (("wf", w2_hi), ("uf", v_hi), ("if", v_hi)))
    conjuncts.append(Implies(_rel("ENC2", wf, uf, num(0), if_), _so("N", wf, num(1))))
    wg, ug, eg = (declare(x, h) for x, h in
                  (("wg", w2_hi), ("ug", v_hi), ("eg", v_hi)))
    conjuncts.append(Implies(_rel("ENC2", wg, ug, eg, num(0)), _so("N", wg, num(1))))
    wh, whb, uh, eh, ih = (declare(x, h) for x, h in
                           (("wh", w2_hi), ("whb", w1_hi), ("uh", v_hi),
                            ("eh", v_hi), ("ih", v_hi)))
    conjuncts.append(Implies(
        conj([_rel("ENC2", wh, uh, eh, ih), _rel("ENC1", whb, suc(eh), ih),
              _so("P", whb, suc(eh))]),
        And(_rel("ENC2", suc(wh), uh, suc(eh), ih),
            _so("N", suc(wh), suc(Mu("N", wh))))))
    wi, wib, ui, ei, ii = (declare(x, h) for x, h in
                           (("wi", w2_hi), ("wib", w1_hi), ("ui", v_hi),
                            ("ei", v_hi), ("ii", v_hi)))
    conjuncts.append(Implies(
        conj([_rel("ENC2", wi, ui, ei, ii), _rel("ENC1", wib, suc(ei), ii),
              Not(_so("P", wib, suc(ei)))]),
        And(_rel("ENC2", suc(wi), ui, suc(ei), ii),
            _so("N", suc(wi), Mu("N", wi)))))

    # excluded-count table C: bases, copies, and increments
    wj, ij = declare("wj", w2_hi), declare("ij", v_hi)
    conjuncts.append(Implies(_rel("ENC2", wj, num(0), num(0), ij),
                             _so("C", wj, num(0))))
    wk, uk, ek = (declare(x, h) for x, h in
                  (("wk", w2_hi), ("uk", v_hi), ("ek", v_hi)))
    conjuncts.append(Implies(And(Le(num(1), uk), _rel("ENC2", wk, uk, ek, num(0))),
                             _so("C", wk, num(1))))
    wl, ul, il = (declare(x, h) for x, h in
                  (("wl", w2_hi), ("ul", v_hi), ("il", v_hi)))
    conjuncts.append(Implies(And(Le(num(1), ul), _rel("ENC2", wl, ul, num(0), il)),
                             _so("C", wl, num(1))))
    wm, um, em, im, hm = (declare(x, h) for x, h in
                          (("wm", w2_hi), ("um", v_hi), ("em", v_hi),
                           ("im", v_hi), ("hm", h_hi)))
    conjuncts.append(Implies(
        conj([_rel("ENC2", wm, um, em, im), _so("C", wm, hm),
              Eq(um, suc(em))]),
        And(_rel("ENC2", suc(wm), um, suc(em), im), _so("C", suc(wm), hm))))
    wn, wnb, un, en, in_ = (declare(x, h) for x, h in
                            (("wn", w2_hi), ("wnb", w1_hi), ("un", v_hi),
                             ("en", v_hi), ("in", v_hi)))
    conjuncts.append(Implies(
        conj([_rel("ENC2", wn, un, en, in_), _rel("ENC1", wnb, suc(en), in_),
              Not(_so("P", wnb, suc(en))), Not(Eq(un, suc(en)))]),
        And(_rel("ENC2", suc(wn), un, suc(en), in_),
            _so("C", suc(wn), Mu("C", wn)))))
    wo, wob, uo, eo, io = (declare(x, h) for x, h in
                           (("wo", w2_hi), ("wob", w1_hi), ("uo", v_hi),
                            ("eo", v_hi), ("io", v_hi)))
    conjuncts.append(Implies(
        conj([_rel("ENC1", wob, uo, suc(io)), Not(_so("P", wob, uo)),
              _rel("ENC2", wo, uo, eo, io), _rel("E", suc(eo), uo)]),
        And(_rel("ENC2", suc(wo), uo, suc(eo), io),
            _so("C", suc(wo), Mu("C", wo)))))
    wp, wpb, up, ep, ip = (declare(x, h) for x, h in
                           (("wp", w2_hi), ("wpb", w1_hi), ("up", v_hi),
                            ("ep", v_hi), ("ip", v_hi)))
    conjuncts.append(Implies(
        conj([_rel("ENC2", wp, up, ep, ip), _rel("ENC1", wpb, suc(ep), ip),
              _so("P", wpb, suc(ep)), Not(Eq(up, suc(ep)))]),
        And(_rel("ENC2", suc(wp), up, suc(ep), ip),
            _so("C", suc(wp), suc(Mu("C", wp))))))
    # base analogue of the copy rule: a vertex with an edge from the source
    # that the walk table never claims reached forces a contradiction here
    wq, wqb, uq, iq = (declare(x, h) for x, h in
                       (("wq", w2_hi), ("wqb", w1_hi), ("uq", v_hi),
                        ("iq", v_hi)))
    conjuncts.append(Implies(
        conj([Le(num(1), uq), _rel("ENC2", wq, uq, num(0), iq),
              _rel("ENC1", wqb, uq, suc(iq)), Not(_so("P", wqb, uq)),
              _rel("E", num(0), uq)]),
        _so("C", wq, num(0))))

    # the cross-check tying the three tables together
    wr, wrb, ur, ir = (declare(x, h) for x, h in
                       (("wr", w1_hi), ("wrb", w2_hi), ("ur", v_hi),
                        ("ir", v_hi)))
    reached = _so("P", wr, ur)
    same = _so("C", wrb, Mu("N", wrb))
    conjuncts.append(Implies(
        And(_rel("ENC1", wr, ur, ir), _rel("ENC2", wrb, ur, cn, ir)),
        Or(And(Not(reached), same), And(reached, Not(same)))))

    sent = Sentence(
        so_decls=(SoDecl("P", 1), SoDecl("N", 1), SoDecl("C", 1)),
        num_decls=tuple(decls),
        obj_decls=(),
        conjuncts=tuple(conjuncts))
    dom = _domain(sent, rel, {
        "P": SoRange(m * m - 1, (tuple(range(m)),), sentinel=True),
        "N": SoRange(m * m * m - 1, (tuple(range(m + 1)),), sentinel=True),
        "C": SoRange(m * m * m - 1, (tuple(range(m + 1)),), sentinel=True),
    })
    meta = _meta("dstncon", "%d:%s" % (g.n, sorted(g.edges)))
    meta["table_rules"] = (5, 17)  # the N/C-driving conjuncts
    return Encoding(sent, rel, dom, meta=meta)


def derive_dstncon_tables(enc: Encoding, p_table) -> Optional[dict]:
    """Force the two count tables from a fixed walk table by propagation
    through the table-driving rules alone (the target-miss conjunct and the
    final cross-check are deliberately excluded: they are what a reachable
    instance violates)."""
    from .evaluate import propagate_tables
    lo, hi = enc.meta["table_rules"]
    rules = Sentence(so_decls=enc.sentence.so_decls,
                     num_decls=enc.sentence.num_decls,
                     obj_decls=enc.sentence.obj_decls,
                     conjuncts=enc.sentence.conjuncts[lo:hi])
    return propagate_tables(rules, enc.rel, enc.dom, {"P": tuple(p_table)})


# ---------------------------------------------------------------------------
# Polar 2SAT

def _clause_rows(cnf: Cnf):
    rows = set()
    for clause in cnf.clauses:
        if len(clause) == 1:
            clause = (clause[0], clause[0])
        if len(clause) != 2:
            raise SnlError("polar encoding expects width <= 2")
        a, b = clause
        rows.add((abs(a) - 1, 1 if a > 0 else 0, abs(b) - 1, 1 if b > 0 else 0))
    return frozenset(rows)


def encode_polar2sat(cnf: Cnf, sign: str) -> Encoding:
    if sign not in ("+", "-"):
        raise SnlError("sign must be '+' or '-'")
    n = cnf.num_vars - 1
    u, su, v, sv = _v("u"), _v("su"), _v("v"), _v("sv")
    u2, su2, v2, sv2 = _v("u2"), _v("su2"), _v("v2"), _v("sv2")
    polarity = Eq(su2, sv2) if sign == "+" else Not(Eq(su2, sv2))
    sent = Sentence(
        so_decls=(SoDecl("T", 1),),
        num_decls=(NumDecl("u", 0, "n"), NumDecl("su", 0, 1),
                   NumDecl("v", 0, "n"), NumDecl("sv", 0, 1),
                   NumDecl("u2", 0, "n"), NumDecl("su2", 0, 1),
                   NumDecl("v2", 0, "n"), NumDecl("sv2", 0, 1)),
        obj_decls=(),
        conjuncts=(
            Implies(_rel("CLS", u, su, v, sv),
                    Or(_so("T", u, su), _so("T", v, sv))),
            Implies(_rel("CLS", u2, su2, v2, sv2), polarity),
        ))
    rel = RelStructure(
        universes={"V": tuple(range(cnf.num_vars)), "B": (0, 1)},
        relations={"CLS": _clause_rows(cnf)},
        constants={"n": n},
        signatures={"CLS": ("V", "B", "V", "B")})
    dom = _domain(sent, rel, {"T": SoRange(n, ((0, 1),))})
    return Encoding(sent, rel, dom,
                    meta=_meta("polar2sat%s" % sign,
                               "%d:%s" % (cnf.num_vars, list(cnf.clauses))))


# ---------------------------------------------------------------------------
# Binary-domain CSPs of arity <= 2

def encode_csp2(inst: CspInstance) -> Encoding:
    n = inst.num_vars - 1
    unary = [(allowed, scope) for allowed, scope in inst.constraints
             if len(scope) == 1]
    binary = [(allowed, scope) for allowed, scope in inst.constraints
              if len(scope) == 2]
    c1 = frozenset((f, scope[0]) for f, (allowed, scope) in enumerate(unary))
    s1 = frozenset((f, val) for f, (allowed, _scope) in enumerate(unary)
                   for val in inst.domain if (val,) not in allowed)
    c2 = frozenset((f, scope[0], scope[1])
                   for f, (allowed, scope) in enumerate(binary))
    s2 = frozenset((f, a, b) for f, (allowed, _scope) in enumerate(binary)
                   for a in inst.domain for b in inst.domain
                   if (a, b) not in allowed)
    f1_hi = max(len(unary) - 1, 0)
    f2_hi = max(len(binary) - 1, 0)
    f, i, vv = _v("f"), _v("i"), _v("vv")
    f2, i1, i2, w1, w2 = _v("f2"), _v("i1"), _v("i2"), _v("w1"), _v("w2")
    sent = Sentence(
        so_decls=(SoDecl("P", 1),),
        num_decls=(NumDecl("f", 0, f1_hi), NumDecl("i", 0, "n"),
                   NumDecl("vv", min(inst.domain), max(inst.domain)),
                   NumDecl("f2", 0, f2_hi), NumDecl("i1", 0, "n"),
                   NumDecl("i2", 0, "n"),
                   NumDecl("w1", min(inst.domain), max(inst.domain)),
                   NumDecl("w2", min(inst.domain), max(inst.domain))),
        obj_decls=(),
        conjuncts=(
            Implies(And(_rel("C1", f, i), _so("P", i, vv)),
                    Not(_rel("S1", f, vv))),
            Implies(conj([_rel("C2", f2, i1, i2), _so("P", i1, w1),
                          _so("P", i2, w2)]),
                    Not(_rel("S2", f2, w1, w2))),
        ))
    rel = RelStructure(
        universes={"X": tuple(range(inst.num_vars)), "D": tuple(inst.domain),
                   "F1": tuple(range(f1_hi + 1)), "F2": tuple(range(f2_hi + 1))},
        relations={"C1": c1, "S1": s1, "C2": c2, "S2": s2},
        constants={"n": n},
        signatures={"C1": ("F1", "X"), "S1": ("F1", "D"),
                    "C2": ("F2", "X", "X"), "S2": ("F2", "D", "D")})
    dom = _domain(sent, rel, {"P": SoRange(n, (tuple(inst.domain),))})
    return Encoding(sent, rel, dom,
                    meta=_meta("csp2", repr(inst.constraints)))


# ---------------------------------------------------------------------------
# MAX-CUT and MAX-IP

def _func_shape(var):
    lo = _so("P", var, num(0))
    hi = _so("P", var, num(1))
    return And(Or(lo, hi), Not(And(lo, hi)))


def _cut_shape(a, b):
    return Or(And(_so("P", a, num(1)), _so("P", b, num(0))),
              And(_so("P", a, num(0)), _so("P", b, num(1))))


def encode_maxcut(g: Graph) -> Encoding:
    n = g.n - 1
    sent = Sentence(
        so_decls=(SoDecl("P", 1),),
        num_decls=(NumDecl("i", 0, "n"), NumDecl("i2", 0, "n"),
                   NumDecl("j2", 0, "n")),
        obj_decls=(),
        conjuncts=(
            _func_shape(_v("i")),
            Implies(_rel("E", _v("i2"), _v("j2")), _cut_shape(_v("i2"), _v("j2"))),
        ))
    rel = RelStructure(
        universes={"V": tuple(range(g.n))},
        relations={"E": frozenset(g.symmetric_pairs())},
        constants={"n": n},
        signatures={"E": ("V", "V")})
    dom = _domain(sent, rel, {"P": SoRange(n, ((0, 1),))})
    objective = MaxSpec(
        so_decls=sent.so_decls,
        num_decls=(NumDecl("i", 0, "n"), NumDecl("j", 0, "n")),
        obj_decls=(),
        formula=conj([_func_shape(_v("i")), _func_shape(_v("j")),
                      _rel("E", _v("i"), _v("j")), _cut_shape(_v("i"), _v("j"))]),
        clock_var=None)
    return Encoding(sent, rel, dom, objective=objective,
                    meta=_meta("maxcut", "%d:%s" % (g.n, sorted(g.edges))))


def encode_maxip(xs1, xs2) -> Encoding:
    xs1, xs2 = tuple(xs1), tuple(xs2)
    if len(xs1) != len(xs2):
        raise SnlError("the two string sets must have equal size")
    lengths = {len(x) for x in xs1 + xs2}
    if len(lengths) != 1:
        raise SnlError("all bit strings must share one length")
    d = lengths.pop()
    pool = list(xs1) + list(xs2)
    set1 = frozenset((i,) for i in range(len(xs1)))
    set2 = frozenset((len(xs1) + i,) for i in range(len(xs2)))
    bit = frozenset((idx, pos) for idx, word in enumerate(pool)
                    for pos, ch in enumerate(word) if ch == "1")
    z1, z2 = _v("z1"), _v("z2")
    sent = Sentence(
        so_decls=(SoDecl("P", 1),),
        num_decls=(NumDecl("z1", 0, len(pool) - 1), NumDecl("z2", 0, len(pool) - 1)),
        obj_decls=(),
        conjuncts=(
            Implies(And(_so("P", num(0), z1), _so("P", num(1), z2)),
                    And(_rel("SET1", z1), _rel("SET2", z2))),
        ))
    rel = RelStructure(
        universes={"S": tuple(range(len(pool))), "POS": tuple(range(max(d, 1)))},
        relations={"SET1": set1, "SET2": set2, "BIT": bit},
        constants={"n": max(d - 1, 0)},
        signatures={"SET1": ("S",), "SET2": ("S",), "BIT": ("S", "POS")})
    dom = _domain(sent, rel, {"P": SoRange(1, (tuple(range(len(pool))),))})
    objective = MaxSpec(
        so_decls=sent.so_decls,
        num_decls=(NumDecl("i", 0, "n"),
                   NumDecl("z1", 0, len(pool) - 1),
                   NumDecl("z2", 0, len(pool) - 1)),
        obj_decls=(),
        formula=conj([_so("P", num(0), _v("z1")), _so("P", num(1), _v("z2")),
                      _rel("SET1", _v("z1")), _rel("SET2", _v("z2")),
                      _rel("BIT", _v("z1"), _v("i")),
                      _rel("BIT", _v("z2"), _v("i"))]),
        clock_var=None)
    return Encoding(sent, rel, dom, objective=objective,
                    meta=_meta("maxip", "%s:%s" % (xs1, xs2)))


# ---------------------------------------------------------------------------
# Dispatchers

DECISION_PROBLEMS = ("2color", "uk", "exact3dstcon", "nbg", "dstncon",
                     "polar2sat+", "polar2sat-", "csp2")
MAX_PROBLEMS = ("maxcut", "maxuk", "maxip")


def encode_decision(problem: str, instance) -> Encoding:
    if problem == "2color":
        return encode_2color(instance)
    if problem == "uk":
        return encode_uk(instance)
    if problem == "exact3dstcon":
        return encode_exact3dstcon(instance)
    if problem == "nbg":
        return encode_nbg(instance)
    if problem == "dstncon":
        return encode_dstncon(instance)
    if problem in ("polar2sat+", "polar2sat-"):
        return encode_polar2sat(instance, problem[-1])
    if problem == "csp2":
        return encode_csp2(instance)
    raise SnlError("unknown decision problem %r" % problem)


def encode_max(problem: str, instance) -> Encoding:
    if problem == "maxcut":
        return encode_maxcut(instance)
    if problem == "maxuk":
        return encode_maxuk(instance)
    if problem == "maxip":
        return encode_maxip(*instance)
    raise SnlError("unknown maximization problem %r" % problem)


# ---------------------------------------------------------------------------
# Canonical witnesses

def canonical_witness(problem: str, instance) -> Optional[Witness]:
    if problem == "2color":
        return _witness_2color(instance)
    if problem == "uk":
        return _witness_uk(instance)
    if problem == "exact3dstcon":
        return _witness_exact3(instance)
    if problem == "nbg":
        return _witness_nbg(instance)
    if problem == "dstncon":
        return _witness_dstncon(instance)
    if problem in ("polar2sat+", "polar2sat-"):
        return _witness_polar(instance, problem[-1])
    if problem == "csp2":
        return _witness_csp2(instance)
    raise SnlError("no canonical witness for %r" % problem)


def _witness_2color(g: Graph):
    color = {}
    for start in range(g.n):
        if start in color:
            continue
        color[start] = 0
        stack = [start]
        while stack:
            x = stack.pop()
            for y in g.adjacent(x):
                if y not in color:
                    color[y] = 1 - color[x]
                    stack.append(y)
                elif color[y] == color[x]:
                    return None
    return Witness(tables={"C": tuple((color[i],) for i in range(g.n))})


def _witness_uk(inst: UkInstance):
    # own DP with choice recovery; independent of the oracle module
    n, b = inst.n, inst.b
    table = [[False] * (b + 1) for _ in range(n + 1)]
    table[0][0] = True
    for i in range(1, n + 1):
        a = inst.values[i - 1]
        for sv in range(b + 1):
            table[i][sv] = table[i - 1][sv] or (sv >= a and table[i - 1][sv - a])
    if not table[n][b]:
        return None
    sums = [0] * (n + 1)
    sv = b
    chosen = set()
    for i in range(n, 0, -1):
        a = inst.values[i - 1]
        if not table[i - 1][sv]:
            chosen.add(i)
            sv -= a
    run = 0
    for i in range(1, n + 1):
        run += inst.values[i - 1] if i in chosen else 0
        sums[i] = run
    return Witness(tables={"P": tuple((sv,) for sv in sums)})


def _witness_exact3(g: DiGraph):
    g, s, t = _relabel(g, 0, g.n - 1)
    parent = {s: None}
    queue = deque([s])
    while queue:
        x = queue.popleft()
        for y in g.successors(x):
            if y not in parent:
                parent[y] = x
                queue.append(y)
    if t not in parent:
        return None
    path = [t]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    path.reverse()
    walk = path + [t] * (g.n - len(path))
    return Witness(tables={"P": tuple((x,) for x in walk)})


def _witness_nbg(g: Graph):
    cycle = _odd_cycle(g)
    if cycle is None:
        return None
    last = g.n  # table indices 0..n+1 with n = g.n - 1
    walk = list(cycle) + [cycle[0]] * (last + 1 - len(cycle))
    moves = [0]
    for a, b in zip(walk, walk[1:]):
        moves.append(moves[-1] + (0 if a == b else 1))
    return Witness(tables={"P": tuple((v, k) for v, k in zip(walk, moves))})


def _odd_cycle(g: Graph):
    """A shortest-per-root odd cycle via layered traversal, or None."""
    color = {}
    parent = {}
    depth = {}
    for start in range(g.n):
        if start in color:
            continue
        color[start] = 0
        parent[start] = None
        depth[start] = 0
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for y in g.adjacent(x):
                if y not in color:
                    color[y] = 1 - color[x]
                    parent[y] = x
                    depth[y] = depth[x] + 1
                    queue.append(y)
                elif color[y] == color[x]:
                    # climb to the common ancestor: the tree paths plus the
                    # conflict edge form an odd cycle
                    ax, ay = x, y
                    up_x, up_y = [ax], [ay]
                    while depth[ax] > depth[ay]:
                        ax = parent[ax]
                        up_x.append(ax)
                    while depth[ay] > depth[ax]:
                        ay = parent[ay]
                        up_y.append(ay)
                    while ax != ay:
                        ax = parent[ax]
                        ay = parent[ay]
                        up_x.append(ax)
                        up_y.append(ay)
                    return up_x + list(reversed(up_y))[1:]
    return None


def _witness_dstncon(g: DiGraph):
    g, s, t = _relabel(g, 0, g.n - 1)
    m = g.n
    dist = _bfs_dist(m, g.successors)

    def d(v):
        return dist.get(v, m + 1)

    p_table = []
    for w in range(m * m):
        e, i = divmod(w, m)
        p_table.append((e,) if d(e) <= i else BOTTOM)
    n_table = []
    c_table = []
    for w in range(m * m * m):
        u, rest = divmod(w, m * m)
        i, e = divmod(rest, m)
        n_table.append((sum(1 for v in range(e + 1) if d(v) <= i),))
        c_table.append((sum(1 for v in range(e + 1) if v != u and d(v) <= i),))
    return Witness(tables={"P": tuple(p_table), "N": tuple(n_table),
                           "C": tuple(c_table)})


def _witness_polar(cnf: Cnf, sign: str):
    kind = cnf.polarity()
    if kind not in ("positive", "negative") or \
            (sign == "+") != (kind == "positive"):
        return None
    if kind == "negative":
        assign = [1] * cnf.num_vars  # all-true satisfies every mixed clause
        return Witness(tables={"T": tuple((x,) for x in assign)})
    import itertools as _it
    for bits in _it.product((0, 1), repeat=cnf.num_vars):
        if all(any((l > 0) == bool(bits[abs(l) - 1]) for l in clause)
               for clause in cnf.clauses):
            return Witness(tables={"T": tuple((x,) for x in bits)})
    return None


def _witness_csp2(inst: CspInstance):
    import itertools as _it
    for combo in _it.product(inst.domain, repeat=inst.num_vars):
        if all(tuple(combo[x] for x in scope) in allowed
               for allowed, scope in inst.constraints):
            return Witness(tables={"P": tuple((v,) for v in combo)})
    return None


# ---------------------------------------------------------------------------
# Helpers

def _domain(sent: Sentence, rel: RelStructure, so_ranges: dict) -> DomStructure:
    from .syntax import default_domain
    return default_domain(sent, rel, so_ranges)


def _meta(problem: str, payload: str) -> dict:
    return {"problem": problem, "digest": instance_digest(payload)}
