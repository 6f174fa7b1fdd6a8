"""Syntactic fragment checks and sentence-level transformations.

The second-order variable requirements are checked on a distributed
disjunctive normal form (with duplicate, contradiction, and subsumption
pruning).  Normalization is budgeted: blowing the node budget yields an
explicit "undetermined" verdict instead of a silent pass.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .evaluate import search_witness
from .syntax import (
    And, BoolConst, ConstSym, DomStructure, Eq, FoVar, Formula, Implies, Le,
    Mu, Not, NumDecl, ObjDecl, Or, Pred, RelAtom, RelStructure, Sentence,
    SnlError, SoAtom, SoDecl, SoRange, Suc, Term, Witness, contains_mu,
    formula_mus, formula_terms, is_atom, term_mus, term_vars,
)

DEFAULT_NODE_BUDGET = 10 ** 6

REQ_I = "REQ_I"
REQ_II = "REQ_II"
MU_III = "MU_III"
MU_IV = "MU_IV"
OMEGA = "OMEGA"
MONO = "MONO"
BIN = "BIN"


@dataclass
class Violation:
    psi_index: int
    rule: str
    message: str

    def __str__(self):
        return "psi[%d] %s: %s" % (self.psi_index, self.rule, self.message)


@dataclass
class CheckReport:
    snl: bool
    snl_omega: Optional[bool]
    mu_snl: bool
    monotone: Optional[bool]
    binary: Optional[bool]
    violations: list = field(default_factory=list)
    dnf_blowup_aborted: bool = False


class NormalFormBudget(SnlError):
    pass


# ---------------------------------------------------------------------------
# Normal forms.  A literal is (atom, positive); a disjunct/clause is a
# frozenset of literals.

def _nnf(f: Formula, positive: bool):
    if isinstance(f, Not):
        return _nnf(f.inner, not positive)
    if isinstance(f, Implies):
        return _nnf(Or(Not(f.left), f.right), positive)
    if isinstance(f, And):
        cls = And if positive else Or
        return cls(_nnf(f.left, positive), _nnf(f.right, positive))
    if isinstance(f, Or):
        cls = Or if positive else And
        return cls(_nnf(f.left, positive), _nnf(f.right, positive))
    if isinstance(f, BoolConst):
        return BoolConst(f.value if positive else not f.value)
    if is_atom(f):
        return f if positive else Not(f)
    raise SnlError("unknown formula %r" % (f,))


def _distribute(f: Formula, mode: str, budget: list):
    """Distribute an NNF formula into DNF ('dnf') or CNF ('cnf') literal sets."""
    outer, inner = (Or, And) if mode == "dnf" else (And, Or)
    if isinstance(f, outer):
        left = _distribute(f.left, mode, budget)
        right = _distribute(f.right, mode, budget)
        return left + right
    if isinstance(f, inner):
        left = _distribute(f.left, mode, budget)
        right = _distribute(f.right, mode, budget)
        out = []
        for a in left:
            for b in right:
                merged = a | b
                budget[0] -= len(merged)
                if budget[0] < 0:
                    raise NormalFormBudget()
                out.append(merged)
        return out
    if isinstance(f, Not):
        return [frozenset([(f.inner, False)])]
    if isinstance(f, BoolConst):
        if mode == "dnf":
            return [frozenset()] if f.value else []
        return [] if f.value else [frozenset()]
    return [frozenset([(f, True)])]


def _prune(groups):
    """Drop contradictory groups, duplicates, and supersets of other groups."""
    cleaned = []
    for g in groups:
        atoms_pos = {a for a, p in g if p}
        atoms_neg = {a for a, p in g if not p}
        if atoms_pos & atoms_neg:
            continue
        cleaned.append(g)
    cleaned = list(dict.fromkeys(cleaned))
    cleaned.sort(key=len)
    kept = []
    for g in cleaned:
        if any(h <= g for h in kept):
            continue
        kept.append(g)
    return kept


def to_dnf(f: Formula, budget: int = DEFAULT_NODE_BUDGET):
    box = [budget]
    return _prune(_distribute(_nnf(f, True), "dnf", box))


def to_cnf(f: Formula, budget: int = DEFAULT_NODE_BUDGET):
    box = [budget]
    return _prune(_distribute(_nnf(f, True), "cnf", box))


def _literal_mentions_so(literal):
    atom, _positive = literal
    if isinstance(atom, SoAtom):
        return True
    return any(contains_mu(t) for t in formula_terms(atom))


# ---------------------------------------------------------------------------
# Clock decomposition

def _clock_base(term: Term):
    """Decompose a clock term as base+offset; returns (base, offset) or None."""
    offset = 0
    while isinstance(term, Suc):
        offset += term.offset
        term = term.inner
    if isinstance(term, FoVar) and term.sort == "num":
        return ("var", term.name), offset
    if isinstance(term, ConstSym):
        return ("const", term.name), offset
    return None


def _so_occurrences(f: Formula):
    """(so_var, clock) pairs for every table read, including mu terms."""
    out = []
    for sub in _atoms(f):
        if isinstance(sub, SoAtom):
            out.append((sub.so_var, sub.clock))
        for t in formula_terms(sub):
            for m in term_mus(t):
                out.append((m.so_var, m.clock))
    return out


def _atoms(f):
    from .syntax import atoms
    return atoms(f)


def max_offset(sentence: Sentence) -> int:
    """Largest successor offset on any table read; the default bound a."""
    best = 0
    for psi in sentence.conjuncts:
        for _name, clock in _so_occurrences(psi):
            dec = _clock_base(clock)
            if dec is not None:
                best = max(best, dec[1])
    return max(best, 1)


def check_requirement_i(sentence: Sentence, a: Optional[int] = None):
    """Per-conjunct verdicts for the clock-shape requirement.

    Every table read must address base+e with base a numeric variable or a
    constant symbol and 0 <= e <= a; reads of one variable off a shared base
    within a conjunct must stay within a window of width a.
    """
    if a is None:
        a = max_offset(sentence)
    verdicts = []
    for idx, psi in enumerate(sentence.conjuncts):
        problems = []
        groups = {}
        for name, clock in _so_occurrences(psi):
            dec = _clock_base(clock)
            if dec is None:
                problems.append(Violation(
                    idx, REQ_I, "clock for %s is not base+offset" % name))
                continue
            base, off = dec
            if off > a:
                problems.append(Violation(
                    idx, REQ_I,
                    "clock offset %d for %s exceeds bound %d" % (off, name, a)))
            groups.setdefault((name, base), []).append(off)
        for (name, _base), offs in groups.items():
            if max(offs) - min(offs) > a:
                problems.append(Violation(
                    idx, REQ_I,
                    "window of %s spans %d > %d" % (name, max(offs) - min(offs), a)))
        verdicts.append(problems)
    return verdicts


def check_requirement_ii(sentence: Sentence, dnf_budget: int = DEFAULT_NODE_BUDGET):
    """Per-conjunct verdicts: at most two DNF disjuncts may read tables.

    Returns (verdicts, aborted).  Each verdict is (ok, so_disjunct_count).
    """
    verdicts = []
    aborted = False
    for idx, psi in enumerate(sentence.conjuncts):
        try:
            disjuncts = to_dnf(psi, dnf_budget)
        except NormalFormBudget:
            aborted = True
            verdicts.append((None, None))
            continue
        so_count = sum(1 for d in disjuncts
                       if any(_literal_mentions_so(l) for l in d))
        verdicts.append((so_count <= 2, so_count))
    return verdicts, aborted


def check_mu_requirements(sentence: Sentence, a: Optional[int] = None):
    """Per-conjunct verdicts for the mu-term requirements."""
    if a is None:
        a = max_offset(sentence)
    verdicts = []
    for idx, psi in enumerate(sentence.conjuncts):
        problems = []
        distinct = list(dict.fromkeys(formula_mus(psi)))
        if len(distinct) > 1:
            problems.append(Violation(
                idx, MU_III, "%d distinct mu-terms; at most one allowed"
                % len(distinct)))
        for m in distinct:
            if contains_mu(m.clock):
                problems.append(Violation(idx, MU_III, "nested mu application"))
            if _clock_base(m.clock) is None:
                problems.append(Violation(
                    idx, MU_III, "mu clock for %s is not base+offset" % m.so_var))
        for sub in _atoms(psi):
            mus = [m for t in formula_terms(sub) for m in term_mus(t)]
            if not mus or not isinstance(sub, SoAtom):
                continue
            enc = _clock_base(sub.clock)
            for m in mus:
                inner = _clock_base(m.clock)
                if enc is None or inner is None:
                    continue
                if enc[0] != inner[0]:
                    problems.append(Violation(
                        idx, MU_IV,
                        "enclosing clock base %r differs from mu base %r"
                        % (enc[0], inner[0])))
                elif abs(enc[1] - inner[1]) > a:
                    problems.append(Violation(
                        idx, MU_IV,
                        "clock distance %d between atom and mu exceeds %d"
                        % (abs(enc[1] - inner[1]), a)))
        verdicts.append(problems)
    return verdicts


def is_monotone(sentence: Sentence, budget: int = DEFAULT_NODE_BUDGET) -> bool:
    """True iff every input-predicate literal in the CNF matrix is negative."""
    for psi in sentence.conjuncts:
        for clause in to_cnf(psi, budget):
            for atom, positive in clause:
                if positive and isinstance(atom, RelAtom):
                    return False
    return True


def is_binary(sentence: Sentence, dom: DomStructure) -> bool:
    """True iff every second-order value range is exactly {0, 1}."""
    for decl in sentence.so_decls:
        rng = dom.so_ranges.get(decl.name)
        if rng is None:
            return False
        for values in rng.value_ranges:
            if tuple(sorted(values)) != (0, 1):
                return False
    return True


def check_omega(sentence: Sentence, battery, budget: int = 10 ** 6) -> bool:
    """Semantic totality check on a battery of (structure, domain) pairs.

    True iff on every battery element the sentence's truth is unchanged when
    witnesses may be partial functions (sentinel entries everywhere).
    """
    for rel, dom in battery:
        strict = search_witness(sentence, rel, dom, budget)
        relaxed_ranges = {
            name: SoRange(rng.index_bound, rng.value_ranges, sentinel=True)
            for name, rng in dom.so_ranges.items()}
        relaxed = DomStructure(so_ranges=relaxed_ranges, fo_ranges=dom.fo_ranges)
        loose = search_witness(sentence, rel, relaxed, budget)
        if strict.aborted or loose.aborted:
            raise SnlError("omega battery element exceeded the search budget")
        if strict.truth != loose.truth:
            return False
    return True


def check_sentence(sentence: Sentence, dom: Optional[DomStructure] = None,
                   a: Optional[int] = None,
                   dnf_budget: int = DEFAULT_NODE_BUDGET) -> CheckReport:
    """Aggregate fragment report (omega is battery-based, so left unset)."""
    violations = []
    for problems in check_requirement_i(sentence, a):
        violations.extend(problems)
    req2, aborted = check_requirement_ii(sentence, dnf_budget)
    for idx, (ok, count) in enumerate(req2):
        if ok is False:
            violations.append(Violation(
                idx, REQ_II, "%d disjuncts read tables; at most 2 allowed" % count))
    mu_violations = []
    for problems in check_mu_requirements(sentence, a):
        mu_violations.extend(problems)
    violations.extend(mu_violations)
    snl_ok = not any(v.rule in (REQ_I, REQ_II) for v in violations) and not aborted
    try:
        mono = is_monotone(sentence, dnf_budget)
    except NormalFormBudget:
        mono = None
    return CheckReport(
        snl=snl_ok,
        snl_omega=None,
        mu_snl=snl_ok and not mu_violations,
        monotone=mono,
        binary=is_binary(sentence, dom) if dom is not None else None,
        violations=violations,
        dnf_blowup_aborted=aborted,
    )


# ---------------------------------------------------------------------------
# Renaming and combinators

def _rename_term(term, table):
    if isinstance(term, FoVar):
        return FoVar(table.get(term.name, term.name), term.sort)
    if isinstance(term, ConstSym):
        return ConstSym(table.get(term.name, term.name))
    if isinstance(term, Suc):
        return Suc(_rename_term(term.inner, table), term.offset)
    if isinstance(term, Pred):
        return Pred(_rename_term(term.inner, table))
    if isinstance(term, Mu):
        return Mu(table.get(term.so_var, term.so_var),
                  _rename_term(term.clock, table))
    raise SnlError("unknown term %r" % (term,))


def _rename_formula(f, table):
    if isinstance(f, RelAtom):
        return RelAtom(table.get(f.pred, f.pred),
                       tuple(_rename_term(t, table) for t in f.terms))
    if isinstance(f, SoAtom):
        return SoAtom(table.get(f.so_var, f.so_var),
                      _rename_term(f.clock, table),
                      tuple(_rename_term(t, table) for t in f.args))
    if isinstance(f, Eq):
        return Eq(_rename_term(f.left, table), _rename_term(f.right, table))
    if isinstance(f, Le):
        return Le(_rename_term(f.left, table), _rename_term(f.right, table))
    if isinstance(f, Not):
        return Not(_rename_formula(f.inner, table))
    if isinstance(f, And):
        return And(_rename_formula(f.left, table), _rename_formula(f.right, table))
    if isinstance(f, Or):
        return Or(_rename_formula(f.left, table), _rename_formula(f.right, table))
    if isinstance(f, Implies):
        return Implies(_rename_formula(f.left, table),
                       _rename_formula(f.right, table))
    if isinstance(f, BoolConst):
        return f
    raise SnlError("unknown formula %r" % (f,))


def _is_int_name(name):
    try:
        int(name)
        return True
    except ValueError:
        return False


def _rename_triple(sentence, rel, dom, suffix):
    """Append a suffix to every non-numeric symbol of a triple."""
    table = {}
    for d in sentence.so_decls:
        table[d.name] = d.name + suffix
    for d in sentence.num_decls:
        table[d.name] = d.name + suffix
    for d in sentence.obj_decls:
        table[d.name] = d.name + suffix
    for name in rel.relations:
        table[name] = name + suffix
    for name in rel.universes:
        table[name] = name + suffix
    for name in rel.constants:
        if not _is_int_name(name):
            table[name] = name + suffix
    # Constant symbols mentioned only in the sentence
    vocab = sentence.vocabulary()
    for name in vocab.constants:
        if not _is_int_name(name) and name not in table:
            table[name] = name + suffix

    def rn(name):
        return table.get(name, name)

    sent = Sentence(
        so_decls=tuple(SoDecl(rn(d.name), d.value_arity) for d in sentence.so_decls),
        num_decls=tuple(NumDecl(rn(d.name),
                                d.lo if isinstance(d.lo, int) else rn(d.lo),
                                d.hi if isinstance(d.hi, int) else rn(d.hi))
                        for d in sentence.num_decls),
        obj_decls=tuple(ObjDecl(rn(d.name), rn(d.universe))
                        for d in sentence.obj_decls),
        conjuncts=tuple(_rename_formula(psi, table) for psi in sentence.conjuncts))
    rstruct = RelStructure(
        universes={rn(k): v for k, v in rel.universes.items()},
        relations={rn(k): v for k, v in rel.relations.items()},
        constants={rn(k): v for k, v in rel.constants.items()},
        signatures={rn(k): tuple(rn(u) for u in v)
                    for k, v in rel.signatures.items()})
    dstruct = DomStructure(
        so_ranges={rn(k): v for k, v in dom.so_ranges.items()},
        fo_ranges={rn(k): v for k, v in dom.fo_ranges.items()})
    return sent, rstruct, dstruct


def _merge_structures(rel_a, rel_b, dom_a, dom_b):
    rel = RelStructure(
        universes={**rel_a.universes, **rel_b.universes},
        relations={**rel_a.relations, **rel_b.relations},
        constants={**rel_a.constants, **rel_b.constants},
        signatures={**rel_a.signatures, **rel_b.signatures})
    dom = DomStructure(
        so_ranges={**dom_a.so_ranges, **dom_b.so_ranges},
        fo_ranges={**dom_a.fo_ranges, **dom_b.fo_ranges})
    return rel, dom


def combine_and(a, b):
    """Conjunction of two (sentence, structure, domain) triples.

    Renames the inputs apart and concatenates prefixes and conjunct lists;
    the result is true exactly when both inputs are true on their own
    structures.
    """
    sa, ra, da = _rename_triple(*a, suffix="_1")
    sb, rb, db = _rename_triple(*b, suffix="_2")
    rel, dom = _merge_structures(ra, rb, da, db)
    sent = Sentence(so_decls=sa.so_decls + sb.so_decls,
                    num_decls=sa.num_decls + sb.num_decls,
                    obj_decls=sa.obj_decls + sb.obj_decls,
                    conjuncts=sa.conjuncts + sb.conjuncts)
    return sent, rel, dom


def combine_or(a, b):
    """Disjunction via a functional selector variable.

    A fresh table K with single entry over {1, 2} plays the branch selector:
    each side's conjuncts are weakened with a "the other branch is chosen"
    escape literal, read through a fresh universal clock variable per
    conjunct.  The result is true exactly when at least one input is true.
    """
    sa, ra, da = _rename_triple(*a, suffix="_1")
    sb, rb, db = _rename_triple(*b, suffix="_2")
    rel, dom = _merge_structures(ra, rb, da, db)

    sel = "K_sel"
    extra_nums = []
    conjuncts = []
    counter = itertools.count()
    for side, sent in (("2", sa), ("1", sb)):
        for psi in sent.conjuncts:
            z = "z_sel%d" % next(counter)
            extra_nums.append(NumDecl(z, 0, 0))
            guard = SoAtom(sel, FoVar(z), (ConstSym(side),))
            conjuncts.append(Or(guard, psi))
    sent = Sentence(
        so_decls=sa.so_decls + sb.so_decls + (SoDecl(sel, 1),),
        num_decls=sa.num_decls + sb.num_decls + tuple(extra_nums),
        obj_decls=sa.obj_decls + sb.obj_decls,
        conjuncts=tuple(conjuncts))
    dom = DomStructure(
        so_ranges={**dom.so_ranges, sel: SoRange(0, ((1, 2),))},
        fo_ranges={**dom.fo_ranges, **{d.name: (0,) for d in extra_nums}})
    return sent, rel, dom


def binary_to_omega(sentence: Sentence, dom: DomStructure):
    """Make functionality explicit for binary witnesses.

    Appends, per table P, a conjunct (P(a,0) | P(a,1)) & !(P(a,0) & P(a,1))
    over a fresh universal clock a spanning the index range; truth under
    total witnesses is unchanged.
    """
    if not is_binary(sentence, dom):
        raise SnlError("binary_to_omega requires {0,1}-valued tables")
    extra = []
    conjuncts = list(sentence.conjuncts)
    fo = dict(dom.fo_ranges)
    for i, decl in enumerate(sentence.so_decls):
        a = "a_fn%d" % i
        bound = dom.so_ranges[decl.name].index_bound
        extra.append(NumDecl(a, 0, bound))
        fo[a] = tuple(range(bound + 1))
        lo = SoAtom(decl.name, FoVar(a), (ConstSym("0"),))
        hi = SoAtom(decl.name, FoVar(a), (ConstSym("1"),))
        conjuncts.append(And(Or(lo, hi), Not(And(lo, hi))))
    sent = Sentence(so_decls=sentence.so_decls,
                    num_decls=sentence.num_decls + tuple(extra),
                    obj_decls=sentence.obj_decls,
                    conjuncts=tuple(conjuncts))
    return sent, DomStructure(so_ranges=dom.so_ranges, fo_ranges=fo)
