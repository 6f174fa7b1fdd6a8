"""Semantics: term/formula evaluation, witness verification and search.

Verification enumerates each conjunct's variables independently (conjuncts
never share first-order variables).  Enumeration is guided by "escape"
atoms: relation atoms whose falsity already makes the conjunct true, so only
assignments matching their tuples need to be checked.  The witness search
keeps a candidate domain per table entry and propagates grounded conjuncts,
forcing entries whose value is uniquely determined; this is what derives
count tables from a partially fixed witness.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .syntax import (
    BOTTOM, And, BoolConst, ConstSym, DomStructure, Eq, FoVar, Formula,
    Implies, Le, Mu, Not, Or, Pred, RelAtom, RelStructure, Sentence, SnlError,
    SoAtom, Suc, Term, Witness, formula_vars,
)


class _Undefined:
    __slots__ = ()

    def __repr__(self):
        return "UNDEF"


class _Unknown:
    __slots__ = ()

    def __repr__(self):
        return "UNKNOWN"


#: A term with no value (out-of-range or bottom-valued mu); atoms over it are false.
UNDEF = _Undefined()
#: A value not yet fixed during search; truth involving it is undetermined.
UNKNOWN = _Unknown()


@dataclass(frozen=True)
class EvalContext:
    rel: RelStructure
    dom: DomStructure
    witness: Optional[Witness] = None

    def table(self, name):
        if self.witness is None:
            raise SnlError("no witness bound for %s" % name)
        return self.witness.tables[name]


@dataclass
class EvalResult:
    truth: bool
    witness: Optional[Witness] = None
    nodes_explored: int = 0
    aborted: bool = False


# ---------------------------------------------------------------------------
# Plain two-valued evaluation

def eval_term(term: Term, env: dict, ctx: EvalContext):
    if isinstance(term, FoVar):
        try:
            return env[term.name]
        except KeyError:
            raise SnlError("unbound variable %r" % term.name) from None
    if isinstance(term, ConstSym):
        return ctx.rel.constant(term.name)
    if isinstance(term, Suc):
        v = eval_term(term.inner, env, ctx)
        return UNDEF if v is UNDEF else v + term.offset
    if isinstance(term, Pred):
        v = eval_term(term.inner, env, ctx)
        return UNDEF if v is UNDEF else max(0, v - 1)
    if isinstance(term, Mu):
        c = eval_term(term.clock, env, ctx)
        if c is UNDEF:
            return UNDEF
        rng = ctx.dom.so_ranges[term.so_var]
        if not 0 <= c <= rng.index_bound:
            return UNDEF
        entry = ctx.table(term.so_var)[c]
        return UNDEF if entry is BOTTOM else entry[0]
    raise SnlError("unknown term %r" % (term,))


def eval_formula(f: Formula, env: dict, ctx: EvalContext) -> bool:
    if isinstance(f, BoolConst):
        return f.value
    if isinstance(f, RelAtom):
        vals = tuple(eval_term(t, env, ctx) for t in f.terms)
        if any(v is UNDEF for v in vals):
            return False
        sig = ctx.rel.signatures.get(f.pred)
        if sig is not None:
            for v, uni in zip(vals, sig):
                if v not in ctx.rel.universes[uni]:
                    return False
        return vals in ctx.rel.relations.get(f.pred, frozenset())
    if isinstance(f, SoAtom):
        c = eval_term(f.clock, env, ctx)
        if c is UNDEF:
            return False
        rng = ctx.dom.so_ranges[f.so_var]
        if not 0 <= c <= rng.index_bound:
            return False
        entry = ctx.table(f.so_var)[c]
        if entry is BOTTOM:
            return False
        vals = tuple(eval_term(t, env, ctx) for t in f.args)
        if any(v is UNDEF for v in vals):
            return False
        return vals == entry
    if isinstance(f, Eq):
        a = eval_term(f.left, env, ctx)
        b = eval_term(f.right, env, ctx)
        return a is not UNDEF and b is not UNDEF and a == b
    if isinstance(f, Le):
        a = eval_term(f.left, env, ctx)
        b = eval_term(f.right, env, ctx)
        return a is not UNDEF and b is not UNDEF and a <= b
    if isinstance(f, Not):
        return not eval_formula(f.inner, env, ctx)
    if isinstance(f, And):
        return eval_formula(f.left, env, ctx) and eval_formula(f.right, env, ctx)
    if isinstance(f, Or):
        return eval_formula(f.left, env, ctx) or eval_formula(f.right, env, ctx)
    if isinstance(f, Implies):
        return (not eval_formula(f.left, env, ctx)) or eval_formula(f.right, env, ctx)
    raise SnlError("unknown formula %r" % (f,))


# ---------------------------------------------------------------------------
# Guided enumeration

def _escape_atoms(f: Formula):
    """Atoms whose falsity makes f true (guards for ∀-checking)."""
    if isinstance(f, Implies):
        out = list(_necessary_atoms(f.left))
        out.extend(_escape_atoms(f.right))
        return out
    if isinstance(f, Or):
        return _escape_atoms(f.left) + _escape_atoms(f.right)
    if isinstance(f, And):
        left = _escape_atoms(f.left)
        right = _escape_atoms(f.right)
        return [a for a in left if a in right]
    if isinstance(f, Not) and isinstance(f.inner, RelAtom):
        return [f.inner]
    return []


def _necessary_atoms(f: Formula, rel_only=False):
    """Atoms that must hold for f to hold (guards for model counting)."""
    if isinstance(f, And):
        yield from _necessary_atoms(f.left, rel_only)
        yield from _necessary_atoms(f.right, rel_only)
    elif isinstance(f, RelAtom):
        yield f
    elif isinstance(f, SoAtom) and not rel_only:
        yield f


def _bind_guard(atom_terms, row, env, ctx, ranges):
    """Try to extend env so the guard atom matches the given tuple row."""
    new = env
    for term, val in zip(atom_terms, row):
        if isinstance(term, FoVar):
            cur = new.get(term.name)
            if cur is None:
                if term.name in ranges and val not in ranges[term.name]:
                    return None
                if new is env:
                    new = dict(env)
                new[term.name] = val
            elif cur != val:
                return None
        elif isinstance(term, ConstSym):
            if ctx.rel.constant(term.name) != val:
                return None
        elif isinstance(term, Suc) and isinstance(term.inner, FoVar):
            base = val - term.offset
            if base < 0:
                return None
            name = term.inner.name
            cur = new.get(name)
            if cur is None:
                if name in ranges and base not in ranges[name]:
                    return None
                if new is env:
                    new = dict(env)
                new[name] = base
            elif cur != base:
                return None
        elif isinstance(term, Suc) and isinstance(term.inner, ConstSym):
            if ctx.rel.constant(term.inner.name) + term.offset != val:
                return None
        else:
            return None
    return new


def _guard_usable(atom, ctx):
    if isinstance(atom, RelAtom):
        terms = atom.terms
    elif isinstance(atom, SoAtom):
        if ctx.witness is None:
            return False
        terms = (atom.clock,) + atom.args
    else:
        return False
    for t in terms:
        if isinstance(t, (FoVar, ConstSym)):
            continue
        if isinstance(t, Suc) and isinstance(t.inner, (FoVar, ConstSym)):
            continue
        return False
    return True


def _guard_rows(atom, ctx):
    if isinstance(atom, RelAtom):
        return [tuple(r) for r in ctx.rel.relations.get(atom.pred, frozenset())]
    table = ctx.table(atom.so_var)
    return [(i,) + entry for i, entry in enumerate(table) if entry is not BOTTOM]


def _guard_terms(atom):
    if isinstance(atom, RelAtom):
        return atom.terms
    return (atom.clock,) + atom.args


def enumerate_assignments(formula: Formula, ranges: dict, ctx: EvalContext,
                          guards) -> list:
    """All variable assignments not excluded by the guard atoms.

    Assignments that fail to match some guard make that atom false, which by
    construction settles the formula's truth, so they are safely skipped.
    """
    variables = sorted(formula_vars(formula))
    usable = [g for g in guards if _guard_usable(g, ctx)]
    envs = [{}]
    used = set()
    remaining = list(usable)
    while remaining:
        # Prefer guards that bind the most still-unbound variables.
        def gain(atom):
            names = {v.name for t in _guard_terms(atom)
                     for v in _termvars(t)}
            return len(names - used)

        remaining.sort(key=gain, reverse=True)
        atom = remaining.pop(0)
        if gain(atom) == 0 and used:
            # Pure check against already-bound variables: still filters.
            pass
        rows = _guard_rows(atom, ctx)
        terms = _guard_terms(atom)
        new_envs = []
        for env in envs:
            for row in rows:
                if len(row) != len(terms):
                    continue
                ext = _bind_guard(terms, row, env, ctx, ranges)
                if ext is not None:
                    new_envs.append(ext if ext is not env else dict(env))
        envs = new_envs
        used |= {v.name for t in terms for v in _termvars(t)}
        if not envs:
            return []
    free = [v for v in variables if v not in used]
    out = []
    for env in envs:
        missing = [v for v in free if v not in env]
        if not missing:
            out.append(env)
            continue
        for combo in itertools.product(*(ranges[v] for v in missing)):
            ext = dict(env)
            ext.update(zip(missing, combo))
            out.append(ext)
    return out


def _termvars(term):
    from .syntax import term_vars
    return term_vars(term)


def conjunct_violations(conjunct: Formula, ranges: dict, ctx: EvalContext):
    """Yield assignments under which the conjunct evaluates false."""
    guards = _escape_atoms(conjunct)
    for env in enumerate_assignments(conjunct, ranges, ctx, guards):
        if not eval_formula(conjunct, env, ctx):
            yield env


def verify_witness(sentence: Sentence, rel: RelStructure, dom: DomStructure,
                   witness: Witness) -> bool:
    """True iff every conjunct holds for every assignment of its variables."""
    witness.validate(dom)
    ctx = EvalContext(rel, dom, witness)
    for conjunct in sentence.conjuncts:
        rngs = {v: dom.fo_ranges[v] for v in formula_vars(conjunct)}
        for _ in conjunct_violations(conjunct, rngs, ctx):
            return False
    return True


def count_models(formula: Formula, ranges: dict, ctx: EvalContext) -> int:
    """Count assignments satisfying the formula, guided by necessary atoms."""
    guards = list(_necessary_atoms(formula))
    n = 0
    for env in enumerate_assignments(formula, ranges, ctx, guards):
        if eval_formula(formula, env, ctx):
            n += 1
    return n


# ---------------------------------------------------------------------------
# Three-valued evaluation over partial tables

class _PartialTables:
    __slots__ = ("tables",)

    def __init__(self, tables):
        self.tables = tables  # name -> list of entry|UNKNOWN


def eval_term3(term, env, ctx: EvalContext, partial: _PartialTables):
    if isinstance(term, Mu):
        c = eval_term3(term.clock, env, ctx, partial)
        if c is UNDEF or c is UNKNOWN:
            return c
        rng = ctx.dom.so_ranges[term.so_var]
        if not 0 <= c <= rng.index_bound:
            return UNDEF
        entry = partial.tables[term.so_var][c]
        if entry is UNKNOWN:
            return UNKNOWN
        return UNDEF if entry is BOTTOM else entry[0]
    if isinstance(term, Suc):
        v = eval_term3(term.inner, env, ctx, partial)
        return v if v in (UNDEF, UNKNOWN) else v + term.offset
    if isinstance(term, Pred):
        v = eval_term3(term.inner, env, ctx, partial)
        return v if v in (UNDEF, UNKNOWN) else max(0, v - 1)
    return eval_term(term, env, ctx)


def eval_formula3(f, env, ctx: EvalContext, partial: _PartialTables):
    """Kleene three-valued truth; returns True, False, or UNKNOWN."""
    if isinstance(f, BoolConst):
        return f.value
    if isinstance(f, RelAtom):
        vals = [eval_term3(t, env, ctx, partial) for t in f.terms]
        if any(v is UNKNOWN for v in vals):
            return UNKNOWN
        if any(v is UNDEF for v in vals):
            return False
        sig = ctx.rel.signatures.get(f.pred)
        if sig is not None:
            for v, uni in zip(vals, sig):
                if v not in ctx.rel.universes[uni]:
                    return False
        return tuple(vals) in ctx.rel.relations.get(f.pred, frozenset())
    if isinstance(f, SoAtom):
        c = eval_term3(f.clock, env, ctx, partial)
        if c is UNKNOWN:
            return UNKNOWN
        if c is UNDEF:
            return False
        rng = ctx.dom.so_ranges[f.so_var]
        if not 0 <= c <= rng.index_bound:
            return False
        entry = partial.tables[f.so_var][c]
        if entry is UNKNOWN:
            return UNKNOWN
        if entry is BOTTOM:
            return False
        vals = [eval_term3(t, env, ctx, partial) for t in f.args]
        if any(v is UNKNOWN for v in vals):
            return UNKNOWN
        if any(v is UNDEF for v in vals):
            return False
        return tuple(vals) == entry
    if isinstance(f, (Eq, Le)):
        a = eval_term3(f.left, env, ctx, partial)
        b = eval_term3(f.right, env, ctx, partial)
        if a is UNKNOWN or b is UNKNOWN:
            return UNKNOWN
        if a is UNDEF or b is UNDEF:
            return False
        return a == b if isinstance(f, Eq) else a <= b
    if isinstance(f, Not):
        v = eval_formula3(f.inner, env, ctx, partial)
        return UNKNOWN if v is UNKNOWN else (not v)
    if isinstance(f, And):
        a = eval_formula3(f.left, env, ctx, partial)
        if a is False:
            return False
        b = eval_formula3(f.right, env, ctx, partial)
        if b is False:
            return False
        return UNKNOWN if (a is UNKNOWN or b is UNKNOWN) else True
    if isinstance(f, Or):
        a = eval_formula3(f.left, env, ctx, partial)
        if a is True:
            return True
        b = eval_formula3(f.right, env, ctx, partial)
        if b is True:
            return True
        return UNKNOWN if (a is UNKNOWN or b is UNKNOWN) else False
    if isinstance(f, Implies):
        return eval_formula3(Or(Not(f.left), f.right), env, ctx, partial)
    raise SnlError("unknown formula %r" % (f,))


def _formula_deps(f, env, ctx, partial):
    """Undetermined table entries the grounded formula reads."""
    deps = set()

    def scan_term(t):
        if isinstance(t, Mu):
            c = eval_term3(t.clock, env, ctx, partial)
            if c not in (UNDEF, UNKNOWN):
                rng = ctx.dom.so_ranges[t.so_var]
                if 0 <= c <= rng.index_bound and \
                        partial.tables[t.so_var][c] is UNKNOWN:
                    deps.add((t.so_var, c))
        elif isinstance(t, (Suc, Pred)):
            scan_term(t.inner)

    def scan(g):
        if isinstance(g, SoAtom):
            c = eval_term3(g.clock, env, ctx, partial)
            if c not in (UNDEF, UNKNOWN):
                rng = ctx.dom.so_ranges[g.so_var]
                if 0 <= c <= rng.index_bound and \
                        partial.tables[g.so_var][c] is UNKNOWN:
                    deps.add((g.so_var, c))
            scan_term(g.clock)
            for t in g.args:
                scan_term(t)
        elif isinstance(g, RelAtom):
            for t in g.terms:
                scan_term(t)
        elif isinstance(g, (Eq, Le)):
            scan_term(g.left)
            scan_term(g.right)
        elif isinstance(g, Not):
            scan(g.inner)
        elif isinstance(g, (And, Or, Implies)):
            scan(g.left)
            scan(g.right)

    scan(f)
    return deps


# ---------------------------------------------------------------------------
# Witness search with unit propagation

class BudgetExceeded(SnlError):
    pass


class _Conflict(Exception):
    pass


@dataclass
class _SearchState:
    domains: dict   # so var -> list of candidate lists (per index)
    partial: _PartialTables
    trail: list = field(default_factory=list)

    def set_domain(self, name, idx, values):
        self.trail.append(("d", name, idx, self.domains[name][idx]))
        self.domains[name][idx] = values

    def set_entry(self, name, idx, value):
        self.trail.append(("e", name, idx, self.partial.tables[name][idx]))
        self.partial.tables[name][idx] = value

    def mark(self):
        return len(self.trail)

    def undo(self, mark):
        while len(self.trail) > mark:
            kind, name, idx, old = self.trail.pop()
            if kind == "d":
                self.domains[name][idx] = old
            else:
                self.partial.tables[name][idx] = old


_PIN = "__pin__"


def _so_guarded_assignments(conjunct, ranges, ctx, partial, seed_env, domains,
                            cap=None):
    """Assignments for propagation, guided by structure guards plus
    second-order escape atoms.

    A guard read of an undetermined entry is expanded per candidate value
    and recorded as a pin (env[_PIN] = (entry, candidate)): for any other
    table value the guard atom is false and the conjunct holds, so only the
    pinned value needs checking there.  Assignments that would pin two
    distinct unknown entries settle nothing and are dropped.  Returns None
    if `cap` is hit; the caller then skips the conjunct (a sound loss of
    pruning only).
    """
    guards = list(_escape_atoms(conjunct))
    rel_guards = [g for g in guards if isinstance(g, RelAtom)]
    so_guards = [g for g in guards if isinstance(g, SoAtom)]

    variables = sorted(formula_vars(conjunct))
    envs = [dict(seed_env)]
    for atom in rel_guards:
        if not _simple_terms(_guard_terms(atom)):
            continue
        rows = _guard_rows(atom, ctx)
        terms = _guard_terms(atom)
        new_envs = []
        for env in envs:
            for row in rows:
                if len(row) != len(terms):
                    continue
                ext = _bind_guard(terms, row, env, ctx, ranges)
                if ext is not None:
                    new_envs.append(ext if ext is not env else dict(env))
        envs = new_envs
        if not envs:
            return []
    for atom in so_guards:
        terms = _guard_terms(atom)
        if not _simple_terms(terms):
            continue
        table = partial.tables[atom.so_var]
        clock_names = {v.name for v in _termvars(atom.clock)}
        has_unknown = any(e is UNKNOWN for e in table)
        det_rows = [(i,) + e for i, e in enumerate(table)
                    if e is not UNKNOWN and e is not BOTTOM]
        new_envs = []
        for env in envs:
            for row in det_rows:
                if len(row) != len(terms):
                    continue
                ext = _bind_guard(terms, row, env, ctx, ranges)
                if ext is not None:
                    new_envs.append(ext if ext is not env else dict(env))
            if not has_unknown:
                continue
            if clock_names <= set(env):
                c = eval_term3(atom.clock, env, ctx, partial)
                if c in (UNDEF, UNKNOWN) or not 0 <= c < len(table) or \
                        table[c] is not UNKNOWN:
                    continue
                idx_list = [c]
            else:
                idx_list = [i for i, e in enumerate(table) if e is UNKNOWN]
            for i in idx_list:
                entry_key = (atom.so_var, i)
                prev = env.get(_PIN)
                if prev is not None and prev[0] != entry_key:
                    continue  # would pin a second unknown entry
                for cand in domains[atom.so_var][i]:
                    if cand is BOTTOM:
                        continue
                    if prev is not None and prev[1] != cand:
                        continue
                    ext = _bind_guard(terms, (i,) + cand, env, ctx, ranges)
                    if ext is not None:
                        if ext is env:
                            ext = dict(env)
                        ext[_PIN] = (entry_key, cand)
                        new_envs.append(ext)
        envs = _dedup_envs(new_envs)
        if not envs:
            return []
    out = []
    for env in envs:
        missing = [v for v in variables if v not in env]
        blow = 1
        for v in missing:
            blow *= len(ranges[v])
        if cap is not None and len(out) + blow > cap:
            return None
        if not missing:
            out.append(env)
            continue
        for combo in itertools.product(*(ranges[v] for v in missing)):
            ext = dict(env)
            ext.update(zip(missing, combo))
            out.append(ext)
    return out


def _simple_terms(terms):
    for t in terms:
        if isinstance(t, (FoVar, ConstSym)):
            continue
        if isinstance(t, Suc) and isinstance(t.inner, (FoVar, ConstSym)):
            continue
        return False
    return True


def _dedup_envs(envs):
    seen = set()
    out = []
    for env in envs:
        key = tuple(sorted(env.items()))
        if key not in seen:
            seen.add(key)
            out.append(env)
    return out


_PRODUCT_CAP = 20000

#: Queue marker: rescan every conjunct without a trigger seed.
FULL_SCAN = None


def _occurrence_clocks(sentence, ci):
    """(so_var, clock term) reads per conjunct, cached on the sentence."""
    cache = getattr(sentence, "_occ_clocks", None)
    if cache is None:
        cache = {}
        object.__setattr__(sentence, "_occ_clocks", cache)
    if ci not in cache:
        from .syntax import atoms, formula_terms, term_mus
        occ = []
        for sub in atoms(sentence.conjuncts[ci]):
            if isinstance(sub, SoAtom):
                occ.append((sub.so_var, sub.clock))
            for t in formula_terms(sub):
                for m in term_mus(t):
                    occ.append((m.so_var, m.clock))
        cache[ci] = occ
    return cache[ci]


def _clock_seed(clock, idx, ranges, ctx):
    """Solve clock == idx for the base variable; {} / binding / None."""
    offset = 0
    term = clock
    while isinstance(term, Suc):
        offset += term.offset
        term = term.inner
    target = idx - offset
    if isinstance(term, FoVar):
        if target < 0 or (term.name in ranges and target not in ranges[term.name]):
            return None
        return {term.name: target}
    if isinstance(term, ConstSym):
        try:
            return {} if ctx.rel.constant(term.name) == target else None
        except SnlError:
            return None
    return {}  # unsupported clock shape: fall back to an unseeded scan


def _trigger_seeds(sentence, ci, so_name, idx, ranges, ctx):
    seeds = []
    seen = set()
    for name, clock in _occurrence_clocks(sentence, ci):
        if name != so_name:
            continue
        seed = _clock_seed(clock, idx, ranges, ctx)
        if seed is None:
            continue
        key = tuple(sorted(seed.items()))
        if key not in seen:
            seen.add(key)
            seeds.append(seed)
    return seeds


def _propagate(sentence, ctx, state, queue, counter):
    """Domain propagation to fixpoint.  Sound: only removes values that make
    some fully grounded conjunct false; raises _Conflict on a wipeout."""
    dom = ctx.dom
    ranges = dom.fo_ranges
    touch_map = _touch_map(sentence)
    while queue:
        trigger = queue.pop()
        if trigger is FULL_SCAN:
            work = [(ci, {}) for ci in range(len(sentence.conjuncts))]
        else:
            so_name, idx = trigger
            work = []
            for ci in touch_map.get(so_name, ()):
                conjunct = sentence.conjuncts[ci]
                rngs = {v: ranges[v] for v in formula_vars(conjunct)}
                for seed in _trigger_seeds(sentence, ci, so_name, idx, rngs, ctx):
                    work.append((ci, seed))
        for ci, seed in work:
            conjunct = sentence.conjuncts[ci]
            rngs = {v: ranges[v] for v in formula_vars(conjunct)}
            assignments = _so_guarded_assignments(conjunct, rngs, ctx,
                                                  state.partial, seed,
                                                  state.domains,
                                                  cap=_PRODUCT_CAP)
            if assignments is None:
                continue
            for env in assignments:
                counter[0] += 1
                v = eval_formula3(conjunct, env, ctx, state.partial)
                if v is False:
                    raise _Conflict()
                if v is not UNKNOWN:
                    continue
                deps = _formula_deps(conjunct, env, ctx, state.partial)
                if len(deps) != 1:
                    continue
                (dvar, didx), = deps
                pin = env.get(_PIN)
                if pin is not None and pin[0] == (dvar, didx):
                    # only the pinned candidate can falsify this assignment
                    cand = pin[1]
                    if cand not in state.domains[dvar][didx]:
                        continue
                    state.partial.tables[dvar][didx] = cand
                    res = eval_formula3(conjunct, env, ctx, state.partial)
                    state.partial.tables[dvar][didx] = UNKNOWN
                    if res is not False:
                        continue
                    allowed = [c for c in state.domains[dvar][didx] if c != cand]
                else:
                    allowed = []
                    for cand in state.domains[dvar][didx]:
                        state.partial.tables[dvar][didx] = cand
                        res = eval_formula3(conjunct, env, ctx, state.partial)
                        if res is not False:
                            allowed.append(cand)
                    state.partial.tables[dvar][didx] = UNKNOWN
                if len(allowed) < len(state.domains[dvar][didx]):
                    state.set_domain(dvar, didx, allowed)
                    if not allowed:
                        raise _Conflict()
                    if len(allowed) == 1:
                        state.set_entry(dvar, didx, allowed[0])
                        queue.append((dvar, didx))


def _touch_map(sentence):
    from .syntax import formula_so_vars
    cache = getattr(sentence, "_touch_map", None)
    if cache is None:
        cache = {}
        for i, psi in enumerate(sentence.conjuncts):
            for name in formula_so_vars(psi):
                cache.setdefault(name, []).append(i)
        object.__setattr__(sentence, "_touch_map", cache)
    return cache


class _WindowCache:
    """Failure memoization for the witness search.

    The subtree outcome below a branch position depends only on the already
    assigned entries that can still co-occur with a future entry in some
    conjunct: entries at constant clock positions, entries within the
    successor-offset window of a future index of the same table, and (for
    conjuncts reading two tables off unrelated bases) whole tables.  Two
    prefixes agreeing on that window impose identical constraints on the
    remaining entries, so a recorded dead end transfers.
    """

    def __init__(self, sentence, ctx, order):
        from .syntax import clock_decompose
        self.enabled = True
        self.order = order
        self.position = {key: p for p, key in enumerate(order)}
        self.fixed = set()
        self.deltas = {}     # (v_past, v_future) -> set of index deltas
        self.unbounded = set()
        self.failed = set()
        for ci in range(len(sentence.conjuncts)):
            occ = []
            for name, clock in _occurrence_clocks(sentence, ci):
                dec = clock_decompose(clock)
                if dec is None:
                    self.enabled = False
                    return
                base, off = dec
                if base[0] == "const":
                    try:
                        idx = ctx.rel.constant(base[1]) + off
                    except SnlError:
                        self.enabled = False
                        return
                    self.fixed.add((name, idx))
                else:
                    occ.append((name, base[1], off))
            for a in range(len(occ)):
                for b in range(len(occ)):
                    v1, b1, o1 = occ[a]
                    v2, b2, o2 = occ[b]
                    if b1 == b2:
                        self.deltas.setdefault((v1, v2), set()).add(o2 - o1)
                    else:
                        self.unbounded.add((v1, v2))

    def key(self, pos, partial):
        future_min = {}
        for p in range(len(self.order) - 1, pos - 1, -1):
            name, idx = self.order[p]
            future_min[name] = idx
        parts = [pos]
        for p in range(pos):
            name, idx = self.order[p]
            if (name, idx) in self.fixed:
                parts.append((name, idx, partial.tables[name][idx]))
                continue
            relevant = False
            for vf, fmin in future_min.items():
                if (name, vf) in self.unbounded:
                    relevant = True
                    break
                for d in self.deltas.get((name, vf), ()):
                    if idx + d >= fmin:
                        relevant = True
                        break
                if relevant:
                    break
            if relevant:
                parts.append((name, idx, partial.tables[name][idx]))
        return tuple(parts)


def search_witness(sentence: Sentence, rel: RelStructure, dom: DomStructure,
                   budget: int = 10 ** 6) -> EvalResult:
    """Backtracking search for an accepting witness.

    Entries are assigned in declaration order, indices ascending, candidate
    values in range order with the sentinel last, so the first accepting
    witness found is the lexicographically least one.
    """
    ctx = EvalContext(rel, dom)
    order = []
    for decl in sentence.so_decls:
        rng = dom.so_ranges[decl.name]
        for idx in range(rng.index_bound + 1):
            order.append((decl.name, idx))
    base_domains = {
        decl.name: [list(dom.so_ranges[decl.name].entries()) for _ in
                    range(dom.so_ranges[decl.name].index_bound + 1)]
        for decl in sentence.so_decls}
    counter = [0]
    nodes = [0]
    state = _SearchState(
        domains={k: [list(col) for col in v] for k, v in base_domains.items()},
        partial=_PartialTables({name: [UNKNOWN] * (dom.so_ranges[name].index_bound + 1)
                                for name in base_domains}))

    # Seed propagation: singleton domains become determined immediately.
    try:
        for name, idx in order:
            if len(state.domains[name][idx]) == 1:
                state.partial.tables[name][idx] = state.domains[name][idx][0]
        _propagate(sentence, ctx, state, [FULL_SCAN], counter)
    except _Conflict:
        return EvalResult(truth=False, nodes_explored=0)

    result = EvalResult(truth=False)
    cache = _WindowCache(sentence, ctx, order)

    def descend(pos):
        nodes[0] += 1
        if nodes[0] > budget:
            raise BudgetExceeded()
        while pos < len(order) and \
                state.partial.tables[order[pos][0]][order[pos][1]] is not UNKNOWN:
            pos += 1
        if pos == len(order):
            w = Witness(tables={k: tuple(v) for k, v in
                                state.partial.tables.items()})
            if verify_witness(sentence, rel, dom, w):
                result.truth = True
                result.witness = w
                return True
            return False
        key = cache.key(pos, state.partial) if cache.enabled else None
        if key is not None and key in cache.failed:
            return False
        name, idx = order[pos]
        for cand in list(state.domains[name][idx]):
            mark = state.mark()
            state.set_entry(name, idx, cand)
            state.set_domain(name, idx, [cand])
            try:
                _propagate(sentence, ctx, state, [(name, idx)], counter)
                if descend(pos + 1):
                    return True
            except _Conflict:
                pass
            state.undo(mark)
        if key is not None and len(cache.failed) < 1 << 20:
            cache.failed.add(key)
        return False

    if not sentence.so_decls:
        empty = Witness(tables={})
        ok = verify_witness(sentence, rel, dom, empty)
        return EvalResult(truth=ok, witness=empty if ok else None,
                          nodes_explored=1)
    try:
        descend(0)
    except BudgetExceeded:
        return EvalResult(truth=False, nodes_explored=nodes[0], aborted=True)
    result.nodes_explored = nodes[0]
    return result


def propagate_tables(sentence: Sentence, rel: RelStructure, dom: DomStructure,
                     fixed: dict) -> Optional[dict]:
    """Force table entries from the fixed ones by propagation.

    `fixed` maps so var -> full table (tuples/BOTTOM) for the pinned
    variables.  Returns {name: list-of-entries-or-UNKNOWN} for all so vars,
    or None if propagation hits a contradiction.
    """
    ctx = EvalContext(rel, dom)
    state = _SearchState(
        domains={name: [list(dom.so_ranges[name].entries())
                        for _ in range(dom.so_ranges[name].index_bound + 1)]
                 for name in dom.so_ranges},
        partial=_PartialTables({name: [UNKNOWN] * (dom.so_ranges[name].index_bound + 1)
                                for name in dom.so_ranges}))
    for name, table in fixed.items():
        for idx, entry in enumerate(table):
            state.partial.tables[name][idx] = entry
            state.domains[name][idx] = [entry]
    try:
        _propagate(sentence, ctx, state, [FULL_SCAN], [0])
    except _Conflict:
        return None
    return {name: list(col) for name, col in state.partial.tables.items()}


def brute_force_truth(sentence: Sentence, rel: RelStructure, dom: DomStructure,
                      limit: int = 10 ** 6) -> bool:
    """Reference truth: enumerate every total function table directly."""
    names = [d.name for d in sentence.so_decls]
    spaces = []
    total = 1
    for name in names:
        rng = dom.so_ranges[name]
        entries = rng.entries()
        spaces.append([entries] * (rng.index_bound + 1))
        total *= len(entries) ** (rng.index_bound + 1)
    if total > limit:
        raise BudgetExceeded("table space %d exceeds limit %d" % (total, limit))
    flat = [col for space in spaces for col in space]
    sizes = [len(space) for space in spaces]
    for combo in itertools.product(*flat):
        tables = {}
        k = 0
        for name, size in zip(names, sizes):
            tables[name] = tuple(combo[k:k + size])
            k += size
        if verify_witness(sentence, rel, dom, Witness(tables=tables)):
            return True
    if not names:
        return verify_witness(sentence, rel, dom, Witness(tables={}))
    return False


# ---------------------------------------------------------------------------
# Objectives

@dataclass(frozen=True)
class MaxSpec:
    """Counting objective: the number of variable tuples satisfying `formula`
    under a witness.  `clock_var` designates the prefix-restriction variable."""

    so_decls: tuple
    num_decls: tuple
    obj_decls: tuple
    formula: Formula
    clock_var: Optional[str] = None

    def ranges(self, rel: RelStructure, dom: DomStructure) -> dict:
        out = {}
        for d in self.num_decls:
            lo = d.lo if isinstance(d.lo, int) else rel.constant(d.lo)
            hi = d.hi if isinstance(d.hi, int) else rel.constant(d.hi)
            out[d.name] = tuple(range(lo, hi + 1))
        for d in self.obj_decls:
            out[d.name] = tuple(rel.universes[d.universe])
        return out


def count_objective(spec: MaxSpec, rel: RelStructure, dom: DomStructure,
                    witness: Witness) -> int:
    ctx = EvalContext(rel, dom, witness)
    return count_models(spec.formula, spec.ranges(rel, dom), ctx)


def count_objective_prefix(spec: MaxSpec, rel: RelStructure, dom: DomStructure,
                           witness: Witness, bound: int) -> int:
    """Objective restricted to clock values in [0, bound)."""
    if spec.clock_var is None:
        raise SnlError("objective has no designated clock variable")
    ctx = EvalContext(rel, dom, witness)
    ranges = spec.ranges(rel, dom)
    ranges[spec.clock_var] = tuple(v for v in ranges[spec.clock_var]
                                   if 0 <= v < bound)
    if not ranges[spec.clock_var]:
        return 0
    return count_models(spec.formula, ranges, ctx)
