"""Core data model: terms, formulas, sentences, structures, witnesses.

All types are immutable after construction; operations elsewhere treat them
as values, so shared instances are safe to use concurrently.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

NUM = "num"
OBJ = "obj"

#: Table entry marking "no semantic value at this index".  A second-order
#: atom whose table entry is BOTTOM evaluates to false.
BOTTOM = None

Value = int
Entry = Optional[tuple]  # value tuple, or BOTTOM


class SnlError(Exception):
    """Base error for the package."""


class ValidationError(SnlError):
    """A structural invariant was violated on construction."""


# ---------------------------------------------------------------------------
# Terms

@dataclass(frozen=True)
class Term:
    pass


@dataclass(frozen=True)
class FoVar(Term):
    name: str
    sort: str = NUM

    def __post_init__(self):
        if self.sort not in (NUM, OBJ):
            raise ValidationError("bad sort %r" % (self.sort,))


@dataclass(frozen=True)
class ConstSym(Term):
    name: str


@dataclass(frozen=True)
class Suc(Term):
    inner: Term
    offset: int = 1

    def __post_init__(self):
        if self.offset < 1:
            raise ValidationError("suc offset must be >= 1")
        if isinstance(self.inner, FoVar) and self.inner.sort == OBJ:
            raise ValidationError("suc applies only to num-sorted terms")


@dataclass(frozen=True)
class Pred(Term):
    inner: Term

    def __post_init__(self):
        if isinstance(self.inner, FoVar) and self.inner.sort == OBJ:
            raise ValidationError("pred applies only to num-sorted terms")


@dataclass(frozen=True)
class Mu(Term):
    """The unique value z with P(clock, z), for a 2-argument functional P."""

    so_var: str
    clock: Term

    def __post_init__(self):
        if contains_mu(self.clock):
            raise ValidationError("nested mu application is not allowed")


def suc(term: Term, offset: int = 1) -> Term:
    """Build a successor chain, collapsing nested Suc nodes."""
    if offset == 0:
        return term
    if isinstance(term, Suc):
        return Suc(term.inner, term.offset + offset)
    return Suc(term, offset)


def num(value: int) -> ConstSym:
    return ConstSym(str(value))


def contains_mu(term: Term) -> bool:
    if isinstance(term, Mu):
        return True
    if isinstance(term, (Suc, Pred)):
        return contains_mu(term.inner)
    return False


def term_mus(term: Term) -> Iterator[Mu]:
    if isinstance(term, Mu):
        yield term
    elif isinstance(term, (Suc, Pred)):
        yield from term_mus(term.inner)


def term_vars(term: Term) -> Iterator[FoVar]:
    if isinstance(term, FoVar):
        yield term
    elif isinstance(term, (Suc, Pred)):
        yield from term_vars(term.inner)
    elif isinstance(term, Mu):
        yield from term_vars(term.clock)


# ---------------------------------------------------------------------------
# Formulas

@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class RelAtom(Formula):
    pred: str
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))


@dataclass(frozen=True)
class SoAtom(Formula):
    """P(clock, args...): the witness table for P maps clock to args."""

    so_var: str
    clock: Term
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Eq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class Le(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class Not(Formula):
    inner: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class BoolConst(Formula):
    value: bool


TRUE = BoolConst(True)
FALSE = BoolConst(False)


def conj(parts) -> Formula:
    parts = list(parts)
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(parts) -> Formula:
    parts = list(parts)
    if not parts:
        return FALSE
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def lt(left: Term, right: Term) -> Formula:
    """left < right over naturals, via suc(left) <= right."""
    return Le(suc(left), right)


def is_atom(f: Formula) -> bool:
    return isinstance(f, (RelAtom, SoAtom, Eq, Le, BoolConst))


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, Not):
        yield from subformulas(f.inner)
    elif isinstance(f, (And, Or, Implies)):
        yield from subformulas(f.left)
        yield from subformulas(f.right)


def atoms(f: Formula) -> Iterator[Formula]:
    for sub in subformulas(f):
        if is_atom(sub):
            yield sub


def formula_terms(f: Formula) -> Iterator[Term]:
    if isinstance(f, RelAtom):
        yield from f.terms
    elif isinstance(f, SoAtom):
        yield f.clock
        yield from f.args
    elif isinstance(f, (Eq, Le)):
        yield f.left
        yield f.right


def formula_vars(f: Formula) -> set:
    names = set()
    for sub in atoms_of(f):
        for t in formula_terms(sub):
            for v in term_vars(t):
                names.add(v.name)
    return names


def atoms_of(f: Formula) -> Iterator[Formula]:
    return atoms(f)


def formula_mus(f: Formula) -> Iterator[Mu]:
    for sub in atoms(f):
        for t in formula_terms(sub):
            yield from term_mus(t)


def formula_so_vars(f: Formula) -> set:
    out = set()
    for sub in atoms(f):
        if isinstance(sub, SoAtom):
            out.add(sub.so_var)
        for t in formula_terms(sub):
            for m in term_mus(t):
                out.add(m.so_var)
    return out


def mentions_so(f: Formula) -> bool:
    if isinstance(f, SoAtom):
        return True
    for t in formula_terms(f) if is_atom(f) else ():
        if contains_mu(t):
            return True
    if isinstance(f, Not):
        return mentions_so(f.inner)
    if isinstance(f, (And, Or, Implies)):
        return mentions_so(f.left) or mentions_so(f.right)
    return False


# ---------------------------------------------------------------------------
# Declarations and sentences

@dataclass(frozen=True)
class SoDecl:
    name: str
    value_arity: int

    def __post_init__(self):
        if self.value_arity < 1:
            raise ValidationError("second-order value arity must be >= 1")


@dataclass(frozen=True)
class NumDecl:
    """Universally quantified numeric variable with inclusive bounds.

    Bounds are ints or constant-symbol names resolved against a structure.
    """

    name: str
    lo: Union[int, str]
    hi: Union[int, str]


@dataclass(frozen=True)
class ObjDecl:
    name: str
    universe: str


@dataclass(frozen=True)
class Vocabulary:
    predicates: dict  # name -> arity
    constants: frozenset

    def __post_init__(self):
        object.__setattr__(self, "constants",
                           frozenset(self.constants) | {"0", "n"})
        clash = set(self.predicates) & set(self.constants)
        if clash:
            raise ValidationError("predicate/constant name clash: %s" % sorted(clash))
        for name, arity in self.predicates.items():
            if arity < 0:
                raise ValidationError("negative arity for %s" % name)


@dataclass(frozen=True)
class Sentence:
    so_decls: tuple       # tuple[SoDecl]
    num_decls: tuple      # tuple[NumDecl]
    obj_decls: tuple      # tuple[ObjDecl]
    conjuncts: tuple      # tuple[Formula]

    def __post_init__(self):
        object.__setattr__(self, "so_decls", tuple(self.so_decls))
        object.__setattr__(self, "num_decls", tuple(self.num_decls))
        object.__setattr__(self, "obj_decls", tuple(self.obj_decls))
        object.__setattr__(self, "conjuncts", tuple(self.conjuncts))
        self._validate()

    def _validate(self):
        so_names = [d.name for d in self.so_decls]
        fo_names = [d.name for d in self.num_decls] + [d.name for d in self.obj_decls]
        all_names = so_names + fo_names
        if len(set(all_names)) != len(all_names):
            raise ValidationError("duplicate variable declaration")
        arities = {d.name: d.value_arity for d in self.so_decls}
        declared_fo = set(fo_names)

        seen_by_conjunct = []
        for psi in self.conjuncts:
            used = formula_vars(psi)
            undeclared = used - declared_fo
            if undeclared:
                raise ValidationError("undeclared variables %s" % sorted(undeclared))
            seen_by_conjunct.append(used)
            for sub in atoms(psi):
                if isinstance(sub, SoAtom):
                    if sub.so_var not in arities:
                        raise ValidationError("undeclared second-order variable %s"
                                              % sub.so_var)
                    if len(sub.args) != arities[sub.so_var]:
                        raise ValidationError(
                            "arity mismatch for %s: got %d, declared %d"
                            % (sub.so_var, len(sub.args), arities[sub.so_var]))
                for t in formula_terms(sub):
                    for m in term_mus(t):
                        if m.so_var not in arities:
                            raise ValidationError("undeclared second-order variable %s"
                                                  % m.so_var)
                        if arities[m.so_var] != 1:
                            raise ValidationError(
                                "mu applies only to 2-argument variables, %s has "
                                "value arity %d" % (m.so_var, arities[m.so_var]))
        for i in range(len(seen_by_conjunct)):
            for j in range(i + 1, len(seen_by_conjunct)):
                shared = seen_by_conjunct[i] & seen_by_conjunct[j]
                if shared:
                    raise ValidationError(
                        "conjuncts %d and %d share variables %s"
                        % (i, j, sorted(shared)))

    @property
    def so_arities(self) -> dict:
        return {d.name: d.value_arity for d in self.so_decls}

    @property
    def fo_names(self) -> tuple:
        return tuple(d.name for d in self.num_decls) + \
            tuple(d.name for d in self.obj_decls)

    def vocabulary(self) -> Vocabulary:
        preds = {}
        consts = set()
        declared = set(self.fo_names)
        for psi in self.conjuncts:
            for sub in atoms(psi):
                if isinstance(sub, RelAtom):
                    prev = preds.setdefault(sub.pred, len(sub.terms))
                    if prev != len(sub.terms):
                        raise ValidationError("inconsistent arity for predicate %s"
                                              % sub.pred)
                for t in formula_terms(sub):
                    for leaf in _const_leaves(t):
                        if leaf.name not in declared:
                            consts.add(leaf.name)
        return Vocabulary(predicates=preds, constants=frozenset(consts))


def _const_leaves(term: Term) -> Iterator[ConstSym]:
    if isinstance(term, ConstSym):
        yield term
    elif isinstance(term, (Suc, Pred)):
        yield from _const_leaves(term.inner)
    elif isinstance(term, Mu):
        yield from _const_leaves(term.clock)


# ---------------------------------------------------------------------------
# Structures

@dataclass(frozen=True)
class RelStructure:
    universes: dict       # name -> tuple of object ids
    relations: dict       # pred -> frozenset of value tuples
    constants: dict       # constant name -> value
    signatures: dict = field(default_factory=dict)  # pred -> tuple of universe names

    def __post_init__(self):
        object.__setattr__(self, "universes",
                           {k: tuple(v) for k, v in self.universes.items()})
        object.__setattr__(self, "relations",
                           {k: frozenset(tuple(t) for t in v)
                            for k, v in self.relations.items()})
        object.__setattr__(self, "constants", dict(self.constants))
        object.__setattr__(self, "signatures",
                           {k: tuple(v) for k, v in self.signatures.items()})
        for pred, sig in self.signatures.items():
            rows = self.relations.get(pred, frozenset())
            sets = []
            for uni in sig:
                if uni not in self.universes:
                    raise ValidationError("unknown universe %r in signature of %s"
                                          % (uni, pred))
                sets.append(set(self.universes[uni]))
            for row in rows:
                if len(row) != len(sig):
                    raise ValidationError("tuple arity mismatch in %s" % pred)
                for v, allowed in zip(row, sets):
                    if v not in allowed:
                        raise ValidationError(
                            "tuple %r of %s escapes its universes" % (row, pred))

    def constant(self, name: str) -> int:
        if name in self.constants:
            return self.constants[name]
        try:
            return int(name)
        except ValueError:
            raise SnlError("unknown constant symbol %r" % name) from None


@dataclass(frozen=True)
class SoRange:
    index_bound: int            # indices run 0..index_bound inclusive
    value_ranges: tuple         # one ordered tuple of values per argument slot
    sentinel: bool = False      # whether BOTTOM is an allowed table entry

    def __post_init__(self):
        object.__setattr__(self, "value_ranges",
                           tuple(tuple(r) for r in self.value_ranges))
        if self.index_bound < 0:
            raise ValidationError("index bound must be >= 0")
        for r in self.value_ranges:
            if not r:
                raise ValidationError("empty value range")

    def entries(self, with_sentinel=True):
        """All allowed table entries, in deterministic order (BOTTOM last)."""
        import itertools
        out = [tuple(t) for t in itertools.product(*self.value_ranges)]
        if with_sentinel and self.sentinel:
            out.append(BOTTOM)
        return out


@dataclass(frozen=True)
class DomStructure:
    so_ranges: dict   # so var -> SoRange
    fo_ranges: dict   # fo var -> tuple of values

    def __post_init__(self):
        object.__setattr__(self, "so_ranges", dict(self.so_ranges))
        object.__setattr__(self, "fo_ranges",
                           {k: tuple(v) for k, v in self.fo_ranges.items()})
        for name, rng in self.fo_ranges.items():
            if not rng:
                raise ValidationError("empty range for %s" % name)


@dataclass(frozen=True)
class Witness:
    tables: dict  # so var -> tuple of entries (tuple or BOTTOM), length bound+1

    def __post_init__(self):
        object.__setattr__(
            self, "tables",
            {k: tuple(tuple(e) if e is not BOTTOM else BOTTOM for e in v)
             for k, v in self.tables.items()})

    def validate(self, dom: DomStructure) -> None:
        for name, rng in dom.so_ranges.items():
            if name not in self.tables:
                raise ValidationError("missing table for %s" % name)
            table = self.tables[name]
            if len(table) != rng.index_bound + 1:
                raise ValidationError(
                    "table for %s has %d entries, expected %d"
                    % (name, len(table), rng.index_bound + 1))
            for entry in table:
                if entry is BOTTOM:
                    if not rng.sentinel:
                        raise ValidationError("sentinel entry not allowed for %s" % name)
                    continue
                if len(entry) != len(rng.value_ranges):
                    raise ValidationError("entry arity mismatch for %s" % name)
                for v, allowed in zip(entry, rng.value_ranges):
                    if v not in allowed:
                        raise ValidationError(
                            "entry value %r for %s outside declared range" % (v, name))


def default_domain(sentence: Sentence, rel: RelStructure,
                   so_ranges: Optional[dict] = None) -> DomStructure:
    """Build a domain structure from the sentence's declared variable bounds.

    Second-order ranges carry no syntax in the sentence, so they must be
    supplied unless the prefix is empty.
    """
    fo = {}
    for d in sentence.num_decls:
        lo = d.lo if isinstance(d.lo, int) else rel.constant(d.lo)
        hi = d.hi if isinstance(d.hi, int) else rel.constant(d.hi)
        if hi < lo:
            raise ValidationError("empty bounds for %s" % d.name)
        fo[d.name] = tuple(range(lo, hi + 1))
    for d in sentence.obj_decls:
        if d.universe not in rel.universes:
            raise SnlError("unknown universe %r for %s" % (d.universe, d.name))
        fo[d.name] = tuple(rel.universes[d.universe])
    so = dict(so_ranges or {})
    missing = [d.name for d in sentence.so_decls if d.name not in so]
    if missing:
        raise SnlError("no ranges supplied for second-order variables %s" % missing)
    return DomStructure(so_ranges=so, fo_ranges=fo)


def clock_decompose(term: Term):
    """Split a clock term into (("var"|"const", name), offset), or None."""
    offset = 0
    while isinstance(term, Suc):
        offset += term.offset
        term = term.inner
    if isinstance(term, FoVar) and term.sort == NUM:
        return ("var", term.name), offset
    if isinstance(term, ConstSym):
        return ("const", term.name), offset
    return None


def instance_digest(payload: str) -> str:
    return hashlib.sha1(payload.encode("utf-8")).hexdigest()[:12]
