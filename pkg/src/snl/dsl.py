"""Textual sentence DSL (S-expressions) and JSON file formats.

Grammar::

    (sentence (exists (P 1) ...)
              (forall (i num LO HI) (u obj UNIV) ...)
              (psi FORMULA) ...)

    FORMULA := true | false | (rel NAME TERM ...) | (so NAME TCLOCK TERM ...)
             | (= TERM TERM) | (<= TERM TERM) | (not F) | (and F ...)
             | (or F ...) | (imp F F)
    TERM    := INT | NAME | (suc T) | (suc^K T) | (pred T)
             | (mu z (so NAME TCLOCK z))

Lines starting with ';' are comments.  `print_sentence` emits a normalized
form; parse(print(s)) is structurally equal to s.
"""

from __future__ import annotations

import json
import re

from .syntax import (
    BOTTOM, NUM, OBJ, And, BoolConst, ConstSym, DomStructure, Eq, FoVar,
    Formula, Implies, Le, Mu, Not, NumDecl, ObjDecl, Or, Pred, RelAtom,
    RelStructure, Sentence, SnlError, SoAtom, SoDecl, SoRange, Suc, Term,
    Witness, suc,
)


class ParseError(SnlError):
    def __init__(self, message, line=None, col=None):
        loc = "" if line is None else " at line %d, column %d" % (line, col)
        super().__init__(message + loc)
        self.line = line
        self.col = col


_TOKEN = re.compile(r"\(|\)|[^\s();]+")
_SUC_K = re.compile(r"^suc\^(\d+)$")


def _tokenize(text):
    tokens = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split(";", 1)[0]
        for m in _TOKEN.finditer(body):
            tokens.append((m.group(0), lineno, m.start() + 1))
    return tokens


def _read_sexprs(text):
    tokens = _tokenize(text)
    pos = 0

    def read():
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError("unexpected end of input")
        tok, line, col = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while True:
                if pos >= len(tokens):
                    raise ParseError("unbalanced '('", line, col)
                if tokens[pos][0] == ")":
                    pos += 1
                    return items
                items.append(read())
        if tok == ")":
            raise ParseError("unbalanced ')'", line, col)
        return (tok, line, col)

    out = []
    while pos < len(tokens):
        out.append(read())
    return out


def _sym(node, what):
    if isinstance(node, list):
        raise ParseError("expected %s, got a list" % what)
    return node[0]


def _head(node):
    if not isinstance(node, list) or not node:
        return None
    h = node[0]
    return None if isinstance(h, list) else h[0]


def _err_loc(node):
    while isinstance(node, list) and node:
        node = node[0]
    if isinstance(node, tuple):
        return node[1], node[2]
    return None, None


class _SentenceParser:
    def __init__(self):
        self.num_vars = {}
        self.obj_vars = {}
        self.so_arity = {}

    def parse(self, node) -> Sentence:
        if _head(node) != "sentence":
            raise ParseError("expected (sentence ...)", *_err_loc(node))
        if len(node) < 3:
            raise ParseError("sentence needs (exists ...) and (forall ...)",
                             *_err_loc(node))
        so_decls = self._exists(node[1])
        num_decls, obj_decls = self._forall(node[2])
        conjuncts = []
        for item in node[3:]:
            if _head(item) != "psi":
                raise ParseError("expected (psi ...)", *_err_loc(item))
            if len(item) != 2:
                raise ParseError("psi takes one formula", *_err_loc(item))
            conjuncts.append(self.formula(item[1]))
        return Sentence(so_decls=tuple(so_decls), num_decls=tuple(num_decls),
                        obj_decls=tuple(obj_decls), conjuncts=tuple(conjuncts))

    def _exists(self, node):
        if _head(node) != "exists":
            raise ParseError("expected (exists ...)", *_err_loc(node))
        decls = []
        for item in node[1:]:
            if not isinstance(item, list) or len(item) != 2:
                raise ParseError("second-order decl is (NAME ARITY)", *_err_loc(item))
            name = _sym(item[0], "name")
            try:
                arity = int(_sym(item[1], "arity"))
            except ValueError:
                raise ParseError("bad arity for %s" % name, *_err_loc(item)) from None
            self.so_arity[name] = arity
            decls.append(SoDecl(name, arity))
        return decls

    def _forall(self, node):
        if _head(node) != "forall":
            raise ParseError("expected (forall ...)", *_err_loc(node))
        nums, objs = [], []
        for item in node[1:]:
            if not isinstance(item, list) or len(item) < 3:
                raise ParseError("variable decl is (NAME num LO HI) or (NAME obj UNIV)",
                                 *_err_loc(item))
            name = _sym(item[0], "name")
            kind = _sym(item[1], "sort")
            if kind == NUM:
                if len(item) != 4:
                    raise ParseError("num decl is (NAME num LO HI)", *_err_loc(item))
                lo = self._bound(item[2])
                hi = self._bound(item[3])
                self.num_vars[name] = True
                nums.append(NumDecl(name, lo, hi))
            elif kind == OBJ:
                if len(item) != 3:
                    raise ParseError("obj decl is (NAME obj UNIV)", *_err_loc(item))
                self.obj_vars[name] = True
                objs.append(ObjDecl(name, _sym(item[2], "universe")))
            else:
                raise ParseError("unknown sort %r" % kind, *_err_loc(item))
        return nums, objs

    def _bound(self, node):
        tok = _sym(node, "bound")
        try:
            return int(tok)
        except ValueError:
            return tok

    def formula(self, node) -> Formula:
        if not isinstance(node, list):
            tok = node[0]
            if tok == "true":
                return BoolConst(True)
            if tok == "false":
                return BoolConst(False)
            raise ParseError("bad formula %r" % tok, node[1], node[2])
        head = _head(node)
        args = node[1:]
        if head == "rel":
            if len(args) < 1:
                raise ParseError("(rel NAME TERM...)", *_err_loc(node))
            return RelAtom(_sym(args[0], "predicate"),
                           tuple(self.term(a) for a in args[1:]))
        if head == "so":
            if len(args) < 2:
                raise ParseError("(so NAME TCLOCK TERM...)", *_err_loc(node))
            name = _sym(args[0], "so var")
            return SoAtom(name, self.term(args[1]),
                          tuple(self.term(a) for a in args[2:]))
        if head == "=":
            if len(args) != 2:
                raise ParseError("(= T T)", *_err_loc(node))
            return Eq(self.term(args[0]), self.term(args[1]))
        if head == "<=":
            if len(args) != 2:
                raise ParseError("(<= T T)", *_err_loc(node))
            return Le(self.term(args[0]), self.term(args[1]))
        if head == "not":
            if len(args) != 1:
                raise ParseError("(not F)", *_err_loc(node))
            return Not(self.formula(args[0]))
        if head in ("and", "or"):
            if len(args) < 2:
                raise ParseError("(%s F F ...)" % head, *_err_loc(node))
            parts = [self.formula(a) for a in args]
            out = parts[0]
            cls = And if head == "and" else Or
            for p in parts[1:]:
                out = cls(out, p)
            return out
        if head == "imp":
            if len(args) != 2:
                raise ParseError("(imp F G)", *_err_loc(node))
            return Implies(self.formula(args[0]), self.formula(args[1]))
        raise ParseError("unknown formula head %r" % head, *_err_loc(node))

    def term(self, node) -> Term:
        if not isinstance(node, list):
            tok = node[0]
            if re.fullmatch(r"-?\d+", tok):
                return ConstSym(tok)
            if tok in self.num_vars:
                return FoVar(tok, NUM)
            if tok in self.obj_vars:
                return FoVar(tok, OBJ)
            return ConstSym(tok)
        head = _head(node)
        if head == "suc":
            if len(node) != 2:
                raise ParseError("(suc T)", *_err_loc(node))
            return suc(self.term(node[1]), 1)
        if head is not None and _SUC_K.match(head):
            if len(node) != 2:
                raise ParseError("(suc^k T)", *_err_loc(node))
            return suc(self.term(node[1]), int(_SUC_K.match(head).group(1)))
        if head == "pred":
            if len(node) != 2:
                raise ParseError("(pred T)", *_err_loc(node))
            return Pred(self.term(node[1]))
        if head == "mu":
            if len(node) != 3:
                raise ParseError("(mu z (so P TCLOCK z))", *_err_loc(node))
            bound = _sym(node[1], "mu variable")
            body = node[2]
            if _head(body) != "so" or len(body) != 4:
                raise ParseError("mu body must be (so P TCLOCK z)", *_err_loc(body))
            so_name = _sym(body[1], "so var")
            value = _sym(body[3], "mu variable")
            if value != bound:
                raise ParseError("mu body must use its bound variable %r" % bound,
                                 *_err_loc(body))
            return Mu(so_name, self.term(body[2]))
        raise ParseError("unknown term head %r" % head, *_err_loc(node))


def parse_sentence(text: str) -> Sentence:
    nodes = _read_sexprs(text)
    if len(nodes) != 1:
        raise ParseError("expected exactly one (sentence ...) form")
    return _SentenceParser().parse(nodes[0])


def print_term(term: Term) -> str:
    if isinstance(term, FoVar):
        return term.name
    if isinstance(term, ConstSym):
        return term.name
    if isinstance(term, Suc):
        inner = print_term(term.inner)
        return "(suc %s)" % inner if term.offset == 1 else \
            "(suc^%d %s)" % (term.offset, inner)
    if isinstance(term, Pred):
        return "(pred %s)" % print_term(term.inner)
    if isinstance(term, Mu):
        return "(mu z (so %s %s z))" % (term.so_var, print_term(term.clock))
    raise SnlError("unknown term %r" % (term,))


def _flatten(f: Formula, cls):
    if isinstance(f, cls):
        yield from _flatten(f.left, cls)
        yield from _flatten(f.right, cls)
    else:
        yield f


def print_formula(f: Formula) -> str:
    if isinstance(f, BoolConst):
        return "true" if f.value else "false"
    if isinstance(f, RelAtom):
        return "(rel %s)" % " ".join([f.pred] + [print_term(t) for t in f.terms])
    if isinstance(f, SoAtom):
        parts = [f.so_var, print_term(f.clock)] + [print_term(t) for t in f.args]
        return "(so %s)" % " ".join(parts)
    if isinstance(f, Eq):
        return "(= %s %s)" % (print_term(f.left), print_term(f.right))
    if isinstance(f, Le):
        return "(<= %s %s)" % (print_term(f.left), print_term(f.right))
    if isinstance(f, Not):
        return "(not %s)" % print_formula(f.inner)
    if isinstance(f, And):
        return "(and %s)" % " ".join(print_formula(p) for p in _flatten(f, And))
    if isinstance(f, Or):
        return "(or %s)" % " ".join(print_formula(p) for p in _flatten(f, Or))
    if isinstance(f, Implies):
        return "(imp %s %s)" % (print_formula(f.left), print_formula(f.right))
    raise SnlError("unknown formula %r" % (f,))


def print_sentence(s: Sentence) -> str:
    lines = ["(sentence"]
    lines.append("  (exists%s)" % "".join(
        " (%s %d)" % (d.name, d.value_arity) for d in s.so_decls))
    decls = ["(%s num %s %s)" % (d.name, d.lo, d.hi) for d in s.num_decls]
    decls += ["(%s obj %s)" % (d.name, d.universe) for d in s.obj_decls]
    lines.append("  (forall%s)" % "".join(" " + d for d in decls))
    for psi in s.conjuncts:
        lines.append("  (psi %s)" % print_formula(psi))
    lines.append(")")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# JSON files

def structure_to_json(rel: RelStructure) -> dict:
    out = {
        "universes": {k: list(v) for k, v in rel.universes.items()},
        "relations": {k: sorted([list(t) for t in v])
                      for k, v in rel.relations.items()},
        "constants": dict(rel.constants),
    }
    if rel.signatures:
        out["signatures"] = {k: list(v) for k, v in rel.signatures.items()}
    return out


def structure_from_json(data: dict) -> RelStructure:
    return RelStructure(
        universes={k: tuple(v) for k, v in data.get("universes", {}).items()},
        relations={k: frozenset(tuple(t) for t in v)
                   for k, v in data.get("relations", {}).items()},
        constants=dict(data.get("constants", {})),
        signatures={k: tuple(v) for k, v in data.get("signatures", {}).items()},
    )


def domain_to_json(dom: DomStructure) -> dict:
    so = {}
    for name, rng in dom.so_ranges.items():
        so[name] = {
            "index_max": rng.index_bound,
            "ranges": [[r[0], r[-1]] if list(r) == list(range(r[0], r[-1] + 1))
                       else list(r) for r in rng.value_ranges],
            "sentinel": rng.sentinel,
        }
    return {"so": so,
            "fo": {k: [v[0], v[-1]] if list(v) == list(range(v[0], v[-1] + 1))
                   else list(v) for k, v in dom.fo_ranges.items()}}


def _range_from_json(spec):
    if len(spec) == 2 and spec[0] <= spec[1]:
        return tuple(range(spec[0], spec[1] + 1))
    return tuple(spec)


def domain_from_json(data: dict) -> DomStructure:
    so = {}
    for name, entry in data.get("so", {}).items():
        so[name] = SoRange(
            index_bound=entry["index_max"],
            value_ranges=tuple(_range_from_json(r) for r in entry["ranges"]),
            sentinel=bool(entry.get("sentinel", False)),
        )
    fo = {k: _range_from_json(v) for k, v in data.get("fo", {}).items()}
    return DomStructure(so_ranges=so, fo_ranges=fo)


def witness_to_json(w: Witness) -> dict:
    return {name: [list(e) if e is not BOTTOM else None for e in table]
            for name, table in w.tables.items()}


def witness_from_json(data: dict) -> Witness:
    return Witness(tables={
        name: tuple(tuple(e) if e is not None else BOTTOM for e in table)
        for name, table in data.items()})


def load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def dump_json(path, data):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")
