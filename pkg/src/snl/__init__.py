"""Workbench for a second-order functional-existential logic fragment.

Sentences of the shape  exists^f P1..Pl  forall i1..ir y1..ys [psi_1 & ... &
psi_t]  are parsed, checked against the fragment's syntactic requirements,
evaluated over finite structures, produced by problem encoders, compiled to
CSP / MAX-2SAT / cut instances, and optimized by greedy schemes — with
independent brute-force oracles backing every construction.
"""

from .syntax import (  # noqa: F401
    BOTTOM, And, BoolConst, ConstSym, DomStructure, Eq, FoVar, Formula,
    Implies, Le, Mu, Not, NumDecl, ObjDecl, Or, Pred, RelAtom, RelStructure,
    Sentence, SnlError, SoAtom, SoDecl, SoRange, Suc, Term, ValidationError,
    Vocabulary, Witness,
)
from .dsl import parse_sentence, print_sentence  # noqa: F401
from .evaluate import (  # noqa: F401
    EvalContext, EvalResult, MaxSpec, count_objective, count_objective_prefix,
    eval_formula, search_witness, verify_witness,
)
