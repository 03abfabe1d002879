"""Named formulas and stock derivations.

The registry names the axioms at canonical variables, the finite
alternative-exclusion principles, and the stages of the confluence
necessitation argument, so the command line can refer to them as @name.
Corpus files are plain text, one ``name: formula`` per line, with # for
comments.
"""

from __future__ import annotations

from typing import Mapping

from .formula import (
    And,
    Box,
    Diamond,
    Formula,
    Implies,
    Not,
    Var,
    conj,
    disj,
    parse,
    pretty,
)
from .theories import (
    AxiomStep,
    Derivation,
    DerivationError,
    MPStep,
    NecStep,
    Scheme,
    Step,
    TautStep,
    diamond_idempotence,
    dot2_chain_links,
    instantiate,
)


def alternatives(n: int) -> Formula:
    """Exclusion principle for n pairwise-incompatible settled alternatives:
    if each can be made necessary and no two can hold together, some world
    keeps the first n-1 available while the last is ruled out."""
    if n < 3:
        raise ValueError("the principle needs at least three alternatives")
    ante = conj([Diamond(Box(Var(i))) for i in range(n)])
    pairwise = disj(
        [And(Var(i), Var(j)) for i in range(n) for j in range(i + 1, n)]
    )
    settled = conj(
        [Diamond(Box(Var(i))) for i in range(n - 1)]
        + [Not(Diamond(Box(Var(n - 1))))]
    )
    return Implies(And(ante, Not(Diamond(pairwise))), Diamond(settled))


def named_formulas() -> dict[str, Formula]:
    v0 = Var(0)
    reg: dict[str, Formula] = {
        "axiom.K": instantiate(Scheme.K, (Var(0), Var(1))),
        "axiom.T": instantiate(Scheme.T, (v0,)),
        "axiom.4": instantiate(Scheme.FOUR, (v0,)),
        "axiom.2": instantiate(Scheme.DOT2, (v0,)),
        "axiom.3": instantiate(Scheme.DOT3, (Var(0), Var(1))),
        "axiom.5": instantiate(Scheme.FIVE, (v0,)),
        "three-alternative": alternatives(3),
        "four-alternative": alternatives(4),
        "five-alternative": alternatives(5),
        "diamond-idempotence": diamond_idempotence(),
        "dot2-necessitation": dot2_necessitation_goal(),
    }
    for i, link in enumerate(dot2_chain_links(), start=1):
        reg[f"dot2-nec-link-{i}"] = link
    return reg


def lookup(name: str) -> Formula:
    reg = named_formulas()
    if name not in reg:
        raise KeyError(f"no corpus formula named {name!r}")
    return reg[name]


def dump_corpus(registry: Mapping[str, Formula] | None = None) -> str:
    reg = named_formulas() if registry is None else dict(registry)
    lines = [f"{name}: {pretty(f)}" for name, f in reg.items()]
    return "\n".join(lines) + "\n"


def load_corpus(text: str) -> dict[str, Formula]:
    out: dict[str, Formula] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, sep, body = line.partition(":")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'name: formula'")
        out[name.strip()] = parse(body)
    return out


# ---------------------------------------------------------------------------
# Building derivations out of derived rules

class DerivationBuilder:
    """Accumulates primitive steps; the helpers compose the usual derived
    rules from K, necessitation and classical reasoning.  Each method
    returns the index of the step concluding its result."""

    def __init__(self):
        self.steps: list[Step] = []
        self.concl: list[Formula] = []

    def _push(self, step: Step, conclusion: Formula) -> int:
        self.steps.append(step)
        self.concl.append(conclusion)
        return len(self.steps) - 1

    def axiom(self, scheme: Scheme, *args: Formula) -> int:
        return self._push(AxiomStep(scheme, args), instantiate(scheme, args))

    def taut(self, f: Formula) -> int:
        return self._push(TautStep(f), f)

    def mp(self, antecedent: int, implication: int) -> int:
        imp = self.concl[implication]
        if not isinstance(imp, Implies) or imp.left != self.concl[antecedent]:
            raise DerivationError("builder misuse: modus ponens does not fit")
        return self._push(MPStep(antecedent, implication), imp.right)

    def nec(self, premise: int) -> int:
        return self._push(NecStep(premise), Box(self.concl[premise]))

    def _imp(self, i: int) -> tuple[Formula, Formula]:
        f = self.concl[i]
        if not isinstance(f, Implies):
            raise DerivationError("builder misuse: implication expected")
        return f.left, f.right

    def imp_trans(self, first: int, second: int) -> int:
        """From a->b and b->c conclude a->c."""
        a, b = self._imp(first)
        b2, c = self._imp(second)
        if b != b2:
            raise DerivationError("builder misuse: implications do not chain")
        t = self.taut(
            Implies(
                Implies(a, b), Implies(Implies(b, c), Implies(a, c))
            )
        )
        return self.mp(second, self.mp(first, t))

    def contrapose(self, i: int) -> int:
        a, b = self._imp(i)
        t = self.taut(Implies(Implies(a, b), Implies(Not(b), Not(a))))
        return self.mp(i, t)

    def mono_box(self, i: int) -> int:
        """From a->b conclude []a->[]b."""
        a, b = self._imp(i)
        boxed = self.nec(i)
        k = self.axiom(Scheme.K, a, b)
        return self.mp(boxed, k)

    def mono_dia(self, i: int) -> int:
        """From a->b conclude <>a-><>b."""
        return self.contrapose(self.mono_box(self.contrapose(i)))

    def conj_both(self, first: int, second: int) -> int:
        """From x->a and x->b conclude x->a&b."""
        x, a = self._imp(first)
        x2, b = self._imp(second)
        if x != x2:
            raise DerivationError("builder misuse: shared antecedent expected")
        t = self.taut(
            Implies(
                Implies(x, a),
                Implies(Implies(x, b), Implies(x, And(a, b))),
            )
        )
        return self.mp(second, self.mp(first, t))

    def pair_conj(self, first: int, second: int) -> int:
        """From a->b and c->d conclude a&c->b&d."""
        a, b = self._imp(first)
        c, d = self._imp(second)
        t = self.taut(
            Implies(
                Implies(a, b),
                Implies(Implies(c, d), Implies(And(a, c), And(b, d))),
            )
        )
        return self.mp(second, self.mp(first, t))

    def derivation(self, goal_index: int) -> Derivation:
        return Derivation(list(self.steps), self.concl[goal_index])


def diamond_idempotence_derivation(phi: Formula = Var(0)) -> Derivation:
    """S4 proof that iterated possibility collapses: <><>phi -> <>phi."""
    b = DerivationBuilder()
    idx = _build_dia_idem(b, phi)
    return b.derivation(idx)


def _build_dia_idem(b: DerivationBuilder, phi: Formula) -> int:
    notp = Not(phi)
    four = b.axiom(Scheme.FOUR, notp)
    dn = b.taut(Implies(Box(notp), Not(Not(Box(notp)))))
    inner = b.mono_box(dn)
    chained = b.imp_trans(four, inner)
    return b.contrapose(chained)


def dot2_necessitation_goal(phi: Formula = Var(0)) -> Formula:
    a2 = Implies(Diamond(Box(phi)), Box(Diamond(phi)))
    return Implies(a2, Box(a2))


def dot2_necessitation_derivation(phi: Formula = Var(0)) -> Derivation:
    """S4 proof that confluence implies its own necessity.

    Runs the refutation chain in contrapositive: from the negated boxed
    form down to the negated plain form, then flips.  Possibility is
    expanded to ~[]~ throughout, which makes two stages coincide
    syntactically and shortens the ride.
    """
    dia, box = Diamond, Box
    A = dia(box(phi))
    B = box(dia(phi))
    D = Implies(A, B)
    b = DerivationBuilder()

    # stage 1: ~[]D -> <>(A & ~B)
    t1 = b.taut(Implies(Not(And(A, Not(B))), D))
    m1 = b.mono_box(t1)
    link1 = b.contrapose(m1)

    # stage 2: <>(A & ~B) -> <>A & <>~B
    left = b.mono_dia(b.taut(Implies(And(A, Not(B)), A)))
    right = b.mono_dia(b.taut(Implies(And(A, Not(B)), Not(B))))
    link2 = b.conj_both(left, right)

    # stage 3: <>A = <><>[]phi and <>~B = <><>[]~phi collapse to one step
    dd1 = _build_dia_idem(b, box(phi))
    dd2 = _build_dia_idem(b, box(Not(phi)))
    link3 = b.pair_conj(dd1, dd2)

    # stage 4: <>[]phi & <>[]~phi -> ~D, since <>[]~phi is literally ~B
    link4 = b.taut(Implies(And(A, Not(B)), Not(D)))

    chain = b.imp_trans(b.imp_trans(b.imp_trans(link1, link2), link3), link4)
    flip = b.taut(Implies(Implies(Not(box(D)), Not(D)), Implies(D, box(D))))
    goal = b.mp(chain, flip)
    return b.derivation(goal)


def iterated_four_derivation() -> Derivation:
    """S4 exercise: []p0 -> [][][]p0 by chaining two scheme instances."""
    p = Var(0)
    b = DerivationBuilder()
    first = b.axiom(Scheme.FOUR, p)
    second = b.mono_box(b.axiom(Scheme.FOUR, p))
    four4 = b.imp_trans(first, second)
    return b.derivation(four4)


def boxed_tautology_derivation() -> Derivation:
    """Necessitation exercise: [](p0 -> p0)."""
    b = DerivationBuilder()
    t = b.taut(Implies(Var(0), Var(0)))
    return b.derivation(b.nec(t))


def t_instance_derivation() -> Derivation:
    b = DerivationBuilder()
    return b.derivation(b.axiom(Scheme.T, Var(0)))


def corpus_derivations() -> dict[str, tuple[str, Derivation]]:
    """Stock derivations as (theory name, derivation) keyed by name."""
    return {
        "t-instance": ("S4", t_instance_derivation()),
        "boxed-tautology": ("S4", boxed_tautology_derivation()),
        "iterated-four": ("S4", iterated_four_derivation()),
        "diamond-idempotence": ("S4", diamond_idempotence_derivation()),
        "dot2-necessitation": ("S4", dot2_necessitation_derivation()),
    }
