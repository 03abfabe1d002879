"""Modal theories over S4: axiom schemes, derivations, bounded decisions.

A theory here is an axiom basis (schemes closed under modus ponens and
necessitation) together with the frame class that characterizes it.  The
topless-algebra logic has no known axiom basis and is handled purely
semantically, so derivation checking rejects it.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .formula import (
    And,
    Bottom,
    Box,
    Diamond,
    Formula,
    Iff,
    Implies,
    Not,
    Or,
    Top,
    Var,
    formula_family,
    modal_depth,
    parse,
    pretty,
    substitute,
)
from .frames import FrameClass, enumerate_frames
from .kripke import Countermodel, find_countermodel, DEFAULT_MAX_BITS


class DerivationError(ValueError):
    pass


_V0, _V1 = Var(0), Var(1)


class Scheme(Enum):
    """Axiom schemes, templated over metavariables 0 and 1."""

    K = "K"
    T = "T"
    FOUR = "4"
    DOT2 = ".2"
    DOT3 = ".3"
    FIVE = "5"

    @property
    def arity(self) -> int:
        return 2 if self in (Scheme.K, Scheme.DOT3) else 1

    @property
    def template(self) -> Formula:
        return _TEMPLATES[self]


_TEMPLATES = {
    Scheme.K: Implies(Box(Implies(_V0, _V1)), Implies(Box(_V0), Box(_V1))),
    Scheme.T: Implies(Box(_V0), _V0),
    Scheme.FOUR: Implies(Box(_V0), Box(Box(_V0))),
    Scheme.DOT2: Implies(Diamond(Box(_V0)), Box(Diamond(_V0))),
    Scheme.DOT3: Implies(
        And(Diamond(_V0), Diamond(_V1)),
        Diamond(Or(And(_V0, Diamond(_V1)), And(_V1, Diamond(_V0)))),
    ),
    Scheme.FIVE: Implies(Diamond(Box(_V0)), _V0),
}


def instantiate(scheme: Scheme, args: Sequence[Formula]) -> Formula:
    if len(args) != scheme.arity:
        raise DerivationError(
            f"scheme {scheme.value} takes {scheme.arity} arguments, got {len(args)}"
        )
    return substitute(scheme.template, dict(enumerate(args)))


@dataclass(frozen=True)
class Theory:
    name: str
    schemes: tuple[Scheme, ...]
    frame_class: FrameClass


S4 = Theory("S4", (Scheme.K, Scheme.T, Scheme.FOUR), FrameClass.REFLEXIVE_TRANSITIVE)
S4_2 = Theory(
    "S4.2",
    (Scheme.K, Scheme.T, Scheme.FOUR, Scheme.DOT2),
    FrameClass.PRE_BOOLEAN_ALGEBRA,
)
S4_3 = Theory(
    "S4.3",
    (Scheme.K, Scheme.T, Scheme.FOUR, Scheme.DOT3),
    FrameClass.LINEAR_PREORDER,
)
S5 = Theory(
    "S5", (Scheme.K, Scheme.T, Scheme.FOUR, Scheme.FIVE), FrameClass.SINGLE_CLUSTER
)
# semantically defined only: no axiom basis is known
S4_TBA = Theory("S4.tBA", (), FrameClass.TOPLESS_PRE_BOOLEAN_ALGEBRA)

THEORIES: dict[str, Theory] = {
    t.name.lower(): t for t in (S4, S4_2, S4_3, S5, S4_TBA)
}


def theory_by_name(name: str) -> Theory:
    try:
        return THEORIES[name.lower()]
    except KeyError:
        raise DerivationError(f"unknown theory {name!r}") from None


def theory_contains_semantically(t: Theory, f: Formula, max_worlds: int) -> bool:
    """Bounded membership test against the characteristic frames."""
    return isinstance(decide_upto(t, f, max_worlds), ValidUpTo)


# ---------------------------------------------------------------------------
# Classical tautology checking over boxed atoms

TAUT_ATOM_LIMIT = 6


def _boolean_atoms(f: Formula, acc: list[Formula]) -> None:
    if isinstance(f, (Var, Box)):
        if f not in acc:
            acc.append(f)
    elif isinstance(f, Not):
        _boolean_atoms(f.child, acc)
    elif isinstance(f, (And, Or, Implies, Iff)):
        _boolean_atoms(f.left, acc)
        _boolean_atoms(f.right, acc)


def is_tautology(f: Formula, atom_limit: int = TAUT_ATOM_LIMIT) -> bool:
    """Truth-table check treating variables and boxed formulas as opaque
    atoms.  Refuses past atom_limit distinct atoms."""
    atoms: list[Formula] = []
    _boolean_atoms(f, atoms)
    if len(atoms) > atom_limit:
        raise DerivationError(
            f"tautology check over {len(atoms)} atoms exceeds limit {atom_limit}"
        )
    index = {a: i for i, a in enumerate(atoms)}

    def ev(g: Formula, row: int) -> bool:
        if isinstance(g, (Var, Box)):
            return bool(row >> index[g] & 1)
        if isinstance(g, Top):
            return True
        if isinstance(g, Bottom):
            return False
        if isinstance(g, Not):
            return not ev(g.child, row)
        if isinstance(g, And):
            return ev(g.left, row) and ev(g.right, row)
        if isinstance(g, Or):
            return ev(g.left, row) or ev(g.right, row)
        if isinstance(g, Implies):
            return (not ev(g.left, row)) or ev(g.right, row)
        if isinstance(g, Iff):
            return ev(g.left, row) == ev(g.right, row)
        raise TypeError(f"not a modal formula node: {g!r}")

    return all(ev(f, row) for row in range(1 << len(atoms)))


# ---------------------------------------------------------------------------
# Derivations

@dataclass(frozen=True)
class AxiomStep:
    """Instance of one of the theory's schemes."""

    scheme: Scheme
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class TautStep:
    """Classical tautology over boxed atoms, admitted outright."""

    formula: Formula


@dataclass(frozen=True)
class MemberStep:
    """Formula assumed to belong to the theory without proof."""

    formula: Formula


@dataclass(frozen=True)
class MPStep:
    antecedent: int
    implication: int


@dataclass(frozen=True)
class NecStep:
    premise: int


Step = AxiomStep | TautStep | MemberStep | MPStep | NecStep


@dataclass
class Derivation:
    steps: list[Step]
    goal: Formula


@dataclass
class CheckResult:
    ok: bool
    conclusions: list[Formula]
    failed_step: int | None = None
    reason: str | None = None

    def to_json(self) -> dict:
        if self.ok:
            return {"ok": True, "steps": len(self.conclusions)}
        return {"ok": False, "step": self.failed_step, "reason": self.reason}


def check_derivation(theory: Theory, d: Derivation) -> CheckResult:
    """Validate every step and that the last one concludes the goal."""
    if not theory.schemes:
        raise DerivationError(
            f"{theory.name} has no syntactic axiom basis; nothing to check against"
        )
    concl: list[Formula] = []

    def fail(i: int, reason: str) -> CheckResult:
        return CheckResult(False, concl, failed_step=i, reason=reason)

    for i, step in enumerate(d.steps):
        if isinstance(step, AxiomStep):
            if step.scheme not in theory.schemes:
                return fail(i, f"scheme {step.scheme.value} is not in {theory.name}")
            try:
                concl.append(instantiate(step.scheme, step.args))
            except DerivationError as e:
                return fail(i, str(e))
        elif isinstance(step, TautStep):
            try:
                if not is_tautology(step.formula):
                    return fail(i, "not a classical tautology over boxed atoms")
            except DerivationError as e:
                return fail(i, str(e))
            concl.append(step.formula)
        elif isinstance(step, MemberStep):
            concl.append(step.formula)
        elif isinstance(step, MPStep):
            if not (0 <= step.antecedent < i and 0 <= step.implication < i):
                return fail(i, "modus ponens references a later or missing step")
            imp = concl[step.implication]
            if not isinstance(imp, Implies):
                return fail(i, "modus ponens needs an implication to detach from")
            if imp.left != concl[step.antecedent]:
                return fail(i, "antecedent does not match the implication")
            concl.append(imp.right)
        elif isinstance(step, NecStep):
            if not 0 <= step.premise < i:
                return fail(i, "necessitation references a later or missing step")
            concl.append(Box(concl[step.premise]))
        else:
            return fail(i, f"unknown step kind {type(step).__name__}")
    if not concl:
        return CheckResult(False, concl, failed_step=None, reason="empty derivation")
    if concl[-1] != d.goal:
        return CheckResult(
            False,
            concl,
            failed_step=len(concl) - 1,
            reason=f"final step concludes {pretty(concl[-1])}, not the goal",
        )
    return CheckResult(True, concl)


def derivation_to_json(theory: Theory, d: Derivation) -> dict:
    steps = []
    for step in d.steps:
        if isinstance(step, AxiomStep):
            steps.append(
                {
                    "rule": "axiom",
                    "scheme": step.scheme.value,
                    "args": [pretty(a) for a in step.args],
                }
            )
        elif isinstance(step, TautStep):
            steps.append({"rule": "taut", "formula": pretty(step.formula)})
        elif isinstance(step, MemberStep):
            steps.append({"rule": "member", "formula": pretty(step.formula)})
        elif isinstance(step, MPStep):
            steps.append(
                {"rule": "mp", "from": [step.antecedent, step.implication]}
            )
        elif isinstance(step, NecStep):
            steps.append({"rule": "nec", "from": step.premise})
    return {"theory": theory.name, "goal": pretty(d.goal), "steps": steps}


_SCHEME_BY_TAG = {s.value: s for s in Scheme}


def derivation_from_json(doc: Mapping) -> Derivation:
    try:
        goal = parse(doc["goal"])
        raw_steps = doc["steps"]
    except KeyError as e:
        raise DerivationError(f"derivation document lacks {e}") from None
    steps: list[Step] = []
    for i, raw in enumerate(raw_steps):
        rule = raw.get("rule")
        if rule == "axiom":
            tag = raw.get("scheme")
            if tag not in _SCHEME_BY_TAG:
                raise DerivationError(f"step {i}: unknown scheme {tag!r}")
            steps.append(
                AxiomStep(
                    _SCHEME_BY_TAG[tag], tuple(parse(a) for a in raw.get("args", []))
                )
            )
        elif rule == "taut":
            steps.append(TautStep(parse(raw["formula"])))
        elif rule == "member":
            steps.append(MemberStep(parse(raw["formula"])))
        elif rule == "mp":
            ant, imp = raw["from"]
            steps.append(MPStep(int(ant), int(imp)))
        elif rule == "nec":
            steps.append(NecStep(int(raw["from"])))
        else:
            raise DerivationError(f"step {i}: unknown rule {rule!r}")
    return Derivation(steps, goal)


# ---------------------------------------------------------------------------
# Bounded decision over characteristic frames

@dataclass(frozen=True)
class ValidUpTo:
    bound: int

    def to_json(self) -> dict:
        return {"ok": True, "bound": self.bound}


Verdict = ValidUpTo | Countermodel


def decide_upto(
    theory: Theory,
    f: Formula,
    max_worlds: int,
    max_bits: int = DEFAULT_MAX_BITS,
    jobs: int | None = None,
) -> Verdict:
    """Search the theory's characteristic frames for a countermodel, in
    world-count order; report ValidUpTo(max_worlds) if none exists.  This
    bounds the theory from above only: validity on every finite frame of
    the class is necessary for membership, and for these classes small
    frames in practice settle the axioms of interest.

    jobs > 1 spreads the per-frame sweeps over a thread pool; results stay
    deterministic because frames are still inspected smallest-first.
    """
    if jobs is None:
        jobs = int(os.environ.get("MODALVERSE_JOBS", "1"))
    for n in range(1, max_worlds + 1):
        frames = enumerate_frames(theory.frame_class, n)
        if jobs > 1 and len(frames) > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(
                    pool.map(lambda fr: find_countermodel(fr, f, max_bits), frames)
                )
        else:
            results = [find_countermodel(fr, f, max_bits) for fr in frames]
        for cm in results:
            if cm is not None:
                return cm
    return ValidUpTo(max_worlds)


# ---------------------------------------------------------------------------
# The necessitation chain for the confluence axiom

def dot2_chain(phi: Formula = Var(0)) -> list[Formula]:
    """Successive stages in showing that refuting necessitated confluence
    refutes confluence itself, on transitive reflexive frames."""
    dia, box = Diamond, Box
    a2 = Implies(dia(box(phi)), box(dia(phi)))
    return [
        Not(Box(a2)),
        dia(And(dia(box(phi)), Not(box(dia(phi))))),
        And(dia(dia(box(phi))), dia(Not(box(dia(phi))))),
        And(dia(dia(box(phi))), dia(dia(box(Not(phi))))),
        And(dia(box(phi)), dia(box(Not(phi)))),
        And(dia(box(phi)), Not(box(dia(phi)))),
        Not(a2),
    ]


def dot2_chain_links(phi: Formula = Var(0)) -> list[Formula]:
    stages = dot2_chain(phi)
    return [Implies(a, b) for a, b in zip(stages, stages[1:])]


def diamond_idempotence(phi: Formula = Var(0)) -> Formula:
    return Implies(Diamond(Diamond(phi)), Diamond(phi))


def verify_dot2_necessitation(max_worlds: int, depth: int) -> bool:
    """Check each link of the chain, and the collapsing of iterated
    possibility it leans on, against every reflexive-transitive frame with
    at most max_worlds worlds.  The schematic formula is instantiated with
    every one-variable formula of modal depth <= depth from a small
    structural family, the bare variable included.
    """
    instances = [f for f in formula_family(1, 2, depth) if modal_depth(f) <= depth]
    goals: list[Formula] = []
    for inst in instances:
        goals.extend(dot2_chain_links(inst))
        goals.append(diamond_idempotence(inst))
    for n in range(1, max_worlds + 1):
        for frame in enumerate_frames(FrameClass.REFLEXIVE_TRANSITIVE, n):
            for g in goals:
                if find_countermodel(frame, g) is not None:
                    return False
    return True


# ---------------------------------------------------------------------------
# Staged closure inside a finite universe

def closure_stages(
    always_true: Iterable[Formula],
    necessitated: Iterable[Formula],
    universe: Iterable[Formula],
    n_stages: int,
) -> frozenset[Formula]:
    """Iterate closure within a finite universe: odd stages close under
    modus ponens, even stages box what the universe can express.  Stage 0
    is the union of the two seed sets."""
    uni = frozenset(universe)
    current = frozenset(always_true) | frozenset(necessitated)
    if not current <= uni:
        raise DerivationError("seed sets must lie inside the universe")
    for stage in range(1, n_stages + 1):
        if stage % 2 == 1:
            grown = set(current)
            changed = True
            while changed:
                changed = False
                for f in list(grown):
                    if isinstance(f, Implies) and f.left in grown:
                        if f.right in uni and f.right not in grown:
                            grown.add(f.right)
                            changed = True
                current = frozenset(grown)
        else:
            boxed = {Box(f) for f in current}
            current = current | (boxed & uni)
    return current
