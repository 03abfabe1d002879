"""A finite control-statement multiverse.

States are configurations of idealized controls: buttons stay pushed once
pushed, switches flip freely, a ratchet counts upward only, weak buttons
are monotone but can never all be pushed at once, and an optional long
ratchet is a monotone counter split into blocks.  One componentwise rule
decides which states are reachable from which, and it is a pre-order by
construction, so the state graph is a Kripke frame.  ``[G]``/``<G>``
quantify over it the way ``[]``/``<>`` quantify over frame successors.

Control sentences reuse the boolean and modal connectives from
:mod:`.formula`, with control atoms at the leaves.  On top of that the
module builds labelings of the characteristic frame shapes by exact
control patterns, verifies the three labeling clauses, derives ratchets
and switches from other controls, and transfers truth between a Kripke
model and the control world through the induced translation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
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
    ParseError,
    PrecedenceParser,
    Top,
    Var,
    conj,
    disj,
    render,
    substitute,
    tokenize,
    variables,
)
from .frames import Frame, cluster_frame, make_frame, powerset_frame
from .kripke import KripkeModel, eval_formula, truth_mask


class MultiverseError(ValueError):
    """Ill-formed signature, state, sentence, or mismatched pieces."""


# The state-graph modalities are ordinary Box/Not trees; only the printed
# symbol differs, so the whole formula toolbox applies to sentences as is.
BoxGamma = Box
DiaGamma = Diamond
Sentence = Formula

#: Cap on enumerated state spaces; sweeps are exhaustive, so keep it sane.
MAX_STATES = 1 << 16


@dataclass(frozen=True, slots=True)
class ControlSignature:
    """How many controls of each kind a multiverse carries.

    ``long_ratchet`` is ``(n_blocks, block_len)``: a counter ranging over
    ``0 .. n_blocks*block_len - 1``.  Weak buttons come in families of at
    least two; a single one could always be pushed, which defeats the
    point of the never-all-pushed rule.
    """

    n_buttons: int = 0
    n_switches: int = 0
    ratchet_len: int = 0
    n_weak_buttons: int = 0
    long_ratchet: tuple[int, int] | None = None

    def __post_init__(self):
        for name in ("n_buttons", "n_switches", "ratchet_len", "n_weak_buttons"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise MultiverseError(f"{name} must be a natural number, got {v!r}")
        if self.n_weak_buttons == 1:
            raise MultiverseError("weak buttons come in families of at least two")
        if self.long_ratchet is not None:
            blocks, length = self.long_ratchet
            if blocks < 1 or length < 1:
                raise MultiverseError("long ratchet needs positive block count and length")

    @property
    def long_limit(self) -> int:
        """One past the largest long-ratchet value (1 when absent)."""
        if self.long_ratchet is None:
            return 1
        blocks, length = self.long_ratchet
        return blocks * length

    def n_states(self) -> int:
        weak = (1 << self.n_weak_buttons) - 1 if self.n_weak_buttons else 1
        return (
            (1 << self.n_buttons)
            * (1 << self.n_switches)
            * (self.ratchet_len + 1)
            * weak
            * self.long_limit
        )


@dataclass(frozen=True, slots=True)
class MultiverseState:
    """One configuration of all controls; bit i of a bitset is control i."""

    buttons: int = 0
    switches: int = 0
    ratchet: int = 0
    weak: int = 0
    long_value: int = 0


def _bit_list(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def state_to_json(state: MultiverseState) -> dict:
    return {
        "buttons": _bit_list(state.buttons),
        "switches": _bit_list(state.switches),
        "ratchet": state.ratchet,
        "weak": _bit_list(state.weak),
        "long": state.long_value,
    }


def state_from_json(doc: Mapping) -> MultiverseState:
    def mask(key: str) -> int:
        out = 0
        for i in doc.get(key, ()):
            i = int(i)
            if i < 0:
                raise MultiverseError(f"negative control index in {key}")
            out |= 1 << i
        return out

    try:
        return MultiverseState(
            buttons=mask("buttons"),
            switches=mask("switches"),
            ratchet=int(doc.get("ratchet", 0)),
            weak=mask("weak"),
            long_value=int(doc.get("long", 0)),
        )
    except (TypeError, ValueError) as e:
        raise MultiverseError(f"bad state document: {e}") from None


# ---------------------------------------------------------------------------
# Control atoms.  These are Formula leaves, so every connective, traversal
# and substitution from the formula module works on sentences unchanged.

@dataclass(frozen=True, slots=True)
class ButtonPushed(Formula):
    index: int


@dataclass(frozen=True, slots=True)
class SwitchOn(Formula):
    index: int


@dataclass(frozen=True, slots=True)
class RatchetAtLeast(Formula):
    level: int


@dataclass(frozen=True, slots=True)
class WeakPushed(Formula):
    index: int


@dataclass(frozen=True, slots=True)
class LongAtLeast(Formula):
    value: int


def _atom_true(sig: ControlSignature, s: MultiverseState, a: Formula) -> bool:
    if isinstance(a, ButtonPushed):
        if not 0 <= a.index < sig.n_buttons:
            raise MultiverseError(f"button index {a.index} out of range")
        return bool(s.buttons >> a.index & 1)
    if isinstance(a, SwitchOn):
        if not 0 <= a.index < sig.n_switches:
            raise MultiverseError(f"switch index {a.index} out of range")
        return bool(s.switches >> a.index & 1)
    if isinstance(a, WeakPushed):
        if not 0 <= a.index < sig.n_weak_buttons:
            raise MultiverseError(f"weak button index {a.index} out of range")
        return bool(s.weak >> a.index & 1)
    if isinstance(a, RatchetAtLeast):
        # level ratchet_len+epsilon is pointless, level 0 is just truth;
        # both are harmless, only genuinely foreign levels are errors
        if not 0 <= a.level <= sig.ratchet_len:
            raise MultiverseError(f"ratchet level {a.level} out of range")
        return s.ratchet >= a.level
    if isinstance(a, LongAtLeast):
        if sig.long_ratchet is None or not 0 <= a.value <= sig.long_limit:
            raise MultiverseError(f"long-ratchet threshold {a.value} out of range")
        return s.long_value >= a.value
    raise MultiverseError(f"not a control atom: {a!r}")


# ---------------------------------------------------------------------------
# The multiverse itself

@dataclass(eq=False)
class Multiverse:
    """All valid states over a signature, with the reachability pre-order.

    The initial state has every control at zero.  State enumeration order
    is lexicographic in (buttons, switches, ratchet, weak, long), so the
    initial state is index 0 and diagnostics that scan in order report
    least witnesses.
    """

    signature: ControlSignature
    max_states: int = MAX_STATES

    def __post_init__(self):
        total = self.signature.n_states()
        if total > self.max_states:
            raise MultiverseError(
                f"state space of {total} exceeds the limit of {self.max_states}"
            )
        self._states: tuple[MultiverseState, ...] | None = None
        self._index: dict[MultiverseState, int] = {}
        self._succ: tuple[int, ...] | None = None
        self._mask_memo: dict[Formula, int] = {}

    @property
    def initial(self) -> MultiverseState:
        return MultiverseState()

    def _check_bounds(self, s: MultiverseState) -> None:
        sig = self.signature
        if not 0 <= s.buttons < 1 << sig.n_buttons:
            raise MultiverseError("button set does not fit the signature")
        if not 0 <= s.switches < 1 << sig.n_switches:
            raise MultiverseError("switch set does not fit the signature")
        if not 0 <= s.weak < 1 << sig.n_weak_buttons:
            raise MultiverseError("weak-button set does not fit the signature")
        if not 0 <= s.ratchet <= sig.ratchet_len:
            raise MultiverseError("ratchet value out of range")
        if not 0 <= s.long_value < sig.long_limit:
            raise MultiverseError("long-ratchet value out of range")

    def check_state(self, s: MultiverseState) -> None:
        """Raise unless s is a valid state: in bounds, weak set not full."""
        self._check_bounds(s)
        n = self.signature.n_weak_buttons
        if n and s.weak == (1 << n) - 1:
            raise MultiverseError("all weak buttons pushed is not a state")

    def accessible(self, s: MultiverseState, t: MultiverseState) -> bool:
        """Componentwise reachability: buttons, ratchets and weak buttons
        only grow, the weak set may not become full, switches move freely.
        """
        self._check_bounds(s)
        self._check_bounds(t)
        n = self.signature.n_weak_buttons
        if n and t.weak == (1 << n) - 1:
            return False
        return (
            s.buttons | t.buttons == t.buttons
            and s.ratchet <= t.ratchet
            and s.long_value <= t.long_value
            and s.weak | t.weak == t.weak
        )

    def states(self) -> tuple[MultiverseState, ...]:
        if self._states is None:
            sig = self.signature
            full_weak = (1 << sig.n_weak_buttons) - 1
            out = []
            for b in range(1 << sig.n_buttons):
                for sw in range(1 << sig.n_switches):
                    for r in range(sig.ratchet_len + 1):
                        for w in range(full_weak + 1):
                            if sig.n_weak_buttons and w == full_weak:
                                continue
                            for lv in range(sig.long_limit):
                                out.append(MultiverseState(b, sw, r, w, lv))
            self._states = tuple(out)
            self._index = {s: i for i, s in enumerate(out)}
        return self._states

    def state_index(self, s: MultiverseState) -> int:
        self.check_state(s)
        self.states()
        return self._index[s]

    def successor_masks(self) -> tuple[int, ...]:
        """Per-state bitmask of accessible states, aligned with states()."""
        if self._succ is None:
            sts = self.states()
            masks = []
            for s in sts:
                m = 0
                for j, t in enumerate(sts):
                    if (
                        s.buttons | t.buttons == t.buttons
                        and s.ratchet <= t.ratchet
                        and s.long_value <= t.long_value
                        and s.weak | t.weak == t.weak
                    ):
                        m |= 1 << j
                masks.append(m)
            self._succ = tuple(masks)
        return self._succ

    def state_mask(self, sentence: Sentence) -> int:
        """Truth of a sentence as a bitmask over states(); memoized."""
        sts = self.states()
        full = (1 << len(sts)) - 1
        memo = self._mask_memo

        def go(f: Formula) -> int:
            if f in memo:
                return memo[f]
            if isinstance(f, Box):
                inner = go(f.child)
                succ = self.successor_masks()
                m = 0
                for i in range(len(sts)):
                    if succ[i] & inner == succ[i]:
                        m |= 1 << i
            elif isinstance(f, Not):
                m = full & ~go(f.child)
            elif isinstance(f, And):
                m = go(f.left) & go(f.right)
            elif isinstance(f, Or):
                m = go(f.left) | go(f.right)
            elif isinstance(f, Implies):
                m = (full & ~go(f.left)) | go(f.right)
            elif isinstance(f, Iff):
                m = full & ~(go(f.left) ^ go(f.right))
            elif isinstance(f, Top):
                m = full
            elif isinstance(f, Bottom):
                m = 0
            elif isinstance(f, Var):
                raise MultiverseError(
                    "propositional variable in a control sentence; translate first"
                )
            else:
                m = 0
                for i, s in enumerate(sts):
                    if _atom_true(self.signature, s, f):
                        m |= 1 << i
            memo[f] = m
            return m

        return go(sentence)

    def eval_sentence(self, s: MultiverseState, sentence: Sentence) -> bool:
        return bool(self.state_mask(sentence) >> self.state_index(s) & 1)

    def as_frame(self) -> Frame:
        """The state graph as a frame; world i is states()[i]."""
        sts = self.states()
        succ = self.successor_masks()
        pairs = []
        for i in range(len(sts)):
            for j in _bit_list(succ[i]):
                pairs.append((i, j))
        return make_frame(len(sts), pairs)


def directed_witness(mv: Multiverse) -> tuple[MultiverseState, MultiverseState] | None:
    """A least pair of states with no common extension, or None if the
    reachability order is directed."""
    sts = mv.states()
    succ = mv.successor_masks()
    for i in range(len(sts)):
        for j in range(i, len(sts)):
            if not succ[i] & succ[j]:
                return sts[i], sts[j]
    return None


# ---------------------------------------------------------------------------
# Labelings

@dataclass(frozen=True)
class Labeling:
    """One sentence per world of a base frame, read over a multiverse."""

    frame: Frame
    sentences: tuple[Sentence, ...]
    initial_world: int = 0

    def __post_init__(self):
        if len(self.sentences) != self.frame.worlds:
            raise MultiverseError("one labeling sentence per world, no more, no less")
        if not 0 <= self.initial_world < self.frame.worlds:
            raise MultiverseError("initial world out of range")


def _exact_pattern(atom, count: int, mask: int) -> Sentence:
    """Conjunction fixing every one of `count` atoms: positive on mask bits,
    negated elsewhere.  Exactness keeps distinct patterns exclusive."""
    return conj(
        [atom(i) if mask >> i & 1 else Not(atom(i)) for i in range(count)]
    )


def _conj2(a: Sentence, b: Sentence) -> Sentence:
    if isinstance(a, Top):
        return b
    if isinstance(b, Top):
        return a
    return And(a, b)


def _ratchet_exactly(k: int, ratchet_len: int) -> Sentence:
    if ratchet_len == 0:
        return Top()
    if k == 0:
        return Not(RatchetAtLeast(1))
    if k == ratchet_len:
        return RatchetAtLeast(k)
    return And(RatchetAtLeast(k), Not(RatchetAtLeast(k + 1)))


def labeling_single_cluster(m_switches: int) -> tuple[Multiverse, Frame, Labeling]:
    """A cluster of 2^m worlds labeled by exact switch patterns."""
    if not 1 <= m_switches <= 4:
        raise MultiverseError("switch count must be between 1 and 4")
    mv = Multiverse(ControlSignature(n_switches=m_switches))
    per = 1 << m_switches
    fr = cluster_frame([per])
    sentences = tuple(_exact_pattern(SwitchOn, m_switches, j) for j in range(per))
    return mv, fr, Labeling(fr, sentences)


def labeling_linear(ratchet_len: int, m_switches: int) -> tuple[Multiverse, Frame, Labeling]:
    """A linear pre-order of ratchet_len+1 clusters of 2^m worlds, labeled
    by exact ratchet value and exact switch pattern."""
    if not 0 <= ratchet_len <= 4 or not 0 <= m_switches <= 4:
        raise MultiverseError("ratchet length and switch count must be at most 4")
    mv = Multiverse(
        ControlSignature(n_switches=m_switches, ratchet_len=ratchet_len)
    )
    per = 1 << m_switches
    n_clusters = ratchet_len + 1
    strict = {(a, b) for a in range(n_clusters) for b in range(n_clusters) if a < b}
    fr = cluster_frame([per] * n_clusters, strict=strict)
    sentences = []
    for k in range(n_clusters):
        for j in range(per):
            sentences.append(
                _conj2(
                    _ratchet_exactly(k, ratchet_len),
                    _exact_pattern(SwitchOn, m_switches, j),
                )
            )
    return mv, fr, Labeling(fr, tuple(sentences))


def labeling_preBA(n_buttons: int, m_switches: int) -> tuple[Multiverse, Frame, Labeling]:
    """The powerset order on button subsets, clusters of 2^m worlds, each
    world labeled by its exact button pattern and exact switch pattern."""
    if not 0 <= n_buttons <= 4 or not 0 <= m_switches <= 4:
        raise MultiverseError("button count and switch count must be at most 4")
    mv = Multiverse(
        ControlSignature(n_buttons=n_buttons, n_switches=m_switches)
    )
    fr = powerset_frame(n_buttons, 1 << m_switches)
    sentences = []
    for atoms, copy in fr.labels:
        mask = 0
        for i in atoms:
            mask |= 1 << i
        sentences.append(
            _conj2(
                _exact_pattern(ButtonPushed, n_buttons, mask),
                _exact_pattern(SwitchOn, m_switches, copy),
            )
        )
    return mv, fr, Labeling(fr, tuple(sentences))


def labeling_topless(n_weak: int, m_switches: int) -> tuple[Multiverse, Frame, Labeling]:
    """The powerset order on proper weak-button subsets (no top), labeled
    by exact weak-button pattern and exact switch pattern.  The full set is
    unreachable on the control side and absent on the frame side; that
    match is the whole construction."""
    if not 2 <= n_weak <= 4 or not 0 <= m_switches <= 4:
        raise MultiverseError("need 2..4 weak buttons and at most 4 switches")
    mv = Multiverse(
        ControlSignature(n_switches=m_switches, n_weak_buttons=n_weak)
    )
    fr = powerset_frame(n_weak, 1 << m_switches, topless=True)
    sentences = []
    for atoms, copy in fr.labels:
        mask = 0
        for i in atoms:
            mask |= 1 << i
        sentences.append(
            _conj2(
                _exact_pattern(WeakPushed, n_weak, mask),
                _exact_pattern(SwitchOn, m_switches, copy),
            )
        )
    return mv, fr, Labeling(fr, tuple(sentences))


@dataclass(frozen=True)
class LabelingReport:
    """Outcome of verify_labeling.  Clause numbers: 1 = exactly one label
    sentence true per state, 2 = possibility of a label matches the frame
    order, 3 = the initial state wears the initial world's label."""

    ok: bool
    states_checked: int
    clause: int | None = None
    state: MultiverseState | None = None
    world: int | None = None

    def to_json(self) -> dict:
        if self.ok:
            return {"ok": True, "states_checked": self.states_checked}
        return {
            "clause": self.clause,
            "state": state_to_json(self.state),
            "world": self.world,
        }


def verify_labeling(mv: Multiverse, lab: Labeling) -> LabelingReport:
    """Check the three labeling clauses at every state reachable from the
    initial state.  Scans in state order and reports the first violation;
    for clause 1 the world is the second true label, or -1 if none is true.
    """
    fr = lab.frame
    masks = [mv.state_mask(phi) for phi in lab.sentences]
    dia_masks = [mv.state_mask(Diamond(phi)) for phi in lab.sentences]
    sts = mv.states()
    init = mv.state_index(mv.initial)
    # reachability is just the successor set: the rule is already transitive
    reach = mv.successor_masks()[init]
    checked = 0
    for i, s in enumerate(sts):
        if not reach >> i & 1:
            continue
        checked += 1
        true_worlds = [w for w in range(fr.worlds) if masks[w] >> i & 1]
        if len(true_worlds) != 1:
            bad = true_worlds[1] if len(true_worlds) > 1 else -1
            return LabelingReport(False, checked, clause=1, state=s, world=bad)
        w = true_worlds[0]
        if i == init and w != lab.initial_world:
            return LabelingReport(
                False, checked, clause=3, state=s, world=lab.initial_world
            )
        for u in range(fr.worlds):
            if bool(dia_masks[u] >> i & 1) != fr.sees(w, u):
                return LabelingReport(False, checked, clause=2, state=s, world=u)
    return LabelingReport(True, checked)


# ---------------------------------------------------------------------------
# Derived controls: ratchets and switches defined by sentences over a
# multiverse whose native controls are of a different kind.

@dataclass(frozen=True)
class DerivedControls:
    """Sentence-level controls over mv.  ratchet[i] asserts stage i+1 is
    reached.  region is a state mask limiting where the independence
    claims apply (headroom); conditions at the initial state always apply.
    """

    mv: Multiverse
    buttons: tuple[Sentence, ...]
    switches: tuple[Sentence, ...]
    ratchet: tuple[Sentence, ...]
    region: int


def _value_band(lo: int, hi: int) -> Sentence:
    """Long-ratchet value in [lo, hi)."""
    return And(LongAtLeast(lo), Not(LongAtLeast(hi)))


def _long_bit_sentence(limit: int, block_len: int, bit: int) -> Sentence:
    """Bit `bit` of (value mod block_len), as a union of value bands."""
    bands = []
    start = None
    for v in range(limit + 1):
        on = v < limit and bool((v % block_len) >> bit & 1)
        if on and start is None:
            start = v
        elif not on and start is not None:
            bands.append(_value_band(start, v))
            start = None
    return disj(bands)


def long_to_ratchet_switches(
    n_blocks: int, m_switches: int, horizon: int
) -> DerivedControls:
    """Carve an ordinary ratchet and switches out of a long ratchet.

    Blocks have length 2^m * (horizon+1).  Crossing a block boundary is
    the derived ratchet stepping; the low bits of the position inside a
    block are the derived switches.  Switches only work while the block
    has at least 2^m of room left, so independence claims are restricted
    to that region.
    """
    if not 1 <= n_blocks <= 6:
        raise MultiverseError("block count must be between 1 and 6")
    if not 0 <= m_switches <= 3 or not 0 <= horizon <= 8:
        raise MultiverseError("switch count at most 3, horizon at most 8")
    block_len = (1 << m_switches) * (horizon + 1)
    mv = Multiverse(ControlSignature(long_ratchet=(n_blocks, block_len)))
    limit = mv.signature.long_limit
    ratchet = tuple(LongAtLeast(a * block_len) for a in range(1, n_blocks))
    switches = tuple(
        _long_bit_sentence(limit, block_len, i) for i in range(m_switches)
    )
    region = 0
    for idx, s in enumerate(mv.states()):
        if (s.long_value % block_len) + (1 << m_switches) <= block_len:
            region |= 1 << idx
    return DerivedControls(mv, (), switches, ratchet, region)


def ord_buttons_conversion(n_keep: int, n_total: int) -> DerivedControls:
    """Keep the first n_keep buttons; read the rest as a ratchet whose
    value is how far the highest pushed button reaches past the kept ones.
    Pushing a high button can only raise that frontier, never lower it."""
    if not 0 <= n_keep < n_total <= 10:
        raise MultiverseError("need 0 <= n_keep < n_total <= 10")
    mv = Multiverse(ControlSignature(n_buttons=n_total))
    kept = tuple(ButtonPushed(i) for i in range(n_keep))
    ratchet = tuple(
        disj([ButtonPushed(i) for i in range(n_keep + j - 1, n_total)])
        for j in range(1, n_total - n_keep + 1)
    )
    region = (1 << len(mv.states())) - 1
    return DerivedControls(mv, kept, (), ratchet, region)


@dataclass(frozen=True)
class RatchetReport:
    """Which of the four ratchet conditions fail for which stage."""

    ok: bool
    failed: tuple[tuple[int, int], ...]  # (stage, condition index 1..4)


def ratchet_condition_sentences(
    ratchet: Sequence[Sentence], stage: int
) -> tuple[Sentence, Sentence, Sentence, Sentence]:
    """The four conditions for 1-based stage i, with the next stage read
    as falsum past the end: not yet reached; once reached, permanent;
    reaching the next implies this one; and wherever the next is still
    open, this stage is attainable without it."""
    r_i = ratchet[stage - 1]
    r_next = ratchet[stage] if stage < len(ratchet) else Bottom()
    return (
        Not(r_i),
        Box(Implies(r_i, Box(r_i))),
        Box(Implies(r_next, r_i)),
        Box(Implies(Not(r_next), Diamond(And(r_i, Not(r_next))))),
    )


def verify_ratchet_conditions(
    mv: Multiverse, ratchet: Sequence[Sentence]
) -> RatchetReport:
    """Evaluate all four conditions for every stage at the initial state."""
    init = mv.state_index(mv.initial)
    failed = []
    for stage in range(1, len(ratchet) + 1):
        for k, sent in enumerate(ratchet_condition_sentences(ratchet, stage), start=1):
            if not mv.state_mask(sent) >> init & 1:
                failed.append((stage, k))
    return RatchetReport(not failed, tuple(failed))


def verify_switch_independence(mv: Multiverse) -> tuple[MultiverseState, int] | None:
    """Native switches: from any state, every switch pattern is reachable
    with all other controls untouched.  Returns a least counterexample
    (state, pattern) or None."""
    for s in mv.states():
        for p in range(1 << mv.signature.n_switches):
            if not mv.accessible(s, replace(s, switches=p)):
                return s, p
    return None


def _agreement_mask(mv: Multiverse, at: int, sentences: Iterable[Sentence]) -> int:
    """States agreeing with state index `at` on every given sentence."""
    full = (1 << len(mv.states())) - 1
    agree = full
    for sent in sentences:
        m = mv.state_mask(sent)
        agree &= m if m >> at & 1 else full & ~m
    return agree


def verify_derived_independence(
    dc: DerivedControls,
) -> tuple[MultiverseState, int] | None:
    """Derived switches: within the region, every switch pattern is
    reachable without moving any derived ratchet stage.  Returns a least
    counterexample (state, pattern) or None."""
    mv = dc.mv
    succ = mv.successor_masks()
    sw_masks = [mv.state_mask(x) for x in dc.switches]
    full = (1 << len(mv.states())) - 1
    for i, s in enumerate(mv.states()):
        if not dc.region >> i & 1:
            continue
        base = succ[i] & _agreement_mask(mv, i, dc.ratchet)
        for p in range(1 << len(dc.switches)):
            want = base
            for b, m in enumerate(sw_masks):
                want &= m if p >> b & 1 else full & ~m
            if not want:
                return s, p
    return None


def verify_button_ratchet_independence(
    dc: DerivedControls,
) -> tuple[MultiverseState, int] | None:
    """Derived-from-buttons ratchets leave the kept buttons free: from any
    state, any larger kept-button pattern is reachable with every ratchet
    stage unchanged.  Returns a least counterexample or None."""
    mv = dc.mv
    succ = mv.successor_masks()
    kept_masks = [mv.state_mask(x) for x in dc.buttons]
    n_kept = len(dc.buttons)
    full = (1 << len(mv.states())) - 1
    for i, s in enumerate(mv.states()):
        if not dc.region >> i & 1:
            continue
        cur = 0
        for b, m in enumerate(kept_masks):
            if m >> i & 1:
                cur |= 1 << b
        base = succ[i] & _agreement_mask(mv, i, dc.ratchet)
        for p in range(1 << n_kept):
            if cur | p != p:
                continue  # buttons never unpush
            want = base
            for b, m in enumerate(kept_masks):
                want &= m if p >> b & 1 else full & ~m
            if not want:
                return s, p
    return None


# ---------------------------------------------------------------------------
# Truth transfer between a Kripke model and the control world

@dataclass(frozen=True)
class Translation:
    """Variable-to-sentence assignment, applied by plain substitution.
    Box nodes pass through untouched: they already are the state-graph
    modality."""

    assignment: Mapping[int, Sentence]

    def apply(self, f: Formula) -> Sentence:
        missing = variables(f) - set(self.assignment)
        if missing:
            raise MultiverseError(f"no sentence assigned to p{min(missing)}")
        return substitute(f, self.assignment)


def translate(model: KripkeModel, lab: Labeling) -> Translation:
    """Each variable becomes the disjunction of the labels of the worlds
    where it holds; a variable true nowhere becomes falsum."""
    if model.frame != lab.frame:
        raise MultiverseError("model and labeling live on different frames")
    assignment = {}
    for var in sorted(model.valuation):
        mask = model.valuation[var]
        assignment[var] = disj(
            [lab.sentences[w] for w in range(lab.frame.worlds) if mask >> w & 1]
        )
    return Translation(assignment)


def roundtrip_check(
    mv: Multiverse,
    model: KripkeModel,
    w0: int,
    lab: Labeling,
    formula: Formula,
    *,
    uniform: bool = True,
) -> bool:
    """Does the model at w0 agree with the multiverse at the initial state
    on formula-vs-translated-formula?  With uniform=True, additionally at
    every reachable state against the world whose label it wears.
    Assumes the labeling verifies; a state with no unique label raises."""
    tr = translate(model, lab)
    h_mask = mv.state_mask(tr.apply(formula))
    init = mv.state_index(mv.initial)
    if eval_formula(model, w0, formula) != bool(h_mask >> init & 1):
        return False
    if not uniform:
        return True
    masks = [mv.state_mask(phi) for phi in lab.sentences]
    world_truth = truth_mask(model, formula)
    reach = mv.successor_masks()[init]
    for i in range(len(mv.states())):
        if not reach >> i & 1:
            continue
        labeled = [w for w in range(lab.frame.worlds) if masks[w] >> i & 1]
        if len(labeled) != 1:
            raise MultiverseError("state without a unique label; verify the labeling")
        if bool(world_truth >> labeled[0] & 1) != bool(h_mask >> i & 1):
            return False
    return True


# ---------------------------------------------------------------------------
# Text syntax for sentences

class _SentenceParser(PrecedenceParser):
    box_token = "[G]"
    dia_token = "<G>"

    def parse_atom(self):
        kind, value, at = self.peek()
        if kind == "sym" and value == "(":
            self.advance()
            f = self.parse_iff()
            self.expect_sym(")")
            return f
        if kind == "ident":
            self.advance()
            if value == "true":
                return Top()
            if value == "false":
                return Bottom()
            if value in ("r", "L"):
                self.expect_sym(">=")
                nkind, nvalue, nat = self.peek()
                if nkind != "num":
                    raise ParseError("expected a number after '>='", nat)
                self.advance()
                level = int(nvalue)
                return RatchetAtLeast(level) if value == "r" else LongAtLeast(level)
            head, rest = value[0], value[1:]
            if head in "bsw" and rest.isdigit():
                cls = {"b": ButtonPushed, "s": SwitchOn, "w": WeakPushed}[head]
                return cls(int(rest))
            raise ParseError(f"unknown control atom {value!r}", at)
        raise ParseError("expected an atom", at)


def parse_sentence(text: str) -> Sentence:
    return _SentenceParser(tokenize(text)).parse()


def _sentence_atom(f) -> str:
    if isinstance(f, ButtonPushed):
        return f"b{f.index}"
    if isinstance(f, SwitchOn):
        return f"s{f.index}"
    if isinstance(f, WeakPushed):
        return f"w{f.index}"
    if isinstance(f, RatchetAtLeast):
        return f"r>={f.level}"
    if isinstance(f, LongAtLeast):
        return f"L>={f.value}"
    raise TypeError(f"not a control sentence node: {f!r}")


def pretty_sentence(f: Sentence) -> str:
    """Canonical text form; parse_sentence inverts it."""
    return render(f, atom=_sentence_atom, box_sym="[G]", dia_sym="<G>")
