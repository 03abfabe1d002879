"""Kripke models over finite frames: evaluation, frame validity, bisimulation.

Truth sets are bitmasks over worlds throughout.  Frame validity sweeps all
valuations of the formula's variables; the sweep is vectorized over the
whole valuation space, with valuation j assigning variable v true at world
w exactly when bit v*n + w of j is set.  The first countermodel reported is
always the numerically least such j.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .formula import (
    And,
    Bottom,
    Box,
    Formula,
    Iff,
    Implies,
    Not,
    Or,
    Top,
    Var,
    pretty,
    variables,
)
from .frames import (
    Frame,
    FrameError,
    frame_from_json,
    frame_to_json,
    powerset_structure,
    quotient,
    successor_masks,
)


class UnknownVariableError(KeyError):
    pass


class SweepLimitError(ValueError):
    """Valuation sweep would exceed the configured bit budget."""


DEFAULT_MAX_BITS = 24


@dataclass(eq=False)
class KripkeModel:
    """A frame plus a valuation: variable index -> bitmask of worlds."""

    frame: Frame
    valuation: dict[int, int] = field(default_factory=dict)

    def var_mask(self, v: int) -> int:
        try:
            return self.valuation[v]
        except KeyError:
            raise UnknownVariableError(f"no valuation row for p{v}") from None


def make_model(frame: Frame, val: Mapping[int, Iterable[int]]) -> KripkeModel:
    """Build a model from world lists, e.g. {0: [0, 2]} for p0."""
    masks = {}
    for v, worlds in val.items():
        m = 0
        for w in worlds:
            if not 0 <= w < frame.worlds:
                raise FrameError(f"world {w} out of range")
            m |= 1 << w
        masks[v] = m
    return KripkeModel(frame, masks)


def truth_mask(model: KripkeModel, f: Formula) -> int:
    """Bitmask of worlds where f holds."""
    full = (1 << model.frame.worlds) - 1
    succ = successor_masks(model.frame)
    memo: dict[int, int] = {}

    def go(g: Formula) -> int:
        key = id(g)
        if key in memo:
            return memo[key]
        if isinstance(g, Var):
            out = model.var_mask(g.index)
        elif isinstance(g, Top):
            out = full
        elif isinstance(g, Bottom):
            out = 0
        elif isinstance(g, Not):
            out = full ^ go(g.child)
        elif isinstance(g, And):
            out = go(g.left) & go(g.right)
        elif isinstance(g, Or):
            out = go(g.left) | go(g.right)
        elif isinstance(g, Implies):
            out = (full ^ go(g.left)) | go(g.right)
        elif isinstance(g, Iff):
            out = full ^ (go(g.left) ^ go(g.right))
        elif isinstance(g, Box):
            inner = go(g.child)
            out = 0
            for w in range(model.frame.worlds):
                if succ[w] & ~inner == 0:
                    out |= 1 << w
        else:
            raise TypeError(f"not a modal formula node: {g!r}")
        memo[key] = out
        return out

    return go(f)


def eval_formula(model: KripkeModel, world: int, f: Formula) -> bool:
    if not 0 <= world < model.frame.worlds:
        raise FrameError(f"world {world} out of range")
    return bool(truth_mask(model, f) >> world & 1)


def truth_set(
    model: KripkeModel, world: int, universe: Iterable[Formula]
) -> frozenset[Formula]:
    """The members of universe true at the world."""
    return frozenset(f for f in universe if eval_formula(model, world, f))


# ---------------------------------------------------------------------------
# Frame validity

@dataclass(eq=False)
class Countermodel:
    model: KripkeModel
    world: int
    formula: Formula


def _sweep_dtype(n_worlds: int):
    if n_worlds <= 8:
        return np.uint8
    if n_worlds <= 16:
        return np.uint16
    return np.uint32


def find_countermodel(
    frame: Frame, f: Formula, max_bits: int = DEFAULT_MAX_BITS
) -> Countermodel | None:
    """Search all valuations of f's variables for a world refuting f.

    Returns None when the frame validates f.  The sweep costs
    2**(k * worlds) evaluations for k variables and refuses to start past
    max_bits total bits unless told otherwise.
    """
    vars_ = sorted(variables(f))
    n = frame.worlds
    k = len(vars_)
    if n == 0:
        return None
    full = (1 << n) - 1
    succ = successor_masks(frame)
    if k == 0:
        mask = truth_mask(KripkeModel(frame, {}), f)
        if mask == full:
            return None
        world = ((full ^ mask) & -(full ^ mask)).bit_length() - 1
        return Countermodel(KripkeModel(frame, {}), world, f)
    bits = k * n
    if bits > max_bits:
        raise SweepLimitError(
            f"{k} variables on {n} worlds needs a {bits}-bit sweep "
            f"(limit {max_bits}); raise max_bits to force it"
        )
    dtype = _sweep_dtype(n)
    count = 1 << bits
    idx = np.arange(count, dtype=np.uint64)
    var_arrays = {
        v: ((idx >> np.uint64(pos * n)) & np.uint64(full)).astype(dtype)
        for pos, v in enumerate(vars_)
    }
    del idx
    memo: dict[int, np.ndarray] = {}

    def go(g: Formula) -> np.ndarray:
        key = id(g)
        if key in memo:
            return memo[key]
        if isinstance(g, Var):
            out = var_arrays[g.index]
        elif isinstance(g, Top):
            out = np.full(count, full, dtype=dtype)
        elif isinstance(g, Bottom):
            out = np.zeros(count, dtype=dtype)
        elif isinstance(g, Not):
            out = go(g.child) ^ dtype(full)
        elif isinstance(g, And):
            out = go(g.left) & go(g.right)
        elif isinstance(g, Or):
            out = go(g.left) | go(g.right)
        elif isinstance(g, Implies):
            out = (go(g.left) ^ dtype(full)) | go(g.right)
        elif isinstance(g, Iff):
            out = (go(g.left) ^ go(g.right)) ^ dtype(full)
        elif isinstance(g, Box):
            inner = go(g.child)
            out = np.zeros(count, dtype=dtype)
            for w in range(n):
                need = succ[w]
                if need == 0:
                    out |= dtype(1 << w)
                else:
                    hit = (inner & dtype(need)) == dtype(need)
                    out |= hit.astype(dtype) << dtype(w)
        else:
            raise TypeError(f"not a modal formula node: {g!r}")
        memo[key] = out
        return out

    result = go(f)
    bad = np.nonzero(result != dtype(full))[0]
    if bad.size == 0:
        return None
    j = int(bad[0])
    missing = full ^ int(result[j])
    world = (missing & -missing).bit_length() - 1
    valuation = {v: (j >> (pos * n)) & full for pos, v in enumerate(vars_)}
    return Countermodel(KripkeModel(frame, valuation), world, f)


def frame_validates(
    frame: Frame, f: Formula, max_bits: int = DEFAULT_MAX_BITS
) -> bool:
    return find_countermodel(frame, f, max_bits) is None


# ---------------------------------------------------------------------------
# Bisimulation

def _prop_agree_pairs(m1: KripkeModel, m2: KripkeModel) -> set[tuple[int, int]]:
    if set(m1.valuation) != set(m2.valuation):
        raise ValueError("bisimulation needs models over the same variables")
    pairs = set()
    for u in range(m1.frame.worlds):
        for v in range(m2.frame.worlds):
            if all(
                (m1.valuation[p] >> u & 1) == (m2.valuation[p] >> v & 1)
                for p in m1.valuation
            ):
                pairs.add((u, v))
    return pairs


def _refine(
    pairs: set[tuple[int, int]], m1: KripkeModel, m2: KripkeModel
) -> set[tuple[int, int]]:
    s1 = successor_masks(m1.frame)
    s2 = successor_masks(m2.frame)
    out = set()
    for u, v in pairs:
        ok = True
        m = s1[u]
        while m and ok:
            u2 = (m & -m).bit_length() - 1
            m &= m - 1
            if not any((u2, v2) in pairs for v2 in _bits(s2[v])):
                ok = False
        m = s2[v]
        while m and ok:
            v2 = (m & -m).bit_length() - 1
            m &= m - 1
            if not any((u2, v2) in pairs for u2 in _bits(s1[u])):
                ok = False
        if ok:
            out.add((u, v))
    return out


def _bits(mask: int):
    while mask:
        yield (mask & -mask).bit_length() - 1
        mask &= mask - 1


def largest_bisimulation(
    m1: KripkeModel, m2: KripkeModel
) -> frozenset[tuple[int, int]]:
    """Greatest bisimulation between two models, as a set of world pairs.
    Every pair agrees on all variables and satisfies back and forth."""
    pairs = _prop_agree_pairs(m1, m2)
    while True:
        refined = _refine(pairs, m1, m2)
        if refined == pairs:
            return frozenset(pairs)
        pairs = refined


def depth_bisimulation(
    m1: KripkeModel, m2: KripkeModel, depth: int
) -> frozenset[tuple[int, int]]:
    """Depth-bounded bisimilarity: pairs related here agree on every
    formula of modal depth <= depth over the models' variables."""
    pairs = _prop_agree_pairs(m1, m2)
    for _ in range(depth):
        pairs = _refine(pairs, m1, m2)
    return frozenset(pairs)


# ---------------------------------------------------------------------------
# Removing the top of a pre-Boolean-algebra model

def topless_expansion(model: KripkeModel) -> tuple[KripkeModel, dict[int, int]]:
    """Rebuild a pre-Boolean-algebra model over the lattice with one more
    atom and no top.

    Old worlds keep their indices and values.  Each strictly-new lattice
    node carries a fresh copy of the old top cluster; copied worlds copy
    their source's values.  Returns the new model and the map sending every
    new-model world to the old world it mirrors (identity on old worlds).
    """
    frame = model.frame
    q = quotient(frame)
    assign = powerset_structure(q)
    if assign is None:
        raise FrameError("topless expansion needs a pre-Boolean-algebra frame")
    atoms = sorted(frozenset().union(*assign.values()) if q.n_clusters > 1 else [])
    k = len(atoms)
    atom_pos = {a: i for i, a in enumerate(atoms)}
    # old world -> its lattice node, coded as a bitmask over atom positions
    node_of = []
    for w in range(frame.worlds):
        s = assign[q.cluster_of[w]]
        node_of.append(sum(1 << atom_pos[a] for a in s))
    top_cluster = next(c for c in range(q.n_clusters) if len(assign[c]) == k)
    top_worlds = list(q.members[top_cluster])
    # new nodes: every proper subset of the old atoms, plus the new atom
    new_bit = 1 << k
    worlds = list(range(frame.worlds))
    origin = {w: w for w in worlds}
    for code in range((1 << k) - 1):
        for t in top_worlds:
            w = len(worlds)
            worlds.append(w)
            node_of.append(code | new_bit)
            origin[w] = t
    pairs = [
        (i, j)
        for i in worlds
        for j in worlds
        if node_of[i] & ~node_of[j] == 0
    ]
    valuation = {}
    for p, mask in model.valuation.items():
        m = 0
        for w in worlds:
            if mask >> origin[w] & 1:
                m |= 1 << w
        valuation[p] = m
    new_frame = Frame(len(worlds), frozenset(pairs))
    return KripkeModel(new_frame, valuation), origin


def toplessify(model: KripkeModel) -> KripkeModel:
    """The topless rebuild alone; see topless_expansion for the pairing."""
    return topless_expansion(model)[0]


# ---------------------------------------------------------------------------
# Describing a frame inside the language

def frame_description(frame: Frame, base: int = 0) -> Formula:
    """Formula forced exactly by models that look like this frame, using
    one fresh variable per world starting at index base.

    Conjoins, under one necessity: every world's marker excludes the
    others and some marker always holds; each marker sees exactly the
    markers its world sees.  The initial world's marker is then asserted
    outside the box.  World 0 must be below every world.
    """
    from .formula import Diamond, conj, disj

    n = frame.worlds
    if n == 0:
        raise FrameError("empty frame")
    if any((0, u) not in frame.rel for u in range(n)):
        raise FrameError("world 0 must be an initial world (below all worlds)")
    marker = [Var(base + w) for w in range(n)]
    exactly_one = disj(
        [
            conj([marker[w]] + [Not(marker[u]) for u in range(n) if u != w])
            for w in range(n)
        ]
    )
    seen_right = conj(
        [
            Implies(
                marker[w],
                conj(
                    [
                        Diamond(marker[u])
                        if (w, u) in frame.rel
                        else Not(Diamond(marker[u]))
                        for u in range(n)
                    ]
                ),
            )
            for w in range(n)
        ]
    )
    return And(Box(And(exactly_one, seen_right)), marker[0])


# the construction above is the classical frame formula of Jankov and Fine
jankov_fine = frame_description


# ---------------------------------------------------------------------------
# Serialization

def model_to_json(model: KripkeModel) -> dict:
    doc = frame_to_json(model.frame)
    doc["val"] = {
        f"p{v}": [w for w in range(model.frame.worlds) if mask >> w & 1]
        for v, mask in sorted(model.valuation.items())
    }
    return doc


def model_from_json(doc: Mapping) -> KripkeModel:
    frame = frame_from_json(doc)
    val: dict[int, list[int]] = {}
    for name, worlds in doc.get("val", {}).items():
        if not (name.startswith("p") and name[1:].isdigit()):
            raise FrameError(f"valuation key {name!r} is not of the form p<index>")
        val[int(name[1:])] = [int(w) for w in worlds]
    return make_model(frame, val)


def countermodel_to_json(cm: Countermodel) -> dict:
    doc = model_to_json(cm.model)
    doc["world"] = cm.world
    doc["formula"] = pretty(cm.formula)
    return doc
