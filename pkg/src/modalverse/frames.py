"""Finite frames: relations on worlds, cluster structure, frame classes.

A frame is a finite set of worlds 0..n-1 with an arbitrary binary relation.
The recognizers and enumerators below deal with the reflexive-transitive
case and its refinements: linear pre-orders, pre-Boolean-algebras (cluster
quotient isomorphic to a powerset lattice), the same with the top deleted,
and single clusters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, Mapping, Sequence


class FrameError(ValueError):
    pass


# Per-world labels for frames built from a subset lattice: (atoms, copy).
Label = tuple[tuple[int, ...], int]


@dataclass(frozen=True)
class Frame:
    worlds: int
    rel: frozenset[tuple[int, int]]
    labels: tuple[Label, ...] | None = None

    def __post_init__(self):
        if self.worlds < 0:
            raise FrameError("negative world count")
        for i, j in self.rel:
            if not (0 <= i < self.worlds and 0 <= j < self.worlds):
                raise FrameError(f"edge ({i},{j}) out of range")
        if self.labels is not None and len(self.labels) != self.worlds:
            raise FrameError("label count does not match world count")

    def sees(self, i: int, j: int) -> bool:
        return (i, j) in self.rel


def make_frame(
    worlds: int,
    pairs: Iterable[tuple[int, int]],
    labels: Sequence[Label] | None = None,
) -> Frame:
    return Frame(worlds, frozenset(pairs), tuple(labels) if labels else None)


@lru_cache(maxsize=2048)
def successor_masks(frame: Frame) -> tuple[int, ...]:
    """Bitmask of successors per world."""
    masks = [0] * frame.worlds
    for i, j in frame.rel:
        masks[i] |= 1 << j
    return tuple(masks)


def is_reflexive(frame: Frame) -> bool:
    return all((i, i) in frame.rel for i in range(frame.worlds))


def is_transitive(frame: Frame) -> bool:
    succ = successor_masks(frame)
    for i in range(frame.worlds):
        reach = succ[i]
        m = reach
        while m:
            j = (m & -m).bit_length() - 1
            m &= m - 1
            if succ[j] & ~reach:
                return False
    return True


def is_preorder(frame: Frame) -> bool:
    return is_reflexive(frame) and is_transitive(frame)


# ---------------------------------------------------------------------------
# Cluster quotient

@dataclass(frozen=True)
class ClusterQuotient:
    """Partition of a pre-order into mutual-reachability clusters.

    cluster_of[w] is the cluster id of world w; ids are dense, ordered by
    smallest member world.  strict_order holds pairs (a, b) with a < b in
    the induced partial order, a != b.
    """

    cluster_of: tuple[int, ...]
    members: tuple[tuple[int, ...], ...]
    strict_order: frozenset[tuple[int, int]]

    @property
    def n_clusters(self) -> int:
        return len(self.members)

    def leq(self, a: int, b: int) -> bool:
        return a == b or (a, b) in self.strict_order


def quotient(frame: Frame) -> ClusterQuotient:
    if not is_preorder(frame):
        raise FrameError("cluster quotient needs a pre-order")
    succ = successor_masks(frame)
    n = frame.worlds
    rep: dict[tuple[int, int], int] = {}
    cluster_of = [0] * n
    members: list[list[int]] = []
    for w in range(n):
        # worlds are in one cluster iff they have the same up-set and see
        # each other; in a pre-order equal up-sets already imply that
        key = succ[w]
        found = None
        for cid, ms in enumerate(members):
            v = ms[0]
            if succ[v] == key and frame.sees(w, v) and frame.sees(v, w):
                found = cid
                break
        if found is None:
            members.append([w])
            cluster_of[w] = len(members) - 1
        else:
            members[found].append(w)
            cluster_of[w] = found
    strict = set()
    for a, ms_a in enumerate(members):
        for b, ms_b in enumerate(members):
            if a != b and frame.sees(ms_a[0], ms_b[0]):
                strict.add((a, b))
    return ClusterQuotient(
        tuple(cluster_of),
        tuple(tuple(ms) for ms in members),
        frozenset(strict),
    )


# ---------------------------------------------------------------------------
# Powerset-lattice recognition

def powerset_structure(q: ClusterQuotient) -> dict[int, frozenset[int]] | None:
    """If the cluster order is isomorphic to the inclusion order on all
    subsets of a finite set, return the witnessing map cluster -> atom set
    (atoms named by their cluster ids).  Otherwise None.
    """
    n = q.n_clusters
    bottoms = [c for c in range(n) if all(q.leq(c, d) for d in range(n))]
    if len(bottoms) != 1:
        return None
    bottom = bottoms[0]
    above = [c for c in range(n) if c != bottom]
    atoms = [
        c
        for c in above
        if not any(q.leq(d, c) and d != c and d != bottom for d in above)
    ]
    k = len(atoms)
    if n != 1 << k:
        return None
    assign: dict[int, frozenset[int]] = {}
    for c in range(n):
        assign[c] = frozenset(a for a in atoms if q.leq(a, c))
    if len(set(assign.values())) != n:
        return None
    for c in range(n):
        for d in range(n):
            if q.leq(c, d) != (assign[c] <= assign[d]):
                return None
    return assign


def topless_structure(q: ClusterQuotient) -> dict[int, frozenset[int]] | None:
    """Like powerset_structure but for the lattice of proper subsets of a
    set with at least one element (the full set removed)."""
    n = q.n_clusters
    # adjoin a virtual top above everything and test for a full powerset
    top = n
    strict = set(q.strict_order) | {(c, top) for c in range(n)}
    q2 = ClusterQuotient(
        tuple(range(n + 1)),
        tuple((c,) for c in range(n + 1)),
        frozenset(strict),
    )
    assign = powerset_structure(q2)
    if assign is None:
        return None
    return {c: assign[c] for c in range(n)}


class FrameClass(Enum):
    REFLEXIVE_TRANSITIVE = "preorder"
    SINGLE_CLUSTER = "cluster"
    LINEAR_PREORDER = "linear"
    PRE_BOOLEAN_ALGEBRA = "preba"
    TOPLESS_PRE_BOOLEAN_ALGEBRA = "topless"


def classify(frame: Frame, cls: FrameClass) -> bool:
    if not is_preorder(frame):
        return False
    if cls is FrameClass.REFLEXIVE_TRANSITIVE:
        return True
    q = quotient(frame)
    if cls is FrameClass.SINGLE_CLUSTER:
        return q.n_clusters == 1
    if cls is FrameClass.LINEAR_PREORDER:
        return all(
            q.leq(a, b) or q.leq(b, a)
            for a in range(q.n_clusters)
            for b in range(q.n_clusters)
        )
    if cls is FrameClass.PRE_BOOLEAN_ALGEBRA:
        return powerset_structure(q) is not None
    if cls is FrameClass.TOPLESS_PRE_BOOLEAN_ALGEBRA:
        return topless_structure(q) is not None
    raise FrameError(f"unknown frame class {cls!r}")


# ---------------------------------------------------------------------------
# Construction

def cluster_frame(sizes: Sequence[int],
                  strict: Iterable[tuple[int, int]] | None = None) -> Frame:
    """Frame whose clusters have the given sizes; cluster a sees cluster b
    when a == b or (a, b) is in strict.  Worlds of cluster a form a
    consecutive block, blocks in cluster order."""
    strict = frozenset(strict or ())
    offsets = []
    total = 0
    for s in sizes:
        if s < 1:
            raise FrameError("cluster sizes must be positive")
        offsets.append(total)
        total += s
    pairs = []
    for a, sa in enumerate(sizes):
        for b, sb in enumerate(sizes):
            if a == b or (a, b) in strict:
                for i in range(sa):
                    for j in range(sb):
                        pairs.append((offsets[a] + i, offsets[b] + j))
    return make_frame(total, pairs)


def powerset_frame(
    atoms: int,
    cluster_sizes: Mapping[frozenset[int], int] | int = 1,
    topless: bool = False,
) -> Frame:
    """Frame ordered like the subsets of {0..atoms-1} by inclusion, one
    cluster per subset.  With topless=True the full set is omitted (atoms
    must then be at least 1).  cluster_sizes maps each subset to its
    cluster size; an int means that size everywhere.  Subsets are laid out
    in binary order and every world is labeled (subset, copy).
    """
    if atoms < 0:
        raise FrameError("negative atom count")
    if topless and atoms < 1:
        raise FrameError("a topless subset lattice needs at least one atom")
    n_subsets = 1 << atoms
    codes = list(range(n_subsets - 1 if topless else n_subsets))
    subsets = [frozenset(i for i in range(atoms) if code >> i & 1) for code in codes]
    if isinstance(cluster_sizes, int):
        sizes = {s: cluster_sizes for s in subsets}
    else:
        sizes = dict(cluster_sizes)
        missing = [s for s in subsets if s not in sizes]
        if missing:
            raise FrameError(f"cluster size missing for subset {sorted(missing[0])}")
    strict = {
        (a, b)
        for a, sa in enumerate(subsets)
        for b, sb in enumerate(subsets)
        if a != b and sa < sb
    }
    frame = cluster_frame([sizes[s] for s in subsets], strict=strict)
    labels = []
    for s in subsets:
        for copy in range(sizes[s]):
            labels.append((tuple(sorted(s)), copy))
    return Frame(frame.worlds, frame.rel, tuple(labels))


def pad_clusters(frame: Frame, target: int) -> tuple[Frame, tuple[int, ...]]:
    """Grow every cluster to exactly target worlds by cloning members.

    Original worlds keep their indices; clones are appended.  Returns the
    padded frame and the origin of every world in it.
    """
    q = quotient(frame)
    for ms in q.members:
        if len(ms) > target:
            raise FrameError(f"cluster of size {len(ms)} exceeds target {target}")
    origin = list(range(frame.worlds))
    for ms in q.members:
        for _ in range(target - len(ms)):
            origin.append(ms[0])
    pairs = [
        (i, j)
        for i in range(len(origin))
        for j in range(len(origin))
        if frame.sees(origin[i], origin[j])
    ]
    labels = None
    if frame.labels is not None:
        labels = list(frame.labels)
        next_copy: dict[tuple[int, ...], int] = {}
        for lab in frame.labels:
            next_copy[lab[0]] = max(next_copy.get(lab[0], -1), lab[1])
        for w in origin[frame.worlds :]:
            s = frame.labels[w][0]
            next_copy[s] += 1
            labels.append((s, next_copy[s]))
    return make_frame(len(origin), pairs, labels), tuple(origin)


# ---------------------------------------------------------------------------
# Enumeration up to isomorphism, by canonical structural parameters

def _compositions(total: int, parts: int) -> Iterable[tuple[int, ...]]:
    """Ordered sequences of positive integers with the given sum, lex order."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _all_compositions(total: int) -> Iterable[tuple[int, ...]]:
    for parts in range(1, total + 1):
        yield from _compositions(total, parts)


@lru_cache(maxsize=None)
def _canonical_posets(k: int) -> tuple[frozenset[tuple[int, int]], ...]:
    """Strict partial orders on k labeled points, one per isomorphism type.

    Each unordered pair independently gets <, > or incomparable; survivors
    of the transitivity filter are deduplicated by the minimum relabeling.
    """
    if k == 0:
        return (frozenset(),)
    pairs = list(itertools.combinations(range(k), 2))
    seen = set()
    out = []
    for choice in itertools.product((0, 1, 2), repeat=len(pairs)):
        succ = [0] * k
        for (i, j), c in zip(pairs, choice):
            if c == 1:
                succ[i] |= 1 << j
            elif c == 2:
                succ[j] |= 1 << i
        ok = True
        for i in range(k):
            m = succ[i]
            while m:
                j = (m & -m).bit_length() - 1
                m &= m - 1
                if succ[j] & ~succ[i]:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        strict = frozenset(
            (i, j) for i in range(k) for j in range(k) if succ[i] >> j & 1
        )
        canon = min(
            tuple(sorted((perm[i], perm[j]) for i, j in strict))
            for perm in itertools.permutations(range(k))
        )
        if canon not in seen:
            seen.add(canon)
            out.append(frozenset(canon))
    return tuple(sorted(out, key=lambda s: sorted(s)))


def _poset_automorphisms(k: int, strict: frozenset[tuple[int, int]]):
    for perm in itertools.permutations(range(k)):
        if all(((perm[i], perm[j]) in strict) == ((i, j) in strict)
               for i in range(k) for j in range(k) if i != j):
            yield perm


def _sizes_up_to_aut(
    k: int, strict: frozenset[tuple[int, int]], total: int
) -> Iterable[tuple[int, ...]]:
    auts = list(_poset_automorphisms(k, strict))
    seen = set()
    for sizes in _compositions(total, k):
        canon = min(tuple(sizes[perm.index(i)] for i in range(k)) for perm in auts) \
            if len(auts) > 1 else sizes
        if canon not in seen:
            seen.add(canon)
            yield sizes


def _perm_subsets(perm: Sequence[int], code: int, atoms: int) -> int:
    out = 0
    for i in range(atoms):
        if code >> i & 1:
            out |= 1 << perm[i]
    return out


def _powerset_size_maps(
    atoms: int, total: int, topless: bool
) -> Iterable[dict[frozenset[int], int]]:
    """Cluster-size assignments over the subset lattice, up to permuting
    the atoms."""
    n_nodes = (1 << atoms) - 1 if topless else 1 << atoms
    if n_nodes == 0 or n_nodes > total:
        return
    perms = list(itertools.permutations(range(atoms)))
    seen = set()
    for sizes in _compositions(total, n_nodes):
        canon = min(
            tuple(sizes[_perm_subsets(perm, code, atoms)] for code in range(n_nodes))
            for perm in perms
        )
        if canon in seen:
            continue
        seen.add(canon)
        yield {
            frozenset(i for i in range(atoms) if code >> i & 1): sizes[code]
            for code in range(n_nodes)
        }


def enumerate_frames(cls: FrameClass, n_worlds: int) -> list[Frame]:
    """All frames of the class with exactly n_worlds worlds, one per
    isomorphism type, in a deterministic order."""
    if n_worlds < 1:
        return []
    out: list[Frame] = []
    if cls is FrameClass.SINGLE_CLUSTER:
        out.append(cluster_frame([n_worlds]))
    elif cls is FrameClass.LINEAR_PREORDER:
        for sizes in _all_compositions(n_worlds):
            k = len(sizes)
            strict = {(a, b) for a in range(k) for b in range(k) if a < b}
            out.append(cluster_frame(sizes, strict=strict))
    elif cls is FrameClass.PRE_BOOLEAN_ALGEBRA:
        atoms = 0
        while (1 << atoms) <= n_worlds:
            for sizes in _powerset_size_maps(atoms, n_worlds, topless=False):
                out.append(powerset_frame(atoms, sizes))
            atoms += 1
        return out
    elif cls is FrameClass.TOPLESS_PRE_BOOLEAN_ALGEBRA:
        atoms = 1
        while (1 << atoms) - 1 <= n_worlds:
            for sizes in _powerset_size_maps(atoms, n_worlds, topless=True):
                out.append(powerset_frame(atoms, sizes, topless=True))
            atoms += 1
        return out
    elif cls is FrameClass.REFLEXIVE_TRANSITIVE:
        for k in range(1, n_worlds + 1):
            for strict in _canonical_posets(k):
                for sizes in _sizes_up_to_aut(k, strict, n_worlds):
                    out.append(cluster_frame(sizes, strict=strict))
    else:
        raise FrameError(f"unknown frame class {cls!r}")
    return out


def enumerate_frames_upto(cls: FrameClass, max_worlds: int) -> list[Frame]:
    out = []
    for n in range(1, max_worlds + 1):
        out.extend(enumerate_frames(cls, n))
    return out


# ---------------------------------------------------------------------------
# Serialization

def frame_to_json(frame: Frame) -> dict:
    doc: dict = {
        "worlds": frame.worlds,
        "rel": [list(p) for p in sorted(frame.rel)],
    }
    if frame.labels is not None:
        doc["labels"] = {
            str(w): [list(lab[0]), lab[1]] for w, lab in enumerate(frame.labels)
        }
    return doc


def frame_from_json(doc: Mapping) -> Frame:
    try:
        worlds = int(doc["worlds"])
        rel = [(int(i), int(j)) for i, j in doc["rel"]]
    except (KeyError, TypeError, ValueError) as e:
        raise FrameError(f"bad frame document: {e}") from None
    labels = None
    if "labels" in doc:
        raw = doc["labels"]
        labels = [None] * worlds
        for key, val in raw.items():
            w = int(key)
            labels[w] = (tuple(int(a) for a in val[0]), int(val[1]))
        if any(lab is None for lab in labels):
            raise FrameError("labels must cover every world")
    return make_frame(worlds, rel, labels)


def frame_to_dot(frame: Frame, name: str = "frame") -> str:
    """DOT text: one node per world, reflexive loops suppressed, clusters
    of a pre-order grouped on the same rank."""
    lines = [f"digraph {name} {{", "  rankdir=BT;", "  node [shape=circle];"]
    if is_preorder(frame):
        q = quotient(frame)
        for ms in q.members:
            inner = " ".join(f"w{w};" for w in ms)
            lines.append(f"  {{ rank=same; {inner} }}")
    else:
        for w in range(frame.worlds):
            lines.append(f"  w{w};")
    for i, j in sorted(frame.rel):
        if i != j:
            lines.append(f"  w{i} -> w{j};")
    lines.append("}")
    return "\n".join(lines) + "\n"
