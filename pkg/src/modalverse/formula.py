"""Syntax of basic modal propositional logic.

Formulas are immutable trees built from variables, constants, the boolean
connectives and a single necessity operator.  Possibility is not a node kind:
``Diamond(x)`` builds ``Not(Box(Not(x)))`` and the printer folds that shape
back to ``<>`` on output.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping


class ParseError(ValueError):
    """Malformed formula text.  ``position`` is a character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class Formula:
    """Base class for formula nodes; all subclasses are frozen dataclasses."""

    __slots__ = ()

    def __str__(self) -> str:
        return pretty(self)


@dataclass(frozen=True, slots=True)
class Var(Formula):
    index: int


@dataclass(frozen=True, slots=True)
class Top(Formula):
    pass


@dataclass(frozen=True, slots=True)
class Bottom(Formula):
    pass


@dataclass(frozen=True, slots=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True, slots=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Box(Formula):
    child: Formula


def Diamond(child: Formula) -> Formula:
    """Possibility, stored in expanded form."""
    return Not(Box(Not(child)))


def is_diamond(f: Formula) -> bool:
    return (
        isinstance(f, Not)
        and isinstance(f.child, Box)
        and isinstance(f.child.child, Not)
    )


def diamond_child(f: Formula) -> Formula:
    assert is_diamond(f)
    return f.child.child.child


def conj(parts: Iterable[Formula]) -> Formula:
    """Left-nested conjunction; the empty conjunction is Top."""
    parts = list(parts)
    if not parts:
        return Top()
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(parts: Iterable[Formula]) -> Formula:
    """Left-nested disjunction; the empty disjunction is Bottom."""
    parts = list(parts)
    if not parts:
        return Bottom()
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


# ---------------------------------------------------------------------------
# Traversals

def variables(f: Formula) -> frozenset[int]:
    """Indices of all variables occurring in f."""
    out: set[int] = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Var):
            out.add(g.index)
        elif isinstance(g, (Not, Box)):
            stack.append(g.child)
        elif isinstance(g, (And, Or, Implies, Iff)):
            stack.append(g.left)
            stack.append(g.right)
    return frozenset(out)


def modal_depth(f: Formula) -> int:
    if isinstance(f, Box):
        return 1 + modal_depth(f.child)
    if isinstance(f, Not):
        return modal_depth(f.child)
    if isinstance(f, (And, Or, Implies, Iff)):
        return max(modal_depth(f.left), modal_depth(f.right))
    # variables, constants and foreign leaf atoms
    return 0


def subformulas(f: Formula) -> Iterator[Formula]:
    """All subformulas including f itself, postorder, with repeats."""
    if isinstance(f, (Not, Box)):
        yield from subformulas(f.child)
    elif isinstance(f, (And, Or, Implies, Iff)):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
    yield f


def subformula_closure(formulas: Iterable[Formula]) -> frozenset[Formula]:
    out: set[Formula] = set()
    for f in formulas:
        out.update(subformulas(f))
    return frozenset(out)


def substitute(f: Formula, mapping: Mapping[int, Formula]) -> Formula:
    """Simultaneous substitution of formulas for variable indices."""
    if isinstance(f, Var):
        return mapping.get(f.index, f)
    if isinstance(f, Not):
        return Not(substitute(f.child, mapping))
    if isinstance(f, Box):
        return Box(substitute(f.child, mapping))
    if isinstance(f, (And, Or, Implies, Iff)):
        return type(f)(substitute(f.left, mapping), substitute(f.right, mapping))
    return f


# ---------------------------------------------------------------------------
# Tokenizer, shared with the control-sentence syntax

_SYMBOLS = ("<->", "->", "[G]", "<G>", "[]", "<>", ">=", "&", "|", "~", "(", ")")


def tokenize(text: str) -> list[tuple[str, str, int]]:
    """Break text into (kind, value, position) triples.

    Kinds: 'sym', 'ident', 'num', 'eof'.  Symbols are matched longest-first,
    so '<->' never splits into '<' '->'.
    """
    out = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        for s in _SYMBOLS:
            if text.startswith(s, i):
                out.append(("sym", s, i))
                i += len(s)
                break
        else:
            if c.isalpha() or c == "_":
                j = i + 1
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                out.append(("ident", text[i:j], i))
                i = j
            elif c.isdigit():
                j = i + 1
                while j < n and text[j].isdigit():
                    j += 1
                out.append(("num", text[i:j], i))
                i = j
            else:
                raise ParseError(f"unexpected character {c!r}", i)
    out.append(("eof", "", n))
    return out


class PrecedenceParser:
    """Recursive-descent core over the shared token stream.

    Precedence, loosest to tightest: <-> , -> (both right-associative),
    | , & (left-associative), then the unary prefixes.  Subclasses supply
    the modal token spellings and the atom rule.
    """

    box_token = "[]"
    dia_token = "<>"

    def __init__(self, tokens: list[tuple[str, str, int]]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def advance(self) -> tuple[str, str, int]:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect_sym(self, sym: str) -> None:
        kind, value, at = self.peek()
        if kind != "sym" or value != sym:
            raise ParseError(f"expected {sym!r}", at)
        self.advance()

    def at_sym(self, sym: str) -> bool:
        kind, value, _ = self.peek()
        return kind == "sym" and value == sym

    def parse(self):
        f = self.parse_iff()
        kind, value, at = self.peek()
        if kind != "eof":
            raise ParseError(f"trailing input {value!r}", at)
        return f

    def parse_iff(self):
        left = self.parse_implies()
        if self.at_sym("<->"):
            self.advance()
            return self.make_iff(left, self.parse_iff())
        return left

    def parse_implies(self):
        left = self.parse_or()
        if self.at_sym("->"):
            self.advance()
            return self.make_implies(left, self.parse_implies())
        return left

    def parse_or(self):
        out = self.parse_and()
        while self.at_sym("|"):
            self.advance()
            out = self.make_or(out, self.parse_and())
        return out

    def parse_and(self):
        out = self.parse_unary()
        while self.at_sym("&"):
            self.advance()
            out = self.make_and(out, self.parse_unary())
        return out

    def parse_unary(self):
        if self.at_sym("~"):
            self.advance()
            return self.make_not(self.parse_unary())
        if self.at_sym(self.box_token):
            self.advance()
            return self.make_box(self.parse_unary())
        if self.at_sym(self.dia_token):
            self.advance()
            return self.make_diamond(self.parse_unary())
        return self.parse_atom()

    # node factories, shared by both syntaxes
    make_not = staticmethod(Not)
    make_and = staticmethod(And)
    make_or = staticmethod(Or)
    make_implies = staticmethod(Implies)
    make_iff = staticmethod(Iff)
    make_box = staticmethod(Box)
    make_diamond = staticmethod(Diamond)

    def parse_atom(self):
        raise NotImplementedError


class _FormulaParser(PrecedenceParser):
    def __init__(self, tokens):
        super().__init__(tokens)
        # explicit p<digits> atoms claim their indices up front; other
        # identifiers are interned to the remaining indices in first-use order
        taken = set()
        for kind, value, _ in tokens:
            if kind == "ident" and _explicit_index(value) is not None:
                taken.add(_explicit_index(value))
        self._taken = taken
        self._interned: dict[str, int] = {}
        self._next_free = 0

    def _intern(self, name: str) -> int:
        if name in self._interned:
            return self._interned[name]
        while self._next_free in self._taken:
            self._next_free += 1
        self._interned[name] = self._next_free
        self._taken.add(self._next_free)
        return self._interned[name]

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
            idx = _explicit_index(value)
            if idx is None:
                idx = self._intern(value)
            return Var(idx)
        raise ParseError("expected an atom", at)


def _explicit_index(name: str) -> int | None:
    if len(name) > 1 and name[0] == "p" and name[1:].isdigit():
        return int(name[1:])
    return None


def parse(text: str) -> Formula:
    """Parse a formula from text.  Raises ParseError with an offset."""
    return _FormulaParser(tokenize(text)).parse()


# ---------------------------------------------------------------------------
# Printer

# precedence levels: iff 1, implies 2, or 3, and 4, unary 5, atoms 6
_BIN_LEVEL = {Iff: 1, Implies: 2, Or: 3, And: 4}
_BIN_SYM = {Iff: "<->", Implies: "->", Or: "|", And: "&"}
_RIGHT_ASSOC = (Iff, Implies)


def render(
    f,
    context: int = 0,
    *,
    atom: Callable[[object], str],
    box_sym: str = "[]",
    dia_sym: str = "<>",
) -> str:
    """Minimal-parenthesis rendering; ``atom`` handles the leaf nodes."""
    cls = type(f)
    if cls in _BIN_LEVEL:
        level = _BIN_LEVEL[cls]
        if cls in _RIGHT_ASSOC:
            lc, rc = level + 1, level
        else:
            lc, rc = level, level + 1
        left = render(f.left, lc, atom=atom, box_sym=box_sym, dia_sym=dia_sym)
        right = render(f.right, rc, atom=atom, box_sym=box_sym, dia_sym=dia_sym)
        text = f"{left} {_BIN_SYM[cls]} {right}"
        return f"({text})" if level < context else text
    if is_diamond(f):
        return dia_sym + render(
            diamond_child(f), 5, atom=atom, box_sym=box_sym, dia_sym=dia_sym
        )
    if cls is Not:
        return "~" + render(f.child, 5, atom=atom, box_sym=box_sym, dia_sym=dia_sym)
    if cls is Box:
        return box_sym + render(
            f.child, 5, atom=atom, box_sym=box_sym, dia_sym=dia_sym
        )
    if cls is Top:
        return "true"
    if cls is Bottom:
        return "false"
    return atom(f)


def _var_atom(f) -> str:
    if isinstance(f, Var):
        return f"p{f.index}"
    raise TypeError(f"not a modal formula node: {f!r}")


def pretty(f: Formula) -> str:
    """Canonical text form; parse(pretty(f)) == f."""
    return render(f, atom=_var_atom)


# ---------------------------------------------------------------------------
# Bounded generation, used by verification sweeps and tests

def formula_family(
    n_vars: int, max_size: int, max_depth: int | None = None
) -> list[Formula]:
    """All formulas over the first n_vars variables with at most max_size
    connectives, optionally capped at a given modal depth.  Deterministic
    order.  Grows quickly with max_size; callers keep it small.
    """
    atoms: list[Formula] = [Var(i) for i in range(n_vars)] + [Top(), Bottom()]
    by_size: list[list[Formula]] = [atoms]
    for size in range(1, max_size + 1):
        layer: list[Formula] = []
        for g in by_size[size - 1]:
            layer.append(Not(g))
            layer.append(Box(g))
        for lsize in range(size):
            rsize = size - 1 - lsize
            for left in by_size[lsize]:
                for right in by_size[rsize]:
                    layer.append(And(left, right))
                    layer.append(Or(left, right))
                    layer.append(Implies(left, right))
                    layer.append(Iff(left, right))
        by_size.append(layer)
    out = [f for layer in by_size for f in layer]
    if max_depth is not None:
        out = [f for f in out if modal_depth(f) <= max_depth]
    return out


def random_formula(
    rng: random.Random, max_depth: int, n_vars: int, max_nodes: int = 25
) -> Formula:
    """Random formula with modal depth at most max_depth.  A node budget
    keeps the boolean skeleton from running away."""
    budget = [max_nodes]

    def leaf() -> Formula:
        return rng.choice([Var(rng.randrange(n_vars)), Top(), Bottom()])

    def go(depth: int) -> Formula:
        if budget[0] <= 0:
            return leaf()
        budget[0] -= 1
        kinds = ["leaf", "not", "and", "or", "implies", "iff"]
        weights = [2, 2, 2, 2, 2, 1]
        if depth > 0:
            kinds += ["box", "dia"]
            weights += [3, 3]
        kind = rng.choices(kinds, weights=weights)[0]
        if kind == "leaf":
            return leaf()
        if kind == "not":
            return Not(go(depth))
        if kind == "box":
            return Box(go(depth - 1))
        if kind == "dia":
            return Diamond(go(depth - 1))
        cls = {"and": And, "or": Or, "implies": Implies, "iff": Iff}[kind]
        return cls(go(depth), go(depth))

    return go(max_depth)
