"""Query and database model: types, text formats, structural accessors.

Queries are conjunctions of relational atoms over variables, with an ordered
list of free (output) variables; everything else is existentially quantified.
Databases are finite sets of facts whose values are either atomic tokens or
tagged pairs ``pair(data, var)``.  Both are immutable after construction and
safe to share across threads.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence, Union

DEFAULT_MAX_VARS = 32
DEFAULT_MAX_ATOMS = 32

RELATION_NAME_RE = re.compile(r"[A-Z][A-Za-z0-9_]*$")
VARIABLE_NAME_RE = re.compile(r"[a-z][A-Za-z0-9_]*$")
VALUE_TOKEN_RE = re.compile(r"[a-z0-9_#]+$")


class QueryModelError(Exception):
    """Base class for model-level errors."""


class ParseError(QueryModelError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ArityMismatchError(QueryModelError):
    pass


class LimitExceededError(QueryModelError):
    pass


def max_vars_limit() -> int:
    """Structural size limit; CQSJ_MAX_VARS overrides the default."""
    raw = os.environ.get("CQSJ_MAX_VARS")
    if raw is None:
        return DEFAULT_MAX_VARS
    return int(raw)


class Pair(NamedTuple):
    """A tagged value ``pair(data, var)``; nesting depth of data is <= 1."""

    data: "Value"
    var: str


Value = Union[str, Pair]
FactTuple = tuple  # tuple[Value, ...]


def serialize_value(value: Value) -> str:
    if isinstance(value, Pair):
        return f"pair({serialize_value(value.data)},{value.var})"
    return value


@dataclass(frozen=True, order=True)
class RelationSymbol:
    name: str
    arity: int


@dataclass(frozen=True, order=True)
class Atom:
    symbol: RelationSymbol
    args: tuple  # tuple[str, ...], repeats allowed

    def __post_init__(self):
        if len(self.args) != self.symbol.arity:
            raise ArityMismatchError(
                f"atom {self.symbol.name} expects {self.symbol.arity} args, got {len(self.args)}"
            )

    @property
    def var_set(self) -> frozenset:
        return frozenset(self.args)

    def rename(self, mapping: dict) -> "Atom":
        return Atom(self.symbol, tuple(mapping.get(v, v) for v in self.args))

    def __str__(self) -> str:
        return f"{self.symbol.name}({','.join(self.args)})"


def atom(name: str, *args: str) -> Atom:
    return Atom(RelationSymbol(name, len(args)), tuple(args))


@dataclass(frozen=True)
class Query:
    """A conjunctive query.

    ``atoms`` are kept sorted and deduplicated (set semantics); ``free_vars``
    is the ordered output tuple.  A query is *full* when every variable is
    free and *Boolean* when none is.
    """

    atoms: tuple  # tuple[Atom, ...], sorted, no duplicates
    free_vars: tuple  # tuple[str, ...], no duplicates

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(sorted(set(self.atoms))))
        seen_arities = {}
        for a in self.atoms:
            prev = seen_arities.setdefault(a.symbol.name, a.symbol.arity)
            if prev != a.symbol.arity:
                raise ArityMismatchError(
                    f"symbol {a.symbol.name} used with arities {prev} and {a.symbol.arity}"
                )
        if len(set(self.free_vars)) != len(self.free_vars):
            raise QueryModelError("duplicate free variable")
        missing = set(self.free_vars) - set(self.all_vars)
        if missing:
            raise QueryModelError(f"free variables not in any atom: {sorted(missing)}")

    @property
    def all_vars(self) -> tuple:
        """All variables, sorted."""
        out = set()
        for a in self.atoms:
            out.update(a.args)
        return tuple(sorted(out))

    @property
    def is_full(self) -> bool:
        return set(self.free_vars) == set(self.all_vars)

    @property
    def is_boolean(self) -> bool:
        return len(self.free_vars) == 0

    @property
    def arity(self) -> int:
        return len(self.free_vars)

    def atoms_of(self, symbol_name: str) -> list:
        return [a for a in self.atoms if a.symbol.name == symbol_name]

    def rename(self, mapping: dict) -> "Query":
        return Query(
            tuple(a.rename(mapping) for a in self.atoms),
            tuple(mapping.get(v, v) for v in self.free_vars),
        )

    def __str__(self) -> str:
        return serialize_query(self)


def make_query(atoms: Iterable[Atom], free_vars: Iterable[str]) -> Query:
    return Query(tuple(atoms), tuple(free_vars))


def hypergraph_of(query: Query) -> set:
    """One hyperedge per atom: the set of the atom's distinct variables.

    Atoms with identical variable sets collapse into one edge.
    """
    return {a.var_set for a in query.atoms}


class Database:
    """A finite relational instance; duplicate facts collapse.

    Fact lists preserve first-insertion order so every consumer iterates
    deterministically regardless of hash seeds.
    """

    def __init__(self):
        self._facts: dict = {}  # name -> list of value tuples
        self._index: dict = {}  # name -> set of value tuples
        self._arities: dict = {}

    @classmethod
    def from_facts(cls, facts: Iterable) -> "Database":
        db = cls()
        for name, values in facts:
            db.add_fact(name, values)
        return db

    def add_fact(self, name: str, values: Sequence[Value]) -> None:
        values = tuple(values)
        known = self._arities.get(name)
        if known is None:
            self._arities[name] = len(values)
            self._facts[name] = []
            self._index[name] = set()
        elif known != len(values):
            raise ArityMismatchError(
                f"fact {name}/{len(values)} conflicts with earlier arity {known}"
            )
        if values not in self._index[name]:
            self._index[name].add(values)
            self._facts[name].append(values)

    def facts(self, name: str) -> list:
        return self._facts.get(name, [])

    def has_fact(self, name: str, values: tuple) -> bool:
        idx = self._index.get(name)
        return idx is not None and values in idx

    def arity(self, name: str) -> Optional[int]:
        return self._arities.get(name)

    @property
    def symbols(self) -> list:
        return sorted(self._arities)

    @property
    def domain(self) -> list:
        """All values appearing anywhere, in first-appearance order."""
        seen = {}
        for name in self._facts:
            for row in self._facts[name]:
                for v in row:
                    seen.setdefault(v, None)
        return list(seen)

    @property
    def size(self) -> int:
        return sum(len(rows) for rows in self._facts.values())

    def all_facts(self) -> Iterator:
        for name in sorted(self._facts):
            for row in self._facts[name]:
                yield name, row

    def __eq__(self, other) -> bool:
        if not isinstance(other, Database):
            return NotImplemented
        mine = {n: s for n, s in self._index.items() if s}
        theirs = {n: s for n, s in other._index.items() if s}
        return mine == theirs

    def __repr__(self) -> str:
        return f"Database({self.size} facts, {len(self._facts)} relations)"


AnswerTuple = tuple  # tuple[Value, ...] aligned with a query's free_vars


# -- parsing ---------------------------------------------------------------


class _Scanner:
    """Character scanner with line/column tracking and % comments."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def _advance(self, n: int = 1) -> None:
        for _ in range(n):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def skip_ws(self) -> None:
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch == "%":
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self._advance()
            elif ch.isspace():
                self._advance()
            else:
                return

    def eof(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.line, self.col)

    def expect(self, literal: str) -> None:
        self.skip_ws()
        if not self.text.startswith(literal, self.pos):
            raise self.error(f"expected {literal!r}")
        self._advance(len(literal))

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def token(self, pattern: str, what: str) -> str:
        self.skip_ws()
        m = re.match(pattern, self.text[self.pos:])
        if not m:
            raise self.error(f"expected {what}")
        self._advance(len(m.group(0)))
        return m.group(0)


def _parse_name_list(sc: _Scanner, what: str, pattern: str) -> list:
    names = []
    sc.expect("(")
    if sc.peek() == ")":
        sc.expect(")")
        return names
    while True:
        names.append(sc.token(pattern, what))
        if sc.peek() == ",":
            sc.expect(",")
            continue
        sc.expect(")")
        return names


def parse_query(text: str) -> Query:
    """Parse ``Head(v1,...,vk) :- A1, ..., Am.`` into a Query.

    Head arguments become the free variables; a repeated head variable is an
    error, as is reusing a relation name with two different arities.
    """
    sc = _Scanner(text)
    sc.token(r"[A-Z][A-Za-z0-9_]*", "head relation name")
    free = _parse_name_list(sc, "variable", r"[a-z][A-Za-z0-9_]*")
    if len(set(free)) != len(free):
        raise sc.error("duplicate head variable")
    sc.expect(":-")
    atoms = []
    arities: dict = {}
    while True:
        name = sc.token(r"[A-Z][A-Za-z0-9_]*", "relation name")
        args = _parse_name_list(sc, "variable", r"[a-z][A-Za-z0-9_]*")
        prev = arities.setdefault(name, len(args))
        if prev != len(args):
            raise sc.error(f"symbol {name} reappears with arity {len(args)} (was {prev})")
        atoms.append(Atom(RelationSymbol(name, len(args)), tuple(args)))
        if sc.peek() == ",":
            sc.expect(",")
            continue
        sc.expect(".")
        break
    if not sc.eof():
        raise sc.error("trailing input after query")
    body_vars = set()
    for a in atoms:
        body_vars.update(a.args)
    loose = set(free) - body_vars
    if loose:
        raise sc.error(f"head variables not used in body: {sorted(loose)}")
    limit = max_vars_limit()
    if len(body_vars) > limit or len(set(atoms)) > max(limit, DEFAULT_MAX_ATOMS):
        raise LimitExceededError(
            f"query exceeds size limit ({len(body_vars)} vars / {len(atoms)} atoms > {limit})"
        )
    return Query(tuple(atoms), tuple(free))


def _parse_value(sc: _Scanner) -> Value:
    sc.skip_ws()
    if sc.text.startswith("pair(", sc.pos):
        sc.expect("pair(")
        data = _parse_value(sc)
        sc.expect(",")
        var = sc.token(r"[a-z][A-Za-z0-9_]*", "variable tag")
        sc.expect(")")
        return Pair(data, var)
    return sc.token(r"[a-z0-9_#]+", "value token")


def parse_database(text: str) -> Database:
    """Parse fact lines ``R(v1,...,vk).`` into a Database."""
    sc = _Scanner(text)
    db = Database()
    while not sc.eof():
        name = sc.token(r"[A-Z][A-Za-z0-9_]*", "relation name")
        values = []
        sc.expect("(")
        if sc.peek() != ")":
            while True:
                values.append(_parse_value(sc))
                if sc.peek() == ",":
                    sc.expect(",")
                    continue
                break
        sc.expect(")")
        sc.expect(".")
        try:
            db.add_fact(name, values)
        except ArityMismatchError as exc:
            raise ParseError(str(exc), sc.line, sc.col) from exc
    return db


# -- serialization ---------------------------------------------------------


def serialize_query(query: Query, head: str = "Q") -> str:
    head_part = f"{head}({','.join(query.free_vars)})"
    body = ", ".join(str(a) for a in query.atoms)
    return f"{head_part} :- {body}."


def serialize_database(db: Database) -> str:
    lines = []
    for name in sorted(db.symbols):
        rows = sorted(db.facts(name), key=lambda row: tuple(serialize_value(v) for v in row))
        for row in rows:
            lines.append(f"{name}({','.join(serialize_value(v) for v in row)}).")
    return "\n".join(lines) + ("\n" if lines else "")


def serialize_answer(answer: AnswerTuple) -> str:
    return ", ".join(serialize_value(v) for v in answer)


def serialize_answers(answers: Iterable[AnswerTuple]) -> str:
    return "".join(serialize_answer(a) + "\n" for a in answers)
