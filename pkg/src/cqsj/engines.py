"""Enumeration and evaluation engines with instrumented delay.

Every engine counts elementary steps (fact scans, index probes, stores,
emissions) on a shared tick counter; the delay guarantees asserted by the
test suite are statements about these ticks, not about wall-clock time.
Engines perform their whole preprocessing eagerly at construction and then
stream answers through an EnumerationCursor.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

from . import structure
from .qmodel import Atom, Database, Query, make_query, parse_query
from .structure import NotAcyclicError, gyo_acyclic


class InvalidWitnessError(Exception):
    pass


class WrongSchemaError(Exception):
    pass


class CyclicCoreError(Exception):
    pass


class DuplicateBoundError(Exception):
    pass


class Ticker:
    """Monotone counter of elementary steps."""

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0

    def tick(self, n: int = 1) -> None:
        self.count += n


class EnumerationCursor:
    """Preprocess-then-next answer stream.

    The generator must emit answer tuples; the cursor adds one tick per
    emission and tracks the phase.
    """

    def __init__(self, ticker: Ticker, preprocessing_ticks: int, gen: Iterator):
        self.ticker = ticker
        self.preprocessing_ticks = preprocessing_ticks
        self._gen = gen
        self.phase = "enumerating"

    def next(self):
        if self.phase == "done":
            return None
        try:
            item = next(self._gen)
        except StopIteration:
            self.phase = "done"
            return None
        self.ticker.tick()  # emission
        return item

    def __iter__(self):
        while True:
            item = self.next()
            if item is None:
                return
            yield item

    def run(self) -> list:
        return list(self)


@dataclass(frozen=True)
class DelayStats:
    preprocessing_ticks: int
    max_gap: int
    answers: int
    wall_ms: float

    def to_json(self) -> dict:
        return {
            "preprocessing_ticks": self.preprocessing_ticks,
            "max_gap": self.max_gap,
            "answers": self.answers,
            "wall_ms": round(self.wall_ms, 3),
        }


def measure_delay(make_cursor: Callable[[], EnumerationCursor]) -> DelayStats:
    """Run a cursor to completion recording tick gaps between emissions.

    The gap before the first answer and the tail after the last one count
    toward max_gap.
    """
    start = time.perf_counter()
    cursor = make_cursor()
    last = cursor.ticker.count
    max_gap = 0
    answers = 0
    while True:
        item = cursor.next()
        now = cursor.ticker.count
        gap = now - last
        if gap > max_gap:
            max_gap = gap
        last = now
        if item is None:
            break
        answers += 1
    wall_ms = (time.perf_counter() - start) * 1000.0
    return DelayStats(cursor.preprocessing_ticks, max_gap, answers, wall_ms)


# -- brute-force oracle -------------------------------------------------------


def _oracle_atom_order(query: Query) -> list:
    """Greedy connectivity order; plain backtracking join, no index tricks."""
    remaining = list(query.atoms)
    if not remaining:
        return []
    order = [remaining.pop(0)]
    bound = set(order[0].args)
    while remaining:
        best = None
        for a in remaining:
            overlap = len(set(a.args) & bound)
            key = (-overlap, a)
            if best is None or key < best[0]:
                best = (key, a)
        order.append(best[1])
        remaining.remove(best[1])
        bound.update(best[1].args)
    return order


def oracle_cursor(query: Query, db: Database, ticker: Optional[Ticker] = None) -> EnumerationCursor:
    """Exhaustive valuation search with projection and online dedup."""
    ticker = ticker or Ticker()
    order = _oracle_atom_order(query)
    prep = ticker.count

    def gen():
        seen = set()
        assignment: dict = {}

        def backtrack(i: int):
            if i == len(order):
                ans = tuple(assignment[v] for v in query.free_vars)
                ticker.tick()  # dedup probe
                if ans not in seen:
                    seen.add(ans)
                    yield ans
                return
            a = order[i]
            for row in db.facts(a.symbol.name):
                ticker.tick()  # fact scan
                bound = []
                ok = True
                for var, val in zip(a.args, row):
                    got = assignment.get(var)
                    if got is None:
                        assignment[var] = val
                        bound.append(var)
                    elif got != val:
                        ok = False
                        break
                if ok:
                    yield from backtrack(i + 1)
                for var in bound:
                    del assignment[var]

        if not order:
            yield ()
            return
        yield from backtrack(0)

    return EnumerationCursor(ticker, prep, gen())


def oracle_enumerate(query: Query, db: Database) -> set:
    return set(oracle_cursor(query, db))


# -- semi-join reduction and constant-delay enumeration -----------------------


def _atom_rows(query: Query, db: Database, ticker: Ticker) -> dict:
    """Atom -> facts matching the atom's repeated-variable pattern."""
    rows = {}
    for a in query.atoms:
        matching = []
        pattern_positions = {}
        for i, v in enumerate(a.args):
            pattern_positions.setdefault(v, []).append(i)
        for row in db.facts(a.symbol.name):
            ticker.tick()
            ok = True
            for positions in pattern_positions.values():
                first = row[positions[0]]
                for p in positions[1:]:
                    if row[p] != first:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                matching.append(row)
        rows[a] = matching
    return rows


def _first_positions(a: Atom) -> dict:
    pos = {}
    for i, v in enumerate(a.args):
        pos.setdefault(v, i)
    return pos


def _project(row, atom_pos, vars_sorted):
    return tuple(row[atom_pos[v]] for v in vars_sorted)


def _reduce_forest(query: Query, db: Database, ticker: Ticker):
    """Full semi-join reduction along the join forest (up then down).

    Returns (tree, rows, order) where order is a preorder listing of atoms.
    Raises NotAcyclicError when no join forest exists.
    """
    tree = gyo_acyclic(query)
    if tree is None:
        raise NotAcyclicError(f"query has no join tree: {query}")
    rows = _atom_rows(query, db, ticker)
    children: dict = {a: [] for a in tree.nodes}
    for a in tree.nodes:
        p = tree.parent[a]
        if p is not None:
            children[p].append(a)
    roots = tree.roots
    preorder = []
    post = []
    for r in roots:
        stack = [r]
        while stack:
            cur = stack.pop()
            preorder.append(cur)
            for ch in reversed(children[cur]):
                stack.append(ch)
    for a in reversed(preorder):
        post.append(a)
    pos = {a: _first_positions(a) for a in tree.nodes}

    def semijoin(target: Atom, source: Atom) -> None:
        shared = sorted(set(target.args) & set(source.args))
        if not shared:
            if not rows[source]:
                rows[target] = []
            return
        keys = set()
        for row in rows[source]:
            ticker.tick()
            keys.add(_project(row, pos[source], shared))
        kept = []
        for row in rows[target]:
            ticker.tick()
            if _project(row, pos[target], shared) in keys:
                kept.append(row)
        rows[target] = kept

    for a in post:  # leaves towards roots
        for ch in children[a]:
            semijoin(a, ch)
    for a in preorder:  # roots towards leaves
        for ch in children[a]:
            semijoin(ch, a)
    return tree, rows, preorder, children, pos


def eval_boolean(query: Query, db: Database, ticker: Optional[Ticker] = None) -> bool:
    """Satisfiability of an acyclic query via upward semi-joins."""
    ticker = ticker or Ticker()
    tree = gyo_acyclic(query)
    if tree is None:
        raise NotAcyclicError(f"query has no join tree: {query}")
    rows = _atom_rows(query, db, ticker)
    children: dict = {a: [] for a in tree.nodes}
    for a in tree.nodes:
        p = tree.parent[a]
        if p is not None:
            children[p].append(a)
    pos = {a: _first_positions(a) for a in tree.nodes}

    def up(a: Atom) -> None:
        for ch in children[a]:
            up(ch)
            shared = sorted(set(a.args) & set(ch.args))
            keys = set()
            for row in rows[ch]:
                ticker.tick()
                keys.add(_project(row, pos[ch], shared))
            kept = []
            if rows[ch]:
                for row in rows[a]:
                    ticker.tick()
                    if not shared or _project(row, pos[a], shared) in keys:
                        kept.append(row)
            rows[a] = kept

    for r in tree.roots:
        up(r)
        if not rows[r]:
            return False
    return True


def eval_unary(query: Query, db: Database, ticker: Optional[Ticker] = None) -> set:
    """Answer set of an acyclic unary query via full reduction + projection."""
    if query.arity != 1:
        raise ValueError("eval_unary expects exactly one free variable")
    ticker = ticker or Ticker()
    _, rows, preorder, _, pos = _reduce_forest(query, db, ticker)
    if any(not rows[a] for a in preorder):
        return set()
    var = query.free_vars[0]
    holder = next(a for a in preorder if var in a.args)
    out = set()
    for row in rows[holder]:
        ticker.tick()
        out.add(row[pos[holder][var]])
    return out


def _acyclic_assignments(query: Query, db: Database, ticker: Ticker):
    """Preprocess a full acyclic query; return a restartable assignment stream.

    After full reduction every partial match extends, so the stream walks the
    join forest without dead ends: constant work between assignments.
    """
    tree, rows, preorder, children, pos = _reduce_forest(query, db, ticker)
    empty = any(not rows[a] for a in preorder)

    indexes: dict = {}
    shared_with_parent: dict = {}
    for a in preorder:
        p = tree.parent[a]
        if p is None:
            continue
        shared = sorted(set(a.args) & set(p.args))
        shared_with_parent[a] = shared
        bucket: dict = {}
        for row in rows[a]:
            ticker.tick()
            bucket.setdefault(_project(row, pos[a], shared), []).append(row)
        indexes[a] = bucket

    def stream():
        if empty:
            return
        assignment: dict = {}

        def extend(i: int):
            if i == len(preorder):
                yield assignment
                return
            a = preorder[i]
            if tree.parent[a] is None:
                candidates = rows[a]
            else:
                key = tuple(assignment[v] for v in shared_with_parent[a])
                ticker.tick()  # index probe
                candidates = indexes[a].get(key, ())
            for row in candidates:
                ticker.tick()
                bound = []
                for v in set(a.args):
                    if v not in assignment:
                        assignment[v] = row[pos[a][v]]
                        bound.append(v)
                yield from extend(i + 1)
                for v in bound:
                    del assignment[v]

        yield from extend(0)

    return stream, empty


def enum_full_acyclic(query: Query, db: Database, ticker: Optional[Ticker] = None) -> EnumerationCursor:
    """Constant-delay enumeration of a full acyclic query.

    Linear preprocessing: semi-join reduction plus per-edge hash indexes.
    """
    if not query.is_full:
        raise ValueError("enum_full_acyclic expects a full query")
    ticker = ticker or Ticker()
    stream, _ = _acyclic_assignments(query, db, ticker)
    prep = ticker.count

    def gen():
        for assignment in stream():
            yield tuple(assignment[v] for v in query.free_vars)

    return EnumerationCursor(ticker, prep, gen())


def first_solution(query: Query, db: Database, ticker: Optional[Ticker] = None):
    """One answer of a full query with an acyclic core, in linear ticks.

    Evaluates one solution of the full-core and extends it through the
    retraction; returns None exactly when the query has no answers.
    """
    if not query.is_full:
        raise ValueError("first_solution expects a full query")
    ticker = ticker or Ticker()
    fcore, retraction = structure.full_core_with_retraction(query)
    if not structure.is_acyclic(fcore):
        raise CyclicCoreError("the query's core is cyclic")
    stream, _ = _acyclic_assignments(fcore, db, ticker)
    for assignment in stream():
        return tuple(assignment[retraction[v]] for v in query.free_vars)
    return None


# -- untangling-based linear delay enumeration --------------------------------


def _restricted_instance(step_query: Query, image_atoms: frozenset,
                         assignment: dict, db: Database, ticker: Ticker):
    """Build the rewritten query and database for one image answer.

    Relations are keyed per (symbol, dropped positions, shared variables at
    those positions): atoms that agree on all three share one filtered copy,
    atoms that differ get disambiguated symbols so their filters stay apart.
    """
    pieces = structure._untangle_pieces(step_query, image_atoms)
    groups: dict = {}
    for piece in pieces:
        a, positions, shared_at, kept, name = piece
        groups.setdefault((a.symbol.name, positions, shared_at, name), []).append(piece)

    taken: dict = {}
    sym_for_group: dict = {}
    for key in groups:
        base_name = key[3]
        n = taken.get(base_name, 0)
        taken[base_name] = n + 1
        sym_for_group[key] = base_name if n == 0 else f"{base_name}_f{n}"

    out = Database()
    new_atoms = []
    for key, members in groups.items():
        orig_name, positions, shared_at, _ = key
        sym = sym_for_group[key]
        filter_values = tuple(assignment[v] for v in shared_at)
        arity = len(members[0][3])
        for row in db.facts(orig_name):
            ticker.tick()
            if all(row[p] == filter_values[j] for j, p in enumerate(positions)):
                out.add_fact(sym, tuple(v for i, v in enumerate(row)
                                        if i not in positions))
        for piece in members:
            new_atoms.append(Atom(structure.RelationSymbol(sym, arity), piece[3]))
    vs = sorted({v for a in new_atoms for v in a.args})
    return make_query(tuple(new_atoms), tuple(vs)), out


def enum_untangle(query: Query, witness: structure.UntanglingWitness,
                  db: Database, ticker: Optional[Ticker] = None) -> EnumerationCursor:
    """Linear-delay enumeration driven by an untangling witness.

    Recursively enumerates the step's image; for each image answer builds the
    restricted database over the rewritten schema and enumerates the rest.
    Every image answer extends to at least one full answer, so the gap stays
    linear in the database size; distinct image answers yield disjoint blocks.
    """
    if not structure.validate_untangling_witness(query, witness):
        raise InvalidWitnessError("witness does not validate for this query")
    ticker = ticker or Ticker()

    def make_stream(chain_idx: int, database: Database):
        """Restartable assignment stream for one chain element.

        Preprocessing along the image side of the chain happens here,
        eagerly; the per-image-answer restricted instances are enumeration
        work and stay inside the returned stream.
        """
        if chain_idx == 0:
            stream, _ = _acyclic_assignments(witness.base, database, ticker)
            return stream
        step = witness.steps[chain_idx - 1]
        image_query = structure._induced_subquery(step.image_atoms)

        if step.case == "image_is_previous":
            image_stream = make_stream(chain_idx - 1, database)
        else:
            image_stream, _ = _acyclic_assignments(image_query, database, ticker)

        def run():
            for img_assignment in image_stream():
                rest_query, restricted = _restricted_instance(
                    step.query, step.image_atoms, img_assignment, database, ticker)
                if step.case == "image_is_previous":
                    rest_stream, _ = _acyclic_assignments(rest_query, restricted, ticker)
                else:
                    # rest_query equals the witness's previous element here
                    # (collision-free step), so the sub-witness applies to it.
                    rest_stream = make_stream(chain_idx - 1, restricted)
                for rest_assignment in rest_stream():
                    merged = dict(img_assignment)
                    merged.update(rest_assignment)
                    yield merged

        return run

    top = make_stream(len(witness.steps), db)
    prep = ticker.count

    def gen():
        for assignment in top():
            yield tuple(assignment[v] for v in query.free_vars)

    return EnumerationCursor(ticker, prep, gen())


# -- mirror constant-delay enumeration ----------------------------------------


def enum_mirror(query: Query, witness: structure.MirrorWitness,
                db: Database, ticker: Optional[Ticker] = None) -> EnumerationCursor:
    """Constant-delay enumeration of a mirror query.

    Streams the acyclic image; a table keyed by the shared variables pairs
    each new private part with every previously seen one (diagonal first,
    then both cross completions, then store).  Memory grows with the output.
    """
    if not structure.validate_mirror_witness(query, witness):
        raise InvalidWitnessError("witness does not validate for this query")
    ticker = ticker or Ticker()
    image_query = witness.image_query
    image_vars = set(image_query.all_vars)
    rest_vars = {x for a in query.atoms if a not in witness.image_atoms
                 for x in a.args}
    shared = sorted(image_vars & rest_vars)
    image_private = [v for v in image_query.all_vars if v not in shared]
    rest_private = [v for v in query.all_vars if v not in image_vars]
    slot = {v: image_private.index(witness.iso[v]) for v in rest_private}

    stream, _ = _acyclic_assignments(image_query, db, ticker)
    prep = ticker.count

    def emit(key_assignment: dict, image_part, rest_part):
        out = []
        for v in query.free_vars:
            if v in image_vars:
                if v in key_assignment:
                    out.append(key_assignment[v])
                else:
                    out.append(image_part[image_private.index(v)])
            else:
                out.append(rest_part[slot[v]])
        return tuple(out)

    def gen():
        table: dict = {}
        for assignment in stream():
            key = tuple(assignment[v] for v in shared)
            part = tuple(assignment[v] for v in image_private)
            key_assignment = {v: assignment[v] for v in shared}
            yield emit(key_assignment, part, part)
            ticker.tick()  # table probe
            stored = table.get(key)
            if stored is None:
                stored = table[key] = []
            for other in stored:
                yield emit(key_assignment, part, other)
                yield emit(key_assignment, other, part)
            stored.append(part)
            ticker.tick()  # store

    return EnumerationCursor(ticker, prep, gen())

# -- bespoke per-query strategies ----------------------------------------------

BESPOKE_DUPLICATION = {
    "TWO_LOOPS": 1,
    "TWO_TRIANGLES": 1,
    "SPIKE_Q2": 3,
    "SPIKE_Q3": 3,
}

_RED_STRATEGIES = {"SPIKE_Q2", "SPIKE_Q3"}


def bespoke_query(strategy: str) -> Query:
    from . import fixtures

    return fixtures.fixture(fixtures.BESPOKE_STRATEGIES[strategy])


def _binary_adjacency(db: Database, ticker: Ticker, with_red: bool):
    allowed = {"R": 2}
    if with_red:
        allowed["P"] = 1
    for name in db.symbols:
        if name not in allowed or db.arity(name) != allowed[name]:
            raise WrongSchemaError(
                f"strategy expects {sorted(allowed)} only, found {name}/{db.arity(name)}"
            )
    out: dict = {}
    in_: dict = {}
    edges = set()
    for u, v in db.facts("R"):
        ticker.tick()
        out.setdefault(u, []).append(v)
        in_.setdefault(v, []).append(u)
        edges.add((u, v))
    red = set()
    if with_red:
        for (u,) in db.facts("P"):
            ticker.tick()
            red.add(u)
    return out, in_, edges, red


def _two_loops_factory(db: Database, ticker: Ticker):
    """Two-table strategy for the twin-loops pattern (answers (a,b,c,a2,b2)).

    Scanning (self-loop, edge) pairs; a passing scan is simultaneously a
    left-half triple (a,u,v) and a right-half triple (a,v,u).  Emitting
    against the tables before storing makes each cross pair fire exactly
    once; the diagonal pair is emitted explicitly.
    """
    _, _, edges, _ = _binary_adjacency(db, ticker, with_red=False)
    edge_list = db.facts("R")
    loops = [u for u, v in edge_list if u == v]

    def gen():
        t_left: dict = {}   # c -> [(a, b)] with a->b->c->a, loop a
        t_right: dict = {}  # c -> [(a, b)] with a->c, c->b, b->a, loop a
        for a in loops:
            for u, v in edge_list:
                ticker.tick(3)  # scan + two edge probes
                if (a, u) in edges and (v, a) in edges:
                    ticker.tick()
                    for a2, b2 in t_right.get(v, ()):
                        yield (a, u, v, a2, b2)
                    ticker.tick()
                    for a1, b1 in t_left.get(u, ()):
                        yield (a1, b1, u, a, v)
                    t_left.setdefault(v, []).append((a, u))
                    t_right.setdefault(u, []).append((a, v))
                    ticker.tick(2)
                    if u == v:
                        yield (a, u, u, a, u)

    return gen


def _two_triangles_factory(db: Database, ticker: Ticker):
    """Edge-keyed two-table strategy for the twin-triangles pattern."""
    _, _, edges, _ = _binary_adjacency(db, ticker, with_red=False)
    edge_list = db.facts("R")
    loops = [u for u, v in edge_list if u == v]

    def gen():
        t_tri: dict = {}   # (b,c) -> [a] with triangle a->b->c->a, loop a
        t_star: dict = {}  # (b,c) -> [a] with a->b, a->c, loop a
        for a in loops:
            for u, v in edge_list:
                ticker.tick(3)
                tri = (v, a) in edges and (a, u) in edges
                star = (a, u) in edges and (a, v) in edges
                if tri:
                    ticker.tick()
                    for a2 in t_star.get((u, v), ()):
                        yield (a, u, v, a2)
                if star:
                    ticker.tick()
                    for a1 in t_tri.get((u, v), ()):
                        yield (a1, u, v, a)
                if tri:
                    t_tri.setdefault((u, v), []).append(a)
                    ticker.tick()
                if star:
                    t_star.setdefault((u, v), []).append(a)
                    ticker.tick()
                if tri and star:
                    yield (a, u, v, a)

    return gen


_Q2_TOP = ("Q(x1,x2,x3,x6,x7,x8) :- R(x1,x2), R(x2,x3), R(x1,x8), "
           "R(x8,x7), R(x6,x7), P(x2).")
_Q2_LEFT = ("Q(x1,x2,x3,x4,x5,x6) :- R(x1,x2), R(x2,x3), R(x4,x3), "
            "R(x5,x4), R(x5,x6), P(x2).")


def _spike_q2_factory(db: Database, ticker: Ticker):
    """Constant-delay strategy for the ring with one in- and one out-spike.

    Top-image pass fills a table keyed by the four join variables while each
    top answer already induces a full answer; the left-image pass then joins
    against the table and expands the two spikes per joined loop.
    """
    out, in_, _, _ = _binary_adjacency(db, ticker, with_red=True)
    top_stream, _ = _acyclic_assignments(parse_query(_Q2_TOP), db, ticker)
    left_stream, _ = _acyclic_assignments(parse_query(_Q2_LEFT), db, ticker)

    def gen():
        table: dict = {}
        for t in top_stream():
            b, m, c = t["x1"], t["x2"], t["x3"]
            f, v7, v8 = t["x6"], t["x7"], t["x8"]
            yield (b, m, c, m, b, v8, v7, v8, f, v8)
            table.setdefault((c, m, b, f), []).append((v8, v7))
            ticker.tick()
        for t in left_stream():
            b, m, c = t["x1"], t["x2"], t["x3"]
            a, w, f = t["x4"], t["x5"], t["x6"]
            yield (b, m, c, a, w, a, c, m, m, f)
            ticker.tick()  # table probe
            for v8, v7 in table.get((c, m, b, f), ()):
                for so in out.get(w, ()):
                    for si in in_.get(v7, ()):
                        ticker.tick()
                        yield (b, m, c, a, w, f, v7, v8, si, so)

    return gen


def _spike_q3_factory(db: Database, ticker: Ticker):
    """Constant-delay strategy for the six-spike ring.

    Per core solution (b,m,c): a left pass emits one induced answer per
    left-image solution while collecting (x4,x5,x6)-candidates, a top pass
    does the same for (x8,x7)-candidates, and the cross-product edge tests
    that stitch the two sides into full loops are rationed out at two per
    emission (the spike products guarantee enough emissions to pay for all
    tests), with a drain at the end of the group.
    """
    out, in_, edges, red = _binary_adjacency(db, ticker, with_red=True)
    in_pred: dict = {}
    for c, lst in in_.items():
        ticker.tick()
        in_pred[c] = [a for a in lst if a in in_]
    out_succ: dict = {}
    for b, lst in out.items():
        ticker.tick()
        out_succ[b] = [t for t in lst if t in out]
    core_edges = []
    for b, m in db.facts("R"):
        ticker.tick()
        if m in red and m in out:
            core_edges.append((b, m))

    def gen():
        for b, m in core_edges:
            out_b = out.get(b, ())
            for c in out[m]:
                in_c = in_.get(c, ())
                keys: list = []   # (x4, x5, x6) candidates with witnesses
                pairs: list = []  # (x8, x7) candidates
                state = [0, 0]    # pair cursor, key cursor

                def run_tests(budget: int):
                    while budget and keys and state[0] < len(pairs):
                        t, v7 = pairs[state[0]]
                        a, w, v = keys[state[1]]
                        state[1] += 1
                        if state[1] == len(keys):
                            state[1] = 0
                            state[0] += 1
                        budget -= 1
                        ticker.tick()  # edge probe
                        if (v, v7) in edges:
                            yield from assembled(a, w, v, t, v7)

                def assembled(a, w, v, t, v7):
                    for s1v in out_b:
                        for u2 in in_c:
                            for v3 in out[t]:
                                for s5v in in_[a]:
                                    for o1 in out[w]:
                                        for o2 in out[w]:
                                            ticker.tick()
                                            yield (b, m, c, a, w, v, v7, t,
                                                   s1v, u2, v3, s5v, o1, o2)

                # left pass: every iteration emits (no dead branches)
                for a in in_pred.get(c, ()):
                    for w in in_[a]:
                        for v in out[w]:
                            keys.append((a, w, v))
                            ticker.tick()
                            for v2 in out[w]:
                                for s5v in in_[a]:
                                    for tv in out_b:
                                        for u2 in in_c:
                                            ticker.tick()
                                            yield (b, m, c, a, w, a, c, m,
                                                   tv, u2, c, s5v, v, v2)
                # top pass, paying for pending cross tests as it emits
                for t in out_succ.get(b, ()):
                    for v7 in out[t]:
                        pairs.append((t, v7))
                        ticker.tick()
                        for v3 in out[t]:
                            for s1v in out_b:
                                for u2 in in_c:
                                    ticker.tick()
                                    yield (b, m, c, m, b, t, v7, t,
                                           s1v, u2, v3, b, t, t)
                                    yield from run_tests(2)
                # drain whatever tests remain for this group
                while keys and state[0] < len(pairs):
                    yield from run_tests(16)

    return gen


def enum_bespoke(strategy: str, db: Database, ticker: Optional[Ticker] = None,
                 dedup: bool = True) -> EnumerationCursor:
    """Run one of the registered per-query strategies over a {R,P} database.

    The raw stream emits each answer at most BESPOKE_DUPLICATION[strategy]
    times; by default it is wrapped in cheater_dedup, which also checks that
    bound online.
    """
    if strategy not in BESPOKE_DUPLICATION:
        raise ValueError(f"unknown strategy {strategy!r}")
    ticker = ticker or Ticker()
    factories = {
        "TWO_LOOPS": _two_loops_factory,
        "TWO_TRIANGLES": _two_triangles_factory,
        "SPIKE_Q2": _spike_q2_factory,
        "SPIKE_Q3": _spike_q3_factory,
    }
    gen_factory = factories[strategy](db, ticker)
    raw = EnumerationCursor(ticker, ticker.count, gen_factory())
    if dedup:
        return cheater_dedup(raw, BESPOKE_DUPLICATION[strategy])
    return raw


# -- duplicate elimination ------------------------------------------------------


def cheater_dedup(inner: EnumerationCursor, c: int) -> EnumerationCursor:
    """Remove duplicates from a stream that repeats each answer at most c times.

    Pulls up to c inner answers per emission: after k emissions at most c*k
    inner answers have been consumed, which must contain at least k distinct
    ones, so the outgoing gap stays within c inner gaps plus a constant.
    Raises DuplicateBoundError the moment some answer exceeds the bound.
    """
    if c < 1:
        raise ValueError("duplication bound must be positive")
    ticker = inner.ticker

    def gen():
        counts: dict = {}
        queue: deque = deque()
        exhausted = False
        while True:
            pulls = 0
            while pulls < c and not exhausted:
                item = inner.next()
                if item is None:
                    exhausted = True
                    break
                pulls += 1
                ticker.tick()  # seen-table probe
                n = counts.get(item, 0) + 1
                if n > c:
                    raise DuplicateBoundError(
                        f"answer repeated more than {c} times: {item!r}")
                counts[item] = n
                if n == 1:
                    queue.append(item)
            if queue:
                yield queue.popleft()
            elif exhausted:
                return

    return EnumerationCursor(ticker, inner.preprocessing_ticks, gen())
