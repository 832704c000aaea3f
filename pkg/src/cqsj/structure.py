"""Structural analysis of conjunctive queries.

Covers hypergraph acyclicity (ear removal with a deterministic tie-break),
free-connexity, endomorphism search, minimisation and cores, endomorphism
images, the untangling rewrite and its witness search, mirror decompositions,
a transfer condition for conditional hardness, and the per-query verdict
table.  Everything here is a pure function of immutable inputs.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .qmodel import (
    Atom,
    LimitExceededError,
    Query,
    RelationSymbol,
    make_query,
    max_vars_limit,
    serialize_query,
)

DEFAULT_UNTANGLE_BUDGET = 4000
MAX_HOM_RESULTS = 200_000


class NotAcyclicError(Exception):
    pass


# -- join trees and acyclicity ----------------------------------------------


@dataclass(frozen=True)
class JoinTree:
    """A forest over the query's atoms satisfying running intersection."""

    nodes: tuple  # tuple[Atom, ...]
    parent: dict  # Atom -> Atom | None

    @property
    def roots(self) -> list:
        return [a for a in self.nodes if self.parent[a] is None]

    def children(self, node: Atom) -> list:
        return [a for a in self.nodes if self.parent[a] is node]

    def satisfies_running_intersection(self) -> bool:
        return _forest_has_running_intersection(self.nodes, self.parent)


def _forest_has_running_intersection(nodes, parent) -> bool:
    adj = {a: [] for a in nodes}
    for a in nodes:
        p = parent[a]
        if p is not None:
            adj[a].append(p)
            adj[p].append(a)
    all_vars = set()
    for a in nodes:
        all_vars.update(a.args)
    for v in sorted(all_vars):
        holders = [a for a in nodes if v in a.args]
        seen = {holders[0]}
        stack = [holders[0]]
        while stack:
            cur = stack.pop()
            for nxt in adj[cur]:
                if nxt not in seen and v in nxt.args:
                    seen.add(nxt)
                    stack.append(nxt)
        if len(seen) != len(holders):
            return False
    return True


def gyo_acyclic(query: Query) -> Optional[JoinTree]:
    """Ear-removal acyclicity test; returns a join forest or None if cyclic.

    Tie-break: among removable atoms, always remove the lexicographically
    least (symbol name, argument list), attaching it to its least witness.
    The result is therefore deterministic.
    """
    remaining = list(query.atoms)  # already sorted
    parent: dict = {}
    while remaining:
        occurrences: dict = {}
        for a in remaining:
            for v in a.var_set:
                occurrences[v] = occurrences.get(v, 0) + 1
        picked = None
        for a in remaining:
            shared = {v for v in a.var_set if occurrences[v] > 1}
            if not shared:
                picked = (a, None)  # isolated: becomes a root
                break
            witness = None
            for w in remaining:
                if w is not a and shared <= w.var_set:
                    witness = w
                    break
            if witness is not None:
                picked = (a, witness)
                break
        if picked is None:
            return None
        a, w = picked
        parent[a] = w
        remaining.remove(a)
    return JoinTree(query.atoms, parent)


def is_acyclic(query: Query) -> bool:
    return gyo_acyclic(query) is not None


def brute_force_acyclic(query: Query) -> bool:
    """Independent oracle: search all labelled trees per sharing-component.

    Only practical for queries with few atoms; used to cross-check the ear
    removal implementation.
    """
    comps = _sharing_components(query.atoms)
    for comp in comps:
        if len(comp) == 1:
            continue
        if not any(
            _forest_has_running_intersection(tuple(comp), par)
            for par in _all_rooted_trees(comp)
        ):
            return False
    return True


def _sharing_components(atoms) -> list:
    comps = []
    pool = list(atoms)
    while pool:
        comp = [pool.pop(0)]
        grown = True
        while grown:
            grown = False
            for a in pool[:]:
                if any(a.var_set & b.var_set for b in comp):
                    comp.append(a)
                    pool.remove(a)
                    grown = True
        comps.append(comp)
    return comps


def _all_rooted_trees(atoms) -> Iterator[dict]:
    """All labelled trees on the atoms (Pruefer enumeration), rooted at [0]."""
    import heapq

    k = len(atoms)
    if k == 1:
        yield {atoms[0]: None}
        return
    if k == 2:
        yield {atoms[0]: None, atoms[1]: atoms[0]}
        return
    for seq in itertools.product(range(k), repeat=k - 2):
        deg = [1] * k
        for s in seq:
            deg[s] += 1
        edges = []
        heap = [i for i in range(k) if deg[i] == 1]
        heapq.heapify(heap)
        for s in seq:
            leaf = heapq.heappop(heap)
            edges.append((leaf, s))
            deg[leaf] -= 1
            deg[s] -= 1
            if deg[s] == 1:
                heapq.heappush(heap, s)
        last = [i for i in range(k) if deg[i] == 1]
        edges.append((last[0], last[1]))
        adj = {i: [] for i in range(k)}
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        par = {atoms[0]: None}
        stack = [0]
        seen = {0}
        while stack:
            cur = stack.pop()
            for nxt in adj[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    par[atoms[nxt]] = atoms[cur]
                    stack.append(nxt)
        yield par


_FRESH_HEAD = "FCHEAD"


def is_free_connex(query: Query) -> bool:
    """Acyclic and still acyclic after adding a fresh head atom over free vars."""
    if not is_acyclic(query):
        return False
    head = Atom(RelationSymbol(_FRESH_HEAD, len(query.free_vars)), tuple(query.free_vars))
    extended = make_query(query.atoms + (head,), query.free_vars)
    return is_acyclic(extended)


# -- homomorphism / endomorphism search --------------------------------------


def find_maps(
    src_atoms,
    dst_atoms,
    pinned: Optional[dict] = None,
    injective: bool = False,
) -> Iterator[dict]:
    """Yield all variable maps sending every src atom onto some dst atom.

    Deterministic order: variables are processed most-constrained-first with
    name tie-break, candidate targets in sorted order.
    """
    dst_by_sym: dict = {}
    dst_vars = set()
    for a in dst_atoms:
        dst_by_sym.setdefault((a.symbol.name, a.symbol.arity), []).append(a.args)
        dst_vars.update(a.args)
    src_vars = set()
    occurrence = {}
    for a in src_atoms:
        for v in a.args:
            src_vars.add(v)
            occurrence[v] = occurrence.get(v, 0) + 1

    pinned = dict(pinned or {})
    for v, t in pinned.items():
        if v in src_vars and t not in dst_vars:
            return  # pinned target outside codomain: no maps

    order = sorted((v for v in src_vars if v not in pinned),
                   key=lambda v: (-occurrence[v], v))
    candidates = sorted(dst_vars)
    atoms_by_var: dict = {v: [] for v in src_vars}
    for a in src_atoms:
        opts = dst_by_sym.get((a.symbol.name, a.symbol.arity))
        if not opts:
            return  # some atom has no possible target
        for v in set(a.args):
            atoms_by_var[v].append((a, opts))

    mapping = dict(pinned)
    used = set(pinned.values()) if injective else None
    if injective and len(set(pinned.values())) != len(pinned):
        return

    def consistent(a: Atom, opts) -> bool:
        for target_args in opts:
            ok = True
            for sv, tv in zip(a.args, target_args):
                got = mapping.get(sv)
                if got is not None and got != tv:
                    ok = False
                    break
            if ok:
                return True
        return False

    def all_atoms_ok() -> bool:
        for a in src_atoms:
            opts = dst_by_sym[(a.symbol.name, a.symbol.arity)]
            if not consistent(a, opts):
                return False
        return True

    if not all_atoms_ok():
        return

    def backtrack(i: int) -> Iterator[dict]:
        if i == len(order):
            yield dict(mapping)
            return
        v = order[i]
        for t in candidates:
            if injective and t in used:
                continue
            mapping[v] = t
            if injective:
                used.add(t)
            if all(consistent(a, opts) for a, opts in atoms_by_var[v]):
                yield from backtrack(i + 1)
            if injective:
                used.discard(t)
            del mapping[v]

    yield from backtrack(0)


def endomorphisms(query: Query, fix_free: bool = False) -> list:
    """All atom-preserving variable self-maps, the identity included."""
    if len(query.all_vars) > max_vars_limit():
        raise LimitExceededError(
            f"{len(query.all_vars)} variables exceed the configured limit"
        )
    pinned = {v: v for v in query.free_vars} if fix_free else None
    out = []
    for m in find_maps(query.atoms, query.atoms, pinned=pinned):
        out.append(m)
        if len(out) > MAX_HOM_RESULTS:
            raise LimitExceededError("endomorphism enumeration exceeded result cap")
    return out


def has_endo_with_range(query: Query, image_atoms: frozenset) -> Optional[dict]:
    """First endomorphism whose range atoms are exactly the given set."""
    for m in find_maps(query.atoms, tuple(sorted(image_atoms))):
        ran = frozenset(a.rename(m) for a in query.atoms)
        if ran == image_atoms:
            return m
    return None


def homomorphism_exists(src: Query, dst: Query, fix_free: bool = True) -> bool:
    pinned = {v: v for v in src.free_vars} if fix_free else None
    for _ in find_maps(src.atoms, dst.atoms, pinned=pinned):
        return True
    return False


def _is_injective(mapping: dict) -> bool:
    return len(set(mapping.values())) == len(mapping)


def is_minimal(query: Query) -> bool:
    """True iff every endomorphism fixing the free variables is injective."""
    for m in find_maps(query.atoms, query.atoms,
                       pinned={v: v for v in query.free_vars}):
        if not _is_injective(m):
            return False
    return True


def minimal_form_with_retraction(query: Query):
    """Equivalent minimal retract plus the composed variable retraction."""
    current = query
    retraction = {v: v for v in query.all_vars}
    while True:
        found = None
        for m in find_maps(current.atoms, current.atoms,
                           pinned={v: v for v in current.free_vars}):
            if not _is_injective(m):
                found = m
                break
        if found is None:
            return current, retraction
        current = make_query(tuple(a.rename(found) for a in current.atoms),
                             current.free_vars)
        retraction = {v: found[t] for v, t in retraction.items()}


def minimal_form(query: Query) -> Query:
    return minimal_form_with_retraction(query)[0]


def core_with_retraction(query: Query):
    """Core = minimal form of the Boolean closure, with its retraction."""
    return minimal_form_with_retraction(make_query(query.atoms, ()))


def core(query: Query) -> Query:
    return core_with_retraction(query)[0]


def full_core_with_retraction(query: Query):
    if not query.is_full:
        raise ValueError("full-core is defined for full queries only")
    c, retraction = core_with_retraction(query)
    return make_query(c.atoms, c.all_vars), retraction


def full_core(query: Query) -> Query:
    return full_core_with_retraction(query)[0]


# -- canonical forms ---------------------------------------------------------


def _refine_colors(query: Query) -> dict:
    """Colour refinement; stable variable invariants for canonical labelling."""
    free = set(query.free_vars)
    colors = {v: int(v in free) for v in query.all_vars}
    for _ in range(len(colors) + 1):
        sigs = {}
        for v in colors:
            sig = []
            for a in query.atoms:
                for i, arg in enumerate(a.args):
                    if arg == v:
                        sig.append((a.symbol.name, i,
                                    tuple(colors[x] for x in a.args)))
            sigs[v] = (colors[v], tuple(sorted(sig)))
        ranked = {s: i for i, s in enumerate(sorted(set(sigs.values())))}
        new = {v: ranked[sigs[v]] for v in colors}
        if new == colors:
            break
        colors = new
    return colors


def canonical_form(query: Query):
    """Minimal atom encoding over variable bijections; (key, renaming).

    The key is invariant under variable renaming (free variables compared as
    a set).  Colour refinement keeps the residual search tiny for every query
    shape this package produces.
    """
    vs = list(query.all_vars)
    if not vs:
        key = (tuple((a.symbol.name, a.symbol.arity, ()) for a in query.atoms),
               frozenset())
        return key, {}
    colors = _refine_colors(query)
    classes: dict = {}
    for v in vs:
        classes.setdefault(colors[v], []).append(v)
    blocks = [sorted(classes[c]) for c in sorted(classes)]
    total = 1
    for b in blocks:
        for i in range(2, len(b) + 1):
            total *= i
    if total > 1_000_000:
        raise LimitExceededError("query too symmetric for canonical labelling")

    free = set(query.free_vars)
    best = None
    best_map = None
    for perms in itertools.product(*[itertools.permutations(b) for b in blocks]):
        order = [v for block in perms for v in block]
        ren = {v: i for i, v in enumerate(order)}
        atoms_key = tuple(sorted(
            (a.symbol.name, a.symbol.arity, tuple(ren[x] for x in a.args))
            for a in query.atoms
        ))
        key = (atoms_key, frozenset(ren[v] for v in free))
        if best is None or key < best:
            best = key
            best_map = ren
    return best, best_map


def canonical_key(query: Query):
    return canonical_form(query)[0]


def queries_isomorphic(q1: Query, q2: Query) -> bool:
    return canonical_key(q1) == canonical_key(q2)


# -- images ------------------------------------------------------------------


@dataclass(frozen=True)
class Image:
    """Subquery induced by the range atoms of an endomorphism."""

    atoms: frozenset
    query: Query
    witnesses: tuple  # tuple of variable maps producing this range

    def __repr__(self) -> str:
        return f"Image({serialize_query(self.query)}, {len(self.witnesses)} witnesses)"


def _induced_subquery(atoms: Iterable[Atom]) -> Query:
    atoms = tuple(sorted(atoms))
    vs = sorted({v for a in atoms for v in a.args})
    return make_query(atoms, tuple(vs))


def images(query: Query) -> list:
    """All distinct endomorphism ranges of a full query, as subqueries.

    Contains the query itself (identity) and its full-core.  Distinctness is
    by atom set; use images_up_to_renaming for the coarser count.
    """
    if not query.is_full:
        raise ValueError("images are defined for full queries")
    by_range: dict = {}
    for m in endomorphisms(query):
        ran = frozenset(a.rename(m) for a in query.atoms)
        by_range.setdefault(ran, []).append(m)
    out = []
    for ran in sorted(by_range, key=lambda r: tuple(sorted(r))):
        wit = by_range[ran]
        out.append(Image(ran, _induced_subquery(ran), tuple(wit[:4])))
    return out


def images_up_to_renaming(query: Query) -> list:
    """One representative per variable-renaming class of image."""
    seen = {}
    for img in images(query):
        seen.setdefault(canonical_key(img.query), img)
    return list(seen.values())


# -- untangling --------------------------------------------------------------


def _untangle_pieces(query: Query, image_atoms: frozenset):
    """Per-atom rewrite data for one untangling step.

    Each removed-side atom yields (atom, positions_dropped, shared_vars_at_S,
    kept_args, rewritten_symbol_name).
    """
    p_atoms = [a for a in query.atoms if a not in image_atoms]
    image_vars = {v for a in image_atoms for v in a.args}
    p_vars = {v for a in p_atoms for v in a.args}
    shared = p_vars & image_vars
    kept_names = {a.symbol.name for a in p_atoms
                  if not any(v in shared for v in a.args)}
    names: dict = {}
    pieces = []
    for a in p_atoms:
        positions = tuple(i for i, v in enumerate(a.args) if v in shared)
        kept = tuple(v for i, v in enumerate(a.args) if i not in positions)
        if positions:
            key = (a.symbol.name, positions)
            name = names.get(key)
            if name is None:
                name = f"{a.symbol.name}__{''.join(str(i) for i in positions)}"
                # A rewritten symbol must not capture a name that survives
                # unrewritten (possible once a query is untangled twice).
                while name in kept_names or name in names.values():
                    name += "x"
                names[key] = name
        else:
            name = a.symbol.name
        shared_at = tuple(a.args[i] for i in positions)
        pieces.append((a, positions, shared_at, kept, name))
    return pieces


def untangling_step(query: Query, image_atoms: frozenset) -> Query:
    """Drop the image's atoms; project shared positions out of the rest.

    Positions holding image variables are removed and the symbol is renamed
    per (original symbol, dropped position set).  Result is full over the
    surviving variables; empty when the image is the whole query.
    """
    pieces = _untangle_pieces(query, frozenset(image_atoms))
    new_atoms = []
    for _, positions, _, kept, name in pieces:
        new_atoms.append(Atom(RelationSymbol(name, len(kept)), kept))
    vs = sorted({v for a in new_atoms for v in a.args})
    return make_query(tuple(new_atoms), tuple(vs))


def untangling_collision_free(query: Query, image_atoms: frozenset) -> bool:
    """True when every rewritten symbol carries a single filter context.

    Two removed-side atoms that agree on (symbol, dropped positions) but
    disagree on which shared variables sit at those positions cannot share
    one restricted relation at enumeration time.
    """
    seen: dict = {}
    for _, positions, shared_at, _, name in _untangle_pieces(query, frozenset(image_atoms)):
        if not positions:
            continue
        prev = seen.setdefault(name, shared_at)
        if prev != shared_at:
            return False
    return True


@dataclass(frozen=True)
class UntanglingStep:
    query: Query
    image_atoms: frozenset
    result: Query
    case: str  # "image_is_previous" or "result_is_previous"


@dataclass(frozen=True)
class UntanglingWitness:
    """Chain q0..ql with q0 acyclic and one verified step per element."""

    base: Query
    steps: tuple  # tuple[UntanglingStep, ...]; steps[-1].query is the target

    @property
    def target(self) -> Query:
        return self.steps[-1].query if self.steps else self.base


def validate_untangling_witness(query: Query, witness: UntanglingWitness) -> bool:
    if witness.target != query:
        return False
    if not is_acyclic(witness.base):
        return False
    prev = witness.base
    for step in witness.steps:
        if not step.image_atoms <= set(step.query.atoms):
            return False
        if untangling_step(step.query, step.image_atoms) != step.result:
            return False
        if has_endo_with_range(step.query, step.image_atoms) is None:
            return False
        image_query = _induced_subquery(step.image_atoms)
        if step.case == "image_is_previous":
            if image_query != prev or not is_acyclic(step.result):
                return False
        elif step.case == "result_is_previous":
            if step.result != prev or not is_acyclic(image_query):
                return False
            if not untangling_collision_free(step.query, step.image_atoms):
                return False
        else:
            return False
        prev = step.query
    return True


def is_untangleable(query: Query, budget: int = DEFAULT_UNTANGLE_BUDGET):
    """Search for an untangling chain.

    Returns ("yes", witness) with a re-validating witness, ("no", None) when
    the progressing-step search is exhausted, or ("unknown", None) when the
    node budget ran out.  Steps must shrink the query (trivial images are
    excluded), which bounds the depth; canonical memoisation prunes repeats.
    """
    if not query.is_full:
        raise ValueError("untangling is defined for full queries")
    remaining = [budget]
    memo_no = set()
    memo_unknown = set()
    BUDGET = "budget"

    def search(q: Query):
        if is_acyclic(q):
            return UntanglingWitness(q, ())
        key = canonical_key(q)
        if key in memo_no:
            return None
        if key in memo_unknown:
            return BUDGET
        if remaining[0] <= 0:
            memo_unknown.add(key)
            return BUDGET
        remaining[0] -= 1
        hit_budget = False
        for img in images(q):
            if img.atoms == set(q.atoms):
                continue  # trivial image: no progress
            result = untangling_step(q, img.atoms)
            if is_acyclic(result):
                sub = search(img.query)
                if isinstance(sub, UntanglingWitness):
                    step = UntanglingStep(q, img.atoms, result, "image_is_previous")
                    return UntanglingWitness(sub.base, sub.steps + (step,))
                if sub is BUDGET:
                    hit_budget = True
            if is_acyclic(img.query) and untangling_collision_free(q, img.atoms):
                sub = search(result)
                if isinstance(sub, UntanglingWitness):
                    step = UntanglingStep(q, img.atoms, result, "result_is_previous")
                    return UntanglingWitness(sub.base, sub.steps + (step,))
                if sub is BUDGET:
                    hit_budget = True
        if hit_budget:
            memo_unknown.add(key)
            return BUDGET
        memo_no.add(key)
        return None

    out = search(query)
    if isinstance(out, UntanglingWitness):
        assert validate_untangling_witness(query, out)
        return "yes", out
    if out is BUDGET:
        return "unknown", None
    return "no", None


# -- mirrors -----------------------------------------------------------------


@dataclass(frozen=True)
class MirrorWitness:
    """Acyclic image plus a shared-fixing isomorphism from the rest onto it."""

    image_atoms: frozenset
    iso: dict  # remaining-atom variables -> image variables, identity on shared

    @property
    def image_query(self) -> Query:
        return _induced_subquery(self.image_atoms)


def validate_mirror_witness(query: Query, witness: MirrorWitness) -> bool:
    image_atoms = witness.image_atoms
    if not image_atoms <= set(query.atoms):
        return False
    rest = [a for a in query.atoms if a not in image_atoms]
    if not rest or len(rest) != len(image_atoms):
        return False
    if not is_acyclic(witness.image_query):
        return False
    image_vars = {v for a in image_atoms for v in a.args}
    rest_vars = {v for a in rest for v in a.args}
    iso = witness.iso
    if set(iso) != rest_vars or not _is_injective(iso):
        return False
    for v in rest_vars & image_vars:
        if iso[v] != v:
            return False
    mapped = frozenset(a.rename(iso) for a in rest)
    return mapped == image_atoms


def is_mirror(query: Query) -> Optional[MirrorWitness]:
    """First acyclic image whose complement is isomorphic to it, fixing the
    shared variables; None when no decomposition exists."""
    if not query.is_full:
        raise ValueError("mirror detection is defined for full queries")
    for img in images(query):
        rest = [a for a in query.atoms if a not in img.atoms]
        if not rest or len(rest) != len(img.atoms):
            continue
        if not is_acyclic(img.query):
            continue
        image_vars = {v for a in img.atoms for v in a.args}
        rest_vars = {v for a in rest for v in a.args}
        if len(rest_vars) != len(image_vars):
            continue
        pinned = {v: v for v in rest_vars & image_vars}
        for iso in find_maps(tuple(rest), tuple(sorted(img.atoms)),
                             pinned=pinned, injective=True):
            mapped = frozenset(a.rename(iso) for a in rest)
            if mapped == img.atoms:
                witness = MirrorWitness(img.atoms, iso)
                assert validate_mirror_witness(query, witness)
                return witness
    return None


# -- hardness transfer --------------------------------------------------------


def hardness_transfer(query: Query):
    """Image whose untangling has a cyclic core while every image of the query
    contains none or all of the result's variables; None otherwise."""
    if not query.is_full:
        raise ValueError("hardness transfer is defined for full queries")
    imgs = images(query)
    for img in imgs:
        result = untangling_step(query, img.atoms)
        if not result.atoms:
            continue
        rvars = set(result.all_vars)
        ok = True
        for other in imgs:
            ovars = {v for a in other.atoms for v in a.args}
            inter = ovars & rvars
            if inter and inter != rvars:
                ok = False
                break
        if not ok:
            continue
        if not is_acyclic(core(result)):
            return img, result
    return None


def has_nested_images(query: Query) -> bool:
    """Every pair of images comparable by atom-set containment."""
    imgs = [img.atoms for img in images(query)]
    for a, b in itertools.combinations(imgs, 2):
        if not (a <= b or b <= a):
            return False
    return True


# -- classification -----------------------------------------------------------

PROBLEM_FIRST = "first-solution"
PROBLEM_EVAL = "evaluation"
PROBLEM_CONST = "enumeration-constant-delay"
PROBLEM_LINEAR = "enumeration-linear-delay"

V_LINEAR_TIME = "linear-time"
V_LINEAR_IO = "linear-input-output"
V_CONSTANT = "constant-delay"
V_LINEAR_DELAY = "linear-delay"
V_COND_HARD = "conditionally-hard"
V_UNKNOWN = "unknown"


@dataclass(frozen=True)
class Verdict:
    problem: str
    verdict: str
    assumption: str
    citation: str

    def to_json(self) -> dict:
        return {
            "problem": self.problem,
            "verdict": self.verdict,
            "assumption": self.assumption,
            "citation": self.citation,
        }


@dataclass
class ClassificationReport:
    query: Query
    minimized: bool
    analyzed: Query
    is_full: bool
    is_boolean: bool
    is_unary: bool
    is_binary: bool
    acyclic: bool
    join_tree: Optional[JoinTree]
    free_connex: bool
    minimal: bool
    core: Query
    core_acyclic: bool
    full_core: Optional[Query]
    images: list
    mirror: Optional[MirrorWitness]
    untangleable: str  # yes | no | unknown | n/a
    untangling_witness: Optional[UntanglingWitness]
    hardness_witness: Optional[tuple]
    fixture_name: Optional[str]
    verdicts: list = field(default_factory=list)

    def verdict_for(self, problem: str) -> Optional[Verdict]:
        for v in self.verdicts:
            if v.problem == problem:
                return v
        return None

    def to_json(self) -> dict:
        return {
            "query": serialize_query(self.query),
            "minimized": self.minimized,
            "analyzed_query": serialize_query(self.analyzed),
            "is_full": self.is_full,
            "is_boolean": self.is_boolean,
            "is_unary": self.is_unary,
            "is_binary": self.is_binary,
            "acyclic": self.acyclic,
            "free_connex": self.free_connex,
            "minimal": self.minimal,
            "core": serialize_query(self.core),
            "core_acyclic": self.core_acyclic,
            "full_core": serialize_query(self.full_core) if self.full_core else None,
            "images": [serialize_query(i.query) for i in self.images],
            "mirror": (
                {"image": serialize_query(self.mirror.image_query),
                 "iso": dict(sorted(self.mirror.iso.items()))}
                if self.mirror else None
            ),
            "untangleable": self.untangleable,
            "fixture": self.fixture_name,
            "verdicts": [v.to_json() for v in self.verdicts],
        }


def _registry():
    """Canonical-form registry of individually settled query shapes."""
    from . import fixtures

    return fixtures.classification_registry()


def classify(query: Query, untangle_budget: int = DEFAULT_UNTANGLE_BUDGET) -> ClassificationReport:
    """Structural facts plus the verdict table, in priority order.

    Non-minimal inputs are minimised first and the verdicts apply to the
    minimal form.
    """
    analyzed, _ = minimal_form_with_retraction(query)
    minimized = analyzed != query

    q = analyzed
    tree = gyo_acyclic(q)
    acyclic = tree is not None
    fc = is_free_connex(q) if acyclic else False
    qcore = core(q)
    core_acyclic = is_acyclic(qcore)
    fcore = make_query(qcore.atoms, qcore.all_vars) if q.is_full else None

    imgs = []
    mirror = None
    unt_status, unt_witness = "n/a", None
    hardness = None
    if q.is_full and len(q.all_vars) <= max_vars_limit():
        imgs = images(q)
        mirror = is_mirror(q)
        unt_status, unt_witness = is_untangleable(q, budget=untangle_budget)
        if unt_status != "yes":
            hardness = hardness_transfer(q)

    registry = _registry()
    entry = registry.get(canonical_key(q))
    fixture_name = entry["name"] if entry else None

    verdicts: dict = {}

    def put(problem: str, verdict: str, assumption: str, citation: str) -> None:
        if problem not in verdicts:
            verdicts[problem] = Verdict(problem, verdict, assumption, citation)

    # (1) cyclic core: not even one solution in linear time.
    if not core_acyclic:
        put(PROBLEM_FIRST, V_COND_HARD, "sHyperclique", "Thm 3.5")
        put(PROBLEM_EVAL, V_COND_HARD, "sHyperclique", "Thm 3.5")
        put(PROBLEM_CONST, V_COND_HARD, "sHyperclique", "Thm 3.5")
        put(PROBLEM_LINEAR, V_COND_HARD, "sHyperclique", "Thm 3.5")

    # (2) Boolean/unary minimal: linear-time evaluation iff acyclic.
    if q.is_boolean or q.arity == 1:
        if acyclic:
            put(PROBLEM_EVAL, V_LINEAR_TIME, "none", "Thm 3.2")
            put(PROBLEM_FIRST, V_LINEAR_TIME, "none", "Thm 3.2")
            put(PROBLEM_CONST, V_CONSTANT, "none", "Thm 2.2")
            put(PROBLEM_LINEAR, V_LINEAR_DELAY, "none", "Thm 2.2")
        else:
            put(PROBLEM_EVAL, V_COND_HARD, "sHyperclique", "Thm 3.2")

    # (3) binary minimal: constant delay iff acyclic free-connex.
    if q.arity == 2:
        if acyclic and fc:
            put(PROBLEM_CONST, V_CONSTANT, "none", "Thm 2.2")
        else:
            put(PROBLEM_CONST, V_COND_HARD, "BMM+Hyperclique", "Thm 3.4")

    # (4) acyclic free-connex: constant delay.
    if acyclic and fc:
        put(PROBLEM_CONST, V_CONSTANT, "none", "Thm 2.2")
    if acyclic:
        put(PROBLEM_LINEAR, V_LINEAR_DELAY, "none", "Thm 2.2")
        put(PROBLEM_FIRST, V_LINEAR_TIME, "none", "Thm 2.2")
        if fc:
            put(PROBLEM_EVAL, V_LINEAR_IO, "none", "Thm 2.2")

    # (5) mirrors: constant delay.
    if mirror is not None:
        put(PROBLEM_CONST, V_CONSTANT, "none", "Prop 5.2")

    # Registry entries settled individually (bespoke algorithms, encodings)
    # land between the general upper-bound rules and the untangling rules.
    if entry:
        for problem, verdict, assumption, citation in entry.get("verdicts", []):
            put(problem, verdict, assumption, citation)

    # (6) untangleable full queries: linear delay.
    if unt_status == "yes":
        put(PROBLEM_LINEAR, V_LINEAR_DELAY, "none", "Prop 4.3")
        put(PROBLEM_FIRST, V_LINEAR_TIME, "none", "Prop 4.3")

    # (7) nested images without untangling: conditionally hard.
    if q.is_full and unt_status == "no" and imgs and has_nested_images(q):
        put(PROBLEM_LINEAR, V_COND_HARD, "sHyperclique", "Thm 4.8")

    # (8) hardness transfer witness.
    if hardness is not None:
        put(PROBLEM_LINEAR, V_COND_HARD, "sHyperclique", "Prop 4.7")

    # Derived fills: constant delay implies linear delay implies first solution.
    got_const = verdicts.get(PROBLEM_CONST)
    if got_const and got_const.verdict == V_CONSTANT:
        put(PROBLEM_LINEAR, V_LINEAR_DELAY, got_const.assumption, got_const.citation)
        put(PROBLEM_EVAL, V_LINEAR_IO, got_const.assumption, got_const.citation)
    got_lin = verdicts.get(PROBLEM_LINEAR)
    if got_lin and got_lin.verdict == V_LINEAR_DELAY:
        put(PROBLEM_FIRST, V_LINEAR_TIME, got_lin.assumption, got_lin.citation)
    if core_acyclic and q.is_full:
        put(PROBLEM_FIRST, V_LINEAR_TIME, "none", "Thm 2.2")

    # (10) everything else stays open.
    for problem in (PROBLEM_FIRST, PROBLEM_EVAL, PROBLEM_CONST, PROBLEM_LINEAR):
        put(problem, V_UNKNOWN, "none", "open")

    ordered = [verdicts[p] for p in
               (PROBLEM_FIRST, PROBLEM_EVAL, PROBLEM_CONST, PROBLEM_LINEAR)]
    return ClassificationReport(
        query=query,
        minimized=minimized,
        analyzed=q,
        is_full=q.is_full,
        is_boolean=q.is_boolean,
        is_unary=q.arity == 1,
        is_binary=q.arity == 2,
        acyclic=acyclic,
        join_tree=tree,
        free_connex=fc,
        minimal=is_minimal(q),
        core=qcore,
        core_acyclic=core_acyclic,
        full_core=fcore,
        images=imgs,
        mirror=mirror,
        untangleable=unt_status,
        untangling_witness=unt_witness,
        hardness_witness=hardness,
        fixture_name=fixture_name,
        verdicts=ordered,
    )
