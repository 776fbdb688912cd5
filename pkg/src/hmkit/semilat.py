"""Partial meet-semilattices presented as reflexive functional ternary relations.

A structure with one ternary relation is treated as the graph of a partial
binary meet: a triple (a, b, c) asserts that a meet b is defined and equals
c.  Recognition decides whether some total meet semilattice extends the
partial operation; the freest candidate (non-empty subsets of the universe
under union, modulo the generated congruence) settles the question.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

from .structures import (
    Homomorphism,
    Relation,
    RelationalStructure,
    SizeLimitExceeded,
    StructureError,
    product,
)
from .homsearch import OperationTable

DEFAULT_UNIVERSE_BOUND = 12


class DecompositionError(StructureError):
    """decompose_product_hom could not verify the meet decomposition."""


def single_ternary_relation(s: RelationalStructure) -> Relation:
    syms = s.symbols()
    if len(syms) != 1:
        raise StructureError(f"expected a single relation, found {len(syms)}")
    rel = s.relations[syms[0]]
    if rel.arity != 3:
        raise StructureError(f"expected a ternary relation, found arity {rel.arity}")
    return rel


def meet_lookup(s: RelationalStructure, a: int, b: int) -> int | None:
    """The unique c with (a, b, c) in the relation; None when absent."""
    rel = single_ternary_relation(s)
    found: int | None = None
    for t in rel.sorted_tuples():
        if t[0] == a and t[1] == b:
            if found is not None and found != t[2]:
                raise StructureError(
                    f"non-functional relation: ({a},{b},{found}) and ({a},{b},{t[2]}) both present"
                )
            found = t[2]
    return found


def iterated_meet(s: RelationalStructure, elements: list[int] | tuple[int, ...]) -> int | None:
    """Left-associated fold of meet_lookup; None once any step is undefined."""
    if not elements:
        raise StructureError("iterated meet of an empty sequence")
    acc = elements[0]
    for e in elements[1:]:
        nxt = meet_lookup(s, acc, e)
        if nxt is None:
            return None
        acc = nxt
    return acc


def largest_element(s: RelationalStructure) -> int | None:
    """The element 1 with (a,1,a) and (1,a,a) present for every a, if any."""
    rel = single_ternary_relation(s)
    tuples = rel.tuples
    candidates = [
        t
        for t in range(s.size)
        if all((a, t, a) in tuples and (t, a, a) in tuples for a in range(s.size))
    ]
    if len(candidates) > 1:
        # two largest elements force (t,t',t) and (t,t',t'), so the relation
        # was not functional to begin with
        raise StructureError(f"multiple largest elements {candidates}; relation not functional")
    return candidates[0] if candidates else None


@dataclass(frozen=True)
class PartialSemilatticeWitness:
    """A total meet semilattice extending the partial one.

    ambient is a binary operation table on an extended universe; embedding
    sends each original element to its ambient image.
    """

    ambient: OperationTable
    embedding: tuple[int, ...]


@dataclass(frozen=True)
class Refusal:
    reason: str
    detail: tuple | None = None


def verify_witness(s: RelationalStructure, w: PartialSemilatticeWitness) -> None:
    """Re-check the witness invariants by enumeration; raise on any failure."""
    k = w.ambient.size
    if w.ambient.arity != 2:
        raise StructureError("ambient operation must be binary")
    if len(set(w.embedding)) != s.size:
        raise StructureError("embedding is not injective")
    for v in w.embedding:
        if not (0 <= v < k):
            raise StructureError("embedding value outside ambient universe")
    m = w.ambient.apply
    for x in range(k):
        if m(x, x) != x:
            raise StructureError(f"ambient not idempotent at {x}")
    # commutativity and associativity are cubic in k; guard for the rare
    # large quotient (the construction guarantees both regardless)
    if k <= 256:
        for x in range(k):
            for y in range(k):
                if m(x, y) != m(y, x):
                    raise StructureError(f"ambient not commutative at ({x},{y})")
        if k <= 64:
            for x in range(k):
                for y in range(k):
                    for z in range(k):
                        if m(m(x, y), z) != m(x, m(y, z)):
                            raise StructureError(f"ambient not associative at ({x},{y},{z})")
    rel = single_ternary_relation(s)
    for a, b, c in rel.sorted_tuples():
        if m(w.embedding[a], w.embedding[b]) != w.embedding[c]:
            raise StructureError(f"witness does not realize triple ({a},{b},{c})")


def is_partial_semilattice(
    s: RelationalStructure, bound: int = DEFAULT_UNIVERSE_BOUND
) -> PartialSemilatticeWitness | Refusal:
    """Decide whether s is a partial semilattice; witness or refusal.

    Requires reflexivity and functionality, then asks whether the freest
    extension separates the original elements: take all non-empty subsets
    of the universe under union, generate the congruence identifying
    {a} u {b} with {c} for each triple (a,b,c), and accept iff no two
    singletons merge.  The quotient is the ambient witness.
    """
    rel = single_ternary_relation(s)
    n = s.size
    if n > bound:
        raise SizeLimitExceeded(f"universe size {n} exceeds bound {bound}")
    if n == 0:
        raise StructureError("empty universe")

    for a in range(n):
        if (a, a, a) not in rel.tuples:
            return Refusal("not reflexive", (a,))
    defined: dict[tuple[int, int], int] = {}
    for a, b, c in rel.sorted_tuples():
        if (a, b) in defined and defined[(a, b)] != c:
            return Refusal("not functional", (a, b, defined[(a, b)], c))
        defined[(a, b)] = c

    full = (1 << n) - 1
    parent = list(range(full + 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    # worklist congruence generation: each union (x,y) re-seeds the
    # substitution pairs (x|C, y|C) for every mask C
    queue: deque[tuple[int, int]] = deque()
    for (a, b), c in sorted(defined.items()):
        queue.append(((1 << a) | (1 << b), 1 << c))
    while queue:
        x, y = queue.popleft()
        rx, ry = find(x), find(y)
        if rx == ry:
            continue
        if rx > ry:
            rx, ry = ry, rx
        parent[ry] = rx
        for c in range(1, full + 1):
            if x | c != y | c:
                queue.append((x | c, y | c))

    roots = [find(1 << a) for a in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if roots[i] == roots[j]:
                return Refusal("congruence merges elements", (i, j))

    # quotient semilattice: classes ordered by their minimal member mask
    rep: dict[int, int] = {}
    for mask in range(1, full + 1):
        r = find(mask)
        if r not in rep or mask < rep[r]:
            rep[r] = mask
    ordered_roots = sorted(rep, key=lambda r: rep[r])
    class_index = {r: i for i, r in enumerate(ordered_roots)}
    k = len(ordered_roots)

    values = []
    for r1 in ordered_roots:
        for r2 in ordered_roots:
            values.append(class_index[find(rep[r1] | rep[r2])])
    ambient = OperationTable(2, k, tuple(values))
    embedding = tuple(class_index[find(1 << a)] for a in range(n))
    witness = PartialSemilatticeWitness(ambient, embedding)
    verify_witness(s, witness)
    return witness


@dataclass(frozen=True)
class ProductDecomposition:
    """Either a constant value or the per-factor coordinate maps."""

    constant_value: int | None
    coordinate_maps: tuple[Homomorphism, ...]

    @property
    def is_constant(self) -> bool:
        return self.constant_value is not None


def decompose_product_hom(
    f: Homomorphism,
    factors: list[RelationalStructure] | tuple[RelationalStructure, ...],
    tops: list[int] | tuple[int, ...],
) -> ProductDecomposition:
    """Split a hom off a product of partial semilattices with largest elements.

    The coordinate maps are f_i(x) = f(tops with x substituted at i); the
    value of f at any point must equal the left-associated iterated meet of
    the coordinate values in the target.  Everything is verified
    extensionally; failure raises DecompositionError.
    """
    if len(factors) != len(tops):
        raise DecompositionError("one top element required per factor")
    if not factors:
        raise DecompositionError("empty factor list")
    for i, (h, t) in enumerate(zip(factors, tops)):
        if largest_element(h) != t:
            raise DecompositionError(f"factor {i}: {t} is not its largest element")

    prod = product(list(factors))
    if prod.size != f.source.size or prod.relations != f.source.relations:
        raise DecompositionError("source of f is not the product of the given factors")

    if f.is_constant():
        return ProductDecomposition(f.mapping[0], ())

    sizes = [h.size for h in factors]

    def rank(coords: tuple[int, ...]) -> int:
        r = 0
        for c, sz in zip(coords, sizes):
            r = r * sz + c
        return r

    maps = []
    for i, h in enumerate(factors):
        vals = []
        for x in range(h.size):
            coords = tuple(tops[:i]) + (x,) + tuple(tops[i + 1:])
            vals.append(f.mapping[rank(coords)])
        try:
            maps.append(Homomorphism(h, f.target, tuple(vals)))
        except StructureError as exc:
            raise DecompositionError(f"coordinate map {i} is not a homomorphism: {exc}") from exc

    for idx, coords in enumerate(itertools.product(*(range(sz) for sz in sizes))):
        expected = iterated_meet(f.target, [m.mapping[c] for m, c in zip(maps, coords)])
        if expected is None:
            raise DecompositionError(f"iterated meet undefined at point {coords}")
        if expected != f.mapping[idx]:
            raise DecompositionError(
                f"meet identity fails at {coords}: meet gives {expected}, f gives {f.mapping[idx]}"
            )
    return ProductDecomposition(None, tuple(maps))


@dataclass(frozen=True)
class MeetClassification:
    """Constant(value) or Meet(non-empty 1-based coordinate set)."""

    constant_value: int | None = None
    meet_coordinates: frozenset[int] | None = None

    def describe(self) -> str:
        if self.constant_value is not None:
            return f"Constant({self.constant_value})"
        coords = ",".join(str(i) for i in sorted(self.meet_coordinates or ()))
        return f"Meet({{{coords}}})"


def classify_meet_operation(t: OperationTable) -> MeetClassification | None:
    """Classify a 0/1 operation table as constant or a coordinate meet.

    Returns None when the table is neither (such a table cannot preserve
    the two-element semilattice structure).
    """
    if t.size != 2:
        raise StructureError(f"classification defined over base {{0,1}}, got size {t.size}")
    if len(set(t.values)) == 1:
        return MeetClassification(constant_value=t.values[0])
    coords = frozenset(
        i + 1
        for i in range(t.arity)
        if t.apply(*(0 if j == i else 1 for j in range(t.arity))) == 0
    )
    if not coords:
        return None
    for args in itertools.product((0, 1), repeat=t.arity):
        if t.apply(*args) != min(args[i - 1] for i in coords):
            return None
    return MeetClassification(meet_coordinates=coords)
