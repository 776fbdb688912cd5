"""Finite relational structures and their combinators.

Universes are dense integer ranges 0..n-1; optional string labels are
metadata only.  All values are immutable after construction and every
operation is a pure function, so everything here is safe to share across
threads.  Enumeration order is canonical (sorted) throughout to keep
results reproducible.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

DEFAULT_MAX_TUPLES = 5_000_000


class StructureError(ValueError):
    """A structure or homomorphism invariant is violated."""


class SignatureMismatch(StructureError):
    """Operands do not share the same relation symbols and arities."""


class SizeLimitExceeded(RuntimeError):
    """A construction would exceed the configured tuple bound."""


@dataclass(frozen=True)
class Relation:
    arity: int
    tuples: frozenset[tuple[int, ...]]

    def sorted_tuples(self) -> list[tuple[int, ...]]:
        return sorted(self.tuples)


@dataclass(frozen=True)
class RelationalStructure:
    """A finite universe {0..size-1} with named finitary relations."""

    size: int
    relations: Mapping[str, Relation]
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        # Normalize to plain immutable containers; invariants are checked
        # by validate() so that load paths can report precise errors.
        rels = {
            sym: rel if isinstance(rel, Relation) else Relation(rel[0], frozenset(map(tuple, rel[1])))
            for sym, rel in dict(self.relations).items()
        }
        object.__setattr__(self, "relations", rels)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))

    def signature(self) -> dict[str, int]:
        return {sym: rel.arity for sym, rel in self.relations.items()}

    def symbols(self) -> list[str]:
        return sorted(self.relations)

    def label(self, i: int) -> str:
        if self.labels is not None and 0 <= i < len(self.labels):
            return self.labels[i]
        return str(i)

    def rename(self, symbol_map: Mapping[str, str]) -> "RelationalStructure":
        """Same structure with relation symbols renamed."""
        rels = {symbol_map.get(sym, sym): rel for sym, rel in self.relations.items()}
        if len(rels) != len(self.relations):
            raise StructureError("symbol renaming collides")
        return RelationalStructure(self.size, rels, self.labels)

    def same_signature(self, other: "RelationalStructure") -> bool:
        return self.signature() == other.signature()


def validate(s: RelationalStructure) -> None:
    """Check all structure invariants; raise StructureError naming the first violation."""
    if s.size < 0:
        raise StructureError("negative universe size")
    if s.labels is not None and len(s.labels) != s.size:
        raise StructureError(f"label count {len(s.labels)} != universe size {s.size}")
    for sym in s.symbols():
        rel = s.relations[sym]
        if rel.arity < 1:
            raise StructureError(f"relation {sym}: arity must be positive, got {rel.arity}")
        for t in rel.sorted_tuples():
            if len(t) != rel.arity:
                raise StructureError(f"relation {sym}: arity mismatch, tuple {t} has length {len(t)} != {rel.arity}")
            for v in t:
                if not (0 <= v < s.size):
                    raise StructureError(f"relation {sym}: id out of range, tuple {t} contains {v}")


def validation_report(s: RelationalStructure) -> str | None:
    """None when valid, otherwise the first violation message."""
    try:
        validate(s)
    except StructureError as exc:
        return str(exc)
    return None


def _require_same_signature(structures: Sequence[RelationalStructure]) -> dict[str, int]:
    sig = structures[0].signature()
    for s in structures[1:]:
        if s.signature() != sig:
            raise SignatureMismatch(f"signature mismatch: {sig} vs {s.signature()}")
    return sig


def is_reflexive(s: RelationalStructure) -> bool:
    """True iff every relation contains every constant tuple of the universe."""
    for rel in s.relations.values():
        for a in range(s.size):
            if (a,) * rel.arity not in rel.tuples:
                return False
    return True


def binary_projection(s: RelationalStructure) -> RelationalStructure:
    """All 2-coordinate projections of every relation, as a binary structure.

    Relations of arity 1 are rejected: projections are defined only for
    coordinate sets of size >= 2.
    """
    rels: dict[str, Relation] = {}
    for sym in s.symbols():
        rel = s.relations[sym]
        if rel.arity < 2:
            raise StructureError(f"relation {sym} has arity {rel.arity} < 2; binary projection undefined")
        for i, j in itertools.combinations(range(rel.arity), 2):
            pairs = frozenset((t[i], t[j]) for t in rel.tuples)
            rels[f"{sym}{{{i + 1},{j + 1}}}"] = Relation(2, pairs)
    return RelationalStructure(s.size, rels, s.labels)


@dataclass(frozen=True)
class ComponentDecomposition:
    partition: tuple[tuple[int, ...], ...]
    induced: tuple[RelationalStructure, ...]

    def block_of(self, elem: int) -> int:
        for k, block in enumerate(self.partition):
            if elem in block:
                return k
        raise ValueError(f"element {elem} not in any block")


def connected_components(s: RelationalStructure) -> ComponentDecomposition:
    """Classes of the equivalence closure of all binary-projection edges."""
    parent = list(range(s.size))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    proj = binary_projection(s) if s.relations else s
    for rel in proj.relations.values():
        for a, b in rel.tuples:
            union(a, b)

    blocks: dict[int, list[int]] = {}
    for v in range(s.size):
        blocks.setdefault(find(v), []).append(v)
    partition = tuple(tuple(sorted(b)) for _, b in sorted(blocks.items()))
    induced = tuple(induced_substructure(s, block) for block in partition)
    return ComponentDecomposition(partition, induced)


def is_connected(s: RelationalStructure) -> bool:
    return len(connected_components(s).partition) <= 1


def product(structures: Sequence[RelationalStructure], max_tuples: int = DEFAULT_MAX_TUPLES) -> RelationalStructure:
    """Direct product; element ids are lexicographic ranks of coordinate tuples."""
    if not structures:
        raise StructureError("product of empty list")
    sig = _require_same_signature(structures)

    size = 1
    for s in structures:
        size *= s.size
    total = 0
    for sym in sig:
        cnt = 1
        for s in structures:
            cnt *= len(s.relations[sym].tuples)
        total += cnt
    if size > max_tuples or total > max_tuples:
        raise SizeLimitExceeded(f"product needs {max(size, total)} > {max_tuples} tuples")

    sizes = [s.size for s in structures]

    def rank(coords: Sequence[int]) -> int:
        r = 0
        for c, n in zip(coords, sizes):
            r = r * n + c
        return r

    rels: dict[str, Relation] = {}
    for sym, arity in sig.items():
        out = set()
        for combo in itertools.product(*(s.relations[sym].sorted_tuples() for s in structures)):
            # combo[k] is the factor-k tuple; build the product tuple positionwise
            out.add(tuple(rank([t[i] for t in combo]) for i in range(arity)))
        rels[sym] = Relation(arity, frozenset(out))

    labels = None
    if all(s.labels is not None for s in structures):
        labels = tuple(
            "(" + ",".join(s.label(c) for s, c in zip(structures, coords)) + ")"
            for coords in itertools.product(*(range(n) for n in sizes))
        )
    return RelationalStructure(size, rels, labels)


def power(s: RelationalStructure, n: int, max_tuples: int = DEFAULT_MAX_TUPLES) -> RelationalStructure:
    """The n-th direct power of s, n >= 1."""
    if n < 1:
        raise StructureError(f"power exponent must be >= 1, got {n}")
    return product([s] * n, max_tuples=max_tuples)


def disjoint_union(structures: Sequence[RelationalStructure]) -> RelationalStructure:
    """Tagged union of universes and relations, in the given order."""
    if not structures:
        raise StructureError("disjoint union of empty list")
    sig = _require_same_signature(structures)
    offsets = []
    total = 0
    for s in structures:
        offsets.append(total)
        total += s.size
    rels: dict[str, Relation] = {}
    for sym, arity in sig.items():
        out = set()
        for s, off in zip(structures, offsets):
            for t in s.relations[sym].tuples:
                out.add(tuple(v + off for v in t))
        rels[sym] = Relation(arity, frozenset(out))
    labels = None
    if all(s.labels is not None for s in structures):
        labels = tuple(
            f"{k}:{s.label(i)}" for k, s in enumerate(structures) for i in range(s.size)
        )
    return RelationalStructure(total, rels, labels)


def induced_substructure(s: RelationalStructure, ids: Iterable[int]) -> RelationalStructure:
    """Substructure on the given ids (re-indexed in sorted order)."""
    subset = sorted(set(ids))
    for v in subset:
        if not (0 <= v < s.size):
            raise StructureError(f"id {v} not in universe of size {s.size}")
    index = {v: k for k, v in enumerate(subset)}
    rels = {
        sym: Relation(
            rel.arity,
            frozenset(tuple(index[v] for v in t) for t in rel.tuples if all(v in index for v in t)),
        )
        for sym, rel in s.relations.items()
    }
    labels = tuple(s.label(v) for v in subset) if s.labels is not None else None
    return RelationalStructure(len(subset), rels, labels)


def is_weak_substructure(h: RelationalStructure, g: RelationalStructure) -> bool:
    """True iff h's universe and every tuple set are contained in g's."""
    if h.signature() != g.signature():
        return False
    if h.size > g.size:
        return False
    return all(h.relations[sym].tuples <= g.relations[sym].tuples for sym in h.relations)


@dataclass(frozen=True)
class Homomorphism:
    """A total map between structure universes, verified to preserve relations."""

    source: RelationalStructure
    target: RelationalStructure
    mapping: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "mapping", tuple(self.mapping))
        if len(self.mapping) != self.source.size:
            raise StructureError(f"map has {len(self.mapping)} entries for universe of size {self.source.size}")
        for v in self.mapping:
            if not (0 <= v < self.target.size):
                raise StructureError(f"map value {v} not in target universe of size {self.target.size}")
        if self.source.signature() != self.target.signature():
            raise SignatureMismatch("homomorphism endpoints have different signatures")
        for sym in self.source.symbols():
            tgt = self.target.relations[sym].tuples
            for t in self.source.relations[sym].sorted_tuples():
                img = tuple(self.mapping[v] for v in t)
                if img not in tgt:
                    raise StructureError(f"not a homomorphism: {sym} tuple {t} maps to {img}")

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    def is_constant(self) -> bool:
        return len(set(self.mapping)) <= 1

    def is_bijective(self) -> bool:
        return self.source.size == self.target.size and len(set(self.mapping)) == self.source.size

    def compose(self, inner: "Homomorphism") -> "Homomorphism":
        """self after inner (inner's target must be self's source)."""
        if inner.target is not self.source and inner.target != self.source:
            raise StructureError("composition endpoints do not match")
        return Homomorphism(inner.source, self.target, tuple(self.mapping[v] for v in inner.mapping))

    @staticmethod
    def identity(s: RelationalStructure) -> "Homomorphism":
        return Homomorphism(s, s, tuple(range(s.size)))


def image_structure(phi: Homomorphism) -> RelationalStructure:
    """The image of the source: mapped universe with mapped relation tuples."""
    image = sorted(set(phi.mapping))
    index = {v: k for k, v in enumerate(image)}
    rels = {
        sym: Relation(
            rel.arity,
            frozenset(tuple(index[phi.mapping[v]] for v in t) for t in rel.tuples),
        )
        for sym, rel in phi.source.relations.items()
    }
    labels = tuple(phi.target.label(v) for v in image) if phi.target.labels is not None else None
    return RelationalStructure(len(image), rels, labels)


def kernel(phi: Homomorphism) -> tuple[tuple[int, ...], ...]:
    """Preimage classes of the map, as a canonical partition of the source."""
    classes: dict[int, list[int]] = {}
    for v, w in enumerate(phi.mapping):
        classes.setdefault(w, []).append(v)
    return tuple(tuple(sorted(block)) for block in sorted(classes.values(), key=lambda b: b[0]))


def find_isomorphism(a: RelationalStructure, b: RelationalStructure) -> Homomorphism | None:
    """A bijection that is a homomorphism both ways, or None.

    Backtracking over injective assignments in canonical order; the first
    isomorphism in lexicographic map order is returned.
    """
    if a.signature() != b.signature() or a.size != b.size:
        return None
    for sym in a.symbols():
        if len(a.relations[sym].tuples) != len(b.relations[sym].tuples):
            return None

    occurrences: dict[int, list[tuple[str, tuple[int, ...]]]] = {v: [] for v in range(a.size)}
    for sym in a.symbols():
        for t in a.relations[sym].sorted_tuples():
            for v in set(t):
                occurrences[v].append((sym, t))

    mapping: list[int | None] = [None] * a.size
    used = [False] * b.size

    def consistent(v: int) -> bool:
        for sym, t in occurrences[v]:
            if all(mapping[w] is not None for w in t):
                img = tuple(mapping[w] for w in t)  # type: ignore[misc]
                if img not in b.relations[sym].tuples:
                    return False
        return True

    def extend(v: int) -> Homomorphism | None:
        if v == a.size:
            fwd = tuple(mapping)  # type: ignore[arg-type]
            inv = [0] * b.size
            for x, y in enumerate(fwd):
                inv[y] = x
            for sym in b.symbols():
                for t in b.relations[sym].tuples:
                    if tuple(inv[w] for w in t) not in a.relations[sym].tuples:
                        return None
            return Homomorphism(a, b, fwd)
        for w in range(b.size):
            if used[w]:
                continue
            mapping[v] = w
            used[w] = True
            if consistent(v):
                found = extend(v + 1)
                if found is not None:
                    return found
            mapping[v] = None
            used[w] = False
        return None

    return extend(0)


# --- standard small structures ---------------------------------------------


def two_element_semilattice(symbol: str = "R") -> RelationalStructure:
    """The graph of the meet on {0,1}: {(0,0,0),(0,1,0),(1,0,0),(1,1,1)}."""
    rel = Relation(3, frozenset({(0, 0, 0), (0, 1, 0), (1, 0, 0), (1, 1, 1)}))
    return RelationalStructure(2, {symbol: rel}, ("0", "1"))


def one_element_structure(symbol: str = "R", arity: int = 3) -> RelationalStructure:
    """One element with the single constant tuple (the ternary point by default)."""
    return RelationalStructure(1, {symbol: Relation(arity, frozenset({(0,) * arity}))}, ("0",))


# --- JSON file format -------------------------------------------------------


def structure_to_json(s: RelationalStructure) -> dict:
    return {
        "universe": [s.label(i) for i in range(s.size)],
        "relations": {
            sym: {"arity": rel.arity, "tuples": [list(t) for t in rel.sorted_tuples()]}
            for sym, rel in sorted(s.relations.items())
        },
    }


def structure_from_json(data: dict) -> RelationalStructure:
    """Parse the structure file format; rejects unknown keys and malformed entries."""
    if not isinstance(data, dict):
        raise StructureError("structure document must be a JSON object")
    unknown = set(data) - {"universe", "relations"}
    if unknown:
        raise StructureError(f"unknown top-level keys: {sorted(unknown)}")
    universe = data.get("universe")
    if not isinstance(universe, list) or not all(isinstance(x, str) for x in universe):
        raise StructureError("'universe' must be a list of strings")
    relations = data.get("relations", {})
    if not isinstance(relations, dict):
        raise StructureError("'relations' must be an object")
    size = len(universe)
    rels: dict[str, Relation] = {}
    for sym, body in relations.items():
        if not isinstance(body, dict) or set(body) - {"arity", "tuples"}:
            raise StructureError(f"relation {sym}: expected keys 'arity' and 'tuples'")
        arity = body.get("arity")
        tuples = body.get("tuples")
        if not isinstance(arity, int) or arity < 1:
            raise StructureError(f"relation {sym}: arity must be a positive integer")
        if not isinstance(tuples, list):
            raise StructureError(f"relation {sym}: 'tuples' must be a list")
        seen: set[tuple[int, ...]] = set()
        for raw in tuples:
            if not isinstance(raw, list) or not all(isinstance(v, int) for v in raw):
                raise StructureError(f"relation {sym}: tuple {raw} must be a list of integers")
            t = tuple(raw)
            if len(t) != arity:
                raise StructureError(f"relation {sym}: arity mismatch, tuple {list(t)} has length {len(t)} != {arity}")
            for v in t:
                if not (0 <= v < size):
                    raise StructureError(f"relation {sym}: id out of range, tuple {list(t)} contains {v}")
            if t in seen:
                raise StructureError(f"relation {sym}: duplicate tuple {list(t)}")
            seen.add(t)
        rels[sym] = Relation(arity, frozenset(seen))
    s = RelationalStructure(size, rels, tuple(universe))
    validate(s)
    return s


def load_structure(path: str) -> RelationalStructure:
    with open(path, "r", encoding="utf-8") as fh:
        return structure_from_json(json.load(fh))


def dump_structure(s: RelationalStructure, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(structure_to_json(s), fh, indent=2)
        fh.write("\n")
