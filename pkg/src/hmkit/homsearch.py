"""Backtracking homomorphism search and operation tables.

The search assigns source elements in ascending id order and tries target
values in ascending order, so the result list is always in lexicographic
order of the mapping tuples.  Forward checking prunes against every
relation tuple with exactly one unassigned coordinate.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .structures import (
    Homomorphism,
    RelationalStructure,
    SignatureMismatch,
    StructureError,
    power,
)


@dataclass(frozen=True)
class SearchOptions:
    """Knobs for find_homs; defaults enumerate everything deterministically."""

    limit: int = 0  # 0 means unlimited
    nonconstant_only: bool = False
    pinned: Mapping[int, int] | None = None  # source id -> forced target id


@dataclass(frozen=True)
class HomCheckResult:
    ok: bool
    symbol: str | None = None
    source_tuple: tuple[int, ...] | None = None
    image_tuple: tuple[int, ...] | None = None


def is_homomorphism(
    source: RelationalStructure, target: RelationalStructure, mapping: Sequence[int]
) -> HomCheckResult:
    """Check a candidate map; on failure report the first violated tuple."""
    mapping = tuple(mapping)
    if source.signature() != target.signature():
        raise SignatureMismatch("endpoints have different signatures")
    if len(mapping) != source.size:
        raise StructureError(f"map has {len(mapping)} entries for universe of size {source.size}")
    for v in mapping:
        if not (0 <= v < target.size):
            raise StructureError(f"map value {v} not in target universe of size {target.size}")
    for sym in source.symbols():
        tgt = target.relations[sym].tuples
        for t in source.relations[sym].sorted_tuples():
            img = tuple(mapping[v] for v in t)
            if img not in tgt:
                return HomCheckResult(False, sym, t, img)
    return HomCheckResult(True)


def find_homs(
    source: RelationalStructure,
    target: RelationalStructure,
    options: SearchOptions | None = None,
) -> list[Homomorphism]:
    """All homomorphisms source -> target, in lexicographic map order."""
    opts = options or SearchOptions()
    if source.signature() != target.signature():
        raise SignatureMismatch("endpoints have different signatures")
    if target.size == 0:
        return []

    # Index source tuples by the elements they mention so that assigning
    # one element only re-checks the tuples it occurs in.
    watch: list[list[tuple[str, tuple[int, ...]]]] = [[] for _ in range(source.size)]
    for sym in source.symbols():
        for t in source.relations[sym].sorted_tuples():
            for v in set(t):
                watch[v].append((sym, t))

    pinned = dict(opts.pinned or {})
    for k, v in pinned.items():
        if not (0 <= k < source.size) or not (0 <= v < target.size):
            raise StructureError(f"pin {k}->{v} out of range")

    mapping: list[int | None] = [None] * source.size
    out: list[Homomorphism] = []

    def locally_consistent(v: int) -> bool:
        for sym, t in watch[v]:
            free = [w for w in set(t) if mapping[w] is None]
            if len(free) > 1:
                continue
            tgt = target.relations[sym].tuples
            if not free:
                if tuple(mapping[w] for w in t) not in tgt:  # type: ignore[misc]
                    return False
            else:
                hole = free[0]
                ok = any(
                    tuple(c if w == hole else mapping[w] for w in t) in tgt
                    for c in range(target.size)
                )
                if not ok:
                    return False
        return True

    def emit() -> bool:
        """Record the current total map; returns True when the limit is hit."""
        m = tuple(mapping)  # type: ignore[arg-type]
        if opts.nonconstant_only and len(set(m)) <= 1:
            return False
        out.append(Homomorphism(source, target, m))
        return opts.limit > 0 and len(out) >= opts.limit

    def extend(v: int) -> bool:
        if v == source.size:
            return emit()
        choices = [pinned[v]] if v in pinned else range(target.size)
        for w in choices:
            mapping[v] = w
            if locally_consistent(v) and extend(v + 1):
                return True
            mapping[v] = None
        return False

    extend(0)
    return out


def count_homs(source: RelationalStructure, target: RelationalStructure) -> int:
    return len(find_homs(source, target))


def find_retraction(
    big: RelationalStructure, small: RelationalStructure
) -> tuple[Homomorphism, Homomorphism] | None:
    """A coretraction/retraction pair (into, onto) with onto . into = id, or None.

    Enumerates embeddings of `small` in canonical order; for each, searches
    for a left inverse with the embedding's values pinned.
    """
    for beta in find_homs(small, big):
        if len(set(beta.mapping)) != small.size:
            continue
        pins = {img: x for x, img in enumerate(beta.mapping)}
        alphas = find_homs(big, small, SearchOptions(limit=1, pinned=pins))
        if alphas:
            return beta, alphas[0]
    return None


@dataclass(frozen=True)
class OperationTable:
    """A finitary operation on {0..size-1} stored as a flat value table.

    Values are listed for argument tuples in lexicographic order with the
    first coordinate most significant (row-major).
    """

    arity: int
    size: int
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))
        if self.arity < 0:
            raise StructureError(f"arity must be >= 0, got {self.arity}")
        if self.size < 1:
            raise StructureError(f"size must be >= 1, got {self.size}")
        if len(self.values) != self.size**self.arity:
            raise StructureError(
                f"table needs {self.size ** self.arity} values for arity {self.arity}, got {len(self.values)}"
            )
        for v in self.values:
            if not (0 <= v < self.size):
                raise StructureError(f"table value {v} out of range for size {self.size}")

    def apply(self, *args: int) -> int:
        if len(args) != self.arity:
            raise StructureError(f"expected {self.arity} arguments, got {len(args)}")
        idx = 0
        for a in args:
            if not (0 <= a < self.size):
                raise StructureError(f"argument {a} out of range for size {self.size}")
            idx = idx * self.size + a
        return self.values[idx]

    def is_idempotent(self) -> bool:
        return all(self.apply(*([a] * self.arity)) == a for a in range(self.size))

    def graph_tuples(self) -> frozenset[tuple[int, ...]]:
        """The graph {(a1..ak, f(a1..ak))} as (arity+1)-tuples."""
        return frozenset(
            args + (self.apply(*args),)
            for args in itertools.product(range(self.size), repeat=self.arity)
        )

    @staticmethod
    def projection(arity: int, size: int, coord: int) -> "OperationTable":
        """The projection onto 0-based coordinate `coord`."""
        if not (0 <= coord < arity):
            raise StructureError(f"coordinate {coord} out of range for arity {arity}")
        vals = tuple(
            args[coord] for args in itertools.product(range(size), repeat=arity)
        )
        return OperationTable(arity, size, vals)

    @staticmethod
    def constant(arity: int, size: int, value: int) -> "OperationTable":
        if not (0 <= value < size):
            raise StructureError(f"constant {value} out of range for size {size}")
        return OperationTable(arity, size, (value,) * (size**arity))


def operation_to_json(t: OperationTable) -> dict:
    return {"arity": t.arity, "size": t.size, "values": list(t.values)}


def operation_from_json(data: dict) -> OperationTable:
    if not isinstance(data, dict) or set(data) - {"arity", "size", "values"}:
        raise StructureError("operation document must have keys 'arity', 'size', 'values'")
    arity, size, values = data.get("arity"), data.get("size"), data.get("values")
    if not isinstance(arity, int) or not isinstance(size, int) or not isinstance(values, list):
        raise StructureError("operation fields have wrong types")
    if not all(isinstance(v, int) for v in values):
        raise StructureError("operation values must be integers")
    return OperationTable(arity, size, tuple(values))


def polymorphisms(
    s: RelationalStructure, arity: int, nonconstant_only: bool = False
) -> list[OperationTable]:
    """All arity-n polymorphisms of s, as operation tables.

    A polymorphism of arity n is a homomorphism from the n-th power.  Power
    element ids are exactly the lexicographic ranks of argument tuples, so a
    homomorphism's mapping tuple is already a valid row-major value table.
    """
    if arity < 1:
        raise StructureError(f"polymorphism arity must be >= 1, got {arity}")
    src = power(s, arity)
    homs = find_homs(src, s, SearchOptions(nonconstant_only=nonconstant_only))
    return [OperationTable(arity, s.size, h.mapping) for h in homs]
