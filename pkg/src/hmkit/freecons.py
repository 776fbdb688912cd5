"""Free algebras as subpowers, the collapse onto semilattice powers, and
the bounded search for evidence that no semilattice labeling survives.

The pipeline: free_structure builds the binary free algebra of the variety
generated by a finite algebra together with its ternary free relational
structure; compute_H finds, per connected component, the non-constant
homomorphisms into the two-element semilattice structure; collapse maps
every element to its tuple of homomorphism values, landing in a disjoint
union of semilattice powers.  Verification routines then machine-check the
structural facts the construction is designed around.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .homsearch import (
    OperationTable,
    SearchOptions,
    find_homs,
    operation_from_json,
    operation_to_json,
    polymorphisms,
)
from .identlang import (
    Application,
    Identity,
    SLLabeling,
    Term,
    Variable,
    all_labelings,
    holds_in,
    sigma_varset,
)
from .semilat import (
    DecompositionError,
    decompose_product_hom,
    is_partial_semilattice,
    largest_element,
    PartialSemilatticeWitness,
)
from .structures import (
    DEFAULT_MAX_TUPLES,
    Homomorphism,
    Relation,
    RelationalStructure,
    SizeLimitExceeded,
    StructureError,
    connected_components,
    disjoint_union,
    find_isomorphism,
    image_structure,
    induced_substructure,
    is_reflexive,
    kernel,
    one_element_structure,
    power,
    product,
    two_element_semilattice,
)

RELATION_SYMBOL = "R"


class IllDefinedOperation(StructureError):
    """A quotient operation received two different values on one class."""


@dataclass(frozen=True)
class FiniteAlgebra:
    """A finite universe with named total operation tables."""

    size: int
    operations: Mapping[str, OperationTable]
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "operations", dict(self.operations))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
        for sym, table in self.operations.items():
            if table.size != self.size:
                raise StructureError(
                    f"operation {sym} is over a universe of size {table.size}, expected {self.size}"
                )

    def symbols(self) -> list[str]:
        return sorted(self.operations)

    def is_idempotent(self) -> bool:
        return all(t.is_idempotent() for t in self.operations.values())


def algebra_to_json(a: FiniteAlgebra) -> dict:
    labels = a.labels if a.labels is not None else tuple(str(i) for i in range(a.size))
    return {
        "universe": list(labels),
        "operations": {sym: operation_to_json(a.operations[sym]) for sym in a.symbols()},
    }


def algebra_from_json(data: dict) -> FiniteAlgebra:
    if not isinstance(data, dict):
        raise StructureError("algebra document must be a JSON object")
    unknown = set(data) - {"universe", "operations"}
    if unknown:
        raise StructureError(f"unknown top-level keys: {sorted(unknown)}")
    universe = data.get("universe")
    if not isinstance(universe, list) or not all(isinstance(x, str) for x in universe):
        raise StructureError("'universe' must be a list of strings")
    ops_doc = data.get("operations", {})
    if not isinstance(ops_doc, dict):
        raise StructureError("'operations' must be an object")
    operations = {}
    for sym, body in ops_doc.items():
        table = operation_from_json(body)
        if table.size != len(universe):
            raise StructureError(f"operation {sym}: size {table.size} != universe size {len(universe)}")
        operations[sym] = table
    return FiniteAlgebra(len(universe), operations, tuple(universe))


def load_algebra(path: str) -> FiniteAlgebra:
    with open(path, "r", encoding="utf-8") as fh:
        return algebra_from_json(json.load(fh))


def variable_names(k: int) -> list[str]:
    if k <= 4:
        return list("xyzw")[:k]
    return [f"x{i + 1}" for i in range(k)]


@dataclass(frozen=True)
class FreeAlgebra:
    """The subalgebra of A^(A^k) generated by the k projections.

    Elements are stored extensionally (tuples over A indexed by the
    assignments of generators to A elements, in lexicographic order), so
    element equality is equality of term operations.
    """

    base: FiniteAlgebra
    num_generators: int
    algebra: FiniteAlgebra  # induced tables on the closure elements
    elements: tuple[tuple[int, ...], ...]
    generators: tuple[int, ...]
    derivations: tuple[tuple, ...]  # ("var", j) or (symbol, arg element ids)

    def term_name(self, element: int) -> str:
        names = variable_names(self.num_generators)

        def build(e: int) -> str:
            d = self.derivations[e]
            if d[0] == "var":
                return names[d[1]]
            sym, args = d
            return f"{sym}({','.join(build(a) for a in args)})"

        return build(element)


def free_algebra(a: FiniteAlgebra, k: int, max_tuples: int = DEFAULT_MAX_TUPLES) -> FreeAlgebra:
    """Close the k projection tuples under the basic operations, pointwise."""
    if k < 1:
        raise StructureError(f"need at least one generator, got {k}")
    if a.size < 1:
        raise StructureError("empty universe")
    coords = a.size**k
    if a.size**coords > max_tuples and coords > 20:
        raise SizeLimitExceeded(f"tuple space {a.size}^{coords} exceeds bound {max_tuples}")

    assignments = list(itertools.product(range(a.size), repeat=k))
    elements: list[tuple[int, ...]] = []
    index: dict[tuple[int, ...], int] = {}
    derivations: list[tuple] = []

    def intern(t: tuple[int, ...], derivation: tuple) -> int:
        if t in index:
            return index[t]
        index[t] = len(elements)
        elements.append(t)
        derivations.append(derivation)
        return index[t]

    for j in range(k):
        intern(tuple(assign[j] for assign in assignments), ("var", j))
    generators = tuple(index[tuple(assign[j] for assign in assignments)] for j in range(k))

    # rounds of pointwise applications until nothing new appears
    while True:
        size_before = len(elements)
        snapshot = list(range(size_before))
        for sym in a.symbols():
            table = a.operations[sym]
            for args in itertools.product(snapshot, repeat=table.arity):
                value = tuple(
                    table.apply(*(elements[e][c] for e in args)) for c in range(coords)
                )
                intern(value, (sym, args))
        if len(elements) == size_before:
            break
        if len(elements) > max_tuples:
            raise SizeLimitExceeded(f"free algebra exceeded {max_tuples} elements")

    n = len(elements)
    tables = {}
    for sym in a.symbols():
        base_table = a.operations[sym]
        values = []
        for args in itertools.product(range(n), repeat=base_table.arity):
            value = tuple(
                base_table.apply(*(elements[e][c] for e in args)) for c in range(coords)
            )
            values.append(index[value])
        tables[sym] = OperationTable(base_table.arity, n, tuple(values))

    free = FreeAlgebra(
        base=a,
        num_generators=k,
        algebra=FiniteAlgebra(n, tables),
        elements=tuple(elements),
        generators=generators,
        derivations=tuple(derivations),
    )
    named = FiniteAlgebra(n, tables, tuple(free.term_name(i) for i in range(n)))
    return FreeAlgebra(a, k, named, tuple(elements), generators, tuple(derivations))


def _close_tuples(
    seeds: list[tuple[int, ...]], algebra: FiniteAlgebra, max_tuples: int
) -> list[tuple[int, ...]]:
    """Closure of id-tuples under coordinatewise basic operations."""
    out: list[tuple[int, ...]] = []
    seen: set[tuple[int, ...]] = set()
    for s in seeds:
        if s not in seen:
            seen.add(s)
            out.append(s)
    width = len(seeds[0])
    while True:
        size_before = len(out)
        snapshot = list(out)
        for sym in algebra.symbols():
            table = algebra.operations[sym]
            for args in itertools.product(range(len(snapshot)), repeat=table.arity):
                value = tuple(
                    table.apply(*(snapshot[e][c] for e in args)) for c in range(width)
                )
                if value not in seen:
                    seen.add(value)
                    out.append(value)
        if len(out) == size_before:
            break
        if len(out) > max_tuples:
            raise SizeLimitExceeded(f"closure exceeded {max_tuples} tuples")
    return out


@dataclass(frozen=True)
class ComponentData:
    unary_index: int
    unary_map: tuple[int, ...]  # the unary term operation on the base algebra
    members: tuple[int, ...]  # free-algebra element ids, sorted
    structure: RelationalStructure  # induced from the free structure
    homs: tuple[Homomorphism, ...] = ()  # non-constant maps into S, local ids
    kids: tuple[int, ...] = ()  # collapsed image ids, sorted (after collapse)

    def local_of(self, member: int) -> int:
        return self.members.index(member)


@dataclass
class FreeBundle:
    """Staged output of the free construction over a finite algebra."""

    base: FiniteAlgebra
    free: FreeAlgebra
    x: int
    y: int
    structure: RelationalStructure  # the free relational structure
    semilattice: RelationalStructure  # the fixed 2-element target
    unary_ops: tuple[tuple[int, ...], ...]  # U, identity first
    component_of: tuple[int, ...]  # free element -> index into unary_ops
    components: tuple[ComponentData, ...] | None = None
    psi: Homomorphism | None = None
    union_structure: RelationalStructure | None = None
    offsets: tuple[int, ...] | None = None
    image: tuple[int, ...] | None = None  # sorted union ids in the image
    quotient_map: tuple[int, ...] | None = None  # free element -> K id
    K: RelationalStructure | None = None
    Kalg: FiniteAlgebra | None = None

    def element_name(self, element: int) -> str:
        return self.free.term_name(element)

    def upper_indices(self) -> tuple[int, ...]:
        """Components with at least one non-constant homomorphism."""
        assert self.components is not None
        return tuple(c.unary_index for c in self.components if c.homs)

    def hom_count(self, u: int) -> int:
        assert self.components is not None
        return len(self.components[u].homs)

    def rank_of_kid(self, kid: int) -> tuple[int, int]:
        """(component index, coordinate rank) of a collapsed element."""
        assert self.image is not None and self.offsets is not None
        gid = self.image[kid]
        for u in range(len(self.offsets)):
            upper = self.offsets[u + 1] if u + 1 < len(self.offsets) else self.union_structure.size
            if self.offsets[u] <= gid < upper:
                return u, gid - self.offsets[u]
        raise StructureError(f"collapsed id {kid} outside all components")

    def coords_of_kid(self, kid: int) -> tuple[int, ...]:
        u, rank = self.rank_of_kid(kid)
        h = self.hom_count(u)
        return tuple((rank >> (h - 1 - c)) & 1 for c in range(h))

    def generator_image(self, u: int, generator: int) -> int:
        """K id of the image of u applied to a generator (x or y)."""
        assert self.quotient_map is not None
        applied = apply_unary(self, u, generator)
        return self.quotient_map[applied]


def apply_unary(bundle: FreeBundle, u: int, element: int) -> int:
    """Apply the u-th unary term operation to a free-algebra element."""
    umap = bundle.unary_ops[u]
    value = tuple(umap[v] for v in bundle.free.elements[element])
    try:
        return bundle.free.elements.index(value)
    except ValueError:
        raise StructureError("free algebra is not closed under a unary term operation") from None


def free_structure(a: FiniteAlgebra, max_tuples: int = DEFAULT_MAX_TUPLES) -> FreeBundle:
    """Build the free algebra on two generators and its ternary free structure."""
    free = free_algebra(a, 2, max_tuples)
    x, y = free.generators[0], free.generators[1]

    seeds = [(x, x, x), (x, y, x), (y, x, x), (y, y, y)]
    triples = _close_tuples(seeds, free.algebra, max_tuples)
    structure = RelationalStructure(
        free.algebra.size,
        {RELATION_SYMBOL: Relation(3, frozenset(triples))},
        tuple(free.term_name(i) for i in range(free.algebra.size)),
    )

    identity = tuple(range(a.size))
    unary_ops = tuple(_close_tuples([identity], a, max_tuples))

    unary_index = {u: i for i, u in enumerate(unary_ops)}
    coords = a.size**2
    component_of = []
    for e in range(free.algebra.size):
        diag = tuple(free.elements[e][b * a.size + b] for b in range(a.size))
        if diag not in unary_index:
            raise StructureError("diagonal of a free element is not a unary term operation")
        component_of.append(unary_index[diag])

    bundle = FreeBundle(
        base=a,
        free=free,
        x=x,
        y=y,
        structure=structure,
        semilattice=two_element_semilattice(RELATION_SYMBOL),
        unary_ops=unary_ops,
        component_of=tuple(component_of),
    )

    # the diagonal classes must be exactly the connected components
    blocks = {frozenset(b) for b in connected_components(structure).partition}
    classes = {
        frozenset(e for e in range(free.algebra.size) if component_of[e] == u)
        for u in range(len(unary_ops))
        if any(component_of[e] == u for e in range(free.algebra.size))
    }
    if blocks != classes:
        raise StructureError("diagonal classes disagree with connected components")
    return bundle


def compute_H(bundle: FreeBundle) -> FreeBundle:
    """Fill per-component non-constant homomorphism sets into the semilattice."""
    components = []
    for u in range(len(bundle.unary_ops)):
        members = tuple(
            e for e in range(bundle.free.algebra.size) if bundle.component_of[e] == u
        )
        sub = induced_substructure(bundle.structure, members)
        homs = tuple(
            find_homs(sub, bundle.semilattice, SearchOptions(nonconstant_only=True))
        )
        components.append(ComponentData(u, bundle.unary_ops[u], members, sub, homs))
    bundle.components = tuple(components)
    return bundle


def _quotient_tables(
    free: FiniteAlgebra, qmap: Sequence[int], size: int
) -> dict[str, OperationTable]:
    """Operations induced on quotient classes; raises when ill-defined."""
    reps: list[int] = [-1] * size
    for e, c in enumerate(qmap):
        if reps[c] == -1:
            reps[c] = e
    classes: dict[int, list[int]] = {}
    for e, c in enumerate(qmap):
        classes.setdefault(c, []).append(e)
    tables = {}
    for sym in free.symbols():
        table = free.operations[sym]
        values = []
        for args in itertools.product(range(size), repeat=table.arity):
            value = qmap[table.apply(*(reps[c] for c in args))]
            for combo in itertools.product(*(classes[c] for c in args)):
                other = qmap[table.apply(*combo)]
                if other != value:
                    raise IllDefinedOperation(
                        f"operation {sym} at classes {args}: representatives give "
                        f"{value} but members {combo} give {other}"
                    )
            values.append(value)
        tables[sym] = OperationTable(table.arity, size, tuple(values))
    return tables


def collapse(bundle: FreeBundle) -> FreeBundle:
    """Map each element to its homomorphism-value tuple; build the image."""
    assert bundle.components is not None, "compute_H must run first"
    summands = []
    offsets = []
    total = 0
    for comp in bundle.components:
        h = len(comp.homs)
        summands.append(
            power(bundle.semilattice, h) if h >= 1 else one_element_structure(RELATION_SYMBOL)
        )
        offsets.append(total)
        total += summands[-1].size
    union = disjoint_union(summands)

    mapping = [0] * bundle.free.algebra.size
    for comp in bundle.components:
        h = len(comp.homs)
        for local, e in enumerate(comp.members):
            rank = 0
            for hom in comp.homs:
                rank = (rank << 1) | hom.mapping[local]
            mapping[e] = offsets[comp.unary_index] + (rank if h else 0)

    psi = Homomorphism(bundle.structure, union, tuple(mapping))
    image = tuple(sorted(set(mapping)))
    kid_of = {gid: i for i, gid in enumerate(image)}
    qmap = tuple(kid_of[g] for g in mapping)
    K = image_structure(psi)

    tables = _quotient_tables(bundle.free.algebra, qmap, len(image))
    Kalg = FiniteAlgebra(len(image), tables, K.labels)

    bundle.psi = psi
    bundle.union_structure = union
    bundle.offsets = tuple(offsets)
    bundle.image = image
    bundle.quotient_map = qmap
    bundle.K = K
    bundle.Kalg = Kalg
    bundle.components = tuple(
        ComponentData(
            c.unary_index,
            c.unary_map,
            c.members,
            c.structure,
            c.homs,
            tuple(sorted({qmap[e] for e in c.members})),
        )
        for c in bundle.components
    )
    return bundle


def build_bundle(a: FiniteAlgebra, max_tuples: int = DEFAULT_MAX_TUPLES) -> FreeBundle:
    return collapse(compute_H(free_structure(a, max_tuples)))


# --- verification: the six structural items ----------------------------------

PASS = "pass"
FAIL = "fail"
SKIPPED = "hypothesis absent"


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    detail: str = ""


@dataclass(frozen=True)
class VerificationReport:
    results: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.status != FAIL for r in self.results)

    def lines(self) -> list[str]:
        return [f"{r.name}: {r.status}" + (f" ({r.detail})" if r.detail else "") for r in self.results]


def _collapsed_substructure(bundle: FreeBundle, u: int) -> RelationalStructure:
    return induced_substructure(bundle.K, bundle.components[u].kids)


def _classify_into_coords(
    bundle: FreeBundle, u: int, mapping: Sequence[int]
) -> tuple[str, int | None]:
    """Classify a map from a collapsed component into {0,1}.

    Returns ("constant", value), ("projection", coordinate) with the unique
    witnessing coordinate, or ("neither", None).
    """
    comp = bundle.components[u]
    values = list(mapping)
    if len(set(values)) <= 1:
        return "constant", values[0]
    h = len(comp.homs)
    witnesses = [
        c
        for c in range(h)
        if all(values[i] == bundle.coords_of_kid(kid)[c] for i, kid in enumerate(comp.kids))
    ]
    if len(witnesses) == 1:
        return "projection", witnesses[0]
    return "neither", None


def verify_lemma22(bundle: FreeBundle) -> VerificationReport:
    """Machine-check the six structural facts about the collapsed image."""
    assert bundle.K is not None, "collapse must run first"
    results = []
    S = bundle.semilattice

    # 1: reflexivity of the image and of every collapsed component
    ok = is_reflexive(bundle.K) and all(
        is_reflexive(_collapsed_substructure(bundle, u)) for u in range(len(bundle.components))
    )
    results.append(CheckResult("item 1 (reflexive)", PASS if ok else FAIL))

    # 2: components of the image = collapsed diagonal classes
    blocks = {frozenset(b) for b in connected_components(bundle.K).partition}
    classes = {frozenset(c.kids) for c in bundle.components}
    results.append(
        CheckResult(
            "item 2 (components)",
            PASS if blocks == classes else FAIL,
            "" if blocks == classes else f"blocks {sorted(map(sorted, blocks))} vs {sorted(map(sorted, classes))}",
        )
    )

    # 3: the semilattice is a retract of the identity component, via a -> [a]
    id_comp = bundle.components[0]
    if not id_comp.homs:
        results.append(CheckResult("item 3 (retract)", SKIPPED, "no non-constant homomorphisms on the identity component"))
    else:
        kx = bundle.generator_image(0, bundle.x)
        ky = bundle.generator_image(0, bundle.y)
        sub = _collapsed_substructure(bundle, 0)
        lx, ly = id_comp.kids.index(kx), id_comp.kids.index(ky)
        status, detail = FAIL, ""
        try:
            Homomorphism(S, sub, (lx, ly))
            alphas = find_homs(sub, S, SearchOptions(limit=1, pinned={lx: 0, ly: 1}))
            if alphas:
                status = PASS
            else:
                detail = "no retraction fixing the generator images"
        except StructureError as exc:
            detail = f"coretraction is not a homomorphism: {exc}"
        results.append(CheckResult("item 3 (retract)", status, detail))

    # 4: maps from a collapsed component into the semilattice are constants
    # or single-coordinate projections
    ok, detail = True, ""
    for u in range(len(bundle.components)):
        sub = _collapsed_substructure(bundle, u)
        for hom in find_homs(sub, S):
            kind, _ = _classify_into_coords(bundle, u, hom.mapping)
            if kind == "neither":
                ok, detail = False, f"component {u}: map {hom.mapping} is neither"
                break
        if not ok:
            break
    results.append(CheckResult("item 4 (coordinate maps)", PASS if ok else FAIL, detail))

    # 5: the collapse kernel is preserved by every unary translation of a
    # basic operation (these generate all unary polynomials)
    qmap = bundle.quotient_map
    classes: dict[int, list[int]] = {}
    for e, c in enumerate(qmap):
        classes.setdefault(c, []).append(e)
    ok, detail = True, ""
    falg = bundle.free.algebra
    for sym in falg.symbols():
        table = falg.operations[sym]
        m = table.arity
        for pos in range(m):
            for params in itertools.product(range(falg.size), repeat=m - 1):
                def translate(t: int) -> int:
                    args = params[:pos] + (t,) + params[pos:]
                    return table.apply(*args)

                for members in classes.values():
                    base = qmap[translate(members[0])]
                    for other in members[1:]:
                        if qmap[translate(other)] != base:
                            ok = False
                            detail = (
                                f"{sym} at position {pos + 1}, parameters {params}: "
                                f"elements {members[0]} and {other} separate"
                            )
                            break
                    if not ok:
                        break
                if not ok:
                    break
            if not ok:
                break
        if not ok:
            break
    results.append(CheckResult("item 5 (kernel is a congruence)", PASS if ok else FAIL, detail))

    # 6: induced quotient tables are single-valued
    try:
        _quotient_tables(falg, qmap, len(bundle.image))
        results.append(CheckResult("item 6 (induced operations)", PASS))
    except IllDefinedOperation as exc:
        results.append(CheckResult("item 6 (induced operations)", FAIL, str(exc)))

    return VerificationReport(tuple(results))


# --- verification: the four polymorphism claims -------------------------------


def _component_points(bundle: FreeBundle, comb: tuple[int, ...]) -> list[tuple[int, ...]]:
    """All points of the product of collapsed components, as kid tuples."""
    return list(itertools.product(*(bundle.components[u].kids for u in comb)))


def _kid_component(bundle: FreeBundle, kid: int) -> int:
    return bundle.rank_of_kid(kid)[0]


def verify_claims(bundle: FreeBundle, max_arity: int = 2) -> VerificationReport:
    """Check the four polymorphism claims for arities 1..max_arity."""
    assert bundle.K is not None, "collapse must run first"
    S = bundle.semilattice
    results = []
    nU = len(bundle.components)
    upper = set(bundle.upper_indices())

    # Claim 1: each collapsed component is a partial semilattice whose
    # largest element is the image of u applied to the second generator
    ok, detail = True, ""
    for u in range(nU):
        sub = _collapsed_substructure(bundle, u)
        witness = is_partial_semilattice(sub)
        if not isinstance(witness, PartialSemilatticeWitness):
            ok, detail = False, f"component {u} refused: {witness.reason}"
            break
        top = largest_element(sub)
        expected = bundle.components[u].kids.index(bundle.generator_image(u, bundle.y))
        if top != expected:
            ok, detail = False, f"component {u}: largest {top} != image of generator {expected}"
            break
    results.append(CheckResult("claim 1 (partial semilattices with tops)", PASS if ok else FAIL, detail))

    # Claim 2: triviality of a component is equivalent to the two generator
    # images agreeing; non-trivial ones induce the 2-element semilattice
    ok, detail = True, ""
    for u in range(nU):
        kx, ky = bundle.generator_image(u, bundle.x), bundle.generator_image(u, bundle.y)
        singleton = len(bundle.components[u].kids) == 1
        if singleton != (kx == ky):
            ok, detail = False, f"component {u}: size/agreement mismatch"
            break
        if not singleton:
            sub = induced_substructure(bundle.K, sorted({kx, ky}))
            if find_isomorphism(sub, S) is None:
                ok, detail = False, f"component {u}: generator pair does not induce the semilattice"
                break
    results.append(CheckResult("claim 2 (generator pair detects size)", PASS if ok else FAIL, detail))

    # Claims 3 and 4 quantify over polymorphisms of the image
    claim3_ok, claim3_detail = True, ""
    claim4_ok, claim4_detail = True, ""
    for arity in range(1, max_arity + 1):
        polys = polymorphisms(bundle.K, arity)
        combos = list(itertools.product(range(nU), repeat=arity))
        for f in polys:
            for comb in combos:
                points = _component_points(bundle, comb)
                values = [f.apply(*p) for p in points]
                targets = {_kid_component(bundle, v) for v in values}
                if len(targets) != 1:
                    claim3_ok = False
                    claim3_detail = f"arity {arity}: restriction spans components {sorted(targets)}"
                    break
                u = targets.pop()
                constant = len(set(values)) == 1

                # claim 3: each coordinate of the restriction factors as a
                # meet of single-coordinate projections
                if not constant and claim3_ok:
                    factors = [_collapsed_substructure(bundle, ul) for ul in comb]
                    tops = [
                        bundle.components[ul].kids.index(bundle.generator_image(ul, bundle.y))
                        for ul in comb
                    ]
                    prod = product(factors)
                    h = bundle.hom_count(u)
                    for c in range(h):
                        coord_values = [bundle.coords_of_kid(v)[c] for v in values]
                        try:
                            g = Homomorphism(prod, S, tuple(coord_values))
                            dec = decompose_product_hom(g, factors, tops)
                        except (StructureError, DecompositionError) as exc:
                            claim3_ok, claim3_detail = False, f"arity {arity}: {exc}"
                            break
                        if dec.is_constant:
                            continue
                        projections = 0
                        for ell, cmap in enumerate(dec.coordinate_maps):
                            kind, _ = _classify_into_coords(bundle, comb[ell], cmap.mapping)
                            if kind == "projection":
                                if comb[ell] not in upper:
                                    claim3_ok = False
                                    claim3_detail = f"arity {arity}: projection on a trivial factor"
                                    break
                                projections += 1
                            elif kind == "constant" and cmap.mapping[0] == 1:
                                continue
                            else:
                                claim3_ok = False
                                claim3_detail = (
                                    f"arity {arity}: coordinate {c} factor {ell} is neither a"
                                    " projection nor constant 1"
                                )
                                break
                        if claim3_ok and projections == 0:
                            claim3_ok = False
                            claim3_detail = f"arity {arity}: non-constant map with no projection factor"
                        if not claim3_ok:
                            break

                # claim 4: the restriction extends to exactly one piece of
                # the declared shape on the full product of powers
                if claim4_ok:
                    count = _count_shaped_extensions(bundle, comb, points, values)
                    if count != 1:
                        claim4_ok = False
                        claim4_detail = f"arity {arity}, components {comb}: {count} extensions"
            if not (claim3_ok or claim4_ok):
                break
        if not (claim3_ok or claim4_ok):
            break
    results.append(CheckResult("claim 3 (meets of coordinate projections)", PASS if claim3_ok else FAIL, claim3_detail))
    results.append(CheckResult("claim 4 (unique shaped extension)", PASS if claim4_ok else FAIL, claim4_detail))
    return VerificationReport(tuple(results))


def _count_shaped_extensions(
    bundle: FreeBundle,
    comb: tuple[int, ...],
    points: list[tuple[int, ...]],
    values: list[int],
) -> int:
    """Count distinct shaped maps on the product of powers extending f.

    A shaped piece is either constant, or targets one non-trivial component
    with every coordinate given by a constant or a meet of projections onto
    chosen coordinates of non-trivial factors.  Pieces are deduplicated
    extensionally before counting.
    """
    hs = [bundle.hom_count(u) for u in comb]
    sizes = [1 << h for h in hs]
    G = bundle.union_structure
    assert G is not None and bundle.offsets is not None
    epoints = list(itertools.product(*(range(sz) for sz in sizes)))

    def coords_at(point: tuple[int, ...], ell: int) -> tuple[int, ...]:
        rank = point[ell]
        h = hs[ell]
        return tuple((rank >> (h - 1 - c)) & 1 for c in range(h))

    pieces: set[tuple[int, ...]] = set()
    for g in range(G.size):  # constant pieces
        pieces.add((g,) * len(epoints))

    positions = [ell for ell in range(len(comb)) if hs[ell] >= 1]
    for u in bundle.upper_indices():
        h_u = bundle.hom_count(u)
        choices: list[tuple] = [("const", 0), ("const", 1)]
        for r in range(1, len(positions) + 1):
            for subset in itertools.combinations(positions, r):
                for phis in itertools.product(*(range(hs[ell]) for ell in subset)):
                    choices.append(("meet", tuple(zip(subset, phis))))
        for combo in itertools.product(choices, repeat=h_u):
            piece = []
            for point in epoints:
                rank = 0
                for choice in combo:
                    if choice[0] == "const":
                        bit = choice[1]
                    else:
                        bit = min(coords_at(point, ell)[phi] for ell, phi in choice[1])
                    rank = (rank << 1) | bit
                piece.append(bundle.offsets[u] + rank)
            pieces.add(tuple(piece))

    # embed the restriction's domain into the product of powers
    dom_index = []
    for p in points:
        epoint = tuple(bundle.rank_of_kid(kid)[1] for kid in p)
        dom_index.append(epoints.index(epoint))
    fvals = [bundle.image[v] for v in values]

    count = 0
    for piece in sorted(pieces):
        if all(piece[di] == fv for di, fv in zip(dom_index, fvals)):
            count += 1
    return count


# --- bounded labeling-refutation evidence ---------------------------------------


@dataclass(frozen=True)
class LabelingRefutation:
    labeling: SLLabeling
    arity: int
    element: int
    lhs: Term
    rhs: Term
    lhs_varset: frozenset[str]
    rhs_varset: frozenset[str]


@dataclass(frozen=True)
class CertifiedHM:
    max_arity: int
    refutations: tuple[LabelingRefutation, ...]


@dataclass(frozen=True)
class ConsistentLabelingFound:
    labeling: SLLabeling
    max_arity: int


def default_evidence_arity(a: FiniteAlgebra) -> int:
    arities = [t.arity for t in a.operations.values()]
    return max([2] + arities)


def _refute_labeling(
    a: FiniteAlgebra, labeling: SLLabeling, max_arity: int, max_tuples: int
) -> LabelingRefutation | None:
    """Search free algebras of growing rank for an identity the labeling breaks.

    Every element tracks the variable sets achievable by its term
    representations under the labeling; two distinct sets on one element
    give a violated identity.
    """
    for j in range(1, max_arity + 1):
        free = free_algebra(a, j, max_tuples)
        names = variable_names(j)
        rep = [None] * free.algebra.size

        def rep_term(e: int) -> Term:
            if rep[e] is None:
                d = free.derivations[e]
                if d[0] == "var":
                    rep[e] = Variable(names[d[1]])
                else:
                    rep[e] = Application(d[0], tuple(rep_term(arg) for arg in d[1]))
            return rep[e]

        varsets: list[dict[frozenset[str], Term]] = [dict() for _ in range(free.algebra.size)]
        for g, gid in enumerate(free.generators):
            varsets[gid][frozenset({names[g]})] = Variable(names[g])

        changed = True
        while changed:
            changed = False
            known = [e for e in range(free.algebra.size) if varsets[e]]
            for sym in sorted(a.operations):
                table = free.algebra.operations[sym]
                coords = labeling.sigma[sym]
                for args in itertools.product(known, repeat=table.arity):
                    result = table.apply(*args)
                    labeled_sets = [sorted(varsets[args[i - 1]], key=sorted) for i in coords]
                    for pick in itertools.product(*labeled_sets):
                        union = frozenset().union(*pick)
                        if union in varsets[result]:
                            continue
                        terms = []
                        chosen = dict(zip(coords, pick))
                        for pos in range(1, table.arity + 1):
                            if pos in chosen:
                                terms.append(varsets[args[pos - 1]][chosen[pos]])
                            else:
                                terms.append(rep_term(args[pos - 1]))
                        varsets[result][union] = Application(sym, tuple(terms))
                        changed = True

        for e in range(free.algebra.size):
            if len(varsets[e]) >= 2:
                (vs1, t1), (vs2, t2) = sorted(varsets[e].items(), key=lambda kv: sorted(kv[0]))[:2]
                return LabelingRefutation(labeling, j, e, t1, t2, vs1, vs2)
    return None


def hm_evidence(
    a: FiniteAlgebra, max_arity: int | None = None, max_tuples: int = DEFAULT_MAX_TUPLES
) -> CertifiedHM | ConsistentLabelingFound:
    """Refute every coordinate labeling, or report the first survivor.

    A refuted labeling comes with an identity that holds in the generated
    variety but changes labeled variable sets.  Refuting all labelings is a
    sound certificate; a survivor is bounded evidence only, since identities
    above the arity bound are never examined.
    """
    if not a.is_idempotent():
        raise StructureError("evidence search requires an idempotent algebra")
    m = default_evidence_arity(a) if max_arity is None else max_arity
    if m < 1:
        raise StructureError(f"arity bound must be >= 1, got {m}")
    declarations = {sym: a.operations[sym].arity for sym in a.symbols()}
    refutations = []
    for labeling in all_labelings(declarations):
        refutation = _refute_labeling(a, labeling, m, max_tuples)
        if refutation is None:
            return ConsistentLabelingFound(labeling, m)
        refutations.append(refutation)
    return CertifiedHM(m, tuple(refutations))


def verify_certificate(a: FiniteAlgebra, certificate: CertifiedHM) -> bool:
    """Replay a certificate: coverage, validity in the algebra, and labeling breaks."""
    declarations = {sym: a.operations[sym].arity for sym in a.symbols()}
    seen = [r.labeling.sigma for r in certificate.refutations]
    expected = [l.sigma for l in all_labelings(declarations)]
    if seen != expected:
        return False
    for r in certificate.refutations:
        identity = Identity(r.lhs, r.rhs)
        if not holds_in(a, identity, a.operations):
            return False
        if sigma_varset(r.lhs, r.labeling) == sigma_varset(r.rhs, r.labeling):
            return False
        if sigma_varset(r.lhs, r.labeling) != r.lhs_varset:
            return False
        if sigma_varset(r.rhs, r.labeling) != r.rhs_varset:
            return False
    return True


def bundle_summary(bundle: FreeBundle) -> dict:
    """A plain-data description of a completed bundle."""
    assert bundle.K is not None
    rel = bundle.structure.relations[RELATION_SYMBOL]
    return {
        "free_size": bundle.free.algebra.size,
        "unary_ops": len(bundle.unary_ops),
        "relation_size": len(rel.tuples),
        "components": [
            {
                "index": c.unary_index,
                "members": [bundle.element_name(e) for e in c.members],
                "hom_count": len(c.homs),
                "collapsed_size": len(c.kids),
            }
            for c in bundle.components
        ],
        "image_size": bundle.K.size,
        "kernel": [
            sorted(bundle.element_name(e) for e in block) for block in kernel(bundle.psi)
        ],
    }
