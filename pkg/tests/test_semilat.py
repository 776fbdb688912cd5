import itertools

import pytest

from hmkit.homsearch import OperationTable, find_homs
from hmkit.semilat import (
    DecompositionError,
    PartialSemilatticeWitness,
    Refusal,
    classify_meet_operation,
    decompose_product_hom,
    is_partial_semilattice,
    iterated_meet,
    largest_element,
    meet_lookup,
    single_ternary_relation,
    verify_witness,
)
from hmkit.structures import (
    Homomorphism,
    Relation,
    RelationalStructure,
    SizeLimitExceeded,
    StructureError,
    product,
)


def reflexive_triples(n):
    return {(a, a, a) for a in range(n)}


def test_single_ternary_relation(S):
    assert single_ternary_relation(S).arity == 3
    two = RelationalStructure(
        1, {"R": Relation(3, frozenset()), "Q": Relation(3, frozenset())}
    )
    with pytest.raises(StructureError, match="single relation"):
        single_ternary_relation(two)
    binary = RelationalStructure(1, {"R": Relation(2, frozenset())})
    with pytest.raises(StructureError, match="ternary"):
        single_ternary_relation(binary)


def test_meet_lookup(S):
    assert meet_lookup(S, 0, 1) == 0
    assert meet_lookup(S, 1, 1) == 1
    partial = RelationalStructure(2, {"R": Relation(3, frozenset(reflexive_triples(2)))})
    assert meet_lookup(partial, 0, 1) is None
    broken = RelationalStructure(
        2, {"R": Relation(3, frozenset({(0, 1, 0), (0, 1, 1)}))}
    )
    with pytest.raises(StructureError, match="non-functional"):
        meet_lookup(broken, 0, 1)


def test_iterated_meet(S, chain3):
    assert iterated_meet(S, [1, 1, 0]) == 0
    assert iterated_meet(chain3, [2, 1, 2]) == 1
    partial = RelationalStructure(2, {"R": Relation(3, frozenset(reflexive_triples(2)))})
    assert iterated_meet(partial, [0, 1]) is None
    with pytest.raises(StructureError):
        iterated_meet(S, [])


def test_largest_element(S, chain3):
    assert largest_element(S) == 1
    assert largest_element(chain3) == 2
    partial = RelationalStructure(2, {"R": Relation(3, frozenset(reflexive_triples(2)))})
    assert largest_element(partial) is None


def test_largest_element_rejects_two_tops():
    triples = {(0, 0, 0), (0, 1, 1), (1, 0, 0), (1, 1, 1), (1, 0, 1), (0, 1, 0)}
    s = RelationalStructure(2, {"R": Relation(3, frozenset(triples))})
    with pytest.raises(StructureError, match="multiple largest"):
        largest_element(s)


def test_is_partial_semilattice_accepts_full_meet(S, chain3):
    for s in (S, chain3):
        w = is_partial_semilattice(s)
        assert isinstance(w, PartialSemilatticeWitness)
        verify_witness(s, w)


def test_is_partial_semilattice_accepts_incomparable_pair():
    pair = RelationalStructure(2, {"R": Relation(3, frozenset(reflexive_triples(2)))})
    w = is_partial_semilattice(pair)
    assert isinstance(w, PartialSemilatticeWitness)
    # the ambient semilattice must supply the missing meet
    assert w.ambient.size == 3
    assert len(set(w.embedding)) == 2
    verify_witness(pair, w)


def test_is_partial_semilattice_refusals():
    not_reflexive = RelationalStructure(2, {"R": Relation(3, frozenset({(0, 0, 0)}))})
    r = is_partial_semilattice(not_reflexive)
    assert isinstance(r, Refusal) and r.reason == "not reflexive"

    non_functional = RelationalStructure(
        2, {"R": Relation(3, frozenset(reflexive_triples(2) | {(0, 1, 0), (0, 1, 1)}))}
    )
    r = is_partial_semilattice(non_functional)
    assert isinstance(r, Refusal) and r.reason == "not functional"

    # 0 meet 1 = 0 and 1 meet 0 = 1 cannot embed: commutativity merges 0 and 1
    merging = RelationalStructure(
        2, {"R": Relation(3, frozenset(reflexive_triples(2) | {(0, 1, 0), (1, 0, 1)}))}
    )
    r = is_partial_semilattice(merging)
    assert isinstance(r, Refusal) and r.reason == "congruence merges elements"


def test_is_partial_semilattice_size_bound():
    big = RelationalStructure(13, {"R": Relation(3, frozenset(reflexive_triples(13)))})
    with pytest.raises(SizeLimitExceeded):
        is_partial_semilattice(big)
    assert isinstance(is_partial_semilattice(big, bound=13), PartialSemilatticeWitness)


def test_is_partial_semilattice_empty_universe():
    empty = RelationalStructure(0, {"R": Relation(3, frozenset())})
    with pytest.raises(StructureError):
        is_partial_semilattice(empty)


def test_decompose_identity_meet(S):
    prod = product([S, S])
    f = Homomorphism(prod, S, (0, 0, 0, 1))
    decomposition = decompose_product_hom(f, [S, S], [1, 1])
    assert not decomposition.is_constant
    assert [m.mapping for m in decomposition.coordinate_maps] == [(0, 1), (0, 1)]


def test_decompose_constant(S):
    prod = product([S, S])
    f = Homomorphism(prod, S, (0, 0, 0, 0))
    decomposition = decompose_product_hom(f, [S, S], [1, 1])
    assert decomposition.is_constant
    assert decomposition.constant_value == 0


def test_decompose_second_coordinate(S, chain3):
    prod = product([chain3, S])
    # drop the chain coordinate entirely
    f = Homomorphism(prod, S, tuple(b for a in range(3) for b in range(2)))
    decomposition = decompose_product_hom(f, [chain3, S], [2, 1])
    assert [m.mapping for m in decomposition.coordinate_maps] == [(1, 1, 1), (0, 1)]


def test_decompose_rejects_wrong_shapes(S):
    prod = product([S, S])
    f = Homomorphism(prod, S, (0, 0, 0, 1))
    with pytest.raises(DecompositionError, match="largest"):
        decompose_product_hom(f, [S, S], [0, 1])
    with pytest.raises(DecompositionError, match="one top"):
        decompose_product_hom(f, [S, S], [1])
    with pytest.raises(DecompositionError, match="not the product"):
        decompose_product_hom(f, [S], [1])


def test_every_hom_off_a_product_decomposes(S, chain3):
    factors = [chain3, S]
    prod = product(factors)
    tops = [2, 1]
    for f in find_homs(prod, S):
        decomposition = decompose_product_hom(f, factors, tops)
        if decomposition.is_constant:
            continue
        maps = decomposition.coordinate_maps
        for idx, coords in enumerate(itertools.product(range(3), range(2))):
            values = [m.mapping[c] for m, c in zip(maps, coords)]
            assert iterated_meet(S, values) == f.mapping[idx]


def test_classify_meet_operation(meet_table, majority_table):
    cls = classify_meet_operation(meet_table)
    assert cls.meet_coordinates == {1, 2}
    assert cls.describe() == "Meet({1,2})"

    const = classify_meet_operation(OperationTable.constant(2, 2, 1))
    assert const.constant_value == 1
    assert const.describe() == "Constant(1)"

    assert classify_meet_operation(majority_table) is None
    assert classify_meet_operation(OperationTable(1, 2, (1, 0))) is None

    with pytest.raises(StructureError):
        classify_meet_operation(OperationTable(1, 3, (0, 1, 2)))


def test_classify_single_coordinate_projection():
    p = OperationTable.projection(3, 2, 2)
    cls = classify_meet_operation(p)
    assert cls.meet_coordinates == {3}
