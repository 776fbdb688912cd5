import itertools
import json

import pytest

from hmkit.freecons import (
    CertifiedHM,
    ConsistentLabelingFound,
    FiniteAlgebra,
    IllDefinedOperation,
    LabelingRefutation,
    algebra_from_json,
    algebra_to_json,
    apply_unary,
    build_bundle,
    bundle_summary,
    compute_H,
    default_evidence_arity,
    free_algebra,
    free_structure,
    hm_evidence,
    load_algebra,
    verify_certificate,
    verify_claims,
    verify_lemma22,
    _quotient_tables,
)
from hmkit.homsearch import OperationTable
from hmkit.identlang import Identity, holds_in, sigma_varset
from hmkit.structures import StructureError, find_isomorphism, two_element_semilattice


def test_finite_algebra_validates_sizes(meet_table):
    with pytest.raises(StructureError):
        FiniteAlgebra(3, {"meet": meet_table})
    a = FiniteAlgebra(2, {"meet": meet_table})
    assert a.symbols() == ["meet"]
    assert a.is_idempotent()


def test_algebra_json_round_trip(meet_algebra, tmp_path):
    doc = algebra_to_json(meet_algebra)
    again = algebra_from_json(doc)
    assert again.size == 2 and again.operations == meet_algebra.operations

    path = tmp_path / "a.json"
    path.write_text(json.dumps(doc))
    assert load_algebra(str(path)).operations == meet_algebra.operations

    with pytest.raises(StructureError, match="unknown"):
        algebra_from_json({**doc, "extra": 1})
    with pytest.raises(StructureError, match="universe size"):
        algebra_from_json({"universe": ["a"], "operations": doc["operations"]})


def test_free_algebra_on_meet(meet_algebra):
    fa = free_algebra(meet_algebra, 2)
    assert fa.algebra.size == 3
    assert fa.algebra.labels == ("x", "y", "meet(x,y)")
    assert fa.generators == (0, 1)
    assert fa.elements[2] == (0, 0, 0, 1)
    assert fa.algebra.operations["meet"].is_idempotent()


def test_free_algebra_rank_one_is_unary_terms(meet_algebra, lattice_algebra):
    assert free_algebra(meet_algebra, 1).algebra.size == 1
    assert free_algebra(lattice_algebra, 1).algebra.size == 1


def test_free_algebra_majority_matches_clone_oracle(majority_algebra):
    """The rank-3 free algebra is the set of monotone self-dual operations."""
    fa = free_algebra(majority_algebra, 3)
    points = list(itertools.product((0, 1), repeat=3))

    def monotone(t):
        return all(
            t[i] <= t[j]
            for i, p in enumerate(points)
            for j, q in enumerate(points)
            if all(a <= b for a, b in zip(p, q))
        )

    def self_dual(t):
        index = {p: i for i, p in enumerate(points)}
        return all(
            t[i] == 1 - t[index[tuple(1 - a for a in p)]] for i, p in enumerate(points)
        )

    oracle = {
        t for t in itertools.product((0, 1), repeat=8) if monotone(t) and self_dual(t)
    }
    assert set(fa.elements) == oracle
    assert fa.algebra.size == 4


def test_free_structure_semilattice_triples(meet_algebra):
    bundle = free_structure(meet_algebra)
    x, y = bundle.x, bundle.y
    m = 3 - x - y  # the third element
    expected = {
        (x, x, x), (x, y, x), (y, x, x), (y, y, y),
        (x, m, x), (m, x, x), (m, m, m), (m, m, x), (m, y, m), (y, m, m),
    }
    assert bundle.structure.relations["R"].tuples == expected
    assert len(bundle.unary_ops) == 1
    assert bundle.component_of == (0, 0, 0)


def test_free_structure_lattice(lattice_algebra):
    bundle = free_structure(lattice_algebra)
    assert bundle.free.algebra.size == 4
    assert len(bundle.unary_ops) == 1
    names = {bundle.element_name(e) for e in range(4)}
    assert names == {"x", "y", "meet(x,y)", "join(x,y)"}


def test_compute_H_and_collapse(meet_algebra):
    bundle = build_bundle(meet_algebra)
    comp = bundle.components[0]
    assert len(comp.homs) == 1
    assert comp.homs[0].mapping == (0, 1, 0)
    assert bundle.K.size == 2
    assert bundle.quotient_map == (0, 1, 0)
    assert find_isomorphism(bundle.K, two_element_semilattice()) is not None
    assert bundle.Kalg.operations["meet"].values == (0, 0, 0, 1)


def test_collapse_lattice_to_point(lattice_algebra):
    bundle = build_bundle(lattice_algebra)
    assert bundle.components[0].homs == ()
    assert bundle.K.size == 1
    assert bundle.upper_indices() == ()


def test_apply_unary_and_generator_image(meet_algebra):
    bundle = build_bundle(meet_algebra)
    assert apply_unary(bundle, 0, bundle.x) == bundle.x
    assert bundle.generator_image(0, bundle.x) == bundle.quotient_map[bundle.x]


def test_bundle_summary_kernel(meet_algebra):
    bundle = build_bundle(meet_algebra)
    summary = bundle_summary(bundle)
    assert summary["free_size"] == 3
    assert summary["relation_size"] == 10
    assert summary["kernel"] == [["meet(x,y)", "x"], ["y"]]


def test_verify_lemma22_semilattice(meet_algebra):
    report = verify_lemma22(build_bundle(meet_algebra))
    assert report.passed
    assert [r.status for r in report.results] == ["pass"] * 6


def test_verify_lemma22_lattice_flags_item3(lattice_algebra):
    report = verify_lemma22(build_bundle(lattice_algebra))
    assert report.passed
    statuses = {r.name: r.status for r in report.results}
    assert statuses["item 3 (retract)"] == "hypothesis absent"
    for name, status in statuses.items():
        if name != "item 3 (retract)":
            assert status == "pass"


def test_verify_claims(meet_algebra, lattice_algebra, bare_algebra):
    for algebra in (meet_algebra, lattice_algebra, bare_algebra):
        report = verify_claims(build_bundle(algebra), 2)
        assert report.passed, report.lines()


def test_quotient_tables_reject_non_congruence(meet_algebra):
    fa = free_algebra(meet_algebra, 2)
    with pytest.raises(IllDefinedOperation):
        _quotient_tables(fa.algebra, (0, 0, 1), 2)
    tables = _quotient_tables(fa.algebra, (0, 1, 1), 2)
    assert tables["meet"].values == (0, 1, 1, 1)


def test_free_structure_rejects_empty_algebra():
    with pytest.raises(StructureError):
        free_structure(FiniteAlgebra(0, {}))


def test_default_evidence_arity(meet_algebra, majority_algebra, bare_algebra):
    assert default_evidence_arity(meet_algebra) == 2
    assert default_evidence_arity(majority_algebra) == 3
    assert default_evidence_arity(bare_algebra) == 2


def test_hm_evidence_majority(majority_algebra):
    evidence = hm_evidence(majority_algebra)
    assert isinstance(evidence, CertifiedHM)
    assert evidence.max_arity == 3
    assert len(evidence.refutations) == 7
    assert verify_certificate(majority_algebra, evidence)
    for r in evidence.refutations:
        assert isinstance(r, LabelingRefutation)
        # each refuting identity is valid in the algebra yet changes varsets
        assert holds_in(majority_algebra, Identity(r.lhs, r.rhs), majority_algebra.operations)
        assert sigma_varset(r.lhs, r.labeling) != sigma_varset(r.rhs, r.labeling)


def test_hm_evidence_semilattice_survivor(meet_algebra):
    evidence = hm_evidence(meet_algebra)
    assert isinstance(evidence, ConsistentLabelingFound)
    assert evidence.labeling.sigma == {"meet": (1, 2)}
    assert evidence.max_arity == 2


def test_hm_evidence_bare_algebra_survives(bare_algebra):
    evidence = hm_evidence(bare_algebra)
    assert isinstance(evidence, ConsistentLabelingFound)
    assert evidence.labeling.sigma == {}


def test_hm_evidence_trivial_algebra_certifies():
    one = FiniteAlgebra(1, {})
    evidence = hm_evidence(one)
    assert isinstance(evidence, CertifiedHM)
    assert verify_certificate(one, evidence)


def test_hm_evidence_rejects_non_idempotent():
    const = FiniteAlgebra(2, {"c": OperationTable(1, 2, (0, 0))})
    with pytest.raises(StructureError, match="idempotent"):
        hm_evidence(const)
    with pytest.raises(StructureError, match="arity bound"):
        hm_evidence(FiniteAlgebra(2, {}), max_arity=0)


def test_verify_certificate_rejects_tampering(majority_algebra):
    evidence = hm_evidence(majority_algebra)
    r = evidence.refutations[0]
    swapped = LabelingRefutation(
        r.labeling, r.arity, r.element, r.lhs, r.rhs, r.rhs_varset, r.lhs_varset
    )
    broken = CertifiedHM(evidence.max_arity, (swapped,) + evidence.refutations[1:])
    assert not verify_certificate(majority_algebra, broken)
    missing = CertifiedHM(evidence.max_arity, evidence.refutations[1:])
    assert not verify_certificate(majority_algebra, missing)
