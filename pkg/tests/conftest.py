"""Shared fixtures: small structures, algebras, and identity systems."""

import itertools
import json

import pytest

from hmkit.freecons import FiniteAlgebra, algebra_to_json
from hmkit.homsearch import OperationTable
from hmkit.structures import (
    Relation,
    RelationalStructure,
    dump_structure,
    one_element_structure,
    two_element_semilattice,
)

MAJORITY_SYSTEM = """ops: m/3
m(x,x,x) = x
m(x,x,y) = x
m(x,y,x) = x
m(y,x,x) = x
"""

MALTSEV_SYSTEM = """ops: p/3
p(x,x,x) = x
p(x,y,y) = x
p(y,y,x) = x
"""

SEMILATTICE_SYSTEM = """ops: f/2
idempotent: f
f(x,y) = f(y,x)
f(f(x,y),z) = f(x,f(y,z))
"""


@pytest.fixture
def S():
    return two_element_semilattice()


@pytest.fixture
def point():
    return one_element_structure()


@pytest.fixture
def chain3():
    """Meet graph of the 3-element chain 0 < 1 < 2."""
    triples = frozenset((a, b, min(a, b)) for a in range(3) for b in range(3))
    return RelationalStructure(3, {"R": Relation(3, triples)})


@pytest.fixture
def meet_table():
    return OperationTable(2, 2, (0, 0, 0, 1))


@pytest.fixture
def join_table():
    return OperationTable(2, 2, (0, 1, 1, 1))


@pytest.fixture
def majority_table():
    values = tuple(
        1 if sum(args) >= 2 else 0 for args in itertools.product((0, 1), repeat=3)
    )
    return OperationTable(3, 2, values)


@pytest.fixture
def meet_algebra(meet_table):
    return FiniteAlgebra(2, {"meet": meet_table}, ("0", "1"))


@pytest.fixture
def lattice_algebra(meet_table, join_table):
    return FiniteAlgebra(2, {"meet": meet_table, "join": join_table}, ("0", "1"))


@pytest.fixture
def majority_algebra(majority_table):
    return FiniteAlgebra(2, {"m": majority_table}, ("0", "1"))


@pytest.fixture
def bare_algebra():
    # two elements, no operations
    return FiniteAlgebra(2, {}, ("0", "1"))


@pytest.fixture
def small_corpus(S, point, chain3):
    """Structures of up to 3 elements used for engine cross-validation."""
    e0 = RelationalStructure(
        3,
        {"R": Relation(3, frozenset({(0, 0, 0), (0, 1, 0), (1, 0, 0), (1, 1, 1), (2, 2, 2)}))},
    )
    arrow = RelationalStructure(2, {"R": Relation(3, frozenset({(0, 0, 1)}))})
    empty_rel = RelationalStructure(2, {"R": Relation(3, frozenset())})
    mixed = RelationalStructure(
        3,
        {
            "E": Relation(2, frozenset({(0, 1), (1, 2)})),
            "T": Relation(3, frozenset({(0, 1, 2), (2, 2, 2)})),
        },
    )
    mixed_loop = RelationalStructure(
        2,
        {
            "E": Relation(2, frozenset({(0, 0), (0, 1)})),
            "T": Relation(3, frozenset({(0, 0, 0), (1, 1, 0)})),
        },
    )
    return [S, point, chain3, e0, arrow, empty_rel, mixed, mixed_loop]


def brute_force_homs(src, tgt):
    """Reference enumeration checking every total map directly."""
    if src.signature() != tgt.signature():
        raise ValueError("signature mismatch")
    out = []
    for mapping in itertools.product(range(tgt.size), repeat=src.size):
        ok = True
        for sym in src.symbols():
            target_tuples = tgt.relations[sym].tuples
            for t in src.relations[sym].tuples:
                if tuple(mapping[v] for v in t) not in target_tuples:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.append(mapping)
    return out


@pytest.fixture
def structure_file(tmp_path):
    def write(s, name="structure.json"):
        path = tmp_path / name
        dump_structure(s, str(path))
        return str(path)

    return write


@pytest.fixture
def algebra_file(tmp_path):
    def write(a, name="algebra.json"):
        path = tmp_path / name
        path.write_text(json.dumps(algebra_to_json(a), indent=2) + "\n")
        return str(path)

    return write


@pytest.fixture
def system_file(tmp_path):
    def write(text, name="system.txt"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return write
