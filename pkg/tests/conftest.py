import itertools

import pytest

from plcore.catalog import (
    dag_theory,
    digraph,
    disjoint_subsets_model,
    disjoint_subsets_theory,
    doubled_interval,
    doubled_interval_theory,
    linear_order,
)
from plcore.structure import Signature, all_structures

EDGE_SIG = Signature.single({"E": 2})


def digraphs_up_to(n):
    """Every labelled digraph with 1..n vertices."""
    out = []
    for k in range(1, n + 1):
        out.extend(all_structures(EDGE_SIG, k))
    return out


@pytest.fixture(scope="session")
def small_digraphs():
    return digraphs_up_to(3)


@pytest.fixture(scope="session")
def tiny_digraphs():
    return digraphs_up_to(2)


@pytest.fixture
def u3():
    return disjoint_subsets_model()


@pytest.fixture
def t3():
    return disjoint_subsets_theory()


@pytest.fixture
def d2():
    return doubled_interval()


@pytest.fixture
def d2_theory():
    return doubled_interval_theory()


@pytest.fixture
def dag4():
    return dag_theory(4)


@pytest.fixture
def edge():
    return digraph(2, [(0, 1)])


@pytest.fixture
def path2():
    # a -> c -> b with a=0, b=1, c=2
    return digraph(3, [(0, 2), (2, 1)])


@pytest.fixture
def chain3():
    return linear_order(3)


def iso_classes_by_oracle(structs):
    """Group structures by brute-force isomorphism over all permutations."""
    reps = []
    for m in structs:
        n = m.universe["s"] if "s" in m.universe else None
        found = False
        for r in reps:
            if r.universe != m.universe:
                continue
            for perm in itertools.permutations(range(n)):
                if all(
                    {tuple(perm[e] for e in row) for row in m.tables[name]} == r.tables[name]
                    for name in m.signature.names
                ):
                    found = True
                    break
            if found:
                break
        if not found:
            reps.append(m)
    return reps
