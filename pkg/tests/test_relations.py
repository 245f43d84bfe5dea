from __future__ import annotations

from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from duality_lab.errors import CarrierMismatch, EnumerationTooLarge, NotDirectionallyAtomic, TooLarge
from duality_lab.lattice import Caba, Carrier
from duality_lab.relations import (
    CabaRel,
    FinRel,
    atom_base,
    check_directionally_atomic,
    compose,
    compose_caba,
    dagger,
    dagger_caba,
    identity,
    lower_holds,
    lower_lift,
    rel_algebra,
    upper_holds,
    upper_lift,
    variant,
)


def rel(src, dst, pairs, names=("X", "Y")):
    return FinRel(Carrier(names[0], tuple(src)), Carrier(names[1], tuple(dst)), frozenset(pairs))


@st.composite
def relations(draw, max_size=3, src=None, dst=None):
    if src is None:
        src = Carrier("X", tuple(f"x{i}" for i in range(draw(st.integers(0, max_size)))))
    if dst is None:
        dst = Carrier("Y", tuple(f"y{j}" for j in range(draw(st.integers(0, max_size)))))
    cells = list(product(src.elements, dst.elements))
    chosen = draw(st.lists(st.booleans(), min_size=len(cells), max_size=len(cells)))
    return FinRel(src, dst, frozenset(c for c, keep in zip(cells, chosen) if keep))


@st.composite
def composable(draw, max_size=3):
    r = draw(relations(max_size))
    Z = Carrier("Z", tuple(f"z{k}" for k in range(draw(st.integers(0, max_size)))))
    s = draw(relations(max_size, src=r.dst, dst=Z))
    return r, s


def naive_lower(r: FinRel, S, T) -> bool:
    return all(any((s, t) in r.pairs for t in T) for s in S)


def subsets(carrier):
    els = carrier.elements
    for m in range(1 << len(els)):
        yield m, frozenset(e for i, e in enumerate(els) if m >> i & 1)


# -- relation algebra -------------------------------------------------------------


def test_one_step_composition():
    r = rel([1], ["a"], {(1, "a")}, ("X", "Y"))
    s = FinRel(r.dst, Carrier("Z", ("x",)), frozenset({("a", "x")}))
    assert compose(r, s).pairs == {(1, "x")}
    assert rel_algebra("compose", r, s) == compose(r, s)


def test_composition_needs_matching_carriers():
    r = rel([1], ["a"], set())
    with pytest.raises(CarrierMismatch):
        compose(r, r)


def test_pairs_must_lie_in_carriers():
    with pytest.raises(CarrierMismatch):
        rel([1], ["a"], {(2, "a")})


@settings(max_examples=100, deadline=None)
@given(relations())
def test_dagger_is_an_involution_and_identity_is_a_unit(r):
    assert dagger(dagger(r)) == r
    assert compose(r, identity(r.dst)) == r
    assert compose(identity(r.src), r) == r


@settings(max_examples=100, deadline=None)
@given(composable())
def test_composition_matches_set_definition(pair):
    r, s = pair
    expected = {(x, z) for (x, y) in r.pairs for (y2, z) in s.pairs if y == y2}
    assert compose(r, s).pairs == expected
    assert dagger(compose(r, s)) == compose(dagger(s), dagger(r))


# -- liftings -----------------------------------------------------------------------


def test_lower_lifting_examples():
    r = rel([1], ["a"], {(1, "a")})
    assert lower_holds(r, {1}, {"a"})
    assert lower_lift(r).holds([1], ["a"])
    assert upper_holds(r, {1}, {"a"})
    for T in ([], ["a"]):
        assert lower_lift(r).holds([], T)
        assert upper_lift(r).holds(T and [1], [])


@settings(max_examples=100, deadline=None)
@given(relations())
def test_lower_lifting_matches_definition(r):
    L, U = lower_lift(r), upper_lift(r)
    M, N = L.matrix(), U.matrix()
    for (a, S), (b, T) in product(subsets(r.src), subsets(r.dst)):
        assert M[a, b] == naive_lower(r, S, T) == L.holds(a, b)
        assert N[a, b] == all(any((s, t) in r.pairs for s in S) for t in T) == U.holds(a, b)


@settings(max_examples=100, deadline=None)
@given(relations())
def test_upper_is_the_converse_of_lower_of_the_converse(r):
    assert np.array_equal(upper_lift(r).matrix(), lower_lift(dagger(r)).matrix().T)
    assert upper_lift(r) == dagger_caba(lower_lift(dagger(r)))


def test_materialising_above_the_bound_fails_but_queries_work():
    X = Carrier("X", tuple(range(9)))
    Y = Carrier("Y", tuple(range(9)))
    r = FinRel(X, Y, frozenset((i, i) for i in range(9)))
    L = lower_lift(r)
    with pytest.raises(EnumerationTooLarge):
        L.matrix()
    assert L.holds(list(range(9)), list(range(9)))
    assert not L.holds([0], [1])


def test_bound_is_configurable(monkeypatch):
    r = rel(range(3), range(3), set())
    monkeypatch.setenv("DUALITY_LAB_MAX_ENUM", "32")
    with pytest.raises(EnumerationTooLarge):
        lower_lift(r).matrix()
    monkeypatch.setenv("DUALITY_LAB_MAX_ENUM", "64")
    assert lower_lift(r).matrix().shape == (8, 8)


# -- directional atomicity -----------------------------------------------------------


def test_order_on_two_atom_powerset_is_directionally_atomic():
    P = Caba.powerset([1, 2])
    order = CabaRel.order(P)
    # 16 candidate pairs, 9 of them in the order
    assert order.matrix().size == 16 and int(order.matrix().sum()) == 9
    assert check_directionally_atomic(order).ok


def test_closure_of_a_single_pair_is_not_atomic_founded():
    # close {({1},{1,2})} under the bimodule law: shrink left, grow right
    P1, P12 = Caba.powerset([1]), Caba.powerset([1, 2])
    t = np.zeros((2, 4), dtype=bool)
    for a, b in product(range(2), range(4)):
        t[a, b] = (a & ~1 == 0) and (3 & ~b == 0)
    diag = check_directionally_atomic(CabaRel.explicit(P1, P12, t))
    assert diag.bimodule.holds
    assert not diag.atomic_founded.holds
    assert diag.atomic_founded.witness == ("{1}", "{1,2}")


def test_upper_lifting_is_usually_not_directionally_atomic():
    r = rel(["x"], ["y"], set())
    diag = check_directionally_atomic(upper_lift(r).materialise())
    assert not diag.ok
    with pytest.raises(NotDirectionallyAtomic):
        variant(upper_lift(r).materialise())


def test_too_large_for_exhaustive_check():
    with pytest.raises(TooLarge):
        check_directionally_atomic(lower_lift(identity(Carrier("W", tuple(range(9))))), bound=1 << 16)


@settings(max_examples=100, deadline=None)
@given(relations())
def test_every_lifted_relation_is_directionally_atomic(r):
    assert check_directionally_atomic(lower_lift(r).materialise()).ok


@settings(max_examples=100, deadline=None)
@given(relations())
def test_atom_base_recovers_the_base_relation(r):
    assert atom_base(lower_lift(r).materialise()) == r
    assert atom_base(lower_lift(r)) == r


def test_atom_base_of_order_is_identity_and_of_empty_is_empty():
    X = Carrier("X", ("a", "b", "c"))
    P = Caba.of_carrier(X)
    assert atom_base(CabaRel.order(P)) == identity(X)
    empty = CabaRel.explicit(P, P, np.zeros((8, 8), dtype=bool))
    assert atom_base(empty).pairs == frozenset()


@settings(max_examples=100, deadline=None)
@given(relations())
def test_variant_of_lift_is_lift_of_converse(r):
    explicit = lower_lift(r).materialise()
    v = variant(explicit)
    assert v == lower_lift(dagger(r))
    assert variant(v) == explicit
    assert variant(lower_lift(r)) == lower_lift(dagger(r))


def test_variant_of_order_is_order():
    P = Caba.powerset([1, 2])
    assert variant(CabaRel.order(P)) == CabaRel.order(P)


@settings(max_examples=100, deadline=None)
@given(composable())
def test_lifting_preserves_composition(pair):
    r, s = pair
    assert lower_lift(compose(r, s)) == compose_caba(lower_lift(r), lower_lift(s))


@settings(max_examples=60, deadline=None)
@given(relations(max_size=2), relations(max_size=2))
def test_lifting_is_injective(r, s):
    if r.src == s.src and r.dst == s.dst:
        assert (r == s) == (lower_lift(r) == lower_lift(s))
