from __future__ import annotations

from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from duality_lab.errors import MixedOwnership, NotACaba
from duality_lab.lattice import (
    Caba,
    Carrier,
    FiniteFunction,
    adjoint_triple,
    boolean_ops,
    validate_caba,
)
from duality_lab.suites import divisor_lattice


def chain3() -> Caba:
    names = ["bot", "m", "top"]
    return Caba.named("chain", names, [(a, b) for i, a in enumerate(names) for b in names[i:]])


# -- Boolean operations ---------------------------------------------------------


def test_empty_join_is_bottom_and_empty_meet_is_top():
    P = Caba.powerset([1, 2, 3])
    assert boolean_ops(P, "join", []).atom_set == frozenset()
    assert boolean_ops(P, "meet", []).atom_set == frozenset({1, 2, 3})


def test_complement_in_two_atom_powerset():
    P = Caba.powerset([1, 2])
    assert boolean_ops(P, "complement", [P.element([1])]).atom_set == frozenset({2})


def test_divisor_join_of_two_and_three_is_six():
    D = divisor_lattice(30)
    six = boolean_ops(D, "join", [D.element("2"), D.element("3")])
    assert D.label(six.mask) == "6"
    assert D.label(boolean_ops(D, "meet", [D.element("6"), D.element("15")]).mask) == "3"
    assert D.label(boolean_ops(D, "complement", [D.element("6")]).mask) == "5"


def test_mixed_owners_rejected():
    P, Q = Caba.powerset("ab"), Caba.powerset("xy")
    with pytest.raises(MixedOwnership):
        boolean_ops(P, "join", [P.element("a"), Q.element("x")])


def test_element_equality_is_by_atom_set():
    D = divisor_lattice(30)
    assert D.element("30") == boolean_ops(D, "top")
    assert D.element("1") == boolean_ops(D, "bot")
    assert D.element("10").atom_set == frozenset({"2", "5"})


# -- validation ---------------------------------------------------------------------


def test_powerset_three_atoms_passes_every_law():
    rep = validate_caba(Caba.powerset("abc"))
    assert rep.ok and rep.failures() == {}


def test_divisor_lattice_passes_with_prime_atoms():
    rep = validate_caba(divisor_lattice(30))
    assert rep.ok
    assert set(rep.atoms) == {"2", "3", "5"}


def test_three_chain_fails_complements_at_middle():
    rep = validate_caba(chain3())
    assert not rep.ok
    assert not rep.checks["complements"].holds
    assert rep.checks["complements"].witness == ("no complement", "m")
    assert rep.checks["partial_order"].holds
    with pytest.raises(NotACaba):
        chain3().atoms


def test_non_antisymmetric_order_reported():
    c = Caba.named("loop", ["a", "b"], [("a", "a"), ("b", "b"), ("a", "b"), ("b", "a")])
    rep = validate_caba(c)
    assert not rep.checks["partial_order"].holds


def test_divisor_lattice_of_twelve_is_not_boolean():
    # 12 = 2^2 * 3: distributive but 2 has no complement
    divs = [1, 2, 3, 4, 6, 12]
    c = Caba.named("D12", [str(d) for d in divs], [(str(a), str(b)) for a in divs for b in divs if b % a == 0])
    assert not validate_caba(c).ok


def test_one_element_algebra_has_no_atoms():
    one = Caba.named("one", ["z"], [("z", "z")])
    rep = validate_caba(one)
    assert rep.ok and rep.atoms == ()
    assert one.size == 0


@pytest.mark.parametrize("n", range(6))
def test_every_small_powerset_validates(n):
    assert validate_caba(Caba.powerset(range(n))).ok


# -- adjoint triple -----------------------------------------------------------------


def _fun(src, dst, mapping):
    return FiniteFunction.from_mapping(Carrier("X", tuple(src)), Carrier("Y", tuple(dst)), mapping)


def test_collapse_preimage_and_coimage():
    f = _fun([1, 2], ["a"], {1: "a", 2: "a"})
    t = adjoint_triple(f)
    PX, PY = Caba.of_carrier(f.src), Caba.of_carrier(f.dst)
    assert t.preimage(PY.element(["a"])).atom_set == frozenset({1, 2})
    assert t.coimage(PX.element([1])).atom_set == frozenset()
    assert t.coimage(PX.element([1, 2])).atom_set == frozenset({"a"})
    assert t.image(PX.element([2])).atom_set == frozenset({"a"})
    assert t.report.ok


def test_identity_triple_is_identity():
    f = FiniteFunction.identity(Carrier("X", (1, 2)))
    t = adjoint_triple(f)
    for m in range(4):
        assert t.preimage(m) == t.image(m) == t.coimage(m) == m


def _subsets(n):
    return range(1 << n)


@st.composite
def functions(draw, max_size=4):
    n = draw(st.integers(0, max_size))
    m = draw(st.integers(1, max_size)) if n else draw(st.integers(0, max_size))
    targets = draw(st.lists(st.integers(0, m - 1), min_size=n, max_size=n)) if m else []
    return FiniteFunction(Carrier("X", tuple(range(n))), Carrier("Y", tuple(f"y{j}" for j in range(m))),
                          tuple(f"y{j}" for j in targets))


@settings(max_examples=150, deadline=None)
@given(functions())
def test_galois_laws_hold_exhaustively(f):
    t = adjoint_triple(f)
    n, m = len(f.src), len(f.dst)
    for A, B in product(_subsets(n), _subsets(m)):
        assert (t.image(A) & ~B == 0) == (A & ~t.preimage(B) == 0)
        assert (t.preimage(B) & ~A == 0) == (B & ~t.coimage(A) == 0)
    for i in range(n):
        assert bin(t.image(1 << i)).count("1") == 1


@settings(max_examples=100, deadline=None)
@given(functions())
def test_preimage_is_a_boolean_homomorphism(f):
    t = adjoint_triple(f)
    n, m = len(f.src), len(f.dst)
    full_x, full_y = (1 << n) - 1, (1 << m) - 1
    for B1, B2 in product(_subsets(m), repeat=2):
        assert t.preimage(B1 | B2) == t.preimage(B1) | t.preimage(B2)
        assert t.preimage(B1 & B2) == t.preimage(B1) & t.preimage(B2)
        assert t.preimage(full_y & ~B1) == full_x & ~t.preimage(B1)


@settings(max_examples=100, deadline=None)
@given(functions())
def test_triple_matches_set_definitions(f):
    t = adjoint_triple(f)
    PX, PY = Caba.of_carrier(f.src), Caba.of_carrier(f.dst)
    for A in PX.elements():
        a = A.atom_set
        assert t.image(A).atom_set == {f(x) for x in a}
        assert t.coimage(A).atom_set == {y for y in f.dst if {x for x in f.src if f(x) == y} <= a}
    for B in PY.elements():
        assert t.preimage(B).atom_set == {x for x in f.src if f(x) in B.atom_set}


def test_function_must_be_total():
    with pytest.raises(ValueError):
        _fun([1, 2], ["a"], {1: "a"})
