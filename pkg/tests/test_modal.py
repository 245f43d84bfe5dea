from __future__ import annotations

import random
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from duality_lab.duality import all_functions
from duality_lab.errors import CarrierMismatch
from duality_lab.fixtures import buffer_fixture, buffer_frames, buffer_quotient, non_open_example
from duality_lab.lattice import Caba, FiniteFunction
from duality_lab.modal import (
    Cabao,
    Frame,
    check_simulatory,
    classify_frame_map,
    classify_sim,
    frame_map_census,
    graph,
    greatest_fixpoint,
    lemma_equivalence_harness,
    modal_operators,
)
from duality_lab.relations import CabaRel, FinRel, identity, lower_lift
from duality_lab.sampling import random_frame, random_relation


def arrow() -> Frame:
    return Frame.build("F", ["a", "b"], [("a", "b")])


@st.composite
def frames(draw, name="X", max_worlds=3):
    n = draw(st.integers(1, max_worlds))
    ws = [f"{name.lower()}{i}" for i in range(n)]
    cells = list(product(ws, repeat=2))
    keep = draw(st.lists(st.booleans(), min_size=len(cells), max_size=len(cells)))
    return Frame.build(name, ws, [c for c, k in zip(cells, keep) if k])


def rel_between(X: Frame, Y: Frame, pairs) -> FinRel:
    return FinRel(X.worlds, Y.worlds, frozenset(pairs))


# -- operators ---------------------------------------------------------------------


def test_diamond_and_box_on_a_single_arrow():
    F = arrow()
    assert F.diamond(["a"]) == {"b"}
    assert F.box(["b"]) == {"a", "b"}
    assert F.box([]) == {"b"}
    assert F.diamond([]) == frozenset()


def test_operators_match_set_definitions_and_adjunction_is_exhaustive():
    F = Frame.build("F", range(4), [(0, 1), (1, 1), (2, 0), (3, 2), (3, 0)])
    ops = modal_operators(F)
    assert ops.adjunction.holds
    for a in range(16):
        A = F.subset(a)
        dia = {w for w in F.worlds if any(F.trans.holds(v, w) for v in A)}
        box = {w for w in F.worlds if all(v in A for v in F.worlds if F.trans.holds(w, v))}
        assert F.subset(ops.diamond(a)) == dia
        assert F.subset(ops.box(a)) == box


@settings(max_examples=100, deadline=None)
@given(frames(max_worlds=4))
def test_diamond_is_left_adjoint_to_box(F):
    n = len(F)
    for a, b in product(range(1 << n), repeat=2):
        assert (F.diamond_mask(a) & ~b == 0) == (a & ~F.box_mask(b) == 0)


def test_operator_relation_must_live_on_atoms():
    P = Caba.powerset("xy")
    wrong = FinRel.from_masks(arrow().worlds, arrow().worlds, [0, 0])
    with pytest.raises(CarrierMismatch):
        Cabao.from_atom_relation(P, wrong)


def test_frame_rejects_unknown_predicate_worlds():
    with pytest.raises(CarrierMismatch):
        Frame.build("F", ["a"], [], {"p": ["z"]})


# -- frame maps ----------------------------------------------------------------------


def test_identity_is_open():
    F = arrow()
    rep = classify_frame_map(FiniteFunction.identity(F.worlds), F, F)
    assert rep.morphism and rep.open and rep.consistent


def test_buffer_quotient_is_open():
    f, X, Z = buffer_quotient(2)
    rep = classify_frame_map(f, X, Z)
    assert rep.morphism and rep.open and rep.consistent


def test_deadlocked_world_onto_live_world_is_not_open():
    f, X, Y = non_open_example()
    rep = classify_frame_map(f, X, Y)
    assert rep.morphism and not rep.open and rep.consistent
    assert rep.witnesses["open"] == {"world": "d", "image_transition": ["a", "b"]}
    assert "operator_equality" in rep.witnesses


def test_non_morphism_has_transition_witness():
    X = Frame.build("X", ["p", "q"], [("p", "q")])
    Y = Frame.build("Y", ["u"], [])
    f = FiniteFunction.from_mapping(X.worlds, Y.worlds, {"p": "u", "q": "u"})
    rep = classify_frame_map(f, X, Y)
    assert not rep.morphism and not rep.open and rep.consistent
    assert rep.witnesses["morphism"] == {"transition": ["p", "q"], "image": ["u", "u"]}


@settings(max_examples=60, deadline=None)
@given(frames("X", 3), frames("Y", 3))
def test_open_iff_graph_is_bisimulation(X, Y):
    for f in all_functions(X.worlds, Y.worlds):
        rep = classify_frame_map(f, X, Y)
        sim = classify_sim(graph(f), X, Y)
        assert rep.consistent
        assert rep.open == sim.is_bisimulation
        assert rep.morphism == sim.is_simulation


def test_census_counts_agree_with_direct_classification_on_two_worlds():
    census = frame_map_census(2)
    assert census.ok
    instances = morphisms = opens = 0
    for nx, ny in product((1, 2), repeat=2):
        for rx, ry in product(range(1 << nx * nx), range(1 << ny * ny)):
            X = _code_frame("X", nx, rx)
            Y = _code_frame("Y", ny, ry)
            for f in all_functions(X.worlds, Y.worlds):
                rep = classify_frame_map(f, X, Y)
                instances += 1
                morphisms += rep.morphism
                opens += rep.open
    assert (census.instances, census.morphisms, census.open_maps) == (instances, morphisms, opens)


def _code_frame(name: str, n: int, code: int) -> Frame:
    ws = [f"{name.lower()}{i}" for i in range(n)]
    return Frame.build(name, ws, [(ws[i], ws[k]) for i in range(n) for k in range(n) if code >> (i * n + k) & 1])


# -- simulations ---------------------------------------------------------------------


def test_empty_relation_is_a_bisimulation():
    F = arrow()
    rep = classify_sim(rel_between(F, F, []), F, F)
    assert rep.is_simulation and rep.is_cosimulation and rep.is_bisimulation
    assert rep.counterexamples == ()


def test_buffer_relation_is_a_bisimulation():
    for n in range(4):
        X, Y, Q = buffer_frames(n)
        assert classify_sim(Q, X, Y).is_bisimulation


def test_graph_of_non_open_map_is_only_a_simulation():
    f, X, Y = non_open_example()
    rep = classify_sim(graph(f), X, Y)
    assert rep.is_simulation and not rep.is_cosimulation
    v = rep.counterexamples[0]
    assert (v.pair, v.side, v.transition) == (("d", "a"), "back", ("a", "b"))
    assert rep.as_dict()["counterexamples"] == [{"pair": ["d", "a"], "side": "back", "transition": ["a", "b"]}]


def test_relation_must_match_frames():
    F = arrow()
    G = Frame.build("G", ["a", "b"], [])
    with pytest.raises(CarrierMismatch):
        classify_sim(rel_between(F, F, []), F, G)


def test_greatest_bisimulation_of_loop_and_deadlock():
    X = Frame.build("X", ["a", "b"], [("a", "a")])
    assert greatest_fixpoint("bisimulation", X, X).pairs == {("a", "a"), ("b", "b")}


def test_buffer_greatest_bisimulation_is_total():
    for n in range(3):
        X, Y, Q = buffer_frames(n)
        big = greatest_fixpoint("bisimulation", X, Y)
        assert len(big) == len(X) * len(Y)
        assert Q <= big


def test_greatest_fixpoint_rejects_unknown_kind():
    with pytest.raises(ValueError):
        greatest_fixpoint("trace", arrow(), arrow())


@settings(max_examples=100, deadline=None)
@given(frames("X", 3), frames("Y", 3), st.randoms(use_true_random=False))
def test_greatest_fixpoint_is_greatest(X, Y, rnd):
    sim = greatest_fixpoint("simulation", X, Y)
    cosim = greatest_fixpoint("cosimulation", X, Y)
    bis = greatest_fixpoint("bisimulation", X, Y)
    assert classify_sim(sim, X, Y).is_simulation
    assert classify_sim(cosim, X, Y).is_cosimulation
    assert classify_sim(bis, X, Y).is_bisimulation
    assert bis <= sim and bis <= cosim
    for _ in range(20):
        q = random_relation(rnd, X.worlds, Y.worlds)
        rep = classify_sim(q, X, Y)
        if rep.is_simulation:
            assert q <= sim
        if rep.is_cosimulation:
            assert q <= cosim
        if rep.is_bisimulation:
            assert q <= bis


@settings(max_examples=100, deadline=None)
@given(frames("X", 3))
def test_greatest_self_bisimulation_is_symmetric_and_contains_identity(X):
    bis = greatest_fixpoint("bisimulation", X, X)
    assert all((b, a) in bis.pairs for a, b in bis.pairs)
    assert identity(X.worlds) <= greatest_fixpoint("simulation", X, X)
    assert identity(X.worlds) <= bis


def test_within_restricts_the_search():
    X = Frame.build("X", ["a", "b"], [("a", "a"), ("b", "b")])
    diag = rel_between(X, X, [("a", "a")])
    assert greatest_fixpoint("bisimulation", X, X, within=diag) == diag


# -- simulatory relations --------------------------------------------------------------


def test_lifted_buffer_relation_is_bisimulatory(monkeypatch):
    monkeypatch.setenv("DUALITY_LAB_MAX_ENUM", str(1 << 17))
    for n in range(3):
        X, Y, Q = buffer_frames(n)
        assert check_simulatory(lower_lift(Q), modal_operators(X), modal_operators(Y)).bisimulatory


def test_order_on_powerset_is_bisimulatory():
    F = Frame.build("F", range(3), [(0, 1), (1, 2), (2, 2)])
    ops = modal_operators(F)
    assert check_simulatory(CabaRel.order(ops.caba), ops, ops).bisimulatory


def test_lifted_non_cosimulation_is_simulatory_only():
    f, X, Y = non_open_example()
    rep = check_simulatory(lower_lift(graph(f)), modal_operators(X), modal_operators(Y))
    assert rep.simulatory and not rep.cosimulatory
    assert set(rep.witnesses) == {"cosimulatory"}


def test_check_simulatory_needs_matching_algebras():
    F = arrow()
    G = Frame.build("G", ["x"], [])
    with pytest.raises(CarrierMismatch):
        check_simulatory(lower_lift(identity(F.worlds)), modal_operators(G), modal_operators(F))


@settings(max_examples=100, deadline=None)
@given(frames("X", 3), frames("Y", 3), st.randoms(use_true_random=False))
def test_relational_and_algebraic_verdicts_agree(X, Y, rnd):
    q = random_relation(rnd, X.worlds, Y.worlds)
    rel = classify_sim(q, X, Y)
    alg = check_simulatory(lower_lift(q), modal_operators(X), modal_operators(Y))
    explicit = check_simulatory(lower_lift(q).materialise(), modal_operators(X), modal_operators(Y))
    assert (rel.is_simulation, rel.is_cosimulation) == (alg.simulatory, alg.cosimulatory)
    assert (alg.simulatory, alg.cosimulatory) == (explicit.simulatory, explicit.cosimulatory)


# -- equivalence harness ---------------------------------------------------------------


def test_harness_on_buffer_is_all_true(monkeypatch):
    monkeypatch.setenv("DUALITY_LAB_MAX_ENUM", str(1 << 17))
    for n in range(3):
        X, Y, Q = buffer_frames(n)
        rep = lemma_equivalence_harness(Q, X, Y)
        assert rep.simulation == (True, True, True)
        assert rep.cosimulation == (True, True, True)


def test_harness_on_mutated_buffer_is_all_false_together():
    X, Y, Q = buffer_frames(1)
    # keep (ex, ey) but drop every pair out of L0: the move ex -> L0 has no match
    broken = FinRel(X.worlds, Y.worlds, frozenset(p for p in Q.pairs if p[0] != "L0"))
    rep = lemma_equivalence_harness(broken, X, Y)
    assert rep.simulation == (False, False, False)
    assert rep.agree


def test_harness_agrees_on_seeded_samples():
    rng = random.Random(3)
    for _ in range(100):
        X, Y = random_frame(rng, "X", 3), random_frame(rng, "Y", 3)
        assert lemma_equivalence_harness(random_relation(rng, X.worlds, Y.worlds), X, Y).agree


# -- buffer fixture ----------------------------------------------------------------------


def test_buffer_sizes():
    X, Y, Q, theory = buffer_fixture(1)
    assert (len(X), len(Y)) == (5, 7)
    assert len(Q) == 1 + 2 * (2 * 3)


def test_buffer_diamond_of_empty_is_all_full_states():
    fx = buffer_fixture(3)
    full = set().union(*(fx.X.valuation[f"F_X_{n}"] for n in range(4)))
    assert fx.X.diamond(fx.X.valuation["empty_X"]) == full
    assert fx.X.box(fx.X.valuation["empty_X"]) == full


def test_buffer_rejects_negative_bound():
    with pytest.raises(ValueError):
        buffer_frames(-1)


def test_simulatory_table_shape():
    ops = modal_operators(arrow())
    assert ops.diamond_table.shape == (4,) and ops.box_table.shape == (4,)
    assert np.array_equal(ops.diamond_table, [ops.diamond(a) for a in range(4)])
