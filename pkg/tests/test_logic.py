from __future__ import annotations

import random
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from duality_lab.errors import SideConditionFailed, UnresolvedName
from duality_lab.fixtures import buffer_fixture, buffer_frames
from duality_lab.logic import (
    And,
    Bot,
    Box,
    Derivation,
    Dia,
    Entailment,
    EntailmentLeaf,
    Judgment,
    Models,
    Not,
    Or,
    Pred,
    RelDagger,
    RelId,
    RelName,
    RelSeq,
    Theory,
    TheoryLeaf,
    Top,
    WorldLit,
    check_derivation,
    eval_formula,
    holds_entailment,
    holds_judgment,
    holds_statement,
)
from duality_lab.modal import Frame
from duality_lab.relations import FinRel, lower_holds
from duality_lab.sampling import MAKERS, random_formula, random_frame, random_relation, random_rule_instance


def two_frames():
    X = Frame.build("X", ["a", "b"], [("a", "b"), ("b", "b")], {"p": ["a"], "q": ["b"]})
    Y = Frame.build("Y", ["u", "v"], [("u", "v")], {"r": ["v"]})
    Q = FinRel(X.worlds, Y.worlds, frozenset({("a", "u"), ("b", "v")}))
    return Models({"X": X, "Y": Y}, {"Q": Q})


def buffer_models(n_max=3):
    return buffer_fixture(n_max).workspace().models()


# -- formulas ------------------------------------------------------------------------------


def test_formula_printing():
    phi = And((Pred("p"), Or((Dia(Pred("q")), Not(Bot())))))
    assert str(phi) == "p & (dia q | !bot)"
    assert str(Or(())) == "Or[]" and str(And((Top(),))) == "And[top]"
    assert str(WorldLit("a")) == "@a"
    assert str(Judgment(Pred("p"), RelDagger(RelSeq(RelName("R"), RelName("S"))), Box(Pred("r")))) == "p [(R; S)~] box r"


def test_top_is_everything_and_negated_empty_join_too():
    X = two_frames().frame("X")
    assert eval_formula(Top(), X) == {"a", "b"}
    assert eval_formula(Not(Or(())), X) == {"a", "b"}
    assert eval_formula(And(()), X) == {"a", "b"}
    assert eval_formula(Or(()), X) == frozenset()


def test_buffer_diamond_of_empty():
    X, _, _ = buffer_frames(1)
    assert eval_formula(Dia(Pred("empty_X")), X) == {"L0", "R0", "L1", "R1"}


def test_world_literal_and_modalities():
    X = two_frames().frame("X")
    assert eval_formula(WorldLit("a"), X) == {"a"}
    assert eval_formula(Dia(WorldLit("a")), X) == {"b"}
    assert eval_formula(Box(Pred("q")), X) == {"a", "b"}
    assert eval_formula(Box(Pred("p")), X) == frozenset()


def test_unresolved_names():
    X = two_frames().frame("X")
    with pytest.raises(UnresolvedName):
        eval_formula(Pred("zzz"), X)
    with pytest.raises(UnresolvedName):
        eval_formula(WorldLit("zzz"), X)


def test_entailment_examples():
    fx = buffer_fixture(3)
    assert holds_entailment(fx.X, Pred("L_0"), Pred("L_0"))
    assert holds_entailment(fx.X, Bot(), Dia(Pred("L_1")))
    for n in range(4):
        assert holds_entailment(fx.Y, Pred(f"F_Y_{n}"), Box(Pred("empty_Y")))
    assert not holds_entailment(fx.Y, Top(), Pred("empty_Y"))


# -- judgments ------------------------------------------------------------------------------


def test_bottom_antecedent_always_holds():
    m = two_frames()
    assert holds_judgment(Judgment(Bot(), RelName("Q"), Bot()), m)


def test_buffer_background_judgments():
    m = buffer_models()
    for n in range(4):
        assert holds_judgment(Judgment(Pred(f"L_{n}"), RelName("Q"), Pred(f"F_Y_{n}")), m)


def test_stripped_relation_gives_counterexample():
    X, Y, Q = buffer_frames(3)
    stripped = FinRel(X.worlds, Y.worlds, frozenset(p for p in Q.pairs if not p[0].startswith("L")))
    m = Models({"X": X, "Y": Y}, {"Q": stripped})
    for n in range(4):
        res = holds_judgment(Judgment(Pred(f"L_{n}"), RelName("Q"), Pred(f"F_Y_{n}")), m)
        assert not res and res.counterexample == f"L{n}"


def test_dagger_and_identity_judgments():
    m = two_frames()
    assert holds_judgment(Judgment(Pred("r"), RelDagger(RelName("Q")), Pred("q")), m)
    assert not holds_judgment(Judgment(Top(), RelDagger(RelName("Q")), Pred("q")), m)
    assert holds_judgment(Judgment(Pred("p"), RelId("X"), Top()), m)


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False))
def test_judgment_is_the_lower_lifting_of_denotations(rnd):
    X, Y = random_frame(rnd, "X", 3), random_frame(rnd, "Y", 3)
    q = random_relation(rnd, X.worlds, Y.worlds)
    m = Models({"X": X, "Y": Y}, {"Q": q})
    phi, psi = random_formula(rnd, X), random_formula(rnd, Y)
    expected = lower_holds(q, eval_formula(phi, X), eval_formula(psi, Y))
    assert holds_judgment(Judgment(phi, RelName("Q"), psi), m).holds == expected


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False))
def test_identity_judgment_is_entailment(rnd):
    X = random_frame(rnd, "X", 3)
    m = Models({"X": X})
    for _ in range(10):
        phi, psi = random_formula(rnd, X), random_formula(rnd, X)
        assert holds_judgment(Judgment(phi, RelId("X"), psi), m).holds == holds_entailment(X, phi, psi)


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False))
def test_disjunction_and_composition_laws(rnd):
    X, Y, Z = (random_frame(rnd, n, 3) for n in "XYZ")
    R, S = random_relation(rnd, X.worlds, Y.worlds), random_relation(rnd, Y.worlds, Z.worlds)
    m = Models({"X": X, "Y": Y, "Z": Z}, {"R": R, "S": S})
    a, b, psi, chi = random_formula(rnd, X), random_formula(rnd, X), random_formula(rnd, Y), random_formula(rnd, Z)
    r = RelName("R")
    joined = holds_statement(Judgment(Or((a, b)), r, psi), m)
    assert joined == (holds_statement(Judgment(a, r, psi), m) and holds_statement(Judgment(b, r, psi), m))
    if holds_statement(Judgment(a, r, psi), m) and holds_statement(Judgment(psi, RelName("S"), chi), m):
        assert holds_statement(Judgment(a, RelSeq(r, RelName("S")), chi), m)


# -- derivations ----------------------------------------------------------------------------


def test_buffer_derivations_are_accepted_and_true():
    fx = buffer_fixture(3)
    m = fx.workspace().models()
    assert all(fx.theory.verify(m).values())
    for name, d in fx.derivations.items():
        rep = check_derivation(d, m, fx.theory)
        assert rep.verdict == "accepted", (name, rep.failures)
        assert rep.root_true
        assert all(node.semantically_true for node in rep.nodes)
    assert str(fx.derivations["d2"].conclusion) == "dia L_2 | dia R_2 [Q] empty_Y"


def test_assume_marks_the_verdict_conditional():
    fx = buffer_fixture(1)
    rep = check_derivation(fx.derivations["main"], fx.workspace().models(), fx.theory, assume=True)
    assert rep.accepted and rep.conditional and rep.verdict == "conditional"


def test_id_intro_over_true_entailment():
    m = two_frames()
    ent = Entailment("X", Pred("p"), Top())
    rep = check_derivation(Derivation(Judgment(Pred("p"), RelId("X"), Top()), "id_intro", (EntailmentLeaf(ent),)), m)
    assert rep.verdict == "accepted"
    assert [n.path for n in rep.nodes] == ["root"]


def _sim_dia_step(fx_models, theory):
    # the buffer fact L0_full lifted through sim_dia
    d = Derivation(Judgment(Dia(Pred("L_0")), RelName("Q"), Dia(Pred("F_Y_0"))), "sim_dia", (TheoryLeaf("L0_full"),))
    return check_derivation(d, fx_models, theory)


def test_sim_dia_with_a_non_simulation_fails_its_side_condition():
    fx = buffer_fixture(1)
    assert _sim_dia_step(fx.workspace().models(), fx.theory).accepted
    # keep the background fact true but break forth at (ex, ey)
    broken = FinRel(fx.X.worlds, fx.Y.worlds, fx.Q.pairs - {("R0", "A0"), ("R0", "B0"), ("R0", "C0")})
    m = Models({"X": fx.X, "Y": fx.Y}, {"Q": broken})
    rep = _sim_dia_step(m, fx.theory)
    assert rep.verdict == "rejected"
    assert [(f.path, f.kind) for f in rep.failures] == [("root", "SideConditionFailed")]
    with pytest.raises(SideConditionFailed):
        rep.raise_if_rejected()


def test_each_failure_kind():
    m = two_frames()
    j = Judgment(Pred("p"), RelName("Q"), Top())
    theory = Theory("t", {"ok": j, "bad": Judgment(Top(), RelName("Q"), Pred("r"))})
    cases = {
        "UnknownRule": Derivation(j, "magic", (TheoryLeaf("ok"),)),
        "UnknownFact": Derivation(j, "consequence", (TheoryLeaf("missing"),)),
        "SchemaMismatch": Derivation(j, "consequence", (TheoryLeaf("ok"),)),
        "SemanticLeafFalse": Derivation(Judgment(Dia(Top()), RelName("Q"), Dia(Pred("r"))), "sim_dia",
                                        (TheoryLeaf("bad"),)),
    }
    for kind, d in cases.items():
        rep = check_derivation(d, m, theory)
        assert not rep.accepted
        assert rep.failures[0].kind == kind, (kind, rep.failures)


def test_false_entailment_leaf_is_reported_at_its_path():
    m = two_frames()
    d = Derivation(Judgment(Top(), RelId("X"), Pred("p")), "id_intro", (EntailmentLeaf(Entailment("X", Top(), Pred("p"))),))
    rep = check_derivation(d, m)
    assert [(f.path, f.kind) for f in rep.failures] == [("root.0", "SemanticLeafFalse")]
    assert rep.as_dict()["verdict"] == "rejected"


def test_or_left_arity_must_match_the_family():
    m = two_frames()
    j = Judgment(Pred("p"), RelName("Q"), Top())
    d = Derivation(Judgment(Or((Pred("p"), Pred("q"))), RelName("Q"), Top()), "or_left", (TheoryLeaf("j"),))
    rep = check_derivation(d, m, Theory("t", {"j": j}))
    assert rep.failures[0].kind == "SchemaMismatch"


def test_empty_or_left_derives_bottom_judgment():
    m = two_frames()
    d = Derivation(Judgment(Or(()), RelName("Q"), Pred("r")), "or_left", ())
    assert check_derivation(d, m).accepted


def test_cosim_rules_need_a_dagger():
    m = two_frames()
    j = Judgment(Top(), RelName("Q"), Top())
    d = Derivation(Judgment(Dia(Top()), RelName("Q"), Dia(Top())), "cosim_dia", (TheoryLeaf("j"),))
    rep = check_derivation(d, m, Theory("t", {"j": j}))
    assert rep.failures[0].kind == "SchemaMismatch"


@pytest.mark.parametrize("rule", sorted(MAKERS))
def test_sampled_instances_of_each_rule_are_sound(rule):
    rng = random.Random(rule)
    for _ in range(100):
        inst = random_rule_instance(rng, 3, rule)
        rep = check_derivation(inst.derivation, inst.models, inst.theory)
        assert rep.accepted, rep.failures
        assert holds_statement(inst.derivation.conclusion, inst.models)


def test_nested_paths_are_reported():
    fx = buffer_fixture(0)
    rep = check_derivation(fx.derivations["main"], fx.workspace().models(), fx.theory)
    paths = [n.path for n in rep.nodes]
    assert paths[:3] == ["root", "root.0", "root.0.0"]
    assert "root.0.1.0" in paths
    assert len(paths) == len(set(paths))


def test_exhaustive_identity_round_trip_on_one_frame():
    X = Frame.build("X", range(3), [(0, 1), (1, 2)], {"p": [0]})
    m = Models({"X": X})
    lits = [WorldLit(w) for w in X.worlds]
    for a, b in product(range(8), repeat=2):
        phi = Or(tuple(l for i, l in enumerate(lits) if a >> i & 1))
        psi = Or(tuple(l for i, l in enumerate(lits) if b >> i & 1))
        intro = Derivation(Judgment(phi, RelId("X"), psi), "id_intro", (EntailmentLeaf(Entailment("X", phi, psi)),))
        elim = Derivation(Entailment("X", phi, psi), "id_elim", (intro,))
        assert check_derivation(elim, m).accepted == (a & ~b == 0)
