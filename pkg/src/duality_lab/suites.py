"""Bounded verification suites for the two dualities, shared by the command line and tests."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Callable

from .duality import (
    all_functions,
    carrier,
    directionally_atomic_census,
    j_embed,
    mutated_graph,
    surjectivity_witness,
    verify_full_faithful,
    verify_functor_laws,
    verify_identity_law,
    verify_square_tarski,
    verify_square_thomason,
)
from .errors import NotOpenMap
from .fixtures import buffer_fixture, buffer_quotient, non_open_example
from .lattice import Caba, FiniteFunction
from .logic import check_derivation, holds_statement
from .modal import (
    Frame,
    check_simulatory,
    classify_sim,
    frame_map_census,
    greatest_fixpoint,
    lemma_equivalence_harness,
    modal_operators,
)
from .relations import FinRel, check_directionally_atomic, compose, compose_caba, lower_lift
from .sampling import largest_within, random_carrier, random_frame, random_relation, random_rule_instance

SUITES = ("tarski", "thomason")


@dataclass
class SuiteCheck:
    name: str
    ok: bool
    detail: dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        return {"name": self.name, "ok": self.ok, "detail": self.detail}


def divisor_lattice(n: int = 30) -> Caba:
    divs = [d for d in range(1, n + 1) if n % d == 0]
    return Caba.named(f"D{n}", [str(d) for d in divs], [(str(a), str(b)) for a in divs for b in divs if b % a == 0])


def _drop_first(r: FinRel, s: FinRel) -> FinRel:
    c = compose(r, s)
    return FinRel(c.src, c.dst, frozenset(c.sorted_pairs()[1:]))


# ---------------------------------------------------------------------------


def tarski_suite(max_size: int = 3, seed: int = 0, samples: int = 1000) -> list[SuiteCheck]:
    rng = random.Random(seed)
    out: list[SuiteCheck] = []
    exhaustive = min(max_size, 3)

    bad = [n for n in range(max_size + 1) if not verify_identity_law(carrier("X", n)).holds]
    out.append(SuiteCheck("identity_law", not bad, {"sizes": max_size + 1, "failing": bad}))

    pairs = []
    for _ in range(samples):
        a, b, c = (random_carrier(rng, f"C{k}", max_size) for k in range(3))
        pairs.append((random_relation(rng, a, b), random_relation(rng, b, c)))
    rep = verify_functor_laws(pairs)
    first = rep.failures[0].witness if rep.failures else None
    out.append(SuiteCheck("composition_law", rep.ok, {"pairs": len(pairs), "first_failure": first}))

    nonempty = [(r, s) for r, s in pairs if len(compose(r, s))][:50]
    mutated = verify_functor_laws(nonempty, _drop_first)
    out.append(SuiteCheck("composition_mutation_detected", len(mutated.failures) == len(nonempty),
                          {"mutants": len(nonempty), "caught": len(mutated.failures)}))

    faithful = {}
    for n, m in product(range(1, exhaustive + 1), repeat=2):
        r = verify_full_faithful(n, m, census_limit=0)
        faithful[f"{n}x{m}"] = r.ok
    out.append(SuiteCheck("faithful_and_round_trip", all(faithful.values()), faithful))

    census = {}
    for n in range(1, min(max_size, 2) + 1):
        c = directionally_atomic_census(n, n)
        census[f"{n}x{n}"] = {"found": c.found, "expected": c.expected, "lifts_match": c.lifts_match.holds}
    out.append(SuiteCheck("census", all(v["found"] == v["expected"] and v["lifts_match"] for v in census.values()), census))

    wits = {
        "D30": surjectivity_witness(divisor_lattice(30)),
        "P(ab)": surjectivity_witness(Caba.named("Pab", ["0", "a", "b", "ab"],
                                                 [("0", "0"), ("a", "a"), ("b", "b"), ("ab", "ab"),
                                                  ("0", "a"), ("0", "b"), ("0", "ab"), ("a", "ab"), ("b", "ab")])),
        "one": surjectivity_witness(Caba.named("One", ["z"], [("z", "z")])),
    }
    out.append(SuiteCheck("surjectivity_witnesses", all(w.ok for w in wits.values()),
                          {k: w.ok for k, w in wits.items()}))

    count, failing = 0, None
    for n, m in product(range(exhaustive + 1), repeat=2):
        for f in all_functions(carrier("A", n), carrier("B", m)):
            count += 1
            sq = verify_square_tarski(f)
            if not sq.ok and failing is None:
                failing = {"function": f.as_dict(), "witness": sq.witness}
    out.append(SuiteCheck("square_all_functions", failing is None, {"functions": count, "first_failure": failing}))

    f = FiniteFunction(carrier("A", 2), carrier("B", 2), ("b0", "b1"))
    mutant = verify_square_tarski(f, mutated_graph)
    out.append(SuiteCheck("square_mutation_detected", not mutant.ok, {"witness": mutant.witness}))

    j_da = j_comp = j_inj = True
    for _ in range(max(1, samples // 10)):
        X, Y, Z = (random_carrier(rng, name, exhaustive) for name in "XYZ")
        f = FiniteFunction(X, Y, tuple(rng.choice(Y.elements) for _ in X)) if len(Y) or not len(X) else None
        g = FiniteFunction(Y, Z, tuple(rng.choice(Z.elements) for _ in Y)) if len(Z) or not len(Y) else None
        if f is None or g is None:
            continue
        j_da &= check_directionally_atomic(j_embed(f)).ok
        j_comp &= j_embed(f.then(g)) == compose_caba(j_embed(g), j_embed(f))
        f2 = FiniteFunction(X, Y, tuple(rng.choice(Y.elements) for _ in X))
        j_inj &= (f2.targets == f.targets) == (j_embed(f2) == j_embed(f))
    out.append(SuiteCheck("j_embedding", j_da and j_comp and j_inj,
                          {"directionally_atomic": j_da, "preserves_composition": j_comp, "injective": j_inj}))
    return out


def _random_pair(rng: random.Random, max_worlds: int) -> tuple[Frame, Frame, FinRel]:
    X, Y = random_frame(rng, "X", max_worlds), random_frame(rng, "Y", max_worlds)
    return X, Y, random_relation(rng, X.worlds, Y.worlds)


def thomason_suite(max_size: int = 3, seed: int = 0, samples: int = 1000) -> list[SuiteCheck]:
    rng = random.Random(seed)
    out: list[SuiteCheck] = []
    worlds = min(max_size, 3)

    frames, failing = 0, None
    for n in range(worlds + 1):
        X = carrier("W", n)
        for code in range(1 << (n * n)):
            fr = Frame("W", X, FinRel.from_masks(X, X, [(code >> (i * n)) & ((1 << n) - 1) for i in range(n)]))
            frames += 1
            if not modal_operators(fr).adjunction.holds and failing is None:
                failing = fr.trans.sorted_pairs()
    out.append(SuiteCheck("adjunction", failing is None, {"frames": frames, "first_failure": failing}))

    census = frame_map_census(worlds)
    out.append(SuiteCheck("frame_map_census", census.ok, {
        "instances": census.instances, "morphisms": census.morphisms, "open_maps": census.open_maps,
        "disagreements": census.disagreements[:3]}))

    agree = cross = True
    for _ in range(samples):
        X, Y, Q = _random_pair(rng, worlds)
        agree &= lemma_equivalence_harness(Q, X, Y).agree
        sim = classify_sim(Q, X, Y)
        alg = check_simulatory(lower_lift(Q), modal_operators(X), modal_operators(Y))
        cross &= (sim.is_simulation, sim.is_cosimulation) == (alg.simulatory, alg.cosimulatory)
    out.append(SuiteCheck("characterisations_agree", agree, {"instances": samples}))
    out.append(SuiteCheck("relational_matches_algebraic", cross, {"instances": samples}))

    closed = True
    for _ in range(samples):
        X, Y, Z = (random_frame(rng, name, worlds) for name in "XYZ")
        q1 = lower_lift(largest_within(rng, "simulation", X, Y))
        q2 = lower_lift(largest_within(rng, "simulation", Y, Z))
        closed &= check_simulatory(compose_caba(q1, q2), modal_operators(X), modal_operators(Z)).simulatory
    out.append(SuiteCheck("simulatory_composition_closed", closed, {"pairs": samples}))

    f, X, Z = buffer_quotient(2)
    sq = verify_square_thomason(f, X, Z)
    ident = verify_square_thomason(FiniteFunction.identity(X.worlds), X, X)
    try:
        verify_square_thomason(*non_open_example())
        rejected = False
    except NotOpenMap:
        rejected = True
    out.append(SuiteCheck("square_open_maps", sq.ok and ident.ok and rejected,
                          {"buffer_quotient": sq.checks, "identity": ident.ok, "non_open_rejected": rejected}))

    fx = buffer_fixture(3)
    models = fx.workspace().models()
    facts = fx.theory.verify(models)
    derivs = {k: check_derivation(d, models, fx.theory) for k, d in fx.derivations.items()}
    big = greatest_fixpoint("bisimulation", fx.X, fx.Y)
    buffer_ok = (all(facts.values()) and classify_sim(fx.Q, fx.X, fx.Y).is_bisimulation
                 and all(r.accepted and r.root_true for r in derivs.values()) and fx.Q <= big)
    out.append(SuiteCheck("buffer_example", buffer_ok, {
        "facts": sum(facts.values()), "derivations": {k: r.verdict for k, r in derivs.items()}}))

    unsound = None
    for _ in range(samples):
        inst = random_rule_instance(rng, worlds)
        rep = check_derivation(inst.derivation, inst.models, inst.theory)
        if rep.accepted and not holds_statement(inst.derivation.conclusion, inst.models):
            unsound = {"rule": inst.rule, "conclusion": str(inst.derivation.conclusion)}
            break
    out.append(SuiteCheck("rule_soundness", unsound is None, {"instances": samples, "counterexample": unsound}))
    return out


RUNNERS: dict[str, Callable[..., list[SuiteCheck]]] = {"tarski": tarski_suite, "thomason": thomason_suite}


def run_suite(name: str, max_size: int = 3, seed: int = 0, samples: int = 1000) -> list[SuiteCheck]:
    if name not in RUNNERS:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return RUNNERS[name](max_size=max_size, seed=seed, samples=samples)

