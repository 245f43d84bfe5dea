"""Seeded random generators for frames, relations, formulas and rule instances."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable

from .lattice import Carrier
from .logic import (
    And,
    Bot,
    Box,
    Derivation,
    Dia,
    Entailment,
    EntailmentLeaf,
    Formula,
    Judgment,
    Models,
    Not,
    Or,
    Pred,
    RelDagger,
    RelId,
    RelName,
    RelSeq,
    Statement,
    Theory,
    TheoryLeaf,
    Top,
    WorldLit,
    holds_statement,
)
from .modal import Frame, greatest_fixpoint
from .relations import FinRel

PREDICATES = ("p", "q")


def random_carrier(rng: random.Random, name: str, max_size: int, min_size: int = 0) -> Carrier:
    n = rng.randint(min_size, max_size)
    return Carrier(name, tuple(f"{name.lower()}{i}" for i in range(n)))


def random_relation(rng: random.Random, X: Carrier, Y: Carrier, density: float | None = None) -> FinRel:
    p = rng.random() if density is None else density
    return FinRel(X, Y, frozenset((x, y) for x in X for y in Y if rng.random() < p))


def random_frame(rng: random.Random, name: str, max_worlds: int = 3, min_worlds: int = 1) -> Frame:
    worlds = random_carrier(rng, name, max_worlds, min_worlds)
    trans = random_relation(rng, worlds, worlds)
    val = {p: frozenset(w for w in worlds if rng.random() < 0.5) for p in PREDICATES}
    return Frame(name, worlds, trans, val)


def random_formula(rng: random.Random, frame: Frame, depth: int = 2) -> Formula:
    if depth <= 0 or rng.random() < 0.3:
        roll = rng.random()
        if roll < 0.1:
            return Top()
        if roll < 0.2:
            return Bot()
        if roll < 0.35 and len(frame.worlds):
            return WorldLit(rng.choice(frame.worlds.elements))
        return Pred(rng.choice(PREDICATES))
    kind = rng.choice(("not", "dia", "box", "and", "or"))
    if kind == "not":
        return Not(random_formula(rng, frame, depth - 1))
    if kind == "dia":
        return Dia(random_formula(rng, frame, depth - 1))
    if kind == "box":
        return Box(random_formula(rng, frame, depth - 1))
    items = tuple(random_formula(rng, frame, depth - 1) for _ in range(rng.randint(0, 3)))
    return And(items) if kind == "and" else Or(items)


def largest_within(rng: random.Random, kind: str, X: Frame, Y: Frame) -> FinRel:
    """A random relation pruned to the largest (co)simulation it contains."""
    return greatest_fixpoint(kind, X, Y, random_relation(rng, X.worlds, Y.worlds, rng.uniform(0.3, 1.0)))


# ---------------------------------------------------------------------------
# Rule instances with true premises


@dataclass(frozen=True)
class RuleInstance:
    rule: str
    models: Models
    theory: Theory
    derivation: Derivation


class _Env:
    def __init__(self, rng: random.Random, max_worlds: int) -> None:
        self.rng = rng
        self.X = random_frame(rng, "X", max_worlds)
        self.Y = random_frame(rng, "Y", max_worlds)
        self.Z = random_frame(rng, "Z", max_worlds)
        rels = {
            "R": random_relation(rng, self.X.worlds, self.Y.worlds),
            "S": random_relation(rng, self.Y.worlds, self.Z.worlds),
            "Qs": largest_within(rng, "simulation", self.X, self.Y),
            "Qc": largest_within(rng, "cosimulation", self.X, self.Y),
        }
        self.models = Models({"X": self.X, "Y": self.Y, "Z": self.Z}, rels)
        self.facts: dict[str, Statement] = {}

    def f(self, frame: Frame) -> Formula:
        return random_formula(self.rng, frame)

    def fact(self, s: Statement) -> TheoryLeaf:
        name = f"h{len(self.facts)}"
        self.facts[name] = s
        return TheoryLeaf(name)

    def true(self, *statements: Statement) -> bool:
        return all(holds_statement(s, self.models) for s in statements)


def _consequence(e: _Env) -> Derivation | None:
    q = RelName("R")
    phi, psi = e.f(e.X), e.f(e.Y)
    phi2 = And((phi, e.f(e.X))) if e.rng.random() < 0.5 else e.f(e.X)
    psi2 = Or((psi, e.f(e.Y))) if e.rng.random() < 0.5 else e.f(e.Y)
    left, mid, right = Entailment("X", phi2, phi), Judgment(phi, q, psi), Entailment("Y", psi, psi2)
    if not e.true(left, mid, right):
        return None
    return Derivation(Judgment(phi2, q, psi2), "consequence",
                      (EntailmentLeaf(left), e.fact(mid), EntailmentLeaf(right)))


def _or_left(e: _Env) -> Derivation | None:
    q = RelName("R")
    psi = e.f(e.Y)
    phis = tuple(e.f(e.X) for _ in range(e.rng.randint(0, 3)))
    prems = [Judgment(p, q, psi) for p in phis]
    if not e.true(*prems):
        return None
    return Derivation(Judgment(Or(phis), q, psi), "or_left", tuple(e.fact(p) for p in prems))


def _compose(e: _Env) -> Derivation | None:
    phi, psi, chi = e.f(e.X), e.f(e.Y), e.f(e.Z)
    first, second = Judgment(phi, RelName("R"), psi), Judgment(psi, RelName("S"), chi)
    if not e.true(first, second):
        return None
    return Derivation(Judgment(phi, RelSeq(RelName("R"), RelName("S")), chi), "compose",
                      (e.fact(first), e.fact(second)))


def _id_intro(e: _Env) -> Derivation | None:
    phi, psi = e.f(e.X), e.f(e.X)
    if e.rng.random() < 0.5:
        psi = Or((phi, psi))
    ent = Entailment("X", phi, psi)
    if not e.true(ent):
        return None
    return Derivation(Judgment(phi, RelId("X"), psi), "id_intro", (EntailmentLeaf(ent),))


def _id_elim(e: _Env) -> Derivation | None:
    phi, psi = e.f(e.Y), e.f(e.Y)
    if e.rng.random() < 0.5:
        phi = And((phi, psi))
    j = Judgment(phi, RelId("Y"), psi)
    if not e.true(j):
        return None
    return Derivation(Entailment("Y", phi, psi), "id_elim", (e.fact(j),))


def _modal(boxed: bool, dual: bool) -> Callable[[_Env], Derivation | None]:
    def make(e: _Env) -> Derivation | None:
        if dual:
            rel, src, dst = RelDagger(RelName("Qc")), e.Y, e.X
        else:
            rel, src, dst = RelName("Qs"), e.X, e.Y
        phi, psi = e.f(src), e.f(dst)
        prem = Judgment(phi, rel, Box(psi) if boxed else psi)
        if not e.true(prem):
            return None
        concl = Judgment(Dia(phi), rel, psi if boxed else Dia(psi))
        name = ("cosim" if dual else "sim") + ("_box_dia" if boxed else "_dia")
        return Derivation(concl, name, (e.fact(prem),))
    return make


MAKERS: dict[str, Callable[[_Env], Derivation | None]] = {
    "consequence": _consequence,
    "or_left": _or_left,
    "compose": _compose,
    "id_intro": _id_intro,
    "id_elim": _id_elim,
    "sim_dia": _modal(False, False),
    "sim_box_dia": _modal(True, False),
    "cosim_dia": _modal(False, True),
    "cosim_box_dia": _modal(True, True),
}


def random_rule_instance(rng: random.Random, max_worlds: int = 3, rule: str | None = None,
                         attempts: int = 200) -> RuleInstance:
    """A single-step derivation whose premises are all semantically true."""
    rule = rule or rng.choice(sorted(MAKERS))
    for _ in range(attempts):
        env = _Env(rng, max_worlds)
        d = MAKERS[rule](env)
        if d is not None:
            return RuleInstance(rule, env.models, Theory("premises", dict(env.facts)), d)
    raise RuntimeError(f"could not sample true premises for {rule} in {attempts} attempts")
