"""Ready-made frames: two buffers related by a bisimulation, and small map examples.

The buffers hold a value in ``0..n_max``.  The first has two internal slots
(worlds ``L<n>``, ``R<n>``), the second three (``A<n>``, ``B<n>``, ``C<n>``);
both return to their empty world ``ex`` / ``ey`` after every full state.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dsl import DerivationDecl, TheoryDecl, Workspace, serialize_workspace
from .lattice import FiniteFunction
from .logic import (
    Box,
    Derivation,
    Dia,
    Entailment,
    EntailmentLeaf,
    Judgment,
    Or,
    Pred,
    RelName,
    Theory,
    TheoryLeaf,
)
from .modal import Frame
from .relations import FinRel

LEFT_SLOTS = ("L", "R")
RIGHT_SLOTS = ("A", "B", "C")


@dataclass(frozen=True)
class BufferFixture:
    n_max: int
    X: Frame
    Y: Frame
    Q: FinRel
    theory: Theory
    derivations: dict[str, Derivation]

    def __iter__(self):
        # unpacks as (X, Y, Q, theory)
        return iter((self.X, self.Y, self.Q, self.theory))

    def workspace(self) -> Workspace:
        ws = Workspace()
        ws.add("frame", "X", self.X)
        ws.add("frame", "Y", self.Y)
        ws.add("rel", "Q", self.Q)
        ws.add("theory", self.theory.name, TheoryDecl(("X", "Q", "Y"), self.theory))
        for name, d in self.derivations.items():
            ws.add("derive", name, DerivationDecl(("X", "Q", "Y"), self.theory.name, d))
        return ws

    def text(self) -> str:
        return serialize_workspace(self.workspace())


def _buffer_frame(name: str, empty: str, slots: tuple[str, ...], n_max: int) -> Frame:
    full = {n: [f"{s}{n}" for s in slots] for n in range(n_max + 1)}
    worlds = [empty] + [w for n in range(n_max + 1) for w in full[n]]
    trans = [(empty, w) for ws in full.values() for w in ws] + [(w, empty) for ws in full.values() for w in ws]
    tag = name  # predicate suffix: empty_X, F_X_0, ...
    valuation: dict[str, list[str]] = {f"empty_{tag}": [empty]}
    for n in range(n_max + 1):
        for s in slots:
            valuation[f"{s}_{n}"] = [f"{s}{n}"]
        valuation[f"F_{tag}_{n}"] = full[n]
    return Frame.build(name, worlds, trans, valuation)


def buffer_frames(n_max: int = 3) -> tuple[Frame, Frame, FinRel]:
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    X = _buffer_frame("X", "ex", LEFT_SLOTS, n_max)
    Y = _buffer_frame("Y", "ey", RIGHT_SLOTS, n_max)
    pairs = {("ex", "ey")}
    for n in range(n_max + 1):
        pairs |= {(f"{a}{n}", f"{b}{n}") for a in LEFT_SLOTS for b in RIGHT_SLOTS}
    return X, Y, FinRel(X.worlds, Y.worlds, frozenset(pairs))


def _all_full(tag: str, n_max: int) -> Or:
    return Or(tuple(Pred(f"F_{tag}_{n}") for n in range(n_max + 1)))


def buffer_theory(n_max: int) -> Theory:
    facts: dict[str, object] = {}
    for tag in ("X", "Y"):
        empty = Pred(f"empty_{tag}")
        full = _all_full(tag, n_max)
        facts[f"dia_empty_{tag}_le"] = Entailment(tag, Dia(empty), full)
        facts[f"dia_empty_{tag}_ge"] = Entailment(tag, full, Dia(empty))
        facts[f"box_empty_{tag}_le"] = Entailment(tag, Box(empty), full)
        facts[f"box_empty_{tag}_ge"] = Entailment(tag, full, Box(empty))
    for n in range(n_max + 1):
        for s in LEFT_SLOTS:
            facts[f"{s}{n}_full"] = Judgment(Pred(f"{s}_{n}"), RelName("Q"), Pred(f"F_Y_{n}"))
    return Theory("buffer", facts)  # type: ignore[arg-type]


def _branch(slot: str, n: int) -> Derivation:
    """From ``slot_n [Q] F_Y_n`` derive ``dia slot_n [Q] empty_Y``."""
    q = RelName("Q")
    p = Pred(f"{slot}_{n}")
    boxed = Judgment(p, q, Box(Pred("empty_Y")))
    weakened = Derivation(boxed, "consequence", (
        EntailmentLeaf(Entailment("X", p, p)),
        TheoryLeaf(f"{slot}{n}_full"),
        EntailmentLeaf(Entailment("Y", Pred(f"F_Y_{n}"), Box(Pred("empty_Y")))),
    ))
    return Derivation(Judgment(Dia(p), q, Pred("empty_Y")), "sim_box_dia", (weakened,))


def buffer_derivation(n: int) -> Derivation:
    """``dia L_n | dia R_n [Q] empty_Y``: two symmetric branches joined by cases."""
    branches = tuple(_branch(s, n) for s in LEFT_SLOTS)
    lhs = Or(tuple(b.conclusion.lhs for b in branches))  # type: ignore[union-attr]
    return Derivation(Judgment(lhs, RelName("Q"), Pred("empty_Y")), "or_left", branches)


def buffer_fixture(n_max: int = 3) -> BufferFixture:
    X, Y, Q = buffer_frames(n_max)
    per_n = {f"d{n}": buffer_derivation(n) for n in range(n_max + 1)}
    whole_lhs = Or(tuple(d.conclusion.lhs for d in per_n.values()))  # type: ignore[union-attr]
    main = Derivation(Judgment(whole_lhs, RelName("Q"), Pred("empty_Y")), "or_left", tuple(per_n.values()))
    return BufferFixture(n_max, X, Y, Q, buffer_theory(n_max), {"main": main, **per_n})


def buffer_quotient(n_max: int = 2) -> tuple[FiniteFunction, Frame, Frame]:
    """Collapse the two-slot buffer onto a one-slot buffer with worlds ``e`` and ``full<n>``."""
    X, _, _ = buffer_frames(n_max)
    full = [f"full{n}" for n in range(n_max + 1)]
    Z = Frame.build("Z", ["e", *full],
                    [("e", w) for w in full] + [(w, "e") for w in full],
                    {"empty_Z": ["e"]})
    mapping = {"ex": "e"}
    for n in range(n_max + 1):
        for s in LEFT_SLOTS:
            mapping[f"{s}{n}"] = f"full{n}"
    return FiniteFunction.from_mapping(X.worlds, Z.worlds, mapping), X, Z


def non_open_example() -> tuple[FiniteFunction, Frame, Frame]:
    """A transition-preserving map that is not open: a deadlocked world lands on a live one."""
    X = Frame.build("Dead", ["d"], [])
    Y = Frame.build("Live", ["a", "b"], [("a", "b")])
    return FiniteFunction.from_mapping(X.worlds, Y.worlds, {"d": "a"}), X, Y
