"""Kripke frames, their modal operators, and (bi)simulations between them."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from types import MappingProxyType
from typing import Any, Hashable, Iterable, Mapping

import numpy as np

from ._config import max_enum
from .errors import CarrierMismatch, NotDirectionallyAtomic
from .lattice import Caba, CabaElement, Carrier, FiniteFunction, LawCheck, bits
from .relations import CabaRel, FinRel, check_directionally_atomic, lower_lift, variant

ADJUNCTION_SAMPLES = 4096


@dataclass(frozen=True, eq=False)
class Frame:
    name: str
    worlds: Carrier
    trans: FinRel
    valuation: Mapping[str, frozenset[Hashable]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.trans.src != self.worlds or self.trans.dst != self.worlds:
            raise CarrierMismatch(f"transitions of {self.name} do not run between its worlds")
        val = {}
        for p, ws in self.valuation.items():
            ws = frozenset(ws)
            unknown = [w for w in ws if w not in self.worlds]
            if unknown:
                raise CarrierMismatch(f"predicate {p} of {self.name} mentions unknown worlds {unknown}")
            val[p] = ws
        object.__setattr__(self, "valuation", MappingProxyType(val))

    @classmethod
    def build(cls, name: str, worlds: Iterable[Hashable],
              transitions: Iterable[tuple[Hashable, Hashable]] = (),
              valuation: Mapping[str, Iterable[Hashable]] | None = None) -> "Frame":
        carrier = Carrier(name, tuple(worlds))
        trans = FinRel(carrier, carrier, frozenset(transitions))
        return cls(name, carrier, trans, {p: frozenset(v) for p, v in (valuation or {}).items()})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return (self.name, self.worlds, self.trans, dict(self.valuation)) == (
            other.name, other.worlds, other.trans, dict(other.valuation))

    def __hash__(self) -> int:
        return hash((self.name, self.worlds, self.trans))

    def __len__(self) -> int:
        return len(self.worlds)

    @property
    def succ(self) -> tuple[int, ...]:
        return self.trans.succ

    def mask(self, ws: Iterable[Hashable]) -> int:
        return self.worlds.mask(ws)

    def subset(self, mask: int) -> frozenset[Hashable]:
        return frozenset(self.worlds.subset(mask))

    def diamond_mask(self, a: int) -> int:
        out = 0
        for i in bits(a):
            out |= self.succ[i]
        return out

    def box_mask(self, a: int) -> int:
        return sum(1 << w for w, s in enumerate(self.succ) if s & ~a == 0)

    def diamond(self, ws: Iterable[Hashable]) -> frozenset[Hashable]:
        """Worlds reachable in one step from ``ws``."""
        return self.subset(self.diamond_mask(self.mask(ws)))

    def box(self, ws: Iterable[Hashable]) -> frozenset[Hashable]:
        """Worlds all of whose successors lie in ``ws``."""
        return self.subset(self.box_mask(self.mask(ws)))

    def __repr__(self) -> str:
        return f"Frame({self.name!r}, {len(self.worlds)} worlds, {len(self.trans)} transitions)"


# ---------------------------------------------------------------------------
# CABAs with operators


@dataclass(frozen=True, eq=False)
class Cabao:
    """A CABA with a join-preserving diamond, given by its value on each atom.

    The box is the right adjoint: ``box(B)`` is the join of the atoms whose
    diamond lies below ``B``.
    """

    caba: Caba
    dia_atoms: tuple[int, ...]
    adjunction: LawCheck = LawCheck(True, "not checked")

    @classmethod
    def from_atom_relation(cls, caba: Caba, rel: FinRel) -> "Cabao":
        if tuple(rel.src.elements) != tuple(caba.atoms) or rel.src != rel.dst:
            raise CarrierMismatch("operator relation must run between the atoms of the algebra")
        return cls(caba, rel.succ)

    def diamond(self, x: int | CabaElement) -> Any:
        if isinstance(x, CabaElement):
            return CabaElement(self.caba, self.diamond(self.caba.element(x).mask))
        out = 0
        for i in bits(x):
            out |= self.dia_atoms[i]
        return out

    def box(self, x: int | CabaElement) -> Any:
        if isinstance(x, CabaElement):
            return CabaElement(self.caba, self.box(self.caba.element(x).mask))
        return sum(1 << i for i, d in enumerate(self.dia_atoms) if d & ~x == 0)

    @cached_property
    def diamond_table(self) -> np.ndarray:
        n = self.caba.size
        t = np.zeros(1 << n, dtype=np.intp)
        for a in range(1, 1 << n):
            low = (a & -a).bit_length() - 1
            t[a] = t[a & (a - 1)] | self.dia_atoms[low]
        t.flags.writeable = False
        return t

    @cached_property
    def box_table(self) -> np.ndarray:
        n = self.caba.size
        cols = np.arange(1 << n)
        t = np.zeros(1 << n, dtype=np.intp)
        for i, d in enumerate(self.dia_atoms):
            t |= ((d & ~cols) == 0).astype(np.intp) << i
        t.flags.writeable = False
        return t

    def check_adjunction(self, bound: int | None = None, seed: int = 0) -> LawCheck:
        """diamond(A) <= B iff A <= box(B), exhaustively when small enough."""
        n = self.caba.size
        bound = max_enum() if bound is None else bound
        if (1 << n) * (1 << n) <= bound:
            a = np.arange(1 << n)
            lhs = (self.diamond_table[:, None] & ~a[None, :]) == 0
            rhs = (a[:, None] & ~self.box_table[None, :]) == 0
            bad = np.argwhere(lhs != rhs)
            if len(bad):
                return LawCheck(False, tuple(int(v) for v in bad[0]))
            return LawCheck(True)
        rng = random.Random(seed)
        for _ in range(ADJUNCTION_SAMPLES):
            a, b = rng.getrandbits(n), rng.getrandbits(n)
            if (self.diamond(a) & ~b == 0) != (a & ~self.box(b) == 0):
                return LawCheck(False, (a, b))
        return LawCheck(True, "sampled")


def modal_operators(frame: Frame, bound: int | None = None) -> Cabao:
    caba = Caba.of_carrier(frame.worlds)
    op = Cabao(caba, frame.succ)
    return Cabao(caba, frame.succ, op.check_adjunction(bound))


# ---------------------------------------------------------------------------
# Frame maps


@dataclass(frozen=True)
class FrameMapReport:
    morphism: bool
    open: bool
    morphism_by_operators: bool | None
    open_by_operators: bool | None
    witnesses: Mapping[str, Any]

    @property
    def consistent(self) -> bool:
        return ((self.morphism_by_operators is None or self.morphism_by_operators == self.morphism)
                and (self.open_by_operators is None or self.open_by_operators == self.open))


def _check_function_frames(f: FiniteFunction, X: Frame, Y: Frame) -> None:
    if f.src != X.worlds or f.dst != Y.worlds:
        raise CarrierMismatch(f"function {f.src.name}->{f.dst.name} does not map {X.name} to {Y.name}")


def classify_frame_map(f: FiniteFunction, X: Frame, Y: Frame, bound: int | None = None) -> FrameMapReport:
    """Is ``f`` a frame morphism, and is it open?

    Each verdict is computed twice: from transitions directly, and from the
    box operators (``f* . box <= box . f*`` for morphisms, equality for open maps).
    """
    _check_function_frames(f, X, Y)
    fmap = f.index_map
    witnesses: dict[str, Any] = {}
    morphism = True
    for x1, x2 in X.trans.sorted_pairs():
        y1, y2 = f(x1), f(x2)
        if not Y.trans.holds(y1, y2):
            morphism = False
            witnesses["morphism"] = {"transition": [x1, x2], "image": [y1, y2]}
            break
    back = True
    for i, x in enumerate(X.worlds):
        reachable = f.image_mask(X.succ[i])
        missing = Y.succ[fmap[i]] & ~reachable
        if missing:
            back = False
            y_next = Y.worlds.elements[next(bits(missing))]
            witnesses["open"] = {"world": x, "image_transition": [f(x), y_next]}
            break
    is_open = morphism and back

    morphism_ops = open_ops = None
    bound = max_enum() if bound is None else bound
    if (1 << len(Y)) <= bound:
        morphism_ops = open_ops = True
        for b in range(1 << len(Y)):
            lhs = f.preimage_mask(Y.box_mask(b))
            rhs = X.box_mask(f.preimage_mask(b))
            if morphism_ops and lhs & ~rhs:
                morphism_ops = False
                witnesses["operator_inclusion"] = sorted(Y.subset(b), key=Y.worlds.index.get)
            if open_ops and lhs != rhs:
                open_ops = False
                witnesses["operator_equality"] = sorted(Y.subset(b), key=Y.worlds.index.get)
    return FrameMapReport(morphism, is_open, morphism_ops, open_ops, witnesses)


def graph(f: FiniteFunction) -> FinRel:
    return FinRel(f.src, f.dst, frozenset(zip(f.src.elements, f.targets)))


# ---------------------------------------------------------------------------
# Simulations


@dataclass(frozen=True)
class SimViolation:
    pair: tuple[Hashable, Hashable]
    side: str  # "forth" or "back"
    transition: tuple[Hashable, Hashable]


@dataclass(frozen=True)
class SimReport:
    is_simulation: bool
    is_cosimulation: bool
    counterexamples: tuple[SimViolation, ...]

    @property
    def is_bisimulation(self) -> bool:
        return self.is_simulation and self.is_cosimulation

    def as_dict(self) -> dict[str, Any]:
        return {
            "simulation": self.is_simulation,
            "cosimulation": self.is_cosimulation,
            "bisimulation": self.is_bisimulation,
            "counterexamples": [
                {"pair": list(v.pair), "side": v.side, "transition": list(v.transition)}
                for v in self.counterexamples
            ],
        }


def _check_rel_frames(q: FinRel, X: Frame, Y: Frame) -> None:
    if q.src != X.worlds or q.dst != Y.worlds:
        raise CarrierMismatch(f"relation {q.src.name}->{q.dst.name} does not run from {X.name} to {Y.name}")


def _violations(q_succ: list[int], q_pred: list[int], X: Frame, Y: Frame) -> tuple[list[tuple[int, int, int]], list[tuple[int, int, int]]]:
    forth, back = [], []
    for i, m in enumerate(q_succ):
        for j in bits(m):
            for i2 in bits(X.succ[i]):
                if not q_succ[i2] & Y.succ[j]:
                    forth.append((i, j, i2))
            for j2 in bits(Y.succ[j]):
                if not q_pred[j2] & X.succ[i]:
                    back.append((i, j, j2))
    return forth, back


def classify_sim(q: FinRel, X: Frame, Y: Frame) -> SimReport:
    """Exhaustive forth and back checks on every related pair."""
    _check_rel_frames(q, X, Y)
    forth, back = _violations(list(q.succ), list(q.pred), X, Y)
    xs, ys = X.worlds.elements, Y.worlds.elements
    cex = [SimViolation((xs[i], ys[j]), "forth", (xs[i], xs[i2])) for i, j, i2 in forth]
    cex += [SimViolation((xs[i], ys[j]), "back", (ys[j], ys[j2])) for i, j, j2 in back]
    return SimReport(not forth, not back, tuple(cex))


def greatest_fixpoint(kind: str, X: Frame, Y: Frame, within: FinRel | None = None) -> FinRel:
    """Largest simulation, cosimulation or bisimulation from X to Y contained in ``within``.

    Pairs violating the relevant conditions are removed until none remain;
    ``within`` defaults to the total relation.
    """
    if kind not in ("simulation", "cosimulation", "bisimulation"):
        raise ValueError(f"kind must be 'simulation', 'cosimulation' or 'bisimulation', not {kind!r}")
    if within is None:
        succ = [(1 << len(Y)) - 1] * len(X)
    else:
        _check_rel_frames(within, X, Y)
        succ = list(within.succ)
    while True:
        pred = [sum(1 << i for i in range(len(X)) if succ[i] >> j & 1) for j in range(len(Y))]
        forth, back = _violations(succ, pred, X, Y)
        bad = {(i, j) for i, j, _ in forth} if kind != "cosimulation" else set()
        if kind != "simulation":
            bad |= {(i, j) for i, j, _ in back}
        if not bad:
            return FinRel.from_masks(X.worlds, Y.worlds, succ)
        for i, j in bad:
            succ[i] &= ~(1 << j)


# ---------------------------------------------------------------------------
# Simulatory relations between CABAs with operators


@dataclass(frozen=True)
class SimulatoryReport:
    simulatory: bool
    cosimulatory: bool
    witnesses: Mapping[str, Any]

    @property
    def bisimulatory(self) -> bool:
        return self.simulatory and self.cosimulatory


def _implication(Q: np.ndarray, box_dst: np.ndarray, dia_src: np.ndarray) -> tuple[int, int] | None:
    # A Q box(B)  ==>  dia(A) Q B, for every A, B
    bad = Q[:, box_dst] & ~Q[dia_src, :]
    if bad.any():
        a, b = np.argwhere(bad)[0]
        return int(a), int(b)
    return None


def check_simulatory(q: CabaRel, src: Cabao, dst: Cabao, bound: int | None = None) -> SimulatoryReport:
    if q.src != src.caba or q.dst != dst.caba:
        raise CarrierMismatch("relation does not run between the given algebras")
    if q.kind != "lower":
        diag = check_directionally_atomic(q, bound)
        if not diag.ok:
            raise NotDirectionallyAtomic(f"{q!r} is not directionally atomic: {diag.as_dict()}")
    witnesses: dict[str, Any] = {}
    sim_bad = _implication(q.matrix(bound), dst.box_table, src.diamond_table)
    if sim_bad:
        a, b = sim_bad
        witnesses["simulatory"] = {"A": src.caba.label(a), "B": dst.caba.label(b)}
    v = variant(q)
    co_bad = _implication(v.matrix(bound), src.box_table, dst.diamond_table)
    if co_bad:
        b, a = co_bad
        witnesses["cosimulatory"] = {"B": dst.caba.label(b), "A": src.caba.label(a)}
    return SimulatoryReport(sim_bad is None, co_bad is None, witnesses)


@dataclass(frozen=True)
class EquivalenceReport:
    simulation: tuple[bool, bool, bool]
    cosimulation: tuple[bool, bool, bool]

    @property
    def agree(self) -> bool:
        return len(set(self.simulation)) == 1 and len(set(self.cosimulation)) == 1


def lemma_equivalence_harness(q: FinRel, X: Frame, Y: Frame, bound: int | None = None) -> EquivalenceReport:
    """Evaluate the three equivalent characterisations of (co)simulation independently.

    (i) the relational forth/back condition; (ii) the lifted relation is
    preserved by diamonds; (iii) relating into a box entails relating diamonds.
    The cosimulation side works on the variant of the lifted relation, computed
    from its definition on the materialised table.
    """
    _check_rel_frames(q, X, Y)
    sim_i = classify_sim(q, X, Y)
    ox, oy = modal_operators(X, bound), modal_operators(Y, bound)
    L = lower_lift(q).matrix(bound)
    dx, bx = ox.diamond_table, ox.box_table
    dy, by = oy.diamond_table, oy.box_table
    # (ii): A L B ==> dia A L dia B
    sim_ii = not (L & ~L[dx][:, dy]).any()
    sim_iii = not (L[:, by] & ~L[dx, :]).any()
    V = variant(lower_lift(q).materialise(bound)).matrix(bound)
    co_ii = not (V & ~V[dy][:, dx]).any()
    co_iii = not (V[:, bx] & ~V[dy, :]).any()
    return EquivalenceReport((sim_i.is_simulation, sim_ii, sim_iii), (sim_i.is_cosimulation, co_ii, co_iii))


# ---------------------------------------------------------------------------
# Exhaustive census of frame maps


@dataclass
class CensusReport:
    instances: int = 0
    morphisms: int = 0
    open_maps: int = 0
    disagreements: list[dict[str, Any]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.disagreements


def _all_frames_succ(n: int) -> np.ndarray:
    """Successor masks of every transition relation on ``n`` worlds, one row per code."""
    codes = np.arange(1 << (n * n), dtype=np.int64)
    return np.stack([(codes >> (w * n)) & ((1 << n) - 1) for w in range(n)], axis=1)


def frame_map_census(max_worlds: int = 3, report: CensusReport | None = None) -> CensusReport:
    """Check the morphism/openness biconditionals on every frame pair and every map.

    For all frames X, Y with 1..max_worlds worlds and every f: X -> Y, the
    transition-level verdicts are compared with the box-operator verdicts and
    with the (bi)simulation verdict for the graph of f, the latter computed
    with relation-algebra inclusions (Q^T;R <= S;Q^T and Q;S <= R;Q).  The
    codomain transition relation is swept in vectorised form.
    """
    rep = report or CensusReport()
    for nx, ny in product(range(1, max_worlds + 1), repeat=2):
        S_succ = _all_frames_succ(ny)                         # (NS, ny)
        S_mat = ((S_succ[:, :, None] >> np.arange(ny)) & 1).astype(np.uint8)  # (NS, ny, ny)
        boxes = np.zeros((1 << ny, len(S_succ)), dtype=np.int64)
        for b in range(1 << ny):
            ok = (S_succ & ~b) == 0
            boxes[b] = (ok.astype(np.int64) << np.arange(ny)).sum(axis=1)
        for r_code in range(1 << (nx * nx)):
            r_succ = [(r_code >> (w * nx)) & ((1 << nx) - 1) for w in range(nx)]
            R_mat = np.array([[(r_succ[i] >> k) & 1 for k in range(nx)] for i in range(nx)], dtype=np.uint8)
            r_pairs = [(i, k) for i in range(nx) for k in bits(r_succ[i])]
            for fmap in product(range(ny), repeat=nx):
                pre_tab = np.array([sum(1 << x for x in range(nx) if b >> fmap[x] & 1) for b in range(1 << ny)], dtype=np.int64)
                req = 0
                for i, k in r_pairs:
                    req |= 1 << (fmap[i] * ny + fmap[k])
                s_codes = np.arange(len(S_succ), dtype=np.int64)
                morph = (s_codes & req) == req
                back = np.ones(len(S_succ), dtype=bool)
                for x in range(nx):
                    reach = 0
                    for k in bits(r_succ[x]):
                        reach |= 1 << fmap[k]
                    back &= (S_succ[:, fmap[x]] & ~reach) == 0
                op_incl = np.ones(len(S_succ), dtype=bool)
                op_eq = np.ones(len(S_succ), dtype=bool)
                for b in range(1 << ny):
                    lhs = pre_tab[boxes[b]]
                    rhs = sum(1 << x for x in range(nx) if r_succ[x] & ~int(pre_tab[b]) == 0)
                    op_incl &= (lhs & ~rhs) == 0
                    op_eq &= lhs == rhs
                Q = np.zeros((nx, ny), dtype=np.uint8)
                Q[np.arange(nx), list(fmap)] = 1
                fwd = ((Q.T @ R_mat) > 0)[None] <= ((S_mat @ Q.T) > 0)
                bwd = ((Q @ S_mat) > 0) <= ((R_mat @ Q) > 0)[None]
                g_sim = fwd.all(axis=(1, 2))
                g_cosim = bwd.all(axis=(1, 2))
                is_open = morph & back
                rep.instances += len(S_succ)
                rep.morphisms += int(morph.sum())
                rep.open_maps += int(is_open.sum())
                mismatch = (morph != op_incl) | (is_open != op_eq) | (is_open != (g_sim & g_cosim)) | (morph != g_sim)
                if mismatch.any():
                    s = int(np.flatnonzero(mismatch)[0])
                    rep.disagreements.append({"src_worlds": nx, "dst_worlds": ny, "src_trans": r_code,
                                              "dst_trans": s, "map": list(fmap)})
    return rep
