"""Round-trip checks between relations on sets and relations on their powerset algebras."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Any, Callable, Hashable, Iterable, Sequence

import numpy as np

from ._config import max_enum
from .errors import EnumerationTooLarge, NotACaba, NotOpenMap
from .lattice import Caba, Carrier, FiniteFunction, LawCheck, adjoint_triple, validate_caba
from .modal import Cabao, Frame, check_simulatory, classify_frame_map, classify_sim, graph, modal_operators
from .relations import (
    CabaRel,
    FinRel,
    atom_base,
    check_directionally_atomic,
    compose,
    compose_caba,
    dagger,
    identity,
    lower_lift,
    lower_matrix,
    variant,
)

__all__ = [
    "LawReport",
    "PairResult",
    "FullFaithfulReport",
    "SurjectivityWitness",
    "SquareReport",
    "verify_identity_law",
    "verify_functor_laws",
    "verify_full_faithful",
    "directionally_atomic_census",
    "surjectivity_witness",
    "j_embed",
    "graph",
    "verify_square_tarski",
    "verify_square_thomason",
]


def _first_difference(a: np.ndarray, b: np.ndarray) -> tuple[int, int] | None:
    diff = a != b
    if diff.any():
        s, t = np.argwhere(diff)[0]
        return int(s), int(t)
    return None


# ---------------------------------------------------------------------------
# The lower lifting as a functor


def verify_identity_law(carrier: Carrier) -> LawCheck:
    """The lift of the identity is the subset order of the powerset."""
    P = Caba.of_carrier(carrier)
    lifted = lower_lift(identity(carrier)).matrix()
    d = _first_difference(lifted, P.subset_matrix())
    if d is None:
        return LawCheck(True)
    return LawCheck(False, (P.label(d[0]), P.label(d[1])))


@dataclass(frozen=True)
class PairResult:
    index: int
    ok: bool
    witness: dict[str, Any] | None = None


@dataclass(frozen=True)
class LawReport:
    results: tuple[PairResult, ...]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    @property
    def failures(self) -> list[PairResult]:
        return [r for r in self.results if not r.ok]


def verify_functor_laws(
    sample: Iterable[tuple[FinRel, FinRel]],
    base_compose: Callable[[FinRel, FinRel], FinRel] = compose,
) -> LawReport:
    """Check that lifting the composite equals composing the lifts, per pair.

    ``base_compose`` is the composition used on the set side; passing a faulty
    one is how the check is shown to catch errors.
    """
    results = []
    for k, (r, s) in enumerate(sample):
        lr, ls = lower_lift(r), lower_lift(s)
        lifted = lower_lift(base_compose(r, s), lr.src, ls.dst).matrix()
        composed = compose_caba(lr, ls).matrix()
        d = _first_difference(lifted, composed)
        if d is None:
            results.append(PairResult(k, True))
        else:
            S, T = d
            results.append(PairResult(k, False, {
                "S": lr.src.label(S), "T": ls.dst.label(T),
                "lift_of_composite": bool(lifted[S, T]), "composite_of_lifts": bool(composed[S, T]),
            }))
    return LawReport(tuple(results))


# ---------------------------------------------------------------------------
# Full and faithful


def _relations_between(X: Carrier, Y: Carrier) -> Iterable[FinRel]:
    n, m = len(X), len(Y)
    full = (1 << m) - 1
    for code in range(1 << (n * m)):
        yield FinRel.from_masks(X, Y, [(code >> (i * m)) & full for i in range(n)])


@dataclass(frozen=True)
class CensusResult:
    candidates: int
    found: int
    expected: int
    lifts_match: LawCheck

    @property
    def ok(self) -> bool:
        return self.found == self.expected and self.lifts_match.holds


def _da_mask(Q: np.ndarray, n: int, m: int) -> np.ndarray:
    """Vectorised directional-atomicity test over a stack of candidate tables ``Q[k, S, T]``."""
    rows, cols = 1 << n, 1 << m
    ok = np.ones(Q.shape[0], dtype=bool)
    # bimodule: S2 <= S, S Q T, T <= T2  ==>  S2 Q T2
    for S2, T2 in product(range(rows), range(cols)):
        supers = [S for S in range(rows) if S2 & ~S == 0]
        subs = [T for T in range(cols) if T & ~T2 == 0]
        needed = Q[:, supers][:, :, subs].any(axis=(1, 2))
        ok &= ~needed | Q[:, S2, T2]
    # left-disjunctive: bottom related to everything, binary joins preserved
    ok &= Q[:, 0, :].all(axis=1)
    for S1, S2 in product(range(rows), repeat=2):
        ok &= ~(Q[:, S1, :] & Q[:, S2, :] & ~Q[:, S1 | S2, :]).any(axis=1)
    # atomic-founded
    for i in range(n):
        a = 1 << i
        for T in range(1, cols):
            below = [1 << j for j in range(m) if T >> j & 1]
            ok &= ~Q[:, a, T] | Q[:, a, below].any(axis=1)
        ok &= ~Q[:, a, 0]
    return ok


def directionally_atomic_census(n: int, m: int, bound: int | None = None) -> CensusResult:
    """Brute-force every relation between ``P(X)`` and ``P(Y)`` with ``|X| = n``, ``|Y| = m``.

    Counts the directionally atomic ones and checks each is the lift of its atom base.
    """
    rows, cols = 1 << n, 1 << m
    cells = rows * cols
    bound = max_enum() if bound is None else bound
    if (1 << cells) > bound:
        raise EnumerationTooLarge(f"census over 2^{cells} candidate relations exceeds the bound {bound}")
    codes = np.arange(1 << cells, dtype=np.int64)
    Q = ((codes[:, None] >> np.arange(cells)) & 1).astype(bool).reshape(-1, rows, cols)
    found = np.flatnonzero(_da_mask(Q, n, m))
    X = Carrier("X", tuple(f"x{i}" for i in range(n)))
    Y = Carrier("Y", tuple(f"y{j}" for j in range(m)))
    PX, PY = Caba.of_carrier(X), Caba.of_carrier(Y)
    match = LawCheck(True)
    for k in found:
        table = Q[k]
        base = atom_base(CabaRel.explicit(PX, PY, table))
        if not np.array_equal(lower_matrix(base.succ, m), table):
            match = LawCheck(False, int(k))
            break
    return CensusResult(1 << cells, len(found), 1 << (n * m), match)


@dataclass(frozen=True)
class FullFaithfulReport:
    relations: int
    injective: LawCheck
    round_trip: LawCheck
    census: CensusResult | None

    @property
    def ok(self) -> bool:
        census_ok = self.census is None or self.census.ok
        return self.injective.holds and self.round_trip.holds and census_ok


def verify_full_faithful(n: int, m: int, census_limit: int = 2) -> FullFaithfulReport:
    """Lifting is injective on all relations ``X -> Y`` and recovered by its atom base.

    The brute-force census of directionally atomic relations runs only when both
    sizes are at most ``census_limit``.
    """
    X = Carrier("X", tuple(f"x{i}" for i in range(n)))
    Y = Carrier("Y", tuple(f"y{j}" for j in range(m)))
    seen: dict[bytes, FinRel] = {}
    injective = round_trip = LawCheck(True)
    count = 0
    for r in _relations_between(X, Y):
        count += 1
        lifted = lower_lift(r)
        key = np.packbits(lifted.matrix()).tobytes()
        if key in seen and injective.holds:
            injective = LawCheck(False, (seen[key].sorted_pairs(), r.sorted_pairs()))
        seen.setdefault(key, r)
        if round_trip.holds and atom_base(lifted.materialise()) != r:
            round_trip = LawCheck(False, r.sorted_pairs())
    census = directionally_atomic_census(n, m) if max(n, m) <= census_limit else None
    return FullFaithfulReport(count, injective, round_trip, census)


# ---------------------------------------------------------------------------
# Every algebra is isomorphic to a powerset


@dataclass(frozen=True)
class SurjectivityWitness:
    caba: Caba
    powerset: Caba
    r: CabaRel
    r_inv: CabaRel
    checks: dict[str, LawCheck] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks.values())


def _declared_join(caba: Caba) -> list[int]:
    """For each atom subset (by mask), the declared join's mask, found from the declared order only."""
    names = caba.element_names
    leq = {(a, b) for a, b in caba.leq_pairs}
    atoms = caba.atoms
    out = []
    for X in range(1 << caba.size):
        members = [atoms[i] for i in range(caba.size) if X >> i & 1]
        uppers = [e for e in names if all((a, e) in leq for a in members)]
        least = [e for e in uppers if all((e, u) in leq for u in uppers)]
        out.append(caba.element(least[0]).mask)
    return out


def surjectivity_witness(caba: Caba, operator: Cabao | None = None) -> SurjectivityWitness:
    """Relate ``caba`` to the powerset of its atoms in both directions and check the round trip.

    ``x r X`` holds when ``x`` is below the join of ``X``; ``X r_inv x`` when the
    join of ``X`` is below ``x``.  Orders and joins come from the declared order
    table.  With ``operator`` (a diamond on ``caba``) the powerset receives the
    operator generated by the same atom relation and both relations are also
    checked to be simulatory and cosimulatory.
    """
    report = validate_caba(caba)
    if not report.ok:
        raise NotACaba(f"{caba.name} is not a CABA: {report.failures()}")
    P = Caba.powerset(caba.atoms, name=f"P(At({caba.name}))")
    size = 1 << caba.size
    if caba.kind == "named":
        join = _declared_join(caba)
    else:
        join = list(range(size))
    order = caba.leq_matrix()
    # r[x, X] iff x <= join(X); r_inv[X, x] iff join(X) <= x
    r_table = order[:, join]
    r_inv_table = order[join, :]
    r = CabaRel.explicit(caba, P, r_table)
    r_inv = CabaRel.explicit(P, caba, r_inv_table)

    checks: dict[str, LawCheck] = {}
    for name, rel in (("r", r), ("r_inv", r_inv)):
        diag = check_directionally_atomic(rel)
        checks[f"{name}_directionally_atomic"] = LawCheck(diag.ok, None if diag.ok else diag.as_dict())
    there = compose_caba(r, r_inv).matrix()
    back = compose_caba(r_inv, r).matrix()
    d1 = _first_difference(there, order)
    d2 = _first_difference(back, P.subset_matrix())
    checks["r_then_r_inv_is_order"] = LawCheck(d1 is None, d1 and (caba.label(d1[0]), caba.label(d1[1])))
    checks["r_inv_then_r_is_subset"] = LawCheck(d2 is None, d2 and (P.label(d2[0]), P.label(d2[1])))
    if checks["r_directionally_atomic"].holds:
        checks["variant_of_r_is_r_inv"] = LawCheck(variant(r) == r_inv)
    if operator is not None:
        base = FinRel(P.atom_carrier(), P.atom_carrier(), frozenset(
            (caba.atoms[i], caba.atoms[j])
            for i in range(caba.size) for j in range(caba.size)
            if operator.diamond(1 << i) >> j & 1))
        P_op = Cabao.from_atom_relation(P, base)
        for name, rel, src, dst in (("r", r, operator, P_op), ("r_inv", r_inv, P_op, operator)):
            rep = check_simulatory(rel, src, dst)
            checks[f"{name}_bisimulatory"] = LawCheck(rep.bisimulatory, dict(rep.witnesses) or None)
    return SurjectivityWitness(caba, P, r, r_inv, checks)


# ---------------------------------------------------------------------------
# Embedding functions and the commuting squares


def j_embed(f: FiniteFunction) -> CabaRel:
    """The relation ``P(dst) -> P(src)`` relating ``B`` to ``A`` when ``B`` lies inside the image of ``A``."""
    image = adjoint_triple(f).image.table
    PX, PY = Caba.of_carrier(f.src), Caba.of_carrier(f.dst)
    B = np.arange(1 << len(f.dst))
    img = np.asarray(image, dtype=np.int64)
    table = (B[:, None] & ~img[None, :]) == 0
    return CabaRel.explicit(PY, PX, table)


@dataclass(frozen=True)
class SquareReport:
    ok: bool
    witness: dict[str, Any] | None = None
    checks: dict[str, bool] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok


def _square(f: FiniteFunction, g: FinRel) -> SquareReport:
    via_lift = lower_lift(dagger(g)).matrix()
    via_j = j_embed(f).matrix()
    d = _first_difference(via_lift, via_j)
    if d is None:
        return SquareReport(True)
    PY, PX = Caba.of_carrier(f.dst), Caba.of_carrier(f.src)
    return SquareReport(False, {
        "B": PY.label(d[0]), "A": PX.label(d[1]),
        "lift_of_converse_graph": bool(via_lift[d]), "j_of_preimage": bool(via_j[d]),
    })


def verify_square_tarski(f: FiniteFunction, graph_of: Callable[[FiniteFunction], FinRel] = graph) -> SquareReport:
    """Lifting the converse of the graph of ``f`` agrees with embedding ``f`` directly.

    ``graph_of`` can be swapped for a faulty graph construction to show the
    comparison detects it.
    """
    return _square(f, graph_of(f))


def verify_square_thomason(f: FiniteFunction, X: Frame, Y: Frame) -> SquareReport:
    """The square for an open map, plus bisimulation of its graph on both sides."""
    frame_report = classify_frame_map(f, X, Y)
    if not frame_report.open:
        raise NotOpenMap(f"{f.src.name} -> {f.dst.name} is not an open map: {frame_report.witnesses}")
    base = _square(f, graph(f))
    g = graph(f)
    sim = classify_sim(g, X, Y)
    ox, oy = modal_operators(X), modal_operators(Y)
    j_rep = check_simulatory(j_embed(f), oy, ox)
    checks = {
        "square": base.ok,
        "graph_bisimulation": sim.is_bisimulation,
        "j_bisimulatory": j_rep.bisimulatory,
    }
    witness = base.witness
    if not sim.is_bisimulation:
        witness = {"graph": sim.as_dict()}
    elif not j_rep.bisimulatory:
        witness = {"j": dict(j_rep.witnesses)}
    return SquareReport(all(checks.values()), witness, checks)


def all_functions(X: Carrier, Y: Carrier) -> Iterable[FiniteFunction]:
    for targets in product(Y.elements, repeat=len(X)):
        yield FiniteFunction(X, Y, targets)


def random_relation(rng: Any, X: Carrier, Y: Carrier, density: float | None = None) -> FinRel:
    p = rng.random() if density is None else density
    return FinRel(X, Y, frozenset((x, y) for x in X for y in Y if rng.random() < p))


def carrier(name: str, n: int) -> Carrier:
    return Carrier(name, tuple(f"{name.lower()}{i}" for i in range(n)))


def mutated_graph(f: FiniteFunction) -> FinRel:
    """The graph of ``f`` with its first pair redirected to a different target (if any)."""
    pairs = sorted(graph(f).pairs, key=lambda p: (f.src.index[p[0]], f.dst.index[p[1]]))
    if not pairs or len(f.dst) < 2:
        return FinRel(f.src, f.dst, frozenset(pairs[1:]))
    x, y = pairs[0]
    other = next(v for v in f.dst if v != y)
    return FinRel(f.src, f.dst, frozenset([(x, other), *pairs[1:]]))

