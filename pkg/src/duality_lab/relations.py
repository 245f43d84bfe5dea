"""Relations between finite sets, and relations between CABAs.

A :class:`CabaRel` is stored in one of three ways: ``explicit`` (a boolean table
indexed by element masks), ``lower`` or ``upper`` (the lifting of a base
relation between the atom sets, evaluated on demand).  Directionally atomic
relations are kept in ``lower`` form wherever possible, since they are exactly
the lower liftings.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Any, Hashable, Iterable, Iterator

import numpy as np

from ._config import max_enum
from .errors import CarrierMismatch, EnumerationTooLarge, NotDirectionallyAtomic, TooLarge
from .lattice import Caba, CabaElement, Carrier, LawCheck, bits


@dataclass(frozen=True)
class FinRel:
    src: Carrier
    dst: Carrier
    pairs: frozenset[tuple[Hashable, Hashable]]

    def __post_init__(self) -> None:
        pairs = frozenset(self.pairs)
        for x, y in pairs:
            if x not in self.src:
                raise CarrierMismatch(f"{x!r} is not an element of {self.src.name}")
            if y not in self.dst:
                raise CarrierMismatch(f"{y!r} is not an element of {self.dst.name}")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def from_masks(cls, src: Carrier, dst: Carrier, succ: Iterable[int]) -> "FinRel":
        return cls(src, dst, frozenset(
            (src.elements[i], dst.elements[j]) for i, m in enumerate(succ) for j in bits(m)
        ))

    @cached_property
    def succ(self) -> tuple[int, ...]:
        """Successor mask (over ``dst``) of each source element."""
        out = [0] * len(self.src)
        for x, y in self.pairs:
            out[self.src.index[x]] |= 1 << self.dst.index[y]
        return tuple(out)

    @cached_property
    def pred(self) -> tuple[int, ...]:
        out = [0] * len(self.dst)
        for x, y in self.pairs:
            out[self.dst.index[y]] |= 1 << self.src.index[x]
        return tuple(out)

    def holds(self, x: Hashable, y: Hashable) -> bool:
        return (x, y) in self.pairs

    def sorted_pairs(self) -> list[tuple[Hashable, Hashable]]:
        si, di = self.src.index, self.dst.index
        return sorted(self.pairs, key=lambda p: (si[p[0]], di[p[1]]))

    def __len__(self) -> int:
        return len(self.pairs)

    def __le__(self, other: "FinRel") -> bool:
        return self.pairs <= other.pairs

    def __repr__(self) -> str:
        body = ", ".join(f"{x}->{y}" for x, y in self.sorted_pairs())
        return f"FinRel({self.src.name}->{self.dst.name}: {body})"


def compose(r: FinRel, s: FinRel) -> FinRel:
    """Diagrammatic composition ``r ; s``."""
    if r.dst != s.src:
        raise CarrierMismatch(f"cannot compose {r.src.name}->{r.dst.name} with {s.src.name}->{s.dst.name}")
    succ = []
    for m in r.succ:
        out = 0
        for j in bits(m):
            out |= s.succ[j]
        succ.append(out)
    return FinRel.from_masks(r.src, s.dst, succ)


def dagger(r: FinRel) -> FinRel:
    return FinRel(r.dst, r.src, frozenset((y, x) for x, y in r.pairs))


def identity(carrier: Carrier) -> FinRel:
    return FinRel(carrier, carrier, frozenset((x, x) for x in carrier))


def total(src: Carrier, dst: Carrier) -> FinRel:
    return FinRel(src, dst, frozenset((x, y) for x in src for y in dst))


def rel_algebra(op: str, *args: Any) -> FinRel:
    if op == "compose":
        return compose(*args)
    if op == "dagger":
        return dagger(*args)
    if op == "identity":
        return identity(*args)
    raise ValueError(f"unknown relation operation {op!r}")


# ---------------------------------------------------------------------------
# Relations between CABAs


def _check_bound(rows: int, cols: int, bound: int | None, exc: type[Exception] = EnumerationTooLarge) -> None:
    bound = max_enum() if bound is None else bound
    if rows * cols > bound:
        raise exc(f"{rows}x{cols} table exceeds the enumeration bound {bound}")


def lower_matrix(succ: tuple[int, ...], n_dst: int) -> np.ndarray:
    """``M[S, T]`` iff every element of ``S`` has a successor in ``T``."""
    cols = np.arange(1 << n_dst)
    hit = [(cols & s) != 0 for s in succ]
    M = np.empty((1 << len(succ), 1 << n_dst), dtype=bool)
    M[0] = True
    for A in range(1, 1 << len(succ)):
        low = (A & -A).bit_length() - 1
        M[A] = M[A & (A - 1)] & hit[low]
    return M


def upper_matrix(pred: tuple[int, ...], n_src: int) -> np.ndarray:
    """``M[S, T]`` iff every element of ``T`` has a predecessor in ``S``."""
    rows = np.arange(1 << n_src)
    hit = [(rows & p) != 0 for p in pred]
    M = np.empty((1 << n_src, 1 << len(pred)), dtype=bool)
    M[:, 0] = True
    for B in range(1, 1 << len(pred)):
        low = (B & -B).bit_length() - 1
        M[:, B] = M[:, B & (B - 1)] & hit[low]
    return M


@dataclass(frozen=True, eq=False)
class CabaRel:
    src: Caba
    dst: Caba
    kind: str
    base: FinRel | None = None
    table: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind in ("lower", "upper"):
            if self.base is None:
                raise ValueError("lifted relations need a base relation")
            if tuple(self.base.src.elements) != tuple(self.src.atoms) or tuple(self.base.dst.elements) != tuple(self.dst.atoms):
                raise CarrierMismatch("base relation does not run between the atom sets")
        elif self.kind == "explicit":
            t = np.asarray(self.table, dtype=bool)
            if t.shape != (1 << self.src.size, 1 << self.dst.size):
                raise ValueError(f"table shape {t.shape} does not match the algebras")
            t = t.copy()
            t.flags.writeable = False
            object.__setattr__(self, "table", t)
        else:
            raise ValueError(f"unknown relation kind {self.kind!r}")

    @classmethod
    def explicit(cls, src: Caba, dst: Caba, table: Any) -> "CabaRel":
        return cls(src, dst, "explicit", table=table)

    @classmethod
    def from_pairs(cls, src: Caba, dst: Caba, pairs: Iterable[tuple[Any, Any]]) -> "CabaRel":
        t = np.zeros((1 << src.size, 1 << dst.size), dtype=bool)
        for a, b in pairs:
            t[src.element(a).mask, dst.element(b).mask] = True
        return cls.explicit(src, dst, t)

    @classmethod
    def order(cls, caba: Caba) -> "CabaRel":
        """The algebra's order, the identity morphism between CABAs."""
        return cls.explicit(caba, caba, caba.leq_matrix())

    def _mask(self, owner: Caba, x: Any) -> int:
        if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
            return int(x)
        return owner.element(x).mask

    def holds(self, a: Any, b: Any) -> bool:
        s, t = self._mask(self.src, a), self._mask(self.dst, b)
        if self.kind == "explicit":
            return bool(self.table[s, t])
        if self.kind == "lower":
            succ = self.base.succ
            return all(succ[i] & t for i in bits(s))
        pred = self.base.pred
        return all(pred[j] & s for j in bits(t))

    def matrix(self, bound: int | None = None) -> np.ndarray:
        if self.kind == "explicit":
            return self.table
        _check_bound(1 << self.src.size, 1 << self.dst.size, bound)
        return self._lifted_matrix

    @cached_property
    def _lifted_matrix(self) -> np.ndarray:
        if self.kind == "lower":
            M = lower_matrix(self.base.succ, self.dst.size)
        else:
            M = upper_matrix(self.base.pred, self.src.size)
        M.flags.writeable = False
        return M

    def materialise(self, bound: int | None = None) -> "CabaRel":
        return CabaRel.explicit(self.src, self.dst, self.matrix(bound))

    def pairs(self, bound: int | None = None) -> Iterator[tuple[CabaElement, CabaElement]]:
        for s, t in np.argwhere(self.matrix(bound)):
            yield CabaElement(self.src, int(s)), CabaElement(self.dst, int(t))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CabaRel):
            return NotImplemented
        if self.src != other.src or self.dst != other.dst:
            return False
        if self.kind == other.kind and self.kind != "explicit":
            return self.base == other.base
        return bool(np.array_equal(self.matrix(), other.matrix()))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        extra = f" base={self.base!r}" if self.base is not None else ""
        return f"CabaRel({self.src.name}->{self.dst.name}, {self.kind}{extra})"


def lower_lift(r: FinRel, src: Caba | None = None, dst: Caba | None = None) -> CabaRel:
    """The lower relation: S relates to T when every s in S has an r-partner in T."""
    return CabaRel(src or Caba.of_carrier(r.src), dst or Caba.of_carrier(r.dst), "lower", base=r)


def upper_lift(r: FinRel, src: Caba | None = None, dst: Caba | None = None) -> CabaRel:
    """The upper relation: S relates to T when every t in T has an r-partner in S."""
    return CabaRel(src or Caba.of_carrier(r.src), dst or Caba.of_carrier(r.dst), "upper", base=r)


def lower_holds(r: FinRel, s: Iterable[Hashable], t: Iterable[Hashable]) -> bool:
    t_set = set(t)
    return all(any((x, y) in r.pairs for y in t_set) for x in s)


def upper_holds(r: FinRel, s: Iterable[Hashable], t: Iterable[Hashable]) -> bool:
    s_set = set(s)
    return all(any((x, y) in r.pairs for x in s_set) for y in t)


def compose_caba(q1: CabaRel, q2: CabaRel, bound: int | None = None) -> CabaRel:
    """Relational composition, quantifying over every middle element."""
    if q1.dst != q2.src:
        raise CarrierMismatch(f"cannot compose {q1.src.name}->{q1.dst.name} with {q2.src.name}->{q2.dst.name}")
    a = q1.matrix(bound).astype(np.uint16)
    b = q2.matrix(bound).astype(np.uint16)
    return CabaRel.explicit(q1.src, q2.dst, (a @ b) > 0)


def dagger_caba(q: CabaRel) -> CabaRel:
    return CabaRel.explicit(q.dst, q.src, q.matrix().T)


# ---------------------------------------------------------------------------
# Directional atomicity


@dataclass(frozen=True)
class DiagnosticReport:
    bimodule: LawCheck
    left_disjunctive: LawCheck
    atomic_founded: LawCheck

    @property
    def ok(self) -> bool:
        return self.bimodule.holds and self.left_disjunctive.holds and self.atomic_founded.holds

    def as_dict(self) -> dict[str, Any]:
        return {k: {"holds": c.holds, "witness": c.witness} for k, c in
                (("bimodule", self.bimodule), ("left_disjunctive", self.left_disjunctive),
                 ("atomic_founded", self.atomic_founded))}


class _OrderCache:
    # leq matrices per algebra; algebras are immutable so this is safe to share
    _cache: dict[Caba, tuple[np.ndarray, np.ndarray]] = {}

    @classmethod
    def get(cls, caba: Caba) -> tuple[np.ndarray, np.ndarray]:
        hit = cls._cache.get(caba)
        if hit is None:
            L = caba.leq_matrix()
            m = np.arange(1 << caba.size)
            hit = (L.astype(np.uint16), m[:, None] | m[None, :])
            if len(cls._cache) > 256:
                cls._cache.clear()
            cls._cache[caba] = hit
        return hit


def check_directionally_atomic(q: CabaRel, bound: int | None = None) -> DiagnosticReport:
    """Exhaustively check bimodularity, left-disjunctivity and atomic-foundedness.

    Left-disjunctivity is checked on binary joins and on the empty join, which
    for finite algebras covers every family.  Joins are taken as unions of atom
    sets, valid once the algebras have been validated.
    """
    n, m = q.src.size, q.dst.size
    _check_bound(1 << n, 1 << m, bound, TooLarge)
    Q = q.matrix(bound)
    Ls, join_s = _OrderCache.get(q.src)
    Ld, _ = _OrderCache.get(q.dst)
    label_s, label_d = q.src.label, q.dst.label

    closure = (Ls @ Q.astype(np.uint16) @ Ld) > 0
    bad = closure & ~Q
    if bad.any():
        p2, q2 = (int(v) for v in np.argwhere(bad)[0])
        # recover the quadruple p2 <= p Q q <= q2
        Lsb, Ldb = Ls.astype(bool), Ld.astype(bool)
        for p, qq in np.argwhere(Q):
            if Lsb[p2, p] and Ldb[qq, q2]:
                break
        bimodule = LawCheck(False, (label_s(p2), label_s(int(p)), label_d(int(qq)), label_d(q2)))
    else:
        bimodule = LawCheck(True)

    missing_bot = np.flatnonzero(~Q[0])
    if len(missing_bot):
        left = LawCheck(False, ("empty join", label_s(0), label_d(int(missing_bot[0]))))
    else:
        # viol[a1, a2, b]: a1 Q b and a2 Q b but not (a1 v a2) Q b
        viol = Q[:, None, :] & Q[None, :, :] & ~Q[join_s]
        if viol.any():
            a1, a2, b = (int(v) for v in np.argwhere(viol)[0])
            left = LawCheck(False, ("binary join", label_s(a1), label_s(a2), label_d(b)))
        else:
            left = LawCheck(True)

    founded = LawCheck(True)
    atom_cols = np.array([1 << j for j in range(m)], dtype=np.intp)
    cols = np.arange(1 << m)
    for i in range(n):
        a = 1 << i
        related_atoms = 0
        for j in np.flatnonzero(Q[a, atom_cols]):
            related_atoms |= 1 << int(j)
        bad_b = np.flatnonzero(Q[a] & ((cols & related_atoms) == 0))
        if len(bad_b):
            founded = LawCheck(False, (label_s(a), label_d(int(bad_b[0]))))
            break
    return DiagnosticReport(bimodule, left, founded)


def is_directionally_atomic(q: CabaRel) -> bool:
    # lower liftings are directionally atomic by construction
    return q.kind == "lower" or check_directionally_atomic(q).ok


def atom_base(q: CabaRel) -> FinRel:
    """Restrict ``q`` to atoms: x is related to y iff {x} q {y}."""
    if q.kind == "lower":
        src, dst = q.base.src, q.base.dst
    else:
        src, dst = q.src.atom_carrier(), q.dst.atom_carrier()
    succ = [sum(1 << j for j in range(q.dst.size) if q.holds(1 << i, 1 << j)) for i in range(q.src.size)]
    return FinRel.from_masks(src, dst, succ)


def variant(q: CabaRel) -> CabaRel:
    """The variant relation, running from ``q.dst`` back to ``q.src``.

    ``b' ~ b`` holds when every atom below ``b'`` is reached (under ``q``) from
    some atom below ``b``.
    """
    if q.kind == "lower":
        return CabaRel(q.dst, q.src, "lower", base=dagger(q.base))
    if not check_directionally_atomic(q).ok:
        raise NotDirectionallyAtomic(f"{q!r} is not directionally atomic")
    n, m = q.src.size, q.dst.size
    # reach[j]: atoms of the source related to atom j of the target
    reach = [sum(1 << i for i in range(n) if q.holds(1 << i, 1 << j)) for j in range(m)]
    T = np.empty((1 << m, 1 << n), dtype=bool)
    for b2 in range(1 << m):
        for b in range(1 << n):
            T[b2, b] = all(reach[j] & b for j in bits(b2))
    return CabaRel.explicit(q.dst, q.src, T)
