"""Finite complete atomic Boolean algebras and the adjoint triple of a function.

Every element of a CABA is identified with the set of atoms below it, stored
as a bit mask over the atom list (bit ``i`` is the ``i``-th atom in declaration
order).  Powerset algebras are given by their atom list; named algebras carry an
explicit element list and order table and are validated by brute force.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Any, Hashable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from ._config import max_enum
from .errors import MixedOwnership, NotACaba

# Above this many elements, completeness is checked on binary and empty
# joins/meets instead of on every subset.
EXHAUSTIVE_SUBSET_LIMIT = 12


def bits(mask: int) -> Iterator[int]:
    """Indices of the set bits of ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def popcount(mask: int) -> int:
    return bin(mask).count("1")


@dataclass(frozen=True)
class Carrier:
    """A named finite set with a fixed element order."""

    name: str
    elements: tuple[Hashable, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "elements", tuple(self.elements))
        if len(set(self.elements)) != len(self.elements):
            raise ValueError(f"carrier {self.name!r} has duplicate elements")

    @cached_property
    def index(self) -> dict[Hashable, int]:
        return {x: i for i, x in enumerate(self.elements)}

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Hashable]:
        return iter(self.elements)

    def __contains__(self, x: object) -> bool:
        return x in self.index

    @property
    def full_mask(self) -> int:
        return (1 << len(self.elements)) - 1

    def mask(self, items: Iterable[Hashable]) -> int:
        m = 0
        for x in items:
            try:
                m |= 1 << self.index[x]
            except KeyError:
                raise KeyError(f"{x!r} is not an element of {self.name}") from None
        return m

    def subset(self, mask: int) -> tuple[Hashable, ...]:
        return tuple(self.elements[i] for i in bits(mask))


def format_subset(items: Iterable[Any]) -> str:
    return "{" + ",".join(str(x) for x in items) + "}"


# ---------------------------------------------------------------------------
# Generic finite posets, used to validate named algebras


@dataclass(frozen=True)
class LawCheck:
    holds: bool
    witness: Any = None


@dataclass(frozen=True)
class ValidationReport:
    caba: str
    checks: Mapping[str, LawCheck]
    atoms: tuple[Hashable, ...]

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks.values())

    def failures(self) -> dict[str, Any]:
        return {k: c.witness for k, c in self.checks.items() if not c.holds}


class _Poset:
    def __init__(self, names: Sequence[Hashable], leq: np.ndarray) -> None:
        self.names = list(names)
        self.leq = leq
        self.k = len(names)

    def least(self, candidates: np.ndarray) -> int | None:
        idx = np.flatnonzero(candidates)
        for c in idx:
            if self.leq[c, idx].all():
                return int(c)
        return None

    def greatest(self, candidates: np.ndarray) -> int | None:
        idx = np.flatnonzero(candidates)
        for c in idx:
            if self.leq[idx, c].all():
                return int(c)
        return None

    def lub(self, members: Iterable[int]) -> int | None:
        ub = np.ones(self.k, dtype=bool)
        for m in members:
            ub &= self.leq[m]
        return self.least(ub)

    def glb(self, members: Iterable[int]) -> int | None:
        lb = np.ones(self.k, dtype=bool)
        for m in members:
            lb &= self.leq[:, m]
        return self.greatest(lb)


def _check_partial_order(p: _Poset) -> LawCheck:
    L = p.leq
    for i in range(p.k):
        if not L[i, i]:
            return LawCheck(False, ("not reflexive", p.names[i]))
    both = L & L.T
    np.fill_diagonal(both, False)
    if both.any():
        i, j = np.argwhere(both)[0]
        return LawCheck(False, ("not antisymmetric", p.names[i], p.names[j]))
    trans = (L.astype(np.uint8) @ L.astype(np.uint8)) > 0
    bad = trans & ~L
    if bad.any():
        i, j = np.argwhere(bad)[0]
        return LawCheck(False, ("not transitive", p.names[i], p.names[j]))
    return LawCheck(True)


def _check_completeness(p: _Poset) -> LawCheck:
    if p.k == 0:
        return LawCheck(False, ("empty order has no bottom",))
    if p.k <= EXHAUSTIVE_SUBSET_LIMIT:
        ub = np.ones((1 << p.k, p.k), dtype=bool)
        lb = np.ones((1 << p.k, p.k), dtype=bool)
        for s in range(1, 1 << p.k):
            low = (s & -s).bit_length() - 1
            ub[s] = ub[s & (s - 1)] & p.leq[low]
            lb[s] = lb[s & (s - 1)] & p.leq[:, low]
        for s in range(1 << p.k):
            if p.least(ub[s]) is None:
                return LawCheck(False, ("no join", tuple(p.names[i] for i in bits(s))))
            if p.greatest(lb[s]) is None:
                return LawCheck(False, ("no meet", tuple(p.names[i] for i in bits(s))))
        return LawCheck(True)
    if p.lub(()) is None:
        return LawCheck(False, ("no join", ()))
    if p.glb(()) is None:
        return LawCheck(False, ("no meet", ()))
    for i, j in combinations(range(p.k), 2):
        if p.lub((i, j)) is None:
            return LawCheck(False, ("no join", (p.names[i], p.names[j])))
        if p.glb((i, j)) is None:
            return LawCheck(False, ("no meet", (p.names[i], p.names[j])))
    return LawCheck(True)


def _lattice_tables(p: _Poset) -> tuple[np.ndarray, np.ndarray]:
    join = np.empty((p.k, p.k), dtype=np.intp)
    meet = np.empty((p.k, p.k), dtype=np.intp)
    for i in range(p.k):
        for j in range(i, p.k):
            join[i, j] = join[j, i] = p.lub((i, j))
            meet[i, j] = meet[j, i] = p.glb((i, j))
    return join, meet


def _analyse(names: Sequence[Hashable], leq: np.ndarray) -> tuple[dict[str, LawCheck], tuple[int, ...]]:
    p = _Poset(names, leq)
    checks: dict[str, LawCheck] = {}
    skipped = LawCheck(False, ("not evaluated: earlier law failed",))
    checks["partial_order"] = _check_partial_order(p)
    if not checks["partial_order"].holds:
        for law in ("completeness", "distributivity", "complements", "atomicity"):
            checks[law] = skipped
        return checks, ()
    checks["completeness"] = _check_completeness(p)
    if not checks["completeness"].holds:
        for law in ("distributivity", "complements", "atomicity"):
            checks[law] = skipped
        return checks, ()
    join, meet = _lattice_tables(p)
    bot = p.lub(())
    top = p.glb(())
    # lhs[x, y, z] = x /\ (y \/ z)
    lhs = meet[np.arange(p.k)[:, None, None], join[None, :, :]]
    rhs = join[meet[:, :, None], meet[:, None, :]]
    bad = np.argwhere(lhs != rhs)
    if len(bad):
        x, y, z = bad[0]
        checks["distributivity"] = LawCheck(False, (p.names[x], p.names[y], p.names[z]))
    else:
        checks["distributivity"] = LawCheck(True)
    comp = (join == top) & (meet == bot)
    lonely = np.flatnonzero(~comp.any(axis=1))
    if len(lonely):
        checks["complements"] = LawCheck(False, ("no complement", p.names[lonely[0]]))
    else:
        checks["complements"] = LawCheck(True)
    atoms = tuple(
        a for a in range(p.k)
        if a != bot and all(x == bot or x == a for x in np.flatnonzero(leq[:, a]))
    )
    checks["atomicity"] = LawCheck(True)
    for x in range(p.k):
        if p.lub(a for a in atoms if leq[a, x]) != x:
            checks["atomicity"] = LawCheck(False, ("not the join of its atoms", p.names[x]))
            break
    return checks, atoms


# ---------------------------------------------------------------------------
# Algebras and their elements


@dataclass(frozen=True)
class Caba:
    """A finite CABA: either a full powerset or an explicitly named lattice.

    For ``kind == "named"`` the order pairs ``(x, y)`` mean ``x <= y`` and must
    already be reflexive and transitive; :func:`validate_caba` reports whether the
    declared structure is really a CABA.
    """

    name: str
    kind: str
    atom_list: tuple[Hashable, ...] = ()
    element_names: tuple[Hashable, ...] = ()
    leq_pairs: frozenset[tuple[Hashable, Hashable]] = field(default_factory=frozenset)
    carrier_name: str = ""

    @classmethod
    def powerset(cls, atoms: Iterable[Hashable], name: str | None = None) -> "Caba":
        atoms = tuple(atoms)
        if len(set(atoms)) != len(atoms):
            raise ValueError("duplicate atom names")
        return cls(name or "P" + format_subset(atoms), "powerset", atom_list=atoms)

    @classmethod
    def of_carrier(cls, carrier: Carrier) -> "Caba":
        return cls(f"P({carrier.name})", "powerset", atom_list=carrier.elements, carrier_name=carrier.name)

    @classmethod
    def named(cls, name: str, elements: Iterable[Hashable], leq: Iterable[tuple[Hashable, Hashable]]) -> "Caba":
        elements = tuple(elements)
        if len(set(elements)) != len(elements):
            raise ValueError("duplicate element names")
        pairs = frozenset((a, b) for a, b in leq)
        known = set(elements)
        for a, b in pairs:
            if a not in known or b not in known:
                raise ValueError(f"order pair ({a!r}, {b!r}) mentions an undeclared element")
        return cls(name, "named", element_names=elements, leq_pairs=pairs)

    # -- structure -----------------------------------------------------------

    @cached_property
    def _named_analysis(self) -> tuple[dict[str, LawCheck], tuple[int, ...]]:
        idx = {e: i for i, e in enumerate(self.element_names)}
        L = np.zeros((len(idx), len(idx)), dtype=bool)
        for a, b in self.leq_pairs:
            L[idx[a], idx[b]] = True
        self.__dict__["_declared_leq"] = L
        return _analyse(self.element_names, L)

    @cached_property
    def report(self) -> ValidationReport:
        if self.kind == "powerset":
            names = [self.label(m) for m in range(1 << self.size)]
            L = self.subset_matrix()
            checks, atom_idx = _analyse(names, L)
            # element index == mask, so an atom's index is a power of two
            atoms = tuple(self.atom_list[a.bit_length() - 1] for a in atom_idx)
            return ValidationReport(self.name, checks, atoms)
        checks, atom_idx = self._named_analysis
        return ValidationReport(self.name, checks, tuple(self.element_names[a] for a in atom_idx))

    @cached_property
    def atoms(self) -> tuple[Hashable, ...]:
        if self.kind == "powerset":
            return self.atom_list
        self._require_valid()
        return self.report.atoms

    @property
    def size(self) -> int:
        """Number of atoms."""
        return len(self.atoms)

    @property
    def top_mask(self) -> int:
        return (1 << self.size) - 1

    def _require_valid(self) -> None:
        if self.kind == "named" and not self.report.ok:
            raise NotACaba(f"{self.name} is not a CABA: {self.report.failures()}")

    @cached_property
    def _decomposition(self) -> tuple[dict[Hashable, int], dict[int, Hashable]]:
        self._require_valid()
        L = self.__dict__["_declared_leq"]
        idx = {e: i for i, e in enumerate(self.element_names)}
        atom_pos = {a: k for k, a in enumerate(self.atoms)}
        to_mask = {}
        for e in self.element_names:
            to_mask[e] = sum(1 << atom_pos[a] for a in self.atoms if L[idx[a], idx[e]])
        return to_mask, {m: e for e, m in to_mask.items()}

    @property
    def atom_decomposition(self) -> dict[Hashable, frozenset[Hashable]]:
        to_mask, _ = self._decomposition
        return {e: frozenset(self.atoms[i] for i in bits(m)) for e, m in to_mask.items()}

    def atom_carrier(self) -> Carrier:
        return Carrier(self.carrier_name or f"At({self.name})", self.atoms)

    def masks(self) -> range:
        return range(1 << self.size)

    def label(self, mask: int) -> str:
        if self.kind == "named":
            return str(self._decomposition[1][mask])
        return format_subset(self.atom_list[i] for i in bits(mask))

    def element(self, spec: Any) -> "CabaElement":
        """Look up an element by name (named algebras), atom iterable (powersets) or mask."""
        if isinstance(spec, CabaElement):
            if spec.owner != self:
                raise MixedOwnership(f"element of {spec.owner.name} used in {self.name}")
            return spec
        if isinstance(spec, (int, np.integer)) and not isinstance(spec, bool):
            mask = int(spec)
            if mask < 0 or mask > self.top_mask:
                raise ValueError(f"mask {mask} out of range for {self.name}")
            return CabaElement(self, mask)
        if self.kind == "named":
            try:
                return CabaElement(self, self._decomposition[0][spec])
            except KeyError:
                raise KeyError(f"{spec!r} is not an element of {self.name}") from None
        pos = {a: i for i, a in enumerate(self.atom_list)}
        mask = 0
        for a in spec:
            if a not in pos:
                raise KeyError(f"{a!r} is not an atom of {self.name}")
            mask |= 1 << pos[a]
        return CabaElement(self, mask)

    def elements(self) -> list["CabaElement"]:
        return [CabaElement(self, m) for m in self.masks()]

    def subset_matrix(self) -> np.ndarray:
        """``M[a, b]`` is true when the atom set ``a`` is contained in ``b``."""
        m = np.arange(1 << self.size)
        return (m[:, None] & ~m[None, :]) == 0

    def leq_matrix(self) -> np.ndarray:
        """The algebra's own order, indexed by element masks.

        For named algebras this is read off the declared order table rather than
        from the atom sets, so checks against it exercise the declared lattice.
        """
        if self.kind == "powerset":
            return self.subset_matrix()
        to_mask, _ = self._decomposition
        L = np.zeros((1 << self.size, 1 << self.size), dtype=bool)
        for a, b in self.leq_pairs:
            L[to_mask[a], to_mask[b]] = True
        return L

    def __repr__(self) -> str:
        return f"Caba({self.name!r}, {self.kind})"


@dataclass(frozen=True)
class CabaElement:
    owner: Caba
    mask: int

    @property
    def atom_set(self) -> frozenset[Hashable]:
        return frozenset(self.owner.atoms[i] for i in bits(self.mask))

    def __le__(self, other: "CabaElement") -> bool:
        _same_owner((self, other))
        return self.mask & ~other.mask == 0

    def __repr__(self) -> str:
        return f"<{self.owner.label(self.mask)} in {self.owner.name}>"


def _same_owner(args: Sequence[CabaElement]) -> None:
    if len({a.owner for a in args}) > 1:
        raise MixedOwnership("arguments belong to different algebras: " + ", ".join(sorted({a.owner.name for a in args})))


def boolean_ops(caba: Caba, op: str, args: Sequence[CabaElement] = ()) -> CabaElement:
    """Apply ``join``, ``meet``, ``complement``, ``top`` or ``bot`` on ``caba``."""
    args = list(args)
    for a in args:
        if a.owner != caba:
            raise MixedOwnership(f"element of {a.owner.name} passed to an operation on {caba.name}")
    if op == "join":
        mask = 0
        for a in args:
            mask |= a.mask
    elif op == "meet":
        mask = caba.top_mask
        for a in args:
            mask &= a.mask
    elif op == "complement":
        if len(args) != 1:
            raise ValueError("complement takes exactly one argument")
        mask = caba.top_mask & ~args[0].mask
    elif op == "top":
        mask = caba.top_mask
    elif op == "bot":
        mask = 0
    else:
        raise ValueError(f"unknown Boolean operation {op!r}")
    return CabaElement(caba, mask)


def validate_caba(caba: Caba) -> ValidationReport:
    return caba.report


# ---------------------------------------------------------------------------
# Functions between carriers and their adjoint triple


@dataclass(frozen=True)
class FiniteFunction:
    src: Carrier
    dst: Carrier
    targets: tuple[Hashable, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(self.targets))
        if len(self.targets) != len(self.src):
            raise ValueError("a function needs exactly one target per source element")
        for y in self.targets:
            if y not in self.dst:
                raise ValueError(f"target {y!r} is not in {self.dst.name}")

    @classmethod
    def from_mapping(cls, src: Carrier, dst: Carrier, mapping: Mapping[Hashable, Hashable]) -> "FiniteFunction":
        missing = [x for x in src if x not in mapping]
        if missing:
            raise ValueError(f"function is not total: no image for {missing}")
        extra = [x for x in mapping if x not in src]
        if extra:
            raise ValueError(f"function maps undeclared elements {extra}")
        return cls(src, dst, tuple(mapping[x] for x in src))

    @classmethod
    def identity(cls, carrier: Carrier) -> "FiniteFunction":
        return cls(carrier, carrier, carrier.elements)

    def __call__(self, x: Hashable) -> Hashable:
        return self.targets[self.src.index[x]]

    @cached_property
    def index_map(self) -> tuple[int, ...]:
        return tuple(self.dst.index[y] for y in self.targets)

    def as_dict(self) -> dict[Hashable, Hashable]:
        return dict(zip(self.src.elements, self.targets))

    def then(self, g: "FiniteFunction") -> "FiniteFunction":
        """``g`` after ``self``."""
        if g.src != self.dst:
            raise ValueError(f"cannot compose {self.src.name}->{self.dst.name} with {g.src.name}->{g.dst.name}")
        return FiniteFunction(self.src, g.dst, tuple(g(y) for y in self.targets))

    def image_mask(self, mask: int) -> int:
        out = 0
        for i in bits(mask):
            out |= 1 << self.index_map[i]
        return out

    def preimage_mask(self, mask: int) -> int:
        return sum(1 << i for i, j in enumerate(self.index_map) if mask >> j & 1)


@dataclass(frozen=True)
class CabaMap:
    """A total map between two algebras, tabulated on element masks."""

    src: Caba
    dst: Caba
    table: tuple[int, ...]

    def __call__(self, x: CabaElement | int) -> Any:
        if isinstance(x, CabaElement):
            return CabaElement(self.dst, self.table[self.src.element(x).mask])
        return self.table[x]


@dataclass(frozen=True)
class GaloisReport:
    image_left_of_preimage: LawCheck
    preimage_left_of_coimage: LawCheck
    image_preserves_atoms: LawCheck

    @property
    def ok(self) -> bool:
        return all(c.holds for c in (self.image_left_of_preimage, self.preimage_left_of_coimage, self.image_preserves_atoms))


@dataclass(frozen=True)
class AdjointTriple:
    preimage: CabaMap
    image: CabaMap
    coimage: CabaMap
    report: GaloisReport


def _adjunction(left: Sequence[int], right: Sequence[int], n_left: int, n_right: int) -> LawCheck:
    # left: P(n_left bits) -> P(n_right bits); right goes back.
    for a in range(1 << n_left):
        for b in range(1 << n_right):
            lhs = left[a] & ~b == 0
            rhs = a & ~right[b] == 0
            if lhs != rhs:
                return LawCheck(False, (a, b))
    return LawCheck(True)


def adjoint_triple(f: FiniteFunction) -> AdjointTriple:
    """The preimage map of ``f`` with its left (image) and right (coimage) adjoints."""
    PX, PY = Caba.of_carrier(f.src), Caba.of_carrier(f.dst)
    nx, ny = len(f.src), len(f.dst)
    pre = tuple(f.preimage_mask(b) for b in range(1 << ny))
    img = tuple(f.image_mask(a) for a in range(1 << nx))
    fibres = [f.preimage_mask(1 << j) for j in range(ny)]
    coim = tuple(sum(1 << j for j in range(ny) if fibres[j] & ~a == 0) for a in range(1 << nx))
    if (1 << nx) * (1 << ny) <= max_enum():
        left = _adjunction(img, pre, nx, ny)
        right = _adjunction(pre, coim, ny, nx)
    else:
        left = right = LawCheck(True, "not checked: above enumeration bound")
    atoms = LawCheck(True)
    for i in range(nx):
        if popcount(img[1 << i]) != 1:
            atoms = LawCheck(False, f.src.elements[i])
            break
    return AdjointTriple(
        preimage=CabaMap(PY, PX, pre),
        image=CabaMap(PX, PY, img),
        coimage=CabaMap(PX, PY, coim),
        report=GaloisReport(left, right, atoms),
    )
