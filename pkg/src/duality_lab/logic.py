"""Modal formulas over frames, cross-frame judgments, and a derivation checker.

A judgment ``phi [Q] psi`` holds when every world satisfying ``phi`` is
``Q``-related to some world satisfying ``psi``; that is, when the denotations are
related by the lower lifting of ``Q``.  Entailment ``phi |- psi`` is containment
of denotations in one frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence, Union

from .errors import (
    CarrierMismatch,
    DerivationError,
    SchemaMismatch,
    SemanticLeafFalse,
    SideConditionFailed,
    UnknownFact,
    UnknownRule,
    UnresolvedName,
)
from .lattice import bits
from .modal import Frame, SimReport, classify_sim
from .relations import FinRel, compose, dagger, identity

# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class Top:
    def __str__(self) -> str:
        return "top"


@dataclass(frozen=True)
class Bot:
    def __str__(self) -> str:
        return "bot"


@dataclass(frozen=True)
class Pred:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class WorldLit:
    world: str

    def __str__(self) -> str:
        return f"@{self.world}"


@dataclass(frozen=True)
class Not:
    body: "Formula"

    def __str__(self) -> str:
        return "!" + _operand(self.body)


@dataclass(frozen=True)
class Dia:
    body: "Formula"

    def __str__(self) -> str:
        return "dia " + _operand(self.body)


@dataclass(frozen=True)
class Box:
    body: "Formula"

    def __str__(self) -> str:
        return "box " + _operand(self.body)


@dataclass(frozen=True)
class And:
    items: tuple["Formula", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))

    def __str__(self) -> str:
        if len(self.items) < 2:
            return "And[" + ", ".join(str(i) for i in self.items) + "]"
        return " & ".join(_operand(i) for i in self.items)


@dataclass(frozen=True)
class Or:
    items: tuple["Formula", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))

    def __str__(self) -> str:
        if len(self.items) < 2:
            return "Or[" + ", ".join(str(i) for i in self.items) + "]"
        return " | ".join(_operand(i) for i in self.items)


Formula = Union[Top, Bot, Pred, WorldLit, Not, Dia, Box, And, Or]


def _operand(f: Formula) -> str:
    if isinstance(f, (And, Or)) and len(f.items) >= 2:
        return f"({f})"
    return str(f)


def denote(phi: Formula, frame: Frame) -> int:
    """Denotation of ``phi`` in ``frame`` as a world mask."""
    if isinstance(phi, Top):
        return frame.worlds.full_mask
    if isinstance(phi, Bot):
        return 0
    if isinstance(phi, Pred):
        try:
            return frame.mask(frame.valuation[phi.name])
        except KeyError:
            raise UnresolvedName(f"predicate {phi.name!r} is not defined on frame {frame.name}") from None
    if isinstance(phi, WorldLit):
        if phi.world not in frame.worlds:
            raise UnresolvedName(f"world {phi.world!r} is not declared in frame {frame.name}")
        return 1 << frame.worlds.index[phi.world]
    if isinstance(phi, Not):
        return frame.worlds.full_mask & ~denote(phi.body, frame)
    if isinstance(phi, Dia):
        return frame.diamond_mask(denote(phi.body, frame))
    if isinstance(phi, Box):
        return frame.box_mask(denote(phi.body, frame))
    if isinstance(phi, And):
        out = frame.worlds.full_mask
        for item in phi.items:
            out &= denote(item, frame)
        return out
    if isinstance(phi, Or):
        out = 0
        for item in phi.items:
            out |= denote(item, frame)
        return out
    raise TypeError(f"not a formula: {phi!r}")


def eval_formula(phi: Formula, frame: Frame) -> frozenset[Hashable]:
    return frame.subset(denote(phi, frame))


def holds_entailment(frame: Frame, phi: Formula, psi: Formula) -> bool:
    return denote(phi, frame) & ~denote(psi, frame) == 0


# ---------------------------------------------------------------------------
# Relation expressions and judgments


@dataclass(frozen=True)
class RelName:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class RelId:
    frame: str

    def __str__(self) -> str:
        return f"id {self.frame}"


@dataclass(frozen=True)
class RelDagger:
    body: "RelExpr"

    def __str__(self) -> str:
        inner = f"({self.body})" if isinstance(self.body, RelSeq) else str(self.body)
        return inner + "~"


@dataclass(frozen=True)
class RelSeq:
    left: "RelExpr"
    right: "RelExpr"

    def __str__(self) -> str:
        right = f"({self.right})" if isinstance(self.right, RelSeq) else str(self.right)
        return f"{self.left}; {right}"


RelExpr = Union[RelName, RelId, RelDagger, RelSeq]


@dataclass(frozen=True)
class Judgment:
    lhs: Formula
    rel: RelExpr
    rhs: Formula

    def __str__(self) -> str:
        return f"{self.lhs} [{self.rel}] {self.rhs}"


@dataclass(frozen=True)
class Entailment:
    frame: str
    lhs: Formula
    rhs: Formula

    def __str__(self) -> str:
        return f"{self.frame} |- {self.lhs} => {self.rhs}"


Statement = Union[Judgment, Entailment]


@dataclass
class Models:
    """The frames and named relations that judgments are interpreted in."""

    frames: Mapping[str, Frame]
    relations: Mapping[str, FinRel] = field(default_factory=dict)

    def frame(self, name: str) -> Frame:
        try:
            return self.frames[name]
        except KeyError:
            raise UnresolvedName(f"unknown frame {name!r}") from None

    def endpoints(self, expr: RelExpr) -> tuple[str, str]:
        """Source and target frame names of a relation expression."""
        if isinstance(expr, RelName):
            r = self._named(expr.name)
            return r.src.name, r.dst.name
        if isinstance(expr, RelId):
            self.frame(expr.frame)
            return expr.frame, expr.frame
        if isinstance(expr, RelDagger):
            s, t = self.endpoints(expr.body)
            return t, s
        if isinstance(expr, RelSeq):
            s, m1 = self.endpoints(expr.left)
            m2, t = self.endpoints(expr.right)
            if m1 != m2:
                raise CarrierMismatch(f"cannot compose {expr.left} ({s}->{m1}) with {expr.right} ({m2}->{t})")
            return s, t
        raise TypeError(f"not a relation expression: {expr!r}")

    def _named(self, name: str) -> FinRel:
        try:
            return self.relations[name]
        except KeyError:
            raise UnresolvedName(f"unknown relation {name!r}") from None

    def resolve(self, expr: RelExpr) -> FinRel:
        if isinstance(expr, RelName):
            return self._named(expr.name)
        if isinstance(expr, RelId):
            return identity(self.frame(expr.frame).worlds)
        if isinstance(expr, RelDagger):
            return dagger(self.resolve(expr.body))
        if isinstance(expr, RelSeq):
            return compose(self.resolve(expr.left), self.resolve(expr.right))
        raise TypeError(f"not a relation expression: {expr!r}")


@dataclass(frozen=True)
class JudgmentResult:
    holds: bool
    counterexample: Hashable | None = None

    def __bool__(self) -> bool:
        return self.holds


def holds_judgment(j: Judgment, models: Models) -> JudgmentResult:
    src_name, dst_name = models.endpoints(j.rel)
    X, Y = models.frame(src_name), models.frame(dst_name)
    r = models.resolve(j.rel)
    if r.src != X.worlds or r.dst != Y.worlds:
        raise CarrierMismatch(f"relation {j.rel} does not run between frames {X.name} and {Y.name}")
    lhs, rhs = denote(j.lhs, X), denote(j.rhs, Y)
    for i in bits(lhs):
        if not r.succ[i] & rhs:
            return JudgmentResult(False, X.worlds.elements[i])
    return JudgmentResult(True)


def holds_statement(s: Statement, models: Models) -> bool:
    if isinstance(s, Judgment):
        return holds_judgment(s, models).holds
    return holds_entailment(models.frame(s.frame), s.lhs, s.rhs)


# ---------------------------------------------------------------------------
# Theories and derivations


@dataclass(frozen=True)
class Theory:
    name: str
    facts: Mapping[str, Statement]

    def verify(self, models: Models) -> dict[str, bool]:
        return {name: holds_statement(fact, models) for name, fact in self.facts.items()}


@dataclass(frozen=True)
class EntailmentLeaf:
    entailment: Entailment


@dataclass(frozen=True)
class TheoryLeaf:
    fact: str


@dataclass(frozen=True)
class Derivation:
    conclusion: Statement
    rule: str
    premises: tuple["Premise", ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "premises", tuple(self.premises))


Premise = Union[Derivation, EntailmentLeaf, TheoryLeaf]


@dataclass(frozen=True)
class Failure:
    path: str
    kind: str
    message: str

    def as_dict(self) -> dict[str, str]:
        return {"path": self.path, "kind": self.kind, "message": self.message}


@dataclass(frozen=True)
class NodeAudit:
    path: str
    rule: str
    conclusion: str
    semantically_true: bool | None


_ERRORS: dict[str, type[DerivationError]] = {
    cls.__name__: cls
    for cls in (SchemaMismatch, UnknownRule, UnknownFact, SideConditionFailed, SemanticLeafFalse)
}


@dataclass(frozen=True)
class CheckReport:
    accepted: bool
    conditional: bool
    failures: tuple[Failure, ...]
    nodes: tuple[NodeAudit, ...]

    @property
    def root_true(self) -> bool | None:
        return self.nodes[0].semantically_true if self.nodes else None

    @property
    def verdict(self) -> str:
        if not self.accepted:
            return "rejected"
        return "conditional" if self.conditional else "accepted"

    def raise_if_rejected(self) -> None:
        if self.failures:
            first = self.failures[0]
            raise _ERRORS.get(first.kind, DerivationError)(first.message, first.path)

    def as_dict(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict,
            "failures": [f.as_dict() for f in self.failures],
            "nodes": [
                {"path": n.path, "rule": n.rule, "conclusion": n.conclusion, "semantically_true": n.semantically_true}
                for n in self.nodes
            ],
        }


class _Reject(Exception):
    def __init__(self, kind: type[DerivationError], message: str) -> None:
        super().__init__(message)
        self.kind = kind.__name__


def _expect_judgment(s: Statement | None, what: str) -> Judgment:
    if not isinstance(s, Judgment):
        raise _Reject(SchemaMismatch, f"{what} must be a judgment, got {s}")
    return s


def _expect_entailment(s: Statement | None, what: str) -> Entailment:
    if not isinstance(s, Entailment):
        raise _Reject(SchemaMismatch, f"{what} must be an entailment, got {s}")
    return s


def _same(a: Any, b: Any, what: str) -> None:
    if a != b:
        raise _Reject(SchemaMismatch, f"{what}: {a} does not match {b}")


def _arity(prems: Sequence[Any], n: int | None, rule: str) -> None:
    if n is not None and len(prems) != n:
        raise _Reject(SchemaMismatch, f"rule {rule} takes {n} premise(s), got {len(prems)}")


# A schema returns the side conditions it needs: (relation expression, property).
SideCondition = tuple[RelExpr, str]


def _consequence(c: Statement, prems: Sequence[Statement], models: Models) -> list[SideCondition]:
    _arity(prems, 3, "consequence")
    concl = _expect_judgment(c, "conclusion")
    left = _expect_entailment(prems[0], "premise 1")
    mid = _expect_judgment(prems[1], "premise 2")
    right = _expect_entailment(prems[2], "premise 3")
    src, dst = models.endpoints(mid.rel)
    _same(concl.rel, mid.rel, "relation")
    _same(left.frame, src, "frame of the left entailment")
    _same(right.frame, dst, "frame of the right entailment")
    _same(left.lhs, concl.lhs, "strengthened antecedent")
    _same(left.rhs, mid.lhs, "antecedent of the premise judgment")
    _same(right.lhs, mid.rhs, "consequent of the premise judgment")
    _same(right.rhs, concl.rhs, "weakened consequent")
    return []


def _or_left(c: Statement, prems: Sequence[Statement], models: Models) -> list[SideCondition]:
    concl = _expect_judgment(c, "conclusion")
    if not isinstance(concl.lhs, Or):
        raise _Reject(SchemaMismatch, f"conclusion antecedent must be a disjunction, got {concl.lhs}")
    _arity(prems, len(concl.lhs.items), "or_left")
    for k, (p, disjunct) in enumerate(zip(prems, concl.lhs.items), 1):
        j = _expect_judgment(p, f"premise {k}")
        _same(j.lhs, disjunct, f"premise {k} antecedent")
        _same(j.rel, concl.rel, f"premise {k} relation")
        _same(j.rhs, concl.rhs, f"premise {k} consequent")
    return []


def _compose_rule(c: Statement, prems: Sequence[Statement], models: Models) -> list[SideCondition]:
    _arity(prems, 2, "compose")
    concl = _expect_judgment(c, "conclusion")
    first = _expect_judgment(prems[0], "premise 1")
    second = _expect_judgment(prems[1], "premise 2")
    if not isinstance(concl.rel, RelSeq):
        raise _Reject(SchemaMismatch, f"conclusion relation must be a composite, got {concl.rel}")
    _same(first.rel, concl.rel.left, "first relation")
    _same(second.rel, concl.rel.right, "second relation")
    _same(first.lhs, concl.lhs, "antecedent")
    _same(first.rhs, second.lhs, "middle formula")
    _same(second.rhs, concl.rhs, "consequent")
    return []


def _id_intro(c: Statement, prems: Sequence[Statement], models: Models) -> list[SideCondition]:
    _arity(prems, 1, "id_intro")
    concl = _expect_judgment(c, "conclusion")
    ent = _expect_entailment(prems[0], "premise")
    _same(concl.rel, RelId(ent.frame), "relation")
    _same(concl.lhs, ent.lhs, "antecedent")
    _same(concl.rhs, ent.rhs, "consequent")
    return []


def _id_elim(c: Statement, prems: Sequence[Statement], models: Models) -> list[SideCondition]:
    _arity(prems, 1, "id_elim")
    concl = _expect_entailment(c, "conclusion")
    j = _expect_judgment(prems[0], "premise")
    _same(j.rel, RelId(concl.frame), "relation")
    _same(j.lhs, concl.lhs, "antecedent")
    _same(j.rhs, concl.rhs, "consequent")
    return []


def _modal(boxed: bool, dual: bool) -> Callable[[Statement, Sequence[Statement], Models], list[SideCondition]]:
    name = ("cosim" if dual else "sim") + ("_box_dia" if boxed else "_dia")

    def schema(c: Statement, prems: Sequence[Statement], models: Models) -> list[SideCondition]:
        _arity(prems, 1, name)
        concl = _expect_judgment(c, "conclusion")
        p = _expect_judgment(prems[0], "premise")
        _same(p.rel, concl.rel, "relation")
        _same(concl.lhs, Dia(p.lhs), "conclusion antecedent")
        if boxed:
            _same(p.rhs, Box(concl.rhs), "premise consequent")
        else:
            _same(concl.rhs, Dia(p.rhs), "conclusion consequent")
        if dual:
            if not isinstance(concl.rel, RelDagger):
                raise _Reject(SchemaMismatch, f"rule {name} needs a daggered relation, got {concl.rel}")
            return [(concl.rel.body, "cosimulation")]
        return [(concl.rel, "simulation")]

    return schema


RULES: dict[str, Callable[[Statement, Sequence[Statement], Models], list[SideCondition]]] = {
    "consequence": _consequence,
    "or_left": _or_left,
    "compose": _compose_rule,
    "id_intro": _id_intro,
    "id_elim": _id_elim,
    "sim_dia": _modal(boxed=False, dual=False),
    "sim_box_dia": _modal(boxed=True, dual=False),
    "cosim_dia": _modal(boxed=False, dual=True),
    "cosim_box_dia": _modal(boxed=True, dual=True),
}


class _Checker:
    def __init__(self, models: Models, theory: Theory | None, assume: bool) -> None:
        self.models = models
        self.theory = theory
        self.assume = assume
        self.failures: list[Failure] = []
        self.nodes: list[NodeAudit] = []
        self.conditional = False
        self._sim_cache: dict[RelExpr, SimReport] = {}
        self._fact_cache: dict[str, bool] = {}

    def fail(self, path: str, kind: str, message: str) -> None:
        self.failures.append(Failure(path, kind, message))

    def truth(self, s: Statement) -> bool | None:
        try:
            return holds_statement(s, self.models)
        except (UnresolvedName, CarrierMismatch):
            return None

    def classify(self, expr: RelExpr) -> SimReport:
        if expr not in self._sim_cache:
            src, dst = self.models.endpoints(expr)
            self._sim_cache[expr] = classify_sim(
                self.models.resolve(expr), self.models.frame(src), self.models.frame(dst))
        return self._sim_cache[expr]

    def premise(self, p: Premise, path: str) -> Statement | None:
        if isinstance(p, Derivation):
            self.node(p, path)
            return p.conclusion
        if isinstance(p, EntailmentLeaf):
            e = p.entailment
            try:
                ok = holds_entailment(self.models.frame(e.frame), e.lhs, e.rhs)
            except UnresolvedName as exc:
                self.fail(path, "SchemaMismatch", str(exc))
                return e
            if not ok:
                self.fail(path, "SemanticLeafFalse", f"entailment {e} does not hold")
            return e
        if isinstance(p, TheoryLeaf):
            if self.theory is None or p.fact not in self.theory.facts:
                self.fail(path, "UnknownFact", f"no fact named {p.fact!r}")
                return None
            fact = self.theory.facts[p.fact]
            if self.assume:
                self.conditional = True
            else:
                if p.fact not in self._fact_cache:
                    self._fact_cache[p.fact] = bool(self.truth(fact))
                if not self._fact_cache[p.fact]:
                    self.fail(path, "SemanticLeafFalse", f"theory fact {p.fact} ({fact}) does not hold")
            return fact
        raise TypeError(f"not a premise: {p!r}")

    def node(self, d: Derivation, path: str) -> None:
        self.nodes.append(NodeAudit(path, d.rule, str(d.conclusion), self.truth(d.conclusion)))
        statements = [self.premise(p, f"{path}.{k}") for k, p in enumerate(d.premises)]
        schema = RULES.get(d.rule)
        if schema is None:
            self.fail(path, "UnknownRule", f"unknown rule {d.rule!r}")
            return
        if any(s is None for s in statements):
            return  # already reported
        try:
            conditions = schema(d.conclusion, statements, self.models)
        except _Reject as exc:
            self.fail(path, exc.kind, str(exc))
            return
        except (UnresolvedName, CarrierMismatch) as exc:
            self.fail(path, "SchemaMismatch", str(exc))
            return
        for expr, prop in conditions:
            try:
                rep = self.classify(expr)
            except (UnresolvedName, CarrierMismatch) as exc:
                self.fail(path, "SchemaMismatch", str(exc))
                continue
            holds = rep.is_simulation if prop == "simulation" else rep.is_cosimulation
            if not holds:
                side = "forth" if prop == "simulation" else "back"
                cex = next((v for v in rep.counterexamples if v.side == side), None)
                detail = f"; counterexample pair {cex.pair} via {cex.transition}" if cex else ""
                self.fail(path, "SideConditionFailed", f"rule {d.rule} needs {expr} to be a {prop}{detail}")


def check_derivation(d: Derivation, models: Models, theory: Theory | None = None, assume: bool = False) -> CheckReport:
    """Check a derivation's structure, side conditions and semantic leaves.

    With ``assume=True`` theory facts are trusted rather than re-verified, and an
    accepted derivation is reported as conditional.
    """
    checker = _Checker(models, theory, assume)
    checker.node(d, "root")
    return CheckReport(
        accepted=not checker.failures,
        conditional=checker.conditional and not checker.failures,
        failures=tuple(checker.failures),
        nodes=tuple(checker.nodes),
    )


def pred_or(names: Iterable[str]) -> Or:
    return Or(tuple(Pred(n) for n in names))
