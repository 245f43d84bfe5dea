"""Workspace files: frames, relations, functions, algebras, formulas, theories and derivations.

``parse_workspace`` reads the textual format, ``serialize_workspace`` writes the
canonical form (declarations in source order, one clause per line).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterator

from .errors import ParseError
from .lattice import Caba, FiniteFunction
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
    Premise,
    RelDagger,
    RelExpr,
    RelId,
    RelName,
    RelSeq,
    Statement,
    Theory,
    TheoryLeaf,
    Top,
    WorldLit,
)
from .modal import Frame
from .relations import FinRel

FORMULA_KEYWORDS = frozenset({"top", "bot", "dia", "box", "And", "Or", "id"})


@dataclass(frozen=True)
class FormulaDecl:
    frame: str
    formula: Formula


@dataclass(frozen=True)
class TheoryDecl:
    over: tuple[str, str, str]
    theory: Theory


@dataclass(frozen=True)
class DerivationDecl:
    over: tuple[str, str, str]
    uses: str | None
    derivation: Derivation


@dataclass
class Workspace:
    frames: dict[str, Frame] = field(default_factory=dict)
    relations: dict[str, FinRel] = field(default_factory=dict)
    functions: dict[str, FiniteFunction] = field(default_factory=dict)
    cabas: dict[str, Caba] = field(default_factory=dict)
    formulas: dict[str, FormulaDecl] = field(default_factory=dict)
    theories: dict[str, TheoryDecl] = field(default_factory=dict)
    derivations: dict[str, DerivationDecl] = field(default_factory=dict)
    order: list[tuple[str, str]] = field(default_factory=list)
    positions: dict[tuple[str, str], tuple[int, int]] = field(default_factory=dict)

    _TABLES = {
        "frame": "frames", "rel": "relations", "fun": "functions", "caba": "cabas",
        "formula": "formulas", "theory": "theories", "derive": "derivations",
    }

    def add(self, kind: str, name: str, value: Any, pos: tuple[int, int] = (0, 0)) -> None:
        table = getattr(self, self._TABLES[kind])
        if name in table:
            raise ValueError(f"duplicate {kind} {name!r}")
        table[name] = value
        self.order.append((kind, name))
        self.positions[(kind, name)] = pos

    def models(self) -> Models:
        return Models(self.frames, self.relations)

    def frame_of(self, carrier_name: str) -> Frame:
        return self.frames[carrier_name]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Workspace):
            return NotImplemented
        keys = ("frames", "relations", "functions", "cabas", "formulas", "theories", "derivations", "order")
        return all(getattr(self, k) == getattr(other, k) for k in keys)


# ---------------------------------------------------------------------------
# Lexer

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<int>[0-9]+)
  | (?P<sym>\|-|->|<=|=>|[{}()\[\];,=!&|~@:])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "int", "sym" or "eof"
    text: str
    line: int
    col: int

    def describe(self) -> str:
        return "end of input" if self.kind == "eof" else repr(self.text)


def tokenize(text: str) -> list[Token]:
    out = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


# ---------------------------------------------------------------------------
# Parser


@dataclass(frozen=True)
class _RawName:
    """An identifier inside a formula, resolved once the formula's frame is known."""
    name: str
    line: int
    col: int


class _Parser:
    def __init__(self, text: str) -> None:
        self.toks = tokenize(text)
        self.i = 0
        self.ws = Workspace()

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message: str, expected: set[str] | frozenset[str] = frozenset(), tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col, frozenset(expected))

    def at(self, text: str) -> bool:
        return self.tok.kind in ("sym", "ident") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"unexpected {self.tok.describe()}", {text})
        return self.advance()

    def advance(self) -> Token:
        tok = self.tok
        self.i += 1
        return tok

    def ident(self, what: str) -> Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected {what}, got {self.tok.describe()}", {what})
        return self.advance()

    def name(self, what: str) -> Token:
        if self.tok.kind not in ("ident", "int"):
            raise self.error(f"expected {what}, got {self.tok.describe()}", {what})
        return self.advance()

    def comma_list(self, item: Callable[[], Any], close: str) -> list[Any]:
        items = []
        if self.at(close):
            return items
        items.append(item())
        while self.at(","):
            self.advance()
            items.append(item())
        return items

    # -- lookups -------------------------------------------------------------

    def lookup(self, kind: str, tok: Token) -> Any:
        table = getattr(self.ws, Workspace._TABLES[kind])
        if tok.text not in table:
            label = {"rel": "relation", "fun": "function", "derive": "derivation"}.get(kind, kind)
            raise self.error(f"unknown {label} {tok.text!r}", tok=tok)
        return table[tok.text]

    def world(self, frame: Frame, tok: Token) -> Hashable:
        if tok.text not in frame.worlds:
            raise self.error(f"unknown world {tok.text!r} in frame {frame.name}", tok=tok)
        return tok.text

    def declare(self, kind: str, tok: Token, value: Any) -> None:
        try:
            self.ws.add(kind, tok.text, value, (tok.line, tok.col))
        except ValueError as exc:
            raise self.error(str(exc), tok=tok) from None

    # -- declarations ------------------------------------------------------

    def workspace(self) -> Workspace:
        starters = {"frame", "rel", "fun", "caba", "formula", "theory", "derive"}
        while self.tok.kind != "eof":
            if self.tok.kind == "ident" and self.tok.text in starters:
                getattr(self, "decl_" + self.tok.text)()
            else:
                raise self.error(f"unexpected {self.tok.describe()}", starters)
        return self.ws

    def decl_frame(self) -> None:
        self.advance()
        name = self.ident("frame name")
        self.expect("{")
        self.expect("worlds")
        worlds: list[str] = []
        while self.tok.kind in ("ident", "int"):
            w = self.advance()
            if w.text in worlds:
                raise self.error(f"duplicate world {w.text!r}", tok=w)
            worlds.append(w.text)
        self.expect(";")
        edges: list[tuple[Token, Token]] = []
        preds: dict[str, list[Token]] = {}
        while not self.at("}"):
            if self.at("trans"):
                self.advance()

                def edge() -> tuple[Token, Token]:
                    a = self.name("world")
                    self.expect("->")
                    return a, self.name("world")

                edges.extend(self.comma_list(edge, ";"))
                self.expect(";")
            elif self.at("pred"):
                self.advance()
                p = self.ident("predicate name")
                if p.text in FORMULA_KEYWORDS:
                    raise self.error(f"{p.text!r} is reserved", tok=p)
                if p.text in preds:
                    raise self.error(f"duplicate predicate {p.text!r}", tok=p)
                self.expect("=")
                self.expect("{")
                members = []
                while self.tok.kind in ("ident", "int"):
                    members.append(self.advance())
                self.expect("}")
                self.expect(";")
                preds[p.text] = members
            else:
                raise self.error(f"unexpected {self.tok.describe()}", {"trans", "pred", "}"})
        self.expect("}")
        known = set(worlds)
        for tok in [t for e in edges for t in e] + [t for ms in preds.values() for t in ms]:
            if tok.text not in known:
                raise self.error(f"unknown world {tok.text!r} in frame {name.text}", tok=tok)
        frame = Frame.build(name.text, worlds, [(a.text, b.text) for a, b in edges],
                            {p: [t.text for t in ms] for p, ms in preds.items()})
        self.declare("frame", name, frame)

    def _signature(self) -> tuple[Token, Frame, Frame]:
        name = self.ident("name")
        self.expect(":")
        src = self.lookup("frame", self.ident("frame name"))
        self.expect("->")
        dst = self.lookup("frame", self.ident("frame name"))
        return name, src, dst

    def decl_rel(self) -> None:
        self.advance()
        name, src, dst = self._signature()
        self.expect("{")
        pairs: set[tuple[str, str]] = set()

        def entry() -> None:
            a = self.world(src, self.name("world"))
            self.expect("->")
            targets = [self.world(dst, self.name("world"))]
            while self.tok.kind in ("ident", "int"):
                targets.append(self.world(dst, self.advance()))
            pairs.update((a, b) for b in targets)

        self.comma_list(entry, "}")
        self.expect("}")
        self.declare("rel", name, FinRel(src.worlds, dst.worlds, frozenset(pairs)))

    def decl_fun(self) -> None:
        self.advance()
        name, src, dst = self._signature()
        self.expect("{")
        mapping: dict[str, str] = {}

        def entry() -> None:
            a_tok = self.name("world")
            a = self.world(src, a_tok)
            self.expect("->")
            b = self.world(dst, self.name("world"))
            if a in mapping and mapping[a] != b:
                raise self.error(f"function {name.text} maps {a!r} twice", tok=a_tok)
            mapping[a] = b

        self.comma_list(entry, "}")
        close = self.expect("}")
        missing = [w for w in src.worlds if w not in mapping]
        if missing:
            raise self.error(f"function {name.text} is not total: no image for {missing}", tok=close)
        self.declare("fun", name, FiniteFunction.from_mapping(src.worlds, dst.worlds, mapping))

    def decl_caba(self) -> None:
        self.advance()
        name = self.ident("algebra name")
        self.expect("{")
        self.expect("elems")
        elems: list[str] = []
        while self.tok.kind in ("ident", "int"):
            e = self.advance()
            if e.text in elems:
                raise self.error(f"duplicate element {e.text!r}", tok=e)
            elems.append(e.text)
        self.expect(";")
        pairs: list[tuple[str, str]] = []
        if self.at("leq"):
            self.advance()

            def pair() -> tuple[str, str]:
                a = self.name("element")
                self.expect("<=")
                b = self.name("element")
                for t in (a, b):
                    if t.text not in elems:
                        raise self.error(f"unknown element {t.text!r}", tok=t)
                return a.text, b.text

            pairs = self.comma_list(pair, ";")
            self.expect(";")
        self.expect("}")
        self.declare("caba", name, Caba.named(name.text, elems, _order_closure(elems, pairs)))

    def decl_formula(self) -> None:
        self.advance()
        name = self.ident("formula name")
        self.expect("over")
        frame = self.lookup("frame", self.ident("frame name"))
        self.expect("=")
        raw = self.formula()
        self.expect(";")
        self.declare("formula", name, FormulaDecl(frame.name, self.resolve(raw, frame)))

    def _over(self) -> tuple[str, str, str]:
        self.expect("over")
        self.expect("(")
        f1 = self.lookup("frame", self.ident("frame name"))
        self.expect(",")
        q_tok = self.ident("relation name")
        q = self.lookup("rel", q_tok)
        self.expect(",")
        f2 = self.lookup("frame", self.ident("frame name"))
        self.expect(")")
        if q.src != f1.worlds or q.dst != f2.worlds:
            raise self.error(f"relation {q_tok.text} does not run from {f1.name} to {f2.name}", tok=q_tok)
        return f1.name, q_tok.text, f2.name

    def decl_theory(self) -> None:
        self.advance()
        name = self.ident("theory name")
        over = self._over()
        self.expect("{")
        facts: dict[str, Statement] = {}
        while self.at("fact"):
            self.advance()
            fname = self.ident("fact name")
            if fname.text in facts:
                raise self.error(f"duplicate fact {fname.text!r}", tok=fname)
            self.expect(":")
            facts[fname.text] = self.statement()
            self.expect(";")
        self.expect("}")
        self.declare("theory", name, TheoryDecl(over, Theory(name.text, facts)))

    def decl_derive(self) -> None:
        self.advance()
        name = self.ident("derivation name")
        over = self._over()
        uses = None
        if self.at("uses"):
            self.advance()
            tok = self.ident("theory name")
            self.lookup("theory", tok)
            uses = tok.text
        facts = self.ws.theories[uses].theory.facts if uses else {}
        d = self.derivation_block(facts)
        self.declare("derive", name, DerivationDecl(over, uses, d))

    def derivation_block(self, facts: Any) -> Derivation:
        self.expect("{")
        self.expect("conclusion")
        conclusion = self.statement()
        self.expect(";")
        self.expect("rule")
        rule = self.ident("rule name").text
        self.expect("{")
        premises: list[Premise] = []
        while not self.at("}"):
            if self.at("{"):
                premises.append(self.derivation_block(facts))
            elif self.at("sem"):
                self.advance()
                premises.append(EntailmentLeaf(self.entailment()))
                self.expect(";")
            elif self.at("fact"):
                self.advance()
                tok = self.ident("fact name")
                if tok.text not in facts:
                    raise self.error(f"unknown fact {tok.text!r}", tok=tok)
                premises.append(TheoryLeaf(tok.text))
                self.expect(";")
            else:
                raise self.error(f"unexpected {self.tok.describe()}", {"{", "sem", "fact", "}"})
        self.expect("}")
        self.expect("}")
        return Derivation(conclusion, rule, tuple(premises))

    # -- statements --------------------------------------------------------

    def statement(self) -> Statement:
        nxt = self.toks[self.i + 1]
        if self.tok.kind == "ident" and nxt.kind == "sym" and nxt.text == "|-":
            return self.entailment()
        lhs = self.formula()
        self.expect("[")
        start = self.tok
        rel = self.relexpr()
        self.expect("]")
        rhs = self.formula()
        try:
            src, dst = self.ws.models().endpoints(rel)
        except Exception as exc:
            raise self.error(str(exc), tok=start) from None
        return Judgment(self.resolve(lhs, self.ws.frames[src]), rel, self.resolve(rhs, self.ws.frames[dst]))

    def entailment(self) -> Entailment:
        frame = self.lookup("frame", self.ident("frame name"))
        self.expect("|-")
        lhs = self.formula()
        self.expect("=>")
        rhs = self.formula()
        return Entailment(frame.name, self.resolve(lhs, frame), self.resolve(rhs, frame))

    def relexpr(self) -> RelExpr:
        expr = self.rel_unary()
        while self.at(";"):
            self.advance()
            expr = RelSeq(expr, self.rel_unary())
        return expr

    def rel_unary(self) -> RelExpr:
        if self.at("("):
            self.advance()
            expr = self.relexpr()
            self.expect(")")
        elif self.at("id"):
            self.advance()
            expr = RelId(self.lookup("frame", self.ident("frame name")).name)
        else:
            tok = self.ident("relation name")
            self.lookup("rel", tok)
            expr = RelName(tok.text)
        while self.at("~"):
            self.advance()
            expr = RelDagger(expr)
        return expr

    # -- formulas ----------------------------------------------------------

    def formula(self) -> Any:
        items = [self.conj()]
        while self.at("|"):
            self.advance()
            items.append(self.conj())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conj(self) -> Any:
        items = [self.unary()]
        while self.at("&"):
            self.advance()
            items.append(self.unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def unary(self) -> Any:
        if self.at("!"):
            self.advance()
            return Not(self.unary())
        if self.at("dia"):
            self.advance()
            return Dia(self.unary())
        if self.at("box"):
            self.advance()
            return Box(self.unary())
        return self.atom()

    def atom(self) -> Any:
        tok = self.tok
        if self.at("top"):
            self.advance()
            return Top()
        if self.at("bot"):
            self.advance()
            return Bot()
        if self.at("@"):
            self.advance()
            w = self.name("world")
            return WorldLit(_RawName(w.text, w.line, w.col))  # type: ignore[arg-type]
        if self.at("("):
            self.advance()
            inner = self.formula()
            self.expect(")")
            return inner
        if self.at("And") or self.at("Or"):
            ctor = And if self.advance().text == "And" else Or
            self.expect("[")
            items = self.comma_list(self.formula, "]")
            self.expect("]")
            return ctor(tuple(items))
        if tok.kind == "ident" and tok.text not in FORMULA_KEYWORDS:
            self.advance()
            return _RawName(tok.text, tok.line, tok.col)
        raise self.error(f"unexpected {tok.describe()} in formula",
                         {"top", "bot", "!", "dia", "box", "@", "(", "And", "Or", "predicate"})

    def resolve(self, raw: Any, frame: Frame) -> Formula:
        if isinstance(raw, _RawName):
            if raw.name in frame.valuation:
                return Pred(raw.name)
            decl = self.ws.formulas.get(raw.name)
            if decl is not None and decl.frame == frame.name:
                return decl.formula
            raise ParseError(f"unknown predicate {raw.name!r} on frame {frame.name}", raw.line, raw.col)
        if isinstance(raw, WorldLit):
            w = raw.world
            if w.name not in frame.worlds:  # type: ignore[union-attr]
                raise ParseError(f"unknown world {w.name!r} in frame {frame.name}", w.line, w.col)  # type: ignore[union-attr]
            return WorldLit(w.name)  # type: ignore[union-attr]
        if isinstance(raw, (Top, Bot)):
            return raw
        if isinstance(raw, Not):
            return Not(self.resolve(raw.body, frame))
        if isinstance(raw, Dia):
            return Dia(self.resolve(raw.body, frame))
        if isinstance(raw, Box):
            return Box(self.resolve(raw.body, frame))
        if isinstance(raw, And):
            return And(tuple(self.resolve(i, frame) for i in raw.items))
        if isinstance(raw, Or):
            return Or(tuple(self.resolve(i, frame) for i in raw.items))
        raise TypeError(raw)


def _order_closure(elems: list[str], pairs: list[tuple[str, str]]) -> set[tuple[str, str]]:
    """Reflexive-transitive closure of the declared order pairs."""
    up = {e: {e} for e in elems}
    for a, b in pairs:
        up[a].add(b)
    changed = True
    while changed:
        changed = False
        for e in elems:
            new = set().union(*(up[x] for x in up[e]))
            if new != up[e]:
                up[e] = new
                changed = True
    return {(a, b) for a in elems for b in up[a]}


def parse_workspace(text: str) -> Workspace:
    return _Parser(text).workspace()


def parse_formula(text: str, frame: Frame, ws: Workspace | None = None) -> Formula:
    """Parse a single formula over ``frame``, resolving names against ``ws`` formulas too."""
    p = _Parser(text)
    if ws is not None:
        p.ws = ws
    raw = p.formula()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.describe()} after formula")
    return p.resolve(raw, frame)


# ---------------------------------------------------------------------------
# Serializer


def _sorted(ws: Any, carrier: Any) -> list[Any]:
    order = carrier.index
    return sorted(ws, key=order.__getitem__)


def _frame_text(f: Frame) -> Iterator[str]:
    yield f"frame {f.name} {{"
    yield "  worlds " + " ".join(map(str, f.worlds.elements)) + " ;"
    edges = [f"{a} -> {b}" for a, b in f.trans.sorted_pairs()]
    yield "  trans " + " , ".join(edges) + " ;" if edges else "  trans ;"
    for p, ws in f.valuation.items():
        yield f"  pred {p} = {{ " + " ".join(map(str, _sorted(ws, f.worlds))) + (" } ;" if ws else "} ;")
    yield "}"


def _map_body(entries: list[str]) -> Iterator[str]:
    for k, e in enumerate(entries):
        yield "  " + e + (" ," if k < len(entries) - 1 else "")


def _rel_text(name: str, r: FinRel) -> Iterator[str]:
    yield f"rel {name} : {r.src.name} -> {r.dst.name} {{"
    entries = []
    for i, x in enumerate(r.src.elements):
        targets = [r.dst.elements[j] for j in range(len(r.dst)) if r.succ[i] >> j & 1]
        if targets:
            entries.append(f"{x} -> " + " ".join(map(str, targets)))
    yield from _map_body(entries)
    yield "}"


def _fun_text(name: str, f: FiniteFunction) -> Iterator[str]:
    yield f"fun {name} : {f.src.name} -> {f.dst.name} {{"
    yield from _map_body([f"{x} -> {y}" for x, y in zip(f.src.elements, f.targets)])
    yield "}"


def _caba_text(c: Caba) -> Iterator[str]:
    yield f"caba {c.name} {{"
    yield "  elems " + " ".join(map(str, c.element_names)) + " ;"
    pos = {e: i for i, e in enumerate(c.element_names)}
    pairs = sorted((p for p in c.leq_pairs if p[0] != p[1]), key=lambda p: (pos[p[0]], pos[p[1]]))
    if pairs:
        yield "  leq " + " , ".join(f"{a} <= {b}" for a, b in pairs) + " ;"
    yield "}"


def _premise_text(p: Premise, indent: str) -> Iterator[str]:
    if isinstance(p, Derivation):
        yield from _derivation_text(p, indent)
    elif isinstance(p, EntailmentLeaf):
        yield f"{indent}sem {p.entailment} ;"
    else:
        yield f"{indent}fact {p.fact} ;"


def _derivation_text(d: Derivation, indent: str) -> Iterator[str]:
    yield f"{indent}{{"
    yield f"{indent}  conclusion {d.conclusion} ;"
    if d.premises:
        yield f"{indent}  rule {d.rule} {{"
        for p in d.premises:
            yield from _premise_text(p, indent + "    ")
        yield f"{indent}  }}"
    else:
        yield f"{indent}  rule {d.rule} {{ }}"
    yield f"{indent}}}"


def serialize_workspace(ws: Workspace) -> str:
    blocks = []
    for kind, name in ws.order:
        if kind == "frame":
            lines = list(_frame_text(ws.frames[name]))
        elif kind == "rel":
            lines = list(_rel_text(name, ws.relations[name]))
        elif kind == "fun":
            lines = list(_fun_text(name, ws.functions[name]))
        elif kind == "caba":
            lines = list(_caba_text(ws.cabas[name]))
        elif kind == "formula":
            decl = ws.formulas[name]
            lines = [f"formula {name} over {decl.frame} = {decl.formula} ;"]
        elif kind == "theory":
            decl = ws.theories[name]
            f1, q, f2 = decl.over
            lines = [f"theory {name} over ({f1}, {q}, {f2}) {{"]
            lines += [f"  fact {k} : {s} ;" for k, s in decl.theory.facts.items()]
            lines.append("}")
        else:
            decl = ws.derivations[name]
            f1, q, f2 = decl.over
            head = f"derive {name} over ({f1}, {q}, {f2})" + (f" uses {decl.uses}" if decl.uses else "")
            body = list(_derivation_text(decl.derivation, ""))
            lines = [head + " " + body[0]] + body[1:]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n" if blocks else ""
