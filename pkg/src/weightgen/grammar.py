"""Grammar parsing, standardization and structural validation.

The source format (UTF-8 text):

* ``#`` starts a comment running to end of line.
* ``axiom <Class> ;`` is optional; the default axiom is the first rule's LHS.
* Rules are ``C -> alt | alt | ... ;`` where an alternative is a
  whitespace-separated sequence of tokens and ``_`` alone denotes the empty
  structure. ``SEQ( ... )`` is sequence sugar and may wrap any sub-expression.
* ``weight <atom> = <decimal or p/q> ;`` and ``target <atom> = <decimal> ;``
  attach a sampling weight / targeted frequency to an atom and mark it as
  distinguished.

Lexical identity: every symbol that appears as a rule LHS is a class; every
other token is an atom. Quoted tokens (``'+'``) are always atoms and may hold
arbitrary characters. A quoted atom may not share its name with a class.

Standardization rewrites every production into one of the standard forms
(empty structure, single atom, binary union of class references, binary
product of class references, pointing of a class, or the pointed-product
form) while preserving per-size counts, and checks well-foundedness: every
reachable class is productive and no dependency cycle can preserve size.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

from .errors import (
    EpsilonCycleError,
    GrammarSyntaxError,
    NotRegularError,
    NotStandardError,
    SpecError,
    UnproductiveClassError,
)

# ---------------------------------------------------------------------------
# Expression nodes


class Expr:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Epsilon(Expr):
    pass


@dataclass(frozen=True, slots=True)
class AtomRef(Expr):
    atom: str


@dataclass(frozen=True, slots=True)
class ClassRef(Expr):
    name: str


@dataclass(frozen=True, slots=True)
class Union(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Product(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Sequence(Expr):
    body: Expr


@dataclass(frozen=True, slots=True)
class Point(Expr):
    target: Expr


@dataclass(frozen=True, slots=True)
class Unpoint(Expr):
    target: Expr


@dataclass(frozen=True, slots=True)
class ThetaProduct(Expr):
    """Standard form for a class C whose pointing satisfies ΘC = A x B."""

    left: Expr
    right: Expr


EPSILON = Epsilon()


def alternatives(expr: Expr) -> list[Expr]:
    """Flatten the top-level right-nested union of a production."""
    out = []
    while isinstance(expr, Union):
        out.append(expr.left)
        expr = expr.right
    out.append(expr)
    return out


def factors(expr: Expr) -> list[Expr]:
    """Flatten a right-nested product chain."""
    out = []
    while isinstance(expr, Product):
        out.append(expr.left)
        expr = expr.right
    out.append(expr)
    return out


def _serialize(expr: Expr) -> str:
    if isinstance(expr, Epsilon):
        return "1"
    if isinstance(expr, AtomRef):
        return "z(%s)" % expr.atom
    if isinstance(expr, ClassRef):
        return "c(%s)" % expr.name
    if isinstance(expr, Union):
        return "U(%s,%s)" % (_serialize(expr.left), _serialize(expr.right))
    if isinstance(expr, Product):
        return "P(%s,%s)" % (_serialize(expr.left), _serialize(expr.right))
    if isinstance(expr, Sequence):
        return "S(%s)" % _serialize(expr.body)
    if isinstance(expr, Point):
        return "T(%s)" % _serialize(expr.target)
    if isinstance(expr, Unpoint):
        return "t(%s)" % _serialize(expr.target)
    if isinstance(expr, ThetaProduct):
        return "TP(%s,%s)" % (_serialize(expr.left), _serialize(expr.right))
    raise TypeError(expr)


# ---------------------------------------------------------------------------
# Specification


@dataclass
class Specification:
    """A parsed (or standardized) combinatorial specification.

    ``classes`` and ``atoms`` are in declaration order; ``distinguished`` is
    the ordered subset of atoms that carry a declared weight or target.
    ``display`` maps each atom to its display symbol (display symbols may
    repeat; identity is by atom name).
    """

    axiom: str
    classes: tuple[str, ...]
    atoms: tuple[str, ...]
    productions: dict[str, Expr]
    display: dict[str, str] = field(default_factory=dict)
    distinguished: tuple[str, ...] = ()
    declared_weights: dict[str, Fraction] = field(default_factory=dict)
    declared_targets: dict[str, Fraction] = field(default_factory=dict)
    standardized: bool = False

    def __post_init__(self):
        for a in self.atoms:
            self.display.setdefault(a, a)

    def production(self, name: str) -> Expr:
        try:
            return self.productions[name]
        except KeyError:
            raise SpecError("unknown class %r" % name) from None

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(("axiom:%s;" % self.axiom).encode())
        for c in self.classes:
            h.update(("%s=%s;" % (c, _serialize(self.productions[c]))).encode())
        for a in self.atoms:
            h.update(("atom:%s:%s;" % (a, self.display.get(a, a))).encode())
        h.update(("dist:%s;" % ",".join(self.distinguished)).encode())
        return h.hexdigest()


@dataclass
class StandardizationReport:
    introduced_classes: list[tuple[str, str]]
    is_regular: bool
    is_context_free: bool
    scc_decomposition: list[list[str]]
    cycle_gcd_per_scc: list[int]

    def describe(self) -> str:
        lines = [
            "regular: %s" % ("yes" if self.is_regular else "no"),
            "context-free: %s" % ("yes" if self.is_context_free else "no"),
        ]
        for comp, g in zip(self.scc_decomposition, self.cycle_gcd_per_scc):
            lines.append("scc {%s}: cycle gcd %d" % (", ".join(comp), g))
        if self.introduced_classes:
            lines.append("introduced: %s" % ", ".join(n for n, _ in self.introduced_classes))
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Lexer / parser

_PUNCT = "|;=()"
_IDENT_RE = re.compile(r"[A-Za-z0-9_]+\Z")


@dataclass
class _Token:
    kind: str  # 'word', 'quoted', 'arrow', or one of _PUNCT
    text: str
    line: int
    column: int


def _tokenize(text: str) -> Iterator[_Token]:
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c in _PUNCT:
            yield _Token(c, c, line, col)
            i += 1
            col += 1
            continue
        if text.startswith("->", i):
            yield _Token("arrow", "->", line, col)
            i += 2
            col += 2
            continue
        if c == "'":
            j = i + 1
            while j < n and text[j] not in "'\n":
                j += 1
            if j >= n or text[j] != "'":
                raise GrammarSyntaxError("unterminated quoted atom", line, col)
            if j == i + 1:
                raise GrammarSyntaxError("empty quoted atom", line, col)
            yield _Token("quoted", text[i + 1 : j], line, col)
            col += j + 1 - i
            i = j + 1
            continue
        # bare word: runs until whitespace, punctuation, quote, comment or '->'
        j = i
        while j < n:
            d = text[j]
            if d.isspace() or d in _PUNCT or d in "#'":
                break
            if d == "-" and text.startswith("->", j):
                break
            j += 1
        if j == i:
            raise GrammarSyntaxError("unexpected character %r" % c, line, col)
        yield _Token("word", text[i:j], line, col)
        col += j - i
        i = j


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(_tokenize(text))
        self.pos = 0

    def peek(self, offset: int = 0) -> Optional[_Token]:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def next(self) -> _Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else _Token("word", "", 1, 1)
            raise GrammarSyntaxError("unexpected end of input", last.line, last.column)
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.next()
        if tok.kind != kind:
            raise GrammarSyntaxError(
                "expected %r, found %r" % (kind, tok.text), tok.line, tok.column
            )
        return tok


# Raw right-hand sides keep tokens as (kind, text, line, col); atom/class
# resolution happens once all LHS names are known.
_RawAlt = list


def _parse_number(tok: _Token) -> Fraction:
    text = tok.text
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise GrammarSyntaxError("invalid number %r" % text, tok.line, tok.column) from None


def parse_spec(text: str) -> Specification:
    """Parse grammar source text into a Specification.

    Raises GrammarSyntaxError (with 1-based line/column) for malformed input,
    duplicate LHS, an undeclared axiom, or a weight/target declared for a
    symbol that is not an atom.
    """
    p = _Parser(text)
    rules: list[tuple[_Token, list[_RawAlt]]] = []
    axiom_tok: Optional[_Token] = None
    weight_decls: list[tuple[_Token, Fraction]] = []
    target_decls: list[tuple[_Token, Fraction]] = []

    def parse_alts() -> list[_RawAlt]:
        alts = [parse_alt()]
        while p.peek() is not None and p.peek().kind == "|":
            p.next()
            alts.append(parse_alt())
        return alts

    def parse_alt() -> _RawAlt:
        items: _RawAlt = []
        while True:
            tok = p.peek()
            if tok is None or tok.kind in (";", "|", ")"):
                break
            tok = p.next()
            if tok.kind == "word" and tok.text == "SEQ":
                p.expect("(")
                body = parse_alts()
                p.expect(")")
                items.append(("seq", body, tok.line, tok.column))
            elif tok.kind in ("word", "quoted"):
                if tok.kind == "word" and not _IDENT_RE.match(tok.text) and tok.text != "_":
                    raise GrammarSyntaxError(
                        "invalid token %r" % tok.text, tok.line, tok.column
                    )
                items.append((tok.kind, tok.text, tok.line, tok.column))
            else:
                raise GrammarSyntaxError(
                    "unexpected %r in alternative" % tok.text, tok.line, tok.column
                )
        if not items:
            tok = p.peek()
            line, col = (tok.line, tok.column) if tok else (1, 1)
            raise GrammarSyntaxError("empty alternative (use '_' for the empty structure)", line, col)
        return items

    while p.peek() is not None:
        tok = p.next()
        nxt = p.peek()
        if nxt is not None and nxt.kind == "arrow":
            if tok.kind != "word" or not _IDENT_RE.match(tok.text):
                raise GrammarSyntaxError("invalid class name %r" % tok.text, tok.line, tok.column)
            if tok.text in ("_", "SEQ"):
                raise GrammarSyntaxError("reserved name %r" % tok.text, tok.line, tok.column)
            p.next()
            alts = parse_alts()
            p.expect(";")
            rules.append((tok, alts))
        elif tok.kind == "word" and tok.text == "axiom":
            name = p.next()
            p.expect(";")
            if axiom_tok is not None:
                raise GrammarSyntaxError("duplicate axiom declaration", name.line, name.column)
            axiom_tok = name
        elif tok.kind == "word" and tok.text in ("weight", "target"):
            name = p.next()
            if name.kind not in ("word", "quoted"):
                raise GrammarSyntaxError("expected atom name", name.line, name.column)
            p.expect("=")
            value = _parse_number(p.next())
            p.expect(";")
            (weight_decls if tok.text == "weight" else target_decls).append((name, value))
        else:
            raise GrammarSyntaxError(
                "expected a rule or directive, found %r" % tok.text, tok.line, tok.column
            )

    if not rules:
        raise GrammarSyntaxError("no rules", 1, 1)

    class_names = []
    seen = set()
    for tok, _ in rules:
        if tok.text in seen:
            raise GrammarSyntaxError("duplicate rule for class %r" % tok.text, tok.line, tok.column)
        seen.add(tok.text)
        class_names.append(tok.text)
    class_set = set(class_names)

    atoms: list[str] = []
    atom_set: set[str] = set()

    def register_atom(name: str, tok_line: int, tok_col: int, quoted: bool):
        if quoted and name in class_set:
            raise GrammarSyntaxError(
                "quoted atom %r collides with a class name" % name, tok_line, tok_col
            )
        if name not in atom_set:
            atom_set.add(name)
            atoms.append(name)

    def build_alt(items: _RawAlt) -> Expr:
        if len(items) == 1 and items[0][0] == "word" and items[0][1] == "_":
            return EPSILON
        parts: list[Expr] = []
        for kind, payload, line, col in items:
            if kind == "seq":
                parts.append(Sequence(build_union(payload)))
            elif kind == "word":
                if payload == "_":
                    raise GrammarSyntaxError(
                        "'_' must stand alone in its alternative", line, col
                    )
                if payload in class_set:
                    parts.append(ClassRef(payload))
                else:
                    register_atom(payload, line, col, quoted=False)
                    parts.append(AtomRef(payload))
            else:  # quoted
                register_atom(payload, line, col, quoted=True)
                parts.append(AtomRef(payload))
        expr = parts[-1]
        for part in reversed(parts[:-1]):
            expr = Product(part, expr)
        return expr

    def build_union(alts: list[_RawAlt]) -> Expr:
        exprs = [build_alt(a) for a in alts]
        expr = exprs[-1]
        for e in reversed(exprs[:-1]):
            expr = Union(e, expr)
        return expr

    productions = {tok.text: build_union(alts) for tok, alts in rules}

    if axiom_tok is not None:
        if axiom_tok.text not in class_set:
            raise GrammarSyntaxError(
                "undeclared axiom %r" % axiom_tok.text, axiom_tok.line, axiom_tok.column
            )
        axiom = axiom_tok.text
    else:
        axiom = class_names[0]

    declared_weights: dict[str, Fraction] = {}
    declared_targets: dict[str, Fraction] = {}
    distinguished: list[str] = []
    for decls, store, what in (
        (weight_decls, declared_weights, "weight"),
        (target_decls, declared_targets, "target"),
    ):
        for name_tok, value in decls:
            name = name_tok.text
            if name not in atom_set:
                raise GrammarSyntaxError(
                    "%s declared for non-atom %r" % (what, name), name_tok.line, name_tok.column
                )
            if what == "weight" and value <= 0:
                raise GrammarSyntaxError(
                    "weight for %r must be positive" % name, name_tok.line, name_tok.column
                )
            if what == "target" and not (0 < value < 1):
                raise GrammarSyntaxError(
                    "target for %r must lie in (0,1)" % name, name_tok.line, name_tok.column
                )
            if name in store:
                raise GrammarSyntaxError(
                    "duplicate %s for %r" % (what, name), name_tok.line, name_tok.column
                )
            store[name] = value
            if name not in distinguished:
                distinguished.append(name)

    return Specification(
        axiom=axiom,
        classes=tuple(class_names),
        atoms=tuple(atoms),
        productions=productions,
        distinguished=tuple(distinguished),
        declared_weights=declared_weights,
        declared_targets=declared_targets,
    )


def parse_file(path) -> Specification:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_spec(fh.read())


# ---------------------------------------------------------------------------
# Standardization


class _NameGen:
    def __init__(self, used):
        self.used = set(used)
        self.counters: dict[str, int] = {}

    def fresh(self, base: str) -> str:
        k = self.counters.get(base, 0)
        while True:
            k += 1
            name = "_%s%d" % (base, k)
            if name not in self.used:
                self.counters[base] = k
                self.used.add(name)
                return name


def _std_kind(expr: Expr) -> str:
    if isinstance(expr, Epsilon):
        return "eps"
    if isinstance(expr, AtomRef):
        return "atom"
    if isinstance(expr, Union) and isinstance(expr.left, ClassRef) and isinstance(expr.right, ClassRef):
        return "union"
    if isinstance(expr, Product) and isinstance(expr.left, ClassRef) and isinstance(expr.right, ClassRef):
        return "product"
    if isinstance(expr, Point) and isinstance(expr.target, ClassRef):
        return "point"
    if isinstance(expr, ThetaProduct) and isinstance(expr.left, ClassRef) and isinstance(expr.right, ClassRef):
        return "theta"
    raise NotStandardError("production %s is not in standard form" % _serialize(expr))


def require_standard(spec: Specification) -> None:
    if not spec.standardized:
        raise NotStandardError("specification has not been standardized")
    for c in spec.classes:
        _std_kind(spec.productions[c])


def standardize(spec: Specification) -> tuple[Specification, StandardizationReport]:
    """Rewrite a parsed specification into standard form.

    Sequences desugar through a fresh class Q with Q = 1 + body*Q; n-ary
    unions and products become right-nested binary nodes over class
    references; unpointing is resolved into the pointed-product form.
    Structurally identical introduced subexpressions share one fresh class,
    which preserves counts (one union branch per alternative is kept).

    Returns the standardized spec (restricted to classes reachable from the
    axiom) together with its StandardizationReport. Raises
    UnproductiveClassError or EpsilonCycleError when well-foundedness fails.
    """
    gen = _NameGen(spec.classes)
    productions: dict[str, Expr] = {}
    introduced: list[tuple[str, str]] = []
    memo: dict[Expr, str] = {}
    alias: dict[str, str] = {}
    pending_unpoint: list[tuple[str, str]] = []

    def introduce(base: str, production: Expr, provenance: str) -> str:
        name = gen.fresh(base)
        productions[name] = production
        introduced.append((name, provenance))
        return name

    def ensure_class(expr: Expr, provenance: str) -> str:
        if isinstance(expr, ClassRef):
            return expr.name
        key = expr
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(expr, Epsilon):
            name = introduce("eps", EPSILON, "empty-structure branch")
        elif isinstance(expr, AtomRef):
            name = introduce("tok_" + expr.atom, expr, "atom %s" % expr.atom)
        else:
            base = {
                Union: "alt",
                Product: "cat",
                Sequence: "seq",
                Point: "pt",
                Unpoint: "unpt",
            }.get(type(expr), "cls")
            name = gen.fresh(base)
            gen_name_provenance = provenance
            productions[name] = None  # reserve before recursing (cycles go via ClassRef only)
            introduced.append((name, gen_name_provenance))
            productions[name] = std_production(expr, name, provenance)
        memo[key] = name
        return name

    def std_production(expr: Expr, owner: str, provenance: str) -> Expr:
        if isinstance(expr, Epsilon):
            return EPSILON
        if isinstance(expr, AtomRef):
            return expr
        if isinstance(expr, ClassRef):
            alias[owner] = expr.name
            return expr  # patched after alias resolution
        if isinstance(expr, Union):
            left = ensure_class(expr.left, provenance)
            right = ensure_class(expr.right, provenance)
            return Union(ClassRef(left), ClassRef(right))
        if isinstance(expr, Product):
            left = ensure_class(expr.left, provenance)
            right = ensure_class(expr.right, provenance)
            return Product(ClassRef(left), ClassRef(right))
        if isinstance(expr, Sequence):
            body = ensure_class(expr.body, "sequence body of %s" % provenance)
            q = gen.fresh("seq")
            introduced.append((q, "sequence of %s" % provenance))
            eps_cls = ensure_class(EPSILON, provenance)
            cat = introduce("cat", Product(ClassRef(body), ClassRef(q)), "sequence step of %s" % provenance)
            productions[q] = Union(ClassRef(eps_cls), ClassRef(cat))
            return ClassRef(q) if owner is None else Union(ClassRef(eps_cls), ClassRef(cat)) if owner == q else _alias_to(owner, q)
        if isinstance(expr, Point):
            return Point(ClassRef(ensure_class(expr.target, provenance)))
        if isinstance(expr, Unpoint):
            target = ensure_class(expr.target, provenance)
            pending_unpoint.append((owner, target))
            return Unpoint(ClassRef(target))  # patched later
        if isinstance(expr, ThetaProduct):
            left = ensure_class(expr.left, provenance)
            right = ensure_class(expr.right, provenance)
            return ThetaProduct(ClassRef(left), ClassRef(right))
        raise TypeError(expr)

    def _alias_to(owner: str, target: str) -> Expr:
        alias[owner] = target
        return ClassRef(target)

    for cls in spec.classes:
        productions[cls] = std_production(spec.productions[cls], cls, "class %s" % cls)

    # Resolve alias chains (whole-RHS class references); a cycle is a
    # size-preserving loop and is reported as such.
    def resolve_alias(name: str) -> str:
        chain = []
        cur = name
        while cur in alias:
            if cur in chain:
                raise EpsilonCycleError(chain[chain.index(cur):])
            chain.append(cur)
            cur = alias[cur]
        return cur

    for name in list(alias):
        productions[name] = productions[resolve_alias(name)]

    # Unpointing requires the (resolved) target to be a product class.
    for owner, target in pending_unpoint:
        target = resolve_alias(target)
        prod = productions[target]
        if not (isinstance(prod, Product) and isinstance(prod.left, ClassRef)):
            raise NotStandardError(
                "cannot unpoint class %r: its production is not a product" % target
            )
        productions[owner] = ThetaProduct(prod.left, prod.right)

    # Restrict to classes reachable from the axiom.
    order: list[str] = []
    seen = {spec.axiom}
    stack = [spec.axiom]
    while stack:
        cur = stack.pop()
        order.append(cur)
        for ref in _references(productions[cur]):
            if ref not in seen:
                seen.add(ref)
                stack.append(ref)
    # keep declaration order: user classes first, introduced after
    ordered = [c for c in spec.classes if c in seen]
    ordered += [n for n, _ in introduced if n in seen and n not in spec.classes]

    std = Specification(
        axiom=spec.axiom,
        classes=tuple(ordered),
        atoms=spec.atoms,
        productions={c: productions[c] for c in ordered},
        display=dict(spec.display),
        distinguished=spec.distinguished,
        declared_weights=dict(spec.declared_weights),
        declared_targets=dict(spec.declared_targets),
        standardized=True,
    )
    _check_well_founded(std)
    report = validate(std)
    report.introduced_classes = [(n, p) for n, p in introduced if n in seen]
    return std, report


def _references(expr: Expr) -> list[str]:
    if isinstance(expr, (Union, Product, ThetaProduct)):
        return [expr.left.name, expr.right.name]
    if isinstance(expr, Point):
        return [expr.target.name]
    if isinstance(expr, ClassRef):
        return [expr.name]
    return []


# ---------------------------------------------------------------------------
# Structural analyses on standardized specs


def nullable_classes(spec: Specification) -> set[str]:
    """Classes that can derive the empty structure."""
    nullable: set[str] = set()
    changed = True
    while changed:
        changed = False
        for c in spec.classes:
            if c in nullable:
                continue
            prod = spec.productions[c]
            if isinstance(prod, Epsilon):
                ok = True
            elif isinstance(prod, Union):
                ok = prod.left.name in nullable or prod.right.name in nullable
            elif isinstance(prod, Product):
                ok = prod.left.name in nullable and prod.right.name in nullable
            else:
                ok = False
            if ok:
                nullable.add(c)
                changed = True
    return nullable


def _size_preserving_edges(spec: Specification, nullable: set[str]) -> dict[str, list[str]]:
    edges: dict[str, list[str]] = {c: [] for c in spec.classes}
    for c in spec.classes:
        prod = spec.productions[c]
        if isinstance(prod, Union):
            edges[c] = [prod.left.name, prod.right.name]
        elif isinstance(prod, (Product, ThetaProduct)):
            out = []
            if prod.right.name in nullable:
                out.append(prod.left.name)
            if prod.left.name in nullable:
                out.append(prod.right.name)
            edges[c] = out
        elif isinstance(prod, Point):
            edges[c] = [prod.target.name]
    return edges


def _tarjan_sccs(nodes: list[str], edges: dict[str, list[str]]) -> list[list[str]]:
    """Iterative Tarjan; components come out in reverse topological order."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    sccs: list[list[str]] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(edges.get(root, ())))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(edges.get(nxt, ()))))
                    advanced = True
                    break
                elif nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                sccs.append(comp)
    return sccs


def _check_well_founded(spec: Specification) -> None:
    nullable = nullable_classes(spec)
    zero_edges = _size_preserving_edges(spec, nullable)
    for comp in _tarjan_sccs(list(spec.classes), zero_edges):
        in_comp = set(comp)
        if len(comp) > 1 or any(d in in_comp for d in zero_edges.get(comp[0], ())):
            raise EpsilonCycleError(list(reversed(comp)))
    # productivity: every reachable class must have a nonzero count at some size
    productive: set[str] = set()
    changed = True
    while changed:
        changed = False
        for c in spec.classes:
            if c in productive:
                continue
            prod = spec.productions[c]
            if isinstance(prod, (Epsilon, AtomRef)):
                ok = True
            elif isinstance(prod, Union):
                ok = prod.left.name in productive or prod.right.name in productive
            elif isinstance(prod, (Product, ThetaProduct)):
                ok = prod.left.name in productive and prod.right.name in productive
            elif isinstance(prod, Point):
                ok = prod.target.name in productive
            else:
                ok = False
            if ok:
                productive.add(c)
                changed = True
    dead = [c for c in spec.classes if c not in productive]
    if dead:
        raise UnproductiveClassError("unproductive class(es): %s" % ", ".join(dead))
    # pointing an always-empty structure yields the empty class
    positive = positive_classes(spec)
    for c in spec.classes:
        prod = spec.productions[c]
        if isinstance(prod, Point) and prod.target.name not in positive:
            raise UnproductiveClassError(
                "class %s points a class with no structures of size >= 1" % c
            )


def positive_classes(spec: Specification) -> set[str]:
    """Classes that can derive a structure of size >= 1."""
    positive: set[str] = set()
    changed = True
    while changed:
        changed = False
        for c in spec.classes:
            if c in positive:
                continue
            prod = spec.productions[c]
            if isinstance(prod, AtomRef):
                ok = True
            elif isinstance(prod, Union):
                ok = prod.left.name in positive or prod.right.name in positive
            elif isinstance(prod, (Product, ThetaProduct)):
                ok = prod.left.name in positive or prod.right.name in positive
            elif isinstance(prod, Point):
                ok = prod.target.name in positive
            else:
                ok = False
            if ok:
                positive.add(c)
                changed = True
    return positive


def same_size_order(spec: Specification) -> list[str]:
    """Topological order of the size-preserving dependency graph.

    Processing classes in this order makes every counting recurrence
    well-defined size by size (a class only consults same-size entries of
    classes that come earlier).
    """
    nullable = nullable_classes(spec)
    edges = _size_preserving_edges(spec, nullable)
    sccs = _tarjan_sccs(list(spec.classes), edges)
    # Tarjan emits children before parents; dependencies first is what we want
    order = [comp[0] for comp in sccs]
    assert len(order) == len(spec.classes)
    return order


def min_sizes(spec: Specification) -> dict[str, int]:
    big = 1 << 60
    size = {c: big for c in spec.classes}
    changed = True
    while changed:
        changed = False
        for c in spec.classes:
            prod = spec.productions[c]
            if isinstance(prod, Epsilon):
                v = 0
            elif isinstance(prod, AtomRef):
                v = 1
            elif isinstance(prod, Union):
                v = min(size[prod.left.name], size[prod.right.name])
            elif isinstance(prod, Product):
                v = size[prod.left.name] + size[prod.right.name]
            elif isinstance(prod, Point):
                v = max(size[prod.target.name], 1)
            elif isinstance(prod, ThetaProduct):
                v = max(size[prod.left.name] + size[prod.right.name], 1)
            else:
                raise NotStandardError("non-standard production for %s" % c)
            v = min(v, big)
            if v < size[c]:
                size[c] = v
                changed = True
    return size


def _weighted_dependency_edges(spec: Specification) -> list[tuple[str, str, int]]:
    sizes = min_sizes(spec)
    edges: list[tuple[str, str, int]] = []
    for c in spec.classes:
        prod = spec.productions[c]
        if isinstance(prod, Union):
            edges.append((c, prod.left.name, 0))
            edges.append((c, prod.right.name, 0))
        elif isinstance(prod, (Product, ThetaProduct)):
            edges.append((c, prod.left.name, sizes[prod.right.name]))
            edges.append((c, prod.right.name, sizes[prod.left.name]))
        elif isinstance(prod, Point):
            edges.append((c, prod.target.name, 0))
    return edges


def _scc_cycle_gcd(comp: list[str], edges: list[tuple[str, str, int]]) -> int:
    in_comp = set(comp)
    adj: dict[str, list[tuple[str, int]]] = {c: [] for c in comp}
    for u, v, w in edges:
        if u in in_comp and v in in_comp:
            adj[u].append((v, w))
    pot = {comp[0]: 0}
    queue = [comp[0]]
    g = 0
    while queue:
        u = queue.pop()
        for v, w in adj[u]:
            if v not in pot:
                pot[v] = pot[u] + w
                queue.append(v)
            else:
                g = math.gcd(g, abs(pot[u] + w - pot[v]))
    return g


def validate(spec: Specification) -> StandardizationReport:
    """Report structural facts of a standardized specification.

    Regularity means every product has an atom-only left factor (right-linear
    rules) and no pointing construct appears; context-freeness means no
    pointing construct appears. The cycle gcd is computed per strongly
    connected component of the dependency graph, with each dependency edge
    weighted by the minimum size contributed by its sibling factor.
    """
    require_standard(spec)
    is_cf = True
    is_reg = True
    for c in spec.classes:
        prod = spec.productions[c]
        kind = _std_kind(prod)
        if kind in ("point", "theta"):
            is_cf = False
            is_reg = False
        elif kind == "product":
            left_prod = spec.productions[prod.left.name]
            if not isinstance(left_prod, AtomRef):
                is_reg = False

    dep_edges: dict[str, list[str]] = {c: _references(spec.productions[c]) for c in spec.classes}
    sccs = _tarjan_sccs(list(spec.classes), dep_edges)
    weighted = _weighted_dependency_edges(spec)
    nontrivial: list[list[str]] = []
    gcds: list[int] = []
    for comp in reversed(sccs):  # topological order
        in_comp = set(comp)
        has_cycle = len(comp) > 1 or comp[0] in dep_edges.get(comp[0], ())
        if not has_cycle:
            continue
        nontrivial.append(sorted(comp, key=list(spec.classes).index))
        gcds.append(_scc_cycle_gcd(comp, weighted))
    return StandardizationReport(
        introduced_classes=[],
        is_regular=is_reg,
        is_context_free=is_cf,
        scc_decomposition=nontrivial,
        cycle_gcd_per_scc=gcds,
    )


# ---------------------------------------------------------------------------
# Regular classification (transfer description)

_ACCEPT_STATE = "_accept"


@dataclass
class TransferDescription:
    """One-step transition view of a right-linear specification.

    ``transitions[(i, j)]`` is the multiset (sorted tuple) of atoms labeling
    one-step moves from state i to state j; ``accepting`` holds the indices
    of states with an empty-structure alternative.
    """

    states: tuple[str, ...]
    transitions: dict[tuple[int, int], tuple[str, ...]]
    accepting: frozenset[int]
    atoms: tuple[str, ...]

    def index(self, state: str) -> int:
        return self.states.index(state)


def classify_regular(spec: Specification) -> TransferDescription:
    """Build the transfer description of a right-linear specification.

    Each state is a class reachable as a continuation; union indirections
    collapse into the referring state. Raises NotRegularError if any
    production is not right-linear.
    """
    require_standard(spec)
    report = validate(spec)
    if not report.is_regular:
        offenders = []
        for c in spec.classes:
            prod = spec.productions[c]
            kind = _std_kind(prod)
            if kind in ("point", "theta"):
                offenders.append(c)
            elif kind == "product" and not isinstance(spec.productions[prod.left.name], AtomRef):
                offenders.append(c)
        raise NotRegularError(
            "specification is not right-linear (offending class(es): %s)" % ", ".join(offenders)
        )

    closures: dict[str, tuple[list[tuple[str, Optional[str]]], bool]] = {}

    def closure(cls: str) -> tuple[list[tuple[str, Optional[str]]], bool]:
        hit = closures.get(cls)
        if hit is not None:
            return hit
        moves: list[tuple[str, Optional[str]]] = []
        accepting = False
        stack = [cls]
        visited = {cls}
        while stack:
            cur = stack.pop()
            prod = spec.productions[cur]
            if isinstance(prod, Epsilon):
                accepting = True
            elif isinstance(prod, AtomRef):
                moves.append((prod.atom, None))
            elif isinstance(prod, Union):
                for ref in (prod.left.name, prod.right.name):
                    if ref not in visited:
                        visited.add(ref)
                        stack.append(ref)
            else:  # product with atom left factor
                atom = spec.productions[prod.left.name].atom
                moves.append((atom, prod.right.name))
        result = (moves, accepting)
        closures[cls] = result
        return result

    states: list[str] = [spec.axiom]
    seen = {spec.axiom}
    i = 0
    needs_accept_state = False
    while i < len(states):
        moves, _ = closure(states[i])
        for _, target in moves:
            if target is None:
                needs_accept_state = True
            elif target not in seen:
                seen.add(target)
                states.append(target)
        i += 1
    if needs_accept_state:
        states.append(_ACCEPT_STATE)

    idx = {s: k for k, s in enumerate(states)}
    transitions: dict[tuple[int, int], list[str]] = {}
    accepting = set()
    for s in states:
        if s == _ACCEPT_STATE:
            accepting.add(idx[s])
            continue
        moves, acc = closure(s)
        if acc:
            accepting.add(idx[s])
        for atom, target in moves:
            j = idx[_ACCEPT_STATE] if target is None else idx[target]
            transitions.setdefault((idx[s], j), []).append(atom)
    return TransferDescription(
        states=tuple(states),
        transitions={k: tuple(sorted(v)) for k, v in transitions.items()},
        accepting=frozenset(accepting),
        atoms=spec.atoms,
    )
