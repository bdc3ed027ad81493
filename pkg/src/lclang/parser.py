"""Concrete syntax: lexer, parser, and pretty printer.

Grammar summary (terms):

    m ::= x | * | top | \\x. m | m m | <m, m> | m @ m | m ++ m | s . m
        | let * = m in m | let x @ y = m in m
        | proj1(m, x. m) | proj2(m, x. m)
        | inl m | inr m | case m of { inl x -> m ; inr y -> m }
        | abort(m) | B(m) | tau(m) | (m)

Scalars are decimal literals with an optional ``i`` suffix, closed under
``+ - * /`` and ``sqrt(...)``, evaluated at parse time.  Application binds
tightest and associates left; then ``.`` scaling, then ``@``, then ``++``.
Types use ``-o`` (right associative, loosest), ``+``, ``*``, ``&`` and the
atoms ``top``, ``1``, ``0``, ``qubit`` and ``B(P)``.

A program is a sequence of ``pure def n : P = m`` / ``mixed def n : P = m``
entries; name references are expanded at their use sites, so every stored
body is closed.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .syntax import (
    Abort, App, Box, Boxed, Case, Coerce, Fragment, Inl, Inr, Lam, LetStar,
    LetTens, Lolli, One, Pair, Plus, Proj, Proposition, QUBIT, Scale,
    SourceSpan, Star, Sum, Tens, Tensor, Term, Top, TopIntro, Var, With,
    Zero, annotate_with_type, free_vars,
)

KEYWORDS = {
    "pure", "mixed", "def", "let", "in", "case", "of", "inl", "inr",
    "proj1", "proj2", "abort", "B", "tau", "top", "qubit", "sqrt",
}


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span.file}:{span.line}:{span.col}: {message}")
        self.message = message
        self.span = span

    def to_json(self) -> dict:
        return {"rule": "syntax", "span": self.span.to_json(), "message": self.message}


@dataclass(frozen=True)
class _Tok:
    kind: str   # ident, keyword, number, punct, eof
    text: str
    value: float | None
    line: int
    col: int


_PUNCT = [
    "++", "-o", "->", "@", ".", ",", ":", ";", "=", "(", ")", "<", ">",
    "{", "}", "\\", "&", "*", "+", "-", "/",
]


def _lex(src: str, filename: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, col, i = 1, 1, 0
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and src[i] != "\n":
                i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            if j < n and src[j] == "." and j + 1 < n and src[j + 1].isdigit():
                j += 1
                while j < n and src[j].isdigit():
                    j += 1
            text = src[i:j]
            kind = "number"
            if j < n and src[j] == "i" and not (
                j + 1 < n and (src[j + 1].isalnum() or src[j + 1] in "_'")
            ):
                j += 1
                kind = "imag"
            toks.append(_Tok(kind, src[i:j], float(text), line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] in "_'"):
                j += 1
            text = src[i:j]
            kind = "keyword" if text in KEYWORDS else "ident"
            toks.append(_Tok(kind, text, None, line, col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if src.startswith(p, i):
                toks.append(_Tok("punct", p, None, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise ParseError(
                f"unexpected character {c!r}",
                SourceSpan(filename, line, col, line, col + 1),
            )
    toks.append(_Tok("eof", "", None, line, col))
    return toks


class _Parser:
    def __init__(self, src: str, filename: str = "<string>",
                 defs: dict[str, tuple[Fragment, Proposition, Term]] | None = None,
                 current_def: str | None = None):
        self.toks = _lex(src, filename)
        self.pos = 0
        self.filename = filename
        self.defs = defs if defs is not None else {}
        self.current_def = current_def

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> _Tok:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def expect(self, kind: str, text: str | None = None) -> _Tok:
        if not self.at(kind, text):
            want = text or kind
            got = self.peek().text or self.peek().kind
            raise self.error(f"expected {want!r}, found {got!r}")
        return self.next()

    def error(self, message: str) -> ParseError:
        t = self.peek()
        end_col = t.col + max(1, len(t.text))
        return ParseError(message, SourceSpan(self.filename, t.line, t.col, t.line, end_col))

    def span_from(self, tok: _Tok) -> SourceSpan:
        prev = self.toks[max(0, self.pos - 1)]
        return SourceSpan(self.filename, tok.line, tok.col,
                          prev.line, prev.col + max(1, len(prev.text)))

    # -- propositions ------------------------------------------------------

    def parse_prop(self, fragment: Fragment) -> Proposition:
        return self._prop_lolli(fragment)

    def _prop_lolli(self, f: Fragment) -> Proposition:
        left = self._prop_plus(f)
        if self.at("punct", "-o"):
            self.next()
            right = self._prop_lolli(f)
            return Lolli(left, right)
        return left

    def _prop_plus(self, f: Fragment) -> Proposition:
        left = self._prop_tensor(f)
        if self.at("punct", "+"):
            tok = self.next()
            if f is not Fragment.MIXED:
                raise ParseError("'+' types are mixed only",
                                 self.span_from(tok))
            right = self._prop_plus(f)
            return Plus(left, right)
        return left

    def _prop_tensor(self, f: Fragment) -> Proposition:
        left = self._prop_with(f)
        if self.at("punct", "*"):
            self.next()
            right = self._prop_tensor(f)
            return Tensor(left, right)
        return left

    def _prop_with(self, f: Fragment) -> Proposition:
        left = self._prop_atom(f)
        if self.at("punct", "&"):
            tok = self.next()
            if f is not Fragment.PURE:
                raise ParseError("'&' types are pure only", self.span_from(tok))
            right = self._prop_with(f)
            return With(left, right)
        return left

    def _prop_atom(self, f: Fragment) -> Proposition:
        t = self.peek()
        if self.at("punct", "("):
            self.next()
            p = self.parse_prop(f)
            self.expect("punct", ")")
            return p
        if self.at("keyword", "top"):
            self.next()
            if f is not Fragment.PURE:
                raise ParseError("'top' is pure only", self.span_from(t))
            return Top()
        if self.at("keyword", "qubit"):
            self.next()
            if f is not Fragment.PURE:
                raise ParseError("'qubit' is pure only", self.span_from(t))
            return QUBIT
        if self.at("keyword", "B"):
            self.next()
            if f is not Fragment.MIXED:
                raise ParseError("'B' types are mixed only", self.span_from(t))
            self.expect("punct", "(")
            inner = self.parse_prop(Fragment.PURE)
            self.expect("punct", ")")
            return Boxed(inner)
        if self.at("number"):
            tok = self.next()
            if tok.text == "1":
                return One(f)
            if tok.text == "0":
                if f is not Fragment.MIXED:
                    raise ParseError("'0' is mixed only", self.span_from(tok))
                return Zero()
            raise ParseError(f"not a type: {tok.text!r}", self.span_from(tok))
        raise self.error("expected a type")

    # -- scalars -----------------------------------------------------------

    def _try_scalar_scale(self, f: Fragment) -> Term | None:
        """Attempt ``scalar . term``; roll back if it does not fit."""
        t = self.peek()
        if not (t.kind in ("number", "imag")
                or (t.kind == "keyword" and t.text == "sqrt")
                or (t.kind == "punct" and t.text in ("(", "-"))):
            return None
        save = self.pos
        try:
            value = self._scalar_expr()
            dot = self.expect("punct", ".")
        except ParseError:
            self.pos = save
            return None
        body = self._term_scale(f)
        if f is Fragment.MIXED and (value.imag != 0.0 or value.real < 0.0):
            raise ParseError(
                f"mixed scalar must be a nonnegative real, got {_fmt_scalar(value)}",
                self.span_from(t))
        return Scale(value, body, span=self.span_from(t))

    def _scalar_expr(self) -> complex:
        value = self._scalar_mul()
        while self.at("punct", "+") or self.at("punct", "-"):
            op = self.next().text
            rhs = self._scalar_mul()
            value = value + rhs if op == "+" else value - rhs
        return value

    def _scalar_mul(self) -> complex:
        value = self._scalar_atom()
        while self.at("punct", "*") or self.at("punct", "/"):
            op = self.next().text
            rhs = self._scalar_atom()
            if op == "/":
                if rhs == 0:
                    raise self.error("division by zero in scalar")
                value = value / rhs
            else:
                value = value * rhs
        return value

    def _scalar_atom(self) -> complex:
        if self.at("punct", "-"):
            self.next()
            return -self._scalar_atom()
        if self.at("punct", "("):
            self.next()
            v = self._scalar_expr()
            self.expect("punct", ")")
            return v
        if self.at("keyword", "sqrt"):
            self.next()
            self.expect("punct", "(")
            v = self._scalar_expr()
            self.expect("punct", ")")
            if v.imag == 0:
                return complex(math.sqrt(v.real)) if v.real >= 0 else cmath.sqrt(v)
            return cmath.sqrt(v)
        if self.at("number"):
            return complex(self.next().value)
        if self.at("imag"):
            return complex(0.0, self.next().value)
        raise self.error("expected a scalar")

    # -- terms -------------------------------------------------------------

    def parse_term(self, fragment: Fragment, bound: frozenset[str] = frozenset()) -> Term:
        self._bound = set(bound)
        return self._term(fragment)

    def _term(self, f: Fragment) -> Term:
        return self._term_sum(f)

    def _term_sum(self, f: Fragment) -> Term:
        left = self._term_tensor(f)
        while self.at("punct", "++"):
            self.next()
            right = self._term_tensor(f)
            left = Sum(left, right)
        return left

    def _term_tensor(self, f: Fragment) -> Term:
        left = self._term_scale(f)
        if self.at("punct", "@"):
            self.next()
            right = self._term_tensor(f)
            return Tens(left, right)
        return left

    def _term_scale(self, f: Fragment) -> Term:
        scaled = self._try_scalar_scale(f)
        if scaled is not None:
            return scaled
        return self._term_app(f)

    def _term_app(self, f: Fragment) -> Term:
        t = self._term_atom(f)
        while self._starts_atom():
            arg = self._term_atom(f)
            t = App(t, arg)
        return t

    def _starts_atom(self) -> bool:
        t = self.peek()
        if t.kind == "ident":
            return True
        if t.kind == "punct" and t.text in ("(", "<", "\\"):
            return True
        if t.kind == "keyword" and t.text in (
            "let", "case", "inl", "inr", "proj1", "proj2", "abort", "B",
            "tau", "top",
        ):
            return True
        if t.kind == "punct" and t.text == "*":
            return True
        return False

    def _bind(self, name: str):
        self._bound.add(name)

    def _unbind(self, name: str, was_bound: bool):
        if not was_bound:
            self._bound.discard(name)

    def _binder(self) -> str:
        tok = self.expect("ident")
        return tok.text

    def _term_atom(self, f: Fragment) -> Term:
        t = self.peek()
        span_start = t

        if self.at("punct", "("):
            self.next()
            inner = self._term(f)
            self.expect("punct", ")")
            return inner

        if self.at("punct", "*"):
            self.next()
            return Star(f, span=self.span_from(span_start))

        if self.at("keyword", "top"):
            self.next()
            if f is not Fragment.PURE:
                raise ParseError("'top' is pure only", self.span_from(span_start))
            return TopIntro(span=self.span_from(span_start))

        if self.at("punct", "\\"):
            self.next()
            x = self._binder()
            self.expect("punct", ".")
            was = x in self._bound
            self._bind(x)
            body = self._term(f)
            self._unbind(x, was)
            return Lam(x, body, span=self.span_from(span_start))

        if self.at("punct", "<"):
            self.next()
            if f is not Fragment.PURE:
                raise ParseError("additive pairs are pure only", self.span_from(span_start))
            left = self._term(f)
            self.expect("punct", ",")
            right = self._term(f)
            self.expect("punct", ">")
            return Pair(left, right, span=self.span_from(span_start))

        if self.at("keyword", "let"):
            self.next()
            if self.at("punct", "*"):
                self.next()
                self.expect("punct", "=")
                arg = self._term(f)
                self.expect("keyword", "in")
                body = self._term(f)
                return LetStar(arg, body, span=self.span_from(span_start))
            x = self._binder()
            self.expect("punct", "@")
            y = self._binder()
            if x == y:
                raise ParseError(f"duplicate binder {x!r} in let",
                                 self.span_from(span_start))
            self.expect("punct", "=")
            arg = self._term(f)
            self.expect("keyword", "in")
            wx, wy = x in self._bound, y in self._bound
            self._bind(x)
            self._bind(y)
            body = self._term(f)
            self._unbind(y, wy)
            self._unbind(x, wx)
            return LetTens(arg, x, y, body, span=self.span_from(span_start))

        if self.at("keyword", "proj1") or self.at("keyword", "proj2"):
            ix = 1 if self.next().text == "proj1" else 2
            if f is not Fragment.PURE:
                raise ParseError("projections are pure only", self.span_from(span_start))
            self.expect("punct", "(")
            pair = self._term(f)
            self.expect("punct", ",")
            x = self._binder()
            self.expect("punct", ".")
            was = x in self._bound
            self._bind(x)
            body = self._term(f)
            self._unbind(x, was)
            self.expect("punct", ")")
            return Proj(ix, pair, x, body, span=self.span_from(span_start))

        if self.at("keyword", "inl") or self.at("keyword", "inr"):
            which = self.next().text
            if f is not Fragment.MIXED:
                raise ParseError(f"'{which}' is mixed only", self.span_from(span_start))
            body = self._term_atom(f)
            cls = Inl if which == "inl" else Inr
            return cls(body, span=self.span_from(span_start))

        if self.at("keyword", "case"):
            self.next()
            if f is not Fragment.MIXED:
                raise ParseError("'case' is mixed only", self.span_from(span_start))
            scrut = self._term(f)
            self.expect("keyword", "of")
            self.expect("punct", "{")
            self.expect("keyword", "inl")
            lx = self._binder()
            self.expect("punct", "->")
            was = lx in self._bound
            self._bind(lx)
            lbody = self._term(f)
            self._unbind(lx, was)
            self.expect("punct", ";")
            self.expect("keyword", "inr")
            rx = self._binder()
            self.expect("punct", "->")
            was = rx in self._bound
            self._bind(rx)
            rbody = self._term(f)
            self._unbind(rx, was)
            self.expect("punct", "}")
            return Case(scrut, lx, lbody, rx, rbody, span=self.span_from(span_start))

        if self.at("keyword", "abort"):
            self.next()
            if f is not Fragment.MIXED:
                raise ParseError("'abort' is mixed only", self.span_from(span_start))
            self.expect("punct", "(")
            arg = self._term(f)
            self.expect("punct", ")")
            return Abort(arg, span=self.span_from(span_start))

        if self.at("keyword", "B"):
            self.next()
            if f is not Fragment.MIXED:
                raise ParseError("'B' terms are mixed only", self.span_from(span_start))
            self.expect("punct", "(")
            body = self._term(Fragment.PURE)
            self.expect("punct", ")")
            return Box(body, span=self.span_from(span_start))

        if self.at("keyword", "tau"):
            self.next()
            if f is not Fragment.MIXED:
                raise ParseError("'tau' is mixed only", self.span_from(span_start))
            self.expect("punct", "(")
            body = self._term(f)
            self.expect("punct", ")")
            return Coerce(body, span=self.span_from(span_start))

        if self.at("ident"):
            tok = self.next()
            name = tok.text
            if name in self._bound:
                return Var(name, f, span=self.span_from(span_start))
            if name in self.defs:
                dfrag, _, body = self.defs[name]
                if dfrag is not f:
                    raise ParseError(
                        f"{name!r} is a {dfrag} definition used in a {f} position",
                        self.span_from(span_start))
                return body
            if name == self.current_def:
                raise ParseError(f"recursive definition of {name!r}",
                                 self.span_from(span_start))
            # Free variable: legal in bare term parsing, checked later.
            return Var(name, f, span=self.span_from(span_start))

        raise self.error("expected a term")

    # -- programs ----------------------------------------------------------

    def parse_program(self) -> "Program":
        defs: list[Definition] = []
        by_name: dict[str, tuple[Fragment, Proposition, Term]] = dict(self.defs)
        while not self.at("eof"):
            start = self.peek()
            if not (self.at("keyword", "pure") or self.at("keyword", "mixed")):
                raise self.error("expected 'pure def' or 'mixed def'")
            frag = Fragment.PURE if self.next().text == "pure" else Fragment.MIXED
            self.expect("keyword", "def")
            name_tok = self.expect("ident")
            name = name_tok.text
            if name in by_name:
                raise ParseError(f"duplicate definition of {name!r}",
                                 self.span_from(name_tok))
            self.expect("punct", ":")
            prop = self.parse_prop(frag)
            self.expect("punct", "=")
            saved_defs, saved_current = self.defs, self.current_def
            self.defs, self.current_def = by_name, name
            self._bound = set()
            body = self._term(frag)
            self.defs, self.current_def = saved_defs, saved_current
            fv = free_vars(body)
            if fv:
                raise ParseError(
                    f"definition {name!r} has undefined names: "
                    + ", ".join(sorted(fv)),
                    self.span_from(name_tok))
            # Annotate the body spine with the declared type so that inlined
            # higher-order definitions stay synthesizable.
            body = annotate_with_type(body, prop)
            span = SourceSpan(self.filename, start.line, start.col,
                              self.peek().line, self.peek().col)
            defn = Definition(name, frag, prop, body, span)
            defs.append(defn)
            by_name[name] = (frag, prop, body)
        return Program(tuple(defs))


@dataclass(frozen=True)
class Definition:
    name: str
    fragment: Fragment
    prop: Proposition
    body: Term          # closed after expansion
    span: SourceSpan


@dataclass(frozen=True)
class Program:
    definitions: tuple[Definition, ...]

    def get(self, name: str) -> Definition:
        for d in self.definitions:
            if d.name == name:
                return d
        raise KeyError(name)

    def names(self) -> list[str]:
        return [d.name for d in self.definitions]

    def as_env(self) -> dict[str, tuple[Fragment, Proposition, Term]]:
        return {d.name: (d.fragment, d.prop, d.body) for d in self.definitions}


def parse_term(src: str, fragment: Fragment, filename: str = "<string>",
               defs: dict[str, tuple[Fragment, Proposition, Term]] | None = None) -> Term:
    p = _Parser(src, filename, defs=defs)
    p._bound = set()
    t = p._term(fragment)
    p.expect("eof")
    return t


def parse_prop(src: str, fragment: Fragment, filename: str = "<string>") -> Proposition:
    p = _Parser(src, filename)
    prop = p.parse_prop(fragment)
    p.expect("eof")
    return prop


def parse_program(src: str, filename: str = "<string>",
                  prelude: "Program | None" = None) -> Program:
    defs = prelude.as_env() if prelude is not None else {}
    p = _Parser(src, filename, defs=defs)
    return p.parse_program()


# ---------------------------------------------------------------------------
# Pretty printing
# ---------------------------------------------------------------------------


def _fmt_float(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _fmt_scalar(c: complex) -> str:
    re, im = c.real, c.imag
    if im == 0.0:
        return _fmt_float(re)
    if re == 0.0:
        return f"{_fmt_float(im)}i"
    op = "+" if im > 0 else "-"
    return f"({_fmt_float(re)}{op}{_fmt_float(abs(im))}i)"


def pretty_prop(p: Proposition) -> str:
    # Precedence levels: -o 0, + 1, * 2, & 3, atom 4.
    def go(p: Proposition, level: int) -> str:
        match p:
            case Top():
                s, mine = "top", 4
            case One(_):
                s, mine = "1", 4
            case Zero():
                s, mine = "0", 4
            case With(One(_), One(_)):
                s, mine = "qubit", 4
            case Lolli(d, c):
                s, mine = f"{go(d, 1)} -o {go(c, 0)}", 0
            case Plus(l, r):
                s, mine = f"{go(l, 2)} + {go(r, 1)}", 1
            case Tensor(l, r):
                s, mine = f"{go(l, 3)} * {go(r, 2)}", 2
            case With(l, r):
                s, mine = f"{go(l, 4)} & {go(r, 3)}", 3
            case Boxed(inner):
                s, mine = f"B({go(inner, 0)})", 4
            case _:
                raise TypeError(f"not a proposition: {p!r}")
        return f"({s})" if mine < level else s

    return go(p, 0)


def pretty(t: Term) -> str:
    # Precedence levels: lambda/let 0, ++ 1, @ 2, scale 3, app 4, atom 5.
    def go(t: Term, level: int) -> str:
        match t:
            case Var(x, _):
                s, mine = x, 5
            case Star(_):
                s, mine = "*", 5
            case TopIntro():
                s, mine = "top", 5
            case Lam(x, m):
                s, mine = f"\\{x}. {go(m, 0)}", 0
            case LetStar(a, b):
                s, mine = f"let * = {go(a, 1)} in {go(b, 0)}", 0
            case LetTens(a, x, y, b):
                s, mine = f"let {x} @ {y} = {go(a, 1)} in {go(b, 0)}", 0
            case Sum(l, r):
                s, mine = f"{go(l, 1)} ++ {go(r, 2)}", 1
            case Tens(l, r):
                s, mine = f"{go(l, 3)} @ {go(r, 2)}", 2
            case Scale(c, m):
                s, mine = f"{_fmt_scalar(c)} . {go(m, 3)}", 3
            case App(f, a):
                s, mine = f"{go(f, 4)} {go(a, 5)}", 4
            case Pair(l, r):
                s, mine = f"<{go(l, 0)}, {go(r, 0)}>", 5
            case Proj(ix, p, x, b):
                s, mine = f"proj{ix}({go(p, 0)}, {x}. {go(b, 0)})", 5
            case Inl(m):
                s, mine = f"inl {go(m, 5)}", 4
            case Inr(m):
                s, mine = f"inr {go(m, 5)}", 4
            case Case(sc, lx, lb, rx, rb):
                s = (f"case {go(sc, 1)} of {{ inl {lx} -> {go(lb, 1)} ; "
                     f"inr {rx} -> {go(rb, 1)} }}")
                mine = 5
            case Abort(m):
                s, mine = f"abort({go(m, 0)})", 5
            case Box(m):
                s, mine = f"B({go(m, 0)})", 5
            case Coerce(m):
                s, mine = f"tau({go(m, 0)})", 5
            case _:
                raise TypeError(f"not a term: {t!r}")
        return f"({s})" if mine < level else s

    return go(t, 0)


def pretty_definition(d: Definition) -> str:
    return f"{d.fragment} def {d.name} : {pretty_prop(d.prop)} = {pretty(d.body)}"


def pretty_program(p: Program) -> str:
    return "\n".join(pretty_definition(d) for d in p.definitions) + "\n"
