"""Abstract syntax for the two-fragment linear lambda calculus.

The language has a pure fragment (complex scalars, additive pairs) and a
mixed fragment (nonnegative real scalars, coproducts, and a boxing modality
that embeds closed pure terms).  Terms carry string binders; alpha-equality
and the canonical summand order work on a de Bruijn view computed on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Iterator, Optional, Union


class Fragment(Enum):
    PURE = "pure"
    MIXED = "mixed"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    col: int
    end_line: int
    end_col: int

    def to_json(self) -> dict:
        return {
            "file": self.file,
            "line": self.line,
            "col": self.col,
            "end_line": self.end_line,
            "end_col": self.end_col,
        }


# ---------------------------------------------------------------------------
# Propositions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Top:
    """Additive truth; pure only, interpreted by the zero space."""

    @property
    def fragment(self) -> Fragment:
        return Fragment.PURE


@dataclass(frozen=True)
class One:
    """Multiplicative unit, available in both fragments."""

    fragment: Fragment


@dataclass(frozen=True)
class Zero:
    """Additive falsity; mixed only."""

    @property
    def fragment(self) -> Fragment:
        return Fragment.MIXED


@dataclass(frozen=True)
class Lolli:
    dom: "Proposition"
    cod: "Proposition"

    def __post_init__(self) -> None:
        if self.dom.fragment is not self.cod.fragment:
            raise ValueError("function type mixes fragments")

    @property
    def fragment(self) -> Fragment:
        return self.dom.fragment


@dataclass(frozen=True)
class With:
    """Additive conjunction; pure only."""

    left: "Proposition"
    right: "Proposition"

    def __post_init__(self) -> None:
        if self.left.fragment is not Fragment.PURE or self.right.fragment is not Fragment.PURE:
            raise ValueError("additive pair type must be pure")

    @property
    def fragment(self) -> Fragment:
        return Fragment.PURE


@dataclass(frozen=True)
class Plus:
    """Additive disjunction; mixed only."""

    left: "Proposition"
    right: "Proposition"

    def __post_init__(self) -> None:
        if self.left.fragment is not Fragment.MIXED or self.right.fragment is not Fragment.MIXED:
            raise ValueError("sum type must be mixed")

    @property
    def fragment(self) -> Fragment:
        return Fragment.MIXED


@dataclass(frozen=True)
class Tensor:
    left: "Proposition"
    right: "Proposition"

    def __post_init__(self) -> None:
        if self.left.fragment is not self.right.fragment:
            raise ValueError("tensor type mixes fragments")

    @property
    def fragment(self) -> Fragment:
        return self.left.fragment


@dataclass(frozen=True)
class Boxed:
    """Mixed-fragment view of a closed pure proposition."""

    inner: "Proposition"

    def __post_init__(self) -> None:
        if self.inner.fragment is not Fragment.PURE:
            raise ValueError("boxed type needs a pure inner proposition")

    @property
    def fragment(self) -> Fragment:
        return Fragment.MIXED


Proposition = Union[Top, One, Zero, Lolli, With, Plus, Tensor, Boxed]

QUBIT = With(One(Fragment.PURE), One(Fragment.PURE))


def erase_modalities(p: Proposition):
    """Strip boxes and fragment tags, leaving a bare connective tree."""
    match p:
        case Top():
            return ("top",)
        case One(_):
            return ("one",)
        case Zero():
            return ("zero",)
        case Lolli(d, c):
            return ("lolli", erase_modalities(d), erase_modalities(c))
        case With(l, r):
            return ("with", erase_modalities(l), erase_modalities(r))
        case Plus(l, r):
            return ("plus", erase_modalities(l), erase_modalities(r))
        case Tensor(l, r):
            return ("tensor", erase_modalities(l), erase_modalities(r))
        case Boxed(inner):
            return erase_modalities(inner)
    raise TypeError(f"not a proposition: {p!r}")


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Node:
    span: Optional[SourceSpan] = field(
        default=None, compare=False, repr=False, kw_only=True
    )


@dataclass(frozen=True)
class Var(_Node):
    name: str
    fragment: Fragment


@dataclass(frozen=True)
class Sum(_Node):
    left: "Term"
    right: "Term"

    def __post_init__(self) -> None:
        if self.left.fragment is not self.right.fragment:
            raise ValueError("sum mixes fragments")

    @property
    def fragment(self) -> Fragment:
        return self.left.fragment


@dataclass(frozen=True)
class Scale(_Node):
    coeff: complex
    body: "Term"

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeff", complex(self.coeff))
        if self.body.fragment is Fragment.MIXED:
            if self.coeff.imag != 0.0 or self.coeff.real < 0.0:
                raise ValueError(
                    f"mixed scalar must be a nonnegative real, got {self.coeff}"
                )

    @property
    def fragment(self) -> Fragment:
        return self.body.fragment


@dataclass(frozen=True)
class TopIntro(_Node):
    @property
    def fragment(self) -> Fragment:
        return Fragment.PURE


@dataclass(frozen=True)
class Star(_Node):
    fragment: Fragment


@dataclass(frozen=True)
class LetStar(_Node):
    """Eliminate a unit: ``let * = arg in body``."""

    arg: "Term"
    body: "Term"

    def __post_init__(self) -> None:
        if self.arg.fragment is not self.body.fragment:
            raise ValueError("unit elimination mixes fragments")

    @property
    def fragment(self) -> Fragment:
        return self.body.fragment


@dataclass(frozen=True)
class Lam(_Node):
    var: str
    body: "Term"
    # Optional domain annotation, filled in by type-checking elaboration so
    # that reduction intermediates stay synthesizable; invisible to equality.
    ann: Optional[Prop] = field(default=None, compare=False, repr=False, kw_only=True)

    @property
    def fragment(self) -> Fragment:
        return self.body.fragment


@dataclass(frozen=True)
class App(_Node):
    fun: "Term"
    arg: "Term"

    def __post_init__(self) -> None:
        if self.fun.fragment is not self.arg.fragment:
            raise ValueError("application mixes fragments")

    @property
    def fragment(self) -> Fragment:
        return self.fun.fragment


@dataclass(frozen=True)
class Pair(_Node):
    """Additive pair; pure only."""

    left: "Term"
    right: "Term"

    def __post_init__(self) -> None:
        if self.left.fragment is not Fragment.PURE or self.right.fragment is not Fragment.PURE:
            raise ValueError("additive pair must be pure")

    @property
    def fragment(self) -> Fragment:
        return Fragment.PURE


@dataclass(frozen=True)
class Proj(_Node):
    """Eliminate an additive pair: ``projI(pair, var. body)``."""

    index: int
    pair: "Term"
    var: str
    body: "Term"

    def __post_init__(self) -> None:
        if self.index not in (1, 2):
            raise ValueError("projection index must be 1 or 2")
        if self.pair.fragment is not Fragment.PURE or self.body.fragment is not Fragment.PURE:
            raise ValueError("projection must be pure")

    @property
    def fragment(self) -> Fragment:
        return Fragment.PURE


@dataclass(frozen=True)
class Inl(_Node):
    body: "Term"
    # Optional annotation with the full sum proposition (same role as Lam.ann).
    ann: Optional[Prop] = field(default=None, compare=False, repr=False, kw_only=True)

    def __post_init__(self) -> None:
        if self.body.fragment is not Fragment.MIXED:
            raise ValueError("injection must be mixed")

    @property
    def fragment(self) -> Fragment:
        return Fragment.MIXED


@dataclass(frozen=True)
class Inr(_Node):
    body: "Term"
    ann: Optional[Prop] = field(default=None, compare=False, repr=False, kw_only=True)

    def __post_init__(self) -> None:
        if self.body.fragment is not Fragment.MIXED:
            raise ValueError("injection must be mixed")

    @property
    def fragment(self) -> Fragment:
        return Fragment.MIXED


@dataclass(frozen=True)
class Case(_Node):
    scrutinee: "Term"
    lvar: str
    lbody: "Term"
    rvar: str
    rbody: "Term"

    def __post_init__(self) -> None:
        for t in (self.scrutinee, self.lbody, self.rbody):
            if t.fragment is not Fragment.MIXED:
                raise ValueError("case must be mixed")

    @property
    def fragment(self) -> Fragment:
        return Fragment.MIXED


@dataclass(frozen=True)
class Tens(_Node):
    left: "Term"
    right: "Term"

    def __post_init__(self) -> None:
        if self.left.fragment is not self.right.fragment:
            raise ValueError("tensor mixes fragments")

    @property
    def fragment(self) -> Fragment:
        return self.left.fragment


@dataclass(frozen=True)
class LetTens(_Node):
    """Eliminate a tensor: ``let lvar @ rvar = arg in body``."""

    arg: "Term"
    lvar: str
    rvar: str
    body: "Term"

    def __post_init__(self) -> None:
        if self.arg.fragment is not self.body.fragment:
            raise ValueError("tensor elimination mixes fragments")

    @property
    def fragment(self) -> Fragment:
        return self.body.fragment


@dataclass(frozen=True)
class Abort(_Node):
    """Eliminate additive falsity; mixed only."""

    arg: "Term"
    # Optional annotation with the result proposition (same role as Lam.ann).
    ann: Optional[Prop] = field(default=None, compare=False, repr=False, kw_only=True)

    def __post_init__(self) -> None:
        if self.arg.fragment is not Fragment.MIXED:
            raise ValueError("abort must be mixed")

    @property
    def fragment(self) -> Fragment:
        return Fragment.MIXED


@dataclass(frozen=True)
class Box(_Node):
    """Embed a closed pure term into the mixed fragment."""

    body: "Term"

    def __post_init__(self) -> None:
        if self.body.fragment is not Fragment.PURE:
            raise ValueError("box needs a pure body")

    @property
    def fragment(self) -> Fragment:
        return Fragment.MIXED


@dataclass(frozen=True)
class Coerce(_Node):
    """Turn a tensor of boxes into a box of a tensor."""

    body: "Term"

    def __post_init__(self) -> None:
        if self.body.fragment is not Fragment.MIXED:
            raise ValueError("coercion must be mixed")

    @property
    def fragment(self) -> Fragment:
        return Fragment.MIXED


Term = Union[
    Var, Sum, Scale, TopIntro, Star, LetStar, Lam, App, Pair, Proj,
    Inl, Inr, Case, Tens, LetTens, Abort, Box, Coerce,
]


# ---------------------------------------------------------------------------
# Generic traversal
# ---------------------------------------------------------------------------


def subterms(t: Term) -> tuple[Term, ...]:
    """Immediate children in a fixed order (binder bodies included)."""
    match t:
        case Var() | TopIntro() | Star():
            return ()
        case Sum(l, r) | Pair(l, r) | Tens(l, r):
            return (l, r)
        case Scale(_, m) | Lam(_, m) | Inl(m) | Inr(m) | Abort(m) | Box(m) | Coerce(m):
            return (m,)
        case LetStar(a, b):
            return (a, b)
        case App(f, a):
            return (f, a)
        case Proj(_, p, _, b):
            return (p, b)
        case Case(s, _, lb, _, rb):
            return (s, lb, rb)
        case LetTens(a, _, _, b):
            return (a, b)
    raise TypeError(f"not a term: {t!r}")


def replace_subterm(t: Term, i: int, new: Term) -> Term:
    """Rebuild ``t`` with child ``i`` replaced (spans dropped)."""
    match t, i:
        case (Sum(_, r), 0):
            return Sum(new, r)
        case (Sum(l, _), 1):
            return Sum(l, new)
        case (Scale(c, _), 0):
            return Scale(c, new)
        case (LetStar(_, b), 0):
            return LetStar(new, b)
        case (LetStar(a, _), 1):
            return LetStar(a, new)
        case (Lam(x, _), 0):
            return Lam(x, new, ann=t.ann)
        case (App(_, a), 0):
            return App(new, a)
        case (App(f, _), 1):
            return App(f, new)
        case (Pair(_, r), 0):
            return Pair(new, r)
        case (Pair(l, _), 1):
            return Pair(l, new)
        case (Proj(ix, _, x, b), 0):
            return Proj(ix, new, x, b)
        case (Proj(ix, p, x, _), 1):
            return Proj(ix, p, x, new)
        case (Inl(_), 0):
            return Inl(new, ann=t.ann)
        case (Inr(_), 0):
            return Inr(new, ann=t.ann)
        case (Case(_, lx, lb, rx, rb), 0):
            return Case(new, lx, lb, rx, rb)
        case (Case(s, lx, _, rx, rb), 1):
            return Case(s, lx, new, rx, rb)
        case (Case(s, lx, lb, rx, _), 2):
            return Case(s, lx, lb, rx, new)
        case (Tens(_, r), 0):
            return Tens(new, r)
        case (Tens(l, _), 1):
            return Tens(l, new)
        case (LetTens(_, x, y, b), 0):
            return LetTens(new, x, y, b)
        case (LetTens(a, x, y, _), 1):
            return LetTens(a, x, y, new)
        case (Abort(_), 0):
            return Abort(new, ann=t.ann)
        case (Box(_), 0):
            return Box(new)
        case (Coerce(_), 0):
            return Coerce(new)
    raise IndexError(f"no child {i} in {type(t).__name__}")


def at_path(t: Term, path: tuple[int, ...]) -> Term:
    for i in path:
        t = subterms(t)[i]
    return t


def replace_at_path(t: Term, path: tuple[int, ...], new: Term) -> Term:
    if not path:
        return new
    child = subterms(t)[path[0]]
    return replace_subterm(t, path[0], replace_at_path(child, path[1:], new))


# ---------------------------------------------------------------------------
# Free variables, alpha equality, substitution
# ---------------------------------------------------------------------------


def free_vars(t: Term) -> frozenset[str]:
    match t:
        case Var(x, _):
            return frozenset((x,))
        case TopIntro() | Star():
            return frozenset()
        case Lam(x, m):
            return free_vars(m) - {x}
        case Proj(_, p, x, b):
            return free_vars(p) | (free_vars(b) - {x})
        case Case(s, lx, lb, rx, rb):
            return free_vars(s) | (free_vars(lb) - {lx}) | (free_vars(rb) - {rx})
        case LetTens(a, x, y, b):
            return free_vars(a) | (free_vars(b) - {x, y})
        case _:
            out: frozenset[str] = frozenset()
            for s in subterms(t):
                out |= free_vars(s)
            return out


_TAG = {
    Var: 0, Sum: 1, Scale: 2, TopIntro: 3, Star: 4, LetStar: 5, Lam: 6,
    App: 7, Pair: 8, Proj: 9, Inl: 10, Inr: 11, Case: 12, Tens: 13,
    LetTens: 14, Abort: 15, Box: 16, Coerce: 17,
}


def _scalar_key(c: complex) -> tuple[float, float]:
    # Negated so that larger coefficients sort first in the canonical order.
    return (-c.real, -c.imag)


def debruijn_key(t: Term, bound: dict[str, int] | None = None, depth: int = 0):
    """A comparable tuple tree invariant under alpha-renaming.

    Equal keys mean alpha-equal terms; tuple comparison gives the total
    order used to sort canonical summands.
    """
    if bound is None:
        bound = {}

    def go(t: Term, bound: dict[str, int], depth: int):
        tag = _TAG[type(t)]
        match t:
            case Var(x, frag):
                if x in bound:
                    return (tag, (0, depth - bound[x]), "")
                return (tag, (1, 0), x)
            case Scale(c, m):
                return (tag, _scalar_key(c), go(m, bound, depth))
            case TopIntro():
                return (tag,)
            case Star(frag):
                return (tag, frag.value)
            case Lam(x, m):
                return (tag, go(m, {**bound, x: depth + 1}, depth + 1))
            case Proj(ix, p, x, b):
                return (tag, ix, go(p, bound, depth),
                        go(b, {**bound, x: depth + 1}, depth + 1))
            case Case(s, lx, lb, rx, rb):
                return (tag, go(s, bound, depth),
                        go(lb, {**bound, lx: depth + 1}, depth + 1),
                        go(rb, {**bound, rx: depth + 1}, depth + 1))
            case LetTens(a, x, y, b):
                return (tag, go(a, bound, depth),
                        go(b, {**bound, x: depth + 1, y: depth + 2}, depth + 2))
            case _:
                return (tag, *(go(s, bound, depth) for s in subterms(t)))

    return go(t, bound, depth)


def raw_key(t: Term):
    """Like ``debruijn_key`` but binder names participate, giving a total
    order on syntactically distinct alpha-variants."""
    match t:
        case Var(x, frag):
            return (_TAG[Var], x, frag.value)
        case Scale(c, m):
            return (_TAG[Scale], _scalar_key(c), raw_key(m))
        case TopIntro():
            return (_TAG[TopIntro],)
        case Star(frag):
            return (_TAG[Star], frag.value)
        case Lam(x, m):
            return (_TAG[Lam], x, raw_key(m))
        case Proj(ix, p, x, b):
            return (_TAG[Proj], ix, x, raw_key(p), raw_key(b))
        case Case(s, lx, lb, rx, rb):
            return (_TAG[Case], lx, rx, raw_key(s), raw_key(lb), raw_key(rb))
        case LetTens(a, x, y, b):
            return (_TAG[LetTens], x, y, raw_key(a), raw_key(b))
        case _:
            return (_TAG[type(t)], *(raw_key(s) for s in subterms(t)))


def alpha_eq(t: Term, u: Term) -> bool:
    """Alpha equality; scalar comparison is exact on the stored values."""
    return debruijn_key(t) == debruijn_key(u)


def alpha_eq_approx(t: Term, u: Term, tol: float) -> bool:
    """Alpha equality up to ``tol`` on scalar coefficients."""

    def go(t: Term, u: Term, bt: dict[str, int], bu: dict[str, int], depth: int) -> bool:
        if type(t) is not type(u):
            return False
        match t, u:
            case Var(x, ft), Var(y, fu):
                if ft is not fu:
                    return False
                if (x in bt) != (y in bu):
                    return False
                if x in bt:
                    return bt[x] == bu[y]
                return x == y
            case Scale(c, m), Scale(d, n):
                return abs(c - d) <= tol and go(m, n, bt, bu, depth)
            case Star(ft), Star(fu):
                return ft is fu
            case TopIntro(), TopIntro():
                return True
            case Lam(x, m), Lam(y, n):
                return go(m, n, {**bt, x: depth}, {**bu, y: depth}, depth + 1)
            case Proj(i, p, x, b), Proj(j, q, y, c):
                return i == j and go(p, q, bt, bu, depth) and go(
                    b, c, {**bt, x: depth}, {**bu, y: depth}, depth + 1)
            case Case(s, lx, lb, rx, rb), Case(s2, lx2, lb2, rx2, rb2):
                return (go(s, s2, bt, bu, depth)
                        and go(lb, lb2, {**bt, lx: depth}, {**bu, lx2: depth}, depth + 1)
                        and go(rb, rb2, {**bt, rx: depth}, {**bu, rx2: depth}, depth + 1))
            case LetTens(a, x, y, b), LetTens(a2, x2, y2, b2):
                return go(a, a2, bt, bu, depth) and go(
                    b, b2,
                    {**bt, x: depth, y: depth + 1},
                    {**bu, x2: depth, y2: depth + 1},
                    depth + 2)
            case _:
                ts, us = subterms(t), subterms(u)
                return len(ts) == len(us) and all(
                    go(a, b, bt, bu, depth) for a, b in zip(ts, us))

    return go(t, u, {}, {}, 0)


def fresh_name(base: str, avoid: set[str]) -> str:
    if base not in avoid:
        return base
    stem = base.rstrip("0123456789'")
    if not stem:
        stem = "x"
    n = 1
    while f"{stem}{n}" in avoid:
        n += 1
    return f"{stem}{n}"


def substitute(t: Term, x: str, v: Term) -> Term:
    """Capture-avoiding substitution of ``v`` for free ``x`` in ``t``."""
    fv_v = free_vars(v)

    def go(t: Term) -> Term:
        match t:
            case Var(y, frag):
                if y == x:
                    if v.fragment is not frag:
                        raise ValueError(
                            f"fragment mismatch substituting for {x}: "
                            f"{v.fragment} for {frag}")
                    return v
                return t
            case TopIntro() | Star():
                return t
            case Lam(y, m):
                if y == x:
                    return t
                if y in fv_v and x in free_vars(m):
                    avoid = fv_v | free_vars(m) | {x}
                    ny = fresh_name(y, avoid)
                    m = substitute(m, y, Var(ny, _var_fragment_in(m, y) or m.fragment))
                    return Lam(ny, go(m), ann=t.ann)
                return Lam(y, go(m), ann=t.ann)
            case Proj(ix, p, y, b):
                np_ = go(p)
                if y == x:
                    return Proj(ix, np_, y, b)
                if y in fv_v and x in free_vars(b):
                    avoid = fv_v | free_vars(b) | {x}
                    ny = fresh_name(y, avoid)
                    b = substitute(b, y, Var(ny, _var_fragment_in(b, y) or Fragment.PURE))
                    return Proj(ix, np_, ny, go(b))
                return Proj(ix, np_, y, go(b))
            case Case(s, lx, lb, rx, rb):
                ns = go(s)
                nlx, nlb = _under(lx, lb)
                nrx, nrb = _under(rx, rb)
                return Case(ns, nlx, nlb, nrx, nrb)
            case LetTens(a, y, z, b):
                na = go(a)
                if x in (y, z):
                    return LetTens(na, y, z, b)
                avoid = fv_v | free_vars(b) | {x}
                ny, nz = y, z
                nb = b
                if y in fv_v and x in free_vars(b):
                    ny = fresh_name(y, avoid)
                    nb = substitute(nb, y, Var(ny, _var_fragment_in(nb, y) or b.fragment))
                    avoid = avoid | {ny}
                if z in fv_v and x in free_vars(nb):
                    nz = fresh_name(z, avoid)
                    nb = substitute(nb, z, Var(nz, _var_fragment_in(nb, z) or b.fragment))
                return LetTens(na, ny, nz, go(nb))
            case Sum(l, r):
                return Sum(go(l), go(r))
            case Scale(c, m):
                return Scale(c, go(m))
            case LetStar(a, b):
                return LetStar(go(a), go(b))
            case App(f, a):
                return App(go(f), go(a))
            case Pair(l, r):
                return Pair(go(l), go(r))
            case Inl(m):
                return Inl(go(m), ann=t.ann)
            case Inr(m):
                return Inr(go(m), ann=t.ann)
            case Tens(l, r):
                return Tens(go(l), go(r))
            case Abort(m):
                return Abort(go(m), ann=t.ann)
            case Box(m):
                return Box(go(m))  # closed in well-typed terms; recurse anyway
            case Coerce(m):
                return Coerce(go(m))
        raise TypeError(f"not a term: {t!r}")

    def _under(var: str, body: Term) -> tuple[str, Term]:
        if var == x:
            return var, body
        if var in fv_v and x in free_vars(body):
            avoid = fv_v | free_vars(body) | {x}
            nv = fresh_name(var, avoid)
            body = substitute(body, var, Var(nv, _var_fragment_in(body, var) or body.fragment))
            return nv, go(body)
        return var, go(body)

    return go(t)


def _var_fragment_in(t: Term, name: str) -> Optional[Fragment]:
    match t:
        case Var(x, frag):
            return frag if x == name else None
        case Lam(x, m):
            return None if x == name else _var_fragment_in(m, name)
        case Proj(_, p, x, b):
            got = _var_fragment_in(p, name)
            if got is not None:
                return got
            return None if x == name else _var_fragment_in(b, name)
        case Case(s, lx, lb, rx, rb):
            got = _var_fragment_in(s, name)
            if got is not None:
                return got
            if lx != name:
                got = _var_fragment_in(lb, name)
                if got is not None:
                    return got
            if rx != name:
                return _var_fragment_in(rb, name)
            return None
        case LetTens(a, x, y, b):
            got = _var_fragment_in(a, name)
            if got is not None:
                return got
            if name in (x, y):
                return None
            return _var_fragment_in(b, name)
        case _:
            for s in subterms(t):
                got = _var_fragment_in(s, name)
                if got is not None:
                    return got
            return None


def freshen(t: Term, avoid: set[str] | None = None) -> Term:
    """Rename binders so every bound name is unique and outside ``avoid``."""
    used = set(avoid or ()) | set(free_vars(t))

    def pick(base: str) -> str:
        name = fresh_name(base, used)
        used.add(name)
        return name

    def go(t: Term, ren: dict[str, str]) -> Term:
        match t:
            case Var(x, frag):
                return Var(ren.get(x, x), frag)
            case TopIntro() | Star():
                return t
            case Lam(x, m):
                nx = pick(x)
                return Lam(nx, go(m, {**ren, x: nx}), ann=t.ann)
            case Proj(ix, p, x, b):
                nx = pick(x)
                return Proj(ix, go(p, ren), nx, go(b, {**ren, x: nx}))
            case Case(s, lx, lb, rx, rb):
                nlx, nrx = pick(lx), pick(rx)
                return Case(go(s, ren), nlx, go(lb, {**ren, lx: nlx}),
                            nrx, go(rb, {**ren, rx: nrx}))
            case LetTens(a, x, y, b):
                nx, ny = pick(x), pick(y)
                return LetTens(go(a, ren), nx, ny, go(b, {**ren, x: nx, y: ny}))
            case Sum(l, r):
                return Sum(go(l, ren), go(r, ren))
            case Scale(c, m):
                return Scale(c, go(m, ren))
            case LetStar(a, b):
                return LetStar(go(a, ren), go(b, ren))
            case App(f, a):
                return App(go(f, ren), go(a, ren))
            case Pair(l, r):
                return Pair(go(l, ren), go(r, ren))
            case Inl(m):
                return Inl(go(m, ren), ann=t.ann)
            case Inr(m):
                return Inr(go(m, ren), ann=t.ann)
            case Tens(l, r):
                return Tens(go(l, ren), go(r, ren))
            case Abort(m):
                return Abort(go(m, ren), ann=t.ann)
            case Box(m):
                return Box(go(m, ren))
            case Coerce(m):
                return Coerce(go(m, ren))
        raise TypeError(f"not a term: {t!r}")

    return go(t, {})


def annotate_with_type(t: Term, prop: Proposition) -> Term:
    """Push a known proposition into annotation slots along the spine of
    sums, scalings, lambdas, injections, and aborts.  Used when a declared
    definition body is inlined, so higher-order uses stay synthesizable."""
    match t:
        case Lam(x, b) if isinstance(prop, Lolli):
            ann = t.ann if t.ann is not None else prop.dom
            return Lam(x, annotate_with_type(b, prop.cod), ann=ann, span=t.span)
        case Inl(m) if isinstance(prop, Plus):
            return Inl(m, ann=t.ann or prop, span=t.span)
        case Inr(m) if isinstance(prop, Plus):
            return Inr(m, ann=t.ann or prop, span=t.span)
        case Abort(m):
            return Abort(m, ann=t.ann or prop, span=t.span)
        case Sum(l, r):
            return Sum(annotate_with_type(l, prop),
                       annotate_with_type(r, prop), span=t.span)
        case Scale(c, m):
            return Scale(c, annotate_with_type(m, prop), span=t.span)
        case Box(m) if isinstance(prop, Boxed):
            return Box(annotate_with_type(m, prop.inner), span=t.span)
        case _:
            return t


# ---------------------------------------------------------------------------
# Value classification
# ---------------------------------------------------------------------------


class ValueClass(Enum):
    NOT_VALUE = "not_value"
    BASE = "base"          # star, variable, injected/tensored neutrals, boxes
    NEUTRAL = "neutral"    # base values plus lambdas, top, pairs of values
    VALUE = "value"        # neutral values or well-formed scaled sums


def _sum_parts(t: Term) -> list[Term]:
    """Flatten a sum spine into its summands, left to right."""
    match t:
        case Sum(l, r):
            return _sum_parts(l) + _sum_parts(r)
        case _:
            return [t]


def is_base_value(t: Term) -> bool:
    frag = t.fragment
    match t:
        case Star(_) | Var(_, _):
            return True
        case Tens(l, r):
            return is_neutral_value(l) and is_neutral_value(r)
        case Inl(m) | Inr(m) if frag is Fragment.MIXED:
            return is_neutral_value(m)
        case Box(m):
            # A box whose body is a single scaled base value still reduces
            # (the scalar moves out as a probability), so it is not a value.
            if isinstance(m, Scale) and m.coeff != 1 and is_base_value(m.body):
                return False
            return is_value(m)
        case _:
            return False


def is_neutral_value(t: Term) -> bool:
    if is_base_value(t):
        return True
    match t:
        case Lam(_, _):
            return True
        case TopIntro():
            return True
        case Pair(l, r):
            return is_value(l) and is_value(r)
        case _:
            return False


def is_value(t: Term) -> bool:
    return classify_value(t) is not ValueClass.NOT_VALUE


def classify_value(t: Term) -> ValueClass:
    """Most specific value class of ``t``, or NOT_VALUE."""
    if is_base_value(t):
        return ValueClass.BASE
    if is_neutral_value(t):
        return ValueClass.NEUTRAL

    # Remaining case: a sum of scaled base values with the coefficient
    # conditions, either all zero or none zero with nontrivial scalars.
    # Unscaled summands carry an implicit coefficient of one; writing the
    # scaling out as ``1 . b`` is not value syntax.
    parts = _sum_parts(t)
    seen: list = []
    entries: list[tuple[complex, bool]] = []  # (coefficient, explicit scale?)
    for p in parts:
        match p:
            case Scale(c, b):
                if not is_base_value(b):
                    return ValueClass.NOT_VALUE
                key = debruijn_key(b)
                entries.append((c, True))
            case b if isinstance(t, Sum) and is_base_value(b):
                key = debruijn_key(b)
                entries.append((complex(1), False))
            case _:
                return ValueClass.NOT_VALUE
        if key in seen:
            return ValueClass.NOT_VALUE
        seen.append(key)
    if all(c == 0 for c, _ in entries):
        return ValueClass.VALUE
    for c, explicit in entries:
        if explicit and (c == 0 or c == 1):
            return ValueClass.NOT_VALUE
    return ValueClass.VALUE
