"""Seeded generation of well-typed closed terms and elimination contexts.

Terms are grown type-directed: pick a target proposition, then build a
derivation for it and read the term off, so every emitted term typechecks by
construction.  A nonempty context is consumed eliminator-first; a variable of
function type is consumed by applying it and passing the result to a fresh
lambda, which also seeds the reduction suites with beta redexes.

Binder types stay inside the eliminable connectives: no top (it has no
eliminator), no zero (uninhabited argument positions), and no boxed types
(nothing unboxes, so a boxed context variable could never reach a non-boxed
target).  Box, box application, and the mixing coercion are covered by
target-driven patterns instead; abort and the top introduction each get a
dedicated showcase shape.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .rewrite import ElimContext
from .syntax import (
    Abort,
    App,
    Box,
    Boxed,
    Case,
    Coerce,
    Fragment,
    Inl,
    Inr,
    Lam,
    LetStar,
    LetTens,
    Lolli,
    One,
    Pair,
    Plus,
    Proj,
    Proposition,
    Scale,
    Star,
    Sum,
    Tens,
    Tensor,
    Term,
    TopIntro,
    Top,
    Var,
    With,
    Zero,
)

PURE = Fragment.PURE
MIXED = Fragment.MIXED

_counter = itertools.count()


def _fresh(base: str) -> str:
    return f"{base}{next(_counter)}"


def _reset_names() -> None:
    """Restart the name stream, so entry points are reproducible per seed."""
    global _counter
    _counter = itertools.count()

# Pure scalars take a fixed pool plus a uniform complex sample; mixed scalars
# must be nonnegative reals.
PURE_POOL = [complex(0), complex(1), complex(-1), complex(0.5),
             complex(2 ** -0.5), 1j, complex(2)]
MIXED_POOL = [complex(0), complex(1), complex(0.5), complex(2 ** -0.5),
              complex(2)]


@dataclass(frozen=True)
class GenConfig:
    max_depth: int = 3
    prop_depth: int = 2
    sum_chance: float = 0.2
    scale_chance: float = 0.2


def random_scalar(rng: random.Random, fragment: Fragment) -> complex:
    if fragment is MIXED:
        if rng.random() < 0.8:
            return rng.choice(MIXED_POOL)
        return complex(round(rng.uniform(0.0, 2.0), 3))
    if rng.random() < 0.8:
        return rng.choice(PURE_POOL)
    return complex(round(rng.uniform(-1.5, 1.5), 3),
                   round(rng.uniform(-1.5, 1.5), 3))


def _lam_free_prop(rng: random.Random, depth: int) -> Proposition:
    """A pure prop whose closed inhabitants contain no bare lambdas, so they
    stay synthesizable after printing strips annotations."""
    if depth <= 0 or rng.random() < 0.4:
        return One(PURE)
    if rng.random() < 0.5:
        return With(_lam_free_prop(rng, depth - 1),
                    _lam_free_prop(rng, depth - 1))
    return Tensor(_lam_free_prop(rng, depth - 1),
                  _lam_free_prop(rng, depth - 1))


def random_prop(rng: random.Random, fragment: Fragment, depth: int,
                allow_boxed: bool = False) -> Proposition:
    """A random proposition whose every part the generator can inhabit and
    eliminate."""
    if depth <= 0:
        if fragment is MIXED and allow_boxed and rng.random() < 0.4:
            return Boxed(random_prop(rng, PURE, 1))
        return One(fragment)
    roll = rng.random()
    if fragment is PURE:
        if roll < 0.25:
            return One(PURE)
        if roll < 0.5:
            return With(random_prop(rng, PURE, depth - 1),
                        random_prop(rng, PURE, depth - 1))
        if roll < 0.75:
            return Tensor(random_prop(rng, PURE, depth - 1),
                          random_prop(rng, PURE, depth - 1))
        return Lolli(random_prop(rng, PURE, depth - 1),
                     random_prop(rng, PURE, depth - 1))
    if allow_boxed and roll < 0.2:
        return Boxed(random_prop(rng, PURE, depth - 1))
    if roll < 0.35:
        return One(MIXED)
    if roll < 0.6:
        return Plus(random_prop(rng, MIXED, depth - 1),
                    random_prop(rng, MIXED, depth - 1))
    if roll < 0.8:
        return Tensor(random_prop(rng, MIXED, depth - 1),
                      random_prop(rng, MIXED, depth - 1))
    return Lolli(random_prop(rng, MIXED, depth - 1),
                 random_prop(rng, MIXED, depth - 1))


Binding = tuple[str, Proposition]


def _split(rng: random.Random, ctx: tuple[Binding, ...]):
    left, right = [], []
    for b in ctx:
        (left if rng.random() < 0.5 else right).append(b)
    return tuple(left), tuple(right)


def _minimal(rng: random.Random, prop: Proposition) -> Term:
    """A canonical inhabitant of a prop, used once depth runs out."""
    match prop:
        case Top():
            return TopIntro()
        case One(f):
            return Star(f)
        case Lolli(dom, cod):
            x = _fresh("m")
            return Lam(x, generate_at(rng, cod, ((x, dom),), 0), ann=dom)
        case With(l, r):
            return Pair(_minimal(rng, l), _minimal(rng, r))
        case Plus(l, _):
            return Inl(_minimal(rng, l), ann=prop)
        case Tensor(l, r):
            return Tens(_minimal(rng, l), _minimal(rng, r))
        case Boxed(inner):
            return Box(_minimal(rng, inner))
    raise ValueError(f"no inhabitant for {prop}")


def _eliminate(rng: random.Random, prop: Proposition,
               ctx: tuple[Binding, ...], depth: int) -> Term:
    """Consume one context variable with its eliminator and continue."""
    idx = rng.randrange(len(ctx))
    name, vtyp = ctx[idx]
    rest = ctx[:idx] + ctx[idx + 1:]
    frag = prop.fragment
    match vtyp:
        case One(f):
            return LetStar(Var(name, f), generate_at(rng, prop, rest, depth))
        case Tensor(a, b):
            xa, xb = _fresh("a"), _fresh("b")
            body = generate_at(rng, prop, rest + ((xa, a), (xb, b)), depth)
            return LetTens(Var(name, vtyp.fragment), xa, xb, body)
        case With(a, b):
            index = rng.choice((1, 2))
            comp = a if index == 1 else b
            y = _fresh("p")
            body = generate_at(rng, prop, rest + ((y, comp),), depth)
            return Proj(index, Var(name, PURE), y, body)
        case Plus(a, b):
            xl, xr = _fresh("l"), _fresh("r")
            lb = generate_at(rng, prop, rest + ((xl, a),), depth)
            rb = generate_at(rng, prop, rest + ((xr, b),), depth)
            return Case(Var(name, MIXED), xl, lb, xr, rb)
        case Zero():
            return Abort(Var(name, MIXED), ann=prop)
        case Lolli(dom, cod):
            arg_ctx, cont_ctx = _split(rng, rest)
            arg = generate_at(rng, dom, arg_ctx, max(depth - 1, 0))
            y = _fresh("r")
            cont = generate_at(rng, prop, cont_ctx + ((y, cod),), depth)
            return App(Lam(y, cont, ann=cod),
                       App(Var(name, vtyp.fragment), arg))
    raise ValueError(f"no eliminator for context variable of type {vtyp}")


def generate_at(rng: random.Random, prop: Proposition,
                ctx: tuple[Binding, ...] = (), depth: int = 3) -> Term:
    """A term of type ``prop`` consuming exactly the variables of ``ctx``."""
    frag = prop.fragment
    if depth > 0 and not isinstance(prop, (Top, Zero)):
        if rng.random() < 0.15:
            return Sum(generate_at(rng, prop, ctx, depth - 1),
                       generate_at(rng, prop, ctx, depth - 1))
        if rng.random() < 0.15:
            return Scale(random_scalar(rng, frag),
                         generate_at(rng, prop, ctx, depth - 1))

    if len(ctx) == 1 and ctx[0][1] == prop and rng.random() < 0.6:
        return Var(ctx[0][0], frag)

    if ctx and (depth <= 0 or rng.random() < 0.5):
        return _eliminate(rng, prop, ctx, depth)

    match prop:
        case Top():
            return TopIntro()
        case One(f):
            if ctx:
                return _eliminate(rng, prop, ctx, depth)
            return Star(f)
        case Lolli(dom, cod):
            x = _fresh("x")
            body = generate_at(rng, cod, ctx + ((x, dom),), depth - 1)
            return Lam(x, body, ann=dom)
        case With(l, r):
            return Pair(generate_at(rng, l, ctx, depth - 1),
                        generate_at(rng, r, ctx, depth - 1))
        case Plus(l, r):
            if rng.random() < 0.5:
                return Inl(generate_at(rng, l, ctx, depth - 1), ann=prop)
            return Inr(generate_at(rng, r, ctx, depth - 1), ann=prop)
        case Tensor(l, r):
            cl, cr = _split(rng, ctx)
            return Tens(generate_at(rng, l, cl, depth - 1),
                        generate_at(rng, r, cr, depth - 1))
        case Boxed(inner):
            if ctx:
                return _eliminate(rng, prop, ctx, depth)
            roll = rng.random()
            if roll < 0.3 and depth > 0:
                # Apply a boxed pure function to a boxed pure value.  The
                # argument anchors the application's type inference once
                # annotations are stripped by printing, so its type must not
                # hide lambdas.
                dom = _lam_free_prop(rng, 1)
                x = _fresh("u")
                fn = Lam(x, generate_at(rng, inner, ((x, dom),), depth - 1),
                         ann=dom)
                return App(Box(fn), Box(generate_at(rng, dom, (), depth - 1)))
            if roll < 0.5 and isinstance(inner, Tensor) and depth > 0:
                # Merge two boxes through the mixing coercion.
                pair = Tensor(Boxed(inner.left), Boxed(inner.right))
                return Coerce(generate_at(rng, pair, (), depth - 1))
            return Box(generate_at(rng, inner, (), depth - 1))
        case Zero():
            raise ValueError("zero is uninhabited; cannot generate a term")
    return _minimal(rng, prop)


def generate_term(rng: random.Random,
                  config: GenConfig = GenConfig()) -> tuple[Proposition, Term]:
    """A random closed well-typed (prop, term) pair; both fragments and every
    constructor appear with nonzero probability."""
    roll = rng.random()
    if roll < 0.05:
        # Showcase the pure sink: anything can be dropped at top.
        dom = random_prop(rng, PURE, 1)
        x = _fresh("x")
        return Lolli(dom, Top()), Lam(x, TopIntro(), ann=dom)
    if roll < 0.1:
        # Showcase scrutinee-first ex falso.
        cod = random_prop(rng, MIXED, 1)
        x = _fresh("x")
        return (Lolli(Zero(), cod),
                Lam(x, Abort(Var(x, MIXED), ann=cod), ann=Zero()))
    fragment = PURE if rng.random() < 0.5 else MIXED
    prop = random_prop(rng, fragment, config.prop_depth,
                       allow_boxed=fragment is MIXED)
    return prop, generate_at(rng, prop, (), config.max_depth)


def generate_definitions(seed: int, count: int,
                         config: GenConfig = GenConfig()) -> str:
    """Deterministic stream of definitions in source syntax, one per line
    group, every one of which typechecks."""
    from .parser import pretty, pretty_prop
    _reset_names()
    rng = random.Random(seed)
    lines = []
    for i in range(count):
        prop, term = generate_term(rng, config)
        frag = "pure" if prop.fragment is PURE else "mixed"
        lines.append(f"{frag} def gen{i} : {pretty_prop(prop)} = {pretty(term)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Elimination-context corpora
# ---------------------------------------------------------------------------
#
# Pure observations land at the pure unit; mixed observations land uniformly
# at a boxed pure unit, because nothing maps out of the box, while the plain
# mixed unit lifts in via `let * = v in B(*)`.  Uniformity keeps the two
# branches of a case at the same type.


def _observe_pure(rng: random.Random, hole: Proposition, body: Term) -> Term:
    match hole:
        case One(_):
            return body
        case Lolli(dom, cod):
            arg = generate_at(rng, dom, (), 1)
            return _observe_pure(rng, cod, App(body, arg))
        case With(l, r):
            index = rng.choice((1, 2))
            comp = l if index == 1 else r
            y = _fresh("p")
            return Proj(index, body, y, _observe_pure(rng, comp, Var(y, PURE)))
        case Tensor(l, r):
            xa, xb = _fresh("a"), _fresh("b")
            first = _observe_pure(rng, l, Var(xa, PURE))
            second = _observe_pure(rng, r, Var(xb, PURE))
            return LetTens(body, xa, xb, LetStar(first, second))
    raise ValueError(f"no pure elimination context for {hole}")


_BOXED_UNIT = Boxed(One(PURE))


def _boxed_unit_merge(a: Term, b: Term) -> Term:
    """Combine two boxed-unit observations into one via boxed application."""
    u, w = _fresh("u"), _fresh("w")
    combine = Lam(u, Lam(w, LetStar(Var(u, PURE), Var(w, PURE)),
                         ann=One(PURE)), ann=One(PURE))
    return App(App(Box(combine), a), b)


def _observe_mixed(rng: random.Random, hole: Proposition, body: Term) -> Term:
    match hole:
        case One(_):
            return LetStar(body, Box(Star(PURE)))
        case Boxed(One(_)):
            return body
        case Boxed(inner):
            x = _fresh("u")
            consumer = Lam(x, _observe_pure(rng, inner, Var(x, PURE)),
                           ann=inner)
            return App(Box(consumer), body)
        case Lolli(dom, cod):
            arg = generate_at(rng, dom, (), 1)
            return _observe_mixed(rng, cod, App(body, arg))
        case Plus(l, r):
            xl, xr = _fresh("l"), _fresh("r")
            lb = _observe_mixed(rng, l, Var(xl, MIXED))
            rb = _observe_mixed(rng, r, Var(xr, MIXED))
            return Case(body, xl, lb, xr, rb)
        case Tensor(l, r):
            xa, xb = _fresh("a"), _fresh("b")
            first = _observe_mixed(rng, l, Var(xa, MIXED))
            second = _observe_mixed(rng, r, Var(xb, MIXED))
            return LetTens(body, xa, xb, _boxed_unit_merge(first, second))
        case Zero():
            return Abort(body, ann=_BOXED_UNIT)
    raise ValueError(f"no mixed elimination context for {hole}")


def context_corpus(rng: random.Random, hole: Proposition,
                   count: int = 20) -> list[ElimContext]:
    """At least ``count`` distinct elimination contexts for the hole type,
    each ending at an observable base: the pure unit, or a boxed pure unit.
    Top has none: all its inhabitants are identified."""
    if isinstance(hole, Top):
        return []
    _reset_names()
    observe = _observe_pure if hole.fragment is PURE else _observe_mixed
    seen: set[Term] = set()
    out: list[ElimContext] = []
    attempts = 0
    while len(out) < count and attempts < count * 40:
        attempts += 1
        body = observe(rng, hole, Var("_", hole.fragment))
        # Optional harmless decoration, for corpus diversity on small types.
        if rng.random() < 0.5:
            y = _fresh("d")
            ann = One(PURE) if hole.fragment is PURE else _BOXED_UNIT
            body = App(Lam(y, Var(y, body.fragment), ann=ann), body)
        if body in seen:
            continue
        seen.add(body)
        out.append(ElimContext(body))
    return out
