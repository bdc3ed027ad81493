"""Linear type checking with explicit derivations.

Judgments are ordered: a derivation's conclusion records its context as a
tuple, and the denotation of the judgment is a linear map out of the tensor
of the hypothesis spaces in exactly that order.  Each rule node lists its
premises' contexts in the juxtaposition its denotation formula expects
(function before argument, scrutinee before branch context, and so on);
when the caller's context arrives in a different order an explicit
``exchange`` node with a position permutation is inserted above the rule.

Contexts are split by usage.  Hypotheses used by no subterm are routed to a
sink: a top introduction absorbs any pure context, and a falsity
elimination absorbs any extra mixed context.  Checking elaborates the term:
bare lambdas, injections, and aborts get their annotation fields filled so
every intermediate term of a reduction stays synthesizable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .syntax import (
    Abort, App, Box, Boxed, Case, Coerce, Fragment, Inl, Inr, Lam, LetStar,
    LetTens, Lolli, One, Pair, Plus, Proj, Scale, SourceSpan, Star,
    Sum, Tens, Tensor, Term, TopIntro, Top, Var, With, Zero, free_vars,
    fresh_name, substitute,
)
from .syntax import Proposition as Prop

Ctx = tuple[tuple[str, Prop], ...]


class TypingError(Exception):
    def __init__(self, message: str, span: Optional[SourceSpan] = None,
                 rule: str = "type"):
        super().__init__(message)
        self.message = message
        self.span = span
        self.rule = rule

    def to_json(self) -> dict:
        return {
            "rule": self.rule,
            "span": self.span.to_json() if self.span else None,
            "message": self.message,
        }


class CannotInfer(TypingError):
    """Synthesis is structurally impossible (e.g. an unannotated lambda)."""


@dataclass(frozen=True)
class Derivation:
    rule: str
    ctx: Ctx
    term: Term
    prop: Prop
    premises: tuple["Derivation", ...] = ()
    scalar: Optional[complex] = None
    index: Optional[int] = None
    # For exchange nodes: premises[0].ctx[j] == ctx[perm[j]].
    perm: Optional[tuple[int, ...]] = None

    def to_json(self) -> dict:
        from .parser import pretty, pretty_prop
        out = {
            "rule": self.rule,
            "ctx": [[n, pretty_prop(p)] for n, p in self.ctx],
            "term": pretty(self.term),
            "prop": pretty_prop(self.prop),
            "premises": [d.to_json() for d in self.premises],
        }
        if self.scalar is not None:
            out["scalar"] = [self.scalar.real, self.scalar.imag]
        if self.index is not None:
            out["index"] = self.index
        if self.perm is not None:
            out["perm"] = list(self.perm)
        return out


# ---------------------------------------------------------------------------
# Sinks: subterms able to absorb arbitrary extra hypotheses
# ---------------------------------------------------------------------------


def _has_sink(t: Term) -> bool:
    match t:
        case TopIntro() | Abort(_):
            return True
        case Var(_, _) | Star(_) | Box(_):
            return False
        case Sum(l, r) | Pair(l, r):
            return _has_sink(l) and _has_sink(r)
        case Case(s, _, lb, _, rb):
            return _has_sink(s) or (_has_sink(lb) and _has_sink(rb))
        case Scale(_, m) | Lam(_, m) | Inl(m) | Inr(m) | Coerce(m):
            return _has_sink(m)
        case LetStar(a, b) | App(a, b) | Tens(a, b):
            return _has_sink(a) or _has_sink(b)
        case Proj(_, p, _, b):
            return _has_sink(p) or _has_sink(b)
        case LetTens(a, _, _, b):
            return _has_sink(a) or _has_sink(b)
    return False


# ---------------------------------------------------------------------------
# Context plumbing
# ---------------------------------------------------------------------------


def _names(ctx: Ctx) -> list[str]:
    return [n for n, _ in ctx]


def _route(ctx: Ctx, parts: list[tuple[set[str], bool]],
           span: Optional[SourceSpan], what: str) -> list[Ctx]:
    """Split ``ctx`` into one subcontext per part, given each part's needed
    names and whether it can absorb extras.  Order within ``ctx`` is kept."""
    for i, (need_i, _) in enumerate(parts):
        for j in range(i + 1, len(parts)):
            shared = need_i & parts[j][0]
            if shared:
                raise TypingError(
                    f"variable {sorted(shared)[0]!r} is used more than once "
                    f"in {what}", span, "linearity")
    all_need: set[str] = set()
    for need_i, _ in parts:
        all_need |= need_i
    extras = [n for n in _names(ctx) if n not in all_need]
    sink_at = next((i for i, (_, sinky) in enumerate(parts) if sinky), None)
    if extras and sink_at is None:
        raise TypingError(
            f"unused variable(s) {', '.join(extras)} in {what}",
            span, "linearity")
    out: list[Ctx] = []
    for i, (need_i, _) in enumerate(parts):
        keep = set(need_i) | (set(extras) if i == sink_at else set())
        out.append(tuple((n, p) for n, p in ctx if n in keep))
    return out


def _needs(t: Term, bound: Sequence[str], ctx: Ctx) -> set[str]:
    return (free_vars(t) - set(bound)) & set(_names(ctx))


def _exchange(ctx: Ctx, node: Derivation) -> Derivation:
    """Wrap ``node`` so the conclusion context is exactly ``ctx``."""
    if node.ctx == ctx:
        return node
    positions = {n: i for i, (n, _) in enumerate(ctx)}
    perm = tuple(positions[n] for n, _ in node.ctx)
    return Derivation("exchange", ctx, node.term, node.prop, (node,), perm=perm)


def _fresh_binder(name: str, body: Term, ctx: Ctx, frag: Fragment,
                  taken: set[str] | None = None) -> tuple[str, Term]:
    used = set(_names(ctx)) | (taken or set())
    if name not in used:
        return name, body
    new = fresh_name(name, used | free_vars(body))
    return new, substitute(body, name, Var(new, frag))


def _describe(p: Prop) -> str:
    from .parser import pretty_prop
    return pretty_prop(p)


# ---------------------------------------------------------------------------
# Bidirectional checking
# ---------------------------------------------------------------------------


def check_term(t: Term, prop: Prop, ctx: Sequence[tuple[str, Prop]] = ()) -> Derivation:
    ctx = tuple(ctx)
    _validate_ctx(ctx, t)
    if prop.fragment is not t.fragment:
        raise TypingError(
            f"{t.fragment} term checked against {prop.fragment} proposition "
            f"{_describe(prop)}", t.span)
    return _check(ctx, t, prop)


def infer_term(t: Term, ctx: Sequence[tuple[str, Prop]] = ()) -> Derivation:
    ctx = tuple(ctx)
    _validate_ctx(ctx, t)
    return _infer(ctx, t)


def elaborate_term(t: Term, prop: Prop, ctx: Sequence[tuple[str, Prop]] = ()) -> Term:
    return check_term(t, prop, ctx).term


def _validate_ctx(ctx: Ctx, t: Term) -> None:
    seen = set()
    for n, p in ctx:
        if n in seen:
            raise TypingError(f"duplicate hypothesis {n!r}", t.span)
        seen.add(n)
        if p.fragment is not t.fragment:
            raise TypingError(
                f"hypothesis {n} : {_describe(p)} is {p.fragment} but the "
                f"term is {t.fragment}", t.span)


def _mismatch(t: Term, got: Prop, want: Prop) -> TypingError:
    return TypingError(
        f"type mismatch: expected {_describe(want)}, found {_describe(got)}",
        t.span)


def _check(ctx: Ctx, t: Term, goal: Prop) -> Derivation:
    frag = t.fragment
    if goal.fragment is not frag:
        raise TypingError(
            f"{frag} term checked against {goal.fragment} proposition "
            f"{_describe(goal)}", t.span)

    match t:
        case Lam(x, body):
            if not isinstance(goal, Lolli):
                raise TypingError(
                    f"lambda checked against non-function type {_describe(goal)}",
                    t.span)
            if t.ann is not None and t.ann != goal.dom:
                raise _mismatch(t, Lolli(t.ann, goal.cod), goal)
            x, body = _fresh_binder(x, body, ctx, frag)
            d_body = _check(ctx + ((x, goal.dom),), body, goal.cod)
            term = Lam(x, d_body.term, ann=goal.dom, span=t.span)
            return Derivation("lam", ctx, term, goal, (d_body,))

        case Inl(body):
            if not isinstance(goal, Plus):
                raise TypingError(
                    f"inl checked against non-sum type {_describe(goal)}", t.span)
            d = _check(ctx, body, goal.left)
            term = Inl(d.term, ann=goal, span=t.span)
            return Derivation("inl", ctx, term, goal, (d,))

        case Inr(body):
            if not isinstance(goal, Plus):
                raise TypingError(
                    f"inr checked against non-sum type {_describe(goal)}", t.span)
            d = _check(ctx, body, goal.right)
            term = Inr(d.term, ann=goal, span=t.span)
            return Derivation("inr", ctx, term, goal, (d,))

        case Abort(arg):
            ctx_a, ctx_extra = _route(
                ctx, [(_needs(arg, (), ctx), False), (set(), True)],
                t.span, "abort")
            d = _check(ctx_a, arg, Zero())
            term = Abort(d.term, ann=goal, span=t.span)
            node = Derivation("abort", ctx_a + ctx_extra, term, goal, (d,))
            return _exchange(ctx, node)

        case Sum(l, r):
            dl = _check(ctx, l, goal)
            dr = _check(ctx, r, goal)
            return Derivation("sum", ctx, Sum(dl.term, dr.term, span=t.span),
                              goal, (dl, dr))

        case Scale(c, m):
            d = _check(ctx, m, goal)
            return Derivation("scale", ctx, Scale(c, d.term, span=t.span),
                              goal, (d,), scalar=complex(c))

        case Pair(l, r):
            if not isinstance(goal, With):
                raise TypingError(
                    f"pair checked against non-& type {_describe(goal)}", t.span)
            dl = _check(ctx, l, goal.left)
            dr = _check(ctx, r, goal.right)
            return Derivation("pair", ctx, Pair(dl.term, dr.term, span=t.span),
                              goal, (dl, dr))

        case TopIntro():
            if not isinstance(goal, Top):
                raise _mismatch(t, Top(), goal)
            return Derivation("top_intro", ctx, t, goal)

        case Star(_):
            if ctx:
                raise TypingError(
                    f"unused variable(s) {', '.join(_names(ctx))} at unit "
                    "introduction", t.span, "linearity")
            if not isinstance(goal, One):
                raise _mismatch(t, One(frag), goal)
            return Derivation("unit_intro", ctx, t, goal)

        case Box(body):
            if ctx:
                raise TypingError(
                    f"box body must be closed, context still holds "
                    f"{', '.join(_names(ctx))}", t.span)
            if not isinstance(goal, Boxed):
                raise TypingError(
                    f"box checked against non-boxed type {_describe(goal)}",
                    t.span)
            d = _check((), body, goal.inner)
            return Derivation("box", ctx, Box(d.term, span=t.span), goal, (d,))

        case Coerce(body):
            # The coercion rule is invertible: the argument type is forced.
            if not (isinstance(goal, Boxed) and isinstance(goal.inner, Tensor)):
                raise TypingError(
                    f"coercion checked against {_describe(goal)}, which is "
                    "not a boxed tensor", t.span)
            want = Tensor(Boxed(goal.inner.left), Boxed(goal.inner.right))
            d = _check(ctx, body, want)
            return Derivation("coerce", ctx, Coerce(d.term, span=t.span),
                              goal, (d,))

        case Tens(l, r):
            if not isinstance(goal, Tensor):
                raise TypingError(
                    f"tensor checked against non-tensor type {_describe(goal)}",
                    t.span)
            ctx_l, ctx_r = _route(
                ctx,
                [(_needs(l, (), ctx), _has_sink(l)),
                 (_needs(r, (), ctx), _has_sink(r))],
                t.span, "a tensor")
            dl = _check(ctx_l, l, goal.left)
            dr = _check(ctx_r, r, goal.right)
            node = Derivation("tens", ctx_l + ctx_r,
                              Tens(dl.term, dr.term, span=t.span), goal, (dl, dr))
            return _exchange(ctx, node)

        case Case(_, _, _, _, _):
            return _elim_case(ctx, t, goal)

        case LetStar(_, _):
            return _elim_unit(ctx, t, goal)

        case LetTens(_, _, _, _):
            return _elim_tens(ctx, t, goal)

        case Proj(_, _, _, _):
            return _elim_proj(ctx, t, goal)

        case App(_, _):
            return _elim_app(ctx, t, goal)

        case _:
            d = _infer(ctx, t)
            if d.prop != goal:
                raise _mismatch(t, d.prop, goal)
            return d


def _infer(ctx: Ctx, t: Term) -> Derivation:
    frag = t.fragment

    match t:
        case Var(x, vfrag):
            entry = next(((n, p) for n, p in ctx if n == x), None)
            if entry is None:
                raise TypingError(f"unbound variable {x}", t.span)
            if len(ctx) > 1:
                others = [n for n in _names(ctx) if n != x]
                raise TypingError(
                    f"unused variable(s) {', '.join(others)} at use of {x}",
                    t.span, "linearity")
            if entry[1].fragment is not vfrag:
                raise TypingError(
                    f"variable {x} is {entry[1].fragment} but used as {vfrag}",
                    t.span)
            return Derivation("var", ctx, t, entry[1])

        case Star(_):
            if ctx:
                raise TypingError(
                    f"unused variable(s) {', '.join(_names(ctx))} at unit "
                    "introduction", t.span, "linearity")
            return Derivation("unit_intro", ctx, t, One(frag))

        case TopIntro():
            return Derivation("top_intro", ctx, t, Top())

        case Lam(x, body):
            if t.ann is None:
                raise CannotInfer("cannot infer the domain of a bare lambda",
                                  t.span)
            x, body = _fresh_binder(x, body, ctx, frag)
            d_body = _infer(ctx + ((x, t.ann),), body)
            term = Lam(x, d_body.term, ann=t.ann, span=t.span)
            return Derivation("lam", ctx, term, Lolli(t.ann, d_body.prop),
                              (d_body,))

        case Inl(body):
            if t.ann is None:
                raise CannotInfer("cannot infer the type of a bare injection",
                                  t.span)
            return _check(ctx, t, t.ann)

        case Inr(body):
            if t.ann is None:
                raise CannotInfer("cannot infer the type of a bare injection",
                                  t.span)
            return _check(ctx, t, t.ann)

        case Abort(_):
            if t.ann is None:
                raise CannotInfer("cannot infer the result type of abort",
                                  t.span)
            return _check(ctx, t, t.ann)

        case Sum(l, r):
            try:
                dl = _infer(ctx, l)
            except CannotInfer:
                dr = _infer(ctx, r)
                dl = _check(ctx, l, dr.prop)
            else:
                dr = _check(ctx, r, dl.prop)
            return Derivation("sum", ctx, Sum(dl.term, dr.term, span=t.span),
                              dl.prop, (dl, dr))

        case Scale(c, m):
            d = _infer(ctx, m)
            return Derivation("scale", ctx, Scale(c, d.term, span=t.span),
                              d.prop, (d,), scalar=complex(c))

        case Pair(l, r):
            dl = _infer(ctx, l)
            dr = _infer(ctx, r)
            return Derivation("pair", ctx, Pair(dl.term, dr.term, span=t.span),
                              With(dl.prop, dr.prop), (dl, dr))

        case Box(body):
            if ctx:
                raise TypingError(
                    f"box body must be closed, context still holds "
                    f"{', '.join(_names(ctx))}", t.span)
            d = _infer((), body)
            return Derivation("box", ctx, Box(d.term, span=t.span),
                              Boxed(d.prop), (d,))

        case Coerce(body):
            d = _infer(ctx, body)
            p = d.prop
            if not (isinstance(p, Tensor) and isinstance(p.left, Boxed)
                    and isinstance(p.right, Boxed)):
                raise TypingError(
                    f"coercion expects a tensor of boxed types, found "
                    f"{_describe(p)}", t.span)
            prop = Boxed(Tensor(p.left.inner, p.right.inner))
            return Derivation("coerce", ctx, Coerce(d.term, span=t.span),
                              prop, (d,))

        case Tens(l, r):
            ctx_l, ctx_r = _route(
                ctx,
                [(_needs(l, (), ctx), _has_sink(l)),
                 (_needs(r, (), ctx), _has_sink(r))],
                t.span, "a tensor")
            dl = _infer(ctx_l, l)
            dr = _infer(ctx_r, r)
            node = Derivation("tens", ctx_l + ctx_r,
                              Tens(dl.term, dr.term, span=t.span),
                              Tensor(dl.prop, dr.prop), (dl, dr))
            return _exchange(ctx, node)

        case Case(_, _, _, _, _):
            return _elim_case(ctx, t, None)

        case LetStar(_, _):
            return _elim_unit(ctx, t, None)

        case LetTens(_, _, _, _):
            return _elim_tens(ctx, t, None)

        case Proj(_, _, _, _):
            return _elim_proj(ctx, t, None)

        case App(_, _):
            return _elim_app(ctx, t, None)

    raise TypeError(f"not a term: {t!r}")


def _check_or_infer(ctx: Ctx, t: Term, goal: Optional[Prop]) -> Derivation:
    if goal is None:
        return _infer(ctx, t)
    return _check(ctx, t, goal)


# ---------------------------------------------------------------------------
# Eliminators (shared between checking and inference)
# ---------------------------------------------------------------------------


def _elim_unit(ctx: Ctx, t: LetStar, goal: Optional[Prop]) -> Derivation:
    frag = t.fragment
    ctx_a, ctx_b = _route(
        ctx,
        [(_needs(t.arg, (), ctx), _has_sink(t.arg)),
         (_needs(t.body, (), ctx), _has_sink(t.body))],
        t.span, "a unit elimination")
    d_a = _check(ctx_a, t.arg, One(frag))
    d_b = _check_or_infer(ctx_b, t.body, goal)
    term = LetStar(d_a.term, d_b.term, span=t.span)
    node = Derivation("unit_elim", ctx_a + ctx_b, term, d_b.prop, (d_a, d_b))
    return _exchange(ctx, node)


def _lam_rooted(t: Term) -> bool:
    """Whether the term is a lambda up to sums and scalings, so it can
    never carry a boxed function type."""
    match t:
        case Lam(_, _):
            return True
        case Sum(l, r):
            return _lam_rooted(l) or _lam_rooted(r)
        case Scale(_, m):
            return _lam_rooted(m)
        case _:
            return False


def _infer_fun_with_dom(ctx: Ctx, fun: Term, dom: Prop) -> Derivation:
    """Synthesize a function type for ``fun`` given only its domain, for
    redexes whose function part is a lambda (possibly under sums, scalings,
    or a box) with no annotation."""
    match fun:
        case Lam(x, body):
            if fun.ann is not None and fun.ann != dom:
                raise TypingError(
                    f"lambda annotated with domain {_describe(fun.ann)} "
                    f"applied to an argument of type {_describe(dom)}",
                    fun.span)
            x, body = _fresh_binder(x, body, ctx, fun.fragment)
            d_b = _infer(ctx + ((x, dom),), body)
            term = Lam(x, d_b.term, ann=dom, span=fun.span)
            return Derivation("lam", ctx, term, Lolli(dom, d_b.prop), (d_b,))
        case Sum(l, r):
            try:
                dl = _infer_fun_with_dom(ctx, l, dom)
                dr = _check(ctx, r, dl.prop)
            except CannotInfer:
                dr = _infer_fun_with_dom(ctx, r, dom)
                dl = _check(ctx, l, dr.prop)
            return Derivation("sum", ctx, Sum(dl.term, dr.term, span=fun.span),
                              dl.prop, (dl, dr))
        case Scale(c, m):
            d = _infer_fun_with_dom(ctx, m, dom)
            return Derivation("scale", ctx, Scale(c, d.term, span=fun.span),
                              d.prop, (d,), scalar=complex(c))
        case Box(m):
            if ctx:
                raise TypingError(
                    f"box body must be closed, context still holds "
                    f"{', '.join(_names(ctx))}", fun.span)
            d = _infer_fun_with_dom((), m, dom)
            return Derivation("box", ctx, Box(d.term, span=fun.span),
                              Boxed(d.prop), (d,))
        case _:
            raise CannotInfer(
                "cannot infer the type of the function part of an application",
                fun.span)


def _elim_app(ctx: Ctx, t: App, goal: Optional[Prop]) -> Derivation:
    ctx_f, ctx_a = _route(
        ctx,
        [(_needs(t.fun, (), ctx), _has_sink(t.fun)),
         (_needs(t.arg, (), ctx), _has_sink(t.arg))],
        t.span, "an application")

    def build(d_f: Derivation, d_a: Derivation, rule: str, prop: Prop) -> Derivation:
        term = App(d_f.term, d_a.term, span=t.span)
        node = Derivation(rule, ctx_f + ctx_a, term, prop, (d_f, d_a))
        result = _exchange(ctx, node)
        if goal is not None and prop != goal:
            raise _mismatch(t, prop, goal)
        return result

    try:
        d_f = _infer(ctx_f, t.fun)
    except CannotInfer:
        # Argument-first fallback for redexes whose function part cannot
        # synthesize on its own.
        try:
            d_a = _infer(ctx_a, t.arg)
        except CannotInfer:
            raise CannotInfer(
                "cannot infer the type of either side of an application",
                t.span) from None
        ap = d_a.prop
        if (isinstance(ap, Boxed) and not _lam_rooted(t.fun)
                and (goal is None or isinstance(goal, Boxed))):
            if goal is not None:
                want = Boxed(Lolli(ap.inner, goal.inner))
                d_f = _check(ctx_f, t.fun, want)
                return build(d_f, d_a, "box_app", goal)
            d_f = _infer_fun_with_dom(ctx_f, t.fun, ap.inner)
            return build(d_f, d_a, "box_app", Boxed(d_f.prop.inner.cod))
        if goal is not None:
            d_f = _check(ctx_f, t.fun, Lolli(ap, goal))
            return build(d_f, d_a, "app", goal)
        d_f = _infer_fun_with_dom(ctx_f, t.fun, ap)
        return build(d_f, d_a, "app", d_f.prop.cod)

    fp = d_f.prop
    if isinstance(fp, Lolli):
        d_a = _check(ctx_a, t.arg, fp.dom)
        return build(d_f, d_a, "app", fp.cod)
    if isinstance(fp, Boxed) and isinstance(fp.inner, Lolli):
        d_a = _check(ctx_a, t.arg, Boxed(fp.inner.dom))
        return build(d_f, d_a, "box_app", Boxed(fp.inner.cod))
    raise TypingError(
        f"cannot apply a term of non-function type {_describe(fp)}", t.span)


def _elim_proj(ctx: Ctx, t: Proj, goal: Optional[Prop]) -> Derivation:
    ctx_p, ctx_b = _route(
        ctx,
        [(_needs(t.pair, (), ctx), _has_sink(t.pair)),
         (_needs(t.body, (t.var,), ctx), _has_sink(t.body))],
        t.span, "a projection")
    d_p = _infer(ctx_p, t.pair)
    if not isinstance(d_p.prop, With):
        raise TypingError(
            f"projection expects a & type, found {_describe(d_p.prop)}", t.span)
    comp = d_p.prop.left if t.index == 1 else d_p.prop.right
    x, body = _fresh_binder(t.var, t.body, ctx, Fragment.PURE)
    d_b = _check_or_infer(ctx_b + ((x, comp),), body, goal)
    term = Proj(t.index, d_p.term, x, d_b.term, span=t.span)
    node = Derivation(f"proj{t.index}", ctx_p + ctx_b, term, d_b.prop,
                      (d_p, d_b), index=t.index)
    return _exchange(ctx, node)


def _elim_case(ctx: Ctx, t: Case, goal: Optional[Prop]) -> Derivation:
    need_s = _needs(t.scrutinee, (), ctx)
    need_b = _needs(t.lbody, (t.lvar,), ctx) | _needs(t.rbody, (t.rvar,), ctx)
    both_sink = _has_sink(t.lbody) and _has_sink(t.rbody)
    ctx_s, ctx_b = _route(
        ctx, [(need_s, _has_sink(t.scrutinee)), (need_b, both_sink)],
        t.span, "a case")
    d_s = _infer(ctx_s, t.scrutinee)
    if not isinstance(d_s.prop, Plus):
        raise TypingError(
            f"case expects a sum type, found {_describe(d_s.prop)}", t.span)
    lx, lbody = _fresh_binder(t.lvar, t.lbody, ctx, Fragment.MIXED)
    rx, rbody = _fresh_binder(t.rvar, t.rbody, ctx, Fragment.MIXED)
    if goal is None:
        try:
            d_l = _infer(ctx_b + ((lx, d_s.prop.left),), lbody)
        except CannotInfer:
            d_r = _infer(ctx_b + ((rx, d_s.prop.right),), rbody)
            d_l = _check(ctx_b + ((lx, d_s.prop.left),), lbody, d_r.prop)
        else:
            d_r = _check(ctx_b + ((rx, d_s.prop.right),), rbody, d_l.prop)
    else:
        d_l = _check(ctx_b + ((lx, d_s.prop.left),), lbody, goal)
        d_r = _check(ctx_b + ((rx, d_s.prop.right),), rbody, goal)
    term = Case(d_s.term, lx, d_l.term, rx, d_r.term, span=t.span)
    node = Derivation("case", ctx_s + ctx_b, term, d_l.prop, (d_s, d_l, d_r))
    return _exchange(ctx, node)


def _elim_tens(ctx: Ctx, t: LetTens, goal: Optional[Prop]) -> Derivation:
    frag = t.fragment
    ctx_a, ctx_b = _route(
        ctx,
        [(_needs(t.arg, (), ctx), _has_sink(t.arg)),
         (_needs(t.body, (t.lvar, t.rvar), ctx), _has_sink(t.body))],
        t.span, "a tensor elimination")
    d_a = _infer(ctx_a, t.arg)
    if not isinstance(d_a.prop, Tensor):
        raise TypingError(
            f"tensor elimination expects a tensor type, found "
            f"{_describe(d_a.prop)}", t.span)
    x, body = _fresh_binder(t.lvar, t.body, ctx, frag)
    y, body = _fresh_binder(t.rvar, body, ctx, frag, taken={x})
    d_b = _check_or_infer(
        ctx_b + ((x, d_a.prop.left), (y, d_a.prop.right)), body, goal)
    term = LetTens(d_a.term, x, y, d_b.term, span=t.span)
    # The denotation formula puts the body's extra hypotheses first and the
    # scrutinee's last, so the bound pair lands next to the binders.
    node = Derivation("tens_elim", ctx_b + ctx_a, term, d_b.prop, (d_a, d_b))
    return _exchange(ctx, node)


# ---------------------------------------------------------------------------
# Derivation audit (used by the test suite)
# ---------------------------------------------------------------------------


def validate_derivation(d: Derivation) -> None:
    """Structural audit: premise contexts must tile the conclusion context
    in the rule's canonical order, and recorded data must be coherent."""
    for p in d.premises:
        validate_derivation(p)

    def names(ctx: Ctx) -> list[str]:
        return [n for n, _ in ctx]

    match d.rule:
        case "var":
            assert len(d.ctx) == 1 and d.ctx[0][1] == d.prop
        case "unit_intro":
            assert d.ctx == ()
        case "top_intro":
            pass
        case "box":
            assert d.ctx == () and d.premises[0].ctx == ()
        case "sum" | "pair":
            assert all(p.ctx == d.ctx for p in d.premises)
        case "scale" | "coerce" | "inl" | "inr":
            assert d.premises[0].ctx == d.ctx
        case "lam":
            assert d.premises[0].ctx[:-1] == d.ctx
        case "app" | "box_app" | "tens" | "unit_elim":
            l, r = d.premises
            assert l.ctx + r.ctx == d.ctx
        case "abort":
            assert d.premises[0].ctx == d.ctx[: len(d.premises[0].ctx)]
        case "proj1" | "proj2":
            p, b = d.premises
            assert p.ctx + b.ctx[:-1] == d.ctx
        case "case":
            s, l, r = d.premises
            assert s.ctx + l.ctx[:-1] == d.ctx
            assert l.ctx[:-1] == r.ctx[:-1]
        case "tens_elim":
            a, b = d.premises
            assert b.ctx[:-2] + a.ctx == d.ctx
        case "exchange":
            (p,) = d.premises
            assert d.perm is not None
            assert len(d.perm) == len(d.ctx) == len(p.ctx)
            for j, i in enumerate(d.perm):
                assert p.ctx[j] == d.ctx[i]
        case other:
            raise AssertionError(f"unknown rule {other}")
