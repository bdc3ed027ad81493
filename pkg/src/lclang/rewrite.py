"""Rewriting: canonical algebraic forms, small-step reduction, normalization.

Terms carry a vector-space structure (sums and scalar multiples) modulo an
equational theory: unit scaling, commutativity and associativity of sums,
scalar arithmetic, and distribution of tensors over sums and scalars.  Every
term has a unique canonical *algebraic form*: a sum of distinct scaled base
forms in a fixed order, computed by ``algebraic_form``.

Directed computation is ``step_arrow`` (beta rules plus the commutation
rules that push sums and scalars out of value positions), applied at the
leftmost-outermost position permitted by the evaluation-context grammar.
``step_hook`` composes the two: take a directed step if possible, otherwise
canonicalize and retry; ``normalize`` iterates to a value.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .syntax import (
    Abort, App, Box, Case, Coerce, Fragment, Inl, Inr, Lam, LetStar, LetTens,
    Pair, Proj, Scale, Star, Sum, Tens, Term, TopIntro, Var, ValueClass,
    alpha_eq, alpha_eq_approx, at_path, classify_value, debruijn_key,
    free_vars, fresh_name, is_base_value, is_neutral_value, is_value,
    raw_key, replace_at_path, replace_subterm, substitute, subterms,
    _sum_parts,
)

SNAP_TOL = 1e-12


class FuelExhausted(Exception):
    pass


class StuckTerm(Exception):
    pass


def snap(c: complex) -> complex:
    """Collapse scalars within 1e-12 of 0 or 1 to those exact values."""
    c = complex(c)
    if abs(c) < SNAP_TOL:
        return complex(0)
    if abs(c - 1) < SNAP_TOL:
        return complex(1)
    return c


# ---------------------------------------------------------------------------
# Canonical algebraic forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlgebraicForm:
    """A sum of scaled base forms: distinct, ordered, no zero coefficients
    unless every coefficient is zero."""

    summands: tuple[tuple[complex, Term], ...]

    def to_term(self) -> Term:
        entries = list(self.summands)
        if len(entries) == 1 and entries[0][0] == 1:
            return entries[0][1]
        return _sum_term(entries)


def _sum_term(entries: list[tuple[complex, Term]]) -> Term:
    terms = [b if c == 1 else Scale(c, b) for c, b in entries]
    out = terms[0]
    for t in terms[1:]:
        out = Sum(out, t)
    return out


def _merge(entries: list[tuple[complex, Term]]) -> list[tuple[complex, Term]]:
    groups: list[tuple[object, list[complex], Term]] = []  # (key, coeffs, representative)
    for c, b in entries:
        key = debruijn_key(b)
        for i, (k, acc, rep) in enumerate(groups):
            if k == key:
                if raw_key(b) < raw_key(rep):
                    rep = b
                groups[i] = (k, acc + [c], rep)
                break
        else:
            groups.append((key, [c], b))
    # Coefficients are added in sorted order so that any permutation of the
    # same summands folds with the same float associativity.
    merged = [(snap(sum(sorted(cs, key=lambda z: (z.real, z.imag)),
                        start=complex(0))), b)
              for _, cs, b in groups]
    nonzero = [(c, b) for c, b in merged if c != 0]
    if nonzero:
        merged = nonzero
    else:
        merged = [(complex(0), b) for _, b in merged]
    merged.sort(key=lambda e: debruijn_key(e[1]))
    return merged


def _scale_entries(c: complex, entries: list[tuple[complex, Term]]) -> list[tuple[complex, Term]]:
    """Entry coefficients stay raw here; the single snap per coefficient
    happens in _merge, after all products and additions of the enclosing
    region are done."""
    if c == 1:
        return entries
    if c == 0:
        return [(complex(0), b) for _, b in entries]
    scaled = [(c * a, b) for a, b in entries]
    nonzero = [(a, b) for a, b in scaled if a != 0]
    if nonzero:
        return nonzero
    return [(complex(0), b) for _, b in scaled]


def algebraic_form(t: Term) -> AlgebraicForm:
    return AlgebraicForm(tuple(_merge(_af(t))))


def canonical_term(t: Term) -> Term:
    return algebraic_form(t).to_term()


def _leading(t: Term) -> Optional[complex]:
    """First nonzero coefficient of a value-shaped term, scanning sum
    summands and pair components left to right; None when everything under
    ``t`` is zero."""
    match t:
        case Scale(c, b):
            if c == 0:
                return None
            inner = _leading(b)
            return None if inner is None else snap(c * inner)
        case Sum(l, r) | Pair(l, r):
            lead = _leading(l)
            return lead if lead is not None else _leading(r)
        case Tens(l, r):
            a, b = _leading(l), _leading(r)
            return None if a is None or b is None else snap(a * b)
        case _:
            return complex(1)


def _phase(c: complex) -> complex:
    if c.imag == 0.0 and c.real > 0.0:
        return complex(1)
    ph = c / abs(c)
    # Conjugate multiplications during earlier extractions leave leads a
    # few ulp off the positive real axis; extracting such a phase again
    # would never reach a fixpoint.
    if abs(ph - 1) < SNAP_TOL:
        return complex(1)
    return ph


def _scale_into(t: Term, c: complex) -> Term:
    """Multiply a value-shaped pure term by a scalar, distributing it into
    pair components and sum summands rather than wrapping the outside."""
    match t:
        case Pair(l, r):
            return Pair(_scale_into(l, c), _scale_into(r, c))
        case Sum(l, r):
            return Sum(_scale_into(l, c), _scale_into(r, c))
        case Scale(a, b):
            s = snap(a * c)
            return b if s == 1 else Scale(s, b)
    return t if c == 1 else Scale(snap(c), t)


def _normal_factor(entry: tuple[complex, Term]) -> tuple[complex, Term]:
    """Inside a tensor product, additive pairs hide scalars in their
    components where no rewrite rule can reach them.  Pull the leading
    coefficient's phase out into the summand coefficient and collapse
    all-zero pair factors, so bases differing by such invisible scalars
    merge; magnitudes stay inside the pair."""
    c, b = entry
    if not isinstance(b, Pair):
        return entry
    lead = _leading(b)
    if lead is None:
        return (complex(0), b)
    ph = _phase(lead)
    if ph == 1:
        return entry
    return (c * ph, _scale_into(b, ph.conjugate()))


def _af(t: Term) -> list[tuple[complex, Term]]:
    one = complex(1)
    match t:
        case Var(_, _) | Star(_) | TopIntro():
            return [(one, t)]
        case Sum(l, r):
            # Entries are concatenated, not merged: merging per Sum node
            # would fold coefficient additions with an associativity that
            # depends on the (equationally irrelevant) sum nesting.  The
            # single merge happens in algebraic_form.
            return _af(l) + _af(r)
        case Scale(c, m):
            # Collapse the whole scale spine, folding innermost first and
            # snapping only the per-entry products in _scale_entries:
            # snapping partial products would quantize near-1
            # intermediates and break uniqueness under rearrangement.
            coeffs = [complex(c)]
            while isinstance(m, Scale):
                coeffs.append(complex(m.coeff))
                m = m.body
            acc = complex(1)
            for a in reversed(coeffs):
                acc = a * acc
            return _scale_entries(acc, _af(m))
        case Tens(l, r):
            left = [_normal_factor(e) for e in _af(l)]
            right = [_normal_factor(e) for e in _af(r)]
            return [(a * b, Tens(x, y)) for a, x in left for b, y in right]
        case Lam(x, m):
            return [(one, Lam(x, canonical_term(m), ann=t.ann))]
        case App(f, a):
            return [(one, App(canonical_term(f), canonical_term(a)))]
        case LetStar(a, b):
            return [(one, LetStar(canonical_term(a), canonical_term(b)))]
        case Pair(l, r):
            return [(one, Pair(canonical_term(l), canonical_term(r)))]
        case Proj(ix, p, x, b):
            return [(one, Proj(ix, canonical_term(p), x, canonical_term(b)))]
        case Inl(m):
            return [(one, Inl(canonical_term(m), ann=t.ann))]
        case Inr(m):
            return [(one, Inr(canonical_term(m), ann=t.ann))]
        case Case(s, lx, lb, rx, rb):
            return [(one, Case(canonical_term(s), lx, canonical_term(lb),
                               rx, canonical_term(rb)))]
        case LetTens(a, x, y, b):
            return [(one, LetTens(canonical_term(a), x, y, canonical_term(b)))]
        case Abort(m):
            return [(one, Abort(canonical_term(m), ann=t.ann))]
        case Box(m):
            return [(one, Box(canonical_term(m)))]
        case Coerce(m):
            return [(one, Coerce(canonical_term(m)))]
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# Directed reduction
# ---------------------------------------------------------------------------


def _cluster(t: Term) -> Optional[list[tuple[complex, Term]]]:
    """Flatten ``t`` into (coefficient, component) entries when it is a sum
    spine or a nontrivial scaling; bare terms do not form clusters."""
    if isinstance(t, Scale):
        if t.coeff == 1:
            return None
        return [(t.coeff, t.body)] if not isinstance(t.body, (Sum, Scale)) else None
    if not isinstance(t, Sum):
        return None
    out: list[tuple[complex, Term]] = []
    for p in _sum_parts(t):
        if isinstance(p, Scale):
            if isinstance(p.body, (Sum, Scale)):
                return None
            out.append((p.coeff, p.body))
        elif isinstance(p, Sum):
            return None  # unreachable after flattening
        else:
            out.append((complex(1), p))
    return out


def _distinct(components: list[Term]) -> bool:
    keys = [debruijn_key(c) for c in components]
    return len(set(keys)) == len(keys)


def _subst2(body: Term, x: str, vx: Term, y: str, vy: Term) -> Term:
    """Substitute two variables at once without letting the first value's
    free names collide with the second binder."""
    if y in free_vars(vx):
        avoid = free_vars(body) | free_vars(vx) | free_vars(vy) | {x, y}
        z = fresh_name(y, avoid)
        body = substitute(body, y, Var(z, vy.fragment))
        y = z
    body = substitute(body, x, vx)
    return substitute(body, y, vy)


def _match_root(t: Term) -> Optional[tuple[Term, str]]:
    match t:
        # Unit elimination on a (scaled) star.
        case LetStar(Star(_), body):
            return body, "beta_unit"
        case LetStar(Scale(c, Star(_)), body):
            return (body if c == 1 else Scale(c, body)), "beta_unit"

        # Function application to a value.
        case App(Lam(x, body), a) if is_value(a):
            return substitute(body, x, a), "beta_fun"

        # Projections from a pair of values.
        case Proj(1, Pair(l, r), x, body) if is_value(l) and is_value(r):
            return substitute(body, x, l), "beta_proj1"
        case Proj(2, Pair(l, r), x, body) if is_value(l) and is_value(r):
            return substitute(body, x, r), "beta_proj2"

        # Case analysis on an injected value.
        case Case(Inl(v), lx, lb, _, _) if is_value(v):
            return substitute(lb, lx, v), "beta_case_inl"
        case Case(Inr(v), _, _, rx, rb) if is_value(v):
            return substitute(rb, rx, v), "beta_case_inr"

        # Tensor elimination on a tensor of neutral values.
        case LetTens(Tens(l, r), x, y, body) if (
            is_neutral_value(l) and is_neutral_value(r)
        ):
            return _subst2(body, x, l, y, r), "beta_tensor"

        # Scaled top collapses.
        case Scale(_, TopIntro()):
            return TopIntro(), "scale_top"

        # A box around a scaled base value emits the squared magnitude.
        case Box(Scale(a, b)) if a != 1 and is_base_value(b):
            return Scale(snap(abs(a) ** 2), Box(b)), "box_scalar"

        # A coercion fuses a tensor of boxes.
        case Coerce(Tens(Box(v), Box(w))) if is_value(v) and is_value(w):
            return Box(Tens(v, w)), "coerce_tensor"

        case _:
            pass

    # Sum/scale clusters commuting with value formers.
    cluster = _cluster(t)
    if cluster is not None:
        comps = [b for _, b in cluster]
        if all(isinstance(b, Lam) for b in comps) and _distinct(comps):
            z = comps[0].var
            avoid: set = set()
            for lam in comps:
                avoid |= free_vars(lam.body) - {lam.var}
            z = fresh_name(z, avoid)
            entries = []
            for c, lam in cluster:
                body = lam.body if lam.var == z else substitute(
                    lam.body, lam.var, Var(z, lam.body.fragment))
                entries.append((c, body))
            return Lam(z, _sum_term(entries), ann=comps[0].ann), "sum_lam"
        if all(
            isinstance(b, Pair) and is_value(b.left) and is_value(b.right)
            for b in comps
        ) and _distinct(comps):
            # Components are canonicalized on the way out so the result is a
            # value again (a raw sum of scaled components need not be).
            lefts = canonical_term(_sum_term([(c, p.left) for c, p in cluster]))
            rights = canonical_term(_sum_term([(c, p.right) for c, p in cluster]))
            return Pair(lefts, rights), "sum_pair"

    # Eliminators and injections distributing over value sums.
    match t:
        case Case(s, lx, lb, rx, rb) if _is_sum_value(s):
            entries = [(c, Case(b, lx, lb, rx, rb)) for c, b in _cluster(s)]
            return _sum_term(entries), "sum_case"
        case LetTens(s, x, y, body) if _is_sum_value(s):
            entries = [(c, LetTens(b, x, y, body)) for c, b in _cluster(s)]
            return _sum_term(entries), "sum_tensor_elim"
        case Inl(s) if _is_sum_value(s):
            entries = [(c, Inl(b, ann=t.ann)) for c, b in _cluster(s)]
            return _sum_term(entries), "sum_inl"
        case Inr(s) if _is_sum_value(s):
            entries = [(c, Inr(b, ann=t.ann)) for c, b in _cluster(s)]
            return _sum_term(entries), "sum_inr"
        case Coerce(s) if _is_sum_value(s):
            entries = [(c, Coerce(b)) for c, b in _cluster(s)]
            return _sum_term(entries), "coerce_sum"

        # Application of a sum of boxes to a sum of boxes.
        case App(f, a) if _is_box_value(f) and _is_box_value(a):
            fs = _cluster(f) or [(complex(1), f)]
            ars = _cluster(a) or [(complex(1), a)]
            entries = [
                (snap(p * q), Box(App(v.body, w.body)))
                for p, v in fs
                for q, w in ars
            ]
            return _sum_term(entries), "box_apply"
        case _:
            return None


def _is_sum_value(t: Term) -> bool:
    """A proper sum/scale cluster that is a value (all base components)."""
    return classify_value(t) is ValueClass.VALUE and _cluster(t) is not None


def _is_box_value(t: Term) -> bool:
    cls = classify_value(t)
    if cls is ValueClass.BASE:
        return isinstance(t, Box)
    if cls is ValueClass.VALUE:
        cluster = _cluster(t)
        return cluster is not None and all(isinstance(b, Box) for _, b in cluster)
    return False


def _descent_positions(t: Term) -> tuple[int, ...]:
    """Child indices reduction may enter, in leftmost-first order."""
    match t:
        case Sum(_, _):
            return (0, 1)
        case Scale(_, _) | Inl(_) | Inr(_) | Abort(_) | Box(_) | Coerce(_):
            return (0,)
        case LetStar(_, _) | Proj(_, _, _, _) | Case(_, _, _, _, _) | LetTens(_, _, _, _):
            return (0,)
        case App(f, _):
            return (0, 1) if is_value(f) else (0,)
        case Pair(l, _) | Tens(l, _):
            return (0, 1) if is_value(l) else (0,)
        case _:
            return ()


def step_arrow(t: Term) -> Optional[tuple[Term, str, tuple[int, ...]]]:
    """One directed step at the leftmost-outermost permitted position."""
    hit = _match_root(t)
    if hit is not None:
        new, rule = hit
        return new, rule, ()
    kids = subterms(t)
    for i in _descent_positions(t):
        rec = step_arrow(kids[i])
        if rec is not None:
            new, rule, path = rec
            return replace_subterm(t, i, new), rule, (i,) + path
    return None


def is_eval_path(t: Term, path: tuple[int, ...]) -> bool:
    """Whether ``path`` only passes through evaluation-context positions."""
    for i in path:
        if i not in _descent_positions(t):
            return False
        t = subterms(t)[i]
    return True


@dataclass(frozen=True)
class EvalContext:
    """A one-hole evaluation context: a term plus a hole path that follows
    the evaluation-context grammar."""

    term: Term
    path: tuple[int, ...]

    def __post_init__(self) -> None:
        if not is_eval_path(self.term, self.path):
            raise ValueError("path leaves the evaluation-context grammar")

    def redex(self) -> Term:
        return at_path(self.term, self.path)

    def plug(self, new: Term) -> Term:
        return replace_at_path(self.term, self.path, new)


# ---------------------------------------------------------------------------
# Composite reduction and normalization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceStep:
    kind: str                 # "rule" or "canonical"
    rule: Optional[str]
    path: tuple[int, ...]
    before: Term
    after: Term

    def to_json(self) -> dict:
        from .parser import pretty
        return {
            "kind": self.kind,
            "rule": self.rule,
            "path": list(self.path),
            "before": pretty(self.before),
            "after": pretty(self.after),
        }


def step_hook(t: Term) -> Optional[tuple[Term, list[TraceStep]]]:
    """One composite step: directed if possible, else canonicalize (and,
    when that does not already give a value, take the directed step it
    enables)."""
    hit = step_arrow(t)
    if hit is not None:
        new, rule, path = hit
        return new, [TraceStep("rule", rule, path, t, new)]
    canon = canonical_term(t)
    if canon == t:
        return None
    if is_value(canon):
        return canon, [TraceStep("canonical", None, (), t, canon)]
    hit = step_arrow(canon)
    if hit is None:
        return None
    new, rule, path = hit
    return new, [
        TraceStep("canonical", None, (), t, canon),
        TraceStep("rule", rule, path, canon, new),
    ]


def normalize(t: Term, fuel: int = 100_000) -> tuple[Term, list[TraceStep]]:
    """Reduce ``t`` to a value and return its canonical algebraic form."""
    trace: list[TraceStep] = []
    steps = 0
    while not is_value(t):
        if steps >= fuel:
            raise FuelExhausted(f"no value after {fuel} steps")
        hit = step_hook(t)
        if hit is None:
            from .parser import pretty
            raise StuckTerm(f"no step applies to non-value: {pretty(t)}")
        t, entries = hit
        trace.extend(entries)
        steps += 1
    final = canonical_term(t)
    if final != t:
        trace.append(TraceStep("canonical", None, (), t, final))
    return final, trace


def replay_trace(start: Term, trace: list[TraceStep]) -> Term:
    t = start
    for step in trace:
        if step.before != t:
            raise ValueError("trace does not chain")
        t = step.after
    return t


# ---------------------------------------------------------------------------
# Equational scrambling (test support)
# ---------------------------------------------------------------------------


def _all_paths(t: Term) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = [()]
    for i, s in enumerate(subterms(t)):
        out.extend((i,) + p for p in _all_paths(s))
    return out


def _scramble_moves(t: Term, rng: random.Random) -> list[Term]:
    """Equational rewrites applicable at the root of ``t``, both directions.

    Inserted factors come from {±1, ±i, 2^k} only: multiplication by those
    commutes exactly with float rounding, so re-canonicalizing a scramble
    reproduces the original coefficients bit for bit, and the uniqueness
    suite can demand syntactic identity rather than a tolerance.
    """
    moves: list[Term] = []
    mixed = t.fragment is Fragment.MIXED

    def rand_scalar() -> complex:
        if mixed:
            return complex(rng.choice([0.5, 2.0, 0.25, 4.0]))
        return complex(rng.choice([0.5, 2.0, -1.0, 1j, -1j, 0.25]))

    match t:
        case Scale(c, m):
            if c == 1:
                moves.append(m)
            # No eager fusion move (Scale(c * m.coeff, m.body)): computing
            # coefficient products in scramble order would re-associate
            # float arithmetic away from the canonicalizer's fold.
            if isinstance(m, Sum):
                moves.append(Sum(Scale(c, m.left), Scale(c, m.right)))
            u = rand_scalar()
            if u != 0:
                moves.append(Scale(u, Scale(c / u, m)))
        case Sum(l, r):
            moves.append(Sum(r, l))
            if isinstance(l, Sum):
                moves.append(Sum(l.left, Sum(l.right, r)))
            if isinstance(r, Sum):
                moves.append(Sum(Sum(l, r.left), r.right))
            cl, bl = (l.coeff, l.body) if isinstance(l, Scale) else (complex(1), l)
            cr, br = (r.coeff, r.body) if isinstance(r, Scale) else (complex(1), r)
            if isinstance(r, Scale) and r.coeff == 0 and not (
                isinstance(l, Scale) and l.coeff == 0
            ):
                moves.append(l)
            if isinstance(l, Scale) and isinstance(r, Scale) and cl == cr:
                moves.append(Scale(cl, Sum(bl, br)))
        case Tens(l, r):
            if isinstance(l, Scale):
                moves.append(Scale(l.coeff, Tens(l.body, r)))
            if isinstance(r, Scale):
                moves.append(Scale(r.coeff, Tens(l, r.body)))
            if isinstance(l, Sum):
                moves.append(Sum(Tens(l.left, r), Tens(l.right, r)))
            if isinstance(r, Sum):
                moves.append(Sum(Tens(l, r.left), Tens(l, r.right)))
        case _:
            pass

    # Reverse directions that apply to any term.
    moves.append(Scale(complex(1), t))
    moves.append(Sum(t, Scale(complex(0), t)))
    u = rand_scalar()
    if u != 0:
        moves.append(Scale(u, Scale(1 / u, t)))
    return moves


def scramble(t: Term, rng: random.Random, moves: int = 12) -> Term:
    """Apply a random sequence of equational rewrites at random positions.

    The result is equal to ``t`` modulo the equational theory, so it has
    the same canonical algebraic form.
    """
    for _ in range(moves):
        paths = _all_paths(t)
        rng.shuffle(paths)
        applied = False
        for path in paths:
            sub = at_path(t, path)
            options = _scramble_moves(sub, rng)
            if options:
                choice = rng.choice(options)
                try:
                    t = replace_at_path(t, path, choice)
                except (ValueError, IndexError):
                    continue
                applied = True
                break
        if not applied:
            break
    return t


def canonical_term_randomized(t: Term, rng: random.Random,
                              max_steps: int = 20_000) -> Term:
    """Canonicalize by applying the directed equational rules in a random
    order until fixpoint, then ordering summands.  Agrees with
    ``canonical_term`` regardless of the random choices."""

    def directed(t: Term, under_zero: bool = False) -> list[Term]:
        out: list[Term] = []
        match t:
            case Scale(c, m):
                if snap(c) != c:
                    out.append(Scale(snap(c), m))
                if c == 1:
                    out.append(m)
                if isinstance(m, Scale):
                    out.append(Scale(snap(c * m.coeff), m.body))
                if isinstance(m, Sum):
                    out.append(Sum(Scale(c, m.left), Scale(c, m.right)))
            case Sum(_, _):
                parts = _sum_parts(t)
                split = [
                    (p.coeff, p.body) if isinstance(p, Scale) and not isinstance(p.body, (Sum, Scale))
                    else (None, p)
                    for p in parts
                ]
                for i in range(len(split)):
                    for j in range(i + 1, len(split)):
                        ci, bi = split[i]
                        cj, bj = split[j]
                        ci = complex(1) if ci is None and not isinstance(bi, (Sum, Scale)) else ci
                        cj = complex(1) if cj is None and not isinstance(bj, (Sum, Scale)) else cj
                        if ci is None or cj is None:
                            continue
                        if alpha_eq(bi, bj):
                            rep = bi if raw_key(bi) <= raw_key(bj) else bj
                            rest = [p for k, p in enumerate(parts) if k not in (i, j)]
                            merged = Scale(snap(ci + cj), rep)
                            out.append(_resum([*rest, merged]))
            case Tens(l, r):
                if isinstance(l, Scale):
                    out.append(Scale(l.coeff, Tens(l.body, r)))
                if isinstance(r, Scale):
                    out.append(Scale(r.coeff, Tens(l, r.body)))
                if isinstance(l, Sum):
                    out.append(Sum(Tens(l.left, r), Tens(l.right, r)))
                if isinstance(r, Sum):
                    out.append(Sum(Tens(l, r.left), Tens(l, r.right)))
                # Pair factors trap a phase where no scale or sum move can
                # see it; extract it so proportional bases can merge.  An
                # all-zero pair factor likewise zeroes the whole product; the
                # under_zero gate keeps that move from re-firing forever once
                # a 0 coefficient sits above this node.
                for side, rebuild in ((l, lambda x: Tens(x, r)),
                                      (r, lambda x: Tens(l, x))):
                    if isinstance(side, Pair):
                        lead = _leading(side)
                        if lead is None:
                            if not under_zero:
                                out.append(Scale(complex(0), t))
                        else:
                            ph = _phase(lead)
                            if ph != 1:
                                out.append(Scale(ph, rebuild(
                                    _scale_into(side, ph.conjugate()))))
            case _:
                pass
        return out

    steps = 0
    while True:
        candidates: list[tuple[tuple[int, ...], Term]] = []
        for path in _all_paths(t):
            under_zero = any(
                isinstance(anc := at_path(t, path[:i]), Scale)
                and anc.coeff == 0
                for i in range(len(path))
            )
            for new in directed(at_path(t, path), under_zero):
                candidates.append((path, new))
        if not candidates:
            break
        if steps >= max_steps:
            raise FuelExhausted("randomized canonicalization did not converge")
        path, new = rng.choice(candidates)
        t = replace_at_path(t, path, new)
        steps += 1

    def order(t: Term) -> Term:
        kids = subterms(t)
        for i, k in enumerate(kids):
            t = replace_subterm(t, i, order(k))
        if isinstance(t, Sum):
            entries = []
            for p in _sum_parts(t):
                if isinstance(p, Scale):
                    entries.append((p.coeff, p.body))
                else:
                    entries.append((complex(1), p))
            # Zero summands are dropped here, not during the random phase: a
            # summand can only be known dead once its siblings have finished
            # merging, so dropping early is not order-independent.
            nonzero = [e for e in entries if e[0] != 0]
            if nonzero:
                entries = nonzero
            else:
                entries = [(complex(0), b) for _, b in entries]
            entries.sort(key=lambda e: debruijn_key(e[1]))
            return _sum_term(entries)
        return t

    return order(t)


def _resum(parts: list[Term]) -> Term:
    out = parts[0]
    for p in parts[1:]:
        out = Sum(out, p)
    return out


# ---------------------------------------------------------------------------
# Contextual equivalence harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ElimContext:
    """An elimination context: a term with one free occurrence of ``hole``."""

    body: Term
    hole: str = "_"

    def plug(self, m: Term) -> Term:
        return substitute(self.body, self.hole, m)


def equiv_in_contexts(
    m: Term,
    n: Term,
    contexts: list[ElimContext],
    fuel: int = 100_000,
    tol: float = 1e-9,
) -> tuple[bool, Optional[ElimContext]]:
    """Whether ``m`` and ``n`` normalize to the same value inside every
    supplied elimination context (scalars compared within ``tol``).
    Returns the first distinguishing context as a witness."""
    for ctx in contexts:
        vm, _ = normalize(ctx.plug(m), fuel)
        vn, _ = normalize(ctx.plug(n), fuel)
        if not alpha_eq_approx(vm, vn, tol):
            return False, ctx
    return True, None
