import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lclang.gen import GenConfig, generate_term
from lclang.syntax import (
    Abort,
    App,
    Boxed,
    Fragment,
    Inl,
    Inr,
    Lam,
    Lolli,
    One,
    Pair,
    Plus,
    QUBIT,
    Scale,
    Star,
    Sum,
    Tens,
    TopIntro,
    Var,
    ValueClass,
    alpha_eq,
    alpha_eq_approx,
    annotate_with_type,
    at_path,
    classify_value,
    debruijn_key,
    erase_modalities,
    free_vars,
    fresh_name,
    freshen,
    is_value,
    replace_at_path,
    substitute,
    subterms,
)

P = Fragment.PURE
M = Fragment.MIXED


def test_free_vars_respect_binders():
    t = Lam("x", Tens(Var("x", P), Var("y", P)))
    assert free_vars(t) == frozenset({"y"})
    assert free_vars(Lam("y", t)) == frozenset()


def test_substitute_replaces_free_occurrences_only():
    t = Lam("x", App(Var("f", P), Var("x", P)))
    out = substitute(t, "f", Lam("z", Var("z", P)))
    assert free_vars(out) == frozenset()
    # bound x is untouched
    assert alpha_eq(substitute(t, "x", Star(P)), t)


def test_substitute_avoids_capture():
    # substituting x under a binder named x's replacement must rename
    t = Lam("y", Tens(Var("x", P), Var("y", P)))
    out = substitute(t, "x", Var("y", P))
    assert isinstance(out, Lam)
    assert out.var != "y"
    assert free_vars(out) == frozenset({"y"})


def test_alpha_eq_ignores_binder_names():
    assert alpha_eq(Lam("x", Var("x", P)), Lam("y", Var("y", P)))
    assert not alpha_eq(Lam("x", Var("x", P)), Lam("y", Star(P)))


def test_alpha_eq_exact_on_scalars():
    a = Scale(0.5, Star(P))
    b = Scale(0.5 + 1e-12, Star(P))
    assert not alpha_eq(a, b)
    assert alpha_eq_approx(a, b, 1e-9)
    assert not alpha_eq_approx(a, b, 1e-15)


def test_debruijn_key_is_renaming_invariant():
    assert debruijn_key(Lam("x", Var("x", P))) == debruijn_key(Lam("q", Var("q", P)))
    assert debruijn_key(Star(P)) != debruijn_key(Star(M))


def test_fresh_name_avoids_collisions():
    avoid = {"x", "x1", "x2"}
    assert fresh_name("x", avoid) not in avoid


def test_freshen_preserves_alpha_class():
    t = Lam("x", Pair(Var("x", P), Var("x", P)))
    assert alpha_eq(freshen(t, {"x"}), t)


def test_annotate_with_type_threads_lambda_spines():
    from lclang.syntax import Tensor

    t = Lam("x", Lam("y", Tens(Var("x", P), Var("y", P))))
    prop = Lolli(QUBIT, Lolli(One(P), Tensor(QUBIT, One(P))))
    out = annotate_with_type(t, prop)
    assert out.ann == QUBIT
    assert out.body.ann == One(P)


def test_annotate_with_type_marks_injections_and_aborts():
    prop = Plus(One(M), One(M))
    out = annotate_with_type(Inl(Star(M)), prop)
    assert out.ann == prop
    ab = annotate_with_type(Abort(Var("z", M)), One(M))
    assert ab.ann == One(M)


def test_annotate_with_type_distributes_over_sums_and_scales():
    prop = Lolli(One(P), One(P))
    t = Sum(Lam("x", Var("x", P)), Scale(2, Lam("y", Var("y", P))))
    out = annotate_with_type(t, prop)
    assert out.left.ann == One(P)
    assert out.right.body.ann == One(P)


def test_erase_modalities_strips_boxes():
    from lclang.syntax import Tensor

    boxed = Boxed(Tensor(QUBIT, One(P)))
    assert erase_modalities(boxed) == erase_modalities(Tensor(QUBIT, One(P)))


def test_value_classification():
    M = Fragment.MIXED
    assert is_value(Star(P))
    assert is_value(Pair(Star(P), Star(P)))
    assert is_value(Scale(2, Star(P)))
    # A sum whose summands share a base is a merge redex, not a value.
    assert not is_value(Sum(Star(P), Scale(2, Star(P))))
    assert is_value(Sum(Inl(Star(M)), Inr(Star(M))))
    assert not is_value(App(Lam("x", Var("x", P)), Star(P)))
    assert classify_value(TopIntro()) is ValueClass.NEUTRAL
    assert classify_value(App(Lam("x", Var("x", P)), Star(P))) == ValueClass.NOT_VALUE


def _all_paths(t):
    out = [()]
    for i, s in enumerate(subterms(t)):
        out.extend((i,) + p for p in _all_paths(s))
    return out


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_path_addressing_round_trips(seed):
    _, t = generate_term(random.Random(seed), GenConfig())
    for path in _all_paths(t):
        sub = at_path(t, path)
        assert alpha_eq(replace_at_path(t, path, sub), t)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_substitution_id_on_fresh_variable(seed):
    _, t = generate_term(random.Random(seed), GenConfig())
    name = fresh_name("zz", free_vars(t))
    assert substitute(t, name, Star(P)) == t
