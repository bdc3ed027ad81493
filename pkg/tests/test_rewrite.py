import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lclang.gen import GenConfig, context_corpus, generate_term
from lclang.parser import parse_prop, parse_term, pretty
from lclang.rewrite import (
    FuelExhausted,
    algebraic_form,
    canonical_term,
    canonical_term_randomized,
    equiv_in_contexts,
    is_eval_path,
    normalize,
    replay_trace,
    scramble,
    step_arrow,
    step_hook,
)
from lclang.syntax import Fragment, alpha_eq, alpha_eq_approx, is_value

P = Fragment.PURE
M = Fragment.MIXED


def _step(src, fragment=P):
    t = parse_term(src, fragment)
    hit = step_arrow(t)
    assert hit is not None, f"no directed step on {src}"
    new, rule, path = hit
    return pretty(new), rule, path


# ---------------------------------------------------------------------------
# Directed rules, one golden each
# ---------------------------------------------------------------------------


def test_beta_fun():
    assert _step("(\\x. x) *") == ("*", "beta_fun", ())


def test_beta_unit():
    assert _step("let * = * in 2 . *") == ("2 . *", "beta_unit", ())


def test_beta_proj():
    assert _step("proj1(<*, 2 . *>, y. y)") == ("*", "beta_proj1", ())
    assert _step("proj2(<*, 2 . *>, y. y)") == ("2 . *", "beta_proj2", ())


def test_beta_case():
    out, rule, _ = _step("case inl(*) of { inl a -> a ; inr b -> 2 . b }", M)
    assert (out, rule) == ("*", "beta_case_inl")
    out, rule, _ = _step("case inr(*) of { inl a -> a ; inr b -> 2 . b }", M)
    assert (out, rule) == ("2 . *", "beta_case_inr")


def test_beta_tensor():
    out, rule, _ = _step("let a @ b = * @ <*, 0 . *> in b")
    assert rule == "beta_tensor"
    assert out == "<*, 0 . *>"


def test_box_apply_pushes_application_under_the_box():
    out, rule, _ = _step("(B(\\x. x)) (B(<*, 0 . *>))", M)
    assert rule == "box_apply"
    assert out == "B((\\x. x) <*, 0 . *>)"


def test_box_scalar_squares_the_magnitude():
    out, rule, _ = _step("B(2i . *)", M)
    assert rule == "box_scalar"
    assert out == "4 . B(*)"


def test_coerce_tensor():
    out, rule, _ = _step("tau(B(*) @ B(*))", M)
    assert rule == "coerce_tensor"
    assert out == "B(* @ *)"


def test_sum_of_lambdas_merges_before_applying():
    out, rule, _ = _step("((\\x. x) ++ (\\x. 2 . x)) *", M)
    assert rule == "sum_lam"
    assert out == "(\\x. x ++ 2 . x) *"


def test_step_arrow_is_none_on_values():
    for src, f in [("*", P), ("<*, 0 . *>", P), ("\\x. x", P), ("B(*)", M)]:
        assert step_arrow(parse_term(src, f)) is None


def test_steps_report_evaluation_paths():
    t = parse_term("let * = (\\x. x) * in *", P)
    hit = step_arrow(t)
    assert hit is not None
    _, rule, path = hit
    assert rule == "beta_fun"
    assert path != ()
    assert is_eval_path(t, path)


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------


def test_normalize_produces_a_canonical_value():
    t = parse_term("(\\x. proj1(x, y. y @ *)) <2 . *, *>", P)
    v, trace = normalize(t)
    assert is_value(v)
    assert pretty(v) == "2 . (* @ *)"
    assert len(trace) >= 2


def test_trace_chains_and_replays():
    t = parse_term("(\\x. let * = x in (\\y. y) *) *", P)
    v, trace = normalize(t)
    assert replay_trace(t, trace) == v
    for a, b in zip(trace, trace[1:]):
        assert a.after == b.before


def test_trace_steps_serialize():
    t = parse_term("(\\x. x) *", P)
    _, trace = normalize(t)
    j = trace[0].to_json()
    assert j["kind"] == "rule"
    assert j["rule"] == "beta_fun"
    assert j["before"] == "(\\x. x) *"
    assert j["after"] == "*"


def test_fuel_exhaustion_raises():
    t = parse_term("(\\x. let * = x in (\\y. y) ((\\z. z) *)) *", P)
    with pytest.raises(FuelExhausted):
        normalize(t, fuel=1)


def test_replay_rejects_a_broken_chain():
    t = parse_term("(\\x. x) *", P)
    _, trace = normalize(t)
    with pytest.raises(ValueError):
        replay_trace(parse_term("2 . *", P), trace)


def test_normalize_is_idempotent_on_its_output():
    t = parse_term("(\\x. x) (<*, 0 . *> @ (2 . *))", P)
    v, _ = normalize(t)
    v2, trace2 = normalize(v)
    assert v2 == v
    assert trace2 == []


# ---------------------------------------------------------------------------
# Canonical algebraic forms
# ---------------------------------------------------------------------------


def test_merge_collects_equal_bases():
    t = parse_term("* ++ 2 . *", M)
    assert pretty(canonical_term(t)) == "3 . *"


def test_zero_scale_annihilates_inner_structure():
    t = parse_term("0 . (* @ (3 . *))", P)
    assert pretty(canonical_term(t)) == "0 . (* @ *)"


def test_scale_spines_collapse():
    t = parse_term("2 . (3 . (0.5 . *))", P)
    assert pretty(canonical_term(t)) == "3 . *"


def test_tensor_distributes_over_scale():
    t = parse_term("(2 . *) @ (3 . *)", P)
    assert pretty(canonical_term(t)) == "6 . (* @ *)"


def test_leading_phase_is_extracted_from_sum_entries():
    # Summand bases that differ only by a global phase must merge.
    t = parse_term("(1i . *) ++ (1i . *)", P)
    assert pretty(canonical_term(t)) == "2i . *"


def test_algebraic_form_sorts_and_merges():
    a = parse_term("(2 . *) ++ (3 . *)", M)
    b = parse_term("(3 . *) ++ (2 . *)", M)
    assert algebraic_form(a) == algebraic_form(b)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_canonical_term_is_idempotent(seed):
    _, t = generate_term(random.Random(seed), GenConfig())
    c = canonical_term(t)
    assert alpha_eq(canonical_term(c), c)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_scrambling_preserves_the_canonical_form_exactly(seed):
    rng = random.Random(seed)
    _, t = generate_term(rng, GenConfig())
    base = canonical_term(t)
    for _ in range(4):
        s = scramble(t, rng, moves=10)
        assert alpha_eq(canonical_term(s), base)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_randomized_canonicalization_agrees_up_to_rounding(seed):
    rng = random.Random(seed)
    _, t = generate_term(rng, GenConfig())
    det = canonical_term(t)
    rand = canonical_term_randomized(t, rng)
    assert alpha_eq_approx(det, rand, tol=1e-9)


# ---------------------------------------------------------------------------
# Contextual equivalence
# ---------------------------------------------------------------------------


def test_equiv_accepts_syntactically_different_equal_terms():
    prop = parse_prop("qubit", P)
    ctxs = context_corpus(random.Random(7), prop, count=16)
    m = parse_term("<1/sqrt(2) . *, 1/sqrt(2) . *>", P)
    n = parse_term("0.5 . <sqrt(2) . *, sqrt(2) . *>", P)
    ok, witness = equiv_in_contexts(m, n, ctxs)
    assert ok and witness is None


def test_equiv_distinguishes_plus_from_minus():
    prop = parse_prop("qubit", P)
    ctxs = context_corpus(random.Random(7), prop, count=16)
    m = parse_term("<1/sqrt(2) . *, 1/sqrt(2) . *>", P)
    n = parse_term("<1/sqrt(2) . *, -1/sqrt(2) . *>", P)
    ok, witness = equiv_in_contexts(m, n, ctxs)
    assert not ok
    assert witness is not None


def test_step_hook_canonicalizes_when_no_rule_fires():
    t = parse_term("* ++ 2 . *", M)
    hit = step_hook(t)
    assert hit is not None
    new, steps = hit
    assert pretty(new) == "3 . *"
    assert steps[0].kind == "canonical"
