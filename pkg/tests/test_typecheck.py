import dataclasses
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lclang.gen import GenConfig, generate_term
from lclang.parser import parse_prop, parse_term
from lclang.syntax import Fragment, One, Scale, Star
from lclang.typecheck import (
    CannotInfer,
    TypingError,
    check_term,
    elaborate_term,
    infer_term,
    validate_derivation,
)

P = Fragment.PURE
M = Fragment.MIXED


def chk(term_src, prop_src, fragment=P):
    return check_term(parse_term(term_src, fragment), parse_prop(prop_src, fragment))


# ---------------------------------------------------------------------------
# Linearity discipline
# ---------------------------------------------------------------------------


def test_with_pair_may_reuse_a_variable():
    # The additive pair checks both components against the same context.
    d = chk("\\x. <x, x>", "qubit -o qubit & qubit")
    assert d.rule == "lam"


def test_tensor_may_not_duplicate_a_variable():
    with pytest.raises(TypingError, match="more than once"):
        chk("\\x. x @ x", "qubit -o qubit * qubit")


def test_unused_variable_is_rejected():
    with pytest.raises(TypingError, match="unused"):
        chk("\\x. *", "qubit -o 1")


def test_exchange_allows_out_of_order_use():
    d = chk("\\x. \\y. y @ x", "1 -o qubit -o qubit * 1")
    assert d.rule == "lam"


def test_top_absorbs_any_context():
    d = chk("\\x. top", "qubit -o top")
    assert d.rule == "lam"


def test_sum_checks_both_branches_in_the_same_context():
    d = chk("\\x. x ++ x", "1 -o 1", M)
    assert d.rule == "lam"


# ---------------------------------------------------------------------------
# The modality
# ---------------------------------------------------------------------------


def test_box_body_must_be_closed():
    with pytest.raises(TypingError, match="closed"):
        chk("\\x. B(x)", "B(qubit) -o B(qubit)", M)


def test_box_of_closed_pure_term_is_fine():
    d = chk("B(\\x. x)", "B(qubit -o qubit)", M)
    assert d.rule == "box"


def test_boxed_function_applies_to_boxed_argument():
    # B(P -o Q) applied to B(P) is its own application form.
    d = chk("\\f. \\x. f x", "B(qubit -o qubit) -o B(qubit) -o B(qubit)", M)
    assert d.rule == "lam"


def test_mixed_function_type_on_boxes_also_applies():
    d = chk("\\f. \\x. f x", "(B(qubit) -o B(qubit)) -o B(qubit) -o B(qubit)", M)
    assert d.rule == "lam"


def test_boxed_function_result_type_is_not_a_mixed_function():
    with pytest.raises(TypingError):
        chk("B(\\x. x)", "B(qubit) -o B(qubit)", M)


def test_coercion_typing():
    d = chk("\\x. tau(x)", "B(qubit) * B(qubit) -o B(qubit * qubit)", M)
    assert d.rule == "lam"


def test_coercion_rejects_wrong_result_shape():
    with pytest.raises(TypingError):
        chk("\\x. tau(x)", "B(qubit) * B(qubit) -o B(qubit) * B(qubit)", M)


# ---------------------------------------------------------------------------
# Scalars by fragment
# ---------------------------------------------------------------------------


def test_pure_scalars_are_complex():
    d = check_term(Scale(1j, Star(P)), One(P))
    assert d.rule == "scale"
    assert d.scalar == 1j


def test_mixed_scalars_are_nonnegative_reals_at_construction():
    with pytest.raises(ValueError, match="nonnegative"):
        Scale(-2.0, Star(M))
    with pytest.raises(ValueError, match="nonnegative"):
        Scale(1j, Star(M))
    assert Scale(0.5, Star(M)).coeff == complex(0.5)


# ---------------------------------------------------------------------------
# Eliminators and empty type
# ---------------------------------------------------------------------------


def test_abort_inhabits_anything_from_zero():
    d = chk("\\x. abort(x)", "0 -o B(1)", M)
    assert d.rule == "lam"


def test_projection_records_its_index():
    d = chk("\\x. proj2(x, y. y)", "1 & qubit -o qubit")
    body = d.premises[0]
    assert body.rule == "proj2"
    assert body.index == 2


def test_case_branches_must_agree_on_goal():
    d = chk(
        "\\x. case x of { inl a -> inr a ; inr b -> inl b }",
        "1 + B(qubit) -o B(qubit) + 1",
        M,
    )
    assert d.premises[0].rule == "case"
    with pytest.raises(TypingError):
        chk(
            "\\x. case x of { inl a -> inl a ; inr b -> inl b }",
            "1 + B(qubit) -o B(qubit) + 1",
            M,
        )


def test_tensor_elimination_splits_the_context():
    d = chk("\\x. let a @ b = x in b @ a", "1 * qubit -o qubit * 1")
    assert d.premises[0].rule == "tens_elim"


def test_unit_elimination():
    d = chk("\\x. let * = x in *", "1 -o 1")
    assert d.premises[0].rule == "unit_elim"


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------


def test_infer_application_of_annotated_redex():
    d = infer_term(parse_term("(\\x. x) *", P))
    assert d.prop == One(P)
    assert d.rule == "app"


def test_bare_lambda_domain_cannot_be_inferred():
    with pytest.raises(CannotInfer):
        infer_term(parse_term("\\x. x", P))


def test_elaborate_returns_a_term_of_the_same_type():
    t = parse_term("(\\x. x) <*, 0 . *>", P)
    q = parse_prop("qubit", P)
    e = elaborate_term(t, q)
    assert check_term(e, q).prop == q


# ---------------------------------------------------------------------------
# Derivation audit
# ---------------------------------------------------------------------------


def test_validate_catches_a_corrupted_premise_context():
    d = chk("<*, 2 . *>", "1 & 1")
    corrupted = dataclasses.replace(
        d,
        premises=(
            dataclasses.replace(d.premises[0], ctx=(("q", One(P)),)),
            d.premises[1],
        ),
    )
    with pytest.raises(AssertionError):
        validate_derivation(corrupted)


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_generated_terms_typecheck_and_derivations_validate(seed):
    prop, t = generate_term(random.Random(seed), GenConfig())
    d = check_term(t, prop)
    assert d.prop == prop
    validate_derivation(d)


def test_prelude_definitions_typecheck(prelude):
    for d in prelude.definitions:
        deriv = check_term(d.body, d.prop)
        assert deriv.prop == d.prop
        validate_derivation(deriv)
