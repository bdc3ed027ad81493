import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lclang.gen import GenConfig, generate_term
from lclang.parser import (
    ParseError,
    parse_program,
    parse_prop,
    parse_term,
    pretty,
    pretty_prop,
    pretty_program,
)
from lclang.syntax import (
    Boxed,
    Fragment,
    Lam,
    Lolli,
    One,
    Plus,
    QUBIT,
    Scale,
    Star,
    Tensor,
    Var,
    With,
    alpha_eq,
)

P = Fragment.PURE
M = Fragment.MIXED


# ---------------------------------------------------------------------------
# Scalars
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "src,value",
    [
        ("1/sqrt(2) . *", complex(1 / math.sqrt(2))),
        ("sqrt(2) . *", complex(math.sqrt(2))),
        ("2/3 . *", complex(2 / 3)),
        ("0.25 . *", complex(0.25)),
        ("1i . *", 1j),
        ("-1i . *", -1j),
        ("(2 + 3i) . *", 2 + 3j),
        ("-0.5 . *", complex(-0.5)),
    ],
)
def test_scalar_literals(src, value):
    t = parse_term(src, P)
    assert isinstance(t, Scale)
    assert t.coeff == value


def test_inv_sqrt2_is_the_float_everyone_expects():
    t = parse_term("1/sqrt(2) . *", P)
    assert t.coeff.real == 0.7071067811865475
    assert t.coeff.imag == 0.0


def test_mixed_scalars_must_be_nonnegative_reals():
    assert parse_term("0.5 . *", M).coeff == complex(0.5)
    with pytest.raises(ParseError, match="nonnegative"):
        parse_term("-0.5 . *", M)
    with pytest.raises(ParseError):
        parse_term("1i . *", M)


# ---------------------------------------------------------------------------
# Comments and layout
# ---------------------------------------------------------------------------


def test_hash_comments_and_blank_lines_are_ignored():
    src = """
# leading comment
pure def a : 1 = *   # trailing comment

# another
pure def b : 1 * 1 = a @ a
"""
    prog = parse_program(src, "f.lc")
    assert prog.names() == ["a", "b"]


def test_definitions_expand_previous_names():
    prog = parse_program("pure def a : 1 = *\npure def b : 1 * 1 = a @ a\n")
    b = prog.get("b")
    assert alpha_eq(b.body, parse_term("* @ *", P))


# ---------------------------------------------------------------------------
# Program-level errors carry file:line:col
# ---------------------------------------------------------------------------


def test_duplicate_definition_is_an_error():
    with pytest.raises(ParseError, match=r"f\.lc:2:10: duplicate definition of 'a'"):
        parse_program("pure def a : 1 = *\npure def a : 1 = *\n", "f.lc")


def test_undefined_name_is_an_error():
    with pytest.raises(ParseError, match=r"f\.lc:1:10: .*undefined names: b"):
        parse_program("pure def a : 1 = b\n", "f.lc")


def test_prelude_names_cannot_be_shadowed(prelude):
    with pytest.raises(ParseError, match="duplicate definition of 'k0'"):
        parse_program("pure def k0 : 1 = *\n", "f.lc", prelude=prelude)


def test_unbalanced_paren_reports_position():
    with pytest.raises(ParseError, match=r"g\.lc:1:7"):
        parse_term("(\\x. x", P, filename="g.lc")


def test_unknown_token_reports_position():
    with pytest.raises(ParseError):
        parse_term("* $ *", P)


# ---------------------------------------------------------------------------
# Propositions
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "src,expected",
    [
        ("1", One(P)),
        ("qubit", QUBIT),
        ("1 -o 1", Lolli(One(P), One(P))),
        ("1 * qubit", Tensor(One(P), QUBIT)),
        ("1 & 1", With(One(P), One(P))),
        # -o is right associative and binds loosest
        ("1 -o 1 -o 1", Lolli(One(P), Lolli(One(P), One(P)))),
        ("1 * 1 -o 1", Lolli(Tensor(One(P), One(P)), One(P))),
    ],
)
def test_pure_prop_grammar(src, expected):
    assert parse_prop(src, P) == expected


@pytest.mark.parametrize(
    "src,expected",
    [
        ("1", One(M)),
        ("1 + 1", Plus(One(M), One(M))),
        ("B(qubit)", Boxed(QUBIT)),
        ("B(qubit -o qubit)", Boxed(Lolli(QUBIT, QUBIT))),
        ("B(qubit) * B(qubit)", Tensor(Boxed(QUBIT), Boxed(QUBIT))),
    ],
)
def test_mixed_prop_grammar(src, expected):
    assert parse_prop(src, M) == expected


def test_boxed_contents_parse_in_the_pure_fragment():
    p = parse_prop("B(1 & 1)", M)
    assert p == Boxed(With(One(P), One(P)))


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


def test_application_is_left_associative():
    t = parse_term("\\f. \\x. f x", P)
    assert isinstance(t, Lam) and isinstance(t.body, Lam)


def test_scale_binds_looser_than_application():
    t = parse_term("2 . (\\x. x) *", P)
    assert isinstance(t, Scale)
    assert t.coeff == complex(2)


def test_prelude_parses_and_prints_stably(prelude):
    # Pretty printing is a fixpoint of parse . pretty on the bundled library.
    text = pretty_program(prelude)
    reparsed = parse_program(text, "roundtrip.lc")
    assert reparsed.names() == prelude.names()
    for d in prelude.definitions:
        assert alpha_eq(reparsed.get(d.name).body, d.body)
        assert reparsed.get(d.name).prop == d.prop


# ---------------------------------------------------------------------------
# Round trips over the generated corpus
# ---------------------------------------------------------------------------


@settings(max_examples=120, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_pretty_parse_round_trip(seed):
    prop, t = generate_term(random.Random(seed), GenConfig())
    t2 = parse_term(pretty(t), prop.fragment)
    assert alpha_eq(t, t2)


@settings(max_examples=120, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_prop_pretty_parse_round_trip(seed):
    prop, _ = generate_term(random.Random(seed), GenConfig())
    assert parse_prop(pretty_prop(prop), prop.fragment) == prop
