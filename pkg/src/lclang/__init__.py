"""Linear lambda calculus with pure and mixed fragments.

Parsing, linear type checking, normalization to canonical algebraic values,
and finite-dimensional matrix semantics, together with a small quantum
standard library built from the encodable gates, measurements and channels.
"""

__version__ = "0.1.0"

from .syntax import (  # noqa: F401
    Fragment, Proposition, Term, SourceSpan,
    Top, One, Zero, Lolli, With, Plus, Tensor, Boxed, QUBIT,
    Var, Sum, Scale, TopIntro, Star, LetStar, Lam, App, Pair, Proj,
    Inl, Inr, Case, Tens, LetTens, Abort, Box, Coerce,
    free_vars, alpha_eq, alpha_eq_approx, substitute, freshen,
    classify_value, is_value, ValueClass, erase_modalities,
)
