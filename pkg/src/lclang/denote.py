"""Denotational evaluation of typing derivations.

A derivation with conclusion ``x1:S1, ..., xn:Sn |- m : T`` denotes a complex
matrix of shape ``(dim T, dim S1 * ... * dim Sn)``: hypotheses are read as one
tensor factor each, left factor most significant, and the empty context is the
one-dimensional unit.  Pure and mixed propositions share the same dimension
arithmetic; the mixed-state carrier of a pure P is the space of row-stacked
density matrices, dimension ``dim(P) ** 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .syntax import (
    Boxed,
    Fragment,
    Lolli,
    One,
    Plus,
    Proposition,
    Tensor,
    Top,
    With,
    Zero,
)
from .typecheck import Ctx, Derivation


@dataclass(frozen=True)
class SemObject:
    """A space in the semantics: its dimension and which category it lives in
    (pure propositions denote Hilbert spaces, mixed ones operator spaces)."""

    dim: int
    fragment: Fragment

    def to_json(self) -> dict:
        return {"dim": self.dim, "fragment": self.fragment.name.lower()}


@dataclass(frozen=True)
class Denotation:
    """A typing derivation's matrix together with its source (the ordered
    context, one tensor factor per hypothesis) and target objects."""

    source: SemObject
    target: SemObject
    matrix: np.ndarray

    def __post_init__(self) -> None:
        assert self.matrix.shape == (self.target.dim, self.source.dim)

    def to_json(self) -> dict:
        return {
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "matrix": la.matrix_to_json(self.matrix),
        }


def prop_dim(p: Proposition) -> int:
    match p:
        case Top() | Zero():
            return 0
        case One():
            return 1
        case Lolli(dom, cod):
            return prop_dim(dom) * prop_dim(cod)
        case With(left, right) | Plus(left, right):
            return prop_dim(left) + prop_dim(right)
        case Tensor(left, right):
            return prop_dim(left) * prop_dim(right)
        case Boxed(inner):
            return prop_dim(inner) ** 2
    raise TypeError(f"not a proposition: {p!r}")


def denote_prop(p: Proposition) -> SemObject:
    return SemObject(prop_dim(p), p.fragment)


def ctx_dim(ctx: Ctx) -> int:
    n = 1
    for _, p in ctx:
        n *= prop_dim(p)
    return n


def denote_full(d: Derivation) -> Denotation:
    """Evaluate a derivation, keeping the source and target objects."""
    frag = d.prop.fragment
    return Denotation(SemObject(ctx_dim(d.ctx), frag),
                      denote_prop(d.prop), denote(d))


def boxed_fn_to_superop(v: np.ndarray, s: int, t: int) -> np.ndarray:
    """Turn a state of the boxed function space over [S, T] into the matrix
    acting on row-stacked densities, via the mixed application formula."""
    return la.boxed_apply(np.asarray(v, dtype=complex).reshape(-1, 1),
                          la.identity(s * s), s, t)


def choi_positive(superop: np.ndarray, s: int, t: int,
                  tol: float = 1e-9) -> bool:
    """Complete positivity check: the reshuffled Choi matrix must be
    Hermitian and positive semidefinite up to tol."""
    choi = np.asarray(superop, dtype=complex)
    choi = choi.reshape(t, t, s, s).transpose(0, 2, 1, 3).reshape(t * s, t * s)
    if not np.allclose(choi, choi.conj().T, atol=tol):
        return False
    return bool(np.linalg.eigvalsh((choi + choi.conj().T) / 2).min() >= -tol)


def denote(d: Derivation) -> np.ndarray:
    """Evaluate a derivation to its matrix, shape (dim prop, dim ctx)."""
    t = prop_dim(d.prop)
    match d.rule:
        case "var":
            return la.identity(t)
        case "unit_intro":
            return la.identity(1)
        case "top_intro":
            return la.zeros(0, ctx_dim(d.ctx))
        case "sum":
            return la.add(denote(d.premises[0]), denote(d.premises[1]))
        case "scale":
            return la.scale(d.scalar, denote(d.premises[0]))
        case "lam":
            body = d.premises[0]
            s = prop_dim(body.ctx[-1][1])
            cod = prop_dim(body.prop)
            return la.curry(denote(body), ctx_dim(body.ctx[:-1]), s, cod)
        case "app":
            f, a = d.premises
            s = prop_dim(a.prop)
            return la.compose(la.eval_map(s, t), la.kron(denote(f), denote(a)))
        case "box_app":
            f, a = d.premises
            p = prop_dim(a.prop.inner)
            q = prop_dim(d.prop.inner)
            return la.boxed_apply(denote(f), denote(a), p, q)
        case "pair":
            return la.pairing(denote(d.premises[0]), denote(d.premises[1]))
        case "proj1" | "proj2":
            scrut, body = d.premises
            index = 1 if d.rule == "proj1" else 2
            a = prop_dim(scrut.prop.left)
            b = prop_dim(scrut.prop.right)
            picked = a if index == 1 else b
            d_extra = ctx_dim(body.ctx[:-1])
            return la.compose(
                denote(body),
                la.swap(picked, d_extra),
                la.kron(la.proj(index, a, b), la.identity(d_extra)),
                la.kron(denote(scrut), la.identity(d_extra)),
            )
        case "inl" | "inr":
            index = 1 if d.rule == "inl" else 2
            a = prop_dim(d.prop.left)
            b = prop_dim(d.prop.right)
            return la.compose(la.inj(index, a, b), denote(d.premises[0]))
        case "case":
            scrut, left, right = d.premises
            a = prop_dim(scrut.prop.left)
            b = prop_dim(scrut.prop.right)
            d_extra = ctx_dim(left.ctx[:-1])
            return la.compose(
                la.copair(denote(left), denote(right)),
                la.distrib_right(d_extra, a, b),
                la.swap(a + b, d_extra),
                la.kron(denote(scrut), la.identity(d_extra)),
            )
        case "abort":
            arg = d.premises[0]
            d_extra = ctx_dim(d.ctx[len(arg.ctx):])
            return la.compose(
                la.zeros(t, 0), la.kron(denote(arg), la.identity(d_extra)))
        case "unit_elim":
            scrut, body = d.premises
            return la.kron(denote(scrut), denote(body))
        case "tens":
            return la.kron(denote(d.premises[0]), denote(d.premises[1]))
        case "tens_elim":
            scrut, body = d.premises
            d_extra = ctx_dim(body.ctx[:-2])
            return la.compose(
                denote(body), la.kron(la.identity(d_extra), denote(scrut)))
        case "box":
            return la.bee(denote(d.premises[0]))
        case "coerce":
            inner = d.prop.inner
            h = prop_dim(inner.left)
            k = prop_dim(inner.right)
            return la.compose(la.tau_iso(h, k), denote(d.premises[0]))
        case "exchange":
            dims = [prop_dim(p) for _, p in d.ctx]
            return la.compose(
                denote(d.premises[0]), la.tensor_permutation(dims, d.perm))
    raise ValueError(f"unknown derivation rule {d.rule!r}")
