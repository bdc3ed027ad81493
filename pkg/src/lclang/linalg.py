"""Finite-dimensional linear-map semantics helpers.

Everything is a dense complex matrix acting on column vectors.  Composite
spaces follow one fixed index convention:

* tensor factors: the left factor is most significant, so basis pair (i, j)
  of A (x) B sits at flat index ``i * dim(B) + j`` (numpy's kron order),
* function spaces [S, T]: basis index ``j * dim(T) + k`` pairs input j with
  output k, i.e. the vector lists the map's matrix column by column,
* mixed-state carriers: states are row-stacked density matrices, so the
  rank-one lift of a column f is ``kron(f, conj(f))``.

Dimension-zero spaces are legal throughout; numpy keeps the empty shapes
consistent, which is what makes the empty type and the unit for sums work
without special cases.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

Matrix = np.ndarray


def identity(n: int) -> Matrix:
    return np.eye(n, dtype=complex)


def zeros(rows: int, cols: int) -> Matrix:
    return np.zeros((rows, cols), dtype=complex)


def compose(*maps: Matrix) -> Matrix:
    """compose(f, g, h) applies h first: the product f @ g @ h."""
    out = np.asarray(maps[0], dtype=complex)
    for m in maps[1:]:
        out = out @ np.asarray(m, dtype=complex)
    return out


def add(f: Matrix, g: Matrix) -> Matrix:
    return np.asarray(f, dtype=complex) + np.asarray(g, dtype=complex)


def scale(a: complex, f: Matrix) -> Matrix:
    return complex(a) * np.asarray(f, dtype=complex)


def dagger(f: Matrix) -> Matrix:
    return np.conj(np.asarray(f, dtype=complex)).T


def kron(f: Matrix, g: Matrix) -> Matrix:
    return np.kron(np.asarray(f, dtype=complex), np.asarray(g, dtype=complex))


def direct_sum(f: Matrix, g: Matrix) -> Matrix:
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    out = zeros(f.shape[0] + g.shape[0], f.shape[1] + g.shape[1])
    out[: f.shape[0], : f.shape[1]] = f
    out[f.shape[0] :, f.shape[1] :] = g
    return out


def proj(index: int, a: int, b: int) -> Matrix:
    """Projection A (+) B -> A (index 1) or -> B (index 2)."""
    out = zeros(a if index == 1 else b, a + b)
    if index == 1:
        out[:, :a] = identity(a)
    else:
        out[:, a:] = identity(b)
    return out


def inj(index: int, a: int, b: int) -> Matrix:
    """Injection A -> A (+) B (index 1) or B -> A (+) B (index 2)."""
    return dagger(proj(index, a, b))


def copair(f: Matrix, g: Matrix) -> Matrix:
    """[f, g] : A (+) B -> C out of f : A -> C and g : B -> C."""
    return np.concatenate(
        [np.asarray(f, dtype=complex), np.asarray(g, dtype=complex)], axis=1
    )


def pairing(f: Matrix, g: Matrix) -> Matrix:
    """<f, g> : C -> A (+) B out of f : C -> A and g : C -> B."""
    return np.concatenate(
        [np.asarray(f, dtype=complex), np.asarray(g, dtype=complex)], axis=0
    )


def tensor_permutation(dims: Sequence[int], perm: Sequence[int]) -> Matrix:
    """Reorder tensor factors: output factor j is input factor perm[j]."""
    dims = tuple(int(d) for d in dims)
    if not dims:
        return identity(1)
    n = 1
    for d in dims:
        n *= d
    cube = identity(n).reshape(*dims, n)
    return cube.transpose(*perm, len(dims)).reshape(n, n)


def swap(a: int, b: int) -> Matrix:
    """The braiding A (x) B -> B (x) A."""
    return tensor_permutation((a, b), (1, 0))


def distrib_right(d: int, a: int, b: int) -> Matrix:
    """D (x) (A (+) B) -> (D (x) A) (+) (D (x) B)."""
    out = zeros(d * a + d * b, d * (a + b))
    for i in range(d):
        for k in range(a + b):
            row = i * a + k if k < a else d * a + i * b + (k - a)
            out[row, i * (a + b) + k] = 1.0
    return out


def curry(f: Matrix, d_ctx: int, s: int, t: int) -> Matrix:
    """Transpose f : Ctx (x) S -> T into Ctx -> [S, T]."""
    f = np.asarray(f, dtype=complex)
    return f.reshape(t, d_ctx, s).transpose(2, 0, 1).reshape(s * t, d_ctx)


def eval_map(s: int, t: int) -> Matrix:
    """Application [S, T] (x) S -> T."""
    out = zeros(t, s * t * s)
    for j in range(s):
        for k in range(t):
            out[k, (j * t + k) * s + j] = 1.0
    return out


def bee(f: Matrix) -> Matrix:
    """Lift a pure map to the mixed carrier: density matrices, row-stacked."""
    f = np.asarray(f, dtype=complex)
    return np.kron(f, np.conj(f))


def tau_iso(h: int, k: int) -> Matrix:
    """Carrier multiplication B(P) (x) B(Q) -> B(P (x) Q), dims h = |P|, k = |Q|."""
    out = zeros(h * k * h * k, h * h * k * k)
    for r1 in range(h):
        for c1 in range(h):
            for r2 in range(k):
                for c2 in range(k):
                    row = (r1 * k + r2) * (h * k) + (c1 * k + c2)
                    col = (r1 * h + c1) * (k * k) + (r2 * k + c2)
                    out[row, col] = 1.0
    return out


def boxed_apply(m: Matrix, n: Matrix, s: int, t: int) -> Matrix:
    """bee(eval_map(s, t)) . tau_iso(s*t, s) . (m (x) n), contracted directly.

    m lands in B([S, T]) (s*t squared rows), n in B(S) (s squared rows); the
    composite would pass through a dense permutation of size (s*t*s)^2, so it
    is evaluated index-wise instead of materialized.
    """
    m = np.asarray(m, dtype=complex)
    n = np.asarray(n, dtype=complex)
    st = s * t
    # m row (j*t+k)*st + (jj*t+kk) pairs with n row j*s + jj.
    m4 = m.reshape(s, t, s, t, m.shape[1])
    n3 = n.reshape(s, s, n.shape[1])
    out = np.einsum("jkJKp,jJq->kKpq", m4, n3)
    return out.reshape(t * t, m.shape[1] * n.shape[1])


def hom_to_map(h: Matrix, s: int, t: int) -> Matrix:
    """Read a vector of the function space [S, T] back as a t-by-s matrix."""
    return np.asarray(h, dtype=complex).reshape(s, t).T


def map_to_hom(m: Matrix) -> Matrix:
    """Inverse of hom_to_map; returns a column vector."""
    m = np.asarray(m, dtype=complex)
    return m.T.reshape(-1, 1)


def unvec_density(v: Matrix) -> Matrix:
    """Row-stacked vector of length p*p back to a p-by-p matrix."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    p = round(v.shape[0] ** 0.5)
    return v.reshape(p, p)


def vec_density(rho: Matrix) -> Matrix:
    """Row-stack a p-by-p matrix into a column of length p*p."""
    rho = np.asarray(rho, dtype=complex)
    return rho.reshape(-1, 1)


def partial_trace(rho: Matrix, a: int, b: int, keep: str = "left") -> Matrix:
    """Trace out one tensor factor of a density matrix on A (x) B."""
    r4 = np.asarray(rho, dtype=complex).reshape(a, b, a, b)
    if keep == "left":
        return np.einsum("ikjk->ij", r4)
    if keep == "right":
        return np.einsum("kikj->ij", r4)
    raise ValueError(f"keep must be 'left' or 'right', not {keep!r}")


def matrix_to_json(m: Matrix) -> dict:
    m = np.asarray(m, dtype=complex)
    return {
        "rows": m.shape[0],
        "cols": m.shape[1],
        "entries": [[float(z.real), float(z.imag)] for z in m.reshape(-1)],
    }


def matrix_from_json(obj: dict) -> Matrix:
    rows, cols = int(obj["rows"]), int(obj["cols"])
    flat = np.array([complex(re, im) for re, im in obj["entries"]], dtype=complex)
    return flat.reshape(rows, cols)
