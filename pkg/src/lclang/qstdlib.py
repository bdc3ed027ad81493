"""Quantum encodings as generated terms.

Qubits are additive pairs of units, n-qubit registers are right-associated
tensors of qubits, and arbitrary matrices become terms through the Pauli
basis: a 2^n square matrix is a linear combination of n-fold tensor products
of single-qubit maps, each encodable by projection on the additive pair.
``decode_value`` reads the amplitudes back off a value syntactically, so
encode/decode round-trips are exact on the stored scalars.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .syntax import (
    annotate_with_type,
    App,
    Box,
    Boxed,
    Coerce,
    Fragment,
    Lam,
    LetStar,
    LetTens,
    Lolli,
    One,
    Pair,
    Proj,
    Proposition,
    Scale,
    Star,
    Sum,
    Tens,
    Tensor,
    Term,
    Var,
    With,
)

PURE = Fragment.PURE
MIXED = Fragment.MIXED

QUBIT = With(One(PURE), One(PURE))

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)

COEFF_TOL = 1e-12


def nqubit_prop(n: int) -> Proposition:
    if n < 1:
        raise ValueError("need at least one qubit")
    return QUBIT if n == 1 else Tensor(QUBIT, nqubit_prop(n - 1))


def _num_qubits(length: int) -> int:
    n = length.bit_length() - 1
    if length < 2 or 2 ** n != length:
        raise ValueError(f"amplitude count {length} is not a power of two")
    return n


def _amp(c: complex) -> Term:
    star = Star(PURE)
    return star if c == 1 else Scale(c, star)


def encode_qubit(v) -> Term:
    """(a, b) becomes the additive pair <a . *, b . *>."""
    a, b = (complex(c) for c in v)
    return Pair(_amp(a), _amp(b))


def _basis_ket(bits: tuple[int, ...]) -> Term:
    head = encode_qubit((1, 0) if bits[0] == 0 else (0, 1))
    return head if len(bits) == 1 else Tens(head, _basis_ket(bits[1:]))


def encode_nqubit(v) -> Term:
    """A length-2^n vector as a combination of basis kets; exact zeros are
    dropped so the term mirrors the vector's support."""
    v = [complex(c) for c in v]
    n = _num_qubits(len(v))
    if n == 1:
        return encode_qubit(v)
    parts = []
    for i, c in enumerate(v):
        if c == 0:
            continue
        bits = tuple((i >> (n - 1 - k)) & 1 for k in range(n))
        ket = _basis_ket(bits)
        parts.append(ket if c == 1 else Scale(c, ket))
    if not parts:
        parts = [Scale(0.0, _basis_ket((0,) * n))]
    out = parts[0]
    for p in parts[1:]:
        out = Sum(out, p)
    return out


def decode_value(t: Term) -> np.ndarray:
    """Read the amplitude vector off a value of n-qubit type.  Linear over
    sums and scalings, exact on the stored scalars."""
    match t:
        case Sum(left, right):
            a, b = decode_value(left), decode_value(right)
            if a.shape != b.shape:
                raise ValueError("summands decode to different shapes")
            return a + b
        case Scale(coeff, body):
            return coeff * decode_value(body)
        case Star():
            return np.array([1.0 + 0j])
        case Pair(left, right):
            return np.concatenate([decode_value(left), decode_value(right)])
        case Tens(left, right):
            return np.kron(decode_value(left), decode_value(right))
    raise ValueError(f"not a value of qubit shape: {type(t).__name__}")


def _column_fn(col) -> Term:
    """The unit-consuming constant function u |-> encoded column."""
    return Lam("u", LetStar(Var("u", PURE), encode_qubit(col)))


def encode_matrix2(m) -> Term:
    """A 2x2 matrix as a qubit endomap: project each component of the input
    pair and emit the matching column."""
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    x = Var("x", PURE)
    body = Sum(
        Proj(1, x, "x1", App(_column_fn(m[:, 0]), Var("x1", PURE))),
        Proj(2, x, "x2", App(_column_fn(m[:, 1]), Var("x2", PURE))),
    )
    return annotate_with_type(Lam("x", body), Lolli(QUBIT, QUBIT))


def tensor_fn(f: Term, g: Term) -> Term:
    """Combine f and g acting on the two halves of a tensor."""
    z = Var("z", PURE)
    pieces = Tens(App(f, Var("x", PURE)), App(g, Var("y", PURE)))
    return Lam("z", LetTens(z, "x", "y", pieces))


def _pauli_chain(names: tuple[str, ...]) -> Term:
    head = encode_matrix2(PAULI[names[0]])
    if len(names) == 1:
        return head
    return tensor_fn(head, _pauli_chain(names[1:]))


def pauli_coefficients(m) -> dict[tuple[str, ...], complex]:
    """Expand a 2^n square matrix in the n-fold Pauli basis, dropping
    coefficients below COEFF_TOL."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    n = _num_qubits(m.shape[0])
    out = {}
    for names in itertools.product("IXYZ", repeat=n):
        p = PAULI[names[0]]
        for name in names[1:]:
            p = np.kron(p, PAULI[name])
        c = complex(np.trace(p.conj().T @ m)) / m.shape[0]
        if abs(c) >= COEFF_TOL:
            out[names] = c
    return out


def encode_matrix(m) -> Term:
    """An arbitrary 2^n square matrix as a pure endomap term on n qubits."""
    m = np.asarray(m, dtype=complex)
    if m.shape == (2, 2):
        return encode_matrix2(m)
    coeffs = pauli_coefficients(m)
    if not coeffs:
        coeffs = {("I",) * _num_qubits(m.shape[0]): 0.0}
    parts = []
    for names, c in coeffs.items():
        chain = _pauli_chain(names)
        parts.append(chain if c == 1 else Scale(c, chain))
    out = parts[0]
    for p in parts[1:]:
        out = Sum(out, p)
    nq = nqubit_prop(_num_qubits(m.shape[0]))
    return annotate_with_type(out, Lolli(nq, nq))


def validate_povm(operators, tol: float = 1e-9) -> list[np.ndarray]:
    ops = [np.asarray(p, dtype=complex) for p in operators]
    if not ops:
        raise ValueError("invalid POVM: no operators")
    side = ops[0].shape[0]
    _num_qubits(side)
    for p in ops:
        if p.shape != (side, side):
            raise ValueError("invalid POVM: operators must be square and "
                             "share one power-of-two dimension")
    total = sum(p.conj().T @ p for p in ops)
    if not np.allclose(total, np.eye(side), atol=tol):
        raise ValueError("invalid POVM: operators must compose to the "
                         "identity channel")
    return ops


def measurement_term(operators) -> Term:
    """The channel rho |-> sum_i P_i rho P_i^dagger as a sum of boxed
    operator encodings."""
    ops = validate_povm(operators)
    parts = [Box(encode_matrix(p)) for p in ops]
    out = parts[0]
    for p in parts[1:]:
        out = Sum(out, p)
    return out


def bell_state_vectors() -> list[np.ndarray]:
    """CNOT((H|i>) (x) |j>) for ij in 00, 01, 10, 11."""
    out = []
    for i in range(2):
        for j in range(2):
            ket_i = np.eye(2, dtype=complex)[:, i]
            ket_j = np.eye(2, dtype=complex)[:, j]
            out.append(CNOT @ np.kron(HADAMARD @ ket_i, ket_j))
    return out


def bell_measurement() -> Term:
    return measurement_term(
        [np.outer(b, b.conj()) for b in bell_state_vectors()])


def quantum_switch() -> Term:
    """Apply two qubit maps in an order controlled by a qubit.  Each branch
    rebuilds the observed control ket so the control stays in the output."""
    rebuild0 = LetStar(Var("x1", PURE), encode_qubit((1, 0)))
    rebuild1 = LetStar(Var("x2", PURE), encode_qubit((0, 1)))
    fg = App(Var("f", PURE), App(Var("g", PURE), Var("y", PURE)))
    gf = App(Var("g", PURE), App(Var("f", PURE), Var("y", PURE)))
    branches = Sum(
        Proj(1, Var("x", PURE), "x1", Tens(rebuild0, fg)),
        Proj(2, Var("x", PURE), "x2", Tens(rebuild1, gf)),
    )
    body = LetTens(Var("h", PURE), "f", "g",
                   LetTens(Var("z", PURE), "x", "y", branches))
    fn2 = Lolli(QUBIT, QUBIT)
    prop = Lolli(Tensor(fn2, fn2),
                 Lolli(Tensor(QUBIT, QUBIT), Tensor(QUBIT, QUBIT)))
    return annotate_with_type(Lam("h", Lam("z", body)), prop)


def _bell_kept_map(bell: np.ndarray) -> np.ndarray:
    """The map the teleported qubit undergoes when the pair made of the
    shared state's second half and the input is projected onto one Bell
    vector: psi |-> (I (x) <bell|) (beta00 (x) psi)."""
    beta00 = bell_state_vectors()[0]
    out = np.zeros((2, 2), dtype=complex)
    for j in range(2):
        v = np.kron(beta00, np.eye(2, dtype=complex)[:, j])
        out[:, j] = v.reshape(2, 4) @ bell.conj()
    return out


def teleportation() -> Term:
    """Teleport one boxed qubit: pair it with a shared entangled state,
    Bell-measure the half holding the input, correct the kept half."""
    beta00 = bell_state_vectors()[0]
    # (beta00 (x) input) arrives grouped ((a, b), psi); the measurement wants
    # a (x) (b, psi), so reassociate inside the box first.
    assoc = Lam("w", LetTens(
        Var("w", PURE), "p", "y",
        LetTens(Var("p", PURE), "a", "b",
                Tens(Var("a", PURE), Tens(Var("b", PURE), Var("y", PURE))))))
    three = nqubit_prop(3)
    assoc = annotate_with_type(
        assoc, Lolli(Tensor(Tensor(QUBIT, QUBIT), QUBIT), three))
    parts = []
    for bell in bell_state_vectors():
        kept = _bell_kept_map(bell)
        correction = 2.0 * kept.conj().T
        assert np.allclose(correction @ kept, np.eye(2) / 2, atol=1e-12)
        branch = tensor_fn(encode_matrix2(correction),
                           encode_matrix(np.outer(bell, bell.conj())))
        parts.append(Box(annotate_with_type(branch, Lolli(three, three))))
    u_term = parts[0]
    for p in parts[1:]:
        u_term = Sum(u_term, p)
    z = Var("z", MIXED)
    paired = Coerce(Tens(Box(encode_nqubit(beta00)), z))
    return annotate_with_type(
        Lam("z", App(u_term, App(Box(assoc), paired))),
        Lolli(Boxed(QUBIT), Boxed(three)))
