"""Matrix Lie algebra data: trace pairing, dual bases, Casimir tensors.

A ``Representation`` is a list of linearly independent r x r matrices whose
span is closed under the commutator.  The invariant pairing is
``<a, b> = Tr(ab)`` on the matrices; everything downstream (dual bases,
Casimir tensors, their images) is computed in this concrete matrix form,
never with abstract enveloping-algebra symbols.

The degree-k Casimir tensor is read off the characteristic polynomial

    det(y*I - v) = sum_k (-1)^k y^(r-k) c_k(v),

where ``c_k`` is the k-th elementary symmetric function of the eigenvalues.
``c_k`` restricted to the span is a homogeneous polynomial of the basis
coordinates; its full polarization gives the symmetric coefficient tensor
``C_k(i_1, ..., i_k)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePairing

STRUCT_TOL = 1e-12     # structural checks on unit-normalized matrices
COND_CAP = 1e12        # pairing condition number beyond which we refuse


def _as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def coordinates_in_span(basis: list[np.ndarray], m: np.ndarray) -> tuple[np.ndarray, float]:
    """Least-squares coordinates of ``m`` over ``basis`` and the fit residual."""
    cols = np.stack([b.ravel() for b in basis], axis=1)
    rhs = m.ravel()
    coeff, *_ = np.linalg.lstsq(cols, rhs, rcond=None)
    resid = np.linalg.norm(cols @ coeff - rhs)
    return coeff, resid


@dataclass(frozen=True)
class Representation:
    """A faithful matrix realization of a reductive algebra.

    Attributes
    ----------
    basis : list of complex (r, r) arrays, linearly independent, with
        commutators lying back in the span.
    label : family tag, e.g. ``"gl"``, ``"sl"`` or ``"custom"``.
    """

    basis: tuple[np.ndarray, ...]
    label: str = "custom"

    def __init__(self, basis, label: str = "custom", validate: bool = True):
        mats = tuple(_as_matrix(b) for b in basis)
        object.__setattr__(self, "basis", mats)
        object.__setattr__(self, "label", label)
        if validate:
            self._validate()

    @property
    def dim_rep(self) -> int:
        return self.basis[0].shape[0]

    @property
    def dim_alg(self) -> int:
        return len(self.basis)

    def _validate(self) -> None:
        if not self.basis:
            raise ValueError("empty basis")
        r = self.dim_rep
        for b in self.basis:
            if b.shape != (r, r):
                raise ValueError("basis matrices have inconsistent shapes")
        # Linear independence via the Frobenius Gram matrix of the span.
        cols = np.stack([b.ravel() for b in self.basis], axis=1)
        frob = cols.conj().T @ cols
        sv = np.linalg.svd(frob, compute_uv=False)
        if sv[-1] <= sv[0] * 1e-13:
            raise ValueError("basis matrices are linearly dependent")
        # Closure under commutator, on unit-normalized pairs.
        for i, a in enumerate(self.basis):
            for b in self.basis[i + 1:]:
                comm = a @ b - b @ a
                scale = max(np.linalg.norm(a) * np.linalg.norm(b), 1.0)
                _, resid = coordinates_in_span(list(self.basis), comm)
                if resid / scale > STRUCT_TOL:
                    raise ValueError(
                        f"span not closed under commutator (residual {resid/scale:.2e})"
                    )

    def contains(self, m, tol: float = 1e-10) -> bool:
        """Whether ``m`` lies in the span of the basis (residual below ``tol``)."""
        _, resid = coordinates_in_span(list(self.basis), _as_matrix(m))
        return resid <= tol * max(1.0, np.linalg.norm(m))

    def coordinates(self, m) -> np.ndarray:
        coeff, _ = coordinates_in_span(list(self.basis), _as_matrix(m))
        return coeff

    @property
    def matrices(self) -> tuple[np.ndarray, ...]:
        return self.basis

    def dual(self) -> list[np.ndarray]:
        return dual_basis(self)


@dataclass(frozen=True)
class CartanBasis:
    """Pairwise-commuting, individually diagonalizable elements of the algebra."""

    parent: Representation
    matrices: tuple[np.ndarray, ...] = field(default=())

    def __init__(self, parent: Representation, elements, validate: bool = True):
        mats = tuple(_as_matrix(e) for e in elements)
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "matrices", mats)
        if validate:
            self._validate()

    @property
    def dim(self) -> int:
        return len(self.matrices)

    def _validate(self) -> None:
        for i, a in enumerate(self.matrices):
            for b in self.matrices[i + 1:]:
                scale = max(np.linalg.norm(a) * np.linalg.norm(b), 1.0)
                if np.linalg.norm(a @ b - b @ a) / scale > STRUCT_TOL:
                    raise ValueError("Cartan elements do not commute")
            w, v = np.linalg.eig(a)
            # diagonalizable <=> eigenvector matrix inverts cleanly
            recon = v @ np.diag(w) @ np.linalg.inv(v)
            if np.linalg.norm(recon - a) > 1e-8 * max(1.0, np.linalg.norm(a)):
                raise ValueError("Cartan element is not diagonalizable")

    def dual(self) -> list[np.ndarray]:
        return dual_basis(self)


def gram(rep) -> np.ndarray:
    """Gram matrix g_ij = Tr(e_i e_j) of the trace pairing.

    Accepts a ``Representation`` or a ``CartanBasis``.
    """
    mats = rep.matrices
    d = len(mats)
    g = np.empty((d, d), dtype=complex)
    for i in range(d):
        for j in range(i, d):
            g[i, j] = np.trace(mats[i] @ mats[j])
            g[j, i] = g[i, j]
    return g


def dual_basis(rep) -> list[np.ndarray]:
    """Dual basis e^j with <e_i, e^j> = delta_ij under the trace pairing.

    Raises
    ------
    DegeneratePairing
        If the Gram matrix is numerically singular (condition number above
        1e12).  Degenerate pairings are never regularized.
    """
    g = gram(rep)
    if np.linalg.cond(g) > COND_CAP:
        raise DegeneratePairing(
            "trace pairing is degenerate on this basis; "
            "check faithfulness / linear independence"
        )
    ginv = np.linalg.inv(g)
    mats = rep.matrices
    dual = [sum(ginv[j, i] * mats[i] for i in range(len(mats))) for j in range(len(mats))]
    for i, ei in enumerate(mats):
        for j, ej in enumerate(dual):
            want = 1.0 if i == j else 0.0
            if abs(np.trace(ei @ ej) - want) > 1e-12 * max(1.0, abs(g).max()):
                raise DegeneratePairing("dual basis verification failed")
    return dual


def char_coeff(rep: Representation, v, k: int) -> complex:
    """Degree-k characteristic coefficient c_k(v), with c_0 = 1.

    ``v`` may be a matrix or a coordinate vector over ``rep.basis``.
    """
    m = _coerce_element(rep, v)
    r = m.shape[0]
    if not 0 <= k <= r:
        raise ValueError(f"need 0 <= k <= {r}, got {k}")
    coeffs = np.poly(m)  # det(yI - m) = sum coeffs[k] y^(r-k), coeffs[0] = 1
    return complex((-1) ** k * coeffs[k])


def _coerce_element(rep: Representation, v) -> np.ndarray:
    a = np.asarray(v, dtype=complex)
    if a.ndim == 2:
        return a
    if a.ndim == 1 and a.shape[0] == rep.dim_alg:
        return sum(c * b for c, b in zip(a, rep.basis))
    raise ValueError("element must be a matrix or a coordinate vector")


@dataclass(frozen=True)
class CasimirTensor:
    """Symmetric coefficient tensor C_k over a chosen basis.

    ``coeffs`` maps index k-tuples (0-based, all d^k of them) to complex
    values; ``basis_ref`` is the basis object the indices refer to.
    """

    k: int
    coeffs: dict
    basis_ref: object

    def __getitem__(self, idx: tuple) -> complex:
        return self.coeffs.get(tuple(idx), 0.0)

    def contract(self, coords: np.ndarray) -> complex:
        """sum C_k(i_1..i_k) v^(i_1)...v^(i_k) for a coordinate vector v."""
        total = 0.0 + 0.0j
        for idx, c in self.coeffs.items():
            term = c
            for i in idx:
                term *= coords[i]
            total += term
        return complex(total)


def casimir_tensor(rep: Representation, basis, k: int) -> CasimirTensor:
    """Symmetric degree-k Casimir coefficient tensor by polarization.

    ``basis`` is either the representation itself (full basis) or a
    ``CartanBasis``.  The coefficients satisfy

        sum_{i_1..i_k} C_k(i_1,..,i_k) v^(i_1) ... v^(i_k) = c_k(v)

    for every v in the span of the chosen basis, where c_k is the
    characteristic coefficient of the matrix v.
    """
    if k < 0 or k > rep.dim_rep:
        raise ValueError(f"need 0 <= k <= {rep.dim_rep}")
    if k == 0:
        return CasimirTensor(0, {(): 1.0 + 0.0j}, basis)
    mats = basis.matrices
    d = len(mats)
    coeffs: dict = {}
    # Polarize c_k over multisets, then spread to all permutations.
    fact_k = float(math.factorial(k))
    for multi in itertools.combinations_with_replacement(range(d), k):
        total = 0.0 + 0.0j
        for bits in itertools.product((0, 1), repeat=k):
            sz = sum(bits)
            if sz == 0:
                continue  # c_k(0) = 0 for k >= 1
            m = sum(mats[multi[j]] for j in range(k) if bits[j])
            total += (-1) ** (k - sz) * char_coeff(rep, m, k)
        value = total / fact_k
        for perm in set(itertools.permutations(multi)):
            coeffs[perm] = value
    return CasimirTensor(k, coeffs, basis)


def casimir_in_rep(rep: Representation, tensor: CasimirTensor) -> np.ndarray:
    """Image sum C_k(i_1..i_k) e^(i_1) ... e^(i_k) as an r x r matrix.

    Products of the dual-basis matrices stand in for tensor factors; the
    result commutes with every basis matrix of ``rep``.
    """
    r = rep.dim_rep
    if tensor.k == 0:
        return np.eye(r, dtype=complex)
    dual = tensor.basis_ref.dual()
    out = np.zeros((r, r), dtype=complex)
    for idx, c in tensor.coeffs.items():
        if c == 0:
            continue
        m = dual[idx[0]].copy()
        for i in idx[1:]:
            m = m @ dual[i]
        out += c * m
    return out


def gl_representation(r: int) -> Representation:
    """Full matrix algebra with the elementary-matrix basis E_ij."""
    basis = []
    for i in range(r):
        for j in range(r):
            m = np.zeros((r, r), dtype=complex)
            m[i, j] = 1.0
            basis.append(m)
    return Representation(basis, label="gl")


def sl_representation(r: int) -> Representation:
    """Traceless matrices: diagonal differences first, then off-diagonal units."""
    basis = []
    for i in range(r - 1):
        m = np.zeros((r, r), dtype=complex)
        m[i, i] = 1.0
        m[i + 1, i + 1] = -1.0
        basis.append(m)
    for i in range(r):
        for j in range(r):
            if i == j:
                continue
            m = np.zeros((r, r), dtype=complex)
            m[i, j] = 1.0
            basis.append(m)
    return Representation(basis, label="sl")


def diagonal_cartan(rep: Representation) -> CartanBasis:
    """The diagonal-unit Cartan basis E_11, ..., E_rr of the matrix algebra.

    This is the default insertion basis for loop-equation checks; it spans a
    maximal commutative diagonalizable subalgebra of the r x r matrices.
    """
    r = rep.dim_rep
    mats = []
    for i in range(r):
        m = np.zeros((r, r), dtype=complex)
        m[i, i] = 1.0
        mats.append(m)
    return CartanBasis(rep, mats)
