"""Orthogonal Hermitian operator bases and coefficient expansions.

Every dimension-``n`` Hilbert space gets a basis of n^2 Hermitian matrices
S_1, ..., S_{n^2}: the identity followed by the generalized Gell-Mann
matrices scaled by sqrt(n/2), so that

    Tr(S_j) = n * delta_{j,1}      and      Tr(S_j S_k) = n * delta_{j,k}.

For n = 2 this is exactly (identity, sigma_x, sigma_y, sigma_z).  Any
Hermitian operator M on a tensor product of such spaces is then

    M = (1/d) * sum_{k,l,...} r_{k,l,...} S_k (x) S_l (x) ...,
    r_{k,l,...} = Tr((S_k (x) S_l (x) ...) M),

with d the total dimension, and the coefficients r are real.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class OperatorBasis:
    """Hermitian operator basis for one subsystem.

    Attributes
    ----------
    dim : int
        Hilbert-space dimension n (>= 2).
    elements : tuple of ndarray
        n^2 Hermitian matrices, elements[0] = identity, ordered as
        identity, symmetric off-diagonal pairs, antisymmetric off-diagonal
        pairs, diagonal generators, each group in row-major index order.
    """

    dim: int
    elements: tuple = field(repr=False)

    def __len__(self):
        return len(self.elements)

    @property
    def stack(self):
        """All elements as one (n^2, n, n) array."""
        return np.stack(self.elements)


def build_basis(dim):
    """Construct the scaled Gell-Mann basis for one subsystem.

    Parameters
    ----------
    dim : int
        Hilbert-space dimension, at least 2.

    Returns
    -------
    OperatorBasis
    """
    if dim < 2:
        raise ValueError(f"basis needs dimension >= 2, got {dim}")
    scale = math.sqrt(dim / 2.0)
    elements = [np.eye(dim, dtype=complex)]
    # symmetric off-diagonal: (|j><k| + |k><j|)
    for j in range(dim):
        for k in range(j + 1, dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k] = 1.0
            m[k, j] = 1.0
            elements.append(scale * m)
    # antisymmetric off-diagonal: (-i|j><k| + i|k><j|)
    for j in range(dim):
        for k in range(j + 1, dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k] = -1.0j
            m[k, j] = 1.0j
            elements.append(scale * m)
    # diagonal: sqrt(2/(l(l+1))) * diag(1, ..., 1, -l, 0, ..., 0)
    for l in range(1, dim):
        v = np.zeros(dim)
        v[:l] = 1.0
        v[l] = -l
        m = np.diag(v).astype(complex) * math.sqrt(2.0 / (l * (l + 1)))
        elements.append(scale * m)
    for m in elements:
        m.setflags(write=False)
    return OperatorBasis(dim=dim, elements=tuple(elements))


@dataclass(frozen=True)
class CoefficientVector:
    """Real expansion coefficients of a multipartite Hermitian operator.

    ``coeffs`` has one axis per subsystem, axis t running over the
    n_t^2 basis elements of that subsystem.
    """

    coeffs: np.ndarray
    dims: tuple

    def ravel(self):
        return self.coeffs.ravel()


def expand(op, bases, herm_tol=1e-8):
    """Expand a Hermitian operator over tensor products of basis elements.

    Parameters
    ----------
    op : ndarray
        Square matrix on the tensor product of the given subsystems.
    bases : sequence of OperatorBasis
        One basis per tensor factor, in order.
    herm_tol : float
        Largest tolerated entry of op - op^dagger.

    Returns
    -------
    CoefficientVector
        coeffs[k, l, ...] = Tr((S_k (x) S_l (x) ...) op), real.
    """
    bases = list(bases)
    dims = tuple(b.dim for b in bases)
    d = math.prod(dims)
    op = np.asarray(op, dtype=complex)
    if op.shape != (d, d):
        raise ValueError(f"operator shape {op.shape} does not match dims {dims}")
    if np.max(np.abs(op - op.conj().T)) > herm_tol:
        raise ValueError("operator is not Hermitian within tolerance")
    s = len(dims)
    T = op.reshape(dims + dims)  # axes i_1..i_s, j_1..j_s
    for t in range(s):
        # Tr(S_k A) = sum_{j,i} S_k[j,i] A[i,j]; after t contractions the
        # current subsystem's i axis sits at position t and its j axis at s.
        T = np.tensordot(bases[t].stack, T, axes=((1, 2), (s, t)))
        T = np.moveaxis(T, 0, t)
    coeffs = np.ascontiguousarray(T.real)
    coeffs.setflags(write=False)
    return CoefficientVector(coeffs=coeffs, dims=dims)


def reconstruct(coeffs, bases):
    """Rebuild the operator from expansion coefficients (inverse of expand).

    Accepts a CoefficientVector or a bare array shaped like one.
    """
    if isinstance(coeffs, CoefficientVector):
        arr = coeffs.coeffs
    else:
        arr = np.asarray(coeffs)
    bases = list(bases)
    dims = tuple(b.dim for b in bases)
    d = math.prod(dims)
    shape = tuple(b.dim ** 2 for b in bases)
    if arr.shape != shape:
        raise ValueError(f"coefficient shape {arr.shape} does not match {shape}")
    s = len(dims)
    T = arr.astype(complex)
    for t in range(s):
        # consume the leading coefficient axis, appending (row, col) axes
        T = np.tensordot(T, bases[t].stack, axes=((0,), (0,)))
    # axes now (r_1, c_1, r_2, c_2, ...) -> (r_1..r_s, c_1..c_s)
    order = list(range(0, 2 * s, 2)) + list(range(1, 2 * s, 2))
    return T.transpose(order).reshape(d, d) / d
