#!/usr/bin/env python3

"""Small dense/sparse helpers shared by the Fock-space modules.

Matrices are either ``numpy.ndarray`` or ``scipy.sparse`` CSR matrices.
Everything here accepts both and only densifies when a routine has no
sparse counterpart (eigenvalues, matrix exponentials).
"""

import logging

import numpy as np
import scipy.linalg
import scipy.sparse as sp

logger = logging.getLogger(__name__)

# matrices up to this dimension may be densified for expm/eigvalsh
DENSE_LIMIT = 2500


def is_sparse(m):
    return sp.issparse(m)


def as_sparse(m):
    if sp.issparse(m):
        return m.tocsr()
    return sp.csr_matrix(m)


def as_dense(m):
    if sp.issparse(m):
        return m.toarray()
    return np.asarray(m)


def dagger(m):
    if sp.issparse(m):
        return m.conj().T.tocsr()
    return np.conj(m).T


def matmul(x, y):
    """Matrix product that keeps sparse results in CSR form."""
    out = x @ y
    if sp.issparse(out):
        return out.tocsr()
    return np.asarray(out)


def trace(m):
    if sp.issparse(m):
        return complex(m.diagonal().sum())
    return complex(np.trace(m))


def trace_product(rho, op):
    """Tr(rho @ op) without forming the product."""
    if sp.issparse(rho):
        return complex(rho.multiply(as_sparse(op).T).sum())
    if sp.issparse(op):
        return complex(op.T.multiply(rho).sum())
    return complex(np.einsum('ij,ji->', rho, op))


def sandwich(k, rho):
    """K rho K^dagger."""
    return matmul(matmul(k, rho), dagger(k))


def max_abs(m):
    if sp.issparse(m):
        m = m.tocoo()
        return float(np.max(np.abs(m.data))) if m.nnz else 0.0
    return float(np.max(np.abs(m))) if m.size else 0.0


def hermitian_residual(m):
    return max_abs(m - dagger(m))


def commutator(x, y):
    return matmul(x, y) - matmul(y, x)


def restrict(m, indices):
    """Dense principal submatrix on ``indices``."""
    indices = np.asarray(indices, dtype=np.int64)
    if sp.issparse(m):
        return m.tocsr()[indices][:, indices].toarray()
    return np.asarray(m)[np.ix_(indices, indices)]


def support(*matrices, tol=0.0):
    """Union of the row/column indices carrying entries above ``tol``."""
    found = set()
    for m in matrices:
        if sp.issparse(m):
            coo = m.tocoo()
            keep = np.abs(coo.data) > tol
            found.update(coo.row[keep].tolist())
            found.update(coo.col[keep].tolist())
        else:
            rows, cols = np.nonzero(np.abs(m) > tol)
            found.update(rows.tolist())
            found.update(cols.tolist())
    return np.array(sorted(found), dtype=np.int64)


def hermitian_eigenvalues(m):
    """Eigenvalues of a Hermitian matrix, computed on its support.

    Off-support rows are exactly zero, so they only add zero eigenvalues,
    which are appended to keep the spectrum complete.
    """
    idx = support(m)
    dim = m.shape[0]
    if len(idx) == 0:
        return np.zeros(dim)
    if len(idx) > DENSE_LIMIT:
        logger.warning('diagonalizing a %d x %d block above DENSE_LIMIT', len(idx), len(idx))
    block = restrict(m, idx)
    values = scipy.linalg.eigvalsh(0.5 * (block + block.conj().T))
    return np.concatenate([values, np.zeros(dim - len(idx))])


def sector_expm(generator, sectors):
    """exp(generator) for an operator that is block diagonal on ``sectors``.

    ``sectors`` is an iterable of index arrays partitioning the space; each
    block is exponentiated densely and the result is assembled sparse.
    """
    generator = as_sparse(generator)
    rows, cols, data = [], [], []
    for idx in sectors:
        idx = np.asarray(idx, dtype=np.int64)
        if len(idx) == 0:
            continue
        block = scipy.linalg.expm(generator[idx][:, idx].toarray())
        r, c = np.meshgrid(idx, idx, indexing='ij')
        rows.append(r.ravel())
        cols.append(c.ravel())
        data.append(block.ravel())
    dim = generator.shape[0]
    out = sp.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(dim, dim), dtype=complex).tocsr()
    out.eliminate_zeros()
    return out
