"""Exact dense ground truth for small instances.

Everything here assembles explicit matrices and diagonalizes them; it exists
so the sampled estimators can be checked against exact values, and it backs
the oracle-exact policy that replaces the stochastic inner layer entirely.
Nothing in this module is a performance path.
"""

import numpy as np

from .errors import DenseLimitError, ValidationError
from .hamiltonian import Decomposition
from .imm import MatrixChain
from .state_access import VectorAccessor

# n <= 12 qubits: the O(N^3) eigendecomposition stays in the seconds range.
DENSE_DIMENSION_LIMIT = 2**12
_NORMAL_TOL = 1e-8
_RECON_TOL = 1e-8
_DEGENERACY_TOL = 1e-9


class DenseOperator:
    """A dense matrix with its cached eigendecomposition.

    Accepts Hermitian input only (checked against both the normality and the
    Hermiticity residual, so the spectrum is real and eigh applies); the
    eigenvalues are ascending and the reconstruction residual is verified.
    """

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValidationError(f"operator must be square, got {matrix.shape}")
        if matrix.shape[0] > DENSE_DIMENSION_LIMIT:
            raise DenseLimitError(
                f"dense operator dimension {matrix.shape[0]} exceeds "
                f"{DENSE_DIMENSION_LIMIT}"
            )
        adj = matrix.conj().T
        normal_gap = float(np.max(np.abs(matrix @ adj - adj @ matrix)))
        if normal_gap > _NORMAL_TOL:
            raise ValidationError(
                f"operator is not normal (max |AA* - A*A| = {normal_gap:.3e})"
            )
        herm_gap = float(np.max(np.abs(matrix - adj)))
        if herm_gap > _NORMAL_TOL:
            raise ValidationError(
                f"operator is not Hermitian (max |A - A*| = {herm_gap:.3e}); "
                f"a real spectrum is required"
            )
        self.matrix = matrix.copy()
        self.matrix.flags.writeable = False
        self.dimension = matrix.shape[0]
        eigenvalues, eigenvectors = np.linalg.eigh(self.matrix)
        recon = (eigenvectors * eigenvalues) @ eigenvectors.conj().T
        recon_gap = float(np.max(np.abs(recon - self.matrix)))
        if recon_gap > _RECON_TOL:
            raise ValidationError(
                f"eigendecomposition fails to reconstruct the operator "
                f"(max residual {recon_gap:.3e})"
            )
        self.eigenvalues = eigenvalues
        self.eigenvalues.flags.writeable = False
        self.eigenvectors = eigenvectors
        self.eigenvectors.flags.writeable = False

    def __repr__(self):
        return f"DenseOperator(N={self.dimension})"


def dense_term(handle):
    """Dense matrix of one row-query handle."""
    n = handle.dimension
    if n > DENSE_DIMENSION_LIMIT:
        raise DenseLimitError(
            f"term dimension {n} exceeds {DENSE_DIMENSION_LIMIT}"
        )
    mat = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for col, val in handle.row(i):
            mat[i, col] += val
    return mat


def reconstruct(decomp):
    """Assemble the dense sum of a decomposition's terms from row queries."""
    if decomp.dimension > DENSE_DIMENSION_LIMIT:
        raise DenseLimitError(
            f"decomposition dimension {decomp.dimension} exceeds "
            f"{DENSE_DIMENSION_LIMIT}"
        )
    total = np.zeros((decomp.dimension, decomp.dimension), dtype=complex)
    for handle in decomp.terms:
        total += dense_term(handle)
    return DenseOperator(total)


def _as_operator(op):
    if isinstance(op, DenseOperator):
        return op
    if isinstance(op, Decomposition):
        return reconstruct(op)
    return DenseOperator(op)


def _as_dense_vector(vec, dimension):
    if isinstance(vec, np.ndarray):
        out = np.asarray(vec, dtype=complex)
    elif hasattr(vec, "to_array"):
        out = vec.to_array()
    elif isinstance(vec, VectorAccessor):
        out = np.asarray(
            vec.query_many(np.arange(dimension, dtype=np.int64)), dtype=complex
        )
    else:
        out = np.asarray(vec, dtype=complex)
    if out.shape != (dimension,):
        raise ValidationError(
            f"vector has shape {out.shape}, expected ({dimension},)"
        )
    return out


def exact_ground_energy(op):
    """Smallest eigenvalue of the operator."""
    return float(_as_operator(op).eigenvalues[0])


def ground_vector(op):
    """An eigenvector attaining the smallest eigenvalue."""
    op = _as_operator(op)
    return op.eigenvectors[:, 0].copy()


def exact_overlap(op, w, sigma):
    """Norm of the projection of w onto the low-energy eigenspace.

    The eigenspace collects eigenvalues within sigma of the smallest; the
    cutoff carries a 1e-9 slack so exactly degenerate eigenvalues that
    scatter at machine precision stay grouped.
    """
    if sigma < 0:
        raise ValidationError(f"sigma must be nonnegative, got {sigma}")
    op = _as_operator(op)
    w = _as_dense_vector(w, op.dimension)
    cutoff = op.eigenvalues[0] + sigma + _DEGENERACY_TOL
    members = op.eigenvalues <= cutoff
    components = op.eigenvectors[:, members].conj().T @ w
    return float(np.linalg.norm(components))


def polynomial_matrix(op, P):
    """Dense P(A) through the eigenbasis, using the stable Chebyshev form."""
    op = _as_operator(op)
    values = P.eval_stable(op.eigenvalues)
    return (op.eigenvectors * values) @ op.eigenvectors.conj().T


def exact_sandwich(psi, op, phi, power=None, polynomial=None):
    """Exact <psi| f(op) |phi> by dense linear algebra.

    op may be a MatrixChain (or plain list of handles), a Decomposition, a
    DenseOperator, or a raw matrix. power=r evaluates the r-th matrix power
    and polynomial=P a polynomial, both in the eigenbasis; a chain is applied
    factor by factor and accepts neither keyword.
    """
    if power is not None and polynomial is not None:
        raise ValidationError("pass at most one of power and polynomial")
    if isinstance(op, MatrixChain) or isinstance(op, (list, tuple)):
        if power is not None or polynomial is not None:
            raise ValidationError(
                "power/polynomial do not apply to a matrix chain"
            )
        handles = op.matrices if isinstance(op, MatrixChain) else list(op)
        dims = {h.dimension for h in handles}
        if len(dims) > 1:
            raise ValidationError(
                f"chain matrices disagree on dimension: {sorted(dims)}"
            )
        dimension = dims.pop() if dims else None
        if dimension is None:
            dimension = np.asarray(phi).shape[0] if isinstance(phi, np.ndarray) \
                else phi.dimension
        left = _as_dense_vector(psi, dimension)
        value = _as_dense_vector(phi, dimension)
        for handle in handles:
            value = dense_term(handle) @ value
        return complex(np.vdot(left, value))
    op = _as_operator(op)
    left = _as_dense_vector(psi, op.dimension)
    right = _as_dense_vector(phi, op.dimension)
    lamb = op.eigenvalues
    if polynomial is not None:
        weights = polynomial.eval_stable(lamb)
    elif power is not None:
        power = int(power)
        if power < 0:
            raise ValidationError(f"power must be nonnegative, got {power}")
        weights = lamb**power
    else:
        weights = lamb
    left_c = op.eigenvectors.conj().T @ left
    right_c = op.eigenvectors.conj().T @ right
    return complex(np.sum(np.conj(left_c) * weights * right_c))
