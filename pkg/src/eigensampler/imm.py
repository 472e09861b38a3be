"""Recursive row-query evaluation of sparse matrix chain products.

Entries of B_r ... B_1 |phi> are computed by depth-r recursion over the rows
of the sparse factors, touching at most s^r coordinates of phi and never
materializing an intermediate vector. The sampled sandwich estimator reuses
the inner-product machinery with the chain entry map as the target vector.
"""

import math

import numpy as np

from .errors import ValidationError
from .hamiltonian import _parity
from .state_access import VectorAccessor, estimate_inner_product


class MatrixChain:
    """An ordered list [B_1, ..., B_r] of row-sparse handles.

    B_1 is applied to the vector first. norm_bounds holds one spectral-norm
    upper bound per matrix (defaults to 1 each); the empty chain is the
    identity.
    """

    def __init__(self, matrices, norm_bounds=None):
        self.matrices = list(matrices)
        if norm_bounds is None:
            norm_bounds = [1.0] * len(self.matrices)
        self.norm_bounds = [float(b) for b in norm_bounds]
        if len(self.norm_bounds) != len(self.matrices):
            raise ValidationError("one norm bound per chain matrix required")
        dims = {m.dimension for m in self.matrices}
        if len(dims) > 1:
            raise ValidationError(f"chain matrices disagree on dimension: {sorted(dims)}")
        self.dimension = dims.pop() if dims else None

    @property
    def r(self):
        return len(self.matrices)

    @property
    def s(self):
        return max((m.sparsity for m in self.matrices), default=0)

    def is_signed_permutation(self):
        return all(m.perm_phase is not None for m in self.matrices)


def chain_entry(ell, chain, phi, counters=None):
    """Exact <ell| B_r ... B_1 |phi> by recursion over sparse rows.

    Space is O(r) stack frames of O(r + log s) loop state each; the only
    touches of phi are the leaf queries, at most prod(row nnz) <= s^r of them.
    """
    mats = chain.matrices if isinstance(chain, MatrixChain) else list(chain)
    return _entry(int(ell), mats, len(mats), phi, counters, 0)


def _entry(ell, mats, remaining, phi, counters, depth):
    if counters is not None:
        counters.note_depth(depth)
    if remaining == 0:
        if counters is not None:
            counters.leaf_queries += 1
            counters.vector_queries += 1
        return complex(phi.query(ell))
    handle = mats[remaining - 1]
    total = 0.0j
    for pos in range(handle.row_nnz(ell)):
        col, val = handle.row_entry(ell, pos)
        if val == 0:
            continue
        total += val * _entry(col, mats, remaining - 1, phi, counters, depth + 1)
    return total


class ChainVector(VectorAccessor):
    """Query access to the vector B_r ... B_1 |phi> without materializing it."""

    def __init__(self, chain, phi, counters=None):
        self.chain = chain
        self.phi = phi
        self.counters = counters
        self.dimension = chain.dimension if chain.dimension is not None else phi.dimension
        self._fast = chain.is_signed_permutation() and hasattr(phi, "query_many")

    def query(self, j):
        return chain_entry(j, self.chain, self.phi, self.counters)

    def query_many(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        if not self._fast:
            return super().query_many(idx)
        # Signed-permutation factors: trace each index through the chain in
        # one vectorized pass, top factor first.
        cur = idx.copy()
        vals = np.ones(idx.shape, dtype=complex)
        for handle in reversed(self.chain.matrices):
            signs = _parity(cur & handle.perm_signmask)
            vals = vals * (handle.perm_phase * (1.0 - 2.0 * signs))
            cur = cur ^ handle.perm_xmask
        if self.counters is not None:
            self.counters.leaf_queries += idx.size
            self.counters.vector_queries += idx.size
            self.counters.note_depth(self.chain.r)
        return vals * self.phi.query_many(cur)


def estimate_chain_sandwich(psi, chain, phi, eps, delta, rng,
                            workers=1, counters=None):
    """Estimate <psi| B_r ... B_1 |phi> within eps * prod(norm bounds).

    Runs the ratio estimator against the chain-entry vector; precision is
    relative to the product of the per-matrix norm bounds, which dominates
    the true vector norm for a unit phi.
    """
    if not isinstance(chain, MatrixChain):
        chain = MatrixChain(chain)
    bound = math.prod(chain.norm_bounds)
    target = ChainVector(chain, phi, counters)
    return estimate_inner_product(
        psi, target, bound, eps, delta, rng, workers=workers, counters=counters
    )
