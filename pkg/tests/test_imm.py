import numpy as np
import pytest

from eigensampler import (
    BasisState,
    Counters,
    DenseState,
    MatrixChain,
    ValidationError,
    chain_entry,
    estimate_chain_sandwich,
)
from eigensampler.hamiltonian import PauliTermHandle
from eigensampler.imm import ChainVector

from helpers import (
    all_rows_s_handle,
    pauli_matrix,
    random_sparse_handle,
    random_state_vector,
)


def dense_chain_product(denses):
    """Product B_r ... B_1 for matrices listed first-applied-first."""
    out = np.eye(denses[0].shape[0], dtype=complex)
    for d in denses:
        out = d @ out
    return out


def test_single_pauli_entries():
    x = PauliTermHandle("X", 1.0, 1)
    z = PauliTermHandle("Z", 1.0, 1)
    phi = BasisState(0, 2)
    # <0|X|0> = 0, <1|X|0> = 1
    assert chain_entry(0, MatrixChain([x]), phi) == 0
    assert chain_entry(1, MatrixChain([x]), phi) == 1
    # <0|ZX|0> applies X first, then Z: Z|1> = -|1>
    assert chain_entry(1, MatrixChain([x, z]), phi) == -1


def test_empty_chain_is_state_query():
    phi = DenseState(random_state_vector(np.random.default_rng(0), 4))
    assert chain_entry(2, MatrixChain([]), phi) == phi.query(2)


def test_pauli_chain_squares_to_identity():
    z = PauliTermHandle("Z", 1.0, 1)
    phi = DenseState(random_state_vector(np.random.default_rng(1), 2))
    for ell in range(2):
        assert chain_entry(ell, MatrixChain([z, z]), phi) == pytest.approx(
            complex(phi.query(ell))
        )


@pytest.mark.parametrize("seed", range(8))
def test_chain_entry_matches_dense_product(seed):
    rng = np.random.default_rng(200 + seed)
    dim = int(rng.integers(3, 20))
    r = int(rng.integers(1, 5))
    handles, denses = [], []
    for _ in range(r):
        h, d = random_sparse_handle(rng, dim, int(rng.integers(1, 4)))
        handles.append(h)
        denses.append(d)
    phi_v = random_state_vector(rng, dim)
    phi = DenseState(phi_v)
    want_vec = dense_chain_product(denses) @ phi_v
    chain = MatrixChain(handles)
    for ell in rng.integers(0, dim, size=4):
        got = chain_entry(int(ell), chain, phi)
        assert got == pytest.approx(want_vec[int(ell)], abs=1e-10)


def test_list_of_handles_accepted():
    x = PauliTermHandle("X", 2.0, 1)
    phi = BasisState(0, 2)
    assert chain_entry(1, [x], phi) == 2.0


def test_leaf_count_and_depth_on_uniform_rows():
    rng = np.random.default_rng(77)
    for s, r in [(2, 3), (3, 2), (1, 5)]:
        h, _ = all_rows_s_handle(rng, 16, s)
        chain = MatrixChain([h] * r)
        phi = DenseState(random_state_vector(rng, 16))
        c = Counters()
        chain_entry(0, chain, phi, c)
        assert c.leaf_queries == s**r
        assert c.max_depth == r


def test_mismatched_dimensions_rejected():
    a = PauliTermHandle("X", 1.0, 1)
    b = PauliTermHandle("XI", 1.0, 2)
    with pytest.raises(ValidationError):
        MatrixChain([a, b])


def test_chain_vector_fast_path_matches_recursion():
    """Signed-permutation chains answer batched queries like the generic path."""
    rng = np.random.default_rng(13)
    n = 3
    handles = [
        PauliTermHandle("XZY", -0.5, n),
        PauliTermHandle("ZZI", 1.5, n),
        PauliTermHandle("IYX", 0.25, n),
    ]
    phi = DenseState(random_state_vector(rng, 8))
    chain = MatrixChain(handles)
    vec = ChainVector(chain, phi)
    idx = np.arange(8)
    fast = vec.query_many(idx)
    slow = np.array([chain_entry(i, chain, phi) for i in range(8)])
    assert np.allclose(fast, slow, atol=1e-12)
    # handles are listed first-applied-first, so the dense product reverses
    want_mat = dense_chain_product([
        -0.5 * pauli_matrix("XZY"),
        1.5 * pauli_matrix("ZZI"),
        0.25 * pauli_matrix("IYX"),
    ])
    assert np.allclose(fast, want_mat @ np.asarray([phi.query(i) for i in range(8)]),
                       atol=1e-12)


def test_norm_bounds_default_to_one_each():
    h = PauliTermHandle("Z", 0.5, 1)
    chain = MatrixChain([h, h])
    assert chain.norm_bounds == [1.0, 1.0]
    assert chain.r == 2 and chain.s == 1
    with pytest.raises(ValidationError):
        MatrixChain([h, h], norm_bounds=[0.5])


def test_estimate_chain_sandwich_close_to_truth():
    rng = np.random.default_rng(3)
    n = 2
    handles = [PauliTermHandle("XZ", 0.8, n), PauliTermHandle("ZI", -0.6, n)]
    psi_v = random_state_vector(rng, 4)
    phi_v = random_state_vector(rng, 4)
    psi = DenseState(psi_v)
    phi = DenseState(phi_v)
    dense = (-0.6 * pauli_matrix("ZI")) @ (0.8 * pauli_matrix("XZ"))
    want = np.vdot(psi_v, dense @ phi_v)
    bound = 0.8 * 0.6
    est = estimate_chain_sandwich(psi, MatrixChain(handles), phi, 0.2, 0.05,
                                  np.random.default_rng(44))
    assert abs(est - want) <= 0.2 * bound


def test_estimate_chain_sandwich_precision_scales_with_bounds():
    # loose bounds widen the certified radius; the estimate still converges
    rng = np.random.default_rng(21)
    h = PauliTermHandle("Z", 1.0, 1)
    psi = DenseState(random_state_vector(rng, 2))
    chain = MatrixChain([h], norm_bounds=[10.0])
    est = estimate_chain_sandwich(psi, chain, psi, 0.5, 0.1,
                                  np.random.default_rng(5))
    want = abs(psi.query(0)) ** 2 - abs(psi.query(1)) ** 2
    assert abs(est - want) <= 0.5 * 10.0


def test_counters_flow_through_sandwich():
    rng = np.random.default_rng(0)
    h = PauliTermHandle("X", 1.0, 1)
    psi = DenseState(random_state_vector(rng, 2))
    c = Counters()
    estimate_chain_sandwich(psi, MatrixChain([h]), psi, 1.0, 0.5,
                            np.random.default_rng(1), counters=c)
    assert c.psi_samples > 0
    assert c.leaf_queries > 0
