"""Products and contractions: mode-n, multilinear, contraction, outer,
Kronecker, Khatri-Rao, Hadamard, strong Kronecker (matrix and block-tensor)."""

import itertools

import numpy as np
import pytest

from tenkit.dense import DenseTensor, extract_subtensor, frobenius_norm, unfold
from tenkit.ops import (BlockMatrix, BlockTensor3, contract, hadamard,
                        khatri_rao, kron_tensor, mode_n_matrix_product,
                        mode_n_vector_product, multilinear_product,
                        outer_product, strong_kron, strong_kron_tensor3)


def rt(dims, seed):
    return DenseTensor.from_array(np.random.default_rng(seed).standard_normal(dims))


def test_mode_n_identity():
    t = rt((3, 4, 2), 0)
    out = mode_n_matrix_product(t, np.eye(4), 2)
    assert np.array_equal(out.data, t.data)


def test_mode_n_rank1_multilinearity():
    rng = np.random.default_rng(1)
    a, b, c = rng.standard_normal(3), rng.standard_normal(4), rng.standard_normal(2)
    t = DenseTensor.from_array(np.einsum("i,j,k->ijk", a, b, c))
    B = rng.standard_normal((5, 3))
    want = np.einsum("i,j,k->ijk", B @ a, b, c)
    got = mode_n_matrix_product(t, B, 1)
    assert np.allclose(got.to_array(), want, rtol=0, atol=1e-14)


def test_mode_n_unfolding_identity_exact():
    # (t x_n B)_(n) must equal B @ t_(n) bitwise
    t = rt((3, 4, 5), 2)
    B = np.random.default_rng(3).standard_normal((2, 3))
    out = mode_n_matrix_product(t, B, 1)
    assert np.array_equal(unfold(out, 1), B @ unfold(t, 1))


def test_mode_n_shape_error_names_mode():
    t = rt((3, 4, 2), 4)
    with pytest.raises(ValueError, match="mode 2"):
        mode_n_matrix_product(t, np.zeros((2, 3)), 2)


def test_mode_n_vector_basis_selection():
    t = rt((3, 4, 2), 5)
    e2 = np.zeros(4)
    e2[1] = 1.0
    got = mode_n_vector_product(t, e2, 2)
    want = extract_subtensor(t, {2: 2})
    assert np.allclose(got.data, want.data, rtol=0, atol=0)


def test_mode_n_vector_full_contraction_yields_vector():
    rng = np.random.default_rng(6)
    t = rt((2, 3, 4, 5), 6)
    out = t
    for n, d in ((1, 2), (1, 3), (1, 4)):  # leading mode shifts after each
        out = mode_n_vector_product(out, rng.standard_normal(d), 1)
    assert isinstance(out, DenseTensor)
    assert out.dims == (5,)


def test_mode_n_vector_equals_matrix_route():
    t = rt((3, 4, 2), 7)
    b = np.random.default_rng(8).standard_normal(4)
    got = mode_n_vector_product(t, b, 2)
    via_matrix = mode_n_matrix_product(t, b[None, :], 2)
    squeezed = extract_subtensor(via_matrix, {2: 1})
    assert np.allclose(got.data, squeezed.data, rtol=1e-14, atol=1e-14)


def test_multilinear_identity_factors():
    t = rt((2, 3, 4), 9)
    out = multilinear_product(t, [None, np.eye(3), None])
    assert np.array_equal(out.data, t.data)


def test_multilinear_order_independence():
    t = rt((3, 4, 5), 10)
    rng = np.random.default_rng(11)
    mats = [rng.standard_normal((2, 3)), rng.standard_normal((6, 4)),
            rng.standard_normal((3, 5))]
    forward = multilinear_product(t, mats)
    back = t
    for n in (3, 2, 1):
        back = mode_n_matrix_product(back, mats[n - 1], n)
    denom = frobenius_norm(forward)
    assert np.linalg.norm(forward.data - back.data) <= 1e-12 * denom


def test_contract_matrix_product_cases():
    rng = np.random.default_rng(12)
    A = rng.standard_normal((3, 4))
    B = rng.standard_normal((4, 5))
    ta, tb = DenseTensor.from_array(A), DenseTensor.from_array(B)
    assert np.allclose(contract(ta, tb, [2], [1]).to_array(), A @ B,
                       rtol=1e-14, atol=1e-14)
    C = rng.standard_normal((5, 4))
    tc = DenseTensor.from_array(C)
    assert np.allclose(contract(ta, tc, [2], [2]).to_array(), A @ C.T,
                       rtol=1e-14, atol=1e-14)


def test_contract_full_is_squared_norm():
    t = rt((2, 3, 4), 13)
    got = contract(t, t, [1, 2, 3], [1, 2, 3])
    assert isinstance(got, float)
    assert np.isclose(got, frobenius_norm(t) ** 2, rtol=1e-13)


def test_contract_fourth_order_vs_loop_oracle():
    # C = A x_{4,3}^{1,2} B, entries c[i1,i2,j3,j4] = sum a[i1,i2,i3,i4] b[i4,i3,j3,j4]
    rng = np.random.default_rng(14)
    A = rng.standard_normal((2, 3, 2, 4))
    B = rng.standard_normal((4, 2, 3, 2))
    want = np.zeros((2, 3, 3, 2))
    for i1, i2, i3, i4 in itertools.product(range(2), range(3), range(2), range(4)):
        for j3, j4 in itertools.product(range(3), range(2)):
            want[i1, i2, j3, j4] += A[i1, i2, i3, i4] * B[i4, i3, j3, j4]
    got = contract(DenseTensor.from_array(A), DenseTensor.from_array(B),
                   [4, 3], [1, 2])
    assert np.allclose(got.to_array(), want, rtol=1e-13, atol=1e-13)


def test_contract_errors():
    t = rt((2, 3), 15)
    with pytest.raises(ValueError, match="equal length"):
        contract(t, t, [1, 2], [1])
    with pytest.raises(ValueError, match="repeated"):
        contract(t, t, [1, 1], [1, 2])
    with pytest.raises(ValueError, match="length"):
        contract(t, t, [1], [2])


def test_outer_product_vectors_rank1():
    a = np.array([1.0, 2.0])
    b = np.array([3.0, -1.0, 2.0])
    got = outer_product(DenseTensor.from_array(a), DenseTensor.from_array(b))
    assert np.array_equal(got.to_array(), np.outer(a, b))


def test_outer_with_unit_tensor_scales():
    t = rt((2, 3), 16)
    one = DenseTensor((1,), [2.5])
    got = outer_product(t, one)
    assert got.dims == (2, 3, 1)
    assert np.allclose(got.data, 2.5 * t.data, rtol=0, atol=0)


def test_outer_norm_separability():
    a, b = rt((2, 3), 17), rt((4,), 18)
    got = outer_product(a, b)
    assert np.isclose(frobenius_norm(got),
                      frobenius_norm(a) * frobenius_norm(b), rtol=1e-13)


def test_kron_tensor_frozen_vectors():
    a = DenseTensor.from_array(np.array([[1.0], [2.0]]))
    b = DenseTensor.from_array(np.array([[3.0], [4.0]]))
    got = kron_tensor(a, b)
    assert got.dims == (4, 1)
    assert np.array_equal(got.to_array()[:, 0], [3, 4, 6, 8])


def test_kron_tensor_unit_identity():
    t = rt((2, 3), 19)
    one = DenseTensor((1,), [1.0])
    got = kron_tensor(t, one)
    assert got.dims == (2, 3)
    assert np.array_equal(got.data, t.data)


def test_kron_tensor_entries_permute_outer_product():
    # index rule oracle: c[(i-1)J+j, ...] == a[i,...] * b[j,...]
    a, b = rt((2, 3), 20), rt((3, 2), 21)
    kr = kron_tensor(a, b)
    out = outer_product(a, b)
    for i1, i2 in itertools.product(range(2), range(3)):
        for j1, j2 in itertools.product(range(3), range(2)):
            assert kr.to_array()[i1 * 3 + j1, i2 * 2 + j2] == \
                out.to_array()[i1, i2, j1, j2]
    assert np.allclose(np.sort(kr.data), np.sort(out.data), rtol=0, atol=0)


def test_kron_tensor_matrices_match_classical():
    a, b = rt((2, 3), 22), rt((2, 2), 23)
    got = kron_tensor(a, b)
    assert np.array_equal(got.to_array(), np.kron(a.to_array(), b.to_array()))


def test_khatri_rao_single_column():
    a = np.array([[1.0], [2.0]])
    b = np.array([[3.0], [4.0], [5.0]])
    assert np.array_equal(khatri_rao(a, b)[:, 0],
                          np.kron(a[:, 0], b[:, 0]))


def test_khatri_rao_ones_row():
    a = np.random.default_rng(24).standard_normal((4, 3))
    ones = np.ones((1, 3))
    assert np.array_equal(khatri_rao(a, ones), a)
    with pytest.raises(ValueError, match="column"):
        khatri_rao(a, np.ones((2, 2)))


def test_khatri_rao_gram_identity():
    rng = np.random.default_rng(25)
    a = rng.standard_normal((5, 3))
    b = rng.standard_normal((4, 3))
    kr = khatri_rao(a, b)
    want = (a.T @ a) * (b.T @ b)
    assert np.allclose(kr.T @ kr, want, rtol=1e-12, atol=1e-12)


def test_hadamard():
    t = rt((2, 3), 26)
    ones = DenseTensor((2, 3), np.ones(6))
    zeros = DenseTensor((2, 3), np.zeros(6))
    assert np.array_equal(hadamard(t, ones).data, t.data)
    assert np.array_equal(hadamard(t, zeros).data, np.zeros(6))
    u = rt((2, 3), 27)
    assert np.array_equal(hadamard(t, u).data, hadamard(u, t).data)
    with pytest.raises(ValueError):
        hadamard(t, rt((3, 2), 28))


def test_strong_kron_singleton_grids_is_kron():
    rng = np.random.default_rng(29)
    a = BlockMatrix(rng.standard_normal((1, 1, 2, 3)))
    b = BlockMatrix(rng.standard_normal((1, 1, 3, 2)))
    got = strong_kron(a, b)
    assert got.grid == (1, 1)
    assert np.array_equal(got.to_dense(),
                          np.kron(a.blocks[0, 0], b.blocks[0, 0]))


def test_strong_kron_grid_shapes_and_formula():
    # R1=2, R2=3, R3=2 grids give a 2x2 block result matching the sum formula
    rng = np.random.default_rng(30)
    a = BlockMatrix(rng.standard_normal((2, 3, 2, 2)))
    b = BlockMatrix(rng.standard_normal((3, 2, 3, 2)))
    got = strong_kron(a, b)
    assert got.grid == (2, 2)
    assert got.block_shape == (6, 4)
    for r1 in range(2):
        for r3 in range(2):
            want = sum(np.kron(a.blocks[r1, r2], b.blocks[r2, r3])
                       for r2 in range(3))
            assert np.allclose(got.blocks[r1, r3], want, rtol=1e-14, atol=1e-14)


def test_strong_kron_grid_mismatch():
    a = BlockMatrix(np.zeros((2, 3, 1, 1)))
    b = BlockMatrix(np.zeros((2, 2, 1, 1)))
    with pytest.raises(ValueError, match="grid"):
        strong_kron(a, b)


def test_block_matrix_dense_roundtrip():
    rng = np.random.default_rng(31)
    dense = rng.standard_normal((4, 6))
    bm = BlockMatrix.from_dense(dense, (2, 3))
    assert np.array_equal(bm.to_dense(), dense)
    assert np.array_equal(bm.blocks[1, 2], dense[2:4, 4:6])


def test_strong_kron_tensor3_singleton_is_kron_tensor():
    rng = np.random.default_rng(32)
    a = BlockTensor3(rng.standard_normal((1, 1, 2, 3, 2)))
    b = BlockTensor3(rng.standard_normal((1, 1, 2, 2, 3)))
    got = strong_kron_tensor3(a, b)
    want = kron_tensor(DenseTensor.from_array(a.blocks[0, 0]),
                       DenseTensor.from_array(b.blocks[0, 0]))
    assert np.array_equal(got.blocks[0, 0], want.to_array())


def test_strong_kron_tensor3_associative_on_singletons():
    rng = np.random.default_rng(33)
    blocks = [BlockTensor3(rng.standard_normal((1, 1, 2, 2, 2)))
              for _ in range(3)]
    left = strong_kron_tensor3(strong_kron_tensor3(blocks[0], blocks[1]),
                               blocks[2])
    right = strong_kron_tensor3(blocks[0],
                                strong_kron_tensor3(blocks[1], blocks[2]))
    assert np.allclose(left.blocks, right.blocks, rtol=1e-13, atol=1e-13)


def test_strong_kron_tensor3_chain_reproduces_tensorized_data():
    # four-core chain vs explicit sum over rank tuples of chained Kroneckers
    rng = np.random.default_rng(34)
    ranks = [1, 2, 3, 2, 1]
    shapes = [(2, 2, 2), (2, 3, 2), (3, 2, 2), (2, 2, 3)]
    cores = [BlockTensor3(rng.standard_normal((ranks[k], ranks[k + 1]) + shapes[k]))
             for k in range(4)]
    acc = cores[0]
    for c in cores[1:]:
        acc = strong_kron_tensor3(acc, c)
    assert acc.grid == (1, 1)
    want = np.zeros(acc.block_shape)
    for r1 in range(ranks[1]):
        for r2 in range(ranks[2]):
            for r3 in range(ranks[3]):
                term = cores[0].blocks[0, r1]
                for c, (ra, rb) in zip(cores[1:], [(r1, r2), (r2, r3), (r3, 0)]):
                    term = np.kron(term, c.blocks[ra, rb])
                want += term
    assert np.allclose(acc.blocks[0, 0], want, rtol=1e-12, atol=1e-12)


def test_contract_matrix_vector():
    rng = np.random.default_rng(35)
    A = rng.standard_normal((3, 4))
    x = rng.standard_normal(4)
    got = contract(DenseTensor.from_array(A), DenseTensor.from_array(x),
                   [2], [1])
    assert np.allclose(got.to_array(), A @ x, rtol=1e-14, atol=1e-14)
