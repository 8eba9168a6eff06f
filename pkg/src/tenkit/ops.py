"""Multilinear products and contractions on dense tensors and block matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dense import DenseTensor, fold, unfold


def mode_n_matrix_product(t: DenseTensor, B, n: int) -> DenseTensor:
    """Mode-n product t x_n B.

    B has shape (J, I_n); the result replaces mode n by J and satisfies
    unfold(result, n) == B @ unfold(t, n) exactly (same reduction order).
    """
    B = np.asarray(B, dtype=np.float64)
    if B.ndim != 2:
        raise ValueError("mode-n factor must be a matrix")
    if not 1 <= n <= t.order:
        raise ValueError(f"mode {n} invalid for an order-{t.order} tensor")
    if B.shape[1] != t.dims[n - 1]:
        raise ValueError(f"mode {n} mismatch: factor has {B.shape[1]} columns, "
                         f"tensor dim is {t.dims[n - 1]}")
    new_dims = list(t.dims)
    new_dims[n - 1] = B.shape[0]
    return fold(B @ unfold(t, n), n, new_dims)


def mode_n_vector_product(t: DenseTensor, b, n: int):
    """Contract mode n with a vector; the result has order N-1.

    For an order-1 tensor the scalar value is returned as a float.
    """
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if not 1 <= n <= t.order:
        raise ValueError(f"mode {n} invalid for an order-{t.order} tensor")
    if b.size != t.dims[n - 1]:
        raise ValueError(f"mode {n} mismatch: vector has length {b.size}, "
                         f"tensor dim is {t.dims[n - 1]}")
    arr = np.tensordot(t.to_array(), b, axes=([n - 1], [0]))
    if arr.ndim == 0:
        return float(arr)
    return DenseTensor.from_array(arr)


def multilinear_product(t: DenseTensor, factors: Sequence) -> DenseTensor:
    """Full multilinear product [[t; B1, ..., BN]] with optional per-mode factors.

    ``factors[n-1]`` is a (J_n, I_n) matrix or None to leave mode n untouched.
    Factors are applied in ascending mode order; the result is independent of
    application order up to floating-point roundoff.
    """
    if len(factors) != t.order:
        raise ValueError(f"expected {t.order} factors, got {len(factors)}")
    out = t
    for n, B in enumerate(factors, start=1):
        if B is not None:
            out = mode_n_matrix_product(out, B, n)
    return out


def contract(a: DenseTensor, b: DenseTensor,
             modes_a: Sequence[int], modes_b: Sequence[int]):
    """Mode-(m, n) tensor contraction over one or more paired modes.

    Result modes are the remaining modes of ``a`` in ascending order followed
    by the remaining modes of ``b``.  Contracting every mode of equal-shape
    tensors yields the scalar inner product, returned as a float.
    """
    modes_a = list(modes_a)
    modes_b = list(modes_b)
    if len(modes_a) != len(modes_b):
        raise ValueError("mode lists must have equal length")
    if not modes_a:
        raise ValueError("at least one mode pair is required")
    for name, modes, t in (("a", modes_a, a), ("b", modes_b, b)):
        if len(set(modes)) != len(modes):
            raise ValueError(f"repeated modes in operand {name}: {modes}")
        for m in modes:
            if not 1 <= m <= t.order:
                raise ValueError(f"mode {m} invalid for operand {name} "
                                 f"of order {t.order}")
    for ma, mb in zip(modes_a, modes_b):
        if a.dims[ma - 1] != b.dims[mb - 1]:
            raise ValueError(f"contracted modes ({ma}, {mb}) have different "
                             f"lengths {a.dims[ma - 1]} vs {b.dims[mb - 1]}")
    axes = ([m - 1 for m in modes_a], [m - 1 for m in modes_b])
    arr = np.tensordot(a.to_array(), b.to_array(), axes=axes)
    if arr.ndim == 0:
        return float(arr)
    return DenseTensor.from_array(arr)


def outer_product(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    """Outer (tensor) product; result order is the sum of the operand orders."""
    arr = np.tensordot(a.to_array(), b.to_array(), axes=0)
    return DenseTensor.from_array(arr)


def _pad_trailing(arr: np.ndarray, order: int) -> np.ndarray:
    # Lower-order operands gain trailing singleton modes (a matrix is treated
    # as an I x J x 1 tensor), so both operands share one order.
    return arr.reshape(arr.shape + (1,) * (order - arr.ndim))


def kron_tensor(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    """Tensor Kronecker product with per-mode index rule
    (i_n, j_n) -> j_n + (i_n - 1) J_n; dims multiply modewise."""
    order = max(a.order, b.order)
    aa = _pad_trailing(a.to_array(), order)
    bb = _pad_trailing(b.to_array(), order)
    return DenseTensor.from_array(np.kron(aa, bb))


def khatri_rao(a, b) -> np.ndarray:
    """Column-wise Kronecker product of I x R and K x R matrices -> IK x R."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("Khatri-Rao operands must be matrices")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"column counts differ: {a.shape[1]} vs {b.shape[1]}")
    out = a[:, None, :] * b[None, :, :]
    return out.reshape(a.shape[0] * b.shape[0], a.shape[1])


def hadamard(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    """Elementwise product of same-shape tensors."""
    if a.dims != b.dims:
        raise ValueError(f"shape mismatch: {a.dims} vs {b.dims}")
    return DenseTensor(a.dims, a.data * b.data)


@dataclass(frozen=True)
class BlockMatrix:
    """Grid of equally shaped matrix blocks; ``blocks[r1, r2]`` is I x J."""

    blocks: np.ndarray  # (R1, R2, I, J)

    def __post_init__(self):
        blocks = np.asarray(self.blocks, dtype=np.float64)
        if blocks.ndim != 4:
            raise ValueError("BlockMatrix needs a (R1, R2, I, J) block array")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_blocks(cls, rows: Sequence[Sequence]) -> "BlockMatrix":
        return cls(np.array([[np.asarray(b, dtype=np.float64) for b in row]
                             for row in rows]))

    @classmethod
    def from_dense(cls, dense, grid: tuple[int, int]) -> "BlockMatrix":
        dense = np.asarray(dense, dtype=np.float64)
        r1, r2 = grid
        if dense.shape[0] % r1 or dense.shape[1] % r2:
            raise ValueError(f"dense shape {dense.shape} not divisible "
                             f"by grid {grid}")
        i, j = dense.shape[0] // r1, dense.shape[1] // r2
        return cls(dense.reshape(r1, i, r2, j).transpose(0, 2, 1, 3))

    @property
    def grid(self) -> tuple[int, int]:
        return self.blocks.shape[:2]

    @property
    def block_shape(self) -> tuple[int, int]:
        return self.blocks.shape[2:]

    def to_dense(self) -> np.ndarray:
        r1, r2, i, j = self.blocks.shape
        return self.blocks.transpose(0, 2, 1, 3).reshape(r1 * i, r2 * j)


def strong_kron(a: BlockMatrix, b: BlockMatrix) -> BlockMatrix:
    """Strong Kronecker product: C[r1, r3] = sum_r2 A[r1, r2] (x) B[r2, r3]."""
    if a.grid[1] != b.grid[0]:
        raise ValueError(f"inner grid dims disagree: {a.grid} vs {b.grid}")
    i1, j1 = a.block_shape
    i2, j2 = b.block_shape
    out = np.einsum("abij,bckl->acikjl", a.blocks, b.blocks)
    return BlockMatrix(out.reshape(a.grid[0], b.grid[1], i1 * i2, j1 * j2))


@dataclass(frozen=True)
class BlockTensor3:
    """Grid of equally shaped 3rd-order blocks; ``blocks[r1, r2]`` is I x J x K."""

    blocks: np.ndarray  # (R1, R2, I, J, K)

    def __post_init__(self):
        blocks = np.asarray(self.blocks, dtype=np.float64)
        if blocks.ndim != 5:
            raise ValueError("BlockTensor3 needs a (R1, R2, I, J, K) block array")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_blocks(cls, rows: Sequence[Sequence]) -> "BlockTensor3":
        return cls(np.array([[np.asarray(b, dtype=np.float64) for b in row]
                             for row in rows]))

    @property
    def grid(self) -> tuple[int, int]:
        return self.blocks.shape[:2]

    @property
    def block_shape(self) -> tuple[int, int, int]:
        return self.blocks.shape[2:]

    def to_dense(self) -> np.ndarray:
        # Global layout (R1*I, R2*J, K): the grid spans the first two modes.
        r1, r2, i, j, k = self.blocks.shape
        return self.blocks.transpose(0, 2, 1, 3, 4).reshape(r1 * i, r2 * j, k)


def strong_kron_tensor3(a: BlockTensor3, b: BlockTensor3) -> BlockTensor3:
    """Strong Kronecker product of block tensors with 3rd-order blocks."""
    if a.grid[1] != b.grid[0]:
        raise ValueError(f"inner grid dims disagree: {a.grid} vs {b.grid}")
    i1, j1, k1 = a.block_shape
    i2, j2, k2 = b.block_shape
    out = np.einsum("abijk,bclmn->aciljmkn", a.blocks, b.blocks)
    return BlockTensor3(out.reshape(a.grid[0], b.grid[1],
                                    i1 * i2, j1 * j2, k1 * k2))
