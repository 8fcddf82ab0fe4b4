"""Mode-wise PCA bases for batches of activation tensors.

The multilinear bases are the eigenvectors of the centered mode-n total
scatter matrices, computed in one shot at full rank. Vectorised PCA (the
linear baseline) is provided alongside for comparison.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .linalg import symmetric_eig
from .tensor import TensorShape3, kronecker, multi_mode_product, unfold

MODE_NAMES = ("channel", "height", "width")


def as_batch(batch, order=None):
    """Validate a stacked batch ``(M, I_1, ..., I_N)`` and return it as float64."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim < 2:
        raise DimensionError(f"a batch needs shape (M, I_1, ...), got {batch.shape}")
    if order is not None and batch.ndim != order + 1:
        raise DimensionError(f"expected a batch of order-{order} tensors, got {batch.shape}")
    if 0 in batch.shape:
        raise DimensionError(f"batch has an empty extent: {batch.shape}")
    return batch


@dataclass(frozen=True, eq=False)
class FactorBasis:
    """Orthonormal basis for one mode, columns sorted by descending eigenvalue."""

    mode: int
    U: np.ndarray
    eigenvalues: np.ndarray

    @property
    def name(self):
        return MODE_NAMES[self.mode - 1] if self.mode <= 3 else f"mode{self.mode}"

    def top(self, r):
        if not 1 <= r <= self.U.shape[1]:
            raise DimensionError(f"rank {r} outside 1..{self.U.shape[1]} for {self.name} mode")
        return self.U[:, :r]


@dataclass(frozen=True, eq=False)
class MultilinearBasis:
    channel: FactorBasis
    height: FactorBasis
    width: FactorBasis
    mean: np.ndarray

    @property
    def factors(self):
        return (self.channel, self.height, self.width)

    @property
    def shape(self):
        return TensorShape3(*(f.U.shape[0] for f in self.factors))

    def matrices(self, ranks=None):
        ranks = self._ranks(ranks)
        return [f.top(r) for f, r in zip(self.factors, ranks)]

    def _ranks(self, ranks):
        if ranks is None:
            return tuple(self.shape)
        ranks = tuple(int(r) for r in ranks)
        if len(ranks) != 3:
            raise DimensionError(f"need three ranks, got {ranks}")
        for r, extent, f in zip(ranks, self.shape, self.factors):
            if not 1 <= r <= extent:
                raise DimensionError(f"rank {r} exceeds {f.name} extent {extent}")
        return ranks


@dataclass(frozen=True, eq=False)
class LinearBasis:
    """PCA basis of vectorised tensors (columns are principal directions)."""

    U: np.ndarray
    mean: np.ndarray
    eigenvalues: np.ndarray

    def projector(self):
        return self.U @ self.U.T


def scatter_matrix(batch, n):
    """Mode-``n`` total scatter ``sum_m (Z_m(n) - mean_(n)) (Z_m(n) - mean_(n))^T``."""
    batch = as_batch(batch)
    centered = batch - batch.mean(axis=0)
    # Concatenating every sample's mode-n unfolding side by side gives the
    # sum of per-sample outer products in a single product.
    stacked = unfold(centered, n + 1)
    s = stacked @ stacked.T
    return 0.5 * (s + s.T)


def mode_bases(batch, method="auto"):
    """Full-rank eigenbasis of the scatter matrix for every mode of the batch."""
    batch = as_batch(batch)
    bases = []
    for n in range(1, batch.ndim):
        w, u = symmetric_eig(scatter_matrix(batch, n), method=method)
        bases.append(FactorBasis(mode=n, U=u, eigenvalues=np.maximum(w, 0.0)))
    return bases


def compute_bases(batch, method="auto"):
    """Multilinear (channel, height, width) bases of a batch ``(M, C, H, W)``."""
    batch = as_batch(batch, order=3)
    channel, height, width = mode_bases(batch, method=method)
    return MultilinearBasis(channel, height, width, mean=batch.mean(axis=0))


def mpca_project(z, basis, ranks=None):
    """Core tensor ``(z - mean) x_1 Uc^T x_2 Uh^T x_3 Uw^T`` of shape ``ranks``."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != tuple(basis.shape):
        raise DimensionError(f"tensor {z.shape} does not match basis shape {tuple(basis.shape)}")
    return multi_mode_product(z - basis.mean, basis.matrices(ranks), transpose=True)


def mpca_reconstruct(core, basis, ranks=None):
    """``mean + core x_1 Uc x_2 Uh x_3 Uw`` using the leading ``ranks`` columns."""
    core = np.asarray(core, dtype=np.float64)
    ranks = core.shape if ranks is None else tuple(ranks)
    if core.ndim != 3 or core.shape != tuple(ranks):
        raise DimensionError(f"core {core.shape} does not match ranks {ranks}")
    return basis.mean + multi_mode_product(core, basis.matrices(ranks))


def vectorised_projector(basis, ranks=None):
    """``kron(Pw, kron(Ph, Pc))`` acting on column-major ``vec`` of a tensor."""
    pc, ph, pw = (u @ u.T for u in basis.matrices(ranks))
    return kronecker(pw, kronecker(ph, pc))


def vectorise_batch(batch):
    """Stack ``vec(Z_m)`` (column-major) as rows: shape ``(M, prod(I))``."""
    batch = as_batch(batch)
    # Reversing the tensor axes turns C-order raveling into first-index-fastest.
    axes = (0,) + tuple(range(batch.ndim - 1, 0, -1))
    return np.ascontiguousarray(batch.transpose(axes).reshape(batch.shape[0], -1))


def linear_pca_basis(batch, k=None, method="auto"):
    """PCA on the vectorised batch, keeping the top ``k`` components.

    Eigenvalues are those of the total scatter of the vectorised samples,
    on the same scale as :func:`scatter_matrix`.
    """
    x = vectorise_batch(batch)
    dim = x.shape[1]
    k = dim if k is None else int(k)
    if not 1 <= k <= dim:
        raise DimensionError(f"component count {k} outside 1..{dim}")
    mean = x.mean(axis=0)
    centered = x - mean
    w, u = symmetric_eig(centered.T @ centered, method=method)
    return LinearBasis(U=np.ascontiguousarray(u[:, :k]), mean=mean,
                       eigenvalues=np.maximum(w[:k], 0.0))
