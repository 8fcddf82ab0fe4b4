"""Dense multilinear algebra on numpy arrays.

Tensors are plain ``float64`` ndarrays stored in C order. ``vec``, ``unfold``
and ``fold`` follow the Kolda convention (first index fastest), so that

    vec(X x_1 U1 x_2 U2 x_3 U3) == kron(U3, kron(U2, U1)) @ vec(X)

holds without permuting the Kronecker factors. Mode indices are 1-based.
"""

from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimensionError, ModeError


class TensorShape3(NamedTuple):
    """Channel, height and width extents of an activation tensor."""

    C: int
    H: int
    W: int

    @classmethod
    def of(cls, shape):
        shape = tuple(int(s) for s in shape)
        if len(shape) != 3:
            raise DimensionError(f"expected a 3rd-order shape, got {shape}")
        if min(shape) < 1:
            raise DimensionError(f"extents must be >= 1, got {shape}")
        return cls(*shape)


def as_tensor(x, order=None):
    """Return ``x`` as a float64 array, checking its order if given."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        raise DimensionError("tensors must have order >= 1")
    if order is not None and x.ndim != order:
        raise DimensionError(f"expected order-{order} tensor, got shape {x.shape}")
    if 0 in x.shape:
        raise DimensionError(f"all extents must be >= 1, got {x.shape}")
    return x


def _check_mode(n, order):
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= order:
        raise ModeError(f"mode {n!r} out of range for order-{order} tensor")
    return int(n) - 1


def vec(x):
    """Column-major vectorisation (first index fastest)."""
    return as_tensor(x).ravel(order="F")


def unvec(v, shape):
    """Inverse of :func:`vec`."""
    v = np.asarray(v, dtype=np.float64)
    shape = tuple(int(s) for s in shape)
    if v.ndim != 1 or v.size != int(np.prod(shape)):
        raise DimensionError(f"cannot reshape vector of size {v.size} to {shape}")
    return v.reshape(shape, order="F")


def unfold(x, n):
    """Mode-``n`` unfolding: an ``I_n x prod(I_t, t != n)`` matrix.

    Column ``j`` holds the mode-``n`` fiber whose remaining indices
    ``i_k`` satisfy ``j = sum_k i_k J_k`` with ``J_k`` the product of the
    extents of the earlier non-``n`` modes.
    """
    x = as_tensor(x)
    axis = _check_mode(n, x.ndim)
    return np.reshape(np.moveaxis(x, axis, 0), (x.shape[axis], -1), order="F")


def fold(m, n, shape):
    """Inverse of :func:`unfold`."""
    m = np.asarray(m, dtype=np.float64)
    shape = tuple(int(s) for s in shape)
    axis = _check_mode(n, len(shape))
    rest = shape[:axis] + shape[axis + 1:]
    if m.ndim != 2 or m.shape != (shape[axis], int(np.prod(rest))):
        raise DimensionError(
            f"matrix of shape {m.shape} cannot be folded along mode {n} into {shape}"
        )
    t = np.reshape(m, (shape[axis],) + rest, order="F")
    return np.ascontiguousarray(np.moveaxis(t, 0, axis))


def mode_n_product(x, w, n):
    """``x x_n w``, computed literally as ``fold(w @ unfold(x, n))``."""
    x = as_tensor(x)
    w = np.asarray(w, dtype=np.float64)
    axis = _check_mode(n, x.ndim)
    if w.ndim != 2 or w.shape[1] != x.shape[axis]:
        raise DimensionError(
            f"matrix of shape {w.shape} cannot multiply mode {n} of extent {x.shape[axis]}"
        )
    shape = list(x.shape)
    shape[axis] = w.shape[0]
    return fold(w @ unfold(x, n), n, shape)


def multi_mode_product(x, matrices: Sequence, transpose=False):
    """Apply ``matrices[k]`` along mode ``k+1``; ``None`` entries are skipped."""
    for k, u in enumerate(matrices):
        if u is None:
            continue
        u = np.asarray(u, dtype=np.float64)
        x = mode_n_product(x, u.T if transpose else u, k + 1)
    return x


def kronecker(a, b):
    """Kronecker product ``a (x) b`` with blocks ``a[i, j] * b``."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError("kronecker expects matrices")
    (i1, i2), (j1, j2) = a.shape, b.shape
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(i1 * j1, i2 * j2)


def outer3(u, v, w):
    """Rank-1 third-order tensor ``u o v o w``."""
    u, v, w = (np.asarray(t, dtype=np.float64).ravel() for t in (u, v, w))
    return u[:, None, None] * v[None, :, None] * w[None, None, :]


def gen_inner_product(z, w):
    """Contract an order-3 tensor with the first three modes of an order-4 one.

    Element ``l`` of the result is ``sum_{c,h,w} z[c,h,w] * w[c,h,w,l]``.
    """
    z = as_tensor(z, order=3)
    w = as_tensor(w, order=4)
    if w.shape[:3] != z.shape:
        raise DimensionError(f"weight {w.shape} does not conform to activation {z.shape}")
    return z.reshape(-1) @ w.reshape(-1, w.shape[3])
