"""Small dense linear-algebra kernels: Jacobi eigensolver and subspace angles."""

import math
import warnings

import numpy as np
import scipy.linalg

from .errors import DimensionError

#: Above this size ``symmetric_eig`` hands off to LAPACK; the Python-level
#: rotation loop is O(n^2) rotations per sweep.
JACOBI_MAX_SIZE = 160


def jacobi_eigh(a, tol=1e-12, max_sweeps=100):
    """Eigen-decompose a real symmetric matrix with cyclic Jacobi rotations.

    Parameters
    ----------
    a : array_like, shape (n, n)
        Symmetric matrix. Only its symmetric part is used.
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm falls below
        ``tol * ||a||_F``.
    max_sweeps : int
        Hard cap on the number of full sweeps.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        Unsorted, in the order the rotations left them on the diagonal.
    eigenvectors : ndarray, shape (n, n)
        Orthonormal columns, ``a @ V[:, i] = eigenvalues[i] * V[:, i]``.
    """
    a = np.array(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if scale == 0.0 or n == 1:
        return np.diag(a).copy(), v
    negligible = 1e-3 * tol * scale / n

    for _ in range(max_sweeps):
        # Direct norm: ||a||^2 - ||diag||^2 cancels catastrophically.
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= negligible:
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                _rotate(a, v, p, q, c, s)
    else:
        warnings.warn(f"Jacobi did not converge in {max_sweeps} sweeps", RuntimeWarning)
    return np.diag(a).copy(), v


def _rotate(a, v, p, q, c, s):
    cols = a[:, [p, q]]
    a[:, p] = c * cols[:, 0] - s * cols[:, 1]
    a[:, q] = s * cols[:, 0] + c * cols[:, 1]
    rows = a[[p, q], :]
    a[p, :] = c * rows[0] - s * rows[1]
    a[q, :] = s * rows[0] + c * rows[1]
    a[p, q] = a[q, p] = 0.0
    cols = v[:, [p, q]]
    v[:, p] = c * cols[:, 0] - s * cols[:, 1]
    v[:, q] = s * cols[:, 0] + c * cols[:, 1]


def canonicalize_eigenpairs(eigenvalues, eigenvectors, degeneracy_tol=1e-10, zero_tol=1e-12):
    """Sort eigenpairs descending and fix signs deterministically.

    Each eigenvector is flipped so that its largest-magnitude entry is
    positive (first such entry on ties). Eigenvalues closer than
    ``degeneracy_tol * max(1, |lambda|_max)`` form a degenerate block whose
    vectors are ordered by the index of their first entry exceeding
    ``zero_tol`` in magnitude.
    """
    w = np.asarray(eigenvalues, dtype=np.float64)
    vecs = np.array(eigenvectors, dtype=np.float64)
    n = w.size
    if n == 0:
        return w.copy(), vecs

    peak = np.argmax(np.abs(vecs), axis=0)
    signs = np.where(vecs[peak, np.arange(n)] < 0, -1.0, 1.0)
    vecs = vecs * signs

    order = list(np.argsort(-w, kind="stable"))
    gap = degeneracy_tol * max(1.0, float(np.max(np.abs(w))))
    first_nonzero = [int(np.argmax(np.abs(vecs[:, i]) > zero_tol)) for i in range(n)]

    result = []
    block = [order[0]]
    for i in order[1:]:
        if w[block[-1]] - w[i] <= gap:
            block.append(i)
        else:
            result.extend(sorted(block, key=lambda k: (first_nonzero[k], k)))
            block = [i]
    result.extend(sorted(block, key=lambda k: (first_nonzero[k], k)))
    idx = np.array(result)
    return w[idx], np.ascontiguousarray(vecs[:, idx])


def symmetric_eig(a, method="auto"):
    """Sorted, sign-canonical eigenpairs of a symmetric matrix.

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
    :data:`JACOBI_MAX_SIZE`).
    """
    a = np.asarray(a, dtype=np.float64)
    if method == "auto":
        method = "jacobi" if a.shape[0] <= JACOBI_MAX_SIZE else "lapack"
    if method == "jacobi":
        w, v = jacobi_eigh(a)
    elif method == "lapack":
        w, v = np.linalg.eigh(0.5 * (a + a.T))
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    return canonicalize_eigenpairs(w, v)


def principal_angles(a, b):
    """Principal angles (radians, descending) between ``span(a)`` and ``span(b)``.

    Uses the sine-based formulation so that tiny angles are resolved to
    machine precision rather than ``sqrt(eps)``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64).T).T
    b = np.atleast_2d(np.asarray(b, dtype=np.float64).T).T
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"ambient dimensions differ: {a.shape[0]} vs {b.shape[0]}")
    return scipy.linalg.subspace_angles(a, b)


def random_orthonormal(n, rng, k=None):
    """Haar-distributed ``n x k`` matrix with orthonormal columns."""
    k = n if k is None else k
    q, r = np.linalg.qr(rng.standard_normal((n, k)))
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)
