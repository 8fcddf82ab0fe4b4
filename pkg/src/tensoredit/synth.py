"""Synthetic linear generators with known structure, and the MOD metric.

A :class:`SyntheticModel` maps a latent code ``z`` (length d) to an
activation tensor ``Z = sum_l z_l * map[l] + noise``. In the multilinear
style each latent coordinate drives one rank-1 component
``s_l * A[:, a] o B[:, b] o Cw[:, c]`` of planted orthonormal factors whose
first column is constant. Latents are assigned in three groups:

* style     ``(a, 0, 0)``: a channel pattern broadcast over space,
* geometry  ``(0, b, 0)`` and ``(0, 0, c)``: spatial patterns shared by all channels,
* mixing    ``(a, b, c)`` with ``a, b, c >= 1``.

With planted ranks ``(r1, r2, r3)`` every mode-n fiber lies in the span of
the first ``r_n`` planted columns, and every first-order edit built from
that span lies in the span of the generated data.
"""

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ContractError, DimensionError, NormalisationError
from .edits import SelectorSpec, SelectorTerm
from .regression import TrainingPair, direction_to_latent
from .tensor import TensorShape3, outer3

STYLES = ("dense", "multilinear")


@dataclass(frozen=True, eq=False)
class SyntheticModel:
    d: int
    shape: TensorShape3
    map: np.ndarray  # (d, C, H, W)
    noise_sigma: float = 0.0
    style: str = "dense"
    seed: int = 0
    planted_factors: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None
    triples: Optional[Tuple[Tuple[int, int, int], ...]] = None
    scales: Optional[np.ndarray] = None

    def __post_init__(self):
        m = np.asarray(self.map, dtype=np.float64)
        if m.shape != (self.d,) + tuple(self.shape):
            raise DimensionError(f"map {m.shape} inconsistent with d={self.d}, shape={tuple(self.shape)}")
        if self.noise_sigma < 0:
            raise ContractError("noise_sigma must be >= 0")
        object.__setattr__(self, "map", m)
        object.__setattr__(self, "shape", TensorShape3.of(self.shape))

    @property
    def map_matrix(self):
        """``(C*H*W, d)`` matrix acting on latents; rows in C order."""
        return self.map.reshape(self.d, -1).T

    def generate(self, z, noise=None):
        """Activations for latents ``z`` of shape ``(d,)`` or ``(M, d)``."""
        z = np.asarray(z, dtype=np.float64)
        single = z.ndim == 1
        z2 = np.atleast_2d(z)
        if z2.shape[1] != self.d:
            raise DimensionError(f"latents have d={z2.shape[1]}, model has d={self.d}")
        x = (z2 @ self.map.reshape(self.d, -1)).reshape((len(z2),) + tuple(self.shape))
        if noise is not None:
            x = x + self.noise_sigma * np.asarray(noise).reshape(x.shape)
        return x[0] if single else x

    def planted_subspace(self, mode):
        """Planted factor columns actually used along ``mode`` (1-based)."""
        if self.planted_factors is None:
            raise ContractError("dense models have no planted factors")
        used = sorted({t[mode - 1] for t in self.triples})
        return self.planted_factors[mode - 1][:, used]

    def planted_component(self, latent):
        """Unit-norm activation pattern driven by latent coordinate ``latent``."""
        if self.planted_factors is None:
            raise ContractError("dense models have no planted components")
        a, b, c = self.triples[latent]
        fa, fb, fc = self.planted_factors
        return outer3(fa[:, a], fb[:, b], fc[:, c])


def planted_triples(d, ranks):
    """Style, then geometry, then mixing index triples; the first ``d`` are used."""
    r1, r2, r3 = (int(r) for r in ranks)
    triples = [(a, 0, 0) for a in range(r1)]
    triples += [(0, b, 0) for b in range(1, r2)]
    triples += [(0, 0, c) for c in range(1, r3)]
    mixing = itertools.product(range(1, r1), range(1, r2), range(1, r3))
    triples += sorted(mixing, key=lambda t: (max(t), sum(t), t))
    if d > len(triples):
        raise ContractError(
            f"a multilinear model with ranks {(r1, r2, r3)} supports at most {len(triples)} latents, got d={d}"
        )
    return tuple(triples[:d])


def planted_factor(n, rng):
    """Orthonormal ``n x n`` matrix with constant first column, from QR of ``[1 | G]``."""
    g = np.column_stack([np.ones(n), rng.standard_normal((n, n - 1))])
    q, r = np.linalg.qr(g)
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def make_synthetic(d, shape, style="dense", noise_sigma=0.0, seed=0, ranks=None):
    """Seeded synthetic generator.

    ``dense``: map entries i.i.d. normal with standard deviation ``1/sqrt(d)``.
    ``multilinear``: planted orthonormal factors (see :func:`planted_factor`),
    latent ``l`` driving ``s_l A[:,a] o B[:,b] o Cw[:,c]`` for the triples of
    :func:`planted_triples`, with distinct scales ``s_l`` decreasing from 2
    towards 1. ``ranks`` defaults to the full shape.
    """
    shape = TensorShape3.of(shape)
    d = int(d)
    if d < 1:
        raise DimensionError("d must be >= 1")
    if style not in STYLES:
        raise ContractError(f"style must be one of {STYLES}, got {style!r}")
    rng = np.random.default_rng(seed)
    if style == "dense":
        m = rng.normal(0.0, 1.0 / np.sqrt(d), size=(d,) + tuple(shape))
        return SyntheticModel(d, shape, m, float(noise_sigma), style, int(seed))

    ranks = tuple(shape) if ranks is None else tuple(int(r) for r in ranks)
    if any(not 1 <= r <= n for r, n in zip(ranks, shape)) or len(ranks) != 3:
        raise DimensionError(f"planted ranks {ranks} invalid for shape {tuple(shape)}")
    factors = tuple(planted_factor(n, rng) for n in shape)
    triples = planted_triples(d, ranks)
    scales = 2.0 - np.arange(d) / d
    m = np.stack([s * outer3(factors[0][:, a], factors[1][:, b], factors[2][:, c])
                  for s, (a, b, c) in zip(scales, triples)])
    return SyntheticModel(d, shape, m, float(noise_sigma), style, int(seed),
                          planted_factors=factors, triples=triples, scales=scales)


def _draw(model, m, seed):
    if m < 1:
        raise ContractError("sample count must be >= 1")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((m, model.d))
    noise = rng.standard_normal((m,) + tuple(model.shape)) if model.noise_sigma > 0 else None
    return z, noise


def sample(model, m, seed):
    """``(latents (M, d), activations (M, C, H, W))`` with ``z ~ N(0, I)``."""
    z, noise = _draw(model, m, seed)
    return z, model.generate(z, noise)


def sample_pairs(model, m, seed):
    z, x = sample(model, m, seed)
    return [TrainingPair(zi, xi) for zi, xi in zip(z, x)]


def true_direction(model, edit):
    """Least-squares latent direction whose generated activation best matches ``edit``."""
    edit = np.asarray(edit, dtype=np.float64)
    if edit.shape != tuple(model.shape):
        raise DimensionError(f"edit {edit.shape} does not match model shape {tuple(model.shape)}")
    sol, *_ = np.linalg.lstsq(model.map_matrix, edit.reshape(-1), rcond=None)
    return sol


def mod_metric(a):
    """Mean of the off-diagonal entries of the column-normalised matrix ``a``."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
        raise DimensionError(f"attribute matrix must be N x N with N >= 2, got {a.shape}")
    if np.any(a < 0):
        raise ContractError("attribute matrix entries must be non-negative")
    sums = a.sum(axis=0)
    if np.any(sums == 0):
        raise NormalisationError(f"column(s) {np.flatnonzero(sums == 0).tolist()} sum to zero")
    a_hat = a / sums
    n = a.shape[0]
    return float((a_hat.sum() - np.trace(a_hat)) / (n * n - n))


def attribute_probe(model, weights, basis, directions: Sequence, probes, n_images=100, step=1.0,
                    seed=0):
    """Attribute-leakage matrix for edits along ``directions``.

    ``probes`` is an ``(N, C, H, W)`` stack of linear functionals standing in
    for an attribute predictor. Entry ``(i, j)`` is the mean over images of
    ``|probe_i(edited_j) - probe_i(original)|``. Original and edited images
    share the same noise draw.
    """
    probes = np.asarray(probes, dtype=np.float64)
    n = len(directions)
    if probes.shape != (n,) + tuple(model.shape):
        raise DimensionError(f"need {n} probes of shape {tuple(model.shape)}, got {probes.shape}")
    dirs = np.stack([direction_to_latent(spec, basis, weights) for spec in directions])
    if dirs.shape[1] != model.d:
        raise DimensionError(f"directions have d={dirs.shape[1]}, model has d={model.d}")
    z, noise = _draw(model, n_images, seed)
    x0 = model.generate(z, noise)
    p = probes.reshape(n, -1)
    base = x0.reshape(n_images, -1) @ p.T
    out = np.zeros((n, n))
    for j in range(n):
        edited = model.generate(z + step * dirs[j], noise).reshape(n_images, -1)
        out[:, j] = np.mean(np.abs(edited @ p.T - base), axis=0)
    return out


def match_basis_index(basis_u, column):
    """Index of the basis column best aligned (up to sign) with ``column``."""
    return int(np.argmax(np.abs(np.asarray(basis_u).T @ np.asarray(column))))


def planted_first_order(model, basis, mode, index, alpha=1.0):
    """Selector and probe for a planted style/geometry latent.

    ``mode`` is ``"C"``, ``"H"`` or ``"W"`` and ``index >= 1`` a planted
    column of that mode (column 0 is the constant one). Returns the
    first-order selector on the recovered basis vector best aligned with
    that planted column, and the unit-norm planted component as the probe.
    """
    k = "CHW".index(mode.upper())
    if model.planted_factors is None:
        raise ContractError("dense models have no planted directions")
    triple = tuple(index if j == k else 0 for j in range(3))
    if index < 1 or triple not in model.triples:
        raise ContractError(f"no planted first-order latent for {mode}:{index}")
    planted = model.planted_factors[k][:, index]
    i = match_basis_index(basis.factors[k].U, planted)
    spec = SelectorSpec((SelectorTerm((k,), (i,), alpha),))
    return spec, model.planted_component(model.triples.index(triple))
