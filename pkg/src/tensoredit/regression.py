"""Tucker-structured tensor regression from activations back to latent codes.

The weight tensor ``W`` (C x H x W x d) is stored as a core and four factor
matrices, ``W = G x_1 A x_2 B x_3 Cw x_4 D``. A latent code is predicted by
contracting an activation tensor with the first three modes of ``W``. The
factors are trained jointly by plain gradient descent on

    mean_m ||z_m - <Z_m, W>_3||^2 + lam * ||W||_F^2
"""

from dataclasses import dataclass, field
from typing import Mapping, Optional, Tuple, Union

import numpy as np

from .edits import SelectorSpec, assemble_edit_tensor
from .errors import ContractError, DimensionError, TrainingDiverged
from .tensor import TensorShape3, as_tensor, mode_n_product


@dataclass(frozen=True, eq=False)
class TrainingPair:
    z: np.ndarray
    activation: np.ndarray


@dataclass(frozen=True)
class RegressionConfig:
    rank: Tuple[int, int, int, int]
    lam: float = 1e-4
    learning_rate: float = 1e-3
    iterations: int = 5000
    batch_size: int = 256
    seed: int = 0

    def __post_init__(self):
        rank = tuple(int(r) for r in self.rank)
        if len(rank) != 4 or min(rank) < 1:
            raise ContractError(f"rank must be four positive integers, got {self.rank}")
        object.__setattr__(self, "rank", rank)
        if not self.lam >= 0:
            raise ContractError(f"lam must be >= 0, got {self.lam}")
        if not self.learning_rate > 0:
            raise ContractError(f"learning_rate must be > 0, got {self.learning_rate}")
        if int(self.iterations) < 1 or int(self.batch_size) < 1:
            raise ContractError("iterations and batch_size must be positive")


@dataclass(frozen=True, eq=False)
class TuckerWeights:
    core: np.ndarray
    factors: Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    losses: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        core = as_tensor(self.core, order=4)
        factors = tuple(np.asarray(f, dtype=np.float64) for f in self.factors)
        if len(factors) != 4 or any(f.ndim != 2 for f in factors):
            raise DimensionError("expected four factor matrices")
        for k, f in enumerate(factors):
            if f.shape[1] != core.shape[k]:
                raise DimensionError(
                    f"factor {k + 1} has {f.shape[1]} columns but core mode {k + 1} is {core.shape[k]}"
                )
            if not 1 <= f.shape[1] <= f.shape[0]:
                raise DimensionError(f"factor {k + 1} rank {f.shape[1]} exceeds extent {f.shape[0]}")
        object.__setattr__(self, "core", core)
        object.__setattr__(self, "factors", factors)

    @property
    def shape(self):
        return TensorShape3(*(f.shape[0] for f in self.factors[:3]))

    @property
    def d(self):
        return self.factors[3].shape[0]

    @property
    def rank(self):
        return tuple(self.core.shape)

    @property
    def n_params(self):
        return self.core.size + sum(f.size for f in self.factors)


def parameter_counts(shape, d, rank):
    """Factored and dense parameter counts for a Tucker weight of ``rank``."""
    extents = tuple(TensorShape3.of(shape)) + (int(d),)
    rank = tuple(int(r) for r in rank)
    _check_rank(extents, rank)
    factored = int(np.prod(rank)) + sum(n * r for n, r in zip(extents, rank))
    return {"factored": factored, "dense": int(np.prod(extents))}


def _check_rank(extents, rank):
    if len(rank) != 4 or any(not 1 <= r <= n for r, n in zip(rank, extents)):
        raise DimensionError(f"rank {rank} invalid for extents {extents}")


def init_weights(shape, d, rank, seed):
    """Seeded initialisation.

    Factors are uniform on ``[-s, s]`` with ``s = 1/sqrt(fan_in)``; fan-in is
    the contracted extent for the three activation factors and ``r4`` for
    the latent factor. The core is standard normal scaled by
    ``1/sqrt(r1 r2 r3 r4)``.
    """
    extents = tuple(TensorShape3.of(shape)) + (int(d),)
    rank = tuple(int(r) for r in rank)
    _check_rank(extents, rank)
    rng = np.random.default_rng(seed)
    factors = []
    for k, (n, r) in enumerate(zip(extents, rank)):
        s = 1.0 / np.sqrt(n if k < 3 else r)
        factors.append(rng.uniform(-s, s, size=(n, r)))
    core = rng.standard_normal(rank) / np.sqrt(np.prod(rank))
    return TuckerWeights(core, tuple(factors))


def materialize(w):
    """Dense ``C x H x W x d`` weight tensor."""
    out = w.core
    for k, f in enumerate(w.factors):
        out = mode_n_product(out, f, k + 1)
    return out


def predict_latent(z_act, w):
    """Latent code for one activation tensor, evaluated in factored form."""
    z_act = as_tensor(z_act, order=3)
    if z_act.shape != tuple(w.shape):
        raise DimensionError(f"activation {z_act.shape} does not match weights {tuple(w.shape)}")
    a, b, c, d = w.factors
    p = mode_n_product(mode_n_product(mode_n_product(z_act, a.T, 1), b.T, 2), c.T, 3)
    return d @ np.tensordot(p, w.core, axes=3)


def predict_batch(activations, w):
    """Latent codes for a stacked ``(M, C, H, W)`` batch, shape ``(M, d)``."""
    x = _stack_activations(activations, w.shape)
    return x @ materialize(w).reshape(-1, w.d)


def _stack_activations(activations, shape):
    x = np.asarray(activations, dtype=np.float64)
    if x.ndim != 4 or x.shape[1:] != tuple(shape):
        raise DimensionError(f"activations {x.shape} do not match shape {tuple(shape)}")
    return x.reshape(x.shape[0], -1)


def as_arrays(pairs):
    """``(latents (M, d), activations (M, C, H, W))`` from pairs or an array tuple."""
    if isinstance(pairs, tuple) and len(pairs) == 2 and not isinstance(pairs[0], TrainingPair):
        z, x = (np.asarray(a, dtype=np.float64) for a in pairs)
    else:
        pairs = list(pairs)
        if not pairs:
            raise ContractError("dataset is empty")
        z = np.stack([np.asarray(p.z, dtype=np.float64) for p in pairs])
        x = np.stack([np.asarray(p.activation, dtype=np.float64) for p in pairs])
    if z.ndim != 2 or x.ndim != 4 or len(z) != len(x):
        raise DimensionError(f"inconsistent dataset: latents {z.shape}, activations {x.shape}")
    if len(z) == 0:
        raise ContractError("dataset is empty")
    return z, x


def loss(pairs, w, lam):
    """Mean squared latent error plus ``lam * ||W||_F^2``."""
    z, x = as_arrays(pairs)
    if z.shape[1] != w.d:
        raise DimensionError(f"latents have d={z.shape[1]}, weights have d={w.d}")
    dense = materialize(w)
    resid = z - _stack_activations(x, w.shape) @ dense.reshape(-1, w.d)
    return float(np.mean(np.sum(resid * resid, axis=1)) + lam * np.sum(dense * dense))


def loss_and_gradient(w, latents, activations, lam):
    """Objective value and its gradient with respect to core and factors.

    The gradient is formed for the dense weight first and then pulled back
    through the Tucker product, e.g. ``dL/dA = dW_(1) K_(1)^T`` with
    ``K = G x_2 B x_3 Cw x_4 D``.
    """
    a, b, c, d = w.factors
    g = w.core
    x = _stack_activations(activations, w.shape)
    m = x.shape[0]

    t4 = mode_n_product(g, d, 4)
    t34 = mode_n_product(t4, c, 3)
    k_a = mode_n_product(t34, b, 2)
    k_b = mode_n_product(t34, a, 1)
    k_c = mode_n_product(mode_n_product(t4, b, 2), a, 1)
    k_d = mode_n_product(mode_n_product(mode_n_product(g, a, 1), b, 2), c, 3)
    dense = mode_n_product(k_d, d, 4)

    wmat = dense.reshape(-1, w.d)
    resid = x @ wmat - latents
    value = float(np.sum(resid * resid) / m + lam * np.sum(wmat * wmat))
    dw = ((2.0 / m) * (x.T @ resid) + (2.0 * lam) * wmat).reshape(dense.shape)

    grads = []
    for k, kt in enumerate((k_a, k_b, k_c, k_d)):
        n = k + 1
        grads.append(_unfold_c(dw, n) @ _unfold_c(kt, n).T)
    dg = dw
    for k, f in enumerate(w.factors):
        dg = mode_n_product(dg, f.T, k + 1)
    return value, TuckerWeights(dg, tuple(grads))


def _unfold_c(t, n):
    # Any consistent column order works for dW_(n) K_(n)^T.
    return np.moveaxis(t, n - 1, 0).reshape(t.shape[n - 1], -1)


def fit(pairs, config: RegressionConfig, init: Optional[TuckerWeights] = None):
    """Mini-batch gradient descent for ``config.iterations`` steps.

    Batches are drawn without replacement from a permutation reshuffled every
    epoch. The returned weights carry the per-step (pre-update) batch
    objective in ``losses``.
    """
    z, x = as_arrays(pairs)
    shape = TensorShape3.of(x.shape[1:])
    if init is None:
        w = init_weights(shape, z.shape[1], config.rank, config.seed)
    else:
        w = init
        if w.rank != config.rank or tuple(w.shape) != shape or w.d != z.shape[1]:
            raise DimensionError("initial weights do not match data and config")
    core = w.core.copy()
    factors = [f.copy() for f in w.factors]
    rng = np.random.default_rng(config.seed)
    m = len(z)
    bs = min(int(config.batch_size), m)
    lr = config.learning_rate
    losses = np.empty(int(config.iterations))

    order = np.arange(m)
    pos = m
    for step in range(int(config.iterations)):
        if bs == m:
            idx = order
        else:
            if pos + bs > m:
                order = rng.permutation(m)
                pos = 0
            idx = order[pos:pos + bs]
            pos += bs
        # Overflow is reported below as TrainingDiverged, not as a warning.
        with np.errstate(over="ignore", invalid="ignore"):
            value, grad = loss_and_gradient(TuckerWeights(core, tuple(factors)), z[idx], x[idx],
                                            config.lam)
        if not np.isfinite(value):
            raise TrainingDiverged(step, value)
        losses[step] = value
        with np.errstate(over="ignore", invalid="ignore"):
            core -= lr * grad.core
            for f, gf in zip(factors, grad.factors):
                f -= lr * gf
    final = TuckerWeights(core, tuple(factors), losses=losses)
    if not all(np.all(np.isfinite(t)) for t in (core, *factors)):
        raise TrainingDiverged(int(config.iterations), float("nan"))
    return final


WeightsArg = Union[TuckerWeights, Mapping[int, TuckerWeights]]


def direction_to_latent(spec: SelectorSpec, basis, weights: WeightsArg):
    """Latent direction ``<Z', W>_3`` for the edit tensor described by ``spec``.

    ``weights`` may map term order (1, 2, 3) to separately trained
    regressions; each order's terms are then regressed with its own weights
    and the results summed.
    """
    if isinstance(weights, TuckerWeights):
        routes = [(spec, weights)]
        d = weights.d
    else:
        if not weights:
            raise ContractError("no regression weights supplied")
        routes = []
        for order in (1, 2, 3):
            part = spec.by_order(order)
            if len(part) == 0:
                continue
            if order not in weights:
                raise ContractError(f"no regression weights supplied for order-{order} terms")
            routes.append((part, weights[order]))
        d = next(iter(weights.values())).d
    out = np.zeros(d)
    for part, w in routes:
        if w.d != d:
            raise DimensionError("regressions disagree on latent dimension")
        if tuple(w.shape) != tuple(basis.shape):
            raise DimensionError(f"weights {tuple(w.shape)} do not match basis {tuple(basis.shape)}")
        out = out + predict_latent(assemble_edit_tensor(part, basis), w)
    return out
