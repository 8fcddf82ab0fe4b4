"""On-disk layouts for bases, regression weights and synthetic models.

bases/    U1.npy U2.npy U3.npy mean.npy eigenvalues.json
weights/  core.npy factor1.npy .. factor4.npy metadata.json
model/    map.npy model.json

All payloads are computed before the first file is written, and each file
is replaced atomically.
"""

import os

import numpy as np

from .errors import TensorEditError
from .mpca import FactorBasis, MultilinearBasis
from .npyio import read_json, read_npy, write_json, write_npy
from .regression import TuckerWeights
from .synth import SyntheticModel
from .tensor import TensorShape3


class StoreError(TensorEditError, OSError):
    """A stored artifact is missing or inconsistent."""


def _need(path):
    if not os.path.exists(path):
        raise StoreError(f"missing file {path}")
    return path


def save_basis(directory, basis):
    os.makedirs(directory, exist_ok=True)
    report = {f.name: f.eigenvalues.tolist() for f in basis.factors}
    for k, f in enumerate(basis.factors, start=1):
        write_npy(os.path.join(directory, f"U{k}.npy"), f.U)
    write_npy(os.path.join(directory, "mean.npy"), basis.mean)
    write_json(os.path.join(directory, "eigenvalues.json"), report)


def load_basis(directory):
    report = read_json(_need(os.path.join(directory, "eigenvalues.json")))
    factors = []
    for k, name in enumerate(("channel", "height", "width"), start=1):
        u = read_npy(_need(os.path.join(directory, f"U{k}.npy")))
        factors.append(FactorBasis(mode=k, U=u, eigenvalues=np.asarray(report[name], dtype=float)))
    mean = read_npy(_need(os.path.join(directory, "mean.npy")))
    return MultilinearBasis(*factors, mean=mean)


def save_weights(directory, w, **metadata):
    os.makedirs(directory, exist_ok=True)
    meta = {"shape": list(w.shape), "d": w.d, "rank": list(w.rank)}
    meta.update(metadata)
    write_npy(os.path.join(directory, "core.npy"), w.core)
    for k, f in enumerate(w.factors, start=1):
        write_npy(os.path.join(directory, f"factor{k}.npy"), f)
    write_json(os.path.join(directory, "metadata.json"), meta)


def load_weights(directory):
    meta = read_json(_need(os.path.join(directory, "metadata.json")))
    core = read_npy(_need(os.path.join(directory, "core.npy")))
    factors = tuple(read_npy(_need(os.path.join(directory, f"factor{k}.npy"))) for k in range(1, 5))
    w = TuckerWeights(core, factors)
    if list(w.shape) != meta["shape"] or w.d != meta["d"] or list(w.rank) != meta["rank"]:
        raise StoreError(f"{directory}: metadata disagrees with stored arrays")
    return w, meta


def save_model(directory, model):
    os.makedirs(directory, exist_ok=True)
    meta = {
        "d": model.d,
        "shape": list(model.shape),
        "style": model.style,
        "noise_sigma": model.noise_sigma,
        "seed": model.seed,
    }
    if model.planted_factors is not None:
        meta["planted_factors"] = [f.tolist() for f in model.planted_factors]
        meta["triples"] = [list(t) for t in model.triples]
        meta["scales"] = model.scales.tolist()
    write_npy(os.path.join(directory, "map.npy"), model.map)
    write_json(os.path.join(directory, "model.json"), meta)


def load_model(directory):
    meta = read_json(_need(os.path.join(directory, "model.json")))
    m = read_npy(_need(os.path.join(directory, "map.npy")))
    extra = {}
    if "planted_factors" in meta:
        extra = dict(
            planted_factors=tuple(np.asarray(f, dtype=float) for f in meta["planted_factors"]),
            triples=tuple(tuple(t) for t in meta["triples"]),
            scales=np.asarray(meta["scales"], dtype=float),
        )
    return SyntheticModel(int(meta["d"]), TensorShape3.of(meta["shape"]), m,
                          float(meta["noise_sigma"]), meta["style"], int(meta["seed"]), **extra)
