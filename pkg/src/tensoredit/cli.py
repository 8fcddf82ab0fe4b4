"""Command-line pipeline: synth -> bases -> fit -> edit -> mod.

Every option can also come from a JSON file passed with ``--config``
(keys are the long option names with dashes replaced by underscores,
either at top level or under a key named after the subcommand). Flags
override the file. On failure a single JSON line
``{"error": ..., "message": ...}`` is written to stderr and the exit
status is 1.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .edits import SelectorSpec, assemble_edit_tensor
from .errors import ContractError, TensorEditError
from .mpca import compute_bases
from .npyio import dumps_json, read_json, read_npy, write_npy
from .regression import RegressionConfig, direction_to_latent, fit, parameter_counts
from .store import load_basis, load_model, load_weights, save_basis, save_model, save_weights
from .synth import attribute_probe, make_synthetic, mod_metric, planted_first_order, sample

DEFAULTS = {
    "synth": {"style": "multilinear", "noise_sigma": 0.0, "samples": 10000, "ranks": None,
              "sample_seed": None},
    "bases": {"method": "auto"},
    "fit": {"rank": None, "lam": 1e-4, "learning_rate": 1e-3, "iterations": 5000,
            "batch_size": 256},
    "edit": {"weights_mixing": None, "out": None, "combine": False},
    "mod": {"weights_mixing": None, "selectors": None, "planted": None, "probes": None,
            "n_images": 100, "step": 1.0},
}
REQUIRED = {
    "synth": ("d", "shape", "seed", "out"),
    "bases": ("batch", "out"),
    "fit": ("batch", "latents", "out", "seed"),
    "edit": ("bases", "weights", "selectors"),
    "mod": ("model", "weights", "bases", "seed"),
}


def build_parser():
    p = argparse.ArgumentParser(prog="tensoredit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON file with option values")
        return sp

    s = add("synth", "sample a synthetic generator and a batch of activations")
    s.add_argument("--d", type=int)
    s.add_argument("--shape", type=int, nargs=3, metavar=("C", "H", "W"))
    s.add_argument("--style", choices=("dense", "multilinear"))
    s.add_argument("--noise-sigma", type=float)
    s.add_argument("--ranks", type=int, nargs=3, help="planted ranks (multilinear style)")
    s.add_argument("--samples", type=int, help="batch size M")
    s.add_argument("--seed", type=int, help="model seed")
    s.add_argument("--sample-seed", type=int, help="sampling seed (default: seed + 1)")
    s.add_argument("--out", help="output directory")

    b = add("bases", "compute channel/height/width bases of a batch")
    b.add_argument("--batch", help="M x C x H x W activations (.npy)")
    b.add_argument("--method", choices=("auto", "jacobi", "lapack"))
    b.add_argument("--out", help="output directory")

    f = add("fit", "fit the Tucker regression from activations to latents")
    f.add_argument("--batch")
    f.add_argument("--latents", help="M x d latent codes (.npy)")
    f.add_argument("--rank", type=int, nargs=4, metavar=("R1", "R2", "R3", "R4"))
    f.add_argument("--lam", type=float)
    f.add_argument("--learning-rate", type=float)
    f.add_argument("--iterations", type=int)
    f.add_argument("--batch-size", type=int)
    f.add_argument("--seed", type=int)
    f.add_argument("--out")

    e = add("edit", "map selector terms to latent directions")
    e.add_argument("--bases")
    e.add_argument("--weights", help="regression used for first-order terms (and all terms "
                                     "unless --weights-mixing is given)")
    e.add_argument("--weights-mixing", help="separate regression for 2nd/3rd-order terms")
    e.add_argument("--selectors", help="selector file, one term per line")
    e.add_argument("--combine", action="store_const", const=True,
                   help="sum all lines into a single direction")
    e.add_argument("--out", help="write directions as K x d .npy instead of stdout")

    m = add("mod", "attribute-leakage matrix and MOD score on a synthetic model")
    m.add_argument("--model")
    m.add_argument("--weights")
    m.add_argument("--weights-mixing", help="separate regression for 2nd/3rd-order terms")
    m.add_argument("--bases")
    m.add_argument("--selectors", nargs="+", help="one selector file per attribute")
    m.add_argument("--planted", nargs="+", metavar="MODE:INDEX",
                   help="use planted style/geometry latents of the model instead of "
                        "--selectors, e.g. C:3 H:2 W:1 (probes are the planted components)")
    m.add_argument("--probes", help="N x C x H x W probe tensors (.npy)")
    m.add_argument("--n-images", type=int)
    m.add_argument("--step", type=float)
    m.add_argument("--seed", type=int)
    return p


def resolve(args):
    """Merge defaults < config file < flags, then check required options."""
    cmd = args.command
    values = dict(DEFAULTS[cmd])
    if args.config:
        cfg = read_json(args.config)
        section = cfg.get(cmd, {}) if isinstance(cfg.get(cmd), dict) else {}
        values.update({k: v for k, v in cfg.items() if not isinstance(v, dict)})
        values.update(section)
    values.update({k: v for k, v in vars(args).items() if v is not None})
    missing = [k for k in REQUIRED[cmd] if values.get(k) is None]
    if missing:
        raise ContractError(f"missing required option(s): {', '.join('--' + k.replace('_', '-') for k in missing)}")
    return values


def cmd_synth(o, out):
    model = make_synthetic(o["d"], o["shape"], o["style"], o["noise_sigma"], o["seed"], o["ranks"])
    sample_seed = o["sample_seed"] if o["sample_seed"] is not None else o["seed"] + 1
    z, x = sample(model, o["samples"], sample_seed)
    os.makedirs(o["out"], exist_ok=True)
    save_model(os.path.join(o["out"], "model"), model)
    write_npy(os.path.join(o["out"], "batch.npy"), x)
    write_npy(os.path.join(o["out"], "latents.npy"), z)
    out.write(dumps_json({"batch": list(x.shape), "latents": list(z.shape), "style": model.style}))


def cmd_bases(o, out):
    basis = compute_bases(read_npy(o["batch"]), method=o["method"])
    save_basis(o["out"], basis)
    out.write(dumps_json({f.name: f.eigenvalues.tolist() for f in basis.factors}))


def cmd_fit(o, out):
    x = read_npy(o["batch"])
    z = read_npy(o["latents"])
    if x.ndim != 4 or z.ndim != 2:
        raise ContractError(f"expected batch M x C x H x W and latents M x d, got {x.shape}, {z.shape}")
    rank = o["rank"] or list(x.shape[1:]) + [z.shape[1]]
    config = RegressionConfig(rank=tuple(rank), lam=o["lam"], learning_rate=o["learning_rate"],
                              iterations=o["iterations"], batch_size=o["batch_size"], seed=o["seed"])
    w = fit((z, x), config)
    counts = parameter_counts(x.shape[1:], z.shape[1], config.rank)
    final = float(w.losses[-1])
    save_weights(o["out"], w, lam=config.lam, learning_rate=config.learning_rate,
                 iterations=config.iterations, batch_size=config.batch_size, seed=config.seed,
                 final_loss=final, parameters=counts)
    out.write(dumps_json({"final_loss": final, "parameters": counts, "rank": list(config.rank)}))


def _weights_arg(o):
    w, _ = load_weights(o["weights"])
    if o.get("weights_mixing"):
        mix, _ = load_weights(o["weights_mixing"])
        return {1: w, 2: mix, 3: mix}
    return w


def _read_spec(path):
    with open(path, encoding="utf-8") as fh:
        return SelectorSpec.parse(fh.read())


def cmd_edit(o, out):
    basis = load_basis(o["bases"])
    weights = _weights_arg(o)
    spec = _read_spec(o["selectors"])
    specs = [spec] if o["combine"] and len(spec) else [SelectorSpec((t,)) for t in spec.terms]
    dirs = [direction_to_latent(s, basis, weights) for s in specs]
    if o["out"]:
        d = weights.d if not isinstance(weights, dict) else weights[1].d
        write_npy(o["out"], np.array(dirs).reshape(len(dirs), d))
    else:
        for v in dirs:
            out.write(json.dumps(v.tolist()) + "\n")


def cmd_mod(o, out):
    model = load_model(o["model"])
    basis = load_basis(o["bases"])
    weights = _weights_arg(o)
    if bool(o["selectors"]) == bool(o["planted"]):
        raise ContractError("give exactly one of --selectors or --planted")
    if o["planted"]:
        pairs = [planted_first_order(model, basis, *_planted_arg(p)) for p in o["planted"]]
        specs = [s for s, _ in pairs]
        probes = np.stack([p for _, p in pairs])
    else:
        specs = [_read_spec(p) for p in o["selectors"]]
        probes = read_npy(o["probes"]) if o["probes"] else _default_probes(specs, basis)
    a = attribute_probe(model, weights, basis, specs, probes, o["n_images"], o["step"], o["seed"])
    out.write(dumps_json({"A": a.tolist(), "mod": mod_metric(a)}))


def _planted_arg(text):
    mode, _, index = text.partition(":")
    try:
        return mode, int(index)
    except ValueError:
        raise ContractError(f"planted direction {text!r} is not MODE:INDEX") from None


def _default_probes(specs, basis):
    edits = [assemble_edit_tensor(s, basis) for s in specs]
    norms = [np.linalg.norm(e) for e in edits]
    if min(norms) == 0:
        raise ContractError("a selector produces a zero edit; supply --probes explicitly")
    return np.stack([e / n for e, n in zip(edits, norms)])


COMMANDS = {"synth": cmd_synth, "bases": cmd_bases, "fit": cmd_fit, "edit": cmd_edit,
            "mod": cmd_mod}


def main(argv=None, out=None, err=None):
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](resolve(args), out)
    except (TensorEditError, OSError, ValueError, KeyError) as exc:
        err.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
