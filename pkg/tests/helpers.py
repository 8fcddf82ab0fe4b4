"""Shared helpers for driving the CLI in-process."""

import io
import os

from tensoredit.cli import main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def pipeline(root):
    """synth -> bases -> fit -> edit -> mod on the 16-latent 8x4x4 model; returns stdout texts."""
    root = str(root)
    logs = []
    steps = [
        ("synth", "--d", 16, "--shape", 8, 4, 4, "--samples", 2000, "--seed", 0, "--out", root),
        ("bases", "--batch", f"{root}/batch.npy", "--out", f"{root}/bases"),
        ("fit", "--batch", f"{root}/batch.npy", "--latents", f"{root}/latents.npy",
         "--learning-rate", 1e-2, "--iterations", 3000, "--seed", 0, "--out", f"{root}/weights"),
        ("edit", "--bases", f"{root}/bases", "--weights", f"{root}/weights",
         "--selectors", f"{root}/sel.txt", "--out", f"{root}/dirs.npy"),
        ("mod", "--model", f"{root}/model", "--weights", f"{root}/weights", "--bases", f"{root}/bases",
         "--planted", "C:3", "H:2", "W:1", "--seed", 0),
    ]
    os.makedirs(root, exist_ok=True)
    with open(f"{root}/sel.txt", "w") as fh:
        fh.write("# one direction per line\n1:C:1:1.0\n1:H:2:1.0\n3:CHW:1,1,1:0.5\n")
    for argv in steps:
        code, out, err = run(*argv)
        assert code == 0, err
        logs.append(out)
    return logs
