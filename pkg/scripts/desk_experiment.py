"""Desk-scale version of the full experiment grid.

Simulates a dataset, trains every (row, latent dim, seed) model, scores
held-out RMSE and writes the information-gain table:

    python scripts/desk_experiment.py --out runs/desk --frames 2000 --epochs 50

Checkpoints already present under --out are reused, so an interrupted run
resumes where it stopped.
"""

import argparse
import json
import logging
import time
from pathlib import Path

from softpercept import cvae, fingersim, latentlens

ROWS = {
    "proprio-only": (("proprio",), ("proprio", "force")),
    "vision-input": (("proprio", "vision"), ("proprio", "force")),
    "vision-in-out": (("proprio", "vision"), ("proprio", "force", "flow")),
}

log = logging.getLogger("desk")


def dataset(out: Path, frames: int, seed: int):
    path = out / "data"
    if (path / "manifest.json").exists():
        return fingersim.read_dataset(path)
    data = fingersim.build_dataset(fingersim.generate_dataset(frames, seed), seed)
    fingersim.write_dataset(path, data)
    return data


def model(out: Path, data, row: str, dim: int, seed: int, epochs: int):
    path = out / "models" / f"{row}-d{dim}-s{seed}"
    if (path / "model.json").exists():
        return cvae.load_checkpoint(path)
    inputs, outputs = ROWS[row]
    cfg = cvae.ModalityConfig(inputs=inputs, outputs=outputs, latent_dim=dim)
    t0 = time.perf_counter()
    res = cvae.train(data, cfg, epochs, seed)
    log.info("%s d=%d seed=%d: ELBO %.3f -> %.3f in %.0fs", row, dim, seed,
             res.history[0]["train_elbo"], res.history[-1]["train_elbo"], time.perf_counter() - t0)
    cvae.save_checkpoint(res.model, path, res.rng_state, extra={"seed": seed})
    cvae.write_loss_log(res.history, path / "loss.csv")
    return res.model


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--out", default="runs/desk")
    p.add_argument("--frames", type=int, default=2000)
    p.add_argument("--data-seed", type=int, default=7)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--dims", type=int, nargs="+", default=[16, 64, 128])
    p.add_argument("--rows", nargs="+", default=list(ROWS), choices=list(ROWS))
    p.add_argument("--points", type=int, default=500, help="frames embedded per model")
    p.add_argument("--bins", type=int, default=16)
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = Path(args.out)
    data = dataset(out, args.frames, args.data_seed)
    tsne = latentlens.TsneConfig()
    rmse, entries = [], []
    for row in args.rows:
        for dim in args.dims:
            for seed in args.seeds:
                m = model(out, data, row, dim, seed, args.epochs)
                table = cvae.eval_rmse(m, data)
                rmse.append({"row": row, "latent_dim": dim, "seed": seed,
                             **{k: v["rmse"] for k, v in table.items()}})
                res = latentlens.latent_information(m, data, tsne, args.points, args.bins, seed=seed)
                entries.append({"label": row, "latent_dim": dim, "seed": seed, "result": res})
    (out / "rmse.json").write_text(json.dumps(rmse, indent=1, sort_keys=True) + "\n")
    report = latentlens.information_gain_report(entries, tsne, args.bins)
    (out / "mi_report.json").write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    for row, dims in report["rows"].items():
        for dim, cell in dims.items():
            gain = "n/a" if cell["gain_percent"] is None else f"{cell['gain_percent']:+.1f}%"
            print(f"{row:14s} d={dim:>3s}  MI enc {cell['encoded_mi']:.3f}  cond {cell['conditioned_mi']:.3f}  gain {gain}")


if __name__ == "__main__":
    main()
