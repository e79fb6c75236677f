"""Run every generative probe on one checkpoint and write JSON reports plus flow strips.

    python scripts/probe_suite.py --checkpoint runs/desk/models/vision-in-out-d16-s0 --data runs/desk/data
"""

import argparse
import json
from pathlib import Path

import numpy as np

from softpercept import cvae, fingersim, genprobe


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default="runs/probes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigmas", type=float, nargs="+", default=[0.0, 0.1, 0.3, 1.0, 3.0, 10.0])
    args = p.parse_args()

    model = cvae.load_checkpoint(args.checkpoint)
    data = fingersim.read_dataset(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _, val = data.split(model.cfg.val_fraction)
    src, dst = data.pairs(val)
    frame, nxt = data.frames[src[0]], data.frames[dst[0]]

    results = {
        "resample": genprobe.resample_stability(model, frame, nxt, seed=args.seed).to_dict(),
        "actions": {k: r.to_dict() for k, r in genprobe.action_perturbation(model, data, seed=args.seed).items()},
        "synthetic": {},
    }
    for s in args.sigmas:
        rep, pred = genprobe.synthetic_latent(model, frame, sigma=s, seed=args.seed)
        results["synthetic"][str(s)] = rep.to_dict()
        if pred.flow is not None:
            genprobe.flow_strip_png(out / f"synthetic_sigma{s:g}.png", pred.flow[:6])

    sweep = genprobe.action_sweep(model, frame, genprobe.default_grid(data.manifest["scene"]["action_bounds"]))
    if "proprio" in model.cfg.outputs:
        # mirror check along the first action axis: prediction at +a vs -a
        pr = sweep["proprio"].astype(np.float64)
        results["sweep_mirror_gap"] = float(np.abs(pr - pr[::-1]).mean())
    results["sweep_count"] = sweep["count"]

    try:
        genprobe.check_rollout_config(model)
    except genprobe.ProbeConfigError as exc:
        results["rollout"] = {"skipped": str(exc)}
    else:
        results["rollout"] = genprobe.rollout_drift(model, data, int(src[0]), 3, np.zeros((3, 3))).to_dict()
        states = genprobe.feedback_rollout(model, frame, frame.a.repeat(3, axis=0), 3)
        genprobe.flow_strip_png(out / "rollout.png", [s.flow[0] for s in states])

    (out / "probes.json").write_text(json.dumps(results, indent=1, sort_keys=True) + "\n")
    for s, rep in results["synthetic"].items():
        print(f"sigma {s:>5s}: " + ", ".join(f"{m} {v['mean']:.4g}" for m, v in rep["summary"].items()))


if __name__ == "__main__":
    main()
