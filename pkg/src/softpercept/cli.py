"""Command-line entry point: ``softpercept <subcommand> ...``.

Every subcommand accepts ``--config FILE.json`` whose keys are the
subcommand's long option names (dashes or underscores).  Values given on
the command line win over the file, which wins over built-in defaults.

Exit codes: 0 success, 2 usage error, 3 data/format error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import cvae, fingersim, genprobe, latentlens
from .cvae import ModalityConfig
from .latentlens import TsneConfig
from .latentlens import plots as lens_plots
from .latentlens import report as lens_report

log = logging.getLogger("softpercept")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


# ----------------------------------------------------------------------------
# option tables: name -> (default, type, help)

COMMON = {
    "seed": (0, int, "global seed; every random stream derives from it"),
}

SIMULATE = {
    "frames": (None, int, "number of frames to simulate (required, > 0)"),
    "duration": (10.0, float, "seconds per episode; one episode per random box layout"),
    "out": (None, str, "output dataset directory (required)"),
}

TRAIN = {
    "data": (None, str, "dataset directory (required)"),
    "inputs": ("proprio", str, "comma-separated input modalities from proprio,vision,force"),
    "outputs": ("proprio,force", str, "comma-separated output modalities from proprio,force,flow"),
    "latent_dim": (16, int, "latent dimension d"),
    "epochs": (50, int, "training epochs"),
    "batch_size": (128, int, "mini-batch size"),
    "lr": (1e-3, float, "Adam learning rate"),
    "beta": (1e-3, float, "KL weight"),
    "val_fraction": (0.1, float, "fraction of episodes held out for validation"),
    "out": (None, str, "checkpoint directory (required)"),
}

MODEL_IO = {
    "checkpoint": (None, str, "checkpoint directory (required)"),
    "data": (None, str, "dataset directory (required)"),
    "out": (None, str, "output directory (required)"),
}

EVAL = {
    **MODEL_IO,
    "split": ("val", str, "episodes to score: val, train or all"),
    "sampled": (False, bool, "draw z from the posterior instead of using its mean"),
    "timing_calls": (100, int, "single-frame predictions timed for the latency report (0 disables)"),
}

TSNE = {
    "perplexity": (1000.0, float, "t-SNE perplexity, clipped to (N-1)/3"),
    "iterations": (1000, int, "t-SNE iterations"),
    "learning_rate": (200.0, float, "t-SNE learning rate"),
}

EMBED = {
    **MODEL_IO,
    "method": ("tsne", str, "pca or tsne"),
    "space": ("encoded", str, "encoded or conditioned latent space"),
    "points": (1000, int, "frames embedded (subsampled without replacement)"),
    **TSNE,
    "png": (False, bool, "also write a scatter plot coloured by force"),
}

MI = {
    "checkpoint": (None, str, "single checkpoint directory, or use --grid (default: None)"),
    "grid": (None, str, "JSON file listing checkpoint directories for a full table (default: None)"),
    "data": (None, str, "dataset directory (required)"),
    "out": (None, str, "output directory (required)"),
    "bins": (16, int, "histogram bins per axis"),
    "points": (1000, int, "frames embedded per model"),
    "method": ("tsne", str, "pca or tsne"),
    **TSNE,
}

PROBE = {
    **MODEL_IO,
    "kind": ("resample", str, "resample, action, synthetic, sweep or rollout"),
    "frame": (None, int, "dataset frame to probe (default: first validation frame with a successor)"),
    "k": (100, int, "resample: number of posterior draws"),
    "clamp_variance": (False, bool, "resample: force the posterior variance to zero"),
    "sigma": (1.0, float, "synthetic: latent noise scale"),
    "mode": ("noise", str, "synthetic: noise (z + sigma*eps) or prior (z ~ N(0, I))"),
    "draws": (100, int, "synthetic: number of noisy latents"),
    "grid_shape": ("11,5,5", str, "sweep: points per action axis"),
    "max_frames": (None, int, "action: cap on validation frames scored (default: None, all)"),
    "horizon": (3, int, "rollout: steps fed back"),
    "actions": ("recorded", str, "rollout: recorded or zero actions"),
    "sampled": (False, bool, "rollout: sample latents instead of using means"),
    "png": (False, bool, "write flow colour-wheel PNGs where flow is predicted"),
}

ROLLOUT = {k: PROBE[k] for k in ("checkpoint", "data", "out", "frame", "horizon", "actions", "sampled", "png")}

COMMANDS = {
    "simulate": ("generate a seeded dataset of multi-modal frames", SIMULATE),
    "train": ("train a perception model on (t, t+1) pairs", TRAIN),
    "eval": ("held-out RMSE per output modality", EVAL),
    "embed": ("2-D projection of latent means", EMBED),
    "mi": ("mutual information between latent topology and force", MI),
    "probe": ("generative-property probes", PROBE),
    "rollout": ("feed predictions back as inputs for several steps", ROLLOUT),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="softpercept", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr (default: off)")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (helptext, table) in COMMANDS.items():
        sp = sub.add_parser(name, help=helptext, description=helptext)
        sp.add_argument("--config", default=None, help="JSON file of option values (default: none)")
        for key, (default, typ, text) in {**table, **COMMON}.items():
            flag = "--" + key.replace("_", "-")
            full = text if ("required" in text or "default:" in text) else f"{text} (default: {default})"
            if typ is bool:
                sp.add_argument(flag, dest=key, action="store_const", const=True, default=None, help=full)
            else:
                sp.add_argument(flag, dest=key, type=typ, default=None, help=full)
    return p


def resolve(args: argparse.Namespace, table: dict) -> dict:
    """Merge built-in defaults, the optional config file and explicit flags."""
    table = {**table, **COMMON}
    opts = {k: v[0] for k, v in table.items()}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise UsageError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {args.config} is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError(f"config file {args.config} must hold a JSON object")
        for k, v in loaded.items():
            key = k.replace("-", "_")
            if key not in table:
                raise UsageError(f"unknown config key {k!r} for {args.command}; known: {sorted(table)}")
            typ = table[key][1]
            try:
                opts[key] = v if v is None or typ is bool else typ(v)
            except (TypeError, ValueError):
                raise UsageError(f"config key {k!r}: cannot convert {v!r} to {typ.__name__}") from None
    for k in table:
        v = getattr(args, k, None)
        if v is not None:
            opts[k] = v
    for k, (_, _, text) in table.items():
        if "required" in text and opts[k] is None:
            raise UsageError(f"--{k.replace('_', '-')} is required")
    return opts


def _modalities(text: str) -> tuple[str, ...]:
    return tuple(m.strip() for m in str(text).split(",") if m.strip())


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8")


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _out_dir(opts) -> Path:
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _tsne_cfg(opts) -> TsneConfig:
    return TsneConfig(perplexity=opts["perplexity"], iterations=opts["iterations"],
                      learning_rate=opts["learning_rate"], seed=opts["seed"])


def _episodes(data, model, split: str):
    train_eps, val_eps = data.split(model.cfg.val_fraction)
    if split == "val":
        return val_eps
    if split == "train":
        return train_eps
    if split == "all":
        return train_eps + val_eps
    raise UsageError(f"--split must be val, train or all, got {split!r}")


def _default_frame(data, model) -> int:
    _, val_eps = data.split(model.cfg.val_fraction)
    src, _ = data.pairs(val_eps or None)
    if len(src) == 0:
        raise ValueError("dataset has no frame with a recorded successor")
    return int(src[0])


def _successor(data, index: int) -> int:
    src, dst = data.pairs()
    hit = np.flatnonzero(src == index)
    if hit.size == 0:
        raise ValueError(f"frame {index} has no recorded successor in its episode")
    return int(dst[hit[0]])


# ----------------------------------------------------------------------------
# subcommands


def cmd_simulate(opts) -> None:
    if opts["frames"] <= 0:
        raise UsageError(f"--frames must be positive, got {opts['frames']}")
    if opts["duration"] <= 0:
        raise UsageError(f"--duration must be positive, got {opts['duration']}")
    episodes = fingersim.generate_dataset(opts["frames"], opts["seed"], opts["duration"])
    data = fingersim.build_dataset(episodes, opts["seed"])
    fingersim.write_dataset(opts["out"], data)
    log.info("wrote %d frames (%d dropped) to %s", len(data), data.manifest["dropped_frames"], opts["out"])


def cmd_train(opts) -> None:
    try:
        cfg = ModalityConfig(
            inputs=_modalities(opts["inputs"]),
            outputs=_modalities(opts["outputs"]),
            latent_dim=opts["latent_dim"],
            beta=opts["beta"],
            batch_size=opts["batch_size"],
            lr=opts["lr"],
            val_fraction=opts["val_fraction"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if opts["epochs"] < 0 or cfg.batch_size < 1:
        raise UsageError("--epochs must be >= 0 and --batch-size >= 1")
    data = fingersim.read_dataset(opts["data"])
    out = _out_dir(opts)
    extra = {"seed": opts["seed"], "dataset_seed": data.manifest["seed"]}
    try:
        res = cvae.train(data, cfg, opts["epochs"], opts["seed"],
                         progress=lambda r: log.info("epoch %d train %.5g val %.5g", r["epoch"], r["train_elbo"], r["val_elbo"]))
    except cvae.TrainingDiverged as exc:
        cvae.save_checkpoint(exc.last_good, out / "last_good", extra=extra)
        cvae.write_loss_log(exc.history, out / "loss.csv")
        raise
    cvae.save_checkpoint(res.model, out, res.rng_state, extra=extra)
    cvae.write_loss_log(res.history, out / "loss.csv")


def cmd_eval(opts) -> None:
    model = cvae.load_checkpoint(opts["checkpoint"])
    data = fingersim.read_dataset(opts["data"])
    table = cvae.eval_rmse(model, data, _episodes(data, model, opts["split"]),
                           mean_mode=not opts["sampled"], seed=opts["seed"])
    out = _out_dir(opts)
    cvae.write_rmse_csv(table, out / "rmse.csv")
    if opts["timing_calls"] > 0:
        # wall-clock varies run to run, so it lives apart from the primary output
        timing = cvae.time_predictions(model, data.frames[_default_frame(data, model)], opts["timing_calls"])
        _write_json(out / "timing.json", timing)


def cmd_embed(opts) -> None:
    if opts["method"] not in ("pca", "tsne"):
        raise UsageError(f"--method must be pca or tsne, got {opts['method']!r}")
    if opts["space"] not in ("encoded", "conditioned"):
        raise UsageError(f"--space must be encoded or conditioned, got {opts['space']!r}")
    model = cvae.load_checkpoint(opts["checkpoint"])
    data = fingersim.read_dataset(opts["data"])
    idx = latentlens.select_frames(data, opts["points"], opts["seed"])
    ls = latentlens.collect_latents(model, data, idx)
    z = ls.encoded if opts["space"] == "encoded" else ls.conditioned
    y, res = lens_report.embed(z, opts["method"], _tsne_cfg(opts))
    cd = latentlens.centroid_distance_analysis(y, ls.force)
    out = _out_dir(opts)
    latentlens.write_embedding_csv(out / "embedding.csv", y, cd)
    summary = {"method": opts["method"], "space": opts["space"], "n": len(idx), "spearman": cd.spearman,
               "frames": idx.tolist()}
    if res is not None:
        summary.update(kl=res.kl, initial_kl=res.initial_kl, perplexity=res.perplexity,
                       requested_perplexity=res.requested_perplexity, perplexity_clipped=res.clipped)
    _write_json(out / "embed.json", summary)
    if opts["png"]:
        lens_plots.scatter_png(out / "embedding.png", y, ls.force, f"{opts['method']} {opts['space']}")


def cmd_mi(opts) -> None:
    if opts["method"] not in ("pca", "tsne"):
        raise UsageError(f"--method must be pca or tsne, got {opts['method']!r}")
    if (opts["checkpoint"] is None) == (opts["grid"] is None):
        raise UsageError("give exactly one of --checkpoint or --grid")
    if opts["grid"] is not None:
        try:
            paths = json.loads(Path(opts["grid"]).read_text(encoding="utf-8"))
        except (FileNotFoundError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read grid file {opts['grid']}: {exc}") from None
        if not isinstance(paths, list):
            raise UsageError("grid file must hold a JSON list of checkpoint directories")
    else:
        paths = [opts["checkpoint"]]
    data = fingersim.read_dataset(opts["data"])
    tcfg = _tsne_cfg(opts)
    entries = []
    for path in paths:
        try:
            model = cvae.load_checkpoint(path)
        except cvae.CheckpointError as exc:
            if opts["grid"] is None:
                raise
            log.warning("skipping %s: %s", path, exc)
            entries.append({"label": str(path), "latent_dim": "?", "seed": None, "result": None, "missing": str(exc)})
            continue
        res = latentlens.latent_information(model, data, tcfg, opts["points"], opts["bins"], opts["method"], opts["seed"])
        entries.append({
            "label": latentlens.row_label(model.cfg.inputs, model.cfg.outputs),
            "latent_dim": model.cfg.latent_dim,
            "seed": model.meta.get("extra", {}).get("seed"),
            "checkpoint": str(path),
            "result": res,
        })
    report = latentlens.information_gain_report(entries, tcfg, opts["bins"])
    report["models"] = [{k: v for k, v in e.items()} for e in entries]
    _write_json(_out_dir(opts) / "mi_report.json", report)


def _rollout(opts, model, data, out: Path) -> None:
    start = opts["frame"] if opts["frame"] is not None else _default_frame(data, model)
    if opts["actions"] not in ("recorded", "zero"):
        raise UsageError(f"--actions must be recorded or zero, got {opts['actions']!r}")
    acts = None if opts["actions"] == "recorded" else np.zeros((opts["horizon"], 3), np.float32)
    try:
        genprobe.check_rollout_config(model)
    except genprobe.ProbeConfigError as exc:
        raise UsageError(str(exc)) from None
    report = genprobe.rollout_drift(model, data, start, opts["horizon"], acts, not opts["sampled"], opts["seed"])
    frames = data.frames
    seq = frames.a[start : start + opts["horizon"]] if acts is None else acts
    states = genprobe.feedback_rollout(model, frames[start], seq, opts["horizon"], not opts["sampled"], opts["seed"])
    report.extra["force_per_step"] = [s.force[0].tolist() for s in states if s.force is not None]
    _write_json(out / "rollout.json", report.to_dict())
    if opts["png"] and states[0].flow is not None:
        genprobe.flow_strip_png(out / "rollout_flow.png", [s.flow[0] for s in states])


def cmd_probe(opts) -> None:
    kind = opts["kind"]
    if kind not in ("resample", "action", "synthetic", "sweep", "rollout"):
        raise UsageError(f"--kind must be resample, action, synthetic, sweep or rollout, got {kind!r}")
    model = cvae.load_checkpoint(opts["checkpoint"])
    data = fingersim.read_dataset(opts["data"])
    out = _out_dir(opts)
    if kind == "rollout":
        _rollout(opts, model, data, out)
        return
    if kind == "action":
        reports = genprobe.action_perturbation(model, data, seed=opts["seed"], max_frames=opts["max_frames"])
        _write_json(out / "probe.json", {k: r.to_dict() for k, r in reports.items()})
        return
    index = opts["frame"] if opts["frame"] is not None else _default_frame(data, model)
    frame = data.frames[index]
    if kind == "resample":
        if opts["k"] < 1:
            raise UsageError("--k must be >= 1")
        nxt = data.frames[_successor(data, index)]
        rep = genprobe.resample_stability(model, frame, nxt, k=opts["k"], seed=opts["seed"],
                                          logvar_override=-np.inf if opts["clamp_variance"] else None)
        rep.config["frame"] = index
        _write_json(out / "probe.json", rep.to_dict())
    elif kind == "synthetic":
        if opts["sigma"] < 0 or opts["mode"] not in ("noise", "prior"):
            raise UsageError("--sigma must be >= 0 and --mode noise or prior")
        rep, pred = genprobe.synthetic_latent(model, frame, sigma=opts["sigma"], draws=opts["draws"],
                                              seed=opts["seed"], mode=opts["mode"])
        rep.config["frame"] = index
        _write_json(out / "probe.json", rep.to_dict())
        if opts["png"] and pred.flow is not None:
            genprobe.flow_strip_png(out / "synthetic_flow.png", pred.flow[:8])
    else:
        try:
            shape = tuple(int(s) for s in str(opts["grid_shape"]).split(","))
        except ValueError:
            raise UsageError(f"--grid-shape must be three integers, got {opts['grid_shape']!r}") from None
        if len(shape) != 3 or min(shape) < 1:
            raise UsageError(f"--grid-shape must be three positive integers, got {opts['grid_shape']!r}")
        grid = genprobe.default_grid(data.manifest["scene"]["action_bounds"], shape)
        sweep = genprobe.action_sweep(model, frame, grid)
        for m in model.cfg.outputs:
            np.save(out / f"sweep_{m}.npy", sweep[m])
        _write_json(out / "probe.json", {"kind": "action-sweep", "config": {"frame": index, "grid_shape": list(shape)},
                                         "grid": sweep["grid"], "count": sweep["count"],
                                         "outputs": list(model.cfg.outputs)})


def cmd_rollout(opts) -> None:
    model = cvae.load_checkpoint(opts["checkpoint"])
    data = fingersim.read_dataset(opts["data"])
    _rollout(opts, model, data, _out_dir(opts))


HANDLERS = {
    "simulate": cmd_simulate,
    "train": cmd_train,
    "eval": cmd_eval,
    "embed": cmd_embed,
    "mi": cmd_mi,
    "probe": cmd_probe,
    "rollout": cmd_rollout,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        opts = resolve(args, COMMANDS[args.command][1])
        HANDLERS[args.command](opts)
    except UsageError as exc:
        print(f"softpercept {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (fingersim.DatasetFormatError, cvae.CheckpointError, cvae.MissingModalityError,
            FileNotFoundError, ValueError) as exc:
        print(f"softpercept {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"softpercept {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
