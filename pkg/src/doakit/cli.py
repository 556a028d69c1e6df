"""Command-line front end: simulate / train / evaluate / sweep.

Configs are strict JSON (unknown fields rejected).  Every output file
carries a sha256 hash of the resolved run description on its first line
(CSV) or in its header (checkpoint), so artifacts can be traced back to
the exact inputs that produced them.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .classical import bartlett_estimate, music_estimate, random_estimate
from .damusic import DaMusicConfig, estimate_batch, forward, init_params, parameter_count
from .loss import rmspe_loss, rmspe_many
from .nn import ParamStore, Tape, adam_step, backward
from .signal import (
    STREAM_INIT,
    STREAM_RANDOM_EST,
    STREAM_SHUFFLE,
    Scenario,
    generate_dataset,
    generate_sample,
    load_dataset,
    scenario_from_header,
    sub_rng,
)

CHECKPOINT_VERSION = 1
ESTIMATORS = ("damusic", "music", "bartlett", "random")
SWEEP_KINDS = ("snapshots", "delta_theta", "mismatch")
DELTA_THETA_PAD = 0.1  # keep swept pairs away from the grid edges, radians


class ConfigError(ValueError):
    """Invalid configuration or incompatible inputs; exit status 2."""


# ------------------------------------------------------------------ config


@dataclass
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 16
    epochs: int = 50
    train_fraction: float = 0.9
    eval_seed: int = 0

    def __post_init__(self):
        for field in ("batch_size", "epochs", "eval_seed"):
            v = getattr(self, field)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError(f"train.{field} must be an integer, got {v!r}")
        if not self.lr >= 0:
            raise ConfigError(f"train.lr must be >= 0, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigError(f"train.batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"train.epochs must be >= 0, got {self.epochs}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(
                f"train.train_fraction must be in (0, 1), got {self.train_fraction}"
            )
        if self.eval_seed < 0:
            raise ConfigError(f"train.eval_seed must be >= 0, got {self.eval_seed}")


@dataclass
class SweepConfig:
    kind: str
    points: tuple
    trials_per_point: int

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise ConfigError(f"sweep.kind must be one of {SWEEP_KINDS}, got {self.kind!r}")
        self.points = tuple(float(p) for p in self.points)
        if not self.points:
            raise ConfigError("sweep.points must be nonempty")
        tpp = self.trials_per_point
        if not isinstance(tpp, int) or isinstance(tpp, bool) or tpp < 1:
            raise ConfigError(f"sweep.trials_per_point must be a count >= 1, got {tpp!r}")


@dataclass
class ExperimentConfig:
    scenario: Scenario
    model: DaMusicConfig
    train: TrainConfig
    L: int
    sweep: SweepConfig | None = None

    def __post_init__(self):
        if self.L < 1:
            raise ConfigError(f"L must be >= 1, got {self.L}")
        if (self.model.m, self.model.d) != (self.scenario.m, self.scenario.d):
            raise ConfigError("model m/d must match scenario m/d")


def _check_fields(obj: dict, allowed: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown field {where}.{key}")


_SCENARIO_FIELDS = {"m", "d", "T", "snr_db", "coherent", "doa_range",
                    "steering_noise_sigma", "seed"}
_MODEL_FIELDS = {"grid_size", "gru_hidden", "mlp_hidden", "spectrum_eps"}
_TRAIN_FIELDS = {"lr", "batch_size", "epochs", "train_fraction", "eval_seed"}
_SWEEP_FIELDS = {"kind", "points", "trials_per_point"}
_TOP_FIELDS = {"scenario", "model", "train", "sweep", "L"}


def parse_config(obj: dict) -> ExperimentConfig:
    """Strict parse of a config dict; names the offending field on failure."""
    _check_fields(obj, _TOP_FIELDS, "config")
    for req in ("scenario", "L"):
        if req not in obj:
            raise ConfigError(f"missing required field config.{req}")
    sc = dict(obj["scenario"])
    _check_fields(sc, _SCENARIO_FIELDS, "scenario")
    if "doa_range" in sc:
        sc["doa_range"] = tuple(sc["doa_range"])
    try:
        scenario = Scenario(**sc)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"scenario: {e}") from e
    md = dict(obj.get("model", {}))
    _check_fields(md, _MODEL_FIELDS, "model")
    try:
        model = DaMusicConfig(m=scenario.m, d=scenario.d, **md)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"model: {e}") from e
    tr = dict(obj.get("train", {}))
    _check_fields(tr, _TRAIN_FIELDS, "train")
    try:
        train = TrainConfig(**tr)
    except TypeError as e:
        raise ConfigError(f"train: {e}") from e
    sweep = None
    if obj.get("sweep") is not None:
        sw = dict(obj["sweep"])
        _check_fields(sw, _SWEEP_FIELDS, "sweep")
        for req in ("kind", "points", "trials_per_point"):
            if req not in sw:
                raise ConfigError(f"missing required field sweep.{req}")
        sweep = SweepConfig(**sw)
    if not isinstance(obj["L"], int) or isinstance(obj["L"], bool):
        raise ConfigError(f"L must be an integer, got {obj['L']!r}")
    return ExperimentConfig(scenario=scenario, model=model, train=train,
                            L=obj["L"], sweep=sweep)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
    return parse_config(obj)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Fully resolved config (defaults materialized), JSON-safe."""
    out = {
        "scenario": dataclasses.asdict(cfg.scenario),
        "model": dataclasses.asdict(cfg.model),
        "train": dataclasses.asdict(cfg.train),
        "L": cfg.L,
        "sweep": dataclasses.asdict(cfg.sweep) if cfg.sweep else None,
    }
    out["scenario"]["doa_range"] = list(cfg.scenario.doa_range)
    if cfg.sweep:
        out["sweep"]["points"] = list(cfg.sweep.points)
    return out


def _hash_obj(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


# -------------------------------------------------------------- checkpoint
#
# A checkpoint is one JSON document:
#   {"format_version", "config_hash", "model", "model_hash",
#    "metadata", "params": [[name, shape, hex-of-<f8-bytes], ...]}
# Parameter payloads are float64 little-endian, row-major, hex-encoded;
# the params list preserves canonical parameter order.


def _model_dict(cfg: DaMusicConfig) -> dict:
    return {"m": cfg.m, "d": cfg.d, "grid_size": cfg.grid_size,
            "gru_hidden": cfg.gru_hidden, "mlp_hidden": cfg.mlp_hidden,
            "spectrum_eps": cfg.spectrum_eps}


def save_checkpoint(path, model_cfg: DaMusicConfig, store: ParamStore,
                    metadata: dict, config_hash: str) -> None:
    md = _model_dict(model_cfg)
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "config_hash": config_hash,
        "model": md,
        "model_hash": _hash_obj(md),
        "metadata": metadata,
        "params": [
            [p.name, list(p.value.shape), p.value.astype("<f8").tobytes().hex()]
            for p in store
        ],
    }
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_checkpoint(path):
    """-> (DaMusicConfig, ParamStore, metadata, config_hash); bit-exact."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version "
                         f"{doc.get('format_version')}")
    if _hash_obj(doc["model"]) != doc["model_hash"]:
        raise ValueError(f"{path}: model config hash mismatch (corrupt file?)")
    cfg = DaMusicConfig(**doc["model"])
    store = ParamStore()
    for name, shape, payload in doc["params"]:
        arr = np.frombuffer(bytes.fromhex(payload), dtype="<f8")
        if arr.size != int(np.prod(shape, dtype=np.int64)):
            raise ValueError(f"{path}: payload size mismatch for {name}")
        store.add(name, arr.reshape([int(s) for s in shape]).copy())
    expected = {p.name for p in init_params(cfg, np.random.default_rng(0))}
    got = {p.name for p in store}
    if got != expected:
        raise ValueError(f"{path}: parameter names do not match the model "
                         f"(missing {sorted(expected - got)}, "
                         f"extra {sorted(got - expected)})")
    assert store.total_size() == parameter_count(cfg)
    return cfg, store, doc["metadata"], doc["config_hash"]


# ---------------------------------------------------------------- training


def _mean_rmspe(thetas: np.ndarray, theta_hat: np.ndarray) -> float:
    values, _ = rmspe_many(thetas, theta_hat)
    return float(np.mean(values))


def train_model(xs: np.ndarray, thetas: np.ndarray, model_cfg: DaMusicConfig,
                train_cfg: TrainConfig, seed: int):
    """Minibatch Adam on mean batch RMSPE; retains the best-validation
    parameters.  Returns (best ParamStore, metadata dict, log rows).

    Deterministic given (inputs, config, seed): parameter init comes from
    one reserved stream of `seed`, the train/validation split and every
    epoch's batch order from another.
    """
    n = xs.shape[0]
    if n < 2:
        raise ValueError("need at least 2 samples to hold out validation data")
    store = init_params(model_cfg, sub_rng(seed, STREAM_INIT))
    shuffle_rng = sub_rng(seed, STREAM_SHUFFLE)
    split = shuffle_rng.permutation(n)
    n_train = min(max(int(round(train_cfg.train_fraction * n)), 1), n - 1)
    train_idx, val_idx = split[:n_train], split[n_train:]
    xs_tr, th_tr = xs[train_idx], thetas[train_idx]
    xs_val, th_val = xs[val_idx], thetas[val_idx]

    def dataset_rmspe(x, th):
        return _mean_rmspe(th, estimate_batch(x, store, model_cfg))

    log = []

    def log_epoch(epoch, train_loss, val_loss, is_best):
        log.append({"epoch": epoch, "train_rmspe": train_loss,
                    "val_rmspe": val_loss, "is_best": int(is_best)})

    best_val = dataset_rmspe(xs_val, th_val)
    best_epoch = 0
    best_params = {p.name: p.value.copy() for p in store}
    log_epoch(0, dataset_rmspe(xs_tr, th_tr), best_val, True)

    t_adam = 0
    bs = train_cfg.batch_size
    for epoch in range(1, train_cfg.epochs + 1):
        order = shuffle_rng.permutation(n_train)
        loss_acc = 0.0
        for step, lo in enumerate(range(0, n_train, bs)):
            idx = order[lo : lo + bs]
            tape = Tape()
            out = forward(xs_tr[idx], store, model_cfg, tape)
            loss = rmspe_loss(out, th_tr[idx])
            if not math.isfinite(loss.value):
                raise RuntimeError(
                    f"training aborted: non-finite loss at epoch {epoch} "
                    f"step {step}; batch sample indices "
                    f"{train_idx[idx].tolist()}"
                )
            backward(tape, loss)
            t_adam += 1
            adam_step(store, train_cfg.lr, t=t_adam)
            loss_acc += float(loss.value) * len(idx)
        train_loss = loss_acc / n_train
        val_loss = dataset_rmspe(xs_val, th_val)
        improved = val_loss < best_val
        if improved:
            best_val, best_epoch = val_loss, epoch
            best_params = {p.name: p.value.copy() for p in store}
        log_epoch(epoch, train_loss, val_loss, improved)

    best_store = ParamStore()
    for p in store:  # keep canonical parameter order
        best_store.add(p.name, best_params[p.name])
    metadata = {
        "epochs_run": train_cfg.epochs,
        "best_epoch": best_epoch,
        "best_val_rmspe": best_val,
        "final_train_rmspe": log[-1]["train_rmspe"],
        "final_val_rmspe": log[-1]["val_rmspe"],
        "train_seed": seed,
        "n_train": int(n_train),
        "n_val": int(n - n_train),
        "lr": train_cfg.lr,
        "batch_size": bs,
        "train_fraction": train_cfg.train_fraction,
    }
    return best_store, metadata, log


# -------------------------------------------------------------- estimation


def run_estimators(xs: np.ndarray, d: int, names, *, store=None,
                   model_cfg=None, seed: int = 0) -> dict:
    """-> {estimator name: (N, d) angle estimates}, order-stable.

    Classical per-sample estimates run on a thread pool (pure functions of
    the sample; map preserves input order).  The random baseline draws
    from a per-sample reserved stream so results are position-addressable.
    """
    for name in names:
        if name not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {name!r}; "
                              f"choose from {','.join(ESTIMATORS)}")
    out = {}
    workers = min(8, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for name in names:
            if name == "damusic":
                if store is None:
                    raise ConfigError("estimator 'damusic' needs a checkpoint")
                out[name] = estimate_batch(xs, store, model_cfg)
            elif name == "music":
                out[name] = np.stack(list(pool.map(
                    lambda x: music_estimate(x, d), xs)))
            elif name == "bartlett":
                out[name] = np.stack(list(pool.map(
                    lambda x: bartlett_estimate(x, d), xs)))
            else:
                out[name] = np.stack([
                    random_estimate(d, sub_rng(seed, STREAM_RANDOM_EST + i))
                    for i in range(xs.shape[0])
                ])
    return out


def _split_estimators(arg: str | None, have_checkpoint: bool) -> list:
    if arg is None:
        return list(ESTIMATORS) if have_checkpoint else ["music", "bartlett", "random"]
    names = [s.strip() for s in arg.split(",") if s.strip()]
    if not names:
        raise ConfigError("--estimators is empty")
    return names


# --------------------------------------------------------------------- csv


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # shortest round-trip decimal
    return str(v)


def write_csv(path, config_hash: str, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


# ------------------------------------------------------------ subcommands


def cmd_simulate(cfg: ExperimentConfig, out_path) -> str:
    run_hash = _hash_obj({"command": "simulate", "config": config_to_dict(cfg)})
    generate_dataset(cfg.scenario, cfg.L, out_path)
    scn = cfg.scenario
    print(f"wrote {out_path}: L={cfg.L} m={scn.m} d={scn.d} T={scn.T} "
          f"snr_db={scn.snr_db} coherent={scn.coherent} seed={scn.seed}")
    print(f"config_hash={run_hash}")
    return run_hash


def _load_samples(dataset_path):
    scn, samples = load_dataset(dataset_path)
    xs = np.stack([s.x for s in samples])
    thetas = np.stack([s.theta for s in samples])
    return scn, xs, thetas


def cmd_train(cfg: ExperimentConfig, dataset_path, out_path, seed: int = 0) -> str:
    scn, xs, thetas = _load_samples(dataset_path)
    for field in ("m", "d", "T"):
        want, got = getattr(cfg.scenario, field), getattr(scn, field)
        if want != got:
            raise ConfigError(f"dataset {field}={got} does not match "
                              f"scenario.{field}={want}")
    run_hash = _hash_obj({"command": "train", "config": config_to_dict(cfg),
                          "dataset": {**dataclasses.asdict(scn), "L": xs.shape[0]},
                          "seed": seed})
    store, metadata, log = train_model(xs, thetas, cfg.model, cfg.train, seed)
    metadata["dataset_seed"] = scn.seed
    save_checkpoint(out_path, cfg.model, store, metadata, run_hash)
    log_path = str(out_path) + ".log.csv"
    write_csv(log_path, run_hash,
              ("epoch", "train_rmspe", "val_rmspe", "is_best"),
              [(r["epoch"], r["train_rmspe"], r["val_rmspe"], r["is_best"])
               for r in log])
    print(f"wrote {out_path} (best epoch {metadata['best_epoch']}, "
          f"val RMSPE {metadata['best_val_rmspe']:.4f}) and {log_path}")
    print(f"config_hash={run_hash}")
    return run_hash


def cmd_evaluate(checkpoint_path, dataset_path, out_path,
                 estimators: str | None = None, seed: int = 0) -> str:
    scn, xs, thetas = _load_samples(dataset_path)
    store = model_cfg = None
    ckpt_hash = None
    if checkpoint_path is not None:
        model_cfg, store, _, ckpt_hash = load_checkpoint(checkpoint_path)
        if (model_cfg.m, model_cfg.d) != (scn.m, scn.d):
            raise ConfigError(
                f"checkpoint model m={model_cfg.m} d={model_cfg.d} does not "
                f"match dataset m={scn.m} d={scn.d}")
    names = _split_estimators(estimators, checkpoint_path is not None)
    run_hash = _hash_obj({
        "command": "evaluate", "checkpoint": ckpt_hash,
        "dataset": {**dataclasses.asdict(scn), "L": xs.shape[0]},
        "estimators": names, "seed": seed,
    })
    hats = run_estimators(xs, scn.d, names, store=store,
                          model_cfg=model_cfg, seed=seed)
    rows = []
    summary = []
    for name in names:
        values, _ = rmspe_many(thetas, hats[name])
        rows.extend((i, name, values[i]) for i in range(len(values)))
        summary.append(("mean", name, float(np.mean(values))))
        summary.append(("median", name, float(np.median(values))))
    write_csv(out_path, run_hash, ("sample_id", "estimator", "rmspe_rad"),
              rows + summary)
    for kind, name, val in summary:
        print(f"{name} {kind} RMSPE: {val:.4f}")
    print(f"wrote {out_path}")
    print(f"config_hash={run_hash}")
    return run_hash


def _sweep_samples(scn: Scenario, sweep: SweepConfig, point: float):
    """Per-point test set; trial ell uses stream ell of scn.seed, matching
    dataset generation so same-seed sweeps agree with cmd_evaluate."""
    if sweep.kind == "snapshots":
        t = int(point)
        if t < 1 or t != point:
            raise ConfigError(f"snapshots sweep points must be counts, got {point}")
        scn_p = dataclasses.replace(scn, T=t)
        samples = [generate_sample(scn_p, sub_rng(scn_p.seed, ell))
                   for ell in range(sweep.trials_per_point)]
    elif sweep.kind == "mismatch":
        if point < 0:
            raise ConfigError(f"mismatch sweep points must be >= 0, got {point}")
        scn_p = dataclasses.replace(scn, steering_noise_sigma=float(point))
        samples = [generate_sample(scn_p, sub_rng(scn_p.seed, ell))
                   for ell in range(sweep.trials_per_point)]
    else:  # delta_theta
        if scn.d != 2:
            raise ConfigError("delta_theta sweep requires scenario.d = 2")
        lo, hi = scn.doa_range
        if not 0.0 < point < (hi - lo) - 2 * DELTA_THETA_PAD:
            raise ConfigError(f"delta_theta point {point} does not fit in "
                              f"doa_range {scn.doa_range}")
        samples = []
        for ell in range(sweep.trials_per_point):
            rng = sub_rng(scn.seed, ell)
            theta0 = rng.uniform(lo + DELTA_THETA_PAD, hi - DELTA_THETA_PAD - point)
            samples.append(generate_sample(
                scn, rng, theta=np.array([theta0, theta0 + point])))
    xs = np.stack([s.x for s in samples])
    thetas = np.stack([s.theta for s in samples])
    return xs, thetas


def cmd_sweep(cfg: ExperimentConfig, checkpoint_path, out_path,
              estimators: str | None = None, seed: int = 0) -> str:
    if cfg.sweep is None:
        raise ConfigError("config has no sweep section")
    store = model_cfg = None
    ckpt_hash = None
    if checkpoint_path is not None:
        model_cfg, store, _, ckpt_hash = load_checkpoint(checkpoint_path)
        if (model_cfg.m, model_cfg.d) != (cfg.scenario.m, cfg.scenario.d):
            raise ConfigError("checkpoint model m/d does not match scenario")
    names = _split_estimators(estimators, checkpoint_path is not None)
    run_hash = _hash_obj({
        "command": "sweep", "config": config_to_dict(cfg),
        "checkpoint": ckpt_hash, "estimators": names, "seed": seed,
    })
    rows = []
    for point in cfg.sweep.points:
        xs, thetas = _sweep_samples(cfg.scenario, cfg.sweep, point)
        hats = run_estimators(xs, cfg.scenario.d, names, store=store,
                              model_cfg=model_cfg, seed=seed)
        for name in names:
            values, _ = rmspe_many(thetas, hats[name])
            rows.append((point, name, float(np.mean(values))))
    write_csv(out_path, run_hash, ("sweep_value", "estimator", "mean_rmspe"), rows)
    for point, name, val in rows:
        print(f"{cfg.sweep.kind}={point:g} {name}: mean RMSPE {val:.4f}")
    print(f"wrote {out_path}")
    print(f"config_hash={run_hash}")
    return run_hash


# -------------------------------------------------------------------- main


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="doakit",
        description="Array DoA estimation: simulate data, train the learned "
                    "subspace model, evaluate and sweep estimators.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="generate a dataset file")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, default=None,
                    help="override scenario.seed")

    tp = sub.add_parser("train", help="train on a dataset, write a checkpoint")
    tp.add_argument("--config", required=True)
    tp.add_argument("--dataset", required=True)
    tp.add_argument("--out", required=True)
    tp.add_argument("--seed", type=int, default=0,
                    help="training seed (init + batch order)")

    ep = sub.add_parser("evaluate", help="per-sample RMSPE of estimators")
    ep.add_argument("--checkpoint", default=None)
    ep.add_argument("--dataset", required=True)
    ep.add_argument("--out", required=True)
    ep.add_argument("--estimators", default=None,
                    help=f"comma list from {{{','.join(ESTIMATORS)}}}")
    ep.add_argument("--seed", type=int, default=0,
                    help="seed for the random baseline")

    wp = sub.add_parser("sweep", help="mean RMSPE across a swept parameter")
    wp.add_argument("--config", required=True)
    wp.add_argument("--checkpoint", default=None)
    wp.add_argument("--out", required=True)
    wp.add_argument("--estimators", default=None)
    wp.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        if args.command == "simulate":
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg.scenario = dataclasses.replace(cfg.scenario, seed=args.seed)
            cmd_simulate(cfg, args.out)
        elif args.command == "train":
            cmd_train(load_config(args.config), args.dataset, args.out,
                      seed=args.seed)
        elif args.command == "evaluate":
            cmd_evaluate(args.checkpoint, args.dataset, args.out,
                         estimators=args.estimators, seed=args.seed)
        else:
            cmd_sweep(load_config(args.config), args.checkpoint, args.out,
                      estimators=args.estimators, seed=args.seed)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
