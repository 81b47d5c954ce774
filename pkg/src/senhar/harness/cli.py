"""Command line entry point.

    senhar <command> [--config FILE] [--key=value ...]

Commands: prep, train, eval, stress, noise, denoise, gradcheck, synth.
Every run writes ``config.txt`` (reloadable with ``--config``) and
``manifest.json`` (config, seed, command, sha256 of every artifact) into
``output_dir``.

Exit codes: 0 success, 1 usage or configuration error, 2 data or checkpoint
error, 3 numeric failure (including a failed gradient check).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np

from senhar.classifiers import (ClassCenters, MLPHead, compute_class_centers, predict_knn, predict_mlp, predict_sm,
                                train_mlp_head)
from senhar.core.tensor import Tensor
from senhar.datasets import ParseReport, SampleSet, load_hhar, load_usc_had, preprocess, save_sampleset, \
    synth_dataset
from senhar.denoise import qq_data, write_qq_csv
from senhar.errors import (CheckpointError, ConfigurationError, ContractError, CoverageError, DataError,
                           DegenerateEmbeddingError, DimensionError, NumericError, SamplingError, SegmentationError,
                           SENError, StatisticsError)
from senhar.harness.checkpoint import load_sen, save_sen
from senhar.harness.config import ExperimentConfig, load_config
from senhar.harness.experiments import (prepare_data, run_classification, run_denoise, run_noise_robustness,
                                        run_stress)
from senhar.harness.gradsuite import run_gradcheck_suite
from senhar.metrics import metrics
from senhar.network import embed_batch
from senhar.pairwise import similarity_gap, train_sen, write_loss_history

log = logging.getLogger("senhar")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("prep", "train", "eval", "stress", "noise", "denoise", "gradcheck", "synth")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (UsageError, ConfigurationError, ContractError, DimensionError)):
        return EXIT_USAGE
    if isinstance(exc, (NumericError, DegenerateEmbeddingError)):
        return EXIT_NUMERIC
    if isinstance(exc, (DataError, CheckpointError, SegmentationError, SamplingError, CoverageError,
                        StatisticsError, OSError)):
        return EXIT_DATA
    return EXIT_USAGE


# -- output helpers ------------------------------------------------------------

class Run:
    """Collects artifacts of one invocation and writes the manifest last."""

    def __init__(self, command: str, cfg: ExperimentConfig):
        self.command, self.cfg = command, cfg
        self.out = Path(cfg.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.artifacts: list[Path] = []
        self.started = time.time()

    def path(self, name: str) -> Path:
        p = self.out / name
        self.artifacts.append(p)
        return p

    def json(self, name: str, obj) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
        return p

    def csv(self, name: str, rows: list[dict], columns: list[str] | None = None) -> Path:
        p = self.path(name)
        columns = columns or (list(rows[0]) if rows else [])
        with open(p, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=columns)
            w.writeheader()
            w.writerows(rows)
        return p

    def finish(self, status: str = "ok") -> dict:
        self.path("config.txt").write_text(self.cfg.to_text())
        manifest = {
            "command": self.command,
            "seed": self.cfg.seed,
            "status": status,
            "config": self.cfg.to_dict(),
            "artifacts": {p.name: _sha256(p) for p in self.artifacts if p.exists()},
            "python": platform.python_version(),
            "numpy": np.__version__,
            "elapsed_seconds": round(time.time() - self.started, 3),
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return manifest


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _prediction_rows(pred: np.ndarray, truth: np.ndarray) -> list[dict]:
    return [{"sample_id": i, "true": int(t), "pred": int(p)} for i, (t, p) in enumerate(zip(truth, pred))]


# -- commands ------------------------------------------------------------------

def cmd_synth(cfg: ExperimentConfig, run: Run) -> int:
    samples = synth_dataset(cfg.classes, cfg.train_per_class + cfg.test_per_class, cfg.seed, cfg.synth_noise,
                            cfg.sample_rate, cfg.window_seconds)
    save_sampleset(samples, run.path("samples.sens"))
    log.info("wrote %d synthetic samples", len(samples))
    return EXIT_OK


def cmd_prep(cfg: ExperimentConfig, run: Run) -> int:
    if cfg.dataset == "synth":
        raise ConfigurationError("prep reads a recorded dataset; use the synth command for synthetic data")
    report = ParseReport()
    recordings = load_hhar(cfg.data_path, report) if cfg.dataset == "hhar" else load_usc_had(cfg.data_path)
    samples: SampleSet = preprocess(recordings, cfg.sample_rate, cfg.window_seconds, cfg.gap_seconds,
                                    provenance={"dataset": cfg.dataset, "path": cfg.data_path})
    save_sampleset(samples, run.path("samples.sens"))
    counts = np.bincount(samples.labels, minlength=6) if len(samples) else np.zeros(6, dtype=int)
    run.json("prep.json", {"recordings": len(recordings), "samples": len(samples),
                           "per_class": counts.tolist(), "rejected_rows": report.rejected_total})
    return EXIT_OK


def cmd_train(cfg: ExperimentConfig, run: Run) -> int:
    data = prepare_data(cfg)
    y = data.train.labels
    sen, history = train_sen(data.X_train, y, cfg.sen_config(), cfg.train_config())
    write_loss_history(run.path("loss.csv"), history)
    E = embed_batch(data.X_train, sen)
    centers = compute_class_centers(E, y, data.n_classes)
    head, head_hist = train_mlp_head(E, y, data.n_classes, cfg.head_config())
    run.csv("head_loss.csv", [{"epoch": i, "loss": v} for i, v in enumerate(head_hist)])
    extra = {"n_classes": data.n_classes,
             "head": {"embedding_dim": sen.config.embedding_dim, "hidden": cfg.head_hidden,
                      "n_classes": data.n_classes}}
    more = {**head.params, "centers": Tensor(centers.centers)}
    save_sen(sen, run.path("sen.ckpt"), extra, more)
    run.json("train.json", {"final_loss": history[-1] if history else None, "steps": len(history),
                            "train_similarity_gap": similarity_gap(E, y)})
    return EXIT_OK


def cmd_eval(cfg: ExperimentConfig, run: Run) -> int:
    data = prepare_data(cfg)
    y_test = data.test.labels
    if not cfg.checkpoint:
        result = run_classification(cfg, data)
        reports, predictions = result.reports, result.predictions
    else:
        sen, tensors, stored = load_sen(cfg.checkpoint)
        n_classes = int(stored.get("n_classes", data.n_classes))
        E_train = embed_batch(data.X_train, sen)
        E_test = embed_batch(data.X_test, sen)
        predictions = {}
        which = cfg.classifier_list
        if "sm" in which:
            centers = (ClassCenters(tensors["centers"], np.arange(n_classes)) if "centers" in tensors
                       else compute_class_centers(E_train, data.train.labels, n_classes))
            predictions["sm"] = predict_sm(E_test, centers)
        if "knn" in which:
            predictions["knn"] = predict_knn(E_test, E_train, data.train.labels, min(cfg.k_nn, len(E_train)))
        if "mlp" in which and "head.w_out" in tensors:
            head = MLPHead(*(Tensor(tensors[f"head.{n}"]) for n in ("w_hidden", "b_hidden", "w_out", "b_out")))
            predictions["mlp"] = predict_mlp(E_test, head)
        if "baseline" in which:
            log.warning("baseline is not stored in checkpoints; skipped")
        reports = {k: metrics(p, y_test, n_classes) for k, p in predictions.items()}
        run.json("embedding.json", {"test_similarity_gap": similarity_gap(E_test, y_test)})
    run.json("metrics.json", {k: r.to_dict() for k, r in reports.items()})
    for name, pred in predictions.items():
        run.csv(f"predictions_{name}.csv", _prediction_rows(pred, y_test), ["sample_id", "true", "pred"])
    for name, rep in reports.items():
        log.info("%s accuracy=%.4f avg_f1=%.4f", name, rep.accuracy, rep.avg_f1)
    return EXIT_OK


def cmd_stress(cfg: ExperimentConfig, run: Run) -> int:
    rows = run_stress(cfg)
    run.csv("stress.csv", rows, ["per_class", "avg_f1", "accuracy", "precision"])
    return EXIT_OK


def cmd_noise(cfg: ExperimentConfig, run: Run) -> int:
    rows = run_noise_robustness(cfg)
    run.csv("noise.csv", rows, ["noise_rate", "classifier", "accuracy", "avg_f1"])
    return EXIT_OK


def cmd_denoise(cfg: ExperimentConfig, run: Run) -> int:
    res = run_denoise(cfg)
    summary = {**res.report.to_dict(), "clean_size": res.clean_size, "contaminated_size": res.contaminated_size}
    run.json("denoise.json", summary)
    run.csv("distance_stats.csv", res.stats.to_rows(), ["class", "other", "in_p5", "mu", "sigma"])
    for (c, o), sims in sorted(res.between_sims.items()):
        if len(sims) >= 3 and np.ptp(sims) > 0:
            write_qq_csv(run.path(f"qq_{c}_{o}.csv"), qq_data(sims))
    log.info("denoise recall=%s flagged=%d", summary["recall"], summary["flagged"])
    return EXIT_OK


def cmd_gradcheck(cfg: ExperimentConfig, run: Run) -> int:
    checks = run_gradcheck_suite(cfg.seed)
    rows = [{"op": c.name, "max_rel_error": c.error, "tolerance": c.tol, "passed": c.passed} for c in checks]
    run.csv("gradcheck.csv", rows, ["op", "max_rel_error", "tolerance", "passed"])
    failed = [c.name for c in checks if not c.passed]
    for c in checks:
        log.info("%-20s %.3e %s", c.name, c.error, "ok" if c.passed else "FAIL")
    if failed:
        log.error("gradient check failed for %s", ", ".join(failed))
        return EXIT_NUMERIC
    return EXIT_OK


HANDLERS = {"prep": cmd_prep, "train": cmd_train, "eval": cmd_eval, "stress": cmd_stress, "noise": cmd_noise,
            "denoise": cmd_denoise, "gradcheck": cmd_gradcheck, "synth": cmd_synth}


def parse_args(argv: list[str]) -> tuple[str, ExperimentConfig, str]:
    parser = _Parser(prog="senhar", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", default=None, help="key = value file")
    parser.add_argument("--log-level", default="INFO")
    args, rest = parser.parse_known_args(argv)
    overrides = {}
    for item in rest:
        if not item.startswith("--") or "=" not in item:
            raise UsageError(f"expected --key=value, got {item!r}")
        key, value = item[2:].split("=", 1)
        overrides[key] = value
    if args.config and not Path(args.config).exists():
        raise ConfigurationError(f"config file {args.config!r} does not exist")
    cfg = load_config(args.config, overrides)
    return args.command, cfg.validate(), args.log_level


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        command, cfg, level = parse_args(argv)
    except Exception as exc:  # noqa: BLE001 - mapped to an exit code
        print(f"senhar: error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    run = Run(command, cfg)
    try:
        code = HANDLERS[command](cfg, run)
    except Exception as exc:  # noqa: BLE001
        if not isinstance(exc, (SENError, OSError)):
            raise
        code = _exit_code(exc)
        log.error("%s failed: %s: %s", command, type(exc).__name__, exc)
        run.finish(status=f"error: {type(exc).__name__}")
        return code
    run.finish(status="ok" if code == EXIT_OK else "failed")
    return code


if __name__ == "__main__":
    sys.exit(main())
