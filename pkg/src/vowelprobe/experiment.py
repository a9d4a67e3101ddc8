"""Pipeline orchestration: feature sets, the 9-way grid search, MI, reports.

Stages are corpus -> features -> train -> mi -> report. Each stage writes its
outputs plus a small JSON manifest under the run directory, so the CLI
subcommands and `run_experiment` share the same on-disk contract. All outputs
are deterministic for a fixed config (no timestamps anywhere).
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import convenc, corpus, dsp, formant, miest, svmkit
from .errors import ConfigError, DataError

log = logging.getLogger("vowelprobe")

FEATURE_SETS = ("mfcc", "mfcc_f1f2", "layer0", "layer1", "layer2", "layer3", "layer4", "layer5", "layer6")
# report rows follow the results-table convention: layers first, then spectral sets
REPORT_ORDER = ("layer0", "layer1", "layer2", "layer3", "layer4", "layer5", "layer6", "mfcc", "mfcc_f1f2")
SCALED_SETS = ("mfcc", "mfcc_f1f2")  # conv activations stay raw


def needs_scaling(feature_set: str) -> bool:
    return feature_set in SCALED_SETS


@dataclass
class FeatureMatrix:
    feature_set: str
    ids: list[str]
    labels: np.ndarray  # +1 front / -1 back
    X: np.ndarray

    def __post_init__(self):
        if len(self.ids) != self.X.shape[0] or len(self.ids) != self.labels.shape[0]:
            raise DataError(f"feature set {self.feature_set}: ids/labels/rows misaligned")


def segment_id(seg: corpus.AudioSegment) -> str:
    return f"{seg.source}:{seg.start}-{seg.end}"


@dataclass
class FeatureBundle:
    sets: dict[str, FeatureMatrix]
    formant_failures: list[str]
    formants: list[tuple[str, float, float, int]]  # (id, f1, f2, n_frames_used)


def build_feature_sets(
    segments: list[corpus.AudioSegment],
    store: convenc.WeightStore,
    pooling: str = "mean",
    mfcc_cfg: dsp.MfccConfig = dsp.DEFAULT_MFCC,
) -> FeatureBundle:
    """All nine feature matrices, row-aligned by segment id.

    Formant-failed segments are dropped from mfcc_f1f2 only; every other set
    keeps the full row order.
    """
    if not segments:
        raise DataError("no segments to featurize")
    ids = [segment_id(seg) for seg in segments]
    labels = svmkit.labels_to_pm1([seg.vclass for seg in segments])

    mfcc_rows = np.stack([dsp.pool_frames(dsp.mfcc(seg, mfcc_cfg), pooling) for seg in segments])

    layer_rows: list[list[np.ndarray]] = [[] for _ in range(convenc.N_LAYERS)]
    for seg in segments:
        acts = convenc.extract_activations(store, seg)
        for k in range(convenc.N_LAYERS):
            layer_rows[k].append(convenc.pool_time(acts, k, pooling))

    failures: list[str] = []
    formant_rows: list[tuple[str, float, float, int]] = []
    f1f2_rows, f1f2_keep = [], []
    for row, seg in enumerate(segments):
        try:
            pair, n_frames = formant.estimate_f1f2_frames(seg)
        except DataError:
            failures.append(ids[row])
            continue
        formant_rows.append((ids[row], pair.f1, pair.f2, n_frames))
        f1f2_rows.append(np.concatenate([mfcc_rows[row], [pair.f1, pair.f2]]))
        f1f2_keep.append(row)
    if failures:
        log.info("formant estimation failed for %d segment(s); dropped from mfcc_f1f2 only", len(failures))

    sets = {
        "mfcc": FeatureMatrix("mfcc", ids, labels, mfcc_rows),
        "mfcc_f1f2": FeatureMatrix(
            "mfcc_f1f2",
            [ids[i] for i in f1f2_keep],
            labels[f1f2_keep],
            np.stack(f1f2_rows) if f1f2_rows else np.zeros((0, mfcc_rows.shape[1] + 2)),
        ),
    }
    for k in range(convenc.N_LAYERS):
        sets[f"layer{k}"] = FeatureMatrix(f"layer{k}", ids, labels, np.stack(layer_rows[k]))
    return FeatureBundle(sets=sets, formant_failures=failures, formants=formant_rows)


# ---------------------------------------------------------------- disk I/O


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_feature_csv(fm: FeatureMatrix, path: Path) -> str:
    """CSV: id, class, then feature dims. Returns an FNV checksum of the bytes."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "class"] + [f"f{i}" for i in range(fm.X.shape[1])])
        for row in range(fm.X.shape[0]):
            cls = "front" if fm.labels[row] > 0 else "back"
            writer.writerow([fm.ids[row], cls] + [repr(float(v)) for v in fm.X[row]])
    return f"{convenc.fnv1a64(path.read_bytes()):016x}"


def read_feature_csv(path: Path) -> FeatureMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["id", "class"]:
            raise DataError(f"{path} is not a feature CSV (header {header[:2]})")
        ids, labels, rows = [], [], []
        for rec in reader:
            ids.append(rec[0])
            labels.append(1.0 if rec[1] == "front" else -1.0)
            rows.append([float(v) for v in rec[2:]])
    return FeatureMatrix(path.stem, ids, np.array(labels), np.array(rows, dtype=np.float64))


# ---------------------------------------------------------------- stages


def stage_prepare(corpus_dir, out_dir, rules: corpus.SegmentRules | None = None, partition: str | None = None) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rules = rules or corpus.SegmentRules()
    segments = corpus.scan_corpus(corpus_dir, partition, rules)
    if not segments:
        raise DataError(f"no qualifying vowel segments found under {corpus_dir}")
    manifest = out_dir / "manifest.csv"
    corpus.write_manifest(segments, manifest, corpus_dir, rules)
    counts = corpus.class_counts(segments)
    summary = {
        "manifest": str(manifest),
        "segments": len(segments),
        "front": counts["front"],
        "back": counts["back"],
        "partition": partition,
        "rules": asdict(rules),
    }
    _write_json(out_dir / "prepare.json", summary)
    return summary


def load_weight_store(weights: str | None, random_seed: int | None) -> tuple[convenc.WeightStore, str]:
    if weights:
        data = Path(weights).read_bytes()
        return convenc.load_weights(data), f"file:{weights}:{convenc.fnv1a64(data):016x}"
    if random_seed is None:
        raise ConfigError("either a weight container or a random-weights seed is required")
    return convenc.random_weight_store(random_seed), f"random:{random_seed}"


def stage_features(
    manifest,
    out_dir,
    weights: str | None = None,
    random_seed: int | None = None,
    pooling: str = "mean",
    mfcc_cfg: dsp.MfccConfig = dsp.DEFAULT_MFCC,
) -> dict:
    if pooling not in ("mean", "flatten"):
        raise ConfigError(f"pooling must be 'mean' or 'flatten', got {pooling!r}")
    out_dir = Path(out_dir)
    features_dir = out_dir / "features"
    features_dir.mkdir(parents=True, exist_ok=True)
    segments = corpus.read_manifest(Path(manifest))
    store, weights_id = load_weight_store(weights, random_seed)

    params = {
        "pooling": pooling,
        "weights": weights_id,
        "mfcc": mfcc_cfg.to_dict(),
        "manifest": str(manifest),
        "segments": len(segments),
    }
    params_path = features_dir / "params.json"
    if params_path.exists():
        try:
            cached = json.loads(params_path.read_text())
        except json.JSONDecodeError:
            cached = {}
        if cached.get("params") == params and all(
            (features_dir / f"{name}.csv").exists() for name in FEATURE_SETS
        ):
            log.info("feature cache hit in %s; skipping extraction", features_dir)
            return cached

    bundle = build_feature_sets(segments, store, pooling, mfcc_cfg)
    sets = bundle.sets
    checksums = {}
    for name in FEATURE_SETS:
        checksums[name] = write_feature_csv(sets[name], features_dir / f"{name}.csv")
    with open(features_dir / "ids.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "class"])
        for seg_id, lab in zip(sets["mfcc"].ids, sets["mfcc"].labels):
            writer.writerow([seg_id, "front" if lab > 0 else "back"])
    with open(features_dir / "formants.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "f1", "f2", "n_frames_used"])
        for seg_id, f1, f2, n_frames in bundle.formants:
            writer.writerow([seg_id, repr(float(f1)), repr(float(f2)), n_frames])
    summary = {
        "params": params,
        "checksums": checksums,
        "formant_failures": bundle.formant_failures,
        "dims": {name: int(sets[name].X.shape[1]) for name in FEATURE_SETS},
        "rows": {name: int(sets[name].X.shape[0]) for name in FEATURE_SETS},
    }
    _write_json(params_path, summary)
    return summary


def _load_master_ids(features_dir: Path) -> tuple[list[str], np.ndarray]:
    path = features_dir / "ids.csv"
    if not path.exists():
        raise DataError(f"{path} not found; run the features stage first")
    ids, labels = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            ids.append(row["id"])
            labels.append(1.0 if row["class"] == "front" else -1.0)
    return ids, np.array(labels)


def resolve_sets(requested: str) -> list[str]:
    if requested == "all":
        return list(FEATURE_SETS)
    if requested not in FEATURE_SETS:
        raise ConfigError(f"unknown feature set {requested!r}; choose from {FEATURE_SETS} or 'all'")
    return [requested]


def stage_train(
    features_dir,
    out_dir,
    sets: str = "all",
    folds: int = 5,
    seed: int = 42,
    test_fraction: float = 0.2,
    grid: svmkit.GridSpec | None = None,
    tol: float = 1e-3,
    max_passes: int = 10,
) -> dict:
    """Grid-search every requested set on the shared stratified split."""
    features_dir = Path(features_dir)
    out_dir = Path(out_dir)
    train_dir = out_dir / "train"
    train_dir.mkdir(parents=True, exist_ok=True)
    grid = grid or svmkit.GridSpec()
    wanted = resolve_sets(sets)

    master_ids, master_labels = _load_master_ids(features_dir)
    classes = [corpus.VowelClass.FRONT if v > 0 else corpus.VowelClass.BACK for v in master_labels]
    split = corpus.split_labels(classes, test_fraction, seed)
    train_ids = {master_ids[i] for i in split.train}
    test_ids = {master_ids[i] for i in split.test}
    _write_json(
        train_dir / "split.json",
        {
            "seed": seed,
            "test_fraction": test_fraction,
            "n_train": len(split.train),
            "n_test": len(split.test),
            "train_ids": sorted(train_ids),
            "test_ids": sorted(test_ids),
        },
    )

    results = {}
    total_cells = 0
    for name in wanted:
        fm = read_feature_csv(features_dir / f"{name}.csv")
        in_train = np.array([seg_id in train_ids for seg_id in fm.ids])
        in_test = np.array([seg_id in test_ids for seg_id in fm.ids])
        X_tr, y_tr = fm.X[in_train], fm.labels[in_train]
        X_te, y_te = fm.X[in_test], fm.labels[in_test]
        log.info("grid search on %s: %d train / %d test rows, %d cells",
                 name, len(y_tr), len(y_te), len(grid.cells()))
        search = svmkit.grid_search(
            X_tr, y_tr, grid, folds, seed, scale=needs_scaling(name), tol=tol, max_passes=max_passes
        )
        result = svmkit.evaluate(search.classifier, X_te, y_te, search.scaler, search.best)
        total_cells += search.cells_evaluated

        with open(train_dir / f"cv_{name}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["feature_set", "C", "kernel", "gamma_mode", "decision", "fold", "accuracy"])
            for row in search.cv_rows:
                writer.writerow([name, row.cell.c, row.cell.kernel, row.cell.gamma_mode,
                                 row.cell.decision, row.fold, repr(row.accuracy)])
        with open(train_dir / f"confusion_{name}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["", "pred_front", "pred_back"])
            writer.writerow(["true_front", int(result.confusion[0, 0]), int(result.confusion[0, 1])])
            writer.writerow(["true_back", int(result.confusion[1, 0]), int(result.confusion[1, 1])])

        results[name] = {
            "feature_set": name,
            "best": {
                "C": search.best.c,
                "kernel": search.best.kernel,
                "gamma_mode": search.best.gamma_mode,
                "decision": search.best.decision,
                "gamma_value": search.best_gamma,
            },
            "cv_mean_accuracy": search.cv_mean[search.best],
            "test_accuracy": result.accuracy,
            "confusion": result.confusion.tolist(),
            "n_train": int(in_train.sum()),
            "n_test": int(in_test.sum()),
            "cells_evaluated": search.cells_evaluated,
            "scaled": needs_scaling(name),
        }
        _write_json(train_dir / f"result_{name}.json", results[name])

    summary = {
        "sets": wanted,
        "folds": folds,
        "seed": seed,
        "test_fraction": test_fraction,
        "grid_cells": len(grid.cells()),
        "total_cells": total_cells,
    }
    _write_json(train_dir / "train.json", summary)
    return {"summary": summary, "results": results}


def stage_mi(
    features_dir,
    out_dir,
    cfg: miest.MiConfig = miest.MiConfig(),
    target: str = "mfcc",
) -> dict:
    features_dir = Path(features_dir)
    out_dir = Path(out_dir)
    mi_dir = out_dir / "mi"
    mi_dir.mkdir(parents=True, exist_ok=True)
    mfcc_fm = read_feature_csv(features_dir / "mfcc.csv")

    per_layer = []
    for k in range(convenc.N_LAYERS):
        act_fm = read_feature_csv(features_dir / f"layer{k}.csv")
        if act_fm.ids != mfcc_fm.ids:
            raise DataError(f"layer{k} rows are not aligned with the mfcc rows")
        if target == "label":
            cap = min(cfg.max_samples, act_fm.X.shape[0])
            rng = np.random.default_rng(cfg.seed)
            rows = np.sort(rng.choice(act_fm.X.shape[0], size=cap, replace=False)) \
                if act_fm.X.shape[0] > cap else np.arange(act_fm.X.shape[0])
            value = miest.mi_discrete_labels(
                act_fm.X[rows][:, : min(64, act_fm.X.shape[1])], act_fm.labels[rows],
                cfg.k_neighbors, cfg.seed,
            )
            result = miest.MiLayerResult(value, min(64, act_fm.X.shape[1]), len(rows))
        elif target == "mfcc":
            result = miest.mi_layer(mfcc_fm.X, act_fm.X, cfg)
        else:
            raise ConfigError(f"mi target must be 'mfcc' or 'label', got {target!r}")
        log.info("MI layer%d = %.4f nats (%d pairs, %d samples)",
                 k, result.mi_nats, result.pairs_computed, result.samples_used)
        per_layer.append(result)

    with open(mi_dir / "mi.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["layer", "mi_nats", "pairs", "samples", "k", "reduction"])
        for k, res in enumerate(per_layer):
            writer.writerow([k, repr(res.mi_nats), res.pairs_computed, res.samples_used,
                             cfg.k_neighbors, cfg.reduction])
    summary = {
        "target": target,
        "per_layer": [res.mi_nats for res in per_layer],
        "pairs": [res.pairs_computed for res in per_layer],
        "samples": [res.samples_used for res in per_layer],
        "k": cfg.k_neighbors,
        "reduction": cfg.reduction,
        "seed": cfg.seed,
    }
    _write_json(mi_dir / "mi.json", summary)
    return summary


def svg_bar_chart(labels: list[str], values: list[float], title: str, unit: str = "") -> str:
    """Minimal standalone SVG bar chart (one bar per label)."""
    width, height, margin = 640, 360, 60
    plot_w, plot_h = width - 2 * margin, height - 2 * margin
    top = max(max(values), 1e-12)
    bar_w = plot_w / max(len(values), 1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{width / 2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
    ]
    for i, (lab, val) in enumerate(zip(labels, values)):
        h = plot_h * max(val, 0.0) / top
        x = margin + i * bar_w + 0.15 * bar_w
        y = height - margin - h
        parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{0.7 * bar_w:.1f}" height="{h:.1f}" fill="#4878a8"/>')
        parts.append(
            f'<text x="{margin + (i + 0.5) * bar_w:.1f}" y="{height - margin + 16}" '
            f'text-anchor="middle" font-size="11">{lab}</text>'
        )
        parts.append(
            f'<text x="{margin + (i + 0.5) * bar_w:.1f}" y="{y - 4:.1f}" '
            f'text-anchor="middle" font-size="10">{val:.4f}{unit}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def stage_report(run_dir, out_dir) -> dict:
    """Collect train/ and mi/ outputs into summary JSON, CSVs and SVG charts."""
    run_dir = Path(run_dir)
    out_dir = Path(out_dir)
    report_dir = out_dir / "report"
    report_dir.mkdir(parents=True, exist_ok=True)

    results = {}
    for name in REPORT_ORDER:
        path = run_dir / "train" / f"result_{name}.json"
        if path.exists():
            results[name] = json.loads(path.read_text())
    if not results:
        raise DataError(f"no train results under {run_dir}; run the train stage first")

    mi_path = run_dir / "mi" / "mi.json"
    mi_summary = json.loads(mi_path.read_text()) if mi_path.exists() else None

    ordered = [name for name in REPORT_ORDER if name in results]
    with open(report_dir / "accuracy.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature_set", "C", "kernel", "gamma", "decision", "accuracy"])
        for name in ordered:
            res = results[name]
            writer.writerow([name, res["best"]["C"], res["best"]["kernel"],
                             res["best"]["gamma_mode"], res["best"]["decision"],
                             repr(res["test_accuracy"])])
    for name in ordered:
        src = run_dir / "train" / f"confusion_{name}.csv"
        if src.exists():
            (report_dir / f"confusion_{name}.csv").write_bytes(src.read_bytes())

    chart = svg_bar_chart(ordered, [results[n]["test_accuracy"] for n in ordered], "Test accuracy per feature set")
    (report_dir / "accuracy.svg").write_text(chart + "\n")
    if mi_summary:
        mi_chart = svg_bar_chart(
            [f"layer{k}" for k in range(len(mi_summary["per_layer"]))],
            mi_summary["per_layer"],
            "Mutual information per layer (nats)",
        )
        (report_dir / "mi.svg").write_text(mi_chart + "\n")
        src = run_dir / "mi" / "mi.csv"
        if src.exists():
            (report_dir / "mi.csv").write_bytes(src.read_bytes())

    prepare_path = run_dir / "prepare.json"
    features_path = run_dir / "features" / "params.json"
    train_path = run_dir / "train" / "train.json"
    summary = {
        "prepare": json.loads(prepare_path.read_text()) if prepare_path.exists() else None,
        "features": json.loads(features_path.read_text()) if features_path.exists() else None,
        "train": json.loads(train_path.read_text()) if train_path.exists() else None,
        "results": [results[name] for name in ordered],
        "mi": mi_summary,
    }
    _write_json(report_dir / "summary.json", summary)
    return summary


@dataclass
class ExperimentConfig:
    corpus_dir: str
    out_dir: str
    weights: str | None = None
    random_weights_seed: int | None = None
    pooling: str = "mean"
    partition: str | None = None
    test_fraction: float = 0.2
    seed: int = 42
    folds: int = 5
    sets: str = "all"
    mi_k: int = 10
    mi_pairs: int = 2000
    mi_max_samples: int = 2000
    mi_target: str = "mfcc"
    tol: float = 1e-3
    max_passes: int = 10
    min_duration: int = corpus.MIN_DURATION
    max_duration: int = corpus.MAX_DURATION
    pad_to: int = corpus.PAD_LENGTH
    grid: svmkit.GridSpec = field(default_factory=svmkit.GridSpec)

    def rules(self) -> corpus.SegmentRules:
        return corpus.SegmentRules(self.min_duration, self.max_duration, self.pad_to)


def run_experiment(cfg: ExperimentConfig) -> dict:
    """corpus -> features -> 9x grid search -> MI -> report, all under cfg.out_dir."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prepare = stage_prepare(cfg.corpus_dir, out_dir, cfg.rules(), cfg.partition)
    stage_features(
        out_dir / "manifest.csv", out_dir,
        weights=cfg.weights, random_seed=cfg.random_weights_seed, pooling=cfg.pooling,
    )
    stage_train(
        out_dir / "features", out_dir,
        sets=cfg.sets, folds=cfg.folds, seed=cfg.seed, test_fraction=cfg.test_fraction,
        grid=cfg.grid, tol=cfg.tol, max_passes=cfg.max_passes,
    )
    stage_mi(
        out_dir / "features", out_dir,
        miest.MiConfig(cfg.mi_k, cfg.mi_max_samples, cfg.mi_pairs, cfg.seed),
        target=cfg.mi_target,
    )
    summary = stage_report(out_dir, out_dir)
    summary["prepare"] = prepare
    summary["config"] = {k: v for k, v in asdict(cfg).items() if k != "grid"}
    _write_json(out_dir / "report" / "summary.json", summary)
    return summary
