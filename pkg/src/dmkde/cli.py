"""Command-line harness: fit, predict, eval, benchmark, generate.

Reports are canonical JSON (sorted keys, shortest-repr floats) so runs
with identical seeds produce byte-identical files; wall-clock timings
therefore go to stderr, never into report files.  Exit codes: 0 ok,
2 usage, 3 parse error, 4 config error, 5 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from . import metrics
from .dataio import (
    LabeledDataset,
    SyntheticSpec,
    apply_standardizer,
    fit_standardizer,
    generate_synthetic,
    load_csv,
    save_csv,
    stratified_split,
)
from .detector import (
    AffConfig,
    DetectorModel,
    FitConfig,
    fit,
    fit_with_internal_split,
    grid_search,
    predict_batch,
)
from .embedding import default_sigma_grid
from .errors import ConfigError, InvalidArgumentError, ParseError
from .modelio import load_model, save_model
from .oracle import KDE_BANDWIDTH_RATIO, kde_exact_batch, reference_classifier

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_CONFIG = 4
EXIT_RUNTIME = 5

REPORT_SCHEMA = "dmkde-report/1"

_BOOL_WORDS = {"true": True, "1": True, "yes": True, "on": True,
               "false": False, "0": False, "no": False, "off": False}

_CONFIG_KEYS = {
    "sigma": "float",
    "embed_dim": "int",
    "use_aff": "bool",
    "standardize": "bool",
    "seed": "int",
    "anomaly_rate": "float",
    "test_frac": "float",
    "val_frac": "float",
    "aff_num_pairs": "int",
    "aff_epochs": "int",
    "aff_learning_rate": "float",
    "aff_seed": "int",
    "aff_holdout_pairs": "int",
    "aff_max_retries": "int",
    "grid_sigma": "float_list",
    "grid_embed_dim": "int_list",
    "grid_use_aff": "bool_list",
}


@dataclass
class RunReport:
    """One run's results; everything but ``timings_ms`` is deterministic."""

    dataset: str
    config: dict
    split_seed: int
    split_sizes: dict
    anomaly_rate: float
    theta: float
    eval_split: str
    metric_values: dict
    oracle: dict | None = None
    timings_ms: dict = field(default_factory=dict)

    def to_document(self) -> dict:
        doc = {
            "schema": REPORT_SCHEMA,
            "dataset": self.dataset,
            "config": self.config,
            "split_seed": self.split_seed,
            "split_sizes": self.split_sizes,
            "anomaly_rate": self.anomaly_rate,
            "theta": self.theta,
            "eval_split": self.eval_split,
            "metrics": self.metric_values,
        }
        if self.oracle is not None:
            doc["oracle"] = self.oracle
        return doc


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _parse_value(key: str, raw: str):
    kind = _CONFIG_KEYS[key]
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "bool":
            return _parse_bool(raw)
        items = [s.strip() for s in raw.split(",") if s.strip()]
        if kind == "float_list":
            return [float(s) for s in items]
        if kind == "int_list":
            return [int(s) for s in items]
        return [_parse_bool(s) for s in items]
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def _parse_bool(raw: str) -> bool:
    try:
        return _BOOL_WORDS[raw.strip().lower()]
    except KeyError:
        raise ConfigError(f"bad boolean {raw!r}") from None


def read_config(path) -> dict:
    """Flat key-value config: one ``key = value`` per line, # comments."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values: dict = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
        values[key] = _parse_value(key, raw)
    return values


def _settings(args) -> dict:
    """Defaults, overlaid by the config file, overlaid by explicit flags."""
    values = {
        "sigma": None,
        "embed_dim": 1024,
        "use_aff": False,
        "standardize": True,
        "seed": 0,
        "anomaly_rate": None,
        "test_frac": 0.3,
        "val_frac": 0.3,
        "aff_num_pairs": 10_000,
        "aff_epochs": 1000,
        "aff_learning_rate": 1e-3,
        "aff_seed": None,
        "aff_holdout_pairs": 1000,
        "aff_max_retries": 3,
        "grid_sigma": None,
        "grid_embed_dim": None,
        "grid_use_aff": None,
    }
    if getattr(args, "config", None):
        values.update(read_config(args.config))
    for key in ("sigma", "embed_dim", "use_aff", "seed", "anomaly_rate",
                "test_frac", "val_frac"):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if getattr(args, "no_standardize", False):
        values["standardize"] = False
    return values


def _fit_config(settings: dict, sigma: float) -> FitConfig:
    aff_seed = settings["aff_seed"]
    aff = AffConfig(
        num_pairs=settings["aff_num_pairs"],
        epochs=settings["aff_epochs"],
        learning_rate=settings["aff_learning_rate"],
        seed=settings["seed"] if aff_seed is None else aff_seed,
        holdout_pairs=settings["aff_holdout_pairs"],
        max_retries=settings["aff_max_retries"],
    )
    return FitConfig(
        sigma=sigma,
        embed_dim=settings["embed_dim"],
        use_aff=settings["use_aff"],
        aff=aff,
        seed=settings["seed"],
        standardize=settings["standardize"],
    )


def _config_document(cfg: FitConfig) -> dict:
    return {
        "sigma": float(cfg.sigma),
        "embed_dim": int(cfg.embed_dim),
        "use_aff": bool(cfg.use_aff),
        "seed": int(cfg.seed),
        "standardize": bool(cfg.standardize),
        "aff": {
            "num_pairs": cfg.aff.num_pairs,
            "epochs": cfg.aff.epochs,
            "learning_rate": float(cfg.aff.learning_rate),
            "seed": cfg.aff.seed,
            "holdout_pairs": cfg.aff.holdout_pairs,
            "max_retries": cfg.aff.max_retries,
        },
    }


def _median_sigma(features: np.ndarray, standardize: bool, seed: int) -> float:
    """Default bandwidth: median pairwise distance in the fitted space."""
    if standardize:
        shift, scale = fit_standardizer(features)
        features = apply_standardizer(features, shift, scale)
    return default_sigma_grid(features, seed=seed)[2]


def _default_grid(features: np.ndarray, standardize: bool, seed: int) -> list[float]:
    if standardize:
        shift, scale = fit_standardizer(features)
        features = apply_standardizer(features, shift, scale)
    return default_sigma_grid(features, seed=seed)


def _metric_document(y_true, y_pred) -> dict:
    c = metrics.confusion(y_true, y_pred)
    return {
        "f1_weighted": metrics.f1_weighted(y_true, y_pred),
        "f1_anomaly": metrics.f1_anomaly(y_true, y_pred),
        "accuracy": metrics.accuracy(y_true, y_pred),
        "confusion": {"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn},
    }


def _write_predictions(path, indices, densities, labels, truths) -> None:
    lines = ["index,density,label,truth"]
    for i, dens, lab, truth in zip(indices, densities, labels, truths):
        lines.append(f"{int(i)},{repr(float(dens))},{int(lab)},{int(truth)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _emit_timings(timings: dict) -> None:
    for stage, ms in timings.items():
        print(f"[timing] {stage}={ms:.1f}ms", file=sys.stderr)


def cmd_fit(args) -> int:
    settings = _settings(args)
    timings = {}
    t0 = time.perf_counter()
    ds = load_csv(args.data, label_column=args.label_column)
    timings["load"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    split = stratified_split(ds, settings["test_frac"], settings["val_frac"], settings["seed"])
    timings["split"] = (time.perf_counter() - t0) * 1e3

    train = ds.features[split.train]
    val = ds.features[split.val]
    rate = settings["anomaly_rate"]
    if rate is None:
        rate = ds.anomaly_rate
    sigma = settings["sigma"]
    if sigma is None:
        sigma = _median_sigma(train, settings["standardize"], settings["seed"])
    cfg = _fit_config(settings, sigma)

    t0 = time.perf_counter()
    model = fit(train, val, rate, cfg)
    timings["fit"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    val_pred, val_densities = predict_batch(model, val)
    timings["score"] = (time.perf_counter() - t0) * 1e3

    out = Path(args.out)
    save_model(model, out)
    report = RunReport(
        dataset=ds.name,
        config=_config_document(cfg),
        split_seed=settings["seed"],
        split_sizes={"train": len(split.train), "val": len(split.val), "test": len(split.test)},
        anomaly_rate=float(rate),
        theta=float(model.theta),
        eval_split="val",
        metric_values=_metric_document(ds.labels[split.val], val_pred),
        timings_ms=timings,
    )
    report_path = Path(args.report) if args.report else out.with_suffix(".report.json")
    report_path.write_text(canonical_json(report.to_document()), encoding="utf-8")
    pred_path = Path(args.predictions) if args.predictions else out.with_suffix(".predictions.csv")
    _write_predictions(pred_path, split.val, val_densities, val_pred, ds.labels[split.val])
    _emit_timings(timings)
    print(f"fit {ds.name}: theta={model.theta!r} "
          f"val_f1_weighted={report.metric_values['f1_weighted']!r} model={out}")
    return EXIT_OK


def evaluate_model(model: DetectorModel, ds: LabeledDataset, seed: int,
                   test_frac: float = 0.3, val_frac: float = 0.3,
                   with_oracle: bool = False) -> tuple[RunReport, np.ndarray, np.ndarray, np.ndarray]:
    """Score the test split of ``ds`` under ``model``.

    Returns the report plus (test indices, densities, predicted labels);
    shared by ``eval`` and the acceptance suite so both produce identical
    report documents for identical inputs.
    """
    if ds.features.shape[1] != model.input_dim:
        raise InvalidArgumentError(
            f"model expects {model.input_dim} features, dataset has {ds.features.shape[1]}"
        )
    timings = {}
    t0 = time.perf_counter()
    split = stratified_split(ds, test_frac, val_frac, seed)
    test = ds.features[split.test]
    truth = ds.labels[split.test]
    pred, densities = predict_batch(model, test)
    timings["score"] = (time.perf_counter() - t0) * 1e3

    oracle_doc = None
    if with_oracle:
        t0 = time.perf_counter()
        train = ds.features[split.train]
        val = ds.features[split.val]
        oracle_doc = _oracle_comparison(model, train, val, test, pred, densities)
        timings["oracle"] = (time.perf_counter() - t0) * 1e3

    report = RunReport(
        dataset=ds.name,
        config={"sigma": float(model.embedding.sigma),
                "embed_dim": int(model.embedding.embed_dim),
                "use_aff": bool(model.use_aff),
                "standardize": model.shift is not None},
        split_seed=int(seed),
        split_sizes={"train": len(split.train), "val": len(split.val), "test": len(split.test)},
        anomaly_rate=float(model.anomaly_rate),
        theta=float(model.theta),
        eval_split="test",
        metric_values=_metric_document(truth, pred),
        oracle=oracle_doc,
        timings_ms=timings,
    )
    return report, split.test, densities, pred


def _oracle_comparison(model: DetectorModel, train, val, test, pred, densities) -> dict:
    if model.shift is not None:
        train = apply_standardizer(train, model.shift, model.scale)
        val = apply_standardizer(val, model.shift, model.scale)
        test = apply_standardizer(test, model.shift, model.scale)
    kde_sigma = float(model.embedding.sigma * KDE_BANDWIDTH_RATIO)
    ref_labels = reference_classifier(train, val, test, model.anomaly_rate, kde_sigma)
    kde_scores = kde_exact_batch(train, kde_sigma, test)
    rho = spearmanr(densities, kde_scores).statistic
    return {
        "kde_sigma": kde_sigma,
        "label_agreement": float(np.mean(ref_labels == pred)),
        "spearman": float(rho),
    }


def cmd_eval(args) -> int:
    settings = _settings(args)
    model = load_model(args.model)
    ds = load_csv(args.data, label_column=args.label_column)
    report, test_idx, densities, pred = evaluate_model(
        model, ds, settings["seed"], settings["test_frac"], settings["val_frac"],
        with_oracle=args.oracle,
    )
    report_path = Path(args.report) if args.report else Path(args.data).with_suffix(".eval.json")
    report_path.write_text(canonical_json(report.to_document()), encoding="utf-8")
    pred_path = (Path(args.predictions) if args.predictions
                 else report_path.with_suffix(".predictions.csv"))
    _write_predictions(pred_path, test_idx, densities, pred, ds.labels[test_idx])
    _emit_timings(report.timings_ms)
    line = (f"eval {ds.name}: test_f1_weighted={report.metric_values['f1_weighted']!r} "
            f"accuracy={report.metric_values['accuracy']!r}")
    if report.oracle is not None:
        line += (f" oracle_agreement={report.oracle['label_agreement']!r}"
                 f" spearman={report.oracle['spearman']!r}")
    print(line)
    return EXIT_OK


def benchmark_dataset(ds: LabeledDataset, settings: dict) -> tuple[RunReport, dict, tuple]:
    """Grid search on train/val, refit on train+val, evaluate on test.

    Returns the report, the summary-table row, and the per-sample
    prediction columns (test indices, densities, labels, truths).
    """
    seed = settings["seed"]
    split = stratified_split(ds, settings["test_frac"], settings["val_frac"], seed)
    train, val, test = (ds.features[split.train], ds.features[split.val],
                        ds.features[split.test])
    rate = settings["anomaly_rate"]
    if rate is None:
        rate = ds.anomaly_rate

    sigmas = settings["grid_sigma"]
    if sigmas is None:
        sigmas = _default_grid(train, settings["standardize"], seed)
    embed_dims = settings["grid_embed_dim"]
    if embed_dims is None:
        embed_dims = [settings["embed_dim"]]
    use_aff_options = settings["grid_use_aff"]
    if use_aff_options is None:
        use_aff_options = [settings["use_aff"]]
    if not sigmas or not embed_dims or not use_aff_options:
        raise ConfigError("benchmark grids must be nonempty")

    aff = _fit_config(settings, sigmas[0]).aff
    best_cfg, search_report = grid_search(
        train, val, ds.labels[split.val], rate, sigmas, embed_dims,
        use_aff_options, aff=aff, seed=seed, standardize=settings["standardize"],
    )
    combined = np.vstack([train, val])
    model = fit_with_internal_split(combined, rate, best_cfg)
    pred, densities = predict_batch(model, test)
    predictions = (split.test, densities, pred, ds.labels[split.test])
    best_val_f1 = max(row["f1_weighted"] for row in search_report)
    report = RunReport(
        dataset=ds.name,
        config=_config_document(best_cfg),
        split_seed=seed,
        split_sizes={"train": len(split.train), "val": len(split.val), "test": len(split.test)},
        anomaly_rate=float(rate),
        theta=float(model.theta),
        eval_split="test",
        metric_values=_metric_document(ds.labels[split.test], pred),
    )
    summary_row = {
        "dataset": ds.name,
        "status": "ok",
        "sigma": float(best_cfg.sigma),
        "embed_dim": int(best_cfg.embed_dim),
        "use_aff": bool(best_cfg.use_aff),
        "val_f1_weighted": best_val_f1,
        "test_f1_weighted": report.metric_values["f1_weighted"],
        "test_f1_anomaly": report.metric_values["f1_anomaly"],
        "test_accuracy": report.metric_values["accuracy"],
    }
    return report, summary_row, predictions


def cmd_benchmark(args) -> int:
    settings = _settings(args)
    for key in ("grid_sigma", "grid_embed_dim", "grid_use_aff"):
        if settings[key] is not None and not settings[key]:
            raise ConfigError(f"{key} must list at least one value")
    data_dir = Path(args.data)
    paths = sorted(data_dir.glob("*.csv"))
    if not paths:
        raise ConfigError(f"no .csv datasets found in {data_dir}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for path in paths:
        t0 = time.perf_counter()
        try:
            ds = load_csv(path, label_column=args.label_column)
            report, row, predictions = benchmark_dataset(ds, settings)
            report_path = out_dir / f"{ds.name}.report.json"
            report_path.write_text(canonical_json(report.to_document()), encoding="utf-8")
            _write_predictions(out_dir / f"{ds.name}.predictions.csv", *predictions)
        except Exception as exc:  # isolate per-dataset failures
            rows.append({"dataset": path.stem, "status": "failed", "error": str(exc)})
            print(f"[benchmark] {path.stem}: FAILED ({exc})", file=sys.stderr)
            continue
        print(f"[timing] {ds.name}={(time.perf_counter() - t0) * 1e3:.1f}ms", file=sys.stderr)
        rows.append(row)

    summary = {
        "schema": "dmkde-benchmark/1",
        "seed": settings["seed"],
        "datasets": sorted(rows, key=lambda r: r["dataset"]),
    }
    (out_dir / "summary.json").write_text(canonical_json(summary), encoding="utf-8")

    print(f"{'dataset':20s} {'status':7s} {'sigma':>10s} {'D':>6s} {'f1_weighted':>12s}")
    for row in summary["datasets"]:
        if row["status"] == "ok":
            print(f"{row['dataset']:20s} {row['status']:7s} {row['sigma']:>10.4g} "
                  f"{row['embed_dim']:>6d} {row['test_f1_weighted']:>12.4f}")
        else:
            print(f"{row['dataset']:20s} {row['status']:7s} {row.get('error', ''):>30s}")
    return EXIT_OK


def cmd_generate(args) -> int:
    try:
        doc = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read spec {args.spec}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.spec}: invalid JSON: {exc}") from exc
    try:
        spec = SyntheticSpec.from_dict(doc)
        ds = generate_synthetic(spec, args.seed if args.seed is not None else 0)
    except InvalidArgumentError as exc:
        raise ConfigError(str(exc)) from exc
    save_csv(ds, args.out)
    print(f"generate {ds.name}: {len(ds)} samples, "
          f"{int(ds.labels.sum())} anomalies -> {args.out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    ds = load_csv(args.data, label_column=args.label_column)
    if ds.features.shape[1] != model.input_dim:
        raise InvalidArgumentError(
            f"model expects {model.input_dim} features, dataset has {ds.features.shape[1]}"
        )
    pred, densities = predict_batch(model, ds.features)
    _write_predictions(args.out, np.arange(len(ds)), densities, pred, ds.labels)
    print(f"predict {ds.name}: {int(pred.sum())} of {len(ds)} flagged -> {args.out}")
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="run seed (default 0)")
    parser.add_argument("--config", default=None, help="flat key-value config file")
    parser.add_argument("--label-column", default=None,
                        help="label column name (default: last column)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmkde",
        description="Anomaly detection via Fourier-feature density matrices.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("fit", help="split a dataset, fit a detector, write model + report")
    p.add_argument("data", help="labeled CSV dataset")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--report", default=None, help="report path (default: <out>.report.json)")
    p.add_argument("--predictions", default=None,
                   help="per-sample CSV path (default: <out>.predictions.csv)")
    p.add_argument("--sigma", type=float, default=None,
                   help="kernel bandwidth (default: median pairwise distance)")
    p.add_argument("--embed-dim", dest="embed_dim", type=int, default=None)
    p.add_argument("--use-aff", dest="use_aff", action="store_const", const=True, default=None,
                   help="refine the embedding by gradient descent")
    p.add_argument("--anomaly-rate", dest="anomaly_rate", type=float, default=None,
                   help="threshold quantile (default: label mean of the dataset)")
    p.add_argument("--test-frac", dest="test_frac", type=float, default=None)
    p.add_argument("--val-frac", dest="val_frac", type=float, default=None)
    p.add_argument("--no-standardize", dest="no_standardize", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="score the test split of a dataset under a saved model")
    p.add_argument("data", help="labeled CSV dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--report", default=None, help="report path (default: <data>.eval.json)")
    p.add_argument("--predictions", default=None,
                   help="per-sample CSV path (default: <report>.predictions.csv)")
    p.add_argument("--oracle", action="store_true",
                   help="also report agreement with the exact-KDE reference")
    p.add_argument("--test-frac", dest="test_frac", type=float, default=None)
    p.add_argument("--val-frac", dest="val_frac", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("benchmark", help="grid search + refit + test metrics per dataset")
    p.add_argument("data", help="directory of labeled CSV datasets")
    p.add_argument("--out", required=True, help="output directory for reports and summary")
    p.add_argument("--no-standardize", dest="no_standardize", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("generate", help="write a synthetic benchmark dataset")
    p.add_argument("spec", help="JSON synthetic-data spec")
    p.add_argument("--out", required=True, help="CSV path to write")
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("predict", help="score every row of a dataset under a saved model")
    p.add_argument("data", help="labeled CSV dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="per-sample CSV path")
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
