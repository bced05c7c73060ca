"""Config-driven experiment runs and artifact writing."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .baselines import HyperGrid, fit_baseline, grid_search
from .data import (CLASS_NAMES, ColumnSchema, FeatureMatrix, ScalerParams, SplitConfig,
                   apply_scaler, fit_scaler, ingest_csv, preprocess, stratified_split)
from .errors import ConfigError, DomainError, MidcourseError
from .evaluation import EvaluationReport, evaluate, format_table, table_json
from .nn import TrainedNet, spec_from_dict, train
from .numeric import RNG_ALGORITHM, RNG_VERSION, derive_seed, pca_fit, pca_transform
from .synthetic import SyntheticSpec, generate_synthetic

NET_KINDS = ("cnn", "lstm")
BASELINE_KINDS = ("svm", "knn", "nb", "rf")
DEFAULT_NAMES = {
    "cnn": "CNN",
    "lstm": "RNN-LSTM",
    "svm": "Optimized SVM",
    "knn": "Optimized K-NN",
    "rf": "Optimized RF",
    "nb": "Optimized NB",
}


class StageError(MidcourseError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {type(cause).__name__}: {cause}")


@dataclass(frozen=True)
class ModelEntry:
    kind: str
    name: str
    params: Optional[dict] = None  # fixed hyperparameters
    grid: Optional[dict] = None  # baselines only; None -> default grid

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "name": self.name}
        if self.params is not None:
            d["params"] = self.params
        if self.grid is not None:
            d["grid"] = self.grid
        return d


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    models: tuple
    synthetic: Optional[SyntheticSpec] = None
    csv_path: Optional[str] = None
    schema_path: Optional[str] = None
    split: SplitConfig = field(default_factory=SplitConfig)
    cv_folds: int = 5
    name: str = "experiment"
    output_dir: str = "runs/experiment"
    base_dir: Path = Path(".")

    @classmethod
    def from_dict(cls, d: dict, base_dir=".") -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        if "seed" not in d:
            raise ConfigError("config must set 'seed'")
        seed = d["seed"]
        if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        ds = d.get("dataset")
        if not isinstance(ds, dict):
            raise ConfigError("config must contain a 'dataset' object")
        synthetic = csv_path = schema_path = None
        if "synthetic" in ds:
            synthetic = SyntheticSpec.from_dict(ds["synthetic"])
        elif "csv" in ds and "schema" in ds:
            csv_path, schema_path = str(ds["csv"]), str(ds["schema"])
        else:
            raise ConfigError("dataset needs either 'synthetic' or both 'csv' and 'schema'")

        sp = dict(d.get("split", {}))
        unknown = set(sp) - {"train_fraction", "stratified"}
        if unknown:
            raise ConfigError(f"unknown split keys {sorted(unknown)}")
        split = SplitConfig(seed=derive_seed(seed, "split"), **sp)

        raw_models = d.get("models")
        if not isinstance(raw_models, list) or not raw_models:
            raise ConfigError("config must list at least one model")
        models = []
        for m in raw_models:
            kind = m.get("kind") if isinstance(m, dict) else None
            if kind not in NET_KINDS + BASELINE_KINDS:
                raise ConfigError(f"unknown model kind {kind!r}")
            if kind in NET_KINDS and "grid" in m:
                raise ConfigError(f"{kind} models take 'params', not 'grid'")
            entry = ModelEntry(kind, m.get("name", DEFAULT_NAMES[kind]), m.get("params"), m.get("grid"))
            if kind in NET_KINDS:
                spec_from_dict(kind, entry.params or {})  # validate early
            elif entry.grid is not None:
                HyperGrid(kind, entry.grid)
            models.append(entry)
        names = [m.name for m in models]
        if len(set(names)) != len(names):
            raise ConfigError("model names must be unique")
        folds = d.get("cv_folds", 5)
        if not isinstance(folds, int) or folds < 2:
            raise ConfigError("cv_folds must be an integer >= 2")
        return cls(seed, tuple(models), synthetic, csv_path, schema_path, split, folds,
                   str(d.get("name", "experiment")), str(d.get("output_dir", "runs/experiment")),
                   Path(base_dir))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            d = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from None
        return cls.from_dict(d, path.parent)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=int(seed), split=replace(self.split, seed=derive_seed(seed, "split")))

    def resolve(self, p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else self.base_dir / q

    def to_dict(self) -> dict:
        """Canonical form used for hashing. ``--out-dir`` overrides never touch it."""
        ds = ({"synthetic": self.synthetic.to_dict()} if self.synthetic is not None
              else {"csv": self.csv_path, "schema": self.schema_path})
        return {
            "name": self.name,
            "seed": self.seed,
            "dataset": ds,
            "split": {"train_fraction": self.split.train_fraction, "stratified": self.split.stratified},
            "cv_folds": self.cv_folds,
            "models": [m.to_dict() for m in self.models],
            "output_dir": self.output_dir,
        }

    def config_hash(self) -> str:
        return sha256_text(canonical_json(self.to_dict()))

    def check_inputs(self):
        if self.synthetic is None:
            for p in (self.csv_path, self.schema_path):
                if not self.resolve(p).is_file():
                    raise ConfigError(f"referenced file does not exist: {self.resolve(p)}")
            ColumnSchema.load(self.resolve(self.schema_path))


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_") or "model"


# --------------------------------------------------------------------------
# PCA export


def pca_table(data: FeatureMatrix) -> np.ndarray:
    if data.n_rows < 2 or data.n_features < 2:
        raise DomainError("PCA export needs at least two rows and two features")
    model = pca_fit(data.rows, 2)
    if model.explained_variance[0] <= 1e-12:
        raise DomainError("data has rank 0 (all rows identical); nothing to project")
    return pca_transform(model, data.rows)


def pca_csv(data: FeatureMatrix) -> str:
    scores = pca_table(data)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["pc1", "pc2", "label"])
    for (a, b), lab in zip(scores, data.labels):
        w.writerow([repr(float(a)), repr(float(b)), CLASS_NAMES[lab]])
    return buf.getvalue()


def export_pca(data: FeatureMatrix, out) -> Path:
    """Write ``pc1,pc2,label`` rows for the first two principal components."""
    text = pca_csv(data)
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    return out


# --------------------------------------------------------------------------
# running


@dataclass
class RunArtifacts:
    out_dir: Path
    full: FeatureMatrix
    train: FeatureMatrix
    test: FeatureMatrix
    scaler: ScalerParams
    reports: list = field(default_factory=list)
    grid_results: dict = field(default_factory=dict)
    models: dict = field(default_factory=dict)
    table: str = ""
    manifest: dict = field(default_factory=dict)
    input_sha256: Optional[str] = None


def load_features(config: ExperimentConfig):
    """Dataset -> preprocessed FeatureMatrix, plus the input file hash when read from disk."""
    if config.synthetic is not None:
        return preprocess(generate_synthetic(config.synthetic)), None
    csv_path = config.resolve(config.csv_path)
    schema = ColumnSchema.load(config.resolve(config.schema_path))
    digest = hashlib.sha256(csv_path.read_bytes()).hexdigest() if csv_path.is_file() else None
    return preprocess(ingest_csv(csv_path, schema)), digest


def prepare(config: ExperimentConfig):
    """Run the fixed preprocessing pipeline; returns (full_scaled, train, test, scaler, digest)."""
    stage = "load"
    try:
        full, digest = load_features(config)
        stage = "split"
        train_raw, test_raw = stratified_split(full, config.split)
        stage = "scale"
        scaler = fit_scaler(train_raw)
        return (apply_scaler(full, scaler), apply_scaler(train_raw, scaler),
                apply_scaler(test_raw, scaler), scaler, digest)
    except MidcourseError as e:
        raise StageError(stage, e) from e


def fit_entry(entry: ModelEntry, index: int, config: ExperimentConfig, train_fm: FeatureMatrix):
    """Train or grid-search one configured model. Returns ``(model, grid_result)``."""
    model_seed = derive_seed(config.seed, "model", index)
    if entry.kind in NET_KINDS:
        params = dict(entry.params or {})
        params.setdefault("seed", model_seed)
        return train(spec_from_dict(entry.kind, params), train_fm), None
    if entry.params is not None:
        return fit_baseline(entry.kind, entry.params, train_fm, model_seed), None
    grid = HyperGrid(entry.kind, entry.grid) if entry.grid is not None else HyperGrid.default(entry.kind)
    result = grid_search(entry.kind, grid, train_fm, config.cv_folds, model_seed)
    best_seed = derive_seed(model_seed, "config", result.best_index)
    return fit_baseline(entry.kind, result.best_config, train_fm, best_seed), result


class _Writer:
    def __init__(self, root: Path):
        self.root = root
        self.files = {}

    def text(self, rel: str, content: str):
        p = self.root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(content, encoding="utf-8")
        self.files[rel] = sha256_text(content)

    def json(self, rel: str, obj):
        self.text(rel, json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _manifest(config: ExperimentConfig, digest, files: dict, status="ok", **extra) -> dict:
    m = {
        "tool": "midcourse",
        "tool_version": __version__,
        "rng": f"{RNG_ALGORITHM}/v{RNG_VERSION}",
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "input_sha256": digest,
        "status": status,
        "artifacts": dict(sorted(files.items())),
    }
    m.update(extra)
    m["manifest_hash"] = sha256_text(canonical_json(m))
    return m


def run_experiment(config: ExperimentConfig, out_dir=None, log=None) -> RunArtifacts:
    """Execute the full pipeline and write every artifact under ``out_dir``."""
    out = Path(out_dir) if out_dir is not None else config.resolve(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    w = _Writer(out)
    digest = None
    stage = "prepare"
    try:
        w.json("config.json", config.to_dict())
        full, train_fm, test_fm, scaler, digest = prepare(config)
        arts = RunArtifacts(out, full, train_fm, test_fm, scaler, input_sha256=digest)
        w.text("data/train.csv", train_fm.to_csv())
        w.text("data/test.csv", test_fm.to_csv())
        w.json("data/scaler.json", {**scaler.to_dict(), "feature_names": list(full.feature_names)})

        for i, entry in enumerate(config.models):
            stage = f"model:{entry.name}"
            if log:
                log(f"fitting {entry.name}")
            model, result = fit_entry(entry, i, config, train_fm)
            report = evaluate(model, test_fm, entry.name, config.name, config.seed)
            arts.reports.append(report)
            arts.models[entry.name] = model
            s = slug(entry.name)
            w.text(f"reports/{s}.json", report.to_json() + "\n")
            if result is not None:
                arts.grid_results[entry.name] = result
                w.text(f"grids/{s}.json", result.to_json() + "\n")
            if isinstance(model, TrainedNet):
                w.text(f"models/{s}.json", model.to_json() + "\n")

        stage = "pca"
        w.text("pca.csv", pca_csv(full))

        stage = "write"
        arts.table = format_table(arts.reports)
        w.text("comparison.txt", arts.table)
        w.json("comparison.json", table_json(arts.reports))
        arts.manifest = _manifest(config, digest, w.files)
        w.json("manifest.json", arts.manifest)
        return arts
    except Exception as e:
        err = e.cause if isinstance(e, StageError) else e
        failed_stage = e.stage if isinstance(e, StageError) else stage
        w.json("manifest.json", _manifest(config, digest, w.files, status="failed",
                                          stage=failed_stage, error_type=type(err).__name__,
                                          error=str(err)))
        if isinstance(e, StageError):
            raise
        if isinstance(e, MidcourseError):
            raise StageError(failed_stage, e) from e
        raise


def run_pca(config: ExperimentConfig, out_dir=None) -> Path:
    out = Path(out_dir) if out_dir is not None else config.resolve(config.output_dir)
    full, *_ = prepare(config)
    try:
        return export_pca(full, out / "pca.csv")
    except MidcourseError as e:
        raise StageError("pca", e) from e


def load_reports(out_dir) -> list:
    out = Path(out_dir)
    return [EvaluationReport.from_json(p.read_text(encoding="utf-8"))
            for p in sorted((out / "reports").glob("*.json"))]
