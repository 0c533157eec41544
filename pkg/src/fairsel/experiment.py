"""Experiment specs, memoized chromosome evaluation, and result files."""

from __future__ import annotations

import csv
import io
import json
import logging
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator

import numpy as np
import yaml

from fairsel import resources
from fairsel.data import EncodedDataset, SplitPair, load_dataset, load_manifest, mask_view, split
from fairsel.errors import ConfigError, DataError, FairselError
from fairsel.evolve import EvolveConfig, bits_to_int, bits_to_str, str_to_bits
from fairsel.metrics import EvaluationRecord, evaluate_all
from fairsel.models import TrainConfig, TrainingError, train
from fairsel.nsga2 import run_nsga2
from fairsel.soga import run_soga

log = logging.getLogger(__name__)

MODES = ("soga", "nsga2", "baseline")
FRONT_HEADER = ["mask", "n_selected", "f1", "spd_abs", "spd_signed", "accuracy"]


class RunFailure(FairselError):
    exit_code = 3


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Re-raise any error prefixed with the pipeline stage it came from."""
    try:
        yield
    except FairselError as exc:
        raise type(exc)(f"{name}: {exc}") from exc
    except Exception as exc:
        raise RunFailure(f"{name}: {type(exc).__name__}: {exc}") from exc


@dataclass(frozen=True)
class ExperimentSpec:
    dataset: Path
    mode: str = "nsga2"
    model: TrainConfig = field(default_factory=TrainConfig)
    evolve: EvolveConfig = field(default_factory=EvolveConfig)
    split_seed: int = 0
    train_fraction: float = 0.7
    output: Path = Path("results")
    cache: bool = True
    name: str = "experiment"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("split.train_fraction must lie in (0, 1)")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dataset": str(self.dataset),
            "mode": self.mode,
            "model": self.model.to_dict(),
            "evolve": self.evolve.to_dict(),
            "split": {"seed": self.split_seed, "train_fraction": self.train_fraction},
            "output": str(self.output),
            "cache": self.cache,
        }


_SPEC_KEYS = {"name", "dataset", "mode", "model", "evolve", "split", "output", "cache"}


def _resolve(base: Path, value: str) -> Path:
    if str(value).startswith("fairsel:"):
        return resources.path(str(value)[len("fairsel:"):])
    p = Path(value)
    return p if p.is_absolute() else (base / p).resolve()


def spec_from_dict(doc: dict, base: Path = Path("."), name: str = "experiment") -> ExperimentSpec:
    """Build a spec from a mapping; omitted fields take their documented defaults.

    ``evolve.force_protected`` defaults to true in soga mode and false otherwise.
    """
    if not isinstance(doc, dict):
        raise ConfigError("spec must be a mapping")
    unknown = set(doc) - _SPEC_KEYS
    if unknown:
        raise ConfigError(f"unknown spec keys: {sorted(unknown)}")
    if "dataset" not in doc:
        raise ConfigError("spec needs a 'dataset' manifest path")
    mode = doc.get("mode", "nsga2")
    try:
        model = TrainConfig(**(doc.get("model") or {}))
        evolve_doc = dict(doc.get("evolve") or {})
        evolve_doc.setdefault("force_protected", mode == "soga")
        evolve = EvolveConfig(**evolve_doc)
        split_doc = doc.get("split") or {}
        unknown = set(split_doc) - {"seed", "train_fraction"}
        if unknown:
            raise ConfigError(f"unknown split keys: {sorted(unknown)}")
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    spec = ExperimentSpec(
        dataset=_resolve(base, doc["dataset"]),
        mode=mode,
        model=model,
        evolve=evolve,
        split_seed=int(split_doc.get("seed", 0)),
        train_fraction=float(split_doc.get("train_fraction", 0.7)),
        output=_resolve(base, doc.get("output", f"results/{name}")),
        cache=bool(doc.get("cache", True)),
        name=str(doc.get("name", name)),
    )
    if not spec.dataset.is_file():
        raise ConfigError(f"dataset manifest {spec.dataset} does not exist")
    return spec


def load_spec(path: str | Path) -> ExperimentSpec:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read spec {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed spec {path}: {exc}") from exc
    return spec_from_dict(doc, base=path.parent.resolve(), name=path.stem)


def with_overrides(
    spec: ExperimentSpec,
    seed: int | None = None,
    generations: int | None = None,
    pop_size: int | None = None,
    out: str | Path | None = None,
    mode: str | None = None,
) -> ExperimentSpec:
    """Apply CLI overrides; ``seed`` reseeds the optimizer and the model, not the split."""
    evolve, model = spec.evolve, spec.model
    try:
        if seed is not None:
            evolve = replace(evolve, seed=seed)
            model = replace(model, seed=seed)
        if generations is not None:
            evolve = replace(evolve, generations=generations)
        if pop_size is not None:
            evolve = replace(evolve, population_size=pop_size)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return replace(
        spec,
        evolve=evolve,
        model=model,
        output=Path(out).resolve() if out is not None else spec.output,
        mode=mode or spec.mode,
    )


class EvalCache:
    """Thread-safe memo of mask -> record with hit/miss counters.

    Concurrent misses on one key may both train; training is deterministic
    so the first stored record is kept and both callers see equal values.
    """

    def __init__(self):
        self._records: dict[str, EvaluationRecord] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key: str) -> EvaluationRecord | None:
        with self._lock:
            rec = self._records.get(key)
            if rec is None:
                self.misses += 1
            else:
                self.hits += 1
            return rec

    def put(self, key: str, record: EvaluationRecord) -> EvaluationRecord:
        with self._lock:
            return self._records.setdefault(key, record)

    def __len__(self) -> int:
        return len(self._records)

    def stats(self) -> dict:
        return {"hits": self.hits, "misses": self.misses, "size": len(self)}


class Evaluator:
    """Callable mapping a feature mask to its holdout :class:`EvaluationRecord`."""

    def __init__(self, data: SplitPair, train_config: TrainConfig, cache: EvalCache | None = None):
        self.data = data
        self.train_config = train_config
        self.cache = cache
        self.trainings = 0

    @property
    def n_features(self) -> int:
        return self.data.train.n_features

    @property
    def protected_index(self) -> int | None:
        return self.data.train.protected_index

    def __call__(self, mask) -> EvaluationRecord:
        bits = np.asarray(mask, dtype=bool)
        key = bits_to_str(bits)
        if self.cache is not None:
            rec = self.cache.get(key)
            if rec is not None:
                return rec
        rec = self._compute(bits, key)
        return self.cache.put(key, rec) if self.cache is not None else rec

    def _compute(self, bits: np.ndarray, key: str) -> EvaluationRecord:
        self.trainings += 1
        start = time.perf_counter()
        try:
            model = train(self.train_config, mask_view(self.data.train, bits))
            rec = evaluate_all(model, mask_view(self.data.holdout, bits))
        except (TrainingError, ValueError) as exc:
            log.warning("mask %s failed to train: %s", key, exc)
            return sentinel_record(key)
        return replace(rec, train_time=time.perf_counter() - start)


def sentinel_record(mask: str) -> EvaluationRecord:
    return EvaluationRecord(
        accuracy=0.0,
        f1=0.0,
        spd_signed=1.0,
        spd_abs=1.0,
        mask=mask,
        n_selected=mask.count("1"),
        failed=True,
    )


def evaluate_chromosome(mask, evaluator: Evaluator) -> EvaluationRecord:
    return evaluator(mask)


@dataclass
class FrontReport:
    records: list[EvaluationRecord]
    metadata: dict = field(default_factory=dict)


def front_report(records, metadata: dict | None = None) -> FrontReport:
    """Sort by ``spd_abs`` ascending, then ``f1`` ascending, then mask value; drop sentinels."""
    kept = [r for r in records if not r.failed]
    kept.sort(key=lambda r: (r.spd_abs, r.f1, bits_to_int(str_to_bits(r.mask))))
    return FrontReport(records=kept, metadata=metadata or {})


def _fmt(x: float) -> str:
    return format(x, ".17g")


def record_rows(records) -> list[list[str]]:
    return [
        [r.mask, str(r.n_selected), _fmt(r.f1), _fmt(r.spd_abs), _fmt(r.spd_signed), _fmt(r.accuracy)]
        for r in records
    ]


def write_csv(path: Path, header: list[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue())


def export_front_csv(report: FrontReport, path: str | Path) -> Path:
    if not report.records:
        raise ValueError("refusing to export an empty front")
    write_csv(Path(path), FRONT_HEADER, record_rows(report.records))
    return Path(path)


def read_front_csv(path: str | Path) -> list[EvaluationRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != FRONT_HEADER:
            raise DataError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            EvaluationRecord(
                accuracy=float(row["accuracy"]),
                f1=float(row["f1"]),
                spd_signed=float(row["spd_signed"]),
                spd_abs=float(row["spd_abs"]),
                mask=row["mask"],
                n_selected=int(row["n_selected"]),
            )
            for row in reader
        ]


def prepare_data(spec: ExperimentSpec) -> tuple[EncodedDataset, SplitPair]:
    with stage("load-data"):
        dataset = load_dataset(load_manifest(spec.dataset))
    with stage("split"):
        pair = split(dataset, spec.split_seed, spec.train_fraction)
    return dataset, pair


def all_ones(n: int) -> np.ndarray:
    return np.ones(n, dtype=bool)


def run_baseline(spec: ExperimentSpec, evaluator: Evaluator | None = None) -> EvaluationRecord:
    """Evaluate the all-features mask."""
    if evaluator is None:
        _, pair = prepare_data(spec)
        evaluator = Evaluator(pair, spec.model, EvalCache() if spec.cache else None)
    return evaluator(all_ones(evaluator.n_features))


@dataclass
class RunResult:
    spec: ExperimentSpec
    baseline: EvaluationRecord
    front: FrontReport | None = None
    best: EvaluationRecord | None = None
    history: list[dict] = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def execute(spec: ExperimentSpec, cache: EvalCache | None = None) -> RunResult:
    """Run ``spec`` in memory.  ``cache`` may be shared by runs on the same data and model."""
    started = time.perf_counter()
    dataset, pair = prepare_data(spec)
    if cache is None and spec.cache:
        cache = EvalCache()
    evaluator = Evaluator(pair, spec.model, cache if spec.cache else None)
    with stage("baseline"):
        baseline = run_baseline(spec, evaluator)

    result = RunResult(spec=spec, baseline=baseline)
    if spec.mode == "soga":
        if spec.evolve.force_protected and evaluator.protected_index is None:
            raise ConfigError("force_protected set but the dataset has no protected feature")
        with stage("soga"):
            res = run_soga(spec.evolve, evaluator, evaluator.n_features, evaluator.protected_index)
        result.best = res.best.record
        result.history = res.history
        calls = res.evaluations_used
    elif spec.mode == "nsga2":
        with stage("nsga2"):
            res = run_nsga2(spec.evolve, evaluator, evaluator.n_features, evaluator.protected_index)
        result.front = front_report([ind.record for ind in res.front])
        result.history = res.history
        calls = res.evaluations
    else:
        calls = 1

    result.meta = {
        "name": spec.name,
        "dataset": dataset.meta.get("dataset"),
        "rows": dataset.n_rows,
        "dropped_rows": dataset.meta.get("dropped_rows", 0),
        "n_features": dataset.n_features,
        "train_rows": pair.train.n_rows,
        "holdout_rows": pair.holdout.n_rows,
        "seed": spec.evolve.seed,
        "split_seed": spec.split_seed,
        "evaluations": calls,
        "trainings": evaluator.trainings,
        "cache": cache.stats() if cache is not None and spec.cache else None,
        "wall_time_s": time.perf_counter() - started,
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    return result


def write_outputs(result: RunResult, out: Path | None = None) -> Path:
    out = Path(out or result.spec.output)
    with stage("write"):
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.resolved").write_text(
            yaml.safe_dump(result.spec.to_dict(), sort_keys=True, default_flow_style=False)
        )
        write_csv(out / "baseline.csv", FRONT_HEADER, record_rows([result.baseline]))
        if result.best is not None:
            write_csv(out / "best.csv", FRONT_HEADER, record_rows([result.best]))
        if result.front is not None:
            if result.front.records:
                export_front_csv(result.front, out / "front.csv")
            else:
                write_csv(out / "front.csv", FRONT_HEADER, [])
        if result.history:
            header = list(result.history[0])
            rows = [[_fmt(v) if isinstance(v, float) else str(v) for v in row.values()] for row in result.history]
            write_csv(out / "history.csv", header, rows)
        (out / "meta.json").write_text(json.dumps(result.meta, indent=2, sort_keys=True) + "\n")
    return out


def run_experiment(spec: ExperimentSpec, cache: EvalCache | None = None) -> RunResult:
    """Run ``spec`` and persist its outputs under ``spec.output``."""
    result = execute(spec, cache)
    write_outputs(result)
    log.info(
        "%s: %s finished in %.1fs (%d trainings)",
        spec.name,
        spec.mode,
        result.meta["wall_time_s"],
        result.meta["trainings"],
    )
    return result


def spec_files(directory: str | Path) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"{directory} is not a directory")
    files = sorted(p for p in directory.iterdir() if p.suffix in (".yaml", ".yml"))
    if not files:
        raise ConfigError(f"no spec files in {directory}")
    return files


def run_all(directory: str | Path, out: str | Path | None = None, **overrides) -> list[RunResult]:
    """Run every spec in ``directory``; with ``out`` each run lands in ``out/<spec name>``.

    Runs sharing dataset, split and model settings share one evaluation cache.
    """
    caches: dict[str, EvalCache] = {}
    results = []
    for path in spec_files(directory):
        spec = load_spec(path)
        target = Path(out) / spec.name if out is not None else None
        spec = with_overrides(spec, out=target, **overrides)
        key = json.dumps(
            [str(spec.dataset), spec.split_seed, spec.train_fraction, spec.model.to_dict()], sort_keys=True
        )
        results.append(run_experiment(spec, caches.setdefault(key, EvalCache())))
    return results


def is_staircase(records) -> bool:
    """Ascending ``spd_abs`` must come with strictly ascending ``f1`` for distinct points."""
    pts = sorted({(r.spd_abs, r.f1) for r in records})
    return all(b[0] > a[0] and b[1] > a[1] for a, b in zip(pts, pts[1:]))


def front_hypervolume(records) -> float:
    from fairsel.nsga2 import hypervolume_2d

    return hypervolume_2d([(1.0 - r.f1, r.spd_abs) for r in records])

