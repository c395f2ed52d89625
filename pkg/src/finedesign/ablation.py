"""Ablation runner: every extraction design x every seed, aggregated per design.

Each (design, seed) cell applies the design to the train manifest, trains a
fresh model with a per-cell derived seed, and evaluates it on the shared test
manifest. Cells are independent jobs; the report content is identical for 1
or N workers because results are assembled in (design, seed) order after all
cells finish. Diverged cells are excluded from the aggregates and surfaced as
a failure count instead of fabricated values.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .design import DesignConfig, apply_design, design_name, enumerate_designs, table_row_name
from .errors import TrainingDivergedError, ValidationError
from .manifest import Manifest, load_manifest
from .metrics import evaluate, percent
from .trainer import TrainConfig, train

REPORT_FILE_VERSION = 1

REPORT_FORMATS = ("markdown", "csv", "json")


@dataclass(frozen=True)
class AblationConfig:
    train_manifest: str
    test_manifest: str
    train: TrainConfig = TrainConfig()
    seeds: tuple[int, ...] = (0,)
    designs: tuple[DesignConfig, ...] | None = None  # None -> enumerate_designs

    def validate(self) -> None:
        self.train.validate()
        if not self.seeds:
            raise ValidationError("seeds must be a non-empty list")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValidationError("seeds must be distinct")
        for s in self.seeds:
            if not (isinstance(s, int) and 0 <= s < 2**64):
                raise ValidationError(f"bad seed {s!r}")

    @staticmethod
    def from_json_dict(obj: dict) -> "AblationConfig":
        if not isinstance(obj, dict):
            raise ValidationError("ablation config must be a JSON object")
        known = {"train_manifest", "test_manifest", "train", "seeds", "designs"}
        unknown = set(obj) - known
        if unknown:
            raise ValidationError(f"unknown ablation config keys: {sorted(unknown)}")
        for key in ("train_manifest", "test_manifest", "seeds"):
            if key not in obj:
                raise ValidationError(f"ablation config is missing {key!r}")
        designs = None
        if obj.get("designs") is not None:
            designs = tuple(
                DesignConfig.from_names(str(x) for x in entry.get("extract", []))
                for entry in obj["designs"]
            )
        config = AblationConfig(
            train_manifest=str(obj["train_manifest"]),
            test_manifest=str(obj["test_manifest"]),
            train=TrainConfig.from_json_dict(obj.get("train", {})),
            seeds=tuple(obj["seeds"]),
            designs=designs,
        )
        config.validate()
        return config


@dataclass(frozen=True)
class AblationRow:
    design_name: str
    row_name: str
    extract: tuple[str, ...]
    far: tuple[float | None, ...]  # per seed; None for diverged cells
    recall: tuple[float | None, ...]
    precision: tuple[float | None, ...]
    failures: int
    mean_far: float | None
    std_far: float | None
    mean_recall: float | None
    mean_precision: float | None


@dataclass(frozen=True)
class AblationReport:
    config_echo: dict
    seeds: tuple[int, ...]
    rows: tuple[AblationRow, ...]
    toolkit_version: str = __version__


def cell_seed(seed: int, design_index: int) -> int:
    """Stable per-cell seed derived from (run seed, design index)."""
    ss = np.random.SeedSequence(entropy=[int(seed), int(design_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _mean(values):
    values = [v for v in values if v is not None]
    if not values:
        return None
    return sum(values) / len(values)


def _sample_std(values):
    """Sample standard deviation; 0 for a single value, None for none."""
    values = [v for v in values if v is not None]
    if not values:
        return None
    if len(values) == 1:
        return 0.0
    mean = sum(values) / len(values)
    return math.sqrt(sum((v - mean) ** 2 for v in values) / (len(values) - 1))


def _run_cell(train_manifest: Manifest, test_manifest: Manifest,
              design: DesignConfig, design_index: int, seed: int,
              template: TrainConfig) -> dict:
    dataset = apply_design(train_manifest, design)
    config = replace(template, seed=cell_seed(seed, design_index))
    try:
        model = train(dataset, config)
    except TrainingDivergedError as exc:
        return {"diverged": str(exc)}
    report = evaluate(model, test_manifest)
    return {
        "far": report.far,
        "recall": report.positive_recall,
        "precision": report.positive_precision,
    }


_WORKER_MANIFESTS: tuple[Manifest, Manifest] | None = None


def _worker_init(train_path: str, test_path: str) -> None:
    global _WORKER_MANIFESTS
    _WORKER_MANIFESTS = (load_manifest(train_path), load_manifest(test_path))


def _worker_cell(args) -> tuple[int, int, dict]:
    design, design_index, seed_index, seed, template = args
    train_manifest, test_manifest = _WORKER_MANIFESTS
    result = _run_cell(train_manifest, test_manifest, design, design_index, seed, template)
    return design_index, seed_index, result


def run_ablation(config: AblationConfig, workers: int = 1, progress=None) -> AblationReport:
    """Run all (design, seed) cells and aggregate per design.

    ``workers`` only controls parallelism; the report is byte-identical for
    any worker count.
    """
    config.validate()
    train_manifest = load_manifest(config.train_manifest)
    test_manifest = load_manifest(config.test_manifest)
    taxonomy = train_manifest.taxonomy
    designs = config.designs if config.designs is not None else enumerate_designs(taxonomy)
    names = [design_name(taxonomy, d) for d in designs]  # validates each design

    cells: dict[tuple[int, int], dict] = {}
    jobs = [
        (design, di, si, seed, config.train)
        for di, design in enumerate(designs)
        for si, seed in enumerate(config.seeds)
    ]
    if workers <= 1:
        for design, di, si, seed, template in jobs:
            result = _run_cell(train_manifest, test_manifest, design, di, seed, template)
            cells[(di, si)] = result
            if progress is not None:
                progress(_progress_line(names[di], seed, result, len(cells), len(jobs)))
    else:
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_worker_init,
            initargs=(config.train_manifest, config.test_manifest),
        ) as pool:
            for di, si, result in pool.map(_worker_cell, jobs):
                cells[(di, si)] = result
                if progress is not None:
                    progress(_progress_line(names[di], config.seeds[si], result,
                                            len(cells), len(jobs)))

    rows = []
    for di, design in enumerate(designs):
        far, recall, precision = [], [], []
        failures = 0
        for si in range(len(config.seeds)):
            result = cells[(di, si)]
            if "diverged" in result:
                failures += 1
                far.append(None)
                recall.append(None)
                precision.append(None)
            else:
                far.append(result["far"])
                recall.append(result["recall"])
                precision.append(result["precision"])
        rows.append(
            AblationRow(
                design_name=names[di],
                row_name=table_row_name(taxonomy, design),
                extract=design.extract,
                far=tuple(far),
                recall=tuple(recall),
                precision=tuple(precision),
                failures=failures,
                mean_far=_mean(far),
                std_far=_sample_std(far),
                mean_recall=_mean(recall),
                mean_precision=_mean(precision),
            )
        )

    echo = {
        "train_manifest": config.train_manifest,
        "test_manifest": config.test_manifest,
        "train": config.train.to_json_dict(include_seed=False),
        "seeds": list(config.seeds),
        "designs": [d.to_json_dict() for d in designs],
    }
    return AblationReport(config_echo=echo, seeds=config.seeds, rows=tuple(rows))


def _progress_line(name, seed, result, done, total):
    if "diverged" in result:
        outcome = f"DIVERGED ({result['diverged']})"
    else:
        outcome = f"far={percent(result['far'])}"
    return f"[{done}/{total}] {name} seed={seed} {outcome}"


def report_to_json_dict(report: AblationReport) -> dict:
    return {
        "version": REPORT_FILE_VERSION,
        "toolkit_version": report.toolkit_version,
        "config": report.config_echo,
        "aggregation": {
            "protocol": "per-design mean and sample standard deviation over "
                        "per-seed runs; multi-seed averaging is a toolkit "
                        "extension of the single-run measurement",
            "failures": "diverged cells are excluded from aggregates and "
                        "counted per row",
        },
        "rows": [
            {
                "design_name": row.design_name,
                "row_name": row.row_name,
                "extract": list(row.extract),
                "failures": row.failures,
                "mean_far": row.mean_far,
                "std_far": row.std_far,
                "mean_positive_recall": row.mean_recall,
                "mean_positive_precision": row.mean_precision,
                "far": list(row.far),
                "positive_recall": list(row.recall),
                "positive_precision": list(row.precision),
            }
            for row in report.rows
        ],
    }


def report_from_json_dict(obj: dict) -> AblationReport:
    if not isinstance(obj, dict):
        raise ValidationError("ablation report must be a JSON object")
    if obj.get("version") != REPORT_FILE_VERSION:
        raise ValidationError(f"unsupported report version {obj.get('version')!r}")
    rows = []
    for entry in obj.get("rows", []):
        rows.append(
            AblationRow(
                design_name=entry["design_name"],
                row_name=entry["row_name"],
                extract=tuple(entry.get("extract", [])),
                far=tuple(entry.get("far", [])),
                recall=tuple(entry.get("positive_recall", [])),
                precision=tuple(entry.get("positive_precision", [])),
                failures=int(entry.get("failures", 0)),
                mean_far=entry.get("mean_far"),
                std_far=entry.get("std_far"),
                mean_recall=entry.get("mean_positive_recall"),
                mean_precision=entry.get("mean_positive_precision"),
            )
        )
    config = obj.get("config", {})
    return AblationReport(
        config_echo=config,
        seeds=tuple(config.get("seeds", [])),
        rows=tuple(rows),
        toolkit_version=obj.get("toolkit_version", __version__),
    )


def _fmt_cell(value):
    return "n/a" if value is None else percent(value)


def render_report(report: AblationReport, fmt: str) -> str:
    """Render as markdown, csv, or json; output is byte-deterministic."""
    fmt = fmt.lower()
    if fmt not in REPORT_FORMATS:
        raise ValidationError(f"unknown report format {fmt!r} (use {', '.join(REPORT_FORMATS)})")
    if fmt == "json":
        return json.dumps(report_to_json_dict(report), indent=2) + "\n"
    if fmt == "csv":
        lines = ["design,extract,mean_far,std_far,mean_positive_recall,"
                 "mean_positive_precision,failures"]
        for row in report.rows:
            lines.append(
                ",".join(
                    [
                        row.row_name,
                        "+".join(row.extract),
                        "" if row.mean_far is None else repr(row.mean_far),
                        "" if row.std_far is None else repr(row.std_far),
                        "" if row.mean_recall is None else repr(row.mean_recall),
                        "" if row.mean_precision is None else repr(row.mean_precision),
                        str(row.failures),
                    ]
                )
            )
        return "\n".join(lines) + "\n"
    # markdown
    lines = [
        "| Dataset Design | FAR | FAR std | Positive recall | Positive precision |",
        "| --- | --- | --- | --- | --- |",
    ]
    for row in report.rows:
        lines.append(
            "| "
            + " | ".join(
                [
                    row.row_name,
                    _fmt_cell(row.mean_far),
                    _fmt_cell(row.std_far),
                    _fmt_cell(row.mean_recall),
                    _fmt_cell(row.mean_precision),
                ]
            )
            + " |"
        )
    total_failures = sum(row.failures for row in report.rows)
    if total_failures:
        lines.append("")
        lines.append(f"{total_failures} run(s) diverged and were excluded from the aggregates.")
    return "\n".join(lines) + "\n"
