"""Partition engine: turn a manifest plus an extraction choice into a labeled dataset.

A design names the ambiguous categories pulled out into the ``uncertain``
class; every other sample keeps its fallback label. Enumerating all subsets
of the ambiguous categories yields the full ablation grid (8 designs for a
three-way ambiguity taxonomy).
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .manifest import CategoryKind, FineCategory, Manifest, Polarity, Split

CLASS_POSITIVE = 0
CLASS_NEGATIVE = 1
CLASS_UNCERTAIN = 2

BINARY_CLASSES = ("positive", "negative")
TERNARY_CLASSES = ("positive", "negative", "uncertain")


@dataclass(frozen=True)
class DesignConfig:
    """The set of ambiguous categories extracted into the uncertain class."""

    extract: tuple[str, ...] = ()

    @staticmethod
    def from_names(names) -> "DesignConfig":
        out = []
        for name in names:
            if name not in out:
                out.append(name)
        return DesignConfig(extract=tuple(out))

    def to_json_dict(self) -> dict:
        return {"extract": list(self.extract)}


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    features: np.ndarray  # (N, D) float64
    class_index: np.ndarray  # (N,) int64
    class_names: tuple[str, ...]
    provenance: DesignConfig | None

    def __len__(self) -> int:
        return int(self.class_index.shape[0])


def _resolve_extract(taxonomy: tuple[FineCategory, ...], config: DesignConfig) -> tuple[str, ...]:
    """Validate the extraction set and normalize it to taxonomy order."""
    by_name = {c.name: c for c in taxonomy}
    for name in config.extract:
        cat = by_name.get(name)
        if cat is None:
            raise ValidationError(f"extract names unknown category {name!r}")
        if cat.kind is not CategoryKind.AMBIGUOUS:
            raise ValidationError(f"cannot extract clear category {name!r}")
    wanted = set(config.extract)
    return tuple(c.name for c in taxonomy if c.name in wanted)


def apply_design(manifest: Manifest, config: DesignConfig) -> LabeledDataset:
    """Label every sample: extracted categories become uncertain, the rest
    take their per-sample fallback label. No sample is dropped."""
    if manifest.split is not Split.TRAIN:
        raise ValidationError("apply_design requires a train-split manifest")
    extract = _resolve_extract(manifest.taxonomy, config)
    extracted = set(extract)
    class_names = TERNARY_CLASSES if extract else BINARY_CLASSES

    n = len(manifest.samples)
    features = np.empty((n, manifest.feature_dim), dtype=np.float64)
    labels = np.empty(n, dtype=np.int64)
    for i, sample in enumerate(manifest.samples):
        features[i] = sample.features
        if sample.category in extracted:
            labels[i] = CLASS_UNCERTAIN
        elif sample.fallback_label is Polarity.POSITIVE:
            labels[i] = CLASS_POSITIVE
        else:
            labels[i] = CLASS_NEGATIVE
    return LabeledDataset(
        features=features,
        class_index=labels,
        class_names=class_names,
        provenance=DesignConfig(extract=extract),
    )


def enumerate_designs(taxonomy: tuple[FineCategory, ...]) -> tuple[DesignConfig, ...]:
    """All 2^k extraction subsets, size-ascending, lexicographic within size
    with respect to the taxonomy's declared category order."""
    ambiguous = [c.name for c in taxonomy if c.kind is CategoryKind.AMBIGUOUS]
    designs = []
    for size in range(len(ambiguous) + 1):
        for combo in itertools.combinations(ambiguous, size):
            designs.append(DesignConfig(extract=combo))
    return tuple(designs)


def design_name(taxonomy: tuple[FineCategory, ...], config: DesignConfig) -> str:
    """"Original" for the empty extraction, else "Extract A+B" using the
    taxonomy-declared abbreviations in declared order."""
    extract = _resolve_extract(taxonomy, config)
    if not extract:
        return "Original"
    by_name = {c.name: c for c in taxonomy}
    return "Extract " + "+".join(by_name[name].short_label for name in extract)


def table_row_name(taxonomy: tuple[FineCategory, ...], config: DesignConfig) -> str:
    """Report row name: singleton extractions get an " only" suffix."""
    name = design_name(taxonomy, config)
    if len(_resolve_extract(taxonomy, config)) == 1:
        return name + " only"
    return name


def dataset_to_csv(dataset: LabeledDataset) -> str:
    """CSV with columns feature_0..feature_{D-1}, class_index, class_name."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    dim = dataset.features.shape[1]
    writer.writerow([f"feature_{j}" for j in range(dim)] + ["class_index", "class_name"])
    for i in range(len(dataset)):
        idx = int(dataset.class_index[i])
        writer.writerow(
            [repr(float(x)) for x in dataset.features[i]]
            + [idx, dataset.class_names[idx]]
        )
    return buf.getvalue()


def save_dataset_csv(dataset: LabeledDataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dataset_to_csv(dataset))


def load_dataset_csv(path) -> LabeledDataset:
    """Read a dataset CSV back; provenance is not recoverable from CSV."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError("dataset CSV is empty")
        feature_cols = [c for c in header if c.startswith("feature_")]
        dim = len(feature_cols)
        if dim == 0 or header != [f"feature_{j}" for j in range(dim)] + ["class_index", "class_name"]:
            raise ValidationError(f"unexpected dataset CSV header {header!r}")
        rows = []
        names: dict[int, str] = {}
        for line_no, row in enumerate(reader, start=2):
            if len(row) != dim + 2:
                raise ValidationError(f"dataset CSV row {line_no}: wrong column count")
            try:
                feats = [float(x) for x in row[:dim]]
                idx = int(row[dim])
            except ValueError as exc:
                raise ValidationError(f"dataset CSV row {line_no}: {exc}") from exc
            name = row[dim + 1]
            if names.setdefault(idx, name) != name:
                raise ValidationError(
                    f"dataset CSV row {line_no}: class_index {idx} maps to both "
                    f"{names[idx]!r} and {name!r}"
                )
            rows.append((feats, idx))
    if not rows:
        raise ValidationError("dataset CSV has no data rows")
    k = max(names) + 1
    if sorted(names) != list(range(k)):
        raise ValidationError("dataset CSV class indices must cover 0..K-1")
    features = np.array([r[0] for r in rows], dtype=np.float64)
    labels = np.array([r[1] for r in rows], dtype=np.int64)
    return LabeledDataset(
        features=features,
        class_index=labels,
        class_names=tuple(names[i] for i in range(k)),
        provenance=None,
    )


def design_from_json(text: str) -> DesignConfig:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"bad design JSON: {exc.msg}") from exc
    if not isinstance(obj, dict) or set(obj) - {"extract"}:
        raise ValidationError('design JSON must be {"extract": [...]}')
    return DesignConfig.from_names(str(x) for x in obj.get("extract", []))
