"""Sample/taxonomy data model and JSONL manifest round-trip.

A manifest file is JSON Lines. The first line is a header object::

    {"version": 1, "split": "train|test", "feature_dim": D,
     "taxonomy": [{"name": ..., "kind": ..., "default_fallback": ...}, ...]}

Each following line is one sample::

    {"id": ..., "features": [...], "category": ..., "fallback_label": ...,
     "asset_ref": optional}

Taxonomy entries may carry an optional ``"abbrev"`` key (the short label used
in reports, e.g. ``IW``); when absent it is derived from the category name's
initials. Feature values are stored at 9 significant digits; manifests hold
the quantized values, which makes save/load an exact identity and files
byte-deterministic.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

from .errors import ManifestParseError, ValidationError


class Polarity(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


class CategoryKind(str, enum.Enum):
    CLEAR_POSITIVE = "clear_positive"
    CLEAR_NEGATIVE = "clear_negative"
    AMBIGUOUS = "ambiguous"


class Split(str, enum.Enum):
    TRAIN = "train"
    TEST = "test"


def canonical_float(x: float) -> float:
    """Quantize ``x`` to the manifest storage precision (9 significant digits)."""
    return float(format(float(x), ".9g"))


@dataclass(frozen=True)
class FineCategory:
    """One fine-grained category of the labeling taxonomy."""

    name: str
    kind: CategoryKind
    default_fallback: Polarity | None = None
    abbrev: str | None = None

    @property
    def polarity(self) -> Polarity | None:
        """Fixed label of a clear category; None for ambiguous ones."""
        if self.kind is CategoryKind.CLEAR_POSITIVE:
            return Polarity.POSITIVE
        if self.kind is CategoryKind.CLEAR_NEGATIVE:
            return Polarity.NEGATIVE
        return None

    @property
    def short_label(self) -> str:
        if self.abbrev:
            return self.abbrev
        return "".join(part[0] for part in self.name.split("_") if part).upper()


@dataclass(frozen=True)
class Sample:
    id: str
    features: tuple[float, ...]
    category: str
    fallback_label: Polarity
    asset_ref: str | None = None


@dataclass(frozen=True)
class Manifest:
    taxonomy: tuple[FineCategory, ...]
    samples: tuple[Sample, ...]
    split: Split
    feature_dim: int

    def category(self, name: str) -> FineCategory:
        for cat in self.taxonomy:
            if cat.name == name:
                return cat
        raise ValidationError(f"unknown category {name!r}")

    def ambiguous_categories(self) -> tuple[FineCategory, ...]:
        return tuple(c for c in self.taxonomy if c.kind is CategoryKind.AMBIGUOUS)


def validate_taxonomy(taxonomy: tuple[FineCategory, ...]) -> None:
    names = [c.name for c in taxonomy]
    if len(set(names)) != len(names):
        raise ValidationError("taxonomy category names must be unique")
    n_pos = sum(c.kind is CategoryKind.CLEAR_POSITIVE for c in taxonomy)
    n_neg = sum(c.kind is CategoryKind.CLEAR_NEGATIVE for c in taxonomy)
    if n_pos != 1 or n_neg != 1:
        raise ValidationError(
            "taxonomy must declare exactly one clear_positive and one "
            f"clear_negative category (got {n_pos} and {n_neg})"
        )
    for cat in taxonomy:
        if cat.kind is not CategoryKind.AMBIGUOUS and cat.default_fallback is not None:
            if cat.default_fallback is not cat.polarity:
                raise ValidationError(
                    f"clear category {cat.name!r} declares a default_fallback "
                    "that contradicts its own polarity"
                )


def validate_manifest(manifest: Manifest) -> None:
    """Raise ValidationError on the first contract violation found."""
    validate_taxonomy(manifest.taxonomy)
    if manifest.feature_dim < 1:
        raise ValidationError("feature_dim must be a positive integer")
    cats = {c.name: c for c in manifest.taxonomy}
    seen_ids: set[str] = set()
    for sample in manifest.samples:
        if sample.category not in cats:
            raise ValidationError(
                f"sample {sample.id!r}: unknown category {sample.category!r}"
            )
        if sample.id in seen_ids:
            raise ValidationError(f"duplicate sample id {sample.id!r}")
        seen_ids.add(sample.id)
        if len(sample.features) != manifest.feature_dim:
            raise ValidationError(
                f"sample {sample.id!r}: expected {manifest.feature_dim} features, "
                f"got {len(sample.features)}"
            )
        for x in sample.features:
            if not math.isfinite(x):
                raise ValidationError(f"sample {sample.id!r}: non-finite feature value")
            if x != canonical_float(x):
                raise ValidationError(
                    f"sample {sample.id!r}: feature value {x!r} is not stored at "
                    "9 significant digits (pass it through canonical_float)"
                )
        polarity = cats[sample.category].polarity
        if polarity is not None and sample.fallback_label is not polarity:
            raise ValidationError(
                f"sample {sample.id!r}: clear category {sample.category!r} requires "
                f"fallback_label {polarity.value!r}"
            )


def summarize(manifest: Manifest) -> dict[str, int]:
    """Per-category sample counts, in taxonomy order (zero counts included)."""
    counts = {c.name: 0 for c in manifest.taxonomy}
    for sample in manifest.samples:
        counts[sample.category] += 1
    return counts


def _category_to_dict(cat: FineCategory) -> dict:
    out = {
        "name": cat.name,
        "kind": cat.kind.value,
        "default_fallback": cat.default_fallback.value if cat.default_fallback else None,
    }
    if cat.abbrev is not None:
        out["abbrev"] = cat.abbrev
    return out


def _category_from_dict(obj: dict) -> FineCategory:
    try:
        kind = CategoryKind(obj["kind"])
    except (KeyError, ValueError):
        raise ValidationError(f"taxonomy entry {obj.get('name')!r}: bad kind {obj.get('kind')!r}")
    fallback = obj.get("default_fallback")
    return FineCategory(
        name=str(obj["name"]),
        kind=kind,
        default_fallback=Polarity(fallback) if fallback is not None else None,
        abbrev=obj.get("abbrev"),
    )


def _sample_to_dict(sample: Sample) -> dict:
    out = {
        "id": sample.id,
        "features": list(sample.features),
        "category": sample.category,
        "fallback_label": sample.fallback_label.value,
    }
    if sample.asset_ref is not None:
        out["asset_ref"] = sample.asset_ref
    return out


def load_manifest(path) -> Manifest:
    """Read and validate a JSONL manifest.

    Raises ManifestParseError for malformed lines (with the line number) and
    ValidationError for contract violations (naming the offending sample id).
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ManifestParseError(1, "empty file, expected a header object")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ManifestParseError(1, f"malformed header: {exc.msg}") from exc
    if not isinstance(header, dict):
        raise ManifestParseError(1, "header must be a JSON object")
    if header.get("version") != 1:
        raise ValidationError(f"unsupported manifest version {header.get('version')!r}")
    try:
        split = Split(header["split"])
    except (KeyError, ValueError):
        raise ValidationError(f"bad split {header.get('split')!r}")
    feature_dim = header.get("feature_dim")
    if not isinstance(feature_dim, int) or feature_dim < 1:
        raise ValidationError(f"bad feature_dim {feature_dim!r}")
    taxonomy_raw = header.get("taxonomy")
    if not isinstance(taxonomy_raw, list):
        raise ValidationError("header is missing the taxonomy list")
    taxonomy = tuple(_category_from_dict(entry) for entry in taxonomy_raw)
    cats = {c.name: c for c in taxonomy}

    samples = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestParseError(line_no, f"malformed sample: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise ManifestParseError(line_no, "sample line must be a JSON object")
        try:
            sid = str(obj["id"])
            features = obj["features"]
            category = str(obj["category"])
        except KeyError as exc:
            raise ManifestParseError(line_no, f"sample is missing key {exc.args[0]!r}") from exc
        if not isinstance(features, list):
            raise ManifestParseError(line_no, "features must be a list")
        fallback_raw = obj.get("fallback_label")
        if fallback_raw is not None:
            try:
                fallback = Polarity(fallback_raw)
            except ValueError:
                raise ValidationError(f"sample {sid!r}: bad fallback_label {fallback_raw!r}")
        else:
            # Clear samples and ambiguous categories with a declared default
            # may omit the per-sample fallback.
            cat = cats.get(category)
            if cat is None:
                raise ValidationError(f"sample {sid!r}: unknown category {category!r}")
            fallback = cat.polarity or cat.default_fallback
            if fallback is None:
                raise ValidationError(f"sample {sid!r}: missing fallback_label")
        samples.append(
            Sample(
                id=sid,
                features=tuple(float(x) for x in features),
                category=category,
                fallback_label=fallback,
                asset_ref=obj.get("asset_ref"),
            )
        )

    manifest = Manifest(
        taxonomy=taxonomy,
        samples=tuple(samples),
        split=split,
        feature_dim=feature_dim,
    )
    validate_manifest(manifest)
    return manifest


def manifest_to_text(manifest: Manifest) -> str:
    """Serialize to the canonical JSONL text (fixed key order, compact)."""
    validate_manifest(manifest)
    header = {
        "version": 1,
        "split": manifest.split.value,
        "feature_dim": manifest.feature_dim,
        "taxonomy": [_category_to_dict(c) for c in manifest.taxonomy],
    }
    lines = [json.dumps(header, separators=(",", ":"))]
    for sample in manifest.samples:
        lines.append(json.dumps(_sample_to_dict(sample), separators=(",", ":")))
    return "\n".join(lines) + "\n"


def save_manifest(manifest: Manifest, path) -> None:
    """Write the manifest; validates first so nothing is written on error."""
    text = manifest_to_text(manifest)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
