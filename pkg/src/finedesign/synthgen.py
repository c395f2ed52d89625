"""Synthetic manifest generator.

Realizes the two-ends-plus-center feature layout: the clear categories sit at
opposite ends of the first coordinate, the ambiguity categories occupy the
band between them, and a low-observability category sits below. Every
category is an axis-aligned Gaussian; counts, geometry, and the RNG seed are
all configurable, so a (config, seed) pair fully determines the output bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .manifest import (
    CategoryKind,
    FineCategory,
    Manifest,
    Polarity,
    Sample,
    Split,
    canonical_float,
    validate_manifest,
    validate_taxonomy,
)

SUPPORTED_RNG = "pcg64"

# Stream indices for the two splits; keeps train/test draws independent of
# each other for a shared seed.
_TRAIN_STREAM = 0
_TEST_STREAM = 1


def mask_taxonomy() -> tuple[FineCategory, ...]:
    """Default five-way mask-wearing taxonomy."""
    return (
        FineCategory("clear_positive", CategoryKind.CLEAR_POSITIVE),
        FineCategory("clear_negative", CategoryKind.CLEAR_NEGATIVE),
        FineCategory(
            "irregular_wearing",
            CategoryKind.AMBIGUOUS,
            default_fallback=Polarity.POSITIVE,
            abbrev="IW",
        ),
        FineCategory("low_quality", CategoryKind.AMBIGUOUS, abbrev="LQ"),
        FineCategory(
            "mask_like_occlusion",
            CategoryKind.AMBIGUOUS,
            default_fallback=Polarity.NEGATIVE,
            abbrev="MLO",
        ),
    )


DEFAULT_COUNTS = {
    "clear_positive": 3384,
    "clear_negative": 3465,
    "irregular_wearing": 587,
    "low_quality": 2319,
    "mask_like_occlusion": 375,
}

# Coordinate 0 is "mask evidence" (negative end = no mask), coordinate 1 is
# "observability". Ambiguous categories sit between or below the clear modes.
DEFAULT_GEOMETRIES = {
    "clear_positive": ((-2.0, 1.5), (0.5, 0.5)),
    "clear_negative": ((2.0, 1.5), (0.5, 0.5)),
    "irregular_wearing": ((1.0, 1.5), (0.4, 0.5)),
    "low_quality": ((0.0, -1.5), (1.0, 0.5)),
    "mask_like_occlusion": ((-1.0, 1.5), (0.4, 0.5)),
}

DEFAULT_TEST_COUNTS = {"clear_positive": 500, "clear_negative": 500}


@dataclass(frozen=True)
class CategoryGeometry:
    category: str
    mean: tuple[float, ...]
    std: tuple[float, ...]


@dataclass(frozen=True)
class SynthConfig:
    taxonomy: tuple[FineCategory, ...] = field(default_factory=mask_taxonomy)
    counts: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_COUNTS))
    geometries: tuple[CategoryGeometry, ...] = field(
        default_factory=lambda: tuple(
            CategoryGeometry(name, mean, std)
            for name, (mean, std) in DEFAULT_GEOMETRIES.items()
        )
    )
    test_counts: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_TEST_COUNTS))
    feature_dim: int = 2
    test_std_multiplier: float = 1.5
    seed: int = 0
    rng: str = SUPPORTED_RNG

    def geometry(self, category: str) -> CategoryGeometry:
        for g in self.geometries:
            if g.category == category:
                return g
        raise ValidationError(f"no geometry declared for category {category!r}")


def validate_synth_config(config: SynthConfig) -> None:
    validate_taxonomy(config.taxonomy)
    if config.rng != SUPPORTED_RNG:
        raise ValidationError(
            f"unsupported rng {config.rng!r}; this build implements {SUPPORTED_RNG!r}"
        )
    if config.feature_dim < 1:
        raise ValidationError("feature_dim must be a positive integer")
    if not 0 <= config.seed < 2**64:
        raise ValidationError("seed must fit in an unsigned 64-bit integer")
    if config.test_std_multiplier < 1.0:
        raise ValidationError("test_std_multiplier must be >= 1")
    names = [c.name for c in config.taxonomy]
    if set(config.counts) != set(names):
        raise ValidationError("counts keys must match the taxonomy categories")
    for name, count in config.counts.items():
        if not isinstance(count, int) or count < 0:
            raise ValidationError(f"count for {name!r} must be a non-negative integer")
    clear = {c.name for c in config.taxonomy if c.kind is not CategoryKind.AMBIGUOUS}
    if set(config.test_counts) != clear:
        raise ValidationError("test_counts keys must be exactly the two clear categories")
    for name, count in config.test_counts.items():
        if not isinstance(count, int) or count < 0:
            raise ValidationError(f"test count for {name!r} must be a non-negative integer")
    geo_names = [g.category for g in config.geometries]
    if len(set(geo_names)) != len(geo_names):
        raise ValidationError("duplicate geometry declarations")
    if set(geo_names) != set(names):
        raise ValidationError("geometries must cover every taxonomy category")
    for g in config.geometries:
        if len(g.mean) != config.feature_dim or len(g.std) != config.feature_dim:
            raise ValidationError(
                f"geometry for {g.category!r} must have {config.feature_dim} coordinates"
            )
        if any(s <= 0 for s in g.std):
            raise ValidationError(f"geometry for {g.category!r} has a non-positive std")


def _fallback_for(cat: FineCategory, index: int) -> Polarity:
    if cat.polarity is not None:
        return cat.polarity
    if cat.default_fallback is not None:
        return cat.default_fallback
    # No declared polarity: alternate by generation index parity.
    return Polarity.POSITIVE if index % 2 == 0 else Polarity.NEGATIVE


def _draw_category(rng, geometry, count, dim, std_multiplier=1.0):
    mean = np.asarray(geometry.mean, dtype=np.float64)
    std = np.asarray(geometry.std, dtype=np.float64) * std_multiplier
    return rng.normal(loc=mean, scale=std, size=(count, dim))


def generate_train(config: SynthConfig) -> Manifest:
    """Generate the training split; per-category counts match the config exactly."""
    validate_synth_config(config)
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=config.seed, spawn_key=(_TRAIN_STREAM,))
    )
    samples = []
    for cat in config.taxonomy:
        count = config.counts[cat.name]
        draws = _draw_category(rng, config.geometry(cat.name), count, config.feature_dim)
        for i in range(count):
            samples.append(
                Sample(
                    id=f"train-{cat.name}-{i:06d}",
                    features=tuple(canonical_float(x) for x in draws[i]),
                    category=cat.name,
                    fallback_label=_fallback_for(cat, i),
                )
            )
    manifest = Manifest(
        taxonomy=config.taxonomy,
        samples=tuple(samples),
        split=Split.TRAIN,
        feature_dim=config.feature_dim,
    )
    validate_manifest(manifest)
    return manifest


def generate_test(config: SynthConfig) -> Manifest:
    """Generate the clear-categories-only test split.

    Draws use the train geometry with std scaled by ``test_std_multiplier``,
    so part of the test mass falls into the central ambiguity band. Sample
    ids live in a namespace disjoint from the train split.
    """
    validate_synth_config(config)
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=config.seed, spawn_key=(_TEST_STREAM,))
    )
    samples = []
    for cat in config.taxonomy:
        if cat.kind is CategoryKind.AMBIGUOUS:
            continue
        count = config.test_counts[cat.name]
        draws = _draw_category(
            rng,
            config.geometry(cat.name),
            count,
            config.feature_dim,
            std_multiplier=config.test_std_multiplier,
        )
        for i in range(count):
            samples.append(
                Sample(
                    id=f"test-{cat.name}-{i:06d}",
                    features=tuple(canonical_float(x) for x in draws[i]),
                    category=cat.name,
                    fallback_label=cat.polarity,
                )
            )
    manifest = Manifest(
        taxonomy=config.taxonomy,
        samples=tuple(samples),
        split=Split.TEST,
        feature_dim=config.feature_dim,
    )
    validate_manifest(manifest)
    return manifest


def synth_config_from_dict(obj: dict) -> SynthConfig:
    """Build a SynthConfig from a parsed JSON object; missing keys take defaults.

    When a custom taxonomy is supplied, counts/geometries/test_counts must be
    supplied too (the built-in defaults only describe the default taxonomy).
    """
    if not isinstance(obj, dict):
        raise ValidationError("synth config must be a JSON object")
    known = {
        "taxonomy",
        "counts",
        "geometries",
        "test_counts",
        "feature_dim",
        "test_std_multiplier",
        "seed",
        "rng",
    }
    unknown = set(obj) - known
    if unknown:
        raise ValidationError(f"unknown synth config keys: {sorted(unknown)}")

    custom_taxonomy = "taxonomy" in obj
    if custom_taxonomy:
        from .manifest import _category_from_dict

        taxonomy = tuple(_category_from_dict(entry) for entry in obj["taxonomy"])
        for key in ("counts", "geometries", "test_counts"):
            if key not in obj:
                raise ValidationError(f"custom taxonomy requires an explicit {key!r}")
    else:
        taxonomy = mask_taxonomy()

    kwargs: dict = {"taxonomy": taxonomy}
    if "counts" in obj:
        kwargs["counts"] = {str(k): v for k, v in obj["counts"].items()}
    if "test_counts" in obj:
        kwargs["test_counts"] = {str(k): v for k, v in obj["test_counts"].items()}
    if "geometries" in obj:
        geometries = []
        for entry in obj["geometries"]:
            try:
                geometries.append(
                    CategoryGeometry(
                        category=str(entry["category"]),
                        mean=tuple(float(x) for x in entry["mean"]),
                        std=tuple(float(x) for x in entry["std"]),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise ValidationError(f"bad geometry entry {entry!r}") from exc
        kwargs["geometries"] = tuple(geometries)
    for key in ("feature_dim", "test_std_multiplier", "seed", "rng"):
        if key in obj:
            kwargs[key] = obj[key]
    config = SynthConfig(**kwargs)
    validate_synth_config(config)
    return config
