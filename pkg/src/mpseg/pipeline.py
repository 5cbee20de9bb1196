"""End-to-end orchestration: classify, segment with the group's ensemble,
fuse, decode, and (for LCA) refine; plus the batch driver.

Per-image work is a pure function of (config, seed, dataset), so the batch
driver can fan out over a thread pool and still produce byte-identical
masks and evaluation reports for any worker count.  Stage timings recorded
in the run manifest are the only non-deterministic output.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .backends import (
    ConstantSegmentation,
    ConstantVesselClassifier,
    CorruptionConfig,
    FileSegmentationBackend,
    OracleRefiner,
    OracleSegmentation,
    OracleVesselClassifier,
)
from .dataset import DatasetIndex, ImageRecord, build_label_mask, write_mask_png
from .errors import BadConfig, EmptyEnsemble, IoFailure, MpsegError, PipelineStageError
from .fusion import decode, fuse_mean, fuse_vote
from .metrics import EvalReport, dataset_mean_f1
from .refinement import RefinementConfig, refine_lca
from .taxonomy import VesselGroup

logger = logging.getLogger(__name__)

_MASK64 = 2**64 - 1
FUSION_MODES = ("mean", "vote")


@dataclass(frozen=True)
class BackendSpec:
    kind: str
    options: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PipelineConfig:
    classifier: BackendSpec
    rca_ensemble: tuple = ()
    lca_ensemble: tuple = ()
    threshold: float = 0.5
    fusion_mode: str = "mean"
    refinement_enabled: bool = False
    refiners: tuple = ()
    refinement: RefinementConfig = RefinementConfig()
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise BadConfig("threshold must lie in [0, 1]")
        if self.fusion_mode not in FUSION_MODES:
            raise BadConfig(f"fusion_mode must be one of {FUSION_MODES}")
        if self.refinement_enabled and not self.refiners:
            raise BadConfig("refinement_enabled requires at least one refiner")


_CLASSIFIER_KINDS = {
    "oracle": {"flip_prob", "seed"},
    "constant": {"group", "confidence"},
}
_SEGMENTATION_KINDS = {
    "oracle": {
        "label_permute_prob",
        "erosion_radius",
        "drop_class_prob",
        "prob_noise_sigma",
        "seed",
    },
    "constant": {"value"},
    "file": {"dir"},
}
_REFINER_KINDS = {
    "oracle": {"error_prob", "seed"},
}


def _parse_backend_spec(raw, stage: str, kinds: dict) -> BackendSpec:
    if not isinstance(raw, dict):
        raise BadConfig(f"{stage}: backend spec must be a table")
    if "kind" not in raw:
        raise BadConfig(f"{stage}: backend spec needs a 'kind' key")
    kind = raw["kind"]
    if kind not in kinds:
        raise BadConfig(f"{stage}: unknown backend kind {kind!r} (allowed: {sorted(kinds)})")
    options = {k: v for k, v in raw.items() if k != "kind"}
    unknown = set(options) - kinds[kind]
    if unknown:
        raise BadConfig(f"{stage}: unknown keys {sorted(unknown)} for kind {kind!r}")
    return BackendSpec(kind, options)


_TOP_KEYS = {
    "classifier",
    "rca_ensemble",
    "lca_ensemble",
    "threshold",
    "fusion_mode",
    "refinement_enabled",
    "refiners",
    "refinement",
    "seed",
}
_REFINEMENT_KEYS = {"mode", "min_region_pixels", "conflict_policy"}


def config_from_dict(doc: dict) -> PipelineConfig:
    """Validate a parsed config tree; unknown keys anywhere are errors."""
    if not isinstance(doc, dict):
        raise BadConfig("pipeline config root must be a table")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise BadConfig(f"unknown config keys {sorted(unknown)}")
    if "classifier" not in doc:
        raise BadConfig("config needs a [classifier] table")
    classifier = _parse_backend_spec(doc["classifier"], "classifier", _CLASSIFIER_KINDS)

    def ensemble(key):
        raw = doc.get(key, [])
        if not isinstance(raw, list):
            raise BadConfig(f"{key} must be an array of backend tables")
        return tuple(
            _parse_backend_spec(entry, f"{key}[{i}]", _SEGMENTATION_KINDS)
            for i, entry in enumerate(raw)
        )

    refiners_raw = doc.get("refiners", [])
    if not isinstance(refiners_raw, list):
        raise BadConfig("refiners must be an array of backend tables")
    refiners = tuple(
        _parse_backend_spec(entry, f"refiners[{i}]", _REFINER_KINDS)
        for i, entry in enumerate(refiners_raw)
    )

    refinement_raw = doc.get("refinement", {})
    if not isinstance(refinement_raw, dict):
        raise BadConfig("[refinement] must be a table")
    unknown = set(refinement_raw) - _REFINEMENT_KEYS
    if unknown:
        raise BadConfig(f"[refinement]: unknown keys {sorted(unknown)}")
    refinement = RefinementConfig(**refinement_raw)

    return PipelineConfig(
        classifier=classifier,
        rca_ensemble=ensemble("rca_ensemble"),
        lca_ensemble=ensemble("lca_ensemble"),
        threshold=float(doc.get("threshold", 0.5)),
        fusion_mode=doc.get("fusion_mode", "mean"),
        refinement_enabled=bool(doc.get("refinement_enabled", False)),
        refiners=refiners,
        refinement=refinement,
        seed=int(doc.get("seed", 0)),
    )


def load_pipeline_config(path) -> PipelineConfig:
    """Parse a TOML pipeline config file."""
    try:
        import tomllib  # py311+
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise BadConfig(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise BadConfig(f"config {path} is not valid TOML: {exc}") from exc
    return config_from_dict(doc)


def config_to_dict(cfg: PipelineConfig) -> dict:
    def spec(s: BackendSpec) -> dict:
        return {"kind": s.kind, **s.options}

    return {
        "classifier": spec(cfg.classifier),
        "rca_ensemble": [spec(s) for s in cfg.rca_ensemble],
        "lca_ensemble": [spec(s) for s in cfg.lca_ensemble],
        "threshold": cfg.threshold,
        "fusion_mode": cfg.fusion_mode,
        "refinement_enabled": cfg.refinement_enabled,
        "refiners": [spec(s) for s in cfg.refiners],
        "refinement": {
            "mode": cfg.refinement.mode,
            "min_region_pixels": cfg.refinement.min_region_pixels,
            "conflict_policy": cfg.refinement.conflict_policy,
        },
        "seed": cfg.seed,
    }


def config_hash(cfg: PipelineConfig) -> str:
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _derived_seed(seed: int, stage_tag: int, position: int) -> int:
    ss = np.random.SeedSequence([seed & _MASK64, stage_tag, position])
    return int(ss.generate_state(1)[0])


@dataclass
class RuntimeBackends:
    classifier: object
    rca_members: list
    lca_members: list
    refiners: list

    def members(self, group: VesselGroup) -> list:
        return self.rca_members if group is VesselGroup.RCA else self.lca_members


def build_backends(cfg: PipelineConfig, index: DatasetIndex) -> RuntimeBackends:
    """Instantiate backends; oracle kinds are served from ``index``.

    Backend specs without an explicit seed get one derived from the global
    seed, the stage, and their position, so co-configured members draw
    independent streams.
    """

    def classifier(spec: BackendSpec):
        if spec.kind == "oracle":
            seed = spec.options.get("seed", _derived_seed(cfg.seed, 1, 0))
            return OracleVesselClassifier(
                index, float(spec.options.get("flip_prob", 0.0)), seed
            )
        group = VesselGroup(spec.options.get("group", "RCA"))
        return ConstantVesselClassifier(group, float(spec.options.get("confidence", 1.0)))

    def segmenter(spec: BackendSpec, stage_tag: int, position: int):
        if spec.kind == "oracle":
            options = dict(spec.options)
            options.setdefault("seed", _derived_seed(cfg.seed, stage_tag, position))
            return OracleSegmentation(index, CorruptionConfig(**options))
        if spec.kind == "constant":
            return ConstantSegmentation(float(spec.options.get("value", 0.0)))
        if "dir" not in spec.options:
            raise BadConfig("file backend needs a 'dir' key")
        return FileSegmentationBackend(spec.options["dir"])

    def refiner(spec: BackendSpec, position: int):
        seed = spec.options.get("seed", _derived_seed(cfg.seed, 4, position))
        return OracleRefiner(index, float(spec.options.get("error_prob", 0.0)), seed)

    return RuntimeBackends(
        classifier=classifier(cfg.classifier),
        rca_members=[segmenter(s, 2, i) for i, s in enumerate(cfg.rca_ensemble)],
        lca_members=[segmenter(s, 3, i) for i, s in enumerate(cfg.lca_ensemble)],
        refiners=[refiner(s, i) for i, s in enumerate(cfg.refiners)],
    )


def run_image(
    image: ImageRecord, rt: RuntimeBackends, cfg: PipelineConfig
) -> tuple[np.ndarray, dict]:
    """Run the full per-image flow; returns (label mask, trace).

    RCA images bypass refinement: the fused, decoded segmentation is the
    final output for that group.
    """
    timings: dict[str, float] = {}

    def timed(stage, fn):
        start = time.perf_counter()
        try:
            result = fn()
        except MpsegError as exc:
            raise PipelineStageError(stage, exc) from exc
        timings[stage] = time.perf_counter() - start
        return result

    group, confidence = timed("classify", lambda: rt.classifier.classify(image))
    members = rt.members(group)
    if not members:
        raise PipelineStageError(
            "segment", EmptyEnsemble(f"no ensemble members configured for {group.value}")
        )
    stacks = timed("segment", lambda: [m.segment(image, group) for m in members])
    if cfg.fusion_mode == "mean":
        fused = timed("fuse", lambda: fuse_mean(stacks))
    else:
        fused = timed("fuse", lambda: fuse_vote(stacks, cfg.threshold))
    mask = timed("decode", lambda: decode(fused, cfg.threshold))
    refined = False
    if group is VesselGroup.LCA and cfg.refinement_enabled:
        mask = timed(
            "refine", lambda: refine_lca(image, mask, rt.refiners, cfg.refinement)
        )
        refined = True

    trace = {
        "image_id": image.image_id,
        "group": group.value,
        "confidence": confidence,
        "n_members": len(members),
        "refined": refined,
        "timings": timings,
    }
    return mask, trace


@dataclass
class RunSummary:
    out_dir: str
    n_images: int
    n_failed: int
    failures: list
    report: Optional[EvalReport] = None

    @property
    def ok(self) -> bool:
        return self.n_failed == 0


def run_dataset(
    index: DatasetIndex,
    cfg: PipelineConfig,
    out_dir,
    workers: Optional[int] = None,
    evaluate: bool = False,
) -> RunSummary:
    """Predict every image, write masks + manifest (and report if asked).

    Output layout: ``masks/<image_id>.png``, ``manifest.json`` and, with
    ``evaluate``, ``report.json``.  Masks and report are byte-identical
    across runs and worker counts; manifest timings are wall-clock.
    """
    out_dir = Path(out_dir)
    masks_dir = out_dir / "masks"
    try:
        masks_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create output directory {out_dir}: {exc}") from exc

    rt = build_backends(cfg, index)
    ids = index.image_ids()
    workers = workers or os.cpu_count() or 1

    results: dict[int, tuple[np.ndarray, dict]] = {}
    failures: list[dict] = []

    def work(image_id):
        return image_id, run_image(index.image(image_id), rt, cfg)

    safe_work = _safe(work)
    if workers == 1:
        outcomes = list(map(safe_work, ids))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(safe_work, ids))
    for outcome in outcomes:
        if isinstance(outcome, dict):  # failure record
            failures.append(outcome)
        else:
            image_id, result = outcome
            results[image_id] = result

    try:
        for image_id in sorted(results):
            write_mask_png(results[image_id][0], masks_dir / f"{image_id}.png")
    except OSError as exc:
        raise IoFailure(f"cannot write masks under {masks_dir}: {exc}") from exc

    report = None
    if evaluate:
        scored = sorted(results)
        gts = [build_label_mask(index, i) for i in scored]
        preds = [results[i][0] for i in scored]
        report = dataset_mean_f1(gts, preds, scored)
        with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)

    manifest = {
        "config_hash": config_hash(cfg),
        "config": config_to_dict(cfg),
        "seed": cfg.seed,
        "n_images": len(ids),
        "failures": failures,
        "traces": [results[i][1] for i in sorted(results)],
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)

    if failures:
        logger.warning("%d of %d images failed", len(failures), len(ids))
    return RunSummary(str(out_dir), len(ids), len(failures), failures, report)


def _safe(fn):
    def wrapped(image_id):
        try:
            return fn(image_id)
        except PipelineStageError as exc:
            return {"image_id": image_id, "stage": exc.stage, "error": str(exc.cause)}
        except MpsegError as exc:
            return {"image_id": image_id, "stage": "unknown", "error": str(exc)}

    return wrapped
