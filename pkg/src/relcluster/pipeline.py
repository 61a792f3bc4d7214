"""End-to-end orchestration: load -> featurize -> reduce -> cluster -> evaluate.

Runs are reproducible: identical configuration and input files produce
byte-identical output files, independent of the worker count. Every run
writes a manifest recording the configuration and content hashes of all
inputs and outputs.
"""

from __future__ import annotations

import dataclasses
import hashlib
import itertools
import json
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clustering import (
    ClusterAssignment,
    Dendrogram,
    cut_at_k,
    hac_ward,
    kmeans,
    save_assignment,
    save_dendrogram,
)
from .corpus import Corpus, ValidationError, compute_idf, load_corpus
from .embeddings import EmbeddingTable, load_embeddings
from .features import (
    BLOCK_NAMES,
    DEGENERATE_PATH_POLICIES,
    FeatureMatrix,
    WeightingConfig,
    featurize_corpus,
)
from .metrics import EvalReport, pairwise_f1, save_report
from .pca import PASSTHROUGH, ReducedFeatures, ReductionPlan, reduce_and_concat

ALGORITHMS = ("hac_ward", "kmeans")


class PipelineError(RuntimeError):
    """Unexpected failure inside a pipeline stage."""


@dataclass(frozen=True)
class RunConfig:
    corpus: Path
    embeddings: Path
    out_dir: Path
    blocks: tuple[str, ...] = ("emb_dep", "ent_types")
    c_in: float = 1.85
    c_out: float = 0.02
    pca: dict[str, int] = field(default_factory=dict)
    sparse_components: int = 50
    algorithm: str = "hac_ward"
    k: int = 100
    seed: int = 0
    on_degenerate_path: str = "error"
    normalize: bool = False
    smooth_idf: bool = True
    workers: int = 1

    def validate(self) -> None:
        if not self.blocks:
            raise ValidationError("no feature blocks selected")
        unknown = set(self.blocks) - set(BLOCK_NAMES)
        if unknown:
            raise ValidationError(
                f"unknown feature blocks {sorted(unknown)}; available: {list(BLOCK_NAMES)}"
            )
        if self.c_in < 1:
            raise ValidationError(f"c_in must be >= 1, got {self.c_in}")
        if self.c_out < 0:
            raise ValidationError(f"c_out must be >= 0, got {self.c_out}")
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if self.algorithm not in ALGORITHMS:
            raise ValidationError(
                f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}"
            )
        if self.sparse_components < 1:
            raise ValidationError("sparse_components must be >= 1")
        for name, comps in self.pca.items():
            if name not in self.blocks:
                raise ValidationError(f"pca directive for unselected block {name!r}")
            if comps < 1:
                raise ValidationError(f"pca components for {name!r} must be >= 1")
        if self.on_degenerate_path not in DEGENERATE_PATH_POLICIES:
            raise ValidationError(
                f"unknown degenerate-path policy {self.on_degenerate_path!r}"
            )
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")

    def to_jsonable(self) -> dict:
        out = dataclasses.asdict(self)
        out["corpus"] = str(self.corpus)
        out["embeddings"] = str(self.embeddings)
        out["out_dir"] = str(self.out_dir)
        out["blocks"] = list(self.blocks)
        return out


@dataclass
class PipelineResult:
    assignment: ClusterAssignment
    report: EvalReport | None
    dendrogram: Dendrogram | None
    reduced: ReducedFeatures
    feature_matrix: FeatureMatrix
    output_paths: dict[str, Path] = field(default_factory=dict)


@contextmanager
def _stage(name: str):
    try:
        yield
    except ValidationError as exc:
        raise ValidationError(f"[{name}] {exc}") from exc
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(f"[{name}] {exc}") from exc


def build_plan(config: RunConfig, fm: FeatureMatrix) -> ReductionPlan:
    """Explicit directives win; otherwise sparse blocks get the clamped default."""
    directives: dict[str, int | None] = {}
    for blk in fm.blocks:
        if blk.name in config.pca:
            directives[blk.name] = config.pca[blk.name]
        elif blk.is_sparse:
            directives[blk.name] = max(
                1, min(config.sparse_components, fm.n_instances, blk.width)
            )
        else:
            directives[blk.name] = PASSTHROUGH
    return ReductionPlan(directives)


def _l2_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return matrix / norms


def run_stages(
    config: RunConfig, corpus: Corpus, table: EmbeddingTable
) -> PipelineResult:
    """Featurize, reduce, cluster, and (when gold labels exist) evaluate."""
    with _stage("featurize"):
        idf = None
        if {"tfidf", "emb_idf"} & set(config.blocks):
            idf = compute_idf(corpus, smooth=config.smooth_idf)
        fm = featurize_corpus(
            corpus,
            table,
            idf,
            WeightingConfig(c_in=config.c_in, c_out=config.c_out),
            config.blocks,
            on_degenerate_path=config.on_degenerate_path,
            workers=config.workers,
        )
    with _stage("reduce"):
        reduced = reduce_and_concat(fm, build_plan(config, fm))
    with _stage("cluster"):
        vectors = _l2_rows(reduced.data) if config.normalize else reduced.data
        dendrogram = None
        if config.algorithm == "hac_ward":
            dendrogram = hac_ward(vectors)
            assignment = cut_at_k(dendrogram, config.k, ids=fm.instance_ids)
        else:
            assignment = kmeans(
                vectors, config.k, seed=config.seed, ids=fm.instance_ids
            )
    with _stage("evaluate"):
        gold = corpus.gold_labels()
        n_labeled = sum(1 for i in assignment.ids if i in gold)
        report = None
        if n_labeled >= 2:
            report = pairwise_f1(assignment, gold)
        else:
            warnings.warn(
                "fewer than 2 gold-labeled instances; skipping evaluation",
                stacklevel=2,
            )
    return PipelineResult(
        assignment=assignment,
        report=report,
        dendrogram=dendrogram,
        reduced=reduced,
        feature_matrix=fm,
    )


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _load_inputs(config: RunConfig) -> tuple[Corpus, EmbeddingTable]:
    if not Path(config.corpus).is_file():
        raise ValidationError(f"corpus file not found: {config.corpus}")
    if not Path(config.embeddings).is_file():
        raise ValidationError(f"embeddings file not found: {config.embeddings}")
    with _stage("load"):
        corpus = load_corpus(config.corpus)
        table = load_embeddings(config.embeddings)
    return corpus, table


def run_pipeline(config: RunConfig) -> PipelineResult:
    """Execute all stages and write assignment, report, and manifest files."""
    config.validate()
    corpus, table = _load_inputs(config)
    result = run_stages(config, corpus, table)

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    with _stage("write"):
        paths["assignment.tsv"] = out_dir / "assignment.tsv"
        save_assignment(result.assignment, paths["assignment.tsv"])
        if result.dendrogram is not None:
            paths["dendrogram.tsv"] = out_dir / "dendrogram.tsv"
            save_dendrogram(result.dendrogram, paths["dendrogram.tsv"])
        if result.report is not None:
            paths["report.json"] = out_dir / "report.json"
            save_report(result.report, paths["report.json"])
        manifest = {
            "config": config.to_jsonable(),
            "inputs": {
                "corpus": {"path": str(config.corpus), "sha256": sha256_file(config.corpus)},
                "embeddings": {
                    "path": str(config.embeddings),
                    "sha256": sha256_file(config.embeddings),
                },
            },
            "outputs": {name: sha256_file(p) for name, p in sorted(paths.items())},
        }
        manifest_path = out_dir / "manifest.json"
        manifest_path.write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
            newline="\n",
        )
        paths["manifest.json"] = manifest_path
    result.output_paths = paths
    return result


@dataclass
class SweepPoint:
    params: dict
    report: EvalReport | None = None
    error: str | None = None

    @property
    def name(self) -> str:
        return " ".join(f"{k}={v}" for k, v in self.params.items())


@dataclass
class SweepResult:
    points: list[SweepPoint]

    def ranked(self) -> list[tuple[str, EvalReport]]:
        from .metrics import compare_runs

        scored = [(p.name, p.report) for p in self.points if p.report is not None]
        return compare_runs(scored) if scored else []


def sweep(
    config: RunConfig,
    c_in_values: list[float] | None = None,
    c_out_values: list[float] | None = None,
    component_values: list[int] | None = None,
) -> SweepResult:
    """Grid search over weighting constants and the sparse PCA size.

    Axes default to the base configuration's single value. Points that fail
    validation are recorded with their error; the rest run to completion.
    """
    grid_axes = {
        "c_in": c_in_values if c_in_values is not None else [config.c_in],
        "c_out": c_out_values if c_out_values is not None else [config.c_out],
        "pca": component_values
        if component_values is not None
        else [config.sparse_components],
    }
    for axis, values in grid_axes.items():
        if not values:
            raise ValidationError(f"empty sweep grid for {axis}")
    corpus, table = _load_inputs(config)
    if len(corpus.gold_labels()) < 2:
        raise ValidationError("sweep needs gold labels to rank configurations")
    points: list[SweepPoint] = []
    for c_in, c_out, comps in itertools.product(
        grid_axes["c_in"], grid_axes["c_out"], grid_axes["pca"]
    ):
        params = {"c_in": c_in, "c_out": c_out, "pca": comps}
        point = SweepPoint(params=params)
        try:
            candidate = dataclasses.replace(
                config, c_in=c_in, c_out=c_out, sparse_components=comps
            )
            candidate.validate()
            point.report = run_stages(candidate, corpus, table).report
        except ValidationError as exc:
            point.error = str(exc)
        points.append(point)
    return SweepResult(points=points)
