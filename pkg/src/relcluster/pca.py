"""Per-block PCA and block concatenation.

Each sparse block is reduced on its own, in isolation from every other
block, and only then concatenated with the remaining blocks. Fitting uses
an SVD of the centered data matrix; components carry a deterministic sign
(largest-magnitude entry non-negative) so repeated runs are bit-comparable.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import ValidationError
from .features import SPARSE_BLOCKS, FeatureMatrix


@dataclass(frozen=True)
class PcaModel:
    """Column means plus orthonormal component rows, ordered by variance."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    @property
    def input_width(self) -> int:
        return self.mean.shape[0]

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Flip rows so each row's largest-magnitude entry is non-negative."""
    out = components.copy()
    for row in out:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    return out


def pca_fit(rows: np.ndarray, n_components: int) -> PcaModel:
    """Fit PCA on an n x p matrix via SVD of the centered data.

    explained_variance[i] = s_i^2 / (n - 1). When the centered matrix has
    rank below n_components, the trailing components are an arbitrary
    orthonormal completion with explained variance exactly 0 (warned).
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got shape {rows.shape}")
    n, p = rows.shape
    if n < 2:
        raise ValidationError(f"pca needs at least 2 rows, got {n}")
    if not np.all(np.isfinite(rows)):
        raise ValidationError("pca input contains non-finite values")
    if not (1 <= n_components <= min(n, p)):
        raise ValidationError(
            f"n_components must be in [1, {min(n, p)}] for a {n}x{p} matrix, "
            f"got {n_components}"
        )
    mean = rows.mean(axis=0)
    centered = rows - mean
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    tol = svals[0] * max(n, p) * np.finfo(np.float64).eps if svals.size else 0.0
    rank = int(np.sum(svals > tol))
    if rank < n_components:
        warnings.warn(
            f"input rank {rank} < n_components {n_components}; trailing "
            "components are an orthonormal completion with zero variance",
            stacklevel=2,
        )
    components = _fix_signs(vt[:n_components])
    variance = (svals[:n_components] ** 2) / (n - 1)
    variance[rank:] = 0.0
    return PcaModel(mean=mean, components=components, explained_variance=variance)


def pca_transform(model: PcaModel, rows: np.ndarray) -> np.ndarray:
    """Project rows onto the fitted components: (rows - mean) @ components.T."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != model.input_width:
        raise ValidationError(
            f"expected width {model.input_width}, got shape {rows.shape}"
        )
    return (rows - model.mean) @ model.components.T


PASSTHROUGH = None


@dataclass(frozen=True)
class ReductionPlan:
    """Per-block directive: component count for PCA, or None to pass through."""

    directives: dict[str, int | None] = field(default_factory=dict)

    @staticmethod
    def default_for(
        fm: FeatureMatrix, sparse_components: int = 50
    ) -> "ReductionPlan":
        """PCA on every sparse block (clamped to a feasible component count),
        passthrough for dense blocks."""
        directives: dict[str, int | None] = {}
        for blk in fm.blocks:
            if blk.name in SPARSE_BLOCKS:
                directives[blk.name] = max(
                    1, min(sparse_components, fm.n_instances, blk.width)
                )
            else:
                directives[blk.name] = PASSTHROUGH
        return ReductionPlan(directives)


@dataclass
class ReducedFeatures:
    """Concatenated block matrix with per-block column provenance."""

    data: np.ndarray
    column_ranges: dict[str, tuple[int, int]]
    models: dict[str, PcaModel]


def reduce_and_concat(fm: FeatureMatrix, plan: ReductionPlan) -> ReducedFeatures:
    """Apply each block's directive independently, then concatenate in block order."""
    block_names = set(fm.block_names())
    plan_names = set(plan.directives)
    if block_names != plan_names:
        missing = sorted(block_names - plan_names)
        extra = sorted(plan_names - block_names)
        raise ValidationError(
            f"reduction plan mismatch: missing directives {missing}, unknown {extra}"
        )
    pieces: list[np.ndarray] = []
    ranges: dict[str, tuple[int, int]] = {}
    models: dict[str, PcaModel] = {}
    start = 0
    for blk in fm.blocks:
        directive = plan.directives[blk.name]
        dense = blk.dense()
        if directive is PASSTHROUGH:
            out = dense
        else:
            try:
                model = pca_fit(dense, directive)
            except ValidationError as exc:
                raise ValidationError(f"block {blk.name!r}: {exc}") from exc
            models[blk.name] = model
            out = pca_transform(model, dense)
        pieces.append(out)
        ranges[blk.name] = (start, start + out.shape[1])
        start += out.shape[1]
    return ReducedFeatures(
        data=np.hstack(pieces), column_ranges=ranges, models=models
    )


# ---------------------------------------------------------------------------
# Model file: one JSON header line, then little-endian float64 arrays for
# mean, components (row-major), and explained_variance, in that order.
# ---------------------------------------------------------------------------

PCA_FORMAT = "relcluster-pca"


def save_pca_model(model: PcaModel, path: str | Path) -> None:
    header = {
        "format": PCA_FORMAT,
        "version": 1,
        "input_width": model.input_width,
        "n_components": model.n_components,
    }
    with Path(path).open("wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(model.mean, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.components, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.explained_variance, dtype="<f8").tobytes())


def load_pca_model(path: str | Path) -> PcaModel:
    path = Path(path)
    with path.open("rb") as fh:
        try:
            header = json.loads(fh.readline().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValidationError(f"{path}: not a pca model file: {exc}") from exc
        if header.get("format") != PCA_FORMAT:
            raise ValidationError(f"{path}: unexpected model format")
        p = header["input_width"]
        k = header["n_components"]
        mean = np.frombuffer(fh.read(p * 8), dtype="<f8").copy()
        components = (
            np.frombuffer(fh.read(k * p * 8), dtype="<f8").reshape(k, p).copy()
        )
        variance = np.frombuffer(fh.read(k * 8), dtype="<f8").copy()
    return PcaModel(mean=mean, components=components, explained_variance=variance)
