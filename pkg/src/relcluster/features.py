"""Per-instance feature blocks: reweighted/plain embedding sums, TF-IDF,
and entity-type indicators.

The central representation gives every sentence token a weight before the
embedding sum: tokens on the dependency path between the two entities get
c_in * |W| / |D| (sentence length over number of distinct path terms),
all other tokens get c_out. Membership in the path-term set is decided by
lowercased string equality, so repeated occurrences of a path term all
receive the in-path weight.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .corpus import Corpus, IdfWeights, RelationInstance, ValidationError, normalize_token
from .embeddings import EmbeddingTable

# Canonical block order; selections are materialized in this order.
BLOCK_NAMES = ("tfidf", "emb_sum", "emb_idf", "emb_dep", "ent_types")
SPARSE_BLOCKS = frozenset({"tfidf", "ent_types"})

DEGENERATE_PATH_POLICIES = ("error", "skip", "all_out")


class DegeneratePathError(ValidationError):
    """Instance has an empty dependency-path term set under the strict policy."""


@dataclass(frozen=True)
class WeightingConfig:
    """Weights for in-path vs out-of-path tokens; c_in >= 1, c_out >= 0."""

    c_in: float = 1.85
    c_out: float = 0.02

    def __post_init__(self) -> None:
        if self.c_in < 1:
            raise ValidationError(f"c_in must be >= 1, got {self.c_in}")
        if self.c_out < 0:
            raise ValidationError(f"c_out must be >= 0, got {self.c_out}")


def dep_weight(
    token: str,
    tokens: Sequence[str],
    path_terms: Iterable[str],
    cfg: WeightingConfig,
) -> float:
    """Weight of one token occurrence given sentence W and path-term set D.

    Returns c_in * |W| / |D| for in-path tokens and c_out otherwise, where
    |W| counts token occurrences and |D| counts distinct normalized path
    terms. An empty D is a degenerate path and raises.
    """
    norm_path = {normalize_token(t) for t in path_terms}
    if not norm_path:
        raise DegeneratePathError("empty dependency-path term set")
    if normalize_token(token) in norm_path:
        return cfg.c_in * len(tokens) / len(norm_path)
    return cfg.c_out


def dep_reweighted_vector(
    inst: RelationInstance,
    table: EmbeddingTable,
    cfg: WeightingConfig,
    all_out: bool = False,
) -> np.ndarray:
    """Weighted embedding sum over all token occurrences; OOV tokens skipped.

    With all_out=True every token gets the out-of-path weight (the lenient
    fallback for instances with no path terms).
    """
    norm_path = inst.normalized_path_terms()
    if not norm_path and not all_out:
        raise DegeneratePathError(
            f"instance {inst.id!r}: empty dependency-path term set"
        )
    in_weight = 0.0 if all_out else cfg.c_in * len(inst.tokens) / len(norm_path)
    out = np.zeros(table.dim, dtype=np.float64)
    for token in inst.tokens:
        vec = table.lookup(token)
        if vec is None:
            continue
        if not all_out and normalize_token(token) in norm_path:
            out += in_weight * vec
        else:
            out += cfg.c_out * vec
    return out


def sum_embedding_vector(inst: RelationInstance, table: EmbeddingTable) -> np.ndarray:
    """Plain embedding sum over token occurrences; OOV tokens skipped."""
    out = np.zeros(table.dim, dtype=np.float64)
    for token in inst.tokens:
        vec = table.lookup(token)
        if vec is not None:
            out += vec
    return out


def idf_embedding_vector(
    inst: RelationInstance, table: EmbeddingTable, idf: IdfWeights
) -> np.ndarray:
    """IDF-weighted embedding sum; tokens outside the IDF map get its unseen value."""
    out = np.zeros(table.dim, dtype=np.float64)
    for token in inst.tokens:
        vec = table.lookup(token)
        if vec is not None:
            out += idf.weight(token) * vec
    return out


def tfidf_vector(
    inst: RelationInstance, vocab: Sequence[str], idf: IdfWeights
) -> dict[int, float]:
    """Sparse tf*idf components over a fixed vocabulary.

    Returns {vocab index: raw count * idf}; tokens outside the vocabulary
    are dropped.
    """
    index = {t: i for i, t in enumerate(vocab)}
    counts: dict[int, int] = {}
    for token in inst.tokens:
        col = index.get(normalize_token(token))
        if col is not None:
            counts[col] = counts.get(col, 0) + 1
    return {col: n * idf.weight(vocab[col]) for col, n in counts.items()}


# Entry layout for entity-type features: (role, kind, label).
HEAD, TAIL = "head", "tail"
KB_TYPE, NER_TAG = "kb_type", "ner_tag"

TypeEntry = tuple[str, str, str]


@dataclass(frozen=True)
class TypeVocabulary:
    """Distinct (role, kind, label) triples in first-occurrence order."""

    entries: tuple[TypeEntry, ...]

    @cached_property
    def index(self) -> dict[TypeEntry, int]:
        return {entry: i for i, entry in enumerate(self.entries)}

    def __len__(self) -> int:
        return len(self.entries)


def _instance_type_entries(inst: RelationInstance) -> list[TypeEntry]:
    entries: list[TypeEntry] = []
    for role, mention in ((HEAD, inst.head), (TAIL, inst.tail)):
        entries.extend((role, KB_TYPE, label) for label in mention.kb_types)
        entries.append((role, NER_TAG, mention.ner_tag))
    return entries


def build_type_vocabulary(corpus: Corpus) -> TypeVocabulary:
    """Collect every observed (role, kind, label) triple, first occurrence first."""
    seen: dict[TypeEntry, None] = {}
    for inst in corpus.instances:
        for entry in _instance_type_entries(inst):
            seen.setdefault(entry)
    return TypeVocabulary(entries=tuple(seen))


def entity_type_vector(inst: RelationInstance, tv: TypeVocabulary) -> list[int]:
    """Indices of the multi-hot indicator over tv; unseen labels contribute nothing."""
    cols = {
        tv.index[entry] for entry in _instance_type_entries(inst) if entry in tv.index
    }
    return sorted(cols)


@dataclass
class FeatureBlock:
    """One named feature block, rows aligned with FeatureMatrix.instance_ids."""

    name: str
    data: np.ndarray | sparse.csr_matrix
    is_sparse: bool

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def dense(self) -> np.ndarray:
        """Row-major float64 copy, densifying sparse blocks."""
        if self.is_sparse:
            return np.asarray(self.data.todense(), dtype=np.float64)
        return np.asarray(self.data, dtype=np.float64)


@dataclass
class FeatureMatrix:
    """Ordered feature blocks sharing one instance-id axis."""

    instance_ids: tuple[str, ...]
    blocks: list[FeatureBlock]

    @property
    def n_instances(self) -> int:
        return len(self.instance_ids)

    def block(self, name: str) -> FeatureBlock:
        for blk in self.blocks:
            if blk.name == name:
                return blk
        raise KeyError(name)

    def block_names(self) -> list[str]:
        return [blk.name for blk in self.blocks]


def _ordered_selection(selection: Iterable[str]) -> list[str]:
    chosen = set(selection)
    if not chosen:
        raise ValidationError("feature selection is empty; nothing to cluster")
    unknown = chosen - set(BLOCK_NAMES)
    if unknown:
        raise ValidationError(
            f"unknown feature blocks {sorted(unknown)}; available: {list(BLOCK_NAMES)}"
        )
    return [name for name in BLOCK_NAMES if name in chosen]


def _l2_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return matrix / norms


def featurize_corpus(
    corpus: Corpus,
    table: EmbeddingTable | None,
    idf: IdfWeights | None,
    cfg: WeightingConfig,
    selection: Iterable[str],
    on_degenerate_path: str = "error",
    l2_normalize: bool = False,
    workers: int = 1,
) -> FeatureMatrix:
    """Build the selected feature blocks for every instance, in corpus order.

    Instances with an empty dependency-path set are handled per
    ``on_degenerate_path``: "error" raises listing the offending ids,
    "skip" drops those instances from every block, "all_out" weights all
    of their tokens with c_out. Row order always equals corpus order
    (minus skips) regardless of the worker count.
    """
    names = _ordered_selection(selection)
    if on_degenerate_path not in DEGENERATE_PATH_POLICIES:
        raise ValidationError(
            f"unknown degenerate-path policy {on_degenerate_path!r}; "
            f"expected one of {DEGENERATE_PATH_POLICIES}"
        )
    needs_embeddings = {"emb_sum", "emb_idf", "emb_dep"} & set(names)
    if needs_embeddings and table is None:
        raise ValidationError(f"blocks {sorted(needs_embeddings)} need an embedding table")
    needs_idf = {"tfidf", "emb_idf"} & set(names)
    if needs_idf and idf is None:
        raise ValidationError(f"blocks {sorted(needs_idf)} need idf weights")

    instances = list(corpus.instances)
    degenerate_all_out: frozenset[str] = frozenset()
    if "emb_dep" in names:
        degenerate = [inst.id for inst in instances if not inst.normalized_path_terms()]
        if degenerate:
            if on_degenerate_path == "error":
                raise DegeneratePathError(
                    "instances with empty dependency path: " + ", ".join(degenerate)
                )
            if on_degenerate_path == "skip":
                dropped = set(degenerate)
                instances = [inst for inst in instances if inst.id not in dropped]
                if not instances:
                    raise ValidationError(
                        "every instance was skipped for an empty dependency path"
                    )
            else:
                degenerate_all_out = frozenset(degenerate)

    vocab = corpus.vocabulary() if "tfidf" in names else []
    tv = build_type_vocabulary(corpus) if "ent_types" in names else TypeVocabulary(())
    vocab_index = {t: i for i, t in enumerate(vocab)}

    def instance_row(inst: RelationInstance) -> dict[str, object]:
        row: dict[str, object] = {}
        if "tfidf" in names:
            counts: dict[int, int] = {}
            for token in inst.tokens:
                col = vocab_index.get(normalize_token(token))
                if col is not None:
                    counts[col] = counts.get(col, 0) + 1
            row["tfidf"] = {c: n * idf.weight(vocab[c]) for c, n in counts.items()}
        if "emb_sum" in names:
            row["emb_sum"] = sum_embedding_vector(inst, table)
        if "emb_idf" in names:
            row["emb_idf"] = idf_embedding_vector(inst, table, idf)
        if "emb_dep" in names:
            row["emb_dep"] = dep_reweighted_vector(
                inst, table, cfg, all_out=inst.id in degenerate_all_out
            )
        if "ent_types" in names:
            row["ent_types"] = entity_type_vector(inst, tv)
        return row

    if workers > 1 and len(instances) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(instance_row, instances))
    else:
        rows = [instance_row(inst) for inst in instances]

    n = len(instances)
    blocks: list[FeatureBlock] = []
    for name in names:
        if name in SPARSE_BLOCKS:
            width = len(vocab) if name == "tfidf" else len(tv)
            r_idx: list[int] = []
            c_idx: list[int] = []
            vals: list[float] = []
            for i, row in enumerate(rows):
                cells = row[name]
                if name == "tfidf":
                    for col in sorted(cells):
                        r_idx.append(i)
                        c_idx.append(col)
                        vals.append(cells[col])
                else:
                    for col in cells:
                        r_idx.append(i)
                        c_idx.append(col)
                        vals.append(1.0)
            data = sparse.csr_matrix(
                (vals, (r_idx, c_idx)), shape=(n, width), dtype=np.float64
            )
            blocks.append(FeatureBlock(name=name, data=data, is_sparse=True))
        else:
            dense = np.vstack([row[name] for row in rows]) if n else np.zeros((0, table.dim))
            if l2_normalize:
                dense = _l2_rows(dense)
            blocks.append(FeatureBlock(name=name, data=dense, is_sparse=False))
    return FeatureMatrix(
        instance_ids=tuple(inst.id for inst in instances), blocks=blocks
    )


# ---------------------------------------------------------------------------
# Binary container: one JSON header line, then per-block payloads in order.
# Dense blocks are row-major little-endian float32; sparse blocks are
# (row uint32, col uint32, value float32) triplets sorted by (row, col).
# ---------------------------------------------------------------------------

_TRIPLET = np.dtype([("row", "<u4"), ("col", "<u4"), ("value", "<f4")])

FEATURES_FORMAT = "relcluster-features"


def save_features(fm: FeatureMatrix, path: str | Path) -> None:
    header = {
        "format": FEATURES_FORMAT,
        "version": 1,
        "n_instances": fm.n_instances,
        "instance_ids": list(fm.instance_ids),
        "blocks": [],
    }
    payloads: list[bytes] = []
    for blk in fm.blocks:
        entry = {"name": blk.name, "width": blk.width, "sparse": blk.is_sparse}
        if blk.is_sparse:
            coo = blk.data.tocoo()
            order = np.lexsort((coo.col, coo.row))
            triplets = np.empty(coo.nnz, dtype=_TRIPLET)
            triplets["row"] = coo.row[order]
            triplets["col"] = coo.col[order]
            triplets["value"] = coo.data[order].astype(np.float32)
            entry["nnz"] = int(coo.nnz)
            payloads.append(triplets.tobytes())
        else:
            payloads.append(
                np.ascontiguousarray(blk.data, dtype="<f4").tobytes()
            )
        header["blocks"].append(entry)
    with Path(path).open("wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for payload in payloads:
            fh.write(payload)


def load_features(path: str | Path) -> FeatureMatrix:
    """Read a feature container; values come back as float64 (from float32)."""
    path = Path(path)
    with path.open("rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValidationError(f"{path}: not a feature container: {exc}") from exc
        if header.get("format") != FEATURES_FORMAT:
            raise ValidationError(f"{path}: unexpected container format")
        n = header["n_instances"]
        blocks: list[FeatureBlock] = []
        for entry in header["blocks"]:
            width = entry["width"]
            if entry["sparse"]:
                raw = fh.read(entry["nnz"] * _TRIPLET.itemsize)
                triplets = np.frombuffer(raw, dtype=_TRIPLET)
                data = sparse.csr_matrix(
                    (
                        triplets["value"].astype(np.float64),
                        (triplets["row"], triplets["col"]),
                    ),
                    shape=(n, width),
                )
                blocks.append(FeatureBlock(name=entry["name"], data=data, is_sparse=True))
            else:
                raw = fh.read(n * width * 4)
                dense = np.frombuffer(raw, dtype="<f4").reshape(n, width).astype(np.float64)
                blocks.append(FeatureBlock(name=entry["name"], data=dense, is_sparse=False))
    return FeatureMatrix(instance_ids=tuple(header["instance_ids"]), blocks=blocks)
