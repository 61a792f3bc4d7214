"""Synthetic relation corpora with controllable signal/noise structure.

Each relation owns a small set of "signal" verbs that appear on the
dependency path of its instances; every sentence is padded with filler
words drawn from a shared vocabulary. Signal-word embeddings point along
per-relation orthonormal directions, filler embeddings are isotropic
noise, and entity surfaces are left out of the embedding table. Path terms
therefore carry the relation, off-path terms do not, and representations
that up-weight path terms separate the relations more cleanly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus, EntityMention, RelationInstance, build_corpus, save_corpus
from .embeddings import EmbeddingTable, save_embeddings

_FILLERS = [
    "the", "a", "of", "in", "and", "was", "is", "to", "for", "with",
    "on", "at", "his", "her", "their", "it", "this", "that", "by", "from",
    "he", "she", "they", "we", "its", "an", "as", "but", "or", "not",
]

_RELATIONS = [
    ("birthplace", ["born", "native", "raised", "hails"]),
    ("spouse", ["married", "wed", "divorced", "engaged"]),
    ("founder", ["founded", "established", "launched", "created"]),
    ("visit", ["visited", "toured", "attended", "explored"]),
    ("award", ["won", "received", "awarded", "earned"]),
    ("employer", ["joined", "hired", "employs", "retired"]),
    ("capital", ["governs", "administers", "seat", "houses"]),
    ("author", ["wrote", "authored", "published", "penned"]),
]

_SIGNATURES = [
    (("PERSON", ("Person",)), ("LOCATION", ("Settlement",))),
    (("PERSON", ("Person",)), ("PERSON", ("Person",))),
    (("PERSON", ("Person",)), ("ORGANIZATION", ("Company",))),
    (("PERSON", ("Person",)), ("LOCATION", ("Country",))),
    (("PERSON", ("Person", "Artist")), ("ORGANIZATION", ("University",))),
    (("ORGANIZATION", ("Company",)), ("LOCATION", ("Settlement",))),
    (("LOCATION", ("Settlement",)), ("LOCATION", ("Country",))),
    (("PERSON", ("Person", "Writer")), ("ORGANIZATION", ("Publisher",))),
]


@dataclass(frozen=True)
class SyntheticSpec:
    n_relations: int = 4
    instances_per_relation: int = 50
    dim: int = 16
    seed: int = 7
    filler_vocab_size: int = 8
    fillers_per_sentence: tuple[int, int] = (14, 18)
    signal_words_per_relation: int = 4
    path_terms_per_instance: tuple[int, int] = (1, 2)
    signal_scale: float = 2.4
    signal_jitter: float = 0.05
    filler_scale: float = 1.0
    capitalize_prob: float = 0.15


def _relation_inventory(spec: SyntheticSpec) -> list[tuple[str, list[str]]]:
    out = []
    for r in range(spec.n_relations):
        if r < len(_RELATIONS):
            name, verbs = _RELATIONS[r]
            verbs = list(verbs)
        else:
            name, verbs = f"rel{r}", []
        while len(verbs) < spec.signal_words_per_relation:
            verbs.append(f"{name}_act{len(verbs)}")
        out.append((name, verbs[: spec.signal_words_per_relation]))
    return out


def _filler_vocab(spec: SyntheticSpec) -> list[str]:
    fillers = list(_FILLERS[: spec.filler_vocab_size])
    while len(fillers) < spec.filler_vocab_size:
        fillers.append(f"w{len(fillers)}")
    return fillers


def make_synthetic_data(spec: SyntheticSpec) -> tuple[Corpus, EmbeddingTable]:
    """Build a corpus and matching embedding table from the spec, deterministically."""
    rng = np.random.default_rng(spec.seed)
    relations = _relation_inventory(spec)
    fillers = _filler_vocab(spec)

    # Orthonormal per-relation signal directions.
    basis, _ = np.linalg.qr(rng.normal(size=(spec.dim, spec.dim)))
    if spec.n_relations > spec.dim:
        raise ValueError("need dim >= n_relations for distinct signal directions")

    vectors: dict[str, np.ndarray] = {}
    for word in fillers:
        vectors[word] = spec.filler_scale * rng.normal(size=spec.dim)
    for r, (_, verbs) in enumerate(relations):
        for word in verbs:
            vectors[word] = spec.signal_scale * basis[r] + spec.signal_jitter * rng.normal(
                size=spec.dim
            )
    table = EmbeddingTable(dim=spec.dim, vectors=vectors)

    instances: list[RelationInstance] = []
    entity_counter = 0
    for r, (rel_name, verbs) in enumerate(relations):
        head_sig, tail_sig = _SIGNATURES[r % len(_SIGNATURES)]
        for _ in range(spec.instances_per_relation):
            lo, hi = spec.fillers_per_sentence
            n_fill = int(rng.integers(lo, hi + 1))
            middle = list(rng.choice(fillers, size=n_fill, replace=True))
            lo, hi = spec.path_terms_per_instance
            n_path = int(rng.integers(lo, min(hi, len(verbs)) + 1))
            path = list(rng.choice(verbs, size=n_path, replace=False))
            middle.extend(path)
            middle = [middle[i] for i in rng.permutation(len(middle))]
            if middle and rng.random() < spec.capitalize_prob:
                middle[0] = middle[0].capitalize()
            head_surface = f"E{entity_counter:04d}"
            tail_surface = f"E{entity_counter + 1:04d}"
            entity_counter += 2
            tokens = [head_surface, *middle, tail_surface]
            instances.append(
                RelationInstance(
                    id="placeholder",
                    tokens=tuple(tokens),
                    dep_path_terms=frozenset(path),
                    head=EntityMention(
                        surface=head_surface,
                        start=0,
                        end=1,
                        kb_types=head_sig[1],
                        ner_tag=head_sig[0],
                    ),
                    tail=EntityMention(
                        surface=tail_surface,
                        start=len(tokens) - 1,
                        end=len(tokens),
                        kb_types=tail_sig[1],
                        ner_tag=tail_sig[0],
                    ),
                    gold_label=rel_name,
                )
            )

    order = rng.permutation(len(instances))
    shuffled = [
        RelationInstance(
            id=f"s{pos:04d}",
            tokens=instances[i].tokens,
            dep_path_terms=instances[i].dep_path_terms,
            head=instances[i].head,
            tail=instances[i].tail,
            gold_label=instances[i].gold_label,
        )
        for pos, i in enumerate(order)
    ]
    return build_corpus(shuffled), table


def write_synthetic_data(
    spec: SyntheticSpec, corpus_path: str | Path, embeddings_path: str | Path
) -> tuple[Corpus, EmbeddingTable]:
    corpus, table = make_synthetic_data(spec)
    save_corpus(corpus, corpus_path)
    save_embeddings(table, embeddings_path)
    return corpus, table
