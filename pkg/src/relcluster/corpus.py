"""Annotated relation-instance corpus: loading, validation, statistics.

The corpus file is JSON lines, one relation instance per line:

    {"id": "...", "tokens": [...], "dep_path": [...],
     "head": {"surface": ..., "start": ..., "end": ..., "kb_types": [...], "ner_tag": ...},
     "tail": {...}, "gold": "label-or-null"}

Unknown fields are ignored with a warning. Tokens keep their original case;
vocabulary statistics and all token matching elsewhere are lowercased.
"""

from __future__ import annotations

import json
import math
import warnings
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator


class ValidationError(ValueError):
    """Input data or configuration violates a documented contract."""


class CorpusFormatError(ValidationError):
    """Malformed corpus record (bad JSON, missing field, wrong type)."""


class CorpusValidationError(ValidationError):
    """Well-formed record that breaks an instance invariant."""


def normalize_token(token: str) -> str:
    """Canonical token form used for vocabulary, IDF, and embedding lookup."""
    return token.lower()


@dataclass(frozen=True)
class EntityMention:
    """One typed entity occurrence; (start, end) is a half-open token span."""

    surface: str
    start: int
    end: int
    kb_types: tuple[str, ...]
    ner_tag: str


@dataclass(frozen=True)
class RelationInstance:
    """One entity-pair occurrence in a sentence, the unit being clustered."""

    id: str
    tokens: tuple[str, ...]
    dep_path_terms: frozenset[str]
    head: EntityMention
    tail: EntityMention
    gold_label: str | None = None

    def normalized_path_terms(self) -> frozenset[str]:
        return frozenset(normalize_token(t) for t in self.dep_path_terms)


@dataclass(frozen=True)
class Corpus:
    """Immutable instance collection with per-token document frequencies.

    ``doc_freq`` counts, for each lowercased token, the number of instances
    whose sentence contains it (presence, not occurrences).
    """

    instances: tuple[RelationInstance, ...]
    doc_freq: dict[str, int]

    @property
    def n_instances(self) -> int:
        return len(self.instances)

    def vocabulary(self) -> list[str]:
        """Sorted lowercased vocabulary over all sentences."""
        return sorted(self.doc_freq)

    def gold_labels(self) -> dict[str, str]:
        """instance id -> gold label, for labeled instances only."""
        return {
            inst.id: inst.gold_label
            for inst in self.instances
            if inst.gold_label is not None
        }


def _check_mention(inst_id: str, role: str, mention: EntityMention, n_tokens: int) -> None:
    if not (0 <= mention.start < mention.end <= n_tokens):
        raise CorpusValidationError(
            f"instance {inst_id!r}: {role} span [{mention.start}, {mention.end}) "
            f"invalid for a {n_tokens}-token sentence"
        )
    if len(set(mention.kb_types)) != len(mention.kb_types):
        raise CorpusValidationError(
            f"instance {inst_id!r}: {role} kb_types contain duplicates"
        )


def validate_instance(inst: RelationInstance) -> None:
    """Raise CorpusValidationError if any instance invariant is violated."""
    if len(inst.tokens) < 2:
        raise CorpusValidationError(
            f"instance {inst.id!r}: sentence has {len(inst.tokens)} tokens, need at least 2"
        )
    _check_mention(inst.id, "head", inst.head, len(inst.tokens))
    _check_mention(inst.id, "tail", inst.tail, len(inst.tokens))
    if inst.head.start < inst.tail.end and inst.tail.start < inst.head.end:
        raise CorpusValidationError(
            f"instance {inst.id!r}: head and tail spans overlap"
        )
    sentence_vocab = {normalize_token(t) for t in inst.tokens}
    missing = sorted(
        t for t in inst.normalized_path_terms() if t not in sentence_vocab
    )
    if missing:
        raise CorpusValidationError(
            f"instance {inst.id!r}: dependency-path terms not in sentence: {missing}"
        )


_INSTANCE_FIELDS = {"id", "tokens", "dep_path", "head", "tail", "gold"}
_MENTION_FIELDS = {"surface", "start", "end", "kb_types", "ner_tag"}


def _string_list(value: object, where: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise CorpusFormatError(f"{where} must be an array of strings")
    return value


def _parse_mention(obj: object, where: str, unknown: set[str]) -> EntityMention:
    if not isinstance(obj, dict):
        raise CorpusFormatError(f"{where} must be an object")
    missing = _MENTION_FIELDS - obj.keys()
    if missing:
        raise CorpusFormatError(f"{where} missing fields: {sorted(missing)}")
    unknown.update(f"{where.split('.')[-1]}.{k}" for k in obj.keys() - _MENTION_FIELDS)
    if not isinstance(obj["surface"], str):
        raise CorpusFormatError(f"{where}.surface must be a string")
    if not isinstance(obj["start"], int) or not isinstance(obj["end"], int):
        raise CorpusFormatError(f"{where}.start/end must be integers")
    if not isinstance(obj["ner_tag"], str):
        raise CorpusFormatError(f"{where}.ner_tag must be a string")
    return EntityMention(
        surface=obj["surface"],
        start=obj["start"],
        end=obj["end"],
        kb_types=tuple(_string_list(obj["kb_types"], f"{where}.kb_types")),
        ner_tag=obj["ner_tag"],
    )


def _parse_record(obj: object, where: str, unknown: set[str]) -> RelationInstance:
    if not isinstance(obj, dict):
        raise CorpusFormatError(f"{where}: record must be a JSON object")
    missing = (_INSTANCE_FIELDS - {"gold"}) - obj.keys()
    if missing:
        raise CorpusFormatError(f"{where}: missing fields: {sorted(missing)}")
    unknown.update(obj.keys() - _INSTANCE_FIELDS)
    if not isinstance(obj["id"], str):
        raise CorpusFormatError(f"{where}: id must be a string")
    gold = obj.get("gold")
    if gold is not None and not isinstance(gold, str):
        raise CorpusFormatError(f"{where}: gold must be a string or null")
    return RelationInstance(
        id=obj["id"],
        tokens=tuple(_string_list(obj["tokens"], f"{where}: tokens")),
        dep_path_terms=frozenset(_string_list(obj["dep_path"], f"{where}: dep_path")),
        head=_parse_mention(obj["head"], f"{where}: head", unknown),
        tail=_parse_mention(obj["tail"], f"{where}: tail", unknown),
        gold_label=gold,
    )


def build_corpus(instances: Iterator[RelationInstance] | list[RelationInstance]) -> Corpus:
    """Validate instances and compute document frequencies."""
    instances = tuple(instances)
    seen: set[str] = set()
    doc_freq: Counter[str] = Counter()
    for inst in instances:
        validate_instance(inst)
        if inst.id in seen:
            raise CorpusValidationError(f"instance {inst.id!r}: duplicate id")
        seen.add(inst.id)
        doc_freq.update({normalize_token(t) for t in inst.tokens})
    return Corpus(instances=instances, doc_freq=dict(doc_freq))


def load_corpus(path: str | Path) -> Corpus:
    """Load and validate a JSON-lines corpus file, preserving record order."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"corpus file not found: {path}")
    instances: list[RelationInstance] = []
    unknown: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {lineno}: invalid JSON: {exc}") from exc
            instances.append(_parse_record(obj, f"line {lineno}", unknown))
    if unknown:
        warnings.warn(f"ignoring unknown corpus fields: {sorted(unknown)}", stacklevel=2)
    return build_corpus(instances)


def _mention_record(mention: EntityMention) -> dict:
    return {
        "surface": mention.surface,
        "start": mention.start,
        "end": mention.end,
        "kb_types": list(mention.kb_types),
        "ner_tag": mention.ner_tag,
    }


def instance_record(inst: RelationInstance) -> dict:
    """Instance as a JSON-serializable record in the corpus schema."""
    return {
        "id": inst.id,
        "tokens": list(inst.tokens),
        "dep_path": sorted(inst.dep_path_terms),
        "head": _mention_record(inst.head),
        "tail": _mention_record(inst.tail),
        "gold": inst.gold_label,
    }


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the corpus back out in the JSON-lines schema (round-trips)."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for inst in corpus.instances:
            fh.write(json.dumps(instance_record(inst), ensure_ascii=False))
            fh.write("\n")


@dataclass(frozen=True)
class IdfWeights:
    """Inverse document frequencies over the corpus vocabulary.

    Behaves as a token -> idf map over observed tokens; ``unseen`` is the
    weight applied to tokens never observed in the corpus (the df = 0 value
    of the smoothed formula).
    """

    values: dict[str, float]
    unseen: float

    def __getitem__(self, token: str) -> float:
        return self.values[token]

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __contains__(self, token: str) -> bool:
        return token in self.values

    def get(self, token: str, default: float | None = None) -> float | None:
        return self.values.get(token, default)

    def weight(self, token: str) -> float:
        """IDF for an arbitrary token, falling back to the unseen value."""
        return self.values.get(normalize_token(token), self.unseen)


def compute_idf(corpus: Corpus, smooth: bool = True) -> IdfWeights:
    """IDF per vocabulary token.

    Default (smoothed): idf(t) = ln((1 + N) / (1 + df(t))) + 1, strictly
    positive for every token. With smooth=False the plain ln(N / df(t)) is
    used instead; it assigns 0 to tokens present in every instance and
    treats unseen tokens as df = 1.
    """
    n = corpus.n_instances
    if n < 1:
        raise ValidationError("idf needs at least one instance")
    if smooth:
        values = {
            t: math.log((1 + n) / (1 + df)) + 1.0 for t, df in corpus.doc_freq.items()
        }
        unseen = math.log(1 + n) + 1.0
    else:
        values = {t: math.log(n / df) for t, df in corpus.doc_freq.items()}
        unseen = math.log(n)
    return IdfWeights(values=values, unseen=unseen)
