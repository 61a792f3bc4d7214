import json
from pathlib import Path

import pytest
from hypothesis import settings

from relcluster.corpus import Corpus, EntityMention, RelationInstance, build_corpus

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURE_DIR = REPO_ROOT / "data" / "fixture"


@pytest.fixture(scope="session")
def fixture_corpus_path() -> Path:
    return FIXTURE_DIR / "corpus.jsonl"


@pytest.fixture(scope="session")
def fixture_embeddings_path() -> Path:
    return FIXTURE_DIR / "embeddings.txt"


def make_mention(start: int, end: int, ner: str = "PERSON", kb=("Person",), surface="x"):
    return EntityMention(
        surface=surface, start=start, end=end, kb_types=tuple(kb), ner_tag=ner
    )


def make_instance(
    inst_id: str = "i0",
    tokens=("alice", "loves", "bob"),
    dep_path=("loves",),
    gold=None,
    head=None,
    tail=None,
) -> RelationInstance:
    tokens = tuple(tokens)
    return RelationInstance(
        id=inst_id,
        tokens=tokens,
        dep_path_terms=frozenset(dep_path),
        head=head or make_mention(0, 1, surface=tokens[0]),
        tail=tail
        or make_mention(len(tokens) - 1, len(tokens), ner="LOCATION", kb=("Settlement",), surface=tokens[-1]),
        gold_label=gold,
    )


def small_corpus(instances) -> Corpus:
    return build_corpus(list(instances))


def record(
    inst_id="r0",
    tokens=("alice", "loves", "bob"),
    dep_path=("loves",),
    gold=None,
    head=None,
    tail=None,
    **extra,
) -> dict:
    tokens = list(tokens)
    rec = {
        "id": inst_id,
        "tokens": tokens,
        "dep_path": list(dep_path),
        "head": head
        or {
            "surface": tokens[0],
            "start": 0,
            "end": 1,
            "kb_types": ["Person"],
            "ner_tag": "PERSON",
        },
        "tail": tail
        or {
            "surface": tokens[-1],
            "start": len(tokens) - 1,
            "end": len(tokens),
            "kb_types": ["Settlement"],
            "ner_tag": "LOCATION",
        },
        "gold": gold,
    }
    rec.update(extra)
    return rec


def write_jsonl(path: Path, records) -> Path:
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path


def write_embeddings(path: Path, entries: dict[str, list[float]], header=None) -> Path:
    with path.open("w", encoding="utf-8") as fh:
        if header:
            fh.write(header + "\n")
        for token, vec in entries.items():
            fh.write(token + " " + " ".join(str(v) for v in vec) + "\n")
    return path
