#!/usr/bin/env python3
"""Regenerate the bundled synthetic fixture under data/fixture/.

The fixture is deterministic for a given seed; the checked-in files come
from the defaults. Path terms carry the relation signal, filler words are
embedding noise, so representations that up-weight path terms cluster the
relations more cleanly.
"""

import argparse
from pathlib import Path

from relcluster.synthetic import SyntheticSpec, write_synthetic_data


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out-dir",
        type=Path,
        default=Path(__file__).resolve().parent.parent / "data" / "fixture",
    )
    parser.add_argument("--n-relations", type=int, default=4)
    parser.add_argument("--instances-per-relation", type=int, default=50)
    parser.add_argument("--dim", type=int, default=16)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    spec = SyntheticSpec(
        n_relations=args.n_relations,
        instances_per_relation=args.instances_per_relation,
        dim=args.dim,
        seed=args.seed,
    )
    args.out_dir.mkdir(parents=True, exist_ok=True)
    corpus_path = args.out_dir / "corpus.jsonl"
    embeddings_path = args.out_dir / "embeddings.txt"
    corpus, table = write_synthetic_data(spec, corpus_path, embeddings_path)
    print(f"wrote {corpus_path} ({corpus.n_instances} instances)")
    print(f"wrote {embeddings_path} ({len(table)} vectors, dim {table.dim})")


if __name__ == "__main__":
    main()
