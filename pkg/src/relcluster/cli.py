"""Command-line interface.

Subcommands mirror the pipeline stages (featurize / reduce / cluster /
evaluate) plus end-to-end `run` and grid-search `sweep`. Stage commands
read and write the binary feature container so each stage can run on
dumped intermediates. Exit codes: 0 success, 1 validation error, 2
runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .clustering import cut_at_k, hac_ward, kmeans, load_assignment, save_assignment, save_dendrogram
from .corpus import ValidationError, compute_idf, load_corpus
from .embeddings import load_embeddings
from .features import FeatureBlock, FeatureMatrix, WeightingConfig, featurize_corpus, load_features, save_features
from .metrics import format_ranking, format_report, pairwise_f1, save_report
from .pca import ReductionPlan, reduce_and_concat, save_pca_model
from .pipeline import RunConfig, run_pipeline, sweep


def _parse_blocks(value: str) -> tuple[str, ...]:
    return tuple(b.strip() for b in value.split(",") if b.strip())


def _parse_pca_directives(items: list[str] | None) -> dict[str, int]:
    out: dict[str, int] = {}
    for item in items or []:
        name, sep, comps = item.partition("=")
        if not sep:
            raise ValidationError(f"--pca expects block=components, got {item!r}")
        try:
            out[name.strip()] = int(comps)
        except ValueError as exc:
            raise ValidationError(f"--pca components must be an integer: {item!r}") from exc
    return out


def _parse_float_list(value: str) -> list[float]:
    return [float(v) for v in value.split(",") if v.strip()]


def _parse_int_list(value: str) -> list[int]:
    return [int(v) for v in value.split(",") if v.strip()]


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", type=Path, help="JSON-lines corpus file")
    parser.add_argument("--embeddings", type=Path, help="text embedding file")
    parser.add_argument("--blocks", type=str, help="comma-separated feature blocks")
    parser.add_argument("--c-in", type=float, dest="c_in", help="in-path weight constant (default 1.85)")
    parser.add_argument("--c-out", type=float, dest="c_out", help="out-of-path weight constant (default 0.02)")
    parser.add_argument(
        "--pca", action="append", metavar="BLOCK=N",
        help="PCA directive, repeatable; unlisted sparse blocks default to --sparse-components",
    )
    parser.add_argument("--sparse-components", type=int, dest="sparse_components",
                        help="default PCA size for sparse blocks (default 50)")
    parser.add_argument("--algo", choices=["hac", "kmeans"], help="clustering algorithm (default hac)")
    parser.add_argument("--k", type=int, help="number of clusters (default 100)")
    parser.add_argument("--seed", type=int, help="random seed for kmeans (default 0)")
    parser.add_argument("--normalize", action="store_true", default=None,
                        help="L2-normalize final vectors before clustering")
    parser.add_argument("--on-degenerate-path", dest="on_degenerate_path",
                        choices=["error", "skip", "all_out"],
                        help="policy for instances with an empty dependency path")
    parser.add_argument("--plain-idf", dest="plain_idf", action="store_true", default=None,
                        help="use plain ln(N/df) instead of the smoothed idf")
    parser.add_argument("--workers", type=int, help="featurization worker threads (default 1)")
    parser.add_argument("--config", type=Path, help="JSON config file; flags override its values")
    parser.add_argument("--out", type=Path, help="output directory")


def _build_config(args: argparse.Namespace) -> RunConfig:
    file_values: dict = {}
    if args.config is not None:
        try:
            file_values = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config file {args.config}: {exc}") from exc
        if not isinstance(file_values, dict):
            raise ValidationError(f"config file {args.config} must hold a JSON object")

    def pick(flag_value, key, default):
        if flag_value is not None:
            return flag_value
        if key in file_values:
            return file_values[key]
        return default

    corpus = pick(args.corpus, "corpus", None)
    embeddings = pick(args.embeddings, "embeddings", None)
    out_dir = pick(args.out, "out", None)
    if corpus is None or embeddings is None or out_dir is None:
        raise ValidationError("--corpus, --embeddings, and --out are required")
    blocks = pick(
        _parse_blocks(args.blocks) if args.blocks is not None else None,
        "blocks", ("emb_dep", "ent_types"),
    )
    pca = pick(_parse_pca_directives(args.pca) if args.pca else None, "pca", {})
    algo = pick(args.algo, "algo", "hac")
    return RunConfig(
        corpus=Path(corpus),
        embeddings=Path(embeddings),
        out_dir=Path(out_dir),
        blocks=tuple(blocks),
        c_in=float(pick(args.c_in, "c_in", 1.85)),
        c_out=float(pick(args.c_out, "c_out", 0.02)),
        pca={str(k): int(v) for k, v in dict(pca).items()},
        sparse_components=int(pick(args.sparse_components, "sparse_components", 50)),
        algorithm="hac_ward" if algo == "hac" else "kmeans",
        k=int(pick(args.k, "k", 100)),
        seed=int(pick(args.seed, "seed", 0)),
        on_degenerate_path=pick(args.on_degenerate_path, "on_degenerate_path", "error"),
        normalize=bool(pick(args.normalize, "normalize", False)),
        smooth_idf=not bool(pick(args.plain_idf, "plain_idf", False)),
        workers=int(pick(args.workers, "workers", 1)),
    )


def _cmd_run(args: argparse.Namespace) -> int:
    config = _build_config(args)
    result = run_pipeline(config)
    n_clusters = len(set(result.assignment.labels))
    print(f"clustered {result.assignment.n} instances into {n_clusters} clusters")
    if result.report is not None:
        print(format_report(result.report))
    for name, path in sorted(result.output_paths.items()):
        print(f"wrote {path}")
    return 0


def _cmd_featurize(args: argparse.Namespace) -> int:
    config = _build_config(args)
    config.validate()
    corpus = load_corpus(config.corpus)
    table = load_embeddings(config.embeddings)
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
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "features.bin"
    save_features(fm, path)
    widths = ", ".join(f"{b.name}={b.width}" for b in fm.blocks)
    print(f"featurized {fm.n_instances} instances ({widths})")
    print(f"wrote {path}")
    return 0


def _cmd_reduce(args: argparse.Namespace) -> int:
    fm = load_features(args.features)
    directives = _parse_pca_directives(args.pca)
    plan_cfg: dict[str, int | None] = {}
    for blk in fm.blocks:
        if blk.name in directives:
            plan_cfg[blk.name] = directives[blk.name]
        elif blk.is_sparse:
            plan_cfg[blk.name] = max(
                1, min(args.sparse_components, fm.n_instances, blk.width)
            )
        else:
            plan_cfg[blk.name] = None
    reduced = reduce_and_concat(fm, ReductionPlan(plan_cfg))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    blocks = [
        FeatureBlock(
            name=name,
            data=reduced.data[:, start:end],
            is_sparse=False,
        )
        for name, (start, end) in reduced.column_ranges.items()
    ]
    path = out_dir / "reduced.bin"
    save_features(FeatureMatrix(instance_ids=fm.instance_ids, blocks=blocks), path)
    for name, model in sorted(reduced.models.items()):
        model_path = out_dir / f"{name}.pca"
        save_pca_model(model, model_path)
        print(f"wrote {model_path}")
    print(f"reduced to {reduced.data.shape[1]} columns")
    print(f"wrote {path}")
    return 0


def _cmd_cluster(args: argparse.Namespace) -> int:
    fm = load_features(args.features)
    matrix = np.hstack([blk.dense() for blk in fm.blocks])
    if args.normalize:
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        matrix = matrix / norms
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.algo == "hac":
        dendrogram = hac_ward(matrix)
        assignment = cut_at_k(dendrogram, args.k, ids=fm.instance_ids)
        save_dendrogram(dendrogram, out_dir / "dendrogram.tsv")
        print(f"wrote {out_dir / 'dendrogram.tsv'}")
    else:
        assignment = kmeans(matrix, args.k, seed=args.seed, ids=fm.instance_ids)
    path = out_dir / "assignment.tsv"
    save_assignment(assignment, path)
    print(f"clustered {assignment.n} instances into {len(set(assignment.labels))} clusters")
    print(f"wrote {path}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    assignment = load_assignment(args.assignment)
    corpus = load_corpus(args.corpus)
    report = pairwise_f1(assignment, corpus.gold_labels())
    print(format_report(report))
    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        save_report(report, out_dir / "report.json")
        print(f"wrote {out_dir / 'report.json'}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _build_config(args)
    config.validate()
    result = sweep(
        config,
        c_in_values=_parse_float_list(args.sweep_c_in) if args.sweep_c_in else None,
        c_out_values=_parse_float_list(args.sweep_c_out) if args.sweep_c_out else None,
        component_values=_parse_int_list(args.sweep_components) if args.sweep_components else None,
    )
    ranked = result.ranked()
    if ranked:
        print(format_ranking(ranked))
    for point in result.points:
        if point.error is not None:
            print(f"failed {point.name}: {point.error}", file=sys.stderr)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "points": [
            {
                "params": p.params,
                "report": None if p.report is None else json.loads(p.report.to_json()),
                "error": p.error,
            }
            for p in result.points
        ]
    }
    path = out_dir / "sweep.json"
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relcluster",
        description="Cluster relation instances from sentence representations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="full pipeline: featurize, reduce, cluster, evaluate")
    _add_run_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_feat = sub.add_parser("featurize", help="build feature blocks and dump the container")
    _add_run_flags(p_feat)
    p_feat.set_defaults(func=_cmd_featurize)

    p_red = sub.add_parser("reduce", help="per-block PCA on a dumped feature container")
    p_red.add_argument("--features", type=Path, required=True)
    p_red.add_argument("--pca", action="append", metavar="BLOCK=N")
    p_red.add_argument("--sparse-components", dest="sparse_components", type=int, default=50)
    p_red.add_argument("--out", type=Path, required=True)
    p_red.set_defaults(func=_cmd_reduce)

    p_clu = sub.add_parser("cluster", help="cluster a dumped (reduced) feature container")
    p_clu.add_argument("--features", type=Path, required=True)
    p_clu.add_argument("--algo", choices=["hac", "kmeans"], default="hac")
    p_clu.add_argument("--k", type=int, default=100)
    p_clu.add_argument("--seed", type=int, default=0)
    p_clu.add_argument("--normalize", action="store_true")
    p_clu.add_argument("--out", type=Path, required=True)
    p_clu.set_defaults(func=_cmd_cluster)

    p_eval = sub.add_parser("evaluate", help="pairwise F1 of an assignment against corpus gold labels")
    p_eval.add_argument("--assignment", type=Path, required=True)
    p_eval.add_argument("--corpus", type=Path, required=True)
    p_eval.add_argument("--out", type=Path)
    p_eval.set_defaults(func=_cmd_evaluate)

    p_sweep = sub.add_parser("sweep", help="grid search over c_in / c_out / PCA size")
    _add_run_flags(p_sweep)
    p_sweep.add_argument("--sweep-c-in", dest="sweep_c_in", help="comma-separated c_in values")
    p_sweep.add_argument("--sweep-c-out", dest="sweep_c_out", help="comma-separated c_out values")
    p_sweep.add_argument("--sweep-components", dest="sweep_components",
                         help="comma-separated sparse PCA sizes")
    p_sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
