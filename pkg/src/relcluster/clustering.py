"""Ward-linkage agglomerative clustering and a k-means baseline.

Merge costs are the Ward objective increase for joining clusters A and B:

    delta(A, B) = |A| * |B| / (|A| + |B|) * ||centroid(A) - centroid(B)||^2

so two singletons merge at half their squared Euclidean distance. Costs for
merged clusters are maintained with the Lance-Williams recurrence. Cluster
ids follow the usual convention: leaves are 0..n-1 and the i-th merge
creates id n+i. Ties on cost break toward the smallest (then second
smallest) cluster id, which makes every run deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .corpus import ValidationError


class Merge(NamedTuple):
    a: int
    b: int
    cost: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    n_leaves: int
    merges: tuple[Merge, ...]


@dataclass(frozen=True)
class ClusterAssignment:
    """Cluster labels aligned with ids; labels take at most k distinct values."""

    ids: tuple[str, ...]
    labels: tuple[int, ...]
    k: int

    @property
    def n(self) -> int:
        return len(self.ids)

    def as_dict(self) -> dict[str, int]:
        return dict(zip(self.ids, self.labels))


def _pairwise_half_sq(x: np.ndarray) -> np.ndarray:
    """Half squared Euclidean distances (the singleton-pair Ward cost)."""
    sq = np.einsum("ij,ij->i", x, x)
    d = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d, 0.0, out=d)
    return d / 2.0


def hac_ward(vectors: np.ndarray) -> Dendrogram:
    """Full agglomerative merge sequence under Ward's minimum-variance criterion."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValidationError(f"clustering needs an n x p matrix with n >= 2, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("clustering input contains non-finite values")
    n = x.shape[0]
    cost = _pairwise_half_sq(x)
    np.fill_diagonal(cost, np.inf)
    active = np.ones(n, dtype=bool)
    size = np.ones(n, dtype=np.int64)
    cluster_id = np.arange(n, dtype=np.int64)
    merges: list[Merge] = []
    prev_cost = -np.inf
    for step in range(n - 1):
        current = cost.min()
        # Candidate slot pairs at the minimum; break ties by cluster-id order.
        rows, cols = np.nonzero(cost == current)
        best: tuple[int, int] | None = None
        best_slots: tuple[int, int] = (-1, -1)
        for s1, s2 in zip(rows, cols):
            if s1 >= s2:
                continue
            ids = (int(cluster_id[s1]), int(cluster_id[s2]))
            pair = (min(ids), max(ids))
            if best is None or pair < best:
                best = pair
                best_slots = (int(s1), int(s2))
        assert best is not None
        s1, s2 = best_slots
        new_size = int(size[s1] + size[s2])
        merges.append(Merge(a=best[0], b=best[1], cost=float(current), size=new_size))
        # Ward costs are reducible, so the sequence cannot descend (allow
        # for float round-off in the recurrence).
        assert current >= prev_cost - 1e-9 * max(1.0, abs(prev_cost))
        prev_cost = current
        # Lance-Williams update into slot s1 for all remaining clusters.
        others = active.copy()
        others[s1] = False
        others[s2] = False
        sz = size[others].astype(np.float64)
        s1_sz, s2_sz = float(size[s1]), float(size[s2])
        updated = (
            (s1_sz + sz) * cost[s1, others]
            + (s2_sz + sz) * cost[s2, others]
            - sz * current
        ) / (s1_sz + s2_sz + sz)
        cost[s1, others] = updated
        cost[others, s1] = updated
        cost[s2, :] = np.inf
        cost[:, s2] = np.inf
        cost[s1, s1] = np.inf
        active[s2] = False
        size[s1] = new_size
        cluster_id[s1] = n + step
    return Dendrogram(n_leaves=n, merges=tuple(merges))


def cut_at_k(
    dendrogram: Dendrogram, k: int, ids: Sequence[str] | None = None
) -> ClusterAssignment:
    """Undo the last k-1 merges; label groups 0..k-1 by smallest contained leaf."""
    n = dendrogram.n_leaves
    if not (1 <= k <= n):
        raise ValidationError(f"k must be in [1, {n}], got {k}")
    if ids is None:
        ids = tuple(str(i) for i in range(n))
    else:
        ids = tuple(ids)
        if len(ids) != n:
            raise ValidationError(f"got {len(ids)} ids for {n} leaves")

    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    # A representative leaf for every cluster id created so far.
    rep: dict[int, int] = {i: i for i in range(n)}
    for step, merge in enumerate(dendrogram.merges[: n - k]):
        ra, rb = find(rep[merge.a]), find(rep[merge.b])
        parent[rb] = ra
        rep[n + step] = ra

    groups: dict[int, list[int]] = {}
    for leaf in range(n):
        groups.setdefault(find(leaf), []).append(leaf)
    ordered = sorted(groups.values(), key=lambda leaves: leaves[0])
    labels = [0] * n
    for label, leaves in enumerate(ordered):
        for leaf in leaves:
            labels[leaf] = label
    return ClusterAssignment(ids=ids, labels=tuple(labels), k=k)


def _kmeans_pp_centers(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: later centers drawn proportionally to squared distance."""
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = x[first]
    dist = np.einsum("ij,ij->i", x - centers[0], x - centers[0])
    for c in range(1, k):
        total = dist.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            cum = np.cumsum(dist / total)
            idx = int(np.searchsorted(cum, rng.random(), side="right"))
            idx = min(idx, n - 1)
        centers[c] = x[idx]
        new_d = np.einsum("ij,ij->i", x - centers[c], x - centers[c])
        np.minimum(dist, new_d, out=dist)
    return centers


def kmeans(
    vectors: np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = 100,
    ids: Sequence[str] | None = None,
) -> ClusterAssignment:
    """Lloyd's algorithm with k-means++ seeding; deterministic for a given seed.

    Empty clusters are re-seeded from the point farthest from its assigned
    centroid. Stops when assignments are stable or after max_iter sweeps.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValidationError(f"clustering needs an n x p matrix, got {x.shape}")
    n = x.shape[0]
    if not (1 <= k <= n):
        raise ValidationError(f"k must be in [1, {n}], got {k}")
    if max_iter < 1:
        raise ValidationError(f"max_iter must be positive, got {max_iter}")
    if ids is None:
        ids = tuple(str(i) for i in range(n))
    else:
        ids = tuple(ids)
        if len(ids) != n:
            raise ValidationError(f"got {len(ids)} ids for {n} points")

    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_centers(x, k, rng)
    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        dists = (
            np.einsum("ij,ij->i", x, x)[:, None]
            - 2.0 * (x @ centers.T)
            + np.einsum("ij,ij->i", centers, centers)[None, :]
        )
        new_labels = np.argmin(dists, axis=1)
        point_d = dists[np.arange(n), new_labels]
        taken: set[int] = set()
        for c in range(k):
            if np.any(new_labels == c):
                continue
            order = np.argsort(-point_d, kind="stable")
            far = next(int(i) for i in order if int(i) not in taken)
            taken.add(far)
            new_labels[far] = c
            point_d[far] = 0.0
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = x[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
    return ClusterAssignment(ids=ids, labels=tuple(int(v) for v in labels), k=k)


def save_assignment(assignment: ClusterAssignment, path: str | Path) -> None:
    """TSV with header: instance_id, cluster_id."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("instance_id\tcluster_id\n")
        for inst_id, label in zip(assignment.ids, assignment.labels):
            fh.write(f"{inst_id}\t{label}\n")


def load_assignment(path: str | Path) -> ClusterAssignment:
    ids: list[str] = []
    labels: list[int] = []
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header.split("\t") != ["instance_id", "cluster_id"]:
            raise ValidationError(f"{path}: not an assignment file")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                inst_id, label = line.rstrip("\n").split("\t")
                labels.append(int(label))
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: bad assignment row") from exc
            ids.append(inst_id)
    k = max(labels) + 1 if labels else 0
    return ClusterAssignment(ids=tuple(ids), labels=tuple(labels), k=k)


def save_dendrogram(dendrogram: Dendrogram, path: str | Path) -> None:
    """TSV of merges with header: a_id, b_id, cost, size."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("a_id\tb_id\tcost\tsize\n")
        for merge in dendrogram.merges:
            fh.write(f"{merge.a}\t{merge.b}\t{merge.cost!r}\t{merge.size}\n")
