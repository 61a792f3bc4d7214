"""Pre-trained word-embedding table in the plain text format.

Each line is "token v_1 ... v_d" (whitespace separated). An optional first
line "V d" (two integers, vocabulary size and dimension) is detected and
skipped. Keys are lowercased; lookups of unknown tokens return None.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import ValidationError, normalize_token


class EmbeddingFormatError(ValidationError):
    """Malformed embedding file (ragged dimensions, non-numeric values)."""


@dataclass
class EmbeddingTable:
    """token -> vector map with a fixed dimension; immutable after load."""

    dim: int
    vectors: dict[str, np.ndarray]

    def lookup(self, token: str) -> np.ndarray | None:
        """Stored vector for the normalized token, or None when OOV."""
        return self.vectors.get(normalize_token(token))

    def __contains__(self, token: str) -> bool:
        return normalize_token(token) in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


def _is_header(fields: list[str]) -> bool:
    if len(fields) != 2:
        return False
    try:
        int(fields[0]), int(fields[1])
    except ValueError:
        return False
    return True


def load_embeddings(path: str | Path, expected_dim: int | None = None) -> EmbeddingTable:
    """Load a text embedding file; dimension is inferred from the first entry.

    Duplicate tokens (after lowercasing) keep their first vector with a
    warning. A dimension mismatch or non-numeric component raises
    EmbeddingFormatError naming the offending line.
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"embeddings file not found: {path}")
    dim = expected_dim
    vectors: dict[str, np.ndarray] = {}
    duplicates: list[str] = []
    first_data_line = True
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            if first_data_line and _is_header(fields):
                first_data_line = False
                continue
            first_data_line = False
            token, components = fields[0], fields[1:]
            if dim is None:
                if not components:
                    raise EmbeddingFormatError(f"line {lineno}: no vector components")
                dim = len(components)
            if len(components) != dim:
                raise EmbeddingFormatError(
                    f"line {lineno}: expected {dim} components, got {len(components)}"
                )
            try:
                vec = np.array([float(c) for c in components], dtype=np.float64)
            except ValueError as exc:
                raise EmbeddingFormatError(
                    f"line {lineno}: non-numeric component: {exc}"
                ) from exc
            key = normalize_token(token)
            if key in vectors:
                duplicates.append(key)
                continue
            vectors[key] = vec
    if dim is None:
        raise EmbeddingFormatError(f"{path}: no embedding entries found")
    if duplicates:
        warnings.warn(
            f"{len(duplicates)} duplicate embedding tokens kept first occurrence "
            f"(e.g. {duplicates[0]!r})",
            stacklevel=2,
        )
    return EmbeddingTable(dim=dim, vectors=vectors)


def save_embeddings(table: EmbeddingTable, path: str | Path, header: bool = False) -> None:
    """Write the table in the same text format (sorted tokens, %.6f values)."""
    with Path(path).open("w", encoding="utf-8") as fh:
        if header:
            fh.write(f"{len(table.vectors)} {table.dim}\n")
        for token in sorted(table.vectors):
            vals = " ".join(f"{v:.6f}" for v in table.vectors[token])
            fh.write(f"{token} {vals}\n")
