"""Embedding-matrix expansion for a merged vocabulary.

New rows are initialized either as the mean of the original embeddings of the
new token's decomposition under the original tokenizer (guaranteed non-empty
by byte fallback), or from a normal distribution matched to the original
matrix's per-dimension mean and global standard deviation.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import MatrixFormatError, ValidationError
from .jsonl import atomic_write_bytes
from .tokenizer import TokenizerModel, encode_piece

MAGIC = b"EMB1"
MAX_ELEMENTS = 1 << 34  # refuse absurd header values before allocating


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Row-major float32 matrix, one row per token id."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise ValidationError("embedding matrix must be 2-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("embedding matrix contains non-finite values")
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def expand_embeddings(
    original: EmbeddingMatrix,
    original_tok: TokenizerModel,
    merged_tok: TokenizerModel,
    mode: str = "averaged",
    seed: int = 0,
) -> EmbeddingMatrix:
    """Grow `original` to the merged vocab; original rows stay bit-identical."""
    if mode not in ("averaged", "random"):
        raise ValidationError(f"unknown mode {mode!r}")
    if original.rows != len(original_tok):
        raise ValidationError(
            f"matrix has {original.rows} rows but original vocab has"
            f" {len(original_tok)} tokens"
        )
    if len(merged_tok) < len(original_tok):
        raise ValidationError("merged vocab smaller than original vocab")
    for surface, tid in original_tok.vocab.items():
        if merged_tok.vocab.get(surface) != tid:
            raise ValidationError(
                "merged tokenizer does not preserve original token ids"
            )

    n_new = len(merged_tok) - len(original_tok)
    out = np.empty((len(merged_tok), original.dim), dtype=np.float32)
    out[: original.rows] = original.data

    if n_new == 0:
        return EmbeddingMatrix(out)

    if mode == "random":
        rng = np.random.default_rng(seed)
        mean = original.data.mean(axis=0, dtype=np.float64)
        std = float(original.data.std(dtype=np.float64))
        noise = rng.standard_normal((n_new, original.dim))
        out[original.rows :] = (mean + std * noise).astype(np.float32)
    else:
        new_surfaces = sorted(
            (
                (tid, surface)
                for surface, tid in merged_tok.vocab.items()
                if tid >= original.rows
            ),
        )
        for tid, surface in new_surfaces:
            # the surface keeps its metaspace bytes; tokenize it exactly as a
            # pre-token, never through whitespace pre-tokenization
            parts = encode_piece(original_tok, surface)
            out[tid] = original.data[parts].mean(axis=0, dtype=np.float64)
    return EmbeddingMatrix(out)


def save_matrix(matrix: EmbeddingMatrix, path: str) -> None:
    header = MAGIC + struct.pack("<II", matrix.rows, matrix.dim)
    body = np.ascontiguousarray(matrix.data, dtype="<f4").tobytes()
    atomic_write_bytes(path, header + body)


def load_matrix(path: str) -> EmbeddingMatrix:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:4] != MAGIC:
        raise MatrixFormatError("bad_magic", f"{path}: not an EMB1 matrix file")
    rows, dim = struct.unpack("<II", blob[4:12])
    if rows * dim > MAX_ELEMENTS:
        raise MatrixFormatError("overflow", f"{path}: rows*dim too large")
    expected = 12 + rows * dim * 4
    if len(blob) != expected:
        raise MatrixFormatError(
            "truncated",
            f"{path}: expected {expected} bytes for {rows}x{dim}, got {len(blob)}",
        )
    data = np.frombuffer(blob, dtype="<f4", offset=12).reshape(rows, dim)
    return EmbeddingMatrix(data.copy())
