import numpy as np
import pytest

from langexpand import (
    EmbeddingMatrix,
    MatrixFormatError,
    ValidationError,
    expand_embeddings,
    load_matrix,
    merge_tokenizers,
    save_matrix,
    train_bpe,
)
from langexpand.tokenizer import encode_piece


@pytest.fixture(scope="module")
def original_matrix(original_tok):
    rng = np.random.default_rng(42)
    return EmbeddingMatrix(
        rng.normal(0.1, 0.8, size=(len(original_tok), 64)).astype(np.float32)
    )


def brute_force_mean(matrix, ids):
    """Pure-Python component-wise mean, independent of numpy reductions."""
    dim = matrix.dim
    out = []
    for j in range(dim):
        total = 0.0
        for i in ids:
            total += float(matrix.data[i, j])
        out.append(total / len(ids))
    return out


class TestExpandAveraged:
    def test_prefix_rows_bit_identical(self, original_matrix, original_tok, merged_tok):
        out = expand_embeddings(original_matrix, original_tok, merged_tok, "averaged")
        assert out.rows == len(merged_tok)
        assert np.array_equal(
            out.data[: original_matrix.rows], original_matrix.data
        )

    def test_new_rows_match_brute_force_mean(
        self, original_matrix, original_tok, merged_tok
    ):
        out = expand_embeddings(original_matrix, original_tok, merged_tok, "averaged")
        new_tokens = [
            (tid, s) for s, tid in merged_tok.vocab.items() if tid >= original_matrix.rows
        ]
        assert len(new_tokens) >= 50
        for tid, surface in new_tokens[:60]:
            parts = encode_piece(original_tok, surface)
            expected = brute_force_mean(original_matrix, parts)
            np.testing.assert_allclose(out.data[tid], expected, atol=1e-6)

    def test_single_subtoken_copies_row(self, original_tok):
        lang = train_bpe(["qq qq qq"], vocab_size=300, specials=original_tok.specials)
        merged = merge_tokenizers(original_tok, lang)
        rng = np.random.default_rng(0)
        matrix = EmbeddingMatrix(
            rng.normal(size=(len(original_tok), 8)).astype(np.float32)
        )
        out = expand_embeddings(matrix, original_tok, merged, "averaged")
        for surface, tid in merged.vocab.items():
            if tid < matrix.rows:
                continue
            parts = encode_piece(original_tok, surface)
            if len(parts) == 1:
                assert np.array_equal(out.data[tid], matrix.data[parts[0]])

    def test_two_vector_mean(self):
        tok = train_bpe(["x y"], vocab_size=258)
        lang = train_bpe(["xy xy xy"], vocab_size=280)
        merged = merge_tokenizers(tok, lang)
        data = np.zeros((len(tok), 2), dtype=np.float32)
        data[tok.vocab[b"x"]] = (1.0, 0.0)
        data[tok.vocab[b"y"]] = (0.0, 1.0)
        out = expand_embeddings(EmbeddingMatrix(data), tok, merged, "averaged")
        tid = merged.vocab[b"xy"]
        assert out.data[tid].tolist() == [0.5, 0.5]

    def test_rows_inside_convex_hull(self, original_matrix, original_tok, merged_tok):
        out = expand_embeddings(original_matrix, original_tok, merged_tok, "averaged")
        eps = 1e-5
        for surface, tid in merged_tok.vocab.items():
            if tid < original_matrix.rows:
                continue
            parts = encode_piece(original_tok, surface)
            comp = original_matrix.data[parts]
            assert np.all(out.data[tid] >= comp.min(axis=0) - eps)
            assert np.all(out.data[tid] <= comp.max(axis=0) + eps)

    def test_no_nan_inf(self, original_matrix, original_tok, merged_tok):
        for mode in ("averaged", "random"):
            out = expand_embeddings(
                original_matrix, original_tok, merged_tok, mode, seed=5
            )
            assert np.all(np.isfinite(out.data))


class TestExpandRandom:
    def test_deterministic_for_seed(self, original_matrix, original_tok, merged_tok):
        a = expand_embeddings(original_matrix, original_tok, merged_tok, "random", 9)
        b = expand_embeddings(original_matrix, original_tok, merged_tok, "random", 9)
        assert np.array_equal(a.data, b.data)
        c = expand_embeddings(original_matrix, original_tok, merged_tok, "random", 10)
        assert not np.array_equal(a.data, c.data)

    def test_matches_original_statistics(self, original_matrix, original_tok, merged_tok):
        out = expand_embeddings(
            original_matrix, original_tok, merged_tok, "random", seed=1
        )
        new = out.data[original_matrix.rows :]
        assert abs(new.mean() - original_matrix.data.mean()) < 0.2
        assert abs(new.std() - original_matrix.data.std()) < 0.2

    def test_prefix_rows_bit_identical(self, original_matrix, original_tok, merged_tok):
        out = expand_embeddings(original_matrix, original_tok, merged_tok, "random", 3)
        assert np.array_equal(out.data[: original_matrix.rows], original_matrix.data)


class TestExpandValidation:
    def test_row_mismatch(self, original_tok, merged_tok):
        bad = EmbeddingMatrix(np.zeros((3, 4), dtype=np.float32))
        with pytest.raises(ValidationError):
            expand_embeddings(bad, original_tok, merged_tok, "averaged")

    def test_non_finite_rejected(self):
        data = np.zeros((2, 2), dtype=np.float32)
        data[0, 0] = np.nan
        with pytest.raises(ValidationError):
            EmbeddingMatrix(data)

    def test_unknown_mode(self, original_matrix, original_tok, merged_tok):
        with pytest.raises(ValidationError):
            expand_embeddings(original_matrix, original_tok, merged_tok, "xavier")

    def test_unrelated_tokenizers_rejected(self, original_matrix, original_tok):
        other = train_bpe(["zz zz zz"], vocab_size=280)
        with pytest.raises(ValidationError):
            expand_embeddings(original_matrix, original_tok, other, "averaged")


class TestMatrixFile:
    def test_round_trip(self, tmp_path):
        matrix = EmbeddingMatrix(
            np.arange(6, dtype=np.float32).reshape(2, 3) * 0.25
        )
        path = tmp_path / "m.emb"
        save_matrix(matrix, str(path))
        loaded = load_matrix(str(path))
        assert np.array_equal(loaded.data, matrix.data)

    def test_empty_matrix(self, tmp_path):
        matrix = EmbeddingMatrix(np.zeros((0, 5), dtype=np.float32))
        path = tmp_path / "m.emb"
        save_matrix(matrix, str(path))
        loaded = load_matrix(str(path))
        assert loaded.rows == 0 and loaded.dim == 5

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.emb"
        path.write_bytes(b"NOPE" + b"\x00" * 20)
        with pytest.raises(MatrixFormatError) as exc:
            load_matrix(str(path))
        assert exc.value.code == "bad_magic"

    def test_truncated(self, tmp_path):
        matrix = EmbeddingMatrix(np.ones((4, 4), dtype=np.float32))
        path = tmp_path / "m.emb"
        save_matrix(matrix, str(path))
        path.write_bytes(path.read_bytes()[:-7])
        with pytest.raises(MatrixFormatError) as exc:
            load_matrix(str(path))
        assert exc.value.code == "truncated"

    def test_overflow_header(self, tmp_path):
        import struct

        path = tmp_path / "m.emb"
        path.write_bytes(b"EMB1" + struct.pack("<II", 2**31, 2**31))
        with pytest.raises(MatrixFormatError) as exc:
            load_matrix(str(path))
        assert exc.value.code == "overflow"
