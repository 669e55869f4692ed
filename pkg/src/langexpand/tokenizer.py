"""Byte-fallback BPE: training, tokenizer merging, encode/decode, fertility.

Token surfaces are byte strings. The initial symbol inventory is the 256
single bytes, so encoding is total on any UTF-8 input; learned merges build
larger surfaces on top. Pre-tokenization replaces U+0020 with the metaspace
marker U+2581, prepends one marker at text start, and splits before each
marker and around runs of other Unicode whitespace.

Known limitation: text containing a literal U+2581 decodes back as a space,
because marker bytes and literal-marker bytes are indistinguishable in token
surfaces (the usual metaspace trade-off).
"""

import json
import random
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import DataError, ValidationError
from .jsonl import atomic_write_text

METASPACE = "▁"

NUM_BYTE_TOKENS = 256

# Pairs with a single occurrence are never merged; a merge learned from one
# occurrence cannot generalize and would just memorize the corpus.
MIN_PAIR_FREQ = 2

_ESCAPE_RE = re.compile(r"<0x([0-9A-Fa-f]{2})>")


@dataclass(frozen=True)
class TokenizerModel:
    """Immutable BPE model: byte-string vocab, ranked merges, special surfaces."""

    vocab: dict  # bytes -> int, dense ids 0..|V|-1
    merges: tuple  # ((left: bytes, right: bytes), ...), rank = index
    specials: tuple  # (str, ...)

    # derived lookups, filled in __post_init__
    id_to_surface: tuple = field(default=(), compare=False, repr=False)
    merge_ranks: dict = field(default_factory=dict, compare=False, repr=False)
    special_ids: frozenset = field(default=frozenset(), compare=False, repr=False)

    def __post_init__(self):
        ids = sorted(self.vocab.values())
        if ids != list(range(len(self.vocab))):
            raise DataError("token ids must be dense and unique")
        for b in range(NUM_BYTE_TOKENS):
            if bytes([b]) not in self.vocab:
                raise DataError(f"byte token 0x{b:02X} missing from vocab")
        for left, right in self.merges:
            if left + right not in self.vocab:
                raise DataError(f"merge output {left + right!r} not in vocab")
        for surface in self.specials:
            if not surface:
                raise DataError("empty special-token surface")
            if surface.encode("utf-8") not in self.vocab:
                raise DataError(f"special token {surface!r} not in vocab")
        id2s = [b""] * len(self.vocab)
        for surface, tid in self.vocab.items():
            id2s[tid] = surface
        object.__setattr__(self, "id_to_surface", tuple(id2s))
        object.__setattr__(
            self, "merge_ranks", {pair: rank for rank, pair in enumerate(self.merges)}
        )
        object.__setattr__(
            self,
            "special_ids",
            frozenset(self.vocab[s.encode("utf-8")] for s in self.specials),
        )
        if self.specials:
            pattern = "|".join(
                re.escape(s) for s in sorted(self.specials, key=len, reverse=True)
            )
            object.__setattr__(self, "_special_re", re.compile(pattern))
        else:
            object.__setattr__(self, "_special_re", None)

    def __len__(self):
        return len(self.vocab)


@dataclass(frozen=True)
class FertilityReport:
    corpus_id: str
    token_count: int
    word_count: int
    fertility: float
    sample_seed: int
    sample_size: int

    def to_dict(self) -> dict:
        return {
            "corpus_id": self.corpus_id,
            "token_count": self.token_count,
            "word_count": self.word_count,
            "fertility": self.fertility,
            "sample_seed": self.sample_seed,
            "sample_size": self.sample_size,
        }


@dataclass(frozen=True)
class DecodedText:
    text: str
    had_invalid_utf8: bool


# One piece per metaspace-marked word, per run of non-space whitespace, or
# per bare run (can occur right after non-space whitespace).
_PIECE_RE = re.compile(r"▁[^▁\s]*|\s+|[^▁\s]+")


def pretokenize(text: str, add_prefix: bool = True) -> list:
    """Split text into BPE pre-tokens. Concatenation is lossless up to the
    marker substitution inverted by decode."""
    if not text:
        return []
    s = text.replace(" ", METASPACE)
    if add_prefix:
        s = METASPACE + s
    return _PIECE_RE.findall(s)


def _apply_merges(symbols: list, merge_ranks: dict) -> list:
    """Greedy lowest-rank-first merge application over byte-string symbols."""
    while len(symbols) > 1:
        best_rank = None
        best_i = -1
        for i in range(len(symbols) - 1):
            rank = merge_ranks.get((symbols[i], symbols[i + 1]))
            if rank is not None and (best_rank is None or rank < best_rank):
                best_rank = rank
                best_i = i
        if best_rank is None:
            break
        symbols[best_i : best_i + 2] = [symbols[best_i] + symbols[best_i + 1]]
    return symbols


def encode_piece(model: TokenizerModel, piece_bytes: bytes) -> list:
    """BPE-encode one pre-token's raw bytes (no pre-tokenization, no specials)."""
    symbols = _apply_merges([bytes([b]) for b in piece_bytes], model.merge_ranks)
    out = []
    for sym in symbols:
        tid = model.vocab.get(sym)
        if tid is None:
            # surface not in vocab (merge budget ran out mid-path): byte fallback
            out.extend(model.vocab[bytes([b])] for b in sym)
        else:
            out.append(tid)
    return out


def _split_specials(model: TokenizerModel, text: str):
    """Yield (is_special, segment) preserving order; longest special wins."""
    regex = model._special_re
    if regex is None:
        if text:
            yield False, text
        return
    pos = 0
    for match in regex.finditer(text):
        if match.start() > pos:
            yield False, text[pos : match.start()]
        yield True, match.group(0)
        pos = match.end()
    if pos < len(text):
        yield False, text[pos:]


def encode(model: TokenizerModel, text: str) -> list:
    """Encode text to token ids. Special surfaces are matched atomically."""
    ids = []
    first = True
    for is_special, segment in _split_specials(model, text):
        if is_special:
            ids.append(model.vocab[segment.encode("utf-8")])
        else:
            for piece in pretokenize(segment, add_prefix=first):
                ids.extend(encode_piece(model, piece.encode("utf-8")))
        first = False
    return ids


def decode_full(model: TokenizerModel, ids: Sequence[int]) -> DecodedText:
    """Decode ids to text; invalid UTF-8 becomes U+FFFD and sets the flag."""
    parts = []
    buf = bytearray()
    had_invalid = False

    def flush():
        nonlocal had_invalid
        if not buf:
            return
        raw = bytes(buf)
        buf.clear()
        try:
            s = raw.decode("utf-8")
        except UnicodeDecodeError:
            s = raw.decode("utf-8", errors="replace")
            had_invalid = True
        parts.append(s.replace(METASPACE, " "))

    for tid in ids:
        if not isinstance(tid, int) or tid < 0 or tid >= len(model.id_to_surface):
            raise DataError(f"token id {tid!r} out of range for vocab of {len(model)}")
        if tid in model.special_ids:
            flush()
            parts.append(model.id_to_surface[tid].decode("utf-8"))
        else:
            buf.extend(model.id_to_surface[tid])
    flush()
    text = "".join(parts)
    if text.startswith(" "):
        text = text[1:]
    return DecodedText(text=text, had_invalid_utf8=had_invalid)


def decode(model: TokenizerModel, ids: Sequence[int]) -> str:
    return decode_full(model, ids).text


def _base_vocab(specials: Sequence[str]) -> dict:
    vocab = {}
    for surface in specials:
        b = surface.encode("utf-8")
        if b in vocab:
            raise ValidationError(f"duplicate special token {surface!r}")
        vocab[b] = len(vocab)
    for b in range(NUM_BYTE_TOKENS):
        key = bytes([b])
        if key not in vocab:
            vocab[key] = len(vocab)
    return vocab


def train_bpe(
    corpus: Iterable[str],
    vocab_size: int,
    specials: Sequence[str] = (),
    seed: int = 0,
) -> TokenizerModel:
    """Learn a byte-fallback BPE model from a document stream.

    Merges are chosen greedily by pair frequency; ties break by lexicographic
    order of the concatenated pair surface (byte order). `seed` is accepted
    for interface uniformity; training is fully deterministic.
    """
    del seed
    specials = tuple(specials)
    if vocab_size < NUM_BYTE_TOKENS + len(specials):
        raise ValidationError(
            f"vocab_size {vocab_size} < {NUM_BYTE_TOKENS} byte tokens"
            f" + {len(specials)} specials"
        )
    word_counts = Counter()
    saw_doc = False
    for doc in corpus:
        saw_doc = True
        for piece in pretokenize(doc):
            word_counts[piece.encode("utf-8")] += 1
    if not saw_doc:
        raise ValidationError("empty corpus")

    vocab = _base_vocab(specials)
    words = {w: [bytes([b]) for b in w] for w in word_counts}
    merges = []
    while len(vocab) < vocab_size:
        pair_counts = Counter()
        for w, symbols in words.items():
            count = word_counts[w]
            for i in range(len(symbols) - 1):
                pair_counts[(symbols[i], symbols[i + 1])] += count
        if not pair_counts:
            break
        best_pair = min(pair_counts, key=lambda p: (-pair_counts[p], p[0] + p[1]))
        if pair_counts[best_pair] < MIN_PAIR_FREQ:
            break
        left, right = best_pair
        merged = left + right
        merges.append(best_pair)
        if merged not in vocab:
            vocab[merged] = len(vocab)
        for symbols in words.values():
            i = 0
            while i < len(symbols) - 1:
                if symbols[i] == left and symbols[i + 1] == right:
                    symbols[i : i + 2] = [merged]
                else:
                    i += 1
    return TokenizerModel(vocab=vocab, merges=tuple(merges), specials=specials)


def merge_tokenizers(
    original: TokenizerModel, language_specific: TokenizerModel
) -> TokenizerModel:
    """Append the language-specific tokenizer's novel tokens and merges.

    Original ids are preserved unchanged so downstream embedding expansion can
    keep the original rows intact.
    """
    orig_specials = set(original.specials)
    lang_specials = set(language_specific.specials)
    for surface in lang_specials - orig_specials:
        if surface.encode("utf-8") in original.vocab:
            raise ValidationError(
                f"special {surface!r} in language tokenizer is a plain token"
                " in the original"
            )
    for surface in orig_specials - lang_specials:
        if surface.encode("utf-8") in language_specific.vocab:
            raise ValidationError(
                f"special {surface!r} in original tokenizer is a plain token"
                " in the language-specific one"
            )

    vocab = dict(original.vocab)
    for surface, _tid in sorted(language_specific.vocab.items(), key=lambda kv: kv[1]):
        if surface not in vocab:
            vocab[surface] = len(vocab)
    seen = set(original.merges)
    merges = list(original.merges)
    for pair in language_specific.merges:
        if pair not in seen:
            merges.append(pair)
            seen.add(pair)
    specials = original.specials + tuple(
        s for s in language_specific.specials if s not in orig_specials
    )
    return TokenizerModel(vocab=vocab, merges=tuple(merges), specials=specials)


def word_count(text: str) -> int:
    return len(text.split())


def fertility(
    model: TokenizerModel,
    corpus: Iterable[str],
    sample_size: int,
    seed: int,
    corpus_id: str = "",
) -> FertilityReport:
    """Tokens-per-word over a seeded uniform subsample of the corpus."""
    docs = list(corpus)
    if not docs:
        raise ValidationError("empty corpus")
    if sample_size < len(docs):
        docs = random.Random(seed).sample(docs, sample_size)
    tokens = sum(len(encode(model, d)) for d in docs)
    words = sum(word_count(d) for d in docs)
    if words == 0:
        raise DataError("sampled documents contain zero words")
    return FertilityReport(
        corpus_id=corpus_id,
        token_count=tokens,
        word_count=words,
        fertility=tokens / words,
        sample_seed=seed,
        sample_size=len(docs),
    )


def _surface_to_text(surface: bytes) -> str:
    try:
        s = surface.decode("utf-8")
    except UnicodeDecodeError:
        return "".join(f"<0x{b:02X}>" for b in surface)
    return s.replace("<", "<0x3C>")


def _text_to_surface(text: str) -> bytes:
    out = bytearray()
    pos = 0
    for match in _ESCAPE_RE.finditer(text):
        out.extend(text[pos : match.start()].encode("utf-8"))
        out.append(int(match.group(1), 16))
        pos = match.end()
    out.extend(text[pos:].encode("utf-8"))
    return bytes(out)


def save_tokenizer(model: TokenizerModel, path: str) -> None:
    by_id = sorted(model.vocab.items(), key=lambda kv: kv[1])
    payload = {
        "version": 1,
        "specials": [_surface_to_text(s.encode("utf-8")) for s in model.specials],
        "vocab": {_surface_to_text(surface): tid for surface, tid in by_id},
        "merges": [
            [_surface_to_text(left), _surface_to_text(right)]
            for left, right in model.merges
        ],
    }
    atomic_write_text(path, json.dumps(payload, ensure_ascii=False, indent=1) + "\n")


def load_tokenizer(path: str) -> TokenizerModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid tokenizer file: {exc}") from exc
    if payload.get("version") != 1:
        raise DataError(f"{path}: unsupported tokenizer file version")
    vocab = {_text_to_surface(k): v for k, v in payload["vocab"].items()}
    merges = tuple(
        (_text_to_surface(left), _text_to_surface(right))
        for left, right in payload["merges"]
    )
    specials = tuple(
        _text_to_surface(s).decode("utf-8") for s in payload["specials"]
    )
    return TokenizerModel(vocab=vocab, merges=merges, specials=specials)
