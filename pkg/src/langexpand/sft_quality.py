"""SFT dataset quality: word-count/diversity metrics, near-dedup, noise flags.

Lexical diversity follows the corpus-wide definition: 100 x unique
non-stopwords / total non-stopwords, computed separately over all prompts
(concatenated user turns) and all responses (concatenated assistant turns).
"""

import hashlib
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import DataError, ValidationError

ROLES = ("user", "assistant")


@dataclass(frozen=True)
class Turn:
    role: str
    text: str


@dataclass(frozen=True)
class SftSample:
    id: str
    conversation: Tuple[Turn, ...]
    language: str = ""
    source: str = ""

    def __post_init__(self):
        object.__setattr__(
            self, "conversation", tuple(Turn(t.role, t.text) for t in self.conversation)
        )
        for turn in self.conversation:
            if turn.role not in ROLES:
                raise DataError(f"sample {self.id}: unknown role {turn.role!r}")

    def prompt_text(self) -> str:
        return "\n".join(t.text for t in self.conversation if t.role == "user")

    def response_text(self) -> str:
        return "\n".join(t.text for t in self.conversation if t.role == "assistant")

    def assistant_turns(self) -> List[Turn]:
        return [t for t in self.conversation if t.role == "assistant"]

    def full_text(self) -> str:
        return "\n".join(t.text for t in self.conversation)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "language": self.language,
            "source": self.source,
            "conversation": [{"role": t.role, "text": t.text} for t in self.conversation],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SftSample":
        try:
            turns = tuple(Turn(t["role"], t["text"]) for t in d["conversation"])
            return cls(
                id=str(d["id"]),
                conversation=turns,
                language=d.get("language", ""),
                source=d.get("source", ""),
            )
        except KeyError as exc:
            raise DataError(f"sft record missing field {exc}") from exc


def validate_structure(sample: SftSample) -> Optional[str]:
    """Return the violated rule name, or None for a well-formed conversation."""
    conv = sample.conversation
    if not conv:
        return "role_violation"
    if conv[0].role != "user":
        return "role_violation"
    for prev, cur in zip(conv, conv[1:]):
        if prev.role == cur.role:
            return "role_violation"
    if conv[-1].role != "assistant":
        return "role_violation"
    return None


@dataclass
class QualityReport:
    sample_count: int
    avg_prompt_words: float
    avg_response_words: float
    lexical_diversity_prompt: float
    lexical_diversity_response: float
    turn_histogram: Dict[int, int]
    flagged: Dict[str, List[str]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "sample_count": self.sample_count,
            "avg_prompt_words": self.avg_prompt_words,
            "avg_response_words": self.avg_response_words,
            "lexical_diversity_prompt": self.lexical_diversity_prompt,
            "lexical_diversity_response": self.lexical_diversity_response,
            "turn_histogram": {str(k): v for k, v in sorted(self.turn_histogram.items())},
            "flagged": {k: list(v) for k, v in self.flagged.items()},
        }


def _diversity(words: List[str], stopwords: frozenset) -> Tuple[float, bool]:
    kept = [w for w in words if w not in stopwords]
    if not kept:
        return 0.0, True  # degenerate denominator, flagged instead of erroring
    return 100.0 * len(set(kept)) / len(kept), False


def quality_metrics(
    samples: Sequence[SftSample], stopword_list: Iterable[str] = ()
) -> QualityReport:
    stopwords = frozenset(stopword_list)
    samples = list(samples)
    if not samples:
        raise ValidationError("no samples")
    prompt_words: List[str] = []
    response_words: List[str] = []
    prompt_counts = []
    response_counts = []
    histogram: Dict[int, int] = {}
    for s in samples:
        pw = s.prompt_text().split()
        rw = s.response_text().split()
        prompt_words.extend(pw)
        response_words.extend(rw)
        prompt_counts.append(len(pw))
        response_counts.append(len(rw))
        turns = len(s.conversation)
        histogram[turns] = histogram.get(turns, 0) + 1
    div_p, flag_p = _diversity(prompt_words, stopwords)
    div_r, flag_r = _diversity(response_words, stopwords)
    flagged: Dict[str, List[str]] = {}
    if flag_p:
        flagged["diversity_undefined_prompt"] = [s.id for s in samples]
    if flag_r:
        flagged["diversity_undefined_response"] = [s.id for s in samples]
    return QualityReport(
        sample_count=len(samples),
        avg_prompt_words=sum(prompt_counts) / len(samples),
        avg_response_words=sum(response_counts) / len(samples),
        lexical_diversity_prompt=div_p,
        lexical_diversity_response=div_r,
        turn_histogram=histogram,
        flagged=flagged,
    )


_WS_RE = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """Casefold, NFKC-normalize, strip punctuation, collapse whitespace."""
    text = unicodedata.normalize("NFKC", text.casefold())
    chars = [
        c for c in text if not unicodedata.category(c).startswith("P")
    ]
    return _WS_RE.sub(" ", "".join(chars)).strip()


def _normalized_key(sample: SftSample) -> bytes:
    return hashlib.sha256(normalize_text(sample.full_text()).encode("utf-8")).digest()


def _word_ngrams(text: str, n: int = 3) -> frozenset:
    words = text.split()
    if len(words) < n:
        return frozenset([tuple(words)]) if words else frozenset()
    return frozenset(tuple(words[i : i + n]) for i in range(len(words) - n + 1))


def jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def dedup_near(
    samples: Sequence[SftSample],
    mode: str = "normalized_exact",
    jaccard_threshold: float = 0.9,
) -> Tuple[List[SftSample], List[str]]:
    """First-occurrence dedup; returns (kept samples, dropped ids)."""
    if mode not in ("normalized_exact", "ngram_jaccard"):
        raise ValidationError(f"unknown dedup mode {mode!r}")
    kept: List[SftSample] = []
    dropped: List[str] = []
    if mode == "normalized_exact":
        seen = set()
        for s in samples:
            key = _normalized_key(s)
            if key in seen:
                dropped.append(s.id)
            else:
                seen.add(key)
                kept.append(s)
        return kept, dropped
    if not 0.0 < jaccard_threshold <= 1.0:
        raise ValidationError("jaccard_threshold must be in (0,1]")
    kept_grams: List[frozenset] = []
    for s in samples:
        grams = _word_ngrams(normalize_text(s.full_text()))
        if any(jaccard(grams, g) >= jaccard_threshold for g in kept_grams):
            dropped.append(s.id)
        else:
            kept_grams.append(grams)
            kept.append(s)
    return kept, dropped


_FENCE_RE = re.compile(r"```")
_BRACKETS = {"(": ")", "[": "]", "{": "}"}


def has_unbalanced_markup(text: str, max_bracket_imbalance: int = 2) -> bool:
    """Odd number of ``` fences, or bracket imbalance beyond the allowance."""
    if len(_FENCE_RE.findall(text)) % 2 == 1:
        return True
    imbalance = sum(
        abs(text.count(open_ch) - text.count(close_ch))
        for open_ch, close_ch in _BRACKETS.items()
    )
    return imbalance > max_bracket_imbalance


@dataclass(frozen=True)
class NoiseConfig:
    empty_response: bool = True
    role_violation: bool = True
    unbalanced_markup: bool = True
    # off by default: a percentile rule always flags something on clean data
    length_outlier: bool = False
    max_markup_imbalance: int = 2
    length_percentile: float = 99.5


def flag_noise(
    samples: Sequence[SftSample], config: NoiseConfig = NoiseConfig()
) -> Dict[str, List[str]]:
    flagged: Dict[str, List[str]] = {}

    def flag(rule: str, sample_id: str):
        flagged.setdefault(rule, []).append(sample_id)

    response_lengths = []
    for s in samples:
        if config.empty_response and any(
            not t.text.strip() for t in s.assistant_turns()
        ):
            flag("empty_response", s.id)
        if config.role_violation and validate_structure(s) is not None:
            flag("role_violation", s.id)
        if config.unbalanced_markup and has_unbalanced_markup(
            s.response_text(), config.max_markup_imbalance
        ):
            flag("unbalanced_markup", s.id)
        response_lengths.append(len(s.response_text().split()))
    if config.length_outlier and samples:
        cutoff_idx = int((len(samples) - 1) * config.length_percentile / 100.0)
        cutoff = sorted(response_lengths)[cutoff_idx]
        for s, length in zip(samples, response_lengths):
            if length > cutoff:
                flag("length_outlier", s.id)
    return flagged
