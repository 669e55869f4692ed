"""Pretraining web-data filters: language score, length, URL/stopword, exact dedup.

Each filter is a pure, order-preserving function of (documents, parameters)
and returns the kept documents plus a report whose counts reconcile exactly
with the input size.
"""

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import DataError, ValidationError

DEFAULT_LANG_THRESHOLD = 0.95
DEFAULT_MIN_WORDS = 30
# the stopword-ratio cutoff is a config default; upstream only says "high ratio"
DEFAULT_MAX_STOPWORD_RATIO = 0.7

DOMAINS = ("web", "books", "wiki", "news", "science", "code", "math", "other")


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    lang: str = ""
    lang_score: float = 1.0
    url: Optional[str] = None
    domain: str = "web"
    origin: str = "natural"

    def __post_init__(self):
        if not 0.0 <= self.lang_score <= 1.0:
            raise DataError(f"doc {self.id}: lang_score must be in [0,1]")
        if self.origin not in ("natural", "translated"):
            raise DataError(f"doc {self.id}: origin must be natural|translated")

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "text": self.text,
            "lang": self.lang,
            "lang_score": self.lang_score,
            "domain": self.domain,
            "origin": self.origin,
        }
        if self.url is not None:
            d["url"] = self.url
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Document":
        try:
            return cls(
                id=str(d["id"]),
                text=d["text"],
                lang=d.get("lang", ""),
                lang_score=float(d.get("lang_score", 1.0)),
                url=d.get("url"),
                domain=d.get("domain", "web"),
                origin=d.get("origin", "natural"),
            )
        except KeyError as exc:
            raise DataError(f"document record missing field {exc}") from exc


@dataclass
class FilterReport:
    input_count: int = 0
    kept_count: int = 0
    dropped_by_rule: dict = field(default_factory=dict)

    def check(self):
        if self.input_count != self.kept_count + sum(self.dropped_by_rule.values()):
            raise DataError("filter report counts do not reconcile")

    def to_dict(self) -> dict:
        return {
            "input_count": self.input_count,
            "kept_count": self.kept_count,
            "dropped_by_rule": dict(self.dropped_by_rule),
        }

    @staticmethod
    def merged(reports: Sequence["FilterReport"]) -> "FilterReport":
        """Chain reports from sequential pipeline stages."""
        if not reports:
            return FilterReport()
        out = FilterReport(
            input_count=reports[0].input_count, kept_count=reports[-1].kept_count
        )
        for r in reports:
            for rule, n in r.dropped_by_rule.items():
                out.dropped_by_rule[rule] = out.dropped_by_rule.get(rule, 0) + n
        out.check()
        return out


def _run_rule(docs, rule_name, keep_fn):
    kept = []
    dropped = 0
    n = 0
    for doc in docs:
        n += 1
        if keep_fn(doc):
            kept.append(doc)
        else:
            dropped += 1
    report = FilterReport(input_count=n, kept_count=len(kept))
    report.dropped_by_rule[rule_name] = dropped
    report.check()
    return kept, report


def filter_language(docs: Iterable[Document], threshold: float = DEFAULT_LANG_THRESHOLD):
    """Keep documents with lang_score >= threshold (boundary inclusive)."""
    if not 0.0 <= threshold <= 1.0:
        raise ValidationError("threshold must be in [0,1]")
    return _run_rule(docs, "language", lambda d: d.lang_score >= threshold)


def filter_short(docs: Iterable[Document], min_words: int = DEFAULT_MIN_WORDS):
    if min_words < 1:
        raise ValidationError("min_words must be >= 1")
    return _run_rule(docs, "short", lambda d: len(d.text.split()) >= min_words)


def filter_url_and_stopwords(
    docs: Iterable[Document],
    stopword_list: Sequence[str] = (),
    max_stopword_ratio: Optional[float] = DEFAULT_MAX_STOPWORD_RATIO,
):
    """Drop later duplicates of a URL and documents dominated by stopwords.

    Documents without a URL bypass the URL rule. Pass max_stopword_ratio=None
    to disable the ratio rule.
    """
    stopwords = frozenset(w.casefold() for w in stopword_list)
    if max_stopword_ratio is not None and not stopwords:
        raise ValidationError("stopword ratio filter enabled but list is empty")
    seen_urls = set()
    kept = []
    report = FilterReport()
    report.dropped_by_rule = {"duplicate_url": 0, "stopword_ratio": 0}
    for doc in docs:
        report.input_count += 1
        if doc.url is not None:
            if doc.url in seen_urls:
                report.dropped_by_rule["duplicate_url"] += 1
                continue
            seen_urls.add(doc.url)
        if max_stopword_ratio is not None:
            words = [w.casefold() for w in doc.text.split()]
            if words:
                ratio = sum(w in stopwords for w in words) / len(words)
                if ratio > max_stopword_ratio:
                    report.dropped_by_rule["stopword_ratio"] += 1
                    continue
        kept.append(doc)
    report.kept_count = len(kept)
    report.check()
    return kept, report


def dedup_exact(docs: Iterable[Document]):
    """Keep the first occurrence of each exact text (by hash of raw bytes)."""
    seen = set()
    kept = []
    report = FilterReport()
    report.dropped_by_rule = {"duplicate_text": 0}
    for doc in docs:
        report.input_count += 1
        digest = hashlib.sha256(doc.text.encode("utf-8")).digest()
        if digest in seen:
            report.dropped_by_rule["duplicate_text"] += 1
            continue
        seen.add(digest)
        kept.append(doc)
    report.kept_count = len(kept)
    report.check()
    return kept, report


def filter_pipeline(
    docs: Iterable[Document],
    lang_threshold: float = DEFAULT_LANG_THRESHOLD,
    min_words: int = DEFAULT_MIN_WORDS,
    stopword_list: Sequence[str] = (),
    max_stopword_ratio: Optional[float] = DEFAULT_MAX_STOPWORD_RATIO,
):
    """Apply the four web-data rules in order; equals chaining them one by one."""
    docs = list(docs)
    kept, r1 = filter_language(docs, lang_threshold)
    kept, r2 = filter_short(kept, min_words)
    kept, r3 = filter_url_and_stopwords(kept, stopword_list, max_stopword_ratio)
    kept, r4 = dedup_exact(kept)
    return kept, FilterReport.merged([r1, r2, r3, r4])


def heuristic_lang_score(text: str, lang: str) -> float:
    """Fixture-only language scorer: script-character ratio.

    For "ar" scores the Arabic-script fraction of non-space characters, for
    "en" the Basic-Latin letter fraction. Not a real language identifier.
    """
    chars = [c for c in text if not c.isspace()]
    if not chars:
        return 0.0
    if lang == "ar":
        hits = sum("؀" <= c <= "ۿ" for c in chars)
    elif lang == "en":
        hits = sum(("a" <= c <= "z") or ("A" <= c <= "Z") for c in chars)
    else:
        raise ValidationError(f"heuristic scorer supports ar|en, not {lang!r}")
    return hits / len(chars)
