"""Data-mixture planning: per-source weights, upsample factors, token shares.

A plan distributes a total token budget across sources so that language
targets hold exactly; within a language, domain targets (renormalized over
the domains that language actually has) apply when given, otherwise sources
are weighted proportionally to their available tokens. Integer token targets
sum exactly to the budget: the rounding residue goes to the largest entry.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import DataError, ValidationError

TARGET_SUM_TOL = 1e-9


@dataclass(frozen=True)
class SourceSpec:
    name: str
    language: str
    domain: str
    available_tokens: int
    origin: str = "natural"

    def __post_init__(self):
        if self.available_tokens <= 0:
            raise ValidationError(f"source {self.name}: available_tokens must be > 0")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "language": self.language,
            "domain": self.domain,
            "origin": self.origin,
            "available_tokens": self.available_tokens,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SourceSpec":
        try:
            return cls(
                name=d["name"],
                language=d["language"],
                domain=d.get("domain", "web"),
                origin=d.get("origin", "natural"),
                available_tokens=int(d["available_tokens"]),
            )
        except KeyError as exc:
            raise DataError(f"source spec missing field {exc}") from exc


@dataclass(frozen=True)
class PlanEntry:
    source: str
    weight: float
    target_tokens: int
    epochs: float  # > 1 means the source is upsampled


@dataclass(frozen=True)
class MixturePlan:
    total_tokens: int
    entries: Tuple[PlanEntry, ...]
    language_shares: Dict[str, float]
    domain_shares: Dict[str, float]

    def entry(self, source: str) -> PlanEntry:
        for e in self.entries:
            if e.source == source:
                return e
        raise DataError(f"no plan entry for source {source!r}")

    def to_dict(self) -> dict:
        return {
            "total_tokens": self.total_tokens,
            "entries": [
                {
                    "source": e.source,
                    "weight": e.weight,
                    "target_tokens": e.target_tokens,
                    "epochs": e.epochs,
                }
                for e in self.entries
            ],
            "language_shares": dict(self.language_shares),
            "domain_shares": dict(self.domain_shares),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MixturePlan":
        return cls(
            total_tokens=int(d["total_tokens"]),
            entries=tuple(
                PlanEntry(
                    source=e["source"],
                    weight=float(e["weight"]),
                    target_tokens=int(e["target_tokens"]),
                    epochs=float(e["epochs"]),
                )
                for e in d["entries"]
            ),
            language_shares=dict(d["language_shares"]),
            domain_shares=dict(d["domain_shares"]),
        )


def _check_targets(targets: Dict[str, float], what: str):
    total = sum(targets.values())
    if abs(total - 1.0) > TARGET_SUM_TOL:
        raise ValidationError(f"{what} targets sum to {total}, expected 1")
    for key, frac in targets.items():
        if frac < 0:
            raise ValidationError(f"{what} target for {key!r} is negative")


def plan_mixture(
    sources: Sequence[SourceSpec],
    language_targets: Dict[str, float],
    domain_targets: Optional[Dict[str, float]] = None,
    total_tokens: int = 0,
) -> MixturePlan:
    if total_tokens <= 0:
        raise ValidationError("total_tokens must be > 0")
    _check_targets(language_targets, "language")
    if domain_targets is not None:
        _check_targets(domain_targets, "domain")
        all_domains = {s.domain for s in sources}
        for domain, frac in domain_targets.items():
            if frac > 0 and domain not in all_domains:
                raise ValidationError(
                    f"domain target {domain!r} > 0 but no source provides it"
                )
    names = [s.name for s in sources]
    if len(set(names)) != len(names):
        raise ValidationError("duplicate source names")

    # canonical order: results are invariant to input source order
    sources = sorted(sources, key=lambda s: s.name)

    by_language: Dict[str, List[SourceSpec]] = {}
    for s in sources:
        by_language.setdefault(s.language, []).append(s)

    weights: Dict[str, float] = {}
    for language, lang_frac in language_targets.items():
        lang_sources = by_language.get(language, [])
        if not lang_sources:
            if lang_frac > 0:
                raise ValidationError(
                    f"language target {language!r} > 0 but no source provides it"
                )
            continue
        if domain_targets is not None:
            # domain targets are renormalized over the domains this language
            # actually has; language targets always win
            present = {s.domain for s in lang_sources}
            local = {d: f for d, f in domain_targets.items() if d in present}
            norm = sum(local.values())
            if norm <= 0:
                raise ValidationError(
                    f"domain targets give zero mass to language {language!r}"
                )
            for domain, frac in local.items():
                cell = [s for s in lang_sources if s.domain == domain]
                cell_avail = sum(s.available_tokens for s in cell)
                for s in cell:
                    weights[s.name] = (
                        lang_frac * (frac / norm) * s.available_tokens / cell_avail
                    )
        else:
            avail = sum(s.available_tokens for s in lang_sources)
            for s in lang_sources:
                weights[s.name] = lang_frac * s.available_tokens / avail
    for s in sources:
        weights.setdefault(s.name, 0.0)

    targets = {name: int(round(w * total_tokens)) for name, w in weights.items()}
    residue = total_tokens - sum(targets.values())
    largest = max(weights, key=lambda n: (weights[n], n))
    targets[largest] += residue

    entries = []
    language_shares: Dict[str, float] = {}
    domain_shares: Dict[str, float] = {}
    for s in sources:
        w = weights[s.name]
        entries.append(
            PlanEntry(
                source=s.name,
                weight=w,
                target_tokens=targets[s.name],
                epochs=targets[s.name] / s.available_tokens,
            )
        )
        language_shares[s.language] = language_shares.get(s.language, 0.0) + w
        domain_shares[s.domain] = domain_shares.get(s.domain, 0.0) + w
    return MixturePlan(
        total_tokens=total_tokens,
        entries=tuple(entries),
        language_shares=language_shares,
        domain_shares=domain_shares,
    )


def plan_grid(
    sources: Sequence[SourceSpec],
    ratio_list: Sequence[Tuple[float, float]],
    total_tokens: int,
    arabic: str = "ar",
    english: str = "en",
) -> List[MixturePlan]:
    """One plan per (arabic_fraction, english_fraction) pair, in list order."""
    plans = []
    for ar_frac, en_frac in ratio_list:
        if abs(ar_frac + en_frac - 1.0) > TARGET_SUM_TOL:
            raise ValidationError(f"ratio ({ar_frac}, {en_frac}) does not sum to 1")
        plans.append(
            plan_mixture(
                sources,
                {arabic: ar_frac, english: en_frac},
                total_tokens=total_tokens,
            )
        )
    return plans


@dataclass(frozen=True)
class ShareDeviation:
    kind: str  # "language" | "domain"
    key: str
    target: float
    realized: float

    @property
    def deviation(self) -> float:
        return abs(self.realized - self.target)


def verify_manifest(
    plan: MixturePlan,
    sampled_counts: Dict[str, int],
    sources: Sequence[SourceSpec],
    tolerance: float = 0.005,
):
    """Compare realized language/domain shares against the plan.

    Returns (passed, deviations). Counts must cover every plan source.
    """
    by_name = {s.name: s for s in sources}
    plan_sources = {e.source for e in plan.entries}
    for name in sampled_counts:
        if name not in plan_sources:
            raise DataError(f"unknown source {name!r} in sampled counts")
    missing = plan_sources - set(sampled_counts)
    if missing:
        raise DataError(f"sampled counts missing sources: {sorted(missing)}")

    total = sum(sampled_counts.values())
    if total <= 0:
        raise DataError("sampled counts sum to zero")
    realized_lang: Dict[str, float] = {}
    realized_domain: Dict[str, float] = {}
    for name, count in sampled_counts.items():
        spec = by_name.get(name)
        if spec is None:
            raise DataError(f"source {name!r} not in source specs")
        realized_lang[spec.language] = realized_lang.get(spec.language, 0.0) + count
        realized_domain[spec.domain] = realized_domain.get(spec.domain, 0.0) + count

    deviations = []
    for key, target in plan.language_shares.items():
        deviations.append(
            ShareDeviation("language", key, target, realized_lang.get(key, 0) / total)
        )
    for key, target in plan.domain_shares.items():
        deviations.append(
            ShareDeviation("domain", key, target, realized_domain.get(key, 0) / total)
        )
    passed = all(d.deviation <= tolerance for d in deviations)
    return passed, deviations
