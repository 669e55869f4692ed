"""Preference-triplet construction from verified accepted responses plus
sampled candidate rejections, with noise filtering and a post-hoc audit.

Chosen is always the human-verified accepted text; no quality ordering is
enforced between chosen and rejected beyond inequality.
"""

import hashlib
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .corpus import FilterReport
from .errors import DataError
from .sft_quality import has_unbalanced_markup, normalize_text


@dataclass(frozen=True)
class Candidate:
    text: str
    temperature: float
    top_p: float
    policy: str  # on_policy | off_policy

    def __post_init__(self):
        if self.policy not in ("on_policy", "off_policy"):
            raise DataError(f"candidate policy must be on_policy|off_policy")

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "policy": self.policy,
        }


@dataclass(frozen=True)
class PrefSeed:
    id: str
    prompt: str
    accepted: str
    candidates: Tuple[Candidate, ...]

    def __post_init__(self):
        if not self.accepted.strip():
            raise DataError(f"seed {self.id}: accepted response is empty")

    @classmethod
    def from_dict(cls, d: dict) -> "PrefSeed":
        try:
            return cls(
                id=str(d["id"]),
                prompt=d["prompt"],
                accepted=d["accepted"],
                candidates=tuple(
                    Candidate(
                        text=c["text"],
                        temperature=float(c["temperature"]),
                        top_p=float(c["top_p"]),
                        policy=c["policy"],
                    )
                    for c in d["candidates"]
                ),
            )
        except KeyError as exc:
            raise DataError(f"preference seed missing field {exc}") from exc


@dataclass(frozen=True)
class PrefTriplet:
    seed_id: str
    prompt: str
    chosen: str
    rejected: str
    provenance: Candidate

    def to_dict(self) -> dict:
        return {
            "seed_id": self.seed_id,
            "prompt": self.prompt,
            "chosen": self.chosen,
            "rejected": self.rejected,
            "provenance": self.provenance.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PrefTriplet":
        prov = d["provenance"]
        return cls(
            seed_id=str(d["seed_id"]),
            prompt=d["prompt"],
            chosen=d["chosen"],
            rejected=d["rejected"],
            provenance=Candidate(
                text=prov["text"],
                temperature=float(prov["temperature"]),
                top_p=float(prov["top_p"]),
                policy=prov["policy"],
            ),
        )


def _norm_hash(text: str) -> bytes:
    return hashlib.sha256(normalize_text(text).encode("utf-8")).digest()


@dataclass
class BuildReport:
    filter: FilterReport
    exhausted_seed_ids: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = self.filter.to_dict()
        d["exhausted_seed_ids"] = list(self.exhausted_seed_ids)
        return d


def build_triplets(
    seeds: Sequence[PrefSeed],
) -> Tuple[List[PrefTriplet], BuildReport]:
    """Filter candidates (empty, equals-accepted, within-seed dup, formatting)
    and emit one triplet per survivor. Seeds with no survivors are recorded in
    the report, not raised."""
    triplets: List[PrefTriplet] = []
    report = FilterReport()
    report.dropped_by_rule = {
        "empty": 0,
        "equals_accepted": 0,
        "duplicate": 0,
        "format": 0,
    }
    exhausted: List[str] = []
    for seed in seeds:
        accepted_key = _norm_hash(seed.accepted)
        seen = set()
        survived = 0
        for cand in seed.candidates:
            report.input_count += 1
            if not cand.text.strip():
                report.dropped_by_rule["empty"] += 1
                continue
            key = _norm_hash(cand.text)
            if key == accepted_key:
                report.dropped_by_rule["equals_accepted"] += 1
                continue
            if key in seen:
                report.dropped_by_rule["duplicate"] += 1
                continue
            seen.add(key)
            if has_unbalanced_markup(cand.text):
                report.dropped_by_rule["format"] += 1
                continue
            survived += 1
            triplets.append(
                PrefTriplet(
                    seed_id=seed.id,
                    prompt=seed.prompt,
                    chosen=seed.accepted,
                    rejected=cand.text,
                    provenance=cand,
                )
            )
        if survived == 0:
            exhausted.append(seed.id)
    report.kept_count = len(triplets)
    report.check()
    return triplets, BuildReport(filter=report, exhausted_seed_ids=exhausted)


@dataclass
class AuditReport:
    total: int
    flagged: Dict[str, List[str]]
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "flagged": {k: list(v) for k, v in self.flagged.items()},
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def audit_noise(
    triplets: Sequence[PrefTriplet], tolerance: float = 0.001
) -> AuditReport:
    """Re-run the validators over built triplets; fail above the tolerance."""
    flagged: Dict[str, List[str]] = {}

    def flag(rule: str, seed_id: str):
        flagged.setdefault(rule, []).append(seed_id)

    bad_ids = set()
    for t in triplets:
        bad = False
        if not t.rejected.strip():
            flag("empty_rejected", t.seed_id)
            bad = True
        if not t.chosen.strip():
            flag("empty_chosen", t.seed_id)
            bad = True
        elif t.rejected.strip() and normalize_text(t.chosen) == normalize_text(
            t.rejected
        ):
            flag("equals_accepted", t.seed_id)
            bad = True
        if t.rejected.strip() and has_unbalanced_markup(t.rejected):
            flag("format", t.seed_id)
            bad = True
        if bad:
            bad_ids.add(id(t))
    total = len(triplets)
    fraction = len(bad_ids) / total if total else 0.0
    return AuditReport(
        total=total,
        flagged=flagged,
        tolerance=tolerance,
        passed=fraction <= tolerance,
    )
