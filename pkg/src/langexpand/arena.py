"""Arena evaluation: majority voting over human verdicts, win-rate matrices,
and ELO ratings under the default and custom scoring configurations.

Default scoring: win 1, loss 0, tie and both-bad 0.5 each. Custom scoring is
identical except both-bad gives both models 0 (non-conserving). Final ratings
average over seeded random match orderings to remove order dependence.
"""

import random
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from .errors import DataError, ValidationError

VERDICTS = ("a_wins", "b_wins", "tie", "both_bad")

DEFAULT_K = 32.0
DEFAULT_INITIAL = 1000.0
DEFAULT_PERMUTATIONS = 100


@dataclass(frozen=True)
class VoteRecord:
    prompt_id: str
    model_a: str
    model_b: str
    evaluator_id: str
    verdict: str

    def __post_init__(self):
        if self.model_a == self.model_b:
            raise DataError(f"vote {self.prompt_id}: model_a == model_b")
        if self.verdict not in VERDICTS:
            raise DataError(f"vote {self.prompt_id}: bad verdict {self.verdict!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "VoteRecord":
        try:
            return cls(
                prompt_id=str(d["prompt_id"]),
                model_a=d["model_a"],
                model_b=d["model_b"],
                evaluator_id=str(d["evaluator_id"]),
                verdict=d["verdict"],
            )
        except KeyError as exc:
            raise DataError(f"vote record missing field {exc}") from exc


@dataclass(frozen=True)
class MatchResult:
    prompt_id: str
    model_a: str
    model_b: str
    outcome: str
    vote_count: int

    def to_dict(self) -> dict:
        return {
            "prompt_id": self.prompt_id,
            "model_a": self.model_a,
            "model_b": self.model_b,
            "outcome": self.outcome,
            "vote_count": self.vote_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MatchResult":
        return cls(
            prompt_id=str(d["prompt_id"]),
            model_a=d["model_a"],
            model_b=d["model_b"],
            outcome=d["outcome"],
            vote_count=int(d.get("vote_count", 3)),
        )


@dataclass(frozen=True)
class Rating:
    model: str
    elo: float
    matches: int

    def to_dict(self) -> dict:
        return {"model": self.model, "elo": self.elo, "matches": self.matches}


def _flip(verdict: str) -> str:
    if verdict == "a_wins":
        return "b_wins"
    if verdict == "b_wins":
        return "a_wins"
    return verdict


def aggregate_votes(
    votes: Sequence[VoteRecord],
) -> Tuple[List[MatchResult], List[Tuple[str, str, str]]]:
    """Majority-vote each (prompt, model pair) group of 3 or 4 evaluators.

    Returns (matches, pending) where pending lists groups whose 3 votes split
    three ways and still need a fourth, tie-breaking vote. With 4 votes the
    plurality wins and a residual 2-2 split resolves to tie.
    """
    groups: Dict[Tuple[str, str, str], List[VoteRecord]] = {}
    for vote in votes:
        a, b = sorted((vote.model_a, vote.model_b))
        groups.setdefault((vote.prompt_id, a, b), []).append(vote)

    matches: List[MatchResult] = []
    pending: List[Tuple[str, str, str]] = []
    for key in groups:
        prompt_id, model_a, model_b = key
        group = groups[key]
        evaluators = [v.evaluator_id for v in group]
        if len(set(evaluators)) != len(evaluators):
            raise DataError(f"duplicate evaluator in group {key}")
        if len(group) < 3:
            raise DataError(f"group {key} has only {len(group)} votes, need 3")
        if len(group) > 4:
            raise DataError(f"group {key} has {len(group)} votes, max 4")
        # canonicalize verdicts to the sorted (model_a, model_b) orientation
        counts = Counter(
            v.verdict if v.model_a == model_a else _flip(v.verdict) for v in group
        )
        top, top_count = counts.most_common(1)[0]
        if len(group) == 3:
            if top_count >= 2:
                matches.append(
                    MatchResult(prompt_id, model_a, model_b, top, vote_count=3)
                )
            else:
                pending.append(key)
        else:
            tied_top = [v for v, c in counts.items() if c == top_count]
            outcome = top if len(tied_top) == 1 else "tie"
            matches.append(
                MatchResult(prompt_id, model_a, model_b, outcome, vote_count=4)
            )
    return matches, pending


@dataclass(frozen=True)
class PairRates:
    win: float
    loss: float
    tie: float
    both_bad: float
    matches: int


def win_rates(matches: Sequence[MatchResult]) -> Dict[Tuple[str, str], PairRates]:
    """Outcome fractions per ordered model pair; pairs with no matches are
    absent. Reversing a pair swaps win and loss."""
    counts: Dict[Tuple[str, str], Counter] = {}
    for m in matches:
        counts.setdefault((m.model_a, m.model_b), Counter())[m.outcome] += 1
    rates: Dict[Tuple[str, str], PairRates] = {}
    for (a, b), c in counts.items():
        n = sum(c.values())
        rates[(a, b)] = PairRates(
            win=c["a_wins"] / n,
            loss=c["b_wins"] / n,
            tie=c["tie"] / n,
            both_bad=c["both_bad"] / n,
            matches=n,
        )
        rates[(b, a)] = PairRates(
            win=c["b_wins"] / n,
            loss=c["a_wins"] / n,
            tie=c["tie"] / n,
            both_bad=c["both_bad"] / n,
            matches=n,
        )
    return rates


_SCORES = {
    "default": {
        "a_wins": (1.0, 0.0),
        "b_wins": (0.0, 1.0),
        "tie": (0.5, 0.5),
        "both_bad": (0.5, 0.5),
    },
    "custom": {
        "a_wins": (1.0, 0.0),
        "b_wins": (0.0, 1.0),
        "tie": (0.5, 0.5),
        "both_bad": (0.0, 0.0),
    },
}


def expected_score(rating_a: float, rating_b: float) -> float:
    return 1.0 / (1.0 + 10.0 ** ((rating_b - rating_a) / 400.0))


def _run_once(
    matches: Sequence[MatchResult],
    scores: Dict[str, Tuple[float, float]],
    k_factor: float,
    initial: float,
) -> Dict[str, float]:
    ratings: Dict[str, float] = {}
    for m in matches:
        r_a = ratings.setdefault(m.model_a, initial)
        r_b = ratings.setdefault(m.model_b, initial)
        if m.outcome not in scores:
            raise DataError(f"unknown outcome {m.outcome!r}")
        s_a, s_b = scores[m.outcome]
        e_a = expected_score(r_a, r_b)
        e_b = expected_score(r_b, r_a)
        ratings[m.model_a] = r_a + k_factor * (s_a - e_a)
        ratings[m.model_b] = r_b + k_factor * (s_b - e_b)
    return ratings


def elo_scores(
    matches: Sequence[MatchResult],
    config: str = "default",
    k_factor: float = DEFAULT_K,
    initial: float = DEFAULT_INITIAL,
    permutations: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
) -> List[Rating]:
    """Mean ELO over seeded random match orderings, sorted by rating desc."""
    if config not in _SCORES:
        raise ValidationError(f"unknown config {config!r}")
    if k_factor <= 0:
        raise ValidationError("k_factor must be > 0")
    if permutations < 1:
        raise ValidationError("permutations must be >= 1")
    scores = _SCORES[config]
    match_counts: Counter = Counter()
    for m in matches:
        match_counts[m.model_a] += 1
        match_counts[m.model_b] += 1

    rng = random.Random(seed)
    sums: Dict[str, float] = {model: 0.0 for model in match_counts}
    order = list(matches)
    for _ in range(permutations):
        rng.shuffle(order)
        for model, rating in _run_once(order, scores, k_factor, initial).items():
            sums[model] += rating
    return sorted(
        (
            Rating(model=m, elo=total / permutations, matches=match_counts[m])
            for m, total in sums.items()
        ),
        key=lambda r: (-r.elo, r.model),
    )
