import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from langexpand import (
    NoiseConfig,
    SftSample,
    Turn,
    dedup_near,
    flag_noise,
    quality_metrics,
)
from langexpand.sft_quality import jaccard, normalize_text, validate_structure


def sample(sid, prompt, response, extra_turns=()):
    turns = [Turn("user", prompt), Turn("assistant", response)]
    for role, text in extra_turns:
        turns.append(Turn(role, text))
    return SftSample(id=sid, conversation=tuple(turns))


def clean_samples(n, seed=0):
    rng = random.Random(seed)
    words = ["alpha", "beta", "gamma", "delta", "omega", "sigma", "kappa"]
    out = []
    for i in range(n):
        prompt = " ".join(rng.choices(words, k=rng.randint(4, 9))) + f" q{i}"
        response = " ".join(rng.choices(words, k=rng.randint(6, 14))) + f" r{i}"
        out.append(sample(f"s{i}", prompt, response))
    return out


class TestQualityMetrics:
    def test_diversity_by_hand(self):
        report = quality_metrics([sample("a", "a b a", "x y")], stopword_list=[])
        assert report.avg_prompt_words == 3
        assert report.avg_response_words == 2
        assert report.lexical_diversity_prompt == pytest.approx(66.67, abs=0.005)
        assert report.lexical_diversity_response == 100.0

    def test_all_stopword_prompt_flagged_zero(self):
        report = quality_metrics([sample("a", "the the", "real content")],
                                 stopword_list=["the"])
        assert report.lexical_diversity_prompt == 0.0
        assert "diversity_undefined_prompt" in report.flagged

    def test_stopwords_excluded_from_diversity(self):
        # 4 non-stopwords, 2 unique -> 50%
        report = quality_metrics(
            [sample("a", "the cat the cat dog dog", "ok")], stopword_list=["the"]
        )
        assert report.lexical_diversity_prompt == 50.0

    def test_corpus_wide_not_per_sample(self):
        samples = [sample("a", "cat dog", "x"), sample("b", "cat dog", "y")]
        report = quality_metrics(samples, stopword_list=[])
        # 2 unique / 4 total across all prompts
        assert report.lexical_diversity_prompt == 50.0

    def test_turn_histogram(self):
        two_turn = sample("a", "q", "r")
        four_turn = sample("b", "q", "r", extra_turns=(("user", "q2"), ("assistant", "r2")))
        report = quality_metrics([two_turn, four_turn, two_turn], stopword_list=[])
        assert report.turn_histogram == {2: 2, 4: 1}
        assert sum(report.turn_histogram.values()) == 3

    def test_permutation_invariant(self):
        samples = clean_samples(20)
        a = quality_metrics(samples, ["alpha"])
        b = quality_metrics(samples[::-1], ["alpha"])
        assert a.lexical_diversity_prompt == b.lexical_diversity_prompt
        assert a.avg_response_words == b.avg_response_words
        assert a.turn_histogram == b.turn_histogram


class TestNormalize:
    def test_case_and_whitespace(self):
        assert normalize_text("Hello   WORLD") == normalize_text("hello world")

    def test_punctuation_stripped(self):
        assert normalize_text("a, b. c!") == "a b c"

    def test_compatibility_normalization(self):
        assert normalize_text("ﬁne") == normalize_text("fine")


class TestDedupNear:
    def test_case_and_spacing_collapse(self):
        a = sample("a", "Hello  World", "It Is Fine.")
        b = sample("b", "hello world", "it is fine")
        kept, dropped = dedup_near([a, b])
        assert [s.id for s in kept] == ["a"]
        assert dropped == ["b"]

    def test_identical_samples(self):
        a = sample("a", "q", "r")
        b = sample("b", "q", "r")
        kept, dropped = dedup_near([a, b])
        assert len(kept) == 1

    def test_idempotent(self):
        samples = clean_samples(30) + clean_samples(30)
        kept, _ = dedup_near(samples)
        again, dropped = dedup_near(kept)
        assert again == kept and dropped == []

    def test_normalized_exact_no_overreach(self):
        # brute-force pairwise check: only normalization-equal pairs drop
        samples = clean_samples(60, seed=4)
        kept, dropped = dedup_near(samples)
        norms = {s.id: normalize_text(s.full_text()) for s in samples}
        for did in dropped:
            earlier = [s for s in samples if s.id != did]
            assert any(norms[did] == norms[s.id] for s in earlier)
        assert dropped == []

    def test_jaccard_brute_force(self):
        base = "w1 w2 w3 w4 w5 w6 w7 w8 w9 w10"
        near = "w1 w2 w3 w4 w5 w6 w7 w8 w9 zz"
        a = sample("a", base, "r")
        b = sample("b", near, "r")

        def grams(text):
            words = text.split()
            return frozenset(
                tuple(words[i : i + 3]) for i in range(len(words) - 2)
            )

        sim = jaccard(grams(normalize_text(a.full_text())),
                      grams(normalize_text(b.full_text())))
        kept, dropped = dedup_near([a, b], mode="ngram_jaccard",
                                   jaccard_threshold=0.9)
        if sim >= 0.9:
            assert dropped == ["b"]
        else:
            assert dropped == []
        # threshold below the computed similarity must drop it
        kept2, dropped2 = dedup_near([a, b], mode="ngram_jaccard",
                                     jaccard_threshold=sim)
        assert dropped2 == ["b"]


class TestFlagNoise:
    def test_clean_fixture_unflagged(self):
        assert flag_noise(clean_samples(50)) == {}

    def test_empty_response(self):
        bad = sample("bad", "q", "   ")
        flagged = flag_noise([bad])
        assert flagged["empty_response"] == ["bad"]

    def test_role_violation_user_final(self):
        conv = SftSample(
            id="uf",
            conversation=(Turn("user", "q"), Turn("assistant", "r"), Turn("user", "q2")),
        )
        assert validate_structure(conv) == "role_violation"
        assert flag_noise([conv])["role_violation"] == ["uf"]

    def test_role_violation_non_alternating(self):
        conv = SftSample(
            id="na", conversation=(Turn("user", "a"), Turn("user", "b"),
                                   Turn("assistant", "r"))
        )
        assert flag_noise([conv])["role_violation"] == ["na"]

    def test_three_fences_unbalanced(self):
        bad = sample("f", "q", "```py\ncode\n``` and ``` again")
        assert flag_noise([bad])["unbalanced_markup"] == ["f"]

    def test_bracket_imbalance(self):
        bad = sample("b", "q", "result (((( mismatched")
        assert "b" in flag_noise([bad])["unbalanced_markup"]

    def test_rules_toggleable(self):
        bad = sample("bad", "q", "")
        config = NoiseConfig(empty_response=False)
        assert "empty_response" not in flag_noise([bad], config)

    def test_one_percent_injection_flagged_exactly(self):
        samples = clean_samples(200, seed=7)
        injected = {"s13", "s77"}
        noisy = [
            sample(s.id, s.conversation[0].text, "") if s.id in injected else s
            for s in samples
        ]
        flagged = flag_noise(noisy)
        assert set(flagged["empty_response"]) == injected
        assert set(flagged.keys()) == {"empty_response"}

    def test_length_outlier_opt_in(self):
        samples = clean_samples(100)
        long = sample("huge", "q", "word " * 5000)
        flagged = flag_noise(samples + [long], NoiseConfig(length_outlier=True))
        assert flagged.get("length_outlier") == ["huge"]


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=30), st.integers(min_value=0, max_value=9))
def test_dedup_idempotence_property(n, dup):
    samples = clean_samples(n, seed=dup)
    samples = samples + samples[: min(dup, n)]
    kept, _ = dedup_near(samples)
    again, dropped = dedup_near(kept)
    assert again == kept
    assert dropped == []
