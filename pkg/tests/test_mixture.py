import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from langexpand import (
    DataError,
    MixturePlan,
    SourceSpec,
    ValidationError,
    plan_grid,
    plan_mixture,
    verify_manifest,
)

B = 10**9


def table_sources():
    return [
        SourceSpec("en", "en", "web", 660 * B),
        SourceSpec("ar-nat", "ar", "web", 270 * B, origin="natural"),
        SourceSpec("ar-tr", "ar", "web", 270 * B, origin="translated"),
    ]


class TestPlanMixture:
    def test_headline_split(self):
        plan = plan_mixture(
            table_sources(), {"en": 0.55, "ar": 0.45}, total_tokens=1200 * B
        )
        assert plan.entry("en").weight == pytest.approx(0.55)
        assert plan.entry("ar-nat").weight == pytest.approx(0.225)
        assert plan.entry("ar-tr").weight == pytest.approx(0.225)
        for name in ("en", "ar-nat", "ar-tr"):
            assert plan.entry(name).epochs == pytest.approx(1.0)
        assert sum(e.target_tokens for e in plan.entries) == 1200 * B

    def test_single_source(self):
        plan = plan_mixture(
            [SourceSpec("only", "en", "web", 100)], {"en": 1.0}, total_tokens=100
        )
        assert plan.entry("only").weight == 1.0
        assert plan.entry("only").epochs == 1.0

    def test_fractional_epochs(self):
        plan = plan_mixture(
            [SourceSpec("s", "en", "web", 100)], {"en": 1.0}, total_tokens=250
        )
        assert plan.entry("s").epochs == 2.5

    def test_weights_sum_to_one(self):
        plan = plan_mixture(
            table_sources(), {"en": 0.7, "ar": 0.3}, total_tokens=1000
        )
        assert sum(e.weight for e in plan.entries) == pytest.approx(1.0, abs=1e-9)

    def test_infeasible_target_named(self):
        with pytest.raises(ValidationError, match="fr"):
            plan_mixture(
                [SourceSpec("s", "en", "web", 10)],
                {"en": 0.5, "fr": 0.5},
                total_tokens=100,
            )

    def test_zero_total_rejected(self):
        with pytest.raises(ValidationError):
            plan_mixture(table_sources(), {"en": 0.55, "ar": 0.45}, total_tokens=0)

    def test_targets_must_sum_to_one(self):
        with pytest.raises(ValidationError):
            plan_mixture(table_sources(), {"en": 0.5, "ar": 0.4}, total_tokens=100)

    def test_permutation_invariant(self):
        sources = table_sources()
        a = plan_mixture(sources, {"en": 0.55, "ar": 0.45}, total_tokens=999)
        b = plan_mixture(sources[::-1], {"en": 0.55, "ar": 0.45}, total_tokens=999)
        assert a == b

    def test_domain_targets_renormalized_within_language(self):
        sources = [
            SourceSpec("en-web", "en", "web", 100),
            SourceSpec("en-code", "en", "code", 100),
            SourceSpec("ar-web", "ar", "web", 100),
        ]
        plan = plan_mixture(
            sources,
            {"en": 0.5, "ar": 0.5},
            domain_targets={"web": 0.6, "code": 0.4},
            total_tokens=1000,
        )
        # en splits 0.6/0.4; ar only has web, renormalized to 1
        assert plan.entry("en-web").weight == pytest.approx(0.3)
        assert plan.entry("en-code").weight == pytest.approx(0.2)
        assert plan.entry("ar-web").weight == pytest.approx(0.5)

    def test_residue_assignment_exact(self):
        sources = [
            SourceSpec("a", "en", "web", 10),
            SourceSpec("b", "en", "web", 10),
            SourceSpec("c", "en", "web", 10),
        ]
        plan = plan_mixture(sources, {"en": 1.0}, total_tokens=100)
        assert sum(e.target_tokens for e in plan.entries) == 100

    @settings(max_examples=60, deadline=None)
    @given(
        st.integers(min_value=1, max_value=10**6),
        st.integers(min_value=2, max_value=1000),
    )
    def test_scaling_available_inverse_epochs(self, total, factor):
        base = [
            SourceSpec("x", "en", "web", 50),
            SourceSpec("y", "en", "code", 70),
        ]
        scaled = [
            SourceSpec(s.name, s.language, s.domain, s.available_tokens * factor)
            for s in base
        ]
        p1 = plan_mixture(base, {"en": 1.0}, total_tokens=total)
        p2 = plan_mixture(scaled, {"en": 1.0}, total_tokens=total)
        for e1, e2 in zip(p1.entries, p2.entries):
            assert e1.weight == pytest.approx(e2.weight, abs=1e-12)
            assert e2.epochs == pytest.approx(e1.epochs / factor, rel=1e-9)


class TestPlanGrid:
    def test_single_ratio_matches_plan(self):
        grid = plan_grid(table_sources(), [(0.45, 0.55)], 1200 * B)
        direct = plan_mixture(
            table_sources(), {"ar": 0.45, "en": 0.55}, total_tokens=1200 * B
        )
        assert grid[0] == direct

    def test_zero_arabic_ratio(self):
        grid = plan_grid(table_sources(), [(0.0, 1.0)], 1000)
        assert grid[0].entry("ar-nat").weight == 0.0
        assert grid[0].entry("ar-tr").weight == 0.0

    def test_six_ratios_monotone_arabic_share(self):
        ratios = [(r / 10, 1 - r / 10) for r in range(0, 6)]
        grid = plan_grid(table_sources(), ratios, 1000 * B)
        shares = [p.language_shares["ar"] for p in grid]
        assert shares == sorted(shares)
        assert len(grid) == 6

    def test_bad_ratio_rejected(self):
        with pytest.raises(ValidationError):
            plan_grid(table_sources(), [(0.5, 0.6)], 1000)


class TestVerifyManifest:
    def test_exact_counts_zero_deviation(self):
        sources = table_sources()
        plan = plan_mixture(sources, {"en": 0.55, "ar": 0.45}, total_tokens=1200 * B)
        counts = {e.source: e.target_tokens for e in plan.entries}
        passed, deviations = verify_manifest(plan, counts, sources, tolerance=1e-12)
        assert passed
        assert all(d.deviation == 0 for d in deviations)

    def test_short_source_deviation_by_hand(self):
        sources = table_sources()
        plan = plan_mixture(sources, {"en": 0.55, "ar": 0.45}, total_tokens=1200 * B)
        counts = {e.source: e.target_tokens for e in plan.entries}
        counts["en"] = int(counts["en"] * 0.9)  # 10% short
        passed, deviations = verify_manifest(plan, counts, sources, tolerance=0.005)
        assert not passed
        total = sum(counts.values())
        expected = abs(counts["en"] / total - 0.55)
        en_dev = next(d for d in deviations if d.kind == "language" and d.key == "en")
        assert en_dev.deviation == pytest.approx(expected)

    def test_unknown_source_rejected(self):
        sources = table_sources()
        plan = plan_mixture(sources, {"en": 0.55, "ar": 0.45}, total_tokens=1200)
        counts = {e.source: e.target_tokens for e in plan.entries}
        counts["mystery"] = 5
        with pytest.raises(DataError):
            verify_manifest(plan, counts, sources)

    def test_missing_source_rejected(self):
        sources = table_sources()
        plan = plan_mixture(sources, {"en": 0.55, "ar": 0.45}, total_tokens=1200)
        with pytest.raises(DataError):
            verify_manifest(plan, {"en": 660}, sources)


def mixed_table_sources():
    """One source per (column, domain) cell with Table-1-like availability."""
    en = {"web": 31, "books": 9, "science": 16, "code": 39, "math": 5}
    ar_nat = {"web": 71, "books": 13, "wiki": 0.70, "news": 14, "other": 1.3}
    ar_tr = {"web": 65, "books": 12, "wiki": 0.61, "science": 22, "other": 0.39}
    sources = []
    for domain, pct in en.items():
        sources.append(SourceSpec(f"en-{domain}", "en", domain, int(pct * 660 * B / 100)))
    for domain, pct in ar_nat.items():
        sources.append(
            SourceSpec(f"arnat-{domain}", "ar", domain, int(pct * 270 * B / 100))
        )
    for domain, pct in ar_tr.items():
        sources.append(
            SourceSpec(
                f"artr-{domain}", "ar", domain, int(pct * 270 * B / 100),
                origin="translated",
            )
        )
    return sources


MIXED_COLUMN = {
    "web": 48.0,
    "books": 11.0,
    "wiki": 0.3,
    "news": 3.0,
    "science": 14.0,
    "code": 21.0,
    "math": 2.5,
    "other": 0.2,
}


def test_mixed_column_domain_shares_recovered():
    plan = plan_mixture(
        mixed_table_sources(), {"en": 0.55, "ar": 0.45}, total_tokens=1200 * B
    )
    for domain, expected_pct in MIXED_COLUMN.items():
        got = plan.domain_shares[domain] * 100
        assert got == pytest.approx(expected_pct, abs=0.5), domain


def test_plan_round_trips_through_dict():
    plan = plan_mixture(table_sources(), {"en": 0.55, "ar": 0.45}, total_tokens=1200)
    assert MixturePlan.from_dict(plan.to_dict()) == plan
