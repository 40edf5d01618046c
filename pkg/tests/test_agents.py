import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from iwcsim.agents import (
    generate_population,
    population_rows,
    resolve_law_obedience,
    sample_gap_acceptance,
    sample_perceptual_noise,
    sample_walking_speed,
)
from iwcsim.config import ConfigError, ScenarioConfig

N = 100_000


def rng(seed=0):
    return np.random.default_rng(seed)


def test_average_adult_speed_is_symmetric():
    x = sample_walking_speed("adult", "average", rng(), size=N)
    assert x.mean() == pytest.approx(1.51, abs=0.02)
    assert abs(stats.skew(x)) < 0.05


def test_aggressive_adult_speed_is_faster_and_right_skewed():
    x = sample_walking_speed("adult", "aggressive", rng(1), size=N)
    assert x.mean() > 1.51
    assert stats.skew(x) > 0


def test_elderly_speed_mean():
    assert sample_walking_speed("elderly", "average", rng(2), size=N).mean() == pytest.approx(1.25, abs=0.02)


def test_trait_speed_ordering():
    means = {t: sample_walking_speed("adult", t, rng(3), size=N) for t in ("aggressive", "average", "conservative")}
    se = max(m.std() for m in means.values()) / np.sqrt(N)
    assert means["aggressive"].mean() - means["average"].mean() > 3 * se
    assert means["average"].mean() - means["conservative"].mean() > 3 * se


def test_unknown_type_rejected():
    with pytest.raises(ValueError):
        sample_walking_speed("robot", "average", rng())


def test_speed_shape_matches_closed_form():
    # skew-normal location 1.51, scale 0.14, shape +1.51: compare against scipy's exact mean
    x = sample_walking_speed("adult", "aggressive", rng(4), size=N)
    assert x.mean() == pytest.approx(stats.skewnorm.mean(1.51, loc=1.51, scale=0.14), abs=0.003)


def test_gap_acceptance_average_mean():
    g = sample_gap_acceptance("average", [3, 8], rng(5), size=N)
    assert g.mean() == pytest.approx(5.5, abs=0.05)


def test_gap_acceptance_aggressive_shorter():
    agg = sample_gap_acceptance("aggressive", [3, 8], rng(6), size=N).mean()
    avg = sample_gap_acceptance("average", [3, 8], rng(6), size=N).mean()
    assert agg < avg


@settings(max_examples=50, deadline=None)
@given(trait=st.sampled_from(["aggressive", "average", "conservative"]), seed=st.integers(0, 10_000))
def test_gap_acceptance_clamped(trait, seed):
    g = sample_gap_acceptance(trait, [3, 8], rng(seed), size=500)
    assert g.min() >= 3 and g.max() <= 8


def test_gap_acceptance_degenerate_range():
    with pytest.raises(ValueError):
        sample_gap_acceptance("average", [5, 5], rng())


def test_perceptual_noise_moments_and_determinism():
    z = sample_perceptual_noise(rng(7), size=N)
    assert z.mean() == pytest.approx(0, abs=0.02)
    assert z.std() == pytest.approx(1, abs=0.02)
    assert np.array_equal(z, sample_perceptual_noise(rng(7), size=N))
    assert len(np.unique(z)) == N


@pytest.mark.parametrize(
    "lo, th, dist, expected",
    [
        ("average", 45, 20, "obedient"),
        ("average", 45, 70, "violating"),
        ("average", 45, 45, "violating"),
        ("violating", 45, 1, "violating"),
        ("obedient", 45, 500, "obedient"),
    ],
)
def test_resolve_law_obedience(lo, th, dist, expected):
    assert resolve_law_obedience(lo, dist, th) == expected


def test_resolve_rejects_negative_distance():
    with pytest.raises(ValueError):
        resolve_law_obedience("average", -1, 45)


@pytest.fixture(scope="module")
def big_population(net):
    cfg = ScenarioConfig()
    cfg.pedestrians.count = 10_000
    return cfg, generate_population(cfg, rng(11), net)


def test_population_frequencies(big_population):
    cfg, pop = big_population
    n = len(pop)
    for attr, pct in (
        ("ped_type", cfg.pedestrians.type_pct),
        ("ped_trait", cfg.pedestrians.trait_pct),
        ("ped_lo", cfg.pedestrians.law_pct),
    ):
        for cat, p in pct.items():
            assert 100 * sum(getattr(a, attr) == cat for a in pop) / n == pytest.approx(p, abs=2.0)
    assert 100 * sum(a.ped_type == "adult" for a in pop) / n == pytest.approx(89, abs=1.0)
    assert 100 * sum(a.crossing_pattern == "one-stage" for a in pop) / n == pytest.approx(50, abs=2.0)
    assert 100 * sum(a.go_around_blocking for a in pop) / n == pytest.approx(50, abs=2.0)
    assert 100 * sum(a.needs_crossing for a in pop) / n == pytest.approx(50, abs=2.0)


def test_population_ranges(big_population):
    cfg, pop = big_population
    lo, hi = cfg.decision.gap_range
    clo, chi = cfg.decision.dist_c_range
    for a in pop:
        assert a.ped_s > 0
        assert lo <= a.ped_gap <= hi
        assert clo <= a.th_dist_c <= chi
    adult = next(a for a in pop if a.ped_type == "adult")
    child = next(a for a in pop if a.ped_type == "child")
    assert child.width < adult.width and child.length < adult.length


def test_crossing_agents_get_a_far_destination(big_population, net):
    _, pop = big_population
    for a in pop[:500]:
        same = net.locate(a.origin)[0] == net.locate(a.destination)[0]
        assert same != a.needs_crossing


def test_population_reproducible(net):
    cfg = ScenarioConfig()
    cfg.pedestrians.count = 200
    assert generate_population(cfg, rng(3), net) == generate_population(cfg, rng(3), net)


def test_degenerate_trait_mix(net):
    cfg = ScenarioConfig()
    cfg.pedestrians.count = 300
    cfg.pedestrians.trait_pct = {"aggressive": 0.0, "conservative": 100.0, "average": 0.0}
    assert {a.ped_trait for a in generate_population(cfg, rng(), net)} == {"conservative"}


def test_bad_percentages_rejected(net):
    cfg = ScenarioConfig()
    cfg.pedestrians.type_pct = {"adult": 80.0, "child": 5.0, "elderly": 5.0}
    with pytest.raises(ConfigError, match="type_pct"):
        generate_population(cfg, rng(), net)


def test_aggressive_share_raises_speed_per_agent(net):
    # quantile coupling: the same agent never gets slower when it turns aggressive
    cfg = ScenarioConfig()
    cfg.pedestrians.count = 400
    cfg.pedestrians.trait_pct = {"average": 100.0}
    base = generate_population(cfg, rng(9), net)
    cfg.pedestrians.trait_pct = {"aggressive": 100.0}
    bold = generate_population(cfg, rng(9), net)
    assert all(b.ped_s >= a.ped_s for a, b in zip(base, bold))
    assert all(b.ped_gap <= a.ped_gap for a, b in zip(base, bold))


def test_population_rows_columns(net):
    cfg = ScenarioConfig()
    cfg.pedestrians.count = 3
    rows = population_rows(generate_population(cfg, rng(), net))
    assert list(rows[0]) == [
        "id", "type", "trait", "law_obedience", "speed_mps", "gap_s", "pattern", "p_noise", "th_dist_c_m",
    ]
