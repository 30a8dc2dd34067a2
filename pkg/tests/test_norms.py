import numpy as np
import pytest

from stablab.errors import SpectrumHit
from stablab.models import (ExplicitColumn, PolyApproachRule, SmoothedPowerColumn,
                            diagonal_model)
from stablab.norms import (PairSums, factor_power_norm, resolvent_norm_batch,
                           spectral_distance, sup_spectral_functional,
                           tail_min_dist)

RULE = PolyApproachRule(phis=(0.0,), order=2.0)
RULE2 = PolyApproachRule(phis=(0.0, np.pi), order=1.0)


def brute_closure_dist(model, lam, n_far=200000):
    """Oracle: distance from lam to head entries, a deep tail slab, and the
    accumulation points."""
    d = np.min(np.abs(lam - model.entries))
    if model.rule is not None:
        idx = np.arange(model.n_max + 1, n_far)
        d = min(d, float(np.min(np.abs(lam - model.rule.entries(idx)))))
        for phi in model.rule.phis:
            d = min(d, abs(lam - np.exp(1j * phi)))
    return d


def test_resolvent_norm_is_reciprocal_closure_distance():
    model = diagonal_model(300, rule=RULE)
    rng = np.random.default_rng(3)
    for _ in range(25):
        lam = (1.05 + rng.uniform(0, 1.5)) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        vals, ups = resolvent_norm_batch(model, np.array([lam]))
        want = 1.0 / brute_closure_dist(model, lam)
        assert vals[0] == pytest.approx(want, rel=1e-9)
        assert ups[0] >= vals[0] - 1e-15


def test_resolvent_norm_near_circle_bracket():
    # points close to the unit circle near the accumulation point: the sampled
    # oracle can only underestimate the sup, so it must sit inside the bracket
    model = diagonal_model(300, rule=RULE2)
    rng = np.random.default_rng(5)
    for _ in range(25):
        phi = rng.uniform(-0.3, 0.3) + rng.choice([0.0, np.pi])
        lam = (1.0 + 10 ** rng.uniform(-6, -1)) * np.exp(1j * phi)
        vals, ups = resolvent_norm_batch(model, np.array([lam]))
        want = 1.0 / brute_closure_dist(model, complex(lam))
        assert vals[0] <= want * (1 + 1e-9)
        assert ups[0] >= want * (1 - 1e-9)


def test_spectrum_hit_raised_on_entry():
    model = diagonal_model(100, rule=RULE)
    with pytest.raises(SpectrumHit):
        resolvent_norm_batch(model, np.array([complex(model.entries[7])]))


def test_spectral_distance_brackets_truth():
    model = diagonal_model(250, rule=RULE)
    rng = np.random.default_rng(7)
    lams = (1.0 + 10 ** rng.uniform(-5, 0, 40)) * np.exp(
        1j * rng.uniform(0, 2 * np.pi, 40))
    achieved, lower, nearest = spectral_distance(model, lams)
    for i, lam in enumerate(lams):
        truth = brute_closure_dist(model, complex(lam))
        assert lower[i] <= truth * (1 + 1e-12)
        assert achieved[i] >= truth * (1 - 1e-12)
        # the reported nearest point realizes the achieved distance
        assert abs(lam - nearest[i]) == pytest.approx(achieved[i], rel=1e-12)


def test_sup_spectral_functional_weighted():
    # weighted sup |1 - a|^2 / |lam - a| over the closure, vs deep sampling
    model = diagonal_model(250, rule=RULE)
    rng = np.random.default_rng(11)
    idx = np.arange(1, 150000)
    a_all = RULE.entries(idx)
    a_all[: model.n_max] = model.entries
    for _ in range(12):
        lam = (1.0 + 10 ** rng.uniform(-4, 0)) * np.exp(1j * rng.uniform(-0.5, 0.5))
        res = sup_spectral_functional(model, np.array([lam]), (2.0,), 1)
        sampled = np.max(np.abs(1 - a_all) ** 2 / np.abs(lam - a_all))
        # closure also contains the unit point itself, where the weight vanishes
        assert res.value[0] >= sampled * (1 - 1e-9)
        assert res.upper[0] >= res.value[0] - 1e-15


def test_factor_power_norm_matches_entrywise_sup():
    model = diagonal_model(200, rule=RULE)
    for s in (0.5, 1.0, 1.7):
        got = factor_power_norm(model, 0, s)
        idx = np.arange(1, 100000)
        a = RULE.entries(idx)
        a[:200] = model.entries
        sampled = float(np.max(np.abs(1 - a) ** s))
        assert got >= sampled * (1 - 1e-12)
        # |1 - a| <= 2 on the closed disk, so the sup obeys the chordal cap
        assert got <= 2.0**s + 1e-12


def test_tail_min_dist_lower_bounds_tail():
    model = diagonal_model(300, rule=RULE2)
    rng = np.random.default_rng(13)
    lams = (1.0 + 10 ** rng.uniform(-5, 0, 30)) * np.exp(
        1j * rng.uniform(0, 2 * np.pi, 30))
    got = tail_min_dist(model, lams)
    idx = np.arange(model.n_max + 1, 300000)
    tail = RULE2.entries(idx)
    for i, lam in enumerate(lams):
        sampled = float(np.min(np.abs(lam - tail)))
        assert got[i] <= sampled * (1 + 1e-12)
        assert got[i] > 0.0


# ---------------------------------------------------------------------------
# pair sums: the certified series bracket
# ---------------------------------------------------------------------------


def dense_pair_sum(model, lcol, rcol, lam, kernel, u=(), n_far=4000000):
    """Oracle: direct summation of the series over a very deep lattice."""
    idx = np.arange(1, n_far, dtype=np.int64)
    a = model.entry_values(idx)
    lv = lcol.values(model, idx)
    rv = rcol.values(model, idx)
    term = np.conj(lv) * rv
    if u:
        for phi, e in zip(model.unit_points, u):
            term = term * np.abs(1 - np.exp(-1j * phi) * a) ** e
    if kernel == "abs2":
        term = term / np.abs(lam - a) ** 2
    elif kernel == "resolvent":
        term = term / (lam - a)
    return complex(np.sum(term))


@pytest.mark.parametrize("kernel", ["abs2", "resolvent"])
def test_pair_sums_bracket_far_and_near(kernel):
    model = diagonal_model(400, rule=RULE)
    col = SmoothedPowerColumn(w=1.0, t=1.0, scale=0.1)
    ps = PairSums(model, (col,), (col,))
    # regimes: far field, near circle, resonance strip next to the entry curve
    lams = np.array([
        2.0 + 0.5j,
        1.0001 * np.exp(1j * 0.3),
        RULE.curve(0, 1.0 / 1234.0) * (1.0 + 1e-7),
        1.000001 * np.exp(1j * 1e-4),
    ])
    values, err = ps.evaluate(lams, kernel=kernel)
    for i, lam in enumerate(lams):
        truth = dense_pair_sum(model, col, col, complex(lam), kernel)
        assert abs(values[i, 0, 0] - truth) <= err[i] + 1e-13 * abs(truth), (
            f"bracket violated at lam={lam}: got {values[i, 0, 0]}, "
            f"truth {truth}, err {err[i]}")


def test_pair_sums_weighted_gram():
    model = diagonal_model(400, rule=RULE)
    col = SmoothedPowerColumn(w=1.0, t=1.0, scale=0.1)
    ps = PairSums(model, (col,), (col,), weight_exponents=(1.0,))
    lams = np.array([1.5 + 0.1j, 1.0 + 1e-5 + 0j])
    values, err = ps.evaluate(lams, kernel="abs2")
    for i, lam in enumerate(lams):
        truth = dense_pair_sum(model, col, col, complex(lam), "abs2", u=(1.0,))
        assert abs(values[i, 0, 0] - truth) <= err[i] + 1e-13 * abs(truth)


def test_pair_sums_lam_independent_series():
    model = diagonal_model(400, rule=RULE)
    col = SmoothedPowerColumn(w=1.0, t=1.0, scale=0.1)
    ps = PairSums(model, (col,), (col,), weight_exponents=(2.0,))
    value, err = ps.series()
    truth = dense_pair_sum(model, col, col, 0.0, "none", u=(2.0,))
    assert abs(value[0, 0] - truth) <= err + 1e-13 * abs(truth)


def test_pair_sums_explicit_columns_exact():
    # finitely supported columns have no tail: the series is an exact head sum
    model = diagonal_model(400, rule=RULE)
    rng = np.random.default_rng(17)
    coords = tuple(rng.standard_normal(40) + 1j * rng.standard_normal(40))
    col = ExplicitColumn(coords=coords)
    ps = PairSums(model, (col,), (col,))
    lam = 1.2 * np.exp(1j * 0.7)
    values, err = ps.evaluate(np.array([lam]), kernel="resolvent")
    truth = dense_pair_sum(model, col, col, lam, "resolvent", n_far=41)
    assert values[0, 0, 0] == pytest.approx(truth, rel=1e-12)
    assert err[0] <= 1e-12 * max(1.0, abs(truth))


def test_pair_sums_rank2_blocks():
    model = diagonal_model(300, rule=RULE)
    c1 = SmoothedPowerColumn(w=1.0, t=1.0, scale=0.1)
    c2 = SmoothedPowerColumn(w=2.0, t=1.5, scale=-0.2j)
    ps = PairSums(model, (c1, c2), (c1, c2))
    lam = 1.3 * np.exp(1j * 0.2)
    values, err = ps.evaluate(np.array([lam]), kernel="abs2")
    assert values.shape == (1, 2, 2)
    for i, lc in enumerate((c1, c2)):
        for j, rc in enumerate((c1, c2)):
            truth = dense_pair_sum(model, lc, rc, lam, "abs2")
            assert abs(values[0, i, j] - truth) <= err[0] + 1e-12 * abs(truth)
