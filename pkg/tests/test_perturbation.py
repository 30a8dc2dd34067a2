import numpy as np
import pytest

from stablab.errors import RangeViolation, SingularD, SplitInfeasible
from stablab.models import ExplicitColumn, SmoothedPowerColumn, diagonal_model
from stablab.perturbation import (FiniteRankPerturbation, PerturbationContext,
                                  SmwKernel, column_norm, d_inverse_sup,
                                  injectivity_factor_check, proportional_split,
                                  smoothed_norms, smw_resolvent_apply,
                                  spectrum_inclusion_check, transfer_bound_certify,
                                  transfer_matrix, transfer_values)
from stablab import oracle

from conftest import dense_resolvent_matrix


@pytest.fixture(scope="module")
def trunc_lab(s1p1_reduced):
    # exact 500-dim section of S1-P1: finite diagonal prefix plus the column
    # values sampled on the head, so fast path and dense oracle share one
    # operator with no tail
    _, model, _, pert, _ = s1p1_reduced
    dim = 500
    idx = np.arange(1, dim + 1)
    fin = diagonal_model(dim, prefix=model.entries[:dim])
    b = tuple(ExplicitColumn(tuple(complex(v) for v in col.values(model, idx)))
              for col in pert.b_columns)
    c = tuple(ExplicitColumn(tuple(complex(v) for v in col.values(model, idx)))
              for col in pert.c_columns)
    fpert = FiniteRankPerturbation(b_columns=b, c_columns=c, beta=0.0, gamma=0.0)
    return fin, fpert


def test_finite_rank_validation():
    col = ExplicitColumn((1.0 + 0j,))
    with pytest.raises(ValueError):
        FiniteRankPerturbation(b_columns=(col,), c_columns=(col, col),
                               beta=0.0, gamma=0.0)
    with pytest.raises(ValueError):
        FiniteRankPerturbation(b_columns=(col,), c_columns=(col,),
                               beta=-0.5, gamma=0.0)
    empty = FiniteRankPerturbation(b_columns=(), c_columns=(), beta=0.0, gamma=0.0)
    assert empty.rank == 0
    model = diagonal_model(4, prefix=(0.1, 0.2, 0.3, 0.4))
    with pytest.raises(ValueError):
        SmwKernel(model, empty)


def test_context_heads_and_gram_dedup(s1p1_reduced):
    _, model, _, pert, _ = s1p1_reduced
    ctx = PerturbationContext(model, pert)
    assert ctx.b_head.shape == (model.n_max, 1)
    assert ctx.c_head.shape == (model.n_max, 1)
    idx = np.arange(1, model.n_max + 1)
    assert np.array_equal(ctx.b_head[:, 0], pert.b_columns[0].values(model, idx))
    # the c column is the phase conjugate of the b column: one shared Gram
    assert ctx.gram_c is ctx.gram_b
    assert ctx.smoothed_gram("c", pert.gamma, 0) is ctx.smoothed_gram("b", pert.beta, 0)


def test_transfer_values_against_deep_sum(s1p1_reduced):
    _, model, _, pert, _ = s1p1_reduced
    ctx = PerturbationContext(model, pert)
    lams = np.array([1.3 + 0.2j, -0.4 + 1.1j, 1.0 + 1e-3 + 0.0j])
    g, err = transfer_values(ctx, lams)
    idx = np.arange(1, 400001)
    a = model.entry_values(idx)
    bv = pert.b_columns[0].values(model, idx)
    cv = pert.c_columns[0].values(model, idx)
    for i, lam in enumerate(lams):
        brute = np.sum(np.conj(cv) * bv / (lam - a))
        assert abs(g[i, 0, 0] - brute) <= err[i] + 1e-9
    assert np.all(err < 1e-5)
    # memoized per batch content
    g2, err2 = transfer_values(ctx, lams.copy())
    assert g2 is g and err2 is err


def test_transfer_matrix_singular_flag():
    # one-entry model, G(lam) = conj(kappa)/(lam - a): D vanishes at a + conj(kappa)
    model = diagonal_model(1, prefix=(0.5 + 0j,))
    kappa = 0.3j
    pert = FiniteRankPerturbation(b_columns=(ExplicitColumn((1.0 + 0j,)),),
                                  c_columns=(ExplicitColumn((kappa,)),),
                                  beta=0.0, gamma=0.0)
    bad = 0.5 + np.conj(kappa)
    tm = transfer_matrix(model, pert, bad)
    assert tm.singular and tm.d_inverse is None and tm.cond == np.inf
    ok = transfer_matrix(model, pert, 2.0 + 0j)
    assert not ok.singular
    assert ok.d[0, 0] == pytest.approx(1.0 - np.conj(kappa) / (2.0 - 0.5), rel=1e-12)
    with pytest.raises(SingularD):
        smw_resolvent_apply(model, pert, bad, np.array([1.0 + 0j]))


def test_smw_matches_dense_oracle(trunc_lab):
    fin, fpert = trunc_lab
    dim = fin.n_max
    tr = oracle.truncate(fin, dim, fpert)
    rng = np.random.default_rng(17)
    ctx = PerturbationContext(fin, fpert)
    for i in range(10):
        r = 1.0 + 10 ** rng.uniform(-3, 0.5)
        lam = r * np.exp(1j * rng.uniform(0, 2 * np.pi))
        x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        got = smw_resolvent_apply(fin, fpert, lam, x, ctx)
        want = oracle.oracle_resolvent_solve(tr, lam, x, perturbed=True)
        assert np.linalg.norm(got - want) <= 1e-8 * np.linalg.norm(want)


def test_resolvent_difference_rank_one(trunc_lab):
    fin, fpert = trunc_lab
    dim = 60
    sub = diagonal_model(dim, prefix=fin.entries[:dim])
    idx = np.arange(1, dim + 1)
    b = fpert.b_columns[0].values(fin, idx)
    c = fpert.c_columns[0].values(fin, idx)
    lam = 1.7 + 0.4j
    r_pert = dense_resolvent_matrix(sub.entries, b, c, lam)
    r_base = dense_resolvent_matrix(sub.entries, None, None, lam)
    sv = np.linalg.svd(r_pert - r_base, compute_uv=False)
    assert sv[0] > 0
    assert sv[1] <= 1e-10 * sv[0]


def test_smw_kernel_probe_norms_match_dense(trunc_lab):
    fin, fpert = trunc_lab
    dim = fin.n_max
    tr = oracle.truncate(fin, dim, fpert)
    kern = SmwKernel(fin, fpert)
    rng = np.random.default_rng(23)
    lams = np.array([1.4 + 0.3j, 1.001 * np.exp(0.7j), 2.0 - 1.0j])
    X = rng.standard_normal((3, dim)) + 1j * rng.standard_normal((3, dim))
    Y = rng.standard_normal((2, dim)) + 1j * rng.standard_normal((2, dim))
    out = kern.probe_norms_sq(lams, X, Y)
    T = tr.effective
    for i, lam in enumerate(lams):
        R = np.linalg.inv(lam * np.eye(dim) - T)
        for q in range(3):
            want = float(np.linalg.norm(R @ X[q]) ** 2)
            assert out["x_sq"][i, q] == pytest.approx(want, rel=1e-8)
        for q in range(2):
            want = float(np.linalg.norm(np.conj(R).T @ Y[q]) ** 2)
            assert out["y_sq"][i, q] == pytest.approx(want, rel=1e-8)


def test_smw_kernel_operator_norm_brackets(trunc_lab):
    fin, fpert = trunc_lab
    dim = fin.n_max
    tr = oracle.truncate(fin, dim, fpert)
    kern = SmwKernel(fin, fpert)
    lams = np.array([1.25 + 0.1j, 1.01 * np.exp(2.2j)])
    lower, upper, _ = kern.operator_norms(lams, tol=1e-8)
    for i, lam in enumerate(lams):
        truth = oracle.oracle_resolvent_norm(tr, lam, perturbed=True)
        assert lower[i] <= truth * (1 + 1e-8)
        assert upper[i] >= truth * (1 - 1e-8)
        # power iteration stalls when the top two singular values are close;
        # the bracket stays valid, only its tightness is limited
        assert lower[i] >= truth * (1 - 1e-3)


def test_column_norm_rank_two_explicit():
    model = diagonal_model(6, prefix=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6))
    rng = np.random.default_rng(31)
    M = rng.standard_normal((6, 2)) + 1j * rng.standard_normal((6, 2))
    cols = tuple(ExplicitColumn(tuple(M[:, j])) for j in range(2))
    from stablab.norms import PairSums

    ps = PairSums(model, cols, cols)
    got, err = column_norm(ps)
    assert err == 0.0
    assert got == pytest.approx(float(np.linalg.norm(M, 2)), rel=1e-12)


def test_smoothed_norms_explicit_oracle(s1):
    _, model, profile, _ = s1
    rng = np.random.default_rng(41)
    nb_support = 20
    bv = rng.standard_normal(nb_support) + 1j * rng.standard_normal(nb_support)
    cv = rng.standard_normal(nb_support) + 1j * rng.standard_normal(nb_support)
    pert = FiniteRankPerturbation(
        b_columns=(ExplicitColumn(tuple(bv)),),
        c_columns=(ExplicitColumn(tuple(cv)),),
        beta=0.7, gamma=1.3)
    (got_b, got_c), = smoothed_norms(model, pert, profile)
    a = model.entries[:nb_support]
    w_b = np.abs(1.0 - a) ** (-2.0 * pert.beta)
    w_c = np.abs(1.0 - a) ** (-2.0 * pert.gamma)
    assert got_b == pytest.approx(float(np.sqrt(np.sum(np.abs(bv) ** 2 * w_b))), rel=1e-12)
    assert got_c == pytest.approx(float(np.sqrt(np.sum(np.abs(cv) ** 2 * w_c))), rel=1e-12)


def test_smoothed_norms_diverging_tail_raises(s1):
    _, model, profile, _ = s1
    # w=0, t=1 columns decay like 1/n; smoothing by beta=1 weights the tail by
    # theta^{-2} ~ n^2, so the Gram series diverges
    col = SmoothedPowerColumn(w=0.0, t=1.0, scale=0.1)
    pert = FiniteRankPerturbation(b_columns=(col,), c_columns=(col,),
                                  beta=1.0, gamma=1.0)
    with pytest.raises(RangeViolation):
        smoothed_norms(model, pert, profile)


def test_proportional_split_cases(s1p1_reduced):
    _, _, _, pert, _ = s1p1_reduced
    b1, g1 = proportional_split(pert, 1.0)
    assert b1 == pytest.approx(0.5) and g1 == pytest.approx(0.5)
    assert b1 + g1 == pytest.approx(1.0, abs=0)
    zero = FiniteRankPerturbation(b_columns=(), c_columns=(), beta=0.0, gamma=0.0)
    assert proportional_split(zero, 0.0) == (0.0, 0.0)
    small = FiniteRankPerturbation(b_columns=(), c_columns=(), beta=0.25, gamma=0.25)
    with pytest.raises(SplitInfeasible):
        proportional_split(small, 1.0)


def test_transfer_bound_certify_s1p1(s1p1_reduced, s1p1_grid):
    _, model, profile, pert, _ = s1p1_reduced
    ctx = PerturbationContext(model, pert)
    rep = transfer_bound_certify(model, pert, profile, 0, s1p1_grid, ctx, m_2=8.04)
    assert rep.name == "transfer_sup_0"
    assert rep.status == "certified"
    assert 0.0 < rep.supremum < 1.0
    d = rep.details
    assert d["smoothed_product"] > 0
    assert d["empirical_ratio"] == pytest.approx(rep.supremum / d["smoothed_product"])
    assert d["complement_sup"] <= rep.supremum * (1 + 1e-9)
    assert d["complement_ok"]


def test_d_inverse_sup_certified_by_neumann(s1p1_reduced, s1p1_grid):
    _, model, profile, pert, _ = s1p1_reduced
    ctx = PerturbationContext(model, pert)
    rep = d_inverse_sup(model, pert, profile, s1p1_grid, ctx)
    assert rep.status == "certified"
    c = rep.details["transfer_sup"]
    assert c < 1.0
    assert rep.supremum <= 1.0 / (1.0 - c) + 1e-9
    assert rep.supremum >= 1.0 - 1e-12
    assert rep.details["singular_witnesses"] == []


def test_injectivity_factor_check_s1p1(s1p1_reduced):
    _, model, profile, pert, _ = s1p1_reduced
    rep = injectivity_factor_check(model, pert, profile, 0, samples=8, trunc_dim=300)
    assert rep.status == "certified"
    assert rep.details["split"] == [pytest.approx(0.5), pytest.approx(0.5)]
    assert rep.details["residual"] <= 1e-8
    assert rep.details["middle_perturbation_norm"] < 1.0
    assert rep.details["eigen_gap_at_point"] > 1e-6


def test_spectrum_inclusion_s1p1(s1p1_reduced, s1p1_grid):
    _, model, profile, pert, _ = s1p1_reduced
    rep = spectrum_inclusion_check(model, pert, profile, s1p1_grid)
    assert rep.status == "certified"
    assert rep.supremum < 1.0
    assert rep.details["escaped_eigenvalues"] == []
    assert rep.details["singular_witnesses"] == []
    assert rep.details["trunc_dim"] == 500


def test_spectrum_inclusion_flags_escape(s1p1_reduced, s1p1_grid):
    # beta=gamma=0 rank-1 bump moves a_1 = 0 to 2i, outside the closed disk;
    # the transfer matrix is singular at the grid point lam = 2i
    _, model, profile, _, _ = s1p1_reduced
    pert = FiniteRankPerturbation(
        b_columns=(ExplicitColumn((1.0 + 0j,)),),
        c_columns=(ExplicitColumn((-2.0j,)),),
        beta=0.0, gamma=0.0)
    rep = spectrum_inclusion_check(model, pert, profile, s1p1_grid)
    assert rep.status == "refuted"
    escaped = np.array([complex(re, im) for re, im in rep.details["escaped_eigenvalues"]])
    assert np.any(np.abs(escaped - 2.0j) < 1e-9)
    assert rep.supremum == pytest.approx(2.0, rel=1e-12)
    sing = np.array([complex(re, im) for re, im in rep.details["singular_witnesses"]])
    assert len(sing) > 0
    assert np.min(np.abs(sing - 2.0j)) < 1e-8
