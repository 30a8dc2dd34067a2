import numpy as np
import pytest

from stablab.errors import SpectrumHit
from stablab.models import ExplicitColumn, diagonal_model, dense_model
from stablab.perturbation import FiniteRankPerturbation
from stablab import oracle

RNG = np.random.default_rng(19)
ENTRIES = 0.8 * RNG.uniform(0.1, 1.0, 8) * np.exp(1j * RNG.uniform(0, 2 * np.pi, 8))
BVEC = RNG.standard_normal(8) + 1j * RNG.standard_normal(8)
CVEC = RNG.standard_normal(8) + 1j * RNG.standard_normal(8)


def _lab():
    model = diagonal_model(8, prefix=ENTRIES)
    pert = FiniteRankPerturbation(
        b_columns=(ExplicitColumn(tuple(BVEC)),),
        c_columns=(ExplicitColumn(tuple(CVEC)),),
        beta=0.0, gamma=0.0)
    return model, pert


def test_truncate_shapes_and_values():
    model, pert = _lab()
    tr = oracle.truncate(model, 5, pert)
    assert tr.n == 5
    assert np.array_equal(tr.matrix, np.diag(ENTRIES[:5]))
    want = np.diag(ENTRIES[:5]) + np.outer(BVEC[:5], np.conj(CVEC[:5]))
    assert np.allclose(tr.perturbed, want, rtol=0, atol=1e-15)
    assert np.array_equal(tr.effective, tr.perturbed)
    plain = oracle.truncate(model, 5)
    assert plain.perturbed is None
    assert np.array_equal(plain.effective, plain.matrix)


def test_truncate_guards():
    model, _ = _lab()
    with pytest.raises(ValueError):
        oracle.truncate(model, 9)
    big = dense_model(0.1 * np.eye(3))
    with pytest.raises(ValueError):
        oracle.truncate(big, oracle.ORACLE_DIM_CAP + 1)
    # dense models section the stored matrix
    tr = oracle.truncate(big, 2)
    assert np.array_equal(tr.matrix, 0.1 * np.eye(2))


def test_oracle_resolvent_norm_and_solve():
    model, pert = _lab()
    tr = oracle.truncate(model, 8, pert)
    lam = 1.4 + 0.3j
    mat = lam * np.eye(8) - tr.effective
    inv = np.linalg.inv(mat)
    assert oracle.oracle_resolvent_norm(tr, lam, perturbed=True) == pytest.approx(
        float(np.linalg.norm(inv, 2)), rel=1e-10)
    x = RNG.standard_normal(8) + 1j * RNG.standard_normal(8)
    got = oracle.oracle_resolvent_solve(tr, lam, x, perturbed=True)
    assert np.allclose(got, inv @ x, rtol=1e-10, atol=0)
    with pytest.raises(SpectrumHit):
        oracle.oracle_resolvent_norm(tr, complex(ENTRIES[0]), perturbed=False)


def test_oracle_eigens():
    model, pert = _lab()
    tr = oracle.truncate(model, 8, pert)
    # diagonal fast path returns the entries themselves
    assert np.array_equal(oracle.oracle_eigens(tr, perturbed=False), ENTRIES)
    eigs = np.sort_complex(oracle.oracle_eigens(tr))
    want = np.sort_complex(np.linalg.eigvals(tr.perturbed))
    assert np.allclose(eigs, want, rtol=1e-12, atol=1e-14)


def test_oracle_orbit_and_first_passage():
    model, pert = _lab()
    tr = oracle.truncate(model, 8, pert)
    x = np.ones(8, dtype=complex)
    got = oracle.oracle_orbit(tr, x, 5)
    want = np.linalg.matrix_power(tr.effective, 5) @ x
    assert np.allclose(got, want, rtol=1e-12, atol=0)
    steps = [1, 3, 7, 12]
    norms = oracle.oracle_orbit_norms(tr, x, steps)
    for s, v in zip(steps, norms):
        ref = float(np.linalg.norm(np.linalg.matrix_power(tr.effective, s) @ x))
        assert v == pytest.approx(ref, rel=1e-12)
    # the random rank-1 bump is expansive; the plain section decays
    fp = oracle.oracle_first_passage(tr, x, 1e-3, 500, perturbed=False)
    assert fp is not None
    before = float(np.linalg.norm(np.linalg.matrix_power(tr.matrix, fp - 1) @ x))
    after = float(np.linalg.norm(np.linalg.matrix_power(tr.matrix, fp) @ x))
    cut = 1e-3 * float(np.linalg.norm(x))
    assert after <= cut < before
    assert oracle.oracle_first_passage(tr, x, 1e-30, 10, perturbed=False) is None
