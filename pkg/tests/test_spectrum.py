import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcac.geometry import GridSpec
from mcac.spectrum import (
    ProfileAnsatz,
    TridiagonalOperator,
    assemble,
    build_psi,
    consecutive_ratios,
    dense_oracle,
    interval_ansatz,
    min_rayleigh,
    neumann_second_difference,
    spectral_report,
    sweep,
    uniform_constant,
)


def constant_ansatz(value, n=200, eps=0.1):
    g = GridSpec.interval(n)
    return ProfileAnsatz(g.axis(0), np.full(n, float(value)), eps, 0.0, g.spacing[0])


@pytest.fixture(scope="module")
def reports():
    return sweep([0.1, 0.05, 0.025])


@pytest.mark.parametrize(
    "p_eps, eps, x, expected", [(0.0, 0.05, 0.0, 0.0), (0.0, 0.05, 0.5, 1.0), (0.0, 0.05, -0.5, -1.0), (1.0, 0.04, 0.0, 0.0)]
)
def test_build_psi_values(cubic, p_eps, eps, x, expected):
    a = build_psi(*cubic, np.array([x, x + 1e-3]), eps, p_eps=p_eps)
    assert a.psi[0] == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("eps", [0.1, 0.05, 0.025])
def test_build_psi_invariants(cubic, eps):
    a = interval_ansatz(*cubic, eps, p_eps=2.0)
    assert np.max(np.abs(a.psi)) <= 1.2
    far = np.abs(a.grid) >= np.sqrt(eps)
    assert np.max(np.abs(a.psi[far] - np.sign(a.grid[far]))) <= 2 * eps


@pytest.mark.parametrize("kwargs", [{"eps": 0.3}, {"eps": 0.05, "p_eps": 2.5}])
def test_build_psi_rejects(cubic, kwargs):
    with pytest.raises(ValueError):
        build_psi(*cubic, np.linspace(-1, 1, 11), **kwargs)


def test_second_difference_zero_row_sums():
    diag, off = neumann_second_difference(50, 0.1)
    T = TridiagonalOperator(diag, off)
    np.testing.assert_allclose(T.matvec(np.ones(50)), 0.0, atol=1e-10)
    np.testing.assert_allclose(T.dense(), T.dense().T)


@pytest.mark.parametrize("value, expected", [(1.0, 200.0), (0.0, -100.0)])
def test_constant_potential_unconstrained(well, value, expected):
    res = min_rayleigh(assemble(constant_ansatz(value), well))
    assert res.value == pytest.approx(expected, abs=1e-6)


def test_constant_potential_zero_mean(well):
    res = min_rayleigh(assemble(constant_ansatz(1.0), well), zero_mean=True)
    assert res.value == pytest.approx(200 + np.pi**2 / 4, abs=1e-4)


def test_zero_mean_second_order(well):
    errs = [
        min_rayleigh(assemble(constant_ansatz(1.0, n), well), zero_mean=True).value - 200 - np.pi**2 / 4
        for n in (100, 200)
    ]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_translation_quasi_mode(cubic, well):
    # at h = eps/16 the unconstrained minimum is close to zero
    a = interval_ansatz(*cubic, 0.05, h_ratio=1 / 16)
    assert abs(min_rayleigh(assemble(a, well)).value) <= 0.1


@pytest.mark.parametrize("eps", [0.1, 0.05, 0.025])
def test_rayleigh_result_consistency(cubic, well, eps):
    op = assemble(interval_ansatz(*cubic, eps), well)
    lo = min_rayleigh(op)
    zm = min_rayleigh(op, zero_mean=True)
    for res in (lo, zm):
        assert np.linalg.norm(res.vector) == pytest.approx(1.0)
        assert op.rayleigh(res.vector) == pytest.approx(res.value, abs=1e-8 * max(1, abs(res.value)))
    assert abs(np.sum(zm.vector)) <= 1e-10
    assert zm.value >= lo.value
    assert lo.value == pytest.approx(dense_oracle(op), abs=1e-8)
    assert zm.value == pytest.approx(dense_oracle(op, zero_mean=True), abs=1e-8)


@given(st.integers(0, 2**32 - 1), st.integers(5, 60))
def test_min_rayleigh_matches_dense(seed, n):
    r = np.random.default_rng(seed)
    op = TridiagonalOperator(r.standard_normal(n) * 5, r.standard_normal(n - 1))
    assert min_rayleigh(op).value == pytest.approx(dense_oracle(op), abs=1e-8)
    assert min_rayleigh(op, zero_mean=True).value == pytest.approx(dense_oracle(op, zero_mean=True), abs=1e-8)


def test_sweep_bounded_below(reports):
    ratios = consecutive_ratios(reports)
    assert all(r <= 2 for r in ratios)
    assert uniform_constant(reports) == 0.0
    assert all(r.lam_min_zero_mean >= r.lam_min_all for r in reports)


def test_sweep_without_constraint_blows_up(reports):
    vals = [r.lam_min_all for r in reports]
    assert vals[0] > vals[1] > vals[2]


def test_corrector_modulation_is_order_one(reports):
    shifted = sweep([0.1, 0.05, 0.025], p_eps=1.0)
    diffs = [abs(a.lam_min_zero_mean - b.lam_min_zero_mean) for a, b in zip(reports, shifted)]
    assert max(diffs) <= 1.0


def test_spectral_report_fields(cubic, well):
    a = interval_ansatz(*cubic, 0.1)
    rep = spectral_report(a, well)
    assert rep.eps == 0.1
    assert rep.eigvec.shape == rep.grid.shape == a.psi.shape


def test_sweep_rejects_order():
    with pytest.raises(ValueError):
        sweep([0.05, 0.1])
