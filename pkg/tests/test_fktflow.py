from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from tests import oracles
from tests.strategies import seeds
from todaflag import fktflow as fk
from todaflag import linalg as la
from todaflag.symgroup import Permutation, ReducedWord, interval, longest, reduced_word_of
from todaflag.tnncell import CellPoint, Spectrum, build_g, default_spectrum, random_cell
from todaflag.verify import chevalley_drift, lax_residuals

SL5_SPEC = Spectrum((-2, -1, 0, 1, 2))


@pytest.fixture(scope="module")
def sl5_flow():
    cell = CellPoint(Permutation((1, 3, 5, 2, 4)), ReducedWord.from_letters((2, 3, 1, 4, 3, 2), 5), (1, 2, 3))
    return fk.KostantTodaFlow(spectrum=SL5_SPEC).fit(build_g(cell))


def test_sl5_g_matches_oracle(sl5_flow):
    assert sl5_flow.g_.tolist() == oracles.SL5_G


def test_sl5_initial_matrix_exact(sl5_flow):
    expect = [[Fraction(x) for x in row] for row in oracles.SL5_L0]
    assert sl5_flow.lax0_.tolist() == expect
    L0, u0, b0 = fk.initial_L0(sl5_flow.g_, SL5_SPEC)
    assert L0.tolist() == expect
    assert (u0.dot(b0) == sl5_flow.E_.dot(sl5_flow.g_)).all()


@pytest.mark.parametrize("t", sorted(oracles.SL5_L))
def test_sl5_lax_matches_high_precision(sl5_flow, t):
    ref = np.array(oracles.SL5_L[t], dtype=float)
    assert np.max(np.abs(sl5_flow.lax(t) - ref)) < 1e-12


@pytest.mark.parametrize("t", sorted(oracles.SL5_LOG_TAU))
def test_sl5_log_tau_matches_expm(sl5_flow, t):
    assert np.allclose(sl5_flow.log_tau(t), oracles.SL5_LOG_TAU[t], atol=1e-12)


def test_sl5_asymptotics(sl5_flow):
    rep = fk.asymptotic_check(sl5_flow.g_, SL5_SPEC, T=40.0)
    assert rep.passed
    assert rep.v == (1, 3, 5, 2, 4) and rep.w == (3, 5, 1, 4, 2)
    assert np.allclose(rep.diag_minus, [-2, 0, 2, -1, 1], atol=1e-12)
    assert np.allclose(rep.diag_plus, [0, 2, -2, 1, -1], atol=1e-12)
    assert set(rep.to_json()) == {"v", "w", "T", "diag_minus", "diag_plus", "max_subdiag", "max_diag_error", "pass"}


def test_n2_by_hand():
    g = build_g(CellPoint(Permutation((1, 2)), ReducedWord.from_letters((1,), 2), (1,)))
    f = fk.KostantTodaFlow(spectrum=(-1, 1)).fit(g)
    assert f.lax0_.tolist() == [[0, 1], [1, 0]]
    assert f.u0_.tolist() == [[1, 0], [0, 1]]
    assert f.b0_.tolist() == [[2, 1], [0, 1]]
    # closed form: tau_1 = cosh t, a_11 = tanh t
    for t in (-3.0, 0.4, 2.5):
        assert f.lax(t)[0, 0] == pytest.approx(np.tanh(t), abs=1e-14)
        assert f.log_tau(t)[0] == pytest.approx(np.log(np.cosh(t)), abs=1e-13)


def _expm_log_tau(L0, t):
    X = scipy.linalg.expm(t * la.as_float(L0))
    return np.array([np.log(np.linalg.det(X[:k, :k])) for k in range(1, L0.shape[0] + 1)])


@given(seeds, st.floats(-1.5, 1.5))
def test_tau_matches_matrix_exponential(seed, t):
    cell = random_cell(4, np.random.default_rng(seed), strict=True)
    f = fk.KostantTodaFlow().fit(build_g(cell))
    assert np.allclose(f.log_tau(t), _expm_log_tau(f.lax0_, t), atol=1e-8)


@given(seeds, st.floats(-2, 2))
def test_two_routes_agree(seed, t):
    cell = random_cell(4, np.random.default_rng(seed), random_word=True)
    g = build_g(cell)
    a = fk.KostantTodaFlow(method="plucker").fit(g)
    b = fk.KostantTodaFlow(method="lu").fit(g)
    assert np.max(np.abs(a.lax(t) - b.lax(t))) < 1e-9
    assert np.max(np.abs(a.diag_via_tau(t) - np.diag(a.lax(t)))) < 1e-9


@given(seeds, st.floats(-8, 8))
def test_lax_matrix_shape_and_spectrum(seed, t):
    cell = random_cell(4, np.random.default_rng(seed))
    f = fk.KostantTodaFlow().fit(build_g(cell))
    L = f.lax(t)
    assert np.all(np.diag(L, 1) == 1)
    assert np.all(np.triu(L, 2) == 0)
    assert abs(np.trace(L)) < 1e-9
    # U(t) is recovered from L(t) alone
    assert np.max(np.abs(fk.companion_embed(L, f.spectrum_) - f.unipotent(t))) < 1e-8


@given(seeds)
def test_chevalley_conserved(seed):
    cell = random_cell(4, np.random.default_rng(seed), strict=True)
    f = fk.KostantTodaFlow().fit(build_g(cell))
    assert chevalley_drift(f, np.linspace(-10, 10, 11)) < 1e-9


def test_lax_residual_second_order(sl5_flow):
    r3, r4 = lax_residuals(sl5_flow, 0.2)
    assert r4 < 1e-6
    assert 80 <= r3 / r4 <= 120


def test_higher_time_vector_field(sl5_flow):
    # d/dt_2 L = [(L^2)_{>=0}, L] by central differences
    t = np.array([0.1, 0.0, 0.0, 0.0])
    e2 = np.array([0.0, 1e-4, 0.0, 0.0])
    d = (sl5_flow.lax(t + e2) - sl5_flow.lax(t - e2)) / 2e-4
    assert np.max(np.abs(d - fk.lax_vector_field(sl5_flow.lax(t), 2))) < 1e-5


def test_classical_case_sorts():
    n = 3
    g = build_g(CellPoint(Permutation((1, 2, 3)), reduced_word_of(longest(n)), (1, 2, 3)))
    f = fk.KostantTodaFlow().fit(g)
    assert f.limits() == ((1, 2, 3), (3, 2, 1))
    assert np.allclose(np.diag(f.lax(-40.0)), [-1, 0, 1], atol=1e-12)
    assert np.allclose(np.diag(f.lax(40.0)), [1, 0, -1], atol=1e-12)


def test_direction_to_fixed_point_frozen():
    c = fk.direction_to_fixed_point((3, 1, 2), Spectrum((-1, 0, 1)))
    assert c.tolist() == [0.5, 1.5]


@pytest.mark.parametrize("params", [(1, 1, 1), (2, 1, 3)])
def test_fixed_points_sl4(params):
    spec = default_spectrum(4)
    cell = CellPoint(Permutation((1, 2, 4, 3)), ReducedWord.from_letters((2, 3, 2, 1), 4), params)
    f = fk.KostantTodaFlow(spectrum=spec).fit(build_g(cell))
    for z in interval(cell.v, cell.w):
        c = fk.direction_to_fixed_point(z, spec)
        theta = f.theta(c)
        assert all(theta[z(j) - 1] > theta[z(j + 1) - 1] for j in range(1, 4))
        L = f.lax(40.0 / spec.min_gap() * c)
        assert fk.fixed_point_test(L)
        assert np.allclose(np.diag(L), spec.permuted(z), atol=1e-6)


def test_extended_precision_agrees(sl5_flow):
    ext = fk.KostantTodaFlow(spectrum=SL5_SPEC, precision="extended").fit(sl5_flow.g_)
    assert ext.lax(1.5).dtype == np.longdouble
    assert np.max(np.abs(ext.lax(1.5).astype(float) - sl5_flow.lax(1.5))) < 1e-14


def test_extended_precision_from_env(monkeypatch, sl5_flow):
    monkeypatch.setenv("TODA_FLAG_PRECISION", "extended")
    f = fk.KostantTodaFlow(spectrum=SL5_SPEC, precision=None).fit(sl5_flow.g_)
    assert f.dtype_ == np.longdouble


def test_estimator_api(sl5_flow):
    est = fk.KostantTodaFlow(spectrum=SL5_SPEC)
    assert clone(est).get_params() == est.get_params()
    with pytest.raises(NotFittedError):
        est.lax(0.0)
    X = np.linspace(-1, 1, 5)
    out = sl5_flow.transform(X)
    assert out.shape == (5, 5)
    assert np.allclose(out.sum(axis=1), 0, atol=1e-12)
    assert sl5_flow.trajectory(X).shape == (5, 5, 5)
    assert sl5_flow.log_tau_grid(X).shape == (5, 5)


def test_invalid_inputs():
    g = build_g(CellPoint(Permutation((1, 2, 3)), reduced_word_of(longest(3)), (1, 1, 1)))
    with pytest.raises(ValueError):
        fk.KostantTodaFlow(spectrum=(-1, 1)).fit(g)
    with pytest.raises(ValueError):
        fk.KostantTodaFlow(method="qr").fit(g)
    with pytest.raises(ValueError):
        fk.asymptotic_check(g, default_spectrum(3), T=-1.0)
    f = fk.KostantTodaFlow().fit(g)
    with pytest.raises(ValueError):
        f.lax([0.0, 0.0, 1.0])  # too many times for n = 3


def test_lu_route_fails_loudly_far_out(sl5_flow):
    f = fk.KostantTodaFlow(spectrum=SL5_SPEC, method="lu").fit(sl5_flow.g_)
    with pytest.raises(la.SingularPrincipalMinor):
        f.lax(400.0)


def test_far_time_entry_relative_accuracy(sl5_flow):
    # the (2,1) entry at t = 40 is ~1e-35 and still has full relative accuracy
    assert sl5_flow.lax(40.0)[1, 0] == pytest.approx(3.6097027756908303446e-35, rel=1e-10)
