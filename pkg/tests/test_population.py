import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conespec.errors import NumericalError, UsageError
from conespec.maps import Linear, Scale, TwoSex, identity
from conespec.ordered_space import SpaceSpec
from conespec.population import (
    RankConfig,
    TwoSexParams,
    build_rank_model,
    contraction_renorm,
    dissipation_matrix,
    dissipativity_check,
    orbit_simulate,
    rank_cw_formulas,
    rank_positivity_conditions,
    reference_rank_config,
    saturating_semiflow,
    spectral_radius_estimate,
    twosex_closed_form,
)
from conespec.radii import cw_numbers, enclosure_report

REF = reference_rank_config()


def zero_config(n=5):
    return RankConfig(np.zeros(n), np.zeros(n - 1), np.zeros((n, n)))


def random_config(rng, n):
    beta = rng.random((n, n)) * (rng.random((n, n)) > 0.7)
    return RankConfig(rng.random(n) * 0.6, rng.random(n - 1), beta)


# -- configs --------------------------------------------------------------


def test_config_roundtrip_through_triples():
    again = RankConfig.from_triples(REF.q, REF.p, REF.triples())
    np.testing.assert_array_equal(again.beta, REF.beta)
    assert REF.triples() == [[1, 1, 0.4], [1, 2, 0.3], [2, 1, 0.3]]


def test_config_validation():
    with pytest.raises(UsageError):
        RankConfig([1, 1], [1, 1], np.zeros((2, 2)))
    with pytest.raises(UsageError):
        RankConfig.from_triples([1, 1], [1], [(3, 1, 0.5)])
    with pytest.raises(UsageError):
        RankConfig([1, -1], [1], np.zeros((2, 2)))
    with pytest.raises(UsageError):
        TwoSexParams(0.1, 0.1, -1, 0)


# -- rank model -----------------------------------------------------------


def test_uniform_order_bound():
    model = build_rank_model(REF)
    np.testing.assert_allclose(model.u, [1, 0.9, 0.6, 0.3, 0.15], rtol=0, atol=1e-15)
    assert model.c == pytest.approx(1.5)


def test_zero_config_model():
    model = build_rank_model(zero_config())
    np.testing.assert_array_equal(model.u, [1, 0, 0, 0, 0])
    np.testing.assert_array_equal(model.map.apply(np.arange(5.0)), 0)


def test_saturating_config_refused():
    with pytest.raises(UsageError):
        build_rank_model(RankConfig(REF.q, REF.p, REF.beta, s=1.0))


@settings(max_examples=100)
@given(arrays(np.float64, 5, elements=st.floats(0, 1e3)))
def test_order_bound_holds(x):
    b, u, c = build_rank_model(REF)
    assert np.all(b.apply(x) <= c * np.max(x) * u * (1 + 1e-14))


@pytest.mark.parametrize("m, expected", [(1, (0.9, 0.9)), (2, (0.6, 0.3)), (5, (0.1, 0.05))])
def test_rank_cw_formulas(m, expected):
    assert rank_cw_formulas(REF, m) == pytest.approx(expected, abs=1e-14)


@settings(max_examples=50)
@given(st.integers(0, 10_000), st.integers(2, 8))
def test_cw_formulas_match_direct_evaluation(seed, n):
    cfg = random_config(np.random.default_rng(seed), n)
    b = cfg.rank_map()
    for m in range(1, n + 1):
        xm = np.zeros(n)
        xm[:m] = 1
        at_x, at_e = rank_cw_formulas(cfg, m)
        assert abs(cw_numbers(b, xm).lower - at_x) <= 1e-14
        assert abs(cw_numbers(b, np.eye(n)[m - 1]).lower - at_e) <= 1e-14


def test_cw_formula_range():
    with pytest.raises(UsageError):
        rank_cw_formulas(REF, 6)


def test_positivity_conditions_examples():
    assert rank_positivity_conditions(REF) == (True, True)
    cfg = RankConfig.from_triples(np.zeros(5), [0.5, 0.5, 0, 0], [(2, 3, 1.0)])
    assert rank_positivity_conditions(cfg) == (False, True)
    assert rank_positivity_conditions(zero_config()) == (False, False)


def test_all_zero_config_has_zero_upper_bound():
    rep = enclosure_report(zero_config().rank_map(), SpaceSpec(5), 50)
    assert rep.enclosure[1] <= 1e-6


def test_saturating_semiflow_below_homogeneous_map():
    cfg = RankConfig(REF.q, REF.p, REF.beta, s=0.7)
    F, b = saturating_semiflow(cfg), REF.rank_map()
    rng = np.random.default_rng(0)
    for _ in range(200):
        x = rng.random(5) * 10 ** rng.uniform(-2, 3)
        assert np.all(F(x) <= b.apply(x))


# -- two-sex model --------------------------------------------------------


def test_twosex_reference_eigenpair():
    eig = twosex_closed_form(TwoSexParams(0.5, 0.4, 1.0, 0.8))
    assert eig.lam == pytest.approx(8 / 9, abs=1e-15)
    np.testing.assert_allclose(eig.eigenvector, [1.1 / 1.8, 0.7 / 1.8], atol=1e-15)
    assert eig.interior


def test_twosex_symmetric_case():
    eig = twosex_closed_form(TwoSexParams(0.3, 0.3, 0.8, 0.8))
    assert eig.lam == pytest.approx(0.3 + 0.4, abs=1e-15)
    np.testing.assert_allclose(eig.eigenvector, [0.5, 0.5], atol=1e-15)


def test_twosex_diagonal_case():
    eig = twosex_closed_form(TwoSexParams(0.3, 0.7, 0, 0))
    assert eig.lam == 0.7 and not eig.interior
    np.testing.assert_array_equal(eig.eigenvector, [0, 1])


@settings(max_examples=200)
@given(st.tuples(*[st.floats(0, 5)] * 4).filter(lambda t: t[2] + t[3] > 1e-3))
def test_twosex_formula_is_an_eigenpair(params):
    eig = twosex_closed_form(TwoSexParams(*params))
    f, m = eig.eigenvector
    # f is computed as 1 - m, so the sum is 1 up to one rounding
    assert abs(f + m - 1.0) <= 2 * np.finfo(float).eps * (abs(f) + abs(m))
    if eig.interior:
        out = TwoSex(*params).apply(eig.eigenvector)
        np.testing.assert_allclose(out, eig.lam * eig.eigenvector, atol=1e-14 * (1 + eig.lam))


# -- orbits ---------------------------------------------------------------


def test_orbit_geometric_growth():
    traj = orbit_simulate(Scale(2.0, identity(2)), [1, 1], 10, SpaceSpec(2, "sup"))
    np.testing.assert_allclose(traj.norms, 2.0 ** np.arange(11), rtol=1e-15)


def test_orbit_twosex_growth_rate():
    traj = orbit_simulate(TwoSex(0.5, 0.4, 1.0, 0.8), [1, 1], 200, normalize=True)
    assert traj.log_growth[-1] == pytest.approx(np.log(8 / 9), abs=1e-12)


def test_orbit_zero_map():
    traj = orbit_simulate(Scale(0.0, identity(3)), [1, 2, 3], 4)
    np.testing.assert_array_equal(traj.norms[1:], 0)


def test_orbit_normalized_survives_huge_growth():
    traj = orbit_simulate(Scale(1e5, identity(2)), [1, 1], 100, SpaceSpec(2), normalize=True)
    assert traj.log_norms[-1] == pytest.approx(100 * np.log(1e5), rel=1e-12)


def test_orbit_overflow_raises_with_step():
    with pytest.raises(NumericalError, match="step"):
        orbit_simulate(Scale(1e5, identity(2)), [1, 1], 100)


def test_orbit_csv():
    text = orbit_simulate(identity(2), [1, 1], 2, SpaceSpec(2)).to_csv()
    assert text == "step,norm,log_norm\n0,1,0\n1,1,0\n2,1,0\n"


# -- renorming and dissipativity ------------------------------------------


def test_spectral_radius_estimate():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert spectral_radius_estimate(a) == pytest.approx(max(abs(np.linalg.eigvals(a))), rel=1e-10)
    assert spectral_radius_estimate(np.zeros((2, 2))) == 0


def test_renorm_nilpotent_example():
    ren = contraction_renorm(Linear([[0.0, 0.9], [0.0, 0.0]]), SpaceSpec(2, "sup"), 0.5)
    assert ren.m == 1
    np.testing.assert_allclose(ren.weights, [1, 2])
    assert ren([1, 1]) == pytest.approx(2.8)
    assert ren(ren.matrix @ np.ones(2)) == pytest.approx(0.9)


def test_renorm_trivial_cases():
    assert contraction_renorm(np.zeros((2, 2)), SpaceSpec(2), 0.5).m == 0
    ren = contraction_renorm(Scale(0.25, identity(3)), SpaceSpec(3, "sum"), 0.5)
    assert ren.m == 0
    x = np.array([1.0, 2.0, 3.0])
    # contraction factor 0.25 leaves a factor-2 slack against r = 0.5
    assert ren(ren.matrix @ x) == pytest.approx(0.25 * ren(x))


def test_renorm_errors():
    with pytest.raises(NumericalError, match="too close"):
        contraction_renorm(np.array([[0.5, 1.0], [0.0, 0.5]]), SpaceSpec(2), 0.501)
    with pytest.raises(UsageError):
        contraction_renorm(np.eye(2), SpaceSpec(2), 0.5)
    with pytest.raises(UsageError):
        contraction_renorm(TwoSex(0.1, 0.1, 0.1, 0.1), SpaceSpec(2), 0.5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["sup", "sum", "euclid", "bv"]))
def test_renorm_contracts(seed, kind):
    rng = np.random.default_rng(seed)
    a = rng.random((4, 4))
    a *= 0.9 / max(abs(np.linalg.eigvals(a)))
    r = 0.95
    ren = contraction_renorm(a, SpaceSpec(4, kind), r, samples=100, seed=seed)
    for x in rng.random((50, 4)):
        assert ren(a @ x) <= r * ren(x) * (1 + 1e-12)


def test_dissipation_matrix_shape():
    cfg = RankConfig(REF.q, REF.p, REF.beta, s=1.0)
    a = dissipation_matrix(cfg, 0.2, 1.0)
    assert a[0, 0] == pytest.approx(0.2 + 0.7 / 2)
    assert a[0, 1] == pytest.approx(0.3 / 2)
    assert a[3, 2] == a[3, 3] == 0.2


def test_dissipativity_saturating_rank_model():
    cfg = RankConfig(REF.q, REF.p, REF.beta, s=1.0)
    rep = dissipativity_check(cfg, eps=0.2, c=1.0, seeds=50, steps=200)
    assert rep.premise_ok and rep.contraction_ok
    assert np.isfinite(rep.bound_c_hat)
    assert rep.conclusion_ok
    assert np.all(rep.orbit_limsup <= rep.bound_c_hat)
    assert rep.warnings == []
    assert rep.to_csv().splitlines()[0] == "seed,orbit_limsup,bound_c_hat,premise_ok,contraction_ok"


def test_dissipativity_homogeneous_growth_flags_premise():
    rep = dissipativity_check(REF, eps=0.2, c=1.0, seeds=5, steps=200)
    assert not rep.premise_ok
    assert rep.bound_c_hat == np.inf
    assert np.max(rep.orbit_limsup) > 1e10


def test_dissipativity_zero_semiflow():
    cfg = RankConfig(np.zeros(3), np.zeros(2), np.zeros((3, 3)), s=1.0)
    rep = dissipativity_check(cfg, eps=0.1, c=1.0, seeds=5, steps=20)
    np.testing.assert_array_equal(rep.orbit_limsup, 0)


def test_dissipativity_eps_warning_and_norm_guard():
    cfg = RankConfig(REF.q, REF.p, REF.beta, s=1.0)
    assert dissipativity_check(cfg, eps=0.4, c=1.0, seeds=2, steps=10).warnings
    with pytest.raises(UsageError):
        dissipativity_check(cfg, eps=0.1, c=1.0, norm_kind="bv")


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["sup", "sum", "euclid"]))
def test_dissipativity_conclusion_follows_premises(seed, kind):
    rng = np.random.default_rng(seed)
    cfg = random_config(rng, 4)
    cfg.s = float(rng.uniform(0.2, 2.0))
    rep = dissipativity_check(cfg, eps=0.1, c=1.0, seeds=10, steps=100, norm_kind=kind, seed=seed)
    if rep.premise_ok and rep.contraction_ok:
        assert rep.conclusion_ok
