import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conespec.errors import UsageError
from conespec.maps import (
    Compose,
    FunctionMap,
    Linear,
    Perturb,
    Power,
    Rank,
    Scale,
    TwoSex,
    as_matrix,
    check_homogeneous_order_preserving,
    cone_operator_norm,
    evaluate,
    identity,
    interval_indicators,
    linear_cone_norm,
)
from conespec.ordered_space import NORM_KINDS, SpaceSpec, companion_half_norm, norm

TWOSEX = TwoSex(0.5, 0.4, 1.0, 0.8)
SMALL_RANK = Rank(q=[0.5, 0.3], p=[0.6], beta=[[0.4, 0.0], [0.0, 0.0]])

matrices = st.integers(1, 4).flatmap(lambda n: arrays(np.float64, (n, n), elements=st.floats(0, 5)))


def sampled_quotients(a, kind, rng, count=4000):
    """Norm quotients of ``x -> Ax`` over random (often sparse) cone vectors."""
    n = a.shape[0]
    space = SpaceSpec(n, kind)
    xs = rng.random((count, n)) * (rng.random((count, n)) > 0.4)
    xs = xs[np.any(xs > 0, axis=1)]
    return np.array([norm(space, a @ x) / norm(space, x) for x in xs])


# -- evaluation -----------------------------------------------------------


def test_twosex_axis_is_eigenvector():
    np.testing.assert_array_equal(evaluate(TWOSEX, [1, 0]), [0.5, 0])


def test_rank_at_ones():
    np.testing.assert_allclose(evaluate(SMALL_RANK, [1, 1]), [0.9, 0.6], rtol=0, atol=1e-15)


@pytest.mark.parametrize("m", [TWOSEX, SMALL_RANK, Linear(np.ones((2, 2))), Scale(3.0, TWOSEX), Power(TWOSEX, 3)])
def test_origin_maps_to_origin(m):
    np.testing.assert_array_equal(evaluate(m, np.zeros(2)), 0)


def test_evaluate_rejects_points_outside_cone():
    with pytest.raises(UsageError):
        evaluate(TWOSEX, [1, -1])
    with pytest.raises(UsageError):
        TWOSEX([1, 2, 3])


def test_constructor_validation():
    with pytest.raises(UsageError):
        Linear([[1, -1], [0, 1]])
    with pytest.raises(UsageError):
        TwoSex(-0.1, 0, 0, 0)
    with pytest.raises(UsageError):
        Rank(q=[1, 1], p=[1, 1], beta=np.zeros((2, 2)))
    with pytest.raises(UsageError):
        Compose(TWOSEX, identity(3))
    with pytest.raises(UsageError):
        Perturb(TWOSEX, 0.0, [1, 1], SpaceSpec(2))


@given(arrays(np.float64, 2, elements=st.floats(0, 100)), st.integers(0, 5))
def test_power_is_iterated_composition(x, k):
    y = x
    for _ in range(k):
        y = TWOSEX.apply(y)
    np.testing.assert_array_equal(Power(TWOSEX, k).apply(x), y)


@given(arrays(np.float64, 2, elements=st.floats(0, 100)), st.sampled_from(NORM_KINDS))
def test_perturb_dominates(x, kind):
    space = SpaceSpec(2, kind)
    m = Perturb(TWOSEX, 0.1, [1.0, 2.0], space)
    assert np.all(m.apply(x) >= TWOSEX.apply(x))
    np.testing.assert_allclose(m.apply(x) - TWOSEX.apply(x), 0.1 * companion_half_norm(space, x) * np.array([1, 2]), rtol=1e-14)


def test_as_matrix_collapses_linear_trees():
    a = np.array([[1.0, 2.0], [0.0, 1.0]])
    b = np.array([[0.0, 1.0], [3.0, 0.0]])
    expr = Scale(2.0, Compose(Linear(a), Power(Linear(b), 2)))
    np.testing.assert_allclose(as_matrix(expr), 2 * a @ b @ b)
    assert as_matrix(Compose(Linear(a), TWOSEX)) is None


def test_function_map_passthrough():
    m = FunctionMap(lambda x: 2 * x, 3)
    np.testing.assert_array_equal(m([1, 2, 3]), [2, 4, 6])


# -- operator norms -------------------------------------------------------


def test_linear_sup_norm_is_max_row_sum():
    res = cone_operator_norm(Linear([[1, 2], [3, 4]]), SpaceSpec(2, "sup"))
    assert res.value == 7 and res.certified
    rng = np.random.default_rng(0)
    assert sampled_quotients(np.array([[1.0, 2], [3, 4]]), "sup", rng).max() <= 7


def test_rank_sup_norm_is_top_element_image():
    res = cone_operator_norm(SMALL_RANK, SpaceSpec(2, "sup"))
    assert res.value == pytest.approx(0.9, abs=1e-15) and res.certified
    rng = np.random.default_rng(0)
    xs = rng.random((2000, 2))
    q = [np.max(SMALL_RANK.apply(x)) / np.max(x) for x in xs]
    assert max(q) <= res.value + 1e-15


def test_scale_zero_has_zero_norm():
    for kind in NORM_KINDS:
        assert cone_operator_norm(Scale(0.0, TWOSEX), SpaceSpec(2, kind), samples=50).value == 0


@settings(max_examples=60, deadline=None)
@given(matrices, st.sampled_from(NORM_KINDS))
def test_linear_cone_norm_exact(a, kind):
    # nothing sampled exceeds the value, and the witness attains it
    value, w = linear_cone_norm(a, kind)
    space = SpaceSpec(a.shape[0], kind)
    rng = np.random.default_rng(0)
    assert sampled_quotients(a, kind, rng, 500).max() <= value * (1 + 1e-12) + 1e-12
    assert np.all(w >= 0)
    assert norm(space, a @ w) / norm(space, w) >= value * (1 - 1e-12) - 1e-12


def test_bv_linear_norm_beats_sampling():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = rng.random((5, 5)) * (rng.random((5, 5)) > 0.5)
        value, _ = linear_cone_norm(a, "bv")
        assert sampled_quotients(a, "bv", rng, 3000).max() <= value * (1 + 1e-12)


def test_interval_indicators_count():
    assert interval_indicators(4).shape == (10, 4)


def test_uncertified_path_is_a_lower_bound():
    space = SpaceSpec(2, "bv")
    res = cone_operator_norm(TWOSEX, space, samples=300, seed=1)
    assert not res.certified
    achieved = norm(space, TWOSEX.apply(res.witness)) / norm(space, res.witness)
    assert achieved >= res.value * (1 - 1e-12)


def test_opnorm_deterministic_given_seed():
    space = SpaceSpec(5, "euclid")
    m = Rank(q=[0.5, 0.3, 0.2, 0.1, 0.05], p=[0.6, 0.4, 0.2, 0.1], beta=np.diag([0.4, 0, 0, 0, 0]))
    a = cone_operator_norm(m, space, samples=200, seed=7)
    b = cone_operator_norm(m, space, samples=200, seed=7)
    assert a.value == b.value
    np.testing.assert_array_equal(a.witness, b.witness)


@settings(max_examples=30, deadline=None)
@given(matrices.filter(lambda a: a.shape[0] >= 2), st.sampled_from(NORM_KINDS))
def test_submultiplicative_on_certified_paths(a, kind):
    b = a.T.copy()
    space = SpaceSpec(a.shape[0], kind)
    nab = cone_operator_norm(Compose(Linear(a), Linear(b)), space).value
    na = cone_operator_norm(Linear(a), space).value
    nb = cone_operator_norm(Linear(b), space).value
    assert nab <= na * nb * (1 + 1e-12) + 1e-12


@settings(max_examples=100)
@given(arrays(np.float64, 2, elements=st.floats(0, 100)), st.sampled_from(["twosex", "rank"]))
def test_half_norm_contracts_under_sup_opnorm(x, which):
    m = TWOSEX if which == "twosex" else SMALL_RANK
    space = SpaceSpec(2, "sup")
    opn = cone_operator_norm(m, space).value
    assert companion_half_norm(space, m.apply(x)) <= opn * companion_half_norm(space, x) * (1 + 1e-12)


@settings(max_examples=60)
@given(matrices, st.sampled_from(NORM_KINDS), st.data())
def test_half_norm_contracts_for_positive_matrices(a, kind, data):
    x = data.draw(arrays(np.float64, a.shape[0], elements=st.floats(-10, 10)))
    space = SpaceSpec(a.shape[0], kind)
    opn = cone_operator_norm(Linear(a), space).value
    assert companion_half_norm(space, a @ x) <= opn * companion_half_norm(space, x) * (1 + 1e-12) + 1e-12


# -- hypothesis checks ----------------------------------------------------


def test_builtin_maps_pass_checks():
    for m in (Linear(np.random.default_rng(0).random((3, 3))), Rank([0.5, 0.3, 0.2], [0.6, 0.4], np.ones((3, 3)))):
        rep = check_homogeneous_order_preserving(m, SpaceSpec(m.dim), 1000)
        assert rep.homogeneous and rep.order_preserving


def test_twosex_passes_many_trials():
    rep = check_homogeneous_order_preserving(TWOSEX, SpaceSpec(2), trials=10_000, seed=3)
    assert rep.homogeneous and rep.order_preserving and rep.counterexample is None


def test_affine_map_flagged():
    rep = check_homogeneous_order_preserving(FunctionMap(lambda x: x + 1.0, 3), SpaceSpec(3), 100)
    assert not rep.homogeneous
    assert rep.counterexample is not None


def test_decreasing_map_flagged():
    rep = check_homogeneous_order_preserving(FunctionMap(lambda x: np.max(x) - x, 3), SpaceSpec(3), 200)
    assert not rep.order_preserving


# -- batched evaluation ---------------------------------------------------


@settings(max_examples=50)
@given(st.integers(0, 10_000))
def test_apply_rows_matches_apply(seed):
    rng = np.random.default_rng(seed)
    xs = rng.random((6, 2)) * (rng.random((6, 2)) > 0.3)
    xs[0] = 0.0
    for m in (TWOSEX, SMALL_RANK, Linear(rng.random((2, 2))), Scale(2.0, TWOSEX), Compose(TWOSEX, SMALL_RANK),
              Power(SMALL_RANK, 3), Perturb(TWOSEX, 0.1, [1.0, 0.5], SpaceSpec(2, "bv")), FunctionMap(np.sqrt, 2)):
        np.testing.assert_allclose(m.apply_rows(xs), np.stack([m.apply(x) for x in xs]), rtol=1e-14, atol=0)
