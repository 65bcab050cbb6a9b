import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from normgauge.errors import DimensionMismatch, InvalidNorm, NonFiniteInput, NotSerializable
from normgauge.vecspace import (
    CustomNorm,
    MaxOf,
    PNorm,
    QuadraticNorm,
    ScaledSum,
    SupNorm,
    WeightedPNorm,
    as_tuple,
    evaluate,
    gram_matrix,
    norm_axiom_check,
    norm_from_json,
    require_norm,
)

G2 = [[2.0, 1.0], [1.0, 3.0]]


def all_variants(dim=2):
    return [
        PNorm(1),
        PNorm(1.5),
        PNorm(2),
        PNorm(math.inf),
        WeightedPNorm([1.0, 2.5][:dim] + [1.0] * (dim - 2), 3),
        SupNorm(),
        QuadraticNorm(G2 if dim == 2 else np.eye(dim)),
        MaxOf(PNorm(1), SupNorm()),
        ScaledSum([0.5, 2.0], (PNorm(2), PNorm(1))),
        CustomNorm(lambda x: float(np.abs(x).sum()), name="l1"),
    ]


def test_evaluate_examples():
    assert evaluate(PNorm(2), [3, 4]) == 5.0
    assert evaluate(SupNorm(), [1, -2]) == 2.0
    assert evaluate(QuadraticNorm(G2), [1, 1]) == pytest.approx(math.sqrt(7), rel=1e-15)
    assert evaluate(PNorm(math.inf), [1, -2]) == 2.0
    assert evaluate(WeightedPNorm([1, 4], 2), [1, 1]) == pytest.approx(math.sqrt(5))
    assert evaluate(MaxOf(PNorm(1), SupNorm()), [1, -2]) == 3.0
    assert evaluate(ScaledSum([1, 2], (PNorm(1), SupNorm())), [1, -2]) == 7.0


def test_call_matches_evaluate():
    n = PNorm(1.5)
    assert n([1.0, 2.0]) == evaluate(n, [1.0, 2.0])


@pytest.mark.parametrize("norm", all_variants(), ids=lambda n: type(n).__name__)
def test_zero_and_even(norm):
    rng = np.random.default_rng(3)
    assert evaluate(norm, [0.0, 0.0]) == 0.0
    for _ in range(20):
        x = rng.uniform(-2, 2, 2)
        assert evaluate(norm, -x) == evaluate(norm, x)
        assert evaluate(norm, x) >= 0


def test_pnorm2_matches_identity_quadratic():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((1000, 4)) * rng.uniform(0.01, 100, (1000, 1))
    a = PNorm(2).evaluate_rows(X)
    b = QuadraticNorm(np.eye(4)).evaluate_rows(X)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=0)


def test_dimension_and_finiteness_errors():
    with pytest.raises(DimensionMismatch):
        evaluate(QuadraticNorm(G2), [1, 2, 3])
    with pytest.raises(DimensionMismatch):
        evaluate(WeightedPNorm([1, 2], 2), [1.0])
    with pytest.raises(NonFiniteInput):
        evaluate(PNorm(2), [1.0, math.nan])
    with pytest.raises(NonFiniteInput):
        evaluate(PNorm(2), [math.inf, 0.0])
    with pytest.raises(DimensionMismatch):
        as_tuple([[1.0, 2.0], [1.0]])


@pytest.mark.parametrize(
    "build",
    [
        lambda: PNorm(0.5),
        lambda: PNorm(math.nan),
        lambda: QuadraticNorm([[1.0, 2.0], [2.0, 1.0]]),  # indefinite
        lambda: QuadraticNorm([[1.0, 0.5], [0.4, 1.0]]),  # not symmetric
        lambda: QuadraticNorm([[1.0, 0.0], [0.0, 1e-14]]),  # below the eigenvalue floor
        lambda: QuadraticNorm([[1.0, 2.0, 3.0]]),
        lambda: WeightedPNorm([1.0, -1.0], 2),
        lambda: ScaledSum([0.0, 0.0], (PNorm(1), PNorm(2))),
        lambda: ScaledSum([1.0, -1.0], (PNorm(1), PNorm(2))),
        lambda: MaxOf(QuadraticNorm(np.eye(2)), QuadraticNorm(np.eye(3))),
    ],
)
def test_invalid_descriptors(build):
    with pytest.raises(InvalidNorm):
        build()


def test_axiom_check_l1_clean():
    rep = norm_axiom_check(PNorm(1), dim=3, trials=1000, seed=0)
    assert rep.ok
    assert all(v <= 1e-12 for v in rep.max_violation.values())


def test_axiom_check_euclidean_clean():
    assert norm_axiom_check(QuadraticNorm(np.eye(2)), dim=2, trials=100, seed=1).ok


def test_axiom_check_squared_euclidean_fails_homogeneity():
    sq = CustomNorm(lambda x: float(x[0] ** 2 + x[1] ** 2), name="squared")
    rep = norm_axiom_check(sq, dim=2, trials=200, seed=0)
    assert not rep.ok
    witness = [w for w in rep.witnesses if w.axiom == "homogeneity"][0]
    x = np.array(witness.x)
    lam = witness.scalar
    # ||lam x|| = lam^2 ||x|| for the squared norm
    assert sq(lam * x) == pytest.approx(lam**2 * sq(x))
    assert abs(sq(lam * x) - abs(lam) * sq(x)) > 1e-3


def test_axiom_check_catches_triangle_and_definiteness():
    # the l^(1/2) quasi-norm breaks the triangle inequality
    half = CustomNorm(lambda x: float(np.sum(np.sqrt(np.abs(x))) ** 2))
    rep = norm_axiom_check(half, dim=2, trials=500, seed=2)
    assert "triangle" in {w.axiom for w in rep.witnesses}
    # a seminorm that ignores the second coordinate is not definite
    semi = CustomNorm(lambda x: abs(float(x[0])))
    rep = norm_axiom_check(semi, dim=2, trials=50, seed=0)
    assert rep.max_violation["definiteness"] == 0.0  # random points have x[0] != 0
    offset = CustomNorm(lambda x: float(np.abs(x).sum()) + 1.0)
    rep = norm_axiom_check(offset, dim=2, trials=50, seed=0)
    assert "definiteness" in {w.axiom for w in rep.witnesses}


@pytest.mark.parametrize(
    "norm",
    [
        MaxOf(PNorm(1), QuadraticNorm(G2)),
        MaxOf(SupNorm(), WeightedPNorm([1, 3], 1.5)),
        ScaledSum([1.0, 0.0, 2.5], (PNorm(1), SupNorm(), QuadraticNorm(G2))),
        ScaledSum([0.3], (MaxOf(PNorm(3), PNorm(1.2)),)),
    ],
)
def test_composites_are_norms(norm):
    rep = norm_axiom_check(norm, dim=2, trials=2000, seed=5)
    assert rep.ok, rep.witnesses


def test_require_norm():
    require_norm(PNorm(1), 2)
    with pytest.raises(InvalidNorm):
        require_norm(CustomNorm(lambda x: float(x @ x)), 2)
    require_norm(CustomNorm(lambda x: float(np.abs(x).max())), 2)


@pytest.mark.parametrize("norm", all_variants()[:-1], ids=lambda n: type(n).__name__)
def test_json_round_trip(norm):
    obj = json.loads(json.dumps(norm.to_json()))
    back = norm_from_json(obj)
    X = np.random.default_rng(0).uniform(-1, 1, (50, 2))
    np.testing.assert_array_equal(back.evaluate_rows(X), norm.evaluate_rows(X))


def test_json_forms():
    assert PNorm(1.5).to_json() == {"variant": "pnorm", "p": 1.5}
    assert PNorm(math.inf).to_json() == {"variant": "pnorm", "p": "inf"}
    assert norm_from_json('{"variant":"sup"}') == SupNorm()
    assert norm_from_json({"variant": "pnorm", "p": "inf"}).p == math.inf


def test_custom_not_serializable():
    c = CustomNorm(lambda x: 1.0, name="weird")
    with pytest.raises(NotSerializable):
        c.to_json()
    assert c.describe() == {"variant": "custom", "serializable": False, "name": "weird"}
    assert not MaxOf(PNorm(1), c).serializable
    with pytest.raises(NotSerializable):
        norm_from_json({"variant": "custom"})


@pytest.mark.parametrize("text", ["{", "[]", '{"variant":"nope"}', '{"variant":"pnorm"}', '{"variant":"pnorm","p":0.5}'])
def test_bad_json(text):
    with pytest.raises(InvalidNorm):
        norm_from_json(text)


def test_gram_matrix():
    np.testing.assert_array_equal(gram_matrix(QuadraticNorm(G2)), np.array(G2))
    np.testing.assert_array_equal(gram_matrix(WeightedPNorm([2, 3], 2)), np.diag([2.0, 3.0]))
    np.testing.assert_array_equal(gram_matrix(PNorm(2), 3), np.eye(3))
    assert gram_matrix(PNorm(1), 3) is None


vec = arrays(np.float64, 3, elements=st.floats(-1e3, 1e3))


@settings(max_examples=200, deadline=None)
@given(vec, vec, st.floats(-50, 50))
def test_builtin_norm_axioms_property(x, y, lam):
    for norm in (PNorm(1), PNorm(2.5), SupNorm(), QuadraticNorm(np.diag([1.0, 2.0, 5.0])), MaxOf(PNorm(1), PNorm(4))):
        nx, ny = norm(x), norm(y)
        assert norm(x + y) <= (nx + ny) * (1 + 1e-12) + 1e-12
        assert norm(lam * x) == pytest.approx(abs(lam) * nx, rel=1e-12, abs=1e-300)
