import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ocopt.numerics import central_diff_hess
from ocopt.objective import NAMES, REGISTRY, DomainError, Objective, registry_get


def test_values_at_origin():
    assert registry_get("f1").objective.eval([0.0]) == 0.0
    assert registry_get("f2").objective.eval([0.0]) == 1.0


def test_f6_at_origin_matches_root_product():
    roots = [1.0, -1.0, -0.5, -1.5, 0.5, 1.5]
    expected = float(np.prod([0.0 - r for r in roots]))
    assert expected == pytest.approx(-0.5625, abs=1e-15)
    assert registry_get("f6").objective.eval([0.0]) == pytest.approx(expected, abs=1e-15)


def test_gradients_at_origin():
    assert registry_get("f1").objective.grad([0.0])[0] == 1.0
    assert np.array_equal(registry_get("f7").objective.grad([0.0, 0.0]), [1.0, 0.0])


def test_f5_gradient_small_at_rounded_global_minimum():
    assert np.linalg.norm(registry_get("f5").objective.grad([-1.094])) <= 5e-2


def _sample_points(case, rng, count=6):
    pts = [case.x0] + [m.point for m in case.minima]
    scale = 3.0 if case.objective.dim == 1 else 10.0
    pts += list(rng.uniform(-scale, scale, size=(count, case.objective.dim)))
    return pts


@pytest.mark.parametrize("name", list(REGISTRY))
def test_analytic_gradient_matches_finite_differences(name):
    case = registry_get(name)
    rng = np.random.default_rng(0)
    for x in _sample_points(case, rng):
        assert case.objective.gradient_mismatch(x) <= 1e-4, x


@pytest.mark.parametrize("name", ["f1", "f2", "f3", "f4", "f5", "f6"])
def test_analytic_hessian_matches_finite_differences(name):
    obj = registry_get(name).objective
    for x in (-1.3, -0.2, 0.4, 1.7):
        H = obj.hess([x])
        assert np.allclose(H, central_diff_hess(obj.eval, [x]), rtol=1e-5, atol=1e-5)


def test_f4_guard_raises_domain_error():
    f4 = registry_get("f4").objective
    with pytest.raises(DomainError) as info:
        f4.eval([27.0])
    assert info.value.x[0] == 27.0
    assert np.isfinite(f4.eval([10.0]))


def test_nonfinite_value_raises_domain_error():
    obj = Objective("pos", 1, lambda X: np.where(X[..., 0] > 0, X[..., 0], np.nan))
    with pytest.raises(DomainError):
        obj.eval([-1.0])


def test_finite_difference_fallbacks():
    obj = Objective("cube", 1, lambda X: X[..., 0] ** 3)
    assert obj.grad([2.0])[0] == pytest.approx(12.0, rel=1e-8)
    assert obj.hess([2.0])[0, 0] == pytest.approx(12.0, rel=1e-5)
    assert np.allclose(obj.grad_batch(np.array([[1.0], [2.0]]))[:, 0], [3.0, 12.0], rtol=1e-8)


def test_registry_lookup():
    f1 = registry_get("f1")
    assert f1.x0[0] == 10.0 and f1.minima[0].point[0] == -0.592
    f8 = registry_get("f8")
    assert len(f8.minima) == 3
    q = registry_get("quadratic", x0=[1.0, 2.0], dim=2)
    assert q.objective.eval([1.0, 2.0]) == 2.5
    assert np.array_equal(q.minima[0].point, [0.0, 0.0])
    assert set(REGISTRY) < set(NAMES)
    with pytest.raises(KeyError):
        registry_get("f9")


def _minima():
    return [(name, i) for name, case in REGISTRY.items() for i in range(len(case.minima))]


# The listed coordinates are rounded; two of them miss the 1e-2 gradient bound
# (f4 at -1.566 has |f'| ~ 0.027, f8 at (2, 29.9) has ~0.045).
@pytest.mark.parametrize("name,i", [p for p in _minima() if p not in (("f4", 0), ("f8", 0))])
def test_listed_minimum_has_small_gradient(name, i):
    case = registry_get(name)
    assert np.linalg.norm(case.objective.grad(case.minima[i].point)) <= 1e-2


@pytest.mark.xfail(strict=True, reason="rounded coordinate; gradient exceeds 1e-2")
@pytest.mark.parametrize("name,i", [("f4", 0), ("f8", 0)])
def test_listed_minimum_has_small_gradient_rounding_misses(name, i):
    case = registry_get(name)
    assert np.linalg.norm(case.objective.grad(case.minima[i].point)) <= 1e-2


@pytest.mark.parametrize("name,i", _minima())
def test_refined_minimum_is_nearby_stationary_and_curving_up(name, i):
    case = registry_get(name)
    p = case.refined_point(i)
    assert np.linalg.norm(p - case.minima[i].point) <= 0.05
    assert np.linalg.norm(case.objective.grad(p)) <= 1e-8
    assert np.all(np.linalg.eigvalsh(case.objective.hess(p)) > 0)


def test_f6_origin_is_a_strict_local_minimum():
    f6 = registry_get("f6").objective
    assert f6.hess([0.0])[0, 0] > 0
    assert f6.eval([0.0]) < min(f6.eval([-1e-3]), f6.eval([1e-3]))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.lists(st.floats(-50, 50), min_size=5, max_size=5))
def test_quadratic_is_half_squared_norm(dim, xs):
    q = registry_get("quadratic", dim=dim).objective
    x = np.array(xs[:dim])
    assert q.eval(x) == pytest.approx(0.5 * float(x @ x))
    assert np.array_equal(q.grad(x), x)


def test_nearest_minimum():
    case = registry_get("f6")
    assert case.nearest_minimum([1.2])[0] == 0
    assert case.nearest_minimum([-0.1])[0] == 1
