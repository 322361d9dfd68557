import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condrdp import CostMatrix, InputError, discrete_ot, tv_distance, w2_squared_1d, w2_squared_gaussian_diag
from condrdp.errors import DimensionError, InstanceTooLargeError
from condrdp.transport import TransportPlan, discrete_ot_dual


def pmf(n):
    return st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n).filter(lambda v: sum(v) > 0.05).map(
        lambda v: np.array(v) / np.sum(v))


@pytest.mark.parametrize("p, q, want", [((0.5, 0.5), (0.5, 0.5), 0.0), ((1, 0), (0, 1), 1.0),
                                        ((0.7, 0.3), (0.4, 0.6), 0.3)])
def test_discrete_ot_examples(p, q, want):
    for method in ("simplex", "enumerate"):
        val, plan = discrete_ot(p, q, CostMatrix.hamming(2), method=method)
        assert val == pytest.approx(want, abs=1e-14)
        assert plan.cost(CostMatrix.hamming(2)) == pytest.approx(val, abs=1e-14)


def test_two_by_two_family_brute_force():
    # couplings of (0.7, 0.3) and (0.4, 0.6): pi(0,1) = t in [0.3, 0.6]
    t = np.linspace(0.3, 0.6, 3001)
    best = np.min(t + (t - 0.3))
    assert discrete_ot((0.7, 0.3), (0.4, 0.6), CostMatrix.hamming(2))[0] == pytest.approx(best, abs=1e-12)


def test_simplex_matches_enumeration(rng):
    for _ in range(100):
        m, n = rng.integers(1, 5, size=2)
        p = rng.dirichlet(np.ones(m))
        q = rng.dirichlet(np.ones(n))
        if m > 1:
            p[rng.integers(m)] = 0.0
            p /= p.sum()
        C = rng.uniform(0, 3, size=(m, n))
        a = discrete_ot(p, q, C)[0]
        b = discrete_ot(p, q, C, method="enumerate")[0]
        assert a == pytest.approx(b, abs=1e-12)


def test_simplex_matches_linprog(rng):
    from scipy.optimize import linprog

    for n in (8, 20):
        p = rng.dirichlet(np.ones(n))
        q = rng.dirichlet(np.ones(n))
        C = rng.uniform(size=(n, n))
        A_eq = np.vstack([np.kron(np.eye(n), np.ones(n)), np.kron(np.ones(n), np.eye(n))])
        ref = linprog(C.ravel(), A_eq=A_eq, b_eq=np.concatenate([p, q]), method="highs").fun
        assert discrete_ot(p, q, C)[0] == pytest.approx(ref, abs=1e-7)


def test_dual_potentials_certify(rng):
    for _ in range(30):
        n = rng.integers(2, 7)
        p = rng.dirichlet(np.ones(n))
        q = rng.dirichlet(np.ones(n))
        C = rng.uniform(size=(n, n))
        val, f, g = discrete_ot_dual(p, q, C)
        assert np.all(f[:, None] + g[None, :] <= C + 1e-12)
        assert p @ f + q @ g == pytest.approx(val, abs=1e-12)


def test_enumerate_size_limit():
    with pytest.raises(InstanceTooLargeError):
        discrete_ot(np.full(5, 0.2), np.full(5, 0.2), CostMatrix.hamming(5), method="enumerate")


def test_dimension_and_cost_checks():
    with pytest.raises(DimensionError):
        discrete_ot((0.5, 0.5), (0.2, 0.3, 0.5), CostMatrix.hamming(2))
    with pytest.raises(InputError):
        CostMatrix([[0, -1], [1, 0]])
    with pytest.raises(InputError):
        CostMatrix([[0, 0], [1, 0]], proper=True)


def test_plan_marginals_enforced():
    with pytest.raises(InputError):
        TransportPlan(np.array([[0.5, 0.0], [0.0, 0.5]]), ((0.6, 0.4), (0.5, 0.5)))


def test_tv_examples():
    assert tv_distance((0.5, 0.5), (0.5, 0.5)) == 0.0
    assert tv_distance((1, 0), (0, 1)) == 1.0
    assert tv_distance((0.7, 0.3), (0.9, 0.1)) == pytest.approx(0.2)
    with pytest.raises(DimensionError):
        tv_distance((1.0,), (0.5, 0.5))


def test_w2_1d_examples():
    x = np.array([0.0, 1.0, 2.5])
    assert w2_squared_1d(x, x) == 0.0
    assert w2_squared_1d(np.zeros(4), np.ones(4)) == 1.0
    assert w2_squared_1d([0, 2], [1, 3]) == 1.0
    # the crossed pairing is worse
    assert ((0 - 3) ** 2 + (2 - 1) ** 2) / 2 > 1.0
    with pytest.raises(DimensionError):
        w2_squared_1d([0, 1], [0, 1, 2])
    with pytest.raises(InputError):
        w2_squared_1d([1, 0], [0, 1])


def test_w2_gaussian_examples():
    assert w2_squared_gaussian_diag([1, 2], [1, 2]) == 0.0
    assert w2_squared_gaussian_diag([1], [0]) == 1.0
    assert w2_squared_gaussian_diag([1, 0.25], [0.25, 0.25]) == pytest.approx(0.25)
    with pytest.raises(InputError):
        w2_squared_gaussian_diag([-1], [1])


def test_w2_gaussian_monte_carlo():
    rng = np.random.Generator(np.random.Philox(11))
    n = 10 ** 6
    g, gh = np.array([1.0, 0.25]), np.array([0.25, 0.25])
    k = 20
    shards = []
    for _ in range(k):
        x = np.sort(rng.standard_normal((n // k, 2)) * np.sqrt(g), axis=0)
        y = np.sort(rng.standard_normal((n // k, 2)) * np.sqrt(gh), axis=0)
        shards.append(sum(w2_squared_1d(x[:, i], y[:, i]) for i in range(2)))
    est, se = np.mean(shards), np.std(shards, ddof=1) / np.sqrt(k)
    assert abs(est - w2_squared_gaussian_diag(g, gh)) < 3 * se + 1e-4


@settings(max_examples=80, deadline=None)
@given(pmf(3), pmf(3))
def test_symmetry_and_indiscernibles(p, q):
    C = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], dtype=float)
    assert discrete_ot(p, q, C)[0] == pytest.approx(discrete_ot(q, p, C)[0], abs=1e-12)
    assert discrete_ot(p, p, CostMatrix(C, proper=True))[0] == pytest.approx(0.0, abs=1e-14)


@settings(max_examples=80, deadline=None)
@given(pmf(2), pmf(2))
def test_binary_hamming_equals_tv(p, q):
    assert discrete_ot(p, q, CostMatrix.hamming(2))[0] == pytest.approx(tv_distance(p, q), abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(pmf(2), pmf(3), pmf(2), pmf(3))
def test_tensorization(p1, p2, q1, q2):
    c1 = np.array([[0.0, 1.0], [2.0, 0.0]])
    c2 = np.array([[0.0, 1.0, 3.0], [1.0, 0.0, 1.0], [0.5, 1.0, 0.0]])
    C = (c1[:, None, :, None] + c2[None, :, None, :]).reshape(6, 6)
    joint = discrete_ot(np.kron(p1, p2), np.kron(q1, q2), C)[0]
    assert joint == pytest.approx(discrete_ot(p1, q1, c1)[0] + discrete_ot(p2, q2, c2)[0], abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(pmf(3), pmf(3), pmf(3), pmf(3), st.floats(0, 1))
def test_convexity(p, q, p2, q2, lam):
    C = np.array([[0, 1, 4], [1, 0, 1], [4, 1, 0]], dtype=float)
    lhs = discrete_ot((1 - lam) * p + lam * p2, (1 - lam) * q + lam * q2, C)[0]
    rhs = (1 - lam) * discrete_ot(p, q, C)[0] + lam * discrete_ot(p2, q2, C)[0]
    assert lhs <= rhs + 1e-9


@settings(max_examples=60, deadline=None)
@given(pmf(3), pmf(3), pmf(3), pmf(3))
def test_continuity(p, q, p2, q2):
    cost = CostMatrix([[0, 1, 4], [1, 0, 1], [4, 1, 0]])
    diff = abs(discrete_ot(p, q, cost)[0] - discrete_ot(p2, q2, cost)[0])
    assert diff <= cost.c_max * (tv_distance(p, p2) + tv_distance(q, q2)) + 1e-9
