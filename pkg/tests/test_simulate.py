import numpy as np
import pytest

from condrdp import (
    GaussianMixtureSource,
    GaussianVectorSource,
    InputError,
    JointDistribution,
    achieving_joint,
    binary_problem,
    mixture_entropy_mc,
    simulate_finite,
    simulate_gaussian,
    solve_rdp,
    waterfill,
)
from condrdp.gaussian import TWO_PI_E
from condrdp.probability import DistortionMatrix
from condrdp.simulate import SE_FLOOR, analytic_perception, merge_moments, shard_generators
from condrdp.transport import CostMatrix

HAM_D = DistortionMatrix.hamming(2)
HAM_C = CostMatrix.hamming(2)


def gaussian_construction(lam, D, P):
    src = GaussianVectorSource(lam)
    return achieving_joint(src, waterfill(src, D, P))


def within(rep, k=3.0):
    return abs(rep.z_D) <= k and abs(rep.z_P) <= k


def test_deterministic_joint_is_exact():
    m = np.zeros((2, 2, 2))
    m[0, 0, 0] = m[1, 1, 1] = 0.5
    rep = simulate_finite(JointDistribution(m), HAM_C, HAM_D, 10_000, seed=1)
    assert rep.est_D == 0.0 and rep.est_P == 0.0
    assert rep.z_D == 0.0 and rep.z_P == 0.0
    assert rep.se_D == SE_FLOOR


def test_independent_joint_rate_near_zero():
    m = np.full((2, 2, 2), 1 / 8)
    rep = simulate_finite(JointDistribution(m), HAM_C, HAM_D, 50_000, seed=3)
    assert rep.target_rate == pytest.approx(0.0, abs=1e-15)
    assert abs(rep.z_rate) <= 3


def test_binary_optimal_joint():
    prob = binary_problem(0.11, 0.11)
    sol = solve_rdp(prob)
    joint = JointDistribution.compose(prob.source, sol.encoder, sol.decoder)
    rep = simulate_finite(joint, HAM_C, HAM_D, 200_000, seed=7)
    assert rep.target_D == pytest.approx(sol.achieved_D, abs=1e-12)
    assert rep.target_P == pytest.approx(sol.achieved_P, abs=1e-12)
    assert within(rep)


def test_finite_rejects_small_n():
    m = np.full((2, 2, 2), 1 / 8)
    with pytest.raises(InputError):
        simulate_finite(JointDistribution(m), HAM_C, HAM_D, 99, seed=0)


def test_finite_shape_mismatch():
    m = np.full((2, 2, 2), 1 / 8)
    with pytest.raises(InputError):
        simulate_finite(JointDistribution(m), CostMatrix.hamming(3), DistortionMatrix.hamming(3), 1000, 0)


def test_small_bin_warning():
    m = np.zeros((2, 3, 2))
    m[0, 0, 0] = m[1, 1, 1] = 0.4995
    m[0, 2, 1] = 0.001
    rep = simulate_finite(JointDistribution(m), HAM_C, HAM_D, 5000, seed=2)
    assert any("< 30" in w for w in rep.warnings)


def test_analytic_perception_matches_solver():
    prob = binary_problem(0.2, 0.05)
    sol = solve_rdp(prob)
    joint = JointDistribution.compose(prob.source, sol.encoder, sol.decoder)
    assert analytic_perception(joint, HAM_C) == pytest.approx(sol.achieved_P, abs=1e-12)


@pytest.mark.parametrize("P", [0.0, 0.05])
def test_gaussian_scalar(P):
    c = gaussian_construction([1.0], 0.2, P)
    rep = simulate_gaussian(c, 400_000, seed=11)
    assert rep.target_D == pytest.approx(0.2, abs=1e-12)
    assert rep.target_P == pytest.approx(P, abs=1e-12)
    assert within(rep)


def test_gaussian_alpha_zero():
    c = gaussian_construction([1.0], 0.2, 0.4)
    assert np.all(c.vhat_var == 0)
    rep = simulate_gaussian(c, 400_000, seed=5)
    assert rep.target_P == pytest.approx(0.2, abs=1e-12)
    assert abs(rep.z_P) <= 3


def test_gaussian_vector():
    c = gaussian_construction([2.0, 1.0, 0.2], 0.9, 0.1)
    rep = simulate_gaussian(c, 400_000, seed=13)
    assert within(rep)
    assert rep.est_rate == rep.target_rate


def test_reports_are_deterministic():
    c = gaussian_construction([1.0], 0.2, 0.05)
    assert simulate_gaussian(c, 50_000, 9).to_dict() == simulate_gaussian(c, 50_000, 9).to_dict()
    assert simulate_gaussian(c, 50_000, 9).est_D != simulate_gaussian(c, 50_000, 10).est_D
    m = np.full((2, 2, 2), 1 / 8)
    j = JointDistribution(m)
    assert simulate_finite(j, HAM_C, HAM_D, 5000, 4).to_dict() == simulate_finite(j, HAM_C, HAM_D, 5000, 4).to_dict()


def test_stderr_scaling():
    c = gaussian_construction([1.0], 0.2, 0.05)
    ratios = []
    for seed in range(8):
        a = simulate_gaussian(c, 100_000, seed).se_D
        b = simulate_gaussian(c, 200_000, seed).se_D
        ratios.append(a / b)
    assert np.mean(ratios) == pytest.approx(np.sqrt(2), rel=0.1)


def test_shards_are_independent_streams():
    g = shard_generators(0, 4)
    draws = [x.random(3) for x in g]
    assert len({tuple(d) for d in draws}) == 4


def test_merge_moments_matches_direct(rng):
    x = rng.normal(size=1001)
    a, b = x[:400], x[400:]
    mom = merge_moments((a.size, a.mean(), np.sum((a - a.mean()) ** 2)),
                        (b.size, b.mean(), np.sum((b - b.mean()) ** 2)))
    assert mom[0] == 1001
    assert mom[1] == pytest.approx(x.mean(), abs=1e-14)
    assert mom[2] == pytest.approx(np.sum((x - x.mean()) ** 2), rel=1e-12)


def test_mixture_entropy_mc_gaussian():
    src = GaussianMixtureSource([1.0], [[0.0, 0.0]], [np.eye(2)])
    h, se = mixture_entropy_mc(src, 200_000, seed=0)
    assert abs(h - np.log(TWO_PI_E)) <= 3 * se


def test_mixture_entropy_mc_identical_components():
    one = GaussianMixtureSource([1.0], [[0.0]], [[[1.0]]])
    two = GaussianMixtureSource([0.5, 0.5], [[0.0], [0.0]], [[[1.0]], [[1.0]]])
    h, se = mixture_entropy_mc(two, 200_000, seed=1)
    assert abs(h - 0.5 * np.log(TWO_PI_E)) <= 3 * se
    assert two.logpdf(np.array([[0.3]]))[0] == pytest.approx(one.logpdf(np.array([[0.3]]))[0], abs=1e-14)


def test_mixture_entropy_mc_two_mode():
    src = GaussianMixtureSource([0.5, 0.5], [[-5.0], [5.0]], [[[0.25]], [[0.25]]])
    h, se = mixture_entropy_mc(src, 200_000, seed=2)
    assert abs(h - (0.5 * np.log(TWO_PI_E * 0.25) + np.log(2))) <= 3 * se


def test_report_dict_has_z_scores():
    c = gaussian_construction([1.0], 0.2, 0.05)
    d = simulate_gaussian(c, 1000, 0).to_dict()
    assert {"z_D", "z_P", "z_rate", "warnings"} <= d.keys()
