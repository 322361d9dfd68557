import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condrdp import (
    Channel,
    DistortionMatrix,
    InputError,
    JointDistribution,
    ProbVector,
    binary_entropy,
    entropy,
    expected_distortion,
    mutual_information,
    posterior,
)
from condrdp.errors import DimensionError

LOG2 = np.log(2.0)
# -sum p log p at (1/4, 3/4) and H_b(0.11), 30-digit reference evaluations
H_QUARTER = 0.562335144618808
HB_011 = 0.346515336918666


def pmf(n):
    return st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n).map(lambda v: np.array(v) / np.sum(v))


def test_probvector_renormalizes_small_drift():
    p = ProbVector([0.5, 0.5 + 5e-10])
    assert p.probs.sum() == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("bad", [[0.5, 0.6], [1.2, -0.2], [np.nan, 1.0], []])
def test_probvector_rejects(bad):
    with pytest.raises(InputError):
        ProbVector(bad)


def test_probvector_is_immutable():
    p = ProbVector([0.3, 0.7])
    with pytest.raises(ValueError):
        p.probs[0] = 1.0


def test_channel_rows_validated():
    with pytest.raises(InputError):
        Channel([[0.5, 0.5], [0.2, 0.7]])


def test_distortion_zero_diagonal_flag():
    DistortionMatrix.hamming(3)
    with pytest.raises(InputError):
        DistortionMatrix([[0, 1], [0, 0]], zero_diagonal=True)
    with pytest.raises(InputError):
        DistortionMatrix([[0, -1], [1, 0]])


@pytest.mark.parametrize("p, h", [((0.5, 0.5), LOG2), ((1.0, 0.0), 0.0), ((0.25, 0.75), H_QUARTER)])
def test_entropy_examples(p, h):
    assert entropy(p) == pytest.approx(h, abs=1e-13)


def test_binary_entropy_examples():
    assert binary_entropy(0.5) == pytest.approx(LOG2, abs=1e-15)
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(0.11) == pytest.approx(HB_011, abs=1e-13)
    assert binary_entropy(0.11) == pytest.approx(entropy((0.11, 0.89)), abs=1e-15)
    np.testing.assert_allclose(binary_entropy(np.array([0.2, 0.8])), [binary_entropy(0.2)] * 2)


@pytest.mark.parametrize("a", [-0.1, 1.1, np.nan])
def test_binary_entropy_domain(a):
    with pytest.raises(InputError):
        binary_entropy(a)


def test_mutual_information_examples():
    u = ProbVector.uniform(2)
    assert mutual_information(u, Channel.identity(2)) == pytest.approx(LOG2)
    assert mutual_information(u, Channel([[0.5, 0.5], [0.5, 0.5]])) == 0.0
    assert mutual_information(u, Channel.bsc(0.11)) == pytest.approx(LOG2 - HB_011, abs=1e-13)


def test_mutual_information_dimension_mismatch():
    with pytest.raises(DimensionError):
        mutual_information(ProbVector.uniform(3), Channel.identity(2))


def test_posterior_examples():
    pu, back = posterior(ProbVector.uniform(2), Channel.identity(2))
    np.testing.assert_allclose(pu.probs, [0.5, 0.5])
    np.testing.assert_allclose(back.rows, np.eye(2))
    pu, back = posterior(ProbVector.uniform(2), Channel.bsc(0.1))
    np.testing.assert_allclose(back.rows, Channel.bsc(0.1).rows, atol=1e-15)
    pu, back = posterior(ProbVector([1.0, 0.0]), Channel([[0.3, 0.7, 0.0], [0.1, 0.1, 0.8]]))
    np.testing.assert_allclose(back.rows[:2], [[1, 0], [1, 0]])
    assert back.unused.tolist() == [False, False, True]
    np.testing.assert_allclose(back.rows[2], [0.5, 0.5])


def test_expected_distortion_examples():
    d = DistortionMatrix.hamming(2)
    u = ProbVector.uniform(2)
    same = JointDistribution.compose(u, Channel.identity(2), Channel.identity(2))
    assert expected_distortion(same, d) == 0.0
    indep = JointDistribution.compose(u, Channel([[1.0], [1.0]]), Channel([[0.5, 0.5]]))
    assert expected_distortion(indep, d) == pytest.approx(0.5)
    bsc = JointDistribution.compose(u, Channel.identity(2), Channel.bsc(0.11))
    assert expected_distortion(bsc, d) == pytest.approx(0.11, abs=1e-15)


def test_compose_dimension_checks():
    with pytest.raises(DimensionError):
        JointDistribution.compose(ProbVector.uniform(2), Channel.identity(3), Channel.identity(3))
    with pytest.raises(DimensionError):
        JointDistribution.compose(ProbVector.uniform(2), Channel.identity(2), Channel.identity(3))


@settings(max_examples=60, deadline=None)
@given(pmf(4), pmf(4), st.floats(0, 1))
def test_entropy_concave(p, q, lam):
    mix = lam * p + (1 - lam) * q
    assert entropy(mix) >= lam * entropy(p) + (1 - lam) * entropy(q) - 1e-12


@settings(max_examples=60, deadline=None)
@given(pmf(3), st.lists(pmf(4), min_size=3, max_size=3))
def test_mi_bounded_and_posterior_remix(p, rows):
    ch = Channel(np.array(rows))
    pu, back = posterior(p, ch)
    mi = mutual_information(p, ch)
    assert -1e-15 <= mi <= min(entropy(p), entropy(pu)) + 1e-12
    np.testing.assert_allclose(pu.probs @ back.rows, p, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(pmf(2), st.lists(pmf(3), min_size=2, max_size=2), st.lists(pmf(2), min_size=3, max_size=3),
       st.lists(pmf(3), min_size=2, max_size=2), st.floats(0, 1))
def test_expected_distortion_linear(p, e1, g1, e2, lam):
    d = DistortionMatrix([[0.0, 2.0], [1.0, 0.5]])
    j1 = JointDistribution.compose(ProbVector(p), Channel(e1), Channel(g1))
    j2 = JointDistribution.compose(ProbVector(p), Channel(e2), Channel(g1))
    mix = JointDistribution(lam * j1.mass + (1 - lam) * j2.mass)
    want = lam * expected_distortion(j1, d) + (1 - lam) * expected_distortion(j2, d)
    assert expected_distortion(mix, d) == pytest.approx(want, abs=1e-12)
