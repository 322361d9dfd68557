"""Monte Carlo checks of constructed joints against their analytic values.

Sampling is split into shards, each with its own Philox stream derived
from the seed, so reports are reproducible bit for bit. Standard errors
come from pooled sample variances where the estimator is a mean, and from
batch means over shards otherwise.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InputError
from .gaussian import GaussianConstruction, GaussianMixtureSource
from .probability import DistortionMatrix, JointDistribution, expected_distortion
from .transport import CostMatrix, discrete_ot, w2_squared_1d

MIN_FINITE_SAMPLES = 100
MIN_BIN = 30
SE_FLOOR = 1e-15
DEFAULT_SHARDS = 16


@dataclass(frozen=True)
class SimReport:
    n_samples: int
    seed: int
    est_D: float
    se_D: float
    est_P: float
    se_P: float
    est_rate: float
    se_rate: float
    target_D: float
    target_P: float
    target_rate: float
    warnings: tuple = ()

    @property
    def z_D(self) -> float:
        return (self.est_D - self.target_D) / self.se_D

    @property
    def z_P(self) -> float:
        return (self.est_P - self.target_P) / self.se_P

    @property
    def z_rate(self) -> float:
        return (self.est_rate - self.target_rate) / self.se_rate

    def to_dict(self) -> dict:
        out = asdict(self)
        out["warnings"] = list(self.warnings)
        out.update(z_D=self.z_D, z_P=self.z_P, z_rate=self.z_rate)
        return out


def shard_generators(seed: int, shards: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(int(seed)).spawn(shards)
    return [np.random.Generator(np.random.Philox(s)) for s in children]


def _shard_sizes(n: int, shards: int) -> list[int]:
    base, extra = divmod(n, shards)
    return [base + (i < extra) for i in range(shards)]


def merge_moments(a, b):
    """Combine (count, mean, M2) summaries (pairwise update)."""
    na, ma, sa = a
    nb, mb, sb = b
    n = na + nb
    if n == 0:
        return 0, 0.0, 0.0
    delta = mb - ma
    return n, ma + delta * nb / n, sa + sb + delta * delta * na * nb / n


def _moments(x: np.ndarray):
    m = float(x.mean())
    return x.size, m, float(np.sum((x - m) ** 2))


def _mean_se(mom) -> tuple[float, float]:
    n, m, s = mom
    var = s / (n - 1) if n > 1 else 0.0
    return float(m), max(float(np.sqrt(var / n)), SE_FLOOR)


def _batch_se(values) -> float:
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        return SE_FLOOR
    return max(float(v.std(ddof=1) / np.sqrt(v.size)), SE_FLOOR)


def _conditional_perception(counts: np.ndarray, cost: CostMatrix) -> float:
    """sum_u p^(u) OT(p^(x|u), p^(x^|u)) from (x, u, x^) counts."""
    n = counts.sum()
    cx = counts.sum(axis=2)
    cy = counts.sum(axis=0)
    total = 0.0
    for u in np.flatnonzero(cx.sum(axis=0) > 0):
        nu = cx[:, u].sum()
        val, _ = discrete_ot(cx[:, u] / nu, cy[u] / nu, cost)
        total += nu / n * val
    return total


def _plugin_mi(cxu: np.ndarray) -> float:
    n = cxu.sum()
    pxu = cxu / n
    px = pxu.sum(axis=1, keepdims=True)
    pu = pxu.sum(axis=0, keepdims=True)
    pos = pxu > 0
    return float(max(np.sum(pxu[pos] * np.log(pxu[pos] / (px @ pu)[pos])), 0.0))


def analytic_perception(joint: JointDistribution, cost: CostMatrix) -> float:
    """Population value of E_U OT(p(x|U), p(x^|U))."""
    return _conditional_perception(joint.mass, cost)


def simulate_finite(joint: JointDistribution, cost: CostMatrix, d: DistortionMatrix, n: int, seed: int,
                    shards: int = DEFAULT_SHARDS) -> SimReport:
    """Sample (X, U, X^) triples and re-estimate D, conditional P and I(X;U)."""
    n = int(n)
    if n < MIN_FINITE_SAMPLES:
        raise InputError(f"need at least {MIN_FINITE_SAMPLES} samples, got {n}")
    nx, nu, ny = joint.sizes
    if d.shape != (nx, ny) or cost.shape != (nx, ny):
        raise InputError("distortion/cost shapes do not match the joint")
    flat = joint.mass.ravel()
    flat = flat / flat.sum()
    dvals = np.broadcast_to(d.costs[:, None, :], joint.mass.shape).ravel()

    total = np.zeros(flat.size, dtype=np.int64)
    mom = (0, 0.0, 0.0)
    shard_P, shard_I = [], []
    for rng, m in zip(shard_generators(seed, shards), _shard_sizes(n, shards)):
        if m == 0:
            continue
        c = rng.multinomial(m, flat)
        total += c
        # moments of d over this shard from counts
        mean = float(c @ dvals) / m
        m2 = float(c @ (dvals - mean) ** 2)
        mom = merge_moments(mom, (m, mean, m2))
        c3 = c.reshape(joint.mass.shape)
        shard_P.append(_conditional_perception(c3, cost))
        shard_I.append(_plugin_mi(c3.sum(axis=2)))

    counts = total.reshape(joint.mass.shape)
    est_D, se_D = _mean_se(mom)
    warns = []
    per_u = counts.sum(axis=(0, 2))
    low = [int(u) for u in np.flatnonzero((per_u > 0) & (per_u < MIN_BIN))]
    if low:
        warns.append(f"conditional bins with < {MIN_BIN} samples: u in {low}")
    return SimReport(
        n_samples=n, seed=int(seed),
        est_D=est_D, se_D=se_D,
        est_P=_conditional_perception(counts, cost), se_P=_batch_se(shard_P),
        est_rate=_plugin_mi(counts.sum(axis=2)), se_rate=_batch_se(shard_I),
        target_D=expected_distortion(joint, d),
        target_P=analytic_perception(joint, cost),
        target_rate=_plugin_mi(joint.mass.sum(axis=2)),
        warnings=tuple(warns),
    )


def simulate_gaussian(construction: GaussianConstruction, n: int, seed: int,
                      shards: int = DEFAULT_SHARDS) -> SimReport:
    """Sample X = U' + V, X^ = U' + V^ coordinatewise.

    The conditional law of (X, X^) given U' is a shift of (V, V^), so the
    conditional W2^2 is estimated per coordinate from sorted V and V^ samples.
    """
    n = int(n)
    if n < 2:
        raise InputError("need at least 2 samples")
    su = np.sqrt(construction.u_var)
    sv = np.sqrt(construction.v_var)
    sh = np.sqrt(construction.vhat_var)
    L = su.size
    mom = (0, 0.0, 0.0)
    V_all, Vh_all, shard_P = [], [], []
    for rng, m in zip(shard_generators(seed, shards), _shard_sizes(n, shards)):
        if m == 0:
            continue
        U = rng.standard_normal((m, L)) * su
        V = rng.standard_normal((m, L)) * sv
        Vh = rng.standard_normal((m, L)) * sh
        err = np.sum(((U + V) - (U + Vh)) ** 2, axis=1)
        mom = merge_moments(mom, _moments(err))
        V.sort(axis=0)
        Vh.sort(axis=0)
        shard_P.append(sum(w2_squared_1d(V[:, l], Vh[:, l]) for l in range(L)))
        V_all.append(V)
        Vh_all.append(Vh)
    V = np.sort(np.vstack(V_all), axis=0)
    Vh = np.sort(np.vstack(Vh_all), axis=0)
    est_P = sum(w2_squared_1d(V[:, l], Vh[:, l]) for l in range(L))
    est_D, se_D = _mean_se(mom)
    rate = construction.mutual_information
    return SimReport(
        n_samples=n, seed=int(seed),
        est_D=est_D, se_D=se_D,
        est_P=est_P, se_P=_batch_se(shard_P),
        est_rate=rate, se_rate=SE_FLOOR,
        target_D=construction.distortion, target_P=construction.perception, target_rate=rate,
    )


def mixture_entropy_mc(src: GaussianMixtureSource, n: int, seed: int,
                       chunk: int = 200_000) -> tuple[float, float]:
    """-(1/n) sum log f(X_i) with X_i drawn from the mixture; returns (h, stderr)."""
    n = int(n)
    if n < 2:
        raise InputError("need at least 2 samples")
    rng = np.random.Generator(np.random.Philox(int(seed)))
    mom = (0, 0.0, 0.0)
    done = 0
    while done < n:
        m = min(chunk, n - done)
        x = src.sample(m, rng)
        mom = merge_moments(mom, _moments(-src.logpdf(x)))
        done += m
    return _mean_se(mom)
