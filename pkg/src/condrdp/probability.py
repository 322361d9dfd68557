"""Finite-alphabet probability primitives.

All information quantities are in nats.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InputError

NORMALIZATION_TOL = 1e-12
RENORMALIZE_TOL = 1e-9


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def _check_pmf(p: np.ndarray, what: str) -> np.ndarray:
    if p.ndim != 1 or p.size == 0:
        raise InputError(f"{what}: expected a non-empty vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InputError(f"{what}: non-finite entries")
    if np.any(p < -NORMALIZATION_TOL):
        raise InputError(f"{what}: negative entries {p[p < 0]}")
    p = np.clip(p, 0.0, None)
    s = p.sum()
    if abs(s - 1.0) > RENORMALIZE_TOL:
        raise InputError(f"{what}: entries sum to {s!r}, not 1")
    return p / s


@dataclass(frozen=True)
class ProbVector:
    """A probability mass function on ``{0, ..., n-1}``.

    Inputs within 1e-9 of normalized are renormalized; anything further
    off is rejected.
    """

    probs: np.ndarray
    tol: float = NORMALIZATION_TOL

    def __post_init__(self):
        p = _check_pmf(np.asarray(self.probs, dtype=np.float64), "ProbVector")
        object.__setattr__(self, "probs", _frozen(p))

    def __len__(self) -> int:
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    @classmethod
    def uniform(cls, n: int) -> "ProbVector":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def bernoulli(cls, a: float) -> "ProbVector":
        """Law of a {0,1} variable with P(1) = a."""
        return cls([1.0 - a, a])


@dataclass(frozen=True)
class Channel:
    """Row-stochastic matrix; row ``i`` is the conditional law given input ``i``.

    ``unused`` marks rows that were filled in (uniform) because the
    conditioning symbol has zero probability.
    """

    rows: np.ndarray
    unused: np.ndarray = field(default=None)

    def __post_init__(self):
        m = np.asarray(self.rows, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
            raise InputError(f"Channel: expected a 2-D matrix, got shape {m.shape}")
        m = np.vstack([_check_pmf(r, f"Channel row {i}") for i, r in enumerate(m)])
        object.__setattr__(self, "rows", _frozen(m))
        unused = np.zeros(m.shape[0], dtype=bool) if self.unused is None else self.unused
        unused = np.array(unused, dtype=bool)
        unused.setflags(write=False)
        object.__setattr__(self, "unused", unused)

    @property
    def n_in(self) -> int:
        return self.rows.shape[0]

    @property
    def n_out(self) -> int:
        return self.rows.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.rows if dtype is None else self.rows.astype(dtype)

    @classmethod
    def identity(cls, n: int) -> "Channel":
        return cls(np.eye(n))

    @classmethod
    def bsc(cls, eps: float) -> "Channel":
        return cls([[1.0 - eps, eps], [eps, 1.0 - eps]])


@dataclass(frozen=True)
class DistortionMatrix:
    """Non-negative |X| x |X^| cost table."""

    costs: np.ndarray
    zero_diagonal: bool = False

    def __post_init__(self):
        c = np.asarray(self.costs, dtype=np.float64)
        if c.ndim != 2 or c.size == 0:
            raise InputError(f"DistortionMatrix: expected a 2-D matrix, got shape {c.shape}")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise InputError("DistortionMatrix: entries must be finite and non-negative")
        if self.zero_diagonal:
            if c.shape[0] != c.shape[1]:
                raise InputError("zero_diagonal requires a square matrix")
            off = ~np.eye(c.shape[0], dtype=bool)
            if np.any(np.diag(c) != 0) or np.any(c[off] <= 0):
                raise InputError("zero_diagonal requires d(x, y) = 0 iff x = y")
        object.__setattr__(self, "costs", _frozen(c))

    @property
    def shape(self):
        return self.costs.shape

    @classmethod
    def hamming(cls, n: int) -> "DistortionMatrix":
        return cls(1.0 - np.eye(n), zero_diagonal=True)


@dataclass(frozen=True)
class JointDistribution:
    """Mass on ``(x, u, x^)`` triples."""

    mass: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=np.float64)
        if m.ndim != 3:
            raise InputError(f"JointDistribution: expected 3 axes, got {m.ndim}")
        if np.any(m < -NORMALIZATION_TOL):
            raise InputError("JointDistribution: negative mass")
        m = np.clip(m, 0.0, None)
        s = m.sum()
        if abs(s - 1.0) > RENORMALIZE_TOL:
            raise InputError(f"JointDistribution: total mass {s!r}")
        object.__setattr__(self, "mass", _frozen(m / s))

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.mass.shape

    @classmethod
    def compose(cls, p_x: ProbVector, encoder: Channel, decoder: Channel) -> "JointDistribution":
        """p(x) p(u|x) p(x^|u): the Markov chain X - U - X^."""
        px = np.asarray(p_x)
        if encoder.n_in != px.size:
            raise DimensionError(f"encoder has {encoder.n_in} rows, source has {px.size} symbols")
        if decoder.n_in != encoder.n_out:
            raise DimensionError(
                f"decoder has {decoder.n_in} rows, encoder has {encoder.n_out} outputs"
            )
        m = px[:, None, None] * encoder.rows[:, :, None] * decoder.rows[None, :, :]
        return cls(m)

    def marginal(self, axis: str) -> np.ndarray:
        keep = {"x": (1, 2), "u": (0, 2), "xhat": (0, 1)}[axis]
        return self.mass.sum(axis=keep)


def as_prob_vector(p) -> ProbVector:
    return p if isinstance(p, ProbVector) else ProbVector(p)


def as_channel(ch) -> Channel:
    return ch if isinstance(ch, Channel) else Channel(ch)


def _xlogx(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p, dtype=np.float64)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


def entropy(p) -> float:
    """Shannon entropy in nats, with 0 log 0 = 0."""
    p = np.asarray(as_prob_vector(p))
    return float(max(-_xlogx(p).sum(), 0.0))


def binary_entropy(a):
    """H_b(a) = -a log a - (1-a) log(1-a). Vectorized over ``a``."""
    arr = np.asarray(a, dtype=np.float64)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise InputError(f"binary_entropy: argument outside [0, 1]: {a!r}")
    h = -_xlogx(arr) - _xlogx(1.0 - arr)
    return float(h) if np.ndim(a) == 0 else h


def mutual_information(p_x, ch) -> float:
    """I(X;U) for X ~ p_x and U drawn through ``ch``."""
    px = np.asarray(as_prob_vector(p_x))
    w = np.asarray(as_channel(ch))
    if w.shape[0] != px.size:
        raise DimensionError(f"channel has {w.shape[0]} rows, source has {px.size} symbols")
    joint = px[:, None] * w
    pu = joint.sum(axis=0)
    ratio = np.ones_like(joint)
    pos = joint > 0
    ratio[pos] = w[pos] / np.broadcast_to(pu, w.shape)[pos]
    mi = float(np.sum(joint[pos] * np.log(ratio[pos])))
    return max(mi, 0.0)


def posterior(p_x, ch) -> tuple[ProbVector, Channel]:
    """Output law p_u and backward channel p(x|u).

    Rows of the backward channel for unreachable ``u`` are uniform and
    flagged in ``back.unused``.
    """
    px = np.asarray(as_prob_vector(p_x))
    w = np.asarray(as_channel(ch))
    if w.shape[0] != px.size:
        raise DimensionError(f"channel has {w.shape[0]} rows, source has {px.size} symbols")
    joint = px[:, None] * w
    pu = joint.sum(axis=0)
    unused = pu <= 0
    back = np.full((w.shape[1], px.size), 1.0 / px.size)
    used = ~unused
    back[used] = (joint[:, used] / pu[used]).T
    return ProbVector(pu), Channel(back, unused=unused)


def expected_distortion(joint: JointDistribution, d: DistortionMatrix) -> float:
    """E[d(X, X^)] under the joint."""
    nx, _, nxh = joint.sizes
    if d.shape != (nx, nxh):
        raise DimensionError(f"distortion shape {d.shape} does not match joint ({nx}, ., {nxh})")
    pxx = joint.mass.sum(axis=1)
    return float(np.sum(pxx * d.costs))
