"""Optimal-transport divergences between laws.

``discrete_ot`` is the exact single-letter transport cost
``min_{pi in Pi(p, q)} sum pi(a, b) c(a, b)``; the other functions are the
closed forms used for binary (total variation) and Gaussian/1-D quadratic
Wasserstein settings.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ._ot import transport_simplex
from .errors import DimensionError, InputError, InstanceTooLargeError
from .probability import ProbVector, as_prob_vector

OT_TOL = 1e-12
MARGINAL_TOL = 1e-9
ENUMERATE_MAX = 4


@dataclass(frozen=True)
class CostMatrix:
    """Non-negative transport cost; ``proper`` asserts c(a, b) = 0 iff a = b."""

    costs: np.ndarray
    proper: bool = False

    def __post_init__(self):
        c = np.array(self.costs, dtype=np.float64)
        if c.ndim != 2 or c.size == 0:
            raise InputError(f"CostMatrix: expected a 2-D matrix, got shape {c.shape}")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise InputError("CostMatrix: entries must be finite and non-negative")
        if self.proper:
            if c.shape[0] != c.shape[1]:
                raise InputError("proper cost must be square")
            off = ~np.eye(c.shape[0], dtype=bool)
            if np.any(np.diag(c) != 0) or np.any(c[off] <= 0):
                raise InputError("proper cost requires c(a, b) = 0 iff a = b")
        c.setflags(write=False)
        object.__setattr__(self, "costs", c)

    @property
    def shape(self):
        return self.costs.shape

    @property
    def c_max(self) -> float:
        return float(self.costs.max())

    @classmethod
    def hamming(cls, n: int) -> "CostMatrix":
        return cls(1.0 - np.eye(n), proper=True)

    @classmethod
    def squared_euclidean(cls, points_a, points_b=None) -> "CostMatrix":
        pa = np.atleast_2d(np.asarray(points_a, dtype=np.float64).T).T
        pb = pa if points_b is None else np.atleast_2d(np.asarray(points_b, dtype=np.float64).T).T
        diff = pa[:, None, :] - pb[None, :, :]
        return cls(np.sum(diff * diff, axis=-1))


@dataclass(frozen=True)
class TransportPlan:
    mass: np.ndarray
    marginals: tuple[ProbVector, ProbVector]

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=np.float64)
        p, q = (np.asarray(x) for x in self.marginals)
        if m.shape != (p.size, q.size):
            raise DimensionError(f"plan shape {m.shape} vs marginals ({p.size}, {q.size})")
        if np.any(m < 0):
            raise InputError("TransportPlan: negative mass")
        if np.max(np.abs(m.sum(axis=1) - p)) > MARGINAL_TOL or np.max(np.abs(m.sum(axis=0) - q)) > MARGINAL_TOL:
            raise InputError("TransportPlan: marginals violated")
        m.setflags(write=False)
        object.__setattr__(self, "mass", m)

    def cost(self, cost: CostMatrix) -> float:
        return float(np.sum(self.mass * cost.costs))


def _as_cost(cost) -> CostMatrix:
    return cost if isinstance(cost, CostMatrix) else CostMatrix(cost)


def _check(p, q, cost):
    p = as_prob_vector(p)
    q = as_prob_vector(q)
    cost = _as_cost(cost)
    if cost.shape != (len(p), len(q)):
        raise DimensionError(f"cost shape {cost.shape} vs marginals ({len(p)}, {len(q)})")
    return p, q, cost


def discrete_ot(p, q, cost, method: str = "simplex") -> tuple[float, TransportPlan]:
    """Exact optimal transport cost and an optimal plan.

    ``method="simplex"`` runs the transportation simplex (any size);
    ``method="enumerate"`` scans every basic feasible solution and is
    limited to alphabets of at most 4 symbols.
    """
    p, q, cost = _check(p, q, cost)
    if method == "enumerate":
        value, plan = _ot_enumerate(p.probs, q.probs, cost.costs)
    elif method == "simplex":
        value, plan, _, _, status = transport_simplex(p.probs, q.probs, cost.costs, OT_TOL)
        if status != 0:
            raise RuntimeError("transportation simplex hit its iteration cap")
    else:
        raise InputError(f"unknown OT method {method!r}")
    return float(value), TransportPlan(plan, (p, q))


def discrete_ot_dual(p, q, cost) -> tuple[float, np.ndarray, np.ndarray]:
    """OT value with dual potentials ``(f, g)``, ``f_a + g_b <= c(a, b)``."""
    p, q, cost = _check(p, q, cost)
    value, _, f, g, status = transport_simplex(p.probs, q.probs, cost.costs, OT_TOL)
    if status != 0:
        raise RuntimeError("transportation simplex hit its iteration cap")
    return float(value), f, g


def _solve_tree(cells, a, b):
    """Unique flow supported on a spanning tree of cells, or None."""
    m, n = a.size, b.size
    rem_r = a.copy()
    rem_c = b.copy()
    x = {}
    live = set(cells)
    deg = np.zeros(m + n, dtype=int)
    for i, j in cells:
        deg[i] += 1
        deg[m + j] += 1
    while live:
        leaf = next((k for k in range(m + n) if deg[k] == 1), None)
        if leaf is None:
            return None
        if leaf < m:
            cell = next(c for c in live if c[0] == leaf)
            val = rem_r[leaf]
        else:
            cell = next(c for c in live if c[1] == leaf - m)
            val = rem_c[leaf - m]
        i, j = cell
        x[cell] = val
        rem_r[i] -= val
        rem_c[j] -= val
        live.remove(cell)
        deg[i] -= 1
        deg[m + j] -= 1
    return x


def _ot_enumerate(a, b, C):
    m, n = C.shape
    if max(m, n) > ENUMERATE_MAX:
        raise InstanceTooLargeError(f"enumeration limited to {ENUMERATE_MAX} symbols, got {m}x{n}")
    all_cells = [(i, j) for i in range(m) for j in range(n)]
    best, best_x = np.inf, None
    for cells in itertools.combinations(all_cells, m + n - 1):
        # spanning tree check via union-find
        parent = list(range(m + n))

        def find(k):
            while parent[k] != k:
                parent[k] = parent[parent[k]]
                k = parent[k]
            return k

        ok = True
        for i, j in cells:
            ri, rj = find(i), find(m + j)
            if ri == rj:
                ok = False
                break
            parent[ri] = rj
        if not ok:
            continue
        x = _solve_tree(cells, a, b)
        if x is None or min(x.values()) < -1e-12:
            continue
        val = sum(v * C[c] for c, v in x.items())
        if val < best:
            best, best_x = val, x
    plan = np.zeros((m, n))
    for c, v in best_x.items():
        plan[c] = max(v, 0.0)
    return float(best), plan


def tv_distance(p, q) -> float:
    """Total variation distance, half the l1 distance."""
    p = as_prob_vector(p)
    q = as_prob_vector(q)
    if len(p) != len(q):
        raise DimensionError(f"lengths differ: {len(p)} vs {len(q)}")
    return float(0.5 * np.abs(p.probs - q.probs).sum())


def w2_squared_1d(samples_p, samples_q) -> float:
    """Squared W2 between two equal-size empirical measures on the line.

    Both inputs must already be sorted ascending; the monotone (quantile)
    coupling is then optimal.
    """
    x = np.asarray(samples_p, dtype=np.float64)
    y = np.asarray(samples_q, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.size != y.size or x.size == 0:
        raise DimensionError(f"need two equal-length non-empty vectors, got {x.shape} and {y.shape}")
    if np.any(np.diff(x) < 0) or np.any(np.diff(y) < 0):
        raise InputError("w2_squared_1d expects sorted samples")
    d = x - y
    return float(np.mean(d * d))


def w2_squared_gaussian_diag(gammas, gamma_hats) -> float:
    """W2^2 between N(0, diag(gammas)) and N(0, diag(gamma_hats))."""
    g = np.asarray(gammas, dtype=np.float64)
    gh = np.asarray(gamma_hats, dtype=np.float64)
    if g.shape != gh.shape:
        raise DimensionError(f"shapes differ: {g.shape} vs {gh.shape}")
    if np.any(g < 0) or np.any(gh < 0):
        raise InputError("variances must be non-negative")
    return float(np.sum((np.sqrt(g) - np.sqrt(gh)) ** 2))
