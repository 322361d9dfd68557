"""Uniform Bernoulli source, Hamming distortion, Hamming-cost perception.

The rate is ``log 2 - env(D, P)`` where ``env`` is the upper concave
envelope of

    hbar(D, P) = H_b((1 + m - sqrt(1 + m^2 - 2D)) / 2),   m = min(D, P),  D < 1/2
               = log 2,                                                   D >= 1/2.

``hbar`` is not concave, so the envelope is computed numerically as the
upper convex hull of its graph on a grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from ._envelope import min_planes
from .errors import InputError
from .probability import Channel, ProbVector, binary_entropy

LOG2 = float(np.log(2.0))
DEFAULT_GRID = 512
DEFAULT_DMAX = 0.6
MIN_GRID = 16
REFINE_LEVELS = 12
NEAR_ZERO_CELLS = 8
INTERP_SAFETY = 1.5
_HESS_GUARD = 1e-10


def _check_nonneg(D, P):
    D = np.asarray(D, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    if np.any(~np.isfinite(D)) or np.any(~np.isfinite(P)) or np.any(D < 0) or np.any(P < 0):
        raise InputError(f"D and P must be finite and non-negative, got D={D!r}, P={P!r}")
    return D, P


def hbar_argument(D, P):
    """The H_b argument (1 + m - sqrt(1 + m^2 - 2D)) / 2 for D < 1/2, else 1/2."""
    D, P = _check_nonneg(D, P)
    m = np.minimum(D, P)
    lo = D < 0.5
    rad = np.where(lo, 1.0 + m * m - 2.0 * D, 0.0)
    a = np.where(lo, 0.5 * (1.0 + m - np.sqrt(np.maximum(rad, 0.0))), 0.5)
    a = np.clip(a, 0.0, 0.5)
    return float(a) if a.ndim == 0 else a


def hbar(D, P):
    """Closed-form hbar(D, P) in nats; vectorized."""
    a = hbar_argument(D, P)
    h = binary_entropy(a)
    D = np.asarray(D, dtype=np.float64)
    h = np.where(D >= 0.5, LOG2, h)
    return float(h) if h.ndim == 0 else h


def envelope_lemma_opt(D: float, P: float) -> tuple[float, float, float]:
    """Maximize H_b(a) subject to the per-symbol distortion and TV budgets.

    Constraints: (1-a) a^ + a (1-a^) <= D, |a - a^| <= P, a, a^ in [0, 1].
    Returns ``(value, a, a_hat)`` with ``a <= 1/2``. When several maximizers
    exist (P >= D) the one with ``a_hat = 0`` is returned.
    """
    _check_nonneg(D, P)
    D = float(D)
    P = float(P)
    if D >= 0.5:
        return LOG2, 0.5, 0.5
    if P >= D:
        return binary_entropy(D), D, 0.0
    v = np.sqrt(1.0 + P * P - 2.0 * D)
    a = 0.5 * (1.0 + P - v)
    a_hat = max(0.5 * (1.0 - P - v), 0.0)
    return binary_entropy(a), a, a_hat


def lemma_constraints(a: float, a_hat: float) -> tuple[float, float]:
    """(expected Hamming distortion, TV distance) of Ber(a) vs independent Ber(a_hat)."""
    return (1.0 - a) * a_hat + a * (1.0 - a_hat), abs(a - a_hat)


@dataclass(frozen=True)
class EnvelopeModel:
    """Upper concave envelope of hbar on a ``grid_n`` x ``grid_n`` grid over [0, D_max]^2.

    Evaluation is ``min`` over the planes of the upper hull facets (exactly the
    piecewise-linear interpolant on the facet triangulation inside the box);
    queries beyond ``D_max`` are clamped, which is exact because hbar is
    non-decreasing and constant for D >= 1/2 or P >= 1/2. For D >= 1/2 the
    envelope is log 2 exactly (hbar already attains its maximum there).
    """

    grid_n: int
    D_max: float
    h: float
    plane_a: np.ndarray
    plane_b: np.ndarray
    plane_c: np.ndarray
    facets: np.ndarray      # (F, 3) vertex indices into ``points``
    points: np.ndarray      # (N, 3) grid nodes (D, P, hbar)
    interp_tol: float

    @property
    def n_facets(self) -> int:
        return self.facets.shape[0]

    def _locate(self, D, P):
        D, P = _check_nonneg(D, P)
        d = np.minimum(np.atleast_1d(D).astype(np.float64), self.D_max).ravel()
        p = np.minimum(np.atleast_1d(P).astype(np.float64), self.D_max).ravel()
        d, p = np.broadcast_arrays(d, p)
        return min_planes(self.plane_a, self.plane_b, self.plane_c,
                          np.ascontiguousarray(d), np.ascontiguousarray(p))

    def __call__(self, D, P):
        vals, _ = self._locate(D, P)
        vals = np.minimum(vals, LOG2)
        d = np.broadcast_to(np.asarray(D, dtype=np.float64), np.broadcast(np.asarray(D), np.asarray(P)).shape).ravel()
        vals[d >= 0.5] = LOG2
        shape = np.broadcast(np.asarray(D), np.asarray(P)).shape
        return float(vals[0]) if shape == () else vals.reshape(shape)

    def decompose(self, D: float, P: float):
        """Three-point mixture of hbar graph points realizing env(D, P).

        Returns ``(weights, Ds, Ps, values)``; weights are non-negative and sum
        to one, and ``sum w_i (D_i, P_i) <= (D, P)`` up to rounding.
        """
        vals, arg = self._locate(D, P)
        d = min(float(D), self.D_max)
        p = min(float(P), self.D_max)
        tri = self.points[self.facets[arg[0]]]
        T = np.array([[tri[0, 0], tri[1, 0], tri[2, 0]],
                      [tri[0, 1], tri[1, 1], tri[2, 1]],
                      [1.0, 1.0, 1.0]])
        w = np.linalg.lstsq(T, np.array([d, p, 1.0]), rcond=None)[0]
        w = np.clip(w, 0.0, None)
        w /= w.sum()
        return w, tri[:, 0].copy(), tri[:, 1].copy(), tri[:, 2].copy()


def envelope_nodes(grid_n: int = DEFAULT_GRID, D_max: float = DEFAULT_DMAX, refine: int = REFINE_LEVELS) -> np.ndarray:
    """Uniform nodes on [0, D_max] plus geometric refinement toward 0 and 1/2.

    hbar has unbounded slope at D = 0 (D log D) and at D = 1/2 (square root),
    which dominates the interpolation error of a uniform grid.
    """
    g = np.linspace(0.0, D_max, grid_n)
    h = g[1] - g[0]
    fine = h * 0.5 ** np.arange(1, refine + 1)
    # curvature of H_b grows like 1/D: quarter steps over the first cells
    near0 = np.arange(1, 4 * NEAR_ZERO_CELLS) * (h / 4)
    return np.unique(np.concatenate([g, fine, near0, 0.5 - fine, [0.5]]))


def _facet_raster(tris, A, B, C, c):
    """Envelope at the nodes ``c`` x ``c`` via the facet containing each node.

    The upper facets project onto a triangulation of the box, so each node
    only needs the facets whose bounding box covers it.
    """
    out = np.full((c.size, c.size), np.inf)
    lo = np.searchsorted(c, tris.min(axis=1), side="left")
    hi = np.searchsorted(c, tris.max(axis=1), side="right")
    for k in range(tris.shape[0]):
        i0, j0 = lo[k]
        i1, j1 = hi[k]
        if i0 >= i1 or j0 >= j1:
            continue
        d, p = np.meshgrid(c[i0:i1], c[j0:j1], indexing="ij")
        (x0, y0), (x1, y1), (x2, y2) = tris[k]
        det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if det == 0.0:
            continue
        l1 = ((d - x0) * (y2 - y0) - (x2 - x0) * (p - y0)) / det
        l2 = ((x1 - x0) * (p - y0) - (d - x0) * (y1 - y0)) / det
        inside = (l1 >= -1e-12) & (l2 >= -1e-12) & (l1 + l2 <= 1 + 1e-12)
        block = out[i0:i1, j0:j1]
        block[inside] = np.minimum(block[inside], (A[k] * d + B[k] * p + C[k])[inside])
    return out


def build_envelope(grid_n: int = DEFAULT_GRID, D_max: float = DEFAULT_DMAX) -> EnvelopeModel:
    """Upper concave envelope of hbar from the 3-D convex hull of its grid graph."""
    if int(grid_n) != grid_n or grid_n < MIN_GRID:
        raise InputError(f"grid_n must be an integer >= {MIN_GRID}, got {grid_n!r}")
    if not D_max >= 0.5:
        raise InputError(f"D_max must be >= 0.5, got {D_max!r}")
    grid_n = int(grid_n)
    g = envelope_nodes(grid_n, D_max)
    DD, PP = np.meshgrid(g, g, indexing="ij")
    Z = hbar(DD, PP)
    pts = np.column_stack([DD.ravel(), PP.ravel(), Z.ravel()])
    hull = ConvexHull(pts)
    eq = hull.equations
    upper = eq[:, 2] > 1e-12
    eq = eq[upper]
    A = np.ascontiguousarray(-eq[:, 0] / eq[:, 2])
    B = np.ascontiguousarray(-eq[:, 1] / eq[:, 2])
    C = np.ascontiguousarray(-eq[:, 3] / eq[:, 2])
    facets = hull.simplices[upper]

    # interpolation error: hbar above the grid envelope at every cell centre,
    # inflated because the worst point of a cell need not be its centre
    c = 0.5 * (g[:-1] + g[1:])
    env_c = _facet_raster(pts[facets, :2], A, B, C, c)
    dc, pc = np.meshgrid(c, c, indexing="ij")
    interp_tol = INTERP_SAFETY * float(max(np.max(hbar(dc, pc) - env_c), 0.0))

    for arr in (A, B, C, facets, pts):
        arr.setflags(write=False)
    return EnvelopeModel(grid_n, float(D_max), float(g[-1] - g[-2]), A, B, C, facets, pts, interp_tol)


def rate_binary(D, P, env: EnvelopeModel):
    """R_C(D, P) = log 2 - env(D, P), clipped at zero."""
    r = LOG2 - np.asarray(env(D, P))
    r = np.maximum(r, 0.0)
    return float(r) if r.ndim == 0 else r


def envelope_gap(D, P, env: EnvelopeModel):
    """env(D, P) - hbar(D, P); positive where mixing strictly helps."""
    g = np.asarray(env(D, P)) - np.asarray(hbar(D, P))
    return float(g) if g.ndim == 0 else g


def is_tight(D, P, env: EnvelopeModel, tol: float | None = None) -> bool:
    """Whether hbar(D, P) lies on the computed envelope."""
    tol = max(env.interp_tol, 1e-9) * 4 if tol is None else tol
    return abs(envelope_gap(D, P, env)) <= tol


def symmetric_construction(D: float, P: float, env: EnvelopeModel):
    """Six-state test channel achieving ``log 2 - env(D, P)``.

    Each of the three envelope atoms ``(D_i, P_i)`` gets a pair of states,
    one with posterior Ber(a_i) and its mirror with Ber(1 - a_i), each of
    probability ``w_i / 2``; mirroring keeps X uniform.

    Returns ``(p_u, encoder, decoder)`` as ``ProbVector``/``Channel``.
    """
    w, Ds, Ps, _ = env.decompose(D, P)
    a = np.empty(3)
    ah = np.empty(3)
    for i in range(3):
        _, a[i], ah[i] = envelope_lemma_opt(Ds[i], Ps[i])
    pu = np.concatenate([w / 2.0, w / 2.0])
    p1_u = np.concatenate([a, 1.0 - a])          # P(X = 1 | u)
    q1_u = np.concatenate([ah, 1.0 - ah])        # P(X^ = 1 | u)
    # encoder p(u|x) = p(u) p(x|u) / p(x), p(x) = 1/2
    enc = np.vstack([2.0 * pu * (1.0 - p1_u), 2.0 * pu * p1_u])
    dec = np.column_stack([1.0 - q1_u, q1_u])
    return ProbVector(pu), Channel(enc), Channel(dec)


def hbar_gradient(D: float, P: float) -> np.ndarray:
    """(d hbar/dD, d hbar/dP) on 0 < D < 1/2, 0 < P < D."""
    ups, L = _hess_terms(D, P)
    return np.array([L / (2 * ups), (ups - P) * L / (2 * ups)])


def _hess_terms(D, P):
    D = float(D)
    P = float(P)
    if not (0.0 < D < 0.5 and 0.0 < P < D):
        raise InputError(f"Hessian defined on 0 < D < 1/2, 0 < P < D; got ({D}, {P})")
    ups2 = 1.0 + P * P - 2.0 * D
    if ups2 <= _HESS_GUARD or 1.0 - (np.sqrt(ups2) - P) ** 2 <= _HESS_GUARD:
        raise InputError(f"({D}, {P}) too close to the region boundary")
    ups = np.sqrt(ups2)
    L = np.log((1.0 - P + ups) / (1.0 + P - ups))
    return ups, L


def hbar_hessian(D: float, P: float) -> np.ndarray:
    """Analytic Hessian of hbar in the open region 0 < D < 1/2, 0 < P < D."""
    ups, L = _hess_terms(D, P)
    P = float(P)
    D = float(D)
    q = ups * ups * (1.0 - (ups - P) ** 2)
    dd = L / (2 * ups ** 3) - 1.0 / q
    pp = -(1.0 - 2.0 * D) * L / (2 * ups ** 3) - (ups - P) ** 2 / q
    dp = -P * L / (2 * ups ** 3) - (ups - P) / q
    return np.array([[dd, dp], [dp, pp]])


def _central_hessian(D, P, h):
    f = hbar
    dd = (f(D + h, P) - 2 * f(D, P) + f(D - h, P)) / h ** 2
    pp = (f(D, P + h) - 2 * f(D, P) + f(D, P - h)) / h ** 2
    dp = (f(D + h, P + h) - f(D + h, P - h) - f(D - h, P + h) + f(D - h, P - h)) / (4 * h * h)
    return np.array([[dd, dp], [dp, pp]])


def hbar_hessian_fd(D: float, P: float, step: float = 1e-5, richardson: bool = False) -> np.ndarray:
    """Central finite-difference Hessian of ``hbar``.

    With ``richardson=True`` the step-``h`` and step-``h/2`` estimates are
    combined to cancel the O(h^2) term; needed close to D = 1/2 where the
    fourth derivatives blow up.
    """
    if not richardson:
        return _central_hessian(D, P, step)
    return (4.0 * _central_hessian(D, P, step / 2) - _central_hessian(D, P, step)) / 3.0
