"""Informational RDP function of a finite-alphabet source.

    R(D, P) = min I(X; U)  over  X -> U -> X^
              s.t. E d(X, X^) <= D,  E_U OT_c(p(.|U), p(X^|U = .)) <= P

``solve_rdp`` returns a feasible channel pair (so its rate is an upper
bound); ``oracle_rdp`` is an independent LP over a grid of atoms for binary
sources.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from ._ot import transport_simplex
from ._rdp_kernel import al_solve, price_atoms
from .errors import DimensionError, InputError, InstanceTooLargeError
from .probability import (
    Channel,
    DistortionMatrix,
    JointDistribution,
    ProbVector,
    as_prob_vector,
    binary_entropy,
    entropy,
    expected_distortion,
    mutual_information,
    posterior,
)
from .transport import CostMatrix, discrete_ot

ORACLE_MAX_GRID = 64


@dataclass(frozen=True)
class SolverConfig:
    restarts: int = 32
    n_outer: int = 60
    n_inner: int = 400
    rho0: float = 10.0
    inner_tol: float = 1e-8
    constraint_tol: float = 1e-6
    column_generation: bool = True
    cg_iters: int = 60
    cg_pricing_starts: int = 48
    structured: bool = True


@dataclass(frozen=True)
class RdpProblem:
    source: ProbVector
    distortion: DistortionMatrix
    cost: CostMatrix
    D: float
    P: float
    u_card: int | None = None

    def __post_init__(self):
        src = as_prob_vector(self.source)
        dist = self.distortion if isinstance(self.distortion, DistortionMatrix) else DistortionMatrix(self.distortion)
        cost = self.cost if isinstance(self.cost, CostMatrix) else CostMatrix(self.cost)
        nx = len(src)
        if dist.shape[0] != nx or cost.shape[0] != nx:
            raise DimensionError(f"source has {nx} symbols; distortion {dist.shape}, cost {cost.shape}")
        if dist.shape != cost.shape:
            raise DimensionError(f"distortion {dist.shape} and cost {cost.shape} must share the output alphabet")
        for name in ("D", "P"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0:
                raise InputError(f"{name} must be finite and non-negative, got {v!r}")
            object.__setattr__(self, name, v)
        k = nx + 2 if self.u_card is None else int(self.u_card)
        if k < 1:
            raise InputError("u_card must be positive")
        object.__setattr__(self, "source", src)
        object.__setattr__(self, "distortion", dist)
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "u_card", k)

    @property
    def nx(self) -> int:
        return len(self.source)

    @property
    def ny(self) -> int:
        return self.distortion.shape[1]

    def with_budgets(self, D: float, P: float) -> "RdpProblem":
        return RdpProblem(self.source, self.distortion, self.cost, D, P, self.u_card)

    @classmethod
    def from_dict(cls, obj: dict) -> "RdpProblem":
        try:
            src = obj["source"]
            src = src["probs"] if isinstance(src, dict) else src
            dist = obj["distortion"]
            dist = dist.get("costs", dist.get("rows")) if isinstance(dist, dict) else dist
            cost = obj["cost"]
            cost = cost.get("costs", cost.get("rows")) if isinstance(cost, dict) else cost
            return cls(ProbVector(src), DistortionMatrix(dist), CostMatrix(cost),
                       float(obj["D"]), float(obj["P"]), obj.get("u_card"))
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed problem: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "source": {"probs": self.source.probs.tolist()},
            "distortion": self.distortion.costs.tolist(),
            "cost": self.cost.costs.tolist(),
            "D": self.D,
            "P": self.P,
            "u_card": self.u_card,
        }


@dataclass(frozen=True)
class RdpSolution:
    rate: float
    encoder: Channel
    decoder: Channel
    achieved_D: float
    achieved_P: float
    converged: bool
    restarts_used: int
    start: str = ""
    multipliers: tuple[float, float] = (0.0, 0.0)
    feasibility_gap: float = 0.0

    def to_dict(self) -> dict:
        return {
            "rate_nats": self.rate,
            "rate_bits": self.rate / np.log(2.0),
            "achieved_D": self.achieved_D,
            "achieved_P": self.achieved_P,
            "converged": self.converged,
            "restarts_used": self.restarts_used,
            "start": self.start,
            "multipliers": list(self.multipliers),
            "feasibility_gap": self.feasibility_gap,
            "encoder": {"rows": self.encoder.rows.tolist()},
            "decoder": {"rows": self.decoder.rows.tolist()},
        }


def binary_problem(D: float, P: float, a: float = 0.5, u_card: int = 6) -> RdpProblem:
    """Ber(a) source, Hamming distortion and Hamming transport cost.

    Six states so the symmetric three-atom construction is representable.
    """
    return RdpProblem(ProbVector.bernoulli(a), DistortionMatrix.hamming(2), CostMatrix.hamming(2), D, P, u_card)


def problem_metrics(prob: RdpProblem, encoder, decoder) -> tuple[float, float, float]:
    """(rate, distortion, perception) of a channel pair, from the reference primitives."""
    enc = encoder if isinstance(encoder, Channel) else Channel(encoder)
    dec = decoder if isinstance(decoder, Channel) else Channel(decoder)
    rate = mutual_information(prob.source, enc)
    dist = expected_distortion(JointDistribution.compose(prob.source, enc, dec), prob.distortion)
    pu, back = posterior(prob.source, enc)
    perc = 0.0
    for u in np.flatnonzero(pu.probs > 0):
        val, _ = discrete_ot(back.rows[u], dec.rows[u], prob.cost)
        perc += pu.probs[u] * val
    return rate, dist, perc


def blahut_arimoto(p, d, s: float, n_iter: int = 5000, tol: float = 1e-13):
    """Classical RD point at slope ``-s``: returns ``(rate, distortion, channel)``."""
    p = np.asarray(as_prob_vector(p))
    d = np.asarray(d, dtype=np.float64)
    q = np.full(d.shape[1], 1.0 / d.shape[1])
    A = np.exp(-s * (d - d.min(axis=1, keepdims=True)))
    for _ in range(n_iter):
        W = q * A
        W /= W.sum(axis=1, keepdims=True)
        q_new = p @ W
        if np.max(np.abs(q_new - q)) < tol:
            q = q_new
            break
        q = q_new
    W = q * A
    W /= W.sum(axis=1, keepdims=True)
    return mutual_information(p, W), float(np.sum(p[:, None] * W * d)), W


def classical_rd(p, d, D: float, tol: float = 1e-12) -> tuple[float, np.ndarray]:
    """Classical R(D) by Blahut-Arimoto with bisection on the slope."""
    p = np.asarray(as_prob_vector(p))
    d = np.asarray(d, dtype=np.float64)
    d_min = float(p @ d.min(axis=1))
    d_max = float(np.min(p @ d))
    if D < d_min - tol:
        raise InputError(f"D={D} below the minimum achievable distortion {d_min}")
    if D >= d_max:
        y = int(np.argmin(p @ d))
        W = np.zeros_like(d)
        W[:, y] = 1.0
        return 0.0, W
    lo, hi = 0.0, 1.0
    while blahut_arimoto(p, d, hi)[1] > D:
        hi *= 2.0
        if hi > 1e4:
            break
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        _, dist, _ = blahut_arimoto(p, d, mid)
        if dist > D:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-10 * hi:
            break
    rate, _, W = blahut_arimoto(p, d, hi)
    return rate, W


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _pad_start(prob, E, G):
    """Embed an (E, G) pair with fewer than u_card states."""
    K = prob.u_card
    k = E.shape[1]
    if k > K:
        keep = np.argsort(-(prob.source.probs @ E))[:K]
        E, G = E[:, keep], G[keep]
        k = K
    Ef = np.full((prob.nx, K), 1e-12)
    Ef[:, :k] = E
    Gf = np.full((K, prob.ny), 1.0 / prob.ny)
    Gf[:k] = G
    Ef /= Ef.sum(axis=1, keepdims=True)
    Gf /= Gf.sum(axis=1, keepdims=True)
    return Ef, Gf


def _structured_starts(prob):
    out = []
    p, d = prob.source.probs, prob.distortion.costs
    best_y = np.argmin(d, axis=1)
    # identity-like: u = x, decoded to the cheapest reconstruction
    E = np.eye(prob.nx) * 0.98 + 0.02 / prob.nx
    G = np.eye(prob.ny)[best_y]
    out.append(("identity",) + _pad_start(prob, E, G))
    # classical RD optimum at D, u = x^
    try:
        _, W = classical_rd(p, d, max(prob.D, float(p @ d.min(axis=1))))
        W = 0.999 * W + 0.001 / prob.ny
        out.append(("classical",) + _pad_start(prob, W, np.eye(prob.ny)))
    except InputError:
        pass
    return out


def _column_generation(prob: RdpProblem, cfg: SolverConfig):
    """Master LP over (posterior, decoder) atoms with local pricing.

    Each atom is a pair (pi, g); a mixture with weights w and sum_k w_k pi_k
    = p_X is a channel pair with rate H(X) - sum w_k H(pi_k). Returns an
    (E, G) start built from the LP's support.
    """
    p, d, c = prob.source.probs, prob.distortion.costs, prob.cost.costs
    nx, ny = prob.nx, prob.ny
    rng = _rng(2**32 + 7)
    pis, gs = [], []
    best_y = np.argmin(d, axis=1)
    for x in range(nx):
        pis.append(np.eye(nx)[x])
        gs.append(np.eye(ny)[best_y[x]])
    for y in range(ny):
        pis.append(p.copy())
        gs.append(np.eye(ny)[y])
    if nx == ny:
        pis.append(p.copy())
        gs.append(p.copy())
    big = 1e4
    w = None
    duals = (0.0, 0.0)
    history = []
    for _ in range(cfg.cg_iters):
        Pi = np.array(pis)
        Gs = np.array(gs)
        h = np.array([entropy(pi) for pi in Pi])
        dist = np.einsum("kx,xy,ky->k", Pi, d, Gs)
        perc = np.array([transport_simplex(pi, g, c, 1e-13)[0] for pi, g in zip(Pi, Gs)])
        n = len(pis)
        cvec = np.concatenate([-h, [big, big]])
        A_eq = np.hstack([Pi.T, np.zeros((nx, 2))])
        A_ub = np.vstack([np.concatenate([dist, [-1.0, 0.0]]), np.concatenate([perc, [0.0, -1.0]])])
        res = linprog(cvec, A_ub=A_ub, b_ub=[prob.D, prob.P], A_eq=A_eq, b_eq=p,
                      bounds=(0, None), method="highs")
        if res.status != 0:
            return None
        w = res.x[:n]
        y = res.eqlin.marginals
        muD, muP = -res.ineqlin.marginals
        duals = (max(muD, 0.0), max(muP, 0.0))
        history.append(res.fun)
        if len(history) > 5 and history[-6] - history[-1] < 1e-10:
            break
        active = np.flatnonzero(w > 1e-12)
        starts_pi = np.vstack([Pi[active], rng.dirichlet(np.ones(nx), cfg.cg_pricing_starts)])
        starts_g = np.vstack([Gs[active], rng.dirichlet(np.ones(ny), cfg.cg_pricing_starts)])
        starts_pi = np.maximum(starts_pi, 1e-12)
        starts_g = np.maximum(starts_g, 1e-12)
        starts_pi /= starts_pi.sum(axis=1, keepdims=True)
        starts_g /= starts_g.sum(axis=1, keepdims=True)
        npi, ng, vals = price_atoms(starts_pi, starts_g, y, max(muD, 0.0), max(muP, 0.0), d, c, 300)
        order = np.argsort(vals)
        added = 0
        for k in order:
            if vals[k] > -1e-10 or added >= 8:
                break
            if any(np.max(np.abs(npi[k] - a)) + np.max(np.abs(ng[k] - b)) < 1e-9 for a, b in zip(pis, gs)):
                continue
            pis.append(npi[k])
            gs.append(ng[k])
            added += 1
        if added == 0:
            break
    Pi = np.array(pis)
    Gs = np.array(gs)
    active = np.flatnonzero(w > 1e-12)
    wa = w[active]
    E = np.full((nx, active.size), 1.0 / active.size)
    pos = p > 0
    E[pos] = (wa * Pi[active][:, pos].T) / p[pos, None]
    E = np.maximum(E, 0.0)
    E /= E.sum(axis=1, keepdims=True)
    return _pad_start(prob, E, Gs[active]) + (duals,)


def _lossless(prob: RdpProblem, cfg: SolverConfig) -> RdpSolution:
    if prob.u_card < prob.nx:
        raise InputError("D = 0 needs u_card >= |X|")
    E = np.zeros((prob.nx, prob.u_card))
    E[:, :prob.nx] = np.eye(prob.nx)
    G = np.full((prob.u_card, prob.ny), 1.0 / prob.ny)
    G[:prob.nx] = np.eye(prob.ny)[np.argmin(prob.distortion.costs, axis=1)]
    enc, dec = Channel(E), Channel(G)
    _, dist, perc = problem_metrics(prob, enc, dec)
    gap = max(dist - prob.D, perc - prob.P, 0.0)
    return RdpSolution(entropy(prob.source), enc, dec, dist, perc, gap <= cfg.constraint_tol, 0,
                       "lossless", feasibility_gap=gap)


def solve_rdp(prob: RdpProblem, config: SolverConfig | None = None, starts=None) -> RdpSolution:
    """Best feasible channel pair over deterministic multi-start runs.

    Starts: column generation, identity-like and classical-RD encoders,
    any caller-supplied ``(label, E, G)`` triples, then random Dirichlet
    draws for seeds ``0 .. restarts-1``. The returned rate is always paired
    with the achieved budgets; ``converged`` is false when no start met the
    budgets within ``constraint_tol``.
    """
    cfg = config or SolverConfig()
    if prob.D == 0:
        return _lossless(prob, cfg)
    p = prob.source.probs
    d = prob.distortion.costs
    c = prob.cost.costs
    tie = prob.P == 0 and prob.nx == prob.ny
    cands = []
    if cfg.column_generation:
        start = _column_generation(prob, cfg)
        if start is not None:
            cands.append(("column-generation",) + start)
    if cfg.structured:
        cands.extend(_structured_starts(prob))
    for lab, E, G in starts or ():
        cands.append((lab,) + _pad_start(prob, np.asarray(E, float), np.asarray(G, float)))
    for seed in range(cfg.restarts):
        rng = _rng(seed)
        cands.append((f"seed-{seed}", rng.dirichlet(np.ones(prob.u_card), prob.nx),
                      rng.dirichlet(np.ones(prob.ny), prob.u_card)))

    best = None
    for lab, E0, G0, *rest in cands:
        lam0 = rest[0] if rest else (0.0, 0.0)
        E, G, rate, dist, perc, lamD, lamP, _ = al_solve(
            p, d, c, prob.D, prob.P, np.ascontiguousarray(E0), np.ascontiguousarray(G0),
            tie, cfg.n_outer, cfg.n_inner, cfg.rho0, cfg.inner_tol, lam0[0], lam0[1])
        gap = max(dist - prob.D, 0.0 if tie else perc - prob.P, 0.0)
        feasible = gap <= cfg.constraint_tol
        key = (not feasible, rate if feasible else gap)
        if best is None or key < best[0]:
            best = (key, lab, E, G, lamD, lamP, gap)
    _, lab, E, G, lamD, lamP, gap = best
    enc = Channel(E / E.sum(axis=1, keepdims=True))
    dec = Channel(G / G.sum(axis=1, keepdims=True))
    rate, dist, perc = problem_metrics(prob, enc, dec)
    gap = max(dist - prob.D, perc - prob.P, 0.0)
    return RdpSolution(rate, enc, dec, dist, perc, gap <= cfg.constraint_tol, len(cands), lab,
                       (float(lamD), float(lamP)), gap)


def oracle_rdp(prob: RdpProblem, grid_k: int = 33) -> float:
    """Reference rate for binary problems from an LP over a grid of atoms.

    Atoms are pairs (P(X=1|u), P(X^=1|u)) on a ``grid_k`` x ``grid_k``
    lattice; the LP picks mixture weights under the source-marginal and
    budget constraints. Its vertices use at most four atoms. Every LP
    solution is a feasible channel pair, so the value upper-bounds R(D, P)
    and approaches it as the grid is refined.
    """
    if prob.nx != 2 or prob.ny != 2:
        raise InstanceTooLargeError("oracle_rdp handles binary source and reconstruction alphabets only")
    if grid_k > ORACLE_MAX_GRID or grid_k < 2:
        raise InstanceTooLargeError(f"grid_k must be in [2, {ORACLE_MAX_GRID}], got {grid_k}")
    if prob.u_card < 4:
        raise InputError("oracle_rdp needs u_card >= 4 (mixtures of up to four atoms)")
    t = np.linspace(0.0, 1.0, grid_k)
    a, ah = (m.ravel() for m in np.meshgrid(t, t, indexing="ij"))
    pis = np.column_stack([1 - a, a])
    gs = np.column_stack([1 - ah, ah])
    d, c = prob.distortion.costs, prob.cost.costs
    h = binary_entropy(a)
    dist = np.einsum("kx,xy,ky->k", pis, d, gs)
    perc = np.array([transport_simplex(pi, g, c, 1e-13)[0] for pi, g in zip(pis, gs)])
    res = linprog(-h, A_ub=np.vstack([dist, perc]), b_ub=[prob.D, prob.P],
                  A_eq=pis.T, b_eq=prob.source.probs, bounds=(0, None), method="highs")
    if res.status != 0:
        raise InputError("no feasible mixture of grid atoms for these budgets")
    return float(max(entropy(prob.source) + res.fun, 0.0))


@dataclass(frozen=True)
class RdpPoint:
    D: float
    P: float
    rate: float
    method: str = "solver"
    converged: bool = True
    achieved_D: float = float("nan")
    achieved_P: float = float("nan")
    monotone: bool = True
    notes: tuple = field(default_factory=tuple)


def check_monotone(points: list[RdpPoint], tol: float = 1e-6) -> list[RdpPoint]:
    """Flag points whose rate exceeds that of a point with smaller budgets.

    The flagged point is the one with the larger (D, P); nothing is smoothed.
    """
    out = []
    for i, pt in enumerate(points):
        bad = [j for j, o in enumerate(points)
               if j != i and o.D <= pt.D and o.P <= pt.P and (o.D, o.P) != (pt.D, pt.P)
               and pt.rate > o.rate + tol]
        if bad:
            note = f"rate exceeds points {bad} with smaller budgets"
            pt = RdpPoint(pt.D, pt.P, pt.rate, pt.method, pt.converged, pt.achieved_D,
                          pt.achieved_P, False, pt.notes + (note,))
        out.append(pt)
    return out


def rdp_curve(template: RdpProblem, D_values, P_values=None, P_factors=None,
              config: SolverConfig | None = None, monotone_tol: float = 1e-6) -> list[RdpPoint]:
    """Solver sweep over a budget grid, D major and P minor.

    Give absolute ``P_values`` or ``P_factors`` (P = factor * D). Rates must
    be non-increasing in each budget; violations are flagged on the point.
    """
    if (P_values is None) == (P_factors is None):
        raise InputError("give exactly one of P_values or P_factors")
    pts = []
    for D in D_values:
        Ps = P_values if P_values is not None else [f * D for f in P_factors]
        for P in Ps:
            sol = solve_rdp(template.with_budgets(D, P), config)
            pts.append(RdpPoint(float(D), float(P), sol.rate, "solver", sol.converged,
                                sol.achieved_D, sol.achieved_P))
    return check_monotone(pts, monotone_tol)
