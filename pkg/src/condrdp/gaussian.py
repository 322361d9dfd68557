"""Gaussian sources under squared error and squared W2 conditional perception.

For a Gaussian vector with covariance eigenvalues ``lam`` the rate is the
classical reverse water-filling rate evaluated at the effective distortion

    D* = (D + sqrt((2D - m) m)) / 2,   m = min(D, P),

and the optimum is reached by adding independent Gaussian noise of variance
``alpha * omega_l`` to the MMSE reconstruction in each eigen-subspace.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from .errors import DimensionError, InputError

TWO_PI_E = 2.0 * np.pi * np.e
BISECT_ITERS = 200


def _positive(name, x):
    x = float(x)
    if not np.isfinite(x) or x <= 0:
        raise InputError(f"{name} must be positive, got {x!r}")
    return x


def _nonneg(name, x):
    x = float(x)
    if not np.isfinite(x) or x < 0:
        raise InputError(f"{name} must be non-negative, got {x!r}")
    return x


def _variances(v, name="variances"):
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"{name}: expected a non-empty vector")
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise InputError(f"{name} must be positive and finite, got {v}")
    return v


@dataclass(frozen=True)
class GaussianVectorSource:
    """N(mean, Theta^T diag(eigenvalues) Theta). Only the spectrum affects rates."""

    eigenvalues: np.ndarray
    mean: np.ndarray | None = None
    rotation: np.ndarray | None = None

    def __post_init__(self):
        lam = _variances(self.eigenvalues, "eigenvalues")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        if self.mean is not None and np.shape(self.mean) != lam.shape:
            raise DimensionError("mean has the wrong length")
        if self.rotation is not None:
            R = np.asarray(self.rotation, dtype=np.float64)
            if R.shape != (lam.size, lam.size) or not np.allclose(R @ R.T, np.eye(lam.size), atol=1e-9):
                raise InputError("rotation must be an L x L orthogonal matrix")

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @classmethod
    def from_covariance(cls, cov, mean=None) -> "GaussianVectorSource":
        cov = np.asarray(cov, dtype=np.float64)
        lam, vecs = np.linalg.eigh(cov)
        # cov = vecs diag(lam) vecs^T = Theta^T Lambda Theta with Theta = vecs^T
        return cls(lam, mean, vecs.T)

    def entropy(self) -> float:
        """Differential entropy in nats."""
        return float(0.5 * np.sum(np.log(TWO_PI_E * self.eigenvalues)))


@dataclass(frozen=True)
class GaussianMixtureSource:
    """sum_k beta_k N(mu_k, Sigma_k) with every Sigma_k positive definite.

    ``h_x`` is the differential entropy (nats) if known.
    """

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    h_x: float | None = None

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
            raise InputError("mixture weights must be positive and sum to 1")
        w = w / w.sum()
        mu = np.asarray(self.means, dtype=np.float64).reshape(w.size, -1)
        L = mu.shape[1]
        S = np.asarray(self.covs, dtype=np.float64).reshape(w.size, L, L)
        if not np.allclose(S, np.swapaxes(S, 1, 2)):
            raise InputError("component covariances must be symmetric")
        if np.any(np.linalg.eigvalsh(S)[:, 0] <= 0):
            raise InputError("component covariances must be positive definite")
        for name, arr in (("weights", w), ("means", mu), ("covs", S)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_components(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def min_eigenvalue(self) -> float:
        """min_k lambda_min(Sigma_k)."""
        return float(np.min(np.linalg.eigvalsh(self.covs)[:, 0]))

    def covariance(self) -> np.ndarray:
        m = self.weights @ self.means
        second = np.einsum("k,kij->ij", self.weights, self.covs + np.einsum("ki,kj->kij", self.means, self.means))
        return second - np.outer(m, m)

    def logpdf(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.dim and x.shape[0] == self.dim:
            x = x.T
        comps = []
        for k in range(self.n_components):
            Lc = np.linalg.cholesky(self.covs[k])
            z = np.linalg.solve(Lc, (x - self.means[k]).T)
            logdet = 2.0 * np.sum(np.log(np.diag(Lc)))
            comps.append(np.log(self.weights[k]) - 0.5 * (np.sum(z * z, axis=0) + logdet + self.dim * np.log(2 * np.pi)))
        return logsumexp(np.vstack(comps), axis=0)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        k = rng.choice(self.n_components, size=n, p=self.weights)
        z = rng.standard_normal((n, self.dim))
        chol = np.linalg.cholesky(self.covs)
        return self.means[k] + np.einsum("nij,nj->ni", chol[k], z)


def d_star(D: float, P: float) -> float:
    """Effective distortion (D + sqrt((2D - m) m)) / 2 with m = min(D, P)."""
    D = _positive("D", D)
    P = _nonneg("P", P)
    m = min(D, P)
    return 0.5 * (D + np.sqrt(max((2.0 * D - m) * m, 0.0)))


def alpha_coefficient(D: float, P: float) -> float:
    """Noise-variance ratio gamma_hat / gamma at the optimum; 0 once P >= D."""
    D = _positive("D", D)
    P = _nonneg("P", P)
    if D <= P:
        return 0.0
    # D^2 - (2D - P) P = (D - P)^2 gives a form without cancellation near P = D
    return ((D - P) / (D + np.sqrt((2.0 * D - P) * P))) ** 2


def water_level(levels, target: float) -> tuple[float, np.ndarray]:
    """Solve sum_l min(omega, levels_l) = target by bisection on [0, max level].

    Returns ``(omega, omega_l)``. When ``target >= sum(levels)`` every
    subspace is saturated: ``omega = max(levels)`` and ``omega_l = levels``.
    """
    lam = _variances(levels, "levels")
    target = _nonneg("target", target)
    total = lam.sum()
    if target >= total:
        return float(lam.max()), lam.copy()
    lo, hi = 0.0, float(lam.max())
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if np.minimum(mid, lam).sum() < target:
            lo = mid
        else:
            hi = mid
    omega = 0.5 * (lo + hi)
    # bisection fixes the active set; recompute the level exactly on it
    capped = lam < omega
    n_free = np.count_nonzero(~capped)
    if n_free:
        exact = (target - lam[capped].sum()) / n_free
        if (not capped.any() or exact >= lam[capped].max()) and exact <= lam[~capped].min():
            omega = exact
    return float(omega), np.minimum(omega, lam)


def classical_rd_rate(eigenvalues, D: float) -> float:
    """Reverse water-filling rate R(D) of a Gaussian vector (nats).

    Closed form by scanning the sorted spectrum for the active set; kept
    independent of the bisection used elsewhere.
    """
    lam = np.sort(_variances(eigenvalues, "eigenvalues"))
    D = _positive("D", D)
    if D >= lam.sum():
        return 0.0
    L = lam.size
    prefix = 0.0
    for k in range(L):
        omega = (D - prefix) / (L - k)
        if omega <= lam[k]:
            return float(0.5 * np.sum(np.log(lam[k:] / omega)))
        prefix += lam[k]
    return 0.0  # pragma: no cover


@dataclass(frozen=True)
class WaterfillSolution:
    D: float
    P: float
    D_star: float
    omega: float
    omega_l: np.ndarray
    gamma_star_l: np.ndarray
    gamma_hat_star_l: np.ndarray
    D_l: np.ndarray
    P_l: np.ndarray
    rate: float
    alpha: float
    unique: bool = True

    def to_dict(self) -> dict:
        return {
            "D": self.D,
            "P": self.P,
            "D_star": self.D_star,
            "omega": self.omega,
            "omega_l": self.omega_l.tolist(),
            "gamma": self.gamma_star_l.tolist(),
            "gamma_hat": self.gamma_hat_star_l.tolist(),
            "D_l": self.D_l.tolist(),
            "P_l": self.P_l.tolist(),
            "rate_nats": self.rate,
            "alpha": self.alpha,
            "unique_split": self.unique,
        }


def waterfill(src, D: float, P: float) -> WaterfillSolution:
    """Conditional RDP solution for a Gaussian vector source."""
    lam = src.eigenvalues if isinstance(src, GaussianVectorSource) else _variances(src, "eigenvalues")
    D = _positive("D", D)
    P = _nonneg("P", P)
    ds = d_star(D, P)
    omega, omega_l = water_level(lam, ds)
    alpha = alpha_coefficient(D, P)
    m = min(D, P)
    rate = float(max(np.sum(0.5 * np.log(lam / omega_l)), 0.0))
    return WaterfillSolution(
        D=D, P=P, D_star=ds, omega=omega, omega_l=omega_l,
        gamma_star_l=omega_l.copy(), gamma_hat_star_l=alpha * omega_l,
        D_l=(D / ds) * omega_l, P_l=(m / ds) * omega_l,
        rate=rate, alpha=alpha, unique=bool(ds <= lam.sum()),
    )


@dataclass(frozen=True)
class ChiSolution:
    """Closed-form optimum of the variance-allocation program and its KKT data.

    ``multipliers`` is ``None`` when no multipliers exist (P = 0 with the
    distortion constraint active: the perception constraint then has a
    vanishing gradient on the feasible set).
    """

    value: float
    gammas: np.ndarray
    gamma_hats: np.ndarray
    case: int
    multipliers: dict | None = None
    residuals: dict | None = field(default=None)

    @property
    def max_residual(self) -> float:
        return float("inf") if self.residuals is None else max(self.residuals.values())


def chi_objective(gammas) -> float:
    return float(-np.sum(0.5 * np.log(TWO_PI_E * np.asarray(gammas))))


def chi_case(sigmas, D: float, P: float) -> int:
    """Which of the four KKT regimes (1-4) applies."""
    s = _variances(sigmas, "sigmas").sum()
    below = d_star(D, P) < s
    if P < D:
        return 1 if below else 3
    return 2 if below else 4


def chi_multipliers(sigmas, D: float, P: float, omega: float) -> dict | None:
    sig = _variances(sigmas, "sigmas")
    case = chi_case(sig, D, P)
    L = sig.size
    if case == 1:
        if P <= 0:
            return None
        r = np.sqrt((2 * D - P) * P)
        return {
            "nu1": (P + r) / (4 * omega * r),
            "nu2": (D - P) / (4 * omega * r),
            "tau": np.maximum(omega - sig, 0.0) / (2 * omega * sig),
            "tau_hat": np.zeros(L),
        }
    if case == 2:
        return {
            "nu1": 1.0 / (2 * omega),
            "nu2": 0.0,
            "tau": np.maximum(omega - sig, 0.0) / (2 * omega * sig),
            "tau_hat": np.full(L, 1.0 / (2 * omega)),
        }
    return {"nu1": 0.0, "nu2": 0.0, "tau": 1.0 / (2 * sig), "tau_hat": np.zeros(L)}


def kkt_residuals(sigmas, D, P, gammas, gamma_hats, mult) -> dict:
    """Absolute violations of each KKT condition of the variance program.

    Terms of the form ``nu2 * (1 - sqrt(g)/sqrt(g_hat))`` with ``nu2 = 0``
    are taken as 0 even when ``g_hat = 0``.
    """
    sig = _variances(sigmas, "sigmas")
    g = np.asarray(gammas, dtype=np.float64)
    gh = np.asarray(gamma_hats, dtype=np.float64)
    nu1, nu2 = float(mult["nu1"]), float(mult["nu2"])
    tau, tau_hat = np.asarray(mult["tau"], float), np.asarray(mult["tau_hat"], float)
    sg, sgh = np.sqrt(g), np.sqrt(gh)
    dist_slack = np.sum(g + gh) - D
    perc_slack = np.sum((sg - sgh) ** 2) - P
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(nu2 == 0, 0.0, nu2 * (1 - sgh / sg))
        r2 = np.where(nu2 == 0, 0.0, nu2 * (1 - sg / sgh))
    stat_g = -1.0 / (2 * g) + nu1 + r1 + tau
    stat_gh = nu1 + r2 - tau_hat
    pos = lambda x: float(np.max(np.maximum(x, 0.0)))
    return {
        "primal_gamma": max(pos(-g), pos(g - sig)),
        "primal_gamma_hat": pos(-gh),
        "primal_distortion": pos(dist_slack),
        "primal_perception": pos(perc_slack),
        "dual_feasibility": max(pos(-np.array([nu1, nu2])), pos(-tau), pos(-tau_hat)),
        "stationarity_gamma": float(np.max(np.abs(stat_g))),
        "stationarity_gamma_hat": float(np.max(np.abs(stat_gh))),
        "slackness_distortion": abs(nu1 * dist_slack),
        "slackness_perception": abs(nu2 * perc_slack),
        "slackness_tau": float(np.max(np.abs(tau * (g - sig)))),
        "slackness_tau_hat": float(np.max(np.abs(tau_hat * gh))),
    }


def chi_program_solve(sigmas, D: float, P: float) -> ChiSolution:
    """Minimize -sum 1/2 log(2 pi e gamma_l) over variance allocations.

    Constraints: 0 <= gamma_l <= sigma_l^2, gamma_hat_l >= 0,
    sum(gamma + gamma_hat) <= D, sum (sqrt gamma - sqrt gamma_hat)^2 <= P.
    Returns the closed-form optimum and a KKT certificate.
    """
    sig = _variances(sigmas, "sigmas")
    D = _positive("D", D)
    P = _nonneg("P", P)
    omega, omega_l = water_level(sig, d_star(D, P))
    gammas = omega_l
    gamma_hats = alpha_coefficient(D, P) * omega_l
    mult = chi_multipliers(sig, D, P, omega)
    res = None if mult is None else kkt_residuals(sig, D, P, gammas, gamma_hats, mult)
    return ChiSolution(chi_objective(gammas), gammas, gamma_hats, chi_case(sig, D, P), mult, res)


def shannon_lower_bound(h_x: float, sigmas, D: float, P: float) -> float:
    """h(X) - sum_l 1/2 log(2 pi e omega_l) with water levels at D*."""
    sig = _variances(sigmas, "sigmas")
    _, omega_l = water_level(sig, d_star(D, P))
    return float(h_x - np.sum(0.5 * np.log(TWO_PI_E * omega_l)))


def mixture_entropy_quad(src: GaussianMixtureSource) -> float:
    """Differential entropy of a 1-D or 2-D mixture by adaptive quadrature."""
    sd = np.sqrt(np.max(np.linalg.eigvalsh(src.covs)))
    lo = src.means.min(axis=0) - 12 * sd
    hi = src.means.max(axis=0) + 12 * sd

    def integrand(*x):
        lp = src.logpdf(np.array(x)[None, :])[0]
        return -np.exp(lp) * lp

    if src.dim == 1:
        pts = sorted(set(np.round(src.means[:, 0], 12)))
        val, _ = integrate.quad(integrand, lo[0], hi[0], points=pts, limit=500, epsabs=1e-12, epsrel=1e-12)
        return float(val)
    if src.dim == 2:
        val, _ = integrate.nquad(integrand, [[lo[0], hi[0]], [lo[1], hi[1]]],
                                 opts={"limit": 200, "epsabs": 1e-10, "epsrel": 1e-10})
        return float(val)
    raise InputError("quadrature entropy only for L <= 2; use Monte Carlo")


def mixture_validity(src: GaussianMixtureSource, D: float, P: float) -> bool:
    return bool(d_star(D, P) / src.dim <= src.min_eigenvalue)


def mixture_rate(src: GaussianMixtureSource, D: float, P: float, h_x: float | None = None,
                 estimate: bool = True, seed: int = 0, n_mc: int = 200_000) -> tuple[float, bool]:
    """Rate of a Gaussian mixture where the closed form applies.

    Returns ``(rate, valid)``. Inside the validity region
    ``D*/L <= min_k lambda_min(Sigma_k)`` the rate is exact; outside it the
    Shannon lower bound is returned with ``valid=False``.
    """
    h = h_x if h_x is not None else src.h_x
    if h is None:
        if not estimate:
            raise InputError("mixture entropy h(X) not supplied")
        if src.dim <= 2:
            h = mixture_entropy_quad(src)
        else:
            from .simulate import mixture_entropy_mc

            h, _ = mixture_entropy_mc(src, n_mc, seed)
    L = src.dim
    ds = d_star(D, P)
    valid = mixture_validity(src, D, P)
    if valid:
        return float(h - 0.5 * L * np.log(TWO_PI_E * ds / L)), True
    sig = np.diag(src.covariance())
    return shannon_lower_bound(h, sig, D, P), False


@dataclass(frozen=True)
class GaussianConstruction:
    """X = U' + V and X^ = U' + V^ per eigen-coordinate, all independent.

    Variances are per coordinate in the eigenbasis; ``rotation``/``mean`` map
    back to the original coordinates.
    """

    u_var: np.ndarray
    v_var: np.ndarray
    vhat_var: np.ndarray
    rotation: np.ndarray | None = None
    mean: np.ndarray | None = None

    @property
    def distortion(self) -> float:
        return float(np.sum(self.v_var + self.vhat_var))

    @property
    def perception(self) -> float:
        return float(np.sum((np.sqrt(self.v_var) - np.sqrt(self.vhat_var)) ** 2))

    @property
    def mutual_information(self) -> float:
        lam = self.u_var + self.v_var
        return float(np.sum(0.5 * np.log(lam / self.v_var)))

    def to_dict(self) -> dict:
        return {"u_var": self.u_var.tolist(), "v_var": self.v_var.tolist(), "vhat_var": self.vhat_var.tolist()}


def achieving_joint(src: GaussianVectorSource, sol: WaterfillSolution, tol: float = 1e-12) -> GaussianConstruction:
    lam = src.eigenvalues
    g = sol.gamma_star_l
    if g.shape != lam.shape:
        raise DimensionError("solution and source dimensions differ")
    if np.any(g > lam * (1 + tol) + tol):
        raise InputError("inconsistent solution: gamma* exceeds an eigenvalue")
    return GaussianConstruction(np.maximum(lam - g, 0.0), g.copy(), sol.gamma_hat_star_l.copy(),
                                src.rotation, src.mean)
