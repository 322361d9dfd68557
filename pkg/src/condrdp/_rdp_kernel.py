"""Augmented-Lagrangian kernel for the finite-alphabet RDP program.

Variables are an encoder ``E`` (nx x K, rows on the simplex) and a decoder
``G`` (K x ny). The perception term sum_u q(u) OT(p(.|u), G_u) is
differentiated through its optimal dual potentials. With ``tie`` set the
decoder is pinned to the posterior (zero perception) and only ``E`` moves.
"""
import numpy as np

from ._accel import njit
from ._ot import transport_simplex

FLOOR = 1e-15
OT_TOL = 1e-13


@njit
def evaluate(p, d, c, E, G, tie):
    """Rate, distortion, perception and their gradients.

    Gradients w.r.t. ``E`` are returned divided by p(x), w.r.t. ``G``
    divided by q(u) (the natural mirror-descent preconditioning).
    """
    nx, K = E.shape
    ny = d.shape[1]
    J = np.empty((nx, K))
    q = np.zeros(K)
    for x in range(nx):
        for u in range(K):
            J[x, u] = p[x] * E[x, u]
            q[u] += J[x, u]
    if tie:
        for u in range(K):
            for y in range(ny):
                G[u, y] = J[y, u] / q[u] if q[u] > 0 else 1.0 / ny

    rate = 0.0
    gI = np.zeros((nx, K))
    for x in range(nx):
        for u in range(K):
            if J[x, u] > 0 and q[u] > 0:
                lr = np.log(E[x, u] / q[u])
                rate += J[x, u] * lr
                gI[x, u] = lr

    dist = 0.0
    gD = np.zeros((nx, K))
    gDG = np.zeros((K, ny))
    gP = np.zeros((nx, K))
    gPG = np.zeros((K, ny))
    perc = 0.0
    if tie:
        for u in range(K):
            if q[u] <= 0:
                continue
            du = 0.0
            for x in range(nx):
                for y in range(ny):
                    du += J[x, u] * J[y, u] * d[x, y]
            du /= q[u]
            dist += du
            for x in range(nx):
                s = 0.0
                for y in range(ny):
                    s += (d[x, y] + d[y, x]) * J[y, u]
                gD[x, u] = s / q[u] - du / q[u]
        return rate, dist, perc, gI, gD, gDG, gP, gPG, q

    for u in range(K):
        for x in range(nx):
            s = 0.0
            for y in range(ny):
                s += G[u, y] * d[x, y]
            gD[x, u] = s
            dist += J[x, u] * s
        if q[u] > 0:
            for y in range(ny):
                s = 0.0
                for x in range(nx):
                    s += J[x, u] * d[x, y]
                gDG[u, y] = s / q[u]
    post = np.empty(nx)
    for u in range(K):
        if q[u] <= 0:
            continue
        for x in range(nx):
            post[x] = J[x, u] / q[u]
        val, plan, f, g, status = transport_simplex(post, G[u].copy(), c, OT_TOL)
        perc += q[u] * val
        gg = 0.0
        for y in range(ny):
            gg += G[u, y] * g[y]
        for x in range(nx):
            gP[x, u] = f[x] + gg
        for y in range(ny):
            gPG[u, y] = g[y]
    return rate, dist, perc, gI, gD, gDG, gP, gPG, q


@njit
def _psi(s, lam, rho):
    t = lam + rho * s
    if t <= 0:
        return -lam * lam / (2 * rho)
    return (t * t - lam * lam) / (2 * rho)


@njit
def _mirror_rows(X, grad, eta, active):
    n, m = X.shape
    out = np.empty((n, m))
    for i in range(n):
        if not active[i]:
            for j in range(m):
                out[i, j] = X[i, j]
            continue
        gmin = np.inf
        for j in range(m):
            if grad[i, j] < gmin:
                gmin = grad[i, j]
        tot = 0.0
        for j in range(m):
            v = X[i, j] * np.exp(-eta * (grad[i, j] - gmin))
            if v < FLOOR:
                v = FLOOR
            out[i, j] = v
            tot += v
        for j in range(m):
            out[i, j] /= tot
    return out


@njit
def al_solve(p, d, c, D, P, E0, G0, tie, n_outer, n_inner, rho0, tol, lam0D, lam0P):
    """Minimize I(X;U) s.t. distortion <= D, perception <= P.

    Returns ``(E, G, rate, dist, perc, lamD, lamP, status)``; status 0 when
    the final violation is within ``tol``. ``lam0D``/``lam0P`` warm-start
    the multipliers.
    """
    nx, K = E0.shape
    E = E0.copy()
    G = G0.copy()
    rowsE = p > 0
    lamD = lam0D
    lamP = 0.0 if tie else lam0P
    rho = rho0
    prev_viol = np.inf
    rate = 0.0
    dist = 0.0
    perc = 0.0
    for outer in range(n_outer):
        rate, dist, perc, gI, gD, gDG, gP, gPG, q = evaluate(p, d, c, E, G, tie)
        phi = rate + _psi(dist - D, lamD, rho)
        if not tie:
            phi += _psi(perc - P, lamP, rho)
        small = 0
        eta = 0.5
        for it in range(n_inner):
            mD = max(0.0, lamD + rho * (dist - D))
            mP = 0.0 if tie else max(0.0, lamP + rho * (perc - P))
            gE = gI + mD * gD + mP * gP
            gG = mD * gDG + mP * gPG
            rowsG = q > 0
            accepted = False
            while eta > 1e-14:
                En = _mirror_rows(E, gE, eta, rowsE)
                Gn = G if tie else _mirror_rows(G, gG, eta, rowsG)
                r2, d2, p2, gI2, gD2, gDG2, gP2, gPG2, q2 = evaluate(p, d, c, En, Gn, tie)
                phi2 = r2 + _psi(d2 - D, lamD, rho)
                if not tie:
                    phi2 += _psi(p2 - P, lamP, rho)
                if phi2 <= phi + 1e-15:
                    accepted = True
                    break
                eta *= 0.5
            if not accepted:
                break
            gain = phi - phi2
            E, G = En, Gn
            rate, dist, perc, gI, gD, gDG, gP, gPG, q = r2, d2, p2, gI2, gD2, gDG2, gP2, gPG2, q2
            phi = phi2
            eta = min(eta * 1.5, 1.0)
            if gain <= 1e-13 * (1.0 + abs(phi)):
                small += 1
                if small >= 5:
                    break
            else:
                small = 0
        sD = dist - D
        sP = 0.0 if tie else perc - P
        viol = max(sD, sP, 0.0)
        lamD = max(0.0, lamD + rho * sD)
        if not tie:
            lamP = max(0.0, lamP + rho * sP)
        if viol <= tol and outer >= 3:
            if abs(sD) * lamD <= 1e-9 and abs(sP) * lamP <= 1e-9:
                break
        if viol > 0.25 * prev_viol:
            rho = min(rho * 4.0, 1e7)
        prev_viol = viol
    rate, dist, perc, gI, gD, gDG, gP, gPG, q = evaluate(p, d, c, E, G, tie)
    viol = max(dist - D, 0.0 if tie else perc - P, 0.0)
    status = 0 if viol <= tol else 1
    return E, G, rate, dist, perc, lamD, lamP, status


@njit
def atom_cost(pi, g, y, muD, muP, d, c):
    """Reduced cost -H(pi) - y.pi + muD pi'd g + muP OT(pi, g) and gradients."""
    nx = pi.shape[0]
    ny = g.shape[0]
    val = 0.0
    gpi = np.empty(nx)
    gg = np.zeros(ny)
    for x in range(nx):
        lp = np.log(pi[x]) if pi[x] > 0 else np.log(FLOOR)
        val += pi[x] * lp - y[x] * pi[x]
        s = 0.0
        for j in range(ny):
            s += d[x, j] * g[j]
            gg[j] += muD * d[x, j] * pi[x]
        val += muD * pi[x] * s
        gpi[x] = lp + 1.0 - y[x] + muD * s
    if muP > 0:
        ot, plan, f, h, status = transport_simplex(pi, g, c, OT_TOL)
        val += muP * ot
        for x in range(nx):
            gpi[x] += muP * f[x]
        for j in range(ny):
            gg[j] += muP * h[j]
    return val, gpi, gg


@njit
def price_atoms(starts_pi, starts_g, y, muD, muP, d, c, n_iter):
    """Local minimization of the reduced cost from each start (mirror descent)."""
    n = starts_pi.shape[0]
    nx = starts_pi.shape[1]
    ny = starts_g.shape[1]
    out_pi = starts_pi.copy()
    out_g = starts_g.copy()
    vals = np.empty(n)
    one = np.ones(1, dtype=np.bool_)
    for s in range(n):
        pi = starts_pi[s:s + 1].copy()
        g = starts_g[s:s + 1].copy()
        val, gpi, gg = atom_cost(pi[0], g[0], y, muD, muP, d, c)
        eta = 0.5
        for it in range(n_iter):
            accepted = False
            while eta > 1e-12:
                pn = _mirror_rows(pi, gpi.reshape(1, nx), eta, one)
                gn = _mirror_rows(g, gg.reshape(1, ny), eta, one)
                v2, gpi2, gg2 = atom_cost(pn[0], gn[0], y, muD, muP, d, c)
                if v2 <= val + 1e-15:
                    accepted = True
                    break
                eta *= 0.5
            if not accepted:
                break
            gain = val - v2
            pi, g, val, gpi, gg = pn, gn, v2, gpi2, gg2
            eta = min(eta * 1.5, 4.0)
            if gain <= 1e-14:
                break
        out_pi[s] = pi[0]
        out_g[s] = g[0]
        vals[s] = val
    return out_pi, out_g, vals
