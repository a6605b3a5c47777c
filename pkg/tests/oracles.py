"""Independent reference solvers used only by the tests.

They share no code with uavscs.conic: the PSD oracle samples 2x2 Hermitian matrices in
Bloch coordinates and polishes the best samples with scipy's SLSQP; the waypoint
oracle runs projected gradient ascent with Dykstra projections onto the balls.
"""
import numpy as np
from scipy.optimize import minimize

PAULI = np.array([[[1, 0], [0, 1]], [[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]],
                 dtype=complex)


def bloch_matrix(t, r):
    """X = t/2 (I + r . sigma); PSD iff t >= 0 and |r| <= 1."""
    return 0.5 * t * (PAULI[0] + np.tensordot(r, PAULI[1:], axes=1))


def _pairing(A):
    """<A, X> = t/2 (p0 + p . r) for Hermitian A."""
    return np.array([np.trace(A @ P).real for P in PAULI])


def psd2_oracle(log_terms, L, constraints, t_max, n_samples=40_000, n_polish=8, seed=0):
    """Maximize sum c log(<A,X>+b) + <L,X> over 2x2 PSD X subject to <G,X> <= g.

    ``log_terms`` is a list of (c, A, b); ``constraints`` a list of (G, g).
    """
    rng = np.random.default_rng(seed)
    lp = [(c, _pairing(A), b) for c, A, b in log_terms]
    Lp = _pairing(L)
    cp = [(_pairing(G), g) for G, g in constraints]

    def value(t, r):
        # t (n,), r (n, 3)
        v = 0.5 * t * (Lp[0] + r @ Lp[1:])
        ok = np.ones_like(t, dtype=bool)
        for Gp, g in cp:
            ok &= 0.5 * t * (Gp[0] + r @ Gp[1:]) <= g
        for c, Ap, b in lp:
            arg = 0.5 * t * (Ap[0] + r @ Ap[1:]) + b
            ok &= arg > 0
            v = v + c * np.log(np.where(arg > 0, arg, 1.0))
        return np.where(ok, v, -np.inf)

    t = rng.uniform(0, t_max, n_samples)
    d = rng.normal(size=(n_samples, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    rad = rng.uniform(0, 1, n_samples) ** (1 / 3)
    rad[: n_samples // 2] = 1.0  # half the samples on the rank-one boundary
    r = d * rad[:, None]
    v = value(t, r)
    best = np.argsort(v)[-n_polish:]

    def neg(z):
        return -float(value(np.array([z[0]]), z[None, 1:])[0])

    cons = [{"type": "ineq", "fun": lambda z: 1.0 - z[1:] @ z[1:]},
            {"type": "ineq", "fun": lambda z: z[0]}]
    for Gp, g in cp:
        cons.append({"type": "ineq",
                     "fun": lambda z, Gp=Gp, g=g: g - 0.5 * z[0] * (Gp[0] + z[1:] @ Gp[1:])})
    top = float(np.max(v))

    # rank-one boundary in spherical coordinates, where SLSQP on |r| <= 1 stalls
    def sph(a):
        return np.array([np.sin(a[0]) * np.cos(a[1]), np.sin(a[0]) * np.sin(a[1]), np.cos(a[0])])

    def neg_b(z):
        return -float(value(np.array([z[0]]), sph(z[1:])[None, :])[0])

    cons_b = [{"type": "ineq", "fun": lambda z: z[0]}]
    for Gp, g in cp:
        cons_b.append({"type": "ineq",
                       "fun": lambda z, Gp=Gp, g=g: g - 0.5 * z[0] * (Gp[0] + sph(z[1:]) @ Gp[1:])})
    for i in best:
        ri = r[i] / max(np.linalg.norm(r[i]), 1e-12)
        z0 = np.array([t[i], np.arccos(np.clip(ri[2], -1, 1)), np.arctan2(ri[1], ri[0])])
        if not np.isfinite(neg_b(z0)):
            continue
        res = minimize(neg_b, z0, method="SLSQP", constraints=cons_b,
                       options={"ftol": 1e-14, "maxiter": 500})
        z = res.x
        if (z[0] >= -1e-12 and np.isfinite(res.fun)
                and all(0.5 * z[0] * (Gp[0] + sph(z[1:]) @ Gp[1:]) <= g + 1e-9 for Gp, g in cp)):
            top = max(top, -res.fun)
    for i in best:
        z0 = np.concatenate([[t[i]], r[i]])
        res = minimize(neg, z0, method="SLSQP", constraints=cons,
                       options={"ftol": 1e-13, "maxiter": 500})
        if res.success or np.isfinite(res.fun):
            z = res.x
            feasible = (z[0] >= -1e-12 and z[1:] @ z[1:] <= 1 + 1e-9
                        and all(0.5 * z[0] * (Gp[0] + z[1:] @ Gp[1:]) <= g + 1e-9 for Gp, g in cp))
            if feasible and -res.fun > top:
                top = -res.fun
    return top


def _project_ball(x, S, c, r):
    """Euclidean projection onto {x : ||S x - c|| <= r} for S a selection or a difference
    of two selections (rows of +-I blocks), the only shapes the tests build."""
    y = S @ x - c
    n = np.linalg.norm(y)
    if n <= r:
        return x
    # minimal-norm correction dx with S dx = (r/n - 1) y
    target = (r / n - 1.0) * y
    dx = np.linalg.pinv(S) @ target
    return x + dx


def dykstra(x0, balls, iters=2000, tol=1e-13):
    """Projection of x0 onto the intersection of balls by Dykstra's algorithm."""
    x = np.array(x0, dtype=float)
    incs = [np.zeros_like(x) for _ in balls]
    for _ in range(iters):
        x_prev = x.copy()
        for i, (S, c, r) in enumerate(balls):
            y = x + incs[i]
            x = _project_ball(y, S, c, r)
            incs[i] = y - x
        if np.linalg.norm(x - x_prev) <= tol * max(1.0, np.linalg.norm(x)):
            break
    return x


def projected_gradient(obj, balls, x0, step=0.5, iters=3000, tol=1e-11):
    """Maximize obj @ x over an intersection of balls by projected gradient ascent."""
    x = dykstra(x0, balls)
    for _ in range(iters):
        x_new = dykstra(x + step * obj, balls)
        if np.linalg.norm(x_new - x) <= tol:
            x = x_new
            break
        x = x_new
    return x, float(obj @ x)
