"""UAV trajectories: position-form secrecy rates, their linearizations, and trust-region SCA.

Waypoint arrays hold slots 1..N; slot 0 is the fixed start and slot N equals the fixed
end point.  Beam covariances are held fixed while a trajectory is optimized, so the
per-slot rate depends on the moving UAV only through distances and steering phases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .conic import BallConstraint, WaypointProgram, solve_waypoints
from .geometry import eta, eta_gradient, slant_distance

LN2 = math.log(2.0)


@dataclass(frozen=True)
class Trajectory:
    waypoints: np.ndarray  # (N, 2), slots 1..N
    start: np.ndarray
    altitude: float

    def __post_init__(self):
        object.__setattr__(self, "waypoints", np.asarray(self.waypoints, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float).reshape(2))

    @property
    def N(self) -> int:
        return self.waypoints.shape[0]

    @property
    def end(self) -> np.ndarray:
        return self.waypoints[-1]

    def with_start(self) -> np.ndarray:
        """(N+1, 2) array including slot 0."""
        return np.vstack([self.start, self.waypoints])

    def replace_waypoints(self, waypoints) -> "Trajectory":
        return Trajectory(np.asarray(waypoints, dtype=float), self.start, self.altitude)


@dataclass(frozen=True)
class RateContext:
    """Everything besides positions and beams that the position-form rates need."""

    alt_alice: float
    alt_jack: float
    spacing_ratio: float
    beta: float
    bob: np.ndarray
    eve: np.ndarray
    imp: object

    @classmethod
    def from_scenario(cls, s, imp=None) -> "RateContext":
        return cls(s.alt_alice, s.alt_jack, s.spacing_ratio, s.pathloss_ref,
                   np.asarray(s.bob_pos, float), np.asarray(s.eve_pos, float),
                   s.impairments() if imp is None else imp)


@dataclass
class TrajLinearization:
    alpha: np.ndarray  # (N,) rate at the expansion point
    rho: np.ndarray  # (N, 2) gradient in bits/s/Hz per meter
    zeta_num: dict  # zeta_1q (Alice) or zeta_3q (Jack), keyed by 'b'/'e'
    zeta_den: dict  # zeta_2q or zeta_4q
    psi: float = 0.0


# --------------------------------------------------------------------------- position-form rates

def _nodes(ctx):
    return (("b", ctx.bob, ctx.imp.jam_bob, ctx.imp.noise_bob),
            ("e", ctx.eve, ctx.imp.jam_eve, ctx.imp.noise_eve))


def alice_zetas(u_a, W_a, W_j, u_j, ctx):
    """zeta_1q = eta_aq + zeta_2q and zeta_2q = (phi_jq eta_jq / d_jq^2 + sigma_q^2/beta) d_aq^2."""
    z1, z2 = {}, {}
    for q, v, phi, noise in _nodes(ctx):
        d_a = slant_distance(u_a, ctx.alt_alice, v)
        d_j = slant_distance(u_j, ctx.alt_jack, v)
        jam = phi * eta(W_j, u_j, ctx.alt_jack, v, ctx.spacing_ratio) / d_j ** 2
        z2[q] = (jam + noise / ctx.beta) * d_a ** 2
        z1[q] = eta(W_a, u_a, ctx.alt_alice, v, ctx.spacing_ratio) + z2[q]
    return z1, z2


def jack_zetas(u_j, W_a, W_j, u_a, ctx):
    """zeta_3q = tr(W_a A_aq) d_jq^2/d_aq^2 + phi_jq eta_jq + (sigma_q^2/beta) d_jq^2;
    zeta_4q = phi_jq eta_jq + (sigma_q^2/beta) d_jq^2."""
    z3, z4 = {}, {}
    for q, v, phi, noise in _nodes(ctx):
        d_a = slant_distance(u_a, ctx.alt_alice, v)
        d_j = slant_distance(u_j, ctx.alt_jack, v)
        sig = eta(W_a, u_a, ctx.alt_alice, v, ctx.spacing_ratio) / d_a ** 2
        z4[q] = phi * eta(W_j, u_j, ctx.alt_jack, v, ctx.spacing_ratio) + noise / ctx.beta * d_j ** 2
        z3[q] = sig * d_j ** 2 + z4[q]
    return z3, z4


def rate_of_alice_pos(u_a, W_a, W_j, u_j, ctx):
    """Per-slot unclamped secrecy rate as a function of Alice's position (broadcasts over slots)."""
    z1, z2 = alice_zetas(u_a, W_a, W_j, u_j, ctx)
    return (np.log2(z1["b"]) + np.log2(z2["e"]) - np.log2(z1["e"]) - np.log2(z2["b"]))


def rate_of_jack_pos(u_j, W_a, W_j, u_a, ctx):
    """Per-slot unclamped secrecy rate as a function of Jack's position (broadcasts over slots)."""
    z3, z4 = jack_zetas(u_j, W_a, W_j, u_a, ctx)
    return (np.log2(z3["b"]) + np.log2(z4["e"]) - np.log2(z3["e"]) - np.log2(z4["b"]))


def linearize_alice(u_a, W_a, W_j, u_j, ctx, distance_factor: float = 2.0) -> TrajLinearization:
    """Value and gradient of rate_of_alice_pos at u_a.

    ``distance_factor`` multiplies the d^2-derivative terms; the exact gradient uses 2.
    A factor of 1 gives the variant without it (see alice_gradient_without_factor_two).
    """
    u_a = np.asarray(u_a, float)
    u_j = np.asarray(u_j, float)
    z1, z2 = alice_zetas(u_a, W_a, W_j, u_j, ctx)
    rho = 0.0
    for q, v, phi, noise in _nodes(ctx):
        d_j = slant_distance(u_j, ctx.alt_jack, v)
        jam = phi * eta(W_j, u_j, ctx.alt_jack, v, ctx.spacing_ratio) / d_j ** 2
        gam = eta_gradient(W_a, u_a, ctx.alt_alice, v, ctx.spacing_ratio)
        dist = distance_factor * ((jam + noise / ctx.beta)[..., None] * (u_a - v))
        term = gam / z1[q][..., None] + (1 / z1[q] - 1 / z2[q])[..., None] * dist
        rho = rho + (term if q == "b" else -term)
    alpha = np.log2(z1["b"]) + np.log2(z2["e"]) - np.log2(z1["e"]) - np.log2(z2["b"])
    return TrajLinearization(np.asarray(alpha), np.asarray(rho) / LN2, z1, z2)


def linearize_jack(u_j, W_a, W_j, u_a, ctx, distance_factor: float = 2.0) -> TrajLinearization:
    """Value and gradient of rate_of_jack_pos at u_j (``distance_factor`` as in linearize_alice)."""
    u_j = np.asarray(u_j, float)
    u_a = np.asarray(u_a, float)
    z3, z4 = jack_zetas(u_j, W_a, W_j, u_a, ctx)
    rho = 0.0
    for q, v, phi, noise in _nodes(ctx):
        d_a = slant_distance(u_a, ctx.alt_alice, v)
        sig = eta(W_a, u_a, ctx.alt_alice, v, ctx.spacing_ratio) / d_a ** 2
        gam = eta_gradient(W_j, u_j, ctx.alt_jack, v, ctx.spacing_ratio)
        diff = u_j - v
        d4 = phi * gam + distance_factor * (noise / ctx.beta) * diff
        term = ((1 / z3[q] - 1 / z4[q])[..., None] * d4
                + distance_factor * sig[..., None] * diff / z3[q][..., None])
        rho = rho + (term if q == "b" else -term)
    alpha = np.log2(z3["b"]) + np.log2(z4["e"]) - np.log2(z3["e"]) - np.log2(z4["b"])
    return TrajLinearization(np.asarray(alpha), np.asarray(rho) / LN2, z3, z4)


def alice_gradient_without_factor_two(u_a, W_a, W_j, u_j, ctx):
    """Alice gradient with the d^2-derivative terms lacking their factor of 2 (fails FD checks)."""
    return linearize_alice(u_a, W_a, W_j, u_j, ctx, distance_factor=1.0).rho


def jack_gradient_without_factor_two(u_j, W_a, W_j, u_a, ctx):
    """Jack gradient with the d^2-derivative terms lacking their factor of 2 (fails FD checks)."""
    return linearize_jack(u_j, W_a, W_j, u_a, ctx, distance_factor=1.0).rho


# --------------------------------------------------------------------------- constraints

def linearized_separation(u_lin, u_other, u, dh2: float):
    """First-order lower bound of ||u - u_other||^2 + dh2 around u_lin (exact at u = u_lin)."""
    d = np.asarray(u_lin, float) - np.asarray(u_other, float)
    return np.sum(d * d, axis=-1) + 2 * np.sum(d * (np.asarray(u, float) - u_lin), axis=-1) + dh2


def check_trajectory(traj: Trajectory, end, d_max: float, other: Optional[Trajectory] = None,
                     d_min: float = 0.0, tol: float = 1e-6) -> list[str]:
    """Names of violated maneuvering constraints (endpoint, displacement, separation)."""
    issues = []
    pts = traj.with_start()
    if np.linalg.norm(pts[-1] - np.asarray(end, float)) > tol:
        issues.append("end point mismatch")
    steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    bad = np.flatnonzero(steps > d_max + tol)
    if bad.size:
        issues.append(f"displacement exceeds D_max in slots {[int(i) + 1 for i in bad]}")
    if other is not None:
        dh2 = (traj.altitude - other.altitude) ** 2
        sep = np.sqrt(np.sum((traj.waypoints - other.waypoints) ** 2, axis=1) + dh2)
        bad = np.flatnonzero(sep < d_min - tol)
        if bad.size:
            issues.append(f"separation below d_min in slots {[int(i) + 1 for i in bad]}")
    return issues


# --------------------------------------------------------------------------- trust-region SCA

@dataclass
class TrajectoryResult:
    trajectory: Trajectory
    asr: float
    asr_start: float
    radii: list = field(default_factory=list)
    predicted: list = field(default_factory=list)
    true_asr: list = field(default_factory=list)
    solver_status: list = field(default_factory=list)
    gradient_mismatch: float = 0.0


def _waypoint_program(u, rho, start, end, d_max, psi, other, dh2, d_min):
    """Program over the free waypoints (slots 1..N-1)."""
    n_free = u.shape[0] - 1
    dim = 2 * n_free
    N = u.shape[0]
    obj = rho[:n_free].ravel() / N
    balls = []
    I2 = np.eye(2)

    def sel(i, sign=1.0):
        S = np.zeros((2, dim))
        S[:, 2 * i:2 * i + 2] = sign * I2
        return S

    balls.append(BallConstraint(sel(0), start, d_max))
    for i in range(1, n_free):
        balls.append(BallConstraint(sel(i) - sel(i - 1), np.zeros(2), d_max))
    balls.append(BallConstraint(sel(n_free - 1, -1.0), -end, d_max))
    for i in range(n_free):
        balls.append(BallConstraint(sel(i), u[i], psi))
    G, g = [], []
    if other is not None and dh2 < d_min ** 2:
        for i in range(n_free):
            d = u[i] - other[i]
            row = np.zeros(dim)
            row[2 * i:2 * i + 2] = -2 * d
            G.append(row)
            g.append(d @ d - 2 * d @ u[i] + dh2 - d_min ** 2)
    return WaypointProgram(n_points=n_free, objective=obj, balls=balls,
                           G=np.array(G) if G else None, g=np.array(g) if g else None)


def _trust_region(traj: Trajectory, end, rate_fn, lin_fn, other_pts, dh2, d_min, d_max,
                  psi0, shrink, tol, cfg, variant_fn=None) -> TrajectoryResult:
    u = traj.waypoints.copy()
    N = u.shape[0]
    start = traj.start
    end = np.asarray(end, float)

    def true_asr(pts):
        return float(np.mean(np.maximum(rate_fn(pts), 0.0)))

    asr0 = true_asr(u)
    res = TrajectoryResult(traj, asr0, asr0)
    best_asr, best_u = asr0, u.copy()
    psi = psi0
    if N < 2 or psi0 <= 0:
        return res
    for _ in range(cfg.max_traj_iter):
        if psi < cfg.trust_radius_min:
            break
        lin = lin_fn(u)
        if variant_fn is not None and not res.radii:
            # relative gap between the exact gradient and the factor-one variant
            scale = max(float(np.linalg.norm(lin.rho)), 1e-300)
            res.gradient_mismatch = float(np.linalg.norm(variant_fn(u) - lin.rho)) / scale
        prog = _waypoint_program(u, lin.rho, start, end, d_max, psi, other_pts, dh2, d_min)
        sol = solve_waypoints(prog, u[:-1].ravel(), tol=cfg.kkt_tol, max_iter=cfg.max_newton_iter)
        res.radii.append(psi)
        res.solver_status.append(sol.status)
        if sol.status == "infeasible_start":
            break
        u_new = u.copy()
        u_new[:-1] = sol.x.reshape(-1, 2)
        predicted = float(np.sum(lin.rho * (u_new - u)) / N)
        u = u_new
        a = true_asr(u)
        res.predicted.append(predicted)
        res.true_asr.append(a)
        if a > best_asr:
            best_asr, best_u = a, u.copy()
        psi *= shrink
        if predicted <= tol:
            break
    res.trajectory = traj.replace_waypoints(best_u)
    res.asr = best_asr
    return res


def solve_alice_trajectory(traj_a: Trajectory, traj_j: Trajectory, W_a, W_j, ctx: RateContext,
                           s, cfg=None) -> TrajectoryResult:
    """Trust-region SCA on Alice's waypoints with the beams and Jack's path held fixed.

    Returns the iterate with the best clamped average secrecy rate (the input counts
    as an iterate, so the result never scores below it).
    """
    cfg = cfg or s.solver
    uj = traj_j.waypoints
    d_max = s.v_max * s.slot_len
    dh2 = (s.alt_alice - s.alt_jack) ** 2
    return _trust_region(
        traj_a, s.alice_end,
        rate_fn=lambda pts: rate_of_alice_pos(pts, W_a, W_j, uj, ctx),
        lin_fn=lambda pts: linearize_alice(pts, W_a, W_j, uj, ctx),
        variant_fn=lambda pts: alice_gradient_without_factor_two(pts, W_a, W_j, uj, ctx),
        other_pts=uj, dh2=dh2, d_min=s.d_min, d_max=d_max, psi0=cfg.trust_radius_init,
        shrink=cfg.shrink_alice, tol=cfg.alice_tol, cfg=cfg)


def solve_jack_trajectory(traj_j: Trajectory, traj_a: Trajectory, W_a, W_j, ctx: RateContext,
                          s, cfg=None) -> TrajectoryResult:
    """Mirror of solve_alice_trajectory for Jack."""
    cfg = cfg or s.solver
    ua = traj_a.waypoints
    d_max = s.v_max * s.slot_len
    dh2 = (s.alt_alice - s.alt_jack) ** 2
    return _trust_region(
        traj_j, s.jack_end,
        rate_fn=lambda pts: rate_of_jack_pos(pts, W_a, W_j, ua, ctx),
        lin_fn=lambda pts: linearize_jack(pts, W_a, W_j, ua, ctx),
        variant_fn=lambda pts: jack_gradient_without_factor_two(pts, W_a, W_j, ua, ctx),
        other_pts=ua, dh2=dh2, d_min=s.d_min, d_max=d_max, psi0=cfg.trust_radius_init,
        shrink=cfg.shrink_jack, tol=cfg.jack_tol, cfg=cfg)


# --------------------------------------------------------------------------- initial and benchmark paths

def straight_line(start, end, N: int, altitude: float) -> Trajectory:
    start = np.asarray(start, float)
    end = np.asarray(end, float)
    frac = np.arange(1, N + 1)[:, None] / N
    return Trajectory(start + frac * (end - start), start, altitude)


def initial_trajectories(s) -> tuple[Trajectory, Trajectory]:
    """Straight lines start -> end; Jack's path bulges sideways when the lines collide."""
    N = s.N
    ta = straight_line(s.alice_start, s.alice_end, N, s.alt_alice)
    tj = straight_line(s.jack_start, s.jack_end, N, s.alt_jack)
    d_max = s.v_max * s.slot_len
    if not check_trajectory(tj, s.jack_end, d_max, ta, s.d_min):
        return ta, tj
    step = np.linalg.norm(np.asarray(s.jack_end, float) - s.jack_start) / N
    slack = math.sqrt(max(d_max ** 2 - step ** 2, 0.0))
    direction = np.asarray(s.jack_end, float) - s.jack_start
    normal = (np.array([-direction[1], direction[0]]) / np.linalg.norm(direction)
              if np.linalg.norm(direction) > 0 else np.array([0.0, 1.0]))
    n = np.arange(1, N + 1)
    offset = np.minimum.reduce([np.full(N, s.d_min), n * slack, (N - n) * slack])
    tj = tj.replace_waypoints(tj.waypoints + offset[:, None] * normal)
    if check_trajectory(tj, s.jack_end, d_max, ta, s.d_min):
        raise ValueError("cannot construct a collision-free initial trajectory pair")
    return ta, tj


def _disc_intersection_closest(p, c1, r1, c2, r2):
    """Point of disc(c1,r1) ∩ disc(c2,r2) closest to p (discs assumed to intersect)."""
    def inside(x, c, r):
        return np.linalg.norm(x - c) <= r * (1 + 1e-12) + 1e-12

    def project(x, c, r):
        d = np.linalg.norm(x - c)
        return x.copy() if d <= r else c + (x - c) * (r / d)

    if inside(p, c1, r1) and inside(p, c2, r2):
        return p.copy()
    for c, r, co, ro in ((c1, r1, c2, r2), (c2, r2, c1, r1)):
        q = project(p, c, r)
        if inside(q, co, ro):
            return q
    # closest point is a corner of the lens
    d = np.linalg.norm(c2 - c1)
    a = (r1 ** 2 - r2 ** 2 + d ** 2) / (2 * d)
    h = math.sqrt(max(r1 ** 2 - a ** 2, 0.0))
    base = c1 + a * (c2 - c1) / d
    perp = np.array([-(c2 - c1)[1], (c2 - c1)[0]]) / d
    corners = [base + h * perp, base - h * perp]
    return min(corners, key=lambda x: np.linalg.norm(x - p))


def _leg(p0, p1, n_slots, d_max):
    """Positions after 1..n_slots slots flying p0 -> p1 at full speed then waiting at p1."""
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    L = np.linalg.norm(p1 - p0)
    if L == 0:
        return np.tile(p1, (n_slots, 1))
    dist = np.minimum(np.arange(1, n_slots + 1) * d_max, L)
    pts = p0 + dist[:, None] * (p1 - p0) / L
    pts[dist >= L] = p1
    return pts


def fhf_trajectory(s, uav: str) -> Trajectory:
    """Fly-hover-fly path: full speed to the hover point, hover, full speed to the end.

    Alice hovers above Bob and Jack above Eve.  If the hover point cannot be reached
    and left within the horizon, the path visits the reachable point closest to it.
    """
    if uav == "alice":
        start, end, hover, alt = s.alice_start, s.alice_end, s.bob_pos, s.alt_alice
    elif uav == "jack":
        start, end, hover, alt = s.jack_start, s.jack_end, s.eve_pos, s.alt_jack
    else:
        raise ValueError(f"unknown UAV {uav!r}")
    start, end, hover = (np.asarray(x, float) for x in (start, end, hover))
    N = s.N
    D = s.v_max * s.slot_len
    if np.linalg.norm(end - start) > N * D * (1 + 1e-12):
        raise ValueError("end point unreachable within the horizon")
    eps = 1e-9
    n1 = math.ceil(np.linalg.norm(hover - start) / D - eps)
    n2 = math.ceil(np.linalg.norm(end - hover) / D - eps)
    if n1 + n2 <= N:
        waypoint = hover
    else:
        best = None
        for k1 in range(0, N + 1):
            r1, r2 = k1 * D, (N - k1) * D
            if np.linalg.norm(end - start) > r1 + r2 + 1e-9:
                continue
            x = _disc_intersection_closest(hover, start, r1, end, r2)
            dist = np.linalg.norm(x - hover)
            if best is None or dist < best[0] - 1e-12:
                best = (dist, x, k1)
        _, waypoint, n1 = best
        n2 = N - n1
        if n1 == 0:
            waypoint = start
    first = _leg(start, waypoint, N - n2, D) if N - n2 > 0 else np.zeros((0, 2))
    second = _leg(waypoint, end, n2, D) if n2 > 0 else np.zeros((0, 2))
    pts = np.vstack([first, second])
    pts[-1] = end
    return Trajectory(pts, start, alt)


def trajectories_to_rows(ta: Trajectory, tj: Trajectory):
    """(slot, x_a, y_a, x_j, y_j) rows for slots 1..N."""
    return [(n + 1, *map(float, ta.waypoints[n]), *map(float, tj.waypoints[n]))
            for n in range(ta.N)]
