"""Choosing sensing slots: weighted UAV-target distances and greedy per-target selection."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .geometry import slant_distance


@dataclass(frozen=True)
class SlotAssignment:
    """Per-target tuples of 1-based slot indices."""

    slots: tuple  # tuple of tuples, one per target

    @property
    def sensing_slots(self) -> list[int]:
        return sorted(n for per in self.slots for n in per)

    def target_of(self) -> dict:
        """Map slot -> target index (0-based)."""
        return {n: k for k, per in enumerate(self.slots) for n in per}

    def validate(self, N: int, per_target: int) -> None:
        seen = set()
        for k, per in enumerate(self.slots):
            if len(per) != per_target:
                raise ValueError(f"target {k} has {len(per)} slots, expected {per_target}")
            for n in per:
                if not 1 <= n <= N:
                    raise ValueError(f"slot {n} outside 1..{N}")
                if n in seen:
                    raise ValueError(f"slot {n} assigned twice")
                seen.add(n)


def weighted_distance(alice_xy, alt_alice, jack_xy, alt_jack, target_xy, bob_xy, tau: float):
    """tau (d_ak + d_jk) + (1 - tau) d_ab; pass jack_xy=None to drop Jack's term."""
    d_ak = slant_distance(alice_xy, alt_alice, target_xy)
    d_ab = slant_distance(alice_xy, alt_alice, bob_xy)
    d_jk = 0.0 if jack_xy is None else slant_distance(jack_xy, alt_jack, target_xy)
    return tau * (d_ak + d_jk) + (1.0 - tau) * d_ab


def distance_table(traj_a, traj_j, targets, s) -> np.ndarray:
    """(K, N) weighted distances for every target and slot; traj_j=None for a single UAV."""
    ua = traj_a.waypoints
    uj = None if traj_j is None else traj_j.waypoints
    rows = [weighted_distance(ua, s.alt_alice, uj, s.alt_jack, np.asarray(g, float),
                              np.asarray(s.bob_pos, float), s.tau_weight)
            for g in targets]
    return np.array(rows, dtype=float).reshape(len(targets), ua.shape[0])


def assignment_cost(distances, assignment: SlotAssignment) -> float:
    """Total weighted distance: each target pays its own distance in its own slots."""
    D = np.asarray(distances, float)
    return float(sum(D[k, n - 1] for k, per in enumerate(assignment.slots) for n in per))


def greedy_select(distances, per_target: int) -> SlotAssignment:
    """Targets in input order each take their cheapest remaining slots (ties: lowest slot)."""
    D = np.asarray(distances, float)
    K, N = D.shape
    if K * per_target > N:
        raise ValueError(f"{K} targets x {per_target} slots exceeds {N} slots")
    free = np.ones(N, dtype=bool)
    chosen = []
    for k in range(K):
        cand = np.flatnonzero(free)
        order = cand[np.argsort(D[k, cand], kind="stable")]
        pick = np.sort(order[:per_target])
        assert pick.size == per_target
        free[pick] = False
        chosen.append(tuple(int(n) + 1 for n in pick))
    return SlotAssignment(tuple(chosen))


def brute_force_select(distances, per_target: int, max_slots: int = 12) -> SlotAssignment:
    """Exact minimum-cost disjoint assignment by enumeration (small instances only)."""
    D = np.asarray(distances, float)
    K, N = D.shape
    if N > max_slots:
        raise ValueError(f"brute force limited to N <= {max_slots}")
    if K * per_target > N:
        raise ValueError(f"{K} targets x {per_target} slots exceeds {N} slots")
    best = [np.inf, None]

    def rec(k, free, acc, picks):
        if acc >= best[0]:
            return
        if k == K:
            best[0], best[1] = acc, list(picks)
            return
        for combo in itertools.combinations(free, per_target):
            rest = tuple(n for n in free if n not in combo)
            rec(k + 1, rest, acc + float(D[k, list(combo)].sum()), picks + [combo])

    rec(0, tuple(range(N)), 0.0, [])
    return SlotAssignment(tuple(tuple(int(n) + 1 for n in c) for c in best[1]))
