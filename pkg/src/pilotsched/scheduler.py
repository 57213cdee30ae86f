"""Frame-level pilot (SRS) allocation and user selection policies.

Every policy works on a rate table ``rates[k-1, n]`` holding the bits per slot
user ``n`` would get in a group of ``k`` co-scheduled users, and on the queue
vector ``q`` in the same units the cost threshold is expressed in. Ties are
always broken towards the lowest user id, and across group sizes towards the
smaller group.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

REPLACE_LRU = "replace-lru"
REPLACE_ALL = "replace-all"
POOL_UPDATE_MODES = (REPLACE_LRU, REPLACE_ALL)


@dataclass(frozen=True)
class SrsPool:
    """Users currently holding a sounding reference signal.

    ``last_assigned`` maps each member to the last frame it was picked in a
    reconfiguration; it drives least-recently-assigned eviction.
    """

    members: frozenset
    capacity: int
    last_assigned: dict = field(default_factory=dict, compare=False)

    @classmethod
    def initial(cls, betas, capacity: int) -> "SrsPool":
        """The ``capacity`` users with the strongest large-scale gain."""
        betas = np.asarray(betas, dtype=float)
        order = np.lexsort((np.arange(betas.size), -betas))[:capacity]
        members = frozenset(int(n) for n in order)
        return cls(members, capacity, {n: -1 for n in members})

    def __len__(self):
        return len(self.members)

    def __contains__(self, user):
        return user in self.members

    def ids(self) -> np.ndarray:
        return np.array(sorted(self.members), dtype=int)

    def assign(self, selected, frame: int, mode: str = REPLACE_LRU) -> "SrsPool":
        if mode == REPLACE_ALL:
            members = frozenset(int(n) for n in selected)
            return SrsPool(members, self.capacity, {n: frame for n in members})
        if mode != REPLACE_LRU:
            raise ValueError(f"unknown pool update mode {mode!r}")
        last = {n: t for n, t in self.last_assigned.items() if n in self.members}
        for n in selected:
            last[int(n)] = frame
        if len(last) > self.capacity:
            keep = sorted(last, key=lambda n: (last[n], n))[len(last) - self.capacity:]
            last = {n: last[n] for n in keep}
        return SrsPool(frozenset(last), self.capacity, last)


@dataclass(frozen=True)
class CandidateSelection:
    users: tuple
    weight: float

    @property
    def k(self) -> int:
        return len(self.users)


EMPTY_SELECTION = CandidateSelection((), 0.0)


def selection_weight(q, rates, users) -> float:
    """Sum of ``q[n] * rates[|S|-1, n]`` over the set, summed exactly in id order."""
    users = sorted(users)
    if not users:
        return 0.0
    row = rates[len(users) - 1]
    return math.fsum(float(q[n]) * float(row[n]) for n in users)


def _pool_ids(pool, n_users: int) -> np.ndarray:
    if pool is None:
        return np.arange(n_users)
    if isinstance(pool, SrsPool):
        return pool.ids()
    return np.array(sorted(int(n) for n in pool), dtype=int)


def best_set_for_k(q, pool, k: int, rates) -> CandidateSelection:
    """The ``k`` pool members with the largest ``q[n] * rates[k-1, n]``.

    A pool smaller than ``k`` is returned whole, weighted at its own size.
    """
    q = np.asarray(q, dtype=float)
    ids = _pool_ids(pool, q.size)
    if ids.size == 0:
        return EMPTY_SELECTION
    k = min(k, ids.size)
    w = q[ids] * rates[k - 1, ids]
    top = ids[np.lexsort((ids, -w))[:k]]
    users = tuple(sorted(int(n) for n in top))
    return CandidateSelection(users, selection_weight(q, rates, users))


def best_over_k(q, pool, k_max: int, rates) -> CandidateSelection:
    q = np.asarray(q, dtype=float)
    ids = _pool_ids(pool, q.size)
    best = EMPTY_SELECTION
    for k in range(1, min(k_max, ids.size) + 1):
        cand = best_set_for_k(q, ids, k, rates)
        if best is EMPTY_SELECTION or cand.weight > best.weight:
            best = cand
    return best


def exhaustive_oracle(q, pool, k_max: int, rates, max_pool: int = 16,
                      max_k: int = 6) -> CandidateSelection:
    """Brute-force maximiser of the frame weight over all subsets of size <= k_max.

    Tie-break: larger weight, then smaller set, then lexicographically smallest ids.
    """
    q = np.asarray(q, dtype=float)
    ids = [int(n) for n in _pool_ids(pool, q.size)]
    if len(ids) > max_pool or k_max > max_k:
        raise ValueError(f"enumeration guard: pool {len(ids)} > {max_pool} or K {k_max} > {max_k}")
    best = EMPTY_SELECTION
    for k in range(1, min(k_max, len(ids)) + 1):
        for subset in itertools.combinations(ids, k):
            weight = selection_weight(q, rates, subset)
            if best is EMPTY_SELECTION or weight > best.weight:
                best = CandidateSelection(subset, weight)
    return best


@dataclass(frozen=True)
class PolicyParams:
    v: float
    c: float
    t_frame: int
    k_max: int
    p_pilots: int
    pool_update: str = REPLACE_LRU

    def __post_init__(self):
        if not self.v > 1:
            raise ValueError("V must exceed 1")
        if self.c < 0 or self.t_frame < 1:
            raise ValueError("need C >= 0 and T >= 1")

    @property
    def threshold(self) -> float:
        return self.c * self.v / self.t_frame


@dataclass(frozen=True)
class FrameDecision:
    frame: int
    reconfigured: bool
    pool_before: SrsPool
    pool_after: SrsPool
    scheduled: tuple
    w1: float
    w2: float
    cost_charged: float
    s1: tuple = ()
    s2: tuple = ()

    @property
    def k_star(self) -> int:
        return len(self.scheduled)

    @property
    def degenerate(self) -> bool:
        return not self.scheduled


def jssa_frame_decision(q, pool: SrsPool, params: PolicyParams, rates, frame: int = 0,
                        force_reconfigure: bool = False, charge: bool = True) -> FrameDecision:
    """One frame of joint SRS allocation and user selection.

    The best group over all users is compared with the best group among pool
    members; the pool is reconfigured only if the gain beats ``C * V / T``.
    """
    s1 = best_over_k(q, None, params.k_max, rates)
    s2 = best_over_k(q, pool, params.k_max, rates)
    reconfigure = force_reconfigure or (s1.weight - params.threshold > s2.weight)
    if reconfigure:
        after = pool.assign(s1.users, frame, params.pool_update)
        scheduled = s1.users
    else:
        after = pool
        scheduled = s2.users
    cost = params.c if (reconfigure and charge) else 0.0
    return FrameDecision(frame, reconfigure, pool, after, scheduled, s1.weight, s2.weight,
                         cost, s1.users, s2.users)


def mjssa_frame_decision(q, pool: SrsPool, params: PolicyParams, rates,
                         frame: int = 0) -> FrameDecision:
    """Cost-free benchmark that reconfigures to the globally best group every frame."""
    return jssa_frame_decision(q, pool, params, rates, frame, force_reconfigure=True, charge=False)


def static_frame_decision(q, pool: SrsPool, params: PolicyParams, rates,
                          frame: int = 0) -> FrameDecision:
    s1 = best_over_k(q, None, params.k_max, rates)
    s2 = best_over_k(q, pool, params.k_max, rates)
    return FrameDecision(frame, False, pool, pool, s2.users, s1.weight, s2.weight, 0.0,
                         s1.users, s2.users)


def random_frame_decision(q, pool: SrsPool, params: PolicyParams, rates, frame: int = 0,
                          rng: np.random.Generator | None = None) -> FrameDecision:
    if rng is None:
        raise ValueError("random policy needs an rng")
    ids = pool.ids()
    k = min(params.k_max, ids.size)
    users = tuple(sorted(int(n) for n in rng.choice(ids, size=k, replace=False))) if k else ()
    w = selection_weight(q, rates, users)
    s1 = best_over_k(q, None, params.k_max, rates)
    return FrameDecision(frame, False, pool, pool, users, s1.weight, w, 0.0, s1.users, users)


def schedule_slot(decision: FrameDecision) -> tuple:
    """Users served in every slot of the decision's frame."""
    return decision.scheduled


POLICIES = {
    "jssa": jssa_frame_decision,
    "mjssa": mjssa_frame_decision,
    "static": static_frame_decision,
    "random": random_frame_decision,
}
