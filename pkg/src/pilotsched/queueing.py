"""Per-user backlog bookkeeping following ``Q' = max(Q - I*R, 0) + A``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def update_queue(q, scheduled, rate, arrivals):
    """One-slot queue update; returns ``(new_q, served)``.

    Service is applied before arrivals, so bits arriving in a slot cannot be
    served in that same slot. Works elementwise on arrays.
    """
    q = np.asarray(q, dtype=float)
    rate = np.asarray(rate, dtype=float)
    arrivals = np.asarray(arrivals, dtype=float)
    if np.any(q < 0) or np.any(rate < 0) or np.any(arrivals < 0):
        raise ValueError("inputs to the queue update must be nonnegative")
    offered = np.where(np.asarray(scheduled, dtype=bool), rate, 0.0)
    served = np.minimum(q, offered)
    new_q = q - served + arrivals
    if new_q.ndim == 0:
        return float(new_q), float(served)
    return new_q, served


@dataclass
class QueueState:
    q_bits: np.ndarray
    cumulative_arrived_bits: np.ndarray
    cumulative_served_bits: np.ndarray
    initial_bits: np.ndarray

    @classmethod
    def empty(cls, n_users: int) -> "QueueState":
        return cls.from_initial(np.zeros(n_users))

    @classmethod
    def from_initial(cls, q0) -> "QueueState":
        q0 = np.array(q0, dtype=float)
        n = q0.size
        return cls(q0.copy(), np.zeros(n), np.zeros(n), q0.copy())

    def step(self, offered: np.ndarray, arrivals: np.ndarray) -> np.ndarray:
        """Apply one slot given per-user offered service (0 for unscheduled users).

        Returns the served bits per user.
        """
        served = np.minimum(self.q_bits, offered)
        self.q_bits = self.q_bits - served + arrivals
        self.cumulative_served_bits += served
        self.cumulative_arrived_bits += arrivals
        return served

    def conservation_gap(self) -> np.ndarray:
        expected = self.initial_bits + self.cumulative_arrived_bits - self.cumulative_served_bits
        return self.q_bits - expected


def total_backlog(state) -> float:
    q = state.q_bits if isinstance(state, QueueState) else np.asarray(state, dtype=float)
    return float(q.sum())
