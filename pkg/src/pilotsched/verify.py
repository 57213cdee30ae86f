"""Self-check suites run by ``pilotsched verify`` and the acceptance tests."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import phy
from .engine import SimConfig
from .lyapunov import check_slot_inequality
from .scheduler import best_over_k, exhaustive_oracle


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    checked: int
    failures: int
    elapsed_s: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: {self.checked} checked, {self.failures} failures, "
                f"{self.elapsed_s:.2f}s {self.detail}").rstrip()


def random_state(rng, budget, n_users, k_max, span_db=40.0, q_max_bits=1e7):
    """Queues uniform on [0, q_max_bits] and gains log-uniform over ``span_db``."""
    ref = 10.0 ** (phy.pathloss_db(100.0) / 10.0)
    betas = ref * 10.0 ** (rng.uniform(-span_db / 2, span_db / 2, size=n_users) / 10.0)
    q = rng.uniform(0.0, q_max_bits, size=n_users)
    return q, phy.rate_table(betas, k_max, budget)


def oracle_equivalence(n_states=1000, n_users=12, k_max=4, seed=0, cfg=None) -> SuiteResult:
    cfg = cfg or SimConfig()
    budget = cfg.link_budget()
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    bad = 0
    first = ""
    for i in range(n_states):
        q, rates = random_state(rng, budget, n_users, k_max)
        greedy = best_over_k(q, None, k_max, rates)
        brute = exhaustive_oracle(q, None, k_max, rates)
        if greedy.users != brute.users or greedy.weight != brute.weight:
            bad += 1
            if not first:
                first = f"first mismatch at state {i}: {greedy} vs {brute}"
    return SuiteResult("oracle equivalence", bad == 0, n_states, bad,
                       time.perf_counter() - start, first)


def slot_inequality(n_random=100_000, seed=0, upper=10.0) -> SuiteResult:
    start = time.perf_counter()
    grid = np.linspace(0.0, upper, 21)
    q, r, a = (x.ravel() for x in np.meshgrid(grid, grid, grid, indexing="ij"))
    rng = np.random.default_rng(seed)
    rq, rr, ra = rng.uniform(0.0, upper, size=(3, n_random))
    ok = np.concatenate([check_slot_inequality(q, r, a), check_slot_inequality(rq, rr, ra)])
    bad = int(np.count_nonzero(~ok))
    return SuiteResult("slot inequality", bad == 0, ok.size, bad, time.perf_counter() - start)


def run_all(cfg=None, n_states=1000) -> list:
    return [oracle_equivalence(n_states=n_states, cfg=cfg), slot_inequality()]
