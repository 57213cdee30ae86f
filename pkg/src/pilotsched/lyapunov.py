"""Quadratic Lyapunov function, frame drift audits and V-sweep trend checks.

All queue-like inputs to this module must share one unit (the engine divides
bits by its configured queue unit first) so that drift and the ``V * C``
penalty are commensurate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AuditError


def lyapunov_value(q) -> float:
    q = np.asarray(q, dtype=float)
    return 0.5 * math.fsum((q * q).ravel())


@dataclass(frozen=True)
class BoundConstants:
    b1: float
    b2: float
    r_max: float
    a_max: float
    n_users: int
    t_frame: int


def bound_constants(n_users: int, t_frame: int, r_max: float, a_max: float) -> BoundConstants:
    """Additive constants of the one-frame drift bounds.

    ``b1 = N T (R_max^2 + A_max^2) / 2`` and ``b2 = T * b1``.
    """
    if n_users < 1 or t_frame < 1 or r_max < 0 or a_max < 0:
        raise ValueError("bound constants need positive N and T with nonnegative caps")
    s = r_max * r_max + a_max * a_max
    b1 = n_users * t_frame * s / 2.0
    b2 = n_users * t_frame * t_frame * s / 2.0
    return BoundConstants(b1, b2, r_max, a_max, n_users, t_frame)


@dataclass
class FrameTrace:
    """Per-slot record of one frame.

    ``offered[s, n]`` is ``I_n * R_n`` in slot ``s`` (zero when unscheduled),
    which is what enters the queue recursion before the ``max(., 0)`` clamp.
    """

    q_start: np.ndarray
    q_end: np.ndarray
    arrivals: np.ndarray
    offered: np.ndarray
    reconfigured: bool = False


@dataclass(frozen=True)
class FrameAudit:
    lyapunov_before: float
    lyapunov_after: float
    drift: float
    penalty: float
    lhs: float
    rhs: float
    satisfied: bool


def audit_frame(trace: FrameTrace, v: float, c: float, consts: BoundConstants) -> FrameAudit:
    """Evaluate the frozen-queue drift-plus-penalty bound on one realised frame.

    lhs = drift + V C I^s
    rhs = B2 + sum_tau sum_n Q_n(t) (A_n(tau) - I_n(tau) R_n(tau)) + V C I^s
    """
    arrivals = np.asarray(trace.arrivals, dtype=float)
    offered = np.asarray(trace.offered, dtype=float)
    n = consts.n_users
    if arrivals.shape != (consts.t_frame, n) or offered.shape != (consts.t_frame, n):
        raise AuditError(f"frame trace must cover {consts.t_frame} slots x {n} users, "
                         f"got arrivals {arrivals.shape}, offered {offered.shape}")
    if np.shape(trace.q_start) != (n,) or np.shape(trace.q_end) != (n,):
        raise AuditError("frame trace is missing start or end backlog")
    before = lyapunov_value(trace.q_start)
    after = lyapunov_value(trace.q_end)
    drift = after - before
    penalty = v * c * float(bool(trace.reconfigured))
    net = arrivals.sum(axis=0) - offered.sum(axis=0)
    rhs = consts.b2 + math.fsum(np.asarray(trace.q_start, dtype=float) * net) + penalty
    lhs = drift + penalty
    return FrameAudit(before, after, drift, penalty, lhs, rhs, bool(lhs <= rhs))


def check_slot_inequality(q, served_rate, arrivals, rtol: float = 1e-12):
    """Per-slot quadratic bound ``Q'^2 - Q^2 <= R^2 + A^2 - 2 Q (R - A)``.

    ``Q' = max(Q - R, 0) + A``. Elementwise on arrays; ``rtol`` absorbs
    floating-point rounding relative to ``(Q + R + A)^2``.
    """
    q = np.asarray(q, dtype=float)
    r = np.asarray(served_rate, dtype=float)
    a = np.asarray(arrivals, dtype=float)
    q_next = np.maximum(q - r, 0.0) + a
    lhs = q_next * q_next - q * q
    rhs = r * r + a * a - 2.0 * q * (r - a)
    ok = lhs <= rhs + rtol * (q + r + a) ** 2
    return bool(ok) if ok.ndim == 0 else ok


@dataclass
class TrendReport:
    v: list
    avg_cost: list
    reconfig_rate: list
    avg_queue: list
    cost_nonincreasing: bool
    reconfig_nonincreasing: bool
    queue_nondecreasing: bool
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.cost_nonincreasing and self.queue_nondecreasing

    def lines(self) -> list:
        out = [f"{'V':>10} {'avg_cost':>12} {'reconfig':>9} {'avg_queue_bits':>16}"]
        for row in zip(self.v, self.avg_cost, self.reconfig_rate, self.avg_queue):
            out.append(f"{row[0]:>10g} {row[1]:>12.5g} {row[2]:>9.4f} {row[3]:>16.6g}")
        out.extend(self.violations)
        return out


def _monotone(values, increasing: bool, rel_tol: float, name: str, vs, violations) -> bool:
    ok = True
    for i in range(1, len(values)):
        prev, cur = values[i - 1], values[i]
        slack = rel_tol * max(abs(prev), abs(cur))
        bad = cur < prev - slack if increasing else cur > prev + slack
        if bad:
            ok = False
            word = "decreased" if increasing else "increased"
            violations.append(f"{name} {word} from {prev:.6g} (V={vs[i - 1]:g}) "
                              f"to {cur:.6g} (V={vs[i]:g})")
    return ok


def tradeoff_report(results, rel_tol: float = 0.02) -> TrendReport:
    """Check the cost/backlog tradeoff across a V sweep.

    ``results`` is an iterable of objects with ``v``, ``avg_cost``,
    ``reconfig_rate`` and ``avg_total_queue_bits`` (e.g. ``RunMetrics``).
    Cost must not grow with V and backlog must not shrink, up to ``rel_tol``.
    """
    rows = sorted(results, key=lambda r: r.v)
    if len({r.v for r in rows}) < 3:
        raise ValueError("trend report needs at least three distinct V values")
    vs = [r.v for r in rows]
    cost = [r.avg_cost for r in rows]
    rate = [r.reconfig_rate for r in rows]
    queue = [r.avg_total_queue_bits for r in rows]
    violations = []
    cost_ok = _monotone(cost, False, rel_tol, "average cost", vs, violations)
    rate_ok = _monotone(rate, False, rel_tol, "reconfiguration rate", vs, violations)
    queue_ok = _monotone(queue, True, rel_tol, "average total queue", vs, violations)
    return TrendReport(vs, cost, rate, queue, cost_ok, rate_ok, queue_ok, violations)


@dataclass(frozen=True)
class SlopeTest:
    slope: float
    stderr: float
    pvalue: float
    n_points: int

    def flat(self, alpha: float = 0.05) -> bool:
        return self.pvalue > alpha


def tail_slope_test(series, tail_fraction: float = 0.2, ar_order: int = 1) -> SlopeTest:
    """Linear trend of the last ``tail_fraction`` of a series.

    The slope is fitted by feasible GLS with AR(``ar_order``) errors
    (iterated Cochrane-Orcutt). Queue series are strongly autocorrelated and a
    plain OLS t-test would call almost any long stationary run trending.
    """
    import statsmodels.api as sm

    y = np.asarray(series, dtype=float)
    tail = y[int(round(len(y) * (1.0 - tail_fraction))):]
    if tail.size < 10:
        raise ValueError("need at least 10 points in the tail to test the slope")
    if np.ptp(tail) == 0:
        return SlopeTest(0.0, 0.0, 1.0, tail.size)
    x = sm.add_constant(np.arange(tail.size, dtype=float))
    fit = sm.GLSAR(tail, x, rho=ar_order).iterative_fit(maxiter=20)
    return SlopeTest(float(fit.params[1]), float(fit.bse[1]), float(fit.pvalues[1]), tail.size)
