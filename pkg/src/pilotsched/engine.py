"""Two-timescale simulation loop: policy decisions every frame, queue updates every slot."""

from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import phy
from .errors import ConfigError
from .lyapunov import FrameTrace, audit_frame, bound_constants, check_slot_inequality
from .queueing import QueueState
from .scheduler import POLICIES, POOL_UPDATE_MODES, REPLACE_LRU, PolicyParams, SrsPool
from .traffic import DEFAULT_FILE_SIZE_BITS, TrafficConfig, draw_arrivals, draw_interarrivals

log = logging.getLogger(__name__)


@dataclass
class TrafficSettings:
    interarrival_min_s: float = 0.5
    interarrival_max_s: float = 2.0
    file_size_bits: float = DEFAULT_FILE_SIZE_BITS
    a_max_bits: float | None = None

    @property
    def a_max(self) -> float:
        return 5.0 * self.file_size_bits if self.a_max_bits is None else self.a_max_bits


@dataclass
class SimConfig:
    n_users: int = 300
    m_antennas: int = 64
    k_max: int = 10
    p_pilots: int = 60
    bandwidth_hz: float = 20e6
    gamma: float = 0.8
    p_tot_w: float = 1.0
    slot_s: float = 1e-3
    t_frame_slots: int = 20
    v_param: float = 200.0
    cost_c: float = 1.0
    policy: str = "jssa"
    pool_update: str = REPLACE_LRU
    horizon_slots: int = 100_000
    rng_seed: int = 0
    cell_side_m: float = 250.0
    report_window_slots: int = 100
    warmup_fraction: float = 0.1
    # frame weights use Q in queue_unit_bits and R in rate_unit_bps; drift audits
    # express every per-slot quantity in queue_unit_bits
    queue_unit_bits: float = 1e6
    rate_unit_bps: float = 1e6
    phy_validation: bool = False
    check_slots: bool = False
    traffic: TrafficSettings = field(default_factory=TrafficSettings)
    channel: phy.ChannelParams = field(default_factory=phy.ChannelParams)

    def validate(self) -> "SimConfig":
        def need(cond, key, msg):
            if not cond:
                raise ConfigError(f"{key}: {msg}", key=key)

        for key in ("n_users", "m_antennas", "k_max", "p_pilots", "t_frame_slots",
                    "horizon_slots", "report_window_slots", "rng_seed"):
            need(isinstance(getattr(self, key), (int, np.integer))
                 and not isinstance(getattr(self, key), bool), key, "must be an integer")
        need(self.k_max >= 1, "k_max", "must be >= 1")
        need(self.k_max < self.p_pilots, "p_pilots", f"requires K < P (K={self.k_max}, P={self.p_pilots})")
        need(self.p_pilots < self.n_users, "n_users", f"requires P < N (P={self.p_pilots}, N={self.n_users})")
        need(self.k_max < self.m_antennas, "k_max", f"requires K < M (K={self.k_max}, M={self.m_antennas})")
        need(self.v_param > 1, "v_param", "requires V > 1")
        need(self.cost_c >= 0, "cost_c", "must be >= 0")
        need(self.t_frame_slots >= 1, "t_frame_slots", "must be >= 1")
        need(self.horizon_slots >= 0, "horizon_slots", "must be >= 0")
        need(self.horizon_slots % self.t_frame_slots == 0, "horizon_slots",
             f"must be a multiple of t_frame_slots={self.t_frame_slots}")
        need(self.report_window_slots >= 1, "report_window_slots", "must be >= 1")
        need(0 < self.gamma <= 1, "gamma", "must lie in (0, 1]")
        for key in ("bandwidth_hz", "p_tot_w", "slot_s", "cell_side_m", "queue_unit_bits",
                    "rate_unit_bps"):
            val = getattr(self, key)
            need(math.isfinite(val) and val > 0, key, "must be finite and > 0")
        need(0 <= self.warmup_fraction < 1, "warmup_fraction", "must lie in [0, 1)")
        need(self.policy in POLICIES, "policy", f"must be one of {sorted(POLICIES)}")
        need(self.pool_update in POOL_UPDATE_MODES, "pool_update",
             f"must be one of {list(POOL_UPDATE_MODES)}")
        t = self.traffic
        need(t.interarrival_min_s > 0, "traffic.interarrival_min_s", "must be > 0")
        need(t.interarrival_max_s >= t.interarrival_min_s, "traffic.interarrival_max_s",
             "must be >= traffic.interarrival_min_s")
        need(t.file_size_bits > 0, "traffic.file_size_bits", "must be > 0")
        need(t.a_max >= t.file_size_bits, "traffic.a_max_bits", "must be >= traffic.file_size_bits")
        ch = self.channel
        need(ch.min_distance_m > 0, "channel.min_distance_m", "must be > 0")
        need(ch.shadow_std_db >= 0, "channel.shadow_std_db", "must be >= 0")
        return self

    @property
    def n_frames(self) -> int:
        return self.horizon_slots // self.t_frame_slots

    @property
    def frame_s(self) -> float:
        return self.t_frame_slots * self.slot_s

    def link_budget(self) -> phy.LinkBudget:
        sigma2 = phy.noise_power_w(self.bandwidth_hz, self.channel)
        budget = phy.LinkBudget(self.p_tot_w, sigma2, self.m_antennas, self.bandwidth_hz,
                                self.gamma, self.slot_s)
        return dataclasses.replace(budget, r_max_bits=phy.rate_cap_bits(self.channel, budget))

    def policy_params(self) -> PolicyParams:
        return PolicyParams(self.v_param, self.cost_c, self.t_frame_slots, self.k_max,
                            self.p_pilots, self.pool_update)


@dataclass
class Drop:
    """Static user placement and everything derived from it."""

    positions: np.ndarray
    shadow_db: np.ndarray
    betas: np.ndarray
    interarrival_s: np.ndarray


def place_users(cfg: SimConfig, rng: np.random.Generator) -> Drop:
    side = cfg.cell_side_m
    positions = rng.uniform(0.0, side, size=(cfg.n_users, 2))
    shadow = rng.normal(0.0, cfg.channel.shadow_std_db, size=cfg.n_users)
    betas = phy.path_gains(positions, (side / 2.0, side / 2.0), shadow, cfg.channel)
    inter = draw_interarrivals(cfg.n_users, cfg.traffic.interarrival_min_s,
                               cfg.traffic.interarrival_max_s, rng)
    return Drop(positions, shadow, betas, inter)


@dataclass(frozen=True)
class FrameRecord:
    frame: int
    start_slot: int
    reconfigured: bool
    scheduled: tuple
    w1: float
    w2: float
    cost_charged: float
    lyapunov_before: float
    lyapunov_after: float
    drift: float
    penalty: float
    lhs: float
    rhs: float
    satisfied: bool

    @property
    def k_star(self) -> int:
        return len(self.scheduled)


@dataclass(frozen=True)
class SlotRecord:
    slot: int
    arrivals: np.ndarray
    scheduled: tuple
    offered: np.ndarray
    served: np.ndarray


WINDOW_COLUMNS = ("window_end_s", "throughput_bps", "total_queue_bits", "reconfig_flag_count",
                  "avg_cost_to_date", "cum_throughput_bps")


@dataclass
class RunMetrics:
    v: float
    policy: str
    pool_update: str
    cost_c: float
    frame_s: float
    n_frames: int
    warmup_frames: int
    reconfig_count: int
    charged_count: int
    reconfig_rate: float
    avg_cost: float
    avg_cost_per_frame: float
    avg_total_queue_bits: float
    avg_throughput_bps: float
    total_arrived_bits: float
    total_served_bits: float
    initial_queue_bits: float
    final_queue_bits: float
    wasted_service_bits: float
    truncation_count: int
    degenerate_frames: int
    audit_lhs_mean: float
    audit_rhs_mean: float
    audit_satisfied_fraction: float
    slot_inequality_violations: int | None
    windows: dict = field(repr=False, default_factory=dict)

    def summary(self) -> dict:
        return {k: v for k, v in dataclasses.asdict(self).items() if k != "windows"}


@dataclass
class SimResult:
    config: SimConfig
    metrics: RunMetrics
    frames: list
    drop: Drop
    slots: list | None = None


def _rates_for_slot(cfg, budget, betas, sched, rng):
    h = phy.draw_small_scale(cfg.m_antennas, betas[sched], rng)
    w = phy.mmse_precoders(h, cfg.p_tot_w / len(sched), budget.sigma2_w)
    return np.floor(phy.realized_rates(h, w, budget))


def run_simulation(cfg: SimConfig, keep_slots: bool = False) -> SimResult:
    """Simulate one static drop for ``cfg.horizon_slots`` slots.

    Deterministic given ``cfg`` (including ``rng_seed``). Placement, traffic,
    small-scale fading and policy randomness use separate child streams, so
    runs differing only in V or policy see identical drops and arrivals.
    """
    cfg.validate()
    drop_ss, traffic_ss, phy_ss, policy_ss = np.random.SeedSequence(cfg.rng_seed).spawn(4)
    drop = place_users(cfg, np.random.default_rng(drop_ss))
    traffic_rng = np.random.default_rng(traffic_ss)
    phy_rng = np.random.default_rng(phy_ss)
    policy_rng = np.random.default_rng(policy_ss)

    budget = cfg.link_budget()
    traffic = TrafficConfig(drop.interarrival_s, cfg.traffic.file_size_bits, cfg.slot_s,
                            cfg.traffic.a_max)
    # whole bits per slot keep every queue quantity an exact integer in float64
    rates = np.floor(phy.rate_table(drop.betas, cfg.k_max, budget))
    unit = cfg.queue_unit_bits
    rates_w = rates / (cfg.slot_s * cfg.rate_unit_bps)
    params = cfg.policy_params()
    decide = POLICIES[cfg.policy]
    consts = bound_constants(cfg.n_users, cfg.t_frame_slots, budget.r_max_bits / unit,
                             traffic.a_max_bits / unit)

    n, t_len = cfg.n_users, cfg.t_frame_slots
    n_frames = cfg.n_frames
    horizon = cfg.horizon_slots
    warm = int(n_frames * cfg.warmup_fraction)

    queues = QueueState.empty(n)
    pool = SrsPool.initial(drop.betas, cfg.p_pilots)
    total_queue = np.empty(horizon)
    served_per_slot = np.empty(horizon)
    frames = []
    slots = [] if keep_slots else None
    truncations = 0
    wasted = 0.0
    violations = 0 if cfg.check_slots else None

    for f in range(n_frames):
        start = f * t_len
        q_units = queues.q_bits / unit
        if cfg.policy == "random":
            dec = decide(q_units, pool, params, rates_w, frame=f, rng=policy_rng)
        else:
            dec = decide(q_units, pool, params, rates_w, frame=f)
        pool = dec.pool_after
        sched = np.array(dec.scheduled, dtype=int)

        arrivals, trunc = draw_arrivals(traffic, traffic_rng, n_slots=t_len)
        truncations += trunc
        offered = np.zeros((t_len, n))
        if sched.size:
            if cfg.phy_validation:
                for s in range(t_len):
                    offered[s, sched] = _rates_for_slot(cfg, budget, drop.betas, sched, phy_rng)
            else:
                offered[:, sched] = rates[sched.size - 1, sched]

        q_start = queues.q_bits.copy()
        for s in range(t_len):
            q_before = queues.q_bits
            served = queues.step(offered[s], arrivals[s])
            if cfg.check_slots:
                ok = check_slot_inequality(q_before / unit, offered[s] / unit, arrivals[s] / unit)
                violations += int(np.count_nonzero(~ok))
            wasted += float(offered[s].sum() - served.sum())
            served_per_slot[start + s] = served.sum()
            total_queue[start + s] = queues.q_bits.sum()
            if keep_slots:
                slots.append(SlotRecord(start + s, arrivals[s].copy(), dec.scheduled,
                                        offered[s].copy(), served.copy()))

        audit = audit_frame(FrameTrace(q_start / unit, queues.q_bits / unit, arrivals / unit,
                                       offered / unit, dec.reconfigured),
                            cfg.v_param, cfg.cost_c, consts)
        if dec.degenerate:
            log.debug("frame %d: empty schedule", f)
        frames.append(FrameRecord(f, start, dec.reconfigured, dec.scheduled, dec.w1, dec.w2,
                                  dec.cost_charged, audit.lyapunov_before, audit.lyapunov_after,
                                  audit.drift, audit.penalty, audit.lhs, audit.rhs,
                                  audit.satisfied))

    metrics = _collect_metrics(cfg, frames, queues, total_queue, served_per_slot, warm,
                               truncations, wasted, violations)
    return SimResult(cfg, metrics, frames, drop, slots)


def _collect_metrics(cfg, frames, queues, total_queue, served_per_slot, warm, truncations,
                     wasted, violations) -> RunMetrics:
    t_len = cfg.t_frame_slots
    n_frames = len(frames)
    post = frames[warm:]
    n_post = len(post)
    reconfig_count = sum(fr.reconfigured for fr in post)
    charged_count = sum(fr.cost_charged > 0 for fr in post)
    reconfig_rate = reconfig_count / n_post if n_post else 0.0
    charged_rate = charged_count / n_post if n_post else 0.0
    warm_slots = warm * t_len
    tail_q = total_queue[warm_slots:]
    tail_s = served_per_slot[warm_slots:]

    wlen = cfg.report_window_slots
    n_win = -(-cfg.horizon_slots // wlen)
    ends = np.minimum((np.arange(n_win) + 1) * wlen, cfg.horizon_slots)
    starts = ends - np.diff(np.concatenate(([0], ends)))
    cum_served = np.concatenate(([0.0], np.cumsum(served_per_slot)))
    win_served = cum_served[ends] - cum_served[starts]
    frame_starts = np.array([fr.start_slot for fr in frames], dtype=int)
    flags = np.array([fr.reconfigured for fr in frames], dtype=bool)
    charged = np.array([fr.cost_charged > 0 for fr in frames], dtype=bool)
    win_of_frame = frame_starts // wlen
    flag_count = np.bincount(win_of_frame[flags], minlength=n_win).astype(int)
    charged_to_date = np.cumsum(np.bincount(win_of_frame[charged], minlength=n_win))
    end_s = ends * cfg.slot_s
    windows = {
        "window_end_s": end_s,
        "throughput_bps": win_served / ((ends - starts) * cfg.slot_s) if n_win else np.zeros(0),
        "total_queue_bits": total_queue[ends - 1] if n_win else np.zeros(0),
        "reconfig_flag_count": flag_count,
        "avg_cost_to_date": cfg.cost_c * charged_to_date / end_s if n_win else np.zeros(0),
        "cum_throughput_bps": cum_served[ends] / end_s if n_win else np.zeros(0),
    }
    lhs = [fr.lhs for fr in post]
    rhs = [fr.rhs for fr in post]
    return RunMetrics(
        v=cfg.v_param,
        policy=cfg.policy,
        pool_update=cfg.pool_update,
        cost_c=cfg.cost_c,
        frame_s=cfg.frame_s,
        n_frames=n_frames,
        warmup_frames=warm,
        reconfig_count=int(reconfig_count),
        charged_count=int(charged_count),
        reconfig_rate=reconfig_rate,
        avg_cost=cfg.cost_c * charged_rate / cfg.frame_s,
        avg_cost_per_frame=cfg.cost_c * charged_rate,
        avg_total_queue_bits=float(tail_q.mean()) if tail_q.size else 0.0,
        avg_throughput_bps=float(tail_s.sum() / (tail_s.size * cfg.slot_s)) if tail_s.size else 0.0,
        total_arrived_bits=float(queues.cumulative_arrived_bits.sum()),
        total_served_bits=float(queues.cumulative_served_bits.sum()),
        initial_queue_bits=float(queues.initial_bits.sum()),
        final_queue_bits=float(queues.q_bits.sum()),
        wasted_service_bits=wasted,
        truncation_count=truncations,
        degenerate_frames=sum(fr.k_star == 0 for fr in frames),
        audit_lhs_mean=math.fsum(lhs) / n_post if n_post else 0.0,
        audit_rhs_mean=math.fsum(rhs) / n_post if n_post else 0.0,
        audit_satisfied_fraction=(sum(fr.satisfied for fr in post) / n_post) if n_post else 1.0,
        slot_inequality_violations=violations,
        windows=windows,
    )


def _run_one(cfg):
    return run_simulation(cfg)


def sweep_configs(base: SimConfig, v_grid, seeds: int = 1) -> list:
    """Configs for a V sweep; seed ``s`` reuses ``rng_seed + s`` across all V values."""
    v_grid = list(v_grid)
    if not v_grid:
        raise ValueError("V grid must not be empty")
    return [dataclasses.replace(base, v_param=float(v), rng_seed=base.rng_seed + s)
            for s in range(seeds) for v in v_grid]


def run_sweep(base: SimConfig, v_grid, seeds: int = 1, workers: int = 1) -> list:
    """Independent runs over ``v_grid`` x ``seeds`` with common random numbers across V."""
    cfgs = sweep_configs(base, v_grid, seeds)
    for cfg in cfgs:
        cfg.validate()
    if workers > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_one, cfgs))
    return [run_simulation(cfg) for cfg in cfgs]
