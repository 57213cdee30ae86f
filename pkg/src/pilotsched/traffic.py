"""FTP Model 3 style downlink traffic: Poisson file arrivals of a fixed payload."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

DEFAULT_FILE_SIZE_BITS = 1.6e6  # 0.2 MB with MB = 10^6 bytes


@dataclass
class TrafficConfig:
    mean_interarrival_s: np.ndarray
    file_size_bits: float = DEFAULT_FILE_SIZE_BITS
    slot_s: float = 1e-3
    a_max_bits: float = field(default=None)

    def __post_init__(self):
        self.mean_interarrival_s = np.atleast_1d(np.asarray(self.mean_interarrival_s, dtype=float))
        if self.a_max_bits is None:
            self.a_max_bits = 5.0 * self.file_size_bits
        if np.any(~(self.mean_interarrival_s > 0)):
            raise ConfigError("mean inter-arrival times must be > 0", key="traffic.interarrival_min_s")
        if not self.file_size_bits > 0:
            raise ConfigError("file size must be > 0", key="traffic.file_size_bits")
        if self.a_max_bits < self.file_size_bits:
            raise ConfigError("a_max_bits must be >= file_size_bits", key="traffic.a_max_bits")

    @property
    def n_users(self) -> int:
        return self.mean_interarrival_s.size

    @property
    def files_per_slot(self) -> np.ndarray:
        """Poisson mean of the per-slot file count (zero for infinite inter-arrival)."""
        return self.slot_s / self.mean_interarrival_s

    @property
    def mean_bits_per_slot(self) -> np.ndarray:
        return self.file_size_bits * self.files_per_slot


def draw_interarrivals(n_users: int, low_s: float, high_s: float,
                       rng: np.random.Generator) -> np.ndarray:
    """Per-user mean inter-arrival times, uniform on ``[low_s, high_s]``."""
    if low_s == high_s:
        return np.full(n_users, float(low_s))
    return rng.uniform(low_s, high_s, size=n_users)


def draw_arrivals(cfg: TrafficConfig, rng: np.random.Generator, n_slots: int | None = None):
    """Bits arriving per user in one slot, or an ``(n_slots, N)`` block of slots.

    Returns ``(bits, truncated)`` where ``truncated`` counts entries clipped to
    ``cfg.a_max_bits``.
    """
    size = cfg.n_users if n_slots is None else (n_slots, cfg.n_users)
    counts = rng.poisson(cfg.files_per_slot, size=size)
    bits = counts * cfg.file_size_bits
    over = bits > cfg.a_max_bits
    truncated = int(np.count_nonzero(over))
    if truncated:
        bits = np.where(over, cfg.a_max_bits, bits)
    return bits, truncated
