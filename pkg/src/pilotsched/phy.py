"""Channel-hardening rates from large-scale fading, plus MMSE-precoded checks.

All rates are expressed in bits per scheduling slot, i.e. the spectral
efficiency already multiplied by ``slot_s * bandwidth_hz * gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class ChannelParams:
    """Propagation and receiver constants of the cell.

    Path loss in dB is ``pathloss_ref_db - 10 * pathloss_exponent * log10(d / 1 km)``.
    """

    pathloss_ref_db: float = -148.1
    pathloss_exponent: float = 3.76
    shadow_std_db: float = 10.0
    min_distance_m: float = 10.0
    noise_psd_dbm_hz: float = -174.0
    noise_figure_db: float = 7.0


@dataclass(frozen=True)
class LinkBudget:
    p_tot_w: float
    sigma2_w: float
    m_antennas: int
    bandwidth_hz: float
    gamma: float
    slot_s: float
    r_max_bits: float = math.inf

    @property
    def bits_per_slot_hz(self) -> float:
        """Bits delivered per slot for 1 bit/s/Hz of spectral efficiency."""
        return self.slot_s * self.bandwidth_hz * self.gamma


@dataclass(frozen=True)
class LargeScaleGain:
    beta: float
    distance_m: float
    shadow_db: float


def noise_power_w(bandwidth_hz: float, params: ChannelParams = ChannelParams()) -> float:
    dbm = params.noise_psd_dbm_hz + 10.0 * math.log10(bandwidth_hz) + params.noise_figure_db
    return 10.0 ** ((dbm - 30.0) / 10.0)


def pathloss_db(distance_m, params: ChannelParams = ChannelParams()):
    d = np.maximum(np.asarray(distance_m, dtype=float), params.min_distance_m)
    out = params.pathloss_ref_db - 10.0 * params.pathloss_exponent * np.log10(d / 1000.0)
    return float(out) if out.ndim == 0 else out


def path_gain(user_position, bs_position, shadow_db: float,
              params: ChannelParams = ChannelParams()) -> LargeScaleGain:
    user = np.asarray(user_position, dtype=float)
    bs = np.asarray(bs_position, dtype=float)
    if not (np.all(np.isfinite(user)) and np.all(np.isfinite(bs)) and math.isfinite(shadow_db)):
        raise ConfigError("non-finite position or shadowing value", key="position")
    distance = max(float(np.hypot(*(user - bs))), params.min_distance_m)
    beta = 10.0 ** ((pathloss_db(distance, params) + shadow_db) / 10.0)
    return LargeScaleGain(beta=beta, distance_m=distance, shadow_db=float(shadow_db))


def path_gains(positions: np.ndarray, bs_position, shadow_db: np.ndarray,
               params: ChannelParams = ChannelParams()) -> np.ndarray:
    """Vectorised :func:`path_gain` returning only the linear gains."""
    positions = np.asarray(positions, dtype=float)
    if not np.all(np.isfinite(positions)):
        raise ConfigError("non-finite user position", key="position")
    distance = np.hypot(*(positions - np.asarray(bs_position, dtype=float)).T)
    return 10.0 ** ((pathloss_db(distance, params) + np.asarray(shadow_db)) / 10.0)


def _check_k(k: int, m_antennas: int) -> None:
    if k < 1:
        raise ConfigError(f"set size k={k} must be >= 1", key="k_max")
    if k >= m_antennas:
        raise ConfigError(f"set size k={k} must be below the antenna count M={m_antennas}",
                          key="k_max")


def hardening_sinr(beta, k: int, budget: LinkBudget):
    """Deterministic-equivalent SINR ``(P_tot/k) (M-k) beta / sigma2``."""
    _check_k(k, budget.m_antennas)
    return (budget.p_tot_w / k) * (budget.m_antennas - k) * np.asarray(beta, dtype=float) / budget.sigma2_w


def hardening_rate(beta, k: int, budget: LinkBudget):
    """Bits per slot a user with large-scale gain ``beta`` gets in a size-``k`` group.

    Works on scalars and arrays alike; the result is capped at ``budget.r_max_bits``.
    """
    if isinstance(beta, LargeScaleGain):
        beta = beta.beta
    rate = budget.bits_per_slot_hz * np.log2(1.0 + hardening_sinr(beta, k, budget))
    rate = np.minimum(rate, budget.r_max_bits)
    return float(rate) if np.ndim(rate) == 0 else rate


def rate_table(betas: np.ndarray, k_max: int, budget: LinkBudget) -> np.ndarray:
    """``table[k-1, n]`` is the hardening rate of user ``n`` in a group of size ``k``."""
    betas = np.asarray(betas, dtype=float)
    return np.stack([hardening_rate(betas, k, budget) for k in range(1, k_max + 1)])


def rate_cap_bits(params: ChannelParams, budget: LinkBudget) -> float:
    """R_max: single-user hardening rate at the minimum distance without shadowing."""
    beta = 10.0 ** (pathloss_db(params.min_distance_m, params) / 10.0)
    uncapped = LinkBudget(budget.p_tot_w, budget.sigma2_w, budget.m_antennas,
                          budget.bandwidth_hz, budget.gamma, budget.slot_s)
    return hardening_rate(beta, 1, uncapped)


def draw_small_scale(m_antennas: int, betas, rng: np.random.Generator) -> np.ndarray:
    """Rayleigh channel matrix of shape ``(M, k)``; column ``n`` has entry variance ``betas[n]``."""
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    if m_antennas < 1:
        raise ConfigError("antenna count must be >= 1", key="m_antennas")
    if np.any(betas < 0):
        raise ValueError("large-scale gains must be nonnegative")
    shape = (m_antennas, betas.size)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    return z * np.sqrt(betas)[None, :]


def mmse_precoders(h: np.ndarray, per_user_power: float, sigma2: float) -> np.ndarray:
    """Unit-norm columns of ``H (H^H H + alpha I)^-1`` with ``alpha = sigma2 / per_user_power``."""
    h = np.asarray(h, dtype=complex)
    k = h.shape[1]
    alpha = sigma2 / per_user_power
    gram = h.conj().T @ h + alpha * np.eye(k)
    try:
        w = h @ np.linalg.solve(gram, np.eye(k))
    except np.linalg.LinAlgError as exc:
        raise FloatingPointError("MMSE regularised Gram matrix is singular") from exc
    norms = np.linalg.norm(w, axis=0)
    if not np.all(np.isfinite(w)):
        raise FloatingPointError("MMSE precoder is not finite")
    # an all-zero channel column gives a zero precoder; leave it at zero
    return w / np.where(norms > 0, norms, 1.0)[None, :]


def realized_sinr(h: np.ndarray, w: np.ndarray, budget: LinkBudget,
                  interference: bool = True) -> np.ndarray:
    k = h.shape[1]
    if w.shape != h.shape:
        raise ValueError(f"precoder shape {w.shape} does not match channel {h.shape}")
    p = budget.p_tot_w / k
    gains = np.abs(h.conj().T @ w) ** 2  # gains[n, m] = |h_n^H w_m|^2
    signal = p * np.diag(gains)
    leak = p * np.maximum(gains.sum(axis=1) - np.diag(gains), 0.0) if interference else 0.0
    return signal / (leak + budget.sigma2_w)


def realized_rates(h: np.ndarray, w: np.ndarray, budget: LinkBudget,
                   interference: bool = True) -> np.ndarray:
    """Instantaneous bits per slot of each scheduled user with power split ``P_tot/k``."""
    sinr = realized_sinr(h, w, budget, interference=interference)
    return np.minimum(budget.bits_per_slot_hz * np.log2(1.0 + sinr), budget.r_max_bits)
