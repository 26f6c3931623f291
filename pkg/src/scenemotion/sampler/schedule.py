"""Diffusion schedule, forward noising and the reverse posterior step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class DiffusionSchedule:
    """Variance schedule indexed t = 0..T-1; x_{T-1} is (almost) pure noise."""

    beta: np.ndarray
    alpha_bar: np.ndarray

    def __post_init__(self):
        beta = np.ascontiguousarray(self.beta, dtype=np.float64)
        abar = np.ascontiguousarray(self.alpha_bar, dtype=np.float64)
        if beta.shape != abar.shape or beta.ndim != 1:
            raise ValidationError("beta and alpha_bar must be 1D of equal length")
        if np.any(beta <= 0) or np.any(beta >= 1):
            raise ValidationError("betas must lie strictly inside (0, 1)")
        if np.any(np.diff(abar) >= 0):
            raise ValidationError("alpha_bar must be strictly decreasing")
        if abar[-1] >= 0.01:
            raise ValidationError(f"terminal alpha_bar {abar[-1]:.4f} must be < 0.01")
        beta.flags.writeable = False
        abar.flags.writeable = False
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha_bar", abar)

    @property
    def T(self) -> int:
        return len(self.beta)

    def alpha(self, t: int) -> float:
        return 1.0 - float(self.beta[t])

    def alpha_bar_prev(self, t: int) -> float:
        return float(self.alpha_bar[t - 1]) if t > 0 else 1.0


def cosine_schedule(T: int = 100, s: float = 0.008, max_beta: float = 0.999) -> DiffusionSchedule:
    steps = np.arange(T + 1, dtype=np.float64)
    f = np.cos(((steps / T) + s) / (1.0 + s) * np.pi / 2.0) ** 2
    abar = f[1:] / f[0]
    beta = 1.0 - abar / np.concatenate([[1.0], abar[:-1]])
    beta = np.clip(beta, 1e-8, max_beta)
    abar = np.cumprod(1.0 - beta)
    return DiffusionSchedule(beta=beta, alpha_bar=abar)


def forward_noise(schedule: DiffusionSchedule, x0: np.ndarray, t: int,
                  rng: np.random.Generator | None = None,
                  eps: np.ndarray | None = None) -> np.ndarray:
    """x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps, with an eps test hook."""
    if not 0 <= t < schedule.T:
        raise ValidationError(f"t={t} outside [0, {schedule.T})")
    if eps is None:
        if rng is None:
            raise ValidationError("forward_noise needs rng or eps")
        eps = rng.standard_normal(size=x0.shape)
    ab = schedule.alpha_bar[t]
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps


def posterior_coefficients(schedule: DiffusionSchedule, t: int) -> tuple[float, float, float]:
    """(coef on x0_hat, coef on x_t, posterior variance) at step t >= 1."""
    beta_t = float(schedule.beta[t])
    ab_t = float(schedule.alpha_bar[t])
    ab_prev = schedule.alpha_bar_prev(t)
    alpha_t = 1.0 - beta_t
    c0 = np.sqrt(ab_prev) * beta_t / (1.0 - ab_t)
    ct = np.sqrt(alpha_t) * (1.0 - ab_prev) / (1.0 - ab_t)
    var = beta_t * (1.0 - ab_prev) / (1.0 - ab_t)
    return c0, ct, var


def posterior_step(schedule: DiffusionSchedule, x_t: np.ndarray, x0_hat: np.ndarray,
                   t: int, rng: np.random.Generator | None = None,
                   eps: np.ndarray | None = None) -> np.ndarray:
    """One reverse step x_t -> x_{t-1}; at t == 1 returns x0_hat exactly."""
    if not 1 <= t < schedule.T:
        raise ValidationError(f"posterior step needs t in [1, {schedule.T}), got {t}")
    if t == 1:
        return np.array(x0_hat, copy=True)
    c0, ct, var = posterior_coefficients(schedule, t)
    if eps is None:
        if rng is None:
            raise ValidationError("posterior_step needs rng or eps")
        eps = rng.standard_normal(size=x_t.shape)
    return c0 * x0_hat + ct * x_t + np.sqrt(var) * eps
