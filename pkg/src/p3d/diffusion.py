"""Denoising-diffusion schedule algebra and sampling over shape latents.

Shape latents are 16x16x16 grids. The schedule interpolates the noise rate
``beta`` linearly across the step count; ``alpha = 1 - beta`` and
``alpha_bar`` is its running product. All steps are 1-indexed: t runs from
1 to T inclusive, matching the forward corruption

    s_t = sqrt(alpha_bar_t) * s0 + sqrt(1 - alpha_bar_t) * eps

and its exact inversion given the true noise. Denoisers are pluggable: any
object with ``predict_eps(s_t, t, code) -> eps_hat`` can drive sampling. Two
reference denoisers ship for wiring and tests; neither is a trained model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

LATENT_SHAPE = (16, 16, 16)

# alpha_bar below this is treated as numerically singular for inversion.
SINGULAR_ALPHA_BAR = 1e-12


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step noise rates and their running products, all length T."""

    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray

    def __post_init__(self) -> None:
        beta = np.asarray(self.beta, dtype=np.float64)
        alpha = np.asarray(self.alpha, dtype=np.float64)
        alpha_bar = np.asarray(self.alpha_bar, dtype=np.float64)
        if beta.ndim != 1 or beta.shape != alpha.shape or beta.shape != alpha_bar.shape:
            raise ValueError("schedule arrays must be 1-D and share a length")
        if beta.shape[0] < 1:
            raise ValueError("schedule needs at least one step")
        if np.any(beta < 0.0) or np.any(beta >= 1.0):
            raise ValueError("beta entries must lie in [0, 1)")
        if np.max(np.abs(alpha - (1.0 - beta))) > 1e-12:
            raise ValueError("alpha must equal 1 - beta")
        if np.max(np.abs(alpha_bar - np.cumprod(alpha))) > 1e-12:
            raise ValueError("alpha_bar must be the running product of alpha")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "alpha_bar", alpha_bar)

    @property
    def steps(self) -> int:
        return self.beta.shape[0]

    @classmethod
    def from_betas(cls, betas: np.ndarray) -> "NoiseSchedule":
        betas = np.asarray(betas, dtype=np.float64)
        alpha = 1.0 - betas
        return cls(betas, alpha, np.cumprod(alpha))

    def _index(self, t: int) -> int:
        if not (1 <= t <= self.steps):
            raise ValueError(f"step t must lie in [1, {self.steps}], got {t}")
        return t - 1


def build_schedule(
    steps: int = 1000, beta_start: float = 1e-4, beta_end: float = 2e-2
) -> NoiseSchedule:
    """Linear beta schedule; a single step uses beta_start alone."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ValueError(
            f"need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})"
        )
    return NoiseSchedule.from_betas(np.linspace(beta_start, beta_end, steps))


def forward_noise(
    s0: np.ndarray, t: int, eps: np.ndarray, schedule: NoiseSchedule
) -> np.ndarray:
    """Corrupt a clean latent to step t with the given noise."""
    s0 = np.asarray(s0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if s0.shape != eps.shape:
        raise ValueError("latent and noise must share a shape")
    ab = schedule.alpha_bar[schedule._index(t)]
    return math.sqrt(ab) * s0 + math.sqrt(1.0 - ab) * eps


def predict_s0(
    s_t: np.ndarray, t: int, eps_hat: np.ndarray, schedule: NoiseSchedule
) -> np.ndarray:
    """Invert the forward corruption under a noise estimate.

    Exact when eps_hat is the true noise. Raises once alpha_bar_t decays past
    the singularity floor, where the division stops being meaningful.
    """
    s_t = np.asarray(s_t, dtype=np.float64)
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    if s_t.shape != eps_hat.shape:
        raise ValueError("latent and noise estimate must share a shape")
    ab = schedule.alpha_bar[schedule._index(t)]
    if ab <= SINGULAR_ALPHA_BAR:
        raise ValueError(
            f"alpha_bar at step {t} is {ab:.3e}; inversion is numerically singular"
        )
    return (s_t - math.sqrt(1.0 - ab) * eps_hat) / math.sqrt(ab)


def posterior_variance(t: int, schedule: NoiseSchedule) -> float:
    """Variance of the reverse-step posterior at step t (0 when t == 1)."""
    i = schedule._index(t)
    if t == 1:
        return 0.0
    denom = 1.0 - schedule.alpha_bar[i]
    if denom <= 0.0:
        return 0.0
    return float(schedule.beta[i] * (1.0 - schedule.alpha_bar[i - 1]) / denom)


class Denoiser(Protocol):
    def predict_eps(self, s_t: np.ndarray, t: int, code: np.ndarray | None) -> np.ndarray:
        """Estimate the noise component of a corrupted latent."""
        ...


class ZeroDenoiser:
    """Predicts zero noise everywhere; the do-nothing reference point."""

    def predict_eps(self, s_t: np.ndarray, t: int, code: np.ndarray | None) -> np.ndarray:
        return np.zeros_like(np.asarray(s_t, dtype=np.float64))


class LinearDenoiser:
    """Seeded per-cell scaling plus a bias projected from the shape code.

    Wiring scaffold only: it exercises the conditioning path and shape
    contracts without pretending to be a trained model. The step index is
    accepted but unused.
    """

    def __init__(self, code_dim: int, seed: int = 0, latent_shape: tuple[int, ...] = LATENT_SHAPE):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        cells = int(np.prod(latent_shape))
        self._latent_shape = tuple(latent_shape)
        self._scale = rng.normal(1.0, 0.05, size=cells)
        self._projection = rng.normal(0.0, 1.0 / math.sqrt(code_dim), size=(cells, code_dim))

    def predict_eps(self, s_t: np.ndarray, t: int, code: np.ndarray | None) -> np.ndarray:
        s_t = np.asarray(s_t, dtype=np.float64)
        if s_t.shape != self._latent_shape:
            raise ValueError(f"latent shape {s_t.shape} != {self._latent_shape}")
        flat = self._scale * s_t.reshape(-1)
        if code is not None:
            code = np.asarray(code, dtype=np.float64).reshape(-1)
            flat = flat + self._projection @ code
        return flat.reshape(self._latent_shape)


def ancestral_sample(
    denoiser: Denoiser,
    code: np.ndarray | None,
    schedule: NoiseSchedule,
    seed: int = 0,
    latent_shape: tuple[int, ...] = LATENT_SHAPE,
) -> np.ndarray:
    """Draw a latent by walking the reverse chain from pure noise.

    Each step forms the posterior mean from the denoiser's noise estimate
    and, for every step except the last, adds noise scaled by the posterior
    standard deviation. Fully determined by (denoiser, code, schedule, seed).
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    s = rng.standard_normal(latent_shape)
    for t in range(schedule.steps, 0, -1):
        i = schedule._index(t)
        eps_hat = np.asarray(denoiser.predict_eps(s, t, code), dtype=np.float64)
        if eps_hat.shape != s.shape:
            raise ValueError(
                f"denoiser returned shape {eps_hat.shape}, expected {s.shape}"
            )
        if not np.all(np.isfinite(eps_hat)):
            raise ValueError(f"denoiser returned non-finite values at step {t}")
        one_minus_ab = 1.0 - schedule.alpha_bar[i]
        coef = schedule.beta[i] / math.sqrt(one_minus_ab) if one_minus_ab > 0.0 else 0.0
        mean = (s - coef * eps_hat) / math.sqrt(schedule.alpha[i])
        if t > 1:
            s = mean + math.sqrt(posterior_variance(t, schedule)) * rng.standard_normal(
                latent_shape
            )
        else:
            s = mean
    return s


def diffusion_loss(eps: np.ndarray, eps_hat: np.ndarray) -> float:
    """Squared error between true and estimated noise, summed over the grid."""
    eps = np.asarray(eps, dtype=np.float64)
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    if eps.shape != eps_hat.shape:
        raise ValueError("noise arrays must share a shape")
    diff = eps - eps_hat
    return float(np.sum(diff * diff))
