import logging
import math
from typing import Optional, Tuple

import numpy as np

from stylereweight.diffusion.denoisers import DenoiserContract, checked_noise_prediction
from stylereweight.diffusion.schedule import NoiseSchedule
from stylereweight.diffusion.trajectory import Trajectory
from stylereweight.errors import ConfigError, DimensionError, DomainError, SingularStepError

logger = logging.getLogger(__name__)

ClipRange = Optional[Tuple[float, float]]


def _require_same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{what}: shapes {a.shape} and {b.shape} do not agree.")


def forward_noise(x0: np.ndarray, t: int, z: np.ndarray, schedule: NoiseSchedule) -> np.ndarray:
    """sqrt(alpha_t) * x0 + sqrt(1 - alpha_t) * z"""
    _require_same_shape(x0, z, "Forward noising")
    alpha = schedule.alpha(t)
    return math.sqrt(alpha) * x0 + math.sqrt(1.0 - alpha) * z


def predict_x0(x_t: np.ndarray, eps_hat: np.ndarray, t: int, schedule: NoiseSchedule) -> np.ndarray:
    """Noise-free prediction (x_t - sqrt(1 - alpha_t) * eps_hat) / sqrt(alpha_t)."""
    _require_same_shape(x_t, eps_hat, "Noise-free prediction")
    alpha = schedule.alpha(t)
    if alpha == 0.0:
        raise SingularStepError(f"alpha_{t} is zero; the noise-free prediction is undefined.")
    return (x_t - math.sqrt(1.0 - alpha) * eps_hat) / math.sqrt(alpha)


def clip_prediction(
    x_t: np.ndarray,
    x0_hat: np.ndarray,
    t: int,
    schedule: NoiseSchedule,
    clip_range: Tuple[float, float],
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Clamps a noise-free prediction to the data range and returns it with the noise estimate
    that reproduces x_t from the clamped prediction.
    """
    low, high = clip_range
    if not low < high:
        raise ConfigError(f"clip_range needs low < high, got {clip_range}.")
    alpha = schedule.alpha(t)
    if alpha >= 1.0:
        raise SingularStepError(f"alpha_{t} is one; no noise estimate matches a clamped prediction.")
    x0_clipped = np.clip(x0_hat, low, high)
    eps_clipped = (x_t - math.sqrt(alpha) * x0_clipped) / math.sqrt(1.0 - alpha)
    return x0_clipped, eps_clipped


def ddim_update(
    x_t: np.ndarray,
    eps_hat: np.ndarray,
    t: int,
    schedule: NoiseSchedule,
    z: Optional[np.ndarray] = None,
    clip_range: ClipRange = None,
) -> np.ndarray:
    """
    One DDIM reverse update from x_t to x_{t-1} given an already computed noise prediction.

    Parameters:
    - x_t: current latent
    - eps_hat: noise prediction for (x_t, t)
    - t: current step, at least 1
    - schedule: noise schedule
    - z: fresh noise, only read when sigma_t > 0
    - clip_range: optional (low, high) bounds for the noise-free prediction. The noise estimate
      is then recomputed from the clamped prediction, so the update stays on the clamped sample

    Returns:
    - x_{t-1}
    """
    if t < 1:
        raise DomainError(f"A reverse step needs t >= 1, got {t}.")
    alpha_prev = schedule.alpha(t - 1)
    sigma = schedule.sigma(t)
    direction_variance = 1.0 - alpha_prev - sigma**2
    if direction_variance < 0:
        raise ConfigError(
            f"sigma_{t}^2 = {sigma ** 2} exceeds 1 - alpha_{t - 1} = {1.0 - alpha_prev}."
        )

    x0_hat = predict_x0(x_t, eps_hat, t, schedule)
    if clip_range is not None:
        x0_hat, eps_hat = clip_prediction(x_t, x0_hat, t, schedule, clip_range)
    x_prev = math.sqrt(alpha_prev) * x0_hat + math.sqrt(direction_variance) * eps_hat
    if sigma > 0:
        if z is None:
            raise ConfigError(f"Step {t} has sigma > 0 and needs a noise sample z.")
        _require_same_shape(x_t, z, "Stochastic DDIM step")
        x_prev = x_prev + sigma * z
    return x_prev


def ddim_step(
    x_t: np.ndarray,
    t: int,
    denoiser: DenoiserContract,
    schedule: NoiseSchedule,
    z: Optional[np.ndarray] = None,
    clip_range: ClipRange = None,
) -> np.ndarray:
    eps_hat = checked_noise_prediction(denoiser, x_t, t)
    return ddim_update(x_t, eps_hat, t, schedule, z, clip_range)


def inversion_update(x_t: np.ndarray, eps_hat: np.ndarray, t: int, schedule: NoiseSchedule) -> np.ndarray:
    """Deterministic DDIM relation solved for x_{t+1}, with eps_hat held fixed."""
    alpha_next = schedule.alpha(t + 1)
    alpha = schedule.alpha(t)
    x0_hat = (x_t - math.sqrt(1.0 - alpha) * eps_hat) / math.sqrt(alpha)
    return math.sqrt(alpha_next) * x0_hat + math.sqrt(1.0 - alpha_next) * eps_hat


def _refine_inversion(
    x_t: np.ndarray,
    x_next: np.ndarray,
    t: int,
    denoiser: DenoiserContract,
    schedule: NoiseSchedule,
    refinement_steps: int,
) -> np.ndarray:
    # Fixed-point iteration on x_{t+1} = (x_t - b * eps(x_{t+1}, t+1)) / a, which makes the
    # reverse update from x_{t+1} land back on x_t.
    alpha = schedule.alpha(t)
    alpha_next = schedule.alpha(t + 1)
    scale = math.sqrt(alpha) / math.sqrt(alpha_next)
    noise_gain = math.sqrt(1.0 - alpha) - math.sqrt(alpha) * math.sqrt(1.0 - alpha_next) / math.sqrt(alpha_next)
    for _ in range(refinement_steps):
        eps_hat = checked_noise_prediction(denoiser, x_next, t + 1)
        x_next = (x_t - noise_gain * eps_hat) / scale
    return x_next


def ddim_invert(
    x0: np.ndarray,
    denoiser: DenoiserContract,
    schedule: NoiseSchedule,
    refinement_steps: int = 0,
) -> Trajectory:
    """
    Maps a clean sample to its noise-space latent by running the deterministic DDIM relation
    forward in t.

    The noise for the move from x_t to x_{t+1} is predicted at the current state with the
    target step index, eps(x_t, t+1), so the denoiser is never queried at t=0.

    Parameters:
    - x0: clean sample
    - denoiser: noise predictor
    - schedule: deterministic noise schedule
    - refinement_steps: optional fixed-point refinements per step; 0 is the plain first-order
      inversion

    Returns:
    - Trajectory x_0..x_T in the forward direction
    """
    if not schedule.is_deterministic:
        raise ConfigError("DDIM inversion requires a deterministic schedule (all sigma_t == 0).")
    if refinement_steps < 0:
        raise ConfigError(f"refinement_steps must be non-negative, got {refinement_steps}.")

    x_t = np.asarray(x0, dtype=np.float64)
    states = [x_t]
    for t in range(schedule.steps):
        eps_hat = checked_noise_prediction(denoiser, x_t, t + 1)
        x_next = inversion_update(x_t, eps_hat, t, schedule)
        if refinement_steps:
            x_next = _refine_inversion(x_t, x_next, t, denoiser, schedule, refinement_steps)
        states.append(x_next)
        x_t = x_next
    logger.debug(f"Inverted a sample of shape {x_t.shape} over {schedule.steps} steps")
    return Trajectory(states=states, direction="fwd", schedule=schedule)


def ddim_reverse(
    x_T: np.ndarray,
    denoiser: DenoiserContract,
    schedule: NoiseSchedule,
    clip_range: ClipRange = None,
) -> Trajectory:
    """Deterministic reverse pass x_T..x_0, optionally clamping each noise-free prediction."""
    if not schedule.is_deterministic:
        raise ConfigError("ddim_reverse runs deterministic DDIM; use ddim_step for stochastic steps.")
    x_t = np.asarray(x_T, dtype=np.float64)
    states = [x_t]
    for t in range(schedule.steps, 0, -1):
        x_t = ddim_step(x_t, t, denoiser, schedule, clip_range=clip_range)
        states.append(x_t)
    return Trajectory(states=states, direction="rev", schedule=schedule)
