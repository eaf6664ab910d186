import logging
import math
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from stylereweight.diffusion.ddim import ClipRange, ddim_update, predict_x0
from stylereweight.diffusion.denoisers import DenoiserContract, checked_noise_prediction
from stylereweight.diffusion.schedule import NoiseSchedule
from stylereweight.errors import DimensionError, SingularStepError

logger = logging.getLogger(__name__)


class GuidanceConfig(BaseModel):
    """
    Energy guidance between consecutive frames.

    weight is the step size w_g of x_t <- x_t - w_g * grad E. step_window uses the reverse step
    indices of InjectionConfig.step_window; None means the injection window.
    """

    model_config = ConfigDict(populate_by_name=True)
    weight: float = Field(default=0.05, alias="w_g")
    step_window: Optional[Tuple[int, int]] = None

    @field_validator("weight")
    @classmethod
    def validate_weight(cls, weight: float):
        if not math.isfinite(weight) or weight < 0:
            raise ValueError(f"Guidance weight must be finite and non-negative, got {weight}.")
        return weight

    @field_validator("step_window")
    @classmethod
    def validate_step_window(cls, step_window: Optional[Tuple[int, int]]):
        if step_window is not None and not 0 <= step_window[0] <= step_window[1]:
            raise ValueError(f"Guidance window {step_window[0]}:{step_window[1]} must satisfy 0 <= start <= end.")
        return step_window

    def active(self, step_index: int, injection_window: Tuple[int, int]) -> bool:
        start, end = self.step_window if self.step_window is not None else injection_window
        return self.weight > 0 and start <= step_index < end


def noise_free_distance(x0_hat: np.ndarray, previous_x0: np.ndarray) -> float:
    """Unsquared distance between the noise-free predictions of two frames."""
    return float(np.linalg.norm(x0_hat - previous_x0))


def energy(x_t: np.ndarray, eps_hat: np.ndarray, t: int, schedule: NoiseSchedule, previous_x0: np.ndarray) -> float:
    """0.5 * ||x0_hat(x_t) - previous_x0||^2 with eps_hat held fixed."""
    return 0.5 * noise_free_distance(predict_x0(x_t, eps_hat, t, schedule), previous_x0) ** 2


def energy_gradient(x_t: np.ndarray, eps_hat: np.ndarray, t: int, schedule: NoiseSchedule, previous_x0: np.ndarray) -> np.ndarray:
    """Gradient of the energy in x_t, (x0_hat - previous_x0) / sqrt(alpha_t), treating eps_hat as constant."""
    if np.shape(previous_x0) != np.shape(x_t):
        raise DimensionError(
            f"Previous frame prediction has shape {np.shape(previous_x0)}, the latent has {np.shape(x_t)}."
        )
    alpha = schedule.alpha(t)
    if alpha == 0.0:
        raise SingularStepError(f"alpha_{t} is zero; the energy gradient is undefined.")
    return (predict_x0(x_t, eps_hat, t, schedule) - previous_x0) / math.sqrt(alpha)


def guided_latent(
    x_t: np.ndarray,
    eps_hat: np.ndarray,
    t: int,
    schedule: NoiseSchedule,
    previous_x0: np.ndarray,
    weight: float,
) -> np.ndarray:
    """
    One gradient step on the energy. The step size is capped at alpha_t, so x0_hat moves toward
    the previous frame's prediction without passing it.
    """
    alpha = schedule.alpha(t)
    step = min(weight, alpha)
    if step < weight:
        logger.debug(f"Guidance weight {weight} capped at alpha_{t}={alpha:.6f}")
    return x_t - step * energy_gradient(x_t, eps_hat, t, schedule, previous_x0)


def guided_prediction(
    x_t: np.ndarray,
    t: int,
    denoiser: DenoiserContract,
    schedule: NoiseSchedule,
    previous_x0: np.ndarray,
    guidance: GuidanceConfig,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    The guided latent and the noise prediction the DDIM update takes there.

    The first denoiser pass only feeds the energy gradient; the pass at the guided latent is
    the last one, so whatever the denoiser records (taps, similarity) reflects the guided state.
    With weight 0 there is one pass and the latent is returned unchanged.
    """
    eps_hat = checked_noise_prediction(denoiser, x_t, t)
    if guidance.weight == 0:
        return x_t, eps_hat
    x_guided = guided_latent(x_t, eps_hat, t, schedule, previous_x0, guidance.weight)
    return x_guided, checked_noise_prediction(denoiser, x_guided, t)


def energy_guidance_step(
    x_t: np.ndarray,
    t: int,
    denoiser: DenoiserContract,
    schedule: NoiseSchedule,
    previous_x0: np.ndarray,
    guidance: GuidanceConfig,
    clip_range: ClipRange = None,
) -> np.ndarray:
    """
    Guided DDIM reverse step for one video frame.

    Parameters:
    - x_t: the frame's latent at step t
    - t: current step
    - denoiser: noise predictor, already bound to any attention overrides
    - schedule: noise schedule
    - previous_x0: the previous frame's x0 prediction at step t
    - guidance: step size
    - clip_range: optional clamp of the noise-free prediction, as in ddim_update

    Returns:
    - x_{t-1}, from a DDIM step taken at the guided latent
    """
    x_guided, eps_hat = guided_prediction(x_t, t, denoiser, schedule, previous_x0, guidance)
    return ddim_update(x_guided, eps_hat, t, schedule, clip_range=clip_range)
