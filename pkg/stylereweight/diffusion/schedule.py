import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from stylereweight.errors import ConfigError, DomainError

LINEAR_ALPHA_MIN = 0.0047
COSINE_ALPHA_MIN = 1e-6
COSINE_OFFSET = 0.008


class ScheduleConfig(BaseModel):
    """
    Parameters of make_schedule. The cosine kind is floored at alpha_min (1e-6 by default);
    when T is large enough that more than the last step falls under the floor (T around 1600
    and up), the floored tail is flat and make_schedule raises ConfigError. Pass a smaller
    alpha_min for such T.
    """

    steps: int = Field(default=30, ge=1)
    kind: Literal["linear", "cosine"] = "linear"
    alpha_min: Optional[float] = None
    cosine_offset: float = Field(default=COSINE_OFFSET, ge=0.0)

    @model_validator(mode="after")
    def validate_alpha_min(self):
        if self.alpha_min is not None and not 0.0 < self.alpha_min < 1.0:
            raise ValueError(f"alpha_min must lie in (0, 1), got {self.alpha_min}.")
        return self

    @property
    def resolved_alpha_min(self) -> float:
        if self.alpha_min is not None:
            return self.alpha_min
        return LINEAR_ALPHA_MIN if self.kind == "linear" else COSINE_ALPHA_MIN


class NoiseSchedule(BaseModel):
    """
    The cumulative signal levels alpha_0..alpha_T of the forward process and the per-step
    sigma_t of the DDIM reverse update (all zero for deterministic DDIM).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)
    alphas: np.ndarray
    sigmas: np.ndarray

    @model_validator(mode="after")
    def validate_schedule(self):
        alphas, sigmas = self.alphas, self.sigmas
        if alphas.ndim != 1 or len(alphas) < 2:
            raise ValueError(f"A schedule needs at least two alpha values, got shape {alphas.shape}.")
        if alphas[0] != 1.0:
            raise ValueError(f"alpha_0 must be exactly 1, got {alphas[0]}.")
        if np.any(alphas < 0):
            raise ValueError("Alpha values must be non-negative.")
        if np.any(np.diff(alphas) >= 0):
            raise ValueError("Alpha values must be strictly decreasing after t=0.")
        if sigmas.shape != alphas.shape:
            raise ValueError(f"Sigmas must have one entry per step, got {sigmas.shape} for {alphas.shape}.")
        if np.any(sigmas < 0):
            raise ValueError("Sigma values must be non-negative.")
        return self

    @property
    def steps(self) -> int:
        return len(self.alphas) - 1

    @property
    def is_deterministic(self) -> bool:
        return not np.any(self.sigmas)

    def alpha(self, t: int) -> float:
        if not 0 <= t <= self.steps:
            raise DomainError(f"Step {t} is outside the schedule range [0, {self.steps}].")
        return float(self.alphas[t])

    def sigma(self, t: int) -> float:
        self.alpha(t)
        return float(self.sigmas[t])

    def with_sigmas(self, sigmas: np.ndarray) -> "NoiseSchedule":
        try:
            return NoiseSchedule(alphas=self.alphas, sigmas=np.asarray(sigmas, dtype=np.float64))
        except ValueError as error:
            raise ConfigError(str(error)) from error


def cosine_alpha(t: int, steps: int, offset: float = COSINE_OFFSET) -> float:
    """Unclipped closed form cos^2(((t/T)+s)/(1+s) * pi/2), normalized so that t=0 gives 1."""

    def level(step: int) -> float:
        return math.cos(((step / steps) + offset) / (1 + offset) * math.pi / 2) ** 2

    return level(t) / level(0)


def make_schedule(
    steps: int = 30,
    kind: str = "linear",
    alpha_min: Optional[float] = None,
    cosine_offset: float = COSINE_OFFSET,
) -> NoiseSchedule:
    """
    Builds a deterministic noise schedule.

    Parameters:
    - steps: number of diffusion steps T
    - kind: "linear" (alpha falls linearly from 1 to alpha_min) or "cosine"
    - alpha_min: floor of the schedule; defaults depend on the kind
    - cosine_offset: the small offset s of the cosine form

    Returns:
    - A NoiseSchedule with T+1 alphas and zero sigmas
    """
    try:
        config = ScheduleConfig(steps=steps, kind=kind, alpha_min=alpha_min, cosine_offset=cosine_offset)
    except ValueError as error:
        raise ConfigError(str(error)) from error

    floor = config.resolved_alpha_min
    t = np.arange(config.steps + 1, dtype=np.float64)
    if config.kind == "linear":
        alphas = 1.0 - (1.0 - floor) * t / config.steps
    else:
        alphas = np.array(
            [max(cosine_alpha(int(step), config.steps, config.cosine_offset), floor) for step in t]
        )
    alphas[0] = 1.0

    try:
        return NoiseSchedule(alphas=alphas, sigmas=np.zeros_like(alphas))
    except ValueError as error:
        raise ConfigError(
            f"Schedule parameters produce a non-monotone schedule ({config.kind}, T={config.steps}, "
            f"alpha_min={floor}): {error}"
        ) from error
