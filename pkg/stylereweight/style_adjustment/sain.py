import logging
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, model_validator

from stylereweight.errors import DimensionError, DomainError
from stylereweight.numerics.linalg import require_rank
from stylereweight.numerics.statistics import channel_moments, histogram_pdf, joint_range, kl_divergence

logger = logging.getLogger(__name__)

SainSign = Literal["prose", "printed"]


class ScaleWeight(BaseModel):
    """
    How far the content mean is moved toward the style mean, derived from the KL divergence
    between the two value distributions.

    The "prose" sign gives w = exp(-KL), in (0, 1] and smaller for more different inputs. The
    "printed" sign gives w = exp(+KL) and is kept for comparison only.
    """

    w: float
    kl: float
    sign: SainSign = "prose"

    @model_validator(mode="after")
    def validate_weight(self):
        if self.kl < 0:
            raise ValueError(f"KL divergence must be non-negative, got {self.kl}.")
        exponent = -self.kl if self.sign == "prose" else self.kl
        if abs(self.w - math.exp(exponent)) > 1e-12 * max(1.0, abs(self.w)):
            raise ValueError(f"w={self.w} does not equal exp({exponent}).")
        return self

    @classmethod
    def from_kl(cls, kl: float, sign: SainSign = "prose") -> "ScaleWeight":
        exponent = -kl if sign == "prose" else kl
        return cls(w=math.exp(exponent), kl=kl, sign=sign)


def _checked_pair(f_c: np.ndarray, f_s: np.ndarray):
    f_c = np.asarray(f_c, dtype=np.float64)
    f_s = np.asarray(f_s, dtype=np.float64)
    require_rank(f_c, 2, "Content features")
    require_rank(f_s, 2, "Style features")
    if f_c.shape[0] == 0 or f_s.shape[0] == 0:
        raise DomainError("Mean adjustment needs non-empty content and style features.")
    if f_c.shape[1] != f_s.shape[1]:
        raise DimensionError(
            f"Content has {f_c.shape[1]} channels but style has {f_s.shape[1]}."
        )
    return f_c, f_s


def mean_adjust(f_c: np.ndarray, f_s: np.ndarray) -> np.ndarray:
    """Replaces each channel mean of the content features with the style's: f_c - mu_c + mu_s."""
    f_c, f_s = _checked_pair(f_c, f_s)
    return f_c - channel_moments(f_c).mean + channel_moments(f_s).mean


def scale_weight(f_c: np.ndarray, f_s: np.ndarray, bins: int = 32, sign: SainSign = "prose") -> ScaleWeight:
    """
    Parameters:
    - f_c, f_s: content and style features; all values are pooled into one histogram each
    - bins: histogram bins over the joint min/max range of both inputs
    - sign: "prose" for exp(-KL), "printed" for exp(+KL)

    Returns:
    - ScaleWeight from KL(p(f_s) || q(f_c))
    """
    f_c = np.asarray(f_c, dtype=np.float64)
    f_s = np.asarray(f_s, dtype=np.float64)
    if f_c.size == 0 or f_s.size == 0:
        raise DomainError("Scale weight needs non-empty content and style features.")
    value_range = joint_range(f_c, f_s)
    p_style = histogram_pdf(f_s, bins=bins, value_range=value_range)
    q_content = histogram_pdf(f_c, bins=bins, value_range=value_range)
    weight = ScaleWeight.from_kl(kl_divergence(p_style, q_content), sign=sign)
    logger.debug(f"SAIN scale weight w={weight.w:.6f} from KL={weight.kl:.6f} ({sign} sign)")
    return weight


def sain(f_c: np.ndarray, f_s: np.ndarray, weight: ScaleWeight) -> np.ndarray:
    """Scaled adaptive instance normalization: f_c - mu_c * w + mu_s * w, per channel."""
    f_c, f_s = _checked_pair(f_c, f_s)
    w = weight.w
    return f_c - channel_moments(f_c).mean * w + channel_moments(f_s).mean * w
