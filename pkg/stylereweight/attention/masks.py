import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from stylereweight.errors import DimensionError
from stylereweight.numerics.linalg import MASK_SENTINEL


class StyleMask(BaseModel):
    """
    Additive offsets applied to style logits before the softmax.

    An offset of 0 leaves a style token fully available, the sentinel removes it, and values in
    between come from a linear ramp in logit space. Offsets are stored either per style token
    (shape (M,), broadcast over every content query) or per (query, style token) pair (N, M).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)
    offsets: np.ndarray

    @model_validator(mode="after")
    def validate_offsets(self):
        if self.offsets.ndim not in (1, 2):
            raise ValueError(f"Mask offsets must be rank 1 or 2, got shape {self.offsets.shape}.")
        if np.any(self.offsets > 0) or np.any(self.offsets < MASK_SENTINEL):
            raise ValueError(f"Mask offsets must lie in [{MASK_SENTINEL}, 0].")
        return self

    @classmethod
    def from_gains(cls, gains: np.ndarray, ramp_floor: float = MASK_SENTINEL) -> "StyleMask":
        """
        Parameters:
        - gains: per style token (or per pair) value in [0, 1]; 1 is inside the region,
          0 is outside, anything between is on the ramp
        - ramp_floor: the offset reached at gain 0
        """
        gains = np.asarray(gains, dtype=np.float64)
        if np.any(gains < 0) or np.any(gains > 1):
            raise ValueError("Mask gains must lie in [0, 1].")
        if not MASK_SENTINEL <= ramp_floor < 0:
            raise ValueError(f"ramp_floor must lie in [{MASK_SENTINEL}, 0), got {ramp_floor}.")
        return cls(offsets=(1.0 - gains) * ramp_floor)

    @classmethod
    def from_pairs(cls, allowed: np.ndarray) -> "StyleMask":
        allowed = np.asarray(allowed, dtype=bool)
        if allowed.ndim != 2:
            raise ValueError(f"A pair mask must be rank 2, got shape {allowed.shape}.")
        return cls.from_gains(allowed.astype(np.float64))

    @classmethod
    def from_region(cls, region: np.ndarray, ramp_width: float = 0.0, ramp_floor: float = MASK_SENTINEL) -> "StyleMask":
        """
        Builds per-token offsets from a boolean region on the style token grid.

        Tokens inside the region get gain 1. Outside, the gain falls linearly with the
        Euclidean grid distance d to the nearest region token, 1 - d / (ramp_width + 1), and is
        clipped at 0; ramp_width 0 gives a hard edge.

        Parameters:
        - region: boolean array (grid_height, grid_width), row-major token order
        - ramp_width: width of the ramp band in tokens
        - ramp_floor: offset at gain 0
        """
        region = np.asarray(region, dtype=bool)
        if region.ndim != 2:
            raise ValueError(f"A region must be a 2-D token grid, got shape {region.shape}.")
        if ramp_width < 0:
            raise ValueError(f"ramp_width must be non-negative, got {ramp_width}.")

        gains = np.zeros(region.shape, dtype=np.float64)
        inside = np.argwhere(region)
        if inside.size:
            grid = np.indices(region.shape).reshape(2, -1).T
            distances = np.sqrt(((grid[:, None, :] - inside[None, :, :]) ** 2).sum(axis=-1)).min(axis=1)
            if ramp_width > 0:
                gains = np.clip(1.0 - distances / (ramp_width + 1.0), 0.0, 1.0)
            else:
                gains = (distances == 0).astype(np.float64)
            gains = gains.reshape(region.shape)
        return cls.from_gains(gains.ravel(), ramp_floor=ramp_floor)

    def offsets_for(self, num_queries: int, num_style_tokens: int) -> np.ndarray:
        """Offsets broadcast to (num_queries, num_style_tokens)."""
        if self.offsets.shape[-1] != num_style_tokens:
            raise DimensionError(
                f"Mask covers {self.offsets.shape[-1]} style tokens, attention has {num_style_tokens}."
            )
        if self.offsets.ndim == 2 and self.offsets.shape[0] != num_queries:
            raise DimensionError(
                f"Pair mask covers {self.offsets.shape[0]} queries, attention has {num_queries}."
            )
        return np.broadcast_to(self.offsets, (num_queries, num_style_tokens))
