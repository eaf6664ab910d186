from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from stylereweight.attention.kernels import attend
from stylereweight.denoiser.taps import FeatureTaps
from stylereweight.errors import ContractError


@dataclass(frozen=True)
class FrameContext:
    """Keys and values of the anchor frame and the previous frame at one (step, block)."""

    key_anchor: np.ndarray
    value_anchor: np.ndarray
    key_previous: np.ndarray
    value_previous: np.ndarray

    def __post_init__(self):
        if self.key_anchor.shape != self.key_previous.shape or self.value_anchor.shape != self.value_previous.shape:
            raise ContractError(
                f"Anchor taps {self.key_anchor.shape}/{self.value_anchor.shape} and previous-frame taps "
                f"{self.key_previous.shape}/{self.value_previous.shape} differ in shape."
            )

    def check_against(self, key: np.ndarray, value: np.ndarray) -> None:
        if self.key_anchor.shape != key.shape or self.value_anchor.shape != value.shape:
            raise ContractError(
                f"Frame context taps {self.key_anchor.shape}/{self.value_anchor.shape} do not match the "
                f"current frame's {key.shape}/{value.shape}."
            )

    @property
    def keys(self) -> np.ndarray:
        return np.concatenate([self.key_anchor, self.key_previous], axis=0)

    @property
    def values(self) -> np.ndarray:
        return np.concatenate([self.value_anchor, self.value_previous], axis=0)


def interframe_attend(query: np.ndarray, key: np.ndarray, value: np.ndarray, context: FrameContext) -> np.ndarray:
    """
    Attention of the current frame's queries over the anchor and previous frames.

    The current frame's own keys and values are replaced, not extended: they only fix the
    shapes the context must have.
    """
    context.check_against(key, value)
    return attend(query, context.keys, context.values)


@dataclass
class FrameMemory:
    """What frame i reads from frames 0 and i-1: their content taps and the previous frame's x0 predictions."""

    anchor: FeatureTaps
    previous: FeatureTaps
    previous_x0: Dict[int, np.ndarray] = field(default_factory=dict)

    def context(self, t: int, block: int) -> FrameContext:
        try:
            anchor = self.anchor.get(t, block)
            previous = self.previous.get(t, block)
        except KeyError as error:
            raise ContractError(f"Frame memory is incomplete: {error.args[0]}") from None
        return FrameContext(
            key_anchor=anchor.key,
            value_anchor=anchor.value,
            key_previous=previous.key,
            value_previous=previous.value,
        )

    def previous_prediction(self, t: int) -> Optional[np.ndarray]:
        return self.previous_x0.get(t)
