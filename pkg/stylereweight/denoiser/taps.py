from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Optional, Tuple

import numpy as np

from stylereweight.attention.kernels import AttentionInputs

# Replacement for one block's self-attention: (Q, K, V) -> output of shape (N, d).
AttentionOverride = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class AttentionTap:
    inputs: AttentionInputs
    output: np.ndarray

    @property
    def query(self) -> np.ndarray:
        return self.inputs.query

    @property
    def key(self) -> np.ndarray:
        return self.inputs.key

    @property
    def value(self) -> np.ndarray:
        return self.inputs.value


class FeatureTaps:
    """
    Sink for the Q/K/V of attention blocks, keyed by (step, block).

    A later forward call at the same (step, block) replaces the earlier entry.
    """

    def __init__(self, blocks: Optional[Iterable[int]] = None):
        self.blocks = None if blocks is None else frozenset(blocks)
        self._taps: Dict[Tuple[int, int], AttentionTap] = {}

    def wants(self, block: int) -> bool:
        return self.blocks is None or block in self.blocks

    def record(self, t: int, block: int, query: np.ndarray, key: np.ndarray, value: np.ndarray, output: np.ndarray) -> None:
        self._taps[(t, block)] = AttentionTap(inputs=AttentionInputs(query, key, value), output=output)

    def get(self, t: int, block: int) -> AttentionTap:
        try:
            return self._taps[(t, block)]
        except KeyError:
            raise KeyError(f"No tap recorded for step {t}, block {block}.") from None

    def __contains__(self, key: Tuple[int, int]) -> bool:
        return key in self._taps

    def __len__(self) -> int:
        return len(self._taps)

    def keys(self):
        return self._taps.keys()
