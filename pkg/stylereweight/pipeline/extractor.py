from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from stylereweight.numerics.linalg import require_rank
from stylereweight.numerics.random import EXTRACTOR_STREAM, make_rng

STAGE_CHANNELS = (8, 16, 16, 32, 32)
KERNEL_SIZE = 3


def conv2d(image: np.ndarray, kernel: np.ndarray, bias: np.ndarray, stride: int = 1) -> np.ndarray:
    """
    Zero-padded 3x3 convolution.

    Parameters:
    - image: (H, W, C_in)
    - kernel: (3, 3, C_in, C_out)
    - bias: (C_out,)
    - stride: output keeps every stride-th position, so each extent becomes ceil(extent / stride)

    Returns:
    - (ceil(H / stride), ceil(W / stride), C_out)
    """
    pad = KERNEL_SIZE // 2
    padded = np.pad(image, ((pad, pad), (pad, pad), (0, 0)))
    windows = sliding_window_view(padded, (KERNEL_SIZE, KERNEL_SIZE), axis=(0, 1))[::stride, ::stride]
    return np.einsum("hwcij,ijco->hwo", windows, kernel) + bias


@dataclass(frozen=True)
class ConvFeatureExtractor:
    """Fixed random five-stage convolution stack with tanh activations; stages after the first halve the extent."""

    kernels: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]

    def __call__(self, image: np.ndarray) -> List[np.ndarray]:
        features = np.asarray(image, dtype=np.float64)
        require_rank(features, 3, "Image")
        stages = []
        for index, (kernel, bias) in enumerate(zip(self.kernels, self.biases)):
            features = np.tanh(conv2d(features, kernel, bias, stride=1 if index == 0 else 2))
            stages.append(features)
        return stages


def deterministic_extractor(seed: int = 0, channels: int = 1, stage_channels: Sequence[int] = STAGE_CHANNELS) -> ConvFeatureExtractor:
    rng = make_rng(seed, EXTRACTOR_STREAM)
    kernels, biases = [], []
    fan_in_channels = channels
    for out_channels in stage_channels:
        fan_in = KERNEL_SIZE * KERNEL_SIZE * fan_in_channels
        kernels.append(rng.standard_normal((KERNEL_SIZE, KERNEL_SIZE, fan_in_channels, out_channels)) / np.sqrt(fan_in))
        biases.append(0.1 * rng.standard_normal(out_channels))
        fan_in_channels = out_channels
    return ConvFeatureExtractor(kernels=tuple(kernels), biases=tuple(biases))
