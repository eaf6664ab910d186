from dataclasses import dataclass, fields
from typing import Callable, List, Tuple

import numpy as np

from stylereweight.denoiser.config import ToyDenoiserConfig
from stylereweight.numerics.random import INIT_STREAM, make_rng


@dataclass
class BlockWeights:
    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    wo: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def named_arrays(self) -> List[Tuple[str, np.ndarray]]:
        return [(field.name, getattr(self, field.name)) for field in fields(self)]

    def map(self, function: Callable[[np.ndarray], np.ndarray]) -> "BlockWeights":
        return BlockWeights(**{name: function(array) for name, array in self.named_arrays()})


@dataclass
class ToyDenoiserWeights:
    w_in: np.ndarray
    b_in: np.ndarray
    positions: np.ndarray
    time_embedding: np.ndarray
    blocks: List[BlockWeights]
    w_out: np.ndarray
    b_out: np.ndarray

    def named_arrays(self) -> List[Tuple[str, np.ndarray]]:
        """Every parameter array with a stable dotted name, in serialization order."""
        named = [
            ("w_in", self.w_in),
            ("b_in", self.b_in),
            ("positions", self.positions),
            ("time_embedding", self.time_embedding),
        ]
        for index, block in enumerate(self.blocks):
            named.extend((f"blocks.{index}.{name}", array) for name, array in block.named_arrays())
        named.extend([("w_out", self.w_out), ("b_out", self.b_out)])
        return named

    def map(self, function: Callable[[np.ndarray], np.ndarray]) -> "ToyDenoiserWeights":
        return ToyDenoiserWeights(
            w_in=function(self.w_in),
            b_in=function(self.b_in),
            positions=function(self.positions),
            time_embedding=function(self.time_embedding),
            blocks=[block.map(function) for block in self.blocks],
            w_out=function(self.w_out),
            b_out=function(self.b_out),
        )

    def copy(self) -> "ToyDenoiserWeights":
        return self.map(np.copy)

    def zeros_like(self) -> "ToyDenoiserWeights":
        return self.map(np.zeros_like)

    @property
    def num_parameters(self) -> int:
        return sum(array.size for _, array in self.named_arrays())


def zero_weights(config: ToyDenoiserConfig) -> ToyDenoiserWeights:
    d, hidden = config.embed_dim, config.hidden_dim
    return ToyDenoiserWeights(
        w_in=np.zeros((config.patch_dim, d)),
        b_in=np.zeros(d),
        positions=np.zeros((config.num_tokens, d)),
        time_embedding=np.zeros((config.steps + 1, d)),
        blocks=[
            BlockWeights(
                wq=np.zeros((d, d)),
                wk=np.zeros((d, d)),
                wv=np.zeros((d, d)),
                wo=np.zeros((d, d)),
                w1=np.zeros((d, hidden)),
                b1=np.zeros(hidden),
                w2=np.zeros((hidden, d)),
                b2=np.zeros(d),
            )
            for _ in range(config.depth)
        ],
        w_out=np.zeros((d, config.patch_dim)),
        b_out=np.zeros(config.patch_dim),
    )


def initialize_weights(config: ToyDenoiserConfig, seed: int) -> ToyDenoiserWeights:
    """
    Random initialization scaled by fan-in. Residual branch outputs (wo, w2) start at half
    scale so the residual stream stays bounded without normalization layers.
    """
    rng = make_rng(seed, INIT_STREAM)
    d, hidden = config.embed_dim, config.hidden_dim

    def normal(shape, fan_in, gain=1.0):
        return rng.standard_normal(shape) * gain / np.sqrt(fan_in)

    weights = zero_weights(config)
    weights.w_in = normal((config.patch_dim, d), config.patch_dim)
    weights.positions = rng.standard_normal((config.num_tokens, d)) * 0.1
    weights.time_embedding = rng.standard_normal((config.steps + 1, d)) * 0.1
    for block in weights.blocks:
        block.wq = normal((d, d), d)
        block.wk = normal((d, d), d)
        block.wv = normal((d, d), d)
        block.wo = normal((d, d), d, gain=0.5)
        block.w1 = normal((d, hidden), d)
        block.w2 = normal((hidden, d), hidden, gain=0.5)
    weights.w_out = normal((d, config.patch_dim), d)
    return weights
