from typing import Optional

from stylereweight.denoiser.config import ToyDenoiserConfig
from stylereweight.denoiser.toy_denoiser import ToyDenoiser
from stylereweight.denoiser.weights import ToyDenoiserWeights, initialize_weights, zero_weights


class ToyDenoiserBuilder:
    def __init__(self):
        self.settings = {}
        self.seed: Optional[int] = None
        self.weights: Optional[ToyDenoiserWeights] = None
        self.zero = False

    def with_image(self, image_size: int, channels: int = 1):
        self.settings.update(image_size=image_size, channels=channels)
        return self

    def with_patch_size(self, patch_size: int):
        self.settings["patch_size"] = patch_size
        return self

    def with_blocks(self, depth: int, embed_dim: int, mlp_ratio: int = 2):
        self.settings.update(depth=depth, embed_dim=embed_dim, mlp_ratio=mlp_ratio)
        return self

    def with_steps(self, steps: int):
        self.settings["steps"] = steps
        return self

    def with_seed(self, seed: int):
        self.seed = seed
        return self

    def with_zero_weights(self):
        self.zero = True
        return self

    def with_weights(self, weights: ToyDenoiserWeights):
        self.weights = weights
        return self

    def build(self) -> ToyDenoiser:
        config = ToyDenoiserConfig(**self.settings)
        if self.weights is not None:
            weights = self.weights
        elif self.zero:
            weights = zero_weights(config)
        else:
            if self.seed is None:
                raise ValueError("A seed must be set before building randomly initialized weights.")
            weights = initialize_weights(config, self.seed)
        return ToyDenoiser(config=config, weights=weights)
