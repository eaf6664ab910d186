import functools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from stylereweight.denoiser.config import ToyDenoiserConfig
from stylereweight.denoiser.taps import AttentionOverride, FeatureTaps
from stylereweight.denoiser.weights import BlockWeights, ToyDenoiserWeights
from stylereweight.diffusion.denoisers import DenoiserContract
from stylereweight.errors import ConfigError, ContractError, DomainError
from stylereweight.attention.kernels import scaled_logits
from stylereweight.numerics.linalg import softmax_rows


def patchify(image: np.ndarray, patch_size: int) -> np.ndarray:
    """(H, W, C) image -> (num_tokens, patch_size * patch_size * C) tokens, row-major over the patch grid."""
    height, width, channels = image.shape
    if height % patch_size or width % patch_size:
        raise ConfigError(f"Image extents {height}x{width} are not divisible by patch size {patch_size}.")
    grid = image.reshape(height // patch_size, patch_size, width // patch_size, patch_size, channels)
    return grid.transpose(0, 2, 1, 3, 4).reshape(-1, patch_size * patch_size * channels)


def unpatchify(tokens: np.ndarray, patch_size: int, height: int, width: int, channels: int) -> np.ndarray:
    grid = tokens.reshape(height // patch_size, width // patch_size, patch_size, patch_size, channels)
    return grid.transpose(0, 2, 1, 3, 4).reshape(height, width, channels)


@dataclass
class _BlockCache:
    h: np.ndarray
    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    weights: np.ndarray
    o: np.ndarray
    h_mid: np.ndarray
    u: np.ndarray
    r: np.ndarray


@dataclass
class ToyDenoiser:
    """
    Attention-block noise predictor hosting the style injection at desk scale.

    Each block runs single-head self-attention with a residual output projection, then a
    residual ReLU MLP. Blocks can expose their Q/K/V through a FeatureTaps sink and can have
    their self-attention replaced by an AttentionOverride.
    """

    config: ToyDenoiserConfig
    weights: ToyDenoiserWeights
    loss_history: List[float] = field(default_factory=list)

    def _check_input(self, x_t: np.ndarray, t: int) -> None:
        config = self.config
        if x_t.ndim != 3:
            raise ConfigError(f"Expected an (H, W, C) image, got shape {x_t.shape}.")
        height, width, channels = x_t.shape
        if height % config.patch_size or width % config.patch_size:
            raise ConfigError(
                f"Image extents {height}x{width} are not divisible by patch size {config.patch_size}."
            )
        if (height, width, channels) != (config.image_size, config.image_size, config.channels):
            raise ConfigError(
                f"This denoiser was built for {config.image_size}x{config.image_size}x{config.channels} "
                f"images, got {height}x{width}x{channels}."
            )
        if not 0 <= t <= config.steps:
            raise DomainError(f"Step {t} is outside [0, {config.steps}].")

    def _block(
        self,
        index: int,
        block: BlockWeights,
        h: np.ndarray,
        t: int,
        override: Optional[AttentionOverride],
        taps: Optional[FeatureTaps],
    ) -> Tuple[np.ndarray, _BlockCache]:
        q, k, v = h @ block.wq, h @ block.wk, h @ block.wv
        attention_weights = None
        if override is None:
            attention_weights = softmax_rows(scaled_logits(q, k))
            o = attention_weights @ v
        else:
            o = np.asarray(override(q, k, v), dtype=np.float64)
            if o.shape != v.shape:
                raise ContractError(
                    f"Override for block {index} returned shape {o.shape}, expected {v.shape}."
                )
        if taps is not None and taps.wants(index):
            taps.record(t, index, q, k, v, o)

        h_mid = h + o @ block.wo
        u = h_mid @ block.w1 + block.b1
        r = np.maximum(u, 0.0)
        h_out = h_mid + r @ block.w2 + block.b2
        return h_out, _BlockCache(h=h, q=q, k=k, v=v, weights=attention_weights, o=o, h_mid=h_mid, u=u, r=r)

    def _run(
        self,
        x_t: np.ndarray,
        t: int,
        overrides: Optional[Dict[int, AttentionOverride]],
        taps: Optional[FeatureTaps],
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, List[_BlockCache]]:
        x_t = np.asarray(x_t, dtype=np.float64)
        self._check_input(x_t, t)
        overrides = overrides or {}
        unknown = sorted(set(overrides) - set(range(self.config.depth)))
        if unknown:
            raise ContractError(f"Overrides name blocks {unknown}, the denoiser has {self.config.depth}.")

        weights = self.weights
        patches = patchify(x_t, self.config.patch_size)
        h = patches @ weights.w_in + weights.b_in + weights.positions + weights.time_embedding[t]
        caches = []
        for index, block in enumerate(weights.blocks):
            h, cache = self._block(index, block, h, t, overrides.get(index), taps)
            caches.append(cache)
        eps_tokens = h @ weights.w_out + weights.b_out
        return patches, h, eps_tokens, caches

    def forward(
        self,
        x_t: np.ndarray,
        t: int,
        overrides: Optional[Dict[int, AttentionOverride]] = None,
        taps: Optional[FeatureTaps] = None,
    ) -> np.ndarray:
        """
        Predicts the noise in x_t.

        Parameters:
        - x_t: noisy image of shape (H, W, C)
        - t: diffusion step
        - overrides: block index -> replacement for that block's self-attention
        - taps: sink that records Q/K/V (and the attention output) of the blocks it wants

        Returns:
        - eps_hat with the shape of x_t
        """
        _, _, eps_tokens, _ = self._run(x_t, t, overrides, taps)
        height, width, channels = np.shape(x_t)
        return unpatchify(eps_tokens, self.config.patch_size, height, width, channels)

    __call__ = forward

    def as_contract(
        self,
        overrides: Optional[Dict[int, AttentionOverride]] = None,
        taps: Optional[FeatureTaps] = None,
    ) -> DenoiserContract:
        """Binds overrides and a taps sink, leaving the (x_t, t) denoiser contract."""
        return functools.partial(self.forward, overrides=overrides, taps=taps)

    def loss_and_gradients(self, x_t: np.ndarray, t: int, noise: np.ndarray) -> Tuple[float, ToyDenoiserWeights]:
        """
        Mean squared noise-prediction error and its gradient with respect to every weight.

        Parameters:
        - x_t: noisy image (H, W, C)
        - t: diffusion step of x_t
        - noise: the noise that produced x_t

        Returns:
        - (loss, gradients laid out like the weights)
        """
        patches, h_last, eps_tokens, caches = self._run(x_t, t, None, None)
        target = patchify(np.asarray(noise, dtype=np.float64), self.config.patch_size)
        residual = eps_tokens - target
        loss = float(np.mean(residual**2))

        weights = self.weights
        grads = weights.zeros_like()
        d_eps = 2.0 * residual / residual.size
        grads.w_out = h_last.T @ d_eps
        grads.b_out = d_eps.sum(axis=0)
        dh = d_eps @ weights.w_out.T

        scale = 1.0 / math.sqrt(self.config.embed_dim)
        for index in reversed(range(self.config.depth)):
            block, cache, block_grads = weights.blocks[index], caches[index], grads.blocks[index]

            block_grads.w2 = cache.r.T @ dh
            block_grads.b2 = dh.sum(axis=0)
            du = (dh @ block.w2.T) * (cache.u > 0)
            block_grads.w1 = cache.h_mid.T @ du
            block_grads.b1 = du.sum(axis=0)
            dh_mid = dh + du @ block.w1.T

            block_grads.wo = cache.o.T @ dh_mid
            do = dh_mid @ block.wo.T
            d_attention = do @ cache.v.T
            dv = cache.weights.T @ do
            d_logits = cache.weights * (d_attention - (d_attention * cache.weights).sum(axis=1, keepdims=True))
            d_logits *= scale
            dq = d_logits @ cache.k
            dk = d_logits.T @ cache.q

            block_grads.wq = cache.h.T @ dq
            block_grads.wk = cache.h.T @ dk
            block_grads.wv = cache.h.T @ dv
            dh = dh_mid + dq @ block.wq.T + dk @ block.wk.T + dv @ block.wv.T

        grads.w_in = patches.T @ dh
        grads.b_in = dh.sum(axis=0)
        grads.positions = dh.copy()
        grads.time_embedding[t] = dh.sum(axis=0)
        return loss, grads
