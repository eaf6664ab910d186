import logging
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from stylereweight.denoiser.builder import ToyDenoiserBuilder
from stylereweight.denoiser.config import ToyDenoiserConfig
from stylereweight.denoiser.toy_denoiser import ToyDenoiser
from stylereweight.diffusion.ddim import forward_noise
from stylereweight.diffusion.schedule import NoiseSchedule
from stylereweight.errors import ConfigError, DomainError, TrainingError
from stylereweight.numerics.random import TRAINING_STREAM, make_rng

logger = logging.getLogger(__name__)


class TrainingConfig(BaseModel):
    epochs: int = Field(default=200, ge=1)
    lr: float = Field(default=0.05, ge=0.0)
    seed: int = Field(default=0, ge=0)


def sgd_update(denoiser: ToyDenoiser, gradients, lr: float) -> None:
    for (_, parameter), (_, gradient) in zip(denoiser.weights.named_arrays(), gradients.named_arrays()):
        parameter -= lr * gradient


def train(
    dataset: Sequence[np.ndarray],
    schedule: NoiseSchedule,
    epochs: int = 200,
    lr: float = 0.05,
    seed: int = 0,
    denoiser: Optional[ToyDenoiser] = None,
    config: Optional[ToyDenoiserConfig] = None,
) -> ToyDenoiser:
    """
    Fits a toy denoiser by plain SGD on the noise-prediction mean squared error.

    Each epoch visits the dataset once in a seeded random order; every image gets a random
    step t in [1, T] and fresh Gaussian noise.

    Parameters:
    - dataset: images of shape (H, W, C)
    - schedule: noise schedule; its T must match the denoiser's time embedding
    - epochs, lr, seed: training settings
    - denoiser: starting point, copied and left untouched; a fresh one is built from config
      (or from the dataset's image shape) when omitted
    - config: architecture for a fresh denoiser

    Returns:
    - the trained denoiser, with the per-epoch mean loss in loss_history
    """
    settings = TrainingConfig(epochs=epochs, lr=lr, seed=seed)
    if not dataset:
        raise DomainError("Cannot train on an empty dataset.")

    if denoiser is None:
        if config is None:
            height, _, channels = dataset[0].shape
            config = ToyDenoiserConfig(image_size=height, channels=channels, steps=schedule.steps)
        denoiser = (ToyDenoiserBuilder()
                    .with_image(config.image_size, config.channels)
                    .with_patch_size(config.patch_size)
                    .with_blocks(config.depth, config.embed_dim, config.mlp_ratio)
                    .with_steps(config.steps)
                    .with_seed(settings.seed)
                    .build()
        )
    else:
        denoiser = ToyDenoiser(config=denoiser.config, weights=denoiser.weights.copy(), loss_history=list(denoiser.loss_history))
    if denoiser.config.steps != schedule.steps:
        raise ConfigError(
            f"Denoiser has a time embedding for T={denoiser.config.steps}, schedule has T={schedule.steps}."
        )

    rng = make_rng(settings.seed, TRAINING_STREAM)
    images = [np.asarray(image, dtype=np.float64) for image in dataset]
    history: List[float] = []
    for epoch in range(settings.epochs):
        losses = []
        for index in rng.permutation(len(images)):
            x0 = images[index]
            t = int(rng.integers(1, schedule.steps + 1))
            noise = rng.standard_normal(x0.shape)
            with np.errstate(over="ignore", invalid="ignore"):
                try:
                    loss, gradients = denoiser.loss_and_gradients(forward_noise(x0, t, noise, schedule), t, noise)
                except DomainError as error:
                    raise TrainingError(f"Training diverged: {error}", epoch=epoch) from error
            if not np.isfinite(loss):
                raise TrainingError("Training loss diverged", epoch=epoch)
            sgd_update(denoiser, gradients, settings.lr)
            losses.append(loss)
        history.append(float(np.mean(losses)))
        logger.debug(f"epoch {epoch}: mean noise MSE {history[-1]:.6f}")

    denoiser.loss_history.extend(history)
    logger.info(
        f"Trained toy denoiser for {settings.epochs} epochs on {len(images)} images: "
        f"loss {history[0]:.4f} -> {history[-1]:.4f} (best {min(history):.4f})"
    )
    return denoiser
