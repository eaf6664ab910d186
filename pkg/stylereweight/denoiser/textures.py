from typing import List, Optional, Sequence

import numpy as np

from stylereweight.errors import ConfigError
from stylereweight.numerics.random import TEXTURE_STREAM, make_rng

TEXTURE_KINDS = ("stripes", "dots", "gaussian-blobs")


def stripes(size: int, period: int, phase: float = 0.0, vertical: bool = False) -> np.ndarray:
    """Cosine stripes in [0, 1] that repeat every `period` pixels."""
    coordinate = np.arange(size, dtype=np.float64) + phase
    profile = 0.5 + 0.5 * np.cos(2.0 * np.pi * coordinate / period)
    image = np.tile(profile[None, :], (size, 1)) if vertical else np.tile(profile[:, None], (1, size))
    return image[:, :, None]


def dots(size: int, rng: np.random.Generator, count: int = 6, radius: float = 1.0) -> np.ndarray:
    rows, cols = np.indices((size, size), dtype=np.float64)
    image = np.full((size, size), 0.1)
    for center in rng.uniform(0, size, size=(count, 2)):
        bump = 0.8 * np.exp(-((rows - center[0]) ** 2 + (cols - center[1]) ** 2) / (2.0 * radius**2))
        image = np.maximum(image, 0.1 + bump)
    return np.clip(image, 0.0, 1.0)[:, :, None]


def gaussian_blobs(size: int, rng: np.random.Generator, count: int = 3) -> np.ndarray:
    rows, cols = np.indices((size, size), dtype=np.float64)
    image = np.zeros((size, size))
    for center, amplitude in zip(rng.uniform(0, size, size=(count, 2)), rng.uniform(0.4, 1.0, size=count)):
        image += amplitude * np.exp(-((rows - center[0]) ** 2 + (cols - center[1]) ** 2) / (2.0 * (size / 6) ** 2))
    return (image / image.max())[:, :, None]


def make_texture_dataset(
    kinds: Sequence[str] = TEXTURE_KINDS,
    n: int = 8,
    size: int = 16,
    seed: int = 0,
    stripe_period: int = 4,
    patch_size: Optional[int] = None,
) -> List[np.ndarray]:
    """
    Procedural grayscale textures of shape (size, size, 1) with values in [0, 1].

    Parameters:
    - kinds: texture kinds, cycled in order to fill n images
    - n: number of images
    - size: image side in pixels
    - seed: seed for orientations, phases and placements
    - stripe_period: period of the stripes in pixels
    - patch_size: when given, size must be divisible by it

    Returns:
    - list of n images
    """
    unknown = sorted(set(kinds) - set(TEXTURE_KINDS))
    if unknown:
        raise ConfigError(f"Unknown texture kinds {unknown}; choose from {list(TEXTURE_KINDS)}.")
    if patch_size is not None and size % patch_size:
        raise ConfigError(f"Texture size {size} is not divisible by patch size {patch_size}.")
    if n and not kinds:
        raise ConfigError("At least one texture kind is required.")

    rng = make_rng(seed, TEXTURE_STREAM)
    images = []
    for index in range(n):
        kind = kinds[index % len(kinds)]
        if kind == "stripes":
            image = stripes(size, stripe_period, phase=float(rng.integers(stripe_period)), vertical=bool(rng.integers(2)))
        elif kind == "dots":
            image = dots(size, rng)
        else:
            image = gaussian_blobs(size, rng)
        images.append(image)
    return images


def make_translating_stripes_clip(frames: int = 4, size: int = 16, period: int = 8, shift: float = 1.0) -> List[np.ndarray]:
    """Vertical stripes moving `shift` pixels per frame."""
    return [stripes(size, period, phase=index * shift, vertical=True) for index in range(frames)]
