import numpy as np
import pytest

from stylereweight.create_engine import create_trained_toy_denoiser
from stylereweight.denoiser.builder import ToyDenoiserBuilder
from stylereweight.denoiser.textures import make_texture_dataset
from stylereweight.diffusion.schedule import make_schedule
from stylereweight.presets.preset_info import DeskScalePresetInfo


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def schedule():
    return make_schedule(30)


@pytest.fixture(scope="session")
def small_schedule():
    return make_schedule(6)


@pytest.fixture(scope="session")
def small_denoiser():
    """Untrained 8x8 denoiser over 6 steps; enough for identities that hold for any weights."""
    return (ToyDenoiserBuilder()
            .with_image(8)
            .with_patch_size(4)
            .with_blocks(2, 8)
            .with_steps(6)
            .with_seed(7)
            .build()
    )


@pytest.fixture(scope="session")
def untrained_denoiser():
    return (ToyDenoiserBuilder()
            .with_image(16)
            .with_patch_size(4)
            .with_blocks(4, 32)
            .with_steps(30)
            .with_seed(3)
            .build()
    )


@pytest.fixture(scope="session")
def trained_denoiser():
    return create_trained_toy_denoiser(DeskScalePresetInfo)


@pytest.fixture(scope="session")
def texture_pairs():
    contents = make_texture_dataset(["stripes"], 8, 16, seed=11)
    styles = make_texture_dataset(["dots"], 8, 16, seed=12)
    return list(zip(contents, styles))
