from typing import Optional, Type

from stylereweight.attention.masks import StyleMask
from stylereweight.denoiser.builder import ToyDenoiserBuilder
from stylereweight.denoiser.textures import make_texture_dataset
from stylereweight.denoiser.toy_denoiser import ToyDenoiser
from stylereweight.denoiser.training import train
from stylereweight.diffusion.schedule import NoiseSchedule, make_schedule
from stylereweight.pipeline.injection_config import InjectionConfig, InjectionConfigBuilder
from stylereweight.presets.preset_info import DeskScalePresetInfo, PresetInfo, ReferencePresetInfo


def create_reference_injection_config(mask: Optional[StyleMask] = None) -> InjectionConfig:
    return create_injection_config_from_this_preset(ReferencePresetInfo, mask=mask)


def create_desk_scale_denoiser() -> ToyDenoiser:
    """
    Trains the toy denoiser of the desk-scale preset.
    Returns:
    - A ToyDenoiser trained on the preset's procedural textures
    """
    return create_trained_toy_denoiser(DeskScalePresetInfo)


def create_schedule_from_this_preset(preset: Type[PresetInfo]) -> NoiseSchedule:
    return make_schedule(preset.steps, kind=preset.schedule_kind)


def create_injection_config_from_this_preset(preset: Type[PresetInfo], mask: Optional[StyleMask] = None) -> InjectionConfig:
    builder = (InjectionConfigBuilder()
               .with_style_scale(preset.style_scale)
               .with_step_window(*preset.step_window)
               .with_sain(preset.sain)
               .with_inversion_refinements(preset.inversion_refinements)
    )
    if preset.block_set is not None:
        builder.with_blocks(*preset.block_set)
    if preset.clip_range is not None:
        builder.with_clipping(*preset.clip_range)
    if mask is not None:
        builder.with_mask(mask)
    return builder.build()


def create_toy_denoiser_from_this_preset(preset: Type[PresetInfo]) -> ToyDenoiser:
    """Untrained toy denoiser with the preset's architecture and seeded weights."""
    return (ToyDenoiserBuilder()
            .with_image(preset.image_size, preset.channels)
            .with_patch_size(preset.patch_size)
            .with_blocks(preset.depth, preset.embed_dim, preset.mlp_ratio)
            .with_steps(preset.steps)
            .with_seed(preset.seed)
            .build()
    )


def create_trained_toy_denoiser(preset: Type[PresetInfo]) -> ToyDenoiser:
    dataset = make_texture_dataset(
        preset.texture_kinds, preset.dataset_size, preset.image_size, preset.seed, patch_size=preset.patch_size
    )
    return train(
        dataset,
        create_schedule_from_this_preset(preset),
        epochs=preset.epochs,
        lr=preset.lr,
        seed=preset.seed,
        denoiser=create_toy_denoiser_from_this_preset(preset),
    )
