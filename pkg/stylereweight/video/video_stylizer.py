import logging
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from stylereweight.attention.masks import StyleMask
from stylereweight.denoiser.taps import AttentionOverride
from stylereweight.denoiser.toy_denoiser import ToyDenoiser
from stylereweight.diffusion.denoisers import DenoiserContract
from stylereweight.diffusion.schedule import NoiseSchedule
from stylereweight.errors import ConfigError, DimensionError
from stylereweight.pipeline.dual_path import DualPathStylizer, StylePathRecord
from stylereweight.pipeline.injection_config import InjectionConfig
from stylereweight.video.consistency import ConsistencyReport, consistency_report
from stylereweight.video.frame_context import FrameMemory, interframe_attend
from stylereweight.video.guidance import GuidanceConfig, guided_prediction

logger = logging.getLogger(__name__)


class FrameStylizer(DualPathStylizer):
    """
    Dual-path stylizer for frames after the first.

    With a frame memory set, the content keys and values of every block in the block set are
    replaced by those of the anchor frame and the previous frame at the same (t, block): fused
    with the style inside the injection window, attended to directly outside it. Inside the
    guidance window each reverse step starts from the energy-guided latent.
    """

    def __init__(
        self,
        denoiser: ToyDenoiser,
        schedule: NoiseSchedule,
        config: Optional[InjectionConfig] = None,
        guidance: Optional[GuidanceConfig] = None,
    ):
        super().__init__(denoiser, schedule, config)
        self.guidance = guidance or GuidanceConfig()
        self.memory: Optional[FrameMemory] = None

    def _content_key_value(self, t: int, block: int, key: np.ndarray, value: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        if self.memory is None:
            return key, value
        context = self.memory.context(t, block)
        context.check_against(key, value)
        return context.keys, context.values

    def _interframe_override(self, t: int, block: int) -> AttentionOverride:
        context = self.memory.context(t, block)

        def override(query: np.ndarray, key: np.ndarray, value: np.ndarray) -> np.ndarray:
            return interframe_attend(query, key, value, context)

        return override

    def _overrides(
        self,
        t: int,
        step_index: int,
        record: StylePathRecord,
        masks: Optional[List[Optional[StyleMask]]],
        similarity: Optional[Dict[int, np.ndarray]],
    ) -> Dict[int, AttentionOverride]:
        overrides = super()._overrides(t, step_index, record, masks, similarity)
        if self.memory is None or overrides:
            return overrides
        return {block: self._interframe_override(t, block) for block in self.blocks}

    def _advance_content(self, x_t: np.ndarray, t: int, contract: DenoiserContract) -> Tuple[np.ndarray, np.ndarray]:
        step_index = self.schedule.steps - t
        if self.memory is None or not self.guidance.active(step_index, self.config.step_window):
            return super()._advance_content(x_t, t, contract)
        previous_x0 = self.memory.previous_prediction(t)
        if previous_x0 is None:
            return super()._advance_content(x_t, t, contract)
        # Same update as energy_guidance_step, keeping the guided x0_hat for the next frame.
        x_guided, eps_hat = guided_prediction(x_t, t, contract, self.schedule, previous_x0, self.guidance)
        return self._update(x_guided, eps_hat, t)


def stylize_video(
    frames: Sequence[np.ndarray],
    style: Union[np.ndarray, Sequence[np.ndarray]],
    denoiser: ToyDenoiser,
    schedule: NoiseSchedule,
    config: Optional[InjectionConfig] = None,
    guidance: Optional[GuidanceConfig] = None,
) -> Tuple[List[np.ndarray], ConsistencyReport]:
    """
    Stylizes a clip frame by frame.

    Frame 0 is stylized exactly as a still image. Every later frame attends to the content
    keys and values of frame 0 and of the frame before it, and is guided toward the previous
    frame's noise-free predictions. The style paths run once and are shared by all frames.

    Parameters:
    - frames: at least one image, all of one shape
    - style: one style image or a list of them
    - denoiser, schedule, config: as for stylize
    - guidance: energy guidance settings; defaults to GuidanceConfig()

    Returns:
    - the stylized frames and their consistency report (empty for a single frame)
    """
    if len(frames) == 0:
        raise ConfigError("A clip needs at least one frame.")
    frames = [np.asarray(frame, dtype=np.float64) for frame in frames]
    if len({frame.shape for frame in frames}) != 1:
        raise DimensionError(f"Frames must share one shape, got {sorted({frame.shape for frame in frames})}.")
    styles = [style] if isinstance(style, np.ndarray) else list(style)

    stylizer = FrameStylizer(denoiser, schedule, config, guidance)
    record = stylizer.run_style_paths([np.asarray(image, dtype=np.float64) for image in styles])
    outputs = []
    anchor_taps = None
    for index, frame in enumerate(frames):
        result = stylizer.stylize(frame, style_record=record, record_content=True)
        outputs.append(result.stylized)
        if anchor_taps is None:
            anchor_taps = result.state.content_taps
        stylizer.memory = FrameMemory(
            anchor=anchor_taps,
            previous=result.state.content_taps,
            previous_x0=result.state.x0_predictions,
        )
        logger.info(f"Stylized frame {index + 1}/{len(frames)}")

    report = consistency_report(outputs) if len(outputs) > 1 else ConsistencyReport.empty()
    return outputs, report
