import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from stylereweight.attention.kernels import attend, fuse, style_cross_naive
from stylereweight.attention.masks import StyleMask
from stylereweight.denoiser.taps import AttentionOverride, FeatureTaps
from stylereweight.denoiser.toy_denoiser import ToyDenoiser
from stylereweight.diffusion.ddim import ddim_invert, ddim_update, predict_x0
from stylereweight.diffusion.denoisers import DenoiserContract, checked_noise_prediction
from stylereweight.diffusion.schedule import NoiseSchedule
from stylereweight.diffusion.trajectory import Trajectory
from stylereweight.errors import ConfigError, ContractError, DomainError
from stylereweight.numerics.statistics import cosine_similarity_rows
from stylereweight.pipeline.diagnostics import StepDiagnostics
from stylereweight.pipeline.injection_config import InjectionConfig, SainMode
from stylereweight.pipeline.metrics import gram_style_distance
from stylereweight.style_adjustment.sain import ScaleWeight, mean_adjust, sain, scale_weight

logger = logging.getLogger(__name__)


@dataclass
class StylePathRecord:
    """
    Everything the content path reads from the style paths: per style reference, its inversion,
    and the Q/K/V and attention outputs tapped at every (t, block) of its plain reverse pass.
    """

    schedule: NoiseSchedule
    inversions: List[Trajectory]
    taps: List[FeatureTaps]

    @property
    def num_styles(self) -> int:
        return len(self.inversions)

    @property
    def latents(self) -> List[np.ndarray]:
        return [inversion.final for inversion in self.inversions]

    def key_values(self, t: int, block: int) -> List[Tuple[np.ndarray, np.ndarray]]:
        pairs = []
        for index, taps in enumerate(self.taps):
            try:
                tap = taps.get(t, block)
            except KeyError:
                raise ContractError(f"Style path {index} has no tap at step {t}, block {block}.") from None
            pairs.append((tap.key, tap.value))
        return pairs


@dataclass
class DualPathState:
    """Content-side state of one stylization; `t` is the step the next reverse update consumes."""

    content_inversion: Trajectory
    style_record: StylePathRecord
    latent: np.ndarray
    plain_latent: np.ndarray
    t: int
    scale_weight: Optional[ScaleWeight] = None
    content_taps: Optional[FeatureTaps] = None
    x0_predictions: Dict[int, np.ndarray] = field(default_factory=dict)


@dataclass
class StylizeResult:
    stylized: np.ndarray
    diagnostics: List[StepDiagnostics]
    state: DualPathState


def apply_sain(
    content_latent: np.ndarray,
    style_latents: Sequence[np.ndarray],
    mode: SainMode = "prose",
    bins: int = 32,
) -> Tuple[np.ndarray, Optional[ScaleWeight]]:
    """
    Shifts the per-channel mean of the content latent toward the style latents' mean.

    The latents are read as (H*W, C) feature matrices; several style latents are pooled.
    Returns the adjusted latent and the scale weight, or the latent unchanged and None when
    mode is "off". Mode "mean" replaces the mean outright, which is the weight w = 1.
    """
    if mode == "off":
        return content_latent, None
    channels = content_latent.shape[-1]
    f_c = content_latent.reshape(-1, channels)
    f_s = np.vstack([latent.reshape(-1, channels) for latent in style_latents])
    if mode == "mean":
        return mean_adjust(f_c, f_s).reshape(content_latent.shape), ScaleWeight.from_kl(0.0)
    weight = scale_weight(f_c, f_s, bins=bins, sign=mode)
    return sain(f_c, f_s, weight).reshape(content_latent.shape), weight


class DualPathStylizer:
    """
    Runs the content path in lockstep with one or more style paths over the same schedule.

    Inside the injection window, the chosen blocks of the content path attend to the style
    path's keys and values recorded at the same (t, block); everywhere else both paths run
    plain self-attention. A third plain content path, started from the unadjusted latent, is
    kept for the diagnostics.
    """

    def __init__(self, denoiser: ToyDenoiser, schedule: NoiseSchedule, config: Optional[InjectionConfig] = None):
        config = config or InjectionConfig()
        if denoiser.config.steps != schedule.steps:
            raise ConfigError(
                f"Denoiser has a time embedding for T={denoiser.config.steps}, schedule has T={schedule.steps}."
            )
        if not schedule.is_deterministic:
            raise ConfigError("Dual-path stylization runs deterministic DDIM (all sigma_t == 0).")
        config.check_window(schedule.steps)
        self.denoiser = denoiser
        self.schedule = schedule
        self.config = config
        self.blocks = config.resolved_blocks(denoiser.config.depth)
        self.fusion = config.fusion

    def invert(self, image: np.ndarray) -> Trajectory:
        return ddim_invert(image, self.denoiser, self.schedule, refinement_steps=self.config.inversion_refinements)

    def _update(self, x_t: np.ndarray, eps_hat: np.ndarray, t: int) -> Tuple[np.ndarray, np.ndarray]:
        """DDIM update under the configured clipping; returns (x_{t-1}, x0_hat at t)."""
        clip_range = self.config.clip_range
        x0_hat = predict_x0(x_t, eps_hat, t, self.schedule)
        if clip_range is not None:
            x0_hat = np.clip(x0_hat, *clip_range)
        return ddim_update(x_t, eps_hat, t, self.schedule, clip_range=clip_range), x0_hat

    def run_style_paths(self, styles: Sequence[np.ndarray]) -> StylePathRecord:
        if len(styles) == 0:
            raise ConfigError("At least one style reference is required.")
        inversions, all_taps = [], []
        for index, style in enumerate(styles):
            inversion = self.invert(style)
            taps = FeatureTaps(self.blocks)
            x = inversion.final
            for t in range(self.schedule.steps, 0, -1):
                eps_hat = self.denoiser.forward(x, t, taps=taps)
                x, _ = self._update(x, eps_hat, t)
            logger.debug(f"Style path {index}: recorded {len(taps)} taps over {self.schedule.steps} steps")
            inversions.append(inversion)
            all_taps.append(taps)
        return StylePathRecord(schedule=self.schedule, inversions=inversions, taps=all_taps)

    def _check_record(self, record: StylePathRecord, content: np.ndarray) -> None:
        if record.schedule.steps != self.schedule.steps or not np.array_equal(record.schedule.alphas, self.schedule.alphas):
            raise ContractError("Style and content paths must share one noise schedule.")
        for index, latent in enumerate(record.latents):
            if latent.shape != np.shape(content):
                raise ContractError(
                    f"Style reference {index} has shape {latent.shape}, the content image has {np.shape(content)}."
                )

    def _content_key_value(self, t: int, block: int, key: np.ndarray, value: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return key, value

    def _injection_override(
        self,
        t: int,
        block: int,
        record: StylePathRecord,
        masks: Optional[List[Optional[StyleMask]]],
        similarity: Optional[Dict[int, np.ndarray]],
    ) -> AttentionOverride:
        styles = record.key_values(t, block)

        def override(query: np.ndarray, key: np.ndarray, value: np.ndarray) -> np.ndarray:
            for key_s, value_s in styles:
                if key_s.shape[1] != query.shape[1] or value_s.shape[1] != value.shape[1]:
                    raise ContractError(
                        f"Style taps {key_s.shape}/{value_s.shape} at step {t}, block {block} do not fit "
                        f"content queries {query.shape}."
                    )
            key_c, value_c = self._content_key_value(t, block, key, value)
            fused = fuse(self.fusion, query, key_c, value_c, styles, masks)
            if similarity is not None:
                cross = style_cross_naive(
                    query, np.concatenate([k for k, _ in styles]), np.concatenate([v for _, v in styles])
                )
                try:
                    similarity[block] = cosine_similarity_rows(cross, attend(query, key, value))
                except DomainError:
                    logger.debug(f"Skipped similarity at step {t}, block {block}: zero-norm attention output")
            return fused

        return override

    def _overrides(
        self,
        t: int,
        step_index: int,
        record: StylePathRecord,
        masks: Optional[List[Optional[StyleMask]]],
        similarity: Optional[Dict[int, np.ndarray]],
    ) -> Dict[int, AttentionOverride]:
        if not self.config.in_window(step_index):
            return {}
        return {block: self._injection_override(t, block, record, masks, similarity) for block in self.blocks}

    def _advance_content(self, x_t: np.ndarray, t: int, contract: DenoiserContract) -> Tuple[np.ndarray, np.ndarray]:
        """One reverse update of the content path; returns (x_{t-1}, x0_hat at t)."""
        return self._update(x_t, checked_noise_prediction(contract, x_t, t), t)

    def _diagnose(
        self,
        t: int,
        record: StylePathRecord,
        content_taps: FeatureTaps,
        plain_taps: FeatureTaps,
        similarity: Optional[Dict[int, np.ndarray]],
    ) -> StepDiagnostics:
        # Gram distances of the attention outputs at step t, averaged over the block set and
        # over every style reference.
        style_stylized, style_content = [], []
        for style_taps in record.taps:
            for block in self.blocks:
                style_features = style_taps.get(t, block).output
                style_stylized.append(gram_style_distance(style_features, content_taps.get(t, block).output))
                style_content.append(gram_style_distance(style_features, plain_taps.get(t, block).output))
        return StepDiagnostics(
            t=t,
            style_stylized=float(np.mean(style_stylized)),
            style_content=float(np.mean(style_content)),
            similarity=np.mean(list(similarity.values()), axis=0) if similarity else None,
        )

    def stylize(
        self,
        content: np.ndarray,
        styles: Optional[Sequence[np.ndarray]] = None,
        style_record: Optional[StylePathRecord] = None,
        record_content: bool = False,
    ) -> StylizeResult:
        """
        Stylizes one content image.

        Parameters:
        - content: image of shape (H, W, C)
        - styles: style references with the content's shape; ignored when style_record is given
        - style_record: style paths from an earlier run_style_paths call, reused as is
        - record_content: keep the content path's taps (for the blocks in the block set) and its
          x0 predictions in the returned state

        Returns:
        - StylizeResult with the stylized x_0, one StepDiagnostics per reverse step (t = T..1)
          and the final DualPathState
        """
        content = np.asarray(content, dtype=np.float64)
        if style_record is None:
            if styles is None:
                raise ConfigError("Either style references or a recorded style path is required.")
            style_record = self.run_style_paths([np.asarray(style, dtype=np.float64) for style in styles])
        self._check_record(style_record, content)

        inversion = self.invert(content)
        latent, weight = apply_sain(
            inversion.final, style_record.latents, self.config.sain, self.config.sain_bins
        )
        if weight is not None:
            logger.info(f"SAIN moved the content latent mean with w={weight.w:.4f} (KL={weight.kl:.4f})")
        state = DualPathState(
            content_inversion=inversion,
            style_record=style_record,
            latent=latent,
            plain_latent=inversion.final,
            t=self.schedule.steps,
            scale_weight=weight,
            content_taps=FeatureTaps(self.blocks) if record_content else None,
        )

        masks = self.config.masks_for(style_record.num_styles)
        diagnostics = []
        for t in range(self.schedule.steps, 0, -1):
            if state.t != t:
                raise ContractError(f"Content path is at step {state.t}, style taps are read at step {t}.")
            step_index = self.schedule.steps - t
            similarity = {} if self.config.record_similarity else None
            overrides = self._overrides(t, step_index, style_record, masks, similarity)
            content_taps = state.content_taps if record_content else FeatureTaps(self.blocks)
            contract = self.denoiser.as_contract(overrides, content_taps)
            state.latent, x0_hat = self._advance_content(state.latent, t, contract)
            if record_content:
                state.x0_predictions[t] = x0_hat

            plain_taps = FeatureTaps(self.blocks)
            plain_eps = self.denoiser.forward(state.plain_latent, t, taps=plain_taps)
            state.plain_latent, _ = self._update(state.plain_latent, plain_eps, t)

            step = self._diagnose(t, style_record, content_taps, plain_taps, similarity)
            diagnostics.append(step)
            state.t = t - 1
            logger.debug(
                f"step {t}: injected={bool(overrides)} d(style, stylized)={step.style_stylized:.6f} "
                f"d(style, content)={step.style_content:.6f}"
            )

        logger.info(
            f"Stylized a {content.shape} image against {style_record.num_styles} style reference(s) "
            f"over {self.schedule.steps} steps"
        )
        return StylizeResult(stylized=state.latent, diagnostics=diagnostics, state=state)


def stylize(
    content: np.ndarray,
    style: Union[np.ndarray, Sequence[np.ndarray]],
    denoiser: ToyDenoiser,
    schedule: NoiseSchedule,
    config: Optional[InjectionConfig] = None,
) -> Tuple[np.ndarray, List[StepDiagnostics]]:
    """
    Dual-path stylization of one content image.

    Parameters:
    - content: image of shape (H, W, C)
    - style: one style image, or a list of them for multi-style fusion
    - denoiser: toy denoiser whose time embedding matches the schedule
    - schedule: deterministic noise schedule
    - config: injection settings; defaults to InjectionConfig()

    Returns:
    - the stylized image and the per-step diagnostics
    """
    styles = [style] if isinstance(style, np.ndarray) else list(style)
    result = DualPathStylizer(denoiser, schedule, config).stylize(content, styles)
    return result.stylized, result.diagnostics
