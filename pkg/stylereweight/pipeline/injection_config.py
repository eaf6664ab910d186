from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from stylereweight.attention.kernels import FusionParams
from stylereweight.attention.masks import StyleMask
from stylereweight.errors import ConfigError

SainMode = Literal["off", "printed", "prose", "mean"]
FusionMode = Literal["self", "naive-cross", "simple-add", "reweighted", "offset-c"]


class InjectionConfig(BaseModel):
    """
    Where and how the content path's self-attention is replaced by the style fusion.

    step_window is a half-open range [start, end) over reverse step indices, where index 0 is
    the first reverse step (t = T). start == end is an empty window. block_set None means the
    later half of the denoiser's blocks. clip_range, when set, clamps every noise-free prediction of
    the reverse passes (style, content and plain alike) to the data range.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, populate_by_name=True)
    style_scale: float = Field(default=1.2, alias="lambda")
    step_window: Tuple[int, int] = (5, 30)
    block_set: Optional[Tuple[int, ...]] = None
    sain: SainMode = "prose"
    sain_bins: int = Field(default=32, ge=2)
    fusion_mode: FusionMode = "reweighted"
    mask: Optional[StyleMask] = None
    masks: Optional[Tuple[Optional[StyleMask], ...]] = None
    record_similarity: bool = False
    inversion_refinements: int = Field(default=0, ge=0)
    clip_range: Optional[Tuple[float, float]] = None

    @field_validator("step_window")
    @classmethod
    def validate_step_window(cls, step_window: Tuple[int, int]):
        start, end = step_window
        if start < 0 or start > end:
            raise ValueError(f"Step window {start}:{end} must satisfy 0 <= start <= end.")
        return step_window

    @field_validator("clip_range")
    @classmethod
    def validate_clip_range(cls, clip_range: Optional[Tuple[float, float]]):
        if clip_range is not None and not clip_range[0] < clip_range[1]:
            raise ValueError(f"clip_range needs low < high, got {clip_range}.")
        return clip_range

    @field_validator("block_set")
    @classmethod
    def validate_block_set(cls, block_set: Optional[Tuple[int, ...]]):
        if block_set is None:
            return None
        if any(block < 0 for block in block_set):
            raise ValueError(f"Block indices must be non-negative, got {block_set}.")
        return tuple(sorted(set(block_set)))

    @model_validator(mode="after")
    def validate_fusion(self):
        FusionParams(style_scale=self.style_scale, mode=self.fusion_mode)
        return self

    @property
    def fusion(self) -> FusionParams:
        return FusionParams(style_scale=self.style_scale, mode=self.fusion_mode)

    def resolved_blocks(self, depth: int) -> Tuple[int, ...]:
        blocks = self.block_set if self.block_set is not None else tuple(range(depth // 2, depth))
        invalid = [block for block in blocks if block >= depth]
        if invalid:
            raise ConfigError(f"Blocks {invalid} do not exist in a denoiser with {depth} blocks.")
        return blocks

    def check_window(self, steps: int) -> None:
        if self.step_window[1] > steps:
            raise ConfigError(
                f"Step window {self.step_window[0]}:{self.step_window[1]} exceeds the {steps} reverse steps."
            )

    def in_window(self, step_index: int) -> bool:
        start, end = self.step_window
        return start <= step_index < end

    def masks_for(self, num_styles: int) -> Optional[List[Optional[StyleMask]]]:
        """One mask per style reference; `mask` applies to every style when `masks` is unset."""
        if self.masks is not None:
            if len(self.masks) != num_styles:
                raise ConfigError(f"Got {len(self.masks)} masks for {num_styles} style references.")
            return list(self.masks)
        if self.mask is None:
            return None
        return [self.mask] * num_styles


class InjectionConfigBuilder:
    def __init__(self):
        self.settings = {}

    def with_style_scale(self, style_scale: float):
        self.settings["style_scale"] = style_scale
        return self

    def with_step_window(self, start: int, end: int):
        self.settings["step_window"] = (start, end)
        return self

    def with_blocks(self, *blocks: int):
        self.settings["block_set"] = tuple(blocks)
        return self

    def with_sain(self, mode: SainMode, bins: int = 32):
        self.settings.update(sain=mode, sain_bins=bins)
        return self

    def with_fusion_mode(self, mode: FusionMode):
        self.settings["fusion_mode"] = mode
        return self

    def with_mask(self, mask: StyleMask):
        self.settings["mask"] = mask
        return self

    def with_style_masks(self, *masks: Optional[StyleMask]):
        self.settings["masks"] = tuple(masks)
        return self

    def with_similarity_diagnostics(self):
        self.settings["record_similarity"] = True
        return self

    def with_inversion_refinements(self, refinements: int):
        self.settings["inversion_refinements"] = refinements
        return self

    def with_clipping(self, low: float = 0.0, high: float = 1.0):
        self.settings["clip_range"] = (low, high)
        return self

    def build(self) -> InjectionConfig:
        return InjectionConfig(**self.settings)
