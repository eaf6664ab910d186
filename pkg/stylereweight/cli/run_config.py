from typing import Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from stylereweight.attention.masks import StyleMask
from stylereweight.denoiser.textures import TEXTURE_KINDS
from stylereweight.diffusion.schedule import NoiseSchedule, make_schedule
from stylereweight.numerics.linalg import MASK_SENTINEL
from stylereweight.pipeline.injection_config import FusionMode, InjectionConfig, SainMode
from stylereweight.video.guidance import GuidanceConfig

Command = Literal["train-toy-denoiser", "stylize", "stylize-video", "diagnose"]

REQUIRED_PATHS = {
    "train-toy-denoiser": ("out",),
    "stylize": ("content", "style", "weights", "out"),
    "stylize-video": ("frames", "style", "weights", "out"),
    "diagnose": ("content", "style", "weights", "diag"),
}


def _split_list(value):
    if isinstance(value, str):
        return tuple(item.strip() for item in value.split(",") if item.strip())
    return value


def _parse_window(value):
    if isinstance(value, str):
        start, separator, end = value.partition(":")
        if not separator:
            raise ValueError(f"A window is written start:end, got {value!r}.")
        return int(start), int(end)
    return value


class RunConfig(BaseModel):
    """One validated command line: the command, its paths and every engine setting."""

    model_config = ConfigDict(populate_by_name=True, extra="forbid")
    command: Command

    content: Optional[str] = None
    style: Tuple[str, ...] = ()
    weights: Optional[str] = None
    out: Optional[str] = None
    diag: Optional[str] = None
    mask: Optional[str] = None
    frames: Optional[str] = None
    report: Optional[str] = None

    size: int = Field(default=16, ge=1)
    patch: int = Field(default=4, ge=1)
    embed_dim: int = Field(default=32, ge=1)
    depth: int = Field(default=4, ge=1)
    epochs: int = Field(default=200, ge=1)
    lr: float = Field(default=0.05, ge=0.0)
    kinds: Tuple[str, ...] = ("stripes", "dots")
    count: int = Field(default=8, ge=1)
    seed: int = Field(default=0, ge=0)

    steps: Optional[int] = Field(default=None, ge=1)
    schedule: Literal["linear", "cosine"] = "linear"

    style_scale: float = Field(default=1.2, alias="lambda", gt=0.0)
    window: Tuple[int, int] = (5, 30)
    blocks: Optional[Tuple[int, ...]] = None
    sain: SainMode = "prose"
    fusion: FusionMode = "reweighted"
    ramp_floor: float = Field(default=MASK_SENTINEL, ge=MASK_SENTINEL, lt=0.0)
    refinements: int = Field(default=0, ge=0)
    clip: bool = True
    similarity: bool = False

    guidance_weight: float = Field(default=0.05, ge=0.0)
    guidance_window: Optional[Tuple[int, int]] = None
    extractor_seed: int = Field(default=0, ge=0)
    verbose: bool = False

    @field_validator("style", "kinds", "blocks", mode="before")
    @classmethod
    def split_lists(cls, value):
        return _split_list(value)

    @field_validator("window", "guidance_window", mode="before")
    @classmethod
    def parse_window(cls, value):
        return _parse_window(value)

    @field_validator("window", "guidance_window")
    @classmethod
    def validate_window_range(cls, window: Optional[Tuple[int, int]]):
        if window is not None and not 0 <= window[0] <= window[1]:
            raise ValueError(f"Window {window[0]}:{window[1]} is not a valid range; need 0 <= start <= end.")
        return window

    @field_validator("kinds")
    @classmethod
    def validate_kinds(cls, kinds: Tuple[str, ...]):
        unknown = sorted(set(kinds) - set(TEXTURE_KINDS))
        if unknown or not kinds:
            raise ValueError(f"Texture kinds must be a non-empty subset of {list(TEXTURE_KINDS)}, got {list(kinds)}.")
        return kinds

    @model_validator(mode="after")
    def validate_paths(self):
        missing = [name for name in REQUIRED_PATHS[self.command] if not getattr(self, name)]
        if missing:
            flags = ", ".join(f"--{name}" for name in missing)
            raise ValueError(f"{self.command} needs {flags}.")
        return self

    def injection_config(self, mask: Optional[StyleMask] = None) -> InjectionConfig:
        return InjectionConfig(
            style_scale=self.style_scale,
            step_window=self.window,
            block_set=self.blocks,
            sain=self.sain,
            fusion_mode=self.fusion,
            mask=mask,
            record_similarity=self.similarity,
            inversion_refinements=self.refinements,
            clip_range=(0.0, 1.0) if self.clip else None,
        )

    def guidance_config(self) -> GuidanceConfig:
        return GuidanceConfig(weight=self.guidance_weight, step_window=self.guidance_window)

    def noise_schedule(self, steps: int) -> NoiseSchedule:
        return make_schedule(steps, kind=self.schedule)
