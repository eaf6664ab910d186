from pydantic import BaseModel, Field, model_validator


class ToyDenoiserConfig(BaseModel):
    """Architecture of the attention-block denoiser: patch embedding, attention blocks with
    residual MLPs, and a linear unembedding back to patches."""

    image_size: int = Field(default=16, ge=1)
    channels: int = Field(default=1, ge=1)
    patch_size: int = Field(default=4, ge=1)
    embed_dim: int = Field(default=32, ge=1)
    depth: int = Field(default=4, ge=1)
    mlp_ratio: int = Field(default=2, ge=1)
    steps: int = Field(default=30, ge=1)

    @model_validator(mode="after")
    def validate_patch_grid(self):
        if self.image_size % self.patch_size != 0:
            raise ValueError(
                f"Image size {self.image_size} is not divisible by patch size {self.patch_size}."
            )
        return self

    @property
    def grid_size(self) -> int:
        return self.image_size // self.patch_size

    @property
    def num_tokens(self) -> int:
        return self.grid_size**2

    @property
    def patch_dim(self) -> int:
        return self.patch_size * self.patch_size * self.channels

    @property
    def hidden_dim(self) -> int:
        return self.embed_dim * self.mlp_ratio

    @property
    def decoder_blocks(self) -> tuple:
        """The later half of the blocks, where style injection goes by default."""
        return tuple(range(self.depth // 2, self.depth))
