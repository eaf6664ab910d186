import math
from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from stylereweight.attention.masks import StyleMask
from stylereweight.errors import ConfigError, DimensionError, DomainError
from stylereweight.numerics.linalg import require_rank, softmax_rows

StyleKeyValue = Tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class AttentionInputs:
    query: np.ndarray
    key: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        check_attention_shapes(self.query, self.key, self.value)

    @property
    def head_dim(self) -> int:
        return self.query.shape[1]

    def attend(self) -> np.ndarray:
        return attend(self.query, self.key, self.value)


class FusionParams(BaseModel):
    model_config = ConfigDict(populate_by_name=True)
    style_scale: float = Field(default=1.2, alias="lambda")
    mode: Literal["self", "naive-cross", "simple-add", "reweighted", "offset-c"] = "reweighted"

    @model_validator(mode="after")
    def validate_scale(self):
        if self.mode == "simple-add" and not 0.0 <= self.style_scale <= 1.0:
            raise ValueError(f"simple-add needs lambda in [0, 1], got {self.style_scale}.")
        if self.mode == "reweighted" and not self.style_scale > 0:
            raise ValueError(f"reweighted needs lambda > 0, got {self.style_scale}.")
        return self


def check_attention_shapes(query: np.ndarray, key: np.ndarray, value: np.ndarray) -> None:
    require_rank(query, 2, "Query")
    require_rank(key, 2, "Key")
    require_rank(value, 2, "Value")
    if query.shape[1] == 0:
        raise DomainError("Head dimension d must be positive.")
    if query.shape[1] != key.shape[1]:
        raise DimensionError(f"Query and key channels differ: {query.shape} vs {key.shape}.")
    if key.shape[0] != value.shape[0]:
        raise DimensionError(f"Key and value token counts differ: {key.shape} vs {value.shape}.")


def scaled_logits(query: np.ndarray, key: np.ndarray) -> np.ndarray:
    return query @ key.T / math.sqrt(query.shape[1])


def attend(query: np.ndarray, key: np.ndarray, value: np.ndarray) -> np.ndarray:
    """Softmax(Q K^T / sqrt(d)) V, with d the channel extent of Q."""
    check_attention_shapes(query, key, value)
    return softmax_rows(scaled_logits(query, key)) @ value


def style_cross_naive(query_c: np.ndarray, key_s: np.ndarray, value_s: np.ndarray) -> np.ndarray:
    """Content queries against style keys and values."""
    return attend(query_c, key_s, value_s)


def simple_addition(
    query_c: np.ndarray,
    key_c: np.ndarray,
    value_c: np.ndarray,
    key_s: np.ndarray,
    value_s: np.ndarray,
    style_scale: float,
) -> np.ndarray:
    """lambda * Attn(Qc, Ks, Vs) + (1 - lambda) * Attn(Qc, Kc, Vc)"""
    if not 0.0 <= style_scale <= 1.0:
        raise ConfigError(f"Simple addition needs lambda in [0, 1], got {style_scale}.")
    return style_scale * attend(query_c, key_s, value_s) + (1.0 - style_scale) * attend(query_c, key_c, value_c)


def _check_styles(query_c: np.ndarray, key_c: np.ndarray, value_c: np.ndarray, styles: Sequence[StyleKeyValue]) -> None:
    check_attention_shapes(query_c, key_c, value_c)
    if not styles:
        raise ConfigError("At least one style key/value pair is required.")
    for index, (key_s, value_s) in enumerate(styles):
        check_attention_shapes(query_c, key_s, value_s)
        if value_s.shape[1] != value_c.shape[1]:
            raise DimensionError(
                f"Style {index} values have {value_s.shape[1]} channels, content values have {value_c.shape[1]}."
            )


def reweighted_weights(
    query_c: np.ndarray,
    key_c: np.ndarray,
    value_c: np.ndarray,
    styles: Sequence[StyleKeyValue],
    style_scale: float,
    masks: Optional[Sequence[Optional[StyleMask]]] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Attention weights of the reweighted fusion and the stacked values they apply to.

    The logits are [lambda*Qc Ks_1^T/sqrt(d), ..., lambda*Qc Ks_N^T/sqrt(d), Qc Kc^T/sqrt(d)];
    lambda scales the style blocks only. A mask adds its offsets to the scaled logits of its
    style block.

    Returns:
    - weights of shape (N_c, sum(M_s) + M_c) and values of shape (sum(M_s) + M_c, d_v)
    """
    _check_styles(query_c, key_c, value_c, styles)
    if not style_scale > 0:
        raise ConfigError(f"Reweighted attention needs lambda > 0, got {style_scale}.")
    if masks is not None and len(masks) != len(styles):
        raise ConfigError(f"Got {len(masks)} masks for {len(styles)} styles.")

    blocks: List[np.ndarray] = []
    for index, (key_s, _) in enumerate(styles):
        logits = style_scale * scaled_logits(query_c, key_s)
        mask = masks[index] if masks is not None else None
        if mask is not None:
            logits = logits + mask.offsets_for(*logits.shape)
        blocks.append(logits)
    blocks.append(scaled_logits(query_c, key_c))

    values = np.concatenate([value_s for _, value_s in styles] + [value_c], axis=0)
    return softmax_rows(np.concatenate(blocks, axis=1)), values


def reweighted_attention(
    query_c: np.ndarray,
    key_c: np.ndarray,
    value_c: np.ndarray,
    key_s: np.ndarray,
    value_s: np.ndarray,
    style_scale: float,
) -> np.ndarray:
    weights, values = reweighted_weights(query_c, key_c, value_c, [(key_s, value_s)], style_scale)
    return weights @ values


def masked_reweighted(
    query_c: np.ndarray,
    key_c: np.ndarray,
    value_c: np.ndarray,
    key_s: np.ndarray,
    value_s: np.ndarray,
    style_scale: float,
    mask: StyleMask,
) -> np.ndarray:
    """Reweighted fusion restricted to the style tokens the mask admits; rows with no admitted
    style token fall back to content self-attention."""
    weights, values = reweighted_weights(query_c, key_c, value_c, [(key_s, value_s)], style_scale, masks=[mask])
    return weights @ values


def multi_style_reweighted(
    query_c: np.ndarray,
    key_c: np.ndarray,
    value_c: np.ndarray,
    styles: Sequence[StyleKeyValue],
    style_scale: float,
    masks: Optional[Sequence[Optional[StyleMask]]] = None,
) -> np.ndarray:
    weights, values = reweighted_weights(query_c, key_c, value_c, styles, style_scale, masks=masks)
    return weights @ values


def style_mass(
    query_c: np.ndarray,
    key_c: np.ndarray,
    value_c: np.ndarray,
    styles: Sequence[StyleKeyValue],
    style_scale: float,
) -> np.ndarray:
    """Per content query, the total attention weight assigned to style tokens."""
    weights, _ = reweighted_weights(query_c, key_c, value_c, styles, style_scale)
    num_style_tokens = sum(key_s.shape[0] for key_s, _ in styles)
    return weights[:, :num_style_tokens].sum(axis=1)


def _logsumexp_rows(logits: np.ndarray) -> np.ndarray:
    row_max = logits.max(axis=1)
    return row_max + np.log(np.exp(logits - row_max[:, None]).sum(axis=1))


def offset_constant(content_logits: np.ndarray, style_logits: np.ndarray) -> np.ndarray:
    """Row-wise C = ln(sum exp(content logits) / sum exp(style logits))."""
    return _logsumexp_rows(content_logits) - _logsumexp_rows(style_logits)


def offset_c_fusion(
    query_c: np.ndarray,
    key_c: np.ndarray,
    value_c: np.ndarray,
    key_s: np.ndarray,
    value_s: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Single-softmax form of equal-weight simple addition.

    Shifting every style logit of a row by that row's C balances the two partition functions,
    so Softmax([Qc Ks^T/sqrt(d) + C, Qc Kc^T/sqrt(d)]) [Vs; Vc] equals
    0.5 * Attn(Qc, Ks, Vs) + 0.5 * Attn(Qc, Kc, Vc).

    Returns:
    - the fused output and the per-row offset C
    """
    _check_styles(query_c, key_c, value_c, [(key_s, value_s)])
    style_logits = scaled_logits(query_c, key_s)
    content_logits = scaled_logits(query_c, key_c)
    offset = offset_constant(content_logits, style_logits)
    weights = softmax_rows(np.concatenate([style_logits + offset[:, None], content_logits], axis=1))
    return weights @ np.concatenate([value_s, value_c], axis=0), offset


def fuse(
    params: FusionParams,
    query_c: np.ndarray,
    key_c: np.ndarray,
    value_c: np.ndarray,
    styles: Sequence[StyleKeyValue],
    masks: Optional[Sequence[Optional[StyleMask]]] = None,
) -> np.ndarray:
    """
    Dispatches one fusion mode. Modes other than "reweighted" treat several style references as
    one, with their keys and values concatenated; masks only apply to "reweighted".
    """
    if params.mode == "reweighted":
        return multi_style_reweighted(query_c, key_c, value_c, styles, params.style_scale, masks=masks)
    if params.mode == "self":
        return attend(query_c, key_c, value_c)

    key_s = np.concatenate([key for key, _ in styles], axis=0)
    value_s = np.concatenate([value for _, value in styles], axis=0)
    if params.mode == "naive-cross":
        return style_cross_naive(query_c, key_s, value_s)
    if params.mode == "simple-add":
        return simple_addition(query_c, key_c, value_c, key_s, value_s, params.style_scale)
    fused, _ = offset_c_fusion(query_c, key_c, value_c, key_s, value_s)
    return fused
