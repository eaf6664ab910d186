from stylereweight.attention.kernels import (
    AttentionInputs,
    FusionParams,
    attend,
    fuse,
    masked_reweighted,
    multi_style_reweighted,
    offset_c_fusion,
    offset_constant,
    reweighted_attention,
    reweighted_weights,
    simple_addition,
    style_cross_naive,
    style_mass,
)
from stylereweight.attention.masks import StyleMask
