from stylereweight.numerics.linalg import MASK_SENTINEL, as_tensor, matmul, softmax_rows
from stylereweight.numerics.statistics import (
    HISTOGRAM_FLOOR,
    Histogram,
    Moments,
    channel_moments,
    cosine_similarity_rows,
    histogram_pdf,
    joint_range,
    kl_divergence,
)
from stylereweight.numerics.tensor_io import read_tensor, write_tensor
