from typing import Callable, List, Tuple

import numpy as np

from stylereweight.errors import ContractError, DimensionError, DomainError
from stylereweight.numerics.linalg import require_rank
from stylereweight.numerics.statistics import channel_moments

# image (H, W, C) -> feature maps, shallowest first, each of shape (h, w, c)
FeatureExtractor = Callable[[np.ndarray], List[np.ndarray]]


def gram_matrix(features: np.ndarray) -> np.ndarray:
    """Uncentered channel covariance X^T X / (N * d) of a token-by-channel matrix."""
    features = np.asarray(features, dtype=np.float64)
    require_rank(features, 2, "Features")
    num_tokens, num_channels = features.shape
    if num_tokens == 0 or num_channels == 0:
        raise DomainError(f"Gram matrix of empty features {features.shape} is undefined.")
    return features.T @ features / (num_tokens * num_channels)


def gram_style_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius norm of G(a) - G(b)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    require_rank(a, 2, "Features a")
    require_rank(b, 2, "Features b")
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"Features have {a.shape[1]} and {b.shape[1]} channels.")
    return float(np.linalg.norm(gram_matrix(a) - gram_matrix(b)))


def _as_tokens(feature_map: np.ndarray) -> np.ndarray:
    return feature_map.reshape(-1, feature_map.shape[-1])


def perceptual_losses(
    result: np.ndarray,
    content: np.ndarray,
    style: np.ndarray,
    extractor: FeatureExtractor,
) -> Tuple[float, float]:
    """
    Content and style losses measured in the extractor's feature space.

    Parameters:
    - result, content, style: images of shape (H, W, C)
    - extractor: returns the same number of feature maps for each image

    Returns:
    - L_c: L2 norm of the deepest-stage feature difference between result and content
    - L_s: mean over stages of ||mu(result) - mu(style)|| + ||sigma(result) - sigma(style)||,
      with per-channel mean and standard deviation over spatial positions
    """
    result_features = extractor(result)
    content_features = extractor(content)
    style_features = extractor(style)
    counts = {len(result_features), len(content_features), len(style_features)}
    if len(counts) != 1 or 0 in counts:
        raise ContractError(
            f"Extractor returned {len(result_features)}, {len(content_features)} and "
            f"{len(style_features)} stages for result, content and style."
        )

    content_loss = float(np.linalg.norm(result_features[-1] - content_features[-1]))

    style_terms = []
    for result_map, style_map in zip(result_features, style_features):
        result_moments = channel_moments(_as_tokens(result_map))
        style_moments = channel_moments(_as_tokens(style_map))
        mean_gap = np.linalg.norm(result_moments.mean - style_moments.mean)
        std_gap = np.linalg.norm(np.sqrt(result_moments.variance) - np.sqrt(style_moments.variance))
        style_terms.append(mean_gap + std_gap)
    return content_loss, float(np.mean(style_terms))
