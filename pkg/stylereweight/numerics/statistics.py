from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from stylereweight.errors import DomainError
from stylereweight.numerics.linalg import require_rank

HISTOGRAM_FLOOR = 1e-10


class Moments(BaseModel):
    """Per-channel mean and population variance."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)
    mean: np.ndarray
    variance: np.ndarray

    @model_validator(mode="after")
    def validate_moments(self):
        if self.mean.shape != self.variance.shape:
            raise ValueError(
                f"Mean and variance must share a shape, got {self.mean.shape} and {self.variance.shape}."
            )
        if np.any(self.variance < 0):
            raise ValueError("Variance must be non-negative in every channel.")
        return self


class Histogram(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)
    bin_edges: np.ndarray
    probabilities: np.ndarray

    @model_validator(mode="after")
    def validate_histogram(self):
        if len(self.probabilities) != len(self.bin_edges) - 1:
            raise ValueError(
                f"A histogram with {len(self.bin_edges)} edges needs {len(self.bin_edges) - 1} "
                f"probabilities, got {len(self.probabilities)}."
            )
        if np.any(np.diff(self.bin_edges) <= 0):
            raise ValueError("Bin edges must be strictly increasing.")
        if np.any(self.probabilities < 0) or np.any(self.probabilities > 1):
            raise ValueError("Probabilities must lie in [0, 1].")
        if abs(float(self.probabilities.sum()) - 1.0) > 1e-9:
            raise ValueError(f"Probabilities must sum to 1, got {self.probabilities.sum()}.")
        return self


def channel_moments(features: np.ndarray) -> Moments:
    """
    Computes per-channel moments of a token-by-channel feature matrix.

    Parameters:
    - features: array of shape (num_tokens, num_channels)

    Returns:
    - Moments with population variance per channel
    """
    features = np.asarray(features, dtype=np.float64)
    require_rank(features, 2, "Features")
    if features.shape[0] == 0:
        raise DomainError("Cannot compute moments over an empty token axis.")
    mean = features.mean(axis=0)
    variance = ((features - mean) ** 2).mean(axis=0)
    return Moments(mean=mean, variance=variance)


def histogram_pdf(values: np.ndarray, bins: int = 32, value_range: Optional[Tuple[float, float]] = None) -> Histogram:
    """
    Estimates a probability mass function by counting values into equal-width bins.

    Values outside the range are clamped into the edge bins. Every probability is floored at
    HISTOGRAM_FLOOR and the result renormalized, so a KL divergence against it stays finite.

    Parameters:
    - values: any array; it is flattened
    - bins: number of bins, at least 2
    - value_range: (lo, hi) with lo < hi; defaults to the min/max of the values, widened by 0.5
      on both sides when every value is equal

    Returns:
    - A Histogram
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise DomainError("Cannot estimate a histogram from zero samples.")
    if bins < 2:
        raise DomainError(f"A histogram needs at least 2 bins, got {bins}.")
    if value_range is None:
        value_range = joint_range(values)
    lo, hi = value_range
    if not lo < hi:
        raise DomainError(f"Histogram range must satisfy lo < hi, got ({lo}, {hi}).")

    bin_edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(np.clip(values, lo, hi), bins=bin_edges)
    probabilities = counts / values.size
    probabilities = np.maximum(probabilities, HISTOGRAM_FLOOR)
    probabilities = probabilities / probabilities.sum()
    return Histogram(bin_edges=bin_edges, probabilities=probabilities)


def joint_range(*arrays: np.ndarray) -> Tuple[float, float]:
    """Smallest range covering every value of every array."""
    lo = min(float(np.min(array)) for array in arrays)
    hi = max(float(np.max(array)) for array in arrays)
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def kl_divergence(p: Histogram, q: Histogram) -> float:
    if not np.array_equal(p.bin_edges, q.bin_edges):
        raise DomainError("KL divergence needs both histograms on identical bin edges.")
    divergence = float(np.sum(p.probabilities * np.log(p.probabilities / q.probabilities)))
    # rounding can leave a tiny negative residue for p == q
    return max(divergence, 0.0)


def cosine_similarity_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    require_rank(a, 2, "Left rows")
    require_rank(b, 2, "Right rows")
    if a.shape != b.shape:
        raise DomainError(f"Row sets must share a shape, got {a.shape} and {b.shape}.")
    norms_a = np.linalg.norm(a, axis=1)
    norms_b = np.linalg.norm(b, axis=1)
    if np.any(norms_a == 0) or np.any(norms_b == 0):
        raise DomainError("Cosine similarity is undefined for zero-norm rows.")
    cosine = np.einsum("ij,ij->i", a, b) / (norms_a * norms_b)
    return np.clip(cosine, -1.0, 1.0)
