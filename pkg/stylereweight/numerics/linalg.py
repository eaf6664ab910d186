import numpy as np

from stylereweight.errors import DegenerateRowError, DimensionError, DomainError

# Finite stand-in for -inf on masked attention logits.
MASK_SENTINEL = -1e9


def as_tensor(values, name: str = "tensor") -> np.ndarray:
    """
    Converts input to a float64 array and rejects non-finite entries.

    Parameters:
    - values: anything numpy can turn into an array
    - name: used in the error message

    Returns:
    - A float64 numpy array
    """
    tensor = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(tensor)):
        raise DomainError(f"{name} contains NaN or Inf values.")
    return tensor


def require_rank(tensor: np.ndarray, rank: int, name: str) -> None:
    if tensor.ndim != rank:
        raise DimensionError(f"{name} must be rank {rank}, got shape {tensor.shape}.")


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    require_rank(a, 2, "Left operand")
    require_rank(b, 2, "Right operand")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"Inner extents do not agree: left is {a.shape}, right is {b.shape}."
        )
    return a @ b


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """
    Row-wise softmax, stabilized by subtracting each row's maximum.

    Entries at or below the mask sentinel (including -inf) are treated as masked out. A row
    with every entry masked has no distribution and raises DegenerateRowError.
    """
    logits = np.asarray(logits, dtype=np.float64)
    require_rank(logits, 2, "Logits")
    if np.any(np.isnan(logits)) or np.any(np.isposinf(logits)):
        raise DomainError("Logits contain NaN or +Inf values.")

    masked = logits <= MASK_SENTINEL / 2
    degenerate_rows = np.flatnonzero(np.all(masked, axis=1))
    if degenerate_rows.size:
        raise DegenerateRowError(
            f"Rows {degenerate_rows.tolist()} are entirely masked and have no softmax."
        )

    shifted = logits - logits.max(axis=1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=1, keepdims=True)
