import csv
import io
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, model_validator

from stylereweight.errors import DimensionError, DomainError


class ConsistencyReport(BaseModel):
    """Frame-to-frame differences ||F_i - F_{i-1}|| of a clip, with their mean and population variance."""

    mean_diff: float
    var_diff: float
    diffs: List[float]

    @model_validator(mode="after")
    def validate_report(self):
        if self.var_diff < 0:
            raise ValueError(f"var_diff must be non-negative, got {self.var_diff}.")
        if any(diff < 0 for diff in self.diffs):
            raise ValueError("Frame differences must be non-negative.")
        return self

    @classmethod
    def empty(cls) -> "ConsistencyReport":
        return cls(mean_diff=0.0, var_diff=0.0, diffs=[])

    def to_csv(self) -> str:
        """Rows `i,diff` for i = 1..n-1, then the trailer rows `mean,<v>` and `var,<v>`."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["i", "diff"])
        for index, diff in enumerate(self.diffs, start=1):
            writer.writerow([index, repr(diff)])
        writer.writerow(["mean", repr(self.mean_diff)])
        writer.writerow(["var", repr(self.var_diff)])
        return buffer.getvalue()


def consistency_report(frames: Sequence[np.ndarray]) -> ConsistencyReport:
    if len(frames) < 2:
        raise DomainError(f"Consistency needs at least 2 frames, got {len(frames)}.")
    frames = [np.asarray(frame, dtype=np.float64) for frame in frames]
    shapes = {frame.shape for frame in frames}
    if len(shapes) != 1:
        raise DimensionError(f"Frames must share one shape, got {sorted(shapes)}.")
    diffs = np.array([np.linalg.norm(current - previous) for previous, current in zip(frames, frames[1:])])
    return ConsistencyReport(mean_diff=float(diffs.mean()), var_diff=float(diffs.var()), diffs=diffs.tolist())
