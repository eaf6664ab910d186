import csv
import io
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from stylereweight.errors import DomainError

DIAGNOSTICS_HEADER = ("t", "d_style_stylized", "d_style_content")


@dataclass
class StepDiagnostics:
    """
    Style distances at reverse step t: Gram distances of the denoiser's attention outputs at the
    blocks of the block set, averaged over those blocks and over every style reference. Stylized
    features are tapped on the content path and content features on the plain path, at the
    same (t, block) as the style path's.

    similarity holds, per content token, the cosine similarity between the style-cross and
    self-attention outputs averaged over the injected blocks, when it was recorded.
    """

    t: int
    style_stylized: float
    style_content: float
    similarity: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.style_stylized < 0 or self.style_content < 0:
            raise DomainError(f"Style distances at step {self.t} must be non-negative.")


def diagnostics_csv(diagnostics: Sequence[StepDiagnostics]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(DIAGNOSTICS_HEADER)
    for step in diagnostics:
        writer.writerow([step.t, repr(float(step.style_stylized)), repr(float(step.style_content))])
    return buffer.getvalue()


def parse_diagnostics_csv(text: str) -> List[StepDiagnostics]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != DIAGNOSTICS_HEADER:
        raise DomainError(f"Diagnostics CSV must start with the header {','.join(DIAGNOSTICS_HEADER)}.")
    return [
        StepDiagnostics(t=int(t), style_stylized=float(stylized), style_content=float(content))
        for t, stylized, content in rows[1:]
    ]
