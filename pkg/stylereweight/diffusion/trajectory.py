from pathlib import Path
from typing import List, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from stylereweight.diffusion.schedule import NoiseSchedule
from stylereweight.errors import ImageFormatError
from stylereweight.numerics.tensor_io import read_tensor, write_tensor

MANIFEST_NAME = "manifest.txt"
SCHEDULE_NAME = "alphas.zten"


class Trajectory(BaseModel):
    """
    The ordered states of one diffusion path: x_0..x_T for an inversion ("fwd"), x_T..x_0 for a
    reverse pass ("rev").
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)
    states: List[np.ndarray]
    direction: Literal["fwd", "rev"]
    schedule: NoiseSchedule

    @model_validator(mode="after")
    def validate_states(self):
        if len(self.states) != self.schedule.steps + 1:
            raise ValueError(
                f"A trajectory over {self.schedule.steps} steps needs {self.schedule.steps + 1} states, "
                f"got {len(self.states)}."
            )
        shapes = {state.shape for state in self.states}
        if len(shapes) != 1:
            raise ValueError(f"All trajectory states must share one shape, got {sorted(shapes)}.")
        return self

    @property
    def initial(self) -> np.ndarray:
        return self.states[0]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def state_at(self, t: int) -> np.ndarray:
        """The state at diffusion step t regardless of direction."""
        index = t if self.direction == "fwd" else self.schedule.steps - t
        return self.states[index]

    def save(self, directory: Union[str, Path]) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for index, state in enumerate(self.states):
            write_tensor(directory / f"state_{index:04d}.zten", state)
        write_tensor(directory / SCHEDULE_NAME, self.schedule.alphas)
        (directory / MANIFEST_NAME).write_text(f"T={self.schedule.steps} dir={self.direction}\n", encoding="utf-8")

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "Trajectory":
        directory = Path(directory)
        manifest = (directory / MANIFEST_NAME).read_text(encoding="utf-8").split()
        try:
            fields = dict(item.split("=", 1) for item in manifest)
            steps = int(fields["T"])
            direction = fields["dir"]
        except (KeyError, ValueError):
            raise ImageFormatError(f"Malformed trajectory manifest in {directory}") from None

        alphas = read_tensor(directory / SCHEDULE_NAME)
        schedule = NoiseSchedule(alphas=alphas, sigmas=np.zeros_like(alphas))
        states = [read_tensor(directory / f"state_{index:04d}.zten") for index in range(steps + 1)]
        return cls(states=states, direction=direction, schedule=schedule)
