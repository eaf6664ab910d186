from pathlib import Path
from typing import Union

import numpy as np

from stylereweight.denoiser.config import ToyDenoiserConfig
from stylereweight.denoiser.toy_denoiser import ToyDenoiser
from stylereweight.denoiser.weights import zero_weights
from stylereweight.errors import ImageFormatError
from stylereweight.numerics.tensor_io import encode_tensor, read_tensor_block

WEIGHTS_MAGIC = "ZTOY"
_HEADER_FIELDS = {
    "patch": "patch_size",
    "d": "embed_dim",
    "L": "depth",
    "T": "steps",
    "size": "image_size",
    "channels": "channels",
    "mlp": "mlp_ratio",
}


def save_weights(path: Union[str, Path], denoiser: ToyDenoiser) -> None:
    """
    Writes "ZTOY patch=.. d=.. L=.. T=.. size=.. channels=.. mlp=..", then every parameter array
    as a ZTEN block in ToyDenoiserWeights.named_arrays() order.
    """
    config = denoiser.config
    header = " ".join(f"{key}={getattr(config, name)}" for key, name in _HEADER_FIELDS.items())
    payload = [f"{WEIGHTS_MAGIC} {header}\n".encode("ascii")]
    payload.extend(encode_tensor(array) for _, array in denoiser.weights.named_arrays())
    Path(path).write_bytes(b"".join(payload))


def load_weights(path: Union[str, Path]) -> ToyDenoiser:
    with open(path, "rb") as stream:
        header = stream.readline()
        fields = header.decode("ascii", errors="replace").split()
        if not fields or fields[0] != WEIGHTS_MAGIC:
            raise ImageFormatError(f"{path} is not a ZTOY weights file", 0)
        try:
            values = dict(field.split("=", 1) for field in fields[1:])
            config = ToyDenoiserConfig(**{name: int(values[key]) for key, name in _HEADER_FIELDS.items()})
        except (KeyError, ValueError) as error:
            raise ImageFormatError(f"Malformed ZTOY header in {path}: {error}", 0) from None

        weights = zero_weights(config)
        for name, array in weights.named_arrays():
            offset = stream.tell()
            loaded = read_tensor_block(stream)
            if loaded.shape != array.shape:
                raise ImageFormatError(
                    f"Parameter {name} has shape {loaded.shape}, architecture expects {array.shape}", offset
                )
            np.copyto(array, loaded)
    return ToyDenoiser(config=config, weights=weights)
