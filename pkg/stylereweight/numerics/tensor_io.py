from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from stylereweight.errors import ImageFormatError

TENSOR_MAGIC = b"ZTEN"
_LITTLE_ENDIAN_DOUBLE = np.dtype("<f8")


def encode_tensor(tensor: np.ndarray) -> bytes:
    """Header line "ZTEN <rank> <extent...>" followed by little-endian float64 data, row-major."""
    tensor = np.asarray(tensor, dtype=np.float64)
    extents = " ".join(str(extent) for extent in tensor.shape)
    header = f"ZTEN {tensor.ndim} {extents}".rstrip() + "\n"
    return header.encode("ascii") + np.ascontiguousarray(tensor).astype(_LITTLE_ENDIAN_DOUBLE).tobytes()


def read_tensor_block(stream: BinaryIO) -> np.ndarray:
    """Reads one ZTEN block from an open binary stream, leaving the stream after its payload."""
    offset = stream.tell()
    header = stream.readline()
    if not header.endswith(b"\n"):
        raise ImageFormatError("Truncated ZTEN header", offset)
    fields = header.split()
    if not fields or fields[0] != TENSOR_MAGIC:
        raise ImageFormatError("Missing ZTEN magic", offset)
    try:
        rank = int(fields[1])
        shape = tuple(int(extent) for extent in fields[2:])
    except (IndexError, ValueError):
        raise ImageFormatError("Malformed ZTEN header", offset) from None
    if len(shape) != rank or any(extent <= 0 for extent in shape):
        raise ImageFormatError(f"ZTEN header declares rank {rank} but extents {shape}", offset)

    count = int(np.prod(shape)) if shape else 1
    payload_offset = stream.tell()
    payload = stream.read(count * _LITTLE_ENDIAN_DOUBLE.itemsize)
    if len(payload) != count * _LITTLE_ENDIAN_DOUBLE.itemsize:
        raise ImageFormatError("Truncated ZTEN payload", payload_offset + len(payload))
    return np.frombuffer(payload, dtype=_LITTLE_ENDIAN_DOUBLE).astype(np.float64).reshape(shape)


def write_tensor(path: Union[str, Path], tensor: np.ndarray) -> None:
    Path(path).write_bytes(encode_tensor(tensor))


def read_tensor(path: Union[str, Path]) -> np.ndarray:
    with open(path, "rb") as stream:
        return read_tensor_block(stream)
