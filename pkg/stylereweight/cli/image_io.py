from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from stylereweight.attention.masks import StyleMask
from stylereweight.errors import DimensionError, ImageFormatError
from stylereweight.numerics.linalg import MASK_SENTINEL

IMAGE_SUFFIXES = (".ppm", ".pgm", ".pnm")
_CHANNELS = {b"P5": 1, b"P6": 3}
_WHITESPACE = b" \t\r\n"


def _next_token(data: bytes, position: int) -> Tuple[bytes, int, int]:
    """Returns (token, start offset, offset just past the token), skipping whitespace and # comments."""
    while position < len(data):
        if data[position] in _WHITESPACE:
            position += 1
        elif data[position] == ord("#"):
            end = data.find(b"\n", position)
            position = len(data) if end < 0 else end + 1
        else:
            break
    start = position
    while position < len(data) and data[position] not in _WHITESPACE:
        position += 1
    if start == position:
        raise ImageFormatError("Truncated header", start)
    return data[start:position], start, position


def decode_image(data: bytes) -> np.ndarray:
    """
    Decodes a binary 8-bit PGM (P5) or PPM (P6).

    Returns:
    - array of shape (height, width, 1 or 3) with values mapped to [0, 1] by / 255
    """
    magic, start, position = _next_token(data, 0)
    if magic not in _CHANNELS:
        raise ImageFormatError(f"Unsupported magic {magic!r}; expected P5 or P6", start)
    channels = _CHANNELS[magic]

    numbers = []
    for name in ("width", "height", "maxval"):
        token, start, position = _next_token(data, position)
        try:
            numbers.append(int(token))
        except ValueError:
            raise ImageFormatError(f"Non-numeric {name} {token!r}", start) from None
        if numbers[-1] <= 0:
            raise ImageFormatError(f"{name} must be positive, got {numbers[-1]}", start)
    width, height, maxval = numbers
    if maxval != 255:
        raise ImageFormatError(f"Only 8-bit images (maxval 255) are supported, got {maxval}", start)

    # exactly one whitespace byte separates the header from the payload
    payload_offset = position + 1
    expected = width * height * channels
    payload = data[payload_offset:payload_offset + expected]
    if len(payload) != expected:
        raise ImageFormatError(
            f"Truncated payload: expected {expected} bytes, found {len(payload)}", payload_offset + len(payload)
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels)
    return pixels.astype(np.float64) / 255.0


def read_image(path: Union[str, Path]) -> np.ndarray:
    try:
        return decode_image(Path(path).read_bytes())
    except ImageFormatError as error:
        located = ImageFormatError(f"{path}: {error}")
        located.offset = error.offset
        raise located from None


def encode_image(image: np.ndarray) -> bytes:
    """Clamps to [0, 1], rounds to 8 bits and writes P5 for one channel, P6 for three."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        image = image[:, :, None]
    if image.ndim != 3 or image.shape[2] not in (1, 3):
        raise DimensionError(f"Only (H, W, 1) and (H, W, 3) images can be written, got {image.shape}.")
    height, width, channels = image.shape
    magic = b"P5" if channels == 1 else b"P6"
    pixels = np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    return magic + b"\n%d %d\n255\n" % (width, height) + pixels.tobytes()


def write_image(path: Union[str, Path], image: np.ndarray) -> None:
    Path(path).write_bytes(encode_image(image))


def read_mask(path: Union[str, Path], grid_size: int, ramp_floor: float = MASK_SENTINEL) -> StyleMask:
    """
    Reads a PGM mask (255 inside the region, 0 outside, anything between on the ramp) and
    averages it over each patch of a grid_size x grid_size token grid.
    """
    mask = read_image(path)
    if mask.shape[2] != 1:
        raise DimensionError(f"A mask must be a grayscale PGM, {path} has {mask.shape[2]} channels.")
    height, width, _ = mask.shape
    if height % grid_size or width % grid_size:
        raise DimensionError(f"Mask extents {height}x{width} are not divisible by the {grid_size}-token grid.")
    cell_h, cell_w = height // grid_size, width // grid_size
    gains = mask[:, :, 0].reshape(grid_size, cell_h, grid_size, cell_w).mean(axis=(1, 3))
    return StyleMask.from_gains(gains.ravel(), ramp_floor=ramp_floor)


def list_frames(directory: Union[str, Path]) -> List[Path]:
    """Image files of a directory in name order (frames are zero-padded and numbered)."""
    directory = Path(directory)
    if not directory.is_dir():
        raise NotADirectoryError(f"Frame directory {directory} does not exist.")
    return sorted(path for path in directory.iterdir() if path.suffix.lower() in IMAGE_SUFFIXES)
