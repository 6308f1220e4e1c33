"""Image IO

PPM(P6, maxval 255)은 직접 읽고 씁니다. PNG는 Pillow가 설치된 경우(`png` extra)에만 지원합니다.
메모리 상의 이미지는 [0,1] 범위의 H×W×3 float64 배열입니다.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from src.core.errors import ImageFormatError
from src.utils.logger import get_logger

logger = get_logger(__name__)

PPM_MAGIC = b"P6"
PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_WHITESPACE = b" \t\n\r\x0b\x0c"


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next header token, skipping whitespace and ``#`` comments"""
    while pos < len(data):
        if data[pos : pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
        elif data[pos] in _WHITESPACE:
            pos += 1
        else:
            break
    start = pos
    while pos < len(data) and data[pos] not in _WHITESPACE and data[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise ImageFormatError("PPM header ends early")
    return data[start:pos], pos


def decode_ppm(data: bytes) -> np.ndarray:
    """Binary P6 bytes → H×W×3 array in [0,1]"""
    if data[:2] != PPM_MAGIC:
        raise ImageFormatError("not a binary PPM (P6) file")
    pos = 2
    fields: list[int] = []
    for name in ("width", "height", "maxval"):
        token, pos = _read_token(data, pos)
        try:
            fields.append(int(token))
        except ValueError as e:
            raise ImageFormatError(f"PPM {name} is not an integer: {token!r}") from e
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise ImageFormatError(f"PPM size must be positive, got {width}x{height}")
    if maxval != 255:
        raise ImageFormatError(f"only maxval 255 is supported, got {maxval}")
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise ImageFormatError("PPM header must end with a single whitespace byte")
    pos += 1

    expected = width * height * 3
    payload = data[pos : pos + expected]
    if len(payload) < expected:
        raise ImageFormatError(f"PPM payload truncated: {len(payload)} of {expected} bytes")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return pixels.astype(np.float64) / 255.0


def encode_ppm(image: np.ndarray) -> bytes:
    pixels = to_uint8(image)
    height, width, _ = pixels.shape
    return f"P6\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes()


def to_uint8(image: np.ndarray) -> np.ndarray:
    """[0,1] values → bytes, round(v·255) after clipping"""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        image = np.repeat(image[:, :, None], 3, axis=2)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ImageFormatError(f"expected an H×W×3 image, got shape {image.shape}")
    return np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)


def _pillow():
    try:
        from PIL import Image
    except ImportError as e:
        raise ImageFormatError("PNG support needs Pillow: pip install 'fourier-filter-bank[png]'") from e
    return Image


def load_image(path: str | Path) -> np.ndarray:
    """Load a P6 PPM or 8-bit RGB PNG as H×W×3 values in [0,1]

    Raises:
        ImageFormatError: unreadable file, malformed header, truncated payload
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ImageFormatError(f"cannot read image {path}: {e}") from e

    if data.startswith(PNG_SIGNATURE):
        Image = _pillow()
        try:
            with Image.open(path) as img:
                if img.mode not in ("RGB", "RGBA", "L", "P"):
                    raise ImageFormatError(f"unsupported PNG mode {img.mode}")
                pixels = np.asarray(img.convert("RGB"), dtype=np.uint8)
        except OSError as e:
            raise ImageFormatError(f"malformed PNG {path}: {e}") from e
        image = pixels.astype(np.float64) / 255.0
    else:
        image = decode_ppm(data)

    logger.debug(f"Loaded image {path} ({image.shape[1]}x{image.shape[0]})")
    return image


def save_image(path: str | Path, image: np.ndarray) -> Path:
    """Write ``image`` as PNG when the suffix is .png, otherwise as P6"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() == ".png":
        Image = _pillow()
        Image.fromarray(to_uint8(image)).save(path)
    else:
        path.write_bytes(encode_ppm(image))
    return path
