"""8-bit RGB/RGBA raster values and lossless PNG I/O.

Only lossless input is accepted: a JPEG round trip would destroy the LSB
stream, so anything that is not a PNG is rejected at this boundary.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

from PIL import Image


class UnsupportedImage(ValueError):
    """Input is not an 8-bit lossless PNG this tool can carry data in."""


@dataclass(frozen=True)
class RasterImage:
    """Row-major, top-left origin, 8-bit samples in R,G,B(,A) order."""

    width: int
    height: int
    channels: int
    samples: bytes

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be at least 1x1")
        if self.channels not in (3, 4):
            raise ValueError("channels must be 3 (RGB) or 4 (RGBA)")
        expected = self.width * self.height * self.channels
        if len(self.samples) != expected:
            raise ValueError(
                f"expected {expected} samples, got {len(self.samples)}"
            )


def _from_pil(img: Image.Image) -> RasterImage:
    if img.mode in ("RGB", "RGBA"):
        pass
    elif img.mode in ("L", "P", "1", "I;16", "I"):
        # Palette entries may carry transparency; let Pillow decide.
        target = "RGBA" if img.mode == "P" and "transparency" in img.info else "RGB"
        if img.mode in ("I;16", "I"):
            raise UnsupportedImage("16-bit samples are not supported, use 8-bit PNG")
        img = img.convert(target)
    elif img.mode in ("LA", "PA"):
        img = img.convert("RGBA")
    else:
        raise UnsupportedImage(f"unsupported image mode {img.mode!r}")
    channels = 4 if img.mode == "RGBA" else 3
    return RasterImage(img.width, img.height, channels, img.tobytes())


def _to_pil(image: RasterImage) -> Image.Image:
    mode = "RGBA" if image.channels == 4 else "RGB"
    return Image.frombytes(mode, (image.width, image.height), image.samples)


def decode_png(data: bytes) -> RasterImage:
    """Decode PNG bytes, rejecting lossy or otherwise unusable formats."""
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise UnsupportedImage(f"cannot decode image: {exc}") from exc
    if img.format != "PNG":
        raise UnsupportedImage(
            f"only lossless PNG input is supported, got {img.format}"
        )
    return _from_pil(img)


def encode_png(image: RasterImage) -> bytes:
    buf = io.BytesIO()
    _to_pil(image).save(buf, format="PNG")
    return buf.getvalue()


def read_png(path) -> RasterImage:
    with open(path, "rb") as fh:
        return decode_png(fh.read())


def write_png(image: RasterImage, path) -> None:
    _to_pil(image).save(path, format="PNG")
