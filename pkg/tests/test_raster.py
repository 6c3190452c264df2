"""PNG I/O boundary: lossless in, lossless out, everything else rejected."""

import io

import pytest
from PIL import Image

from fourfa.raster import RasterImage, UnsupportedImage, decode_png, encode_png, read_png, write_png

from conftest import make_cover


def test_png_roundtrip_rgb(tmp_path):
    img = make_cover(20, 13)
    path = tmp_path / "img.png"
    write_png(img, path)
    assert read_png(path) == img


def test_png_roundtrip_rgba(tmp_path):
    img = make_cover(9, 5, channels=4)
    path = tmp_path / "img.png"
    write_png(img, path)
    assert read_png(path) == img


def test_bytes_roundtrip():
    img = make_cover(17, 3)
    assert decode_png(encode_png(img)) == img


def test_rejects_jpeg():
    buf = io.BytesIO()
    Image.new("RGB", (16, 16), (120, 10, 200)).save(buf, format="JPEG")
    with pytest.raises(UnsupportedImage, match="PNG"):
        decode_png(buf.getvalue())


def test_rejects_garbage():
    with pytest.raises(UnsupportedImage):
        decode_png(b"not an image at all")


def test_rejects_16bit_png():
    buf = io.BytesIO()
    Image.new("I;16", (4, 4), 512).save(buf, format="PNG")
    with pytest.raises(UnsupportedImage, match="16-bit"):
        decode_png(buf.getvalue())


def test_grayscale_png_converted_to_rgb():
    buf = io.BytesIO()
    Image.new("L", (8, 8), 77).save(buf, format="PNG")
    img = decode_png(buf.getvalue())
    assert img.channels == 3
    assert set(img.samples) == {77}


def test_palette_png_converted():
    buf = io.BytesIO()
    Image.new("RGB", (8, 8), (1, 2, 3)).convert("P").save(buf, format="PNG")
    img = decode_png(buf.getvalue())
    assert img.channels == 3


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(width=0, height=1, channels=3, samples=b""),
        dict(width=1, height=1, channels=2, samples=b"\x00\x00"),
        dict(width=2, height=2, channels=3, samples=b"\x00" * 11),
    ],
)
def test_invariant_violations(kwargs):
    with pytest.raises(ValueError):
        RasterImage(**kwargs)
