import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scpsim.image_io import (
    ChannelMismatch,
    ImageBuffer,
    MalformedHeader,
    TruncatedData,
    UnsupportedMaxval,
    read_pnm,
    read_raw,
    to_gray,
    write_pnm,
    write_raw,
)


def test_read_p5():
    img = read_pnm(b"P5 2 2 255 " + bytes([1, 2, 3, 4]))
    assert (img.width, img.height, img.channels) == (2, 2, 1)
    assert img.samples.tolist() == [1, 2, 3, 4]


def test_read_p6_single_pixel():
    img = read_pnm(b"P6 1 1 255 " + bytes([10, 20, 30]))
    assert (img.width, img.height, img.channels) == (1, 1, 3)
    assert img.samples.tolist() == [10, 20, 30]


def test_read_rejects_wide_maxval():
    with pytest.raises(UnsupportedMaxval):
        read_pnm(b"P5 2 2 65535 " + bytes(8))


def test_read_tolerates_comments_and_whitespace():
    data = b"P5\n# shot in the dark\n  2\t2 # trailing\n255\n" + bytes([9, 8, 7, 6])
    img = read_pnm(data)
    assert img.samples.tolist() == [9, 8, 7, 6]


def test_read_rejects_bad_magic():
    with pytest.raises(MalformedHeader):
        read_pnm(b"P3 1 1 255 aaa")


def test_read_rejects_missing_fields():
    with pytest.raises(MalformedHeader):
        read_pnm(b"P5 2")


def test_read_rejects_nonnumeric_dimension():
    with pytest.raises(MalformedHeader):
        read_pnm(b"P5 two 2 255 aaaa")


def test_read_truncated_raster():
    with pytest.raises(TruncatedData):
        read_pnm(b"P5 2 2 255 " + bytes(3))


def test_write_canonical_header():
    img = ImageBuffer(width=1, height=1, channels=1, samples=np.zeros(1, np.uint8))
    assert write_pnm(img) == b"P5\n1 1\n255\n\x00"


def test_write_p6_magic():
    img = ImageBuffer(width=1, height=2, channels=3, samples=np.arange(6, dtype=np.uint8))
    assert write_pnm(img).startswith(b"P6\n")


@given(
    st.integers(1, 12),
    st.integers(1, 12),
    st.sampled_from([1, 3]),
    st.integers(0, 2**32 - 1),
)
def test_pnm_round_trip(width, height, channels, seed):
    rng = np.random.default_rng(seed)
    img = ImageBuffer(
        width=width,
        height=height,
        channels=channels,
        samples=rng.integers(0, 256, width * height * channels, dtype=np.uint8),
    )
    assert read_pnm(write_pnm(img)) == img


def test_raw_round_trip():
    rng = np.random.default_rng(2)
    img = ImageBuffer.from_array(rng.integers(0, 256, (4, 5, 3), dtype=np.uint8))
    assert read_raw(write_raw(img), 5, 4, 3) == img
    with pytest.raises(TruncatedData):
        read_raw(write_raw(img)[:-1], 5, 4, 3)


def test_to_gray_extremes():
    white = ImageBuffer(width=2, height=1, channels=3, samples=np.full(6, 255, np.uint8))
    assert to_gray(white).samples.tolist() == [255, 255]
    black = ImageBuffer(width=2, height=1, channels=3, samples=np.zeros(6, np.uint8))
    assert to_gray(black).samples.tolist() == [0, 0]


def test_to_gray_uses_luminance_row():
    img = ImageBuffer(width=1, height=1, channels=3, samples=np.array([100, 50, 25], np.uint8))
    assert to_gray(img).samples.tolist() == [62]


def test_to_gray_needs_three_channels():
    gray = ImageBuffer(width=1, height=1, channels=1, samples=np.zeros(1, np.uint8))
    with pytest.raises(ChannelMismatch):
        to_gray(gray)


def test_buffer_validation():
    with pytest.raises(ValueError):
        ImageBuffer(width=0, height=1, channels=1, samples=np.zeros(0, np.uint8))
    with pytest.raises(ValueError):
        ImageBuffer(width=2, height=2, channels=2, samples=np.zeros(8, np.uint8))
    with pytest.raises(ValueError):
        ImageBuffer(width=2, height=2, channels=1, samples=np.zeros(5, np.uint8))


def test_buffer_from_array_shapes():
    gray = ImageBuffer.from_array(np.zeros((3, 4), np.uint8))
    assert (gray.width, gray.height, gray.channels) == (4, 3, 1)
    rgb = ImageBuffer.from_array(np.zeros((3, 4, 3), np.uint8))
    assert (rgb.width, rgb.height, rgb.channels) == (4, 3, 3)
    assert rgb.as_array().shape == (3, 4, 3)
