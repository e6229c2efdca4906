"""Shared helpers for building deterministic random test images."""

import numpy as np

from scpsim import ImageBuffer


def random_rgb_image(rng, max_side=20) -> ImageBuffer:
    w = int(rng.integers(1, max_side + 1))
    h = int(rng.integers(1, max_side + 1))
    return ImageBuffer.from_array(rng.integers(0, 256, (h, w, 3), dtype=np.uint8))


def random_gray_image(rng, max_side=24) -> ImageBuffer:
    w = int(rng.integers(1, max_side + 1))
    h = int(rng.integers(1, max_side + 1))
    return ImageBuffer.from_array(rng.integers(0, 256, (h, w), dtype=np.uint8))


def uniform_histogram_image(rng, repeats=1) -> ImageBuffer:
    """Every gray level occurs exactly ``repeats`` times, in random order."""
    values = np.repeat(np.arange(256, dtype=np.uint8), repeats)
    rng.shuffle(values)
    return ImageBuffer(width=256 * repeats, height=1, channels=1, samples=values)


def low_contrast_image(rng, side=128, mean=125.0, spread=10.0) -> ImageBuffer:
    vals = np.clip(np.rint(rng.normal(mean, spread, (side, side))), 0, 255)
    return ImageBuffer.from_array(vals.astype(np.uint8))
