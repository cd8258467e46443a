import numpy as np
import pytest

from maskkit import GrayImage, bare_grid, partition


@pytest.fixture
def grid7():
    return bare_grid(7, 7)


@pytest.fixture
def grid_224_32():
    return partition(224, 224, 32)


def random_image(rng: np.random.Generator, width: int, height: int, max_value: int = 255) -> GrayImage:
    arr = rng.integers(0, max_value + 1, size=(height, width))
    return GrayImage.from_array(arr, max_value)
