import numpy as np
import pytest

from robustopt.io import write_idx_images, write_idx_labels
from robustopt.rng import Stream


@pytest.fixture(scope="session")
def mnist_subset():
    """5000 real handwritten digits, shuffled with a fixed seed (classes arrive sorted)."""
    data = pytest.importorskip("mlxtend.data")
    X, y = data.mnist_data()
    order = Stream(20240601).permutation(len(y))
    images = np.rint(X[order]).astype(np.uint8).reshape(-1, 28, 28)
    return images, y[order].astype(np.int64)


@pytest.fixture(scope="session")
def mnist_idx(mnist_subset, tmp_path_factory):
    """The digit subset written as IDX image and label files."""
    images, labels = mnist_subset
    d = tmp_path_factory.mktemp("idx")
    write_idx_images(d / "images.idx3", images)
    write_idx_labels(d / "labels.idx1", labels)
    return d / "images.idx3", d / "labels.idx1"


def random_table(seed, n, m):
    return Stream(seed).random((n, m))
