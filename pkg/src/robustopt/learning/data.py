from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..io import load_idx_images, load_idx_labels
from ..rng import Stream

MNIST_SPLIT = (55000, 5000, 10000)


@dataclass
class LabeledDataset:
    images: np.ndarray  # (N, H, W) in [0, 1]
    labels: np.ndarray  # (N,) in 0..9
    role: str = "train"

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.images) != len(self.labels):
            raise ValueError("images and labels differ in length")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() > 9):
            raise ValueError("labels must lie in 0..9")
        if self.images.size and (self.images.min() < 0 or self.images.max() > 1):
            raise ValueError("pixel intensities must lie in [0, 1]")

    def __len__(self):
        return len(self.labels)

    @property
    def input_dim(self) -> int:
        return int(np.prod(self.images.shape[1:]))


def split_dataset(images, labels, sizes, seed: int | None = None):
    """Consecutive train/validation/test slices, optionally after a seeded shuffle."""
    images, labels = np.asarray(images), np.asarray(labels)
    if sum(sizes) > len(labels):
        raise ValueError(f"need {sum(sizes)} examples, have {len(labels)}")
    order = np.arange(len(labels)) if seed is None else Stream(seed).permutation(len(labels))
    out, start = [], 0
    for size, role in zip(sizes, ("train", "validation", "test")):
        idx = order[start:start + size]
        out.append(LabeledDataset(images[idx], labels[idx], role))
        start += size
    return tuple(out)


def _load_pair(image_path, label_path):
    images = load_idx_images(image_path)
    labels = load_idx_labels(label_path)
    if len(images) != len(labels):
        raise ValueError(f"{image_path} and {label_path} disagree on the example count")
    return images, labels


def load_mnist(train_images, train_labels, test_images=None, test_labels=None,
               sizes=MNIST_SPLIT, seed: int | None = None):
    """Train / validation / test datasets from IDX files.

    With separate test files the validation set is carved from the end of the
    training file (55000 + 5000 for MNIST) and the test set is the first
    ``sizes[2]`` test-file examples; otherwise all three come from one file.
    """
    images, labels = _load_pair(train_images, train_labels)
    if test_images is None:
        return split_dataset(images, labels, sizes, seed)
    train, val, _ = split_dataset(images, labels, (sizes[0], sizes[1], 0), seed)
    timg, tlab = _load_pair(test_images, test_labels)
    if sizes[2] > len(tlab):
        raise ValueError(f"need {sizes[2]} test examples, have {len(tlab)}")
    return train, val, LabeledDataset(timg[:sizes[2]], tlab[:sizes[2]], "test")
