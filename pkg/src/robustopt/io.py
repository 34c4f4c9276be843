"""Dataset ingestion: IDX image/label files and whitespace edge lists."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .graph import EdgeListError, load_edge_list  # noqa: F401  (re-exported)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class IdxError(ValueError):
    pass


class IdxMagicError(IdxError):
    pass


class IdxTruncatedError(IdxError):
    pass


class IdxShapeError(IdxError):
    pass


def _read_idx(path, expected_magic: int, ndim: int) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise IdxTruncatedError(f"{path}: file shorter than the magic number")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise IdxMagicError(f"{path}: wrong magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise IdxTruncatedError(f"{path}: truncated header")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = int(np.prod(dims))
    payload = raw[header:]
    if len(payload) < size:
        raise IdxTruncatedError(f"{path}: expected {size} payload bytes, found {len(payload)}")
    if len(payload) > size:
        raise IdxShapeError(f"{path}: {len(payload) - size} bytes beyond the declared dimensions {dims}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def load_idx_images(path) -> np.ndarray:
    """``(N, rows, cols)`` float images scaled to [0, 1]."""
    return _read_idx(path, IDX_IMAGES_MAGIC, 3).astype(np.float64) / 255.0


def load_idx_labels(path) -> np.ndarray:
    return _read_idx(path, IDX_LABELS_MAGIC, 1).astype(np.int64)


def load_idx(path) -> np.ndarray:
    """Images or labels, dispatched on the file's magic number."""
    head = Path(path).read_bytes()[:4]
    if len(head) == 4 and struct.unpack(">I", head)[0] == IDX_LABELS_MAGIC:
        return load_idx_labels(path)
    return load_idx_images(path)


def write_idx_images(path, images) -> None:
    images = np.asarray(images)
    if images.dtype != np.uint8:
        images = np.clip(np.rint(np.asarray(images, dtype=float) * 255), 0, 255).astype(np.uint8)
    n, r, c = images.shape
    Path(path).write_bytes(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, r, c) + images.tobytes())


def write_idx_labels(path, labels) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    Path(path).write_bytes(struct.pack(">II", IDX_LABELS_MAGIC, labels.size) + labels.tobytes())
