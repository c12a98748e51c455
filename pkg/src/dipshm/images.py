"""Portable-pixmap export of spectrograms (binary P5/P6, maxval 255).

Pixel values map each channel linearly from [0, channel max] to [0, 255];
an all-zero channel stays black. Matrix row 0 (the lowest retained
frequency) is the top image row; width is the time axis.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError


def to_bytes_scaled(mag: np.ndarray) -> np.ndarray:
    """uint8 image from a non-negative matrix: channel max maps to 255."""
    mag = np.asarray(mag, dtype=float)
    peak = mag.max()
    if peak <= 0:
        return np.zeros(mag.shape, dtype=np.uint8)
    scaled = np.rint(mag * (255.0 / peak))
    return np.clip(scaled, 0, 255).astype(np.uint8)


def write_pgm(path, gray: np.ndarray):
    gray = np.asarray(gray)
    if gray.ndim != 2 or gray.dtype != np.uint8:
        raise ShapeError("PGM export expects a 2-d uint8 array")
    h, w = gray.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(gray.tobytes())


def write_ppm(path, rgb: np.ndarray):
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise ShapeError("PPM export expects an (h, w, 3) uint8 array")
    h, w, _ = rgb.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(rgb.tobytes())


def export_spectrogram_images(spec: np.ndarray, out_prefix: str) -> list:
    """One grayscale PGM per channel plus an RGB PPM composite.

    ``spec`` is a (freq x time x channels) magnitude stack; each channel is
    scaled by its own maximum. Returns the written paths.
    """
    spec = np.asarray(spec)
    if spec.ndim != 3:
        raise ShapeError("expected a freq x time x channels stack")
    paths = []
    planes = []
    for ch in range(spec.shape[2]):
        img = to_bytes_scaled(spec[:, :, ch])
        planes.append(img)
        path = f"{out_prefix}_ch{ch + 1}.pgm"
        write_pgm(path, img)
        paths.append(path)
    while len(planes) < 3:
        planes.append(np.zeros_like(planes[0]))
    rgb = np.stack(planes[:3], axis=-1)
    path = f"{out_prefix}_rgb.ppm"
    write_ppm(path, rgb)
    paths.append(path)
    return paths
