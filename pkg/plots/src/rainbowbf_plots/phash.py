"""Perceptual image hash for figure regression tests.

Classic DCT hash: downscale to 32x32 grayscale, 2-D DCT, keep the 8x8
low-frequency block, threshold at the median (DC excluded) -> 64 bits.
Small rendering differences flip only a few bits; layout changes flip many.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image
from scipy.fft import dctn


def phash(path: Path | str) -> str:
    """64-bit perceptual hash of an image file, as 16 hex digits."""
    img = Image.open(path).convert("L").resize((32, 32), Image.LANCZOS)
    spectrum = dctn(np.asarray(img, dtype=np.float64), norm="ortho")
    block = spectrum[:8, :8].copy()
    flat = block.reshape(-1)
    median = np.median(flat[1:])
    bits = (flat > median).astype(np.uint64)
    value = np.uint64(0)
    for b in bits:
        value = np.uint64(value << np.uint64(1)) | b
    return f"{int(value):016x}"


def hamming(a: str, b: str) -> int:
    """Bit distance between two hex hashes."""
    return bin(int(a, 16) ^ int(b, 16)).count("1")
