"""Seeded synthetic concrete-surface images for fixtures and smoke tests.

Not a substitute for real photographs: the textures are smoothed noise with
a lighting gradient, and cracked samples get a dark, jagged polyline that
crosses the patch.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFilter

from .classify.forest import derive_seed

SIZE = 227


def concrete_image(seed: int, cracked: bool, size: int = SIZE) -> np.ndarray:
    """(size, size, 3) uint8 RGB patch."""
    rng = np.random.default_rng(seed)
    coarse = rng.normal(0.0, 1.0, (size // 16 + 2, size // 16 + 2))
    base = np.asarray(
        Image.fromarray(((coarse - coarse.min()) / np.ptp(coarse) * 255).astype(np.uint8)).resize(
            (size, size), Image.BICUBIC),
        dtype=np.float64,
    )
    level = rng.uniform(140, 200)
    yy, xx = np.mgrid[0:size, 0:size] / size
    angle = rng.uniform(0, 2 * np.pi)
    light = rng.uniform(-12, 12) * (np.cos(angle) * xx + np.sin(angle) * yy)
    gray = level + 0.12 * (base - 128) + light + rng.normal(0, 9, (size, size))
    img = Image.fromarray(np.clip(gray, 0, 255).astype(np.uint8))

    if cracked:
        draw = ImageDraw.Draw(img)
        # enter on one side, leave on the opposite one
        if rng.random() < 0.5:
            pts = [(rng.uniform(0, size), 0.0)]
            steps = int(rng.integers(6, 12))
            for i in range(1, steps + 1):
                x = pts[-1][0] + rng.normal(0, size / 14)
                pts.append((float(np.clip(x, 0, size - 1)), i * size / steps))
        else:
            pts = [(0.0, rng.uniform(0, size))]
            steps = int(rng.integers(6, 12))
            for i in range(1, steps + 1):
                y = pts[-1][1] + rng.normal(0, size / 14)
                pts.append((i * size / steps, float(np.clip(y, 0, size - 1))))
        shade = int(rng.uniform(20, 70))
        draw.line(pts, fill=shade, width=int(rng.integers(8, 22)), joint="curve")
        img = img.filter(ImageFilter.GaussianBlur(0.8))

    tint = rng.uniform(0.95, 1.05, 3)
    rgb = np.asarray(img, dtype=np.float64)[..., None] * tint
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)


def write_fixture(root, n_per_class: int = 100, seed: int = 42) -> Path:
    """Write ``root/Positive`` and ``root/Negative`` PNG folders; returns ``root``."""
    root = Path(root)
    for dirname, cracked, offset in (("Positive", True, 0), ("Negative", False, n_per_class)):
        folder = root / dirname
        folder.mkdir(parents=True, exist_ok=True)
        for i in range(n_per_class):
            arr = concrete_image(derive_seed(seed, offset + i), cracked)
            Image.fromarray(arr).save(folder / f"{i:05d}.png")
    return root
