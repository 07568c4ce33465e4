#!/usr/bin/env python3
"""Regenerate the 256x256 grayscale stand-in corpus under data/.

The images come from scikit-image's bundled sample data. Each one is
converted to 8-bit gray, center-cropped to a square and box-downsampled
to 256x256 (for the 512x512 sources this is an exact 2x2 block mean).
"""
import argparse
import pathlib

import numpy as np
from PIL import Image
import skimage.data
from skimage.color import rgb2gray

SOURCES = [
    "camera", "astronaut", "brick", "chelsea", "coffee",
    "coins", "grass", "gravel", "moon", "rocket",
]


def to_gray_u8(img: np.ndarray) -> np.ndarray:
    if img.ndim == 3:
        img = rgb2gray(img[..., :3]) * 255.0
        return np.clip(np.rint(img), 0, 255).astype(np.uint8)
    return img.astype(np.uint8)


def square_256(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    s = min(h, w)
    top, left = (h - s) // 2, (w - s) // 2
    crop = Image.fromarray(img[top:top + s, left:left + s])
    return np.asarray(crop.resize((256, 256), Image.BOX))


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in SOURCES:
        img = square_256(to_gray_u8(getattr(skimage.data, name)()))
        stem = "cameraman" if name == "camera" else name
        Image.fromarray(img).save(out / f"{stem}.pgm")
        print(f"{stem}.pgm mean={img.mean():.2f}")


if __name__ == "__main__":
    main()
