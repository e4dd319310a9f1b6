#!/usr/bin/env python3
"""Regenerate the committed fixture corpus under tests/fixtures/corpus.

Sources are public-domain portraits shipped with common Python packages:
  * scikit-image ``astronaut`` (NASA portrait of Eileen Collins)
  * matplotlib ``grace_hopper.jpg`` (U.S. Navy portrait)

Variants (rotation, mirroring, photometric changes, padding) give a corpus of
ten portraits plus two synthetic non-face images. Requires numpy, scikit-image,
matplotlib and Pillow; no OpenCV needed.
"""

import os
import sys

import matplotlib.cbook
import numpy as np
from PIL import Image
from skimage import data

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "tests", "fixtures", "corpus")


def rotate(img, degrees):
    # Rotation about the pixel-grid center with black fill; bilinear.
    pil = Image.fromarray(img)
    return np.asarray(pil.rotate(degrees, resample=Image.BILINEAR, fillcolor=(0, 0, 0)))


def main():
    os.makedirs(OUT, exist_ok=True)
    astronaut = data.astronaut()[0:320, 96:416].copy()
    hopper_path = matplotlib.cbook.get_sample_data("grace_hopper.jpg", asfileobj=False)
    hopper = Image.open(hopper_path).convert("RGB").crop((56, 40, 456, 520))
    hopper = np.asarray(hopper.resize((460, 552), Image.BILINEAR)).copy()

    def save(name, img):
        Image.fromarray(np.ascontiguousarray(img.astype(np.uint8))).save(os.path.join(OUT, name))

    save("portrait_01_astronaut.png", astronaut)
    save("portrait_02_hopper.png", hopper)
    save("portrait_03_astronaut_rot_ccw8.png", rotate(astronaut, 8))
    save("portrait_04_hopper_rot_cw6.png", rotate(hopper, -6))
    save("portrait_05_astronaut_mirror.png", astronaut[:, ::-1])
    save("portrait_06_hopper_mirror.png", hopper[:, ::-1])
    dark = np.clip(astronaut.astype(np.float64) * 0.7, 0, 255).round()
    save("portrait_07_astronaut_dark.png", dark)
    contrast = np.clip((hopper.astype(np.float64) - 128.0) * 1.2 + 128.0, 0, 255).round()
    save("portrait_08_hopper_contrast.png", contrast)
    padded = np.full((384, 416, 3), 96, dtype=np.uint8)
    padded[40:360, 70:390] = astronaut
    save("portrait_09_astronaut_padded.png", padded)
    save("portrait_10_hopper_rot_ccw10.png", rotate(hopper, 10))

    save("synthetic_flat_gray.png", np.full((240, 320, 3), 128, dtype=np.uint8))
    rng = np.random.default_rng(20240101)
    yy, xx = np.mgrid[0:240, 0:320]
    smooth = (127 + 60 * np.sin(xx / 23.0) * np.cos(yy / 31.0)).astype(np.float64)
    noise = np.clip(smooth[..., None] + rng.normal(0, 4, (240, 320, 3)), 0, 255).round()
    save("synthetic_smooth_texture.png", noise)
    return 0


if __name__ == "__main__":
    sys.exit(main())
