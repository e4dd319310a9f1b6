"""Face detection, eye alignment and cropping for portrait batches."""

import json
import os

from ._facealign import (
    DATA_DIR,
    Cascade,
    Error,
    _Pipeline,
    _resume_with_manual_eyes,
    detect_multi_scale,
    eye_angle,
    face_crop_box,
    integral_image,
    load_gray,
    luma,
    resize_bilinear,
    rotation_matrix,
    save_gray,
    to_grayscale,
    transform_point,
    warp_affine,
)

FACE_CASCADE = os.path.join(DATA_DIR, "cascades", "haarcascade_frontalface_default.xml")
EYE_CASCADE = os.path.join(DATA_DIR, "cascades", "haarcascade_eye.xml")


class Pipeline:
    """Per-image pipeline; results are manifest records as dicts."""

    def __init__(self, mode="faithful", out_size=(60, 70), crop_y="above", face_scale_factor=1.1,
                 face_min_neighbors=5, upper_face_eyes=False, face_cascade=FACE_CASCADE,
                 eye_cascade=EYE_CASCADE):
        self._impl = _Pipeline(face_cascade, eye_cascade, mode, tuple(out_size), crop_y,
                               face_scale_factor, face_min_neighbors, upper_face_eyes)

    @property
    def config_hash(self):
        return self._impl.config_hash()

    def process(self, gray, name="array"):
        """Returns (record, output image or None) for a 2-D uint8 array."""
        rec, img = self._impl.process_array(gray, name)
        return json.loads(rec), img

    def process_image(self, path, run_root=""):
        rec, img = self._impl.process_image(os.fspath(path), os.fspath(run_root))
        return json.loads(rec), img

    def run_batch(self, input_dir, run_root, jobs=1):
        """Returns the manifest records in manifest order."""
        manifest = self._impl.run_batch(os.fspath(input_dir), os.fspath(run_root), jobs)
        with open(manifest, encoding="utf-8") as f:
            return [json.loads(line) for line in f if line.strip()]


def resume_with_manual_eyes(path, a, b, crop_y="above", out_size=(60, 70), run_root=""):
    rec, img = _resume_with_manual_eyes(os.fspath(path), tuple(a), tuple(b), crop_y, tuple(out_size),
                                        os.fspath(run_root))
    return json.loads(rec), img


__all__ = [
    "Cascade",
    "Error",
    "Pipeline",
    "detect_multi_scale",
    "eye_angle",
    "face_crop_box",
    "integral_image",
    "load_gray",
    "luma",
    "resize_bilinear",
    "resume_with_manual_eyes",
    "rotation_matrix",
    "save_gray",
    "to_grayscale",
    "transform_point",
    "warp_affine",
]
