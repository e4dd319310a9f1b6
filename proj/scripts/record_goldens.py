#!/usr/bin/env python3
"""Record reference detections for the fixture corpus with OpenCV 4.x.

Run once with an OpenCV build that still ships CascadeClassifier, e.g.

    PYTHONPATH=/path/to/extracted/opencv_python_headless-4.10 \
        python3 scripts/record_goldens.py

The grayscale conversion uses the same integer rounding as the library
(round-half-up of 0.299 R + 0.587 G + 0.114 B) so both sides see identical
pixels. Eye boxes are picked by the library rule: highest neighbor count,
then larger area, then smaller x.
"""

import glob
import json
import os
import sys

import cv2
import numpy as np
from PIL import Image

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.join(HERE, "..")
CORPUS = os.path.join(ROOT, "tests", "fixtures", "corpus")
CASCADES = os.path.join(ROOT, "data", "cascades")
GOLDENS = os.path.join(ROOT, "tests", "goldens")
OUT = os.path.join(GOLDENS, "detections.jsonl")
SMALL_FACE = os.path.join(ROOT, "tests", "fixtures", "face_small.pgm")

FACE_SF, FACE_MN = 1.1, 5
EYE_SF, EYE_MN = 1.05, 3


def gray(path):
    rgb = np.asarray(Image.open(path).convert("RGB")).astype(np.int64)
    y = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000
    return np.clip(y, 0, 255).astype(np.uint8)


def rect_json(r):
    x, y, w, h = (int(v) for v in r)
    return {"x": x, "y": y, "w": w, "h": h}


def record_base_windows(face):
    """Base-size (scale 1) windows OpenCV accepts on a small face image.

    At scale 1 no resampling happens, so every window listed here must pass
    the library's single-window evaluator too. The bottom band is flat.
    """
    g = gray(os.path.join(CORPUS, "portrait_01_astronaut.png"))
    small = cv2.resize(g, (82, 82), interpolation=cv2.INTER_AREA)
    canvas = np.full((112, 82), 96, np.uint8)
    canvas[:82] = small
    cv2.imwrite(SMALL_FACE, canvas)
    rects, _ = face.detectMultiScale2(canvas, 1.1, 0, minSize=(24, 24), maxSize=(24, 24))
    rows = sorted((int(r[0]), int(r[1])) for r in rects)
    with open(os.path.join(GOLDENS, "base_windows.json"), "w") as fh:
        json.dump({"input_path": "face_small.pgm", "window": [24, 24], "passing": rows,
                   "flat_window": [0, 86]}, fh, indent=1, sort_keys=True)
        fh.write("\n")


def record_eye_retry(eye):
    """Per-entry eye results on portrait_01 for a schedule where only the last entry finds two eyes."""
    img = gray(os.path.join(CORPUS, "portrait_01_astronaut.png"))
    fx, fy, fw, fhgt = 82, 67, 93, 93
    roi = np.ascontiguousarray(img[fy:fy + fhgt, fx:fx + fw])
    schedule = [(1.05, 3, 60), (1.05, 3, 52), (1.05, 3, 20)]
    entries = []
    for sf, mn, ms in schedule:
        boxes, n = eye.detectMultiScale2(roi, sf, mn, minSize=(ms, ms))
        entry = {"scale_factor": sf, "min_neighbors": mn, "min_size": ms, "boxes": len(boxes), "eyes": None}
        if len(boxes) >= 2:
            cand = sorted(((int(n[i]), tuple(int(v) for v in boxes[i])) for i in range(len(boxes))),
                          key=lambda c: (-c[0], -c[1][2] * c[1][3], c[1][0]))
            centers = sorted(((fx + b[0] + b[2] / 2.0, fy + b[1] + b[3] / 2.0) for _, b in cand[:2]),
                             key=lambda p: (-p[0], p[1]))
            entry["eyes"] = {"left": {"x": centers[0][0], "y": centers[0][1]},
                             "right": {"x": centers[1][0], "y": centers[1][1]}}
        entries.append(entry)
    flat = np.full((93, 93), 180, np.uint8)
    flat_boxes, _ = eye.detectMultiScale2(flat, 1.05, 3)
    with open(os.path.join(GOLDENS, "eye_retry.json"), "w") as fh:
        json.dump({"input_path": "portrait_01_astronaut.png", "face_rect": rect_json((fx, fy, fw, fhgt)),
                   "schedule": entries, "flat_roi_boxes": len(flat_boxes)}, fh, indent=1, sort_keys=True)
        fh.write("\n")


def record_grouping():
    """cv2.groupRectangles on random jittered clusters."""
    rng = np.random.default_rng(7)
    with open(os.path.join(GOLDENS, "group_rectangles.jsonl"), "w") as fh:
        for case in range(40):
            rects = []
            for _ in range(rng.integers(1, 5)):
                cx, cy, side = rng.integers(0, 300), rng.integers(0, 300), rng.integers(20, 120)
                for _ in range(rng.integers(1, 9)):
                    j = max(1, side // 10)
                    rects.append([int(cx + rng.integers(-j, j + 1)), int(cy + rng.integers(-j, j + 1)),
                                  int(side + rng.integers(-j, j + 1)), int(side + rng.integers(-j, j + 1))])
            mn = int(rng.integers(0, 4))
            if mn == 0:
                continue
            grouped, weights = cv2.groupRectangles(rects, mn, 0.2)
            out = sorted([[int(v) for v in r] + [int(w)] for r, w in zip(grouped, weights)],
                         key=lambda r: (-r[2] * r[3], -r[4], r[1], r[0])) if len(grouped) else []
            fh.write(json.dumps({"case": case, "min_neighbors": mn, "rects": rects, "grouped": out}) + "\n")


def main():
    face = cv2.CascadeClassifier(os.path.join(CASCADES, "haarcascade_frontalface_default.xml"))
    eye = cv2.CascadeClassifier(os.path.join(CASCADES, "haarcascade_eye.xml"))
    records = []
    for path in sorted(glob.glob(os.path.join(CORPUS, "*.png"))):
        img = gray(path)
        rec = {"input_path": os.path.basename(path), "face_rect": None, "eyes_pre": None}
        faces, face_n = face.detectMultiScale2(img, FACE_SF, FACE_MN)
        if len(faces):
            order = sorted(range(len(faces)), key=lambda i: (-faces[i][2] * faces[i][3], faces[i][1], faces[i][0]))
            fx, fy, fw, fh = (int(v) for v in faces[order[0]])
            rec["face_rect"] = rect_json(faces[order[0]])
            roi = np.ascontiguousarray(img[fy:fy + fh, fx:fx + fw])
            boxes, n = eye.detectMultiScale2(roi, EYE_SF, EYE_MN)
            if len(boxes) >= 2:
                cand = [(int(n[i]), tuple(int(v) for v in boxes[i])) for i in range(len(boxes))]
                cand.sort(key=lambda c: (-c[0], -c[1][2] * c[1][3], c[1][0]))
                centers = [(fx + b[0] + b[2] / 2.0, fy + b[1] + b[3] / 2.0) for _, b in cand[:2]]
                centers.sort(key=lambda p: (-p[0], p[1]))
                rec["eyes_pre"] = {
                    "left": {"x": centers[0][0], "y": centers[0][1]},
                    "right": {"x": centers[1][0], "y": centers[1][1]},
                }
                rec["eye_boxes"] = [dict(rect_json(b), neighbors=k) for k, b in cand[:2]]
        records.append(rec)
        print(rec)
    with open(OUT, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    record_base_windows(face)
    record_eye_retry(eye)
    record_grouping()
    return 0


if __name__ == "__main__":
    sys.exit(main())
