"""PGM map files with a YAML sidecar (map_server style).

Two pixel modes are supported. ``trinary`` is used for static maps: a pixel
at or below ``occupied_thresh * 255`` is lethal, at or above
``free_thresh * 255`` is free, anything in between is unknown. ``raw`` stores
cost values directly and is what costmap dumps use.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from .costmap import FREE, LETHAL, UNKNOWN, Costmap


class MapFormatError(ValueError):
    pass


def write_pgm(path, pixels: np.ndarray) -> None:
    pixels = np.asarray(pixels, dtype=np.uint8)
    h, w = pixels.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MapFormatError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise MapFormatError(f"{path}: not a binary PGM (P5) file")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise MapFormatError(f"{path}: only 8-bit PGM is supported")
    body = data[pos + 1:pos + 1 + w * h]
    if len(body) != w * h:
        raise MapFormatError(f"{path}: pixel data truncated")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()


def pixels_to_costs(pixels: np.ndarray, occupied_thresh: float, free_thresh: float) -> np.ndarray:
    if not 0 <= occupied_thresh < free_thresh <= 1:
        raise MapFormatError("need 0 <= occupied_thresh < free_thresh <= 1")
    p = pixels.astype(float)
    costs = np.full(pixels.shape, UNKNOWN, dtype=np.uint8)
    costs[p >= free_thresh * 255] = FREE
    costs[p <= occupied_thresh * 255] = LETHAL
    return costs


def save_map(costmap: Costmap, pgm_path, occupied_thresh: float = 0.35,
             free_thresh: float = 0.8) -> Path:
    """Dump cost values as a raw-mode PGM plus sidecar; returns the sidecar path."""
    pgm_path = Path(pgm_path)
    write_pgm(pgm_path, np.flipud(costmap.cells))
    meta = pgm_path.with_suffix(".yaml")
    meta.write_text(
        f"image: {pgm_path.name}\n"
        f"mode: raw\n"
        f"resolution: {costmap.resolution:.6f}\n"
        f"origin: [{costmap.origin_x:.6f}, {costmap.origin_y:.6f}, 0.000000]\n"
        f"occupied_thresh: {occupied_thresh:.6f}\n"
        f"free_thresh: {free_thresh:.6f}\n",
        encoding="ascii",
    )
    return meta


def load_map(yaml_path) -> Costmap:
    """Load a static map (or a dump) from its sidecar file."""
    yaml_path = Path(yaml_path)
    try:
        meta = yaml.safe_load(yaml_path.read_text())
        image = yaml_path.parent / meta["image"]
        resolution = float(meta["resolution"])
        ox, oy = float(meta["origin"][0]), float(meta["origin"][1])
        mode = meta.get("mode", "trinary")
    except (OSError, yaml.YAMLError, KeyError, TypeError, IndexError, ValueError) as exc:
        raise MapFormatError(f"{yaml_path}: bad map metadata ({exc})") from exc
    pixels = np.flipud(read_pgm(image))
    if mode == "raw":
        cells = pixels.copy()
    elif mode == "trinary":
        cells = pixels_to_costs(pixels, float(meta.get("occupied_thresh", 0.35)),
                                float(meta.get("free_thresh", 0.8)))
    else:
        raise MapFormatError(f"{yaml_path}: unsupported mode {mode!r}")
    return Costmap(resolution, ox, oy, cells)
