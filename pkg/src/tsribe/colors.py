"""Named-color labeling for the region a pointing finger indicates."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from typing import Optional

import numpy as np

from .core import Hand

# Sample-window offset away from the fingertip (pixels): up and away from
# the pointing finger so the finger itself is excluded from the sample.
DEFAULT_OFFSET_PX = 16
DEFAULT_WINDOW_PX = 24


@dataclass(frozen=True)
class NamedColor:
    name: str
    r: int
    g: int
    b: int


class NamedColorTable:
    """The 147 extended web color names."""

    def __init__(self, entries: list[NamedColor]):
        names = [e.name for e in entries]
        if len(set(names)) != len(names):
            raise ValueError("duplicate color names in table")
        for e in entries:
            if not all(0 <= c <= 255 for c in (e.r, e.g, e.b)):
                raise ValueError(f"channel out of range: {e}")
        # Sorted by name so the argmin tie-break is alphabetical.
        self.entries = sorted(entries, key=lambda e: e.name)
        self._rgb = np.array([[e.r, e.g, e.b] for e in self.entries], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def builtin(cls) -> "NamedColorTable":
        text = resources.files("tsribe.data").joinpath("css3_colors.csv").read_text()
        return cls._from_csv_text(text)

    @classmethod
    def from_csv(cls, path) -> "NamedColorTable":
        with open(path, encoding="utf-8") as fh:
            return cls._from_csv_text(fh.read())

    @classmethod
    def _from_csv_text(cls, text: str) -> "NamedColorTable":
        reader = csv.DictReader(text.splitlines())
        return cls([NamedColor(row["name"], int(row["r"]), int(row["g"]), int(row["b"]))
                    for row in reader])

    def nearest(self, rgb) -> str:
        """Name of the table entry nearest in squared-Euclidean RGB distance.

        Ties resolve alphabetically (entries are name-sorted and argmin
        returns the first minimum).
        """
        rgb = np.asarray(rgb, dtype=np.float64)
        if rgb.shape != (3,) or rgb.min() < 0 or rgb.max() > 255:
            raise ValueError(f"rgb channels must be in [0, 255]: {rgb}")
        d2 = ((self._rgb - rgb) ** 2).sum(axis=1)
        return self.entries[int(np.argmin(d2))].name


def nearest_named_color(rgb, table: Optional[NamedColorTable] = None) -> str:
    return (table or _builtin_table()).nearest(rgb)


_TABLE_CACHE: Optional[NamedColorTable] = None


def _builtin_table() -> NamedColorTable:
    global _TABLE_CACHE
    if _TABLE_CACHE is None:
        _TABLE_CACHE = NamedColorTable.builtin()
    return _TABLE_CACHE


def sample_region(image, fingertip_px: tuple[int, int], pointing_side: Hand,
                  offset: int = DEFAULT_OFFSET_PX,
                  window: int = DEFAULT_WINDOW_PX) -> tuple[float, float, float]:
    """Mean RGB of a window near the fingertip, offset to exclude the finger.

    A right pointing hand samples left/up of the fingertip; a left hand
    samples right/up. The window is clamped to image bounds.
    """
    arr = np.asarray(image.convert("RGB"), dtype=np.float64)
    h, w = arr.shape[:2]
    fx, fy = fingertip_px
    if not (0 <= fx < w and 0 <= fy < h):
        raise ValueError(f"fingertip ({fx}, {fy}) outside image {w}x{h}")
    dx = -offset if pointing_side is Hand.RIGHT else offset
    # Clamp the window center so a fingertip near a border still samples.
    cx = min(max(fx + dx, 0), w - 1)
    cy = min(max(fy - offset, 0), h - 1)
    half = window // 2
    x0, x1 = max(0, cx - half), min(w, cx + half)
    y0, y1 = max(0, cy - half), min(h, cy + half)
    region = arr[y0:y1, x0:x1]
    mean = region.reshape(-1, 3).mean(axis=0)
    return float(mean[0]), float(mean[1]), float(mean[2])
