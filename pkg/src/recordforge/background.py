"""Palimpsest backgrounds: erase the ink from scanned pages.

Foreground pixels (per a global Otsu pass on the input) are replaced by
the mean of the background pixels inside a 20x20 window around each one;
background pixels are left untouched. The emptied pages serve as the
substrate that synthetic text is written on.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from recordforge.imaging import _integral, _window_sums, as_page, load_page, otsu_threshold

__all__ = ["PalimpsestSet", "extract_background"]

# The 20x20 window has no exact center; the target pixel sits at position
# (10, 10) of the 0..19 grid, i.e. rows y-9 .. y+10 and cols x-9 .. x+10.
_BEFORE = 9
_AFTER = 10
_GROW_STEP = 10


def extract_background(img) -> np.ndarray:
    """Replace Otsu-classified ink with local background means.

    Windows are clipped at the borders. A window with no background pixels
    grows by 10 px per side until it captures one; background membership is
    always judged on the input classification, never on replaced values.
    """
    a = as_page(img)
    level = otsu_threshold(a)
    fg = a < level
    if not fg.any():
        return a.copy()

    h, w = a.shape
    bg = ~fg
    bg_vals = np.where(bg, a, 0).astype(np.int64)
    sums = _integral(bg_vals)
    counts = _integral(bg.astype(np.int64))

    ys = np.arange(h)
    xs = np.arange(w)
    y0 = np.clip(ys - _BEFORE, 0, None)
    y1 = np.clip(ys + _AFTER + 1, None, h)
    x0 = np.clip(xs - _BEFORE, 0, None)
    x1 = np.clip(xs + _AFTER + 1, None, w)
    S = _window_sums(sums, y0, y1, x0, x1)
    C = _window_sums(counts, y0, y1, x0, x1)

    out = a.copy()
    ready = fg & (C > 0)
    means = np.zeros(a.shape)
    np.divide(S, C, out=means, where=C > 0)
    out[ready] = np.rint(means[ready]).astype(np.uint8)

    starved = fg & (C == 0)
    for y, x in zip(*np.nonzero(starved)):
        out[y, x] = _grown_window_mean(a, bg, int(y), int(x))
    return out


def _grown_window_mean(a, bg, y, x) -> int:
    before, after = _BEFORE, _AFTER
    h, w = a.shape
    while True:
        before += _GROW_STEP
        after += _GROW_STEP
        wy0, wy1 = max(0, y - before), min(h, y + after + 1)
        wx0, wx1 = max(0, x - before), min(w, x + after + 1)
        mask = bg[wy0:wy1, wx0:wx1]
        if mask.any():
            return int(np.rint(a[wy0:wy1, wx0:wx1][mask].mean()))
        if wy0 == 0 and wx0 == 0 and wy1 == h and wx1 == w:
            # Unreachable for non-constant images: Otsu always leaves a
            # non-empty background class. Keep the pixel as a last resort.
            return int(a[y, x])


@dataclass(frozen=True)
class PalimpsestSet:
    """Ink-free substrate pages plus their provenance ids."""
    backgrounds: tuple[np.ndarray, ...]
    source_ids: tuple[str, ...]

    def __post_init__(self):
        if len(self.backgrounds) != len(self.source_ids):
            raise ValueError("backgrounds and source_ids must align")
        if not self.backgrounds:
            raise ValueError("a palimpsest set needs at least one background")

    def __len__(self) -> int:
        return len(self.backgrounds)

    @classmethod
    def from_dir(cls, path) -> "PalimpsestSet":
        """Load every PNG in a directory, sorted by name."""
        files = sorted(Path(path).glob("*.png"))
        if not files:
            raise ValueError(f"no PNG backgrounds in {path}")
        return cls(tuple(load_page(f) for f in files), tuple(f.stem for f in files))

    @classmethod
    def flat(cls, width: int, height: int,
             intensities=(172, 181, 190, 199)) -> "PalimpsestSet":
        """Built-in plain substrates for running without scanned sources."""
        pages = tuple(np.full((height, width), v, dtype=np.uint8) for v in intensities)
        ids = tuple(f"flat_{v}" for v in intensities)
        return cls(pages, ids)
