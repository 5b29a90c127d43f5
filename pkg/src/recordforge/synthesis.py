"""Page synthesis: sample record stacks, render text, emit labeled datasets.

Records are stacked into the corpus band one at a time until the
min_corpus_height delimiter is reached; a per-record continuation coin
then decides whether more records are added, as long as they still fit
above max_corpus_height. The realized record count is the page label.

Every page is generated from its own counter-based substream derived from
(master_seed, page_index), so datasets are bit-identical for any worker
count or execution order.
"""

from __future__ import annotations

import functools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from recordforge import imaging
from recordforge.background import PalimpsestSet
from recordforge.config import PageTemplate, RecordTemplate
from recordforge.manifest import ManifestEntry, write_manifest
from recordforge.resources import ResourceError, find_font, load_words
from recordforge.rng import substream

__all__ = [
    "CellBox", "GenerationError", "LineBox", "PageRealization", "RecordInstance",
    "fill_corpus", "generate_dataset", "render_page", "sample_record",
]

# Glyphs may poke slightly past their cell; everything is clipped to the
# cell box dilated by this margin.
OVERHANG = 2

# Em size relative to the line height, leaving ascender/descender margin.
FONT_FIT = 0.8

_FILL_ATTEMPTS = 100


class GenerationError(RuntimeError):
    """A template admits no realization, or a page failed to materialize."""


@dataclass(frozen=True)
class CellBox:
    x0: int
    y0: int
    x1: int
    y1: int
    text: str = ""

    @property
    def width(self) -> int:
        return self.x1 - self.x0


@dataclass(frozen=True)
class LineBox:
    y0: int
    y1: int
    cells: tuple[CellBox, ...]


@dataclass(frozen=True)
class RecordInstance:
    top_y: int
    bottom_y: int
    lines: tuple[LineBox, ...]

    @property
    def height(self) -> int:
        return self.bottom_y - self.top_y

    def shifted(self, dy: int) -> "RecordInstance":
        return RecordInstance(
            top_y=self.top_y + dy,
            bottom_y=self.bottom_y + dy,
            lines=tuple(
                LineBox(line.y0 + dy, line.y1 + dy,
                        tuple(replace(c, y0=c.y0 + dy, y1=c.y1 + dy) for c in line.cells))
                for line in self.lines
            ),
        )


@dataclass(frozen=True)
class PageRealization:
    image: np.ndarray
    record_count: int
    records: tuple[RecordInstance, ...]
    header_present: bool
    seed: int
    background_id: str
    font_id: str


def sample_record(template: RecordTemplate, rng: np.random.Generator) -> RecordInstance:
    """One unpositioned record realization (top at y = 0).

    Mandatory lines always appear; optional lines appear with their
    probability; heights, cell positions and widths are drawn uniformly
    from their ranges. Text is attached later, at render time.
    """
    y = 0
    lines = []
    for line_t, prob in template.lines:
        if prob is not None and not rng.random() < prob:
            continue
        lh = line_t.height.sample(rng)
        cells = []
        for cell_t in line_t.cells:
            present = rng.random() < cell_t.presence_probability
            if not present:
                continue
            x = cell_t.x_start.sample(rng)
            wd = cell_t.width.sample(rng)
            cells.append(CellBox(x0=x, y0=y, x1=x + wd, y1=y + lh))
        lines.append(LineBox(y0=y, y1=y + lh, cells=tuple(cells)))
        y += lh
    return RecordInstance(top_y=0, bottom_y=y, lines=tuple(lines))


def fill_corpus(template: PageTemplate, rng: np.random.Generator) -> list[RecordInstance]:
    """Stack records into the corpus band and return them positioned.

    Phase 1 stacks until the bottom reaches min_corpus_height. Phase 2
    flips a continuation coin before each extra record and stops as soon
    as a sampled record would cross max_corpus_height.
    """
    record_t = template.record
    top = template.corpus_top
    min_y, max_y = template.min_corpus_height, template.max_corpus_height
    if top + record_t.min_height() > max_y:
        raise GenerationError(
            f"minimum record height {record_t.min_height()} cannot fit between "
            f"corpus top {top} and max_corpus_height {max_y}")

    placed: list[RecordInstance] = []
    y = top
    while not placed or placed[-1].bottom_y < min_y:
        for _ in range(_FILL_ATTEMPTS):
            rec = sample_record(record_t, rng)
            gap = record_t.vertical_gap.sample(rng) if placed else 0
            if rec.bottom_y == 0:
                continue  # degenerate sample; cannot happen with a valid template
            if y + gap + rec.height <= max_y:
                placed.append(rec.shifted(y + gap))
                y = placed[-1].bottom_y
                break
        else:
            raise GenerationError(
                f"could not reach min_corpus_height {min_y} without crossing "
                f"max_corpus_height {max_y}; template leaves too little slack")

    while True:
        if not rng.random() < template.continue_probability:
            break
        rec = sample_record(record_t, rng)
        gap = record_t.vertical_gap.sample(rng)
        if y + gap + rec.height > max_y:
            break
        placed.append(rec.shifted(y + gap))
        y = placed[-1].bottom_y
    return placed


@functools.lru_cache(maxsize=256)
def _font(path: str, size: int) -> ImageFont.FreeTypeFont:
    try:
        return ImageFont.truetype(path, size)
    except OSError as exc:
        raise ResourceError(f"cannot load font {path}: {exc}") from exc


def render_page(template: PageTemplate, records, background, font_id: str,
                words, rng: np.random.Generator, *, seed: int = 0,
                background_id: str = "", font_dir=None) -> PageRealization:
    """Write header and record text onto a palimpsest background.

    The background is cropped to the page size (it must be at least as
    large). Cell text is drawn word by word, uniformly from ``words``,
    until the next word would overflow the cell; glyphs are composited as
    crisp masks in a per-page ink intensity.
    """
    bg = imaging.as_page(background)
    H, W = template.page_height, template.page_width
    if bg.shape[0] < H or bg.shape[1] < W:
        raise GenerationError(
            f"background {bg.shape} is smaller than the page ({H}, {W})")
    if not words:
        raise ResourceError("dictionary is empty")
    font_path = str(find_font(font_id, font_dir))

    page = bg[:H, :W].copy()
    ink = int(rng.integers(18, 64))
    header_present = template.header is not None
    if header_present:
        header = sample_record(template.header, rng).shifted(template.header_top)
        _render_record(page, header, font_path, words, rng, ink)

    rendered = tuple(_render_record(page, rec, font_path, words, rng, ink)
                     for rec in records)
    return PageRealization(
        image=page, record_count=len(rendered), records=rendered,
        header_present=header_present, seed=seed,
        background_id=background_id, font_id=font_id,
    )


def _render_record(page, rec: RecordInstance, font_path: str, words, rng,
                   ink: int) -> RecordInstance:
    new_lines = []
    for line in rec.lines:
        lh = line.y1 - line.y0
        font = _font(font_path, max(6, round(FONT_FIT * lh)))
        new_cells = []
        for cell in line.cells:
            text = _fill_words(cell.width, font, words, rng)
            if text:
                _draw_text(page, cell, text, font, ink)
            new_cells.append(replace(cell, text=text))
        new_lines.append(LineBox(line.y0, line.y1, tuple(new_cells)))
    return RecordInstance(rec.top_y, rec.bottom_y, tuple(new_lines))


def _fill_words(budget: int, font, words, rng) -> str:
    # Words are appended until the next draw would overflow the cell. The
    # first word is resampled instead of aborting, so a cell only stays
    # empty when no dictionary word fits its width at all.
    space = font.getlength(" ")
    used = 0.0
    chosen: list[str] = []
    attempts = 0
    while True:
        word = words[int(rng.integers(len(words)))]
        advance = font.getlength(word)
        need = advance if not chosen else space + advance
        if used + need > budget:
            if chosen:
                break
            attempts += 1
            if attempts >= _FILL_ATTEMPTS:
                break
            continue
        chosen.append(word)
        used += need
    return " ".join(chosen)


def _draw_text(page, cell: CellBox, text: str, font, ink: int) -> None:
    ascent, descent = font.getmetrics()
    gh = ascent + descent
    gw = int(math.ceil(font.getlength(text))) + 2
    if gh <= 0 or gw <= 0:
        return
    mask_img = Image.new("L", (gw, gh), 0)
    ImageDraw.Draw(mask_img).text((0, 0), text, font=font, fill=255)
    bits = np.asarray(mask_img) >= 128

    ty = cell.y0 + (cell.y1 - cell.y0 - gh) // 2
    tx = cell.x0
    ry0 = max(ty, cell.y0 - OVERHANG, 0)
    ry1 = min(ty + gh, cell.y1 + OVERHANG, page.shape[0])
    rx0 = max(tx, cell.x0 - OVERHANG, 0)
    rx1 = min(tx + gw, cell.x1 + OVERHANG, page.shape[1])
    if ry0 >= ry1 or rx0 >= rx1:
        return
    sub = bits[ry0 - ty:ry1 - ty, rx0 - tx:rx1 - tx]
    region = page[ry0:ry1, rx0:rx1]
    region[sub] = ink


# ---------------------------------------------------------------------------
# Dataset generation

def generate_page(template: PageTemplate, backgrounds: PalimpsestSet, words,
                  master_seed: int, index: int, font_dir=None) -> PageRealization:
    """Fully realize page ``index`` of the dataset keyed by ``master_seed``."""
    rng = substream(master_seed, index)
    bg_idx = int(rng.integers(len(backgrounds)))
    font_idx = int(rng.integers(len(template.fonts)))
    records = fill_corpus(template, rng)
    real = render_page(
        template, records, backgrounds.backgrounds[bg_idx], template.fonts[font_idx],
        words, rng, seed=master_seed, background_id=backgrounds.source_ids[bg_idx],
        font_dir=font_dir,
    )
    img = real.image
    noise = template.noise
    if noise.rotation_range > 0:
        img = imaging.rotate(img, float(rng.uniform(-noise.rotation_range,
                                                    noise.rotation_range)))
    if noise.line_artifact_rate > 0:
        img = imaging.add_line_artifacts(img, noise, rng)
    if noise.salt_pepper_probability > 0:
        img = imaging.add_salt_pepper(img, noise.salt_pepper_probability, rng)
    return replace(real, image=img)


_worker_ctx: dict = {}


def _worker_init(template, backgrounds, words, master_seed, out_dir, font_dir,
                 write_groundtruth):
    _worker_ctx.update(template=template, backgrounds=backgrounds, words=words,
                       master_seed=master_seed, out_dir=out_dir, font_dir=font_dir,
                       write_groundtruth=write_groundtruth)


def _worker_page(index: int) -> dict:
    c = _worker_ctx
    return _materialize_page(c["template"], c["backgrounds"], c["words"],
                             c["master_seed"], index, c["out_dir"], c["font_dir"],
                             c["write_groundtruth"])


def _materialize_page(template, backgrounds, words, master_seed, index, out_dir,
                      font_dir, write_groundtruth) -> dict:
    try:
        real = generate_page(template, backgrounds, words, master_seed, index,
                             font_dir=font_dir)
        page_id = f"page_{index:06d}"
        rel = f"pages/{page_id}.png"
        imaging.save_page(Path(out_dir) / rel, real.image)
        boxes = [[r.top_y, r.bottom_y] for r in real.records]
        # Label soundness by construction: the manifest label is the number
        # of records actually placed, which is the number of boxes stored.
        assert real.record_count == len(real.records) == len(boxes)
        if write_groundtruth:
            gt = {
                "id": page_id,
                "record_count": real.record_count,
                "header_present": real.header_present,
                "records": [_record_dict(r) for r in real.records],
            }
            gt_path = Path(out_dir) / "groundtruth" / f"{page_id}.json"
            gt_path.write_text(json.dumps(gt, sort_keys=True), encoding="utf-8")
        return dict(id=page_id, path=rel, record_count=real.record_count,
                    seed=master_seed, page_index=index,
                    background_id=real.background_id, font_id=real.font_id,
                    boxes=boxes)
    except Exception as exc:
        raise GenerationError(f"page {index}: {exc}") from exc


def _record_dict(rec: RecordInstance) -> dict:
    return {
        "top_y": rec.top_y,
        "bottom_y": rec.bottom_y,
        "lines": [
            {"y0": line.y0, "y1": line.y1,
             "cells": [{"x0": c.x0, "y0": c.y0, "x1": c.x1, "y1": c.y1, "text": c.text}
                       for c in line.cells]}
            for line in rec.lines
        ],
    }


def generate_dataset(template: PageTemplate, n_pages: int,
                     backgrounds: PalimpsestSet, master_seed: int, out_dir,
                     *, workers: int = 1, font_dir=None, dictionary_base=None,
                     write_groundtruth: bool = True) -> list[ManifestEntry]:
    """Generate ``n_pages`` labeled pages under ``out_dir``.

    Layout: ``pages/page_<index>.png``, ``manifest.jsonl`` and, unless
    disabled, ``groundtruth/page_<index>.json`` per page. The result is a
    pure function of (template, master_seed, backgrounds) regardless of
    ``workers``.
    """
    if n_pages < 1:
        raise GenerationError(f"n_pages must be >= 1, got {n_pages}")
    words = load_words(template.dictionary, dictionary_base)
    for i, bg in enumerate(backgrounds.backgrounds):
        if bg.shape[0] < template.page_height or bg.shape[1] < template.page_width:
            raise GenerationError(
                f"background {backgrounds.source_ids[i]!r} {bg.shape} is smaller "
                f"than the page ({template.page_height}, {template.page_width})")

    out_dir = Path(out_dir)
    (out_dir / "pages").mkdir(parents=True, exist_ok=True)
    if write_groundtruth:
        (out_dir / "groundtruth").mkdir(parents=True, exist_ok=True)

    if workers <= 1:
        rows = [_materialize_page(template, backgrounds, words, master_seed, i,
                                  out_dir, font_dir, write_groundtruth)
                for i in range(n_pages)]
    else:
        init_args = (template, backgrounds, words, master_seed, out_dir, font_dir,
                     write_groundtruth)
        with ProcessPoolExecutor(max_workers=workers, initializer=_worker_init,
                                 initargs=init_args) as pool:
            rows = list(pool.map(_worker_page, range(n_pages), chunksize=32))

    rows.sort(key=lambda r: r["page_index"])
    entries = [ManifestEntry(**row) for row in rows]
    write_manifest(out_dir / "manifest.jsonl", entries)
    return entries
