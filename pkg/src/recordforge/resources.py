"""Font and dictionary resolution.

Font ids are file stems resolved against, in order: an explicit font
directory argument, the RECORDFORGE_FONT_DIR environment variable, and
the fonts bundled with the package. Dictionary ids are either a bundled
name (``italian``, ``latin``) or a path to any UTF-8 text file, which is
tokenized on whitespace.
"""

from __future__ import annotations

import os
from importlib import resources as _ilr
from pathlib import Path

__all__ = ["ResourceError", "bundled_data_dir", "find_font", "load_words"]

FONT_DIR_ENV = "RECORDFORGE_FONT_DIR"


class ResourceError(ValueError):
    """A font or dictionary id could not be resolved to usable content."""


def bundled_data_dir() -> Path:
    return Path(str(_ilr.files("recordforge") / "data"))


def font_search_dirs(font_dir=None) -> list[Path]:
    dirs = []
    if font_dir:
        dirs.append(Path(font_dir))
    env = os.environ.get(FONT_DIR_ENV)
    if env:
        dirs.append(Path(env))
    dirs.append(bundled_data_dir() / "fonts")
    return dirs


def find_font(font_id: str, font_dir=None) -> Path:
    """Resolve a font id to a TrueType file path."""
    if not font_id:
        raise ResourceError("empty font id")
    candidates = [font_id] if font_id.lower().endswith((".ttf", ".otf")) \
        else [font_id + ".ttf", font_id + ".otf", font_id]
    for d in font_search_dirs(font_dir):
        for name in candidates:
            p = d / name
            if p.is_file():
                return p
    direct = Path(font_id)
    if direct.is_file():
        return direct
    searched = ", ".join(str(d) for d in font_search_dirs(font_dir))
    raise ResourceError(f"font {font_id!r} not found (searched: {searched})")


def load_words(dictionary_id: str, base_dir=None) -> tuple[str, ...]:
    """Load a dictionary id into a non-empty tuple of words."""
    if not dictionary_id:
        raise ResourceError("empty dictionary id")
    bundled = bundled_data_dir() / "dictionaries" / f"{dictionary_id}.txt"
    path = None
    if "/" not in dictionary_id and "\\" not in dictionary_id and bundled.is_file():
        path = bundled
    else:
        p = Path(dictionary_id)
        if not p.is_absolute() and base_dir is not None:
            p = Path(base_dir) / p
        if p.is_file():
            path = p
    if path is None:
        raise ResourceError(f"dictionary {dictionary_id!r} not found")
    words = tuple(path.read_text(encoding="utf-8").split())
    if not words:
        raise ResourceError(f"dictionary {dictionary_id!r} contains no words")
    return words
