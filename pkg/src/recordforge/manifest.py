"""Dataset manifests: one JSON object per line, one line per page."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

__all__ = ["ManifestEntry", "read_manifest", "resolve_path", "write_manifest"]


@dataclass
class ManifestEntry:
    id: str
    path: str                 # relative to the manifest file's directory
    record_count: int
    seed: int
    background_id: str = ""
    font_id: str = ""
    page_index: int = 0
    boxes: list = field(default_factory=list)   # [[top_y, bottom_y], ...]
    source_id: str | None = None                # original page, for variants
    fold: int | None = None
    split: str | None = None

    def to_json(self) -> str:
        d = {k: v for k, v in asdict(self).items() if v is not None}
        return json.dumps(d, sort_keys=True)


def read_manifest(path) -> list[ManifestEntry]:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
                entries.append(ManifestEntry(**d))
            except (json.JSONDecodeError, TypeError) as exc:
                raise ValueError(f"{path}:{n}: bad manifest row: {exc}") from exc
    return entries


def write_manifest(path, entries) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(entry.to_json() + "\n")


def resolve_path(manifest_path, entry: ManifestEntry) -> Path:
    """Image location of an entry, resolved against its manifest file."""
    return (Path(manifest_path).parent / entry.path).resolve()
