"""Layout DSL: parse, validate and serialize page-structure XML.

A configuration describes one collection of pages: overall geometry, an
optional header record, the corpus band where body records are stacked,
the record structure (lines and cells with sampling ranges), fonts,
dictionary and page-level noise. Pixel ranges are written as ``lo:hi``
(or a single value for a fixed quantity); probabilities are plain floats.

Example:

    <page width="512" height="732">
      <fonts><font>DejaVuSans-Oblique</font></fonts>
      <dictionary>italian</dictionary>
      <header top="18">
        <line height="22:30">
          <cell x="190:230" width="60:90"/>
        </line>
      </header>
      <corpus top="90" min_corpus_height="340" max_corpus_height="600"
              continue_probability="0.5"/>
      <record gap="2:6">
        <line height="26:34">
          <cell x="28:44" width="300:380"/>
          <cell x="400:420" width="70:88" probability="0.75"/>
        </line>
        <line height="8:16" probability="0.5">
          <cell x="100:140" width="180:260"/>
        </line>
      </record>
      <noise salt_pepper="0.002" line_rate="0.3" line_color="black"
             rotation="1.2"/>
    </page>

Templates are immutable after construction and safe to share across
worker processes. Unknown elements and attributes are rejected rather
than ignored: a typo in a probability field must not silently corrupt a
dataset.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace

__all__ = [
    "CellTemplate", "ConfigError", "LineTemplate", "NoiseSpec", "PageTemplate",
    "PixelRange", "RecordTemplate", "Violation", "parse_config",
    "serialize_config", "validate_template",
]


class ConfigError(ValueError):
    """Raised for malformed XML or a template violating its invariants."""


@dataclass(frozen=True)
class Violation:
    field: str
    constraint: str

    def __str__(self) -> str:
        return f"{self.field}: {self.constraint}"


@dataclass(frozen=True)
class PixelRange:
    """Inclusive integer range; lo == hi expresses a fixed value."""
    lo: int
    hi: int

    def sample(self, rng) -> int:
        if self.lo == self.hi:
            return self.lo
        return int(rng.integers(self.lo, self.hi + 1))


@dataclass(frozen=True)
class CellTemplate:
    x_start: PixelRange
    width: PixelRange
    presence_probability: float = 1.0


@dataclass(frozen=True)
class LineTemplate:
    height: PixelRange
    cells: tuple[CellTemplate, ...]


@dataclass(frozen=True)
class RecordTemplate:
    """Lines in document order; probability None marks a mandatory line."""
    lines: tuple[tuple[LineTemplate, float | None], ...]
    vertical_gap: PixelRange = PixelRange(0, 0)

    @property
    def mandatory_lines(self) -> tuple[LineTemplate, ...]:
        return tuple(line for line, prob in self.lines if prob is None)

    @property
    def optional_lines(self) -> tuple[tuple[LineTemplate, float], ...]:
        return tuple((line, prob) for line, prob in self.lines if prob is not None)

    def min_height(self) -> int:
        return sum(line.height.lo for line, prob in self.lines if prob is None)

    def max_height(self) -> int:
        return sum(line.height.hi for line, _ in self.lines)


@dataclass(frozen=True)
class NoiseSpec:
    salt_pepper_probability: float = 0.0
    line_artifact_rate: float = 0.0
    line_artifact_color: str = "black"
    rotation_range: float = 0.0


@dataclass(frozen=True)
class PageTemplate:
    page_width: int
    page_height: int
    corpus_top: int
    min_corpus_height: int   # y coordinate record stacking must reach
    max_corpus_height: int   # y coordinate record stacking may never pass
    record: RecordTemplate
    fonts: tuple[str, ...]
    dictionary: str
    header: RecordTemplate | None = None
    header_top: int = 0
    continue_probability: float = 0.5
    noise: NoiseSpec = field(default_factory=NoiseSpec)


# ---------------------------------------------------------------------------
# Parsing

def parse_config(xml_text: str) -> PageTemplate:
    """Parse configuration XML into a validated PageTemplate.

    Raises ConfigError with the offending line for malformed XML, and with
    the offending fields for invariant violations.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ConfigError(f"malformed XML at line {line}, column {col}: {exc.msg}") from exc

    if root.tag != "page":
        raise ConfigError(f"root element must be <page>, got <{root.tag}>")
    _check_attrs("page", root, {"width", "height"})

    width = _int_attr("page", root, "width")
    height = _int_attr("page", root, "height")

    fonts: tuple[str, ...] = ()
    dictionary = ""
    header = None
    header_top = 0
    record = None
    corpus = None
    noise = NoiseSpec()
    seen: set[str] = set()

    for child in root:
        if child.tag in seen:
            raise ConfigError(f"duplicate element <{child.tag}> under <page>")
        seen.add(child.tag)
        if child.tag == "fonts":
            _check_attrs("fonts", child, set())
            names = []
            for el in child:
                if el.tag != "font":
                    raise ConfigError(f"fonts: unknown element <{el.tag}>")
                _check_attrs("fonts/font", el, set())
                names.append((el.text or "").strip())
            fonts = tuple(names)
        elif child.tag == "dictionary":
            _check_attrs("dictionary", child, set())
            dictionary = (child.text or "").strip()
        elif child.tag == "header":
            _check_attrs("header", child, {"top"})
            header_top = _int_attr("header", child, "top", default=0)
            header = _parse_record("header", child, gap_allowed=False)
        elif child.tag == "record":
            record = _parse_record("record", child, gap_allowed=True)
        elif child.tag == "corpus":
            _check_attrs("corpus", child, {"top", "min_corpus_height",
                                           "max_corpus_height", "continue_probability"})
            if len(child):
                raise ConfigError("corpus: element takes no children")
            corpus = (
                _int_attr("corpus", child, "top"),
                _int_attr("corpus", child, "min_corpus_height"),
                _int_attr("corpus", child, "max_corpus_height"),
                _float_attr("corpus", child, "continue_probability", default=0.5),
            )
        elif child.tag == "noise":
            _check_attrs("noise", child, {"salt_pepper", "line_rate", "line_color", "rotation"})
            if len(child):
                raise ConfigError("noise: element takes no children")
            color = child.get("line_color", "black")
            if color not in ("black", "white"):
                raise ConfigError(f"noise.line_color: must be black or white, got {color!r}")
            noise = NoiseSpec(
                salt_pepper_probability=_float_attr("noise", child, "salt_pepper", default=0.0),
                line_artifact_rate=_float_attr("noise", child, "line_rate", default=0.0),
                line_artifact_color=color,
                rotation_range=_float_attr("noise", child, "rotation", default=0.0),
            )
        else:
            raise ConfigError(f"page: unknown element <{child.tag}>")

    if record is None:
        raise ConfigError("page: missing required <record> element")
    if corpus is None:
        raise ConfigError("page: missing required <corpus> element")

    template = PageTemplate(
        page_width=width,
        page_height=height,
        corpus_top=corpus[0],
        min_corpus_height=corpus[1],
        max_corpus_height=corpus[2],
        continue_probability=corpus[3],
        record=record,
        fonts=fonts,
        dictionary=dictionary,
        header=header,
        header_top=header_top,
        noise=noise,
    )
    violations = validate_template(template)
    if violations:
        details = "; ".join(str(v) for v in violations)
        raise ConfigError(f"invalid configuration: {details}")
    return template


def _parse_record(where: str, el: ET.Element, gap_allowed: bool) -> RecordTemplate:
    allowed = {"gap"} if gap_allowed else {"top"}
    _check_attrs(where, el, allowed)
    gap = _range_attr(where, el, "gap", default=PixelRange(0, 0)) if gap_allowed else PixelRange(0, 0)
    lines = []
    for line_el in el:
        if line_el.tag != "line":
            raise ConfigError(f"{where}: unknown element <{line_el.tag}>")
        _check_attrs(f"{where}/line", line_el, {"height", "probability"})
        height = _range_attr(f"{where}/line", line_el, "height")
        prob = None
        if line_el.get("probability") is not None:
            prob = _float_attr(f"{where}/line", line_el, "probability")
        cells = []
        for cell_el in line_el:
            if cell_el.tag != "cell":
                raise ConfigError(f"{where}/line: unknown element <{cell_el.tag}>")
            _check_attrs(f"{where}/line/cell", cell_el, {"x", "width", "probability"})
            cells.append(CellTemplate(
                x_start=_range_attr(f"{where}/line/cell", cell_el, "x"),
                width=_range_attr(f"{where}/line/cell", cell_el, "width"),
                presence_probability=_float_attr(f"{where}/line/cell", cell_el,
                                                 "probability", default=1.0),
            ))
        lines.append((LineTemplate(height=height, cells=tuple(cells)), prob))
    return RecordTemplate(lines=tuple(lines), vertical_gap=gap)


def _check_attrs(where: str, el: ET.Element, allowed: set[str]) -> None:
    unknown = set(el.attrib) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown attribute(s) {sorted(unknown)}")


def _int_attr(where: str, el: ET.Element, name: str, default: int | None = None) -> int:
    raw = el.get(name)
    if raw is None:
        if default is None:
            raise ConfigError(f"{where}.{name}: required attribute missing")
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{where}.{name}: expected an integer, got {raw!r}") from None


def _float_attr(where: str, el: ET.Element, name: str, default: float | None = None) -> float:
    raw = el.get(name)
    if raw is None:
        if default is None:
            raise ConfigError(f"{where}.{name}: required attribute missing")
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{where}.{name}: expected a number, got {raw!r}") from None


def _range_attr(where: str, el: ET.Element, name: str,
                default: PixelRange | None = None) -> PixelRange:
    raw = el.get(name)
    if raw is None:
        if default is None:
            raise ConfigError(f"{where}.{name}: required attribute missing")
        return default
    parts = raw.split(":")
    try:
        if len(parts) == 1:
            v = int(parts[0])
            return PixelRange(v, v)
        if len(parts) == 2:
            return PixelRange(int(parts[0]), int(parts[1]))
    except ValueError:
        pass
    raise ConfigError(f"{where}.{name}: expected 'lo:hi' or a single integer, got {raw!r}")


# ---------------------------------------------------------------------------
# Validation

def validate_template(t: PageTemplate) -> list[Violation]:
    """All invariant violations in the template; empty means valid."""
    v: list[Violation] = []
    if t.page_width <= 0:
        v.append(Violation("page.width", f"must be > 0, got {t.page_width}"))
    if t.page_height <= 0:
        v.append(Violation("page.height", f"must be > 0, got {t.page_height}"))
    if not t.fonts or any(not f for f in t.fonts):
        v.append(Violation("fonts", "at least one non-empty font id is required"))
    if not t.dictionary:
        v.append(Violation("dictionary", "a dictionary id is required"))
    if not 0.0 <= t.continue_probability <= 1.0:
        v.append(Violation("corpus.continue_probability",
                           f"must be in [0, 1], got {t.continue_probability}"))

    header_extent = 0
    if t.header is not None:
        if t.header_top < 0:
            v.append(Violation("header.top", f"must be >= 0, got {t.header_top}"))
        header_extent = t.header_top + t.header.max_height()
        v.extend(_validate_record("header", t.header, t.page_width))
    if not header_extent < t.corpus_top:
        v.append(Violation("corpus.top",
                           f"header zone extent {header_extent} must end above corpus.top "
                           f"{t.corpus_top}"))
    if not t.corpus_top <= t.min_corpus_height:
        v.append(Violation("corpus.min_corpus_height",
                           f"must be >= corpus.top, got {t.min_corpus_height} < {t.corpus_top}"))
    if not t.min_corpus_height <= t.max_corpus_height:
        v.append(Violation("corpus.max_corpus_height",
                           f"must be >= min_corpus_height, got {t.max_corpus_height} "
                           f"< {t.min_corpus_height}"))
    if not t.max_corpus_height <= t.page_height:
        v.append(Violation("corpus.max_corpus_height",
                           f"must be <= page.height, got {t.max_corpus_height} "
                           f"> {t.page_height}"))

    v.extend(_validate_record("record", t.record, t.page_width))
    if not t.record.mandatory_lines:
        v.append(Violation("record", "at least one mandatory line is required"))

    v.extend(_validate_noise(t.noise))
    return v


def _validate_record(where: str, r: RecordTemplate, page_width: int) -> list[Violation]:
    v: list[Violation] = []
    v.extend(_validate_range(f"{where}.gap", r.vertical_gap, minimum=0))
    for i, (line, prob) in enumerate(r.lines):
        loc = f"{where}.line[{i}]"
        v.extend(_validate_range(f"{loc}.height", line.height, minimum=1))
        if prob is not None and not 0.0 <= prob <= 1.0:
            v.append(Violation(f"{loc}.probability", f"must be in [0, 1], got {prob}"))
        for j, cell in enumerate(line.cells):
            cloc = f"{loc}.cell[{j}]"
            v.extend(_validate_range(f"{cloc}.x", cell.x_start, minimum=0))
            v.extend(_validate_range(f"{cloc}.width", cell.width, minimum=1))
            if not 0.0 <= cell.presence_probability <= 1.0:
                v.append(Violation(f"{cloc}.probability",
                                   f"must be in [0, 1], got {cell.presence_probability}"))
            if cell.x_start.hi + cell.width.hi > page_width:
                v.append(Violation(f"{cloc}", f"x + width may reach "
                                   f"{cell.x_start.hi + cell.width.hi}, beyond page width "
                                   f"{page_width}"))
    return v


def _validate_range(name: str, r: PixelRange, minimum: int) -> list[Violation]:
    v = []
    if r.lo > r.hi:
        v.append(Violation(name, f"lo must be <= hi, got {r.lo}:{r.hi}"))
    if r.lo < minimum:
        v.append(Violation(name, f"lo must be >= {minimum}, got {r.lo}"))
    return v


def _validate_noise(n: NoiseSpec) -> list[Violation]:
    v = []
    if not 0.0 <= n.salt_pepper_probability <= 1.0:
        v.append(Violation("noise.salt_pepper",
                           f"must be in [0, 1], got {n.salt_pepper_probability}"))
    if n.line_artifact_rate < 0:
        v.append(Violation("noise.line_rate", f"must be >= 0, got {n.line_artifact_rate}"))
    if n.line_artifact_color not in ("black", "white"):
        v.append(Violation("noise.line_color",
                           f"must be black or white, got {n.line_artifact_color!r}"))
    if n.rotation_range < 0:
        v.append(Violation("noise.rotation", f"must be >= 0, got {n.rotation_range}"))
    return v


# ---------------------------------------------------------------------------
# Serialization

def serialize_config(t: PageTemplate) -> str:
    """Render a template back to configuration XML (parse round-trips)."""
    root = ET.Element("page", width=str(t.page_width), height=str(t.page_height))
    fonts = ET.SubElement(root, "fonts")
    for name in t.fonts:
        ET.SubElement(fonts, "font").text = name
    ET.SubElement(root, "dictionary").text = t.dictionary
    if t.header is not None:
        header = ET.SubElement(root, "header", top=str(t.header_top))
        _emit_lines(header, t.header)
    ET.SubElement(root, "corpus", top=str(t.corpus_top),
                  min_corpus_height=str(t.min_corpus_height),
                  max_corpus_height=str(t.max_corpus_height),
                  continue_probability=repr(t.continue_probability))
    record = ET.SubElement(root, "record", gap=_fmt_range(t.record.vertical_gap))
    _emit_lines(record, t.record)
    n = t.noise
    ET.SubElement(root, "noise", salt_pepper=repr(n.salt_pepper_probability),
                  line_rate=repr(n.line_artifact_rate), line_color=n.line_artifact_color,
                  rotation=repr(n.rotation_range))
    ET.indent(root)
    return ET.tostring(root, encoding="unicode")


def _emit_lines(parent: ET.Element, record: RecordTemplate) -> None:
    for line, prob in record.lines:
        attrs = {"height": _fmt_range(line.height)}
        if prob is not None:
            attrs["probability"] = repr(prob)
        line_el = ET.SubElement(parent, "line", **attrs)
        for cell in line.cells:
            ET.SubElement(line_el, "cell", x=_fmt_range(cell.x_start),
                          width=_fmt_range(cell.width),
                          probability=repr(cell.presence_probability))


def _fmt_range(r: PixelRange) -> str:
    return str(r.lo) if r.lo == r.hi else f"{r.lo}:{r.hi}"
