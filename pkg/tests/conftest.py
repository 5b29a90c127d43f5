import numpy as np
import pytest

from recordforge.config import (
    CellTemplate, LineTemplate, NoiseSpec, PageTemplate, PixelRange, RecordTemplate,
    parse_config,
)
from recordforge.resources import bundled_data_dir


@pytest.fixture(scope="session")
def benchmark_template() -> PageTemplate:
    """The canonical sample configuration shipped with the package."""
    return parse_config((bundled_data_dir() / "sample_config.xml").read_text("utf-8"))


def fixed_line(height: int, x: int = 10, width: int = 80) -> LineTemplate:
    return LineTemplate(height=PixelRange(height, height),
                        cells=(CellTemplate(PixelRange(x, x), PixelRange(width, width)),))


def make_template(*, page_width=200, page_height=400, corpus_top=10,
                  min_y=210, max_y=210, record=None, header=None,
                  continue_probability=0.5, noise=None, fonts=("DejaVuSans",),
                  dictionary="latin") -> PageTemplate:
    if record is None:
        record = RecordTemplate(lines=((fixed_line(40), None),))
    return PageTemplate(
        page_width=page_width, page_height=page_height, corpus_top=corpus_top,
        min_corpus_height=min_y, max_corpus_height=max_y, record=record,
        fonts=fonts, dictionary=dictionary, header=header,
        continue_probability=continue_probability,
        noise=noise or NoiseSpec(),
    )


def flat_background(width: int, height: int, value: int = 181) -> np.ndarray:
    return np.full((height, width), value, dtype=np.uint8)
