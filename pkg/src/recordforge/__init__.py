"""recordforge: synthetic handwritten-record pages and counting evaluation.

The package generates labeled page images from a declarative XML layout,
extracts reusable page backgrounds from scans, augments labeled sets, and
scores record-count predictions. See README.md for the pipeline overview.
"""

from recordforge.rng import DEFAULT_SEED, substream

__all__ = ["DEFAULT_SEED", "substream"]
__version__ = "0.1.0"
