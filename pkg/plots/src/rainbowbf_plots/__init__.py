"""Figure regeneration for rainbowbf CSV outputs."""

from .figures import FIGURE_IDS, FigureSpec, render
from .phash import hamming, phash
from .schemas import SCHEMAS, SchemaError, load_rows

__version__ = "0.1.0"
