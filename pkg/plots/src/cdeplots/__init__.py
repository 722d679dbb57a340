"""Figure scripts for lfcde result bundles (CSV in, images out)."""

from .figures import (FIGURE_KINDS, EmptyInputError, MissingTableError,
                      PlotSpec, render)

__version__ = "0.1.0"
