"""Figure generation for ringcover simulation CSV outputs."""

__version__ = "0.1.0"

from .figures import plot_probability, plot_snapshots, plot_sweep
from .io import SchemaError, load_summary, load_sweep, load_trace

__all__ = [
    "plot_snapshots",
    "plot_probability",
    "plot_sweep",
    "SchemaError",
    "load_trace",
    "load_summary",
    "load_sweep",
]
