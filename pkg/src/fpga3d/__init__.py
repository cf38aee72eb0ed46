"""Place-and-route flow for stacked (3D) FPGAs with restricted TSV sites."""

__version__ = "0.1.0"
