"""Conic program solver and SDPA file exchange."""
from .sdpa import export_sdpa, import_sdpa_solution, read_sdpa, write_sdpa

__all__ = ["export_sdpa", "import_sdpa_solution", "read_sdpa", "write_sdpa"]
