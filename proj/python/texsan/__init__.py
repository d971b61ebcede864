"""Python interface to the LaTeX submission sanitizer core."""

from _texsan import (  # noqa: F401
    __version__,
    clean,
    compare_pdfs,
    filter_candidate,
    find_irrelevant_spans,
    parse_roundtrip,
    scan_text,
    shannon_entropy,
    strip_irrelevant,
)

__all__ = [
    "__version__",
    "clean",
    "compare_pdfs",
    "filter_candidate",
    "find_irrelevant_spans",
    "parse_roundtrip",
    "scan_text",
    "shannon_entropy",
    "strip_irrelevant",
]
