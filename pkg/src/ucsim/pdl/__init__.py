"""Protocol description language: parsing, formatting and compilation."""

from .compiler import LISTINGS, CompileError, compile_document, compile_listing, compile_text, load_listing
from .syntax import Diagnostic, PdlDocument, PdlError, diagnose, format_document, parse

__all__ = [
    "LISTINGS",
    "CompileError",
    "Diagnostic",
    "PdlDocument",
    "PdlError",
    "compile_document",
    "compile_listing",
    "compile_text",
    "diagnose",
    "format_document",
    "load_listing",
    "parse",
]
