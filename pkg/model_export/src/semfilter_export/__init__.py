"""Model export tool: TinyCLIP checkpoint -> semfilter assets directory."""

__version__ = "0.1.0"

from .export import CHECKPOINT_ALIASES, ExportError, export, validate_manifest

__all__ = ["CHECKPOINT_ALIASES", "ExportError", "export", "validate_manifest"]
