"""Style-based terrain synthesis and authoring toolkit."""

__version__ = "0.1.0"
