"""gapcheck: detection-gap analysis of rule engines against attack trees."""

__all__ = ["__version__"]
__version__: str = "0.1.0"
