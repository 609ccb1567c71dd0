"""Word-by-word gisting proxy for Web pages, with a categorization-distance evaluation kit."""

__version__ = "0.1.0"
