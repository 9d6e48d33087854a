"""UV-G-B aerial flower survey toolkit."""
__version__ = "0.1.0"
