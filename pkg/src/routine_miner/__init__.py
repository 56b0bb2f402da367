"""Discovery of recurrent routine patterns in concept-labelled lifelogs."""

__version__ = "0.1.0"
