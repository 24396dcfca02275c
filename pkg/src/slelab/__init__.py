"""slelab: numerical laboratory for chordal Loewner evolutions."""

__version__ = "0.1.0"
