"""Hall conductance laboratory for gapped lattice fermions on finite 2D windows."""

__version__ = "0.1.0"
