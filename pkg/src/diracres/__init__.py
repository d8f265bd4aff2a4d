"""Half-line Dirac operator: Jost function, resonances and Fredholm determinant."""

__version__ = "0.1.0"
