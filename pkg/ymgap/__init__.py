"""Yang-Mills mass-gap workbench - polynomial symbols, truncated Fock spaces, spectra."""

__version__ = "0.1.0"
