"""Photophysics toolkit for point defects in semiconductors.

Modules:
    ingest        text formats for structures, phonons, grids and energy manifests
    lineshape     Huang-Rhys factors and generating-function emission spectra
    photophysics  transition dipoles, radiative rates, C2v selection rules
    spinham       zero-field splitting, hyperfine tensors, triplet levels, ODMR lines
    levels        formation energies, charge transition levels, ZPL corrections
    kinetics      rate-equation model of the optical and spin cycle
    cli           the ``dpk`` command
"""

from .errors import DpkError, ParseError

__version__ = "0.1.0"

__all__ = ["DpkError", "ParseError", "__version__"]
