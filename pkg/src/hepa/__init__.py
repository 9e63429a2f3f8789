"""Long-range 2S + 2P helium dimers: potentials, vibrational spectra and
photoassociation line-shift reduction."""

from .constants import DEFAULT, PhysicalConstants, load_constants
from .spectra import WELLS, compute_spectrum, epsilon_rad, epsilon_ret, fit_c3

__version__ = "0.1.0"
