"""wavesono: desk-scale ultrasound/mammogram conversion toolkit.

Building blocks for turning X-ray-style intensity images into speed-of-sound
maps, simulating 2D acoustic wave propagation through them with transducer
arrays, reconstructing the maps back by adjoint-state full-waveform
inversion, shifting image style via Fourier-band swaps, and scoring results
with MSE/PSNR/SSIM and a family of reconstruction losses.
"""

__version__ = "0.1.0"

from . import fda, fwi, imaging, losses, phantoms, pipeline, solver, tissue  # noqa: E402,F401
from .errors import CflViolationError, NumericalError, ValidationError  # noqa: F401
