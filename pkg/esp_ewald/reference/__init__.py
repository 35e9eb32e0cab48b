"""Reference module."""
from .direct import ReferenceResult, direct_ewald, surface_correction
from .metrics import madelung_from_energy, relative_force_error
