from __future__ import annotations

from mqt.atomgw.interferometer.atoms import AtomSpecies, doppler_splitting, lifetime_from_linewidth, quality_factor

__all__ = ["AtomSpecies", "doppler_splitting", "lifetime_from_linewidth", "quality_factor"]
