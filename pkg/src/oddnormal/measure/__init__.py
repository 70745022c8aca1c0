"""The measure mu[K, eps]: masses, sampling and Fourier coefficients."""

from __future__ import annotations

from .fourier import (BlockValue, E_block, FourierValue, block_magnitudes, decay_envelope,
                      lyons_bound, lyons_bound_exact, mu_hat, mu_hat_many)
from .masses import (convolution_atoms, cylinder_mass, cylinder_mass_enumerated,
                     generation_masses, interval_mass, interval_prefix)
from .sampling import (RNG_NAME, MCEstimate, SampleStream, cylinder_frequencies, mu_hat_mc,
                       sample, sample_batch)

__all__ = [
    "BlockValue", "E_block", "FourierValue", "MCEstimate", "RNG_NAME", "SampleStream",
    "block_magnitudes", "convolution_atoms", "cylinder_frequencies", "cylinder_mass",
    "cylinder_mass_enumerated", "decay_envelope", "generation_masses", "interval_mass",
    "interval_prefix", "lyons_bound", "lyons_bound_exact", "mu_hat", "mu_hat_many",
    "mu_hat_mc", "sample", "sample_batch",
]
