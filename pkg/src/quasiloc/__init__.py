"""
quasiloc: numerical laboratory for quasiperiodic lattice Schrödinger operators
with stationary Gaussian hull functions.

Modules
-------
lattice   boxes, L-rectangles, strips, boundaries
torus     torus arithmetic, shift action, Diophantine profile
hull      spectral weights, Gaussian hull sampling, covariance, Hölder estimates
interp    majorants, Fourier-decay bumps, conditional-variance bounds
operator  finite-volume Hamiltonians, Green functions, regularity/resonance
msa       scale ladder, sparsity scans, hypothesis certificates, decay masses
cli       the ``quasiloc`` command
"""
from .hull import HolderReport, HullSample, SpectralWeight, covariance, eval_hull, holder_estimate, sample_hull
from .interp import (FourierDecayFunction, Majorant, MajorantError, VarianceReport, build_bump,
                     conditional_variance_grid, fit_eta, karhunen_lower_bound, majorant_weight,
                     measured_eta, var_bound, variance_report)
from .lattice import Box, BoxDifference, LRectangle, SiteSet, Strip, are_disjoint, boundary, enumerate_rectangles
from .msa import (CensusReport, DecayReport, MsaCertificate, MsaParams, ScaleLadder, check_msa_assumptions,
                  eigen_decay, energy_grid, resonance_census, scale_sequence, sparsity_scan)
from .operator import (FiniteOperator, GreenQuery, OperatorConfig, RegularityVerdict, ResonantEnergyError,
                       assemble, combes_thomas_check, green, is_regular, is_resonant, resolvent_norm)
from .torus import DiophantineFit, ResonantFrequencyError, diophantine_profile, shift, torus_dist

__version__ = "0.1.0"
