"""Finite-window certificates for the two multiscale hypotheses.

Energies far outside the free band pass; adding E = 0 (inside the band)
breaks the initial-scale hypothesis and the certificate names two disjoint
singular rectangles.  At huge coupling the spectrum is essentially the
potential values and the check passes across the whole spectral range.
"""
import numpy as np

from quasiloc.hull import SpectralWeight, sample_hull
from quasiloc.lattice import centered_box
from quasiloc.msa import MsaParams, check_msa_assumptions
from quasiloc.operator import OperatorConfig
from quasiloc.torus import GOLDEN_MEAN

params = MsaParams(m=1, b=0.5, gamma=1.6, J=2, L0=10)
free = OperatorConfig.make(0.0, GOLDEN_MEAN, None, 0)

cert = check_msa_assumptions(params, free, [-6, -5, 5, 6], k_max=1)
print("free chain, |E| >= 5:", "pass" if cert.overall else "fail", "ladder", cert.ladder)

cert = check_msa_assumptions(params, free, [-6, -5, 0, 5, 6], k_max=1)
print("free chain, with E = 0:", "pass" if cert.overall else "fail")
for row in cert.witness_rows()[:4]:
    print("   ", row)

strong = OperatorConfig.make(0.1, GOLDEN_MEAN, sample_hull(SpectralWeight.exponential(1, 0.4), 7), 1e6)
ev = strong.operator(centered_box(351, 1)).eigenvalues
cert = check_msa_assumptions(params, strong, np.linspace(ev[0], ev[-1], 32), k_max=0)
print("g = 1e6, 32 energies:", "pass" if cert.overall else "fail")
print("resolvent identity cross-check:", cert.cross_checks)
