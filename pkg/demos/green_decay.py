"""Green function decay off the spectrum of the free chain.

For g = 0 the resolvent of the 1D Laplacian at E outside [-2, 2] decays like
mu^|x-y| with mu = (E - sqrt(E^2 - 4)) / 2.  We compare the fitted rate with
that closed form and with the Combes-Thomas bound.
"""
import numpy as np

from quasiloc.lattice import Box
from quasiloc.operator import assemble, combes_thomas_bound, green_decay_rate
from quasiloc.torus import GOLDEN_MEAN

op = assemble(Box(((-50, 50),)), 0.0, GOLDEN_MEAN, None, 0)
print(f"{'E':>6} {'fitted':>9} {'closed form':>12} {'CT rate':>9}")
for E in (2.5, 3.0, 5.0, 10.0):
    rate, dist, vals = green_decay_rate(op, E, (0,), r_min=10, r_max=40)
    exact = -np.log((E - np.sqrt(E * E - 4)) / 2)
    delta = float(op.spectral_distance(E))
    ct = -np.log(combes_thomas_bound(delta, 1, 1) / combes_thomas_bound(delta, 0, 1))
    print(f"{E:6.1f} {rate:9.5f} {exact:12.5f} {ct:9.5f}")
