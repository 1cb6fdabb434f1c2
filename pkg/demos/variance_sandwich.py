"""Three estimates of the conditional variance V(eps) of a Gaussian hull.

With W(2 pi n) = M(2 pi |n|) / (1 + n^2), M(t) = exp(sqrt t): the closed-form
bound, the Karhunen lower bound from the explicit bump, and the numerical
conditional variance on a 256-point grid should be ordered (up to 5% slack).
"""
from quasiloc.hull import SpectralWeight
from quasiloc.interp import Majorant, majorant_weight, measured_eta, variance_report

M = Majorant.sqrt_exp()
w = majorant_weight(M, nu=1, cutoff=64)
print(f"{'eps':>6} {'bound':>11} {'karhunen':>11} {'grid':>11} ok")
for eps in (0.5, 0.25, 0.125):
    r = variance_report(w, M, eps)
    print(f"{eps:6.3f} {r.paper_bound:11.3e} {r.karhunen_lower:11.3e} {r.grid_upper:11.3e} {r.chain_ok}")

eta, curve = measured_eta(SpectralWeight.exponential(1, 0.4), [2.0**-k for k in range(1, 6)])
print(f"\nmeasured eta for W = exp(|l|^0.4): {eta:.3f} (zeta / (1 - zeta) = {0.4 / 0.6:.3f})")
