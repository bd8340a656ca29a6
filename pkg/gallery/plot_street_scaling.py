"""
How street density moves coverage
=================================

With noise present, extra streets help sparse networks (more candidate
servers) and hurt dense ones (more interferers). The sign of the slope flips
at a finite base-station density.
"""
# %%
import numpy as np

from mmwave_mplp import analytic as A
from mmwave_mplp.geometry import NetworkConfig
from mmwave_mplp.validation import REFERENCE_N0

cfg = NetworkConfig(noise_n0=REFERENCE_N0)
T = 10 ** 1.5  # 15 dB

# %%
for lb in (0.002, 0.005, 0.01, 0.02, 0.05):
    c = cfg.with_(lambda_b=lb)
    slope = A.coverage_slope_lambda_s(T, c)
    print(f"lambda_b={lb:<6} coverage={A.coverage(T, c):.4f}  d/dlambda_s={slope:+.3f}")

# %%
root = A.lambda_b_crossover(T, cfg, bracket=(0.002, 0.05))
print(f"slope changes sign at lambda_b ~ {root:.4f} per metre")

# %%
# The first-order expansion is linear in lambda_s by construction; compare
# it with the exact value across a range of street densities.
for ls in np.linspace(0.001, 0.02, 5):
    c = cfg.with_(lambda_s=float(ls))
    print(f"lambda_s={ls:.4f}  exact={A.coverage(T, c):.4f}  taylor={A.coverage_taylor(T, c):.4f}")
