"""
Who serves the receiver
=======================

Share of layouts served from the receiver's own street, from a crossing
street and from a parallel street.
"""
# %%
from mmwave_mplp import analytic as A
from mmwave_mplp import montecarlo as M
from mmwave_mplp.geometry import NetworkConfig

base = NetworkConfig(window_half=2000.0, min_segment=0.0)

# %%
print(f"{'lambda_s':>8} {'exact':>7} {'approx':>7} {'mc_typ':>7} {'mc_cross':>8} {'mc_par':>7}")
for ls in (0.001, 0.01, 0.05, 0.1):
    cfg = base.with_(lambda_s=ls)
    typ, cross, par = M.estimate_association_split(cfg, n_layouts=1000, seed=3)
    print(f"{ls:8.3f} {A.assoc_prob_typical(cfg):7.4f} {A.assoc_prob_typical_approx(cfg):7.4f} "
          f"{typ.estimate:7.4f} {cross.estimate:8.4f} {par.estimate:7.4f}")

# %%
# Association ignores the base-station density: both the typical-street
# gain and the best cross-street gain scale the same way with lambda_b.
for lb in (0.001, 0.01, 0.1):
    print(lb, A.assoc_prob_typical(base.with_(lambda_b=lb)))
