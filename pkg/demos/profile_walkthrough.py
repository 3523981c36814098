"""Build the default warp profile, list its regions and audit a coarse grid.

Run with ``python3 demos/profile_walkthrough.py``.  Takes a few seconds.
"""
import numpy as np

from warpcurv.audit import audit_profile
from warpcurv.schedule import build_profile

prof = build_profile(epsilon=0.01, k=40)
s = prof.schedule
print("breakpoints")
for name in ("a_eps", "b_eps", "c_eps", "d_eps", "e_eps", "f_eps", "r_max"):
    print(f"  {name:6s} {getattr(s, name):+.9g}")
print("  log tau", f"{s.log_tau_eps:+.6f}", "(tau itself underflows)")

print("\nsmoothing windows")
for name, lo, hi in prof.windows():
    print(f"  {name:10s} [{lo:+.9g}, {hi:+.9g}]")

# Warps are stored in log form, so the far-left end stays representable.
r = np.array([s.a_eps - 5, s.b_eps / 2, s.e_eps, s.f_eps + 1])
d = prof.log_eval(r)
print("\nln v at a few radii:", np.round(d["log_v"], 4))

rep = audit_profile(prof, n_points=300, n_samples=2048, refine_steps=10)
print(f"\nsup K over {rep.r.size} points: {rep.global_sup_k:.3e} in region {rep.region_id[rep.binding_index]}")
for rid, row in rep.region_summary().items():
    print(f"  region {rid}: {row['status']:20s} sup K {row['sup_k']:+.3e}  min margin {row['min_margin']:+.3e}")
