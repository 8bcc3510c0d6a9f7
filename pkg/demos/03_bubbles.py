"""Concentrating bubbles at the critical exponent pair p = q = 4/3 on T^2.

The wedge of the two gradients keeps an atom at the concentration point.
Inflating p by 10% moves the pair out of the critical range, and the atom
disappears. The fundamental cycle never notices it.
"""
from hodgelab import bilinear_wedge_experiment, cycle_pairing_check, subcritical_vanishing_check
from hodgelab.presets import preset

cfg = preset("crit_bubbles")
res = bilinear_wedge_experiment(cfg)
for atom in res.defect.atoms:
    print(f"atom at {tuple(round(c, 3) for c in atom.location)}  v = {atom.v}  |v| = {atom.v_norm:.5f}")
print("bound constant", res.defect.bound_constant, "stability", res.defect.bound_stability)

sub = subcritical_vanishing_check(cfg, res)
print("subcritical |v|:", sub.verdict.diagnostics["subcritical_v_norms"])

cyc = cycle_pairing_check(cfg.replace(options={"expect_atoms": True}), res)
print("cycle pairing", cyc.verdict.diagnostics["cycle_limit"], "classical",
      cyc.verdict.diagnostics["classical"])
