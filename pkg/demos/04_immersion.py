"""Structural equations for a flat torus in R^4.

The Clifford torus solves d Omega + Omega ^ Omega = 0 exactly. A family of
oscillating Hessian perturbations of its second fundamental form keeps
converging weakly, and the structural residual of the weak limit stays at
round-off. Below the critical exponent the lab refuses to run.
"""
from hodgelab import TorusGrid, clifford_baseline, structural_residual, weak_continuity_experiment
from hodgelab.errors import GateError
from hodgelab.presets import preset

II, omega = clifford_baseline(TorusGrid.cube(2, 64))
print("Clifford residual:", structural_residual(omega, 2.0))

res = weak_continuity_experiment(preset("immersion"))
r = res.extras["residuals"]
print("member residuals:", {n: f"{v:.3e}" for n, v in r["members"].items()})
print(f"limit residual {r['limit']:.2e}, oracle {r['oracle']:.2e}, verdict {res.verdict.status}")

try:
    weak_continuity_experiment(preset("immersion_gate"))
except GateError as exc:
    print("gate:", exc)
