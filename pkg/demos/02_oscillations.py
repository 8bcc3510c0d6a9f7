"""Oscillating 1-forms: when does the wedge of two weak limits survive?

The positive control pairs a closed and a coclosed oscillator; the product
converges to the product of the limits. The negative control drops the
differential constraint and leaves a gap of half the test integral, and the
run is flagged as tainted.
"""
import warnings

from hodgelab import bilinear_wedge_experiment, divcurl_experiment
from hodgelab.errors import HypothesisWarning
from hodgelab.presets import preset

small = dict(n_schedule=(4, 8, 16))

res = divcurl_experiment(preset("divcurl").with_grid((256, 256)).replace(**small))
print("div-curl:", res.verdict.status, "worst slope", round(res.verdict.diagnostics["worst_slope"], 2))

with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always", HypothesisWarning)
    neg = bilinear_wedge_experiment(preset("negative_control").with_grid((256, 256)).replace(**small))
print("negative control:", neg.verdict.status, "tainted =", neg.verdict.tainted,
      "exit code", neg.verdict.exit_code)
for tid, gap in neg.extras["gap_limits"].items():
    if not tid.startswith("a"):
        print(f"  gap against {tid:10s} {gap:+.6f}")
print("warnings:", [str(w.message)[:70] for w in caught])
