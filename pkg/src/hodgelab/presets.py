"""Built-in experiment configurations, one per scenario.

The CLI falls back to these when ``--config`` is not given; ``demos/configs``
holds the same texts as files.
"""
from __future__ import annotations

from .config import ExperimentConfig, parse_config

__all__ = ["PRESETS", "SUBCOMMAND_PRESET", "preset", "preset_text"]

_BUBBLES = """\
[experiment]
kind = {kind}
n_schedule = 4, 8, 16, 32
exponents = 4/3, 4/3
{extra}
[grid]
shape = 512x512

[factor.alpha]
kind = bubble
x0 = 0.3, 0.55

[factor.beta]
kind = bubble
x0 = 0.3, 0.55
tilt = 0, 1

[tests]
placements = 0.75, 0.2; 0.8, 0.8
bound_ns = 4, 8, 16
"""

PRESETS = {
    "decompose": """\
[experiment]
kind = decompose
seed = 0
samples = 1000
grids = 256x256, 64x64x64

[grid]
shape = 256x256

[tolerances]
calculus = 1e-9
hodge = 1e-10
""",
    "crit_bubbles": _BUBBLES.format(kind="wedge", extra=""),
    "subcritical": _BUBBLES.format(kind="subcritical", extra="inflate = 1.1"),
    "cycles": _BUBBLES.format(kind="cycles", extra="expect_atoms = true"),
    "negative_control": """\
[experiment]
kind = wedge
n_schedule = 4, 8, 16, 32
exponents = 2, 2

[grid]
shape = 512x512

[factor.alpha]
kind = oscillator
xi = 1, 0
coefficients = 1, 0

[factor.beta]
kind = oscillator
xi = 1, 0
coefficients = 0, 1

[tests]
placements = 0.3, 0.55; 0.75, 0.2
""",
    "divcurl": """\
[experiment]
kind = divcurl
n_schedule = 4, 8, 16, 32
exponents = 2, 2

[grid]
shape = 512x512

[factor.alpha]
kind = oscillator
xi = 1, 0
coefficients = 1, 0

[factor.theta]
kind = oscillator
xi = 0, 1
coefficients = 1, 0

[tests]
placements = 0.3, 0.55; 0.75, 0.2

[tolerances]
slope = -0.9
final_gap = 1e-3
""",
    "multilinear": """\
[experiment]
kind = multilinear
n_schedule = 2, 4, 8
exponents = 3, 3, 3

[grid]
shape = 128x128x128

[factor.a1]
kind = oscillator
xi = 1, 0, 0
coefficients = 1, 0, 0

[factor.a2]
kind = oscillator
xi = 0, 1, 0
coefficients = 0, 1, 0

[factor.a3]
kind = oscillator
xi = 0, 0, 1
coefficients = 0, 0, 1

[tests]
placements = 0.3, 0.55, 0.4; 0.7, 0.2, 0.8

[tolerances]
gap = 1e-2
""",
    "endpoint": """\
[experiment]
kind = endpoint
n_schedule = 4, 8, 16, 32
exponents = 1, 2

[grid]
shape = 512x512

[factor.alpha]
kind = mollified_atom
v = 1, 0.5
x0 = 0.3, 0.55

[factor.beta]
kind = smooth
modes = 1, 1, 0.05; 1, -2, 0.03
constant = 0.4, 1.0

[tests]
placements = 0.3, 0.55; 0.75, 0.2

[tolerances]
slope = -1.8
""",
    "endpoint_atoms": """\
[experiment]
kind = endpoint
n_schedule = 4, 8, 16, 32
exponents = 1, 2

[grid]
shape = 512x512

[factor.alpha]
kind = mollified_atom
v = 1, 0.5
x0 = 0.3, 0.55

[factor.beta]
kind = bubble
x0 = 0.3, 0.55
p = 2

[tests]
placements = 0.3, 0.55; 0.75, 0.2
bound_ns = 4, 8, 16
""",
    "quadratic": """\
[experiment]
kind = quadratic
n_schedule = 4, 8, 16
exponents = 2, 2

[grid]
shape = 256x256

[factor.u]
kind = oscillator
xi = 1, 0
degree = 0

[factor.w]
kind = oscillator
xi = 1, 0
degree = 0

[tests]
cells = 8
""",
    "quadratic_independent": """\
[experiment]
kind = quadratic
n_schedule = 4, 8, 16
exponents = 2, 2

[grid]
shape = 256x256

[factor.u]
kind = oscillator
xi = 1, 0
degree = 0

[factor.w]
kind = oscillator
xi = 0, 1
degree = 0

[tests]
cells = 8
""",
    "elliptic": """\
[experiment]
kind = elliptic
n_schedule = 4, 8, 16
v = 1, 0
x0 = 0.3, 0.55

[grid]
shape = 512x512

[tolerances]
blowup = 2
""",
    "gaffney": """\
[experiment]
kind = gaffney
seed = 0
samples = 100
q = 4/3, 2, 3

[grid]
shape = 64x64
""",
    "immersion": """\
[experiment]
kind = immersion
n_schedule = 4, 8, 16
exponents = 2
amplitude = 0.5

[grid]
shape = 256x256

[tolerances]
limit = 1e-3
""",
    "immersion_gate": """\
[experiment]
kind = immersion
n_schedule = 4, 8, 16
exponents = 1.2
amplitude = 0.5

[grid]
shape = 256x256
""",
}

SUBCOMMAND_PRESET = {
    "decompose": "decompose", "wedge": "crit_bubbles", "divcurl": "divcurl",
    "multilinear": "multilinear", "endpoint": "endpoint", "cycles": "cycles",
    "quadratic": "quadratic", "elliptic": "elliptic", "gaffney": "gaffney",
    "immersion": "immersion",
}


def preset_text(name: str) -> str:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def preset(name: str) -> ExperimentConfig:
    return parse_config(preset_text(name))
