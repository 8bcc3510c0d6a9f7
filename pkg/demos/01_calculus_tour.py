"""A short tour of the form calculus on the flat 2-torus.

Builds a 1-form, takes d and d*, splits it into exact, coexact and harmonic
parts, and checks the identities that the rest of the package leans on.
"""
import numpy as np

from hodgelab import (Form, TorusGrid, codifferential, exterior_derivative, hodge_decompose,
                      hodge_star, inner_pairing, lp_norm, wedge)

grid = TorusGrid.cube(2, 128)
x, y = grid.coords()

# w = (sin 2pi y + 0.3) dx1 + cos 2pi x sin 4pi y dx2
w = Form.from_components(grid, 1, {(1,): np.sin(2 * np.pi * y) + 0.3 + 0 * x,
                                   (2,): np.cos(2 * np.pi * x) * np.sin(4 * np.pi * y)})

f = Form.scalar(grid, np.exp(np.cos(2 * np.pi * x)) * np.sin(2 * np.pi * y))

print("||d d f||        ", lp_norm(exterior_derivative(exterior_derivative(f)), 2))
print("** w + w         ", lp_norm(hodge_star(hodge_star(w)) + w, 2))

parts = hodge_decompose(w)
print("harmonic part    ", parts.harmonic.mean())
print("reconstruction   ", lp_norm(parts.recombine() - w, 2))
print("<exact, coexact> ", inner_pairing(parts.exact, parts.coexact))

# adjointness of d and d*
lhs = inner_pairing(exterior_derivative(f), w)
rhs = inner_pairing(f, codifferential(w))
print("<df, w> - <f, d*w>", lhs - rhs)

print("dx1 ^ dx2 area   ", wedge(Form.constant(grid, 1, [1, 0]), Form.constant(grid, 1, [0, 1])).mean())
