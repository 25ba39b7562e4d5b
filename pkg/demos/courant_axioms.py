"""
Brackets on TM + T*M and their axioms
=====================================

Evaluate the twisted Courant bracket on a few sections of R^3, check the
algebroid axioms on random polynomial data, and watch the Jacobi-type identity
break once the twist is no longer closed.
"""

import numpy as np

from genred import jets
from genred.calculus import (axiom_suite, b_transform, constant_field, courant_bracket, form_field,
                             random_polynomial_field, section, splitting_curvature, wedge_basis)

# constant sections d/dx and d/dy, and the twist H = dx^dy^dz
dx = constant_field([1.0, 0, 0, 0, 0, 0], 3, "section")
dy = constant_field([0, 1.0, 0, 0, 0, 0], 3, "section")
H = constant_field(wedge_basis(3, 0, 1, 2), 3, "form", 3)

p = np.array([0.3, -0.2, 0.5])
print("[d/dx, d/dy]_H =", courant_bracket(dx, dy, H).value(p))

# a Lie derivative: [d/dx, x dy] = dy
x_dy = section(None, form_field(lambda x: jets.stack([x[0] * 0.0, x[0], x[0] * 0.0]), 3, 1))
print("[d/dx, x dy]   =", courant_bracket(dx, x_dy).value(p))

# a B-field transformation shears vectors into forms: d/dx -> d/dx + dy
B = constant_field(wedge_basis(3, 0, 1), 3, "form", 2)
print("e^B d/dx       =", b_transform(dx, B).value(p))

# the splitting X -> X + i_X B has curvature H + dB
rng = np.random.default_rng(0)
Bvar = random_polynomial_field(rng, 3, "form", 2, form_degree=2)
X, Y, Z = (random_polynomial_field(rng, 3, "vector", 1) for _ in range(3))
print("curvature      =", splitting_curvature(Bvar, H, X, Y, Z, p))

# the axioms on random data, with a closed twist and with x4 dx1^dx2^dx3
for twist in ("closed", "nonclosed"):
    res = axiom_suite(seed=1, twist=twist, samples=20)
    worst = {k: f"{v:.1e}" for k, v in res["max_residuals"].items()}
    print(twist, "pass" if res["pass"] else "fail", worst)
