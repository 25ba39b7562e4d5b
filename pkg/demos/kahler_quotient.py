"""
Reducing flat C^2 to the projective line
========================================

The circle acting diagonally on C^2 preserves the flat Kahler structure. Its
moment level |z|^2 = 1 is the three-sphere, and the quotient is CP^1 with the
Fubini-Study metric. We reduce the complex, symplectic and metric structures
fiber by fiber and compare with the closed form in the chart w = z2 / z1.
"""

import numpy as np

from genred import reduction as red
from genred.scenarios import RunConfig, builtin, fubini_study, hopf_chart, hopf_chart_differential, run

sc = builtin("S3")
rd = sc.reduction_data

# a point on the level set, reached by Newton iteration
p = red.project_to_level(rd, [1.1, 0.3, -0.4, 0.7])
print("point", p, "moment", rd.mu_value(p))

# K is spanned by the lifted generator and d mu; the reduced fiber sits inside K^perp
print("dim K, K^perp, K^G:", red.K_at(rd, p).dim, red.Kperp_at(rd, p).dim,
      red.KG_at(rd, sc.structures["G"], p).dim)

# J_omega preserves K; J_I does not, but both preserve K^G
for label in ("J_I", "J_omega"):
    flags = red.conditions_fiber(red.K_at(rd, p), sc.structures[label].value(p), sc.structures["G"].value(p))
    print(label, {k: v[0] for k, v in flags.items()})

# reduce and move the result to the chart on CP^1
rep = red.reduce_at(rd, sc.structures, p)
dp = hopf_chart_differential(p)
G_red = red.transported(rep, dp, "G")
print("reduced metric block\n", G_red[2:, :2].round(6))
print("Fubini-Study at w =", hopf_chart(p), "\n", fubini_study(hopf_chart(p))["G"][2:, :2].round(6))

# the whole pipeline over 20 sampled points
report = run(sc, RunConfig(samples=20, seed=0))
print(report.summary())
