"""Refining interval grids: curvature stays exact, geodesic and chord derivatives converge."""
import numpy as np

from pseudosurf import backlund as bl
from pseudosurf import laxpair as lp
from pseudosurf import quatalg as qa
from pseudosurf import surface as sf
from pseudosurf.timescale import GridDomain, TimeScale1D

rows = []
for n in (25, 50, 100, 200):
    ts = TimeScale1D.interval(0.0, 1.0, n)
    s = bl.darboux_chain(lp.vacuum(GridDomain(ts, ts)), [bl.DarbouxParams(1.0)], 1.0)[-1]
    rep = sf.curvature_report(s)
    phi = s.wave.psi / qa.norm(s.wave.psi)[..., None, None]  # unit frame
    eps = ts.steps[0]
    a, b = phi[:-1], phi[1:]
    ainv = qa.inverse(a)
    chord = qa.im_project((b - a) / eps @ ainv)
    geo = qa.geodesic_delta(a, b, eps) @ ainv
    rows.append((n, eps, rep["K_max_rel_err"], float(qa.norm(chord - geo).max())))

print(" n     eps        K rel err   |chord - geodesic|  order")
for k, (n, eps, K, gap) in enumerate(rows):
    order = "" if k == 0 else "%.3f" % (np.log(rows[k - 1][3] / gap) / np.log(rows[k - 1][1] / eps))
    print(f"{n:3d}  {eps:.5f}  {K:.2e}   {gap:.3e}          {order}")
