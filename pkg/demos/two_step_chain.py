"""Two Darboux steps: a two-soliton net and its transformed Lax pair."""
import numpy as np

from pseudosurf import backlund as bl
from pseudosurf import laxpair as lp
from pseudosurf import surface as sf
from pseudosurf.timescale import GridDomain, TimeScale1D

ts = TimeScale1D.uniform(-2.0, 0.1, 40)
dom = GridDomain(ts, ts)
steps = [bl.DarbouxParams(1.0, (0.3, 1.1)), bl.DarbouxParams(2.0, (0.3, 1.1))]

for lam in (0.5, 1.0, 2.0):
    nets = bl.darboux_chain(lp.vacuum(dom), steps, lam)
    errs = [sf.gauss_curvature_dot(s).max_rel_error(-4 * lam ** 2) for s in nets[1:]]
    print(f"lambda={lam}: K rel err per step", ["%.2e" % e for e in errs])

# the final coefficient field still satisfies the zero-curvature condition
cf = nets[-1].wave.coeffs
for probe in (1.0, 0.7j, 0.3 + 0.4j):
    print("compatibility at", probe, "%.2e" % lp.compatibility_residual(cf, probe)[1])
rep = lp.verify_lax(cf, 1.0)
print("path independence %.2e  red1 %.2e  red2 %.2e" % (rep.path_independence, rep.red1, rep.red2))

# equal |kappa| would put two Darboux poles on top of each other
try:
    bl.darboux_chain(lp.vacuum(dom), [bl.DarbouxParams(1.0), bl.DarbouxParams(-1.0)], 1.0)
except bl.DarbouxError as exc:
    print("rejected:", exc)
