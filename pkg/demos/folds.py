"""Where the frame normal and the cross-product normal disagree in sign."""
import numpy as np

from pseudosurf import backlund as bl
from pseudosurf import laxpair as lp
from pseudosurf import surface as sf
from pseudosurf.timescale import GridDomain, TimeScale1D

ts = TimeScale1D.interval(0.0, 1.0, 15)
dom = GridDomain(ts, ts)


def sign_map(s):
    d1r, d2r = sf.delta_frame(s).interior()[:2]
    side = np.sign(np.einsum("...i,...i", np.cross(d1r, d2r), s.n[:-1, :-1])).astype(int)
    side[sf.gauss_curvature_dot(s).degenerate[:-1, :-1]] = 0
    return side


# the relative phase of c1 moves the soliton; with a quarter turn its fold
# (asymptotic lines tangent, phi = 0) passes through the origin node
for phases in ((0.0, np.pi / 2), (0.0, 0.2)):
    s = bl.darboux_chain(lp.vacuum(dom), [bl.DarbouxParams(1.0, phases)], 1.0)[-1]
    dev, flipped = sf.normal_consistency(s)
    print(f"phases {phases}: max |nu -+ n| {dev:.1e}, flipped {flipped}, "
          f"degenerate {int(sf.gauss_curvature_dot(s).degenerate[:-1, :-1].sum())}")
    print(sign_map(s))
