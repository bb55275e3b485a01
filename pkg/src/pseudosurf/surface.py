"""Surfaces from wave fields: Sym formula, curvature, net diagnostics, OBJ export."""
from dataclasses import dataclass

import numpy as np

from . import quatalg as qa
from .laxpair import assemble_U_lambda, assemble_V_lambda
from .timescale import forward_difference

COND_TOL = 1e-10


class DegenerateSurfaceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SurfaceNet:
    """Immersion ``r`` and unit normal ``n``, both of shape ``(n1, n2, 3)``.

    ``wave`` keeps the generating wave field when the net came from the Sym
    formula; it enables the closed-form checks in :func:`delta_frame`.
    """

    domain: object
    r: np.ndarray
    n: np.ndarray
    lam: float = None
    wave: object = None

    @property
    def shape(self):
        return self.r.shape[:2]


@dataclass(frozen=True)
class TetrahedronAngles:
    theta1: float
    theta2: float
    phi: float


def _dot(u, v):
    return np.einsum("...i,...i->...", u, v)


def _unit(v):
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return v / nv


def _angle(u, v):
    """Angle between vectors via atan2, accurate near 0 and pi."""
    return np.arctan2(np.linalg.norm(np.cross(u, v), axis=-1), _dot(u, v))


def sym_surface(wf, align=True):
    """``r = Pi(Psi^-1 dPsi/dlam)`` and ``n = Psi^-1 e3 Psi`` at every node.

    The wave field must be taken at a real spectral parameter.  With
    ``align=True`` the sign of ``n`` is flipped globally, if needed, to agree
    with ``D1 r x D2 r``.
    """
    lam = complex(wf.lam)
    if abs(lam.imag) > 1e-14 * max(1.0, abs(lam)):
        raise ValueError("the Sym formula needs a real spectral parameter")
    if np.any(np.abs(qa.det(wf.psi)) <= qa.SINGULAR_TOL):
        raise qa.SingularQuaternionError("wave function is singular at some node")
    inv = qa.inverse(wf.psi)
    r = qa.to_vec3(qa.im_project(inv @ wf.psi_lambda))
    n = qa.to_vec3(inv @ qa.E3 @ wf.psi)
    net = SurfaceNet(wf.domain, r, n, lam.real, wf)
    return align_normal(net) if align else net


def cross_normal(s):
    """Unit normal ``D1 r x D2 r / |...|`` on interior nodes, NaN where degenerate."""
    d1 = forward_difference(s.r, s.domain, 1)[:, :-1]
    d2 = forward_difference(s.r, s.domain, 2)[:-1]
    cr = np.cross(d1, d2)
    deg = _degenerate(d1, d2)
    nu = _unit(cr)
    nu[deg] = np.nan
    return nu


def align_normal(s):
    nu = cross_normal(s)
    ok = np.all(np.isfinite(nu), axis=-1)
    if ok.any() and np.sum(_dot(nu[ok], s.n[:-1, :-1][ok])) < 0:
        return SurfaceNet(s.domain, s.r, -s.n, s.lam, s.wave)
    return s


@dataclass(frozen=True, eq=False)
class DeltaFrame:
    """Forward-difference derivatives; ``d1*`` lack the last t1 row, ``d2*`` the last t2 column."""

    d1r: np.ndarray
    d2r: np.ndarray
    d1n: np.ndarray
    d2n: np.ndarray
    d1r_closed: np.ndarray = None
    d2r_closed: np.ndarray = None

    def interior(self):
        """The four derivatives restricted to nodes with both successors."""
        return self.d1r[:, :-1], self.d2r[:-1], self.d1n[:, :-1], self.d2n[:-1]

    def closed_form_error(self):
        """Largest deviation of the difference quotients from ``Pi(sigma_j(Psi)^-1 (U_j)_lam Psi)``."""
        if self.d1r_closed is None:
            return None
        e1 = np.abs(self.d1r - self.d1r_closed).max() / max(1.0, np.abs(self.d1r).max())
        e2 = np.abs(self.d2r - self.d2r_closed).max() / max(1.0, np.abs(self.d2r).max())
        return float(max(e1, e2))


def delta_frame(s):
    dom = s.domain
    d1r = forward_difference(s.r, dom, 1)
    d2r = forward_difference(s.r, dom, 2)
    d1n = forward_difference(s.n, dom, 1)
    d2n = forward_difference(s.n, dom, 2)
    c1 = c2 = None
    wf = s.wave
    if wf is not None and wf.coeffs is not None:
        psi = wf.psi
        ul = assemble_U_lambda(wf.coeffs, wf.lam)
        vl = assemble_V_lambda(wf.coeffs, wf.lam)
        c1 = qa.to_vec3(qa.im_project(qa.inverse(psi[1:]) @ ul[:-1] @ psi[:-1]))
        c2 = qa.to_vec3(qa.im_project(qa.inverse(psi[:, 1:]) @ vl[:, :-1] @ psi[:, :-1]))
    return DeltaFrame(d1r, d2r, d1n, d2n, c1, c2)


def _degenerate(d1, d2, cond_tol=COND_TOL):
    cr2 = np.sum(np.cross(d1, d2) ** 2, axis=-1)
    scale = _dot(d1, d1) * _dot(d2, d2)
    return ~(cr2 >= cond_tol * scale) | ~(scale > 0)


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """``K`` on the full grid: NaN on the trailing boundary and at degenerate nodes."""

    values: np.ndarray
    degenerate: np.ndarray

    @property
    def valid(self):
        return np.isfinite(self.values)

    def max_abs_error(self, expected):
        v = self.values[self.valid]
        return float(np.abs(v - expected).max()) if v.size else None

    def max_rel_error(self, expected):
        e = self.max_abs_error(expected)
        return None if e is None else e / abs(expected)


def gauss_curvature_dot(s, cond_tol=COND_TOL, frame=None):
    """``K = -(D1n.D2r)(D2n.D1r) / ((D1r)^2 (D2r)^2 - (D1r.D2r)^2)`` per node.

    Nodes where the denominator falls below ``cond_tol (|D1r||D2r|)^2`` are
    flagged degenerate and left NaN.
    """
    fr = frame if frame is not None else delta_frame(s)
    d1r, d2r, d1n, d2n = fr.interior()
    # |D1r x D2r|^2 equals the Gram denominator and avoids its cancellation
    den = np.sum(np.cross(d1r, d2r) ** 2, axis=-1)
    deg = _degenerate(d1r, d2r, cond_tol)
    with np.errstate(invalid="ignore", divide="ignore"):
        K = -_dot(d1n, d2r) * _dot(d2n, d1r) / den
    K[deg] = np.nan
    values = np.full(s.shape, np.nan)
    values[:-1, :-1] = K
    flags = np.zeros(s.shape, dtype=bool)
    flags[:-1, :-1] = deg
    return CurvatureField(values, flags)


@dataclass(frozen=True)
class NetResiduals:
    asym1: float
    asym2: float
    cheb1: float
    cheb2: float

    def as_dict(self):
        return {"asym": [self.asym1, self.asym2], "cheb": [self.cheb1, self.cheb2]}


def _asym(dr, dn):
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.abs(_dot(dn, dr)) / (np.linalg.norm(dn, axis=-1) * np.linalg.norm(dr, axis=-1))
    rel = rel[np.isfinite(rel)]
    return float(rel.max()) if rel.size else 0.0


def _cheb(sq, axis):
    mean = sq.mean(axis=axis, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        dev = np.abs(sq - mean) / mean
    dev = dev[np.isfinite(dev)]
    return float(dev.max()) if dev.size else 0.0


def net_residuals(s, frame=None):
    """Asymptotic and weak-Chebyshev residuals.

    ``asym_j`` is the largest normalised ``|D_j n . D_j r|``; ``cheb1`` the
    largest relative deviation of ``(D1 r)^2`` from its mean along each
    ``t1``-row (likewise ``cheb2`` for ``(D2 r)^2`` along ``t2``-columns).
    """
    fr = frame if frame is not None else delta_frame(s)
    E = _dot(fr.d1r, fr.d1r)
    G = _dot(fr.d2r, fr.d2r)
    return NetResiduals(_asym(fr.d1r, fr.d1n), _asym(fr.d2r, fr.d2n), _cheb(E, 1), _cheb(G, 0))


def fundamental_data(s, frame=None):
    """``E, F, G``, the angle ``phi`` and ``m12 = -D1r.D2n``, ``m21 = -D2r.D1n`` on interior nodes."""
    fr = frame if frame is not None else delta_frame(s)
    d1r, d2r, d1n, d2n = fr.interior()
    return {
        "E": _dot(d1r, d1r),
        "G": _dot(d2r, d2r),
        "F": _dot(d1r, d2r),
        "phi": _angle(d1r, d2r),
        "m12": -_dot(d1r, d2n),
        "m21": -_dot(d2r, d1n),
    }


@dataclass(frozen=True, eq=False)
class TetCurvature:
    """Per-cell tetrahedron data; arrays of shape ``(n1-1, n2-1)``."""

    K: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    phi: np.ndarray
    ratio1: np.ndarray
    ratio2: np.ndarray
    degenerate: np.ndarray


def tetrahedron_curvature(s, cond_tol=COND_TOL):
    """Dihedral-angle curvature ``-sin(theta1) sin(theta2) / (|AB| |AD|)`` for every cell.

    ``A = r(i,j)``, ``B = r(i+1,j)``, ``D = r(i,j+1)``, ``C = r(i+1,j+1)``;
    ``theta1`` is the angle between planes ABD and ABC, ``theta2`` between
    ABD and ACD.  ``ratio_j`` are ``sin(theta_j)`` over the edge lengths.
    """
    r = s.r
    A, B, D, C = r[:-1, :-1], r[1:, :-1], r[:-1, 1:], r[1:, 1:]
    AB, AD, BC, DC = B - A, D - A, C - B, C - D
    n_abd = np.cross(AB, AD)
    n_abc = np.cross(AB, BC)
    n_acd = np.cross(DC, AD)
    deg = _degenerate(AB, AD, cond_tol) | _degenerate(AB, BC, cond_tol) | _degenerate(DC, AD, cond_tol)
    with np.errstate(invalid="ignore", divide="ignore"):
        th1 = _angle(n_abd, n_abc)
        th2 = _angle(n_abd, n_acd)
        lab = np.linalg.norm(AB, axis=-1)
        lad = np.linalg.norm(AD, axis=-1)
        ratio1 = np.sin(th1) / lab
        ratio2 = np.sin(th2) / lad
        K = -ratio1 * ratio2
    for arr in (K, ratio1, ratio2):
        arr[deg] = np.nan
    return TetCurvature(K, th1, th2, _angle(AB, AD), ratio1, ratio2, deg)


def gauss_curvature_tet(s, cell, cond_tol=COND_TOL):
    """Tetrahedron curvature of a single cell ``(i, j)``."""
    i, j = cell
    n1, n2 = s.shape
    if not (0 <= i < n1 - 1 and 0 <= j < n2 - 1):
        raise IndexError(f"cell {cell} has no complete set of corners")
    sub = SurfaceNet(s.domain, s.r[i:i + 2, j:j + 2], s.n[i:i + 2, j:j + 2], s.lam)
    tc = tetrahedron_curvature(sub, cond_tol)
    if tc.degenerate[0, 0]:
        raise DegenerateSurfaceError(f"cell {cell} has collinear corners")
    angles = TetrahedronAngles(float(tc.theta1[0, 0]), float(tc.theta2[0, 0]), float(tc.phi[0, 0]))
    return {"K_tet": float(tc.K[0, 0]), "angles": angles}


def wunderlich_K(theta, eps):
    """``-sin(theta)^2 / (eps^2 cos(theta))`` for unit-edge Chebyshev nets."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0) or np.any(theta >= np.pi / 2):
        raise ValueError("theta must lie in [0, pi/2)")
    if np.any(np.asarray(eps) <= 0):
        raise ValueError("eps must be positive")
    return -np.sin(theta) ** 2 / (np.asarray(eps) ** 2 * np.cos(theta))


def tangent_plane(s, node, cond_tol=COND_TOL):
    """Plane through ``r(node)`` spanned by ``D1 r`` and ``D2 r``."""
    i, j = node
    n1, n2 = s.shape
    if not (0 <= i < n1 - 1 and 0 <= j < n2 - 1):
        raise DegenerateSurfaceError(f"node {node} lacks a successor in some direction")
    e1 = s.domain.t1.jump(i)[1]
    e2 = s.domain.t2.jump(j)[1]
    d1 = (s.r[i + 1, j] - s.r[i, j]) / e1
    d2 = (s.r[i, j + 1] - s.r[i, j]) / e2
    if _degenerate(d1, d2, cond_tol):
        raise DegenerateSurfaceError(f"tangent vectors at node {node} are parallel")
    normal = np.cross(d1, d2)
    return {"point": s.r[i, j].copy(), "normal": normal / np.linalg.norm(normal)}


def normal_consistency(s, cond_tol=COND_TOL):
    """Compare the cross-product normal ``nu`` with ``s.n`` on non-degenerate nodes.

    Returns ``(deviation, flipped)``: the largest ``min |nu -+ n|`` and the
    number of nodes where ``nu . n < 0``.  Across a fold of the net (the angle
    between the coordinate lines passing through 0 or pi) ``nu`` reverses while
    ``n`` stays smooth, so ``flipped`` is zero only for fold-free grids.
    """
    nu = cross_normal(s)
    ok = np.all(np.isfinite(nu), axis=-1)
    if not ok.any():
        return None, 0
    nu, n = nu[ok], s.n[:-1, :-1][ok]
    dev = np.minimum(np.linalg.norm(nu - n, axis=-1), np.linalg.norm(nu + n, axis=-1))
    return float(dev.max()), int(np.count_nonzero(_dot(nu, n) < 0))


def asymptotic_coplanarity(s):
    """Normalised triple products ``[D1r, T1 D1r, T1 D2r]`` and ``[D2r, T2 D1r, T2 D2r]``."""
    fr = delta_frame(s)
    out = []
    for a, b, c in (
        (fr.d1r[:-1, :-1], fr.d1r[1:, :-1], fr.d2r[1:-1]),
        (fr.d2r[:-1, :-1], fr.d1r[:, 1:-1], fr.d2r[:-1, 1:]),
    ):
        trip = np.abs(_dot(np.cross(a, b), c))
        scale = np.linalg.norm(a, axis=-1) * np.linalg.norm(b, axis=-1) * np.linalg.norm(c, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = trip / scale
        rel = rel[np.isfinite(rel)]
        out.append(float(rel.max()) if rel.size else 0.0)
    return tuple(out)


def _spread(x):
    x = x[np.isfinite(x)]
    if x.size == 0:
        return None
    return float(np.ptp(x) / np.abs(x.mean()))


def curvature_report(s, cond_tol=COND_TOL):
    """JSON-ready summary of curvature, net residuals and tetrahedron cross-checks."""
    fr = delta_frame(s)
    Kf = gauss_curvature_dot(s, cond_tol, fr)
    res = net_residuals(s, fr)
    tc = tetrahedron_curvature(s, cond_tol)
    Kd = Kf.values[:-1, :-1]
    both = np.isfinite(Kd) & np.isfinite(tc.K)
    tet_rel = float(np.max(np.abs(tc.K[both] - Kd[both]) / np.abs(Kd[both]))) if both.any() else None
    K_expected = -4.0 * s.lam ** 2 if s.lam is not None else None
    out = {
        "lambda": s.lam,
        "K_expected": K_expected,
        "K_max_abs_err": Kf.max_abs_error(K_expected) if K_expected is not None else None,
        "K_max_rel_err": Kf.max_rel_error(K_expected) if K_expected is not None else None,
        "tet_vs_dot_max_rel": tet_rel,
        "tors_spread": [_spread(tc.ratio1), _spread(tc.ratio2)],
        "degenerate_nodes": int(Kf.degenerate.sum()),
        "valid_nodes": int(Kf.valid.sum()),
    }
    out.update(res.as_dict())
    return out


def export_obj(s, path, cond_tol=COND_TOL):
    """Write the net as a Wavefront OBJ with row-major vertices and quad faces.

    Cells whose origin node is flagged degenerate are left out.
    """
    n1, n2 = s.shape
    deg = gauss_curvature_dot(s, cond_tol).degenerate
    lines = [f"# {n1}x{n2} net, lambda={s.lam}"]
    for x, y, z in s.r.reshape(-1, 3):
        lines.append(f"v {x:.17g} {y:.17g} {z:.17g}")
    faces = 0
    for i in range(n1 - 1):
        for j in range(n2 - 1):
            if deg[i, j]:
                continue
            a = i * n2 + j + 1
            lines.append(f"f {a} {a + n2} {a + n2 + 1} {a + 1}")
            faces += 1
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return faces


def read_obj(path):
    """Vertices ``(N, 3)`` and faces (list of 0-based index tuples) of an OBJ file."""
    verts, faces = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(v) for v in parts[1:4]])
            elif parts[0] == "f":
                faces.append(tuple(int(p.split("/")[0]) - 1 for p in parts[1:]))
    return np.array(verts).reshape(-1, 3), faces
