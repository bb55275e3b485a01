"""Darboux-Backlund transformation of the quaternionic Lax pair and its surfaces.

The Darboux matrix is ``B = (lam - kappa p) / (lam - i kappa)`` with ``p`` a
unit vector in span{e1, e2}, read off a rank-one projector
``P = (1 + i p) / 2`` whose kernel is ``Psi(i kappa) c1``.
"""
from dataclasses import dataclass

import numpy as np

from . import quatalg as qa
from .laxpair import (CoefficientField, LaxPairError, WaveField, assemble_U, assemble_V,
                      propagate)
from .surface import SurfaceNet, align_normal, sym_surface
from .timescale import forward_difference

ORTHO_TOL = 1e-8
STRUCT_TOL = 1e-10
INVARIANT_TOL = 1e-10


class DarbouxError(ValueError):
    pass


@dataclass(frozen=True)
class DarbouxParams:
    """``kappa`` and the phases of ``c1 = (exp(i chi1), exp(i chi2)) / sqrt(2)``."""

    kappa: float
    phases: tuple = (0.0, np.pi / 2)

    def __post_init__(self):
        if self.kappa == 0:
            raise DarbouxError("kappa must be nonzero")
        object.__setattr__(self, "phases", tuple(float(x) for x in self.phases))

    @property
    def c1(self):
        return np.exp(1j * np.asarray(self.phases)) / np.sqrt(2.0)

    def to_json(self):
        return {"kappa": self.kappa, "phases": list(self.phases)}

    @classmethod
    def from_json(cls, obj):
        return cls(float(obj["kappa"]), tuple(obj.get("phases", (0.0, np.pi / 2))))


@dataclass(frozen=True, eq=False)
class ProjectorField:
    P: np.ndarray        # (n1, n2, 2, 2)
    p: np.ndarray        # (n1, n2, 2) components on e1, e2
    kappa: float
    coeffs: CoefficientField

    @property
    def pquat(self):
        return qa.quat(0.0, self.p[..., 0], self.p[..., 1], 0.0)

    def invariant_errors(self):
        P = self.P
        one = qa.ONE
        return {
            "idempotent": float(qa.norm(P @ P - P).max()),
            "hermitian": float(qa.norm(P - qa.dagger(P)).max()),
            "trace": float(np.abs(np.trace(P, axis1=-2, axis2=-1) - 1).max()),
            "unit_p": float(np.abs(np.sum(self.p ** 2, axis=-1) - 1).max()),
            "half_one_plus_ip": float(qa.norm(P - 0.5 * (one + 1j * self.pquat)).max()),
            "e3_symmetry": float(qa.norm(qa.E3 @ (one - P) @ qa.inverse(qa.E3) - P).max()),
        }


def build_projector(cf, params, wave=None, check_symmetry=False):
    """Projector field with kernel ``Psi(i kappa) c1`` and image ``Psi(-i kappa) e3 c1``.

    ``Psi(-i kappa)`` is taken from the symmetry ``e3 Psi(i kappa) e3^-1``;
    ``check_symmetry=True`` propagates it separately and compares.
    """
    kappa = params.kappa
    if wave is None:
        wave = propagate(cf, 1j * kappa, order="ray")
    elif not np.allclose(wave.init, qa.ONE, atol=1e-14):
        raise DarbouxError("the projector needs a wave field started from the identity")
    elif abs(wave.lam - 1j * kappa) > 1e-14 * abs(kappa):
        raise DarbouxError("wave field was not computed at lambda = i kappa")
    psi = wave.psi
    if check_symmetry:
        other = propagate(cf, -1j * kappa, order="ray").psi
        mirrored = qa.E3 @ psi @ qa.inverse(qa.E3)
        err = float((qa.norm(other - mirrored) / np.maximum(1.0, qa.norm(other))).max())
        if err > 1e-10:
            raise DarbouxError(f"reduction symmetry violated: Psi(-i kappa) mismatch {err:.3g}")
    c1 = params.c1
    v = psi @ c1
    w = v @ qa.E3.T
    vv = np.sum(np.abs(v) ** 2, axis=-1)
    ww = np.sum(np.abs(w) ** 2, axis=-1)
    if np.any(ww <= 1e-300):
        raise DarbouxError("image vector vanishes")
    ortho = np.abs(np.sum(np.conj(v) * w, axis=-1)) / np.sqrt(vv * ww)
    if ortho.max() > ORTHO_TOL:
        i, j = np.unravel_index(np.argmax(ortho), ortho.shape)
        raise DarbouxError(
            f"kernel and image not orthogonal at node ({i}, {j}): {ortho.max():.3g}")
    P = w[..., :, None] * np.conj(w[..., None, :]) / ww[..., None, None]
    pc = qa.coeffs(-1j * (2 * P - qa.ONE))
    if np.abs(pc[..., 0]).max() > INVARIANT_TOL or np.abs(pc[..., 3]).max() > INVARIANT_TOL \
            or np.abs(pc.imag).max() > INVARIANT_TOL:
        raise DarbouxError("projector is not of the form (1 + i p)/2 with p in span{e1, e2}")
    p = pc[..., 1:3].real
    p = p / np.linalg.norm(p, axis=-1, keepdims=True)
    pf = ProjectorField(P, p, float(kappa), cf)
    bad = {k: v for k, v in pf.invariant_errors().items() if v > INVARIANT_TOL}
    if bad:
        raise DarbouxError(f"projector invariants violated: {bad}")
    return pf


def projector_system_residual(pf):
    """Largest residual of the four projector equations at ``lam1 = i kappa``, ``mu1 = -i kappa``."""
    cf, P = pf.coeffs, pf.P
    one = qa.ONE
    lam1, mu1 = 1j * pf.kappa, -1j * pf.kappa
    worst = 0.0
    for direction, assemble in ((1, assemble_U), (2, assemble_V)):
        dP = forward_difference(P, cf.domain, direction)
        if direction == 1:
            Pc, Ps = P[:-1], P[1:]
            A1, A2 = assemble(cf, lam1)[:-1], assemble(cf, mu1)[:-1]
        else:
            Pc, Ps = P[:, :-1], P[:, 1:]
            A1, A2 = assemble(cf, lam1)[:, :-1], assemble(cf, mu1)[:, :-1]
        eq_ker = dP @ (one - Pc) + Ps @ A1 @ (one - Pc)
        eq_im = (one - Ps) @ (-dP + A2 @ Pc)
        worst = max(worst, float(qa.norm(eq_ker).max()), float(qa.norm(eq_im).max()))
    return worst


def darboux_matrix(lam, kappa, p):
    """``B = (lam - kappa p) / (lam - i kappa)``."""
    lam = complex(lam)
    if abs(lam - 1j * kappa) < 1e-14 * max(1.0, abs(kappa)):
        raise DarbouxError("lambda sits on the pole i kappa of the Darboux matrix")
    return (lam * qa.ONE - kappa * np.asarray(p)) / (lam - 1j * kappa)


def darboux_matrix_inverse(lam, kappa, p):
    """``B^-1 = (lam + kappa p) / (lam + i kappa)``."""
    lam = complex(lam)
    if abs(lam + 1j * kappa) < 1e-14 * max(1.0, abs(kappa)):
        raise DarbouxError("lambda sits on the pole -i kappa of the inverse Darboux matrix")
    return (lam * qa.ONE + kappa * np.asarray(p)) / (lam + 1j * kappa)


def darboux_matrix_dlambda(lam, kappa, p):
    lam = complex(lam)
    return (kappa * np.asarray(p) - 1j * kappa * qa.ONE) / (lam - 1j * kappa) ** 2


def _shifted(x, axis):
    """``sigma_j`` on the full grid, using ``sigma = id`` on the trailing boundary."""
    if axis == 0:
        return np.concatenate([x[1:], x[-1:]], axis=0)
    return np.concatenate([x[:, 1:], x[:, -1:]], axis=1)


def transform_coefficients(cf, kappa, pf):
    """Coefficients of the transformed Lax pair in the gauge ``N = 1``.

    ``u1`` and ``v0`` are unchanged; ``u0 -> u0 + kappa (u1 p - sigma1(p) u1)``
    and ``v1 -> sigma2(p) v1 p^-1``.
    """
    if pf.coeffs.domain.shape != cf.domain.shape:
        raise DarbouxError("projector and coefficient field live on different domains")
    pq = pf.pquat
    u1 = cf.u1
    u0 = cf.u0 + kappa * (u1 @ pq - _shifted(pq, 0) @ u1)
    v1 = _shifted(pq, 1) @ cf.v1 @ qa.inverse(pq)
    cu = qa.coeffs(u0)
    cv = qa.coeffs(v1)
    scale = max(1.0, float(np.abs(cu).max()), float(np.abs(cv).max()))
    if np.abs(cu[..., 1:3]).max() > STRUCT_TOL * scale or np.abs(cv[..., [0, 3]]).max() > STRUCT_TOL * scale \
            or max(np.abs(cu.imag).max(), np.abs(cv.imag).max()) > STRUCT_TOL * scale:
        raise DarbouxError("transformed coefficients lost their structure; the projector is broken")
    return CoefficientField(cf.domain, cf.a, cf.b, cu[..., 3].real, cu[..., 0].real,
                            cv[..., 1].real, cv[..., 2].real, cf.r, cf.s)


def transform_wave(wf, pf):
    """``Psi~ = B Psi`` and ``dPsi~/dlam = B_lam Psi + B dPsi/dlam``."""
    pq = pf.pquat
    B = darboux_matrix(wf.lam, pf.kappa, pq)
    dB = darboux_matrix_dlambda(wf.lam, pf.kappa, pq)
    psi = B @ wf.psi
    dpsi = dB @ wf.psi + B @ wf.psi_lambda
    cf = transform_coefficients(wf.coeffs, pf.kappa, pf) if wf.coeffs is not None else None
    return WaveField(wf.lam, psi, dpsi, B[0, 0] @ wf.init, cf)


def transform_surface(s, wf, kappa, pf):
    """``r~ = r + kappa / (lam^2 + kappa^2) Psi^-1 p Psi``; ``n~`` from ``Psi~ = B Psi``."""
    if s.shape != wf.psi.shape[:2] or s.shape != pf.P.shape[:2]:
        raise DarbouxError("surface, wave field and projector have mismatched domains")
    if kappa != pf.kappa:
        raise DarbouxError("kappa differs from the one used for the projector")
    lam = complex(wf.lam)
    if abs(lam.imag) > 1e-14 * max(1.0, abs(lam)):
        raise DarbouxError("surfaces are transformed at real lambda only")
    lam = lam.real
    seg = qa.to_vec3(qa.conjugate_by(pf.pquat, wf.psi)) * (kappa / (lam ** 2 + kappa ** 2))
    new_wave = transform_wave(wf, pf)
    n = qa.to_vec3(qa.conjugate_by(qa.E3, new_wave.psi))
    return align_normal(SurfaceNet(s.domain, s.r + seg, n, lam, new_wave))


def segment_geometry(s_old, s_new):
    """Segment lengths ``|r~ - r|`` and tangency ``(r~ - r).n`` at every node."""
    d = s_new.r - s_old.r
    return np.linalg.norm(d, axis=-1), np.einsum("...i,...i->...", d, s_old.n)


def darboux_chain(cf0, steps, lam):
    """Surfaces ``[seed, first transform, second transform, ...]`` at real ``lam``.

    Each step re-propagates the transformed coefficient field from the
    identity, so consecutive surfaces agree only up to a rigid motion.
    """
    steps = [s if isinstance(s, DarbouxParams) else DarbouxParams.from_json(s) for s in steps]
    kappas = [abs(s.kappa) for s in steps]
    for a in range(len(kappas)):
        for b in range(a):
            if np.isclose(kappas[a], kappas[b], rtol=1e-12, atol=0):
                raise DarbouxError(f"pole collision: steps {b} and {a} share |kappa| = {kappas[a]}")
    cf = cf0
    wf = propagate(cf, lam)
    s = sym_surface(wf)
    out = [s]
    for k, prm in enumerate(steps):
        try:
            pf = build_projector(cf, prm)
        except LaxPairError as exc:
            raise DarbouxError(f"cannot build projector for kappa={prm.kappa}: {exc}") from exc
        out.append(transform_surface(s, wf, prm.kappa, pf))
        cf = out[-1].wave.coeffs
        if k < len(steps) - 1:
            wf = propagate(cf, lam)
            s = sym_surface(wf)
    return out
