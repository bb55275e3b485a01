"""Quaternion-valued Lax pair on a product of time scales.

The linear problem is ``D1 Psi = U Psi``, ``D2 Psi = V Psi`` with

    U = lam (a e1 + b e2) + c e3 + h
    V = (p e1 + q e2) / lam + r e3 + s

and eight real coefficient functions on the grid.  On a finite time scale the
delta derivative is a forward difference, so the linear problem is solved
exactly by the transfer matrices ``1 + eps_j U_j``.
"""
from dataclasses import dataclass

import numpy as np

from . import quatalg as qa
from .timescale import GridDomain, forward_difference, shift

FIELD_NAMES = ("a", "b", "c", "h", "p", "q", "r", "s")


class LaxPairError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CoefficientField:
    domain: GridDomain
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    h: np.ndarray
    p: np.ndarray
    q: np.ndarray
    r: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        for name in FIELD_NAMES:
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != self.domain.shape:
                raise LaxPairError(
                    f"coefficient {name!r} has shape {arr.shape}, domain is {self.domain.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def u1(self):
        return qa.quat(0.0, self.a, self.b, 0.0)

    @property
    def u0(self):
        return qa.quat(self.h, 0.0, 0.0, self.c)

    @property
    def v1(self):
        return qa.quat(0.0, self.p, self.q, 0.0)

    @property
    def v0(self):
        return qa.quat(self.s, 0.0, 0.0, self.r)

    def is_chebyshev(self, tol=1e-10):
        """``a^2 + b^2`` depends on t1 only and ``p^2 + q^2`` on t2 only."""
        ab = self.a ** 2 + self.b ** 2
        pq = self.p ** 2 + self.q ** 2
        return bool(np.ptp(ab, axis=1).max() <= tol and np.ptp(pq, axis=0).max() <= tol)

    def to_json(self):
        out = {"domain": self.domain.to_json()}
        for name in FIELD_NAMES:
            out[name] = getattr(self, name).tolist()
        return out

    @classmethod
    def from_json(cls, obj):
        domain = GridDomain.from_json(obj["domain"])
        try:
            return cls(domain, **{name: np.asarray(obj[name], dtype=float) for name in FIELD_NAMES})
        except KeyError as exc:
            raise LaxPairError(f"coefficient field misses {exc}") from None


def vacuum(domain):
    """Constant seed ``a = p = 1``, all other coefficients zero."""
    one = np.ones(domain.shape)
    zero = np.zeros(domain.shape)
    return CoefficientField(domain, one, zero, zero, zero, one, zero, zero, zero)


def assemble_U(cf, lam):
    return lam * cf.u1 + cf.u0


def assemble_V(cf, lam):
    if lam == 0:
        raise LaxPairError("V has a pole at lambda = 0")
    return cf.v1 / lam + cf.v0


def assemble_U_lambda(cf, lam=None):
    return cf.u1


def assemble_V_lambda(cf, lam):
    if lam == 0:
        raise LaxPairError("V has a pole at lambda = 0")
    return -cf.v1 / lam ** 2


def compatibility_residual(cf, lam):
    """Left side of ``D2 U - D1 V + sigma2(U) V - sigma1(V) U = 0``.

    Evaluated at nodes with successors in both directions.  Returns the
    residual array of shape ``(n1-1, n2-1, 2, 2)`` and its largest norm.
    """
    dom = cf.domain
    U = assemble_U(cf, lam)
    V = assemble_V(cf, lam)
    d2u = forward_difference(U, dom, 2)[:-1]
    d1v = forward_difference(V, dom, 1)[:, :-1]
    s2u = shift(U, 2)[:-1]
    s1v = shift(V, 1)[:, :-1]
    core = (slice(None, -1), slice(None, -1))
    res = d2u - d1v + s2u @ V[core] - s1v @ U[core]
    return res, float(qa.norm(res).max(initial=0.0))


@dataclass(frozen=True, eq=False)
class WaveField:
    """``Psi`` and ``dPsi/dlam`` on every node at a fixed spectral parameter."""

    lam: complex
    psi: np.ndarray
    psi_lambda: np.ndarray
    init: np.ndarray
    coeffs: CoefficientField = None

    @property
    def domain(self):
        return self.coeffs.domain if self.coeffs is not None else None


def _transfers(cf, lam):
    """Transfer matrices and their lambda-derivatives in both directions."""
    e1 = cf.domain.steps(1)[:, None, None, None]
    e2 = cf.domain.steps(2)[None, :, None, None]
    T1 = qa.ONE + e1 * assemble_U(cf, lam)[:-1]
    T2 = qa.ONE + e2 * assemble_V(cf, lam)[:, :-1]
    dT1 = e1 * assemble_U_lambda(cf, lam)[:-1]
    dT2 = e2 * assemble_V_lambda(cf, lam)[:, :-1]
    for T, axis in ((T1, 1), (T2, 2)):
        bad = np.abs(qa.det(T)) <= 1e-14
        if np.any(bad):
            i, j = np.argwhere(bad)[0]
            raise LaxPairError(
                f"singular transfer matrix in direction {axis} at node ({i}, {j}), lambda={lam}")
    return T1, T2, dT1, dT2


def _ray_predecessors(domain):
    """For every node, whether its predecessor lies along t1 (True) or t2 (False).

    The choice keeps the backward path close to the straight segment from the
    origin node in the (t1, t2) plane.
    """
    t1 = domain.t1.points - domain.t1.points[0]
    t2 = domain.t2.points - domain.t2.points[0]
    x, y = np.meshgrid(t1, t2, indexing="ij")
    xa = np.empty_like(x)
    xa[1:] = x[:-1]
    yb = np.empty_like(y)
    yb[:, 1:] = y[:, :-1]
    # perpendicular offsets of the two candidate predecessors from the ray
    off_a = np.abs(xa * y - y * x)
    off_b = np.abs(x * yb - y * x)
    from_t1 = off_a <= off_b
    from_t1[:, 0] = True
    from_t1[0, :] = False
    return from_t1


def propagate(cf, lam, init=None, order="row"):
    """Solve the Lax pair by exact transfer, together with ``dPsi/dlam``.

    ``order="row"`` first sweeps ``t1`` along ``j = 0`` and then every column
    step along ``t2``; ``order="col"`` is the transposed sweep.  ``order="ray"``
    reaches each node along a staircase that follows the straight line from
    the origin node; for imaginary ``lam`` the transfer matrices are
    hyperbolic and this path keeps subdominant components from being lost.
    """
    if lam == 0:
        raise LaxPairError("lambda must be nonzero")
    n1, n2 = cf.domain.shape
    init = qa.ONE.copy() if init is None else np.asarray(init, dtype=complex)
    T1, T2, dT1, dT2 = _transfers(cf, lam)
    psi = np.empty((n1, n2, 2, 2), dtype=complex)
    dpsi = np.empty_like(psi)
    psi[0, 0] = init
    dpsi[0, 0] = 0.0
    if order == "row":
        for i in range(n1 - 1):
            psi[i + 1, 0] = T1[i, 0] @ psi[i, 0]
            dpsi[i + 1, 0] = dT1[i, 0] @ psi[i, 0] + T1[i, 0] @ dpsi[i, 0]
        for j in range(n2 - 1):
            psi[:, j + 1] = T2[:, j] @ psi[:, j]
            dpsi[:, j + 1] = dT2[:, j] @ psi[:, j] + T2[:, j] @ dpsi[:, j]
    elif order == "col":
        for j in range(n2 - 1):
            psi[0, j + 1] = T2[0, j] @ psi[0, j]
            dpsi[0, j + 1] = dT2[0, j] @ psi[0, j] + T2[0, j] @ dpsi[0, j]
        for i in range(n1 - 1):
            psi[i + 1] = T1[i] @ psi[i]
            dpsi[i + 1] = dT1[i] @ psi[i] + T1[i] @ dpsi[i]
    elif order == "ray":
        from_t1 = _ray_predecessors(cf.domain)
        for d in range(1, n1 + n2 - 1):
            i = np.arange(max(0, d - n2 + 1), min(d, n1 - 1) + 1)
            j = d - i
            a = from_t1[i, j]
            ia, ja = i[a], j[a]
            psi[ia, ja] = T1[ia - 1, ja] @ psi[ia - 1, ja]
            dpsi[ia, ja] = dT1[ia - 1, ja] @ psi[ia - 1, ja] + T1[ia - 1, ja] @ dpsi[ia - 1, ja]
            ib, jb = i[~a], j[~a]
            psi[ib, jb] = T2[ib, jb - 1] @ psi[ib, jb - 1]
            dpsi[ib, jb] = dT2[ib, jb - 1] @ psi[ib, jb - 1] + T2[ib, jb - 1] @ dpsi[ib, jb - 1]
    else:
        raise ValueError(f"unknown sweep order {order!r}")
    return WaveField(lam, psi, dpsi, init, cf)


@dataclass(frozen=True)
class LaxReport:
    path_independence: float
    red1: float
    red2: float

    def as_dict(self):
        return {"path_independence": self.path_independence, "red1": self.red1, "red2": self.red2}


def path_difference(cf, lam):
    """Largest node-wise ``|Psi_row - Psi_col| / max(1, |Psi_row|)``."""
    a = propagate(cf, lam, order="row").psi
    b = propagate(cf, lam, order="col").psi
    return float((qa.norm(a - b) / np.maximum(1.0, qa.norm(a))).max())


def verify_lax(cf, lam):
    """Path independence of the sweep and the two reduction-group identities."""
    lam = complex(lam)
    e3, e3inv = qa.E3, qa.inverse(qa.E3)
    red1 = 0.0
    for assemble in (assemble_U, assemble_V):
        diff = assemble(cf, -lam) - e3 @ assemble(cf, lam) @ e3inv
        red1 = max(red1, float(qa.norm(diff).max()))
    U = assemble_U(cf, lam)
    V = assemble_V(cf, lam)
    Ubar = assemble_U(cf, np.conj(lam))
    Vbar = assemble_V(cf, np.conj(lam))
    su = lam ** 2 * (cf.a ** 2 + cf.b ** 2) + cf.c ** 2 + cf.h ** 2
    sv = (cf.p ** 2 + cf.q ** 2) / lam ** 2 + cf.r ** 2 + cf.s ** 2
    red2 = max(
        float(qa.norm(qa.dagger(Ubar) @ U - su[..., None, None] * qa.ONE).max()),
        float(qa.norm(qa.dagger(Vbar) @ V - sv[..., None, None] * qa.ONE).max()),
    )
    return LaxReport(path_difference(cf, lam), red1, red2)
