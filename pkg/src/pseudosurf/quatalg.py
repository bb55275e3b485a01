"""Quaternions as 2x2 complex matrices.

A quaternion ``w + x e1 + y e2 + z e3`` is stored as the matrix
``w*1 + x*E1 + y*E2 + z*E3`` with ``E_j = -i * pauli_j``.  All functions act
on arrays of shape ``(..., 2, 2)`` so whole grids are processed at once.
Complex coefficients are allowed (complexified quaternions); this is needed
when the spectral parameter is imaginary.
"""
import numpy as np

ONE = np.eye(2, dtype=complex)
E1 = np.array([[0, -1j], [-1j, 0]])
E2 = np.array([[0, -1], [1, 0]], dtype=complex)
E3 = np.array([[-1j, 0], [0, 1j]])
BASIS = np.stack([ONE, E1, E2, E3])

# below this |det| an element is treated as singular
SINGULAR_TOL = 1e-300
# geodesic derivative cut-offs
ZERO_ARC = 1e-8
ANTIPODAL = 1e-8


class SingularQuaternionError(ArithmeticError):
    pass


def quat(w=0.0, x=0.0, y=0.0, z=0.0):
    """Build (arrays of) quaternions from their four coefficients."""
    w, x, y, z = np.broadcast_arrays(*(np.asarray(c) for c in (w, x, y, z)))
    return (w[..., None, None] * ONE + x[..., None, None] * E1
            + y[..., None, None] * E2 + z[..., None, None] * E3)


def from_coeffs(c):
    c = np.asarray(c)
    return quat(c[..., 0], c[..., 1], c[..., 2], c[..., 3])


def coeffs(A):
    """Coefficients ``(w, x, y, z)`` of ``A``; complex dtype."""
    A = np.asarray(A)
    m00, m01 = A[..., 0, 0], A[..., 0, 1]
    m10, m11 = A[..., 1, 0], A[..., 1, 1]
    w = 0.5 * (m00 + m11)
    x = 0.5j * (m01 + m10)
    y = 0.5 * (m10 - m01)
    z = 0.5j * (m00 - m11)
    return np.stack([w, x, y, z], axis=-1)


def is_real(A, tol=1e-10):
    """True where all four coefficients have imaginary part below ``tol``."""
    return np.all(np.abs(coeffs(A).imag) < tol, axis=-1)


def real_coeffs(A, tol=1e-10):
    """Real coefficients of ``A``; raises if ``A`` leaves the real quaternions."""
    c = coeffs(A)
    scale = np.maximum(1.0, np.abs(c).max())
    if np.abs(c.imag).max(initial=0.0) > tol * scale:
        raise ValueError("element is not a real quaternion")
    return c.real


def from_vec3(v):
    v = np.asarray(v, dtype=float)
    return quat(0.0, v[..., 0], v[..., 1], v[..., 2])


def to_vec3(A, tol=1e-10):
    """Imaginary part of a (real) quaternion as a 3-vector."""
    return real_coeffs(A, tol)[..., 1:]


def mul(A, B):
    return np.matmul(A, B)


def dagger(A):
    return np.conj(np.swapaxes(A, -1, -2))


def det(A):
    A = np.asarray(A)
    return A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]


def inverse(A):
    """Inverse via the adjugate; equals conj(A)/|A|^2 for real quaternions."""
    A = np.asarray(A)
    d = det(A)
    if np.any(np.abs(d) <= SINGULAR_TOL):
        raise SingularQuaternionError("inverse of a singular element")
    adj = np.empty_like(A)
    adj[..., 0, 0] = A[..., 1, 1]
    adj[..., 1, 1] = A[..., 0, 0]
    adj[..., 0, 1] = -A[..., 0, 1]
    adj[..., 1, 0] = -A[..., 1, 0]
    return adj / d[..., None, None]


def scalar_product(A, B):
    """``<A, B> = Tr(A B^dagger) / 2``; the basis 1, e1, e2, e3 is orthonormal."""
    return 0.5 * np.einsum("...ij,...ij->...", A, np.conj(B))


def norm(A):
    return np.sqrt(np.abs(scalar_product(A, A)))


def im_project(A):
    """Drop the scalar (trace) part, keeping the e1, e2, e3 components."""
    A = np.asarray(A)
    w = 0.5 * (A[..., 0, 0] + A[..., 1, 1])
    return A - w[..., None, None] * ONE


def scalar_part(A):
    A = np.asarray(A)
    return 0.5 * (A[..., 0, 0] + A[..., 1, 1])


def conjugate_by(A, g):
    """``g^-1 A g``, the adjoint action used for frames, normals and p."""
    return inverse(g) @ A @ g


def exp_pure(v):
    """Exponential of a pure quaternion: ``cos|v| + sin|v| v/|v|``."""
    v = np.asarray(v)
    theta = norm(v)
    sinc = np.sinc(theta / np.pi)  # sin(theta)/theta, finite at 0
    return np.cos(theta)[..., None, None] * ONE + sinc[..., None, None] * v


def geodesic_delta(phi, phi_sigma, eps):
    """Delta derivative of a unit-quaternion curve along the great circle.

    Returns the tangent at ``phi`` of the shortest arc to ``phi_sigma``, scaled
    so that its length is ``arc / eps``.  Short arcs (< 1e-8) fall back to the
    chord ``(phi_sigma - phi) / eps``; near-antipodal pairs raise.
    """
    phi = np.asarray(phi)
    phi_sigma = np.asarray(phi_sigma)
    eps = np.asarray(eps, dtype=float)
    cos_d = np.clip(scalar_product(phi_sigma, phi).real, -1.0, 1.0)
    delta = np.arccos(cos_d)
    if np.any(np.pi - delta < ANTIPODAL):
        raise ValueError("antipodal points: the geodesic is not unique")
    chord = (phi_sigma - phi) / eps[..., None, None]
    short = delta < ZERO_ARC
    safe = np.where(short, 1.0, delta)
    factor = safe / (eps * np.sin(safe))
    geo = (phi_sigma - cos_d[..., None, None] * phi) * factor[..., None, None]
    return np.where(short[..., None, None], chord, geo)


def random_quat(rng, size=(), complex_=False):
    c = rng.standard_normal(size + (4,))
    if complex_:
        c = c + 1j * rng.standard_normal(size + (4,))
    return from_coeffs(c)
