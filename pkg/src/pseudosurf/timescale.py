"""Finite time scales, their products, and delta derivatives on them."""
from dataclasses import dataclass, field

import numpy as np

DUPLICATE_TOL = 1e-12
DENSE_EPSILON = 1e-3


class TimeScaleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TimeScale1D:
    """A finite, strictly increasing set of reals.

    The jump operator of the last point returns the point itself (graininess
    zero); every other point is right-scattered.
    """

    points: np.ndarray
    label: str = ""
    dense_epsilon: float = field(default=DENSE_EPSILON, compare=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).ravel()
        if pts.size < 2:
            raise TimeScaleError("a time scale needs at least two points")
        if not np.all(np.isfinite(pts)):
            raise TimeScaleError("time scale points must be finite")
        if np.any(np.diff(pts) <= DUPLICATE_TOL):
            raise TimeScaleError("points must be strictly increasing without duplicates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.size

    def __eq__(self, other):
        # labels are descriptive only; two scales are equal when their points are
        if not isinstance(other, TimeScale1D):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())

    def __iter__(self):
        return iter(self.points)

    @property
    def steps(self):
        """Graininess at every point except the last."""
        return np.diff(self.points)

    @property
    def graininess(self):
        return np.append(self.steps, 0.0)

    def _check(self, i):
        if not 0 <= i < len(self):
            raise IndexError(f"index {i} outside time scale of size {len(self)}")

    def sigma(self, i):
        self._check(i)
        return self.points[min(i + 1, len(self) - 1)]

    def rho(self, i):
        self._check(i)
        return self.points[max(i - 1, 0)]

    def jump(self, i):
        """``(sigma(t_i), graininess(t_i))``."""
        self._check(i)
        if i == len(self) - 1:
            return float(self.points[i]), 0.0
        return float(self.points[i + 1]), float(self.points[i + 1] - self.points[i])

    def classify(self):
        """Label each step 'scattered' or 'dense' (reporting only)."""
        return ["dense" if e < self.dense_epsilon else "scattered" for e in self.steps]

    def to_json(self):
        return [float(t) for t in self.points]

    # constructors

    @classmethod
    def explicit(cls, points, label="explicit"):
        return cls(np.asarray(points, dtype=float), label)

    @classmethod
    def uniform(cls, t0, step, n):
        if n < 2:
            raise TimeScaleError("uniform time scale needs n >= 2")
        if not step > 0:
            raise TimeScaleError("uniform step must be positive")
        return cls(t0 + step * np.arange(n), f"uniform({t0}, {step}, {n})")

    @classmethod
    def interval(cls, a, b, n):
        if n < 2:
            raise TimeScaleError("interval needs n >= 2")
        if not a < b:
            raise TimeScaleError("degenerate interval: need a < b")
        return cls(np.linspace(a, b, n), f"interval({a}, {b}, {n})")

    @classmethod
    def cantor(cls, level, a=0.0, b=1.0):
        """Endpoints of the level-``level`` middle-thirds construction on [a, b]."""
        if level < 0:
            raise TimeScaleError("cantor level must be >= 0")
        if not a < b:
            raise TimeScaleError("degenerate interval: need a < b")
        # integer endpoints on [0, 3**level] avoid accumulated rounding
        left = np.zeros(1, dtype=np.int64)
        for _ in range(level):
            left = np.concatenate([3 * left, 3 * left + 2])
        left = np.sort(left)
        ends = np.empty(2 * left.size)
        ends[0::2] = left
        ends[1::2] = left + 1
        return cls(a + (b - a) * ends / 3.0 ** level, f"cantor({level}, {a}, {b})")

    @classmethod
    def union(cls, scales):
        scales = list(scales)
        if not scales:
            raise TimeScaleError("union of nothing")
        pts = np.sort(np.concatenate([np.asarray(s.points) for s in scales]))
        keep = np.concatenate([[True], np.diff(pts) > DUPLICATE_TOL])
        return cls(pts[keep], "union(" + ", ".join(s.label for s in scales) + ")")


def construct_timescale(spec):
    """Build a time scale from a JSON-style description.

    ``spec`` is a list of numbers (explicit points) or a dict with a ``kind``
    key: ``uniform`` (t0, step, n), ``interval`` (a, b, n), ``cantor``
    (level, a, b), ``union`` (parts) or ``explicit`` (points).
    """
    if isinstance(spec, TimeScale1D):
        return spec
    if isinstance(spec, (list, tuple, np.ndarray)):
        return TimeScale1D.explicit(spec)
    if not isinstance(spec, dict) or "kind" not in spec:
        raise TimeScaleError(f"cannot interpret time scale spec {spec!r}")
    kind = spec["kind"]
    try:
        if kind == "uniform":
            return TimeScale1D.uniform(float(spec["t0"]), float(spec["step"]), int(spec["n"]))
        if kind == "interval":
            return TimeScale1D.interval(float(spec["a"]), float(spec["b"]), int(spec["n"]))
        if kind == "cantor":
            return TimeScale1D.cantor(int(spec["level"]), float(spec.get("a", 0.0)),
                                      float(spec.get("b", 1.0)))
        if kind == "union":
            return TimeScale1D.union(construct_timescale(p) for p in spec["parts"])
        if kind == "explicit":
            return TimeScale1D.explicit(spec["points"])
    except KeyError as exc:
        raise TimeScaleError(f"time scale spec of kind {kind!r} misses {exc}") from None
    raise TimeScaleError(f"unknown time scale kind {kind!r}")


@dataclass(frozen=True)
class GridDomain:
    """Product ``t1 x t2``; node ``(i, j)`` sits at ``(t1[i], t2[j])``."""

    t1: TimeScale1D
    t2: TimeScale1D

    @property
    def shape(self):
        return len(self.t1), len(self.t2)

    def steps(self, direction):
        return (self.t1 if direction == 1 else self.t2).steps

    def contains(self, node):
        i, j = node
        return 0 <= i < len(self.t1) and 0 <= j < len(self.t2)

    def mesh(self):
        return np.meshgrid(self.t1.points, self.t2.points, indexing="ij")

    def to_json(self):
        return {"t1": self.t1.to_json(), "t2": self.t2.to_json()}

    @classmethod
    def from_json(cls, obj):
        return cls(construct_timescale(obj["t1"]), construct_timescale(obj["t2"]))


def _steps_view(domain, direction, ndim):
    """Graininess shaped to broadcast against a forward difference."""
    eps = domain.steps(direction)
    if direction == 1:
        return eps.reshape((-1,) + (1,) * (ndim - 1))
    return eps.reshape((1, -1) + (1,) * (ndim - 2))


def forward_difference(values, domain, direction):
    """Delta derivative at the nodes that have a successor in ``direction``.

    The result has one fewer entry along the differentiated axis.
    """
    f = np.asarray(values)
    if f.shape[:2] != domain.shape:
        raise ValueError(f"values of shape {f.shape[:2]} do not match domain {domain.shape}")
    if direction == 1:
        diff = f[1:] - f[:-1]
    elif direction == 2:
        diff = f[:, 1:] - f[:, :-1]
    else:
        raise ValueError("direction must be 1 or 2")
    return diff / _steps_view(domain, direction, f.ndim)


def shift(values, direction):
    """``sigma_j`` applied to a grid function, restricted to the nodes with a successor."""
    f = np.asarray(values)
    return f[1:] if direction == 1 else f[:, 1:]


def delta_derivative(values, domain, direction):
    """Delta derivative on the full grid; trailing-boundary nodes are NaN."""
    d = forward_difference(values, domain, direction)
    dtype = np.result_type(d.dtype, np.float64)
    out = np.full(np.shape(values), np.nan, dtype=dtype)
    if direction == 1:
        out[:-1] = d
    else:
        out[:, :-1] = d
    return out


def _diff(f, eps, axis):
    d = np.diff(f, axis=axis)
    shape = [1] * d.ndim
    shape[axis] = -1
    return d / eps.reshape(shape)


def mixed_delta_commutator(values, domain):
    """Largest ``|D1 D2 f - D2 D1 f|`` over nodes with both successors."""
    n1, n2 = domain.shape
    if n1 < 2 or n2 < 2:
        raise ValueError("mixed derivatives need a grid of at least 2x2")
    f = np.asarray(values)
    e1, e2 = domain.steps(1), domain.steps(2)
    d12 = _diff(_diff(f, e2, 1), e1, 0)
    d21 = _diff(_diff(f, e1, 0), e2, 1)
    return float(np.max(np.abs(d12 - d21)))
