"""Shared builders for test nets, cached so each surface is computed once per session."""
from functools import lru_cache

from pseudosurf import backlund as bl
from pseudosurf import laxpair as lp
from pseudosurf.timescale import GridDomain
from pseudosurf.timescale import TimeScale1D as T

LAMBDAS = (0.5, 1.0, 2.0)


def _families():
    return {
        "uniform60": (T.uniform(-3.0, 0.1, 60), T.uniform(-3.0, 0.1, 60)),
        "interval200x50": (T.interval(-3.0, 3.0, 200), T.interval(-3.0, 3.0, 50)),
        "cantor5xuniform60": (T.cantor(5, -3.0, 3.0), T.uniform(-3.0, 0.1, 60)),
        "union_x_uniform": (
            T.union([T.interval(-3.0, 0.0, 40), T.uniform(0.5, 0.5, 6)]),
            T.uniform(-3.0, 0.1, 60),
        ),
    }


FAMILY_NAMES = tuple(_families())


@lru_cache(maxsize=None)
def domain(name):
    return GridDomain(*_families()[name])


@lru_cache(maxsize=None)
def small_domain():
    return GridDomain(T.uniform(-1.0, 0.2, 12), T.explicit([-1.0, -0.7, -0.5, -0.1, 0.0, 0.4, 0.5, 0.9]))


@lru_cache(maxsize=None)
def chain(name, lam, kappas=(1.0,)):
    """Seed surface followed by one surface per Darboux step, on a named family."""
    dom = domain(name) if name != "small" else small_domain()
    steps = [bl.DarbouxParams(k) for k in kappas]
    return tuple(bl.darboux_chain(lp.vacuum(dom), steps, lam))


def soliton(name="small", lam=1.0):
    return chain(name, lam)[-1]
