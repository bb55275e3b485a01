"""Acceptance criteria 1-8; each test prints one PASS/FAIL line."""
import json
import time

import numpy as np
import pytest

from pseudosurf import backlund as bl
from pseudosurf import cli
from pseudosurf import laxpair as lp
from pseudosurf import quatalg as qa
from pseudosurf import surface as sf
from pseudosurf.timescale import GridDomain, TimeScale1D, forward_difference, shift

from _acceptance import record
from _nets import FAMILY_NAMES, LAMBDAS, chain, domain

CASES = 10_000
# imaginary spectral value clear of every 1 +- eps kappa = 0 singularity on the families
PROBE = 0.7j


def criterion_surfaces():
    """One-step surfaces on every family and lambda, with wall time per case (build plus checks)."""
    out = []
    for name in FAMILY_NAMES:
        for lam in LAMBDAS:
            t0 = time.perf_counter()
            seed, s = bl.darboux_chain(lp.vacuum(domain(name)), [bl.DarbouxParams(1.0)], lam)
            rep = sf.curvature_report(s)
            out.append((seed, s, rep, time.perf_counter() - t0))
    return out


@pytest.fixture(scope="module")
def surfaces():
    return criterion_surfaces()


def test_criterion_1_constant_curvature(surfaces):
    worst = max(rep["K_max_rel_err"] for *_, rep, _ in surfaces)
    slowest = max(t for *_, t in surfaces)
    valid = min(rep["valid_nodes"] for *_, rep, _ in surfaces)
    assert not record(1, {"K_rel": (worst, "<=", 1e-8), "seconds": (slowest, "<=", 10.0),
                          "min_valid": (valid, ">=", 1)})


def test_criterion_2_asymptotic_chebyshev(surfaces):
    asym = max(max(rep["asym"]) for *_, rep, _ in surfaces)
    cheb = max(max(rep["cheb"]) for *_, rep, _ in surfaces)
    assert not record(2, {"asym": (asym, "<=", 1e-9), "cheb": (cheb, "<=", 1e-9)})


def test_criterion_3_curvature_cross_validation(surfaces):
    tet = max(rep["tet_vs_dot_max_rel"] for *_, rep, _ in surfaces)
    tors = max(max(rep["tors_spread"]) for *_, rep, _ in surfaces)
    assert not record(3, {"tet_vs_dot": (tet, "<=", 1e-6), "tors_spread": (tors, "<=", 1e-8)})


def test_criterion_4_backlund_geometry(surfaces):
    spread = tangency = mean_err = 0.0
    for seed, new, _, _ in surfaces:
        length, tang = bl.segment_geometry(seed, new)
        expected = 1.0 / (new.lam ** 2 + 1.0)
        spread = max(spread, np.ptp(length) / length.mean())
        mean_err = max(mean_err, abs(length.mean() - expected) / expected)
        tangency = max(tangency, np.abs(tang).max())
    two_step = 0.0
    for lam in LAMBDAS:
        for s in chain("uniform60", lam, (1.0, 2.0))[1:]:
            two_step = max(two_step, sf.gauss_curvature_dot(s).max_rel_error(-4 * lam ** 2))
    assert not record(4, {"length_spread": (spread, "<=", 1e-10),
                          "length_vs_formula": (mean_err, "<=", 1e-10),
                          "tangency": (tangency, "<=", 1e-10), "two_step_K_rel": (two_step, "<=", 1e-8)})


def _psi_lambda_error(cf, lam, h=1e-4):
    """Analytic Psi_lambda against a fourth-order central difference in lambda."""
    an = lp.propagate(cf, lam).psi_lambda
    psi = {k: lp.propagate(cf, lam + k * h).psi for k in (-2, -1, 1, 2)}
    fd = (8 * (psi[1] - psi[-1]) - (psi[2] - psi[-2])) / (12 * h)
    return float((qa.norm(an - fd) / np.maximum(1.0, qa.norm(an))).max())


def test_criterion_5_lax_integrity():
    vac = trans = path = red = fd = 0.0
    for name in FAMILY_NAMES:
        seed_cf = lp.vacuum(domain(name))
        for lam in LAMBDAS:
            cf = chain(name, lam)[-1].wave.coeffs
            for probe in (lam, PROBE):
                vac = max(vac, lp.compatibility_residual(seed_cf, probe)[1])
                trans = max(trans, lp.compatibility_residual(cf, probe)[1])
                for field in (seed_cf, cf):
                    rep = lp.verify_lax(field, probe)
                    path = max(path, rep.path_independence)
                    red = max(red, rep.red1, rep.red2)
            fd = max(fd, _psi_lambda_error(cf, lam))
    assert not record(5, {"compat_vacuum": (vac, "<=", 1e-13), "compat_transformed": (trans, "<=", 1e-9),
                          "path": (path, "<=", 1e-10), "red": (red, "<=", 1e-12), "psi_lambda_fd": (fd, "<=", 1e-8)})


def _leibniz_worst(rng):
    worst = 0.0
    for _ in range(CASES):
        dom = GridDomain(TimeScale1D.explicit(np.cumsum(rng.uniform(0.05, 1.0, 3))),
                         TimeScale1D.explicit(np.cumsum(rng.uniform(0.05, 1.0, 3))))
        A = qa.random_quat(rng, dom.shape)
        B = qa.random_quat(rng, dom.shape, complex_=True)
        for d in (1, 2):
            core = (slice(None, -1), slice(None)) if d == 1 else (slice(None), slice(None, -1))
            dA, dB = forward_difference(A, dom, d), forward_difference(B, dom, d)
            prod = forward_difference(A @ B, dom, d) - dA @ B[core] - shift(A, d) @ dB
            inv = forward_difference(qa.inverse(B), dom, d) + qa.inverse(shift(B, d)) @ dB @ qa.inverse(B[core])
            scale = max(1.0, qa.norm(dA).max() * qa.norm(B).max() + qa.norm(A).max() * qa.norm(dB).max())
            worst = max(worst, qa.norm(prod).max() / scale,
                        qa.norm(inv).max() / max(1.0, qa.norm(forward_difference(qa.inverse(B), dom, d)).max()))
    return worst


def _projector_worst(rng):
    """Projectors from waves of random (incompatible) coefficient fields on random time scales."""
    worst = {}
    nodes = 0
    while nodes < CASES:
        dom = GridDomain(TimeScale1D.explicit(np.cumsum(rng.uniform(0.005, 0.04, 50))),
                         TimeScale1D.explicit(np.cumsum(rng.uniform(0.005, 0.04, 50))))
        cf = lp.CoefficientField(dom, *rng.uniform(-1, 1, (8,) + dom.shape))
        pf = bl.build_projector(cf, bl.DarbouxParams(rng.uniform(0.5, 2.0), rng.uniform(0, 2 * np.pi, 2)))
        for k, v in pf.invariant_errors().items():
            worst[k] = max(worst.get(k, 0.0), v)
        nodes += dom.shape[0] * dom.shape[1]
    return worst


def test_criterion_6_algebra_properties():
    rng = np.random.default_rng(2024)
    A, B = qa.random_quat(rng, (CASES,)), qa.random_quat(rng, (CASES,))
    norm_mult = float(np.max(np.abs(qa.norm(A @ B) - qa.norm(A) * qa.norm(B)) / (1 + qa.norm(A) * qa.norm(B))))
    C, D = qa.random_quat(rng, (CASES,), complex_=True), qa.random_quat(rng, (CASES,), complex_=True)
    dagger = float(qa.norm(qa.dagger(C @ D) - qa.dagger(D) @ qa.dagger(C)).max())
    leibniz = _leibniz_worst(rng)
    proj = _projector_worst(rng)
    checks = {"norm_mult": (norm_mult, "<=", 1e-10), "dagger": (dagger, "<=", 1e-10),
              "leibniz": (leibniz, "<=", 1e-10)}
    for k in ("idempotent", "hermitian", "half_one_plus_ip"):
        checks[k] = (proj[k], "<=", 1e-10)
    assert not record(6, checks)


def refinement_data(ns=(25, 50, 100, 200)):
    rows = []
    for n in ns:
        ts = TimeScale1D.interval(0.0, 1.0, n)
        s = bl.darboux_chain(lp.vacuum(GridDomain(ts, ts)), [bl.DarbouxParams(1.0)], 1.0)[-1]
        rep = sf.curvature_report(s)
        psi = s.wave.psi
        phi = psi / qa.norm(psi)[..., None, None]
        eps = ts.steps[0]
        a, b = phi[:-1], phi[1:]
        chord = (b - a) / eps
        geo = qa.geodesic_delta(a, b, eps)
        ainv = qa.inverse(a)
        gap = float(qa.norm(qa.im_project(chord @ ainv) - geo @ ainv).max())
        rows.append((n, eps, rep, gap))
    return rows


def test_criterion_7_continuum_limit():
    rows = refinement_data()
    K = max(rep["K_max_rel_err"] for _, _, rep, _ in rows)
    res = max(max(rep["asym"] + rep["cheb"]) for _, _, rep, _ in rows)
    orders = [np.log(g0 / g1) / np.log(e0 / e1) for (_, e0, _, g0), (_, e1, _, g1) in zip(rows, rows[1:])]
    assert not record(7, {"K_rel": (K, "<=", 1e-8), "residuals": (res, "<=", 1e-8),
                          "min_order": (min(orders), ">=", 1.9)})


def test_criterion_8_cli_contract(tmp_path):
    t0 = time.perf_counter()
    demo = cli.main(["--quiet", "demo", "--out-dir", str(tmp_path)])
    seconds = time.perf_counter() - t0
    report = json.loads((tmp_path / "report.json").read_text())
    cli.jsonschema.validate(report, cli.load_schema("report"))
    v, _ = sf.read_obj(tmp_path / "surface.obj")
    s = bl.darboux_chain(lp.vacuum(cli.Pipeline(cli.DEMO_CONFIG, str(tmp_path)).domain),
                         [bl.DarbouxParams(1.0)], 1.0)[-1]
    obj_err = float(np.abs(v - s.r.reshape(-1, 3)).max())

    cfg = dict(cli.DEMO_CONFIG, outputs={"report": "r.json", "fields": "f.json"})
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    cli.main(["--quiet", "run", "--config", str(tmp_path / "cfg.json")])
    field = json.loads((tmp_path / "f.json").read_text())
    c = np.array(field["c"])
    c[10, 10] += 1e-4
    field["c"] = c.tolist()
    (tmp_path / "bad.json").write_text(json.dumps(field))
    corrupted = cli.main(["--quiet", "verify", "--config", str(tmp_path / "cfg.json"),
                          "--field", str(tmp_path / "bad.json")])
    (tmp_path / "broken.json").write_text('{"lambda": ')
    malformed = cli.main(["--quiet", "run", "--config", str(tmp_path / "broken.json")])
    failed = record(8, {"demo_exit": (demo, "==", 0), "demo_seconds": (seconds, "<=", 10.0),
                        "corrupted_exit": (corrupted, "==", 1), "malformed_exit": (malformed, "==", 2),
                        "obj_round_trip": (obj_err, "<=", 1e-8)})
    assert not failed
