"""Cross-checks between the compiled kernels and the NumPy fallback.

Skipped wholesale when the extension is not built; the rest of the suite
then runs against the fallback alone.
"""

import numpy as np
import pytest

from seasonchain import _kernels_py as kpy
from seasonchain._quad import beta_nodes

kc = pytest.importorskip("seasonchain._ckernels")


@pytest.fixture(scope="module")
def batch():
    rng = np.random.default_rng(31)
    d = rng.beta(3, 7, 4000)
    t = np.exp(rng.normal(0.683, np.sqrt(0.02), 4000))
    return d, t


def test_backend_names():
    assert kpy.BACKEND_NAME == "python"
    assert kc.BACKEND_NAME == "compiled"


def test_solve_final_size(batch):
    d, t = batch
    for k in range(0, 4000, 113):
        w = np.asarray([0.3, 0.2, 0.5])
        a = (1.0 - (1.0 - d[k]) * np.asarray([1.0, 0.6, 0.0])) * t[k]
        assert kc.solve_final_size(w, a) == pytest.approx(
            kpy.solve_final_size(w, a), abs=1e-13)


def test_one_step(batch):
    d, t = batch
    re1, z1 = kpy.one_step_r2(0.4, d, t)
    re2, z2 = kc.one_step_r2(0.4, d, t)
    np.testing.assert_allclose(re1, re2, rtol=0, atol=0)
    np.testing.assert_allclose(z1, z2, atol=1e-13)


def test_run_chain(batch):
    d, t = batch
    out_py = kpy.run_chain(d[:400], t[:400], 6)
    out_c = kc.run_chain(d[:400], t[:400], 6)
    for a, b in zip(out_py, out_c):
        np.testing.assert_allclose(a, b, atol=1e-10)


def test_delta_star(batch):
    d, t = batch
    re, z = kc.one_step_r2(0.35, d, t)
    pos = z > 0
    d1, t1 = kpy.delta_star_batch(0.35, z[pos], re[pos])
    d2, t2 = kc.delta_star_batch(0.35, z[pos], re[pos])
    np.testing.assert_allclose(d1, d2, atol=1e-13)
    np.testing.assert_allclose(t1, t2, atol=1e-12)


def test_tau_star_and_grid():
    x = np.linspace(0.01, 0.99, 25)
    pn = np.linspace(0.05, 0.9, 30)
    g1 = kpy.tau_star_grid(0.3, x, pn)
    g2 = kc.tau_star_grid(0.3, x, pn)
    np.testing.assert_allclose(g1, g2, atol=1e-12)
    assert kc.tau_star(0.3, 0.5, 0.4) == pytest.approx(
        kpy.tau_star(0.3, 0.5, 0.4), abs=1e-12)


def test_unreachable_target_is_inf():
    # drift 0 with target beyond 1 - p has no finite transmissibility
    assert np.isinf(kc.tau_star(0.4, 0.75, 0.0))
    assert np.isinf(kpy.tau_star(0.4, 0.75, 0.0))


def test_biv_density(batch):
    from scipy.special import betaln
    d, t = batch
    re, z = kc.one_step_r2(0.5, d, t)
    pos = z > 0
    args = (3.0, 7.0, float(betaln(3.0, 7.0)), 0.683, 0.0, np.sqrt(0.02))
    f1 = kpy.biv_density_batch(0.5, z[pos], re[pos], *args)
    f2 = kc.biv_density_batch(0.5, z[pos], re[pos], *args)
    np.testing.assert_allclose(f1, f2, rtol=1e-9, atol=1e-12)


def test_transition_row():
    x, w = beta_nodes(0.5, 1.5, 64)
    pn = np.linspace(0.02, 0.95, 48)
    r1 = kpy.transition_row(0.42, pn, x, w, 0.6, -0.4, np.sqrt(0.02))
    r2 = kc.transition_row(0.42, pn, x, w, 0.6, -0.4, np.sqrt(0.02))
    np.testing.assert_allclose(r1, r2, rtol=1e-8, atol=1e-12)
