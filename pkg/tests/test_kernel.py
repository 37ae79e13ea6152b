import numpy as np
import pytest

from decoykit import AnalysisConfig, build_protocol, simulate_observed
from decoykit import _kernel
from decoykit.keyrate import _audit_point, _prepare
from conftest import GENERIC_PARAMS, N_TOTAL, channel_at

HAS_C = "c" in _kernel.available_backends()

CONFIGS = [
    AnalysisConfig(),
    AnalysisConfig(fluctuation_free=True),
    AnalysisConfig(rx2_literal=True),
    AnalysisConfig(eq18_literal=False),
    AnalysisConfig(epsilon=1e-6),
]


def _analyses():
    for family, params in GENERIC_PARAMS.items():
        for km in (11.5, 74.0, 110.0):
            proto = build_protocol(family, params, N_TOTAL)
            stats = simulate_observed(proto, channel_at(km))
            for cfg in CONFIGS:
                yield family, km, cfg, _prepare(proto, stats, cfg)


def _grid_points(an, rng, n=400):
    lz, hz = an.s0_z_interval
    lx, hx = an.s0_x_interval
    zs = rng.uniform(lz, hz, n) if hz > lz else np.full(n, lz)
    xs = rng.uniform(lx, hx, n) if hx > lx else np.full(n, lx)
    return zs, xs


@pytest.mark.skipif(not HAS_C, reason="compiled kernel not built")
def test_backends_agree():
    rng = np.random.default_rng(3)
    for family, km, cfg, an in _analyses():
        zs, xs = _grid_points(an, rng)
        r_py = _kernel.rate_grid(an.ctx, zs, xs, backend="py")
        r_c = _kernel.rate_grid(an.ctx, zs, xs, backend="c")
        np.testing.assert_allclose(r_c, r_py, rtol=1e-12, atol=1e-20,
                                   err_msg=f"{family}@{km} {cfg}")


def test_kernel_matches_reference_evaluation():
    rng = np.random.default_rng(4)
    for family, km, cfg, an in _analyses():
        zs, xs = _grid_points(an, rng, n=12)
        for backend in _kernel.available_backends():
            grid = _kernel.rate_grid(an.ctx, zs, xs, backend=backend)
            for z, x, r in zip(zs, xs, grid):
                audit, _, _ = _audit_point(an, float(z), float(x))
                assert r == pytest.approx(audit, rel=1e-12, abs=1e-20)


def test_grid_broadcasting_shapes():
    an = next(_analyses())[3]
    zs = np.linspace(*an.s0_z_interval, 7)
    xs = np.linspace(*an.s0_x_interval, 5)
    out = _kernel.rate_grid(an.ctx, zs[:, None], xs[None, :])
    assert out.shape == (7, 5)
    point = _kernel.rate_point(an.ctx, zs[0], xs[0])
    assert point == pytest.approx(out[0, 0], rel=1e-15)


def test_backend_selection(monkeypatch):
    monkeypatch.setenv("DECOYKIT_KERNEL", "py")
    assert _kernel.default_backend() == "py"
    monkeypatch.setenv("DECOYKIT_KERNEL", "nope")
    with pytest.raises(ValueError):
        _kernel.default_backend()
    monkeypatch.delenv("DECOYKIT_KERNEL")
    assert _kernel.default_backend() in ("c", "py")


def test_context_pack_is_cached_and_consistent():
    an = next(_analyses())[3]
    packed = an.ctx.pack()
    assert an.ctx.pack() is packed
    assert packed[0] == an.ctx.lam
    n_pairs_z, n_pairs_x, n_terms = packed[6:9].astype(int)
    assert (n_pairs_z, n_pairs_x) == tuple(map(len, (an.ctx.pairs_z, an.ctx.pairs_x)))
    assert n_terms == len(an.ctx.terms)
