import numpy as np
import pytest

from decoykit import (
    ParameterBox,
    ParameterError,
    build_protocol,
    evaluate_params,
    optimize,
)
from conftest import N_TOTAL, REFERENCE_PARAMS_110, channel_at


class TestParameterBox:
    @pytest.mark.parametrize("family", ["3Int-0", "3Int-1", "4Int-1", "4Int-2", "5Int-1"])
    def test_starts_build_valid_protocols(self, family):
        box = ParameterBox.for_family(family)
        rng = np.random.default_rng(9)
        for params in [box.nominal_start()] + [box.random_start(rng) for _ in range(8)]:
            proto = build_protocol(family, params, N_TOTAL)
            assert sum(s.prob for s in proto.sources) == pytest.approx(1.0, abs=1e-12)

    def test_dynamic_bounds_keep_simplex(self):
        box = ParameterBox.for_family("4Int-2")
        params = box.nominal_start()
        lo, hi = box.dynamic_bounds("p_Z2", params)
        others = params["p_Z1"] + params["p_X1"]
        assert hi <= 1 - others
        params["p_Z2"] = hi
        build_protocol("4Int-2", params, N_TOTAL)

    def test_dynamic_bounds_mirror_factor(self):
        box = ParameterBox.for_family("3Int-0")
        params = {"p_Z1": 0.2, "p_Z2": 0.2, "mu_Z1": 0.1, "mu_Z2": 0.4}
        lo, hi = box.dynamic_bounds("p_Z2", params)
        # mirrored onto the X basis: 2*(p_Z1 + p_Z2) must stay below 1
        assert 2 * (params["p_Z1"] + hi) <= 1
        params["p_Z2"] = hi
        build_protocol("3Int-0", params, N_TOTAL)

    def test_dynamic_bounds_intensity_ordering(self):
        box = ParameterBox.for_family("4Int-2")
        params = box.nominal_start()
        _, hi = box.dynamic_bounds("mu_Z1", params)
        assert hi < params["mu_Z2"]
        lo, _ = box.dynamic_bounds("mu_Z2", params)
        assert lo > params["mu_Z1"]

    def test_dynamic_bounds_key_split(self):
        box = ParameterBox.for_family("5Int-1")
        params = box.nominal_start()
        _, hi = box.dynamic_bounds("ps_Z1", params)
        assert hi == params["p_Z1"]
        lo, _ = box.dynamic_bounds("p_Z1", params)
        assert lo >= params["ps_Z1"]

    def test_pinned_intensity_cap_for_3int1(self):
        box = ParameterBox.for_family("3Int-1")
        _, hi = box.dynamic_bounds("mu_Z1", box.nominal_start())
        assert hi < 0.479

    def test_embeddings_build(self):
        box5 = ParameterBox.for_family("5Int-1")
        start41 = ParameterBox.for_family("4Int-1").nominal_start()
        start42 = ParameterBox.for_family("4Int-2").nominal_start()
        for sub, params in (("4Int-1", start41), ("4Int-2", start42)):
            build_protocol("5Int-1", box5.embed_subfamily(sub, params), N_TOTAL)
        box41 = ParameterBox.for_family("4Int-1")
        start31 = ParameterBox.for_family("3Int-1").nominal_start()
        build_protocol("4Int-1", box41.embed_subfamily("3Int-1", start31), N_TOTAL)

    def test_unknown_family(self):
        with pytest.raises(ParameterError):
            ParameterBox.for_family("6Int-3")


class TestEvaluateParams:
    def test_reference_point(self, channel_110):
        report = evaluate_params("4Int-2", REFERENCE_PARAMS_110["4Int-2"], channel_110, N_TOTAL)
        assert report.rate == pytest.approx(3.50e-6, rel=0.10)

    def test_invalid_params_propagate(self, channel_110):
        bad = dict(REFERENCE_PARAMS_110["4Int-2"], mu_Z1=0.419)
        with pytest.raises(ParameterError):
            evaluate_params("4Int-2", bad, channel_110, N_TOTAL)


class TestOptimize:
    def test_deterministic_for_fixed_seed(self):
        ch = channel_at(70)
        one = optimize("3Int-1", ch, 1e10, restarts=2, seed=3)
        two = optimize("3Int-1", ch, 1e10, restarts=2, seed=3)
        assert one.to_dict() == two.to_dict()
        assert one.best_rate > 0

    def test_monotone_within_restart(self):
        res = optimize("3Int-1", channel_at(70), 1e10, restarts=3, seed=5)
        for restart_trace in res.trace:
            assert all(a <= b + 1e-18 for a, b in zip(restart_trace, restart_trace[1:]))

    def test_restart_dominance(self):
        ch = channel_at(70)
        rates = [
            optimize("3Int-1", ch, 1e10, restarts=k, seed=11).best_rate for k in (1, 2, 3)
        ]
        assert rates[0] <= rates[1] <= rates[2]

    def test_best_rate_matches_recomputation(self, default_cfg):
        ch = channel_at(70)
        res = optimize("4Int-1", ch, 1e10, restarts=2, seed=1)
        recomputed = evaluate_params("4Int-1", res.best_params, ch, 1e10, default_cfg)
        assert abs(res.best_rate - recomputed.rate) <= 1e-12

    def test_infeasible_distance_returns_zero_with_trace(self):
        res = optimize("3Int-1", channel_at(220), 1e10, restarts=2, seed=0, max_sweeps=4)
        assert res.best_rate == 0.0
        assert res.restarts_used == 2
        assert res.trace and all(t[-1] == 0.0 for t in res.trace)

    def test_restart_count_validated(self):
        with pytest.raises(ParameterError):
            optimize("3Int-1", channel_at(70), 1e10, restarts=0)

    def test_result_document(self):
        res = optimize("3Int-1", channel_at(70), 1e10, restarts=1, seed=2)
        doc = res.to_dict()
        assert doc["family"] == "3Int-1"
        assert doc["seed"] == 2
        assert set(doc["best_params"]) == {"p_Z1", "p_Z2", "p_X1", "mu_Z1", "q_x"}
        assert doc["report"]["rate"] == res.best_rate

    def test_every_candidate_is_feasible(self, monkeypatch):
        # the line search must never step outside the simplex or break the
        # intensity ordering; record every candidate the objective sees
        import decoykit.optimizer as opt

        seen = []
        original = opt.evaluate_params

        def recording(family, params, channel, n_total, cfg=None, k_max=20, backend=None):
            seen.append(dict(params))
            return original(family, params, channel, n_total, cfg, k_max, backend)

        monkeypatch.setattr(opt, "evaluate_params", recording)
        opt.optimize("4Int-2", channel_at(70), 1e10, restarts=2, seed=4, max_sweeps=2)
        assert len(seen) > 50
        for params in seen:
            build_protocol("4Int-2", params, 1e10)
