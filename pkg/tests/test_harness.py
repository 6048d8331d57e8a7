import io
import json
from dataclasses import replace

import numpy as np
import pytest

import irsbeam.harness as hm
from irsbeam.channel import RngSeedPolicy, ScenarioConfig, gen_instance
from irsbeam.harness import (BenchConfig, BenchResult, emit_results, load_results, run_baseline_no_irs,
                             run_baseline_random_theta, run_bench, write_csv)
from irsbeam.model import FeasibleSet, SolverFailure, SystemInstance
from irsbeam.optimizer import OptimizeOpts, optimize

SMALL = BenchConfig(sweeps={"P_T_dbm": [-5.0, 0.0]},
                    feasible_sets=("ideal", "continuous", "discrete:2"),
                    snapshots=2, realizations_per_snapshot=2, master_seed=5, record_timing=False)


@pytest.fixture(scope="module")
def small_result():
    return run_bench(SMALL)


class TestBaselines:
    def test_single_user_closed_form(self):
        P, s2, h = 3.0, 0.2, 0.5 + 0.5j
        inst = SystemInstance([[h]], np.ones((2, 1)), np.ones((1, 2)), [1.0], P, s2)
        assert run_baseline_no_irs(inst).wsr == pytest.approx(np.log2(1 + P * abs(h) ** 2 / s2))

    def test_no_irs_equals_n0_copy(self):
        inst = gen_instance(ScenarioConfig(), RngSeedPolicy(3))
        opts = OptimizeOpts(seed=2)
        assert run_baseline_no_irs(inst, opts).wsr == optimize(inst.without_irs(),
                                                               FeasibleSet.ideal(), opts).wsr

    def test_random_theta_without_irs(self):
        inst = gen_instance(ScenarioConfig(N=0), RngSeedPolicy(3))
        assert run_baseline_random_theta(inst, seed=4).wsr == run_baseline_no_irs(inst).wsr

    def test_random_theta_deterministic(self):
        inst = gen_instance(ScenarioConfig(), RngSeedPolicy(3))
        a, b = run_baseline_random_theta(inst, seed=4), run_baseline_random_theta(inst, seed=4)
        assert a.wsr == b.wsr
        np.testing.assert_allclose(np.abs(a.state.theta), 1)

    def test_paired_dominance(self):
        for i in range(5):
            inst = gen_instance(ScenarioConfig(), RngSeedPolicy(11, i))
            joint = optimize(inst, FeasibleSet.continuous(), OptimizeOpts(seed=i)).wsr
            assert joint >= run_baseline_no_irs(inst).wsr - 1e-9
            assert joint >= run_baseline_random_theta(inst, seed=i).wsr - 1e-9


class TestBench:
    def test_row_layout(self, small_result):
        methods = SMALL.methods()
        assert len(small_result.rows) == 2 * len(methods)
        assert [(r.method, r.feasible_set) for r in small_result.rows[:len(methods)]] == methods
        for r in small_result.rows:
            assert r.n_trials == 4 and r.n_failures == 0
            assert r.samples == sorted(r.samples) and len(r.samples) == 2
            assert r.mean_ms is None

    def test_stderr(self, small_result):
        r = small_result.rows[0]
        assert r.stderr >= 0

    def test_single_trial_is_a_direct_solve(self):
        cfg = BenchConfig(snapshots=1, realizations_per_snapshot=1, master_seed=8,
                          feasible_sets=("ideal",), baselines=())
        res = run_bench(cfg)
        policy = RngSeedPolicy(8)
        inst = gen_instance(cfg.scenario, policy)
        direct = optimize(inst, FeasibleSet.ideal(), OptimizeOpts(seed=policy.init_seed()))
        assert res.rows[0].mean_rate == direct.wsr
        assert res.rows[0].stderr == 0.0

    def test_parallel_is_deterministic(self, small_result):
        par = run_bench(SMALL, jobs=2)
        a, b = io.StringIO(), io.StringIO()
        write_csv(small_result, a)
        write_csv(par, b)
        assert a.getvalue() == b.getvalue()

    def test_failures_are_counted(self, monkeypatch):
        calls = {"n": 0}
        real = hm.optimize

        def flaky(*args, **kw):
            calls["n"] += 1
            if calls["n"] == 1:
                raise SolverFailure("injected")
            return real(*args, **kw)
        monkeypatch.setattr(hm, "optimize", flaky)
        cfg = BenchConfig(snapshots=1, realizations_per_snapshot=2, feasible_sets=("ideal",),
                          baselines=(), master_seed=1)
        row = run_bench(cfg).rows[0]
        assert row.n_failures == 1 and row.n_trials == 2
        assert row.stderr == 0.0 and row.mean_rate is not None

    def test_all_failed_row(self, monkeypatch):
        def broken(*a, **k):
            raise SolverFailure("injected")
        monkeypatch.setattr(hm, "optimize", broken)
        cfg = BenchConfig(snapshots=1, realizations_per_snapshot=1, feasible_sets=("ideal",),
                          baselines=("no_irs",))
        res = run_bench(cfg)
        assert all(r.mean_rate is None and r.n_failures == 1 for r in res.rows)

    def test_quantiles(self, small_result):
        r = small_result.rows[0]
        assert r.quantile(0.0) == r.samples[0] and r.quantile(1.0) == r.samples[-1]

    def test_lookup(self, small_result):
        assert small_result.rate("no_irs", P_T_dbm=0.0) == small_result.rows[-1].mean_rate
        with pytest.raises(KeyError):
            small_result.row("admm")


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(sweeps={"eta": [0.5]}), dict(sweeps={"N": []}),
                                    dict(rc_solvers=("sdr",)), dict(baselines=("oracle",)),
                                    dict(snapshots=0), dict(feasible_sets=(), baselines=())])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            BenchConfig(**kw)

    def test_grid_is_product(self):
        cfg = BenchConfig(sweeps={"N": [5, 10], "xi_db": [0, 5, 10]})
        grid = cfg.grid()
        assert len(grid) == 6 and grid[1] == {"N": 5, "xi_db": 5.0}

    def test_empty_sweep_is_one_point(self):
        assert BenchConfig().grid() == [{}]


class TestSerialization:
    def test_header_only_csv(self, tmp_path):
        emit_results(BenchResult(SMALL), "csv", tmp_path / "r.csv")
        assert (tmp_path / "r.csv").read_text() == (
            "P_T_dbm,method,feasible_set,mean_rate_bpshz,stderr,n_trials,n_failures,"
            "mean_iters,mean_ms\n")

    def test_csv_rows(self, small_result, tmp_path):
        emit_results(small_result, "csv", tmp_path / "r.csv")
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert len(lines) == 1 + len(SMALL.grid()) * len(SMALL.methods())
        assert lines[1].startswith("-5.0,icu,ideal,")

    def test_json_round_trip(self, small_result, tmp_path):
        emit_results(small_result, "json", tmp_path / "r.json")
        back = load_results(tmp_path / "r.json")
        assert back == small_result
        doc = json.loads((tmp_path / "r.json").read_text())
        assert doc["version"].startswith("v")

    def test_json_round_trip_with_timing(self, tmp_path):
        cfg = replace(SMALL, sweeps={}, record_timing=True, snapshots=1)
        res = run_bench(cfg)
        emit_results(res, "json", tmp_path / "r.json")
        assert load_results(tmp_path / "r.json") == res
        assert all(r.mean_ms > 0 for r in res.rows)

    def test_bad_format(self, small_result, tmp_path):
        with pytest.raises(ValueError):
            emit_results(small_result, "xml", tmp_path / "r.xml")

    def test_io_error_names_path(self, small_result, tmp_path):
        target = tmp_path / "missing" / "r.csv"
        with pytest.raises(OSError, match="missing"):
            emit_results(small_result, "csv", target)
