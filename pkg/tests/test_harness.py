import csv
import math
import struct
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from torinfo.distributions import sample_von_mises_sine
from torinfo.estimators import EstimatorSpec, estimate
from torinfo.harness import (SCHEMAS, ComplexityModel, ExperimentPlan, PlanError,
                             avg_knn_distance, bundled_plans, derive_seed,
                             hybrid_cost_model, load_plan, load_trajectory,
                             measured_tier_fractions, parse_plan, read_csv,
                             run_accuracy, run_complexity, run_perf,
                             run_periodicity, run_plan, run_stability,
                             save_trajectory, unwrapped_cloud)
from torinfo.harness.complexity import C_KNN
from torinfo.harness.io import MAGIC, resolve_output
from torinfo.harness.plans import parse_number
from torinfo.harness.runners import mean_se, resolve_workers, stability_cells
from torinfo.space import TWO_PI, PointCloud
from torinfo.vicsek import VicsekConfig, simulate


class TestComplexityModel:
    def test_avg_knn_example(self):
        expect = (7 / 15) * math.sqrt(3 * (2 * math.pi) ** 2 / 3000)
        assert avg_knn_distance(3, 3000, 2) == pytest.approx(expect, rel=1e-15)
        assert avg_knn_distance(3, 3000, 2) == pytest.approx(0.0927228, abs=1e-7)

    def test_avg_knn_monotone_and_scaling(self):
        ns = [100, 1000, 10_000, 100_000]
        vals = [avg_knn_distance(3, n, 2) for n in ns]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert avg_knn_distance(3, 1000, 3) / avg_knn_distance(3, 8000, 3) == pytest.approx(2.0)

    @pytest.mark.parametrize("k,N", [(0, 10), (10, 10), (-1, 5)])
    def test_avg_knn_errors(self, k, N):
        with pytest.raises(ValueError):
            avg_knn_distance(k, N, 2)

    @pytest.mark.parametrize("N,k", [(1000, 1), (3000, 3), (10_000, 3), (10**5, 10), (10**6, 5)])
    def test_area_ratio_oracle_2d(self, N, k):
        eps = C_KNN * (k * (2 * math.pi) ** 2 / N) ** 0.5
        alpha = 1 - (1 - eps / math.pi) ** 2
        beta = 8 * eps ** 2 / (2 * math.pi) ** 2
        m = ComplexityModel(D=2, k=k, N=N)
        assert m.alpha == pytest.approx(alpha, rel=1e-12)
        assert m.beta == pytest.approx(beta, rel=1e-12)
        # coefficient form {4c, -4c^2} on the log term
        c, lg = C_KNN, math.log2(N)
        assert m.alpha * N * lg == pytest.approx((4 * c * math.sqrt(k * N) - 4 * c * c * k) * lg)
        assert m.cost() == pytest.approx(m.cost_expanded(), rel=1e-12)

    @pytest.mark.parametrize("N,k", [(1000, 1), (10_000, 3), (10**6, 5)])
    def test_expansion_3d(self, N, k):
        m = ComplexityModel(D=3, k=k, N=N)
        assert m.cost() == pytest.approx(m.cost_expanded(), rel=1e-12)
        assert m.beta * N * N == pytest.approx(24 * C_KNN ** 3 * k * N, rel=1e-12)

    def test_k_to_zero(self):
        N = 10_000
        m = ComplexityModel(D=2, k=1e-12, N=N)
        assert m.cost() == pytest.approx(N * math.log2(N), rel=1e-4)

    @given(st.sampled_from([2, 3]), st.integers(2, 10**7), st.floats(0.01, 50))
    def test_bounds(self, D, N, k):
        if not k < N:
            return
        m = ComplexityModel(D=D, k=k, N=N)
        assert 0 <= m.beta <= m.alpha <= 1
        assert m.area_inner + m.area_border == pytest.approx(m.area_total)

    def test_bad_dimension(self):
        with pytest.raises(ValueError):
            ComplexityModel(D=4, k=3, N=100)

    def test_hybrid_cost_model(self):
        a, b, cost = hybrid_cost_model(10_000, 3, 2)
        assert 0 < b < a < 1 and cost > 10_000 * math.log2(10_000)

    def test_measured_fractions_2d(self):
        a, b = measured_tier_fractions(10_000, 3, 2, clouds=3, seed=1)
        m = ComplexityModel(D=2, k=3, N=10_000)
        assert a == pytest.approx(m.alpha, rel=0.3)
        assert b == pytest.approx(m.beta, rel=0.3)


class TestPlans:
    def test_parse_number(self):
        assert parse_number("7pi/8") == pytest.approx(7 * math.pi / 8)
        assert parse_number("-pi") == -math.pi
        assert parse_number("2 * pi") == 2 * math.pi
        assert parse_number("1e-3") == 1e-3
        for bad in ["", "abc", "pi pi", "1/"]:
            with pytest.raises(ValueError):
                parse_number(bad)

    def test_parse_full(self):
        plan = parse_plan("""
            # comment
            kind = accuracy
            distributions = gaussian(r=0.9); von_mises(set=c, mu=7pi/8)
            metrics = mi, te
            N = 1000, 2000
            reps = 5   # trailing comment
        """)
        assert plan.kind == "accuracy" and plan.N == [1000, 2000] and plan.reps == 5
        assert plan.distributions == [("gaussian", {"r": 0.9}),
                                      ("von_mises", {"set": "c", "mu": 7 * math.pi / 8})]

    @pytest.mark.parametrize("text,line", [
        ("kind = accuracy\nnonsense", 2),
        ("kind = accuracy\nfoo = 1", 2),
        ("kind = accuracy\nreps = 2\nreps = 3", 3),
        ("kind = accuracy\nreps = 2.5", 2),
        ("kind = bogus", 1),
        ("kind = perf\nbackends = vp, ball", 2),
        ("kind = perf\nmetrics = entropy", 2),
        ("kind = accuracy\ndistributions = student(r=1)", 2),
        ("kind = perf\nfull_scale = maybe", 2),
    ])
    def test_errors_carry_line(self, text, line):
        with pytest.raises(PlanError) as info:
            parse_plan(text)
        assert info.value.line == line and f"line {line}" in str(info.value)

    @pytest.mark.parametrize("text", ["reps = 3", "kind = accuracy",
                                      "kind = perf\nreps = 0", "kind = perf\nN ="])
    def test_semantic_errors(self, text):
        with pytest.raises(PlanError):
            parse_plan(text)

    def test_bundled(self):
        names = bundled_plans()
        for required in ["table1_desk", "fig7_desk", "perf_desk", "complexity_desk",
                         "periodicity_desk", "table1_full", "fig7_full"]:
            assert required in names
        for name in names:
            plan = load_plan(name)
            assert plan.full_scale == name.endswith("_full")

    def test_load_missing(self):
        with pytest.raises(FileNotFoundError):
            load_plan("no_such_plan")

    def test_full_scale_gate(self):
        with pytest.raises(PermissionError):
            run_plan(load_plan("table1_full"))


class TestIO:
    @pytest.mark.parametrize("kind,header", [
        ("accuracy", "distribution,params,metric,backend,k,N,reps,mean,se_e4,exact,bias"),
        ("perf", "backend,metric,N_I,build_s,query_s,total_s,peak_mem_bytes,value"),
        ("stability", "eta,metric,variant,value,se_e4"),
        ("periodicity", "mu,wrapped,mean,se_e4,exact"),
    ])
    def test_schemas(self, kind, header):
        assert ",".join(SCHEMAS[kind]) == header

    def test_output_dir_env(self, monkeypatch, tmp_path):
        monkeypatch.setenv("TORINFO_OUTPUT_DIR", str(tmp_path))
        assert resolve_output("a.csv") == tmp_path / "a.csv"
        assert resolve_output("/abs/a.csv").is_absolute()

    def test_trajectory_roundtrip(self, tmp_path):
        traj = simulate(VicsekConfig(M=7, rho=0.5, eta=1.0, tau=4, seed=3))
        path = save_trajectory(tmp_path / "t.bin", traj)
        raw = path.read_bytes()
        assert raw[:16] == b"TORINFDYN\0" + b"\0" * 6
        assert struct.unpack_from("<H", raw, 16)[0] == 1
        back = load_trajectory(path)
        assert np.array_equal(back.headings, traj.headings)
        assert np.array_equal(back.positions, traj.positions)
        assert back.config.L == traj.config.L and back.config.seed == 3

    def test_trajectory_without_positions(self, tmp_path):
        traj = simulate(VicsekConfig(M=3, tau=2), store_positions=False)
        back = load_trajectory(save_trajectory(tmp_path / "t.bin", traj))
        assert back.positions is None

    def test_trajectory_corrupt(self, tmp_path):
        traj = simulate(VicsekConfig(M=3, tau=2))
        path = save_trajectory(tmp_path / "t.bin", traj)
        raw = bytearray(path.read_bytes())
        (tmp_path / "short.bin").write_bytes(bytes(raw[:10]))
        (tmp_path / "trunc.bin").write_bytes(bytes(raw[:-8]))
        raw[0:1] = b"X"
        (tmp_path / "magic.bin").write_bytes(bytes(raw))
        for name in ["short.bin", "trunc.bin", "magic.bin"]:
            with pytest.raises(ValueError):
                load_trajectory(tmp_path / name)
        assert MAGIC.startswith(b"TORINFDYN\0")


class TestRunners:
    def test_seeds_and_workers(self, monkeypatch):
        assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
        assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)
        assert resolve_workers(3) == 3
        monkeypatch.setenv("TORINFO_THREADS", "2")
        assert resolve_workers(0) == 2 and resolve_workers(None) == 2
        m, se = mean_se([1.0, 2.0, 3.0])
        assert m == 2.0 and se == pytest.approx(1 / math.sqrt(3))

    def test_accuracy_reduced(self, tmp_path):
        plan = ExperimentPlan(kind="accuracy", distributions=[("gaussian", {"r": 0.9})],
                              metrics=["mi"], backends=["vp", "naive"], N=[1000], reps=50,
                              seed=2, workers=1, output=str(tmp_path / "acc.csv"))
        t0 = time.perf_counter()
        rows = run_accuracy(plan)
        assert time.perf_counter() - t0 < 60
        assert [r["backend"] for r in rows] == ["vp", "naive"]
        assert rows[0]["mean"] == rows[1]["mean"]  # paired samples, exact backends
        assert rows[0]["mean"] == pytest.approx(0.83, abs=0.03)
        assert rows[0]["params"] == "r=0.9"
        on_disk = read_csv(tmp_path / "acc.csv")
        assert list(on_disk[0]) == list(SCHEMAS["accuracy"])
        assert (tmp_path / "acc.csv.meta.json").exists()

    def test_accuracy_deterministic(self):
        plan = ExperimentPlan(kind="accuracy", distributions=[("uniform_wrapped", {})],
                              metrics=["te"], N=[300], reps=4, seed=9, workers=1)
        assert run_accuracy(plan) == run_accuracy(plan)

    def test_accuracy_skips_unsupported_metrics(self):
        plan = ExperimentPlan(kind="accuracy", distributions=[("hahs_pethel", {})],
                              N=[300], reps=2, workers=1)
        assert [r["metric"] for r in run_accuracy(plan)] == ["te"]

    def test_perf(self, tmp_path):
        plan = ExperimentPlan(kind="perf", M=200, rho=0.5, eta=[4.0], tau=40,
                              N_I=[500, 2000, 10**9], metrics=["te"],
                              backends=["vp", "hybrid"], timing_repeats=1, seed=1,
                              output=str(tmp_path / "perf.csv"))
        rows = run_perf(plan)
        ok = [r for r in rows if r["N_I"] != 10**9]
        assert len(ok) == 4 and all(r["peak_mem_bytes"] > 0 for r in ok)
        assert ok[0]["value"] == ok[1]["value"] and ok[2]["value"] == ok[3]["value"]
        assert all(str(r["value"]).startswith("error=") for r in rows if r["N_I"] == 10**9)

    def test_complexity(self):
        plan = ExperimentPlan(kind="complexity", dims=[2, 3], N=[2000], reps=1, seed=1)
        rows = run_complexity(plan)
        assert [r["D"] for r in rows] == [2, 3]
        assert all(0 <= r["measured_beta"] <= r["measured_alpha"] <= 1 for r in rows)

    def test_stability(self):
        plan = ExperimentPlan(kind="stability", M=60, rho=0.5, tau=40, eta=[1.0],
                              metrics=["mi", "gte"], subsets=3, seed=4)
        rows = run_stability(plan)
        assert [r["variant"] for r in rows[:3]] == ["unmodified", "shuffled", "decimated"]
        assert len(rows) == 6

    def test_stability_full_fraction(self):
        cfg = VicsekConfig(M=60, rho=0.5, eta=1.0, tau=20, seed=2)
        from torinfo.vicsek import extract_records
        cloud = extract_records(simulate(cfg)).cloud("te")
        base, _, dec = stability_cells(cloud, "te", 3, 1.0, 2, seed=1)
        assert dec == [base, base]

    def test_periodicity(self):
        plan = ExperimentPlan(kind="periodicity", N=[2000], reps=3, seed=1, workers=1)
        rows = run_periodicity(plan)
        assert [(r["mu"], r["wrapped"]) for r in rows] == [
            (math.pi, True), (math.pi, False), (7 * math.pi / 8, True), (7 * math.pi / 8, False)]
        # wrapped estimates are rotation invariant, and paired draws are shifted copies
        assert rows[0]["mean"] == pytest.approx(rows[2]["mean"], abs=1e-12)
        assert rows[0]["exact"] == pytest.approx(0.1928, abs=5e-5)

    def test_wrapped_rotation_invariance(self):
        cloud = sample_von_mises_sine(12, 14, -8, n=3000, seed=3)
        spec = EstimatorSpec("mi")
        base = estimate(cloud, spec).value
        # shifts that are exact in binary keep every wrapped difference exact
        rotated = PointCloud(np.mod(cloud.data + 0.5, TWO_PI), cloud.space)
        assert estimate(rotated, spec).value == pytest.approx(base, abs=1e-12)

    def test_unwrapped_cloud(self):
        cloud = sample_von_mises_sine(12, 14, -8, n=100, seed=3)
        plain = unwrapped_cloud(cloud)
        assert not plain.space.is_periodic
        assert plain.data.min() >= -math.pi and plain.data.max() < math.pi
