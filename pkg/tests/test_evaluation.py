import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ampdx.evaluation import (
    BenchmarkConfig,
    GeneratorConfig,
    PRNG_NAME,
    REPORT_SCHEMA,
    generate_synthetic,
    nrmse,
    random_knowledge_matrix,
    rank_of_truth,
    run_benchmark,
    solve_case,
    topk_accuracy,
)
from ampdx.model import DataError, NoiseModel, SymptomObservation


class TestNrmse:
    def test_perfect_recovery_is_zero(self, small_matrix, rng):
        truth = np.zeros(small_matrix.n)
        truth[1] = 1.0
        assert nrmse([(small_matrix, truth, truth)]) == 0.0

    def test_zero_estimate_is_one(self, small_matrix):
        truth = np.zeros(small_matrix.n)
        truth[0] = 1.0
        assert nrmse([(small_matrix, truth, np.zeros(small_matrix.n))]) == pytest.approx(1.0)

    def test_zero_energy_truth_rejected(self, small_matrix):
        with pytest.raises(DataError, match="zero symptom-space energy"):
            nrmse([(small_matrix, np.zeros(small_matrix.n), np.zeros(small_matrix.n))])

    def test_permutation_invariant(self, small_matrix, rng):
        batch = []
        for _ in range(6):
            truth = np.zeros(small_matrix.n)
            truth[rng.integers(small_matrix.n)] = 1.0
            batch.append((small_matrix, truth, rng.normal(size=small_matrix.n)))
        forward = nrmse(batch)
        backward = nrmse(batch[::-1])
        assert forward == pytest.approx(backward, rel=1e-12)


class TestTopK:
    def test_argmax_hit(self):
        assert topk_accuracy([(1, np.array([0.1, 0.9, 0.3]))], 1) == 1.0

    def test_k_equals_n_always_hits(self, rng):
        batch = [(int(rng.integers(5)), rng.normal(size=5)) for _ in range(10)]
        assert topk_accuracy(batch, 5) == 1.0

    def test_k_above_n_rejected(self):
        with pytest.raises(DataError, match="exceeds"):
            topk_accuracy([(0, np.array([1.0, 0.0]))], 3)

    def test_tie_break_by_ascending_index(self):
        # equal scores: the lower index outranks
        assert rank_of_truth(np.array([0.5, 0.5, 0.1]), 0) == 1
        assert rank_of_truth(np.array([0.5, 0.5, 0.1]), 1) == 2

    @given(st.integers(1, 5), st.integers(0, 4))
    @settings(max_examples=50, deadline=None)
    def test_monotone_in_k(self, k, truth):
        rng = np.random.default_rng(k * 7 + truth)
        batch = [(truth, rng.normal(size=5)) for _ in range(8)]
        accs = [topk_accuracy(batch, kk) for kk in range(1, 6)]
        assert all(b >= a for a, b in zip(accs, accs[1:]))


class TestGenerator:
    def test_one_hot_truths(self, rng):
        matrix = random_knowledge_matrix(7, 5, 0.4, rng)
        ds = generate_synthetic(matrix, GeneratorConfig(seed=3, vignette_count=20))
        assert np.all(ds.truths.sum(axis=1) == 1.0)
        assert np.all((ds.truths == 0) | (ds.truths == 1))

    def test_noiseless_limit_matches_sign(self, rng):
        matrix = random_knowledge_matrix(7, 5, 0.4, rng)
        ds = generate_synthetic(matrix, GeneratorConfig(seed=3, vignette_count=30, snr_db=float("inf")))
        clean = ds.truths @ matrix.entries.T
        np.testing.assert_array_equal(ds.observations, np.where(clean > 0, 1.0, -1.0))
        assert ds.noise.noise_precision == 1e11

    def test_seed_determinism(self, rng):
        matrix = random_knowledge_matrix(9, 6, 0.4, rng)
        a = generate_synthetic(matrix, GeneratorConfig(seed=11, vignette_count=25))
        b = generate_synthetic(matrix, GeneratorConfig(seed=11, vignette_count=25))
        np.testing.assert_array_equal(a.truths, b.truths)
        np.testing.assert_array_equal(a.observations, b.observations)
        assert a.noise.noise_precision == b.noise.noise_precision

    def test_empirical_snr_within_half_db(self, rng):
        # the acceptance suite runs the full 10^4-draw check; smaller here
        matrix = random_knowledge_matrix(12, 8, 0.4, rng)
        ds = generate_synthetic(matrix, GeneratorConfig(seed=5, vignette_count=4000, snr_db=25.0))
        clean = ds.truths @ matrix.entries.T
        rng2 = np.random.default_rng(99)
        w = rng2.normal(scale=ds.noise.noise_variance**0.5, size=clean.shape)
        realized = 10 * np.log10((clean**2).sum() / (w**2).sum())
        assert abs(realized - 25.0) < 0.5

    def test_matrix_has_no_zero_column(self, rng):
        for _ in range(20):
            matrix = random_knowledge_matrix(5, 9, 0.15, rng)
            assert matrix.entries.sum(axis=0).min() >= 1

    def test_vignette_export_requires_one_hot(self, rng):
        matrix = random_knowledge_matrix(7, 5, 0.4, rng)
        ds = generate_synthetic(matrix, GeneratorConfig(seed=3, vignette_count=4, sparsity=2))
        with pytest.raises(DataError, match="one-hot"):
            ds.vignettes(None)


class TestSolveCase:
    def test_each_algorithm_returns_diagnostics(self, rng):
        matrix = random_knowledge_matrix(8, 6, 0.4, rng)
        ds = generate_synthetic(matrix, GeneratorConfig(seed=2, vignette_count=1))
        obs = ds.observation_list()[0]
        for algo in ("gvamp", "uls", "admm", "scan"):
            estimate, diag = solve_case(matrix, obs, algo, noise=ds.noise)
            assert estimate.shape == (matrix.n,)
            assert diag["algorithm"] == algo
            assert isinstance(diag["iterations"], int)
            assert isinstance(diag["converged"], bool)

    def test_unknown_algorithm(self, rng):
        matrix = random_knowledge_matrix(8, 6, 0.4, rng)
        obs = SymptomObservation(np.ones(8, dtype=np.int8))
        with pytest.raises(DataError, match="unknown algorithm"):
            solve_case(matrix, obs, "magic", noise=NoiseModel(1.0))


class TestBenchmark:
    @pytest.fixture
    def dataset(self, rng):
        matrix = random_knowledge_matrix(10, 8, 0.4, rng)
        return matrix, generate_synthetic(matrix, GeneratorConfig(seed=21, vignette_count=12))

    def test_perfect_estimates_give_zero_nrmse(self, dataset):
        matrix, ds = dataset
        report = run_benchmark(matrix, ds.observation_list(), ds.truths, ("uls",),
                               BenchmarkConfig(noise=ds.noise))
        # replace metrics path: a direct sanity call on the metric itself
        batch = [(matrix, t, t) for t in ds.truths]
        assert nrmse(batch) == 0.0
        assert report.metrics["uls"].nrmse > 0

    def test_report_layout(self, dataset):
        matrix, ds = dataset
        report = run_benchmark(matrix, ds.observation_list(), ds.truths,
                               ("gvamp", "admm", "uls", "scan"), BenchmarkConfig(noise=ds.noise), seed=21)
        payload = report.to_json_dict()
        assert set(payload) == {"algorithms", "metrics", "config_echo", "seed", "exclusions"}
        assert payload["algorithms"] == ["gvamp", "admm", "uls", "scan"]
        assert set(payload["metrics"]["nrmse"]) == {"gvamp", "admm", "uls", "scan"}
        for algo, accs in payload["metrics"]["top_k"].items():
            assert list(accs) == ["1", "2", "3"]
        table = report.to_text_table()
        lines = table.strip().splitlines()
        assert len(lines) == 5  # header + NRMSE + TOP 1..3
        assert lines[1].startswith("NRMSE")
        assert [ln.split()[0] for ln in lines[2:]] == ["TOP", "TOP", "TOP"]

    def test_report_json_schema(self, dataset):
        jsonschema = pytest.importorskip("jsonschema")
        matrix, ds = dataset
        report = run_benchmark(matrix, ds.observation_list(), ds.truths, ("uls", "scan"),
                               BenchmarkConfig(noise=ds.noise), seed=0)
        jsonschema.validate(report.to_json_dict(), REPORT_SCHEMA)

    def test_topk_monotone_every_algorithm(self, dataset):
        matrix, ds = dataset
        report = run_benchmark(matrix, ds.observation_list(), ds.truths,
                               ("gvamp", "admm", "uls", "scan"), BenchmarkConfig(noise=ds.noise))
        for m in report.metrics.values():
            assert m.top_k[1] <= m.top_k[2] <= m.top_k[3]

    def test_single_algorithm_column(self, dataset):
        matrix, ds = dataset
        report = run_benchmark(matrix, ds.observation_list(), ds.truths, ("uls",),
                               BenchmarkConfig(noise=ds.noise))
        assert report.algorithms == ("uls",)
        assert list(report.metrics) == ["uls"]

    def test_empty_dataset_rejected(self, dataset):
        matrix, ds = dataset
        with pytest.raises(DataError, match="empty dataset"):
            run_benchmark(matrix, [], np.zeros((0, matrix.n)), ("uls",))

    def test_unknown_algorithm_rejected(self, dataset):
        matrix, ds = dataset
        with pytest.raises(DataError, match="unknown algorithm"):
            run_benchmark(matrix, ds.observation_list(), ds.truths, ("uls", "magic"))

    def test_threads_do_not_change_results(self, dataset):
        matrix, ds = dataset
        serial = run_benchmark(matrix, ds.observation_list(), ds.truths, ("gvamp", "uls"),
                               BenchmarkConfig(noise=ds.noise, threads=1))
        threaded = run_benchmark(matrix, ds.observation_list(), ds.truths, ("gvamp", "uls"),
                                 BenchmarkConfig(noise=ds.noise, threads=4))
        for algo in ("gvamp", "uls"):
            assert serial.metrics[algo].nrmse == threaded.metrics[algo].nrmse
            assert serial.metrics[algo].per_vignette == threaded.metrics[algo].per_vignette

    def test_prng_recorded(self, dataset):
        matrix, ds = dataset
        report = run_benchmark(matrix, ds.observation_list(), ds.truths, ("uls",),
                               BenchmarkConfig(noise=ds.noise))
        assert report.config_echo["prng"] == PRNG_NAME == "numpy-pcg64"

    def test_solver_failure_excludes_vignette(self, dataset, monkeypatch):
        # a per-vignette failure is recorded, the case dropped, the rest kept
        matrix, ds = dataset
        import ampdx.evaluation as evaluation
        real = evaluation.solve_uls
        calls = {"n": 0}

        def flaky(a, s):
            calls["n"] += 1
            if calls["n"] == 3:
                raise DataError("synthetic failure")
            return real(a, s)

        monkeypatch.setattr(evaluation, "solve_uls", flaky)
        report = run_benchmark(matrix, ds.observation_list(), ds.truths, ("uls",),
                               BenchmarkConfig(noise=ds.noise))
        assert report.exclusions["uls"] == 1
        assert len(report.metrics["uls"].per_vignette) == ds.count - 1
