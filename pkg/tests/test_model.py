import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ampdx.model import (
    AbsenceMode,
    Catalog,
    DataError,
    KnowledgeMatrix,
    NoiseModel,
    SymptomObservation,
    Vignette,
    default_signal_energy,
    encode_observation,
    load_catalog,
    load_demo,
    load_knowledge_matrix,
    load_vignettes,
    save_catalog,
    save_knowledge_matrix,
    save_vignettes,
    snr_to_noise_precision,
)


class TestCatalog:
    def test_demo_catalog_dimensions(self):
        catalog, matrix = load_demo()
        assert catalog.m == 27
        assert catalog.n == 28
        assert matrix.m == 27 and matrix.n == 28

    def test_minimal_catalog(self):
        catalog = Catalog(symptoms=("only",), diseases=("one",))
        assert catalog.m == 1 and catalog.n == 1

    def test_duplicate_name_rejected(self):
        with pytest.raises(DataError, match="duplicate"):
            Catalog(symptoms=("redness", "redness"), diseases=("a",))

    def test_empty_list_rejected(self):
        with pytest.raises(DataError, match="no disease"):
            Catalog(symptoms=("a",), diseases=())

    def test_unknown_name(self, small_catalog):
        with pytest.raises(DataError, match="unknown symptom"):
            small_catalog.symptom_index("nope")

    def test_round_trip(self, small_catalog, tmp_path):
        path = tmp_path / "catalog.json"
        save_catalog(small_catalog, path)
        assert load_catalog(path) == small_catalog

    def test_parse_failure(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{nope")
        with pytest.raises(DataError, match="cannot parse"):
            load_catalog(path)


class TestKnowledgeMatrix:
    def test_identity_3x3(self, tmp_path):
        catalog = Catalog(symptoms=("s1", "s2", "s3"), diseases=("d1", "d2", "d3"))
        path = tmp_path / "id.csv"
        path.write_text("symptom,d1,d2,d3\ns1,1,0,0\ns2,0,1,0\ns3,0,0,1\n")
        matrix = load_knowledge_matrix(path, catalog)
        assert np.array_equal(matrix.entries, np.eye(3))

    def test_non_binary_entry(self, tmp_path):
        catalog = Catalog(symptoms=("s1",), diseases=("d1",))
        path = tmp_path / "bad.csv"
        path.write_text("symptom,d1\ns1,0.7\n")
        with pytest.raises(DataError, match="non-binary"):
            load_knowledge_matrix(path, catalog)

    def test_all_zero_column_rejected(self):
        with pytest.raises(DataError, match="no symptoms"):
            KnowledgeMatrix(np.array([[1.0, 0.0], [1.0, 0.0]]))

    def test_header_mismatch(self, small_catalog, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("symptom,alpha,beta\nredness,1,0\n")
        with pytest.raises(DataError, match="header"):
            load_knowledge_matrix(path, small_catalog)

    def test_round_trip_any_order(self, small_catalog, small_matrix, tmp_path):
        path = tmp_path / "m.csv"
        save_knowledge_matrix(small_matrix, small_catalog, path)
        assert load_knowledge_matrix(path, small_catalog) == small_matrix
        # column order in the file should not matter as long as names match
        rows = path.read_text().strip().splitlines()
        header = rows[0].split(",")
        order = [0, 2, 1, 4, 3]
        shuffled = [",".join(r.split(",")[k] for k in order) for r in rows]
        path.write_text("\n".join(shuffled) + "\n")
        assert load_knowledge_matrix(path, small_catalog) == small_matrix


class TestObservation:
    def test_assume_absent(self, small_catalog):
        obs = encode_observation(["redness"], [], small_catalog)
        assert obs.values.tolist() == [1, -1, -1]

    def test_treat_missing(self, small_catalog):
        obs = encode_observation(["redness"], [], small_catalog, AbsenceMode.TREAT_MISSING)
        assert obs.values.tolist() == [1, 0, 0]

    def test_contradiction(self, small_catalog):
        with pytest.raises(DataError, match="both present and absent"):
            encode_observation(["redness"], ["redness"], small_catalog)

    def test_unknown_symptom(self, small_catalog):
        with pytest.raises(DataError, match="unknown symptom"):
            encode_observation(["wat"], [], small_catalog)

    def test_bad_value_rejected(self):
        with pytest.raises(DataError, match="outside"):
            SymptomObservation(np.array([2, 1], dtype=np.int8))

    def test_resolved_fills_missing(self, small_catalog):
        obs = encode_observation(["redness"], [], small_catalog, AbsenceMode.TREAT_MISSING)
        assert obs.resolved().tolist() == [1.0, -1.0, -1.0]

    @given(st.permutations(["redness", "itching"]))
    def test_order_insensitive(self, names):
        catalog = Catalog(symptoms=("redness", "itching", "swelling"), diseases=("a",))
        obs = encode_observation(names, ["swelling"], catalog)
        assert obs.values.tolist() == [1, 1, -1]


class TestVignettes:
    def test_round_trip_both_modes(self, small_catalog, tmp_path):
        for mode in AbsenceMode:
            vignettes = [
                Vignette(encode_observation(["redness"], ["itching"], small_catalog, mode), 2),
                Vignette(encode_observation(["swelling", "itching"], [], small_catalog, mode), 0),
            ]
            path = tmp_path / f"{mode.value}.jsonl"
            save_vignettes(vignettes, small_catalog, path)
            assert load_vignettes(path, small_catalog, mode) == vignettes

    def test_truth_vector_one_hot(self, small_catalog, tmp_path):
        path = tmp_path / "v.jsonl"
        path.write_text(json.dumps({"present": ["redness"], "diagnosis": "beta"}) + "\n")
        (vignette,) = load_vignettes(path, small_catalog)
        truth = vignette.truth_vector(small_catalog.n)
        assert np.count_nonzero(truth) == 1
        assert truth[1] == 1.0

    def test_unknown_diagnosis(self, small_catalog, tmp_path):
        path = tmp_path / "v.jsonl"
        path.write_text(json.dumps({"present": ["redness"], "diagnosis": "nope"}) + "\n")
        with pytest.raises(DataError, match="unknown disease"):
            load_vignettes(path, small_catalog)

    def test_empty_report_rejected(self, small_catalog, tmp_path):
        path = tmp_path / "v.jsonl"
        path.write_text(json.dumps({"present": [], "diagnosis": "beta"}) + "\n")
        with pytest.raises(DataError, match="no symptoms"):
            load_vignettes(path, small_catalog, AbsenceMode.TREAT_MISSING)


class TestNoise:
    def test_zero_db_identity(self):
        noise = snr_to_noise_precision(0.0, signal_energy=5.0, m=5)
        assert noise.noise_precision == pytest.approx(1.0)

    def test_ten_db(self):
        noise = snr_to_noise_precision(10.0, signal_energy=4.0, m=4)
        assert noise.noise_precision == pytest.approx(10.0)

    def test_realized_snr_within_half_db(self, rng):
        # Monte-Carlo check: realized sample SNR over many draws hits the target
        catalog, matrix = load_demo()
        target_db = 25.0
        energies = matrix.column_energies()
        draws = 10_000
        cols = rng.integers(matrix.n, size=draws)
        signal_energy = float(energies[cols].mean())
        noise = snr_to_noise_precision(target_db, signal_energy, matrix.m)
        w = rng.normal(scale=noise.noise_variance**0.5, size=(draws, matrix.m))
        realized = 10.0 * np.log10(energies[cols].sum() / (w**2).sum())
        assert abs(realized - target_db) < 0.5

    def test_non_positive_energy(self):
        with pytest.raises(DataError, match="signal energy"):
            snr_to_noise_precision(25.0, 0.0, 3)

    def test_invalid_precision(self):
        with pytest.raises(DataError, match="positive"):
            NoiseModel(-1.0)

    def test_default_signal_energy(self, small_matrix):
        assert default_signal_energy(small_matrix) == pytest.approx(
            np.mean(small_matrix.entries.sum(axis=0))
        )
