import numpy as np
import pytest

from tduno import concordance as cc
from tduno.censoring import StepSurvival, clamp, reverse_km
from tduno.cli import oracle_matrix
from tduno.data_io import (DataError, read_cohort, read_config, read_grid, read_predictions,
                           read_results, read_step_function, read_summary, write_cohort,
                           write_predictions, write_results, write_step_function,
                           write_summary)
from tduno.datagen import GRIDS, SIM1, WeibullCensoring, generate_cohort
from tduno.oracle import OracleModel, degrade
from tduno.survival_core import SurvivalMatrix


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_read_small_cohort(tmp_path):
    f = _write(tmp_path / "c.csv", "id,time,event,z_1\na,1.5,1,0.2\nb,2,0,0.1\nc,3,1,-1\n")
    c = read_cohort(f)
    assert c.n == 3 and c.p == 1
    assert c.event.tolist() == [True, False, True]


@pytest.mark.parametrize("row,msg", [("b,2,2,0.1", "line 3"), ("b,-2,0,0.1", "line 3"),
                                     ("b,2,0", "line 3"), ("b,x,0,0.1", "line 3"),
                                     ("a,2,0,0.1", "duplicate")])
def test_read_cohort_errors(tmp_path, row, msg):
    f = _write(tmp_path / "c.csv", f"id,time,event,z_1\na,1.5,1,0.2\n{row}\n")
    with pytest.raises(DataError, match=msg):
        read_cohort(f)


def test_read_cohort_bad_header(tmp_path):
    with pytest.raises(DataError):
        read_cohort(_write(tmp_path / "c.csv", "time,id,event\n"))


def test_hf_shaped_file_with_d4(tmp_path):
    rng = np.random.default_rng(0)
    lines = ["id,time,event," + ",".join(f"z_{k}" for k in range(1, 12))]
    for i in range(299):
        z = ",".join(repr(float(x)) for x in rng.normal(size=11))
        lines.append(f"{i},{float(rng.uniform(4, 285))!r},{int(rng.random() < 0.32)},{z}")
    c = read_cohort(_write(tmp_path / "hf.csv", "\n".join(lines) + "\n"), grid=GRIDS["D4"])
    assert c.n == 299 and c.p == 11
    assert c.is_discrete and c.horizon == 15
    assert set(np.unique(c.observed_time)) <= set(range(1, 16))


def test_cohort_round_trip(tmp_path):
    c = generate_cohort(SIM1, 50, np.random.default_rng(1), WeibullCensoring(1.0, 20.0))
    write_cohort(c, tmp_path / "c.csv")
    back = read_cohort(tmp_path / "c.csv", horizon=c.horizon)
    np.testing.assert_array_equal(back.observed_time, c.observed_time)
    np.testing.assert_array_equal(back.event, c.event)
    np.testing.assert_array_equal(back.covariates, c.covariates)


def test_all_ones_matrix_is_valid(tmp_path):
    f = _write(tmp_path / "p.csv", "id,1,2\na,1,1\nb,1,1\n")
    m, clipped = read_predictions(f)
    assert m.shape == (2, 2) and clipped == 0


def test_increasing_row_rejected_or_clipped(tmp_path):
    f = _write(tmp_path / "p.csv", "id,1,2,3\na,0.9,0.8,0.7\nb,0.5,0.6,0.4\n")
    with pytest.raises(DataError, match="row b increases at column 2"):
        read_predictions(f)
    m, clipped = read_predictions(f, allow_nonmonotone=True)
    assert clipped == 1
    np.testing.assert_array_equal(m.values[1], [0.5, 0.5, 0.4])


def test_prediction_errors(tmp_path):
    with pytest.raises(DataError, match="outside"):
        read_predictions(_write(tmp_path / "a.csv", "id,1\na,1.2\n"))
    c = read_cohort(_write(tmp_path / "c.csv", "id,time,event\na,1,1\nb,2,0\n"))
    with pytest.raises(DataError, match="missing id b"):
        read_predictions(_write(tmp_path / "b.csv", "id,1\na,0.5\nc,0.4\n"), c)


def test_predictions_reordered_to_cohort(tmp_path):
    c = read_cohort(_write(tmp_path / "c.csv", "id,time,event\na,1,1\nb,2,0\n"))
    m, _ = read_predictions(_write(tmp_path / "p.csv", "id,1\nb,0.4\na,0.5\n"), c)
    assert list(m.ids) == ["a", "b"]
    assert m.values[:, 0].tolist() == [0.5, 0.4]


def test_oracle_export_round_trip(tmp_path):
    c = generate_cohort(SIM1, 400, np.random.default_rng(2), WeibullCensoring(1.0, 30.0))
    model = degrade(OracleModel(SIM1), 0.3, seed=7)
    write_cohort(c, tmp_path / "c.csv")
    write_predictions(oracle_matrix(model, c), tmp_path / "p.csv")
    fc = read_cohort(tmp_path / "c.csv", horizon=c.horizon)
    fm, _ = read_predictions(tmp_path / "p.csv", fc)
    g_direct, g_file = clamp(reverse_km(c)), clamp(reverse_km(fc))
    pairs = [(cc.antolini_ctd(c, model), cc.antolini_ctd(fc, fm)),
             (cc.td_uno(c, model, g_direct), cc.td_uno(fc, fm, g_file)),
             (cc.harrell_fixed_t(c, model, 3.0), cc.harrell_fixed_t(fc, fm, 3.0)),
             (cc.uno_fixed_t(c, model, 3.0, g_direct), cc.uno_fixed_t(fc, fm, 3.0, g_file))]
    for direct, from_file in pairs:
        assert from_file.value == pytest.approx(direct.value, rel=1e-12)


def test_results_round_trip(tmp_path):
    recs = [{"scenario": "s", "level": "45%", "replication": 0, "metric": "uno_t", "t": 3.0,
             "value": 0.1 + 0.2, "usable_pairs": 17, "undefined": False},
            {"scenario": "s", "level": "45%", "replication": 1, "metric": "td_uno", "t": None,
             "value": None, "usable_pairs": 0, "undefined": True}]
    write_results(recs, tmp_path / "r.csv")
    assert read_results(tmp_path / "r.csv") == recs


def test_empty_results_header_only(tmp_path):
    write_results([], tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().count("\n") == 1
    assert read_results(tmp_path / "r.csv") == []


def test_summary_round_trip(tmp_path):
    s = [{"scenario": "s", "level": "0%", "metric": "antolini", "t": None, "count": 3,
          "undefined": 0, "median": 0.7, "q1": 0.6, "q3": 0.8, "sd": 0.1, "reference": None}]
    write_summary(s, tmp_path / "s.csv")
    assert read_summary(tmp_path / "s.csv") == s


def test_probabilities_written_exactly(tmp_path):
    v = 0.123456789012345678
    write_predictions(SurvivalMatrix([1.0], [[v]], ["a"]), tmp_path / "p.csv")
    m, _ = read_predictions(tmp_path / "p.csv")
    assert m.values[0, 0] == v


def test_step_function_round_trip(tmp_path):
    g = StepSurvival(np.array([1.0, 2.5]), np.array([0.8, 0.3]))
    write_step_function(g, tmp_path / "g.csv")
    h = read_step_function(tmp_path / "g.csv")
    np.testing.assert_array_equal(h.jump_times, g.jump_times)
    np.testing.assert_array_equal(h.values, g.values)


def test_config_and_grid_readers(tmp_path):
    assert read_config(_write(tmp_path / "a.json", '{"n_test": 5}')) == {"n_test": 5}
    assert read_config(_write(tmp_path / "a.yaml", "n_test: 5\nseed: 2\n")) == {"n_test": 5,
                                                                              "seed": 2}
    with pytest.raises(DataError):
        read_config(_write(tmp_path / "b.yaml", "- 1\n- 2\n"))
    g = read_grid(_write(tmp_path / "g.txt", "0, 5, 10\n70, inf\n"))
    assert g.period_count == 4
