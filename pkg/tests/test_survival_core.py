import numpy as np
import pytest

from tduno.datagen import GRIDS
from tduno.survival_core import (Cohort, Subject, SurvivalMatrix, TimeGrid,
                                 apply_administrative_censoring, discretize, validate)

D1 = GRIDS["D1"]


def test_d1_has_eleven_periods():
    assert D1.period_count == 11
    assert D1.horizon_time == 70


@pytest.mark.parametrize("t,k", [(0, 1), (4.99, 1), (5, 2), (69.9, 10), (70, 11), (500, 11),
                                 (np.inf, 11)])
def test_period_lookup(t, k):
    assert D1.period(t) == k


def test_period_rejects_negative_time():
    with pytest.raises(ValueError):
        D1.period(-1.0)


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid([1.0, 2.0])
    with pytest.raises(ValueError):
        TimeGrid([0.0, 2.0, 2.0])
    assert TimeGrid.from_points([0, 5, np.inf]).period_count == 2


def test_period_end():
    assert D1.period_end(1) == 5
    assert D1.period_end(10) == 70
    assert D1.period_end(11) == np.inf


@pytest.mark.parametrize("T,D,X,event", [(80.0, np.inf, 70.0, False), (10.0, np.inf, 10.0, True),
                                         (70.0, 70.0, 70.0, False), (5.0, 3.0, 3.0, False),
                                         (4.0, 4.0, 4.0, False)])
def test_observed_time_and_flag(T, D, X, event):
    c = Cohort.from_times([T], [D], np.zeros((1, 1)), horizon=70.0)
    assert c.observed_time[0] == X
    assert bool(c.event[0]) is event


def test_administrative_censoring_clips():
    c = Cohort.from_times([10.0, 80.0], [np.inf, np.inf], np.zeros((2, 1)), horizon=np.inf)
    a = apply_administrative_censoring(c, 70.0)
    assert a.observed_time.tolist() == [10.0, 70.0]
    assert a.event.tolist() == [True, False]


def test_event_at_horizon_period_is_censored():
    c = Cohort.from_times([70.0, 12.0], [np.inf, np.inf], np.zeros((2, 1)), horizon=70.0)
    d = discretize(c, D1)
    assert d.observed_time.tolist() == [11.0, 3.0]
    assert d.event.tolist() == [False, True]
    assert d.horizon == 11


def test_same_period_censoring_wins():
    # event at 6, censoring at 8: both period 2, so the event is not observed
    c = Cohort.from_times([6.0], [8.0], np.zeros((1, 1)), horizon=70.0)
    d = discretize(c, D1)
    assert d.observed_time[0] == 2
    assert not d.event[0]


def test_discretize_twice_is_identity_and_other_grid_raises():
    c = discretize(Cohort.from_times([6.0], [np.inf], np.zeros((1, 1)), 70.0), D1)
    assert discretize(c, D1) is c
    with pytest.raises(ValueError):
        discretize(c, GRIDS["D2"])


def test_validate_clean_cohort():
    c = Cohort.from_times([1.0, 2.0, 3.0], [np.inf, 1.5, np.inf], np.zeros((3, 2)), 10.0)
    assert validate(c) == []


def test_validate_reports_wrong_observed_time():
    good = Cohort.from_times([1.0, 2.0, 3.0], [np.inf] * 3, np.zeros((3, 1)), 10.0)
    X = good.observed_time.copy()
    X[1] = 2.5
    bad = Cohort(good.ids, good.event_time, good.censor_time, X, good.event, good.covariates,
                 good.horizon)
    problems = validate(bad)
    assert len(problems) == 1


def test_validate_ragged_covariates():
    subs = [Subject("a", 1.0, np.inf, 1.0, True, (0.1, 0.2)),
            Subject("b", 2.0, np.inf, 2.0, True, (0.3,)),
            Subject("c", 3.0, np.inf, 3.0, True, (0.5,))]
    c = Cohort.from_subjects(subs, horizon=10.0)
    assert len(validate(c)) == 2


def test_from_observed_marks_partial_knowledge():
    c = Cohort.from_observed([1.0, 2.0], [True, False], np.zeros((2, 1)), 5.0)
    assert not c.full_knowledge
    assert c.censoring_rate() == 0.5


def test_cohort_arrays_are_read_only():
    c = Cohort.from_times([1.0], [np.inf], np.zeros((1, 1)), 5.0)
    with pytest.raises(ValueError):
        c.observed_time[0] = 3.0


def test_survival_matrix_left_step():
    m = SurvivalMatrix([1.0, 2.0, 3.0], [[0.9, 0.5, 0.2], [1.0, 1.0, 0.7]])
    np.testing.assert_array_equal(m.at([0.5, 1.0, 2.5, 9.0]),
                                  [[1.0, 0.9, 0.5, 0.2], [1.0, 1.0, 1.0, 0.7]])


@pytest.mark.parametrize("values", [[[0.5, 0.7]], [[1.2, 0.5]], [[-0.1, -0.2]]])
def test_survival_matrix_rejects_bad_rows(values):
    with pytest.raises(ValueError):
        SurvivalMatrix([1.0, 2.0], values)
