import pytest

from slsm.core import (Entry, TuningParams, params_from_env, round_half_up,
                       tombstone, validate)


def test_baseline_params_are_valid():
    params = TuningParams(r=50, run_size=800, epsilon=0.001, d=20, m=1.0,
                          mu=512)
    assert validate(params) is params
    assert TuningParams() == params  # defaults equal the baseline


def test_boundary_minimums_are_valid():
    validate(TuningParams(r=1, run_size=1, epsilon=0.5, d=1, m=1.0, mu=1))


@pytest.mark.parametrize("kwargs,message", [
    ({"epsilon": 0.0}, "epsilon out of range"),
    ({"epsilon": 1.0}, "epsilon out of range"),
    ({"r": 0}, "r out of range"),
    ({"run_size": 0}, "run_size out of range"),
    ({"d": 0}, "d out of range"),
    ({"m": 0.0}, "m out of range"),
    ({"m": 1.5}, "m out of range"),
    ({"mu": 0}, "mu out of range"),
    ({"r": 4, "m": 0.1}, "m\\*r rounds below 1"),
    ({"d": 4, "m": 0.1, "r": 50}, "m\\*d rounds below 1"),
])
def test_validate_names_first_violated_constraint(kwargs, message):
    with pytest.raises(ValueError, match=message):
        validate(TuningParams(**kwargs))


def test_flush_and_merge_widths_round_half_up():
    params = TuningParams(r=5, d=5, m=0.5)
    assert params.flush_runs == 3      # round(2.5) half-up
    assert params.merge_runs == 3
    assert round_half_up(0.4) == 0
    assert round_half_up(0.5) == 1


def test_level_capacity_growth():
    params = TuningParams(r=2, run_size=4, d=2, m=1.0)
    assert params.flush_entries == 8
    assert [params.level_capacity(k) for k in (1, 2, 3)] == [8, 16, 32]


def test_entry_ordering_is_total_on_keys():
    a, b = Entry(1, 10), Entry(2, 5)
    assert (a.key < b.key) and not (a.key == b.key) and not (a.key > b.key)


def test_tombstones_canonicalize_value():
    assert tombstone(7) == Entry(7, 0, True)
    assert tombstone(7) == tombstone(7)


def test_params_from_env_overrides():
    env = {"SLSM_R": "4", "SLSM_RN": "16", "SLSM_EPSILON": "0.01",
           "SLSM_D": "3", "SLSM_M": "0.5", "SLSM_MU": "8"}
    params = params_from_env(environ=env)
    assert params == TuningParams(r=4, run_size=16, epsilon=0.01, d=3, m=0.5,
                                  mu=8)
    assert params_from_env(environ={}) == TuningParams()


def test_params_from_env_rejects_garbage():
    with pytest.raises(ValueError, match="SLSM_R"):
        params_from_env(environ={"SLSM_R": "lots"})
    with pytest.raises(ValueError, match="epsilon out of range"):
        params_from_env(environ={"SLSM_EPSILON": "2.0"})
