import math

import numpy as np
import pytest

from baselines import FreeMarketPolicy
from errors import ContractError
from results import (
    METRICS_COLUMNS,
    TRACE_COLUMNS,
    append_csv,
    emit_csv,
    episode_metrics,
    mean_row,
    read_csv,
    trace_rows,
)
from rollout import run_episode


def steady(obs, gov):
    return np.tile([0.5, 0.6], (len(obs), 1))


@pytest.fixture
def episode(tiny_econ):
    return run_episode(tiny_econ, 0, FreeMarketPolicy(), steady)


def test_episode_metrics_are_trace_means(episode):
    row = episode_metrics('run', 0, 3, episode, gamma=0.975)
    assert row.steps_survived == episode.steps_survived
    assert row.per_capita_gdp == pytest.approx(np.mean([r['per_capita_gdp'] for r in episode.trace]))
    assert row.wealth_gini == pytest.approx(np.mean([r['wealth_gini'] for r in episode.trace]))
    assert row.social_welfare == episode.social_welfare()
    assert row.leader_payoff == episode.leader_payoff(0.975)
    assert math.isnan(row.exploitability)
    assert episode_metrics('run', 0, 3, episode, 0.975, exploitability=0.5).exploitability == 0.5


def test_mean_row(episode, tiny_econ):
    other = run_episode(tiny_econ, 1, FreeMarketPolicy(), steady)
    rows = [
        episode_metrics('run', 0, 0, episode, 0.975, exploitability=0.2),
        episode_metrics('run', 0, 1, other, 0.975),
    ]
    summary = mean_row(rows, 'run', 0)
    assert summary.epoch == 'mean'
    assert summary.per_capita_gdp == pytest.approx((rows[0].per_capita_gdp + rows[1].per_capita_gdp) / 2)
    assert summary.exploitability == 0.2
    with pytest.raises(ContractError):
        mean_row([], 'run', 0)


def test_header_only_csv(tmp_path):
    path = emit_csv([], tmp_path / 'metrics.csv')
    assert path.read_text() == ','.join(METRICS_COLUMNS) + '\n'


def test_csv_round_trip_is_exact(tmp_path, episode):
    rows = [episode_metrics('run', 0, 0, episode, 0.975)]
    path = emit_csv(rows, tmp_path / 'metrics.csv')
    frame = read_csv(path)
    assert list(frame.columns) == list(METRICS_COLUMNS)
    assert frame['per_capita_gdp'][0] == rows[0].per_capita_gdp
    assert math.isnan(frame['exploitability'][0])
    assert '\r' not in path.read_text()


def test_append_csv_adds_rows(tmp_path, episode):
    path = tmp_path / 'metrics.csv'
    append_csv([episode_metrics('run', 0, 0, episode, 0.975)], path)
    append_csv([episode_metrics('run', 0, 1, episode, 0.975)], path)
    frame = read_csv(path)
    assert frame['epoch'].tolist() == [0, 1]


def test_trace_rows(tmp_path, episode):
    rows = trace_rows('run', 2, episode)
    assert len(rows) == episode.steps_survived
    path = emit_csv(rows, tmp_path / 'trace.csv', TRACE_COLUMNS)
    assert read_csv(path)['episode'].unique().tolist() == [2]


def test_missing_columns_rejected(tmp_path):
    with pytest.raises(ContractError):
        emit_csv([{'run_id': 'x'}], tmp_path / 'bad.csv')
