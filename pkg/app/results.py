"""Metric rows and the CSV tables the runner emits."""

import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from errors import ContractError
from rollout import EpisodeLog

logger = logging.getLogger('smfg-lab.results')

METRICS_COLUMNS = (
    'run_id', 'seed', 'epoch', 'steps_survived', 'per_capita_gdp', 'social_welfare',
    'income_gini', 'wealth_gini', 'mean_wealth', 'mean_income', 'mean_consumption',
    'leader_payoff', 'exploitability',
)
TRACE_COLUMNS = (
    'run_id', 'episode', 'step', 'shock', 'gdp', 'per_capita_gdp', 'wealth_gini', 'income_gini',
    'mean_wealth', 'end_mean_wealth', 'mean_income', 'mean_consumption', 'social_welfare', 'tax_revenue',
    'gov_debt',
)
RECOVERY_COLUMNS = (
    'run_id', 'episode', 'shock_step', 'shock_factor', 'pre_shock_mean_wealth', 'recovery_steps',
)
GROUP_COLUMNS = (
    'run_id', 'mix_ratio', 'n_smfg', 'n_bc', 'smfg_utility', 'bc_utility', 'smfg_wealth',
    'bc_wealth', 'smfg_income', 'bc_income', 'smfg_mean_consumption', 'bc_mean_consumption',
    'smfg_mean_labor', 'bc_mean_labor', 'per_capita_gdp',
)
TRADEOFF_COLUMNS = ('algo', 'seed', 'alpha', 'per_capita_gdp', 'wealth_gini', 'score')
SUMMARY_COLUMNS = ('algo',) + METRICS_COLUMNS

_MEAN_SKIP = ('run_id', 'seed', 'epoch')


@dataclass(frozen=True)
class MetricsRow:
    run_id: str
    seed: int
    epoch: object
    steps_survived: float
    per_capita_gdp: float
    social_welfare: float
    income_gini: float
    wealth_gini: float
    mean_wealth: float
    mean_income: float
    mean_consumption: float
    leader_payoff: float
    exploitability: float = math.nan

    def to_dict(self) -> Dict:
        return asdict(self)


def _trace_mean(log: EpisodeLog, key: str) -> float:
    return float(np.mean([row[key] for row in log.trace]))


def episode_metrics(run_id: str, seed: int, epoch, log: EpisodeLog, gamma: float,
                    exploitability: Optional[float] = None) -> MetricsRow:
    """Summarize one episode: per-step indicators averaged over the steps survived."""
    if not log.trace:
        raise ContractError('Episode has no steps to summarize')
    return MetricsRow(
        run_id=run_id,
        seed=seed,
        epoch=epoch,
        steps_survived=log.steps_survived,
        per_capita_gdp=_trace_mean(log, 'per_capita_gdp'),
        social_welfare=log.social_welfare(),
        income_gini=_trace_mean(log, 'income_gini'),
        wealth_gini=_trace_mean(log, 'wealth_gini'),
        mean_wealth=_trace_mean(log, 'mean_wealth'),
        mean_income=_trace_mean(log, 'mean_income'),
        mean_consumption=_trace_mean(log, 'mean_consumption'),
        leader_payoff=log.leader_payoff(gamma),
        exploitability=math.nan if exploitability is None else float(exploitability),
    )


def mean_row(rows: Sequence[MetricsRow], run_id: str, seed: int) -> MetricsRow:
    """Column means of the episode rows, tagged with epoch 'mean'.

    Exploitability averages the rows where it was computed and stays NaN
    when none were.
    """
    if not rows:
        raise ContractError('mean_row needs at least one row')
    values = {}
    for column in METRICS_COLUMNS:
        if column in _MEAN_SKIP:
            continue
        column_values = np.array([getattr(r, column) for r in rows], dtype=float)
        finite = column_values[~np.isnan(column_values)]
        values[column] = float(finite.mean()) if finite.size else math.nan
    return MetricsRow(run_id=run_id, seed=seed, epoch='mean', **values)


def trace_rows(run_id: str, episode: int, log: EpisodeLog) -> List[Dict]:
    return [dict(run_id=run_id, episode=episode, **row) for row in log.trace]


def _as_dict(row) -> Dict:
    if isinstance(row, MetricsRow):
        return row.to_dict()
    return dict(row)


def to_frame(rows: Iterable, columns: Sequence[str] = METRICS_COLUMNS) -> pd.DataFrame:
    records = [_as_dict(r) for r in rows]
    for record in records:
        missing = set(columns) - set(record)
        if missing:
            raise ContractError(f"Row is missing columns {sorted(missing)}")
    return pd.DataFrame(records, columns=list(columns))


def emit_csv(rows: Iterable, path, columns: Sequence[str] = METRICS_COLUMNS) -> Path:
    """Write header + rows in the given column order with 17 significant digits.

    Zero rows produce a header-only file; NaN cells are left empty.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = to_frame(rows, columns)
    frame.to_csv(path, index=False, float_format='%.17g', lineterminator='\n')
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def append_csv(rows: Iterable, path, columns: Sequence[str] = METRICS_COLUMNS) -> Path:
    """Append rows, writing the header first when the file does not exist yet."""
    path = Path(path)
    if not path.exists():
        return emit_csv(rows, path, columns)
    frame = to_frame(rows, columns)
    frame.to_csv(path, mode='a', header=False, index=False, float_format='%.17g', lineterminator='\n')
    return path


def read_csv(path) -> pd.DataFrame:
    """Read an emitted table back with exact float round-trip."""
    return pd.read_csv(path, float_precision='round_trip')
