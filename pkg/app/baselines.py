"""Fixed government policies: free market, flat tax, random, US-federal brackets."""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import yaml

from economy import GOV_ACTION_HIGH, GOV_ACTION_LOW, EconomyState, GovAction
from errors import ConfigError, ContractError

logger = logging.getLogger('smfg-lab.baselines')

US_FEDERAL_DATA = Path(__file__).resolve().parent.parent / 'config' / 'us_federal_2022.yml'

# z / mean income grid the HSV fit is evaluated on
HSV_FIT_GRID = np.geomspace(0.1, 10.0, 41)


@dataclass(frozen=True)
class BracketSchedule:
    """Marginal-rate schedule: rates[b] applies between edges[b] and edges[b+1]."""

    edges: Tuple[float, ...]
    rates: Tuple[float, ...]

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, 'edges', edges)
        object.__setattr__(self, 'rates', rates)
        if not edges or len(edges) != len(rates):
            raise ConfigError(f"Bracket schedule needs one rate per edge, got {len(edges)} edges and {len(rates)} rates")
        if edges[0] != 0.0:
            raise ConfigError(f"First bracket edge must be 0, got {edges[0]}")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ConfigError(f"Bracket edges must be strictly increasing: {edges}")
        if any(not 0.0 <= r < 1.0 for r in rates):
            raise ConfigError(f"Bracket rates must lie in [0, 1): {rates}")

    @property
    def max_rate(self) -> float:
        return max(self.rates)

    def scaled(self, factor: float) -> 'BracketSchedule':
        """Same rates with every edge multiplied by factor."""
        if factor <= 0:
            raise ConfigError(f"Edge scale factor must be > 0, got {factor}")
        return BracketSchedule(tuple(e * factor for e in self.edges), self.rates)


def bracket_tax_array(incomes, schedule: BracketSchedule) -> np.ndarray:
    incomes = np.asarray(incomes, dtype=float)
    if np.any(incomes < 0):
        raise ContractError('Bracket tax needs non-negative incomes')
    lower = np.asarray(schedule.edges)
    upper = np.append(lower[1:], np.inf)
    overlap = np.clip(incomes[..., None] - lower, 0.0, upper - lower)
    return overlap @ np.asarray(schedule.rates)


def bracket_tax(income: float, schedule: BracketSchedule) -> float:
    """Sum over brackets of rate times the part of income inside the bracket."""
    return float(bracket_tax_array(np.array([income]), schedule)[0])


def fit_hsv(schedule: BracketSchedule, mean_income: float) -> Tuple[float, float]:
    """Least-squares HSV (rate, progressivity) matching a bracket schedule.

    HSV average rates satisfy log(1 - T(z)/z) = log(1 - rate) - progressivity * log(z / mean),
    so a straight-line fit over a geometric income grid recovers both.

    Returns:
        (rate, progressivity) clipped into the GovAction ranges
    """
    if mean_income <= 0:
        raise ContractError(f"mean_income must be > 0, got {mean_income}")
    z = HSV_FIT_GRID * mean_income
    average = bracket_tax_array(z, schedule) / z
    y = np.log1p(-average)
    x = np.log(HSV_FIT_GRID)
    design = np.column_stack([np.ones_like(x), x])
    (intercept, slope), *_ = np.linalg.lstsq(design, y, rcond=None)
    rate = float(np.clip(-np.expm1(intercept), GOV_ACTION_LOW[0], GOV_ACTION_HIGH[0]))
    progressivity = float(np.clip(-slope, GOV_ACTION_LOW[1], GOV_ACTION_HIGH[1]))
    return rate, progressivity


def free_market_policy(obs=None) -> GovAction:
    """No taxes, no spending, whatever the observation."""
    return GovAction()


def schedule_to_action(schedule: Optional[BracketSchedule], mean_income: float,
                       spend_ratio: float = 0.0) -> GovAction:
    """Income-tax GovAction from a bracket schedule; a zero schedule is the free market."""
    if schedule is None or schedule.max_rate == 0.0 or mean_income <= 0:
        return free_market_policy()
    rate, progressivity = fit_hsv(schedule, mean_income)
    return GovAction(income_tax_rate=rate, income_progressivity=progressivity, spend_ratio=spend_ratio)


class FreeMarketPolicy:
    def __call__(self, state: EconomyState) -> GovAction:
        return free_market_policy()


class FlatTaxPolicy:
    """Flat income tax at a fixed rate."""

    def __init__(self, rate: float, spend_ratio: float = 0.0):
        self.action = GovAction(income_tax_rate=rate, spend_ratio=spend_ratio).validate()

    def __call__(self, state: EconomyState) -> GovAction:
        return self.action


class RandomLeaderPolicy:
    """Uniformly random GovAction every step, seeded."""

    def __init__(self, seed: int):
        self.rng = np.random.default_rng(seed)

    def __call__(self, state: EconomyState) -> GovAction:
        return GovAction.from_array(self.rng.uniform(GOV_ACTION_LOW, GOV_ACTION_HIGH))


@dataclass(frozen=True)
class UsFederalData:
    schedule: BracketSchedule
    reference_mean_income: float
    year: Optional[int] = None
    source: str = ''


def load_us_federal(path) -> UsFederalData:
    """Load the bracket data file (edges in dollars, rates, reference mean income)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Bracket data file not found: {path}")
    with open(path, 'r') as f:
        data = yaml.safe_load(f) or {}
    try:
        schedule = BracketSchedule(tuple(data['edges']), tuple(data['rates']))
        reference = float(data['reference_mean_income'])
    except KeyError as e:
        raise ConfigError(f"{path.name} is missing {e}")
    if reference <= 0:
        raise ConfigError(f"reference_mean_income must be > 0 in {path.name}")
    return UsFederalData(schedule, reference, data.get('year'), data.get('source', ''))


class UsFederalPolicy:
    """Bracket schedule rescaled each step to the simulated mean income."""

    def __init__(self, data: UsFederalData, spend_ratio: float = 0.0):
        self.data = data
        self.spend_ratio = spend_ratio

    def schedule_for(self, mean_income: float) -> BracketSchedule:
        return self.data.schedule.scaled(mean_income / self.data.reference_mean_income)

    def __call__(self, state: EconomyState) -> GovAction:
        mean_income = float(state.last_income.mean())
        if mean_income <= 0:
            return free_market_policy()
        return schedule_to_action(self.schedule_for(mean_income), mean_income, self.spend_ratio)
