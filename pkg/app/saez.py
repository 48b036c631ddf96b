"""Adaptive Saez income tax.

Marginal rates per bracket follow tau = (1 - G) / (1 - G + alpha * e), with the
hazard alpha and the welfare weight G estimated from buffered incomes and the
elasticity e regressed from flat-tax regimes.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from baselines import BracketSchedule, FlatTaxPolicy, schedule_to_action
from economy import EconConfig, EconomyState, GovAction
from errors import ConfigError, ContractError
from rollout import FollowerGroups, run_episode

logger = logging.getLogger('smfg-lab.saez')

ELASTICITY_PRIOR = 1.0
ELASTICITY_BOUNDS = (0.1, 10.0)
MAX_RATE = 0.95
DEFAULT_EDGE_MULTIPLIERS = (0.0, 0.5, 1.0, 2.0, 4.0)


@dataclass
class SaezState:
    """Income/rate observations plus the current fit."""

    capacity: int = 10_000
    eta: float = 1.0
    elasticity: float = ELASTICITY_PRIOR
    observations: Deque[Tuple[float, float]] = field(default_factory=deque)
    schedule: Optional[BracketSchedule] = None
    mean_income: float = 0.0

    def __post_init__(self):
        if self.capacity < 1:
            raise ConfigError(f"Saez buffer capacity must be >= 1, got {self.capacity}")
        self.observations = deque(self.observations, maxlen=self.capacity)

    def record(self, incomes, rate: float):
        for z in np.ravel(incomes):
            self.observations.append((float(z), float(rate)))

    def incomes(self) -> np.ndarray:
        return np.array([z for z, _ in self.observations], dtype=float)


def saez_marginal_rate(G: float, alpha: float, e: float) -> float:
    """tau = (1 - G) / (1 - G + alpha * e); zero when the denominator vanishes."""
    numerator = 1.0 - G
    if math.isinf(alpha):
        return 0.0
    denominator = numerator + alpha * e
    if denominator <= 0:
        return 0.0
    return numerator / denominator


def saez_fit_elasticity(state: SaezState) -> float:
    """Slope of log mean income on log(1 - tau) across flat-tax regimes.

    Falls back to the prior when fewer than two usable regimes exist; the
    estimate is clamped to [0.1, 10]. Stores the result on the state.
    """
    if not state.observations:
        state.elasticity = ELASTICITY_PRIOR
        return state.elasticity
    data = np.array(state.observations, dtype=float)
    rates = np.unique(data[:, 1])
    xs, ys = [], []
    for rate in rates:
        if rate >= 1.0:
            continue
        mean_income = data[data[:, 1] == rate, 0].mean()
        if mean_income > 0:
            xs.append(math.log1p(-rate))
            ys.append(math.log(mean_income))

    if len(xs) < 2:
        logger.debug('Elasticity fit has fewer than two tax regimes, using the prior')
        state.elasticity = ELASTICITY_PRIOR
        return state.elasticity

    slope = stats.linregress(xs, ys).slope
    if not np.isfinite(slope):
        state.elasticity = ELASTICITY_PRIOR
    else:
        state.elasticity = float(np.clip(slope, *ELASTICITY_BOUNDS))
    logger.info(f"Fitted taxable-income elasticity {state.elasticity:.4f} over {len(xs)} regimes")
    return state.elasticity


def pareto_weights(incomes: np.ndarray, eta: float) -> np.ndarray:
    """Welfare weights (mean / (mean + z)) ** eta, normalized to mean 1."""
    mean = incomes.mean()
    if mean <= 0:
        return np.ones_like(incomes)
    weights = (mean / (mean + incomes)) ** eta
    return weights / weights.mean()


def saez_rates(state: SaezState, incomes, edges) -> BracketSchedule:
    """Saez marginal rate per bracket from an income sample.

    Args:
        state: Holds the elasticity and welfare-weight decay
        incomes: Income sample (non-empty)
        edges: Ascending bracket lower edges, starting at 0

    Returns:
        BracketSchedule with rates clipped to [0, 0.95]; empty brackets are
        interpolated from their neighbours
    """
    z = np.asarray(incomes, dtype=float).ravel()
    if z.size == 0:
        raise ContractError('saez_rates needs at least one income')
    edges = np.asarray(edges, dtype=float)
    if edges.size == 0 or np.any(np.diff(edges) <= 0):
        raise ConfigError(f"Bracket edges must be ascending: {edges.tolist()}")

    n = z.size
    weights = pareto_weights(z, state.eta)
    rates = np.full(edges.size, np.nan)
    for b, low in enumerate(edges):
        high = edges[b + 1] if b + 1 < edges.size else np.inf
        inside = (z >= low) & (z < high)
        if not inside.any():
            continue
        z_b = z[inside].mean()
        above = z >= z_b
        tail = above.sum() / n
        G = weights[above].sum() / above.sum()
        if np.isfinite(high):
            density = inside.sum() / (n * (high - low))
            alpha = z_b * density / tail
        else:
            # Pareto tail: mean above the edge over its excess
            alpha = z_b / (z_b - low) if z_b > low else np.inf
        rates[b] = saez_marginal_rate(min(max(G, 0.0), 1.0), alpha, state.elasticity)

    known = ~np.isnan(rates)
    if not known.any():
        rates = np.zeros(edges.size)
    elif not known.all():
        index = np.arange(edges.size)
        rates = np.interp(index, index[known], rates[known])
    return BracketSchedule(tuple(edges), tuple(np.clip(rates, 0.0, MAX_RATE)))


def saez_gov_policy(obs, state: SaezState, spend_ratio: float = 0.0) -> GovAction:
    """HSV action fitted to the state's current schedule."""
    return schedule_to_action(state.schedule, state.mean_income, spend_ratio)


class SaezPolicy:
    """Records incomes each step and refits the bracket rates every refit_interval steps."""

    def __init__(self, state: SaezState, edge_multipliers: Sequence[float] = DEFAULT_EDGE_MULTIPLIERS,
                 spend_ratio: float = 0.0, refit_interval: int = 1):
        if refit_interval < 1:
            raise ConfigError(f"refit_interval must be >= 1, got {refit_interval}")
        self.state = state
        self.edge_multipliers = tuple(float(m) for m in edge_multipliers)
        self.spend_ratio = spend_ratio
        self.refit_interval = refit_interval
        self._steps = 0
        self._action = GovAction()

    def __call__(self, econ_state: EconomyState) -> GovAction:
        incomes = econ_state.last_income
        self.state.record(incomes, self._action.income_tax_rate)
        if self._steps % self.refit_interval == 0:
            window = self.state.incomes()
            mean_income = float(window.mean())
            if mean_income > 0:
                edges = [m * mean_income for m in self.edge_multipliers]
                self.state.schedule = saez_rates(self.state, window, edges)
                self.state.mean_income = mean_income
            self._action = saez_gov_policy(None, self.state, self.spend_ratio)
        self._steps += 1
        return self._action


def calibrate_elasticity(econ_config: EconConfig, followers: FollowerGroups, state: SaezState,
                         rates: Sequence[float] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5),
                         seeds: Sequence[int] = (0,)) -> float:
    """Fill the buffer with incomes under flat-tax regimes and fit the elasticity.

    The fit sees every regime even when the state's FIFO only keeps the latest
    observations.
    """
    logs = [
        (rate, run_episode(econ_config, seed, FlatTaxPolicy(rate), followers))
        for rate in rates for seed in seeds
    ]
    calibration = SaezState(capacity=max(1, sum(log.income.size for _, log in logs)), eta=state.eta)
    for rate, log in logs:
        for t in range(log.steps_survived):
            calibration.record(log.income[:, t], rate)
            state.record(log.income[:, t], rate)
    state.elasticity = saez_fit_elasticity(calibration)
    return state.elasticity
