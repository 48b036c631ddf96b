"""N-household production economy with a tax-and-spend government.

The economy is the transition kernel and reward source for the leader
(government) and the followers (households). Everything here is deterministic
given the initial seed and the action script.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import ConfigError, ContractError, DomainError, EpisodeFinishedError
from utils import build_dataclass

logger = logging.getLogger('smfg-lab.economy')

LEADER_OBS_DIM = 8
FOLLOWER_OBS_DIM = 6

# Action boxes, one row per field in declaration order
GOV_ACTION_LOW = np.array([0.0, 0.0, 0.0, 0.0, 0.0])
GOV_ACTION_HIGH = np.array([0.8, 2.0, 0.1, 2.0, 1.0])
HOUSEHOLD_ACTION_LOW = np.array([0.01, 0.0])
HOUSEHOLD_ACTION_HIGH = np.array([0.99, 1.0])

TERMINATION_REASONS = ('horizon', 'inequality', 'subsistence')


@dataclass(frozen=True)
class EconConfig:
    """Economy parameters. Field defaults are the documented calibration."""

    n_households: int = 10
    horizon: int = 100
    wealth_mu: float = math.log(10.0)
    wealth_sigma: float = 0.5
    ability_mu: float = 0.0
    ability_sigma: float = 0.3
    alpha: float = 1.0 / 3.0
    delta: float = 0.05
    productivity: float = 1.0
    initial_labor: float = 0.5
    utility_lambda: float = 1.0
    utility_gamma: float = 1.0
    reward_scale: float = 1.0
    terminal_penalty: float = 1.0
    gini_max: float = 0.99
    subsistence_frac: float = 1e-4
    disposable_floor: float = 1e-6
    capital_floor: float = 1e-6

    @classmethod
    def from_dict(cls, values: Optional[Dict]) -> 'EconConfig':
        """Build from a config section, rejecting unknown keys."""
        return build_dataclass(cls, values, 'economy').validate()

    def validate(self):
        """Raise ConfigError when a parameter is outside its valid range."""
        checks = [
            (self.n_households >= 1, 'n_households must be >= 1'),
            (self.horizon >= 1, 'horizon must be >= 1'),
            (self.wealth_sigma >= 0, 'wealth_sigma must be >= 0'),
            (self.ability_sigma >= 0, 'ability_sigma must be >= 0'),
            (0 < self.alpha < 1, 'alpha must lie in (0, 1)'),
            (0 <= self.delta <= 1, 'delta must lie in [0, 1]'),
            (self.productivity > 0, 'productivity must be > 0'),
            (0 <= self.initial_labor <= 1, 'initial_labor must lie in [0, 1]'),
            (self.utility_lambda >= 0, 'utility_lambda must be >= 0'),
            (self.utility_gamma >= 0, 'utility_gamma must be >= 0'),
            (0 < self.gini_max <= 1, 'gini_max must lie in (0, 1]'),
            (self.subsistence_frac >= 0, 'subsistence_frac must be >= 0'),
            (self.disposable_floor > 0, 'disposable_floor must be > 0'),
            (self.capital_floor > 0, 'capital_floor must be > 0'),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(f"Invalid economy config: {message}")
        return self


@dataclass(frozen=True)
class UtilityParams:
    c_ref: float
    lam: float = 1.0
    gamma: float = 1.0


@dataclass(frozen=True)
class HouseholdState:
    wealth: float
    ability: float
    last_income: float


@dataclass(frozen=True)
class HouseholdAction:
    consume_frac: float
    labor: float

    def to_array(self) -> np.ndarray:
        return np.array([self.consume_frac, self.labor], dtype=float)

    @classmethod
    def from_array(cls, values) -> 'HouseholdAction':
        clipped = np.clip(np.asarray(values, dtype=float), HOUSEHOLD_ACTION_LOW, HOUSEHOLD_ACTION_HIGH)
        return cls(float(clipped[0]), float(clipped[1]))


@dataclass(frozen=True)
class GovAction:
    income_tax_rate: float = 0.0
    income_progressivity: float = 0.0
    wealth_tax_rate: float = 0.0
    wealth_progressivity: float = 0.0
    spend_ratio: float = 0.0

    def to_array(self) -> np.ndarray:
        return np.array([
            self.income_tax_rate,
            self.income_progressivity,
            self.wealth_tax_rate,
            self.wealth_progressivity,
            self.spend_ratio,
        ], dtype=float)

    @classmethod
    def from_array(cls, values) -> 'GovAction':
        """Build from a length-5 vector, clipping every field into its range."""
        clipped = np.clip(np.asarray(values, dtype=float), GOV_ACTION_LOW, GOV_ACTION_HIGH)
        return cls(*(float(v) for v in clipped))

    def validate(self):
        values = self.to_array()
        if np.any(values < GOV_ACTION_LOW) or np.any(values > GOV_ACTION_HIGH):
            raise ContractError(f"GovAction outside its ranges: {self}")
        return self


@dataclass(frozen=True, eq=False)
class EconomyState:
    """Full simulation state. Arrays are never mutated in place."""

    config: EconConfig
    wealth: np.ndarray
    ability: np.ndarray
    last_income: np.ndarray
    capital: float
    gov_debt: float
    productivity: float
    wage: float
    interest: float
    t: int
    gdp: float
    last_tax_revenue: float
    wealth_scale: float
    c_ref: float

    @property
    def n(self) -> int:
        return int(self.wealth.shape[0])

    @property
    def horizon(self) -> int:
        return self.config.horizon

    @property
    def households(self) -> List[HouseholdState]:
        return [
            HouseholdState(float(a), float(e), float(z))
            for a, e, z in zip(self.wealth, self.ability, self.last_income)
        ]

    def permuted(self, order: Sequence[int]) -> 'EconomyState':
        """Same economy with households reordered by ``order``."""
        order = np.asarray(order)
        return replace(
            self,
            wealth=self.wealth[order],
            ability=self.ability[order],
            last_income=self.last_income[order],
        )


@dataclass(frozen=True, eq=False)
class Accounting:
    output: float
    consumption: float
    spending: float
    investment: float
    tax_revenue: float
    transfer: float
    goods_residual: float
    income: np.ndarray
    taxes: np.ndarray
    disposable: np.ndarray
    household_consumption: np.ndarray
    interest: float

    def recomputed_residual(self) -> float:
        """Y - C - G - X from the record's own components."""
        return self.output - self.consumption - self.spending - self.investment


@dataclass(frozen=True, eq=False)
class StepReport:
    gov_reward: float
    household_rewards: np.ndarray
    done: bool
    reason: Optional[str]
    accounting: Accounting


@dataclass(frozen=True)
class Termination:
    done: bool
    reason: Optional[str] = None


def compute_production(K: float, L: float, Z: float, alpha: float) -> Tuple[float, float, float]:
    """Cobb-Douglas output and competitive factor prices.

    Returns:
        (Y, wage, interest_raw); all zero when there is no labor
    """
    if L <= 0:
        return 0.0, 0.0, 0.0
    Y = Z * K ** alpha * L ** (1.0 - alpha)
    wage = (1.0 - alpha) * Y / L
    interest_raw = alpha * Y / K
    return float(Y), float(wage), float(interest_raw)


def _hsv_tax(bases: np.ndarray, rate: float, progressivity: float, scale: float) -> np.ndarray:
    bases = np.asarray(bases, dtype=float)
    taxes = np.zeros_like(bases)
    positive = bases > 0
    if scale <= 0 or not np.any(positive):
        return taxes
    kept = (1.0 - rate) * scale * (bases[positive] / scale) ** (1.0 - progressivity)
    taxes[positive] = np.clip(bases[positive] - kept, 0.0, bases[positive])
    return taxes


def compute_tax(base: float, rate: float, progressivity: float, scale: float) -> float:
    """HSV tax T(z) = z - (1 - rate) * scale * (z / scale) ** (1 - progressivity).

    Clamped to [0, base]; zero for a zero base.
    """
    if base < 0:
        raise ContractError(f"Tax base must be >= 0, got {base}")
    if scale <= 0:
        raise ContractError(f"Tax scale must be > 0, got {scale}")
    return float(_hsv_tax(np.array([base]), rate, progressivity, scale)[0])


def household_utility_array(consumption: np.ndarray, labor: np.ndarray, params: UtilityParams) -> np.ndarray:
    inner = (np.log(consumption / params.c_ref)
             - params.lam * labor ** (1.0 + params.gamma) / (1.0 + params.gamma))
    # exp overflows below -709; the utility is already astronomically negative there
    utility = -np.expm1(-np.maximum(inner, -700.0))
    return np.minimum(utility, np.nextafter(1.0, 0.0))


def household_utility(consumption: float, labor: float, params: UtilityParams) -> float:
    """Bounded per-step utility, strictly below 1.

    u = 1 - exp(-[ln(c / c_ref) - lam * h^(1+gamma) / (1+gamma)])
    """
    if consumption <= 0:
        raise DomainError(f"Consumption must be > 0, got {consumption}")
    if not 0 <= labor <= 1:
        raise DomainError(f"Labor must lie in [0, 1], got {labor}")
    return float(household_utility_array(np.array([consumption]), np.array([labor]), params)[0])


def gini(values) -> float:
    """Gini coefficient sum_ij |x_i - x_j| / (2 n^2 mean).

    Uses the sorted-rank form so large samples stay O(n log n). All-zero input
    returns 0.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise ContractError('gini needs at least one value')
    if np.any(x < 0):
        raise ContractError('gini needs non-negative values')
    total = x.sum()
    if total <= 0:
        return 0.0
    n = x.size
    ranks = np.arange(1, n + 1, dtype=float)
    weighted = np.sum((2.0 * ranks - n - 1.0) * np.sort(x))
    return float(min(max(weighted / (n * total), 0.0), 1.0 - 1.0 / n))


def _initial_prices(config: EconConfig, wealth: np.ndarray, ability: np.ndarray):
    labor = config.initial_labor * ability.sum()
    Y, W, r_raw = compute_production(wealth.sum(), labor, config.productivity, config.alpha)
    r = r_raw - config.delta
    income = W * ability * config.initial_labor + max(r, 0.0) * wealth
    return Y, W, r, income


def init_economy(config: EconConfig, seed: int) -> EconomyState:
    """Draw a fresh economy: log-normal wealth and ability, no debt, t = 0.

    Args:
        config: Economy parameters
        seed: Seed for the initial draw

    Returns:
        Initial EconomyState
    """
    config.validate()
    rng = np.random.default_rng(seed)
    n = config.n_households
    wealth = rng.lognormal(mean=config.wealth_mu, sigma=config.wealth_sigma, size=n)
    ability = rng.lognormal(mean=config.ability_mu, sigma=config.ability_sigma, size=n)

    Y, W, r, income = _initial_prices(config, wealth, ability)
    state = EconomyState(
        config=config,
        wealth=wealth,
        ability=ability,
        last_income=income,
        capital=float(wealth.sum()),
        gov_debt=0.0,
        productivity=config.productivity,
        wage=W,
        interest=r,
        t=0,
        gdp=Y,
        last_tax_revenue=0.0,
        wealth_scale=float(wealth.mean()),
        c_ref=float(np.mean(wealth + income)),
    )
    logger.debug(f"Initialized economy: N={n}, K0={state.capital:.4f}, Y0={Y:.4f}, seed={seed}")
    return state


def with_households(state: EconomyState, wealth, ability=None) -> EconomyState:
    """Rebuild a t=0 state around engineered wealth/ability vectors.

    Prices, incomes and the standardization scales are recomputed so the state
    is self-consistent.
    """
    config = state.config
    wealth = np.asarray(wealth, dtype=float)
    ability = state.ability if ability is None else np.asarray(ability, dtype=float)
    if wealth.shape != ability.shape:
        raise ContractError('wealth and ability vectors must have the same length')
    config = replace(config, n_households=int(wealth.size))
    Y, W, r, income = _initial_prices(config, wealth, ability)
    return replace(
        state,
        config=config,
        wealth=wealth,
        ability=ability,
        last_income=income,
        capital=max(float(wealth.sum()), config.capital_floor),
        gov_debt=0.0,
        wage=W,
        interest=r,
        t=0,
        gdp=Y,
        last_tax_revenue=0.0,
        wealth_scale=float(wealth.mean()) if wealth.mean() > 0 else 1.0,
        c_ref=float(np.mean(wealth + income)) if np.mean(wealth + income) > 0 else 1.0,
    )


def _action_matrix(acts, n: int) -> np.ndarray:
    if isinstance(acts, np.ndarray):
        matrix = np.asarray(acts, dtype=float)
    else:
        matrix = np.array([a.to_array() for a in acts], dtype=float).reshape(-1, 2)
    if matrix.shape != (n, 2):
        raise ContractError(f"Expected {n} household actions, got shape {matrix.shape}")
    return matrix


def step_economy(state: EconomyState, gov: GovAction,
                 acts: Union[List[HouseholdAction], np.ndarray]) -> Tuple[EconomyState, StepReport]:
    """Advance the economy one step.

    Labor, capital and goods markets clear in sequence; government debt absorbs
    the fiscal balance and capital is set by the capital market.

    Args:
        state: Current state
        gov: Leader action
        acts: One HouseholdAction per household, or an (N, 2) array of
            [consume_frac, labor] rows

    Returns:
        (next state, step report)
    """
    config = state.config
    if state.t >= config.horizon:
        raise EpisodeFinishedError(f"Episode already finished at t={state.t}")
    matrix = _action_matrix(acts, state.n)
    consume_frac = matrix[:, 0]
    labor = matrix[:, 1]
    a = state.wealth
    e = state.ability

    # labor market and production
    L = float(np.sum(e * labor))
    Y, W, r_raw = compute_production(state.capital, L, state.productivity, config.alpha)
    r = r_raw - config.delta

    # household asset income floored at zero keeps income non-negative
    income = W * e * labor + max(r, 0.0) * a

    income_tax = _hsv_tax(income, gov.income_tax_rate, gov.income_progressivity, float(income.mean()))
    wealth_tax = _hsv_tax(a, gov.wealth_tax_rate, gov.wealth_progressivity, float(a.mean()))
    taxes = income_tax + wealth_tax
    revenue = float(taxes.sum())
    spending = gov.spend_ratio * revenue
    transfer = (1.0 - gov.spend_ratio) * revenue / state.n

    disposable = np.maximum(a + income - taxes + transfer, config.disposable_floor)
    consumption = consume_frac * disposable
    next_wealth = disposable - consumption

    # capital market closes the books; investment is whatever that implies
    A_next = float(next_wealth.sum())
    B_next = (1.0 + r) * state.gov_debt + spending - revenue
    K_next = max(config.capital_floor, A_next - B_next)
    investment = K_next - (1.0 - config.delta) * state.capital
    C = float(consumption.sum())
    residual = Y - C - spending - investment

    params = UtilityParams(c_ref=state.c_ref, lam=config.utility_lambda, gamma=config.utility_gamma)
    household_rewards = household_utility_array(consumption, labor, params)

    next_state = replace(
        state,
        wealth=next_wealth,
        last_income=income,
        capital=K_next,
        gov_debt=B_next,
        wage=W,
        interest=r,
        t=state.t + 1,
        gdp=Y,
        last_tax_revenue=revenue,
    )
    termination = check_termination(next_state)

    floor = config.disposable_floor
    gov_reward = config.reward_scale * (math.log(max(Y, floor)) - math.log(max(state.gdp, floor)))
    if termination.done and termination.reason != 'horizon':
        gov_reward -= config.terminal_penalty

    accounting = Accounting(
        output=Y,
        consumption=C,
        spending=spending,
        investment=investment,
        tax_revenue=revenue,
        transfer=transfer,
        goods_residual=residual,
        income=income,
        taxes=taxes,
        disposable=disposable,
        household_consumption=consumption,
        interest=r,
    )
    report = StepReport(
        gov_reward=float(gov_reward),
        household_rewards=household_rewards,
        done=termination.done,
        reason=termination.reason,
        accounting=accounting,
    )
    if termination.done and termination.reason != 'horizon':
        logger.info(f"Economy terminated early at t={next_state.t}: {termination.reason}")
    return next_state, report


def apply_shock(state: EconomyState, factor: float) -> EconomyState:
    """Multiply every household's wealth by ``factor``; nothing else changes."""
    if not 0 < factor <= 1:
        raise DomainError(f"Shock factor must lie in (0, 1], got {factor}")
    return replace(state, wealth=state.wealth * factor)


def observe_leader(state: EconomyState) -> np.ndarray:
    """Leader features, currency terms divided by the initial mean wealth."""
    scale = state.wealth_scale
    return np.array([
        state.t / state.horizon,
        state.wealth.mean() / scale,
        gini(state.wealth),
        state.last_income.mean() / scale,
        gini(state.last_income),
        state.last_tax_revenue / scale,
        state.gov_debt / scale,
        state.gdp / scale,
    ], dtype=float)


def observe_followers(state: EconomyState) -> np.ndarray:
    """(N, 6) matrix of follower features, one row per household."""
    scale = state.wealth_scale
    n = state.n
    obs = np.empty((n, FOLLOWER_OBS_DIM), dtype=float)
    obs[:, 0] = state.wealth / scale
    obs[:, 1] = state.ability
    obs[:, 2] = state.wealth.mean() / scale
    obs[:, 3] = state.wage / scale
    obs[:, 4] = state.interest
    obs[:, 5] = state.t / state.horizon
    return obs


def observe_follower(state: EconomyState, i: int) -> np.ndarray:
    """Features of household ``i``; the leader action is appended by the caller."""
    if not 0 <= i < state.n:
        raise ContractError(f"Household index {i} out of range for N={state.n}")
    return observe_followers(state)[i]


def check_termination(state: EconomyState) -> Termination:
    """Horizon reached, wealth Gini at or above gini_max, or capacity below subsistence."""
    config = state.config
    if state.t >= config.horizon:
        return Termination(True, 'horizon')
    if gini(np.maximum(state.wealth, 0.0)) >= config.gini_max:
        return Termination(True, 'inequality')
    capacity = float(np.mean(state.wealth + state.last_income))
    if capacity < config.subsistence_frac * state.wealth_scale:
        return Termination(True, 'subsistence')
    return Termination(False, None)
