"""Behavior-cloned household policies and the synthetic demonstration data."""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from checkpoint import load_checkpoint, save_checkpoint
from economy import (
    FOLLOWER_OBS_DIM,
    HOUSEHOLD_ACTION_HIGH,
    HOUSEHOLD_ACTION_LOW,
    EconConfig,
    GovAction,
    init_economy,
    observe_followers,
    step_economy,
)
from errors import ConfigError, ContractError
from network import AdamState, NetworkParams, NetworkSpec, adam_step, net_forward, net_gradients, net_init
from utils import build_dataclass

logger = logging.getLogger('smfg-lab.behavior_cloning')

LOSS_KINDS = ('mse', 'nll')
LOG_STD_BOUNDS = (-5.0, 2.0)
ACTION_DIM = 2


@dataclass(frozen=True)
class BehaviorParams:
    """Rule-of-thumb household: richer households consume a larger share and work less."""

    kappa0: float = 0.3
    kappa1: float = 0.4
    lambda0: float = 0.9
    lambda1: float = 0.5

    @classmethod
    def from_dict(cls, values: Optional[Dict]) -> 'BehaviorParams':
        return build_dataclass(cls, values, 'baselines.behavior')


def wealth_rank(obs: np.ndarray) -> np.ndarray:
    """Rank of own wealth (column 0) scaled to [0, 1]; ties broken by index."""
    n = obs.shape[0]
    if n == 1:
        return np.zeros(1)
    order = np.argsort(obs[:, 0], kind='stable')
    ranks = np.empty(n)
    ranks[order] = np.arange(n)
    return ranks / (n - 1)


class RuleOfThumbPolicy:
    def __init__(self, params: BehaviorParams):
        self.params = params

    def __call__(self, obs: np.ndarray, gov: GovAction) -> np.ndarray:
        p = self.params
        rank = wealth_rank(np.atleast_2d(obs))
        consume = np.clip(p.kappa0 + p.kappa1 * rank, 0.05, 0.95)
        labor = np.clip(p.lambda0 - p.lambda1 * rank, 0.1, 1.0)
        return np.column_stack([consume, labor])


@dataclass(frozen=True, eq=False)
class BCDataset:
    obs: np.ndarray
    acts: np.ndarray

    def __post_init__(self):
        if self.obs.ndim != 2 or self.acts.ndim != 2 or self.obs.shape[0] != self.acts.shape[0]:
            raise ContractError(f"Dataset rows disagree: obs {self.obs.shape}, actions {self.acts.shape}")

    @property
    def size(self) -> int:
        return int(self.obs.shape[0])

    def to_frame(self) -> pd.DataFrame:
        columns = {f"obs_{k}": self.obs[:, k] for k in range(self.obs.shape[1])}
        columns.update({f"act_{k}": self.acts[:, k] for k in range(self.acts.shape[1])})
        return pd.DataFrame(columns)

    def to_csv(self, path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format='%.17g', lineterminator='\n')

    @classmethod
    def from_csv(cls, path) -> 'BCDataset':
        frame = pd.read_csv(path, float_precision='round_trip')
        obs_cols = [c for c in frame.columns if c.startswith('obs_')]
        act_cols = [c for c in frame.columns if c.startswith('act_')]
        if not obs_cols or not act_cols:
            raise ContractError(f"{path} has no obs_*/act_* columns")
        return cls(frame[obs_cols].to_numpy(dtype=float), frame[act_cols].to_numpy(dtype=float))


def synth_bc_dataset(econ_config: EconConfig, behavior_params: BehaviorParams, size: int,
                     seed: int) -> BCDataset:
    """Roll the rule-of-thumb households under a free market and record (obs, action) rows."""
    if size < 1:
        raise ContractError(f"Dataset size must be >= 1, got {size}")
    rng = np.random.default_rng(seed)
    policy = RuleOfThumbPolicy(behavior_params)
    gov = GovAction()
    obs_rows, act_rows = [], []
    collected = 0
    state = init_economy(econ_config, int(rng.integers(2 ** 31)))
    while collected < size:
        obs = observe_followers(state)
        actions = policy(obs, gov)
        obs_rows.append(obs)
        act_rows.append(actions)
        collected += obs.shape[0]
        state, report = step_economy(state, gov, actions)
        if report.done:
            state = init_economy(econ_config, int(rng.integers(2 ** 31)))
    return BCDataset(np.vstack(obs_rows)[:size], np.vstack(act_rows)[:size])


def _loss_and_upstream(outputs: np.ndarray, targets: np.ndarray, loss_kind: str) -> Tuple[float, np.ndarray]:
    count = targets.size
    if loss_kind == 'mse':
        diff = outputs - targets
        return float(np.mean(diff ** 2)), 2.0 * diff / count

    mean = outputs[:, :ACTION_DIM]
    raw_log_std = outputs[:, ACTION_DIM:]
    log_std = np.clip(raw_log_std, *LOG_STD_BOUNDS)
    inv_var = np.exp(-2.0 * log_std)
    diff = targets - mean
    loss = np.mean(0.5 * diff ** 2 * inv_var + log_std + 0.5 * math.log(2.0 * math.pi))
    grad_mean = -diff * inv_var / count
    grad_log_std = (1.0 - diff ** 2 * inv_var) / count
    grad_log_std[(raw_log_std < LOG_STD_BOUNDS[0]) | (raw_log_std > LOG_STD_BOUNDS[1])] = 0.0
    return float(loss), np.hstack([grad_mean, grad_log_std])


def _check_spec(dataset: BCDataset, spec: NetworkSpec, loss_kind: str):
    if loss_kind not in LOSS_KINDS:
        raise ConfigError(f"loss_kind must be one of {LOSS_KINDS}, got {loss_kind}")
    expected_out = ACTION_DIM if loss_kind == 'mse' else 2 * ACTION_DIM
    if spec.input_size != dataset.obs.shape[1] or spec.output_size != expected_out:
        raise ContractError(
            f"Network {spec.layer_sizes} does not fit {dataset.obs.shape[1]} inputs / "
            f"{expected_out} outputs for {loss_kind}")
    if dataset.acts.shape[1] != ACTION_DIM:
        raise ContractError(f"Dataset actions must have {ACTION_DIM} columns")


def bc_loss(params: NetworkParams, dataset: BCDataset, loss_kind: str) -> float:
    return _loss_and_upstream(net_forward(params, dataset.obs), dataset.acts, loss_kind)[0]


@dataclass
class BCResult:
    params: NetworkParams
    final_loss: float
    history: List[float] = field(default_factory=list)
    loss_kind: str = 'mse'


def bc_train(dataset: BCDataset, spec: NetworkSpec, loss_kind: str = 'mse', epochs: int = 100,
             seed: int = 0, batch_size: int = 64, lr: float = 1e-3) -> BCResult:
    """Minibatch Adam on the cloning loss.

    Args:
        dataset: Demonstrations
        spec: Network shape; output size 2 for mse, 4 (mean, log-std) for nll
        loss_kind: 'mse' or 'nll'
        epochs: Passes over the shuffled dataset
        seed: Seeds initialization and shuffling
        batch_size: Minibatch rows
        lr: Adam learning rate

    Returns:
        BCResult with the per-epoch median minibatch loss as history
    """
    if dataset.size == 0:
        raise ContractError('bc_train needs a non-empty dataset')
    _check_spec(dataset, spec, loss_kind)
    rng = np.random.default_rng(seed)
    params = net_init(spec, seed)
    state = AdamState.zeros_like(params)
    history = []
    for epoch in range(epochs):
        order = rng.permutation(dataset.size)
        losses = []
        for start in range(0, dataset.size, batch_size):
            rows = order[start:start + batch_size]
            outputs = net_forward(params, dataset.obs[rows])
            loss, upstream = _loss_and_upstream(outputs, dataset.acts[rows], loss_kind)
            grads, _ = net_gradients(params, dataset.obs[rows], upstream)
            params, state = adam_step(params, grads, state, lr)
            losses.append(loss)
        history.append(float(np.median(losses)))
        if epoch % 50 == 0:
            logger.debug(f"BC epoch {epoch}: median loss {history[-1]:.6g}")
    final_loss = bc_loss(params, dataset, loss_kind)
    logger.info(f"Behavior cloning ({loss_kind}) finished after {epochs} epochs, loss {final_loss:.6g}")
    return BCResult(params, final_loss, history, loss_kind)


class BCFollowerPolicy:
    """Cloned household policy; ignores the leader action.

    ``gov`` is accepted only so the policy fits the follower-policy call signature.
    """

    def __init__(self, params: NetworkParams, loss_kind: str = 'mse'):
        self.params = params
        self.loss_kind = loss_kind

    def __call__(self, obs: np.ndarray, gov: GovAction) -> np.ndarray:
        outputs = net_forward(self.params, np.atleast_2d(obs))
        return np.clip(outputs[:, :ACTION_DIM], HOUSEHOLD_ACTION_LOW, HOUSEHOLD_ACTION_HIGH)


def bc_network_spec(hidden_sizes=(64, 64), loss_kind: str = 'mse', hidden_activation: str = 'tanh') -> NetworkSpec:
    out = ACTION_DIM if loss_kind == 'mse' else 2 * ACTION_DIM
    return NetworkSpec((FOLLOWER_OBS_DIM,) + tuple(hidden_sizes) + (out,), hidden_activation, 'identity')


def save_bc_policy(file_path, result: BCResult, seed: Optional[int] = None,
                   config_digest: Optional[str] = None, extras: Optional[Dict] = None):
    merged = {'loss_kind': result.loss_kind, 'final_loss': float(result.final_loss)}
    merged.update(extras or {})
    return save_checkpoint(file_path, kind='bc-policy', networks={'bc_policy': result.params},
                           seed=seed, config_digest=config_digest, extras=merged)


def load_bc_policy(file_path) -> Tuple[BCFollowerPolicy, Dict[str, str]]:
    """Load a cloned policy and the header extras (loss kind, Saez elasticity, ...)."""
    loaded = load_checkpoint(file_path, kind='bc-policy')
    if 'bc_policy' not in loaded.networks:
        raise ContractError(f"{file_path} has no bc_policy network")
    extras = loaded.extras
    return BCFollowerPolicy(loaded.networks['bc_policy'], extras.get('loss_kind', 'mse')), extras
