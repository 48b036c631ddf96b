"""Leader and follower actor-critic networks and their SMFRL updates.

The follower actor and critic are shared by every household. Critics evaluate
one (leader, follower) interaction at a time; the population enters either as
an average over pairs (mean-field mode) or as a fixed-width concatenation of
wealth-sorted pairs (concat mode, the mean-field ablation).
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple, Union

import numpy as np

from checkpoint import load_checkpoint, save_checkpoint
from economy import (
    FOLLOWER_OBS_DIM,
    GOV_ACTION_HIGH,
    GOV_ACTION_LOW,
    HOUSEHOLD_ACTION_HIGH,
    HOUSEHOLD_ACTION_LOW,
    LEADER_OBS_DIM,
    GovAction,
    HouseholdAction,
)
from errors import ConfigError, ContractError
from mean_field import concat_pairs, concat_selection
from network import AdamState, NetworkParams, NetworkSpec, adam_step, net_forward, net_gradients, net_init
from replay_buffer import TransitionBatch
from utils import build_dataclass

logger = logging.getLogger('smfg-lab.agents')

LEADER_ACTION_DIM = 5
FOLLOWER_ACTION_DIM = 2
PAIR_DIM = FOLLOWER_OBS_DIM + FOLLOWER_ACTION_DIM
LEADER_HEAD_DIM = LEADER_OBS_DIM + LEADER_ACTION_DIM
FOLLOWER_ACTOR_INPUT = FOLLOWER_OBS_DIM + LEADER_ACTION_DIM

GOV_HALF_RANGE = (GOV_ACTION_HIGH - GOV_ACTION_LOW) / 2.0
HOUSEHOLD_HALF_RANGE = (HOUSEHOLD_ACTION_HIGH - HOUSEHOLD_ACTION_LOW) / 2.0

# Column slices inside critic input rows
_LEADER_ACTION_COLS = slice(LEADER_OBS_DIM, LEADER_HEAD_DIM)
_OWN_ACTION_COLS = slice(LEADER_HEAD_DIM + FOLLOWER_OBS_DIM, LEADER_HEAD_DIM + PAIR_DIM)
_ACTOR_LEADER_COLS = slice(FOLLOWER_OBS_DIM, FOLLOWER_ACTOR_INPUT)

NETWORK_NAMES = (
    'leader_actor', 'leader_actor_target',
    'leader_critic', 'leader_critic_target',
    'follower_actor', 'follower_actor_target',
    'follower_critic', 'follower_critic_target',
)
ONLINE_NAMES = ('leader_actor', 'leader_critic', 'follower_actor', 'follower_critic')


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.975
    epochs: int = 1000
    epoch_length: int = 300
    batch_size: int = 128
    update_cycles: int = 100
    inner_update_cycles: int = 2
    tau: float = 0.95
    critic_lr: float = 3e-4
    actor_lr: float = 3e-4
    lr_decay: float = 0.95
    lr_decay_every: int = 35
    adam_eps: float = 1e-5
    buffer_capacity: int = 1_000_000
    warmup_batches: int = 10
    hidden_sizes: Tuple[int, ...] = (128, 128)
    hidden_activation: str = 'tanh'
    noise_rate: float = 0.01
    epsilon_start: float = 0.1
    epsilon_end: float = 0.05
    epsilon_decay: float = 1e-5
    follower_samples: int = 8
    opponent_samples: int = 8
    m_concat: int = 8
    follower_store_limit: int = 0
    use_leader_follower_update: bool = True
    use_mean_field: bool = True

    @classmethod
    def from_dict(cls, values: Optional[Dict]) -> 'TrainConfig':
        return build_dataclass(cls, values, 'training').validate()

    def validate(self):
        counts = ('epoch_length', 'batch_size', 'update_cycles', 'inner_update_cycles',
                  'lr_decay_every', 'buffer_capacity', 'follower_samples', 'opponent_samples', 'm_concat')
        for name in counts:
            if getattr(self, name) < 1:
                raise ConfigError(f"training.{name} must be >= 1")
        if self.epochs < 0 or self.warmup_batches < 0 or self.follower_store_limit < 0:
            raise ConfigError('training.epochs, warmup_batches and follower_store_limit must be >= 0')
        if not 0 < self.gamma <= 1:
            raise ConfigError(f"training.gamma must lie in (0, 1], got {self.gamma}")
        if not 0 <= self.tau <= 1:
            raise ConfigError(f"training.tau must lie in [0, 1], got {self.tau}")
        if not self.hidden_sizes or any(h < 1 for h in self.hidden_sizes):
            raise ConfigError(f"training.hidden_sizes must be positive, got {self.hidden_sizes}")
        if self.critic_lr < 0 or self.actor_lr < 0 or self.noise_rate < 0:
            raise ConfigError('learning rates and noise_rate must be >= 0')
        return self


@dataclass(frozen=True)
class LossReport:
    critic_loss: float
    actor_objective: float


def critic_input_sizes(config: TrainConfig) -> Tuple[int, int]:
    """(leader critic input, follower critic input) for the configured mode."""
    if config.use_mean_field:
        return LEADER_HEAD_DIM + PAIR_DIM, LEADER_HEAD_DIM + 2 * PAIR_DIM
    pop = config.m_concat * PAIR_DIM
    return LEADER_HEAD_DIM + pop, LEADER_HEAD_DIM + PAIR_DIM + pop


def network_specs(config: TrainConfig) -> Dict[str, NetworkSpec]:
    hidden = tuple(config.hidden_sizes)
    act = config.hidden_activation
    leader_in, follower_in = critic_input_sizes(config)
    specs = {
        'leader_actor': NetworkSpec((LEADER_OBS_DIM,) + hidden + (LEADER_ACTION_DIM,), act, 'tanh'),
        'leader_critic': NetworkSpec((leader_in,) + hidden + (1,), act, 'identity'),
        'follower_actor': NetworkSpec((FOLLOWER_ACTOR_INPUT,) + hidden + (FOLLOWER_ACTION_DIM,), act, 'tanh'),
        'follower_critic': NetworkSpec((follower_in,) + hidden + (1,), act, 'identity'),
    }
    specs.update({f"{name}_target": specs[name] for name in ONLINE_NAMES})
    return specs


@dataclass(eq=False)
class AgentNets:
    leader_actor: NetworkParams
    leader_actor_target: NetworkParams
    leader_critic: NetworkParams
    leader_critic_target: NetworkParams
    follower_actor: NetworkParams
    follower_actor_target: NetworkParams
    follower_critic: NetworkParams
    follower_critic_target: NetworkParams
    optim: Dict[str, AdamState] = field(default_factory=dict)

    def copy(self) -> 'AgentNets':
        nets = {name: getattr(self, name).copy() for name in NETWORK_NAMES}
        return AgentNets(**nets, optim={k: v.copy() for k, v in self.optim.items()})

    def with_updates(self, **changes) -> 'AgentNets':
        """New AgentNets sharing unchanged networks; 'optim' entries merge."""
        optim = dict(self.optim)
        optim.update(changes.pop('optim', {}))
        return replace(self, optim=optim, **changes)

    def networks(self) -> Dict[str, NetworkParams]:
        return {name: getattr(self, name) for name in NETWORK_NAMES}

    def digest(self, side: str) -> str:
        """Combined digest of every leader or every follower network."""
        return '-'.join(getattr(self, n).digest()[:16] for n in NETWORK_NAMES if n.startswith(side))


def build_agent_nets(config: TrainConfig, seed: int) -> AgentNets:
    """Fresh online networks, targets copied from them, zeroed Adam states."""
    specs = network_specs(config)
    seeds = np.random.SeedSequence(seed).generate_state(len(ONLINE_NAMES))
    nets = {}
    optim = {}
    for name, net_seed in zip(ONLINE_NAMES, seeds):
        params = net_init(specs[name], int(net_seed))
        nets[name] = params
        nets[f"{name}_target"] = params.copy()
        optim[name] = AdamState.zeros_like(params, eps=config.adam_eps)
    return AgentNets(**nets, optim=optim)


def to_box(y: np.ndarray, low: np.ndarray, high: np.ndarray) -> np.ndarray:
    """Map tanh outputs in [-1, 1] affinely onto [low, high]."""
    return low + (np.asarray(y) + 1.0) * (high - low) / 2.0


def _explore(actions: np.ndarray, low: np.ndarray, high: np.ndarray, rng: np.random.Generator,
             epsilon: float, noise_rate: float) -> np.ndarray:
    noise = rng.normal(0.0, 1.0, size=actions.shape) * noise_rate * (high - low)
    noisy = np.clip(actions + noise, low, high)
    resample = rng.random(actions.shape[0]) < epsilon
    uniform = rng.uniform(low, high, size=actions.shape)
    noisy[resample] = uniform[resample]
    return noisy


def leader_actions(actor: NetworkParams, leader_obs: np.ndarray) -> np.ndarray:
    return to_box(net_forward(actor, leader_obs), GOV_ACTION_LOW, GOV_ACTION_HIGH)


def follower_actor_inputs(follower_obs: np.ndarray, leader_action: np.ndarray) -> np.ndarray:
    """[s_f, a_l] rows; the leader action broadcasts over the leading axes."""
    follower_obs = np.asarray(follower_obs, dtype=float)
    lead = np.broadcast_to(np.asarray(leader_action, dtype=float),
                           follower_obs.shape[:-1] + (LEADER_ACTION_DIM,))
    return np.concatenate([follower_obs, lead], axis=-1)


def follower_actions(actor: NetworkParams, follower_obs: np.ndarray, leader_action: np.ndarray) -> np.ndarray:
    """Box-valued follower actions for any leading shape of observations."""
    inputs = follower_actor_inputs(follower_obs, leader_action)
    flat = inputs.reshape(-1, FOLLOWER_ACTOR_INPUT)
    actions = to_box(net_forward(actor, flat), HOUSEHOLD_ACTION_LOW, HOUSEHOLD_ACTION_HIGH)
    return actions.reshape(inputs.shape[:-1] + (FOLLOWER_ACTION_DIM,))


def act_leader(nets: AgentNets, leader_obs, explore: bool = False, rng: Optional[np.random.Generator] = None,
               epsilon: float = 0.0, noise_rate: float = 0.01) -> GovAction:
    action = leader_actions(nets.leader_actor, np.asarray(leader_obs, dtype=float))
    if explore:
        action = _explore(action[None, :], GOV_ACTION_LOW, GOV_ACTION_HIGH, rng, epsilon, noise_rate)[0]
    return GovAction.from_array(action)


def act_followers(nets: AgentNets, follower_obs, leader_action: Union[GovAction, np.ndarray],
                  explore: bool = False, rng: Optional[np.random.Generator] = None,
                  epsilon: float = 0.0, noise_rate: float = 0.01,
                  actor: Optional[NetworkParams] = None) -> np.ndarray:
    """(k, 2) actions of the shared follower policy for k observation rows."""
    if isinstance(leader_action, GovAction):
        leader_action = leader_action.to_array()
    obs = np.atleast_2d(np.asarray(follower_obs, dtype=float))
    actions = follower_actions(actor or nets.follower_actor, obs, leader_action)
    if explore:
        actions = _explore(actions, HOUSEHOLD_ACTION_LOW, HOUSEHOLD_ACTION_HIGH, rng, epsilon, noise_rate)
    return np.clip(actions, HOUSEHOLD_ACTION_LOW, HOUSEHOLD_ACTION_HIGH)


def act_follower(nets: AgentNets, follower_obs, leader_action: Union[GovAction, np.ndarray],
                 explore: bool = False, rng: Optional[np.random.Generator] = None,
                 epsilon: float = 0.0, noise_rate: float = 0.01) -> HouseholdAction:
    actions = act_followers(nets, np.asarray(follower_obs)[None, :], leader_action,
                            explore, rng, epsilon, noise_rate)
    return HouseholdAction.from_array(actions[0])


# ---------------------------------------------------------------------------
# Critic input construction


def _leader_rows(config: TrainConfig, lobs, lact, fobs, facts):
    """Leader critic rows and the selection used in concat mode."""
    B, N = fobs.shape[:2]
    if config.use_mean_field:
        head = np.concatenate([lobs, lact], axis=1)
        rows = np.concatenate([np.repeat(head[:, None, :], N, axis=1), fobs, facts], axis=2)
        return rows.reshape(B * N, -1), None
    indices, mask = concat_selection(fobs, config.m_concat)
    rows = np.concatenate([lobs, lact, concat_pairs(fobs, facts, indices, mask)], axis=1)
    return rows, (indices, mask)


def _leader_q(critic: NetworkParams, config: TrainConfig, lobs, lact, fobs, facts):
    rows, selection = _leader_rows(config, lobs, lact, fobs, facts)
    values = net_forward(critic, rows)[:, 0]
    if config.use_mean_field:
        values = values.reshape(fobs.shape[0], fobs.shape[1]).mean(axis=1)
    return values, rows, selection


def _follower_rows(config: TrainConfig, lobs, lact, own_obs, own_act, fobs, facts, opponents):
    """Follower critic rows with shape (B, m, M, in) in mean-field mode, (B, m, in) otherwise.

    Args:
        lobs, lact: (B, dl), (B, al)
        own_obs, own_act: (B, m, df), (B, m, af) for the sampled followers
        fobs, facts: (B, N, df), (B, N, af) for the whole stored population
        opponents: (B, m, M) opponent indices, mean-field mode only
    """
    B, m = own_obs.shape[:2]
    head = np.concatenate([lobs, lact], axis=1)
    own = np.concatenate([np.repeat(head[:, None, :], m, axis=1), own_obs, own_act], axis=2)
    if config.use_mean_field:
        M = opponents.shape[2]
        batch_index = np.arange(B)[:, None, None]
        other = np.concatenate([fobs[batch_index, opponents], facts[batch_index, opponents]], axis=3)
        return np.concatenate([np.repeat(own[:, :, None, :], M, axis=2), other], axis=3)
    indices, mask = concat_selection(fobs, config.m_concat)
    pop = concat_pairs(fobs, facts, indices, mask)
    return np.concatenate([own, np.repeat(pop[:, None, :], m, axis=1)], axis=2)


def _critic_values(critic: NetworkParams, rows: np.ndarray) -> np.ndarray:
    """Critic values averaged over the opponent axis when rows are 4-D."""
    flat = rows.reshape(-1, rows.shape[-1])
    values = net_forward(critic, flat)[:, 0].reshape(rows.shape[:-1])
    return values.mean(axis=2) if rows.ndim == 4 else values


def _sample_followers(batch: TransitionBatch, config: TrainConfig, rng: np.random.Generator):
    B, N = batch.size, batch.n_followers
    own = rng.integers(0, N, size=(B, config.follower_samples))
    if N > 1:
        opponents = rng.integers(0, N - 1, size=(B, config.follower_samples, config.opponent_samples))
        opponents = opponents + (opponents >= own[:, :, None])
    else:
        opponents = np.zeros((B, config.follower_samples, config.opponent_samples), dtype=int)
    return own, opponents


def follower_targets(nets: AgentNets, batch: TransitionBatch, config: TrainConfig,
                     own: np.ndarray, opponents: np.ndarray) -> np.ndarray:
    """y = r_i + gamma * (1 - done) * Q_target(next leader/own/other pairs), shape (B, m)."""
    batch_index = np.arange(batch.size)[:, None]
    rewards = batch.follower_rewards[batch_index, own]
    next_leader_action = leader_actions(nets.leader_actor, batch.next_leader_obs)
    next_facts = follower_actions(nets.follower_actor_target, batch.next_follower_obs,
                                  next_leader_action[:, None, :])
    next_own_obs = batch.next_follower_obs[batch_index, own]
    rows = _follower_rows(config, batch.next_leader_obs, next_leader_action, next_own_obs,
                          next_facts[batch_index, own], batch.next_follower_obs, next_facts, opponents)
    bootstrap = _critic_values(nets.follower_critic_target, rows)
    return rewards + config.gamma * (1.0 - batch.done)[:, None] * bootstrap


def leader_targets(nets: AgentNets, batch: TransitionBatch, config: TrainConfig) -> np.ndarray:
    """y = r_l + gamma * (1 - done) * mean-field Q_target with regenerated next pairs."""
    next_leader_action = leader_actions(nets.leader_actor_target, batch.next_leader_obs)
    next_facts = follower_actions(nets.follower_actor, batch.next_follower_obs,
                                  next_leader_action[:, None, :])
    bootstrap, _, _ = _leader_q(nets.leader_critic_target, config, batch.next_leader_obs,
                                next_leader_action, batch.next_follower_obs, next_facts)
    return batch.leader_reward + config.gamma * (1.0 - batch.done) * bootstrap


def update_followers(nets: AgentNets, batch: TransitionBatch, config: TrainConfig,
                     rng: np.random.Generator, critic_lr: Optional[float] = None,
                     actor_lr: Optional[float] = None) -> Tuple[AgentNets, LossReport]:
    """One critic descent step and one actor ascent step for the shared follower nets.

    Leader networks are read, never written.

    Returns:
        (updated nets, loss report)
    """
    if batch is None or batch.size == 0:
        raise ContractError('update_followers needs a non-empty batch')
    critic_lr = config.critic_lr if critic_lr is None else critic_lr
    actor_lr = config.actor_lr if actor_lr is None else actor_lr

    own, opponents = _sample_followers(batch, config, rng)
    B, m = own.shape
    batch_index = np.arange(B)[:, None]
    own_obs = batch.follower_obs[batch_index, own]
    targets = follower_targets(nets, batch, config, own, opponents)

    # critic regression on stored actions
    rows = _follower_rows(config, batch.leader_obs, batch.leader_action, own_obs,
                          batch.follower_actions[batch_index, own], batch.follower_obs,
                          batch.follower_actions, opponents)
    q = _critic_values(nets.follower_critic, rows)
    error = q - targets
    critic_loss = float(np.mean(error ** 2))
    upstream = 2.0 * error / error.size
    if rows.ndim == 4:
        upstream = np.repeat(upstream[:, :, None], rows.shape[2], axis=2) / rows.shape[2]
    flat_rows = rows.reshape(-1, rows.shape[-1])
    grads, _ = net_gradients(nets.follower_critic, flat_rows, upstream.reshape(-1, 1))
    critic, critic_state = adam_step(nets.follower_critic, grads, nets.optim['follower_critic'], critic_lr)

    # actor ascent through the own-action slot of the updated critic
    actor_inputs = follower_actor_inputs(own_obs, batch.leader_action[:, None, :]).reshape(-1, FOLLOWER_ACTOR_INPUT)
    own_act = to_box(net_forward(nets.follower_actor, actor_inputs), HOUSEHOLD_ACTION_LOW,
                     HOUSEHOLD_ACTION_HIGH).reshape(B, m, FOLLOWER_ACTION_DIM)
    rows = _follower_rows(config, batch.leader_obs, batch.leader_action, own_obs, own_act,
                          batch.follower_obs, batch.follower_actions, opponents)
    actor_objective = float(np.mean(_critic_values(critic, rows)))
    flat_rows = rows.reshape(-1, rows.shape[-1])
    weight = np.full((flat_rows.shape[0], 1), 1.0 / flat_rows.shape[0])
    _, input_grad = net_gradients(critic, flat_rows, weight)
    action_grad = input_grad[:, _OWN_ACTION_COLS].reshape(rows.shape[:-1] + (FOLLOWER_ACTION_DIM,))
    if rows.ndim == 4:
        action_grad = action_grad.sum(axis=2)
    upstream = (action_grad * HOUSEHOLD_HALF_RANGE).reshape(-1, FOLLOWER_ACTION_DIM)
    grads, _ = net_gradients(nets.follower_actor, actor_inputs, upstream)
    actor, actor_state = adam_step(nets.follower_actor, grads, nets.optim['follower_actor'],
                                   actor_lr, maximize=True)

    updated = nets.with_updates(
        follower_critic=critic,
        follower_actor=actor,
        optim={'follower_critic': critic_state, 'follower_actor': actor_state},
    )
    return updated, LossReport(critic_loss, actor_objective)


def update_leader(nets: AgentNets, batch: TransitionBatch, config: TrainConfig,
                  critic_lr: Optional[float] = None,
                  actor_lr: Optional[float] = None) -> Tuple[AgentNets, LossReport]:
    """One critic descent step and one actor ascent step for the leader.

    With leader-follower updates enabled the actor gradient also flows through
    the follower actor's response to the candidate leader action; otherwise the
    stored follower actions are held fixed. Follower networks are never written.

    Returns:
        (updated nets, loss report)
    """
    if batch is None or batch.size == 0:
        raise ContractError('update_leader needs a non-empty batch')
    critic_lr = config.critic_lr if critic_lr is None else critic_lr
    actor_lr = config.actor_lr if actor_lr is None else actor_lr
    B, N = batch.size, batch.n_followers
    targets = leader_targets(nets, batch, config)

    q, rows, _ = _leader_q(nets.leader_critic, config, batch.leader_obs, batch.leader_action,
                           batch.follower_obs, batch.follower_actions)
    error = q - targets
    critic_loss = float(np.mean(error ** 2))
    upstream = 2.0 * error / B
    if config.use_mean_field:
        upstream = np.repeat(upstream / N, N)
    grads, _ = net_gradients(nets.leader_critic, rows, upstream.reshape(-1, 1))
    critic, critic_state = adam_step(nets.leader_critic, grads, nets.optim['leader_critic'], critic_lr)

    # actor ascent
    lact = leader_actions(nets.leader_actor, batch.leader_obs)
    if config.use_leader_follower_update:
        f_inputs = follower_actor_inputs(batch.follower_obs, lact[:, None, :]).reshape(-1, FOLLOWER_ACTOR_INPUT)
        facts = to_box(net_forward(nets.follower_actor, f_inputs), HOUSEHOLD_ACTION_LOW,
                       HOUSEHOLD_ACTION_HIGH).reshape(B, N, FOLLOWER_ACTION_DIM)
    else:
        facts = batch.follower_actions
    q, rows, selection = _leader_q(critic, config, batch.leader_obs, lact, batch.follower_obs, facts)
    actor_objective = float(np.mean(q))

    weight = np.full((rows.shape[0], 1), 1.0 / rows.shape[0])
    _, input_grad = net_gradients(critic, rows, weight)
    if config.use_mean_field:
        input_grad = input_grad.reshape(B, N, -1)
        leader_grad = input_grad[:, :, _LEADER_ACTION_COLS].sum(axis=1)
        follower_grad = input_grad[:, :, LEADER_HEAD_DIM + FOLLOWER_OBS_DIM:LEADER_HEAD_DIM + PAIR_DIM]
    else:
        leader_grad = input_grad[:, _LEADER_ACTION_COLS]
        follower_grad = np.zeros((B, N, FOLLOWER_ACTION_DIM))
        indices, mask = selection
        for slot in range(indices.shape[1]):
            start = LEADER_HEAD_DIM + slot * PAIR_DIM + FOLLOWER_OBS_DIM
            slot_grad = input_grad[:, start:start + FOLLOWER_ACTION_DIM] * mask[:, slot, None]
            np.add.at(follower_grad, (np.arange(B), indices[:, slot]), slot_grad)

    if config.use_leader_follower_update:
        f_upstream = (follower_grad * HOUSEHOLD_HALF_RANGE).reshape(-1, FOLLOWER_ACTION_DIM)
        _, f_input_grad = net_gradients(nets.follower_actor, f_inputs, f_upstream)
        leader_grad = leader_grad + f_input_grad.reshape(B, N, -1)[:, :, _ACTOR_LEADER_COLS].sum(axis=1)

    grads, _ = net_gradients(nets.leader_actor, batch.leader_obs, leader_grad * GOV_HALF_RANGE)
    actor, actor_state = adam_step(nets.leader_actor, grads, nets.optim['leader_actor'],
                                   actor_lr, maximize=True)

    updated = nets.with_updates(
        leader_critic=critic,
        leader_actor=actor,
        optim={'leader_critic': critic_state, 'leader_actor': actor_state},
    )
    return updated, LossReport(critic_loss, actor_objective)


def save_agent_nets(file_path, nets: AgentNets, config: TrainConfig, seed: Optional[int] = None,
                    epoch: Optional[int] = None, config_digest: Optional[str] = None,
                    variant: Optional[str] = None):
    """Write all eight networks and the four optimizer states to one checkpoint."""
    return save_checkpoint(
        file_path,
        kind='agent-nets',
        networks=nets.networks(),
        optimizers=nets.optim,
        seed=seed,
        epoch=epoch,
        config_digest=config_digest,
        variant=variant,
        extras={
            'use_mean_field': config.use_mean_field,
            'use_leader_follower_update': config.use_leader_follower_update,
            'm_concat': config.m_concat,
        },
    )


def load_agent_nets(file_path, config: TrainConfig) -> AgentNets:
    """Load networks saved by save_agent_nets, validated against ``config``."""
    loaded = load_checkpoint(file_path, expected_specs=network_specs(config), kind='agent-nets')
    nets = {name: loaded.networks[name] for name in NETWORK_NAMES}
    return AgentNets(**nets, optim=loaded.optimizers)
