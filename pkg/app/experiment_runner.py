#!/usr/bin/env python3
"""
SMFG Lab - Experiment Runner

Trains and evaluates the Stackelberg mean-field tax policy and its baselines,
runs shock and mixed-population scenarios, and sweeps algorithms over seeds.
Every run writes tidy CSV tables, a checkpoint and a manifest into its output
directory and is tracked in the run registry.
"""

import argparse
import logging
import math
import signal
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import yaml

from agents import load_agent_nets, save_agent_nets
from baselines import US_FEDERAL_DATA, FreeMarketPolicy, RandomLeaderPolicy, UsFederalPolicy, load_us_federal
from behavior_cloning import (
    BCDataset,
    BCFollowerPolicy,
    bc_network_spec,
    bc_train,
    load_bc_policy,
    save_bc_policy,
    synth_bc_dataset,
)
from config import DEFAULT_CONFIG_PATH, Config
from database import RunRegistry
from errors import CheckpointError, ConfigError, RunInterrupted
from exploitability import exploitability, smfg_follower_policy, smfg_leader_policy
from mean_field import multi_objective_score
from results import (
    GROUP_COLUMNS,
    RECOVERY_COLUMNS,
    SUMMARY_COLUMNS,
    TRACE_COLUMNS,
    TRADEOFF_COLUMNS,
    append_csv,
    emit_csv,
    episode_metrics,
    mean_row,
    read_csv,
    trace_rows,
)
from rollout import EpisodeLog, FollowerPolicy, LeaderPolicy, run_episode
from saez import DEFAULT_EDGE_MULTIPLIERS, ELASTICITY_PRIOR, SaezPolicy, SaezState, calibrate_elasticity
from trainer import ABLATION_FLAGS, train, variant_for_algo
from utils import ensure_directory, setup_logging, sha256_file

COMMANDS = ('train', 'evaluate', 'shock', 'mix', 'sweep')
SMFG_ALGOS = tuple(ABLATION_FLAGS)
BASELINE_ALGOS = ('free-market', 'saez', 'us-federal', 'bc-households')
ALGOS = SMFG_ALGOS + BASELINE_ALGOS
DEFAULT_MIX_RATIOS = (0.0, 0.25, 0.5, 0.75, 1.0)
DEFAULT_TRADEOFF_ALPHAS = (0, 2, 4, 6, 8, 10)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

METRICS_FILE = 'metrics.csv'
TRACE_FILE = 'trace.csv'
RECOVERY_FILE = 'recovery.csv'
GROUPS_FILE = 'groups.csv'
MANIFEST_FILE = 'manifest.txt'
CHECKPOINT_FILE = 'checkpoint.zip'
BC_DATASET_FILE = 'bc_dataset.csv'
SUMMARY_FILE = 'summary.csv'
TRADEOFF_FILE = 'tradeoff.csv'

LeaderFactory = Callable[[int], LeaderPolicy]


def smfg_group_size(mix_ratio: float, n: int) -> int:
    """Households assigned the SMFG policy: ceil(mix_ratio * n)."""
    if not 0.0 <= mix_ratio <= 1.0:
        raise ConfigError(f"mix_ratio must lie in [0, 1], got {mix_ratio}")
    # round first so 0.3 * 10 does not ceil to 4
    return int(math.ceil(round(mix_ratio * n, 9)))


GROUP_STATS = ('utility', 'wealth', 'income', 'mean_consumption', 'mean_labor')


def group_means(log: EpisodeLog, index: np.ndarray) -> Tuple[float, ...]:
    """Mean (utility, wealth, income, consumption, labor) of a household group over the episode."""
    if index.size == 0:
        return (math.nan,) * len(GROUP_STATS)
    return (
        float(log.welfare_returns()[index].mean()),
        float(log.wealth[index].mean()),
        float(log.income[index].mean()),
        float(log.consumption[index].mean()),
        float(log.labor[index].mean()),
    )


class ExperimentRunner:
    """Runs one experiment command against a resolved configuration."""

    def __init__(self, config: Config, out_dir, registry: Optional[RunRegistry] = None,
                 install_signals: bool = True, parent: Optional['ExperimentRunner'] = None):
        self.config = config
        self.logger = logging.getLogger('smfg-lab.runner')
        self.out_dir = ensure_directory(out_dir)
        self.parent = parent
        self.running = True
        self._owns_registry = registry is None
        self.registry = registry or RunRegistry(
            config.get('paths', 'registry', default=str(self.out_dir / 'registry.db')))

        self._previous_handlers = {}
        if install_signals:
            for signum in (signal.SIGTERM, signal.SIGINT):
                self._previous_handlers[signum] = signal.signal(signum, self._signal_handler)

        self.algo = config.get('run', 'algo', default='smfg')
        if self.algo not in ALGOS:
            raise ConfigError(f"Unknown algo '{self.algo}', expected one of {ALGOS}")
        self.seed = int(config.get('run', 'seed', default=0))
        self.econ = config.economy
        self.train_config = config.training
        if self.algo in SMFG_ALGOS:
            self.train_config = variant_for_algo(self.algo).apply(self.train_config)
        self.evaluation = config.evaluation
        self.digest = config.digest()
        self.run_id = f"{self.algo}-s{self.seed}-{self.digest[:8]}"

    def _signal_handler(self, signum, frame):
        self.logger.info(f"Received signal {signum}, stopping at the next epoch boundary...")
        self.running = False

    def should_stop(self) -> bool:
        if not self.running:
            return True
        return self.parent is not None and self.parent.should_stop()

    @property
    def checkpoint_path(self) -> Path:
        return Path(self.config.get('paths', 'checkpoint', default=str(self.out_dir / CHECKPOINT_FILE)))

    def close(self):
        for signum, handler in self._previous_handlers.items():
            signal.signal(signum, handler)
        self._previous_handlers = {}
        if self._owns_registry:
            self.registry.close()

    # ------------------------------------------------------------------ tracking

    def run(self, command: str):
        """Run a command under the registry: running, then completed/failed/interrupted."""
        handlers = {
            'train': self.run_train,
            'evaluate': self.run_eval,
            'shock': self.run_shock,
            'mix': self.run_mix,
            'sweep': self.run_sweep,
        }
        if command not in handlers:
            raise ConfigError(f"Unknown command '{command}', expected one of {COMMANDS}")

        self.config.write_manifest(self.out_dir / MANIFEST_FILE, command=command, run_id=self.run_id)
        row_id = self.registry.add_run(self.run_id, command, self.algo, self.seed, self.digest, self.out_dir)
        self.logger.info(f"{'=' * 60}\nStarting {command}: {self.run_id} -> {self.out_dir}\n{'=' * 60}")
        try:
            result = handlers[command]()
        except RunInterrupted as e:
            self.registry.update_status(row_id, 'interrupted', str(e))
            self.logger.warning(f"Run {self.run_id} interrupted: {e}")
            raise
        except Exception as e:
            self.registry.update_status(row_id, 'failed', str(e))
            self.logger.error(f"Run {self.run_id} failed: {e}", exc_info=True)
            raise

        checkpoint_hash = None
        if command == 'train' and self.checkpoint_path.exists():
            checkpoint_hash = sha256_file(self.checkpoint_path)
        self.registry.update_status(row_id, 'completed', checkpoint_hash=checkpoint_hash)
        self.logger.info(f"Completed {command}: {self.run_id}")
        return result

    # ------------------------------------------------------------------ policies

    def _bc_followers(self, path) -> Tuple[FollowerPolicy, Dict[str, str]]:
        if path is None:
            raise CheckpointError('No behavior-cloned household checkpoint configured')
        return load_bc_policy(path)

    def _saez_factory(self, elasticity: float) -> LeaderFactory:
        saez = self.config.get('baselines', 'saez', default={})
        spend_ratio = float(self.config.get('baselines', 'spend_ratio', default=0.0))

        def factory(episode_seed):
            state = SaezState(capacity=int(saez.get('capacity', 10_000)), eta=float(saez.get('eta', 1.0)),
                              elasticity=elasticity)
            return SaezPolicy(state, saez.get('edge_multipliers', DEFAULT_EDGE_MULTIPLIERS),
                              spend_ratio, int(saez.get('refit_interval', 1)))
        return factory

    def _us_federal_factory(self) -> LeaderFactory:
        path = self.config.get('baselines', 'us_federal', 'data', default=str(US_FEDERAL_DATA))
        data = load_us_federal(path)
        spend_ratio = float(self.config.get('baselines', 'spend_ratio', default=0.0))
        return lambda episode_seed: UsFederalPolicy(data, spend_ratio)

    def load_policies(self) -> Tuple[LeaderFactory, FollowerPolicy]:
        """Leader factory (fresh per episode) and household policy for the configured algo."""
        checkpoint = self.checkpoint_path
        if self.algo in SMFG_ALGOS:
            nets = load_agent_nets(checkpoint, self.train_config)
            leader = smfg_leader_policy(nets)
            return (lambda episode_seed: leader), smfg_follower_policy(nets)

        followers, extras = load_bc_policy(checkpoint)
        bc_override = self.config.get('paths', 'bc_checkpoint')
        if bc_override:
            followers, _ = self._bc_followers(bc_override)
        if self.algo == 'free-market':
            return (lambda episode_seed: FreeMarketPolicy()), followers
        if self.algo == 'saez':
            return self._saez_factory(float(extras.get('elasticity', ELASTICITY_PRIOR))), followers
        if self.algo == 'us-federal':
            return self._us_federal_factory(), followers
        return RandomLeaderPolicy, followers

    def eval_seeds(self) -> List[int]:
        return [self.evaluation.seed + k for k in range(self.evaluation.episodes)]

    # ------------------------------------------------------------------ commands

    def run_train(self) -> Path:
        """Train the configured algo; metrics.csv grows one row per epoch."""
        metrics_path = self.out_dir / METRICS_FILE
        emit_csv([], metrics_path)
        if self.algo in SMFG_ALGOS:
            self._train_smfg(metrics_path)
        else:
            self._train_baseline(metrics_path)
        return metrics_path

    def _exploitability_due(self, epoch: int) -> bool:
        interval = self.evaluation.exploitability_interval
        if interval <= 0:
            return False
        return (epoch + 1) % interval == 0 or epoch == self.train_config.epochs - 1

    def _train_smfg(self, metrics_path: Path):
        gamma = self.train_config.gamma
        eval_seed = self.evaluation.seed
        br_seeds = [self.evaluation.seed + k for k in range(self.evaluation.exploitability_seeds)]

        def on_epoch(epoch, nets, entry):
            log = run_episode(self.econ, eval_seed, smfg_leader_policy(nets), smfg_follower_policy(nets))
            gap = None
            if self._exploitability_due(epoch):
                gap = exploitability(self.econ, nets, self.train_config, self.evaluation.br_budget,
                                     br_seeds, seed=self.seed).total
            append_csv([episode_metrics(self.run_id, self.seed, epoch, log, gamma, gap)], metrics_path)

        nets, log = train(self.econ, self.train_config, self.seed, on_epoch=on_epoch,
                          should_stop=self.should_stop)
        save_agent_nets(self.checkpoint_path, nets, self.train_config, seed=self.seed, epoch=len(log),
                        config_digest=self.digest, variant=self.algo)
        if len(log) < self.train_config.epochs:
            raise RunInterrupted(f"stopped after {len(log)} of {self.train_config.epochs} epochs")

    def _bc_dataset(self, bc: dict) -> BCDataset:
        dataset_path = self.config.get('paths', 'bc_dataset')
        if dataset_path:
            self.logger.info(f"Loading behavior-cloning dataset {dataset_path}")
            return BCDataset.from_csv(dataset_path)
        dataset = synth_bc_dataset(self.econ, self.config.behavior, int(bc.get('dataset_size', 4000)), self.seed)
        dataset.to_csv(self.out_dir / BC_DATASET_FILE)
        return dataset

    def _train_baseline(self, metrics_path: Path):
        bc = self.config.get('baselines', 'bc', default={})
        loss_kind = bc.get('loss_kind', 'mse')
        spec = bc_network_spec(tuple(bc.get('hidden_sizes', (64, 64))), loss_kind,
                               bc.get('hidden_activation', 'tanh'))
        result = bc_train(self._bc_dataset(bc), spec, loss_kind, epochs=int(bc.get('epochs', 50)),
                          seed=self.seed, batch_size=int(bc.get('batch_size', 64)), lr=float(bc.get('lr', 1e-3)))
        if self.should_stop():
            raise RunInterrupted('stopped after behavior cloning')

        extras = {'algo': self.algo}
        if self.algo == 'saez':
            saez = self.config.get('baselines', 'saez', default={})
            state = SaezState(capacity=int(saez.get('capacity', 10_000)), eta=float(saez.get('eta', 1.0)))
            followers = BCFollowerPolicy(result.params, loss_kind)
            extras['elasticity'] = calibrate_elasticity(
                self.econ, followers, state,
                rates=tuple(saez.get('calibration_rates', (0.0, 0.1, 0.2, 0.3, 0.4, 0.5))),
                seeds=tuple(saez.get('calibration_seeds', (0,))))
        save_bc_policy(self.checkpoint_path, result, seed=self.seed, config_digest=self.digest, extras=extras)

        leader_factory, followers = self.load_policies()
        log = run_episode(self.econ, self.evaluation.seed, leader_factory(self.evaluation.seed), followers)
        append_csv([episode_metrics(self.run_id, self.seed, 0, log, self.train_config.gamma)], metrics_path)

    def _profile_exploitability(self) -> Optional[float]:
        if self.algo not in SMFG_ALGOS or not self.evaluation.exploitability:
            return None
        nets = load_agent_nets(self.checkpoint_path, self.train_config)
        seeds = [self.evaluation.seed + k for k in range(self.evaluation.exploitability_seeds)]
        return exploitability(self.econ, nets, self.train_config, self.evaluation.br_budget, seeds,
                              seed=self.seed).total

    def _evaluate(self, shock_step=None, shock_factor=1.0) -> List[EpisodeLog]:
        leader_factory, followers = self.load_policies()
        logs = []
        for episode_seed in self.eval_seeds():
            if self.should_stop():
                raise RunInterrupted(f"stopped after {len(logs)} evaluation episodes")
            logs.append(run_episode(self.econ, episode_seed, leader_factory(episode_seed), followers,
                                    shock_step=shock_step, shock_factor=shock_factor))
        return logs

    def _emit_metrics(self, logs: List[EpisodeLog], gap: Optional[float] = None) -> Path:
        rows = [episode_metrics(self.run_id, self.seed, k, log, self.train_config.gamma, gap)
                for k, log in enumerate(logs)]
        rows.append(mean_row(rows, self.run_id, self.seed))
        return emit_csv(rows, self.out_dir / METRICS_FILE)

    def run_eval(self) -> Path:
        """Noise-free evaluation episodes plus a mean row."""
        logs = self._evaluate()
        return self._emit_metrics(logs, self._profile_exploitability())

    def _shock_settings(self) -> Tuple[int, float]:
        shock_step = self.config.get('experiment', 'shock_step')
        shock_factor = float(self.config.get('experiment', 'shock_factor', default=0.5))
        if shock_step is None:
            raise ConfigError('shock needs experiment.shock_step')
        shock_step = int(shock_step)
        if not 0 <= shock_step < self.econ.horizon:
            raise ConfigError(f"shock_step must lie in [0, {self.econ.horizon}), got {shock_step}")
        if not 0.0 < shock_factor <= 1.0:
            raise ConfigError(f"shock_factor must lie in (0, 1], got {shock_factor}")
        return shock_step, shock_factor

    def run_shock(self) -> Path:
        """Evaluation with a wealth shock; adds the per-step trace and recovery table."""
        shock_step, shock_factor = self._shock_settings()
        logs = self._evaluate(shock_step, shock_factor)
        trace, recovery = [], []
        for k, log in enumerate(logs):
            trace.extend(trace_rows(self.run_id, k, log))
            recovery.append({
                'run_id': self.run_id,
                'episode': k,
                'shock_step': shock_step,
                'shock_factor': shock_factor,
                'pre_shock_mean_wealth': math.nan if log.pre_shock_mean_wealth is None else log.pre_shock_mean_wealth,
                'recovery_steps': log.recovery_steps(),
            })
            self.logger.info(f"Episode {k}: recovery after {log.recovery_steps()} steps")
        emit_csv(trace, self.out_dir / TRACE_FILE, TRACE_COLUMNS)
        emit_csv(recovery, self.out_dir / RECOVERY_FILE, RECOVERY_COLUMNS)
        return self._emit_metrics(logs)

    def mix_ratios(self) -> List[float]:
        single = self.config.get('experiment', 'mix_ratio')
        if single is not None:
            return [float(single)]
        return [float(r) for r in self.config.get('experiment', 'mix_ratios', default=DEFAULT_MIX_RATIOS)]

    def run_mix(self) -> Path:
        """SMFG leader with SMFG and behavior-cloned households side by side."""
        if self.algo not in SMFG_ALGOS:
            raise ConfigError(f"mix needs an SMFG algo, got '{self.algo}'")
        nets = load_agent_nets(self.checkpoint_path, self.train_config)
        bc_followers, _ = self._bc_followers(self.config.get('paths', 'bc_checkpoint'))
        leader = smfg_leader_policy(nets)
        smfg_followers = smfg_follower_policy(nets)

        n = self.econ.n_households
        groups, metrics = [], []
        for ratio in self.mix_ratios():
            n_smfg = smfg_group_size(ratio, n)
            smfg_index, bc_index = np.arange(n_smfg), np.arange(n_smfg, n)
            logs = [
                run_episode(self.econ, episode_seed, leader,
                            [(smfg_index, smfg_followers), (bc_index, bc_followers)])
                for episode_seed in self.eval_seeds()
            ]
            smfg_stats = np.mean([group_means(log, smfg_index) for log in logs], axis=0)
            bc_stats = np.mean([group_means(log, bc_index) for log in logs], axis=0)
            rows = [episode_metrics(self.run_id, self.seed, k, log, self.train_config.gamma)
                    for k, log in enumerate(logs)]
            summary = mean_row(rows, f"{self.run_id}@{ratio:g}", self.seed)
            metrics.append(summary)
            row = {'run_id': self.run_id, 'mix_ratio': ratio, 'n_smfg': n_smfg, 'n_bc': n - n_smfg,
                   'per_capita_gdp': summary.per_capita_gdp}
            for k, stat in enumerate(GROUP_STATS):
                row[f"smfg_{stat}"] = smfg_stats[k]
                row[f"bc_{stat}"] = bc_stats[k]
            groups.append(row)
            self.logger.info(f"Mix {ratio:g}: {n_smfg} SMFG / {n - n_smfg} BC households, "
                             f"utility {smfg_stats[0]:.5f} / {bc_stats[0]:.5f}")
        emit_csv(groups, self.out_dir / GROUPS_FILE, GROUP_COLUMNS)
        return emit_csv(metrics, self.out_dir / METRICS_FILE)

    def run_sweep(self) -> Path:
        """Train and evaluate every (algo, seed); completed configurations are skipped."""
        algos = list(self.config.get('sweep', 'algos', default=list(SMFG_ALGOS)))
        seeds = [int(s) for s in self.config.get('sweep', 'seeds', default=[0])]
        alphas = [float(a) for a in self.config.get('sweep', 'tradeoff_alphas', default=DEFAULT_TRADEOFF_ALPHAS)]
        summary, tradeoff = [], []
        for algo in algos:
            for seed in seeds:
                if self.should_stop():
                    raise RunInterrupted(f"sweep stopped before {algo} seed {seed}")
                child_dir = self.out_dir / f"{algo}-s{seed}"
                child_config = self.config.derive({
                    'run.algo': algo,
                    'run.seed': seed,
                    'paths.checkpoint': str(child_dir / 'train' / CHECKPOINT_FILE),
                })
                child = ExperimentRunner(child_config, child_dir / 'train', registry=self.registry,
                                         install_signals=False, parent=self)
                if self.registry.is_completed(child.digest, 'evaluate'):
                    self.logger.info(f"Skipping {child.run_id}: already completed")
                else:
                    child.run('train')
                    ExperimentRunner(child_config, child_dir / 'evaluate', registry=self.registry,
                                     install_signals=False, parent=self).run('evaluate')

                frame = read_csv(child_dir / 'evaluate' / METRICS_FILE)
                row = frame[frame['epoch'].astype(str) == 'mean'].iloc[0].to_dict()
                summary.append(dict(row, algo=algo))
                for alpha in alphas:
                    tradeoff.append({
                        'algo': algo,
                        'seed': seed,
                        'alpha': alpha,
                        'per_capita_gdp': row['per_capita_gdp'],
                        'wealth_gini': row['wealth_gini'],
                        'score': multi_objective_score(row['per_capita_gdp'], row['wealth_gini'], alpha),
                    })
        emit_csv(tradeoff, self.out_dir / TRADEOFF_FILE, TRADEOFF_COLUMNS)
        return emit_csv(summary, self.out_dir / SUMMARY_FILE, SUMMARY_COLUMNS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Stackelberg mean-field tax policy experiments')
    parser.add_argument('command', choices=COMMANDS, help='Experiment to run')
    parser.add_argument('--config', default=DEFAULT_CONFIG_PATH, help='Path to config YAML (or a manifest)')
    parser.add_argument('--out', default='runs/latest', help='Output directory')
    parser.add_argument('--profile', choices=('desk', 'paper'), default=None, help='Configuration profile')
    parser.add_argument('--seed', type=int, help='Run seed')
    parser.add_argument('--n', type=int, help='Number of households')
    parser.add_argument('--epochs', type=int, help='Training epochs')
    parser.add_argument('--algo', choices=ALGOS, help='Algorithm')
    parser.add_argument('--checkpoint', help='Checkpoint to write (train) or read (other commands)')
    parser.add_argument('--bc-checkpoint', help='Behavior-cloned household checkpoint')
    parser.add_argument('--shock-step', type=int, help='Step at which the wealth shock hits')
    parser.add_argument('--shock-factor', type=float, help='Wealth multiplier of the shock')
    parser.add_argument('--mix-ratio', type=float, help='Share of SMFG households in a mix run')
    parser.add_argument('--eval-episodes', type=int, help='Evaluation episodes')
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, object]:
    """Map command-line flags onto dotted configuration keys."""
    return {
        'run.seed': args.seed,
        'run.algo': args.algo,
        'economy.n_households': args.n,
        'training.epochs': args.epochs,
        'paths.checkpoint': args.checkpoint,
        'paths.bc_checkpoint': args.bc_checkpoint,
        'experiment.shock_step': args.shock_step,
        'experiment.shock_factor': args.shock_factor,
        'experiment.mix_ratio': args.mix_ratio,
        'evaluation.episodes': args.eval_episodes,
    }


def main(argv=None) -> int:
    """Command-line entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    logger = setup_logging('INFO', None)

    try:
        config = Config(args.config, args.profile, overrides_from_args(args))
        setup_logging(config.log_level, config.log_file or str(Path(args.out) / 'smfg-lab.log'))
        runner = ExperimentRunner(config, args.out)
    except (ConfigError, FileNotFoundError, yaml.YAMLError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    try:
        runner.run(args.command)
    except (ConfigError, FileNotFoundError, yaml.YAMLError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except RunInterrupted:
        return EXIT_FAILURE
    except Exception as e:
        logger.error(f"Run failed: {e}")
        return EXIT_FAILURE
    finally:
        runner.close()
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
