"""Desk-scale training trends: N=10, T=100, 200 epochs, five seeds.

Everything here trains real policies and takes tens of minutes; run with
``pytest -m slow``.
"""

import logging
from pathlib import Path

import numpy as np
import pytest

from baselines import RandomLeaderPolicy
from behavior_cloning import BCFollowerPolicy, bc_network_spec, bc_train, synth_bc_dataset
from config import Config
from experiment_runner import DEFAULT_MIX_RATIOS, GROUP_STATS, group_means, smfg_group_size
from exploitability import exploitability, smfg_follower_policy, smfg_leader_policy
from rollout import run_episode
from trainer import ABLATION_FLAGS, train, variant_for_algo

logger = logging.getLogger('smfg-lab.desk')

SETTINGS = Path(__file__).parent.parent / 'config' / 'settings.yml'
SEEDS = (0, 1, 2, 3, 4)
EARLY_EPOCH = 9

pytestmark = pytest.mark.slow


def _payoff(econ, gamma, seeds, leader_factory, followers):
    return float(np.mean([
        run_episode(econ, s, leader_factory(s), followers).leader_payoff(gamma) for s in seeds
    ]))


@pytest.fixture(scope='module')
def desk():
    config = Config(SETTINGS, profile='desk')
    econ, evaluation = config.economy, config.evaluation
    eval_seeds = [evaluation.seed + k for k in range(evaluation.episodes)]
    br_seeds = eval_seeds[:evaluation.exploitability_seeds]
    results = {'eval_seeds': eval_seeds, 'econ': econ, 'nets': {}, 'payoff': {},
               'early_gap': [], 'final_gap': [], 'random_bc_payoff': [], 'bc': []}

    for algo in ABLATION_FLAGS:
        train_config = variant_for_algo(algo).apply(config.training)
        for seed in SEEDS:
            def on_epoch(epoch, nets, entry):
                if algo == 'smfg' and epoch == EARLY_EPOCH:
                    results['early_gap'].append(exploitability(
                        econ, nets, train_config, evaluation.br_budget, br_seeds, seed=seed).total)

            nets, _ = train(econ, train_config, seed, on_epoch=on_epoch)
            results['nets'][algo, seed] = nets
            leader = smfg_leader_policy(nets)
            results['payoff'][algo, seed] = _payoff(econ, train_config.gamma, eval_seeds,
                                                   lambda s: leader, smfg_follower_policy(nets))
            if algo == 'smfg':
                results['final_gap'].append(exploitability(
                    econ, nets, train_config, evaluation.br_budget, br_seeds, seed=seed).total)

    for seed in SEEDS:
        dataset = synth_bc_dataset(econ, config.behavior, 4000, seed)
        bc = BCFollowerPolicy(bc_train(dataset, bc_network_spec((64, 64)), epochs=50, seed=seed).params)
        results['bc'].append(bc)
        results['random_bc_payoff'].append(
            _payoff(econ, config.training.gamma, eval_seeds, RandomLeaderPolicy, bc))
    results['gamma'] = config.training.gamma
    return results


def test_exploitability_falls_over_training(desk):
    early, final = np.median(desk['early_gap']), np.median(desk['final_gap'])
    logger.info(f"Median exploitability: epoch {EARLY_EPOCH + 1} {early:.5g}, final {final:.5g}")
    assert final < early


def test_trained_leader_beats_random_leader_with_cloned_households(desk):
    trained = np.median([desk['payoff']['smfg', s] for s in SEEDS])
    random_leader = np.median(desk['random_bc_payoff'])
    assert trained > random_leader


def test_full_variant_not_worse_than_independent_learners(desk):
    medians = {algo: float(np.median([desk['payoff'][algo, s] for s in SEEDS])) for algo in ABLATION_FLAGS}
    ordering = sorted(medians, key=medians.get, reverse=True)
    logger.info(f"Median leader payoff by variant: {medians}; ordering {ordering}")
    assert medians['smfg'] >= medians['smfg-s-mf']


def test_mix_ratios_give_finite_group_means(desk):
    econ = desk['econ']
    n = econ.n_households
    differences = {}
    for ratio in DEFAULT_MIX_RATIOS:
        n_smfg = smfg_group_size(ratio, n)
        smfg_index, bc_index = np.arange(n_smfg), np.arange(n_smfg, n)
        gaps = []
        for k, seed in enumerate(SEEDS):
            nets = desk['nets']['smfg', seed]
            followers = [(smfg_index, smfg_follower_policy(nets)), (bc_index, desk['bc'][k])]
            logs = [run_episode(econ, s, smfg_leader_policy(nets), followers) for s in desk['eval_seeds']]
            smfg_stats = np.mean([group_means(log, smfg_index) for log in logs], axis=0)
            bc_stats = np.mean([group_means(log, bc_index) for log in logs], axis=0)
            for stats, size in ((smfg_stats, n_smfg), (bc_stats, n - n_smfg)):
                if size:
                    assert np.isfinite(stats).all()
                else:
                    assert np.isnan(stats).all()
            gaps.append(smfg_stats[GROUP_STATS.index('utility')] - bc_stats[GROUP_STATS.index('utility')])
        differences[ratio] = float(np.median(gaps))
    logger.info(f"Median SMFG minus cloned-household utility by mix ratio: {differences}")
    assert len(differences) == len(DEFAULT_MIX_RATIOS)
