import numpy as np
import pytest

from behavior_cloning import (
    BCDataset,
    BehaviorParams,
    BCFollowerPolicy,
    RuleOfThumbPolicy,
    bc_loss,
    bc_network_spec,
    bc_train,
    load_bc_policy,
    save_bc_policy,
    synth_bc_dataset,
    wealth_rank,
)
from economy import HOUSEHOLD_ACTION_HIGH, HOUSEHOLD_ACTION_LOW, EconConfig, GovAction
from errors import ConfigError, ContractError


def test_wealth_rank():
    obs = np.zeros((3, 6))
    obs[:, 0] = [5.0, 1.0, 3.0]
    assert wealth_rank(obs).tolist() == [1.0, 0.0, 0.5]
    assert wealth_rank(obs[:1]).tolist() == [0.0]


def test_rule_of_thumb_richer_consume_more_work_less():
    obs = np.zeros((4, 6))
    obs[:, 0] = [1.0, 2.0, 3.0, 4.0]
    actions = RuleOfThumbPolicy(BehaviorParams())(obs, GovAction())
    assert np.all(np.diff(actions[:, 0]) > 0)
    assert np.all(np.diff(actions[:, 1]) < 0)


def test_synth_dataset_sizes():
    config = EconConfig(n_households=3, horizon=4)
    single = synth_bc_dataset(config, BehaviorParams(), size=1, seed=0)
    assert single.size == 1 and single.obs.shape == (1, 6)
    bigger = synth_bc_dataset(config, BehaviorParams(), size=40, seed=0)
    assert bigger.size == 40
    with pytest.raises(ContractError):
        synth_bc_dataset(config, BehaviorParams(), size=0, seed=0)


def test_flat_behavior_gives_identical_actions():
    params = BehaviorParams(kappa0=0.4, kappa1=0.0, lambda0=0.7, lambda1=0.0)
    dataset = synth_bc_dataset(EconConfig(n_households=5, horizon=5), params, size=30, seed=1)
    assert np.allclose(dataset.acts, [0.4, 0.7], rtol=0, atol=0)


def test_synth_dataset_is_seeded():
    config = EconConfig(n_households=3, horizon=4)
    a = synth_bc_dataset(config, BehaviorParams(), 20, seed=5)
    b = synth_bc_dataset(config, BehaviorParams(), 20, seed=5)
    assert np.array_equal(a.obs, b.obs) and np.array_equal(a.acts, b.acts)


def test_dataset_csv_keeps_exact_values(tmp_path):
    dataset = synth_bc_dataset(EconConfig(n_households=3, horizon=4), BehaviorParams(), 12, seed=0)
    dataset.to_csv(tmp_path / 'bc.csv')
    loaded = BCDataset.from_csv(tmp_path / 'bc.csv')
    assert np.array_equal(loaded.obs, dataset.obs)
    assert np.array_equal(loaded.acts, dataset.acts)


def test_dataset_shape_mismatch():
    with pytest.raises(ContractError):
        BCDataset(np.zeros((3, 6)), np.zeros((2, 2)))


@pytest.mark.slow
def test_single_pair_overfits():
    rng = np.random.default_rng(0)
    obs = np.tile(rng.normal(size=6), (64, 1))
    acts = np.tile([0.35, 0.8], (64, 1))
    result = bc_train(BCDataset(obs, acts), bc_network_spec((16,)), epochs=2000, batch_size=64, lr=1e-3)
    assert min(result.history + [result.final_loss]) < 1e-6


def test_linear_data_loss_does_not_increase():
    rng = np.random.default_rng(1)
    obs = rng.uniform(-1.0, 1.0, size=(128, 6))
    weights = rng.uniform(-0.1, 0.1, size=(6, 2))
    acts = 0.5 + obs @ weights
    result = bc_train(BCDataset(obs, acts), bc_network_spec((16,)), epochs=200, batch_size=128, lr=1e-3)
    assert all(b <= a + 1e-9 for a, b in zip(result.history, result.history[1:]))
    assert result.final_loss < result.history[0]


def test_zero_epochs_reports_initial_loss():
    dataset = BCDataset(np.ones((4, 6)), np.full((4, 2), 0.5))
    spec = bc_network_spec((8,))
    result = bc_train(dataset, spec, epochs=0, seed=3)
    assert result.history == []
    assert result.final_loss == bc_loss(result.params, dataset, 'mse')


def test_nll_training_and_policy_box():
    dataset = synth_bc_dataset(EconConfig(n_households=4, horizon=5), BehaviorParams(), 40, seed=0)
    spec = bc_network_spec((8,), loss_kind='nll')
    assert spec.output_size == 4
    result = bc_train(dataset, spec, loss_kind='nll', epochs=5, batch_size=16, lr=1e-2)
    assert np.isfinite(result.final_loss)
    actions = BCFollowerPolicy(result.params, 'nll')(dataset.obs * 100, GovAction())
    assert actions.shape == (40, 2)
    assert np.all(actions >= HOUSEHOLD_ACTION_LOW) and np.all(actions <= HOUSEHOLD_ACTION_HIGH)


def test_policy_output_does_not_depend_on_leader_action():
    dataset = synth_bc_dataset(EconConfig(n_households=3, horizon=4), BehaviorParams(), 12, seed=1)
    policy = BCFollowerPolicy(bc_train(dataset, bc_network_spec((8,)), epochs=2, batch_size=4).params)
    heavy = GovAction(income_tax_rate=0.8, income_progressivity=2.0, wealth_tax_rate=0.1, spend_ratio=1.0)
    assert np.array_equal(policy(dataset.obs, GovAction()), policy(dataset.obs, heavy))


def test_bad_loss_kind_and_spec():
    dataset = BCDataset(np.ones((4, 6)), np.full((4, 2), 0.5))
    with pytest.raises(ConfigError):
        bc_train(dataset, bc_network_spec((8,)), loss_kind='huber')
    with pytest.raises(ContractError):
        bc_train(dataset, bc_network_spec((8,), loss_kind='nll'), loss_kind='mse')


def test_save_and_load_policy(tmp_path):
    dataset = synth_bc_dataset(EconConfig(n_households=3, horizon=4), BehaviorParams(), 24, seed=0)
    result = bc_train(dataset, bc_network_spec((8,)), epochs=3, batch_size=8)
    path = save_bc_policy(tmp_path / 'bc.zip', result, seed=0, extras={'elasticity': 1.25})
    policy, extras = load_bc_policy(path)
    assert extras['loss_kind'] == 'mse'
    assert float(extras['elasticity']) == 1.25
    assert float(extras['final_loss']) == result.final_loss
    original = BCFollowerPolicy(result.params)
    assert np.array_equal(policy(dataset.obs, GovAction()), original(dataset.obs, GovAction()))
