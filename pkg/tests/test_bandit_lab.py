"""
Multi-objective bandit lab: Pareto-UCB policy, arm models and experiment traces
"""
from pathlib import Path

import numpy as np
import pytest

from app.core.exceptions import EmptyInputError
from app.services.bandit_lab import (
    TRACE_SCHEMA_HEADER,
    BanditArm,
    PullLedger,
    checkpoint_table,
    geometric_checkpoints,
    load_arms,
    log_growth_fit,
    most_dominant_optimal,
    policy_step,
    run_experiment,
    scalar_ucb_step,
    write_trace_csv,
)
from app.services.pareto_core import dominates, pareto_front, ucb_vectors


class TestArms:
    """Test arm reward models"""

    def test_mean_outside_support(self):
        with pytest.raises(ValueError):
            BanditArm(true_mean=np.array([1.2, 0.1]))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            BanditArm(true_mean=np.array([0.5]), kind="gaussian")

    def test_bernoulli_rewards_in_support_and_converge(self, rng):
        arm = BanditArm(true_mean=np.array([0.3, 0.8]))
        draws = np.array([arm.sample(rng) for _ in range(10_000)])
        assert set(np.unique(draws)) <= {0.0, 1.0}
        sigma = np.sqrt(arm.true_mean * (1 - arm.true_mean) / draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0) - arm.true_mean) < 4 * sigma)

    def test_deterministic_arm(self, rng):
        arm = BanditArm(true_mean=np.array([0.4, 0.6]), kind="deterministic")
        np.testing.assert_array_equal(arm.sample(rng), [0.4, 0.6])


class TestPolicyStep:
    """Test the Pareto-UCB selection policy"""

    def test_initialization_order(self, rng):
        ledger = PullLedger.empty(3, 2)
        ledger.record(0, np.zeros(2))
        assert policy_step(ledger, 2, rng) == 1

    def test_first_k_steps_are_distinct(self, rng):
        ledger = PullLedger.empty(5, 2)
        chosen = []
        for _ in range(5):
            arm = policy_step(ledger, 2, rng)
            chosen.append(arm)
            ledger.record(arm, np.full(2, 0.5))
        assert chosen == [0, 1, 2, 3, 4]

    def test_dominated_ucb_never_selected(self, rng):
        ledger = PullLedger(
            counts=np.array([10, 10, 10]),
            cumulative=np.array([[9.0, 9.0], [1.0, 1.0], [5.0, 2.0]]),
            step=30,
        )
        picks = {policy_step(ledger, 2, rng) for _ in range(200)}
        assert picks == {0}

    def test_incomparable_front_uses_both(self, rng):
        ledger = PullLedger(counts=np.array([1, 1]), cumulative=np.array([[0.5, 0.2], [0.2, 0.5]]), step=2)
        picks = {policy_step(ledger, 2, rng) for _ in range(200)}
        assert picks == {0, 1}

    def test_ledger_invariant(self, rng):
        arms = [BanditArm(np.array([0.2, 0.7])), BanditArm(np.array([0.6, 0.3]))]
        ledger = PullLedger.empty(2, 2)
        for _ in range(50):
            arm = policy_step(ledger, 2, rng)
            ledger.record(arm, arms[arm].sample(rng))
        assert ledger.counts.sum() == ledger.step == 50

    def test_single_objective_matches_scalar_ucb(self):
        """D=1 Pareto-UCB and scalar UCB choose identically under a shared seed"""
        arms = [BanditArm(np.array([0.9])), BanditArm(np.array([0.1]))]
        pareto_ledger, scalar_ledger = PullLedger.empty(2, 1), PullLedger.empty(2, 1)
        pareto_rng, scalar_rng = np.random.default_rng(3), np.random.default_rng(3)
        reward_a, reward_b = np.random.default_rng(4), np.random.default_rng(4)
        for _ in range(2000):
            a = policy_step(pareto_ledger, 1, pareto_rng)
            b = scalar_ucb_step(scalar_ledger, scalar_rng)
            assert a == b
            pareto_ledger.record(a, arms[a].sample(reward_a))
            scalar_ledger.record(b, arms[b].sample(reward_b))


class TestMostDominantOptimal:
    """Test the farthest dominating arm"""

    def test_two_member_front(self):
        means = np.array([[0.0, 0.0], [1.0, 0.2], [0.3, 0.9]])
        best, gap = most_dominant_optimal(0, [1, 2], means)
        assert best == 2
        np.testing.assert_allclose(gap, [0.3, 0.9])

    def test_single_member(self):
        means = np.array([[0.5, 0.5], [0.6, 0.9]])
        best, gap = most_dominant_optimal(0, [1], means)
        assert best == 1
        np.testing.assert_allclose(gap, [0.1, 0.4])

    def test_errors(self):
        means = np.array([[0.5, 0.5], [0.6, 0.4]])
        with pytest.raises(EmptyInputError):
            most_dominant_optimal(0, [], means)
        with pytest.raises(ValueError):
            most_dominant_optimal(0, [1], means)


class TestRunExperiment:
    """Test seeded experiments and their summaries"""

    def test_single_arm(self):
        result = run_experiment([BanditArm(np.array([0.5, 0.5]))], horizon=100, trials=1, seed=0)
        trace = result.trials[0]
        assert trace.final_counts.tolist() == [100]
        assert trace.failure_frequency(0, 100) == 0.0

    def test_deterministic_suboptimal_arm_sublinear(self):
        arms = [
            BanditArm(np.array([1.0, 1.0]), kind="deterministic"),
            BanditArm(np.array([0.0, 0.0]), kind="deterministic"),
        ]
        result = run_experiment(arms, horizon=10_000, trials=1, seed=1)
        assert result.optimal_arms.tolist() == [0]
        assert result.trials[0].final_counts[1] / 10_000 < 0.1

    def test_checkpoint_ratio_decreases(self):
        arms = [
            BanditArm(np.array([0.8, 0.5])),
            BanditArm(np.array([0.5, 0.8])),
            BanditArm(np.array([0.5, 0.2])),
        ]
        result = run_experiment(arms, horizon=10_000, trials=2, seed=9)
        ratios = result.mean_checkpoint_ratio(2)
        assert result.checkpoints == [10, 100, 1000, 10_000]
        assert ratios[10_000] < ratios[1000] < ratios[100]
        intercept, slope = log_growth_fit(
            result.checkpoints, [ratios[n] * n for n in result.checkpoints]
        )
        assert slope >= 0

    def test_seed_determinism(self):
        arms = [BanditArm(np.array([0.6, 0.4])), BanditArm(np.array([0.4, 0.6]))]
        first = run_experiment(arms, horizon=500, trials=3, seed=42)
        second = run_experiment(arms, horizon=500, trials=3, seed=42)
        for a, b in zip(first.trials, second.trials):
            np.testing.assert_array_equal(a.arms, b.arms)
            np.testing.assert_array_equal(a.rewards, b.rewards)

    def test_never_picks_dominated_ucb(self):
        """Replays a trace and checks each post-initialization choice against the UCB front"""
        arms = [BanditArm(np.array([0.7, 0.3])), BanditArm(np.array([0.3, 0.7])), BanditArm(np.array([0.2, 0.2]))]
        trace = run_experiment(arms, horizon=300, trials=1, seed=5).trials[0]
        ledger = PullLedger.empty(3, 2)
        for arm, reward in zip(trace.arms, trace.rewards):
            if ledger.step >= 3:
                bounds = ucb_vectors(ledger.cumulative, ledger.counts, ledger.step, 2)
                assert arm in pareto_front(bounds)
                assert not any(dominates(bounds[j], bounds[arm]) for j in range(3))
            ledger.record(int(arm), reward)

    def test_validation(self):
        with pytest.raises(EmptyInputError):
            run_experiment([], horizon=10, trials=1, seed=0)
        with pytest.raises(ValueError):
            run_experiment([BanditArm(np.array([0.5]))] * 3, horizon=2, trials=1, seed=0)
        with pytest.raises(ValueError):
            run_experiment([BanditArm(np.array([0.5]))], horizon=10, trials=0, seed=0)

    def test_geometric_checkpoints(self):
        assert geometric_checkpoints(100_000) == [10, 100, 1000, 10_000, 100_000]
        assert geometric_checkpoints(250) == [10, 100, 250]


class TestBanditFiles:
    """Test arm files and trace CSVs"""

    def test_load_sample_arms(self):
        arms = load_arms(Path(__file__).resolve().parent.parent / "data" / "sample_arms.csv")
        assert len(arms) == 3
        np.testing.assert_allclose(arms[2].true_mean, [0.5, 0.2])

    def test_load_arms_with_kind(self, tmp_path):
        path = tmp_path / "arms.csv"
        path.write_text("a,b,kind\n0.1,0.9,deterministic\n0.5,0.5,bernoulli\n")
        arms = load_arms(path)
        assert [arm.kind for arm in arms] == ["deterministic", "bernoulli"]

    def test_trace_csv(self, tmp_path):
        arms = [BanditArm(np.array([0.6, 0.4])), BanditArm(np.array([0.1, 0.1]))]
        result = run_experiment(arms, horizon=50, trials=2, seed=3)
        path = write_trace_csv(result, tmp_path / "trace.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == TRACE_SCHEMA_HEADER
        assert lines[1] == "trial,step,arm,reward_0,reward_1,in_front"
        assert len(lines) == 2 + 2 * 50

    def test_trace_csv_byte_identical(self, tmp_path):
        arms = [BanditArm(np.array([0.6, 0.4])), BanditArm(np.array([0.4, 0.6]))]
        first = write_trace_csv(run_experiment(arms, 200, 2, seed=8), tmp_path / "a.csv")
        second = write_trace_csv(run_experiment(arms, 200, 2, seed=8), tmp_path / "b.csv")
        assert first.read_bytes() == second.read_bytes()

    def test_checkpoint_table(self):
        arms = [BanditArm(np.array([0.6, 0.4])), BanditArm(np.array([0.1, 0.1]))]
        table = checkpoint_table(run_experiment(arms, 100, 2, seed=3))
        assert set(table["step"]) == {10, 100}
        assert table[table["step"] == 100]["mean_count"].sum() == pytest.approx(100)
        assert table[table["arm"] == 1]["optimal"].eq(0).all()
