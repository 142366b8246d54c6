"""Tests for problem generators, losses, Adam and the training loop."""

import json
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from weno_ds import autodiff as ad
from weno_ds.deep_smoothness import SmoothnessModel, default_architecture, init_model, load_params
from weno_ds.errors import ProblemSpecError
from weno_ds.problems import BL_A_RANGE, BURGERS_Z_RANGES, BurgersIC, ProblemFamily, parse_problem
from weno_ds.reference_oracles import exact_solution
from weno_ds.semidiscrete import semidiscrete_rhs, wave_speeds
from weno_ds.time_integration import rk3_step
from weno_ds.training import (
    EULER_DRAW_RANGES,
    AdamState,
    LossKind,
    ProblemSample,
    TRAINING_PROTOCOLS,
    TrainerState,
    TrainingCycleLog,
    TrainingOptions,
    adam_update,
    euler_states_from_draws,
    gen_bl_sample,
    gen_burgers_sample,
    gen_euler_sample,
    generate_dataset,
    loss_euler,
    loss_mse,
    loss_overflow,
    problem_loss,
    select_model,
    train,
    training_cycle,
    training_reference,
)
from weno_ds.weno_kernel import SchemeConfig, Weighting


class TestGenerators:
    def test_bl_range(self):
        rng = np.random.default_rng(0)
        values = [gen_bl_sample(rng).params["a"] for _ in range(200)]
        assert min(values) >= 0.05 and max(values) < 0.95

    def test_burgers_ranges(self):
        rng = np.random.default_rng(1)
        seen = set()
        for _ in range(300):
            sample = gen_burgers_sample(rng)
            ic = BurgersIC(sample.params["ic"])
            lo, hi = BURGERS_Z_RANGES[ic]
            assert lo <= sample.params["z"] < hi
            seen.add(ic)
        assert seen == set(BurgersIC)

    def test_euler_draw_examples(self):
        left, right = euler_states_from_draws(0, {"a": 2.0, "b": 0.0, "c": 5.0, "d": 0.0, "e": 0.5})
        assert left == (2.0, 0.5, 2.0)
        assert right == (0.2, 0.0, 0.2)
        left, right = euler_states_from_draws(1, {"k": 2.0, "l": 0.0, "r": 0.3})
        assert left == (2.0, 0.3, 1.0)
        assert right == (0.2, 0.0, 0.1)
        with pytest.raises(ValueError):
            euler_states_from_draws(2, {})

    def test_euler_samples_are_physical(self):
        rng = np.random.default_rng(2)
        branches = set()
        for _ in range(100):
            sample = gen_euler_sample(rng)
            branches.add(sample.params["branch"])
            problem = sample.to_problem()
            assert problem.left.rho > 0 and problem.left.p > 0
            assert problem.right.rho > 0 and problem.right.p > 0
            assert problem.right.u == 0.0
        assert branches == {0, 1}

    def test_dataset_is_reproducible(self):
        first = generate_dataset("burgers", 5, seed=42)
        second = generate_dataset(ProblemFamily.BURGERS, 5, seed=42)
        assert [s.to_dict() for s in first] == [s.to_dict() for s in second]
        assert len({s.seed for s in first}) == 5

    def test_sample_regenerates_from_its_seed(self):
        sample = generate_dataset("bl", 3, seed=7)[1]
        again = gen_bl_sample(np.random.default_rng(sample.seed))
        assert again.params == sample.params

    def test_sample_dict_round_trip(self):
        sample = generate_dataset("euler", 1, seed=3)[0]
        data = json.loads(json.dumps(sample.to_dict()))
        restored = ProblemSample.from_dict(data)
        assert restored.to_problem().left == sample.to_problem().left
        assert restored.seed == sample.seed

    def test_no_generator_for_transport(self):
        with pytest.raises(ProblemSpecError):
            generate_dataset("transport", 2, seed=0)
        with pytest.raises(ProblemSpecError):
            ProblemSample(ProblemFamily.TRANSPORT, {}).to_problem()


N_DRAWS = 100_000
MIN_P_VALUE = 0.01


def _uniform_p_value(values, lo, hi):
    return stats.kstest(np.asarray(values), "uniform", args=(lo, hi - lo)).pvalue


@pytest.fixture(scope="module")
def euler_samples():
    rng = np.random.default_rng(2024)
    return [gen_euler_sample(rng) for _ in range(N_DRAWS)]


class TestGeneratorDistributions:
    """Marginals of every generator over 10^5 draws."""

    def test_bl_mobility_ratio_is_uniform(self):
        rng = np.random.default_rng(11)
        values = np.array([gen_bl_sample(rng).params["a"] for _ in range(N_DRAWS)])
        assert values.min() >= BL_A_RANGE[0] and values.max() < BL_A_RANGE[1]
        assert _uniform_p_value(values, *BL_A_RANGE) > MIN_P_VALUE

    def test_burgers_family_and_height_are_uniform(self):
        rng = np.random.default_rng(12)
        samples = [gen_burgers_sample(rng).params for _ in range(N_DRAWS)]
        by_ic = {ic: [] for ic in BurgersIC}
        for params in samples:
            by_ic[BurgersIC(params["ic"])].append(params["z"])
        counts = [len(by_ic[ic]) for ic in BurgersIC]
        assert stats.chisquare(counts).pvalue > MIN_P_VALUE
        for ic, values in by_ic.items():
            lo, hi = BURGERS_Z_RANGES[ic]
            assert min(values) >= lo and max(values) < hi
            assert _uniform_p_value(values, lo, hi) > MIN_P_VALUE

    def test_euler_branches_are_balanced(self, euler_samples):
        counts = np.bincount([s.params["branch"] for s in euler_samples], minlength=2)
        assert counts.sum() == N_DRAWS
        assert stats.chisquare(counts).pvalue > MIN_P_VALUE

    @pytest.mark.parametrize("branch,name", [(0, "a"), (0, "b"), (0, "c"), (0, "d"), (0, "e"),
                                             (1, "k"), (1, "l"), (1, "r")])
    def test_euler_draws_are_uniform(self, euler_samples, branch, name):
        lo, hi = EULER_DRAW_RANGES[branch][name]
        values = np.array([s.params["draws"][name] for s in euler_samples
                           if s.params["branch"] == branch])
        assert values.min() >= lo and values.max() < hi
        assert _uniform_p_value(values, lo, hi) > MIN_P_VALUE

    def test_euler_states_follow_their_draws(self, euler_samples):
        for sample in euler_samples:
            left, right = euler_states_from_draws(sample.params["branch"], sample.params["draws"])
            assert list(left) == sample.params["left"]
            assert list(right) == sample.params["right"]
            assert right[1] == 0.0
            if sample.params["branch"] == 0:
                assert 0.45 <= left[0] == left[2] <= 10.05
                assert 0.1 < right[2] <= 0.2
            else:
                assert 1.0 <= left[0] <= 3.0 and left[2] == 1.0 and right[2] == 0.1


class TestLosses:
    def test_mse(self):
        assert loss_mse(np.array([1.0, 2.0]), np.array([0.0, 0.0])) == pytest.approx(2.5)

    def test_overflow(self):
        assert loss_overflow(np.array([-0.1, 0.5, 1.2])) == pytest.approx(0.3)
        assert loss_overflow(np.array([0.0, 1.0])) == 0.0

    def test_euler_loss_sums_components(self):
        ref = (np.ones(3), np.zeros(3), np.ones(3))
        got = (np.full(3, 2.0), np.full(3, 1.0), np.full(3, 1.0))
        assert loss_euler(got, ref) == pytest.approx(2.0)

    def test_problem_loss_adds_overflow_for_bl(self):
        problem = parse_problem("bl")
        values = np.array([1.1, 0.5])
        target = np.array([1.0, 0.5])
        plain = problem_loss(LossKind.MSE, values, target, problem)
        assert plain == pytest.approx(0.005)
        assert problem_loss(LossKind.MSE_OVERFLOW, values, target, problem) == pytest.approx(0.105)

    def test_mse_gradient(self):
        tape = ad.Tape()
        u = tape.variable(np.array([1.0, 3.0]))
        (grad,) = tape.backward(loss_mse(u, np.array([0.0, 1.0])), [u])
        np.testing.assert_allclose(grad, [1.0, 2.0])


class TestAdam:
    def test_first_step_moves_by_learning_rate(self):
        state = AdamState.for_params([np.array([1.0, -1.0])], lr=0.1)
        (updated,) = adam_update([np.array([1.0, -1.0])], [np.array([0.5, -2.0])], state)
        np.testing.assert_allclose(updated, [0.9, -0.9], rtol=1e-7)
        assert state.step == 1

    def test_zero_gradient_keeps_parameters(self):
        params = [np.array([0.3])]
        state = AdamState.for_params(params, lr=0.01)
        for _ in range(3):
            params = adam_update(params, [np.zeros(1)], state)
        np.testing.assert_array_equal(params[0], [0.3])

    def test_copy_is_independent(self):
        state = AdamState.for_params([np.zeros(2)], lr=0.1)
        snapshot = state.copy()
        adam_update([np.zeros(2)], [np.ones(2)], state)
        assert snapshot.step == 0
        np.testing.assert_array_equal(snapshot.m[0], 0.0)

    def test_length_mismatch(self):
        state = AdamState.for_params([np.zeros(2)], lr=0.1)
        with pytest.raises(ValueError):
            adam_update([np.zeros(2), np.zeros(2)], [np.zeros(2)], state)


class TestOptions:
    def test_presets(self):
        assert TRAINING_PROTOCOLS["bl"].loss is LossKind.MSE_OVERFLOW
        assert TRAINING_PROTOCOLS["burgers"].runs == 3
        assert TRAINING_PROTOCOLS["euler"].n_steps is None
        for protocol in TRAINING_PROTOCOLS.values():
            if protocol.n_steps is not None:
                assert protocol.reference_steps % protocol.n_steps == 0

    def test_overrides(self):
        protocol = TrainingOptions("burgers", cycles=4, lr=0.5, n_intervals=32).resolve()
        assert (protocol.cycles, protocol.lr, protocol.n_intervals) == (4, 0.5, 32)
        assert protocol.n_steps == 100

    def test_rejects_unknown_protocol(self):
        with pytest.raises(ProblemSpecError):
            TrainingOptions("heat").resolve()
        with pytest.raises(ProblemSpecError):
            TrainingOptions("bl", cycles=0).resolve()

    def test_misaligned_reference_steps(self):
        protocol = replace(TRAINING_PROTOCOLS["burgers"], reference_steps=150)
        problem = parse_problem("burgers")
        with pytest.raises(ValueError):
            training_reference(problem, protocol, problem.make_grid(128))


class TestModelSelection:
    def _log(self, cycle, loss, aborted=False):
        return TrainingCycleLog(run=0, cycle=cycle, sample={}, validation_loss=loss,
                                aborted=aborted, checkpoint=f"cycle_{cycle}.json")

    def test_lowest_validation_wins(self):
        logs = [self._log(1, 0.5), self._log(2, 0.2), self._log(3, 0.3)]
        assert select_model(logs).cycle == 2

    def test_ties_go_to_earliest(self):
        logs = [self._log(1, 0.4), self._log(2, 0.2), self._log(3, 0.2)]
        assert select_model(logs).cycle == 2

    def test_skips_aborted_and_infinite(self):
        logs = [self._log(1, 0.1, aborted=True), self._log(2, float("inf")), self._log(3, 0.9)]
        assert select_model(logs).cycle == 3

    def test_no_usable_cycle(self):
        with pytest.raises(ValueError):
            select_model([self._log(1, float("inf"))])

    def test_record_is_json_safe(self):
        log = self._log(1, float("inf"))
        log.step_losses = [0.1, 0.05]
        record = json.loads(json.dumps(log.to_record()))
        assert record["validation_loss"] is None
        assert record["steps"] == 2
        assert record["step_loss"]["last"] == 0.05


def _tiny_model(seed=0):
    return init_model(default_architecture((2, 3, 1), (3, 3)), np.random.default_rng(seed))


def _perturbed(model, directions, h):
    split = len(model.positive.params)
    params = model.positive.params + model.negative.params
    moved = [p + h * d for p, d in zip(params, directions)]
    return SmoothnessModel(model.positive.with_params(moved[:split]),
                           model.negative.with_params(moved[split:]), model.C)


def _one_step_case(spec):
    problem = parse_problem(spec)
    if problem.family is ProblemFamily.EULER:
        grid = problem.make_grid(16)
        state = problem.initial_values(grid)
        dt = 0.01
        target = exact_solution(problem, grid.nodes(problem.boundary), dt)
        return problem, grid, state, dt, target, LossKind.EULER
    grid = problem.make_grid(16)
    state = problem.initial_values(grid)
    target = state + 0.01 * np.random.default_rng(9).normal(size=state.shape)
    return problem, grid, state, 0.01, target, LossKind.MSE


@pytest.mark.parametrize("spec", ["burgers:ic=sine,z=1.5", "bl:a=0.5", "euler:preset=sod"])
def test_step_gradient_matches_directional_difference(spec):
    problem, grid, state, dt, target, kind = _one_step_case(spec)
    model = _tiny_model()
    cfg = SchemeConfig(Weighting.DS, C=model.C)
    alpha = wave_speeds(state, problem)

    def loss_of(source):
        rhs = lambda v: semidiscrete_rhs(v, problem, grid.dx, cfg, source, alpha)
        return problem_loss(kind, rk3_step(state, dt, rhs), target, problem)

    tape = ad.Tape()
    bound, positive_vars, negative_vars = model.bind(tape)
    grads = tape.backward(loss_of(bound), positive_vars + negative_vars)

    rng = np.random.default_rng(11)
    directions = [rng.normal(size=p.shape) for p in model.positive.params + model.negative.params]
    analytic = sum(float(np.sum(g * d)) for g, d in zip(grads, directions))
    h = 1e-5
    numeric = (float(loss_of(_perturbed(model, directions, h)))
               - float(loss_of(_perturbed(model, directions, -h)))) / (2 * h)
    assert analytic != 0.0
    assert abs(analytic - numeric) <= 1e-4 * abs(analytic)


class TestTrainingCycle:
    def _trainer(self, model):
        return TrainerState(model, AdamState.for_params(model.positive.params, 1e-3),
                            AdamState.for_params(model.negative.params, 1e-3))

    def test_euler_cycle_updates_parameters(self):
        protocol = replace(TRAINING_PROTOCOLS["euler"], n_intervals=16, final_time=0.02,
                           channels=(2, 3, 1), kernels=(3, 3))
        model = _tiny_model(1)
        before = [p.copy() for p in model.positive.params]
        trainer = self._trainer(model)
        sample = gen_euler_sample(np.random.default_rng(4), branch=1)
        log = training_cycle(trainer, sample, protocol)
        assert not log.aborted
        assert len(log.step_losses) >= 1
        assert np.isfinite(log.validation_loss)
        assert set(log.component_losses["euler:preset=sod"]) == {"rho", "u", "p"}
        assert trainer.adam_positive.step == len(log.step_losses)
        assert any(not np.array_equal(a, b) for a, b in zip(before, trainer.model.positive.params))

    def test_family_mismatch(self):
        trainer = self._trainer(_tiny_model())
        sample = gen_bl_sample(np.random.default_rng(0))
        with pytest.raises(ProblemSpecError):
            training_cycle(trainer, sample, TRAINING_PROTOCOLS["burgers"])


def _tiny_options(tmp_path, name):
    return TrainingOptions("burgers", seed=5, cycles=2, runs=1, n_intervals=16, n_steps=10,
                           reference_intervals=32, reference_steps=20,
                           output_dir=tmp_path / name, cache_dir=tmp_path / "cache")


@pytest.mark.slow
def test_train_writes_log_checkpoints_and_best_model(tmp_path):
    seen = []
    result = train(_tiny_options(tmp_path, "first"), on_cycle=seen.append)
    assert len(result.logs) == 2 and len(seen) == 2
    assert result.model_path.exists()
    lines = result.log_path.read_text().splitlines()
    assert json.loads(lines[0])["event"] == "start"
    assert json.loads(lines[-1])["event"] == "selected"
    assert len(lines) == 4
    best = load_params(result.model_path)
    assert best.metadata["cycle"] == result.best.cycle
    assert best.metadata["protocol"] == "burgers"

    again = train(_tiny_options(tmp_path, "second"))
    assert again.model_path.read_bytes() == result.model_path.read_bytes()
