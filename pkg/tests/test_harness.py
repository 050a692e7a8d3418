import numpy as np
import pytest

from robust3dcil.cloud import PointCloud
from robust3dcil.corruption import MixPolicy
from robust3dcil.dataset import CorruptionType, LabeledSample, tag_name
from robust3dcil.errors import InvalidConfigError, InvalidInputError, InvalidStateError
from robust3dcil.harness import (
    ClassifierState,
    build_scenario,
    evaluate,
    prepare_scenario,
    run_experiment,
    run_prepared,
    scenario_digest,
    train_task,
)
from robust3dcil.replay import BudgetConfig, ReplayBuffer
from robust3dcil.rng import derive_rng
from robust3dcil.selection import strategy_from_name


class VectorExtractor:
    """Deterministic toy extractor: first point's coordinates."""

    dim = 3

    def extract(self, cloud):
        return np.asarray(cloud.points[0], dtype=np.float64)


def toy_sample(label, source_id, vec, n=8):
    pts = np.tile(np.asarray(vec, dtype=np.float64), (n, 1))
    pts = pts + np.linspace(0.0, 1e-3, n)[:, None]
    return LabeledSample(cloud=PointCloud(pts), label=label, source_id=source_id)


@pytest.fixture(scope="module")
def small_scenario(tiny_dataset_module):
    manifest, samples = tiny_dataset_module
    return build_scenario(samples, 2, MixPolicy(), seed=4)


@pytest.fixture(scope="module")
def tiny_dataset_module():
    from robust3dcil.synthetic import gen_synthetic_dataset

    return gen_synthetic_dataset(4, 10, seed=5)


class TestBuildScenario:
    def test_even_split(self, synthetic_8x40):
        _, samples = synthetic_8x40
        scen = build_scenario(samples, 4, MixPolicy(), seed=1)
        assert [len(t) for t in scen.task_class_sets] == [2, 2, 2, 2]
        covered = sorted(c for task in scen.task_class_sets for c in task)
        assert covered == list(range(8))

    def test_uneven_split_gives_extras_to_early_tasks(self, synthetic_8x40):
        _, samples = synthetic_8x40
        scen = build_scenario(samples, 3, MixPolicy(), seed=1)
        assert [len(t) for t in scen.task_class_sets] == [3, 3, 2]

    def test_too_many_tasks_rejected(self, tiny_dataset_module):
        _, samples = tiny_dataset_module
        with pytest.raises(InvalidConfigError):
            build_scenario(samples, 5, MixPolicy(), seed=1)

    def test_test_pool_is_eightfold(self, small_scenario):
        # 4 classes x 10 samples, test fraction 0.2 -> 2 clean test clouds per class
        for task, pool in zip(small_scenario.task_class_sets, small_scenario.test_pools):
            assert len(pool) == 8 * 2 * len(task)

    def test_one_sample_per_tag_per_cloud(self, small_scenario):
        pool = small_scenario.cumulative_test_pool(small_scenario.num_tasks - 1)
        seen = {}
        for s in pool:
            seen.setdefault(s.source_id, []).append(tag_name(s.corruption))
        for tags in seen.values():
            assert sorted(tags) == sorted(["clean", "S", "R", "J", "AG", "AL", "DG", "DL"])

    def test_train_fraction_inside_mix_bounds(self, synthetic_8x40):
        _, samples = synthetic_8x40
        scen = build_scenario(samples, 4, MixPolicy(), seed=2)
        for task, pool in zip(scen.task_class_sets, scen.train_pools):
            for k in task:
                members = [s for s in pool if s.label == k]
                frac = sum(s.corruption is not None for s in members) / len(members)
                assert 0.5 <= frac <= 0.95

    def test_deterministic_payload(self, tiny_dataset_module):
        _, samples = tiny_dataset_module
        a = build_scenario(samples, 2, MixPolicy(), seed=9)
        b = build_scenario(samples, 2, MixPolicy(), seed=9)
        assert scenario_digest(a) == scenario_digest(b)
        c = build_scenario(samples, 2, MixPolicy(), seed=10)
        assert scenario_digest(a) != scenario_digest(c)

    def test_rejects_tagged_input(self, tiny_dataset_module):
        _, samples = tiny_dataset_module
        tagged = [samples[0].with_cloud(samples[0].cloud, CorruptionType.SCALE)] + samples[1:]
        with pytest.raises(InvalidInputError):
            build_scenario(tagged, 2, MixPolicy(), seed=1)

    def test_single_task_allowed(self, tiny_dataset_module):
        _, samples = tiny_dataset_module
        scen = build_scenario(samples, 1, MixPolicy(), seed=1)
        assert scen.num_tasks == 1
        assert len(scen.task_class_sets[0]) == 4


class TestTrainAndEvaluate:
    def test_new_prototypes_are_task_means(self):
        ext = VectorExtractor()
        samples = [
            toy_sample(0, "a", [0.0, 0.0, 0.0]),
            toy_sample(0, "b", [2.0, 0.0, 0.0]),
            toy_sample(1, "c", [0.0, 4.0, 0.0]),
        ]
        state = ClassifierState()
        feats = np.array([ext.extract(s.cloud) for s in samples])
        train_task(state, None, samples, ext, strategy_from_name("random"), derive_rng(0, "t"))
        np.testing.assert_array_equal(state.prototypes[0], feats[:2].mean(axis=0))
        np.testing.assert_array_equal(state.prototypes[1], feats[2])

    def test_old_prototypes_rebuilt_from_buffer(self):
        ext = VectorExtractor()
        budget = BudgetConfig(M=16, alpha=0.0, r=1, n=8)
        buffer = ReplayBuffer(budget, ext)
        state = ClassifierState()
        task1 = [toy_sample(0, "a", [0.0, 0, 0]), toy_sample(0, "b", [2.0, 0, 0]),
                 toy_sample(0, "c", [9.0, 0, 0])]
        train_task(state, buffer, task1, ext, strategy_from_name("herding"), derive_rng(1, "t"))
        task2 = [toy_sample(1, "d", [0.0, 5, 0]), toy_sample(1, "e", [0.0, 7, 0])]
        train_task(state, buffer, task2, ext, strategy_from_name("herding"), derive_rng(2, "t"))
        stored = np.array([e.feature for e in buffer.entries(0)])
        np.testing.assert_array_equal(state.prototypes[0], stored.mean(axis=0))

    def test_overlapping_classes_rejected(self):
        ext = VectorExtractor()
        state = ClassifierState()
        samples = [toy_sample(0, "a", [0.0, 0, 0])]
        train_task(state, None, samples, ext, strategy_from_name("random"), derive_rng(0, "t"))
        with pytest.raises(InvalidStateError):
            train_task(state, None, samples, ext, strategy_from_name("random"), derive_rng(0, "t"))

    def test_evaluate_single_class_is_perfect(self):
        ext = VectorExtractor()
        state = ClassifierState()
        state.prototypes[3] = np.array([1.0, 1.0, 1.0])
        pool = [toy_sample(3, "x", [0.9, 1.0, 1.1])]
        result = evaluate(state, pool, ext)
        assert result.overall_accuracy == 1.0

    def test_evaluate_hand_counted(self):
        """3 prototypes, 6 samples, 4 land nearest their own prototype."""
        ext = VectorExtractor()
        state = ClassifierState()
        state.prototypes = {
            0: np.array([0.0, 0.0, 0.0]),
            1: np.array([10.0, 0.0, 0.0]),
            2: np.array([0.0, 10.0, 0.0]),
        }
        pool = [
            toy_sample(0, "a", [1.0, 0, 0]),       # -> 0 correct
            toy_sample(0, "b", [9.0, 0, 0]),       # -> 1 wrong
            toy_sample(1, "c", [8.0, 0, 0]),       # -> 1 correct
            toy_sample(1, "d", [5.5, 0, 0]),       # -> 1 correct (5.5 vs 4.5)
            toy_sample(2, "e", [0.0, 9.0, 0]),     # -> 2 correct
            toy_sample(2, "f", [0.0, 4.0, 0]),     # -> 0 wrong (4 vs 6)
        ]
        result = evaluate(state, pool, ext)
        np.testing.assert_allclose(result.overall_accuracy, 4 / 6)

    def test_tie_breaks_to_lowest_class_id(self):
        ext = VectorExtractor()
        state = ClassifierState()
        state.prototypes = {0: np.array([1.0, 0, 0]), 1: np.array([-1.0, 0, 0])}
        result = evaluate(state, [toy_sample(0, "t", [0.0, 0, 0])], ext)
        assert result.overall_accuracy == 1.0  # equidistant, resolves to class 0

    def test_per_tag_weighted_mean_equals_oa(self, small_scenario, extractor):
        prep = prepare_scenario(small_scenario, extractor)
        res = run_prepared(prep, BudgetConfig(M=4 * 1024), strategy_from_name("farthest"), extractor)
        tag_stats = res.final_per_tag
        total = sum(count for _, count in tag_stats.values())
        weighted = sum(acc * count for acc, count in tag_stats.values()) / total
        assert abs(weighted - res.per_task_oa[-1]) <= 1e-9

    def test_tag_blindness(self, small_scenario, extractor):
        """Permuting corruption tags changes reporting but not accuracy."""
        prep = prepare_scenario(small_scenario, extractor)
        state = ClassifierState()
        train_task(
            state, None, list(small_scenario.train_pools[0]), extractor,
            strategy_from_name("random"), derive_rng(0, "t"),
            features=prep.train_features[0],
        )
        pool = list(small_scenario.test_pools[0])
        feats = prep.test_features[0]
        base = evaluate(state, pool, extractor, features=feats)
        rng = np.random.default_rng(0)
        tags = [s.corruption for s in pool]
        rng.shuffle(tags)
        permuted = [s.with_cloud(s.cloud, t) for s, t in zip(pool, tags)]
        shuffled = evaluate(state, permuted, extractor, features=feats)
        assert shuffled.overall_accuracy == base.overall_accuracy
        assert shuffled.per_tag != base.per_tag

    def test_evaluate_validation(self):
        ext = VectorExtractor()
        state = ClassifierState()
        with pytest.raises(InvalidStateError):
            evaluate(state, [toy_sample(0, "x", [0, 0, 0])], ext)
        state.prototypes[0] = np.zeros(3)
        with pytest.raises(InvalidInputError):
            evaluate(state, [], ext)
        with pytest.raises(InvalidInputError):
            evaluate(state, [toy_sample(5, "y", [0, 0, 0])], ext)


class TestRunExperiment:
    def test_single_task_average_equals_task_oa(self, tiny_dataset_module, extractor):
        _, samples = tiny_dataset_module
        res = run_experiment(
            samples, 1, MixPolicy(), BudgetConfig(M=4 * 1024),
            strategy_from_name("farthest"), extractor, seed=3,
        )
        assert res.average_oa == res.per_task_oa[0]
        # default budget (alpha=0.5, r=2): floor(4096*2 / (1024*1.5)) = 5
        assert res.capacity == 5

    def test_cumulative_pool_grows(self, small_scenario, extractor):
        prep = prepare_scenario(small_scenario, extractor)
        res = run_prepared(prep, BudgetConfig(M=4 * 1024), strategy_from_name("farthest"), extractor)
        assert res.seen_classes_per_task == [2, 4]
        assert len(res.task_set_accuracy[1]) == 2

    def test_no_replay_mode_runs(self, small_scenario, extractor):
        prep = prepare_scenario(small_scenario, extractor)
        res = run_prepared(prep, None, strategy_from_name("farthest"), extractor)
        assert res.capacity is None
        assert len(res.per_task_oa) == 2

    def test_downsampling_changes_old_prototypes(self, small_scenario, extractor):
        """alpha > 0 shifts stored features, hence final metrics may move,
        while both runs stay budget-safe."""
        prep = prepare_scenario(small_scenario, extractor)
        flat = run_prepared(prep, BudgetConfig(M=4 * 1024, alpha=0.0, r=1),
                            strategy_from_name("herding"), extractor)
        down = run_prepared(prep, BudgetConfig(M=4 * 1024, alpha=0.5, r=2),
                            strategy_from_name("herding"), extractor)
        assert down.capacity == 5 and flat.capacity == 4
        assert len(flat.per_task_oa) == len(down.per_task_oa) == 2

    def test_deterministic_end_to_end(self, tiny_dataset_module, extractor):
        _, samples = tiny_dataset_module
        runs = [
            run_experiment(
                samples, 2, MixPolicy(), BudgetConfig(M=4 * 1024),
                strategy_from_name("farthest"), extractor, seed=8,
            )
            for _ in range(2)
        ]
        assert runs[0].per_task_oa == runs[1].per_task_oa
        assert runs[0].final_per_tag == runs[1].final_per_tag

    def test_joint_training_bounds_incremental(self, tiny_dataset_module, extractor):
        """A single task holding all classes scores at least as well as the
        incremental run's final accuracy in most seed families."""
        _, samples = tiny_dataset_module
        wins = 0
        for seed in (1, 2, 3):
            joint = run_experiment(
                samples, 1, MixPolicy(), BudgetConfig(M=4 * 1024),
                strategy_from_name("farthest"), extractor, seed=seed,
            )
            incremental = run_experiment(
                samples, 2, MixPolicy(), BudgetConfig(M=4 * 1024),
                strategy_from_name("farthest"), extractor, seed=seed,
            )
            wins += joint.per_task_oa[-1] >= incremental.per_task_oa[-1]
        assert wins >= 2

    def test_thread_env_does_not_change_results(self, tiny_dataset_module, extractor, monkeypatch):
        _, samples = tiny_dataset_module
        def run():
            return run_experiment(
                samples, 2, MixPolicy(), BudgetConfig(M=4 * 1024),
                strategy_from_name("farthest"), extractor, seed=8,
            )
        monkeypatch.setenv("ROBUST3DCIL_THREADS", "1")
        serial = run()
        monkeypatch.setenv("ROBUST3DCIL_THREADS", "4")
        threaded = run()
        assert serial.per_task_oa == threaded.per_task_oa
        assert serial.final_per_tag == threaded.final_per_tag
