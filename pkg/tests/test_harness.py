import math

import numpy as np
import pytest

from raytuner.classify import ClassificationResult, RayClassifier
from raytuner.exceptions import ConfigurationError, ContractError, DataError
from raytuner.fingerprint import apply_weight
from raytuner.harness import (
    RunTrace,
    campaign_starts,
    class_quotas,
    data_reduction,
    gen_dataset,
    make_campaign,
    reduction_table,
    reference_campaign,
    reference_sampler_space,
    start_points,
    sweep_cells,
    tune_sweep,
)
from raytuner.harness import seeds
from raytuner.harness.campaign import campaign_rows, campaign_state_map, space_state_map, state_map_rows
from raytuner.harness.io import (
    load_diagram,
    load_diagrams,
    load_document,
    load_projection,
    load_records,
    read_csv,
    save_diagram,
    save_projection,
    save_records,
    save_stack,
    write_csv,
)
from raytuner.harness.sweep import SWEEP_HEADER, SweepCell, SweepRow, write_sweep_csv
from raytuner.ml import EvalReport, init_model
from raytuner.rays import MProjection
from raytuner.schema import DeviceState, FitnessConfig, ModelDocument, RayConfig, SimplexConfig, SweepSpec, WeightFn
from raytuner.sigproc import CriticalFeatureVector
from raytuner.sim import DiagramStack, StabilityDiagram
from raytuner.tune import initial_simplex

CFG = RayConfig(m=4, l_px=20, px_mv=0.5)
FAR = FitnessConfig(pinch_offs=(-1000.0, -1000.0))


def block_diagram(size: int = 200, vb: float = 0.0) -> StabilityDiagram:
    """Zero signal; double-dot labels on [80, 120) x [80, 120)."""
    labels = np.zeros((size, size), dtype=np.int8)
    labels[80:120, 80:120] = int(DeviceState.DD)
    axis = np.arange(size, dtype=float)
    return StabilityDiagram(
        v1_axis=axis,
        v2_axis=axis,
        resolution=1.0,
        vb=vb,
        signal=np.linspace(0.0, 1.0, size * size).reshape(size, size),
        labels=labels,
        device_seed=3,
        noise_seed=4,
    )


class ConstantClassifier(RayClassifier):
    """Reports a double dot everywhere, or gates everything."""

    def __init__(self, gated: bool = False) -> None:
        super().__init__(init_model(4, seed=0), CFG, WeightFn.INV, check_quality=False)
        self.gated = gated

    def classify(self, proj: MProjection) -> ClassificationResult:
        return ClassificationResult(
            projection=proj,
            features=CriticalFeatureVector(values=(None,) * 4, l_px=20),
            fingerprint=apply_weight((None,) * 4, WeightFn.INV, 20),
            passed_quality=not self.gated,
            probabilities=None if self.gated else np.array([0.0, 0.0, 0.0, 0.0, 1.0]),
        )


class TestSeeds:
    def test_deterministic(self) -> None:
        assert seeds.derive_seed(1, seeds.DEVICE, 2) == seeds.derive_seed(1, seeds.DEVICE, 2)

    def test_streams_are_independent(self) -> None:
        values = {
            seeds.derive_seed(1, seeds.DEVICE, 0),
            seeds.derive_seed(1, seeds.NOISE, 0),
            seeds.derive_seed(1, seeds.DEVICE, 1),
            seeds.derive_seed(2, seeds.DEVICE, 0),
        }
        assert len(values) == 4

    def test_generator(self) -> None:
        a = seeds.generator(5, seeds.STARTS).random(3)
        b = seeds.generator(5, seeds.STARTS).random(3)
        np.testing.assert_array_equal(a, b)


class TestDataReduction:
    @pytest.mark.parametrize(
        "m,l_px,expected",
        [
            (5, 24, 87),
            (6, 24, 84),
            (7, 24, 81),
            (9, 24, 76),
            (12, 24, 68),
            (5, 44, 76),
            (6, 44, 71),
            (7, 44, 66),
            (9, 44, 56),
            (12, 44, 41),
            (6, 60, 60),
        ],
    )
    def test_values(self, m: int, l_px: int, expected: int) -> None:
        assert data_reduction(m, l_px) == expected

    def test_full_image(self) -> None:
        assert data_reduction(9, 100) == 0

    def test_invalid(self) -> None:
        with pytest.raises(ContractError):
            data_reduction(0, 24)
        with pytest.raises(ContractError):
            data_reduction(6, -1)

    def test_table(self) -> None:
        report = reduction_table([5, 12], [24, 44])
        assert len(report.rows) == 4
        assert report.lookup(12, 44) == 41
        assert report.to_rows()[0] == (5, 24, 120, 900, 87)
        with pytest.raises(KeyError):
            report.lookup(6, 24)


class TestSweepCells:
    def test_order(self) -> None:
        spec = SweepSpec(ray_counts=[6, 5], ray_lengths_px=[40, 20], weights=[WeightFn.HAT, WeightFn.INV])
        cells = sweep_cells(spec)
        assert len(cells) == 8
        assert cells[0] == SweepCell(5, 20, WeightFn.INV)
        assert cells[1] == SweepCell(5, 20, WeightFn.HAT)
        assert cells[-1] == SweepCell(6, 40, WeightFn.HAT)

    def test_csv(self, tmp_path) -> None:
        report = EvalReport(accuracies=[0.9, 0.8], mean=0.85, std=0.07, confusion=np.zeros((5, 5), dtype=np.int64))
        row = SweepRow(SweepCell(6, 60, WeightFn.INV), 30.0, 360, 60, report, 100, 50)
        path = write_sweep_csv([row], tmp_path / "sweep.csv")
        rows = read_csv(path)
        assert list(rows[0]) == SWEEP_HEADER
        assert rows[0]["weight"] == "inv"
        assert rows[0]["reduction"] == "60"
        assert float(rows[0]["mean_accuracy"]) == 0.85


class TestDataset:
    def test_class_quotas(self) -> None:
        assert class_quotas(10) == [2, 2, 2, 2, 2]
        assert class_quotas(7) == [2, 2, 1, 1, 1]

    def test_balanced_and_labeled(self) -> None:
        records = gen_dataset(1, 10, RayConfig(), WeightFn.INV, seed=0)
        assert len(records) == 10
        assert [int(r.label) for r in records] == [0, 0, 1, 1, 2, 2, 3, 3, 4, 4]
        assert all(len(r.values) == 6 and r.origin_mv is not None for r in records)

    def test_deterministic(self) -> None:
        a = gen_dataset(1, 5, RayConfig(), WeightFn.INV, seed=2)
        b = gen_dataset(1, 5, RayConfig(), WeightFn.INV, seed=2)
        assert a == b

    def test_origins_shared_across_weights(self) -> None:
        a = gen_dataset(1, 5, RayConfig(), WeightFn.INV, seed=2)
        b = gen_dataset(1, 5, RayConfig(), WeightFn.HAT, seed=2)
        assert [r.origin_mv for r in a] == [r.origin_mv for r in b]

    def test_saved(self, tmp_path) -> None:
        path = tmp_path / "data.jsonl"
        records = gen_dataset(1, 5, RayConfig(), WeightFn.INV, seed=0, path=path)
        assert load_records(path) == records

    def test_too_small(self) -> None:
        with pytest.raises(ContractError):
            gen_dataset(1, 4, RayConfig(), WeightFn.INV, seed=0)
        with pytest.raises(ContractError):
            gen_dataset(0, 10, RayConfig(), WeightFn.INV, seed=0)


class TestIO:
    def test_diagram_round_trip(self, tmp_path) -> None:
        d = block_diagram(50)
        back = load_diagram(save_diagram(d, tmp_path / "d.json"))
        np.testing.assert_allclose(back.signal, d.signal)
        np.testing.assert_array_equal(back.labels, d.labels)
        np.testing.assert_allclose(back.v1_axis, d.v1_axis)
        assert (back.device_seed, back.noise_seed) == (3, 4)

    def test_stack_round_trip(self, tmp_path) -> None:
        stack = DiagramStack((block_diagram(50, 0.0), block_diagram(50, 10.0)))
        path = save_stack(stack, tmp_path / "s.json")
        loaded = load_diagrams(path)
        assert isinstance(loaded, DiagramStack)
        assert loaded.vbs.tolist() == [0.0, 10.0]
        with pytest.raises(DataError):
            load_diagram(path)

    def test_projection_round_trip(self, tmp_path) -> None:
        samples = np.arange(80, dtype=float).reshape(4, 20)
        proj = MProjection(origin=(1.0, 2.0, 3.0), config=CFG, samples=samples)
        back = load_projection(save_projection(proj, tmp_path / "p.json"))
        assert back.origin == (1.0, 2.0, 3.0)
        assert back.config == CFG
        np.testing.assert_array_equal(back.samples, samples)

    def test_missing_file(self, tmp_path) -> None:
        with pytest.raises(DataError, match="not found"):
            load_document(ModelDocument, tmp_path / "none.json")

    def test_invalid_document(self, tmp_path) -> None:
        path = tmp_path / "bad.json"
        path.write_text('{"signal": 1}')
        with pytest.raises(DataError):
            load_diagrams(path)

    def test_bad_record_line(self, tmp_path) -> None:
        path = tmp_path / "data.jsonl"
        path.write_text('{"m": 3}\n')
        with pytest.raises(DataError, match=":1:"):
            load_records(path)

    def test_records_skip_blank_lines(self, tmp_path) -> None:
        records = gen_dataset(1, 5, CFG, WeightFn.INV, seed=0)
        path = save_records(records, tmp_path / "data.jsonl")
        path.write_text(path.read_text() + "\n\n")
        assert len(load_records(path)) == 5

    def test_csv_cells(self, tmp_path) -> None:
        path = write_csv(tmp_path / "t.csv", ["a", "b", "c", "d"], [[None, True, 0.25, "x"]])
        assert read_csv(path) == [{"a": "", "b": "true", "c": "0.25", "d": "x"}]


class TestTrace:
    def test_disabled(self, tmp_path) -> None:
        trace = RunTrace()
        trace.add_step("a", 1)
        assert trace.steps == []
        assert trace.save_json(tmp_path / "t.json") is None

    def test_enabled(self, tmp_path) -> None:
        trace = RunTrace(enabled=True, label="sweep")
        trace.add_step("a", 3)
        trace.add_step("b")
        data = trace.to_dict()
        assert [s["name"] for s in data["steps"]] == ["a", "b"]
        assert data["steps"][0]["count"] == 3
        assert trace.save_json(tmp_path / "t.json").exists()


class TestStartPoints:
    def test_square_grid(self) -> None:
        pts = start_points(9, (100.0, 50.0), 40.0)
        assert pts.shape == (9, 2)
        assert sorted(set(pts[:, 0])) == [80.0, 100.0, 120.0]
        assert sorted(set(pts[:, 1])) == [30.0, 50.0, 70.0]

    def test_random_draws(self) -> None:
        pts = start_points(10, (0.0, 0.0), 40.0, seed=1)
        assert pts.shape == (10, 2)
        assert np.all(np.abs(pts) <= 20.0)
        np.testing.assert_array_equal(pts, start_points(10, (0.0, 0.0), 40.0, seed=1))

    def test_barrier_column(self) -> None:
        pts = start_points(4, (0.0, 0.0), 10.0, vb=75.0)
        assert pts.shape == (4, 3)
        assert np.all(pts[:, 2] == 75.0)

    def test_single_start(self) -> None:
        np.testing.assert_array_equal(start_points(1, (3.0, 4.0), 10.0), [[3.0, 4.0]])

    def test_invalid(self) -> None:
        with pytest.raises(ConfigurationError):
            start_points(0, (0.0, 0.0), 10.0)
        with pytest.raises(ConfigurationError):
            start_points(4, (0.0, 0.0), 0.0)


@pytest.fixture(scope="class")
def campaign():
    return make_campaign(block_diagram(), CFG, FAR)


class TestCampaign:
    def test_region(self, campaign) -> None:
        assert campaign.dims == 2
        assert campaign.region.contains((100.0, 100.0))
        assert not campaign.region.contains((50.0, 50.0))
        assert campaign.near_region is not None
        assert campaign.near_region.contains((75.0, 100.0))
        np.testing.assert_allclose(campaign.center(), [99.5, 99.5])

    def test_sweep_scores_runs(self, campaign) -> None:
        starts = campaign_starts(campaign, 9, 50.0)
        result = tune_sweep(ConstantClassifier(), campaign, starts, max_workers=2)
        assert len(result.results) == 9
        for x0, r in zip(starts, result.results):
            np.testing.assert_array_equal(r.start, x0)
            np.testing.assert_array_equal(r.final_point, x0)
        assert result.report.rate == pytest.approx(1 / 9)
        assert result.report.near_miss_rate == pytest.approx(8 / 9)

    def test_workers_do_not_change_results(self, campaign) -> None:
        starts = campaign_starts(campaign, 4, 50.0)
        serial = tune_sweep(ConstantClassifier(), campaign, starts, max_workers=1)
        threaded = tune_sweep(ConstantClassifier(), campaign, starts, max_workers=4)
        assert [o.final for o in serial.report.outcomes] == [o.final for o in threaded.report.outcomes]

    def test_rows(self, campaign) -> None:
        result = tune_sweep(ConstantClassifier(gated=True), campaign, campaign_starts(campaign, 1, 10.0))
        header, rows = campaign_rows(result, 2)
        assert header[:4] == ["start_v1", "start_v2", "final_v1", "final_v2"]
        assert len(rows[0]) == len(header)
        assert rows[0][header.index("final_fitness")] is None
        assert rows[0][header.index("final_state")] is None

    def test_state_map(self, campaign) -> None:
        smap = campaign_state_map(ConstantClassifier(), campaign, 50.0)
        assert smap.v1.tolist() == [10.0, 60.0, 110.0, 160.0]
        header, rows = state_map_rows(smap)
        assert header == ["v1", "v2", "state"]
        assert len(rows) == 16
        assert {r[2] for r in rows} == {"DD"}

    def test_gated_state_map(self, campaign) -> None:
        _, rows = state_map_rows(campaign_state_map(ConstantClassifier(gated=True), campaign, 100.0))
        assert all(r[2] is None for r in rows)

    def test_three_d_starts_use_top_slice(self) -> None:
        stack = DiagramStack((block_diagram(200, 0.0), block_diagram(200, 20.0)))
        c = make_campaign(stack, CFG, FAR)
        assert c.dims == 3
        starts = campaign_starts(c, 4, 20.0)
        assert np.all(starts[:, 2] == 20.0)
        assert not math.isnan(c.center()[0])


@pytest.fixture(scope="module")
def reference_stack():
    return reference_campaign(3, RayConfig(m=6, l_px=60, px_mv=0.5), resolution=1.0)


class TestReferenceStackCampaign:
    def test_no_barrier_penalty_by_default(self, reference_stack) -> None:
        assert not reference_stack.fitness_cfg.include_vb_penalty

    def test_only_top_slice_is_merged(self, reference_stack) -> None:
        fractions = [s.state_fractions() for s in reference_stack.source.slices]
        assert fractions[-1][DeviceState.DD] == 0.0
        assert all(f[DeviceState.DD] > 0.05 for f in fractions[:-1])
        assert reference_stack.region.polygon_for(150.0).empty
        assert not reference_stack.region.polygon_for(100.0).empty

    def test_first_barrier_step_reaches_double_dot_slice(self, reference_stack) -> None:
        space = reference_stack.space
        start = campaign_starts(reference_stack, 1, 10.0)[0]
        assert start[2] == 150.0
        simplex = initial_simplex(start, DeviceState.SD_C, SimplexConfig(), space.lower, space.upper)
        vb_step = simplex.vertices[3, 2]
        assert vb_step == 125.0
        assert space.slice_at(vb_step).vb == 100.0
        assert not reference_stack.region.polygon_for(vb_step).empty


class TestReferenceSamplerSpace:
    def test_two_d_sits_at_reference_barrier(self) -> None:
        space = reference_sampler_space(2, RayConfig(m=6, l_px=60, px_mv=0.5))
        assert space.dims == 2
        assert space.vb == 50.0
        proj = space.acquire(space.lower + 40.0, RayConfig(m=6, l_px=60, px_mv=0.5))
        assert proj.vb == 50.0

    def test_three_d_spans_stack(self) -> None:
        space = reference_sampler_space(3)
        assert space.dims == 3
        assert (space.lower[2], space.upper[2]) == (-100.0, 150.0)

    def test_live_state_map(self) -> None:
        rays = RayConfig(m=6, l_px=60, px_mv=0.5)
        space = reference_sampler_space(2, rays, noise_seed=2)
        smap = space_state_map(ConstantClassifier(), space, 60.0)
        assert smap.states.size > 1
        assert set(smap.states.ravel().tolist()) == {int(DeviceState.DD)}

    def test_invalid_dims(self) -> None:
        with pytest.raises(ConfigurationError):
            reference_sampler_space(4)
