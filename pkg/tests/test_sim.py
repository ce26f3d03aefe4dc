import numpy as np
import pytest

from raytuner.exceptions import ConfigurationError, ContractError
from raytuner.rays.acquire import acquire_live, acquire_offline
from raytuner.rays.base import VoltageBox
from raytuner.schema import DeviceState, ParameterRanges, RayConfig
from raytuner.sim import (
    REFERENCE_VB_STACK,
    DeviceParams,
    DeviceSampler,
    Window,
    default_window,
    is_merged,
    label_state,
    label_states,
    make_device,
    occupancy,
    occupancy_grid,
    pinch_off_point,
    reference_device,
    render_diagram,
    render_stack,
    ridge_height,
    sensor_signal,
    state_from_occupancy,
)


def axis_device(em: float = 0.0) -> DeviceParams:
    """Uncoupled plunger lever arms: transitions every 20 mV along each plunger."""
    return DeviceParams(
        e1=50.0,
        e2=50.0,
        em=em,
        lever=((0.05, 0.0, 0.0), (0.0, 0.05, 0.0)),
        offsets=(0.0, 0.0),
        beta1=1.0,
        beta2=0.5,
        tb=1.0,
        merge_mid=100.0,
        merge_width=5.0,
        noise_sigma=0.0,
    )


def brute_force_energy(params: DeviceParams, v: np.ndarray, n_max: int = 15) -> np.ndarray:
    n = v @ params.lever_matrix.T - params.offset_vector
    grid = np.arange(n_max + 1, dtype=float)
    N1, N2 = np.meshgrid(grid, grid, indexing="ij")
    d1 = N1.ravel()[None, :] - n[:, 0:1]
    d2 = N2.ravel()[None, :] - n[:, 1:2]
    u = 0.5 * params.e1 * d1**2 + 0.5 * params.e2 * d2**2 + params.em * d1 * d2
    return u.min(axis=1)


def config_energy(params: DeviceParams, v: np.ndarray, N1: np.ndarray, N2: np.ndarray) -> np.ndarray:
    n = v @ params.lever_matrix.T - params.offset_vector
    d1 = N1 - n[:, 0]
    d2 = N2 - n[:, 1]
    return 0.5 * params.e1 * d1**2 + 0.5 * params.e2 * d2**2 + params.em * d1 * d2


class TestMakeDevice:
    def test_deterministic(self) -> None:
        assert make_device(7) == make_device(7)
        assert make_device(7) != make_device(8)

    def test_records_seed(self) -> None:
        assert make_device(11).seed == 11

    def test_parameters_within_ranges(self) -> None:
        ranges = ParameterRanges()
        for seed in range(10):
            p = make_device(seed, ranges)
            assert ranges.e1_mv[0] <= p.e1 <= ranges.e1_mv[1]
            assert p.em < np.sqrt(p.e1 * p.e2)
            assert p.beta2 < p.beta1 <= 1.0
            assert ranges.noise_frac[0] * ridge_height(p) <= p.noise_sigma <= ranges.noise_frac[1] * ridge_height(p)

    def test_invalid_ranges(self) -> None:
        with pytest.raises(ConfigurationError):
            make_device(0, ParameterRanges(tb_mv=(2.0, 1.0)))

    def test_degenerate_range_is_constant(self) -> None:
        p = make_device(0, ParameterRanges(e1_mv=(50.0, 50.0)))
        assert p.e1 == 50.0

    def test_coupling_must_stay_below_geometric_mean(self) -> None:
        with pytest.raises(ValueError):
            axis_device(em=50.0)


class TestOccupancy:
    def test_axis_parallel_transitions(self) -> None:
        p = axis_device()
        assert occupancy(p, np.array([5.0, 5.0, 0.0])) == (0, 0, False)
        assert occupancy(p, np.array([15.0, 5.0, 0.0])) == (1, 0, False)
        assert occupancy(p, np.array([5.0, 15.0, 0.0])) == (0, 1, False)
        assert occupancy(p, np.array([15.0, 35.0, 0.0])) == (1, 2, False)

    def test_transitions_ignore_other_plunger(self) -> None:
        p = axis_device()
        v2 = np.linspace(0.0, 200.0, 41)
        v = np.column_stack([np.full_like(v2, 15.0), v2, np.zeros_like(v2)])
        N1, _, _ = occupancy_grid(p, v)
        assert np.all(N1 == 1)

    def test_merged_single_dot(self) -> None:
        p = axis_device()
        assert occupancy(p, np.array([15.0, 25.0, 200.0])) == (2, 0, True)
        assert label_state(p, np.array([15.0, 25.0, 200.0])) == DeviceState.SD_C
        assert label_state(p, np.array([-20.0, -20.0, 200.0])) == DeviceState.ND

    def test_merges_above_crossover(self) -> None:
        p = axis_device()
        assert not is_merged(p, 90.0)
        assert is_merged(p, 110.0)

    def test_rejects_bad_shape(self) -> None:
        with pytest.raises(ContractError):
            occupancy(axis_device(), np.array([1.0, 2.0]))

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_matches_brute_force(self, seed: int) -> None:
        p = make_device(seed)
        rng = np.random.default_rng(seed)
        p1, p2 = pinch_off_point(p, 0.0)
        v = np.column_stack(
            [
                rng.uniform(p1 - 60.0, p1 + 150.0, 2500),
                rng.uniform(p2 - 60.0, p2 + 150.0, 2500),
                np.full(2500, p.merge_mid - 5.0 * p.merge_width - 1.0),
            ]
        )
        N1, N2, merged = occupancy_grid(p, v)
        assert not merged.any()
        found = config_energy(p, v, N1.astype(float), N2.astype(float))
        np.testing.assert_allclose(found, brute_force_energy(p, v), atol=1e-9)

    def test_reference_device_brute_force(self) -> None:
        p = reference_device()
        rng = np.random.default_rng(42)
        v = np.column_stack([rng.uniform(40, 260, 2500), rng.uniform(40, 260, 2500), np.full(2500, 50.0)])
        N1, N2, _ = occupancy_grid(p, v)
        found = config_energy(p, v, N1.astype(float), N2.astype(float))
        np.testing.assert_allclose(found, brute_force_energy(p, v), atol=1e-9)


class TestStateLabels:
    @pytest.mark.parametrize(
        ("N1", "N2", "merged", "expected"),
        [
            (0, 0, False, DeviceState.ND),
            (1, 0, False, DeviceState.SD_L),
            (0, 1, False, DeviceState.SD_R),
            (2, 3, False, DeviceState.DD),
            (0, 0, True, DeviceState.ND),
            (3, 0, True, DeviceState.SD_C),
        ],
    )
    def test_table(self, N1: int, N2: int, merged: bool, expected: DeviceState) -> None:
        assert int(state_from_occupancy(np.array(N1), np.array(N2), np.array(merged))) == int(expected)

    def test_pinch_off_separates_empty_device(self) -> None:
        p = reference_device()
        p1, p2 = pinch_off_point(p, 50.0)
        assert label_state(p, np.array([p1 - 5.0, p2 - 5.0, 50.0])) == DeviceState.ND
        assert label_state(p, np.array([p1 + 20.0, p2 + 20.0, 50.0])) != DeviceState.ND

    def test_batch_matches_single(self) -> None:
        p = make_device(3)
        pts = np.array([[100.0, 100.0, 0.0], [150.0, 160.0, 0.0], [60.0, 200.0, 150.0]])
        batch = label_states(p, pts)
        assert [int(label_state(p, x)) for x in pts] == batch.tolist()


def grid_points(v_min: float, v_max: float, step: float, vb: float = 0.0) -> np.ndarray:
    """Pixel-centre grid, rows along V_P2; offset by half a step so no point sits on a transition."""
    axis = np.arange(v_min, v_max, step) + step / 2.0
    g1, g2 = np.meshgrid(axis, axis)
    return np.stack([g1, g2, np.full_like(g1, vb)], axis=-1)


def boundary_midpoints(points: np.ndarray, labels: np.ndarray, a: DeviceState, b: DeviceState) -> np.ndarray:
    """(V_P1, V_P2) midpoints between horizontally or vertically adjacent ``a`` and ``b`` pixels."""
    pair = {int(a), int(b)}
    mids = []
    for axis in (0, 1):
        lo = [slice(None), slice(None)]
        hi = [slice(None), slice(None)]
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        first, second = labels[tuple(lo)], labels[tuple(hi)]
        mask = (first != second) & np.isin(first, list(pair)) & np.isin(second, list(pair))
        mids.append(((points[tuple(lo)][..., :2] + points[tuple(hi)][..., :2]) / 2.0)[mask])
    return np.concatenate(mids)


class TestHoneycomb:
    def test_uncoupled_lines_are_axis_parallel(self) -> None:
        p = axis_device()
        pts = grid_points(0.0, 40.0, 0.25)
        N1, N2, _ = occupancy_grid(p, pts)
        assert np.all(np.diff(N1, axis=0) == 0)
        assert np.all(np.diff(N2, axis=1) == 0)
        labels = label_states(p, pts)
        assert len(boundary_midpoints(pts, labels, DeviceState.SD_L, DeviceState.SD_R)) == 0

    def test_coupled_inter_dot_segment(self) -> None:
        p = axis_device(em=15.0)
        pts = grid_points(0.0, 20.0, 0.25)
        mids = boundary_midpoints(pts, label_states(p, pts), DeviceState.SD_L, DeviceState.SD_R)
        # E1 = E2 with equal lever arms puts the segment on V_P1 = V_P2, between the triple points
        assert len(mids) > 10
        slope = np.polyfit(mids[:, 0], mids[:, 1], 1)[0]
        assert slope == pytest.approx(1.0, abs=0.2)
        np.testing.assert_allclose(mids[:, 0], mids[:, 1], atol=0.5)
        assert mids[:, 0].min() > 20.0 * 50.0 / 130.0 - 0.5
        assert mids[:, 0].max() < 20.0 * 40.0 / 65.0 + 0.5

    def test_reference_orientations(self) -> None:
        p = reference_device()
        p1, p2 = pinch_off_point(p, 50.0)
        pts = grid_points(min(p1, p2) - 40.0, max(p1, p2) + 40.0, 0.5, vb=50.0)
        labels = label_states(p, pts)
        inter_dot = boundary_midpoints(pts, labels, DeviceState.SD_L, DeviceState.SD_R)
        dot_one = boundary_midpoints(pts, labels, DeviceState.ND, DeviceState.SD_L)
        dot_two = boundary_midpoints(pts, labels, DeviceState.ND, DeviceState.SD_R)
        assert min(len(inter_dot), len(dot_one), len(dot_two)) > 5
        # inter-dot boundaries rise with V_P1; addition lines fall
        assert np.polyfit(inter_dot[:, 0], inter_dot[:, 1], 1)[0] > 0
        assert np.polyfit(dot_one[:, 1], dot_one[:, 0], 1)[0] < 0
        assert np.polyfit(dot_two[:, 0], dot_two[:, 1], 1)[0] < 0


class TestSensorSignal:
    def test_ridge_height_on_transition(self) -> None:
        p = axis_device()
        on_ridge = sensor_signal(p, (10.0, 5.0, 0.0))
        assert on_ridge == pytest.approx(ridge_height(p), rel=0.05)

    def test_flat_plateau(self) -> None:
        p = axis_device()
        assert sensor_signal(p, (20.0, 5.0, 0.0)) == pytest.approx(0.0, abs=1e-12)

    def test_batched_shape(self) -> None:
        p = make_device(0)
        v = np.zeros((4, 5, 3))
        assert sensor_signal(p, v).shape == (4, 5)

    def test_dot_two_line_invisible_without_cross_coupling(self) -> None:
        p = axis_device()
        assert sensor_signal(p, (5.0, 10.0, 0.0)) == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("a21", [0.05, 0.025])
    def test_ridge_ratio_follows_sensor_coupling(self, a21: float) -> None:
        # E1 = E2 and Em = 0: the ratio is beta1 a11 / (beta2 a21), i.e. beta1 / beta2 when a21 = a11
        p = axis_device().model_copy(update={"lever": ((0.05, 0.0, 0.0), (a21, 0.05, 0.0))})
        dot_one = sensor_signal(p, (10.0, -4.0, 0.0))
        # n1 = 0.2 stays clear of dot-1 transitions while n2 crosses 1/2
        dot_two = sensor_signal(p, (4.0, (0.5 - 4.0 * a21) / 0.05, 0.0))
        expected = (p.beta1 * 0.05) / (p.beta2 * a21)
        assert dot_one / dot_two == pytest.approx(expected, rel=0.05)

    def test_reference_dot_two_ridge_is_visible(self) -> None:
        p = reference_device()
        lever = p.lever_matrix
        ratio = (p.beta2 * (p.e2 * lever[1, 0] + p.em * lever[0, 0])) / (
            p.beta1 * (p.e1 * lever[0, 0] + p.em * lever[1, 0])
        )
        assert 0.2 < ratio < 0.35
        # the dot-2 ridge clears the reference noise floor by a wide margin
        assert ratio * ridge_height(p) > 10 * p.noise_sigma


class TestWindow:
    def test_axes(self) -> None:
        v1, v2 = Window(0.0, 10.0, 5.0, 15.0).axes(0.5)
        assert len(v1) == 20
        assert v1[0] == 0.0
        assert v2[-1] == pytest.approx(14.5)

    def test_resolution_must_divide(self) -> None:
        with pytest.raises(ConfigurationError):
            Window(0.0, 10.0, 0.0, 10.0).axes(0.3)

    def test_degenerate(self) -> None:
        with pytest.raises(ConfigurationError):
            Window(0.0, 0.0, 0.0, 1.0)

    def test_default_window_places_pinch_off(self) -> None:
        p = reference_device()
        w = default_window(p, 50.0, size_mv=300.0, resolution=0.5)
        p1, _ = pinch_off_point(p, 50.0)
        assert w.width == 300.0
        assert (p1 - w.v1_min) / w.width == pytest.approx(0.3, abs=0.01)


class TestRender:
    @pytest.fixture(scope="class")
    def device(self) -> DeviceParams:
        return reference_device()

    @pytest.fixture(scope="class")
    def window(self, device: DeviceParams) -> Window:
        return default_window(device, 50.0, size_mv=150.0, resolution=1.0)

    def test_deterministic(self, device: DeviceParams, window: Window) -> None:
        a = render_diagram(device, window, 1.0, 50.0, noise_seed=3)
        b = render_diagram(device, window, 1.0, 50.0, noise_seed=3)
        np.testing.assert_array_equal(a.signal, b.signal)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_noise_seed_changes_signal_only(self, device: DeviceParams, window: Window) -> None:
        a = render_diagram(device, window, 1.0, 50.0, noise_seed=1)
        b = render_diagram(device, window, 1.0, 50.0, noise_seed=2)
        assert not np.array_equal(a.signal, b.signal)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_double_dot_slice(self, device: DeviceParams, window: Window) -> None:
        d = render_diagram(device, window, 1.0, 50.0)
        assert d.shape == (150, 150)
        fractions = d.state_fractions()
        assert fractions.sum() == pytest.approx(1.0)
        assert fractions[DeviceState.DD] > 0.2
        assert fractions[DeviceState.SD_C] == 0.0

    def test_arrays_read_only(self, device: DeviceParams, window: Window) -> None:
        d = render_diagram(device, window, 1.0, 50.0)
        with pytest.raises(ValueError):
            d.signal[0, 0] = 1.0

    def test_stack_merges_with_barrier(self, device: DeviceParams, window: Window) -> None:
        stack = render_stack(device, window, 1.0, REFERENCE_VB_STACK)
        assert len(stack) == 6
        sd_c = [s.state_fractions()[DeviceState.SD_C] for s in stack.slices]
        assert sd_c == sorted(sd_c)
        assert sd_c[0] == 0.0
        assert sd_c[-1] > 0.5
        dd = stack[0].state_fractions()
        assert dd[DeviceState.DD] == dd.max()

    def test_stack_nearest_tie_prefers_lower(self, device: DeviceParams, window: Window) -> None:
        stack = render_stack(device, window, 1.0, [0.0, 50.0])
        assert stack.nearest(25.0).vb == 0.0
        assert stack.nearest(40.0).vb == 50.0

    def test_empty_stack(self, device: DeviceParams, window: Window) -> None:
        with pytest.raises(ConfigurationError):
            render_stack(device, window, 1.0, [])


class TestDeviceSampler:
    def test_noise_free_matches_signal(self) -> None:
        p = axis_device()
        sampler = DeviceSampler(p, VoltageBox((-100.0, -100.0, -100.0), (100.0, 100.0, 100.0)))
        assert sampler.sample(np.array([10.0, 5.0, 0.0])) == pytest.approx(sensor_signal(p, (10.0, 5.0, 0.0)))

    def test_noise_is_seeded(self) -> None:
        p = reference_device()
        box = VoltageBox((0.0, 0.0, 0.0), (300.0, 300.0, 100.0))
        pts = np.array([[150.0, 150.0, 50.0]] * 8)
        a = DeviceSampler(p, box, noise_seed=5).sample_many(pts)
        b = DeviceSampler(p, box, noise_seed=5).sample_many(pts)
        np.testing.assert_array_equal(a, b)
        assert np.std(a) > 0

    def test_offline_rays_track_live_measurement(self) -> None:
        p = reference_device().model_copy(update={"noise_sigma": 0.0})
        window = default_window(p, 50.0, size_mv=100.0, resolution=0.25)
        diagram = render_diagram(p, window, 0.25, 50.0)
        sampler = DeviceSampler.for_window(p, window, (50.0, 50.0), resolution=0.25)
        cfg = RayConfig(m=6, l_px=60, px_mv=0.5)
        rng = np.random.default_rng(11)
        worst = 0.0
        for _ in range(20):
            origin = (
                rng.uniform(window.v1_min + 31.0, window.v1_max - 31.0),
                rng.uniform(window.v2_min + 31.0, window.v2_max - 31.0),
                50.0,
            )
            live = acquire_live(sampler, origin, cfg).samples
            offline = acquire_offline(diagram, origin, cfg).samples
            worst = max(worst, float(np.max(np.abs(live - offline))))
        # bilinear error at 0.25 mV pixels stays inside 2 % of the ridge height
        assert worst < 0.02 * ridge_height(p)
