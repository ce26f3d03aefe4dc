import pytest
from pydantic import ValidationError

from raytuner.exceptions import ConfigurationError
from raytuner.schema import (
    DeviceState,
    FingerprintRecord,
    FitnessConfig,
    ParameterRanges,
    RayConfig,
    RunConfig,
    SweepSpec,
    WeightFn,
    one_hot,
    parse_config,
)


class TestDeviceState:
    def test_probability_order(self) -> None:
        assert [s.name for s in DeviceState] == ["ND", "SD_L", "SD_C", "SD_R", "DD"]
        assert int(DeviceState.DD) == 4

    def test_one_hot(self) -> None:
        assert one_hot(DeviceState.SD_C) == (0.0, 0.0, 1.0, 0.0, 0.0)


class TestWeightFn:
    def test_values(self) -> None:
        assert WeightFn.INV == "inv"
        assert WeightFn.EXP_NEG == "exp_neg"
        assert WeightFn.INV_HAT == "inv_hat"
        assert WeightFn("exp_neg_hat") is WeightFn.EXP_NEG_HAT


class TestRayConfig:
    def test_defaults(self) -> None:
        cfg = RayConfig()
        assert (cfg.m, cfg.l_px, cfg.px_mv) == (6, 60, 0.5)
        assert cfg.length_mv == 30.0
        assert cfg.pixels == 360

    def test_too_few_rays(self) -> None:
        with pytest.raises(ValidationError):
            RayConfig(m=2)

    def test_short_rays(self) -> None:
        with pytest.raises(ValidationError):
            RayConfig(l_px=7)

    def test_frozen(self) -> None:
        cfg = RayConfig()
        with pytest.raises(ValidationError):
            cfg.m = 7  # type: ignore[misc]


class TestFitnessConfig:
    def test_default_target_is_double_dot(self) -> None:
        assert FitnessConfig().p_target == (0.0, 0.0, 0.0, 0.0, 1.0)

    def test_target_must_be_probability_vector(self) -> None:
        with pytest.raises(ValidationError):
            FitnessConfig(p_target=(0.5, 0.5, 0.5, 0.0, 0.0))


class TestSweepSpec:
    def test_default_grid(self) -> None:
        spec = SweepSpec()
        assert spec.ray_counts == [5, 6, 7, 9, 12]
        assert spec.ray_lengths_px[0] == 20
        assert spec.ray_lengths_px[-1] == 80
        assert len(spec.ray_lengths_px) == 16
        assert spec.n_models == 20
        assert spec.baseline_px == 900

    def test_empty_grid_rejected(self) -> None:
        with pytest.raises(ValidationError):
            SweepSpec(ray_counts=[])

    def test_length_bounds(self) -> None:
        with pytest.raises(ValidationError):
            SweepSpec(ray_lengths_px=[4])
        with pytest.raises(ValidationError):
            SweepSpec(ray_lengths_px=[201])


class TestParameterRanges:
    def test_defaults_pass(self) -> None:
        ParameterRanges().check()

    def test_empty_range(self) -> None:
        with pytest.raises(ConfigurationError, match="empty"):
            ParameterRanges(e1_mv=(60.0, 40.0)).check()

    def test_non_finite(self) -> None:
        with pytest.raises(ConfigurationError, match="finite"):
            ParameterRanges(tb_mv=(1.0, float("inf"))).check()

    def test_em_below_geometric_mean(self) -> None:
        with pytest.raises(ConfigurationError):
            ParameterRanges(em_frac=(0.5, 1.0)).check()


class TestRunConfig:
    def test_partial_document(self) -> None:
        cfg = parse_config(RunConfig, {"ray": {"m": 9}})
        assert cfg.ray.m == 9
        assert cfg.ray.l_px == 60
        assert cfg.simplex.max_iter == 100

    def test_unknown_key(self) -> None:
        with pytest.raises(ConfigurationError):
            parse_config(RunConfig, {"rays": {}})

    def test_invalid_value(self) -> None:
        with pytest.raises(ConfigurationError):
            parse_config(RunConfig, {"simplex": {"max_iter": 0}})


class TestFingerprintRecord:
    def test_json_round_trip(self) -> None:
        rec = FingerprintRecord(
            m=3,
            l_px=20,
            px_mv=0.5,
            weight_id=WeightFn.INV,
            values=[0.1, 0.0, 1.0],
            label=DeviceState.SD_L,
            origin_mv=(1.0, 2.0, 3.0),
        )
        back = FingerprintRecord.model_validate_json(rec.model_dump_json())
        assert back == rec
        assert back.label is DeviceState.SD_L
