import math

import numpy as np
import pytest

from raytuner.exceptions import ContractError
from raytuner.fingerprint import apply_weight, catalogue
from raytuner.schema import WeightFn
from raytuner.sigproc import CriticalFeatureVector

FEATURES = (2, None, 6, 4)


class TestCatalogue:
    def test_default_six(self) -> None:
        fns = [spec.fn for spec in catalogue()]
        assert fns == [
            WeightFn.INV,
            WeightFn.EXP_NEG,
            WeightFn.ONE_MINUS_HAT,
            WeightFn.HAT,
            WeightFn.RAW,
            WeightFn.INV_HAT,
        ]

    def test_extended(self) -> None:
        fns = [spec.fn for spec in catalogue(extended=True)]
        assert len(fns) == 7
        assert fns[-1] is WeightFn.EXP_NEG_HAT

    def test_normalized_flags(self) -> None:
        normalized = {spec.fn for spec in catalogue(extended=True) if spec.normalized}
        assert normalized == {WeightFn.HAT, WeightFn.ONE_MINUS_HAT, WeightFn.INV_HAT, WeightFn.EXP_NEG_HAT}


class TestApplyWeight:
    @pytest.mark.parametrize(
        "fn,expected",
        [
            (WeightFn.INV, [0.5, 0.0, 1.0 / 6.0, 0.25]),
            (WeightFn.EXP_NEG, [math.exp(-2), 0.0, math.exp(-6), math.exp(-4)]),
            (WeightFn.RAW, [2.0 / 60, 0.0, 6.0 / 60, 4.0 / 60]),
            (WeightFn.HAT, [0.0, 0.0, 1.0, 0.5]),
            (WeightFn.ONE_MINUS_HAT, [1.0, 0.0, 0.0, 0.5]),
            (WeightFn.INV_HAT, [1.0, 0.0, 0.5, 2.0 / 3.0]),
            (WeightFn.EXP_NEG_HAT, [1.0, 0.0, math.exp(-1), math.exp(-0.5)]),
        ],
    )
    def test_values(self, fn: WeightFn, expected: list) -> None:
        fp = apply_weight(FEATURES, fn, 60)
        np.testing.assert_allclose(fp.values, expected)
        assert fp.weight_id is fn
        assert fp.m == 4

    def test_missing_feature_is_zero_for_every_weight(self) -> None:
        for spec in catalogue(extended=True):
            fp = apply_weight((None, 3, None), spec.fn, 60)
            assert fp.values[0] == 0.0
            assert fp.values[2] == 0.0

    def test_all_missing(self) -> None:
        fp = apply_weight((None, None, None), WeightFn.INV, 60)
        assert fp.values.tolist() == [0.0, 0.0, 0.0]

    def test_single_entry_normalizes_to_zero(self) -> None:
        assert apply_weight((None, 7, None), WeightFn.HAT, 60).values[1] == 0.0
        assert apply_weight((None, 7, None), WeightFn.ONE_MINUS_HAT, 60).values[1] == 1.0

    def test_equal_entries_normalize_to_zero(self) -> None:
        assert apply_weight((5, 5), WeightFn.HAT, 60).values.tolist() == [0.0, 0.0]

    def test_accepts_feature_vector(self) -> None:
        cfv = CriticalFeatureVector(values=(1, None, 60), l_px=60)
        np.testing.assert_allclose(apply_weight(cfv, "inv", 60).values, [1.0, 0.0, 1.0 / 60])

    def test_out_of_range(self) -> None:
        with pytest.raises(ContractError):
            apply_weight((0, 3), WeightFn.INV, 60)
        with pytest.raises(ContractError):
            apply_weight((61, 3), WeightFn.INV, 60)

    def test_read_only(self) -> None:
        fp = apply_weight(FEATURES, WeightFn.INV, 60)
        with pytest.raises(ValueError):
            fp.values[0] = 1.0
