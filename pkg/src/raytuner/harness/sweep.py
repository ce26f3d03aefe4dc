"""Classifier sweeps over ray count, ray length and weight function."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from ..exceptions import ContractError
from ..fingerprint import catalogue
from ..ml.evaluation import EvalReport, evaluate_ensemble, train_ensemble
from ..ml.training import Dataset
from ..schema import ParameterRanges, PeakConfig, RayConfig, SweepSpec, TrainConfig, WeightFn
from . import seeds
from .dataset import gen_dataset
from .io import write_csv
from .trace import RunTrace

TRAIN_DATA = "train-data"
TEST_DATA = "test-data"

SWEEP_HEADER = [
    "m",
    "l_px",
    "weight",
    "length_mv",
    "pixels",
    "reduction",
    "mean_accuracy",
    "std_accuracy",
    "n_models",
    "n_train",
    "n_test",
]


def data_reduction(m: int, l_px: int, baseline_px: int = 900) -> int:
    """Percentage of measured points saved against a ``baseline_px`` full-image measurement.

    Rounded half-up, so (5, 24) -> 87 and (12, 44) -> 41.
    """
    if m <= 0 or l_px <= 0 or baseline_px <= 0:
        raise ContractError(f"data_reduction needs positive arguments (got {m}, {l_px}, {baseline_px})")
    return math.floor(100.0 * (1.0 - m * l_px / baseline_px) + 0.5)


@dataclass(frozen=True)
class ReductionRow:
    m: int
    l_px: int
    pixels: int
    baseline_px: int
    reduction: int


@dataclass(frozen=True)
class ReductionReport:
    rows: List[ReductionRow]

    def lookup(self, m: int, l_px: int) -> int:
        for r in self.rows:
            if r.m == m and r.l_px == l_px:
                return r.reduction
        raise KeyError((m, l_px))

    def to_rows(self) -> List[Tuple[int, int, int, int, int]]:
        return [(r.m, r.l_px, r.pixels, r.baseline_px, r.reduction) for r in self.rows]


def reduction_table(
    ray_counts: Sequence[int], lengths_px: Sequence[int], baseline_px: int = 900
) -> ReductionReport:
    rows = [
        ReductionRow(m, length, m * length, baseline_px, data_reduction(m, length, baseline_px))
        for m in ray_counts
        for length in lengths_px
    ]
    return ReductionReport(rows)


@dataclass(frozen=True)
class SweepCell:
    m: int
    l_px: int
    weight: WeightFn

    def ray_config(self, px_mv: float) -> RayConfig:
        return RayConfig(m=self.m, l_px=self.l_px, px_mv=px_mv)


@dataclass(frozen=True)
class SweepRow:
    cell: SweepCell
    length_mv: float
    pixels: int
    reduction: int
    report: EvalReport
    n_train: int
    n_test: int

    def as_csv_row(self) -> list:
        return [
            self.cell.m,
            self.cell.l_px,
            self.cell.weight.value,
            self.length_mv,
            self.pixels,
            self.reduction,
            self.report.mean,
            self.report.std,
            len(self.report.accuracies),
            self.n_train,
            self.n_test,
        ]


def sweep_cells(spec: SweepSpec) -> List[SweepCell]:
    """Cells ordered by (M, L_px, weight); weights follow catalogue order."""
    order = {w.fn: k for k, w in enumerate(catalogue(extended=True))}
    cells = {SweepCell(m, length, w) for m in spec.ray_counts for length in spec.ray_lengths_px for w in spec.weights}
    return sorted(cells, key=lambda c: (c.m, c.l_px, order[c.weight]))


def run_cell(
    cell: SweepCell,
    spec: SweepSpec,
    train_cfg: Optional[TrainConfig] = None,
    ranges: Optional[ParameterRanges] = None,
    peak_cfg: Optional[PeakConfig] = None,
    max_workers: Optional[int] = None,
) -> SweepRow:
    """Regenerate train and test fingerprints for the cell's rays, train the ensemble and evaluate it.

    Training and test devices come from separate seed streams, so no test
    device appears in training.
    """
    ray_cfg = cell.ray_config(spec.px_mv)
    train_seed = seeds.derive_seed(spec.seed, TRAIN_DATA)
    test_seed = seeds.derive_seed(spec.seed, TEST_DATA)
    train_records = gen_dataset(spec.n_devices, spec.per_device, ray_cfg, cell.weight, train_seed, ranges, peak_cfg)
    test_records = gen_dataset(
        spec.test_devices, spec.test_per_device, ray_cfg, cell.weight, test_seed, ranges, peak_cfg
    )

    weight_idx = list(WeightFn).index(cell.weight)
    cfg = (train_cfg or TrainConfig()).model_copy(
        update={"seed": seeds.derive_seed(spec.seed, seeds.INIT, cell.m, cell.l_px, weight_idx)}
    )
    models = train_ensemble(Dataset.from_records(train_records), spec.n_models, cfg, max_workers=max_workers)
    report = evaluate_ensemble(models, Dataset.from_records(test_records))

    return SweepRow(
        cell=cell,
        length_mv=ray_cfg.length_mv,
        pixels=ray_cfg.pixels,
        reduction=data_reduction(cell.m, cell.l_px, spec.baseline_px),
        report=report,
        n_train=len(train_records),
        n_test=len(test_records),
    )


def run_sweep(
    spec: SweepSpec,
    train_cfg: Optional[TrainConfig] = None,
    ranges: Optional[ParameterRanges] = None,
    peak_cfg: Optional[PeakConfig] = None,
    max_workers: Optional[int] = None,
    path: Optional[Path] = None,
    trace: Optional[RunTrace] = None,
) -> List[SweepRow]:
    """Run every cell of ``spec``; rows come back in cell order whatever the scheduling.

    With ``max_workers`` > 1 cells run concurrently and each ensemble trains
    sequentially; otherwise cells run one by one with a threaded ensemble.
    """
    trace = trace or RunTrace()
    cells = sweep_cells(spec)

    def run(cell: SweepCell) -> SweepRow:
        workers = 1 if max_workers is not None and max_workers > 1 else None
        return run_cell(cell, spec, train_cfg, ranges, peak_cfg, max_workers=workers)

    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(run, cells))
        trace.add_step("Cells", len(rows))
    else:
        rows = []
        for cell in cells:
            rows.append(run(cell))
            trace.add_step(f"Cell M={cell.m} L={cell.l_px} {cell.weight.value}", rows[-1].n_train)

    if path is not None:
        write_sweep_csv(rows, path)
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], path: Path) -> Path:
    return write_csv(path, SWEEP_HEADER, [r.as_csv_row() for r in rows])
