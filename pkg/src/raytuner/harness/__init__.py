from .campaign import (
    Campaign,
    CampaignResult,
    campaign_starts,
    make_campaign,
    reference_campaign,
    reference_sampler_space,
    start_points,
    tune_sweep,
)
from .dataset import class_quotas, gen_dataset
from .sweep import ReductionReport, SweepRow, data_reduction, reduction_table, run_sweep, sweep_cells
from .trace import RunTrace

__all__ = [
    "Campaign",
    "CampaignResult",
    "ReductionReport",
    "RunTrace",
    "SweepRow",
    "campaign_starts",
    "class_quotas",
    "data_reduction",
    "gen_dataset",
    "make_campaign",
    "reduction_table",
    "reference_campaign",
    "reference_sampler_space",
    "run_sweep",
    "start_points",
    "sweep_cells",
    "tune_sweep",
]
