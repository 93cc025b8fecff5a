from .campaign import (
    CampaignResult,
    CampaignStats,
    random_inputs,
    run_regex_campaign,
    run_witness_campaign,
)
from .config import CampaignConfig, load_config
from .coverage import CircuitCoverage, CoverageMap, coverage_merge
from .report import emit_report_bundle, load_reports, replay

__all__ = [
    "CampaignResult",
    "CampaignStats",
    "random_inputs",
    "run_regex_campaign",
    "run_witness_campaign",
    "CampaignConfig",
    "load_config",
    "CircuitCoverage",
    "CoverageMap",
    "coverage_merge",
    "emit_report_bundle",
    "load_reports",
    "replay",
]
