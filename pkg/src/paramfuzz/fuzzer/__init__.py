"""Coverage-guided fuzzing over the virtual kernel."""

from .build import MODE_KINDS, MODES, Builder
from .campaign import CampaignConfig, CampaignReport, ConfigError, run_campaign
from .corpus import Corpus, CorpusEntry, CrashDB, CrashRecord
from .minimize import MinimizeError, achieves, is_locally_minimal, minimize
from .mutate import RELATION_P, Mutator, mutate

__all__ = [
    "Builder",
    "CampaignConfig",
    "CampaignReport",
    "ConfigError",
    "Corpus",
    "CorpusEntry",
    "CrashDB",
    "CrashRecord",
    "MODES",
    "MODE_KINDS",
    "MinimizeError",
    "Mutator",
    "RELATION_P",
    "achieves",
    "is_locally_minimal",
    "minimize",
    "mutate",
    "run_campaign",
]
