"""
Batch commands; each module exposes run(config) -> CommandOutput
"""

from dataclasses import dataclass, field
from typing import Any, Dict

import pandas as pd


@dataclass
class CommandOutput:
    """
    Result of one command

    Args:
        payload: JSON-ready report
        tables: CSV tables keyed by a short name
        exit_code: 0, or 3 when the run completed but a precondition check failed
    """

    payload: Dict[str, Any]
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    exit_code: int = 0
