"""
Følner diagnostics: translation defects of the schedule window per generator
"""

import logging

import numpy as np
import pandas as pd

from commands import CommandOutput
from modules.group_core import FiniteSubset, folner_window, invariance_defect, is_folner_window
from utils.data_processing import RunConfig

logger = logging.getLogger(__name__)


def _label(g) -> str:
    return 'defect_' + '_'.join(str(c) for c in g)


def run(config: RunConfig) -> CommandOutput:
    """
    |gF_n Δ F_n| / |F_n| for every configured generator g along the window

    Exit code 3 when the window is not nested or some defect series grows.
    """
    schedule = config.schedule
    window = folner_window(schedule)
    logger.info("Følner window: %d sets, sizes %d..%d", len(window), window[0].size, window[-1].size)

    frame = pd.DataFrame({'n': schedule.indices(), 'size': [F.size for F in window]})
    summary = []
    decreasing = True
    for g in config.generators:
        K = FiniteSubset((g,))
        defects = np.array([invariance_defect(K, F) for F in window])
        frame[_label(g)] = defects
        monotone = bool(np.all(np.diff(defects) <= 1e-15))
        decreasing = decreasing and monotone
        summary.append({'generator': list(g), 'first': float(defects[0]), 'last': float(defects[-1]),
                        'decreasing': monotone})

    ok, problems = is_folner_window(schedule, config.generators)
    payload = {
        'schedule': schedule.to_dict(),
        'generators': summary,
        'nested': not any('nested' in p for p in problems),
        'decreasing': decreasing,
        'problems': problems,
    }
    exit_code = 0 if ok and decreasing else 3
    if exit_code:
        logger.warning("Window does not look Følner: %s", problems or 'defects do not decrease')
    return CommandOutput(payload, {'defects': frame}, exit_code)
