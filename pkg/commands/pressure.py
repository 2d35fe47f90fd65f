"""
Pressure series with the method comparison, and the realization gap for set maps
"""

import logging

from commands import CommandOutput
from modules.thermo import pressure, pressure_of_realization
from utils.data_processing import RunConfig

logger = logging.getLogger(__name__)


def run(config: RunConfig) -> CommandOutput:
    X, schedule = config.subshift, config.schedule
    payload = {'subshift': X.to_dict(), 'schedule': schedule.to_dict()}
    tables = {}

    if config.potential is not None:
        estimate = pressure(X, config.potential, schedule, config.tol, config.pattern_cap)
        payload['potential'] = config.potential.to_dict(X)
    else:
        transfer = pressure_of_realization(X, config.setmap, schedule, config.tol, config.window, config.pattern_cap)
        estimate = transfer.pressure_phi
        payload['setmap'] = config.setmap.to_dict()
        payload['realization'] = transfer.to_dict(X)
        tables['realization_gap'] = transfer.to_frame()

    logger.info("Pressure limit %.12g by %s", estimate.limit_estimate, estimate.method)
    payload['pressure'] = estimate.to_dict()
    tables['pressure'] = estimate.to_frame()
    return CommandOutput(payload, tables)
