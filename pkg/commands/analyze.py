"""
Set-map analysis: equivariance, vertical norms and asymptotic additivity
"""

import logging
from typing import Any, Dict, List

from commands import CommandOutput
from modules.setmaps import (check_equivariance, residual_series, subset_to_json, test_asymptotically_additive,
                             vert_G, vert_sup)
from utils.data_processing import RunConfig
from utils.errors import SetMapEvaluationError

logger = logging.getLogger(__name__)


def _failure(analysis: str, error: SetMapEvaluationError) -> Dict[str, Any]:
    subset = error.subset
    return {'analysis': analysis, 'message': str(error),
            'subset': subset_to_json(subset) if subset is not None else None}


def run(config: RunConfig) -> CommandOutput:
    """Equivariance gate first; additivity is only analysed for equivariant maps"""
    phi, schedule = config.setmap, config.schedule
    payload: Dict[str, Any] = {'setmap': phi.to_dict(), 'schedule': schedule.to_dict(), 'tol': config.tol}
    tables = {}
    failures: List[Dict[str, Any]] = []

    try:
        equivariance = check_equivariance(phi, config.samples, config.seed)
        payload['equivariance'] = equivariance.to_dict()
        payload['equivariant'] = equivariance.passed
    except SetMapEvaluationError as e:
        failures.append(_failure('equivariance', e))
        payload['equivariant'] = None

    try:
        payload['vert_sup'] = vert_sup(phi, schedule, seed=config.seed)
    except SetMapEvaluationError as e:
        failures.append(_failure('vert_sup', e))

    try:
        report = vert_G(phi, schedule, config.tol)
        payload['vert_G'] = report.to_dict()
        tables['vert_G'] = report.to_frame()
    except SetMapEvaluationError as e:
        failures.append(_failure('vert_G', e))

    if payload['equivariant']:
        try:
            result = test_asymptotically_additive(phi, schedule, config.tol, config.window, config.max_iter)
            payload['aa'] = result.is_additive
            payload['additivity'] = result.to_dict(phi.rep)
            residual = residual_series(phi, result.v, schedule, config.tol)
            tables['residual'] = residual.to_frame()
        except SetMapEvaluationError as e:
            failures.append(_failure('asymptotic_additivity', e))
            payload['aa'] = None
    else:
        logger.info("Skipping the additivity analysis for a map that is not equivariant")
        payload['aa'] = None
        payload['additivity'] = {'skipped': 'set map is not G-equivariant'}

    payload['failures'] = failures
    return CommandOutput(payload, tables)
