"""
Additive realization with the optional relative dichotomy against a target set W
"""

import logging

from commands import CommandOutput
from modules.setmaps import Subspace, dichotomy_classify, realize, test_relative_aa
from utils.data_processing import RunConfig

logger = logging.getLogger(__name__)


def run(config: RunConfig) -> CommandOutput:
    """
    Realized vector, residual series and, when a target is given, the B1/B2 verdict

    A PreconditionError (not asymptotically additive at the coarsest accuracy) propagates
    with the minimised gap. A target the map is not relatively asymptotically additive to
    completes with exit code 3.
    """
    phi, schedule = config.setmap, config.schedule
    result = realize(phi, schedule, config.eps_schedule, config.window, config.max_iter, config.tol)
    logger.info("Realized with candidate '%s', residual tail sup %.3e", result.candidate, result.residual_estimate)

    payload = {
        'setmap': phi.to_dict(),
        'schedule': schedule.to_dict(),
        'realization': result.to_dict(phi.rep),
    }
    tables = {'residual': result.residual_series.to_frame()}
    exit_code = 0

    if config.target is not None:
        payload['target'] = config.target.to_dict()
        if isinstance(config.target, Subspace):
            verdict = dichotomy_classify(phi, config.target, schedule, config.tol, config.max_iter)
            payload['dichotomy'] = verdict.to_dict()
            hypothesis = verdict.outcome != 'out-of-hypothesis'
        else:
            relative = test_relative_aa(phi, config.target, schedule, config.tol, config.max_iter)
            payload['relative'] = relative.to_dict()
            hypothesis = relative.is_relative
        if not hypothesis:
            logger.warning("Set map is not relatively asymptotically additive to the target")
            exit_code = 3

    return CommandOutput(payload, tables, exit_code)
