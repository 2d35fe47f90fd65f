"""
Variational-principle certificate over a Bernoulli or Markov measure family
"""

import logging

from commands import CommandOutput
from modules.group_core import interval
from modules.thermo import equilibrium_state_1d, transfer_matrix, variational_certificate
from utils.calculations import is_irreducible
from utils.data_processing import RunConfig

logger = logging.getLogger(__name__)


def run(config: RunConfig) -> CommandOutput:
    """
    Certificate report: pressure, family supremum, argmax measure and gap

    One-dimensional pair potentials also report their equilibrium state.
    """
    X = config.subshift
    phi = config.potential if config.potential is not None else config.setmap
    certificate = variational_certificate(X, phi, config.family, config.schedule, tol=config.tol,
                                          grid_step=config.grid_step, restarts=config.restarts, seed=config.seed)
    logger.info("Variational gap %.3e over the %s family", certificate.gap, config.family)
    payload = {'subshift': X.to_dict(), 'schedule': config.schedule.to_dict(), 'certificate': certificate.to_dict()}

    potential = config.potential
    if potential is not None and X.dimension == 1 and potential.window.issubset(interval(0, 2)) \
            and is_irreducible(transfer_matrix(X, potential)):
        payload['equilibrium_state'] = equilibrium_state_1d(X, potential).to_dict()
    return CommandOutput(payload)
