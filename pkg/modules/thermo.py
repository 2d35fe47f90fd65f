"""
Partition functions, pressure, Markov measures, Kolmogorov-Sinai entropy, equilibrium states
and variational-principle certificates on subshifts
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.optimize import minimize, minimize_scalar
from scipy.special import logsumexp, softmax

from modules.group_core import (ConvergenceReport, FiniteSubset, FolnerSchedule, folner_window, interval,
                                limsup_along)
from modules.representation import KoopmanRepresentation
from modules.setmaps import AdditiveMap, SetMap, eval as evaluate_setmap, realize
from modules.subshift import Potential, Subshift, cylinder_sups
from utils.calculations import (gth_stationary, is_irreducible, pairwise_sum, perron_vector, shannon_entropy,
                                tree_logsumexp, xlogx)
from utils.errors import ConfigurationError, PreconditionError, ResourceCapError
from utils.settings import setting

logger = logging.getLogger(__name__)

ENUMERATION = 'enumeration'
TRANSFER_MATRIX = 'transfer_matrix'
UPPER_BOUND_LABEL = 'locally admissible upper bound'
EXACT_LABEL = 'exact'
STOCHASTIC_TOLERANCE = 1e-12
METHOD_AGREEMENT = 1e-9
SUP_CONVENTION = 'cylinder sup over admissible collar completions'

PotentialLike = Union[SetMap, Potential]


def _value_on(X: Subshift, phi: PotentialLike, F: FiniteSubset) -> Potential:
    """phi(F) as a locally constant function; a bare potential stands for S(phi)"""
    if isinstance(phi, Potential):
        return phi.sum_translates(F)
    if not isinstance(phi.rep, KoopmanRepresentation):
        raise ConfigurationError("Thermodynamic quantities need a set map over a Koopman representation")
    return evaluate_setmap(phi, F)


def _additive_potential(phi: PotentialLike) -> Optional[Potential]:
    if isinstance(phi, Potential):
        return phi
    if isinstance(phi, AdditiveMap) and isinstance(phi.v, Potential):
        return phi.v
    return None


def log_partition_function(X: Subshift, phi: PotentialLike, F: FiniteSubset, cap: Optional[int] = None) -> float:
    """
    log Z_F(phi) = log sum_{w in X_F} exp(sup phi(F)([w]))

    Args:
        X: subshift
        phi: set map over the Koopman representation of X, or a potential (meaning S(phi))
        F: finite support
        cap: pattern cap

    Returns:
        The logarithm, reduced with a deterministic tree sum
    """
    return tree_logsumexp(cylinder_sups(X, _value_on(X, phi, F), F, cap), workers=setting('workers'))


def partition_function(X: Subshift, phi: PotentialLike, F: FiniteSubset, cap: Optional[int] = None) -> float:
    return math.exp(log_partition_function(X, phi, F, cap))


def _pair_table(X: Subshift, potential: Potential) -> np.ndarray:
    if X.dimension != 1:
        raise ConfigurationError("Transfer matrices are built for one-dimensional subshifts")
    pair = interval(0, 2)
    if not potential.window.issubset(pair):
        raise ConfigurationError(f"Transfer matrices need a potential window inside {{0, 1}}, "
                                 f"got {potential.window.to_list()}")
    return np.asarray(potential.extend(pair).table, dtype=float)


def transfer_matrix(X: Subshift, potential: Potential) -> np.ndarray:
    """Ruelle matrix M_ij = A_ij exp(phi(i, j))"""
    table = _pair_table(X, potential)
    allowed = X.transition_matrix(0)
    return np.where(allowed == 1, np.exp(table), 0.0)


def log_partition_transfer(X: Subshift, potential: Potential, length: int) -> float:
    """
    log Z_[0,n)(S(phi)) from the path sum 1^T M^{n-1} b with b_i = exp(max_{j allowed} phi(i, j))

    The iteration is rescaled at every step, so long intervals do not overflow.
    """
    if length < 1:
        raise ConfigurationError(f"Interval length must be positive, got {length}")
    table = _pair_table(X, potential)
    allowed = X.transition_matrix(0) == 1
    M = transfer_matrix(X, potential)
    collar = np.where(allowed, table, -np.inf).max(axis=1)
    vector = np.exp(collar - collar[np.isfinite(collar)].max())
    log_scale = float(collar[np.isfinite(collar)].max())
    for _ in range(length - 1):
        vector = M @ vector
        top = float(vector.max())
        if top == 0.0:
            return float('-inf')
        vector /= top
        log_scale += math.log(top)
    return log_scale + math.log(float(vector.sum()))


def spectral_pressure(X: Subshift, potential: Potential) -> float:
    """log of the Perron eigenvalue of the transfer matrix"""
    M = transfer_matrix(X, potential)
    if is_irreducible(M):
        eigenvalue, _, _ = perron_vector(M)
        return math.log(eigenvalue)
    return math.log(float(np.max(np.abs(np.linalg.eigvals(M)))))


@dataclass(frozen=True)
class PressureEstimate:
    """Series (1/|F_n|) log Z_{F_n} with its extrapolated limit and a method comparison"""

    series: ConvergenceReport
    limit_estimate: float
    method: str
    stabilized: bool
    label: str = EXACT_LABEL
    spectral: Optional[float] = None
    transfer_values: Optional[Tuple[Optional[float], ...]] = None
    methods_agree: Optional[bool] = None
    max_method_gap: Optional[float] = None
    convention: str = SUP_CONVENTION

    def to_frame(self) -> pd.DataFrame:
        frame = self.series.to_frame()
        if self.transfer_values is not None:
            frame['transfer_matrix'] = [np.nan if v is None else v for v in self.transfer_values]
        return frame

    def to_dict(self) -> Dict[str, Any]:
        return {
            'series': self.series.to_dict(),
            'limit': self.limit_estimate,
            'method': self.method,
            'stabilized': self.stabilized,
            'label': self.label,
            'spectral': self.spectral,
            'methods_agree': self.methods_agree,
            'max_method_gap': self.max_method_gap,
            'convention': self.convention,
        }


def _transfer_applicable(X: Subshift, potential: Optional[Potential]) -> bool:
    return (potential is not None and X.dimension == 1
            and potential.window.issubset(interval(0, 2)))


def pressure(X: Subshift, phi: PotentialLike, schedule: FolnerSchedule, tol: float = 1e-3,
             cap: Optional[int] = None) -> PressureEstimate:
    """
    Pressure of a set map (or of S(phi) for a potential) along the schedule

    Enumeration runs wherever the pattern cap allows. For one-dimensional additive maps
    of pair potentials the transfer-matrix path sum is evaluated on every interval as well
    and the log of the Perron eigenvalue is used as the limit.

    Args:
        X: subshift
        phi: set map over the Koopman representation, or a potential
        schedule: Følner schedule
        tol: stabilisation tolerance
        cap: pattern cap

    Returns:
        PressureEstimate
    """
    potential = _additive_potential(phi)
    transfer = _transfer_applicable(X, potential)
    values, transfer_values, gaps = [], [], []
    used_enumeration = used_transfer = False

    for F in folner_window(schedule):
        exact_transfer = None
        if transfer and F.is_box():
            exact_transfer = log_partition_transfer(X, potential, F.size) / F.size
        try:
            value = log_partition_function(X, phi, F, cap) / F.size
            used_enumeration = True
            if exact_transfer is not None:
                gaps.append(abs(value - exact_transfer))
        except ResourceCapError:
            if exact_transfer is None:
                raise
            value = exact_transfer
        if exact_transfer is not None:
            used_transfer = True
        values.append((F, value))
        transfer_values.append(exact_transfer)

    report = limsup_along(values, schedule, setting('tail_fraction'), tol, name='log_Z_per_site')
    spectral = spectral_pressure(X, potential) if transfer else None
    limit = spectral if spectral is not None else report.limit_estimate

    if used_enumeration and used_transfer:
        method = f'{ENUMERATION}+{TRANSFER_MATRIX}'
    else:
        method = TRANSFER_MATRIX if used_transfer else ENUMERATION

    methods_agree = None
    max_gap = None
    if gaps:
        max_gap = float(max(gaps))
        methods_agree = max_gap <= METHOD_AGREEMENT
        if not methods_agree:
            logger.warning("Enumeration and transfer matrix differ by %.3e", max_gap)

    label = EXACT_LABEL
    if X.dimension > 1 and not X.is_full:
        label = UPPER_BOUND_LABEL
        logger.warning("2D pressure of a constrained shift is a %s", UPPER_BOUND_LABEL)

    return PressureEstimate(
        series=report.with_reference(spectral) if spectral is not None else report,
        limit_estimate=float(limit),
        method=method,
        stabilized=report.stabilized,
        label=label,
        spectral=spectral,
        transfer_values=tuple(transfer_values) if transfer else None,
        methods_agree=methods_agree,
        max_method_gap=max_gap,
    )


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """
    A shift-invariant Markov measure (1D) or an i.i.d. product measure (any dimension)

    Args:
        stationary: distribution p of a single coordinate
        transition: row-stochastic P (None for product measures)
        dimension: lattice dimension
        name: short description used in reports
    """

    stationary: np.ndarray
    transition: Optional[np.ndarray] = None
    dimension: int = 1
    name: str = 'markov'

    def __post_init__(self):
        p = np.asarray(self.stationary, dtype=float)
        if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > STOCHASTIC_TOLERANCE * max(1, p.size):
            raise ConfigurationError(f"Stationary vector must be a probability vector, got {p}")
        object.__setattr__(self, 'stationary', p)
        if self.transition is not None:
            P = np.asarray(self.transition, dtype=float)
            if self.dimension != 1:
                raise ConfigurationError("Markov chains with a transition matrix are one-dimensional")
            if P.shape != (p.size, p.size) or np.any(P < 0):
                raise ConfigurationError(f"Transition matrix must be non-negative of shape {(p.size, p.size)}")
            if np.max(np.abs(P.sum(axis=1) - 1.0)) > STOCHASTIC_TOLERANCE * p.size:
                raise ConfigurationError("Transition matrix must be row-stochastic")
            if np.max(np.abs(p @ P - p)) > STOCHASTIC_TOLERANCE * p.size:
                raise ConfigurationError("Stationary vector is not invariant under the transition matrix")
            object.__setattr__(self, 'transition', P)

    @property
    def alphabet_size(self) -> int:
        return self.stationary.size

    @property
    def is_product(self) -> bool:
        return self.transition is None

    def check_support(self, X: Subshift) -> None:
        """Raise when the measure charges patterns outside X"""
        if self.alphabet_size != X.size:
            raise ConfigurationError(f"Measure over {self.alphabet_size} symbols, subshift over {X.size}")
        if self.dimension != X.dimension:
            raise ConfigurationError(f"Measure lives on Z^{self.dimension}, subshift on Z^{X.dimension}")
        if X.is_full:
            return
        if self.is_product:
            charged = self.stationary > 0
            pairs = np.outer(charged, charged)
            for axis in range(X.dimension):
                if np.any(pairs & (X.transition_matrix(axis) == 0)):
                    raise ConfigurationError("Product measure charges forbidden adjacent pairs")
        elif np.any((self.transition > 0) & (X.transition_matrix(0) == 0)):
            raise ConfigurationError("Transition matrix charges forbidden transitions")

    def entropy(self) -> float:
        """Closed-form entropy per site"""
        if self.is_product:
            return shannon_entropy(self.stationary)
        return float(-pairwise_sum((self.stationary[:, None] * xlogx(self.transition)).ravel()))

    def pattern_probabilities(self, F: FiniteSubset, cap: Optional[int] = None) -> np.ndarray:
        """Dense tensor of mu([w]) over the patterns w on F (canonical order)"""
        limit = setting('pattern_cap') if cap is None else cap
        k = self.alphabet_size
        if self.is_product:
            if k ** F.size > limit:
                raise ResourceCapError(f"{k ** F.size} patterns exceed the cap {limit}", k ** F.size)
            probabilities = np.ones(())
            for _ in range(F.size):
                probabilities = np.multiply.outer(probabilities, self.stationary)
            return probabilities

        hull = F.bounding_box()
        if k ** hull.size > limit:
            raise ResourceCapError(f"{k ** hull.size} patterns exceed the cap {limit}", k ** hull.size)
        probabilities = self.stationary.copy()
        for _ in range(hull.size - 1):
            probabilities = probabilities[..., :, None] * self.transition
        extra = tuple(i for i, g in enumerate(hull.elements) if g not in F.members)
        if extra:
            probabilities = probabilities.sum(axis=extra)
        return probabilities

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'dimension': self.dimension,
            'stationary': self.stationary.tolist(),
            'transition': None if self.transition is None else self.transition.tolist(),
        }


def bernoulli(weights: Sequence[float], dimension: int = 1) -> MarkovMeasure:
    weights = np.asarray(weights, dtype=float)
    if weights.sum() <= 0:
        raise ConfigurationError("Bernoulli weights must have a positive sum")
    return MarkovMeasure(weights / weights.sum(), None, dimension, name='bernoulli')


def markov(transition: np.ndarray, stationary: Optional[np.ndarray] = None) -> MarkovMeasure:
    """Markov measure of a row-stochastic matrix; the stationary vector defaults to the GTH solution"""
    transition = np.asarray(transition, dtype=float)
    if stationary is None:
        stationary = gth_stationary(transition)
    return MarkovMeasure(np.asarray(stationary, dtype=float), transition, 1, name='markov')


def parry_measure(X: Subshift) -> MarkovMeasure:
    """The measure of maximal entropy of an irreducible 1D SFT"""
    if X.dimension != 1:
        raise ConfigurationError("The Parry measure is built for one-dimensional subshifts")
    A = X.transition_matrix(0).astype(float)
    eigenvalue, right, _ = perron_vector(A)
    P = A * right[None, :] / (eigenvalue * right[:, None])
    P /= P.sum(axis=1, keepdims=True)
    measure = markov(P)
    return MarkovMeasure(measure.stationary, measure.transition, 1, name='parry')


def measure_entropy(mu: MarkovMeasure) -> float:
    return mu.entropy()


def measure_integral(X: Subshift, mu: MarkovMeasure, potential: Potential, cap: Optional[int] = None) -> float:
    """Integral of a locally constant function against an invariant measure"""
    mu.check_support(X)
    hull = potential.window.bounding_box()
    probabilities = mu.pattern_probabilities(hull, cap)
    table = np.asarray(potential.extend(hull).table, dtype=float)
    return pairwise_sum((probabilities * table).ravel())


def ks_entropy(X: Subshift, mu: MarkovMeasure, schedule: FolnerSchedule, tol: float = 1e-3,
               cap: Optional[int] = None) -> ConvergenceReport:
    """
    H_mu(F_n) / |F_n| along the schedule with the closed-form limit as reference

    Pattern probabilities are enumerated while they fit under the cap; larger intervals
    use the chain rule H(x_[0,n)) = H(p) + (n - 1) h.
    """
    mu.check_support(X)
    reference = mu.entropy()
    values = []
    for F in folner_window(schedule):
        try:
            H = shannon_entropy(mu.pattern_probabilities(F, cap))
        except ResourceCapError:
            if mu.is_product:
                H = F.size * reference
            elif F.is_box():
                H = shannon_entropy(mu.stationary) + (F.size - 1) * reference
            else:
                raise
        values.append((F, H / F.size))
    return limsup_along(values, schedule, setting('tail_fraction'), tol, name='entropy').with_reference(reference)


def integral_of_setmap(X: Subshift, phi: PotentialLike, mu: MarkovMeasure, schedule: FolnerSchedule,
                       tol: float = 1e-3, realized: Optional[Potential] = None,
                       cap: Optional[int] = None) -> ConvergenceReport:
    """
    (1/|F_n|) integral of phi(F_n) d mu along the schedule

    The reference value is the integral of the realized potential (the potential itself
    for additive maps) when one is known.
    """
    mu.check_support(X)
    values = [(F, measure_integral(X, mu, _value_on(X, phi, F), cap) / F.size) for F in folner_window(schedule)]
    report = limsup_along(values, schedule, setting('tail_fraction'), tol, name='integral')
    if realized is None:
        realized = _additive_potential(phi)
    if realized is not None:
        report = report.with_reference(measure_integral(X, mu, realized, cap))
    return report


@dataclass(frozen=True)
class EquilibriumState:
    """Gibbs-Markov measure of a pair potential with its pressure certificate"""

    measure: MarkovMeasure
    pressure: float
    eigenvalue: float
    right_vector: np.ndarray
    entropy: float
    integral: float

    @property
    def certificate_gap(self) -> float:
        return abs(self.entropy + self.integral - self.pressure)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'measure': self.measure.to_dict(),
            'pressure': self.pressure,
            'eigenvalue': self.eigenvalue,
            'right_vector': self.right_vector.tolist(),
            'entropy': self.entropy,
            'integral': self.integral,
            'certificate_gap': self.certificate_gap,
        }


def _perron_data(M: np.ndarray) -> Tuple[float, np.ndarray]:
    eigenvalue, right, _ = perron_vector(M)
    # polish with the dense eigensolver; the power iterate picks the eigenpair
    values, vectors = np.linalg.eig(M)
    index = int(np.argmax(values.real))
    candidate = np.abs(vectors[:, index].real)
    candidate /= candidate.sum()
    if np.allclose(candidate, right, atol=1e-6):
        return float(values[index].real), candidate
    return eigenvalue, right


def equilibrium_state_1d(X: Subshift, phi: Potential) -> EquilibriumState:
    """
    Equilibrium state of a pair potential on a 1D nearest-neighbour SFT

    P_ij = M_ij r_j / (lambda r_i) for the Perron data (lambda, r) of M_ij = A_ij exp(phi(i, j)).

    Args:
        X: one-dimensional subshift
        phi: potential with window inside {0, 1}

    Returns:
        EquilibriumState; raises SolverError when M is reducible
    """
    M = transfer_matrix(X, phi)
    eigenvalue, right = _perron_data(M)
    P = M * right[None, :] / (eigenvalue * right[:, None])
    P /= P.sum(axis=1, keepdims=True)
    stationary = gth_stationary(P)
    measure = MarkovMeasure(stationary, P, 1, name='equilibrium')

    table = _pair_table(X, phi)
    weights = stationary[:, None] * P
    integral = pairwise_sum(np.where(weights > 0, weights * table, 0.0).ravel())
    entropy = measure.entropy()
    state = EquilibriumState(measure, math.log(eigenvalue), eigenvalue, right, entropy, integral)
    logger.info("Equilibrium state: pressure %.12g, certificate gap %.3e", state.pressure, state.certificate_gap)
    return state


@dataclass(frozen=True)
class PressureTransfer:
    """Pressures of phi and of its realization with the pointwise sandwich check"""

    pressure_phi: PressureEstimate
    pressure_realized: PressureEstimate
    realized: Potential
    gaps: Tuple[float, ...]
    epsilons: Tuple[float, ...]
    holds: bool
    gap_series: ConvergenceReport

    def to_frame(self) -> pd.DataFrame:
        frame = self.gap_series.to_frame()
        frame['epsilon'] = list(self.epsilons)
        return frame

    def to_dict(self, X: Subshift) -> Dict[str, Any]:
        return {
            'phi': self.pressure_phi.to_dict(),
            'realized': self.pressure_realized.to_dict(),
            'realized_potential': self.realized.to_dict(X),
            'gap': self.gap_series.to_dict(),
            'epsilons': list(self.epsilons),
            'sandwich_holds': self.holds,
        }


def pressure_of_realization(X: Subshift, phi: SetMap, schedule: FolnerSchedule, tol: float = 1e-3,
                            window: Optional[FiniteSubset] = None, cap: Optional[int] = None) -> PressureTransfer:
    """
    Compare log Z_F(phi) with log Z_F(S(psi)) for the realization psi of phi

    At every F of the window |log Z_F(phi) - log Z_F(S(psi))| / |F| <= eps_F with
    eps_F = ||phi(F)/|F| - A_F psi||_inf.
    """
    result = realize(phi, schedule, window=window, tol=tol)
    psi = result.v
    realized_map = AdditiveMap(phi.rep, psi)

    gaps, epsilons, holds = [], [], True
    values = []
    for F in folner_window(schedule):
        log_phi = log_partition_function(X, phi, F, cap)
        log_psi = log_partition_function(X, psi, F, cap)
        gap = abs(log_phi - log_psi) / F.size
        epsilon = phi.rep.norm(evaluate_setmap(phi, F) / F.size - realized_map.evaluate(F) / F.size)
        if gap > epsilon + 1e-12 * max(1.0, abs(log_phi) / F.size):
            holds = False
            logger.warning("Pressure sandwich fails at |F| = %d: %.3e > %.3e", F.size, gap, epsilon)
        gaps.append(gap)
        epsilons.append(epsilon)
        values.append((F, gap))

    gap_series = limsup_along(values, schedule, setting('tail_fraction'), tol, name='pressure_gap')
    return PressureTransfer(
        pressure_phi=pressure(X, phi, schedule, tol, cap),
        pressure_realized=pressure(X, psi, schedule, tol, cap),
        realized=psi,
        gaps=tuple(gaps),
        epsilons=tuple(epsilons),
        holds=holds,
        gap_series=gap_series,
    )


def variational_value(X: Subshift, phi: PotentialLike, mu: MarkovMeasure,
                      schedule: Optional[FolnerSchedule] = None, cap: Optional[int] = None) -> float:
    """
    h(mu) + lim (1/|F|) integral of phi(F) d mu

    A potential is integrated directly; a set map needs a schedule along which the
    normalised integrals are extrapolated.
    """
    mu.check_support(X)
    if isinstance(phi, Potential):
        return mu.entropy() + measure_integral(X, mu, phi, cap)
    if schedule is None:
        potential = _additive_potential(phi)
        if potential is None:
            raise ConfigurationError("A schedule is needed to integrate a non-additive set map")
        return mu.entropy() + measure_integral(X, mu, potential, cap)
    return mu.entropy() + integral_of_setmap(X, phi, mu, schedule, cap=cap).limit_estimate


@dataclass(frozen=True)
class VariationalCertificate:
    """Supremum of h + integral over a measure family against the pressure"""

    family: str
    pressure: float
    family_sup: float
    argmax: MarkovMeasure
    gap: float
    consistent: bool
    certified: bool
    evaluations: int
    notes: Tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'family': self.family,
            'pressure': self.pressure,
            'family_sup': self.family_sup,
            'argmax': self.argmax.to_dict(),
            'gap': self.gap,
            'consistent': self.consistent,
            'certified': self.certified,
            'evaluations': self.evaluations,
            'notes': list(self.notes),
        }


def _bernoulli_symbols(X: Subshift) -> List[int]:
    if X.is_full:
        return list(range(X.size))
    symbols = [a for a in range(X.size) if all(X.transition_matrix(axis)[a, a] == 1 for axis in range(X.dimension))]
    for a in symbols:
        for b in symbols:
            if any(X.transition_matrix(axis)[a, b] == 0 for axis in range(X.dimension)):
                raise ConfigurationError("The Bernoulli family is not supported on this subshift; "
                                         "use the Markov family")
    if not symbols:
        raise ConfigurationError("No Bernoulli measure is supported on this subshift")
    return symbols


def _bernoulli_search(X: Subshift, psi: Potential, grid_step: float, restarts: int,
                      rng: np.random.Generator) -> Tuple[MarkovMeasure, float, int]:
    symbols = _bernoulli_symbols(X)
    k = X.size

    def measure_of(weights: np.ndarray) -> MarkovMeasure:
        full = np.zeros(k)
        full[symbols] = weights
        return MarkovMeasure(full / full.sum(), None, X.dimension, name='bernoulli')

    def value(weights: np.ndarray) -> float:
        return variational_value(X, psi, measure_of(weights))

    if len(symbols) == 1:
        weights = np.ones(1)
        return measure_of(weights), value(weights), 1

    evaluations = 0
    if len(symbols) == 2:
        grid = np.linspace(0.0, 1.0, int(round(1.0 / grid_step)) + 1)
        scores = []
        for p in grid:
            scores.append(value(np.array([1.0 - p, p])))
        evaluations += len(grid)
        best = int(np.argmax(scores))
        lo, hi = grid[max(best - 1, 0)], grid[min(best + 1, len(grid) - 1)]
        refined = minimize_scalar(lambda p: -value(np.array([1.0 - p, p])), bounds=(lo, hi), method='bounded',
                                  options={'xatol': 1e-12})
        evaluations += int(refined.nfev)
        p_star = float(refined.x) if -refined.fun >= scores[best] else float(grid[best])
        weights = np.array([1.0 - p_star, p_star])
        return measure_of(weights), value(weights), evaluations

    best_weights, best_value = None, -math.inf
    starts = [np.zeros(len(symbols))] + [rng.normal(size=len(symbols)) for _ in range(restarts - 1)]
    for start in starts:
        result = minimize(lambda z: -value(softmax(z)), start, method='L-BFGS-B',
                          options={'ftol': 1e-15, 'gtol': 1e-10})
        evaluations += int(result.nfev)
        if -result.fun > best_value:
            best_value, best_weights = -result.fun, softmax(result.x)
    return measure_of(best_weights), value(best_weights), evaluations


def _markov_search(X: Subshift, psi: Potential, restarts: int,
                   rng: np.random.Generator) -> Tuple[MarkovMeasure, float, int]:
    if X.dimension != 1:
        raise ConfigurationError("The Markov family is one-dimensional")
    allowed = X.transition_matrix(0) == 1
    if not is_irreducible(allowed.astype(float)):
        raise ConfigurationError("The Markov family needs an irreducible transition graph")
    edges = np.argwhere(allowed)

    def measure_of(logits: np.ndarray) -> MarkovMeasure:
        scores = np.full(allowed.shape, -np.inf)
        scores[tuple(edges.T)] = logits
        P = np.exp(scores - logsumexp(scores, axis=1, keepdims=True))
        return markov(P)

    def value(logits: np.ndarray) -> float:
        return variational_value(X, psi, measure_of(logits))

    evaluations = 0
    best_logits, best_value = None, -math.inf
    starts = [np.zeros(len(edges))] + [rng.normal(size=len(edges)) for _ in range(restarts - 1)]
    for start in starts:
        result = minimize(lambda z: -value(z), start, method='L-BFGS-B', options={'ftol': 1e-15, 'gtol': 1e-10})
        evaluations += int(result.nfev)
        if -result.fun > best_value:
            best_value, best_logits = -result.fun, result.x
    measure = measure_of(best_logits)
    return measure, value(best_logits), evaluations


def variational_certificate(X: Subshift, phi: PotentialLike, family: str, schedule: FolnerSchedule,
                            tol: float = 1e-6, grid_step: float = 1e-4, restarts: int = 20,
                            seed: Optional[int] = None) -> VariationalCertificate:
    """
    Search a measure family for sup h(mu) + integral and compare with the pressure

    The integral term uses the realized potential (the potential itself for additive
    maps), which equals lim (1/|F|) integral of phi(F) d mu.

    Args:
        X: subshift
        phi: set map over the Koopman representation, or a potential
        family: 'bernoulli' or 'markov'
        schedule: Følner schedule for the pressure (and the realization)
        tol: certificate tolerance
        grid_step: Bernoulli grid step for two-letter alphabets
        restarts: seeded restarts of the Markov (and larger Bernoulli) search

    Returns:
        VariationalCertificate; a positive gap is a finding, not an error
    """
    notes = []
    psi = _additive_potential(phi)
    if psi is None:
        psi = realize(phi, schedule).v
        notes.append('integral term uses the realized potential')

    estimate = pressure(X, phi, schedule)
    pressure_value = estimate.limit_estimate
    if _transfer_applicable(X, psi):
        pressure_value = spectral_pressure(X, psi)
    if estimate.label != EXACT_LABEL:
        notes.append(estimate.label)

    rng = np.random.default_rng(setting('seed') if seed is None else seed)
    if family == 'bernoulli':
        measure, best, evaluations = _bernoulli_search(X, psi, grid_step, restarts, rng)
    elif family == 'markov':
        measure, best, evaluations = _markov_search(X, psi, restarts, rng)
    else:
        raise ConfigurationError(f"Unknown measure family '{family}', expected 'bernoulli' or 'markov'")

    gap = pressure_value - best
    consistent = gap >= -tol
    if not consistent:
        logger.warning("Family supremum exceeds the pressure by %.3e", -gap)
    return VariationalCertificate(family, float(pressure_value), float(best), measure, float(gap),
                                  bool(consistent), bool(abs(gap) <= tol), evaluations, tuple(notes))
