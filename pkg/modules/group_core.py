"""
Countable amenable groups Z^d, finite subsets, invariance defects and Følner schedules

Every limit "F -> G" in the toolkit is estimated along a single Følner schedule; the
reports produced here are labelled as single-schedule estimates.
"""

import itertools
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from utils.calculations import linear_trend
from utils.errors import ConfigurationError, InsufficientDataError

logger = logging.getLogger(__name__)

GroupElement = Tuple[int, ...]

DEFAULT_WINDOWS = {1: (4, 64), 2: (2, 12)}
DEFAULT_TAIL_FRACTION = 0.25
SINGLE_SCHEDULE_LABEL = "single-schedule estimate"


def as_element(g: Union[int, Sequence[int]], dimension: Optional[int] = None) -> GroupElement:
    """
    Normalise an integer or integer sequence into a group element of Z^d

    Args:
        g: an int (only for d = 1) or a sequence of ints
        dimension: expected dimension, checked when given

    Returns:
        Tuple of ints
    """
    if isinstance(g, (int, np.integer)):
        element = (int(g),)
    else:
        element = tuple(int(c) for c in g)
    if dimension is not None and len(element) != dimension:
        raise ConfigurationError(f"Group element {element} does not live in Z^{dimension}")
    return element


def identity(dimension: int) -> GroupElement:
    return (0,) * dimension


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    return tuple(a + b for a, b in zip(g, h))


def invert(g: GroupElement) -> GroupElement:
    return tuple(-a for a in g)


class Group(ABC):
    """Interface a finitely generated amenable group has to provide"""

    dimension: int

    @abstractmethod
    def identity(self) -> GroupElement:
        ...

    @abstractmethod
    def compose(self, g: GroupElement, h: GroupElement) -> GroupElement:
        ...

    @abstractmethod
    def invert(self, g: GroupElement) -> GroupElement:
        ...

    @abstractmethod
    def ball(self, radius: int) -> 'FiniteSubset':
        ...

    @abstractmethod
    def generators(self) -> List[GroupElement]:
        ...


@dataclass(frozen=True)
class IntegerLattice(Group):
    """The group Z^d with coordinatewise addition"""

    dimension: int = 1

    def __post_init__(self):
        if self.dimension < 1:
            raise ConfigurationError(f"Z^d needs d >= 1, got {self.dimension}")

    def identity(self) -> GroupElement:
        return identity(self.dimension)

    def compose(self, g: GroupElement, h: GroupElement) -> GroupElement:
        return compose(g, h)

    def invert(self, g: GroupElement) -> GroupElement:
        return invert(g)

    def ball(self, radius: int) -> 'FiniteSubset':
        """Word-metric ball of the standard generators (l1 ball)"""
        ranges = [range(-radius, radius + 1)] * self.dimension
        return FiniteSubset(tuple(p for p in itertools.product(*ranges) if sum(map(abs, p)) <= radius))

    def generators(self) -> List[GroupElement]:
        return [tuple(1 if i == axis else 0 for i in range(self.dimension)) for axis in range(self.dimension)]


@dataclass(frozen=True)
class FiniteSubset:
    """A non-empty finite subset of Z^d stored in canonical (lexicographic) order"""

    elements: Tuple[GroupElement, ...]

    def __post_init__(self):
        canonical = tuple(sorted(set(as_element(e) for e in self.elements)))
        if not canonical:
            raise ConfigurationError("Finite subsets must be non-empty")
        dims = {len(e) for e in canonical}
        if len(dims) != 1:
            raise ConfigurationError(f"Mixed dimensions in finite subset: {sorted(dims)}")
        object.__setattr__(self, 'elements', canonical)

    @classmethod
    def of(cls, items: Iterable[Union[int, Sequence[int]]]) -> 'FiniteSubset':
        return cls(tuple(as_element(item) for item in items))

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def dimension(self) -> int:
        return len(self.elements[0])

    @cached_property
    def members(self) -> FrozenSet[GroupElement]:
        return frozenset(self.elements)

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(self.elements, dtype=np.int64)

    def index(self, g: GroupElement) -> int:
        return self.positions[g]

    @cached_property
    def positions(self) -> Dict[GroupElement, int]:
        return {g: i for i, g in enumerate(self.elements)}

    def bounding_box(self) -> 'FiniteSubset':
        """Smallest box (interval in Z) containing the subset"""
        lows = self.array.min(axis=0)
        highs = self.array.max(axis=0)
        ranges = [range(int(lo), int(hi) + 1) for lo, hi in zip(lows, highs)]
        return FiniteSubset(tuple(itertools.product(*ranges)))

    def is_box(self) -> bool:
        lows = self.array.min(axis=0)
        highs = self.array.max(axis=0)
        return self.size == int(np.prod(highs - lows + 1))

    def union(self, other: 'FiniteSubset') -> 'FiniteSubset':
        return FiniteSubset(self.elements + other.elements)

    def issubset(self, other: 'FiniteSubset') -> bool:
        return self.members <= other.members

    def __len__(self) -> int:
        return self.size

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, g) -> bool:
        return as_element(g) in self.members

    def to_list(self) -> List[List[int]]:
        return [list(e) for e in self.elements]


def box(dimension: int, n: int) -> FiniteSubset:
    """Centered box [-n, n]^d"""
    if n < 0:
        raise ConfigurationError(f"Box radius must be non-negative, got {n}")
    return FiniteSubset(tuple(itertools.product(range(-n, n + 1), repeat=dimension)))


def corner_box(dimension: int, n: int) -> FiniteSubset:
    """Box [0, n)^d"""
    if n < 1:
        raise ConfigurationError(f"Box side must be positive, got {n}")
    return FiniteSubset(tuple(itertools.product(range(n), repeat=dimension)))


def interval(a: int, b: int) -> FiniteSubset:
    """Integer interval [a, b) in Z"""
    if b <= a:
        raise ConfigurationError(f"Interval [{a}, {b}) is empty")
    return FiniteSubset(tuple((k,) for k in range(a, b)))


@dataclass(frozen=True)
class InvariancePair:
    """A pair (K, delta) describing (K, delta)-invariance"""

    K: FiniteSubset
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigurationError(f"Invariance tolerance delta must be positive, got {self.delta}")

    def precedes(self, other: 'InvariancePair') -> bool:
        """Partial order: K grows and delta shrinks"""
        return self.K.issubset(other.K) and other.delta <= self.delta


def translate(F: FiniteSubset, g: GroupElement) -> FiniteSubset:
    """
    Left action of g on finite sets, g.F = F g^{-1}

    Args:
        F: finite subset
        g: group element

    Returns:
        The subset {f - g : f in F}
    """
    g = as_element(g, F.dimension)
    return FiniteSubset(tuple(tuple(a - b for a, b in zip(f, g)) for f in F.elements))


def product_set(K: FiniteSubset, F: FiniteSubset) -> FrozenSet[GroupElement]:
    """KF = {k + f : k in K, f in F}"""
    return frozenset(tuple(a + b for a, b in zip(k, f)) for k in K.elements for f in F.elements)


def boundary_set(K: FiniteSubset, F: FiniteSubset) -> FrozenSet[GroupElement]:
    """KF symmetric difference F"""
    return product_set(K, F) ^ F.members


def invariance_defect(K: FiniteSubset, F: FiniteSubset) -> float:
    """
    Relative invariance defect |KF Δ F| / |F|

    Args:
        K: finite subset acting on the left
        F: finite subset

    Returns:
        Non-negative real
    """
    return len(boundary_set(K, F)) / F.size


def is_invariant(F: FiniteSubset, pair: InvariancePair) -> bool:
    """True iff F is (K, delta)-invariant"""
    return invariance_defect(pair.K, F) <= pair.delta


@dataclass(frozen=True)
class FolnerSchedule:
    """
    A rule n -> F_n together with the window of indices used for numerics

    Args:
        generator: callable returning the n-th set
        n_min, n_max, step: index window (inclusive)
        dimension: dimension of the ambient lattice
        name: short description used in reports
        ns: explicit index list overriding the (n_min, n_max, step) window
    """

    generator: Callable[[int], FiniteSubset]
    n_min: int
    n_max: int
    dimension: int = 1
    step: int = 1
    name: str = 'custom'
    ns: Optional[Tuple[int, ...]] = None

    def indices(self) -> List[int]:
        if self.ns is not None:
            return list(self.ns)
        return list(range(self.n_min, self.n_max + 1, self.step))

    def to_dict(self) -> Dict[str, Any]:
        return {'type': self.name, 'n_min': self.n_min, 'n_max': self.n_max,
                'step': self.step, 'dimension': self.dimension,
                'ns': list(self.ns) if self.ns is not None else None}


def box_schedule(dimension: int = 1, n_min: Optional[int] = None, n_max: Optional[int] = None,
                 step: int = 1) -> FolnerSchedule:
    """Centered boxes [-n, n]^d (the default schedule)"""
    default_min, default_max = DEFAULT_WINDOWS.get(dimension, (2, 8))
    return FolnerSchedule(
        generator=lambda n: box(dimension, n),
        n_min=default_min if n_min is None else n_min,
        n_max=default_max if n_max is None else n_max,
        dimension=dimension,
        step=step,
        name='boxes',
    )


def interval_schedule(n_min: int, n_max: int, step: int = 1, dimension: int = 1) -> FolnerSchedule:
    """Corner boxes [0, n)^d; intervals [0, n) in Z"""
    return FolnerSchedule(
        generator=lambda n: corner_box(dimension, n),
        n_min=n_min,
        n_max=n_max,
        dimension=dimension,
        step=step,
        name='intervals' if dimension == 1 else 'corner_boxes',
    )


def geometric_schedule(exponents: Sequence[int], base: int = 2, dimension: int = 1) -> FolnerSchedule:
    """Corner boxes [0, base^k)^d for k in exponents: a sparse ladder of large sets"""
    ns = tuple(base ** k for k in exponents)
    return FolnerSchedule(
        generator=lambda n: corner_box(dimension, n),
        n_min=min(ns),
        n_max=max(ns),
        dimension=dimension,
        name='geometric',
        ns=ns,
    )


def folner_window(schedule: FolnerSchedule) -> List[FiniteSubset]:
    """
    Materialise F_n for every index of the schedule window

    Args:
        schedule: Følner schedule

    Returns:
        List of finite subsets in increasing n
    """
    ns = schedule.indices()
    if not ns:
        raise ConfigurationError(
            f"Følner window is empty (n_min={schedule.n_min}, n_max={schedule.n_max}, step={schedule.step})")
    return [schedule.generator(n) for n in ns]


def is_folner_window(schedule: FolnerSchedule, gens: Sequence[GroupElement]) -> Tuple[bool, List[str]]:
    """
    Check nestedness and decay of translation defects along the window

    Returns:
        Tuple of (ok, problems)
    """
    problems = []
    window = folner_window(schedule)
    for previous, current in zip(window, window[1:]):
        if not previous.issubset(current):
            problems.append(f"Window is not nested at |F| = {previous.size}")
            break
    for g in gens:
        K = FiniteSubset((as_element(g, schedule.dimension),))
        defects = [invariance_defect(K, F) for F in window]
        if defects[-1] > defects[0] and defects[0] > 0:
            problems.append(f"Defect for g={K.elements[0]} grows along the window")
    return len(problems) == 0, problems


@dataclass(frozen=True)
class ConvergenceReport:
    """A series ((F_n, value_n))_n with tail statistics and diagnostics"""

    ns: Tuple[int, ...]
    sizes: Tuple[int, ...]
    values: Tuple[float, ...]
    tail_start: int
    tail_sup: float
    tail_inf: float
    minimum: float
    limit_estimate: float
    trend: str
    stabilized: bool
    tolerance: float
    tail_fraction: float = DEFAULT_TAIL_FRACTION
    name: str = 'value'
    label: str = SINGLE_SCHEDULE_LABEL
    reference: Optional[float] = None
    limit_drift: Optional[float] = None

    @property
    def series(self) -> List[Tuple[int, int, float]]:
        return list(zip(self.ns, self.sizes, self.values))

    @property
    def tail(self) -> Tuple[float, ...]:
        return self.values[self.tail_start:]

    @property
    def last(self) -> float:
        return self.values[-1]

    def with_reference(self, reference: float) -> 'ConvergenceReport':
        return replace(self, reference=float(reference))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'n': list(self.ns), 'size': list(self.sizes), self.name: list(self.values)})

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'label': self.label,
            'series': [[n, size, value] for n, size, value in self.series],
            'tail_sup': self.tail_sup,
            'tail_inf': self.tail_inf,
            'minimum': self.minimum,
            'limit_estimate': self.limit_estimate,
            'trend': self.trend,
            'stabilized': self.stabilized,
            'limit_drift': self.limit_drift,
            'tail_fraction': self.tail_fraction,
            'reference': self.reference,
        }


def _trend(tail: np.ndarray) -> str:
    scale = max(1.0, float(np.abs(tail).max()))
    slack = 1e-12 * scale
    if float(np.ptp(tail)) <= slack:
        return 'constant'
    diffs = np.diff(tail)
    if np.all(diffs <= slack):
        return 'decreasing'
    if np.all(diffs >= -slack):
        return 'increasing'
    return 'oscillating'


def _limit_drift(scales: np.ndarray, tail: np.ndarray) -> Optional[float]:
    """Distance between the a + b/n extrapolations of the two halves of the tail"""
    half = len(tail) // 2
    if half < 2:
        return None
    early = linear_trend(scales[:half], tail[:half])
    late = linear_trend(scales[half:], tail[half:])
    if early is None or late is None:
        return None
    return abs(late[0] - early[0])


def limsup_along(values: Sequence[Tuple[FiniteSubset, float]], schedule: Optional[FolnerSchedule] = None,
                 tail_fraction: float = DEFAULT_TAIL_FRACTION, tol: float = 1e-3,
                 name: str = 'value') -> ConvergenceReport:
    """
    Estimate limsup_{F -> G} of a real series along one Følner schedule

    The tail is the last `tail_fraction` of the window (at least two points). The
    limit is extrapolated by a least-squares fit value ~ a + b/n over the tail.
    The series is stabilised when the tail spread is within tol, or when the tail does not
    oscillate and the extrapolations from its two halves agree within tol.

    Args:
        values: pairs (F_n, value_n) in schedule order
        schedule: the schedule that produced the sets; supplies the indices n
        tail_fraction: share of the window used for tail statistics
        tol: stabilisation tolerance on the tail spread
        name: column name used in exports

    Returns:
        ConvergenceReport
    """
    if len(values) < 3:
        raise InsufficientDataError(f"Need at least 3 points to estimate a limit, got {len(values)}")
    if not 0.0 < tail_fraction <= 1.0:
        raise ConfigurationError(f"Tail fraction must lie in (0, 1], got {tail_fraction}")

    sizes = tuple(F.size for F, _ in values)
    series = np.array([float(v) for _, v in values])
    ns = schedule.indices() if schedule is not None else []
    if len(ns) != len(values):
        ns = list(range(1, len(values) + 1))

    count = len(series)
    tail_len = min(count, max(2, math.ceil(tail_fraction * count)))
    tail_start = count - tail_len
    tail = series[tail_start:]

    if all(n > 0 for n in ns):
        scales = 1.0 / np.array(ns[tail_start:], dtype=float)
    else:
        dimension = values[0][0].dimension
        scales = 1.0 / np.array(sizes[tail_start:], dtype=float) ** (1.0 / dimension)
    fit = linear_trend(scales, tail)
    limit = fit[0] if fit is not None else float(tail[-1])

    trend = _trend(tail)
    spread = float(np.ptp(tail))
    drift = _limit_drift(scales, tail)
    settled = trend != 'oscillating' and drift is not None and drift <= tol
    stabilized = spread <= tol or trend == 'constant' or settled
    if not stabilized:
        logger.warning("Series '%s' has not stabilised: tail spread %.3e and limit drift %s exceed %.3e",
                       name, spread, 'n/a' if drift is None else f'{drift:.3e}', tol)

    return ConvergenceReport(
        ns=tuple(int(n) for n in ns),
        sizes=sizes,
        values=tuple(float(v) for v in series),
        tail_start=tail_start,
        tail_sup=float(tail.max()),
        tail_inf=float(tail.min()),
        minimum=float(series.min()),
        limit_estimate=float(limit),
        trend=trend,
        stabilized=bool(stabilized),
        tolerance=tol,
        limit_drift=drift,
        tail_fraction=tail_fraction,
        name=name,
    )


def series_along(schedule: FolnerSchedule, evaluate: Callable[[FiniteSubset], float],
                 tail_fraction: float = DEFAULT_TAIL_FRACTION, tol: float = 1e-3,
                 name: str = 'value') -> ConvergenceReport:
    """Evaluate a real function of F along the schedule window and summarise it"""
    window = folner_window(schedule)
    return limsup_along([(F, evaluate(F)) for F in window], schedule, tail_fraction, tol, name)
