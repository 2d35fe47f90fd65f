"""
Finite-alphabet subshifts over Z and Z^2, patterns, cylinders and locally constant potentials

Locally constant functions are dense tensors: a function reading the coordinates of a
window W (canonical lexicographic order) is an array of shape (|A|,) * |W| indexed by the
symbols seen on W.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from modules.group_core import (FiniteSubset, GroupElement, as_element, box, invert, translate)
from utils.errors import ConfigurationError, ResourceCapError
from utils.settings import setting

logger = logging.getLogger(__name__)

LOCALLY_ADMISSIBLE_LABEL = "locally admissible (superset of X_F)"
EXACT_LABEL = "exact"


def _pattern_cap(cap: Optional[int]) -> int:
    return setting('pattern_cap') if cap is None else int(cap)


@dataclass(frozen=True, eq=False)
class Subshift:
    """
    A nearest-neighbour subshift of finite type over Z^d (d = 1 or 2)

    Args:
        alphabet: the symbols, in index order
        dimension: 1 or 2
        allowed: one 0/1 matrix per axis; allowed[axis][a, b] = 1 when b may follow a
            along that axis. None means the full shift.
        name: short description used in reports
    """

    alphabet: Tuple[str, ...]
    dimension: int = 1
    allowed: Optional[Tuple[np.ndarray, ...]] = None
    name: str = 'custom'

    def __post_init__(self):
        if len(self.alphabet) == 0:
            raise ConfigurationError("Alphabet must be non-empty")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ConfigurationError(f"Alphabet has repeated symbols: {self.alphabet}")
        if self.dimension not in (1, 2):
            raise ConfigurationError(f"Only dimensions 1 and 2 are supported, got {self.dimension}")
        if self.allowed is not None:
            if len(self.allowed) != self.dimension:
                raise ConfigurationError(
                    f"Need one transition matrix per axis ({self.dimension}), got {len(self.allowed)}")
            matrices = []
            for matrix in self.allowed:
                matrix = np.asarray(matrix)
                if matrix.shape != (self.size, self.size):
                    raise ConfigurationError(
                        f"Transition matrix has shape {matrix.shape}, expected {(self.size, self.size)}")
                if not np.all((matrix == 0) | (matrix == 1)):
                    raise ConfigurationError("Transition matrices must be 0/1")
                matrices.append(matrix.astype(np.int64))
            object.__setattr__(self, 'allowed', tuple(matrices))

    @property
    def size(self) -> int:
        return len(self.alphabet)

    @property
    def is_full(self) -> bool:
        return self.allowed is None or all(bool(np.all(m == 1)) for m in self.allowed)

    def transition_matrix(self, axis: int = 0) -> np.ndarray:
        if self.allowed is None:
            return np.ones((self.size, self.size), dtype=np.int64)
        return self.allowed[axis]

    def exhaustion(self, m: int) -> FiniteSubset:
        """E_m = centered box of radius m - 1, so E_1 = {1_G}"""
        if m < 1:
            raise ConfigurationError(f"Exhaustion index starts at 1, got {m}")
        return box(self.dimension, m - 1)

    def symbol_index(self, symbol: str) -> int:
        try:
            return self.alphabet.index(symbol)
        except ValueError:
            raise ConfigurationError(f"Symbol {symbol!r} is not in the alphabet {self.alphabet}")

    def word(self, symbols: Sequence[int]) -> str:
        letters = [self.alphabet[s] for s in symbols]
        if all(len(letter) == 1 for letter in self.alphabet):
            return ''.join(letters)
        return ','.join(letters)

    def parse_word(self, text: str, length: int) -> Tuple[int, ...]:
        if all(len(letter) == 1 for letter in self.alphabet) and ',' not in text:
            letters = list(text)
        else:
            letters = text.split(',')
        if len(letters) != length:
            raise ConfigurationError(f"Pattern {text!r} should have {length} symbols")
        return tuple(self.symbol_index(letter) for letter in letters)

    def admissible_mask(self, window: FiniteSubset, cap: Optional[int] = None) -> np.ndarray:
        """
        Boolean tensor of locally admissible patterns on a window

        A pattern is locally admissible when every pair of window cells adjacent along an
        axis carries an allowed transition.
        """
        _check_dense(self.size, window.size, cap)
        mask = np.ones((self.size,) * window.size, dtype=bool)
        if self.is_full:
            return mask
        positions = window.positions
        for axis in range(self.dimension):
            allowed = self.allowed[axis].astype(bool)
            step = tuple(1 if i == axis else 0 for i in range(self.dimension))
            for cell in window.elements:
                neighbour = tuple(a + b for a, b in zip(cell, step))
                if neighbour not in positions:
                    continue
                i, j = positions[cell], positions[neighbour]
                shape = [1] * window.size
                shape[i] = self.size
                shape[j] = self.size
                mask &= allowed.reshape(shape)
        return mask

    def to_dict(self) -> Dict[str, Any]:
        constraints: Dict[str, Any] = {'type': 'full'}
        if not self.is_full:
            constraints = {'type': 'nn', 'allowed': [m.tolist() for m in self.allowed]}
        return {'alphabet': list(self.alphabet), 'dimension': self.dimension, 'constraints': constraints}


def full_shift(alphabet: Sequence[str] = ('0', '1'), dimension: int = 1) -> Subshift:
    return Subshift(tuple(alphabet), dimension, None, name='full')


def nearest_neighbor(alphabet: Sequence[str], allowed: Union[np.ndarray, Sequence[np.ndarray]],
                     dimension: int = 1) -> Subshift:
    """Nearest-neighbour SFT; a single matrix is used along every axis"""
    allowed = np.asarray(allowed)
    if allowed.ndim == 2:
        matrices = tuple(allowed for _ in range(dimension))
    else:
        matrices = tuple(np.asarray(m) for m in allowed)
    return Subshift(tuple(alphabet), dimension, matrices, name='nearest_neighbor')


def golden_mean_shift(dimension: int = 1) -> Subshift:
    """Binary shift with no two adjacent 1s (along every axis)"""
    shift = nearest_neighbor(('0', '1'), np.array([[1, 1], [1, 0]]), dimension)
    object.__setattr__(shift, 'name', 'golden_mean')
    return shift


def _check_dense(alphabet_size: int, cells: int, cap: Optional[int]) -> None:
    limit = _pattern_cap(cap)
    count = alphabet_size ** cells
    if count > limit:
        raise ResourceCapError(
            f"Pattern tensor over {cells} cells needs {count} entries (cap {limit})", count)


@dataclass(frozen=True)
class Pattern:
    """An assignment of symbol indices to the cells of a finite support"""

    support: FiniteSubset
    symbols: Tuple[int, ...]

    def __post_init__(self):
        if len(self.symbols) != self.support.size:
            raise ConfigurationError(
                f"Pattern has {len(self.symbols)} symbols for a support of size {self.support.size}")

    def at(self, g: GroupElement) -> int:
        return self.symbols[self.support.index(as_element(g))]

    def as_mapping(self) -> Dict[GroupElement, int]:
        return dict(zip(self.support.elements, self.symbols))


@dataclass(frozen=True)
class PatternSet:
    """Patterns on a support together with an exactness label"""

    support: FiniteSubset
    patterns: Tuple[Pattern, ...]
    exact: bool
    label: str

    def __len__(self) -> int:
        return len(self.patterns)

    def __iter__(self) -> Iterator[Pattern]:
        return iter(self.patterns)

    def __getitem__(self, i: int) -> Pattern:
        return self.patterns[i]

    def words(self, X: Subshift) -> List[str]:
        return [X.word(p.symbols) for p in self.patterns]


def _is_interval(F: FiniteSubset) -> bool:
    return F.dimension == 1 and F.is_box()


def count_patterns(X: Subshift, F: FiniteSubset, cap: Optional[int] = None) -> int:
    """
    Number of patterns in X_F (locally admissible count for 2D constraints)

    Intervals in Z are counted with the transfer matrix, 1^T A^{n-1} 1, in exact integer
    arithmetic; other supports project the admissible tensor of the bounding box.
    """
    if X.is_full:
        return X.size ** F.size
    if _is_interval(F):
        matrix = [[int(v) for v in row] for row in X.transition_matrix(0)]
        counts = [1] * X.size
        for _ in range(F.size - 1):
            counts = [sum(matrix[a][b] * counts[b] for b in range(X.size)) for a in range(X.size)]
        return sum(counts)
    return int(_projected_mask(X, F, cap).sum())


def _projected_mask(X: Subshift, F: FiniteSubset, cap: Optional[int]) -> np.ndarray:
    hull = F.bounding_box()
    mask = X.admissible_mask(hull, cap)
    extra = tuple(i for i, g in enumerate(hull.elements) if g not in F.members)
    if extra:
        mask = mask.any(axis=extra)
    return mask


def enumerate_patterns(X: Subshift, F: FiniteSubset, cap: Optional[int] = None) -> PatternSet:
    """
    Enumerate X_F in canonical order

    Intervals in Z are enumerated exactly by extending admissible words one symbol at a
    time. Other supports list the locally admissible patterns of the bounding box
    projected to F; for 2D constraints this is a superset of X_F and is labelled so.

    Args:
        X: subshift
        F: finite support
        cap: maximal number of patterns (defaults to the AMENABLE_PATTERN_CAP setting)

    Returns:
        PatternSet
    """
    limit = _pattern_cap(cap)
    if X.dimension != F.dimension:
        raise ConfigurationError(f"Support lives in Z^{F.dimension}, subshift in Z^{X.dimension}")

    count = count_patterns(X, F, cap) if (X.is_full or _is_interval(F)) else None
    if count is not None and count > limit:
        raise ResourceCapError(f"|X_F| = {count} exceeds the pattern cap {limit}", count)

    if _is_interval(F) and not X.is_full:
        matrix = X.transition_matrix(0).astype(bool)
        words = np.arange(X.size).reshape(-1, 1)
        for _ in range(F.size - 1):
            rows, nxt = np.nonzero(matrix[words[:, -1]])
            words = np.column_stack([words[rows], nxt])
        rows = words
        exact, label = True, EXACT_LABEL
    else:
        mask = _projected_mask(X, F, cap) if not X.is_full else np.ones((X.size,) * F.size, dtype=bool)
        rows = np.argwhere(mask)
        exact = X.is_full or X.dimension == 1
        label = EXACT_LABEL if exact else LOCALLY_ADMISSIBLE_LABEL
        if not exact:
            logger.warning("2D enumeration on %d cells is %s", F.size, LOCALLY_ADMISSIBLE_LABEL)

    patterns = tuple(Pattern(F, tuple(int(s) for s in row)) for row in rows)
    return PatternSet(F, patterns, exact, label)


def shift_distance(X: Subshift, x: Pattern, y: Pattern) -> float:
    """
    Metric d(x, y) = 2^{-inf{m >= 1 : x_{E_m} != y_{E_m}}} on configurations known on a support

    Returns the exact value when the first disagreement lies in an exhaustion box contained
    in the common support; otherwise returns the upper bound 2^{-(M+1)} where E_M is the
    largest such box (0.0 when the configurations coincide).
    """
    if x.support != y.support:
        raise ConfigurationError("Configurations must be known on the same support")
    if x.symbols == y.symbols:
        return 0.0
    xs, ys = x.as_mapping(), y.as_mapping()
    m = 1
    while True:
        E = X.exhaustion(m)
        if not E.issubset(x.support):
            return 2.0 ** (-m)
        if any(xs[g] != ys[g] for g in E.elements):
            return 2.0 ** (-m)
        m += 1


@dataclass(frozen=True, eq=False)
class Potential:
    """
    A locally constant function: a dense table over the patterns of a finite window

    Entries of non-admissible patterns are carried along but never read by sups,
    norms or integrals over the subshift.
    """

    window: FiniteSubset
    table: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.table, dtype=float)
        if table.ndim != self.window.size:
            raise ConfigurationError(
                f"Table has {table.ndim} axes for a window of {self.window.size} cells")
        if len(set(table.shape)) > 1:
            raise ConfigurationError(f"Table axes must all have the alphabet size, got {table.shape}")
        object.__setattr__(self, 'table', table)

    @property
    def alphabet_size(self) -> int:
        return self.table.shape[0]

    @property
    def dimension(self) -> int:
        return self.window.dimension

    @classmethod
    def constant(cls, value: float, alphabet_size: int, dimension: int = 1) -> 'Potential':
        window = FiniteSubset(((0,) * dimension,))
        return cls(window, np.full(alphabet_size, float(value)))

    @classmethod
    def zero(cls, alphabet_size: int, dimension: int = 1) -> 'Potential':
        return cls.constant(0.0, alphabet_size, dimension)

    @classmethod
    def single_site(cls, values: Sequence[float], dimension: int = 1) -> 'Potential':
        """phi(x) = values[x(1_G)]"""
        return cls(FiniteSubset(((0,) * dimension,)), np.asarray(values, dtype=float))

    @classmethod
    def pair(cls, matrix: np.ndarray, axis: int = 0, dimension: int = 1) -> 'Potential':
        """phi(x) = matrix[x(1_G), x(e_axis)]"""
        step = tuple(1 if i == axis else 0 for i in range(dimension))
        return cls(FiniteSubset(((0,) * dimension, step)), np.asarray(matrix, dtype=float))

    @classmethod
    def from_function(cls, window: FiniteSubset, alphabet_size: int, fn) -> 'Potential':
        table = np.empty((alphabet_size,) * window.size)
        for symbols in itertools.product(range(alphabet_size), repeat=window.size):
            table[symbols] = fn(symbols)
        return cls(window, table)

    def extend(self, window: FiniteSubset) -> 'Potential':
        """The same function viewed on a larger window (a broadcast view)"""
        if window == self.window:
            return self
        if not self.window.issubset(window):
            raise ConfigurationError("Can only extend a potential to a window containing its own")
        kept = {window.index(g) for g in self.window.elements}
        shape = [self.alphabet_size if i in kept else 1 for i in range(window.size)]
        table = np.broadcast_to(self.table.reshape(shape), (self.alphabet_size,) * window.size)
        return Potential(window, table)

    def shifted(self, offset: GroupElement) -> 'Potential':
        """x -> phi(x read at window + offset); translation keeps the canonical order"""
        return Potential(translate(self.window, invert(as_element(offset, self.dimension))), self.table)

    def sum_translates(self, F: FiniteSubset) -> 'Potential':
        """sum_{g in F} phi(g . x), a table over the window W + F"""
        cells = {tuple(a + b for a, b in zip(w, g)) for w in self.window.elements for g in F.elements}
        union = FiniteSubset(tuple(cells))
        _check_dense(self.alphabet_size, union.size, None)
        result = np.zeros((self.alphabet_size,) * union.size)
        for g in F.elements:
            part = self.shifted(g)
            kept = [union.index(c) for c in part.window.elements]
            shape = [1] * union.size
            for i in kept:
                shape[i] = self.alphabet_size
            result += part.table.reshape(shape)
        return Potential(union, result)

    def _aligned(self, other: 'Potential') -> Tuple[FiniteSubset, np.ndarray, np.ndarray]:
        if other.alphabet_size != self.alphabet_size:
            raise ConfigurationError("Potentials over different alphabets")
        union = self.window.union(other.window)
        return union, self.extend(union).table, other.extend(union).table

    def __add__(self, other: 'Potential') -> 'Potential':
        union, a, b = self._aligned(other)
        return Potential(union, a + b)

    def __sub__(self, other: 'Potential') -> 'Potential':
        union, a, b = self._aligned(other)
        return Potential(union, a - b)

    def __mul__(self, scalar: float) -> 'Potential':
        return Potential(self.window, self.table * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> 'Potential':
        return Potential(self.window, self.table / float(scalar))

    def __neg__(self) -> 'Potential':
        return Potential(self.window, -self.table)

    def value_at(self, configuration: Mapping[GroupElement, int]) -> float:
        """Evaluate at a configuration known (at least) on the window"""
        return float(self.table[tuple(configuration[g] for g in self.window.elements)])

    def on_hull(self, X: 'Subshift', cap: Optional[int] = None) -> np.ndarray:
        """Table over the bounding box of the window with non-admissible entries set to nan"""
        hull = self.window.bounding_box()
        table = np.array(self.extend(hull).table, dtype=float)
        if not X.is_full:
            table = np.where(X.admissible_mask(hull, cap), table, np.nan)
        return table

    def uniform_norm(self, X: Optional['Subshift'] = None) -> float:
        """sup_{x in X} |phi(x)|"""
        if X is None:
            return float(np.abs(self.table).max())
        return float(np.nanmax(np.abs(self.on_hull(X))))

    def oscillation(self, X: 'Subshift') -> float:
        """delta(phi) = sup{|phi(x) - phi(y)| : x(1_G) = y(1_G)}"""
        origin = FiniteSubset(((0,) * self.dimension,))
        widened = self.extend(self.window.union(origin))
        table = widened.on_hull(X)
        hull = widened.window.bounding_box()
        axis = hull.index(origin.elements[0])
        spread = 0.0
        for a in range(self.alphabet_size):
            slab = np.take(table, a, axis=axis)
            if np.all(np.isnan(slab)):
                continue
            spread = max(spread, float(np.nanmax(slab) - np.nanmin(slab)))
        return spread

    def exp_sum(self, X: 'Subshift') -> float:
        """sum_a exp(sup{phi(x) : x(1_G) = a}); finite for every finite alphabet"""
        origin = FiniteSubset(((0,) * self.dimension,))
        widened = self.extend(self.window.union(origin))
        table = widened.on_hull(X)
        hull = widened.window.bounding_box()
        axis = hull.index(origin.elements[0])
        total = 0.0
        for a in range(self.alphabet_size):
            slab = np.take(table, a, axis=axis)
            if not np.all(np.isnan(slab)):
                total += math.exp(float(np.nanmax(slab)))
        return total

    def to_dict(self, X: Subshift) -> Dict[str, Any]:
        table = {}
        for symbols in itertools.product(range(self.alphabet_size), repeat=self.window.size):
            table[X.word(symbols)] = float(self.table[symbols])
        window = [g[0] if self.dimension == 1 else list(g) for g in self.window.elements]
        return {'window': window, 'table': table}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], X: Subshift) -> 'Potential':
        """Read {"window": [...], "table": {pattern-string: value}}; missing patterns are 0"""
        if 'window' not in data or 'table' not in data:
            raise ConfigurationError("Potential needs 'window' and 'table' entries")
        window = FiniteSubset(tuple(as_element(g, X.dimension) for g in data['window']))
        table = np.zeros((X.size,) * window.size)
        for key, value in data['table'].items():
            table[X.parse_word(str(key), window.size)] = float(value)
        return cls(window, table)


def cylinder_sups(X: Subshift, f: Potential, F: FiniteSubset, cap: Optional[int] = None) -> np.ndarray:
    """
    sup f([w]) for every pattern w on F, as a dense array over F's patterns

    The sup runs over admissible completions of w on the collar (bounding box of
    window(f) and F) minus F. Entries of patterns outside X_F are -inf.
    """
    if f.alphabet_size != X.size:
        raise ConfigurationError(f"Potential alphabet has {f.alphabet_size} symbols, subshift {X.size}")
    hull = f.window.union(F).bounding_box()
    _check_dense(X.size, hull.size, cap)
    table = f.extend(hull).table
    if not X.is_full:
        table = np.where(X.admissible_mask(hull, cap), table, -np.inf)
    collar = tuple(i for i, g in enumerate(hull.elements) if g not in F.members)
    if collar:
        return np.max(table, axis=collar)
    return np.array(table, dtype=float)


def sup_on_cylinder(X: Subshift, phi: Potential, F: FiniteSubset, w: Pattern, cap: Optional[int] = None) -> float:
    """
    sup over x in [w] of S_F(phi)(x)

    Args:
        X: subshift
        phi: locally constant potential
        F: support of the cylinder
        w: admissible pattern on F

    Returns:
        The exact supremum
    """
    if w.support != F:
        raise ConfigurationError("Pattern support must equal F")
    value = float(cylinder_sups(X, phi.sum_translates(F), F, cap)[w.symbols])
    if value == -np.inf:
        raise ConfigurationError(f"Pattern {X.word(w.symbols)} is not admissible on F")
    return value


def koopman(X: Subshift, phi: Potential) -> Potential:
    """
    The potential as a vector of the locally constant space of X

    The Koopman action pi(g) phi(x) = phi(g^{-1} . x) moves the window by -g, so the
    table is reused unchanged.
    """
    if phi.alphabet_size != X.size:
        raise ConfigurationError(f"Potential alphabet has {phi.alphabet_size} symbols, subshift {X.size}")
    if phi.dimension != X.dimension:
        raise ConfigurationError(f"Potential lives in Z^{phi.dimension}, subshift in Z^{X.dimension}")
    return phi
