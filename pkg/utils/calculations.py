"""
Numerical helpers shared by the toolkit modules
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Tuple

import numpy as np

from utils.errors import SolverError

logger = logging.getLogger(__name__)


def xlogx(values: np.ndarray) -> np.ndarray:
    """x*log(x) elementwise with the convention 0*log(0) = 0"""
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values)
    positive = values > 0
    out[positive] = values[positive] * np.log(values[positive])
    return out


def shannon_entropy(probabilities: np.ndarray) -> float:
    """Shannon entropy (natural log) of a probability array of any shape"""
    return float(-pairwise_sum(xlogx(probabilities).ravel()))


def pairwise_sum(values: np.ndarray) -> float:
    """
    Deterministic tree reduction of a 1D array

    Neighbouring entries are added two by two until one value is left, so the
    result depends only on the input order, never on memory layout or threads.

    Args:
        values: 1D array of floats

    Returns:
        The sum as a Python float (0.0 for an empty array)
    """
    data = np.asarray(values, dtype=float).ravel()
    if data.size == 0:
        return 0.0
    while data.size > 1:
        half = data.size // 2
        paired = data[:2 * half:2] + data[1:2 * half:2]
        if data.size % 2:
            paired = np.append(paired, data[-1])
        data = paired
    return float(data[0])


def chunked_tree_sum(values: np.ndarray, chunk_size: int = 1 << 16, workers: int = 1) -> float:
    """
    Sum a large array chunk by chunk with a fixed reduction order

    Args:
        values: 1D array of floats
        chunk_size: number of entries per chunk
        workers: threads used for the chunk sums; the result does not depend on it

    Returns:
        The tree-reduced sum of the chunk sums
    """
    data = np.asarray(values, dtype=float).ravel()
    chunks = [data[start:start + chunk_size] for start in range(0, data.size, chunk_size)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(pairwise_sum, chunks))
    else:
        partials = [pairwise_sum(chunk) for chunk in chunks]
    return pairwise_sum(np.array(partials))


def tree_logsumexp(values: np.ndarray, workers: int = 1) -> float:
    """
    log(sum(exp(values))) with the deterministic tree reduction

    Entries equal to -inf are ignored; an all -inf input returns -inf.
    """
    data = np.asarray(values, dtype=float).ravel()
    finite = data[np.isfinite(data)]
    if finite.size == 0:
        return float('-inf')
    peak = float(finite.max())
    return peak + float(np.log(chunked_tree_sum(np.exp(finite - peak), workers=workers)))


def is_irreducible(matrix: np.ndarray) -> bool:
    """True when the directed graph of the non-negative matrix is strongly connected"""
    support = (np.asarray(matrix) > 0).astype(np.int64)
    size = support.shape[0]
    reach = np.minimum(np.eye(size, dtype=np.int64) + support, 1)
    # repeated squaring of (I + A) reaches every path length up to size - 1
    steps = 1
    while steps < size:
        reach = np.minimum(reach @ reach, 1)
        steps *= 2
    return bool(np.all(reach > 0))


def perron_vector(matrix: np.ndarray, tol: float = 1e-13, max_iter: int = 100_000) -> Tuple[float, np.ndarray, int]:
    """
    Perron eigenvalue and right eigenvector of an irreducible non-negative matrix

    Power iteration on I + M/s (s the largest row sum) from the uniform vector; the
    shift makes the iteration primitive so periodic matrices converge as well.

    Args:
        matrix: square non-negative irreducible matrix
        tol: stopping tolerance on the l1 change of the normalised iterate
        max_iter: iteration cap

    Returns:
        Tuple of (eigenvalue, eigenvector normalised to unit l1 norm, iterations)
    """
    matrix = np.asarray(matrix, dtype=float)
    if not is_irreducible(matrix):
        raise SolverError("Transfer matrix is reducible; the Perron vector is not unique")

    size = matrix.shape[0]
    scale = float(matrix.sum(axis=1).max())
    shifted = np.eye(size) + matrix / scale

    vector = np.full(size, 1.0 / size)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        updated = shifted @ vector
        updated /= updated.sum()
        change = float(np.abs(updated - vector).sum())
        vector = updated
        if change <= tol:
            break
    else:
        logger.warning("Power iteration hit the cap of %d iterations (last change %.3e)", max_iter, change)

    eigenvalue = float((matrix @ vector).sum() / vector.sum())
    return eigenvalue, vector, iterations


def gth_stationary(transition: np.ndarray) -> np.ndarray:
    """
    Stationary distribution of an irreducible row-stochastic matrix

    Grassmann-Taksar-Heyman elimination: subtraction free, so the result is
    accurate to machine precision even for nearly decoupled chains.

    Args:
        transition: row-stochastic matrix

    Returns:
        Probability vector p with pP = p
    """
    work = np.array(transition, dtype=float)
    size = work.shape[0]

    # elimination phase
    for n in range(size - 1, 0, -1):
        total = work[n, :n].sum()
        if total <= 0.0:
            raise SolverError("Transition matrix is reducible; stationary distribution is not unique")
        work[:n, n] /= total
        work[:n, :n] += np.outer(work[:n, n], work[n, :n])

    # back substitution
    stationary = np.zeros(size)
    stationary[0] = 1.0
    for n in range(1, size):
        stationary[n] = stationary[:n] @ work[:n, n]
    return stationary / stationary.sum()


def linear_trend(xs: np.ndarray, ys: np.ndarray) -> Optional[Tuple[float, float]]:
    """Least-squares fit ys = a + b*xs; returns (a, b) or None for fewer than 2 points"""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2 or np.ptp(xs) == 0.0:
        return None
    slope, intercept = np.polyfit(xs, ys, 1)
    return float(intercept), float(slope)
