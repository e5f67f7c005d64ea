"""Euler characteristic curves and transforms of featurized graphs.

A graph with node feature rows ``x_v`` is filtered along a unit direction
``xi``: node ``v`` enters at height ``<x_v, xi>``, an edge enters at the
larger of its endpoint heights. The Euler characteristic curve (ECC) counts
``#nodes - #edges`` in the closed sublevel set ``height <= t`` at each
threshold ``t``; the transform (ECT) stacks the ECCs of ``D`` directions
into a ``D x T`` integer grid, flattened direction-major.

Directions come from numpy's PCG64 bit generator: seed -> ``Generator(PCG64(seed))``,
then for each direction in turn one ``standard_normal(dimension)`` draw,
rejected and redrawn if its norm is zero, divided by its norm.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ectmol.errors import DimensionMismatch, InvalidCount, InvalidDimension
from ectmol.features import FeatureMatrix

DEFAULT_DIRECTIONS = 158
DEFAULT_THRESHOLDS = 16
GENERATOR_ID = "numpy-PCG64/standard_normal/v1"
_SEED_LIMIT = 2**64


@dataclass(frozen=True)
class DirectionSet:
    vectors: np.ndarray  # (count, dimension)
    seed: int
    generator_id: str = GENERATOR_ID

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]


def sample_directions(dimension: int, count: int, seed: int) -> DirectionSet:
    """Draw ``count`` directions uniformly on the unit sphere in R^dimension.

    Raises:
        InvalidDimension: dimension < 1.
        InvalidCount: count < 1.
    """
    if dimension < 1:
        raise InvalidDimension(f"dimension must be >= 1, got {dimension}")
    if count < 1:
        raise InvalidCount(f"direction count must be >= 1, got {count}")
    if not 0 <= seed < _SEED_LIMIT:
        raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    rng = np.random.Generator(np.random.PCG64(seed))
    out = np.empty((count, dimension))
    for d in range(count):
        while True:
            v = rng.standard_normal(dimension)
            norm = np.linalg.norm(v)
            if norm > 0:
                break
        out[d] = v / norm
    out.flags.writeable = False
    return DirectionSet(out, seed)


@dataclass(frozen=True)
class ThresholdGrid:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise InvalidCount("threshold grid must be a non-empty 1-d array")
        if np.any(np.diff(v) <= 0) or not np.all(np.isfinite(v)):
            raise ValueError("thresholds must be finite and strictly increasing")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    @classmethod
    def default(cls, count: int = DEFAULT_THRESHOLDS) -> ThresholdGrid:
        """``count`` evenly spaced points over [-1, 1], endpoints included.

        A single-point grid is ``[1.0]`` so it still captures the whole graph.
        """
        if count < 1:
            raise InvalidCount(f"threshold count must be >= 1, got {count}")
        if count == 1:
            return cls(np.array([1.0]))
        return cls(np.linspace(-1.0, 1.0, count))


@dataclass(frozen=True)
class Filtration:
    node_heights: np.ndarray
    edge_heights: np.ndarray


@dataclass(frozen=True)
class ECTDescriptor:
    grid: np.ndarray  # (D, T) int32

    @property
    def flattened(self) -> np.ndarray:
        """Direction-major: index = direction * T + threshold."""
        return self.grid.reshape(-1)

    def __len__(self) -> int:
        return self.grid.size


def _as_rows(features) -> np.ndarray:
    rows = features.rows if isinstance(features, FeatureMatrix) else features
    return np.asarray(rows, dtype=np.float64)


def _as_edges(edges, num_nodes: int) -> np.ndarray:
    e = np.asarray(edges, dtype=np.int64)
    if e.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if e.ndim != 2 or e.shape[1] != 2:
        raise ValueError(f"edges must have shape (E, 2), got {e.shape}")
    if e.min() < 0 or e.max() >= num_nodes:
        raise ValueError("edge endpoint out of range")
    return e


def project(rows: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Heights ``rows @ directions.T``, accumulated feature by feature.

    The fixed elementwise order keeps every height bit-identical no matter how
    rows are batched or permuted (a BLAS product gives no such guarantee).
    """
    if rows.shape[1] != directions.shape[1]:
        raise DimensionMismatch(
            f"feature width {rows.shape[1]} != direction dimension {directions.shape[1]}")
    heights = np.zeros((rows.shape[0], directions.shape[0]))
    for k in range(rows.shape[1]):
        heights += rows[:, k, None] * directions[None, :, k]
    return heights


def filtration(features, edges, direction) -> Filtration:
    """Node heights along ``direction`` and the induced edge heights."""
    rows = _as_rows(features)
    e = _as_edges(edges, rows.shape[0])
    xi = np.asarray(direction, dtype=np.float64).reshape(1, -1)
    h = project(rows, xi)[:, 0]
    return Filtration(h, np.maximum(h[e[:, 0]], h[e[:, 1]]))


def _as_grid(grid) -> ThresholdGrid:
    return grid if isinstance(grid, ThresholdGrid) else ThresholdGrid(np.asarray(grid))


def _entry_bins(heights: np.ndarray, grid: np.ndarray) -> np.ndarray:
    # First threshold index t with height <= grid[t]; len(grid) = never enters.
    return np.searchsorted(grid, heights, side="left")


def _sublevel_counts(rows, edges, directions, grid, molecule_of_node=None, num_molecules=1):
    """Cumulative node and edge counts, shape (num_molecules, D, T) each.

    Every simplex is binned once by the first threshold that admits it
    (binary search in the grid, O(log T)); an edge's bin is the later of its
    endpoints' bins because the grid search is monotone. A prefix sum over the
    bins then gives the sublevel-set sizes at every threshold.
    """
    T = grid.size
    D = directions.shape[0]
    heights = project(rows, directions)
    if not np.all(np.isfinite(heights)):
        raise ValueError("non-finite feature values")
    node_bin = _entry_bins(heights, grid)  # (V, D)
    edge_bin = np.maximum(node_bin[edges[:, 0]], node_bin[edges[:, 1]])  # (E, D)

    if molecule_of_node is None:
        molecule_of_node = np.zeros(rows.shape[0], dtype=np.int64)
    size = num_molecules * D * (T + 1)
    dir_offset = np.arange(D, dtype=np.int64) * (T + 1)

    def histogram(bins: np.ndarray, owner: np.ndarray) -> np.ndarray:
        keys = owner[:, None] * (D * (T + 1)) + dir_offset[None, :] + bins
        counts = np.bincount(keys.ravel(), minlength=size)
        return counts.reshape(num_molecules, D, T + 1)[:, :, :T]

    nodes = np.cumsum(histogram(node_bin, molecule_of_node), axis=2)
    edge_owner = molecule_of_node[edges[:, 0]]
    edges_ = np.cumsum(histogram(edge_bin, edge_owner), axis=2)
    return nodes, edges_


def sublevel_counts(features, edges, direction, grid: ThresholdGrid):
    """Number of nodes and of edges in each sublevel set along one direction."""
    rows = _as_rows(features)
    e = _as_edges(edges, rows.shape[0])
    xi = np.asarray(direction, dtype=np.float64).reshape(1, -1)
    nodes, edges_ = _sublevel_counts(rows, e, xi, _as_grid(grid).values)
    return nodes[0, 0], edges_[0, 0]


def compute_ecc(features, edges, direction, grid: ThresholdGrid) -> np.ndarray:
    """Euler characteristic of each closed sublevel set along ``direction``.

    Args:
        features: ``(V, d)`` rows or a FeatureMatrix.
        edges: ``(E, 2)`` endpoint indices.
        direction: length-``d`` vector (normally unit length).
        grid: thresholds, strictly increasing.

    Returns:
        int64 array of length ``len(grid)``.
    """
    nodes, edges_ = sublevel_counts(features, edges, direction, grid)
    return nodes - edges_


def compute_ect(features, edges, dirs: DirectionSet, grid: ThresholdGrid) -> ECTDescriptor:
    """Stack the ECCs of every direction in ``dirs`` into a (D, T) grid."""
    rows = _as_rows(features)
    e = _as_edges(edges, rows.shape[0])
    nodes, edges_ = _sublevel_counts(rows, e, dirs.vectors, _as_grid(grid).values)
    return ECTDescriptor((nodes[0] - edges_[0]).astype(np.int32))


def _ect_chunk(molecules, directions: np.ndarray, grid: np.ndarray) -> np.ndarray:
    sizes = [r.shape[0] for r, _ in molecules]
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
    rows = np.vstack([r for r, _ in molecules])
    edges = np.vstack([e + off for (_, e), off in zip(molecules, offsets)])
    owner = np.repeat(np.arange(len(molecules), dtype=np.int64), sizes)
    nodes, edges_ = _sublevel_counts(rows, edges, directions, grid, owner, len(molecules))
    return (nodes - edges_).astype(np.int32).reshape(len(molecules), -1)


def ect_batch(
    dataset: Sequence[tuple[FeatureMatrix | np.ndarray, np.ndarray]],
    dirs: DirectionSet,
    grid: ThresholdGrid,
    jobs: int = 1,
    chunk_size: int = 256,
) -> np.ndarray:
    """ECT feature table, one flattened descriptor per molecule.

    Molecules are processed in fixed chunks of ``chunk_size``; with
    ``jobs > 1`` chunks are spread over worker processes. Every height is
    computed row-locally, so the table is bit-identical for any ``jobs`` or
    ``chunk_size``.

    Returns:
        int32 array of shape ``(N, D * T)``.

    Raises:
        DimensionMismatch, ValueError: annotated with the failing molecule's
        index (also stored as ``exc.molecule_index``).
    """
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    grid = _as_grid(grid)
    prepared = []
    for i, (features, edges) in enumerate(dataset):
        try:
            rows = _as_rows(features)
            if rows.ndim != 2 or rows.shape[1] != dirs.dimension:
                raise DimensionMismatch(
                    f"feature width {rows.shape[-1]} != direction dimension {dirs.dimension}")
            if not np.all(np.isfinite(rows)):
                raise ValueError("non-finite feature values")
            prepared.append((rows, _as_edges(edges, rows.shape[0])))
        except (DimensionMismatch, ValueError) as exc:
            err = type(exc)(f"molecule {i}: {exc}")
            err.molecule_index = i
            raise err from exc
    if not prepared:
        return np.zeros((0, dirs.count * len(grid)), dtype=np.int32)

    chunks = [prepared[i:i + chunk_size] for i in range(0, len(prepared), chunk_size)]
    if jobs == 1 or len(chunks) == 1:
        parts = [_ect_chunk(c, dirs.vectors, grid.values) for c in chunks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_ect_chunk, chunks,
                                  [dirs.vectors] * len(chunks), [grid.values] * len(chunks)))
    return np.vstack(parts)
