"""Per-atom 9-dimensional feature vectors and dataset-wide normalization.

Column order (schema version 1):

    0 atomic_number          5 num_radical_electrons
    1 chirality_code         6 hybridization_code
    2 total_degree           7 is_aromatic
    3 formal_charge          8 is_in_ring
    4 num_hydrogen_neighbors

Hybridization is a bond-pattern heuristic applied to C, N, O, P and S only:
a triple bond or two double bonds gives 1 (sp), one double bond or
aromaticity gives 2 (sp2), anything else 3 (sp3). Every other element,
hydrogen included, gets 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ectmol.errors import EmptyDataset, MalformedFile
from ectmol.smiles import BondOrder, MolecularGraph, unfilled_valence

SCHEMA_VERSION = 1
FEATURE_NAMES: tuple[str, ...] = (
    "atomic_number",
    "chirality_code",
    "total_degree",
    "formal_charge",
    "num_hydrogen_neighbors",
    "num_radical_electrons",
    "hybridization_code",
    "is_aromatic",
    "is_in_ring",
)
NUM_FEATURES = len(FEATURE_NAMES)

_HYBRIDIZED = {6, 7, 8, 15, 16}

# Keeps the largest row norm a hair under 1 so that projections onto unit
# directions cannot round above the top threshold.
_UNIT_BALL_MARGIN = 1.0 - 2.0**-44


@dataclass(frozen=True)
class FeatureMatrix:
    rows: np.ndarray  # (num_atoms, 9) float64
    molecule_id: str = ""

    def __post_init__(self):
        if self.rows.ndim != 2 or self.rows.shape[1] != NUM_FEATURES:
            raise ValueError(f"feature rows must have shape (n, {NUM_FEATURES}), "
                             f"got {self.rows.shape}")

    @property
    def num_atoms(self) -> int:
        return self.rows.shape[0]


def ring_membership(g: MolecularGraph) -> tuple[list[bool], list[bool]]:
    """Flag atoms and bonds that lie on at least one cycle.

    A bond is in a ring iff it is not a bridge; bridges come from one
    iterative DFS (Tarjan low-link) over every component. An atom is in a
    ring iff it touches a ring bond.
    """
    n = g.num_atoms
    disc = [-1] * n
    low = [0] * n
    bond_in_ring = [True] * g.num_bonds
    timer = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = timer
        timer += 1
        # (vertex, bond used to reach it, iterator over incident bonds)
        stack = [(root, -1, iter(g.incident_bonds(root)))]
        while stack:
            v, via, it = stack[-1]
            advanced = False
            for k in it:
                if k == via:
                    continue
                b = g.bonds[k]
                w = b.end if b.begin == v else b.begin
                if disc[w] < 0:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, k, iter(g.incident_bonds(w))))
                    advanced = True
                    break
                low[v] = min(low[v], disc[w])
            if advanced:
                continue
            stack.pop()
            if stack:
                parent = stack[-1][0]
                low[parent] = min(low[parent], low[v])
                if low[v] > disc[parent]:
                    bond_in_ring[via] = False

    atom_in_ring = [False] * n
    for k, in_ring in enumerate(bond_in_ring):
        if in_ring:
            atom_in_ring[g.bonds[k].begin] = True
            atom_in_ring[g.bonds[k].end] = True
    return atom_in_ring, bond_in_ring


def _hybridization(g: MolecularGraph, i: int) -> int:
    atom = g.atoms[i]
    if atom.element not in _HYBRIDIZED:
        return 0
    orders = [g.bonds[k].order for k in g.incident_bonds(i)]
    doubles = orders.count(BondOrder.DOUBLE)
    if BondOrder.TRIPLE in orders or doubles >= 2:
        return 1
    if doubles == 1 or atom.aromatic or BondOrder.AROMATIC in orders:
        return 2
    return 3


def featurize(g: MolecularGraph, molecule_id: str = "") -> FeatureMatrix:
    """One raw (integer-valued) feature row per atom, in graph order.

    ``g`` must already carry explicit hydrogens.
    """
    if not g.hydrogens_expanded:
        raise ValueError("featurize expects a hydrogen-expanded graph")
    atom_in_ring, _ = ring_membership(g)
    rows = np.zeros((g.num_atoms, NUM_FEATURES), dtype=np.float64)
    for i, atom in enumerate(g.atoms):
        nbrs = g.neighbors(i)
        rows[i] = (
            atom.element,
            int(atom.chirality),
            len(nbrs),
            atom.formal_charge,
            sum(1 for j in nbrs if g.atoms[j].element == 1),
            unfilled_valence(g, i) if atom.is_bracket else 0,
            _hybridization(g, i),
            atom.aromatic,
            atom_in_ring[i],
        )
    return FeatureMatrix(rows, molecule_id)


@dataclass(frozen=True)
class NormalizationStats:
    means: tuple[float, ...]
    stds: tuple[float, ...]  # 0.0 marks a constant column
    max_norm: float
    schema_version: int = SCHEMA_VERSION

    @property
    def scale(self) -> float:
        return _UNIT_BALL_MARGIN / self.max_norm if self.max_norm > 0 else 0.0

    def standardize(self, rows: np.ndarray) -> np.ndarray:
        means = np.asarray(self.means)
        stds = np.asarray(self.stds)
        safe = np.where(stds > 0, stds, 1.0)
        return np.where(stds > 0, (rows - means) / safe, 0.0)

    def transform(self, rows: np.ndarray) -> np.ndarray:
        return self.standardize(rows) * self.scale

    def apply(self, matrices: list[FeatureMatrix]) -> list[FeatureMatrix]:
        return [FeatureMatrix(self.transform(m.rows), m.molecule_id) for m in matrices]

    def to_json(self) -> str:
        doc = {
            "schema_version": self.schema_version,
            "features": list(FEATURE_NAMES),
            "means": [float(x) for x in self.means],
            "stds": [float(x) for x in self.stds],
            "max_norm": float(self.max_norm),
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> NormalizationStats:
        try:
            doc = json.loads(text)
            stats = cls(tuple(map(float, doc["means"])), tuple(map(float, doc["stds"])),
                        float(doc["max_norm"]), int(doc["schema_version"]))
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedFile(f"bad normalization stats: {exc}") from exc
        if stats.schema_version != SCHEMA_VERSION:
            raise MalformedFile(f"unsupported schema version {stats.schema_version}")
        if len(stats.means) != NUM_FEATURES or len(stats.stds) != NUM_FEATURES:
            raise MalformedFile("normalization stats must have 9 means and 9 stds")
        return stats

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> NormalizationStats:
        return cls.from_json(Path(path).read_text())


def _row_norms(rows: np.ndarray) -> np.ndarray:
    acc = np.zeros(rows.shape[0])
    for k in range(rows.shape[1]):
        acc += rows[:, k] * rows[:, k]
    return np.sqrt(acc)


def normalize_dataset(
    matrices: list[FeatureMatrix],
) -> tuple[list[FeatureMatrix], NormalizationStats]:
    """Z-score every column over all atoms of all molecules, then shrink all
    rows by one common factor so the longest row has (almost exactly) unit norm.

    Sums use ``math.fsum``, so the statistics do not depend on molecule or
    atom order. Constant columns map to 0.
    """
    if not matrices or all(m.num_atoms == 0 for m in matrices):
        raise EmptyDataset("normalization needs at least one atom")
    stacked = np.vstack([m.rows for m in matrices])
    n = stacked.shape[0]
    means, stds = [], []
    for col in stacked.T:
        mean = math.fsum(col) / n
        means.append(mean)
        if col.min() == col.max():
            stds.append(0.0)
        else:
            stds.append(math.sqrt(math.fsum((col - mean) ** 2) / n))
    z = NormalizationStats(tuple(means), tuple(stds), 1.0).standardize(stacked)
    max_norm = float(_row_norms(z).max())
    stats = NormalizationStats(tuple(means), tuple(stds), max_norm)
    return stats.apply(matrices), stats
