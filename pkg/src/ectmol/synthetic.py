"""Random small molecules with known topology, for tests and benchmarks.

Molecules are grown as graphs (random tree, a few ring-closing edges, some
double bonds, optionally a benzene substituent) and then written out as
SMILES, so cycle rank and atom counts are known without trusting the parser.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_ELEMENTS = ("C", "N", "O", "S", "F", "Cl")
_WEIGHTS = (0.6, 0.15, 0.15, 0.04, 0.03, 0.03)
_CAPACITY = {"C": 4, "N": 3, "O": 2, "S": 2, "F": 1, "Cl": 1}
_BOND_SYMBOL = {1: "", 2: "=", 3: "#"}


@dataclass(frozen=True)
class SyntheticMolecule:
    smiles: str
    heavy_atoms: int
    bonds: int  # heavy-atom bonds
    hydrogens: int

    @property
    def cycle_rank(self) -> int:
        return self.bonds - self.heavy_atoms + 1

    @property
    def atom_count(self) -> int:
        """Atoms after hydrogen expansion."""
        return self.heavy_atoms + self.hydrogens


def write_smiles(symbols: list[str], aromatic: list[bool],
                 bonds: list[tuple[int, int, int]]) -> str:
    """Serialize a connected graph as SMILES by depth-first traversal.

    Bond orders are 1, 2, 3, or 0 for aromatic. Non-tree edges become ring
    closures opened at the earlier-visited endpoint.
    """
    n = len(symbols)
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for k, (u, v, _) in enumerate(bonds):
        adj[u].append((v, k))
        adj[v].append((u, k))
    visited = [False] * n
    children: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    rings: list[list[int]] = [[] for _ in range(n)]
    seen_bonds: set[int] = set()

    def classify(v: int) -> None:
        visited[v] = True
        for w, k in adj[v]:
            if k in seen_bonds:
                continue
            seen_bonds.add(k)
            if visited[w]:
                rings[w].append(k)
                rings[v].append(k)
            else:
                children[v].append((w, k))
                classify(w)

    classify(0)
    if not all(visited):
        raise ValueError("graph is not connected")

    def bond_text(k: int) -> str:
        u, v, order = bonds[k]
        if order == 0:
            return ""
        if order == 1 and aromatic[u] and aromatic[v]:
            return "-"
        return _BOND_SYMBOL[order]

    out: list[str] = []
    open_digits: dict[int, int] = {}

    def ring_label(d: int) -> str:
        return str(d) if d < 10 else f"%{d:02d}"

    def emit(v: int) -> None:
        sym = symbols[v]
        out.append(sym.lower() if aromatic[v] else sym)
        for k in rings[v]:
            if k in open_digits:
                out.append(ring_label(open_digits.pop(k)))
            else:
                used = set(open_digits.values())
                d = next(i for i in range(1, 100) if i not in used)
                open_digits[k] = d
                out.append(bond_text(k) + ring_label(d))
        for i, (w, k) in enumerate(children[v]):
            last = i == len(children[v]) - 1
            if not last:
                out.append("(")
            out.append(bond_text(k))
            emit(w)
            if not last:
                out.append(")")

    emit(0)
    return "".join(out)


def random_molecule(rng: np.random.Generator, max_heavy: int = 12) -> SyntheticMolecule:
    n = int(rng.integers(3, max_heavy + 1))
    symbols = [str(rng.choice(("C", "N", "O"), p=(0.7, 0.15, 0.15)))]
    aromatic = [False]
    spare = [_CAPACITY[symbols[0]]]
    bonds: list[tuple[int, int, int]] = []
    adjacent: set[tuple[int, int]] = set()

    def connect(u: int, v: int, order: int) -> None:
        bonds.append((u, v, order))
        adjacent.add((min(u, v), max(u, v)))
        spare[u] -= 1 if order == 0 else order
        spare[v] -= 1 if order == 0 else order

    for _ in range(1, n):
        parents = [i for i in range(len(symbols)) if spare[i] >= 1 and not aromatic[i]]
        if not parents:
            break
        sym = str(rng.choice(_ELEMENTS, p=_WEIGHTS))
        parent = int(rng.choice(parents))
        symbols.append(sym)
        aromatic.append(False)
        spare.append(_CAPACITY[sym])
        connect(parent, len(symbols) - 1, 1)

    for _ in range(int(rng.integers(0, 4))):
        for _attempt in range(20):
            u, v = sorted(int(x) for x in rng.choice(len(symbols), size=2, replace=False))
            if (u, v) not in adjacent and spare[u] >= 1 and spare[v] >= 1:
                connect(u, v, 1)
                break

    for k, (u, v, order) in enumerate(bonds):
        if spare[u] >= 1 and spare[v] >= 1 and rng.random() < 0.2:
            bonds[k] = (u, v, 2)
            spare[u] -= 1
            spare[v] -= 1

    if rng.random() < 0.3:
        anchors = [i for i in range(len(symbols)) if spare[i] >= 1]
        if anchors:
            anchor = int(rng.choice(anchors))
            first = len(symbols)
            for _ in range(6):
                symbols.append("C")
                aromatic.append(True)
                spare.append(0)
            for j in range(6):
                bonds.append((first + j, first + (j + 1) % 6, 0))
            bonds.append((anchor, first, 1))

    # Hydrogens follow the default-valence rule (aromatic bonds count 1.5).
    degree_units = [0] * len(symbols)
    for u, v, order in bonds:
        units = 3 if order == 0 else 2 * order
        degree_units[u] += units
        degree_units[v] += units
    hydrogens = 0
    for i, sym in enumerate(symbols):
        default = _CAPACITY[sym]
        hydrogens += max(0, (2 * default - degree_units[i]) // 2)

    return SyntheticMolecule(write_smiles(symbols, aromatic, bonds),
                             len(symbols), len(bonds), hydrogens)


def random_molecules(n: int, seed: int = 0, max_heavy: int = 12) -> list[SyntheticMolecule]:
    """``n`` molecules with pairwise distinct SMILES strings."""
    rng = np.random.Generator(np.random.PCG64(seed))
    out: list[SyntheticMolecule] = []
    seen: set[str] = set()
    while len(out) < n:
        mol = random_molecule(rng, max_heavy)
        if mol.smiles not in seen:
            seen.add(mol.smiles)
            out.append(mol)
    return out


def topology_targets(molecules: list[SyntheticMolecule], noise: float = 0.1,
                     seed: int = 0) -> np.ndarray:
    """``cycle_rank + 0.1 * atom_count + N(0, noise^2)``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    base = np.array([m.cycle_rank + 0.1 * m.atom_count for m in molecules], dtype=np.float64)
    return base + noise * rng.standard_normal(len(molecules))


def write_topology_csv(path: str | Path, n: int, seed: int = 0, noise: float = 0.1) -> None:
    """Write a ``mol_id,smiles,target`` file of the synthetic topology task."""
    molecules = random_molecules(n, seed)
    y = topology_targets(molecules, noise, seed)
    with Path(path).open("w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mol_id", "smiles", "target"])
        for i, (m, t) in enumerate(zip(molecules, y)):
            w.writerow([f"m{i}", m.smiles, repr(float(t))])
