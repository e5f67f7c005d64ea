"""SMILES parsing into hydrogen-explicit molecular graphs.

Supported grammar:
    - organic-subset atoms ``B C N O P S F Cl Br I`` and aromatic ``b c n o p s``
    - bracket atoms ``[isotope? symbol chirality? hcount? charge? class?]``
      where chirality is ``@`` or ``@@``
    - branches ``( ... )``
    - ring closures ``0``-``9`` and ``%nn``, optionally preceded by a bond
    - bond symbols ``- = # :`` and the directional ``/ \\`` (read as single)
    - ``.`` separated components, all retained

Aromaticity is taken as written; no perception is attempted.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum

import numpy as np

from ectmol.errors import (
    EmptyInput,
    SmilesSyntaxError,
    UnbalancedParenthesis,
    UnknownToken,
    UnmatchedRingClosure,
    ValenceExceeded,
)

# fmt: off
ELEMENTS: tuple[str, ...] = (
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne",
    "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr",
    "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn",
    "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb",
    "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th",
    "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm",
    "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds",
    "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
)
# fmt: on
ATOMIC_NUMBER: dict[str, int] = {sym: i + 1 for i, sym in enumerate(ELEMENTS)}

ORGANIC_SUBSET = {"B": 5, "C": 6, "N": 7, "O": 8, "P": 15, "S": 16,
                  "F": 9, "Cl": 17, "Br": 35, "I": 53}
AROMATIC_SUBSET = {"b": 5, "c": 6, "n": 7, "o": 8, "p": 15, "s": 16}

# Valence used to fill implicit hydrogens (and to count radicals).
DEFAULT_VALENCE = {5: 3, 6: 4, 7: 3, 8: 2, 15: 3, 16: 2, 9: 1, 17: 1, 35: 1, 53: 1}

# Upper bound on explicit bonding; a bracket charge widens it by |charge|.
MAX_VALENCE = {1: 1, 5: 3, 6: 4, 7: 5, 8: 2, 9: 1, 14: 4, 15: 5, 16: 6,
               17: 7, 34: 6, 35: 7, 53: 7}


class Chirality(IntEnum):
    NONE = 0
    ANTICLOCKWISE = 1  # @
    CLOCKWISE = 2  # @@


class BondOrder(Enum):
    SINGLE = "single"
    DOUBLE = "double"
    TRIPLE = "triple"
    AROMATIC = "aromatic"

    @property
    def half_units(self) -> int:
        """Bond order times two, so aromatic (1.5) stays integral."""
        return _HALF_UNITS[self]

    @property
    def valence(self) -> float:
        return self.half_units / 2


_HALF_UNITS = {BondOrder.SINGLE: 2, BondOrder.DOUBLE: 4,
               BondOrder.TRIPLE: 6, BondOrder.AROMATIC: 3}
_BOND_SYMBOLS = {"-": BondOrder.SINGLE, "=": BondOrder.DOUBLE,
                 "#": BondOrder.TRIPLE, ":": BondOrder.AROMATIC,
                 "/": BondOrder.SINGLE, "\\": BondOrder.SINGLE}


@dataclass(frozen=True)
class Atom:
    element: int
    formal_charge: int = 0
    explicit_h_count: int | None = None
    aromatic: bool = False
    chirality: Chirality = Chirality.NONE
    isotope: int = 0

    @property
    def symbol(self) -> str:
        return ELEMENTS[self.element - 1]

    @property
    def is_bracket(self) -> bool:
        return self.explicit_h_count is not None


@dataclass(frozen=True)
class Bond:
    begin: int
    end: int
    order: BondOrder = BondOrder.SINGLE
    stereo: str | None = None  # "/" or "\\"; recorded, unused downstream


@dataclass(frozen=True)
class MolecularGraph:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    source_smiles: str = ""
    hydrogens_expanded: bool = False
    _adjacency: tuple[tuple[int, ...], ...] = field(
        default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        adj: list[list[int]] = [[] for _ in self.atoms]
        for k, b in enumerate(self.bonds):
            adj[b.begin].append(k)
            adj[b.end].append(k)
        object.__setattr__(self, "_adjacency", tuple(tuple(a) for a in adj))

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    @property
    def num_bonds(self) -> int:
        return len(self.bonds)

    def incident_bonds(self, atom: int) -> tuple[int, ...]:
        """Indices of bonds touching ``atom``, in bond order."""
        return self._adjacency[atom]

    def neighbors(self, atom: int) -> list[int]:
        out = []
        for k in self._adjacency[atom]:
            b = self.bonds[k]
            out.append(b.end if b.begin == atom else b.begin)
        return out

    def degree(self, atom: int) -> int:
        return len(self._adjacency[atom])

    def edge_index(self) -> np.ndarray:
        """Bonds as an ``(E, 2)`` int64 array of endpoint indices."""
        if not self.bonds:
            return np.zeros((0, 2), dtype=np.int64)
        return np.array([(b.begin, b.end) for b in self.bonds], dtype=np.int64)

    def component_labels(self) -> list[int]:
        """Connected-component label per atom, numbered by first atom seen."""
        parent = list(range(self.num_atoms))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for b in self.bonds:
            ra, rb = find(b.begin), find(b.end)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        labels: dict[int, int] = {}
        return [labels.setdefault(find(i), len(labels)) for i in range(self.num_atoms)]

    def num_components(self) -> int:
        return len(set(self.component_labels()))

    def cycle_rank(self) -> int:
        return self.num_bonds - self.num_atoms + self.num_components()


def euler_characteristic(g: MolecularGraph) -> int:
    """|V| - |E| of the graph viewed as a 1-dimensional simplicial complex."""
    return g.num_atoms - g.num_bonds


class _Parser:
    def __init__(self, smiles: str):
        self.s = smiles
        self.pos = 0
        self.atoms: list[Atom] = []
        self.bonds: list[Bond] = []
        self.pairs: set[tuple[int, int]] = set()
        self.prev: int | None = None
        self.pending: tuple[BondOrder, str | None, int] | None = None
        self.branches: list[tuple[int, int]] = []  # (atom, position of "(")
        self.rings: dict[int, tuple[int, tuple[BondOrder, str | None, int] | None, int]] = {}
        self.just_opened = False

    def error(self, cls, message: str, position: int | None = None):
        return cls(message, self.s, self.pos if position is None else position)

    def run(self) -> MolecularGraph:
        s = self.s
        while self.pos < len(s):
            c = s[self.pos]
            if c == "(":
                if self.prev is None:
                    raise self.error(SmilesSyntaxError, "branch without a preceding atom")
                if self.pending is not None:
                    raise self.error(SmilesSyntaxError, "bond symbol before branch")
                self.branches.append((self.prev, self.pos))
                self.just_opened = True
                self.pos += 1
                continue
            if c == ")":
                if not self.branches:
                    raise self.error(UnbalancedParenthesis, "unmatched ')'")
                if self.just_opened:
                    raise self.error(SmilesSyntaxError, "empty branch")
                if self.pending is not None:
                    raise self.error(SmilesSyntaxError, "dangling bond")
                self.prev = self.branches.pop()[0]
                self.pos += 1
                continue
            self.just_opened = False
            if c == ".":
                if self.prev is None or self.pending is not None:
                    raise self.error(SmilesSyntaxError, "misplaced '.'")
                self.prev = None
                self.pos += 1
            elif c in _BOND_SYMBOLS:
                if self.pending is not None:
                    raise self.error(SmilesSyntaxError, "consecutive bond symbols")
                if self.prev is None:
                    raise self.error(SmilesSyntaxError, "bond without a preceding atom")
                self.pending = (_BOND_SYMBOLS[c], c if c in "/\\" else None, self.pos)
                self.pos += 1
            elif c.isdigit() or c == "%":
                self.ring_closure()
            elif c == "[":
                self.add_atom(self.bracket_atom())
            else:
                self.add_atom(self.organic_atom())

        if self.branches:
            raise self.error(UnbalancedParenthesis, "unclosed '('", self.branches[-1][1])
        if self.rings:
            number, (_, _, where) = min(self.rings.items(), key=lambda kv: kv[1][2])
            raise self.error(UnmatchedRingClosure, f"ring bond {number} never closed", where)
        if self.pending is not None:
            raise self.error(SmilesSyntaxError, "dangling bond", self.pending[2])
        if not self.atoms:
            raise self.error(EmptyInput, "no atoms")
        return MolecularGraph(tuple(self.atoms), tuple(self.bonds), self.s)

    def organic_atom(self) -> Atom:
        two = self.s[self.pos:self.pos + 2]
        if two in ("Cl", "Br"):
            self.pos += 2
            return Atom(ORGANIC_SUBSET[two])
        c = self.s[self.pos]
        if c in ORGANIC_SUBSET:
            self.pos += 1
            return Atom(ORGANIC_SUBSET[c])
        if c in AROMATIC_SUBSET:
            self.pos += 1
            return Atom(AROMATIC_SUBSET[c], aromatic=True)
        raise self.error(UnknownToken, f"unexpected character {c!r}")

    def bracket_atom(self) -> Atom:
        s, start = self.s, self.pos
        end = s.find("]", start)
        if end < 0:
            raise self.error(UnknownToken, "unterminated bracket atom")
        body = s[start + 1:end]
        i = 0

        def bad(message: str) -> UnknownToken:
            return self.error(UnknownToken, f"{message} in [{body}]", start + 1 + i)

        j = i
        while j < len(body) and body[j].isdigit():
            j += 1
        isotope = int(body[i:j]) if j > i else 0
        i = j

        if body[i:i + 1] in AROMATIC_SUBSET and body[i:i + 1]:
            element, aromatic = AROMATIC_SUBSET[body[i]], True
            i += 1
        elif i < len(body) and body[i].isupper():
            if body[i:i + 2] in ATOMIC_NUMBER and body[i + 1:i + 2].islower():
                sym = body[i:i + 2]
            elif body[i] in ATOMIC_NUMBER:
                sym = body[i]
            else:
                raise bad("unknown element")
            element, aromatic = ATOMIC_NUMBER[sym], False
            i += len(sym)
        else:
            raise bad("expected element symbol")

        chirality = Chirality.NONE
        if body[i:i + 2] == "@@":
            chirality, i = Chirality.CLOCKWISE, i + 2
        elif body[i:i + 1] == "@":
            chirality, i = Chirality.ANTICLOCKWISE, i + 1
        if body[i:i + 1] == "@" or (chirality and body[i:i + 1].isupper()
                                    and body[i:i + 1] != "H"):
            raise bad("unsupported chirality class")

        h_count = 0
        if body[i:i + 1] == "H":
            i += 1
            j = i
            while j < len(body) and body[j].isdigit():
                j += 1
            h_count = int(body[i:j]) if j > i else 1
            i = j

        charge = 0
        if i < len(body) and body[i] in "+-":
            sign = 1 if body[i] == "+" else -1
            sym = body[i]
            i += 1
            j = i
            while j < len(body) and body[j].isdigit():
                j += 1
            if j > i:
                charge = sign * int(body[i:j])
                i = j
            else:
                n = 1
                while i < len(body) and body[i] == sym:
                    n += 1
                    i += 1
                charge = sign * n

        if body[i:i + 1] == ":":
            j = i + 1
            while j < len(body) and body[j].isdigit():
                j += 1
            if j == i + 1:
                raise bad("empty atom class")
            i = j
        if i != len(body):
            raise bad(f"unexpected {body[i]!r}")

        self.pos = end + 1
        return Atom(element, charge, h_count, aromatic, chirality, isotope)

    def ring_closure(self) -> None:
        s, where = self.s, self.pos
        if self.prev is None:
            raise self.error(SmilesSyntaxError, "ring bond without a preceding atom")
        if s[self.pos] == "%":
            digits = s[self.pos + 1:self.pos + 3]
            if len(digits) != 2 or not digits.isdigit():
                raise self.error(UnknownToken, "'%' must be followed by two digits")
            number = int(digits)
            self.pos += 3
        else:
            number = int(s[self.pos])
            self.pos += 1

        bond, self.pending = self.pending, None
        if number not in self.rings:
            self.rings[number] = (self.prev, bond, where)
            return
        other, opening_bond, _ = self.rings.pop(number)
        if other == self.prev:
            raise self.error(SmilesSyntaxError, "ring bond closes on itself", where)
        if bond and opening_bond and bond[0] is not opening_bond[0]:
            raise self.error(SmilesSyntaxError, "conflicting ring-closure bond orders", where)
        self.add_bond(other, self.prev, bond or opening_bond, where)

    def add_atom(self, atom: Atom) -> None:
        idx = len(self.atoms)
        self.atoms.append(atom)
        if self.prev is not None:
            self.add_bond(self.prev, idx, self.pending, self.pos)
        self.pending = None
        self.prev = idx

    def add_bond(self, a: int, b: int, bond, where: int) -> None:
        key = (min(a, b), max(a, b))
        if key in self.pairs:
            raise self.error(SmilesSyntaxError, "duplicate bond", where)
        self.pairs.add(key)
        if bond is None:
            both_aromatic = self.atoms[a].aromatic and self.atoms[b].aromatic
            order, stereo = (BondOrder.AROMATIC if both_aromatic else BondOrder.SINGLE), None
        else:
            order, stereo = bond[0], bond[1]
        self.bonds.append(Bond(a, b, order, stereo))


def _check_valence(g: MolecularGraph) -> None:
    for i, atom in enumerate(g.atoms):
        limit = MAX_VALENCE.get(atom.element)
        if limit is None:
            continue
        halves = sum(g.bonds[k].order.half_units for k in g.incident_bonds(i))
        used = halves // 2 + (atom.explicit_h_count or 0)
        if used > limit + abs(atom.formal_charge):
            raise ValenceExceeded(
                f"atom {i} ({atom.symbol}) has valence {used}, maximum {limit}",
                g.source_smiles)


def parse_smiles(smiles: str) -> MolecularGraph:
    """Parse ``smiles`` into a heavy-atom graph (hydrogens still implicit).

    Leading and trailing whitespace is ignored.

    Raises:
        EmptyInput, UnbalancedParenthesis, UnmatchedRingClosure, UnknownToken,
        ValenceExceeded, SmilesSyntaxError
    """
    text = smiles.strip()
    if not text:
        raise EmptyInput("empty SMILES", smiles)
    if not text.isascii():
        bad = next(i for i, c in enumerate(text) if not c.isascii())
        raise UnknownToken("non-ASCII character", text, bad)
    g = _Parser(text).run()
    _check_valence(g)
    return g


def _bond_half_units(g: MolecularGraph, atom: int) -> int:
    return sum(g.bonds[k].order.half_units for k in g.incident_bonds(atom))


def unfilled_valence(g: MolecularGraph, atom: int) -> int:
    """max(0, floor(default_valence - sum(bond orders) - |charge|)), or 0 for
    elements without a default valence. Aromatic bonds count 1.5."""
    a = g.atoms[atom]
    default = DEFAULT_VALENCE.get(a.element)
    if default is None:
        return 0
    halves = 2 * default - _bond_half_units(g, atom) - 2 * abs(a.formal_charge)
    return max(0, halves // 2)


def add_implicit_hydrogens(g: MolecularGraph) -> MolecularGraph:
    """Materialize hydrogens as degree-1 vertices.

    Organic-subset atoms get their implicit count from the default valence;
    bracket atoms use the written H count. Heavy atoms keep their indices and
    hydrogens are appended grouped by parent, in parent order.
    """
    if g.hydrogens_expanded:
        raise ValueError("hydrogens already expanded")
    atoms = list(g.atoms)
    bonds = list(g.bonds)
    for i, atom in enumerate(g.atoms):
        n_h = atom.explicit_h_count if atom.is_bracket else unfilled_valence(g, i)
        for _ in range(n_h):
            bonds.append(Bond(i, len(atoms)))
            atoms.append(Atom(1))
    return MolecularGraph(tuple(atoms), tuple(bonds), g.source_smiles, True)


def largest_component(g: MolecularGraph) -> MolecularGraph:
    """Keep only the component with the most atoms (first one on ties)."""
    labels = g.component_labels()
    if not labels:
        return g
    sizes: dict[int, int] = {}
    for lab in labels:
        sizes[lab] = sizes.get(lab, 0) + 1
    best = max(sizes, key=lambda lab: (sizes[lab], -lab))
    keep = [i for i, lab in enumerate(labels) if lab == best]
    return subgraph(g, keep)


def subgraph(g: MolecularGraph, keep: list[int]) -> MolecularGraph:
    """Induced subgraph on ``keep`` (atom order preserved as given)."""
    remap = {old: new for new, old in enumerate(keep)}
    bonds = tuple(replace(b, begin=remap[b.begin], end=remap[b.end])
                  for b in g.bonds if b.begin in remap and b.end in remap)
    return MolecularGraph(tuple(g.atoms[i] for i in keep), bonds,
                          g.source_smiles, g.hydrogens_expanded)


def permute_atoms(g: MolecularGraph, order: list[int]) -> MolecularGraph:
    """Relabel atoms so that new atom ``i`` is old atom ``order[i]``.

    Bonds are remapped and listed in the same sequence as before.
    """
    if sorted(order) != list(range(g.num_atoms)):
        raise ValueError("order must be a permutation of atom indices")
    remap = {old: new for new, old in enumerate(order)}
    bonds = tuple(replace(b, begin=remap[b.begin], end=remap[b.end]) for b in g.bonds)
    return MolecularGraph(tuple(g.atoms[i] for i in order), bonds,
                          g.source_smiles, g.hydrogens_expanded)


def molecule_from_smiles(smiles: str, largest_only: bool = False) -> MolecularGraph:
    """parse_smiles followed by hydrogen expansion."""
    g = parse_smiles(smiles)
    if largest_only:
        g = largest_component(g)
    return add_implicit_hydrogens(g)
