import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ectmol.errors import (
    EctMolError,
    EmptyInput,
    SmilesError,
    SmilesSyntaxError,
    UnbalancedParenthesis,
    UnknownToken,
    UnmatchedRingClosure,
    ValenceExceeded,
)
from ectmol.smiles import (
    BondOrder,
    Chirality,
    MolecularGraph,
    add_implicit_hydrogens,
    euler_characteristic,
    largest_component,
    molecule_from_smiles,
    parse_smiles,
    permute_atoms,
)

CORPUS = [
    "CC(O)=O", "C", "C1CC1", "c1ccccc1", "CCO", "C#N", "O=C=O",
    "c1ccc2ccccc2c1", "c1cc[nH]c1", "C[N+](=O)[O-]", "[NH4+].[Cl-]",
    "CC(=O)Oc1ccccc1C(=O)O", "CN1C=NC2=C1C(=O)N(C(=O)N2C)C",
    "C[C@H](N)C(=O)O", "F/C=C/F", "C%10CC%10", "OCC1OC(O)C(O)C(O)C1O",
    "[2H]C([2H])([2H])Cl", "Clc1ccc(Br)cc1I", "CS(=O)(=O)C", "OP(=O)(O)O",
    "B(O)(O)c1ccccc1", "C1CC2CCC1CC2", "[Na+].[O-]C(=O)C",
]


def to_nx(g: MolecularGraph) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(range(g.num_atoms))
    G.add_edges_from((b.begin, b.end) for b in g.bonds)
    return G


class TestParse:
    def test_acetic_acid_heavy_atoms(self):
        g = parse_smiles("CC(O)=O")
        assert g.num_atoms == 4
        assert g.num_bonds == 3
        assert [b.order for b in g.bonds].count(BondOrder.DOUBLE) == 1

    def test_single_atom(self):
        g = parse_smiles("C")
        assert (g.num_atoms, g.num_bonds) == (1, 0)

    def test_cyclopropane_ring_closure(self):
        # C1 opens ring 1 on atom 0; the third C closes it back to atom 0.
        g = parse_smiles("C1CC1")
        assert (g.num_atoms, g.num_bonds) == (3, 3)
        assert {(b.begin, b.end) for b in g.bonds} == {(0, 1), (1, 2), (0, 2)}
        assert g.cycle_rank() == 1

    def test_organic_two_letter_elements(self):
        g = parse_smiles("ClCBr")
        assert [a.element for a in g.atoms] == [17, 6, 35]

    def test_aromatic_bonds_default(self):
        g = parse_smiles("c1ccccc1")
        assert all(b.order is BondOrder.AROMATIC for b in g.bonds)
        assert all(a.aromatic for a in g.atoms)

    def test_single_bond_between_aromatic_rings(self):
        g = parse_smiles("c1ccccc1-c1ccccc1")
        link = [b for b in g.bonds if {b.begin, b.end} == {5, 6}]
        assert link[0].order is BondOrder.SINGLE

    def test_bracket_atom_fields(self):
        g = parse_smiles("[13C@@H2+:7]")
        a = g.atoms[0]
        assert (a.element, a.isotope, a.chirality, a.explicit_h_count, a.formal_charge) == \
            (6, 13, Chirality.CLOCKWISE, 2, 1)

    @pytest.mark.parametrize("text,charge", [("[O-]", -1), ("[Fe+++]", 3), ("[Fe+3]", 3),
                                             ("[O--]", -2), ("[N+]", 1)])
    def test_charges(self, text, charge):
        assert parse_smiles(text).atoms[0].formal_charge == charge

    def test_metal_in_brackets(self):
        g = parse_smiles("[Pt](Cl)(Cl)")
        assert g.atoms[0].element == 78

    def test_ring_percent_and_bond_on_closure(self):
        g = parse_smiles("C=%12CC%12")
        closing = [b for b in g.bonds if {b.begin, b.end} == {0, 2}][0]
        assert closing.order is BondOrder.DOUBLE

    def test_ring_digit_reuse(self):
        g = parse_smiles("C1CC1C1CC1")
        assert g.num_bonds == 7

    def test_stereo_bonds_are_single(self):
        g = parse_smiles("F/C=C\\F")
        stereo = [b for b in g.bonds if b.stereo]
        assert [b.stereo for b in stereo] == ["/", "\\"]
        assert all(b.order is BondOrder.SINGLE for b in stereo)

    def test_dot_keeps_components(self):
        g = parse_smiles("CCO.[Na+]")
        assert g.num_components() == 2

    def test_largest_component(self):
        g = largest_component(parse_smiles("[Na+].CC(=O)[O-]"))
        assert g.num_atoms == 4
        assert g.num_components() == 1

    def test_whitespace_is_trimmed(self):
        assert parse_smiles("  CCO \n").num_atoms == 3

    @pytest.mark.parametrize("text,error", [
        ("", EmptyInput),
        ("   ", EmptyInput),
        ("C1CC", UnmatchedRingClosure),
        ("C(C", UnbalancedParenthesis),
        ("CC)", UnbalancedParenthesis),
        ("CX", UnknownToken),
        ("*C", UnknownToken),
        ("C$C", UnknownToken),
        ("[Xx]", UnknownToken),
        ("[C@TH1]", UnknownToken),
        ("[se]1cccc1", UnknownToken),
        ("[CH4", UnknownToken),
        ("CCé", UnknownToken),
        ("C(=O)(=O)=O", ValenceExceeded),
        ("FF(F)", ValenceExceeded),
        ("C=", SmilesSyntaxError),
        ("=C", SmilesSyntaxError),
        ("C()C", SmilesSyntaxError),
        ("(C)C", SmilesSyntaxError),
        ("C11", SmilesSyntaxError),
        ("C12CC12", SmilesSyntaxError),
        ("C..C", SmilesSyntaxError),
        ("C=1CC-1", SmilesSyntaxError),
    ])
    def test_errors(self, text, error):
        with pytest.raises(error):
            parse_smiles(text)

    def test_error_reports_position(self):
        with pytest.raises(UnknownToken) as info:
            parse_smiles("CCX")
        assert info.value.position == 2

    def test_charged_nitrogen_allows_four_bonds(self):
        parse_smiles("C[N+](C)(C)C")


class TestHydrogens:
    def test_acetic_acid(self):
        g = molecule_from_smiles("CC(O)=O")
        assert (g.num_atoms, g.num_bonds) == (8, 7)
        symbols = sorted(a.symbol for a in g.atoms)
        assert symbols == ["C", "C", "H", "H", "H", "H", "O", "O"]

    def test_methane(self):
        g = molecule_from_smiles("C")
        assert (g.num_atoms, g.num_bonds) == (5, 4)

    def test_benzene(self):
        g = molecule_from_smiles("c1ccccc1")
        assert (g.num_atoms, g.num_bonds) == (12, 12)
        assert euler_characteristic(g) == 0

    @pytest.mark.parametrize("text,n_h", [
        ("c1ccc2ccccc2c1", 8),  # fused carbons: 4 - 4.5 -> 0
        ("c1ccncc1", 5),
        ("c1ccsc1", 4),
        ("c1cc[nH]c1", 5),
        ("[CH3]", 3),
        ("[CH4]", 4),
        ("[Na+]", 0),
        ("CS(=O)(=O)C", 6),
        ("C#N", 1),
        ("N", 3),
        ("OB(O)O", 3),
    ])
    def test_counts(self, text, n_h):
        g = molecule_from_smiles(text)
        assert sum(1 for a in g.atoms if a.element == 1) == n_h

    def test_ordering_heavy_first_then_by_parent(self):
        g = molecule_from_smiles("CO")
        assert [a.element for a in g.atoms] == [6, 8, 1, 1, 1, 1]
        parents = [b.begin for b in g.bonds[1:]]
        assert parents == [0, 0, 0, 1]

    def test_hydrogens_have_degree_one(self):
        for text in CORPUS:
            g = molecule_from_smiles(text)
            for i, a in enumerate(g.atoms):
                if a.element == 1 and not a.is_bracket:
                    assert g.degree(i) == 1

    def test_expanding_twice_is_rejected(self):
        g = molecule_from_smiles("C")
        with pytest.raises(ValueError):
            add_implicit_hydrogens(g)


class TestEulerCharacteristic:
    def test_acetic_acid(self):
        assert euler_characteristic(molecule_from_smiles("CC(O)=O")) == 1

    def test_empty_graph(self):
        assert euler_characteristic(MolecularGraph((), ())) == 0

    def test_benzene(self):
        assert euler_characteristic(molecule_from_smiles("c1ccccc1")) == 0

    @pytest.mark.parametrize("text", CORPUS)
    def test_components_minus_cycle_rank(self, text):
        g = molecule_from_smiles(text)
        G = to_nx(g)
        components = nx.number_connected_components(G)
        forest_edges = sum(len(T.edges) for T in
                           (nx.minimum_spanning_tree(G.subgraph(c))
                            for c in nx.connected_components(G)))
        cycle_rank = g.num_bonds - forest_edges
        assert euler_characteristic(g) == components - cycle_rank
        assert g.num_components() == components

    def test_synthetic_corpus(self, small_corpus):
        for text in small_corpus:
            g = molecule_from_smiles(text)
            G = to_nx(g)
            assert euler_characteristic(g) == (nx.number_connected_components(G)
                                               - len(nx.cycle_basis(G)))


class TestProperties:
    @pytest.mark.parametrize("text", CORPUS)
    def test_deterministic(self, text):
        assert parse_smiles(text) == parse_smiles(text)
        assert molecule_from_smiles(text) == molecule_from_smiles(text)

    @pytest.mark.parametrize("text", CORPUS)
    def test_expansion_preserves_components(self, text):
        g = parse_smiles(text)
        assert add_implicit_hydrogens(g).num_components() == g.num_components()

    @pytest.mark.parametrize("text", CORPUS)
    def test_simple_graph(self, text):
        g = molecule_from_smiles(text)
        pairs = [frozenset((b.begin, b.end)) for b in g.bonds]
        assert all(len(p) == 2 for p in pairs)
        assert len(set(pairs)) == len(pairs)

    @settings(max_examples=500, deadline=None)
    @given(st.text(alphabet="CNOcnos()[]=#:/\\.%123+-@H", max_size=24))
    def test_fuzz_returns_graph_or_typed_error(self, text):
        try:
            g = parse_smiles(text)
        except SmilesError:
            return
        assert g.num_atoms >= 1

    @settings(max_examples=200, deadline=None)
    @given(st.text(max_size=16))
    def test_fuzz_arbitrary_text(self, text):
        try:
            parse_smiles(text)
        except EctMolError:
            pass

    def test_permute_atoms_roundtrip(self):
        g = molecule_from_smiles("CC(O)=O")
        order = [3, 0, 7, 1, 5, 2, 6, 4]
        p = permute_atoms(g, order)
        inverse = sorted(range(len(order)), key=order.__getitem__)
        assert permute_atoms(p, inverse) == g
