import unittest

import numpy as np

from src import group
from src.ball_walker import ball, projected_ball_size
from src.cone_types import (
    GeodesicAutomaton, AutomatonBuilder, cone_types, geodesic_automaton, recurrent_subgraph, geodesic_density,
)
from src.errors import BallTooLarge, EmptyRecurrentPart, AutomatonMismatch, InvalidInput
from src.graph_util import distances_to_set, filter_graph, mark_recurrent_edges


class TestWords(unittest.TestCase):

    def test_parse_and_format(self):
        pres = group.free_group(2)
        self.assertEqual((0, 2, 1), pres.parse("abA"))
        self.assertEqual("abA", pres.format((0, 2, 1)))
        self.assertEqual((), pres.parse("id"))
        with self.assertRaises(InvalidInput):
            pres.parse("abx")

        surface = group.surface_group(2)
        self.assertEqual(surface.parse("a1 B2"), surface.parse("a1B2"))

    def test_free_reduction(self):
        pres = group.free_group(2)
        self.assertEqual((), group.normalize(pres, pres.parse("abBA")))
        self.assertEqual(pres.parse("b"), group.normalize(pres, pres.parse("aAb")))
        self.assertTrue(group.equal(pres, pres.parse("abB"), pres.parse("a")))

    def test_free_product_normal_form(self):
        pres = group.free_product(3, 2)
        self.assertTrue(group.is_identity(pres, pres.parse("aaa")))
        self.assertTrue(group.is_identity(pres, pres.parse("bb")))
        self.assertEqual(pres.parse("A"), group.normalize(pres, pres.parse("aa")))
        self.assertEqual(3, group.word_length(pres, pres.parse("abaa")))

    def test_surface_relator(self):
        pres = group.surface_group(2)
        self.assertTrue(group.is_identity(pres, pres.relators[0]))
        self.assertFalse(group.is_identity(pres, pres.parse("a1 b1")))

    def test_translation_length(self):
        pres = group.free_product(3, 2)
        tl = group.translation_length(pres, pres.parse("ab"))
        self.assertEqual(2., tl.estimate)
        self.assertEqual(2., tl.ratio)

    def test_cyclic_representatives(self):
        pres = group.free_group(2)
        words = [pres.parse(w) for w in ("ab", "ba", "aB", "abA", "b")]
        reps, exact = group.cyclic_representatives(pres, words)
        self.assertEqual([pres.parse("ab"), pres.parse("aB"), pres.parse("b")], reps)
        self.assertTrue(exact)

    def test_presentation_json(self):
        pres = group.presentation_from_json({"family": "free_product", "params": {"orders": [3, 2]}})
        self.assertEqual(group.free_product(3, 2), pres)
        with self.assertRaises(InvalidInput):
            group.presentation_from_json({"family": "braid"})


class TestBall(unittest.TestCase):

    def test_free_group_spheres(self):
        b = ball(group.free_group(2), 3)
        self.assertEqual([1, 4, 12, 36], b.sphere_sizes())
        self.assertEqual(b.sphere_sizes(), b.geodesic_word_counts())
        self.assertEqual(2, b.length_of(group.free_group(2).parse("ab")))

    def test_free_product_spheres(self):
        pres = group.free_product(3, 2)
        b = ball(pres, 3)
        self.assertEqual([1, 3, 4, 6], b.sphere_sizes())
        # aa is not geodesic, A is
        self.assertEqual(1, b.length_of(pres.parse("aa")))
        self.assertEqual(14, projected_ball_size(pres, 3))

    def test_projected_size(self):
        self.assertEqual(1 + 4 + 12 + 36, projected_ball_size(group.free_group(2), 3))

    def test_cap(self):
        with self.assertRaises(BallTooLarge):
            ball(group.free_group(3), 12, cap=10_000)


class TestConeTypes(unittest.TestCase):

    def test_free_group(self):
        pres = group.free_group(2)
        ct = cone_types(pres, 6, cone_radius=2)
        self.assertEqual(5, len(ct))
        self.assertTrue(ct.stabilized)
        self.assertTrue(ct.certified)
        # the type of a reduced word only depends on its first letter
        self.assertEqual(ct.type_of(pres.parse("ab")), ct.type_of(pres.parse("a")))
        self.assertNotEqual(ct.type_of(pres.parse("ba")), ct.type_of(pres.parse("a")))

    def test_free_group_automaton(self):
        pres = group.free_group(2)
        auto = geodesic_automaton(pres, 6, cone_radius=2)
        self.assertEqual(5, len(auto.vertices))
        self.assertTrue(auto.certified)
        self.assertTrue(auto.accepts(pres.parse("abAB")))
        self.assertFalse(auto.accepts(pres.parse("aAb")))
        self.assertEqual([1, 4, 12, 36, 108], auto.walk_counts(4))

        rec = recurrent_subgraph(auto)
        self.assertEqual(4, len(rec.vertices))
        self.assertEqual(12, len(rec.edges))
        self.assertNotIn(auto.start, rec.vertices)
        self.assertIsNone(rec.start)

    def test_free_product_automaton(self):
        pres = group.free_product(3, 2)
        auto = geodesic_automaton(pres, 6, cone_radius=2)
        self.assertEqual(3, len(auto.vertices))
        rec = recurrent_subgraph(auto)
        self.assertEqual(2, len(rec.vertices))
        self.assertEqual(3, len(rec.edges))
        self.assertEqual({pres.parse("a"), pres.parse("b")}, {rec.witnesses[v] for v in rec.vertices})

    def test_no_cycles(self):
        auto = GeodesicAutomaton(vertices=(0, 1), edges=((0, 0, 1),), start=0, names=("a", "A"))
        with self.assertRaises(EmptyRecurrentPart):
            recurrent_subgraph(auto)

    def test_automaton_validation(self):
        with self.assertRaises(AutomatonMismatch):
            GeodesicAutomaton(vertices=(0, 1), edges=((0, 0, 1), (0, 0, 0)), start=0, names=("a", "A"))
        with self.assertRaises(AutomatonMismatch):
            GeodesicAutomaton(vertices=(0, 1), edges=(), start=0, names=("a", "A"))

    def test_json(self):
        pres = group.free_product(3, 2)
        auto = geodesic_automaton(pres, 6, cone_radius=2)
        copy = GeodesicAutomaton.from_json(auto.to_json())
        self.assertEqual(sorted(auto.edges), sorted(copy.edges))
        self.assertEqual(auto.witnesses, copy.witnesses)
        self.assertEqual(auto.start, copy.start)

    def test_random_walk(self):
        pres = group.free_group(2)
        auto = geodesic_automaton(pres, 6, cone_radius=2)
        rng = np.random.default_rng(0)
        for _ in range(10):
            labels, end = auto.random_walk(rng, 8, auto.start)
            self.assertTrue(auto.accepts(tuple(reversed(labels))))
            self.assertEqual(8, group.word_length(pres, labels))

    def test_geodesic_density(self):
        dens = geodesic_density(group.free_group(2), 5, margin=2)
        self.assertEqual(0., dens.c)


class TestGraphUtil(unittest.TestCase):

    def _graph(self):
        builder = AutomatonBuilder(("a", "A"))
        for v in range(4):
            builder.vertex(v)
        # 0 -> 1 <-> 2, 3 isolated
        builder.edge(0, 1, 0)
        builder.edge(1, 2, 0)
        builder.edge(2, 1, 1)
        return builder.to_igraph()

    def test_recurrent_edges(self):
        graph = self._graph()
        mark_recurrent_edges(graph)
        self.assertEqual([False, True, True], graph.es["recurrent"])

        filter_graph(graph, edge_filters={"recurrent": True}, vertex_filters={"degree__gt": 0})
        self.assertEqual(2, graph.vcount())
        self.assertEqual(2, graph.ecount())

    def test_distances_to_set(self):
        graph = self._graph()
        self.assertEqual([1., 0., 1., float("inf")], distances_to_set(graph, [1]))
        self.assertEqual([float("inf")] * 4, distances_to_set(graph, []))

    def test_invalid_filter(self):
        with self.assertRaises(ValueError):
            filter_graph(self._graph(), vertex_filters={"degree__lt": 1})
