import unittest

import numpy as np

from src import matgeo
from src.matgeo import Subspace
from src.errors import InvalidInput, NoGap, NonInvertible, NotGraph


def _line_at(degrees: float) -> Subspace:
    t = np.radians(degrees)
    return matgeo.line([np.cos(t), np.sin(t)])


class TestSubspace(unittest.TestCase):

    def test_span(self):
        """span orthonormalizes and rejects dependent vectors"""
        space = Subspace.span([[1., 1.], [0., 1.], [0., 0.]])
        self.assertEqual(2, space.dim)
        self.assertEqual(3, space.ambient_dim)
        np.testing.assert_allclose(np.eye(2), space.basis.T @ space.basis, atol=1e-12)
        self.assertTrue(space.contains(np.array([1., 0., 0.])))
        self.assertFalse(space.contains(np.array([0., 0., 1.])))

        with self.assertRaises(InvalidInput):
            Subspace.span([[1., 2.], [1., 2.], [0., 0.]])

    def test_non_orthonormal_basis(self):
        with self.assertRaises(InvalidInput):
            Subspace(np.array([[1.], [1.]]))
        # |b|^2 - 1 = 1e-10
        with self.assertRaises(InvalidInput):
            Subspace(np.array([[1.], [1e-5]]))
        self.assertEqual(1, Subspace(np.array([[.6], [.8]])).dim)

    def test_complement(self):
        space = Subspace.span([[1.], [2.], [3.]])
        comp = space.complement()
        self.assertEqual(2, comp.dim)
        np.testing.assert_allclose(0., space.basis.T @ comp.basis, atol=1e-12)

    def test_json(self):
        space = Subspace.span([[1.], [2.], [3.]])
        other = Subspace.from_json(space.to_json())
        self.assertAlmostEqual(0., matgeo.grassmann_distance(space, other), places=12)


class TestGrassmannian(unittest.TestCase):

    def test_distance_of_lines(self):
        """the distance of two lines is the sine of their angle"""
        for degrees in (0., 10., 45., 80., 90.):
            dist = matgeo.grassmann_distance(_line_at(0.), _line_at(degrees))
            self.assertAlmostEqual(np.sin(np.radians(degrees)), dist, places=10)

    def test_angle(self):
        self.assertAlmostEqual(np.radians(30.), matgeo.angle(_line_at(10.), _line_at(40.)), places=10)
        # lines at 1e-7 rad need the sine branch
        self.assertAlmostEqual(1e-7, matgeo.angle(_line_at(0.), _line_at(np.degrees(1e-7))), delta=1e-12)

        plane = Subspace.span([[1., 0.], [0., 1.], [0., 0.]])
        line = matgeo.line([1., 0., 1.])
        self.assertAlmostEqual(np.pi / 4, matgeo.angle(plane, line), places=10)

    def test_pairwise_and_hausdorff(self):
        points = [_line_at(a) for a in (0., 30., 60.)]
        dist = matgeo.pairwise_distances(points)
        self.assertEqual((3, 3), dist.shape)
        self.assertAlmostEqual(np.sin(np.radians(60.)), dist[0, 2], places=10)
        self.assertAlmostEqual(0., matgeo.hausdorff_distance(points, points[::-1]), places=12)
        # a subset is close to the whole set only in one direction
        self.assertAlmostEqual(0., matgeo.hausdorff_distance(points[:1], points, directed=True), places=12)
        self.assertAlmostEqual(np.sin(np.radians(60.)), matgeo.hausdorff_distance(points[:1], points), places=10)

    def test_graph_map(self):
        p = _line_at(0.)
        q = _line_at(30.)
        self.assertAlmostEqual(np.tan(np.radians(30.)), matgeo.graph_map_norm(p, q), places=10)
        lm = matgeo.graph_map(p, q)
        v = np.array([1., 0.])
        self.assertTrue(q.contains(v + lm @ v))

        with self.assertRaises(NotGraph):
            matgeo.graph_map_norm(p, _line_at(90.))

    def test_average_projector(self):
        points = [_line_at(a) for a in (-5., 5.)]
        mean = matgeo.average_projector_representative(points)
        self.assertAlmostEqual(0., matgeo.grassmann_distance(mean, _line_at(0.)), places=10)


class TestSingularValues(unittest.TestCase):

    def test_singular_spaces(self):
        u, s = matgeo.singular_spaces(np.diag([3., 2., 1.]), 1)
        self.assertAlmostEqual(0., matgeo.grassmann_distance(u, matgeo.line([1., 0., 0.])), places=12)
        self.assertAlmostEqual(
            0., matgeo.grassmann_distance(s, Subspace.span([[0., 0.], [1., 0.], [0., 1.]])), places=12,
        )

    def test_no_gap(self):
        with self.assertRaises(NoGap):
            matgeo.singular_spaces(matgeo.rotation(.3), 1)

    def test_non_invertible(self):
        with self.assertRaises(NonInvertible):
            matgeo.check_matrix(np.array([[1., 0.], [0., 0.]]))

    def test_index_range(self):
        with self.assertRaises(InvalidInput):
            matgeo.gap_ratio(np.eye(3), 3)

    def test_dominant_subspace(self):
        a = np.array([[3., 1., 0.], [0., 1., 0.], [0., 0., .5]])
        space = matgeo.dominant_subspace(a, 1)
        self.assertAlmostEqual(0., matgeo.grassmann_distance(space, matgeo.line([1., 0., 0.])), places=10)

        with self.assertRaises(NoGap):
            matgeo.dominant_subspace(matgeo.rotation(.5), 1)

    def test_projective_equal(self):
        self.assertTrue(matgeo.projective_equal(-np.eye(2), np.eye(2), 1e-10))
        self.assertFalse(matgeo.projective_equal(np.diag([1., 2.]), np.eye(2), 1e-10))


class TestExteriorPowers(unittest.TestCase):

    def test_wedge_of_diagonal(self):
        w = matgeo.wedge(np.diag([2., 3., 5.]), 2)
        np.testing.assert_allclose(np.diag([6., 10., 15.]), w, atol=1e-12)

    def test_wedge_is_multiplicative(self):
        rng = np.random.default_rng(1)
        a, b = rng.standard_normal((2, 4, 4))
        np.testing.assert_allclose(
            matgeo.wedge(a @ b, 2), matgeo.wedge(a, 2) @ matgeo.wedge(b, 2), atol=1e-10,
        )

    def test_plucker_embedding_ignores_basis(self):
        rng = np.random.default_rng(2)
        basis = rng.standard_normal((4, 2))
        space1 = Subspace.span(basis)
        space2 = Subspace.span(basis @ np.array([[2., 1.], [-1., 3.]]))
        np.testing.assert_allclose(matgeo.plucker_embed(space1), matgeo.plucker_embed(space2), atol=1e-12)


class TestLongProducts(unittest.TestCase):

    def test_window_log_gaps(self):
        """window gaps agree with a direct SVD of short window products"""
        rng = np.random.default_rng(3)
        mats = np.array([matgeo.random_matrix(rng, 3) for _ in range(6)])
        gaps = matgeo.window_log_gaps(mats, 1)
        for n in range(6):
            for length in range(1, 6 - n + 1):
                product = np.eye(3)
                for m in mats[n:n + length]:
                    product = m @ product
                s = matgeo.singular_values(product)
                self.assertAlmostEqual(np.log(s[0] / s[1]), gaps[n, length], places=8)
        self.assertTrue(np.isnan(gaps[5, 2]))

    def test_long_constant_product(self):
        """gaps of 200 factors diag(2, 1/2) are exactly 200 log 4"""
        mats = np.repeat(np.diag([2., .5])[None], 200, axis=0)
        gaps = matgeo.window_log_gaps(mats, 1, max_length=200)
        self.assertAlmostEqual(200 * np.log(4.), gaps[0, 200], places=6)

    def test_renormalized_product(self):
        product, log_scale = matgeo.renormalized_product([np.diag([2., 1.])] * 10)
        np.testing.assert_allclose(np.diag([2. ** 10, 1.]), product * np.exp(log_scale), rtol=1e-12)

    def test_tree_log_volumes(self):
        """volumes along a word tree agree with the products of the words"""
        rng = np.random.default_rng(4)
        letters = np.array([matgeo.random_matrix(rng, 3) for _ in range(2)])
        # identity, 0, 1, 00, 01
        parent = np.array([-1, 0, 0, 1, 1])
        letter = np.array([-1, 0, 1, 0, 1])
        length = np.array([0, 1, 1, 2, 2])
        words = [(), (0,), (1,), (0, 0), (0, 1)]
        volumes = matgeo.tree_log_volumes(letters, parent, letter, length, (1, 2))
        for i, word in enumerate(words):
            product = np.eye(3)
            for x in word:
                product = product @ letters[x]
            s = matgeo.singular_values(product)
            self.assertAlmostEqual(np.log(s[0]), volumes[1][i], places=10)
            self.assertAlmostEqual(np.log(s[0] * s[1]), volumes[2][i], places=10)
