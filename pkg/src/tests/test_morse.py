import math
import unittest

import numpy as np

from src import matgeo
from src.errors import NoGapAtTheta, NotPositiveOnChamber, NotRegular, NotQuasiGeodesic, InvalidInput, NotTransverse
from src.morse import (
    CartanVector, PartialFlag, QuasiGeodesic, cartan_projection, vector_distance, symmetric_distance,
    comparability_check, flag_of, parallel_set_distance_bounds, quasigeodesic_constants, regularity_margin,
    morse_audit, exterior_reduction, exterior_quasi_geodesic, orbit_of_word, opposite_theta,
)
from src.samples import modular_example


def _diagonal_orbit(diag, num: int) -> QuasiGeodesic:
    d = len(diag)
    return QuasiGeodesic(start=np.eye(d), increments=np.repeat(np.diag(np.exp(diag))[None], num - 1, axis=0))


def _line_flag(degrees: float) -> PartialFlag:
    t = np.radians(degrees)
    return PartialFlag((1, ), (matgeo.line([np.cos(t), np.sin(t)]), ))


def _orthogonal(rng: np.random.Generator, d: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


class TestCartan(unittest.TestCase):

    def test_projection(self):
        a = cartan_projection(np.diag([math.e, 1., 1. / math.e]))
        np.testing.assert_allclose([1., 0., -1.], a.a, atol=1e-12)
        self.assertAlmostEqual(1., a.alpha(1))
        self.assertAlmostEqual(math.sqrt(2.), a.norm())

        # scalars and rotations sit at the basepoint
        np.testing.assert_allclose(0., cartan_projection(3. * matgeo.rotation(.4)).a, atol=1e-12)

    def test_opposition(self):
        rng = np.random.default_rng(0)
        g = matgeo.random_matrix(rng, 4)
        np.testing.assert_allclose(
            cartan_projection(g).opposition().a, cartan_projection(np.linalg.inv(g)).a, atol=1e-10,
        )

    def test_unsorted_vector(self):
        with self.assertRaises(InvalidInput):
            CartanVector(np.array([-1., 1.]))

    def test_distance(self):
        rng = np.random.default_rng(1)
        h1, h2, h3, k = (matgeo.random_matrix(rng, 3) for _ in range(4))
        self.assertAlmostEqual(symmetric_distance(h1, h2), symmetric_distance(k @ h1, k @ h2), places=8)
        self.assertAlmostEqual(symmetric_distance(h1, h2), symmetric_distance(h2, h1), places=8)
        self.assertLessEqual(
            symmetric_distance(h1, h3), symmetric_distance(h1, h2) + symmetric_distance(h2, h3) + 1e-10,
        )
        np.testing.assert_allclose(
            vector_distance(h1, h2).a, cartan_projection(np.linalg.inv(h1) @ h2).a, atol=1e-10,
        )

    def test_comparability(self):
        sample = [np.diag([math.e ** k, math.e ** -k]) for k in (1, 2, 3)]
        interval = comparability_check([1., -1.], sample)
        self.assertAlmostEqual(math.sqrt(.5), interval.lower)
        self.assertAlmostEqual(math.sqrt(.5), interval.upper)
        self.assertEqual(3, interval.size)

        with self.assertRaises(NotPositiveOnChamber):
            comparability_check([1., 1.], sample)


class TestFlags(unittest.TestCase):

    def test_flag_of(self):
        flag = flag_of(np.diag([3., 2., 1.]), (1, 2))
        self.assertEqual((1, 2), flag.theta)
        self.assertAlmostEqual(0., matgeo.grassmann_distance(flag.space(1), matgeo.line([1., 0., 0.])), places=12)
        self.assertAlmostEqual(
            0., matgeo.grassmann_distance(flag.space(2), matgeo.Subspace.span([[1., 0.], [0., 1.], [0., 0.]])),
            places=12,
        )
        self.assertEqual((1, 2), opposite_theta(3, (1, 2)))
        self.assertEqual((2, ), opposite_theta(3, (1, )))

    def test_no_gap(self):
        with self.assertRaises(NoGapAtTheta):
            flag_of(np.diag([2., 2., .5]), (1, ))
        self.assertEqual((2, ), flag_of(np.diag([2., 2., .5]), (2, )).theta)

    def test_not_nested(self):
        with self.assertRaises(InvalidInput):
            PartialFlag((1, 2), (
                matgeo.line([0., 0., 1.]),
                matgeo.Subspace.span([[1., 0.], [0., 1.], [0., 0.]]),
            ))


class TestParallelSets(unittest.TestCase):

    def test_orthogonal_pair(self):
        bracket = parallel_set_distance_bounds(_line_flag(0.), _line_flag(90.))
        self.assertAlmostEqual(0., bracket.lower, places=12)
        self.assertAlmostEqual(0., bracket.upper, places=10)

    def test_oblique_pair(self):
        """E = e1, F = e1 + e2, the parallel set map is a unit shear"""
        bracket = parallel_set_distance_bounds(_line_flag(0.), _line_flag(45.))
        self.assertAlmostEqual(math.log(math.sqrt(2.)), bracket.m, places=10)
        self.assertAlmostEqual(math.log(math.sqrt(2.)) / math.sqrt(2.), bracket.lower, places=10)
        self.assertAlmostEqual(math.sqrt(2.) * math.log((1. + math.sqrt(5.)) / 2.), bracket.upper, places=8)

    def test_bracket_is_comparable(self):
        for degrees in (89., 60., 30., 10., 1., .01):
            bracket = parallel_set_distance_bounds(_line_flag(0.), _line_flag(degrees))
            self.assertLessEqual(bracket.lower, bracket.upper + 1e-12)
            self.assertLessEqual(bracket.upper, 5. * bracket.lower + 1.)

    def test_nearly_degenerate(self):
        bracket = parallel_set_distance_bounds(_line_flag(0.), _line_flag(np.degrees(1e-4)))
        self.assertGreaterEqual(bracket.lower, 6.5)
        self.assertTrue(math.isfinite(bracket.upper))
        self.assertGreaterEqual(bracket.upper, bracket.lower)

        with self.assertRaises(NotTransverse):
            parallel_set_distance_bounds(_line_flag(30.), _line_flag(30.))

    def test_full_flags(self):
        rng = np.random.default_rng(2)
        g = matgeo.random_matrix(rng, 3)
        e = flag_of(g, (1, 2))
        f = flag_of(np.linalg.inv(g), (1, 2))
        bracket = parallel_set_distance_bounds(e, f)
        self.assertLessEqual(bracket.lower, bracket.upper + 1e-12)

        # orthogonal maps fix the basepoint
        k = _orthogonal(rng, 3)
        moved = parallel_set_distance_bounds(e.translate(k), f.translate(k))
        self.assertAlmostEqual(bracket.lower, moved.lower, places=8)
        self.assertAlmostEqual(bracket.upper, moved.upper, places=8)

    def test_type_mismatch(self):
        e = flag_of(np.diag([3., 2., 1.]), (1, ))
        with self.assertRaises(InvalidInput):
            parallel_set_distance_bounds(e, e)


class TestQuasiGeodesics(unittest.TestCase):

    def test_diagonal_constants(self):
        qg = _diagonal_orbit([1., -1.], 7)
        mu, c = quasigeodesic_constants(qg)
        self.assertAlmostEqual(math.sqrt(2.), mu)
        self.assertAlmostEqual(0., c)
        self.assertAlmostEqual(math.sqrt(2.), regularity_margin(qg, (1, )))
        self.assertAlmostEqual(6 * math.sqrt(2.), qg.pair_distances()[0, 6])

    def test_from_points(self):
        points = _diagonal_orbit([1., -1.], 5).points()
        qg = QuasiGeodesic.from_points(points)
        self.assertEqual(5, len(qg))
        np.testing.assert_allclose(np.diag([math.e, 1. / math.e]), qg.increments[2], atol=1e-10)

    def test_constant_segment(self):
        qg = QuasiGeodesic(start=np.eye(2), increments=np.repeat(np.eye(2)[None], 4, axis=0))
        self.assertEqual((math.inf, 0.), quasigeodesic_constants(qg))
        self.assertEqual(0., regularity_margin(qg, (1, )))
        with self.assertRaises(NotRegular):
            morse_audit(qg, (1, ))

    def test_not_regular(self):
        qg = _diagonal_orbit([1., 1., -2.], 6)
        self.assertAlmostEqual(0., regularity_margin(qg, (1, )), places=9)
        self.assertAlmostEqual(3. / math.sqrt(6.), regularity_margin(qg, (2, )))
        with self.assertRaises(NotRegular):
            morse_audit(qg, (1, ))

    def test_backtracking(self):
        d = np.diag([math.e, 1. / math.e])
        qg = QuasiGeodesic(start=np.eye(2), increments=np.array([d] * 5 + [np.linalg.inv(d)] * 5))
        with self.assertRaises(NotQuasiGeodesic):
            morse_audit(qg, (1, ))


class TestMorseAudit(unittest.TestCase):

    def test_geodesic(self):
        audit = morse_audit(_diagonal_orbit([1., -1.], 7), (1, ))
        self.assertEqual(5, len(audit.rows))
        self.assertAlmostEqual(0., audit.max_upper, places=8)
        self.assertAlmostEqual(0., audit.max_flag_deviation, places=8)
        self.assertAlmostEqual(math.sqrt(2.), audit.sidedness_min)
        self.assertTrue(audit.within_target)

    def test_local_perturbation(self):
        """moving x_10 off the flat only shows up at k = 10"""
        d = np.diag([math.e, 1. / math.e])
        q = np.array([[1., .1], [.05, 1.]])
        increments = [d] * 9 + [d @ q, np.linalg.inv(q) @ d] + [d] * 9
        audit = morse_audit(QuasiGeodesic(start=np.eye(2), increments=np.array(increments)), (1, ))
        by_k = {row["k"]: row for row in audit.rows}
        self.assertGreater(by_k[10]["upper"], 1e-3)
        self.assertLess(by_k[10]["upper"], 1.)
        self.assertLessEqual(by_k[10]["lower"], by_k[10]["upper"])
        for k, row in by_k.items():
            if k != 10:
                self.assertLess(row["upper"], 1e-6, f"row {k}")

    def test_orbit_is_stable_under_extension(self):
        rep = modular_example(2.)
        short = morse_audit(orbit_of_word(rep, rep.pres.parse("ab" * 30)), (1, ))
        long = morse_audit(orbit_of_word(rep, rep.pres.parse("ab" * 60)), (1, ))
        self.assertTrue(math.isfinite(short.max_upper))
        self.assertLessEqual(long.max_upper, 1.1 * short.max_upper + 1e-9)
        self.assertAlmostEqual(math.sqrt(2.), short.regularity)

    def test_workers(self):
        qg = orbit_of_word(modular_example(2.), modular_example(2.).pres.parse("ab" * 10))
        one = morse_audit(qg, (1, ))
        two = morse_audit(qg, (1, ), workers=2)
        self.assertEqual([r["k"] for r in one.rows], [r["k"] for r in two.rows])
        self.assertEqual(one.max_upper, two.max_upper)


class TestExteriorPowers(unittest.TestCase):

    def test_reduction(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            g = matgeo.random_matrix(rng, 4)
            self.assertLess(exterior_reduction(g, 2).residual, 1e-8)

    def test_regularity_is_preserved(self):
        qg = _diagonal_orbit([1., 0., -1.], 6)
        wedge = exterior_quasi_geodesic(qg, 2)
        self.assertEqual(3, wedge.d)
        self.assertAlmostEqual(regularity_margin(qg, (2, )), regularity_margin(wedge, (1, )))
