import unittest

import numpy as np

from src.cocycle import (
    MatrixSequence, Verdict, fit_domination, bg_limits, shift_equivariance_residual,
    transversality_scan, extend_one_sided, complementary_splitting, cauchy_increments,
)
from src.errors import NotDominatedInput, TooShort, DimensionMismatch, NonInvertible
from src.matgeo import rotation, grassmann_distance, line, gap_ratio


def _triangular_sequence(num: int = 40, seed: int = 5) -> MatrixSequence:
    """
    upper triangular [[3, x], [0, 1/3]] with random x in [-1, 1]
    """
    rng = np.random.default_rng(seed)
    return MatrixSequence.from_matrices([
        np.array([[3., x], [0., 1. / 3.]])
        for x in rng.uniform(-1., 1., num)
    ])


class TestMatrixSequence(unittest.TestCase):

    def test_validation(self):
        with self.assertRaises(DimensionMismatch):
            MatrixSequence.from_matrices([np.eye(2), np.eye(3)])
        with self.assertRaises(NonInvertible):
            MatrixSequence.from_matrices([np.eye(2), np.zeros((2, 2))])
        with self.assertRaises(TooShort):
            MatrixSequence.from_matrices([])

    def test_window_uses_generator(self):
        seq = MatrixSequence.constant(np.diag([2., .5]), 5)
        window = seq.window(-3, 8)
        self.assertEqual(11, len(window))
        self.assertEqual((-3, 8), window.interval)

    def test_json(self):
        seq = MatrixSequence.from_json({"index_origin": 4, "matrices": [[[1, 1], [0, 1]], [[2, 0], [0, .5]]]})
        self.assertEqual((4, 6), seq.interval)
        np.testing.assert_allclose(np.diag([2., .5]), seq.item(5))


class TestDominationFit(unittest.TestCase):

    def test_constant_hyperbolic(self):
        fit = fit_domination(MatrixSequence.constant(np.diag([2., .5]), 30), 1)
        self.assertEqual(Verdict.Dominated, fit.verdict)
        self.assertAlmostEqual(np.log(4.), fit.mu_hat, places=6)
        self.assertAlmostEqual(1., fit.c_hat, places=6)

    def test_pair_rows(self):
        fit = fit_domination(MatrixSequence.constant(np.diag([2., .5]), 4, index_origin=3), 1)
        rows = fit.pair_rows()
        # every window (start, length) inside the sequence
        self.assertEqual(10, len(rows))
        self.assertEqual(3, min(r["start"] for r in rows))
        self.assertEqual(4, max(r["length"] for r in rows))
        for row in rows:
            self.assertAlmostEqual(row["length"] * np.log(4.), row["log_gap"], places=9)
            self.assertLessEqual(row["ratio"], row["bound"] * (1. + 1e-9))

    def test_rotation(self):
        fit = fit_domination(MatrixSequence.constant(rotation(.7), 20), 1)
        self.assertEqual(Verdict.NotDominated, fit.verdict)

    def test_short_sequence(self):
        """one step of a weak gap does not certify anything"""
        fit = fit_domination(MatrixSequence.constant(np.diag([1.01, 1. / 1.01]), 3), 1)
        self.assertEqual(Verdict.Inconclusive, fit.verdict)

    def test_bound_holds_for_all_windows(self):
        seq = _triangular_sequence()
        fit = fit_domination(seq, 1)
        self.assertEqual(Verdict.Dominated, fit.verdict)
        starts, lengths = np.nonzero(np.isfinite(fit.log_gaps))
        keep = lengths > 0
        ratios = np.exp(-fit.log_gaps[starts[keep], lengths[keep]])
        self.assertTrue(np.all(ratios <= fit.bound(lengths[keep]) * (1. + 1e-9)))


class TestSplitting(unittest.TestCase):

    def test_constant_splitting(self):
        seq = MatrixSequence.constant(np.diag([2., .5]), 30)
        est = bg_limits(seq, 1, center=15, depth=12)
        self.assertAlmostEqual(0., grassmann_distance(est.ecu, line([1., 0.])), places=12)
        self.assertAlmostEqual(0., grassmann_distance(est.ecs, line([0., 1.])), places=12)
        self.assertAlmostEqual(np.pi / 2, est.angle, places=10)
        self.assertAlmostEqual(0., est.convergence_residual, places=12)
        self.assertEqual(0., est.contraction_ratio())

    def test_not_dominated_input(self):
        with self.assertRaises(NotDominatedInput):
            bg_limits(MatrixSequence.constant(rotation(.7), 30), 1, center=15)

    def test_too_short(self):
        seq = _triangular_sequence(num=12)
        with self.assertRaises(TooShort):
            bg_limits(seq, 1, center=3)

    def test_equivariance(self):
        """A_c maps the unstable space at c onto the one at c + 1"""
        seq = _triangular_sequence()
        self.assertLess(shift_equivariance_residual(seq, 1, center=20), 1e-8)

    def test_transversality(self):
        seq = _triangular_sequence(num=30)
        scan = transversality_scan(seq, 1, ell=3)
        self.assertGreater(scan.min_angle, 0.)
        n, k, m = scan.witness
        self.assertTrue(n < k < m)

    def test_cauchy_increments(self):
        seq = _triangular_sequence(num=30)
        rows = cauchy_increments(seq, 1, k=25)
        self.assertEqual(24, len(rows))
        for row in rows:
            self.assertLessEqual(row["tail_distance"], row["bound"] + 1e-12)


class TestOneSided(unittest.TestCase):

    def test_extension_stays_dominated(self):
        seq = _triangular_sequence(num=20)
        extended = extend_one_sided(seq, 1)
        self.assertEqual(40, len(extended))
        self.assertEqual((-20, 20), extended.interval)
        self.assertEqual(Verdict.Dominated, fit_domination(extended, 1).verdict)

    def test_extension_block_gap(self):
        """the prepended block has a strictly smaller gap ratio than exp(-mu_hat)"""
        for seq in (MatrixSequence.constant(np.diag([2., .5]), 20), _triangular_sequence(num=20)):
            fit = fit_domination(seq, 1)
            extended = extend_one_sided(seq, 1, fit=fit)
            block = extended.item(extended.index_origin)
            self.assertLess(gap_ratio(block, 1), np.exp(-fit.mu_hat))
            self.assertLessEqual(np.linalg.norm(block, 2), seq.norm_bound * (1. + 1e-6))
            self.assertLessEqual(np.linalg.norm(np.linalg.inv(block), 2), seq.norm_bound * (1. + 1e-6))

    def test_complementary_splitting(self):
        seq = _triangular_sequence(num=20)
        result = complementary_splitting(seq, 1)
        self.assertGreater(result.rate, 0.)
        self.assertGreater(result.angles.min(), 0.)
