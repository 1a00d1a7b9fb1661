import unittest

import numpy as np

from src import matgeo
from src.config import DATA_DIR
from src.cone_types import geodesic_automaton
from src.errors import (
    InvalidCone, IndexMismatch, SignatureMismatch, NoCandidateCertified, NotCertified, DidNotConverge,
)
from src.group import free_product
from src.multicone import (
    QuadraticCone, Multicone, ConeFamily, FamilyVerdict, pushforward, strict_containment, disjointness_margin,
    cone_around, shrink, verify_family, synthesize_family, cone_limit_check, family_to_json, family_from_json,
    walk_sequences,
)
from src.cocycle import fit_domination, Verdict
from src.reprcheck import BoundaryRay
from src.samples import modular_example, z_rep, figure_family, z_family, two_loop_example
from src.util import read_json


def _arc(center_deg: float, half_width_deg: float) -> QuadraticCone:
    t = np.radians(center_deg)
    return cone_around(
        matgeo.line([np.cos(t), np.sin(t)]),
        matgeo.line([-np.sin(t), np.cos(t)]),
        np.tan(np.radians(half_width_deg)),
    )


def _modular_automaton():
    return geodesic_automaton(free_product(3, 2), 6, cone_radius=2)


class TestQuadraticCone(unittest.TestCase):

    def test_validation(self):
        with self.assertRaises(InvalidCone):
            QuadraticCone(np.diag([-1., 1.]), 0)
        with self.assertRaises(InvalidCone):
            QuadraticCone(np.array([[-1., 1.], [0., 1.]]), 1)
        with self.assertRaises(InvalidCone):
            QuadraticCone(np.diag([-1., 0.]), 1)
        with self.assertRaises(InvalidCone):
            QuadraticCone(np.diag([-1., -1., 1.]), 1)

    def test_spaces(self):
        q = QuadraticCone(np.diag([1., -2., 3.]), 1)
        self.assertAlmostEqual(0., matgeo.grassmann_distance(q.negative_space(), matgeo.line([0., 1., 0.])), places=12)
        self.assertTrue(q.contains(np.array([0., 1., 0.])))
        self.assertFalse(q.contains(np.array([1., 0., 0.])))

    def test_random_plane_inside(self):
        q = cone_around(matgeo.line([1., 0., 0.]), matgeo.Subspace.span([[0., 0.], [1., 0.], [0., 1.]]), .5)
        rng = np.random.default_rng(0)
        for _ in range(20):
            plane = q.random_plane_inside(rng)
            self.assertTrue(q.contains(plane.basis[:, 0]))

    def test_pushforward(self):
        """v lies in Q exactly when Av lies in AQ"""
        rng = np.random.default_rng(1)
        q = _arc(10., 30.)
        a = matgeo.random_matrix(rng, 2)
        pushed = pushforward(q, a)
        vectors = rng.standard_normal((200, 2))
        np.testing.assert_array_equal(q.contains(vectors), pushed.contains(vectors @ a.T))

    def test_cone_around(self):
        q = _arc(0., 30.)
        self.assertTrue(q.contains(np.array([np.cos(np.radians(29.)), np.sin(np.radians(29.))])))
        self.assertFalse(q.contains(np.array([np.cos(np.radians(31.)), np.sin(np.radians(31.))])))
        with self.assertRaises(InvalidCone):
            _arc(0., 0.)


class TestMargins(unittest.TestCase):

    def test_nested_arcs(self):
        self.assertGreater(strict_containment(_arc(0., 20.), _arc(0., 30.)), 0.)
        self.assertLessEqual(strict_containment(_arc(0., 30.), _arc(0., 20.)), 0.)
        # touching closures are not strictly contained
        self.assertLess(strict_containment(_arc(0., 30.), _arc(0., 30.)), 1e-9)

    def test_containment_is_sound(self):
        """a positive margin means every sampled vector of the closure lies inside"""
        rng = np.random.default_rng(2)
        e = matgeo.line([1., 0., 0.])
        f = matgeo.Subspace.span([[0., 0.], [1., 0.], [0., 1.]])
        source = cone_around(e, f, .3)
        vectors = rng.standard_normal((4000, 3))
        closure = vectors[source.value(vectors) <= 0]
        positives = 0
        for _ in range(30):
            a = np.eye(3) + .15 * rng.standard_normal((3, 3))
            target = pushforward(cone_around(e, f, .6), a)
            if strict_containment(source, target) > 0:
                positives += 1
                self.assertTrue(np.all(target.contains(closure)))
        self.assertGreater(positives, 0)

    def test_disjointness(self):
        self.assertGreater(disjointness_margin(_arc(0., 20.), _arc(90., 20.)), 0.)
        self.assertLessEqual(disjointness_margin(_arc(0., 50.), _arc(90., 50.)), 0.)

    def test_signature_mismatch(self):
        with self.assertRaises(SignatureMismatch):
            strict_containment(QuadraticCone(np.diag([-1., 1., 1.]), 1), QuadraticCone(np.diag([-1., -1., 1.]), 2))

    def test_shrink(self):
        q = _arc(40., 25.)
        self.assertGreater(strict_containment(shrink(q, .1), q), 0.)


class TestMulticone(unittest.TestCase):

    def test_overlapping_components(self):
        with self.assertRaises(InvalidCone):
            Multicone(1, (_arc(0., 50.), _arc(60., 50.)))

    def test_index_mismatch(self):
        with self.assertRaises(IndexMismatch):
            Multicone(2, (QuadraticCone(np.diag([-1., 1., 1.]), 1),))

    def test_contains(self):
        m = Multicone(1, (_arc(0., 20.), _arc(90., 20.)))
        self.assertTrue(m.contains(np.array([1., .1])))
        self.assertTrue(m.contains(np.array([.1, 1.])))
        self.assertFalse(m.contains(np.array([1., 1.])))
        self.assertFalse(m.contains(m.missed.basis[:, 0]))


class TestVerification(unittest.TestCase):

    def test_figure_family(self):
        auto = _modular_automaton()
        fam = figure_family(auto)
        result = verify_family(modular_example(2.), fam)
        self.assertEqual(FamilyVerdict.Certified, result.verdict)
        self.assertEqual(3, len(result.rows))
        self.assertGreaterEqual(result.min_margin, result.margin_floor)

        result = verify_family(modular_example(1.), fam)
        self.assertEqual(FamilyVerdict.NotCertified, result.verdict)

    def test_family_file(self):
        fam = family_from_json(read_json(DATA_DIR / "modular-family.json"))
        self.assertEqual(FamilyVerdict.Certified, verify_family(modular_example(2.), fam).verdict)
        copy = family_from_json(family_to_json(fam))
        self.assertEqual(sorted(fam.assignment), sorted(copy.assignment))
        self.assertEqual(FamilyVerdict.Certified, verify_family(modular_example(2.), copy, workers=2).verdict)

    def test_z_family(self):
        rep = z_rep()
        auto = geodesic_automaton(rep.pres, 6, cone_radius=2)
        self.assertEqual(FamilyVerdict.Certified, verify_family(rep, z_family(auto)).verdict)

    def test_two_arcs(self):
        """the two arc family verifies, while no single arc does"""
        rep, auto, fam = two_loop_example()
        self.assertEqual(FamilyVerdict.Certified, verify_family(rep, fam).verdict)

        for center in range(0, 180, 15):
            for width in (10., 30., 60.):
                single = ConeFamily(automaton=auto, p=1, assignment={0: Multicone(1, (_arc(center, width),))})
                self.assertEqual(
                    FamilyVerdict.NotCertified, verify_family(rep, single).verdict,
                    f"arc {center} +- {width}",
                )

    def test_walk_sequences_are_dominated(self):
        rep = modular_example(2.)
        for seq in walk_sequences(rep, _modular_automaton(), num=3, length=30):
            self.assertEqual(Verdict.Dominated, fit_domination(seq, 1).verdict)


class TestSynthesis(unittest.TestCase):

    def test_diagonal(self):
        rep = z_rep()
        auto = geodesic_automaton(rep.pres, 6, cone_radius=2)
        result = synthesize_family(rep, 1, auto, radius=8)
        self.assertEqual(FamilyVerdict.Certified, result.verification.verdict)
        self.assertEqual(FamilyVerdict.Certified, verify_family(rep, result.family).verdict)

    def test_two_arcs(self):
        rep, auto, _ = two_loop_example()
        result = synthesize_family(rep, 1, auto, radius=8, gate=False)
        self.assertEqual(FamilyVerdict.Certified, result.verification.verdict)
        self.assertEqual(2, len(result.family.assignment[0].components))

    def test_modular(self):
        rep = modular_example(1.5)
        result = synthesize_family(rep, 1, _modular_automaton(), radius=10)
        self.assertEqual(FamilyVerdict.Certified, result.verification.verdict)

    def test_elliptic_rejected(self):
        with self.assertRaises(NoCandidateCertified):
            synthesize_family(modular_example(1.25), 1, _modular_automaton(), radius=10)


class TestConeLimits(unittest.TestCase):

    def test_convergence(self):
        rep = modular_example(2.)
        fam = figure_family(_modular_automaton())
        ray = BoundaryRay.parse(rep.pres, "(ab)")
        for randomized in (False, True):
            check = cone_limit_check(rep, fam, ray, depth=20, randomized=randomized)
            self.assertLess(check.residual, 1e-6)
            self.assertLess(check.contraction_ratio, 1.)

    def test_diagonal_ratio(self):
        """planes inside the axis cones approach e1 at rate 1/4"""
        rep = z_rep()
        fam = z_family(geodesic_automaton(rep.pres, 6, cone_radius=2))
        check = cone_limit_check(rep, fam, BoundaryRay.parse(rep.pres, "(a)"), depth=12, randomized=True)
        self.assertAlmostEqual(.25, check.contraction_ratio, places=2)
        self.assertAlmostEqual(0., matgeo.grassmann_distance(check.limit, matgeo.line([1., 0.])), places=12)

    def test_residual_target(self):
        rep = z_rep()
        fam = z_family(geodesic_automaton(rep.pres, 6, cone_radius=2))
        with self.assertRaises(DidNotConverge) as e:
            cone_limit_check(
                rep, fam, BoundaryRay.parse(rep.pres, "(a)"), depth=4, randomized=True, residual_target=1e-300,
            )
        self.assertGreater(e.exception.residual, 0.)
        self.assertEqual(4, e.exception.depth)

    def test_not_certified(self):
        rep = modular_example(1.)
        fam = figure_family(_modular_automaton())
        with self.assertRaises(NotCertified):
            cone_limit_check(rep, fam, BoundaryRay.parse(rep.pres, "(ab)"))
