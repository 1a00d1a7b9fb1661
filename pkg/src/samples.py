"""
Small representations with known answers, used by the tests
and the `data/` files.
"""
from typing import Tuple

import numpy as np

from .cone_types import GeodesicAutomaton, recurrent_subgraph
from .errors import AutomatonMismatch, InvalidInput
from .group import free_group, free_product
from .matgeo import line, rotation
from .multicone import ConeFamily, Multicone, QuadraticCone, cone_around
from .reprcheck import Representation, make_representation


def modular_example(lam: float) -> Representation:
    """
    Z/3 * Z/2 -> SL(2,R) with a -> D^-1 R(60 deg) D, b -> R(90 deg), D = diag(lam, 1/lam).

    ab is hyperbolic exactly when lam > 3^(1/4).
    """
    if lam <= 0:
        raise InvalidInput(f"lam must be positive, got {lam}")
    d = np.diag([lam, 1. / lam])
    return make_representation(
        free_product(3, 2),
        {
            "a": np.linalg.inv(d) @ rotation(np.pi / 3) @ d,
            "b": rotation(np.pi / 2),
        },
        name=f"modular lam={lam:g}",
    )


def z_rep(stretch: float = 2.) -> Representation:
    return make_representation(
        free_group(1),
        {"a": np.diag([stretch, 1. / stretch])},
        name=f"Z diag({stretch:g})",
    )


def _arc(center_deg: float, half_width_deg: float) -> QuadraticCone:
    theta = np.radians(center_deg)
    return cone_around(line(np.array([np.cos(theta), np.sin(theta)])),
                       line(np.array([-np.sin(theta), np.cos(theta)])),
                       np.tan(np.radians(half_width_deg)))


def _first_letter(auto: GeodesicAutomaton, vertex: int) -> str:
    witness = auto.witnesses.get(vertex)
    if not witness:
        raise AutomatonMismatch(f"Vertex {vertex} has no witness")
    return auto.names[witness[0]].lower()


def figure_family(auto: GeodesicAutomaton) -> ConeFamily:
    """
    The interval family of the modular example on the recurrent
    cone types: 0 +- 29.74 deg after `b` and 90 +- 22 deg after `a` or `A`.
    It verifies for lam = 2 but not for lam = 1.
    """
    rec = recurrent_subgraph(auto)
    arcs = {"a": _arc(90., 22.), "b": _arc(0., 29.74)}
    return ConeFamily(
        automaton=rec,
        p=1,
        assignment={v: Multicone(1, (arcs[_first_letter(rec, v)],)) for v in rec.vertices},
    )


def z_family(auto: GeodesicAutomaton) -> ConeFamily:
    """
    Axis cones for `z_rep` on the two recurrent cone types of Z.
    """
    rec = recurrent_subgraph(auto)
    assignment = dict()
    for v in rec.vertices:
        form = np.diag([-1., 1.]) if rec.names[rec.witnesses[v][0]] == "a" else np.diag([1., -1.])
        assignment[v] = Multicone(1, (QuadraticCone(form, 1),))
    return ConeFamily(automaton=rec, p=1, assignment=assignment)


def _hyperbolic(unstable_deg: float, stable_deg: float, stretch: float = 4.) -> np.ndarray:
    u, s = np.radians(unstable_deg), np.radians(stable_deg)
    basis = np.array([[np.cos(u), np.cos(s)], [np.sin(u), np.sin(s)]])
    return basis @ np.diag([stretch, 1. / stretch]) @ np.linalg.inv(basis)


def two_loop_example() -> Tuple[Representation, GeodesicAutomaton, ConeFamily]:
    """
    A one vertex automaton reading a and b only, with hyperbolic images
    whose unstable lines are 0 and 90 deg and stable lines 45 and 135 deg.

    The family of two arcs 0 +- 20 and 90 +- 20 deg is invariant, while
    no single arc is: it would contain one of the repelling stable lines.
    """
    pres = free_group(2)
    rep = make_representation(
        pres,
        {"a": _hyperbolic(0., 45.), "b": _hyperbolic(90., 135.)},
        name="two loops",
    )
    auto = GeodesicAutomaton(
        vertices=(0,),
        edges=((0, pres.parse("a")[0], 0), (0, pres.parse("b")[0], 0)),
        start=0,
        names=pres.names,
        witnesses={0: ()},
    )
    family = ConeFamily(
        automaton=auto,
        p=1,
        assignment={0: Multicone(1, (_arc(0., 20.), _arc(90., 20.)))},
    )
    return rep, auto, family
