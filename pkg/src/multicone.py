"""
Quadratic multicones and strictly invariant families of them
over the recurrent part of a geodesic automaton.

A quadratic cone of index p is the set of lines [v] with Q(v) < 0
for a symmetric form Q with exactly p negative eigenvalues.
Containment of closures is decided with the S-lemma: for forms
Q1, Q2 the closure of {Q1 < 0} lies in {Q2 < 0} iff t Q1 - Q2 is
positive definite for some t >= 0.
"""
import enum
import math
import dataclasses
from typing import Optional, Tuple, List, Dict, Sequence, Iterable

import numpy as np
from scipy.cluster import hierarchy
from scipy.spatial import distance
from scipy import stats
from tqdm import tqdm

from .cocycle import MatrixSequence, Verdict
from .cone_types import GeodesicAutomaton, recurrent_subgraph
from .config import (
    MARGIN_FLOOR, SLOPE_GRID, CLUSTER_SPLIT, GOLDEN_LOG_T_RANGE, GOLDEN_ITERATIONS,
    SLOPE_GROWTH, SLOPE_TOLERANCE, MAX_SLOPE, MAX_SLOPE_ITERATIONS, MAX_WALKS, TOL_GAP, RESIDUAL_TARGET,
)
from .errors import (
    InvalidInput, InvalidCone, SignatureMismatch, IndexMismatch, AutomatonMismatch,
    DimensionMismatch, NotTransverse, NotCertified, NoCandidateCertified, InternalConsistencyError,
    DidNotConverge,
)
from . import matgeo
from .matgeo import Subspace
from .reprcheck import (
    Representation, BoundaryRay, DominationReport, domination_report, limit_map, evaluate_scaled, _dedupe,
    DEFAULT_LIMIT_DEPTH,
)
from .util import matrix_from_json, parallel_map

_GOLDEN = (math.sqrt(5.) - 1.) / 2.


@dataclasses.dataclass(frozen=True, eq=False)
class QuadraticCone:
    form: np.ndarray
    p: int

    def __post_init__(self):
        form = np.asarray(self.form, dtype=float)
        if form.ndim != 2 or form.shape[0] != form.shape[1]:
            raise DimensionMismatch(f"Form must be a square matrix, got shape {form.shape}")
        d = form.shape[0]
        if not 1 <= self.p <= d - 1:
            raise InvalidCone(f"Index {self.p} outside of [1, {d - 1}]")
        if not np.all(np.isfinite(form)):
            raise InvalidCone("Form contains non-finite entries")
        scale = np.abs(form).max()
        if scale == 0 or np.abs(form - form.T).max() > 1e-10 * scale:
            raise InvalidCone("Form is not symmetric")
        form = (form + form.T) / 2
        w, v = np.linalg.eigh(form)
        norm = np.abs(w).max()
        if np.abs(w).min() <= 1e-12 * norm:
            raise InvalidCone("Form is degenerate")
        negative = int((w < 0).sum())
        if negative != self.p:
            raise InvalidCone(f"Form has {negative} negative eigenvalues, index {self.p} needs {self.p}")
        object.__setattr__(self, "form", form)
        object.__setattr__(self, "_eigenvalues", w)
        object.__setattr__(self, "_eigenvectors", v)

    @property
    def d(self) -> int:
        return self.form.shape[0]

    @property
    def normalized(self) -> np.ndarray:
        return self.form / np.abs(self._eigenvalues).max()

    def negative_space(self) -> Subspace:
        return Subspace(matgeo._sign_normalized(self._eigenvectors[:, :self.p]))

    def positive_space(self) -> Subspace:
        return Subspace(matgeo._sign_normalized(self._eigenvectors[:, self.p:]))

    def value(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return np.einsum("...i,ij,...j->...", v, self.form, v)

    def contains(self, v: np.ndarray) -> np.ndarray:
        return self.value(v) < 0

    def random_plane_inside(self, rng: np.random.Generator, fraction: float = .9) -> Subspace:
        """
        A random p-plane whose lines all lie in the cone.
        """
        neg = -self._eigenvalues[:self.p]
        pos = self._eigenvalues[self.p:]
        k = rng.standard_normal((self.d - self.p, self.p))
        k *= fraction * rng.uniform() / max(np.linalg.norm(k, 2), 1e-300)
        graph = (k / np.sqrt(pos)[:, None]) * np.sqrt(neg)[None, :]
        basis = self._eigenvectors[:, :self.p] + self._eigenvectors[:, self.p:] @ graph
        return Subspace.span(basis)

    def to_json(self) -> dict:
        return {"form": self.form}


def _normalized_forms(forms: np.ndarray) -> np.ndarray:
    forms = np.asarray(forms, dtype=float)
    scale = np.abs(np.linalg.eigvalsh(forms)).max(axis=-1)
    return forms / scale[..., None, None]


def _pencil_margins(x: np.ndarray, y: np.ndarray, iterations: int = GOLDEN_ITERATIONS) -> np.ndarray:
    """
    max over t >= 0 of the smallest eigenvalue of X + tY, batched over
    the leading axes. The smallest eigenvalue is concave in t, so
    golden section search over log t finds the maximum.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast_shapes(x.shape, y.shape)[:-2]

    def _f(s: np.ndarray) -> np.ndarray:
        t = np.exp(s).reshape(np.shape(s) + (1, 1))
        return np.linalg.eigvalsh(x + t * y)[..., 0]

    lo, hi = GOLDEN_LOG_T_RANGE
    a = np.full(shape, lo)
    b = np.full(shape, hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = _f(c), _f(d)
    for _ in range(iterations):
        left = fc >= fd
        a = np.where(left, a, c)
        b = np.where(left, d, b)
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc, fd = _f(c), _f(d)

    best = np.maximum(fc, fd)
    best = np.maximum(best, _f(np.full(shape, hi)))
    # t = 0
    return np.maximum(best, np.linalg.eigvalsh(np.broadcast_to(x, shape + x.shape[-2:]))[..., 0])


def _check_pair(q1: QuadraticCone, q2: QuadraticCone):
    if q1.d != q2.d:
        raise DimensionMismatch(f"Cones in dimensions {q1.d} and {q2.d}")
    if q1.p != q2.p:
        raise SignatureMismatch(f"Cones of index {q1.p} and {q2.p}")


def pushforward(q: QuadraticCone, a: np.ndarray) -> QuadraticCone:
    """
    The cone A({Q < 0}), given by the form A^-T Q A^-1.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != q.form.shape:
        raise DimensionMismatch(f"Matrix of shape {a.shape} can not act on a cone in dimension {q.d}")
    inv = np.linalg.inv(a)
    form = inv.T @ q.form @ inv
    return QuadraticCone((form + form.T) / 2, q.p)


def strict_containment(q1: QuadraticCone, q2: QuadraticCone) -> float:
    """
    max over t >= 0 of -lambda_max(Q2 - t Q1) for the normalized forms.
    Positive iff the closure of {Q1 < 0} lies inside {Q2 < 0}.
    """
    _check_pair(q1, q2)
    return float(_pencil_margins(-q2.normalized, q1.normalized))


def containment_margins(sources: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """
    `strict_containment` for stacks of forms, normalized here.
    """
    return _pencil_margins(-_normalized_forms(targets), _normalized_forms(sources))


def disjointness_margin(q1: QuadraticCone, q2: QuadraticCone) -> float:
    """
    max over t >= 0 of lambda_min(Q1 + t Q2) for the normalized forms.
    Positive iff the closures of the two cones only share the origin.
    """
    _check_pair(q1, q2)
    return float(_pencil_margins(q1.normalized, q2.normalized))


def _oblique_parts(e: Subspace, f: Subspace) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rows of the coordinate map of the splitting R^d = E + F,
    so that v = E.basis @ (We v) + F.basis @ (Wf v).
    """
    if e.ambient_dim != f.ambient_dim or e.dim + f.dim != e.ambient_dim:
        raise DimensionMismatch(f"Subspaces of dimensions {e.dim} and {f.dim} do not split R^{e.ambient_dim}")
    if matgeo.angle(e, f) < 1e-8:
        raise NotTransverse("E and F are not transverse")
    inv = np.linalg.inv(np.hstack([e.basis, f.basis]))
    return inv[:e.dim], inv[e.dim:]


def cone_around(e: Subspace, f: Subspace, slope: float) -> QuadraticCone:
    """
    The cone |pi_F v| < slope * |pi_E v| for the projections along the splitting E + F.
    """
    if slope <= 0:
        raise InvalidCone(f"Slope must be positive, got {slope}")
    we, wf = _oblique_parts(e, f)
    return QuadraticCone(wf.T @ wf - slope ** 2 * we.T @ we, e.dim)


def shrink(q: QuadraticCone, eps: float) -> QuadraticCone:
    """
    The smaller cone of Q + eps |Q| I.
    """
    return QuadraticCone(q.form + eps * np.abs(q._eigenvalues).max() * np.eye(q.d), q.p)


# --- multicones ---

def _missed_plane(components: Sequence[QuadraticCone], seed: int, tries: int = 512) -> Optional[Subspace]:
    d, p = components[0].d, components[0].p
    forms = np.stack([c.normalized for c in components])
    candidates = [c.positive_space() for c in components]
    rng = np.random.default_rng(seed)
    candidates += [matgeo.random_subspace(rng, d, d - p) for _ in range(tries)]
    for cand in candidates:
        restricted = np.swapaxes(cand.basis, 0, 1)[None] @ forms @ cand.basis[None]
        if np.linalg.eigvalsh(restricted)[:, 0].min() > 0:
            return cand
    return None


@dataclasses.dataclass(frozen=True, eq=False)
class Multicone:
    """
    Finitely many quadratic cones with pairwise disjoint closures,
    containing a p-plane and missing a (d-p)-plane.
    """
    p: int
    components: Tuple[QuadraticCone, ...]
    seed: int = 0

    def __post_init__(self):
        components = tuple(self.components)
        if not components:
            raise InvalidCone("Multicone needs at least one component")
        for c in components:
            if c.p != self.p:
                raise IndexMismatch(f"Component of index {c.p} in a multicone of index {self.p}")
            if c.d != components[0].d:
                raise DimensionMismatch("Components live in different dimensions")
        for i in range(len(components)):
            for j in range(i + 1, len(components)):
                if disjointness_margin(components[i], components[j]) <= 0:
                    raise InvalidCone(f"Components {i} and {j} have intersecting closures")
        missed = _missed_plane(components, self.seed)
        if missed is None:
            raise InvalidCone(f"Multicone does not miss any {components[0].d - self.p}-plane")
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "inside", components[0].negative_space())
        object.__setattr__(self, "missed", missed)

    @property
    def d(self) -> int:
        return self.components[0].d

    def contains(self, v: np.ndarray) -> np.ndarray:
        return np.any([c.contains(v) for c in self.components], axis=0)

    def to_json(self) -> list:
        return [c.to_json() for c in self.components]


@dataclasses.dataclass(frozen=True, eq=False)
class ConeFamily:
    automaton: GeodesicAutomaton
    p: int
    assignment: Dict[int, Multicone]

    def __post_init__(self):
        vertices = set(self.automaton.vertices)
        if set(self.assignment) != vertices:
            raise AutomatonMismatch(
                f"Family assigns vertices {sorted(self.assignment)}, automaton has {sorted(vertices)}"
            )
        dims = {m.d for m in self.assignment.values()}
        if len(dims) > 1:
            raise DimensionMismatch(f"Multicones in dimensions {sorted(dims)}")
        for v, m in self.assignment.items():
            if m.p != self.p:
                raise IndexMismatch(f"Multicone at vertex {v} has index {m.p}, family has {self.p}")

    @property
    def d(self) -> int:
        return next(iter(self.assignment.values())).d

    def to_json(self) -> dict:
        return family_to_json(self)


def family_to_json(fam: ConeFamily) -> dict:
    return {
        "p": fam.p,
        "vertices": {str(v): m.to_json() for v, m in fam.assignment.items()},
        "automaton": fam.automaton.to_json(),
    }


def family_from_json(data: dict, automaton: Optional[GeodesicAutomaton] = None) -> ConeFamily:
    """
    {"p": p, "vertices": {id: [{"form": matrix}, ...]}, "automaton": {...}}

    `automaton` overrides the one stored in the file.
    """
    if not isinstance(data, dict) or "p" not in data or not isinstance(data.get("vertices"), dict):
        raise InvalidInput("Family json needs 'p' and a 'vertices' object")
    if automaton is None:
        if not data.get("automaton"):
            raise InvalidInput("Family json has no automaton")
        automaton = GeodesicAutomaton.from_json(data["automaton"])
    p = int(data["p"])
    assignment = dict()
    for key, comps in data["vertices"].items():
        try:
            vertex = int(key)
        except ValueError:
            raise InvalidInput(f"Vertex id '{key}' is not an integer")
        if not isinstance(comps, list):
            raise InvalidInput(f"Vertex {key} needs a list of components")
        assignment[vertex] = Multicone(p, tuple(
            QuadraticCone(matrix_from_json(c.get("form") if isinstance(c, dict) else c, f"form at vertex {key}"), p)
            for c in comps
        ))
    return ConeFamily(automaton=automaton, p=p, assignment=assignment)


# --- verification ---

class FamilyVerdict(enum.Enum):
    Certified = "Certified"
    NotCertified = "NotCertified"


@dataclasses.dataclass
class FamilyVerification:
    rows: List[dict]
    verdict: FamilyVerdict
    min_margin: float
    margin_floor: float
    note: str = "A family that does not verify is no proof against domination."

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "min_margin": {"value": self.min_margin, "provenance": "constructive-upper"},
            "margin_floor": self.margin_floor,
            "note": self.note,
            "rows": self.rows,
        }


def verify_family(
        rep: Representation,
        fam: ConeFamily,
        margin_floor: float = MARGIN_FLOOR,
        workers: int = 1,
) -> FamilyVerification:
    """
    Check rho(g) M(tail) inside M(head) for every edge, component by component.
    """
    auto = fam.automaton
    if tuple(rep.pres.names) != tuple(auto.names):
        raise AutomatonMismatch(f"Automaton labels {auto.names} do not match generators {rep.pres.names}")
    if rep.d != fam.d:
        raise DimensionMismatch(f"Representation in dimension {rep.d}, family in {fam.d}")
    if not auto.edges:
        raise AutomatonMismatch("Automaton has no edges")

    def _check_edge(edge: Tuple[int, int, int]) -> List[dict]:
        tail, label, head = edge
        targets = np.stack([c.form for c in fam.assignment[head].components])
        rows = []
        for ci, comp in enumerate(fam.assignment[tail].components):
            push = pushforward(comp, rep.images[label])
            margins = containment_margins(push.form[None], targets)
            if (margins > 0).sum() > 1:
                raise InternalConsistencyError(
                    f"Image of component {ci} at vertex {tail} lies in several components at vertex {head}"
                )
            best = int(np.argmax(margins))
            rows.append({
                "edge": f"{tail} -{auto.names[label]}-> {head}",
                "tail": tail,
                "label": auto.names[label],
                "head": head,
                "component": ci,
                "target": best,
                "margin": float(margins[best]),
            })
        return rows

    rows = [row for rows in parallel_map(_check_edge, auto.edges, workers) for row in rows]
    min_margin = min(row["margin"] for row in rows)
    return FamilyVerification(
        rows=rows,
        verdict=FamilyVerdict.Certified if min_margin >= margin_floor else FamilyVerdict.NotCertified,
        min_margin=min_margin,
        margin_floor=margin_floor,
    )


def walk_sequences(
        rep: Representation,
        auto: GeodesicAutomaton,
        num: int,
        length: int,
        seed: int = 23,
) -> List[MatrixSequence]:
    """
    Matrix sequences rho(l_0), rho(l_1), ... along random walks in the recurrent part.
    """
    rec = recurrent_subgraph(auto)
    rng = np.random.default_rng(seed)
    result = []
    for _ in range(num):
        labels, _ = rec.random_walk(rng, length)
        result.append(MatrixSequence(rep.images[list(labels)]))
    return result


# --- synthesis ---

@dataclasses.dataclass
class _Frame:
    e: Subspace
    f: Subspace
    we: np.ndarray
    wf: np.ndarray

    @classmethod
    def create(cls, e: Subspace, f: Subspace) -> "_Frame":
        we, wf = _oblique_parts(e, f)
        return cls(e=e, f=f, we=we, wf=wf)

    def forms(self, slopes: np.ndarray) -> np.ndarray:
        slopes = np.asarray(slopes, dtype=float)
        fixed = self.wf.T @ self.wf
        scaled = self.we.T @ self.we
        return fixed - (slopes ** 2).reshape(slopes.shape + (1, 1)) * scaled

    def cone(self, slope: float) -> QuadraticCone:
        return QuadraticCone(self.forms(slope), self.e.dim)


@dataclasses.dataclass
class SynthesisResult:
    family: ConeFamily
    verification: FamilyVerification
    # grid slope of the successful attempt
    slope: float
    # "orthogonal" or "stable" complements
    frame: str
    iterated: bool

    def to_json(self) -> dict:
        return {
            "slope": self.slope,
            "frame": self.frame,
            "iterated": self.iterated,
            "verification": self.verification.to_json(),
            "family": family_to_json(self.family),
        }


def _walk_spaces(
        rep: Representation,
        rec: GeodesicAutomaton,
        p: int,
        radius: int,
        max_walks: int,
        rng: np.random.Generator,
        tol_gap: float,
) -> Tuple[Dict[int, List[Subspace]], Dict[int, List[Subspace]]]:
    """
    U_p of the walk products by end vertex, S_{d-p} by start vertex,
    for walks of length radius/2 .. radius.
    """
    lengths = list(range(max(1, (radius + 1) // 2), radius + 1))
    total = sum(
        rec.walk_counts(radius, v)[n]
        for v in rec.vertices
        for n in lengths
    )
    walks: Dict[int, list] = {n: [] for n in lengths}
    if total <= max_walks:
        for v in rec.vertices:
            for n in lengths:
                for labels, end in rec.walks(n, v):
                    walks[n].append((labels, v, end))
    else:
        per_length = max(1, max_walks // len(lengths))
        for n in lengths:
            for _ in range(per_length):
                start = int(rng.choice(rec.vertices))
                labels, end = rec.random_walk(rng, n, start)
                walks[n].append((labels, start, end))

    unstable = {v: [] for v in rec.vertices}
    stable = {v: [] for v in rec.vertices}
    for n, group in walks.items():
        if not group:
            continue
        labels = np.array([w[0] for w in group], dtype=int).reshape(len(group), n)
        prod = np.repeat(np.eye(rep.d)[None], len(group), axis=0)
        for k in range(n):
            prod = rep.images[labels[:, k]] @ prod
            prod /= np.linalg.norm(prod, axis=(1, 2))[:, None, None]
        u, s, vt = np.linalg.svd(prod)
        for i in np.flatnonzero(s[:, p] / s[:, p - 1] < 1. - tol_gap):
            _, start, end = group[i]
            unstable[end].append(Subspace(u[i][:, :p]))
            stable[start].append(Subspace(vt[i][p:].T))
    return unstable, stable


def _clusters(points: List[Subspace], rng: np.random.Generator, max_points: int = 400) -> List[List[Subspace]]:
    points = _dedupe(points, 1e-4)
    if len(points) > max_points:
        points = [points[i] for i in sorted(rng.choice(len(points), max_points, replace=False))]
    if len(points) == 1:
        return [points]
    dist = matgeo.pairwise_distances(points)
    dist = (dist + dist.T) / 2
    np.fill_diagonal(dist, 0.)
    tree = hierarchy.linkage(distance.squareform(dist, checks=False), method="single")
    labels = hierarchy.fcluster(tree, t=CLUSTER_SPLIT, criterion="distance")
    return [
        [pt for pt, l in zip(points, labels) if l == k]
        for k in sorted(set(labels))
    ]


def _needed_slopes(
        pushes: np.ndarray,
        frames: Sequence[_Frame],
        margin_floor: float,
        steps: int = 24,
) -> np.ndarray:
    """
    Smallest slope per push whose cone around the matching frame
    strictly contains the pushed cone, inf if even MAX_SLOPE does not.
    """
    lo = np.full(len(frames), np.log(1e-3))
    hi = np.full(len(frames), np.log(MAX_SLOPE))

    def _ok(log_slopes: np.ndarray) -> np.ndarray:
        targets = np.stack([fr.forms(np.exp(s)) for fr, s in zip(frames, log_slopes)])
        return containment_margins(pushes, targets) > margin_floor

    feasible = _ok(hi)
    for _ in range(steps):
        mid = (lo + hi) / 2
        ok = _ok(mid)
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    return np.where(feasible, np.exp(hi), np.inf)


def _iterate_slopes(
        rep: Representation,
        rec: GeodesicAutomaton,
        frames: Dict[int, List[_Frame]],
        floor: float,
        margin_floor: float,
) -> Optional[Dict[int, List[float]]]:
    """
    Raise every component's slope to SLOPE_GROWTH times the smallest slope
    holding all pushforwards that land near it, until nothing changes.
    """
    slopes = {v: [floor] * len(fr) for v, fr in frames.items()}
    for _ in range(MAX_SLOPE_ITERATIONS):
        pushes, targets, keys = [], [], []
        for tail, label, head in rec.edges:
            a = rep.images[label]
            for ci, frame in enumerate(frames[tail]):
                pushed_e = matgeo.image(a, frame.e)
                ti = int(np.argmin([matgeo.grassmann_distance(pushed_e, t.e) for t in frames[head]]))
                pushes.append(pushforward(frame.cone(slopes[tail][ci]), a).form)
                targets.append(frames[head][ti])
                keys.append((head, ti))

        needed = _needed_slopes(np.stack(pushes), targets, margin_floor)
        if not np.all(np.isfinite(needed)):
            return None

        new_slopes = {v: [floor] * len(fr) for v, fr in frames.items()}
        for (v, ci), s in zip(keys, needed):
            new_slopes[v][ci] = max(new_slopes[v][ci], SLOPE_GROWTH * float(s))
        change = max(
            abs(new_slopes[v][i] - slopes[v][i]) / slopes[v][i]
            for v in slopes for i in range(len(slopes[v]))
        )
        slopes = new_slopes
        if max(s for ss in slopes.values() for s in ss) > MAX_SLOPE:
            return None
        if change < SLOPE_TOLERANCE:
            return slopes
    return None


def _family_from_frames(
        rec: GeodesicAutomaton,
        p: int,
        frames: Dict[int, List[_Frame]],
        slopes: Dict[int, List[float]],
) -> ConeFamily:
    return ConeFamily(
        automaton=rec,
        p=p,
        assignment={
            v: Multicone(p, tuple(fr.cone(s) for fr, s in zip(frames[v], slopes[v])))
            for v in rec.vertices
        },
    )


def synthesize_family(
        rep: Representation,
        p: int,
        auto: GeodesicAutomaton,
        radius: int,
        slopes: Iterable[float] = SLOPE_GRID,
        margin_floor: float = MARGIN_FLOOR,
        report: Optional[DominationReport] = None,
        gate: bool = True,
        max_walks: int = MAX_WALKS,
        seed: int = 23,
        tol_gap: float = TOL_GAP,
        workers: int = 1,
        verbose: bool = False,
) -> SynthesisResult:
    """
    Search a strictly invariant family of quadratic multicones.

    Components are cones around the clusters of U_p over long walks ending
    at each vertex. For every grid slope the uniform family is tried first,
    then the slopes are iterated to a fixed point.
    """
    matgeo._check_index(rep.d, p)
    if gate:
        if report is None:
            report = domination_report(rep, p, radius, tol_gap=tol_gap)
        if report.verdict != Verdict.Dominated:
            raise NoCandidateCertified(
                f"Domination check gave {report.verdict.value}, no family searched", margins=[],
            )

    rec = recurrent_subgraph(auto)
    rng = np.random.default_rng(seed)
    unstable, stable = _walk_spaces(rep, rec, p, radius, max_walks, rng, tol_gap)

    clusters = dict()
    stable_reps = dict()
    for v in rec.vertices:
        if not unstable[v]:
            raise NoCandidateCertified(f"No walk with a gap of index {p} ends at vertex {v}", margins=[])
        clusters[v] = [matgeo.average_projector_representative(c) for c in _clusters(unstable[v], rng)]
        stable_points = _dedupe(stable[v], 1e-4)
        stable_reps[v] = matgeo.average_projector_representative(stable_points) if stable_points else None

    frame_sets = dict()
    frame_sets["orthogonal"] = {v: [_Frame.create(e, e.complement()) for e in es] for v, es in clusters.items()}
    frame_sets["stable"] = {
        v: [
            _Frame.create(e, stable_reps[v])
            if stable_reps[v] is not None and matgeo.angle(e, stable_reps[v]) > .1
            else _Frame.create(e, e.complement())
            for e in es
        ]
        for v, es in clusters.items()
    }

    best: Optional[FamilyVerification] = None
    attempts = [(name, float(s)) for name in frame_sets for s in slopes]
    if verbose:
        attempts = tqdm(attempts, desc="synthesis")

    for name, slope in attempts:
        frames = frame_sets[name]
        for iterated in (False, True):
            if iterated:
                slope_map = _iterate_slopes(rep, rec, frames, slope, margin_floor)
                if slope_map is None:
                    continue
            else:
                slope_map = {v: [slope] * len(fr) for v, fr in frames.items()}
            try:
                fam = _family_from_frames(rec, p, frames, slope_map)
            except InvalidCone:
                continue
            verification = verify_family(rep, fam, margin_floor=margin_floor, workers=workers)
            if verification.verdict == FamilyVerdict.Certified:
                return SynthesisResult(
                    family=fam, verification=verification, slope=slope, frame=name, iterated=iterated,
                )
            if best is None or verification.min_margin > best.min_margin:
                best = verification

    raise NoCandidateCertified(
        f"No candidate family verified, best margin {best.min_margin if best else float('nan'):.3g}",
        margins=best.rows if best else [],
    )


# --- limits through cones ---

@dataclasses.dataclass(frozen=True, eq=False)
class ConeLimitCheck:
    residual: float
    contraction_ratio: float
    distances: Tuple[float, ...]
    limit: Subspace

    def to_json(self) -> dict:
        return {
            "residual": self.residual,
            "contraction_ratio": self.contraction_ratio,
            "distances": list(self.distances),
            "limit": self.limit.to_json(),
        }


def cone_limit_check(
        rep: Representation,
        fam: ConeFamily,
        ray: BoundaryRay,
        depth: int = 40,
        randomized: bool = False,
        seed: int = 23,
        verification: Optional[FamilyVerification] = None,
        residual_target: float = RESIDUAL_TARGET,
        report: Optional[DominationReport] = None,
) -> ConeLimitCheck:
    """
    Push p-planes from the cones at every vertex that reads a ray prefix
    backwards, and measure how fast the worst of them approaches the limit map.

    Raises DidNotConverge if the fitted contraction ratio is not below 1
    or the last distance exceeds `residual_target`.
    """
    if verification is None:
        verification = verify_family(rep, fam)
    if verification.verdict != FamilyVerdict.Certified:
        raise NotCertified("Cone family does not verify")

    p = fam.p
    auto = fam.automaton
    limit = limit_map(rep, p, ray, depth=max(depth, DEFAULT_LIMIT_DEPTH), report=report).space
    rng = np.random.default_rng(seed)

    planes = dict()
    for v, m in fam.assignment.items():
        for ci, comp in enumerate(m.components):
            planes[(v, ci)] = comp.random_plane_inside(rng) if randomized else comp.negative_space()

    distances = []
    for n in range(1, depth + 1):
        word = ray.word(n)
        labels = tuple(reversed(word))
        starts = [v for v in auto.vertices if auto.run(labels, v) is not None]
        if not starts:
            raise InvalidInput(f"Prefix '{rep.pres.format(word)}' is not readable in the automaton")
        product, _ = evaluate_scaled(rep, word)
        distances.append(max(
            matgeo.grassmann_distance(matgeo.image(product, planes[(v, ci)]), limit)
            for v in starts
            for ci in range(len(fam.assignment[v].components))
        ))

    distances = np.array(distances)
    usable = np.flatnonzero(distances > 1e-14)
    ratio = 0.
    if len(usable) >= 2:
        ratio = float(np.exp(stats.linregress(usable, np.log(distances[usable])).slope))

    residual = float(distances[-1])
    if ratio >= 1. or residual > residual_target:
        raise DidNotConverge(
            f"Cone planes along '{ray.format(rep.pres)}' reach {residual:.3g} with contraction ratio {ratio:.3g}",
            residual=residual, depth=depth,
        )
    return ConeLimitCheck(
        residual=residual,
        contraction_ratio=ratio,
        distances=tuple(float(x) for x in distances),
        limit=limit,
    )
