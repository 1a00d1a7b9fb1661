"""
Geometry of the symmetric space of PSL(d, R) at the basepoint o = [Id]:
Cartan projections, partial flags, parallel sets and an audit
of the Morse lemma for regular quasi-geodesics.

The distance is d(g o, h o) = |a(g^-1 h)|_2 with a the trace-free
vector of log singular values.
"""
import math
import dataclasses
from typing import Sequence, Tuple, List, Union

import numpy as np
import scipy.linalg
from tqdm import tqdm

from .config import TOL_GAP, C_TARGET, MAX_QUASI_MU
from .errors import (
    InvalidInput, DimensionMismatch, NonInvertible, NoGapAtTheta, NotTransverse,
    NotPositiveOnChamber, NotRegular, NotQuasiGeodesic, TooShort,
)
from . import matgeo
from .matgeo import Subspace
from .util import parallel_map

_ZERO_NORM = 1e-12
# regularity at rounding level counts as none
_REGULARITY_FLOOR = 1e-9


@dataclasses.dataclass(frozen=True, eq=False)
class CartanVector:
    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 1 or len(a) < 2:
            raise DimensionMismatch(f"Cartan vector needs at least two entries, got shape {a.shape}")
        if np.any(np.diff(a) > 1e-9 * max(1., np.abs(a).max())):
            raise InvalidInput("Cartan vector must be sorted descending")
        object.__setattr__(self, "a", a)

    @property
    def d(self) -> int:
        return len(self.a)

    def opposition(self) -> "CartanVector":
        return CartanVector(-self.a[::-1])

    def alpha(self, p: int) -> float:
        matgeo._check_index(self.d, p)
        return float(self.a[p - 1] - self.a[p])

    def norm(self) -> float:
        return float(np.linalg.norm(self.a))

    def to_json(self) -> list:
        return self.a.tolist()


def _check_theta(d: int, theta: Sequence[int]) -> Tuple[int, ...]:
    theta = tuple(sorted({int(p) for p in theta}))
    if not theta:
        raise InvalidInput("theta must not be empty")
    for p in theta:
        matgeo._check_index(d, p)
    return theta


def opposite_theta(d: int, theta: Sequence[int]) -> Tuple[int, ...]:
    return tuple(sorted(d - p for p in theta))


@dataclasses.dataclass(frozen=True, eq=False)
class PartialFlag:
    """
    Nested subspaces spaces[i] of dimension theta[i].
    """
    theta: Tuple[int, ...]
    spaces: Tuple[Subspace, ...]

    def __post_init__(self):
        spaces = tuple(self.spaces)
        if not spaces:
            raise InvalidInput("Empty flag")
        d = spaces[0].ambient_dim
        theta = _check_theta(d, self.theta)
        if len(theta) != len(spaces):
            raise DimensionMismatch(f"Flag of type {theta} needs {len(theta)} spaces, got {len(spaces)}")
        for p, s in zip(theta, spaces):
            if s.ambient_dim != d or s.dim != p:
                raise DimensionMismatch(f"Space of dimension {s.dim} in R^{s.ambient_dim} at index {p}")
        for small, large in zip(spaces, spaces[1:]):
            residual = small.basis - large.basis @ (large.basis.T @ small.basis)
            if np.linalg.norm(residual, 2) > 1e-8:
                raise InvalidInput(f"Flag spaces of dimension {small.dim} and {large.dim} are not nested")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "spaces", spaces)

    @property
    def d(self) -> int:
        return self.spaces[0].ambient_dim

    def space(self, p: int) -> Subspace:
        try:
            return self.spaces[self.theta.index(p)]
        except ValueError:
            raise InvalidInput(f"Flag of type {self.theta} has no space of dimension {p}")

    def translate(self, g: np.ndarray) -> "PartialFlag":
        return PartialFlag(self.theta, tuple(matgeo.image(g, s) for s in self.spaces))

    def to_json(self) -> dict:
        return {"theta": list(self.theta), "spaces": [s.to_json() for s in self.spaces]}


# --- projections and distances ---

def _log_sigmas(g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DimensionMismatch(f"Expected a square matrix, got shape {g.shape}")
    s = matgeo.singular_values(g)
    if not np.all(np.isfinite(s)) or s[-1] <= 0:
        raise NonInvertible("Matrix is not invertible")
    return np.log(s)


def cartan_projection(g: np.ndarray, trace_free: bool = True) -> CartanVector:
    a = _log_sigmas(g)
    if trace_free:
        a = a - a.mean()
    return CartanVector(a)


def vector_distance(h1: np.ndarray, h2: np.ndarray, trace_free: bool = True) -> CartanVector:
    """
    The vector valued distance from h1 o to h2 o, a(h1^-1 h2).
    """
    h1 = np.asarray(h1, dtype=float)
    if matgeo.singular_values(h1)[-1] <= 0:
        raise NonInvertible("h1 is not invertible")
    return cartan_projection(np.linalg.solve(h1, np.asarray(h2, dtype=float)), trace_free=trace_free)


def symmetric_distance(h1: np.ndarray, h2: np.ndarray) -> float:
    return vector_distance(h1, h2).norm()


def chamber_rays(d: int) -> np.ndarray:
    """
    The extreme rays of the closed trace-free Weyl chamber,
    row k - 1 is the fundamental coweight with k leading ones.
    """
    rays = np.array([[1. if i < k else 0. for i in range(d)] for k in range(1, d)])
    return rays - rays.mean(axis=1, keepdims=True)


@dataclasses.dataclass(frozen=True)
class ComparabilityInterval:
    lower: float
    upper: float
    size: int

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


def comparability_check(phi: Sequence[float], sample: Sequence[np.ndarray]) -> ComparabilityInterval:
    """
    Range of d(o, g o) / phi(a(g)) over the sample, for a functional
    phi positive on the closed chamber minus the origin.
    """
    phi = np.asarray(phi, dtype=float)
    if not len(sample):
        raise TooShort("Empty sample")
    d = np.asarray(sample[0]).shape[0]
    if phi.shape != (d, ):
        raise DimensionMismatch(f"Functional of length {len(phi)} for dimension {d}")
    values = chamber_rays(d) @ phi
    if np.any(values <= 1e-12 * max(1., np.abs(phi).max())):
        raise NotPositiveOnChamber(f"Functional is not positive on the chamber rays: {values.tolist()}")

    ratios = []
    for g in sample:
        a = cartan_projection(g)
        value = float(phi @ a.a)
        if a.norm() > _ZERO_NORM:
            ratios.append(a.norm() / value)
    if not ratios:
        raise TooShort("Every sample element has zero Cartan projection")
    return ComparabilityInterval(lower=float(min(ratios)), upper=float(max(ratios)), size=len(ratios))


def flag_of(g: np.ndarray, theta: Sequence[int], tol_gap: float = TOL_GAP) -> PartialFlag:
    """
    The flag of the spaces U_p(g), p in theta. The opposite flag of g
    is `flag_of(inv(g), opposite_theta(d, theta))`.
    """
    g = np.asarray(g, dtype=float)
    theta = _check_theta(g.shape[0], theta)
    triple = matgeo.svd(g)
    for p in theta:
        if triple.sigmas[p] / triple.sigmas[p - 1] >= 1. - tol_gap:
            raise NoGapAtTheta(f"No gap of index {p}")
    return PartialFlag(theta, tuple(Subspace(triple.left[:, :p]) for p in theta))


def _unstable_flag(g: np.ndarray, theta: Tuple[int, ...]) -> PartialFlag:
    """
    `flag_of` without the gap and invertibility checks, for renormalized
    long products whose gaps are known from their Cartan projections.
    """
    u = np.linalg.svd(g)[0]
    return PartialFlag(theta, tuple(Subspace(u[:, :p]) for p in theta))


def _stable_flag(g: np.ndarray, theta: Tuple[int, ...]) -> PartialFlag:
    """
    U of g^-1 at the opposite type, from the right singular vectors of g.
    """
    d = g.shape[0]
    _, _, vt = np.linalg.svd(g)
    opposite = opposite_theta(d, theta)
    return PartialFlag(opposite, tuple(Subspace(vt[d - q:].T) for q in opposite))


def _intersection(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    kernel = scipy.linalg.null_space(np.hstack([a, -b]), rcond=1e-10)
    return scipy.linalg.orth(a @ kernel[:a.shape[1]])


def parallel_set_map(e: PartialFlag, f: PartialFlag) -> np.ndarray:
    """
    A matrix g with g o in the parallel set of the transverse pair (E, F).

    g^-1 maps each block E_{p_j} cap F_{d-p_{j-1}} to its orthogonal
    projection on E_{p_j} cap E_{p_{j-1}}^perp.
    """
    d = e.d
    dims = (0,) + e.theta + (d,)
    identity = np.eye(d)
    blocks, targets = [], []
    for lo, hi in zip(dims, dims[1:]):
        e_hi = e.space(hi).basis if hi < d else identity
        f_part = f.space(d - lo).basis if lo > 0 else identity
        block = _intersection(e_hi, f_part)
        if block.shape[1] != hi - lo:
            raise NotTransverse(f"Flags are not transverse at index {lo}")
        blocks.append(block)
        proj_hi = e_hi @ e_hi.T
        proj_lo = e.space(lo).projector if lo > 0 else np.zeros((d, d))
        targets.append(proj_hi - proj_lo)

    basis = np.hstack(blocks)
    coords = np.linalg.inv(basis)
    inverse_map = np.zeros((d, d))
    start = 0
    for block, target in zip(blocks, targets):
        k = block.shape[1]
        inverse_map += target @ block @ coords[start:start + k]
        start += k
    return np.linalg.inv(inverse_map)


@dataclasses.dataclass(frozen=True)
class DistanceBracket:
    lower: float
    upper: float
    # -log sin of the smallest angle between E_p and F_{d-p}
    m: float

    def to_json(self) -> dict:
        return {
            "lower": {"value": self.lower, "provenance": "weakened-lower"},
            "upper": {"value": self.upper, "provenance": "constructive-upper"},
            "m": self.m,
        }


def parallel_set_distance_bounds(e: PartialFlag, f: PartialFlag) -> DistanceBracket:
    """
    lower <= d(o, P(E, F)) <= upper, with lower = m / sqrt(2) and
    upper = d(o, g o) for the map of `parallel_set_map`.
    """
    if e.d != f.d:
        raise DimensionMismatch(f"Flags in dimensions {e.d} and {f.d}")
    if f.theta != opposite_theta(e.d, e.theta):
        raise InvalidInput(f"Flag of type {f.theta} is not opposite to type {e.theta}")
    min_angle = min(matgeo.angle(e.space(p), f.space(e.d - p)) for p in e.theta)
    if min_angle < 1e-12:
        raise NotTransverse(f"E and F are not transverse, angle {min_angle:.3g}")
    m = -math.log(math.sin(min_angle))
    upper = cartan_projection(parallel_set_map(e, f)).norm()
    return DistanceBracket(lower=m / math.sqrt(2.), upper=upper, m=m)


# --- quasi-geodesics ---

@dataclasses.dataclass(frozen=True, eq=False)
class QuasiGeodesic:
    """
    The points h_n o with h_n = start g_0 ... g_{n-1}.
    """
    start: np.ndarray
    increments: np.ndarray

    def __post_init__(self):
        start = np.asarray(self.start, dtype=float)
        increments = np.asarray(self.increments, dtype=float)
        if increments.ndim != 3 or increments.shape[1:] != start.shape or start.shape[0] != start.shape[1]:
            raise DimensionMismatch(f"Increments of shape {increments.shape} for a start of shape {start.shape}")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "increments", increments)

    @classmethod
    def from_points(cls, points: Sequence[np.ndarray]) -> "QuasiGeodesic":
        points = [np.asarray(h, dtype=float) for h in points]
        if len(points) < 2:
            raise TooShort(f"Need at least two points, got {len(points)}")
        increments = [np.linalg.solve(h0, h1) for h0, h1 in zip(points, points[1:])]
        return cls(start=points[0], increments=np.array(increments))

    @property
    def d(self) -> int:
        return self.start.shape[0]

    def __len__(self):
        return self.increments.shape[0] + 1

    def points(self) -> List[np.ndarray]:
        result = [self.start]
        for g in self.increments:
            result.append(result[-1] @ g)
        return result

    def pair_cartan(self, trace_free: bool = True) -> np.ndarray:
        """
        A[n, m] = a(x_n, x_m) for n < m, NaN elsewhere, shape (N, N, d)
        for N points. Computed from window products of the increments.
        """
        num = len(self)
        windows = matgeo.window_log_sigmas(self.increments, left_to_right=True)
        result = np.full((num, num, self.d), np.nan)
        for n in range(num - 1):
            lengths = np.arange(1, num - n)
            values = windows[n, lengths]
            if trace_free:
                values = values - values.mean(axis=-1, keepdims=True)
            result[n, n + lengths] = values
        return result

    def pair_distances(self) -> np.ndarray:
        """
        Symmetric matrix of d(x_n, x_m).
        """
        cartan = self.pair_cartan()
        dist = np.linalg.norm(np.nan_to_num(cartan), axis=-1)
        return dist + dist.T


def _as_quasi_geodesic(points: Union[QuasiGeodesic, Sequence[np.ndarray]]) -> QuasiGeodesic:
    if isinstance(points, QuasiGeodesic):
        return points
    return QuasiGeodesic.from_points(points)


def quasigeodesic_constants(points: Union[QuasiGeodesic, Sequence[np.ndarray]]) -> Tuple[float, float]:
    """
    (mu, c) with |n-m| / mu - c <= d(x_n, x_m) <= mu |n-m| + c for all pairs.

    mu is the larger of the maximal rate d / |n-m| over all pairs and the
    inverse of the minimal rate over pairs at least half the segment apart,
    c is then the smallest fitting constant. A segment that does not
    move away from itself has mu = inf and c = 0.
    """
    qg = _as_quasi_geodesic(points)
    num = len(qg)
    if num < 3:
        raise TooShort(f"Need at least three points, got {num}")
    dist = qg.pair_distances()
    n, m = np.triu_indices(num, k=1)
    steps = (m - n).astype(float)
    values = dist[n, m]

    upper_rate = float((values / steps).max())
    long_pairs = steps >= (num - 1) / 2
    lower_rate = float((values[long_pairs] / steps[long_pairs]).min())
    if lower_rate <= _ZERO_NORM:
        return math.inf, 0.

    mu = max(1., upper_rate, 1. / lower_rate)
    c = float(max(0., (steps / mu - values).max(), (values - mu * steps).max()))
    return mu, c


def regularity_margin(points: Union[QuasiGeodesic, Sequence[np.ndarray]], theta: Sequence[int]) -> float:
    """
    min over pairs n < m and p in theta of alpha_p(a(x_n, x_m)) / |a(x_n, x_m)|.
    Pairs of coinciding points are skipped.
    """
    qg = _as_quasi_geodesic(points)
    theta = _check_theta(qg.d, theta)
    cartan = qg.pair_cartan()
    n, m = np.triu_indices(len(qg), k=1)
    vectors = cartan[n, m]
    norms = np.linalg.norm(vectors, axis=-1)
    keep = norms > _ZERO_NORM
    if not np.any(keep):
        return 0.
    vectors, norms = vectors[keep], norms[keep]
    alphas = np.stack([vectors[:, p - 1] - vectors[:, p] for p in theta], axis=-1)
    return float(max(0., (alphas.min(axis=-1) / norms).min()))


def _renormalized_prefixes(increments: np.ndarray) -> List[np.ndarray]:
    """
    g_0 ... g_{k-1} / |.| for k = 0 .. N
    """
    d = increments.shape[-1]
    result = [np.eye(d)]
    for g in increments:
        prod = result[-1] @ g
        result.append(prod / np.linalg.norm(prod))
    return result


def _renormalized_suffixes(increments: np.ndarray) -> List[np.ndarray]:
    """
    g_k ... g_{N-1} / |.| for k = 0 .. N
    """
    d = increments.shape[-1]
    result = [np.eye(d)]
    for g in increments[::-1]:
        prod = g @ result[-1]
        result.append(prod / np.linalg.norm(prod))
    return result[::-1]


@dataclasses.dataclass
class MorseAudit:
    theta: Tuple[int, ...]
    mu: float
    c: float
    regularity: float
    rows: List[dict]
    max_upper: float
    max_lower: float
    sidedness_min: float
    max_flag_deviation: float
    c_target: float

    @property
    def within_target(self) -> bool:
        return self.max_upper <= self.c_target

    def to_json(self) -> dict:
        return {
            "theta": list(self.theta),
            "mu": self.mu,
            "c": self.c,
            "regularity": self.regularity,
            "max_upper": {"value": self.max_upper, "provenance": "constructive-upper"},
            "max_lower": {"value": self.max_lower, "provenance": "weakened-lower"},
            "sidedness_min": self.sidedness_min,
            "max_flag_deviation": self.max_flag_deviation,
            "c_target": self.c_target,
            "within_target": self.within_target,
            "rows": self.rows,
        }


def morse_audit(
        points: Union[QuasiGeodesic, Sequence[np.ndarray]],
        theta: Sequence[int],
        c_target: float = C_TARGET,
        max_mu: float = MAX_QUASI_MU,
        tol_gap: float = TOL_GAP,
        workers: int = 1,
        verbose: bool = False,
) -> MorseAudit:
    """
    Bracket the distance of every inner point x_k to the parallel set
    of the flags seen from x_k towards both ends of the segment.

    At x_k the forward flag is U(g_k ... g_{N-1}) and the backward flag
    is U((g_0 ... g_{k-1})^-1), both already translated by h_k^-1.
    The sidedness margin of x_k is the regularity of a(x_0, x_k), the
    flag deviation compares U(x_0, x_k) with U(x_0, x_N).
    """
    qg = _as_quasi_geodesic(points)
    d = qg.d
    theta = _check_theta(d, theta)
    num = len(qg)
    if num < 3:
        raise TooShort(f"Need at least three points, got {num}")

    regularity = regularity_margin(qg, theta)
    if regularity <= _REGULARITY_FLOOR:
        raise NotRegular(f"Segment is not regular for theta {theta}")
    mu, c = quasigeodesic_constants(qg)
    if not math.isfinite(mu) or mu > max_mu:
        raise NotQuasiGeodesic(f"Quasi-geodesic constant mu={mu:.3g} exceeds {max_mu:.3g}")

    cartan = qg.pair_cartan()
    log_tol = -math.log1p(-tol_gap)
    prefixes = _renormalized_prefixes(qg.increments)
    suffixes = _renormalized_suffixes(qg.increments)
    final = np.linalg.svd(prefixes[-1])[0]

    def _gapped(a: np.ndarray) -> bool:
        return all(a[p - 1] - a[p] > log_tol for p in theta)

    def _row(k: int) -> dict:
        to_start, to_end = cartan[0, k], cartan[k, num - 1]
        row = {"k": k, "lower": math.nan, "upper": math.nan, "sidedness_margin": math.nan, "flag_deviation": math.nan}
        norm = float(np.linalg.norm(to_start))
        if norm > _ZERO_NORM:
            row["sidedness_margin"] = float(min(to_start[p - 1] - to_start[p] for p in theta) / norm)
            left = np.linalg.svd(prefixes[k])[0]
            row["flag_deviation"] = float(max(
                matgeo.grassmann_distance(Subspace(left[:, :p]), Subspace(final[:, :p]))
                for p in theta
            ))
        if not (_gapped(to_start) and _gapped(to_end)):
            return row
        forward = _unstable_flag(suffixes[k], theta)
        backward = _stable_flag(prefixes[k], theta)
        try:
            bracket = parallel_set_distance_bounds(forward, backward)
        except NotTransverse:
            return row
        row["lower"], row["upper"] = bracket.lower, bracket.upper
        return row

    ks = list(range(1, num - 1))
    if verbose:
        ks = tqdm(ks, desc="audit")
    rows = parallel_map(_row, ks, workers)

    def _max(key: str) -> float:
        values = [r[key] for r in rows if math.isfinite(r[key])]
        return float(max(values)) if values else math.nan

    sidedness = [r["sidedness_margin"] for r in rows if math.isfinite(r["sidedness_margin"])]
    return MorseAudit(
        theta=theta,
        mu=mu,
        c=c,
        regularity=regularity,
        rows=rows,
        max_upper=_max("upper"),
        max_lower=_max("lower"),
        sidedness_min=float(min(sidedness)) if sidedness else math.nan,
        max_flag_deviation=_max("flag_deviation"),
        c_target=c_target,
    )


# --- exterior powers ---

@dataclasses.dataclass(frozen=True)
class ExteriorReduction:
    # a_1 - a_2 of the p-th exterior power
    wedge_gap: float
    # a_p - a_{p+1} of g
    gap: float

    @property
    def residual(self) -> float:
        return abs(self.wedge_gap - self.gap)


def exterior_reduction(g: np.ndarray, p: int) -> ExteriorReduction:
    g = np.asarray(g, dtype=float)
    matgeo._check_index(g.shape[0], p)
    a = cartan_projection(g)
    wedge_a = cartan_projection(matgeo.wedge(g, p))
    return ExteriorReduction(wedge_gap=wedge_a.alpha(1), gap=a.alpha(p))


def exterior_quasi_geodesic(qg: QuasiGeodesic, p: int) -> QuasiGeodesic:
    """
    The same segment in the symmetric space of the p-th exterior power,
    where theta = {p} becomes theta = {1}.
    """
    matgeo._check_index(qg.d, p)
    return QuasiGeodesic(start=matgeo.wedge(qg.start, p), increments=matgeo.wedge(qg.increments, p))


def orbit_of_word(rep, word: Sequence[int]) -> QuasiGeodesic:
    """
    The orbit points rho(w_0 ... w_{n-1}) o along the prefixes of `word`.
    """
    word = tuple(word)
    if not word:
        raise TooShort("Empty word")
    return QuasiGeodesic(start=np.eye(rep.d), increments=rep.images[list(word)])
