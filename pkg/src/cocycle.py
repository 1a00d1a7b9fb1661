"""
Dominated splittings of matrix sequences.

A sequence A_n is dominated of index p if the window products
A_{m-1} ... A_n have gap ratios sigma_{p+1}/sigma_p <= c * exp(-mu * (m - n)).
"""
import enum
import dataclasses
from typing import Optional, Callable, Sequence, Tuple, List, Union

import numpy as np
import scipy.stats

from .config import TOL_GAP, ELL_MIN, MAX_BG_DEPTH, RESIDUAL_TARGET, MIN_CERTIFY_STEPS
from .errors import InvalidInput, TooShort, NotDominatedInput, DidNotConverge, DimensionMismatch
from .matgeo import (
    Subspace, check_matrix, singular_values, window_log_gaps, top_space, bottom_space,
    grassmann_distance, angle, image, restricted_norm, restricted_conorm,
    pairwise_distances,
)
from .util import matrix_from_json

# extra rate of the prepended block when the norm bound leaves no room
_EXTENSION_SLACK = 1e-6


class Verdict(enum.Enum):
    Dominated = "Dominated"
    Inconclusive = "Inconclusive"
    NotDominated = "NotDominated"


@dataclasses.dataclass(frozen=True, eq=False)
class MatrixSequence:
    """
    Finite window of a matrix sequence, item i of `items`
    is the matrix with index `index_origin + i`.

    An optional `generator` provides matrices outside of the window.
    """
    items: np.ndarray
    index_origin: int = 0
    generator: Optional[Callable[[int], np.ndarray]] = None

    def __post_init__(self):
        items = np.asarray(self.items, dtype=float)
        if items.ndim != 3 or items.shape[1] != items.shape[2]:
            raise DimensionMismatch(f"Sequence items must be square matrices of one size, got {items.shape}")
        object.__setattr__(self, "items", items)

    @classmethod
    def from_matrices(cls, matrices: Sequence, index_origin: int = 0, check: bool = True) -> "MatrixSequence":
        if not len(matrices):
            raise TooShort("Empty sequence")
        if check:
            d = np.asarray(matrices[0]).shape[0]
            for i, m in enumerate(matrices):
                m = check_matrix(m, name=f"item {index_origin + i}")
                if m.shape[0] != d:
                    raise DimensionMismatch(f"Item {index_origin + i} has dimension {m.shape[0]}, expected {d}")
        return cls(np.asarray(matrices, dtype=float), index_origin=index_origin)

    @classmethod
    def constant(cls, a: np.ndarray, length: int, index_origin: int = 0) -> "MatrixSequence":
        a = np.asarray(a, dtype=float)
        return cls(np.repeat(a[None], length, axis=0), index_origin=index_origin, generator=lambda n: a)

    @classmethod
    def from_json(cls, data: Union[list, dict]) -> "MatrixSequence":
        if isinstance(data, list):
            data = {"matrices": data}
        if not isinstance(data, dict) or "matrices" not in data:
            raise InvalidInput("Sequence json needs a 'matrices' list")
        return cls.from_matrices(
            [matrix_from_json(m, f"item {i}") for i, m in enumerate(data["matrices"])],
            index_origin=int(data.get("index_origin", 0)),
        )

    def to_json(self) -> dict:
        return {"index_origin": self.index_origin, "matrices": self.items.tolist()}

    def __len__(self):
        return self.items.shape[0]

    @property
    def dim(self) -> int:
        return self.items.shape[1]

    @property
    def interval(self) -> Tuple[int, int]:
        return self.index_origin, self.index_origin + len(self)

    @property
    def norm_bound(self) -> float:
        sigmas = singular_values(self.items)
        return float(max(sigmas[:, 0].max(), (1. / sigmas[:, -1]).max()))

    def item(self, n: int) -> np.ndarray:
        i = n - self.index_origin
        if 0 <= i < len(self):
            return self.items[i]
        if self.generator is not None:
            return np.asarray(self.generator(n), dtype=float)
        raise InvalidInput(f"Index {n} outside of sequence interval {self.interval}")

    def window(self, n0: int, n1: int) -> "MatrixSequence":
        """
        The items n0 <= n < n1
        """
        if n1 <= n0:
            raise TooShort(f"Empty window [{n0}, {n1})")
        return MatrixSequence(
            np.stack([self.item(n) for n in range(n0, n1)]),
            index_origin=n0,
            generator=self.generator,
        )


@dataclasses.dataclass(frozen=True, eq=False)
class DominationFit:
    p: int
    mu_hat: float
    c_hat: float
    min_margin: float
    verdict: Verdict
    horizon: int
    length: int
    index_origin: int
    # -log gap ratio of window (start, length), NaN outside
    log_gaps: np.ndarray

    def bound(self, length: Union[int, np.ndarray]) -> Union[float, np.ndarray]:
        return self.c_hat * np.exp(-self.mu_hat * np.asarray(length))

    def pair_rows(self) -> List[dict]:
        starts, lengths = np.nonzero(np.isfinite(self.log_gaps) & (np.arange(self.log_gaps.shape[1]) > 0))
        return [
            {
                "start": int(self.index_origin + s),
                "length": int(l),
                "log_gap": float(self.log_gaps[s, l]),
                "ratio": float(np.exp(-self.log_gaps[s, l])),
                "bound": float(self.bound(l)),
            }
            for s, l in zip(starts, lengths)
        ]

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "mu_hat": self.mu_hat,
            "c_hat": self.c_hat,
            "min_margin": self.min_margin,
            "verdict": self.verdict.value,
            "horizon": self.horizon,
            "length": self.length,
            "provenance": "fitted",
        }


@dataclasses.dataclass(frozen=True, eq=False)
class SplittingEstimate:
    ecu: Subspace
    ecs: Subspace
    angle: float
    convergence_residual: float
    center: int
    depth: int
    # distance between consecutive ecu approximants
    history: np.ndarray

    def contraction_ratio(self) -> float:
        """
        Geometric rate of the approximant increments, 0 if they vanish.
        """
        return _contraction_ratio(self.history)

    def to_json(self) -> dict:
        return {
            "ecu": self.ecu.to_json(),
            "ecs": self.ecs.to_json(),
            "angle": self.angle,
            "convergence_residual": self.convergence_residual,
            "center": self.center,
            "depth": self.depth,
        }


@dataclasses.dataclass(frozen=True)
class TransversalityScan:
    min_angle: float
    # (n, k, m) attaining the minimum
    witness: Tuple[int, int, int]
    ell: int
    # minimum over all admissible (n, m) for each k
    per_k: np.ndarray


@dataclasses.dataclass(frozen=True, eq=False)
class ComplementarySplitting:
    q: Subspace
    q_tilde: Subspace
    angles: np.ndarray
    log_norm_ratios: np.ndarray
    rate: float


def _contraction_ratio(increments: np.ndarray, floor: float = 1e-15) -> float:
    increments = np.asarray(increments, dtype=float)
    usable = np.flatnonzero(increments > floor)
    if len(usable) < 2:
        return 0.
    fit = scipy.stats.linregress(usable, np.log(increments[usable]))
    return float(np.exp(fit.slope))


def fit_domination(
        seq: MatrixSequence,
        p: int,
        horizon: int = ELL_MIN,
        tol_gap: float = TOL_GAP,
) -> DominationFit:
    """
    Fit the constants of the domination inequality to all window products.

    Least squares of -log gap ratio against window length gives mu_hat,
    then c_hat is raised until every window satisfies
    ratio <= c_hat * exp(-mu_hat * length).
    """
    num = len(seq)
    if num < 2:
        raise TooShort(f"Sequence of length {num} can not be fitted")
    if not 1 <= p <= seq.dim - 1:
        raise InvalidInput(f"Index p={p} outside of [1, {seq.dim - 1}]")

    gaps = window_log_gaps(seq.items, p)
    starts, lengths = np.nonzero(np.isfinite(gaps))
    keep = lengths > 0
    starts, lengths = starts[keep], lengths[keep]
    values = gaps[starts, lengths]

    fit = scipy.stats.linregress(lengths.astype(float), values)
    mu_hat = max(0., float(fit.slope))
    intercept = float(fit.intercept) if fit.slope > 0 else 0.
    margins = values - (mu_hat * lengths + intercept)
    min_margin = float(margins.min())
    c_hat = float(np.exp(-intercept - min_margin))

    long_windows = lengths > horizon
    if np.any(long_windows) and np.any(np.exp(-values[long_windows]) >= 1. - tol_gap):
        verdict = Verdict.NotDominated
    elif mu_hat > 0 and num >= MIN_CERTIFY_STEPS / mu_hat:
        verdict = Verdict.Dominated
    else:
        verdict = Verdict.Inconclusive

    return DominationFit(
        p=p,
        mu_hat=mu_hat,
        c_hat=c_hat,
        min_margin=min_margin,
        verdict=verdict,
        horizon=horizon,
        length=num,
        index_origin=seq.index_origin,
        log_gaps=gaps,
    )


def _require_dominated(seq: MatrixSequence, p: int, fit: Optional[DominationFit]) -> DominationFit:
    if fit is None:
        fit = fit_domination(seq, p)
    if fit.p != p:
        raise InvalidInput(f"Fit of index {fit.p} passed for index {p}")
    if fit.verdict != Verdict.Dominated:
        raise NotDominatedInput(f"Sequence is not certified as dominated, fit verdict {fit.verdict.value}")
    return fit


def _left_approximants(seq: MatrixSequence, p: int, center: int, depth: int) -> List[Subspace]:
    """
    U_p(A_{c-1} ... A_{c-n}) for n = 1..depth
    """
    product = np.eye(seq.dim)
    spaces = []
    for n in range(1, depth + 1):
        product = product @ seq.item(center - n)
        product /= np.linalg.norm(product)
        spaces.append(top_space(product, p))
    return spaces


def _right_approximants(seq: MatrixSequence, p: int, center: int, depth: int) -> List[Subspace]:
    """
    S_{d-p}(A_{c+n-1} ... A_c) for n = 1..depth
    """
    product = np.eye(seq.dim)
    spaces = []
    for n in range(depth):
        product = seq.item(center + n) @ product
        product /= np.linalg.norm(product)
        spaces.append(bottom_space(product, p))
    return spaces


def _available_depth(seq: MatrixSequence, center: int, depth: Optional[int]) -> Tuple[int, int]:
    depth = MAX_BG_DEPTH if depth is None else depth
    if seq.generator is not None:
        return depth, depth
    n0, n1 = seq.interval
    return min(depth, center - n0), min(depth, n1 - center)


def _increments(spaces: List[Subspace]) -> np.ndarray:
    return np.array([grassmann_distance(a, b) for a, b in zip(spaces[:-1], spaces[1:])])


def bg_limits(
        seq: MatrixSequence,
        p: int,
        center: int,
        depth: Optional[int] = None,
        fit: Optional[DominationFit] = None,
        residual_target: float = RESIDUAL_TARGET,
) -> SplittingEstimate:
    """
    The splitting at `center`:

        ecu = lim U_p(A_{c-1} ... A_{c-n})
        ecs = lim S_{d-p}(A_{c+n-1} ... A_c)
    """
    fit = _require_dominated(seq, p, fit)
    depth_left, depth_right = _available_depth(seq, center, depth)
    if min(depth_left, depth_right) < ELL_MIN:
        raise TooShort(
            f"Need at least {ELL_MIN} items on both sides of {center}, got {depth_left}/{depth_right}"
        )

    left = _left_approximants(seq, p, center, depth_left)
    right = _right_approximants(seq, p, center, depth_right)
    history = _increments(left)
    residual = float(max(history[-1], _increments(right)[-1]))
    if residual > residual_target:
        raise DidNotConverge(
            f"Limit spaces at {center} did not converge, residual {residual:.3g} at depth {depth_left}/{depth_right}",
            residual=residual, depth=min(depth_left, depth_right),
        )

    return SplittingEstimate(
        ecu=left[-1],
        ecs=right[-1],
        angle=angle(left[-1], right[-1]),
        convergence_residual=residual,
        center=center,
        depth=min(depth_left, depth_right),
        history=history,
    )


def shift_equivariance_residual(
        seq: MatrixSequence,
        p: int,
        center: int,
        depth: Optional[int] = None,
        fit: Optional[DominationFit] = None,
) -> float:
    """
    d(A_c ecu(c), ecu(c + 1))
    """
    fit = _require_dominated(seq, p, fit)
    here = bg_limits(seq, p, center, depth=depth, fit=fit)
    there = bg_limits(seq, p, center + 1, depth=depth, fit=fit)
    return grassmann_distance(image(seq.item(center), here.ecu), there.ecu)


def _overlap_cosines(us: np.ndarray, ss: np.ndarray) -> np.ndarray:
    """
    Largest cosine between each U (a, d, p) and each S (b, d, q), shape (a, b)
    """
    overlap = np.swapaxes(us, 1, 2)[:, None] @ ss[None, :]
    if overlap.shape[-1] == 1 or overlap.shape[-2] == 1:
        return np.linalg.norm(overlap.reshape(overlap.shape[:2] + (-1,)), axis=-1)
    return np.linalg.norm(overlap, ord=2, axis=(2, 3))


def transversality_scan(
        seq: MatrixSequence,
        p: int,
        ell: int,
        fit: Optional[DominationFit] = None,
        tol_gap: float = TOL_GAP,
) -> TransversalityScan:
    """
    Empirical floor of the angle between U_p(A_{k-1} ... A_n)
    and S_{d-p}(A_{m-1} ... A_k) over n < k < m with k - n > ell
    and m - k > ell.

    Windows without a gap of index p count as angle 0.
    """
    if ell < 1:
        raise InvalidInput(f"ell must be positive, got {ell}")
    num = len(seq)
    if num < 2 * ell + 2:
        raise TooShort(f"Sequence of length {num} has no admissible triples for ell={ell}")
    fit = _require_dominated(seq, p, fit)
    gaps = fit.log_gaps
    min_log_gap = -np.log(1. - tol_gap)
    d = seq.dim

    best = (np.pi / 2, (0, 0, 0))
    per_k = np.full(num, np.nan)
    for k in range(ell + 1, num - ell):
        # left windows [n, k)
        starts = np.arange(k - ell - 1, -1, -1)
        us = np.empty((len(starts), d, p))
        product = np.eye(d)
        for j in range(k - 1, starts[0], -1):
            product = product @ seq.items[j]
        for i, n in enumerate(starts):
            product = product @ seq.items[n]
            product /= np.linalg.norm(product)
            us[i] = top_space(product, p).basis
        left_ok = gaps[starts, k - starts] > min_log_gap

        # right windows [k, m)
        ends = np.arange(k + ell + 1, num + 1)
        ss = np.empty((len(ends), d, d - p))
        product = np.eye(d)
        for j in range(k, ends[0]):
            product = seq.items[j] @ product
        for i, m in enumerate(ends):
            if i:
                product = seq.items[m - 1] @ product
            product /= np.linalg.norm(product)
            ss[i] = bottom_space(product, p).basis
        right_ok = gaps[k, ends - k] > min_log_gap

        angles = np.arccos(np.clip(_overlap_cosines(us, ss), 0., 1.))
        angles[~left_ok, :] = 0.
        angles[:, ~right_ok] = 0.
        i, j = np.unravel_index(np.argmin(angles), angles.shape)
        per_k[k] = angles[i, j]
        if angles[i, j] < best[0]:
            o = seq.index_origin
            best = (float(angles[i, j]), (o + int(starts[i]), o + k, o + int(ends[j])))

    return TransversalityScan(min_angle=best[0], witness=best[1], ell=ell, per_k=per_k)


def _limit_stable_space(seq: MatrixSequence, p: int) -> Subspace:
    """
    Q = lim S_{d-p}(A_{n-1} ... A_0), approximated with the whole window
    """
    product = np.eye(seq.dim)
    for a in seq.items:
        product = a @ product
        product /= np.linalg.norm(product)
    return bottom_space(product, p)


def extension_block(q: Subspace, mu: float, norm_bound: float) -> np.ndarray:
    """
    The constant map that expands Q^perp by exp(mu'/2) and contracts Q by exp(-mu'/2),
    so its gap ratio exp(-mu') is strictly below exp(-mu).

    mu' is slightly above mu and keeps exp(mu'/2) <= norm_bound, unless mu
    already equals 2 log(norm_bound). Then the norm exceeds the bound by a
    factor exp(_EXTENSION_SLACK / 2).
    """
    mu_ext = min(max(1.1 * mu, mu + 1e-3), 2. * np.log(norm_bound))
    mu_ext = max(mu_ext, mu + _EXTENSION_SLACK)
    frame = np.concatenate([q.complement().basis, q.basis], axis=1)
    p = frame.shape[0] - q.dim
    scales = np.concatenate([np.full(p, np.exp(mu_ext / 2)), np.full(q.dim, np.exp(-mu_ext / 2))])
    return (frame * scales) @ frame.T


def extend_one_sided(
        seq: MatrixSequence,
        p: int,
        fit: Optional[DominationFit] = None,
) -> MatrixSequence:
    """
    Prepend `len(seq)` copies of a constant block map B to a dominated
    one-sided sequence. B fixes Q = lim S_{d-p} and its orthocomplement,
    so the two-sided sequence stays dominated.

    Indices before the prepended window keep returning B.
    """
    fit = _require_dominated(seq, p, fit)
    q = _limit_stable_space(seq, p)
    block = extension_block(q, fit.mu_hat, seq.norm_bound)
    num = len(seq)
    origin = seq.index_origin
    items = np.concatenate([np.repeat(block[None], num, axis=0), seq.items], axis=0)
    inner = seq.generator

    def _generator(n: int) -> np.ndarray:
        if n < origin:
            return block
        if inner is None:
            raise InvalidInput(f"Index {n} outside of extended sequence")
        return inner(n)

    return MatrixSequence(items, index_origin=origin - num, generator=_generator)


def complementary_splitting(
        seq: MatrixSequence,
        p: int,
        fit: Optional[DominationFit] = None,
) -> ComplementarySplitting:
    """
    The splitting Q~ + Q of a dominated one-sided sequence, with Q~ the
    unstable space at the origin of the extended sequence, together with
    the angles between the images of Q~ and Q and the log ratios
    |A^(n)|_Q| / m(A^(n)|_Q~) which decay at the fitted rate.
    """
    fit = _require_dominated(seq, p, fit)
    extended = extend_one_sided(seq, p, fit=fit)
    q = _limit_stable_space(seq, p)
    origin = seq.index_origin
    q_tilde = top_space(_left_product(extended, origin, len(seq)), p)

    angles, log_ratios = [], []
    product = np.eye(seq.dim)
    log_scale = 0.
    for a in seq.items:
        product = a @ product
        norm = np.linalg.norm(product)
        product /= norm
        log_scale += np.log(norm)
        angles.append(angle(image(product, q_tilde), image(product, q)))
        log_ratios.append(np.log(restricted_norm(product, q)) - np.log(restricted_conorm(product, q_tilde)))

    log_ratios = np.array(log_ratios)
    rate = float(-scipy.stats.linregress(np.arange(1, len(log_ratios) + 1), log_ratios).slope)
    return ComplementarySplitting(
        q=q,
        q_tilde=q_tilde,
        angles=np.array(angles),
        log_norm_ratios=log_ratios,
        rate=rate,
    )


def _left_product(seq: MatrixSequence, center: int, depth: int) -> np.ndarray:
    product = np.eye(seq.dim)
    for n in range(1, depth + 1):
        product = product @ seq.item(center - n)
        product /= np.linalg.norm(product)
    return product


def cauchy_increments(
        seq: MatrixSequence,
        p: int,
        k: int,
        fit: Optional[DominationFit] = None,
) -> List[dict]:
    """
    For each n < k the distance of U_p(A_{k-1} ... A_n) to all deeper
    approximants, next to the bound K^2 c / (1 - exp(-mu)) * exp(-mu (k - n)).
    """
    fit = _require_dominated(seq, p, fit)
    origin = seq.index_origin
    depth = k - origin
    if depth < 2:
        raise TooShort(f"Need at least two items before {k}")
    spaces = _left_approximants(seq, p, k, depth)
    dist = pairwise_distances(spaces)
    c_tilde = seq.norm_bound ** 2 * fit.c_hat / (1. - np.exp(-fit.mu_hat))
    rows = []
    for i in range(depth - 1):
        length = i + 1
        rows.append({
            "n": k - length,
            "length": length,
            "tail_distance": float(dist[i, i + 1:].max()),
            "bound": float(c_tilde * np.exp(-fit.mu_hat * length)),
        })
    return rows
