"""
Singular values, singular subspaces and the geometry of Grassmannians.

Matrices are plain `numpy.ndarray`, subspaces are `Subspace` instances
holding an orthonormal basis. Everything here is a pure function.
"""
import itertools
import dataclasses
from functools import lru_cache
from typing import Optional, Sequence, Tuple, Dict, Iterable, List, Union

import numpy as np
import scipy.linalg

from .config import (
    MAX_DIM, TOL_GAP, NONINVERTIBLE_RATIO, CONDITION_LIMIT, NOT_GRAPH, MAX_WEDGE_DIM, ORTHONORMAL_TOL,
)
from .errors import DimensionMismatch, InvalidInput, NonInvertible, NoGap, NotGraph


@dataclasses.dataclass(frozen=True, eq=False)
class SvdTriple:
    """
    A = left @ diag(sigmas) @ right.T
    """
    sigmas: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.sigmas) @ self.right.T


@dataclasses.dataclass(frozen=True, eq=False)
class Subspace:
    """
    A point of the Grassmannian Gr_p(R^d), stored as a d x p matrix
    with orthonormal columns.

    Use `Subspace.span` to create one from arbitrary spanning vectors.
    """
    basis: np.ndarray

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        if basis.ndim != 2:
            raise InvalidInput(f"Subspace basis must be a matrix, got shape {basis.shape}")
        d, p = basis.shape
        if not 1 <= p <= d - 1:
            raise InvalidInput(f"Subspace dimension {p} outside of [1, {d - 1}]")
        if np.abs(basis.T @ basis - np.eye(p)).max() > ORTHONORMAL_TOL:
            raise InvalidInput("Subspace basis is not orthonormal")
        object.__setattr__(self, "basis", basis)

    @classmethod
    def span(cls, vectors: Union[np.ndarray, Sequence[Sequence[float]]], columns: bool = True) -> "Subspace":
        """
        Subspace spanned by `vectors`, which are the columns
        of the matrix if `columns` is True, else the rows.
        """
        vectors = np.asarray(vectors, dtype=float)
        if vectors.ndim == 1:
            vectors = vectors[:, None]
        elif not columns:
            vectors = vectors.T
        basis = scipy.linalg.orth(vectors)
        if basis.shape[1] != vectors.shape[1]:
            raise InvalidInput(f"Spanning vectors are linearly dependent")
        return cls(_sign_normalized(basis))

    @classmethod
    def from_json(cls, data: dict) -> "Subspace":
        space = cls.span(np.array(data["basis"], dtype=float))
        if space.dim != int(data.get("dim", space.dim)):
            raise InvalidInput(f"Subspace dim {data['dim']} does not match basis")
        return space

    def to_json(self) -> dict:
        return {"dim": self.dim, "basis": self.basis.tolist()}

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def complement(self) -> "Subspace":
        return Subspace(_sign_normalized(scipy.linalg.null_space(self.basis.T)))

    def contains(self, v: np.ndarray, tol: float = 1e-9) -> bool:
        v = np.asarray(v, dtype=float)
        return np.linalg.norm(v - self.basis @ (self.basis.T @ v)) <= tol * max(1., np.linalg.norm(v))

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim})"


@dataclasses.dataclass(frozen=True, eq=False)
class ExteriorMatrix:
    base_dim: int
    degree: int
    entries: np.ndarray

    @property
    def indices(self) -> List[Tuple[int, ...]]:
        return list(itertools.combinations(range(self.base_dim), self.degree))


# --- construction ---

def check_matrix(a, name: str = "matrix") -> np.ndarray:
    """
    Validate a user supplied matrix: square, 2 <= d <= MAX_DIM,
    finite and not too badly conditioned.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    if not 2 <= a.shape[0] <= MAX_DIM:
        raise DimensionMismatch(f"{name} dimension {a.shape[0]} outside of [2, {MAX_DIM}]")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} contains non-finite entries")
    sigmas = np.linalg.svd(a, compute_uv=False)
    if sigmas[-1] <= 0 or sigmas[0] / sigmas[-1] >= CONDITION_LIMIT:
        raise NonInvertible(f"{name} is not safely invertible (sigmas {sigmas[0]:.3g} .. {sigmas[-1]:.3g})")
    return a


def line(v) -> Subspace:
    return Subspace.span(np.asarray(v, dtype=float))


def image(a: np.ndarray, space: Subspace) -> Subspace:
    return Subspace.span(a @ space.basis)


def complement(space: Subspace) -> Subspace:
    return space.complement()


def random_subspace(rng: np.random.Generator, d: int, p: int) -> Subspace:
    return Subspace.span(rng.standard_normal((d, p)))


def random_matrix(rng: np.random.Generator, d: int, min_sigma: float = .1) -> np.ndarray:
    """
    A random invertible matrix with singular values bounded away from zero.
    """
    while True:
        a = rng.standard_normal((d, d))
        if np.linalg.svd(a, compute_uv=False)[-1] >= min_sigma:
            return a


def rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def _sign_normalized(basis: np.ndarray) -> np.ndarray:
    """
    Flip each column so that its first nonzero entry is positive.
    """
    basis = np.array(basis, dtype=float)
    if basis.ndim == 1:
        idx = np.flatnonzero(np.abs(basis) > 1e-12)
        if len(idx) and basis[idx[0]] < 0:
            basis = -basis
        return basis
    for i in range(basis.shape[1]):
        idx = np.flatnonzero(np.abs(basis[:, i]) > 1e-12)
        if len(idx) and basis[idx[0], i] < 0:
            basis[:, i] *= -1
    return basis


# --- singular values ---

def svd(a: np.ndarray) -> SvdTriple:
    a = np.asarray(a, dtype=float)
    u, s, vt = np.linalg.svd(a)
    if s[-1] < NONINVERTIBLE_RATIO * s[0] or s[0] == 0:
        raise NonInvertible(f"Matrix is not invertible: sigma_d / sigma_1 = {s[-1] / max(s[0], 1e-300):.3g}")
    v = vt.T.copy()
    for i in range(u.shape[1]):
        idx = np.flatnonzero(np.abs(u[:, i]) > 1e-12)
        if len(idx) and u[idx[0], i] < 0:
            u[:, i] *= -1
            v[:, i] *= -1
    return SvdTriple(sigmas=s, left=u, right=v)


def singular_values(a: np.ndarray) -> np.ndarray:
    return np.linalg.svd(np.asarray(a, dtype=float), compute_uv=False)


def _check_index(d: int, p: int):
    if not 1 <= p <= d - 1:
        raise InvalidInput(f"Index p={p} outside of [1, {d - 1}]")


def gap_ratio(a: np.ndarray, p: int) -> float:
    """
    sigma_{p+1}(A) / sigma_p(A)
    """
    a = np.asarray(a, dtype=float)
    _check_index(a.shape[0], p)
    s = singular_values(a)
    if s[-1] < NONINVERTIBLE_RATIO * s[0]:
        raise NonInvertible(f"Matrix is not invertible")
    return float(s[p] / s[p - 1])


def singular_spaces(a: np.ndarray, p: int, tol_gap: float = TOL_GAP) -> Tuple[Subspace, Subspace]:
    """
    Returns U_p(A), the span of the p largest axes of the image of the unit ball,
    and S_{d-p}(A) = U_{d-p}(A^-1).
    """
    a = np.asarray(a, dtype=float)
    _check_index(a.shape[0], p)
    triple = svd(a)
    ratio = triple.sigmas[p] / triple.sigmas[p - 1]
    if ratio >= 1. - tol_gap:
        raise NoGap(f"No gap of index {p}: ratio {ratio:.12f}")
    return (
        Subspace(_sign_normalized(triple.left[:, :p])),
        Subspace(_sign_normalized(triple.right[:, p:])),
    )


def has_gap(a: np.ndarray, p: int, tol_gap: float = TOL_GAP) -> bool:
    s = singular_values(a)
    return s[p] / s[p - 1] < 1. - tol_gap


def top_space(a: np.ndarray, p: int) -> Subspace:
    """
    U_p(A) without the gap check, for renormalized long products
    whose gaps are checked in log-space.
    """
    u, s, vt = np.linalg.svd(np.asarray(a, dtype=float))
    return Subspace(_sign_normalized(u[:, :p]))


def bottom_space(a: np.ndarray, p: int) -> Subspace:
    """
    S_{d-p}(A) without the gap check.
    """
    u, s, vt = np.linalg.svd(np.asarray(a, dtype=float))
    return Subspace(_sign_normalized(vt[p:].T))


# --- grassmannian ---

def _check_same_dim(p: Subspace, q: Subspace):
    if p.ambient_dim != q.ambient_dim or p.dim != q.dim:
        raise DimensionMismatch(
            f"Subspaces of dimensions {p.dim}/{p.ambient_dim} and {q.dim}/{q.ambient_dim} are not comparable"
        )


def _residual(p: Subspace, q: Subspace) -> np.ndarray:
    """
    (I - P P^T) Q, whose singular values are the sines of the principal angles
    """
    return q.basis - p.basis @ (p.basis.T @ q.basis)


def grassmann_distance(p: Subspace, q: Subspace) -> float:
    """
    Sine of the largest canonical angle, the Hausdorff distance
    between the unit spheres of P and Q.
    """
    _check_same_dim(p, q)
    return float(min(1., np.linalg.norm(_residual(p, q), 2)))


def angle(p: Subspace, q: Subspace) -> float:
    """
    Smallest angle between nonzero vectors of P and Q, in [0, pi/2].
    """
    if p.ambient_dim != q.ambient_dim:
        raise DimensionMismatch(f"Ambient dimensions {p.ambient_dim} and {q.ambient_dim} differ")
    cos_max = min(1., float(np.linalg.norm(p.basis.T @ q.basis, 2)))
    if cos_max < .7:
        return float(np.arccos(cos_max))
    # the residual of the smaller space against the larger one
    #   gives the sines of all principal angles
    small, large = (q, p) if q.dim <= p.dim else (p, q)
    sin_min = float(np.linalg.svd(_residual(large, small), compute_uv=False)[-1])
    return float(np.arcsin(min(1., sin_min)))


def canonical_angles(p: Subspace, q: Subspace) -> np.ndarray:
    """
    Canonical angles beta_1 >= ... >= beta_p.
    """
    _check_same_dim(p, q)
    sines = np.clip(np.linalg.svd(_residual(p, q), compute_uv=False), 0., 1.)
    cosines = np.clip(np.linalg.svd(p.basis.T @ q.basis, compute_uv=False)[::-1], 0., 1.)
    return np.where(sines < .7, np.arcsin(sines), np.arccos(cosines))


def graph_map_norm(p: Subspace, q: Subspace) -> float:
    """
    Norm of the linear map L: P -> P^perp whose graph is Q.
    """
    dist = grassmann_distance(p, q)
    if dist >= 1. - NOT_GRAPH:
        raise NotGraph(f"Q is not a graph over P, distance {dist}")
    return dist / np.sqrt(1. - dist * dist)


def graph_map(p: Subspace, q: Subspace) -> np.ndarray:
    """
    Matrix of L_{Q,P} : R^d -> R^d, zero on P^perp, with Q = {v + Lv : v in P}.
    """
    grassmann = grassmann_distance(p, q)
    if grassmann >= 1. - NOT_GRAPH:
        raise NotGraph(f"Q is not a graph over P, distance {grassmann}")
    # q.basis = p.basis @ X + perp-part, solve v + Lv in Q for v in P
    x = p.basis.T @ q.basis
    y = q.basis - p.basis @ x
    return y @ np.linalg.solve(x, p.basis.T)


def hausdorff_distance(
        points1: Sequence[Subspace],
        points2: Sequence[Subspace],
        directed: bool = False,
) -> float:
    """
    Hausdorff distance of two finite sets of subspaces
    with respect to `grassmann_distance`.

    With `directed` only the largest distance from a point
    of `points1` to the set `points2`.
    """
    if not points1 or not points2:
        raise InvalidInput("Hausdorff distance of empty set")
    dist = pairwise_distances(points1, points2)
    if directed:
        return float(dist.min(axis=1).max())
    return float(max(dist.min(axis=1).max(), dist.min(axis=0).max()))


def pairwise_distances(points1: Sequence[Subspace], points2: Optional[Sequence[Subspace]] = None) -> np.ndarray:
    if points2 is None:
        points2 = points1
    for q in (points1[0], points2[0]):
        _check_same_dim(points1[0], q)
    b1 = np.stack([s.basis for s in points1])
    b2 = np.stack([s.basis for s in points2])
    residual = b2[None, :] - b1[:, None] @ (np.swapaxes(b1, 1, 2)[:, None] @ b2[None, :])
    return np.clip(np.linalg.svd(residual, compute_uv=False)[..., 0], 0., 1.)


def average_projector_representative(points: Sequence[Subspace]) -> Subspace:
    """
    The span of the top eigenvectors of the mean projector,
    a cheap stand-in for the Karcher mean of close points.
    """
    p = points[0].dim
    mean = np.mean([s.projector for s in points], axis=0)
    w, v = np.linalg.eigh(mean)
    return Subspace(_sign_normalized(v[:, ::-1][:, :p]))


def dominant_subspace(a: np.ndarray, p: int) -> Subspace:
    """
    Invariant subspace of the p eigenvalues of largest modulus.
    """
    a = np.asarray(a, dtype=float)
    _check_index(a.shape[0], p)
    moduli = np.sort(np.abs(np.linalg.eigvals(a)))[::-1]
    if moduli[p - 1] <= moduli[p] * (1. + 1e-9):
        raise NoGap(f"No eigenvalue modulus gap of index {p}")
    threshold = np.sqrt(moduli[p - 1] * moduli[p])
    t, z, sdim = scipy.linalg.schur(a, output="real", sort=lambda x, y: np.hypot(x, y) > threshold)
    if sdim != p:
        raise NoGap(f"Eigenvalue modulus gap of index {p} splits a complex pair")
    return Subspace(_sign_normalized(z[:, :p]))


def projective_equal(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    """
    A == +-B, relative to the norm of A
    """
    scale = max(1., float(np.linalg.norm(a)))
    return min(np.linalg.norm(a - b), np.linalg.norm(a + b)) <= tol * scale


# --- exterior powers ---

@lru_cache(maxsize=256)
def wedge_indices(d: int, k: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(d), k)), dtype=int).reshape(-1, k)


def wedge_dim(d: int, k: int) -> int:
    return len(wedge_indices(d, k))


def wedge(a: np.ndarray, k: int) -> np.ndarray:
    """
    Batched exterior power: the k-minors of the last two axes of `a`
    over the lexicographic wedge basis.
    """
    a = np.asarray(a, dtype=float)
    d = a.shape[-1]
    if k == 0:
        return np.ones(a.shape[:-2] + (1, 1))
    idx = wedge_indices(d, k)
    m = len(idx)
    rows = idx[:, None, :, None]
    cols = idx[None, :, None, :]
    if m * m * k * k * max(1, int(np.prod(a.shape[:-2]))) <= 4_000_000:
        return np.linalg.det(a[..., rows, cols])
    # row by row to keep memory small
    out = np.empty(a.shape[:-2] + (m, m))
    for i in range(m):
        out[..., i, :] = np.linalg.det(a[..., idx[i][None, :, None], idx[:, None, :]])
    return out


def wedge_vectors(b: np.ndarray) -> np.ndarray:
    """
    The k-minors of a d x k matrix, its columns' wedge product.
    """
    b = np.asarray(b, dtype=float)
    idx = wedge_indices(b.shape[-2], b.shape[-1])
    return np.linalg.det(b[..., idx, :])


def exterior_power(a: np.ndarray, p: int) -> ExteriorMatrix:
    a = np.asarray(a, dtype=float)
    d = a.shape[0]
    if not 0 <= p <= d:
        raise InvalidInput(f"Exterior degree {p} outside of [0, {d}]")
    return ExteriorMatrix(base_dim=d, degree=p, entries=wedge(a, p))


def plucker_embed(space: Subspace) -> np.ndarray:
    vec = wedge_vectors(space.basis)
    return _sign_normalized(vec / np.linalg.norm(vec))


def restricted_jacobian(a: np.ndarray, space: Subspace) -> float:
    """
    p-volume scaling of A restricted to P, |Lambda^p A (iota P)|.
    """
    return float(np.linalg.norm(wedge_vectors(np.asarray(a, dtype=float) @ space.basis)))


def restricted_norm(a: np.ndarray, space: Subspace) -> float:
    return float(np.linalg.norm(np.asarray(a) @ space.basis, 2))


def restricted_conorm(a: np.ndarray, space: Subspace) -> float:
    """
    m(A|_P), the smallest stretch of a unit vector of P
    """
    return float(np.linalg.svd(np.asarray(a) @ space.basis, compute_uv=False)[-1])


# --- long products ---

def renormalized_product(mats: Iterable[np.ndarray], left_to_right: bool = False) -> Tuple[np.ndarray, float]:
    """
    Product of `mats` as (M, log_scale) with the true product
    equal to exp(log_scale) * M and |M|_F = 1.

    If `left_to_right` the product is M_0 M_1 ... M_n,
    otherwise M_n ... M_1 M_0.
    """
    product = None
    log_scale = 0.
    for m in mats:
        if product is None:
            product = np.array(m, dtype=float)
        elif left_to_right:
            product = product @ m
        else:
            product = m @ product
        norm = np.linalg.norm(product)
        product /= norm
        log_scale += np.log(norm)
    if product is None:
        raise InvalidInput("Empty product")
    return product, log_scale


def window_log_volumes(
        mats: Sequence[np.ndarray],
        degrees: Iterable[int],
        left_to_right: bool = False,
        max_length: Optional[int] = None,
) -> Dict[int, np.ndarray]:
    """
    For every window of consecutive factors, log sigma_1 of the k-th
    exterior power of the window product, which is log(sigma_1 ... sigma_k).

    Returns a mapping degree -> array V of shape (N, N + 1) with
    V[n, L] for the window of length L starting at n, NaN where the
    window leaves the sequence and 0 for L = 0.

    Products are accumulated in the exterior powers themselves so that
    differences of the logs keep their accuracy far beyond what the
    singular values of a plain product could resolve.
    """
    mats = np.asarray(mats, dtype=float)
    num, d = mats.shape[0], mats.shape[-1]
    max_length = num if max_length is None else min(num, max_length)
    result = dict()

    for k in sorted(set(degrees)):
        vol = np.full((num, num + 1), np.nan)
        vol[:, 0] = 0.

        if k == 0:
            result[k] = _mask_windows(np.zeros((num, num + 1)), max_length)
            continue

        if k == d:
            logdet = np.linalg.slogdet(mats)[1]
            cum = np.concatenate([[0.], np.cumsum(logdet)])
            for length in range(1, max_length + 1):
                vol[:num - length + 1, length] = cum[length:] - cum[:num - length + 1]
            result[k] = vol
            continue

        if wedge_dim(d, k) <= MAX_WEDGE_DIM:
            factors = wedge(mats, k)
            current = factors.copy()
            scale = np.zeros(num)
            for length in range(1, max_length + 1):
                count = num - length + 1
                if length > 1:
                    nxt = factors[length - 1:]
                    current = current[:count] @ nxt if left_to_right else nxt @ current[:count]
                    scale = scale[:count]
                norms = np.linalg.norm(current, axis=(1, 2))
                current = current / norms[:, None, None]
                scale = scale + np.log(norms)
                vol[:count, length] = scale + np.log(np.linalg.norm(current, ord=2, axis=(1, 2)))
        else:
            plain = _window_log_sigmas_plain(mats, left_to_right, max_length)
            vol = np.concatenate([np.zeros((num, 1)), plain[:, 1:, :k].sum(axis=-1)], axis=1)
            vol[:, 0] = 0.
        result[k] = vol

    return result


def _mask_windows(vol: np.ndarray, max_length: int) -> np.ndarray:
    num = vol.shape[0]
    n, length = np.meshgrid(np.arange(num), np.arange(num + 1), indexing="ij")
    vol = vol.copy()
    vol[(n + length > num) | (length > max_length)] = np.nan
    return vol


def _window_log_sigmas_plain(mats: np.ndarray, left_to_right: bool, max_length: int) -> np.ndarray:
    num, d = mats.shape[0], mats.shape[-1]
    out = np.full((num, num + 1, d), np.nan)
    current = mats.copy()
    scale = np.zeros(num)
    for length in range(1, max_length + 1):
        count = num - length + 1
        if length > 1:
            nxt = mats[length - 1:]
            current = current[:count] @ nxt if left_to_right else nxt @ current[:count]
            scale = scale[:count]
        norms = np.linalg.norm(current, axis=(1, 2))
        current = current / norms[:, None, None]
        scale = scale + np.log(norms)
        sigmas = np.linalg.svd(current, compute_uv=False)
        out[:count, length] = scale[:, None] + np.log(np.maximum(sigmas, 1e-300))
    return out


def log_gaps_from_volumes(volumes: Dict[int, np.ndarray], p: int) -> np.ndarray:
    """
    -log(sigma_{p+1} / sigma_p) from the log volumes of degrees p-1, p, p+1.
    """
    return 2 * volumes[p] - volumes[p - 1] - volumes[p + 1]


def window_log_gaps(
        mats: Sequence[np.ndarray],
        p: int,
        left_to_right: bool = False,
        max_length: Optional[int] = None,
) -> np.ndarray:
    """
    -log gap_ratio of every window product, shape (N, N + 1), see `window_log_volumes`.
    """
    d = np.asarray(mats[0]).shape[0]
    _check_index(d, p)
    volumes = window_log_volumes(mats, (p - 1, p, p + 1), left_to_right=left_to_right, max_length=max_length)
    return log_gaps_from_volumes(volumes, p)


def window_log_sigmas(
        mats: Sequence[np.ndarray],
        left_to_right: bool = False,
        max_length: Optional[int] = None,
) -> np.ndarray:
    """
    log sigma_1 >= ... >= log sigma_d of every window product, shape (N, N + 1, d).
    """
    d = np.asarray(mats[0]).shape[0]
    volumes = window_log_volumes(mats, range(d + 1), left_to_right=left_to_right, max_length=max_length)
    return np.stack([volumes[k] - volumes[k - 1] for k in range(1, d + 1)], axis=-1)


def tree_log_volumes(
        letter_mats: Sequence[np.ndarray],
        parent: np.ndarray,
        letter: np.ndarray,
        length: np.ndarray,
        degrees: Iterable[int],
) -> Dict[int, np.ndarray]:
    """
    Like `window_log_volumes` but along a tree of words, where element i
    is the product M(parent[i]) @ letter_mats[letter[i]] and the root
    (parent -1) is the identity.

    Elements must be sorted by `length`.
    """
    letter_mats = np.asarray(letter_mats, dtype=float)
    d = letter_mats.shape[-1]
    parent = np.asarray(parent)
    letter = np.asarray(letter)
    length = np.asarray(length)
    num = len(parent)
    result = dict()

    levels = [np.flatnonzero(length == n) for n in range(int(length.max()) + 1)] if num else []

    for k in sorted(set(degrees)):
        vol = np.zeros(num)
        if k == 0:
            result[k] = vol
            continue
        if k == d:
            logdet = np.linalg.slogdet(letter_mats)[1]
            for idx in levels[1:]:
                vol[idx] = vol[parent[idx]] + logdet[letter[idx]]
            result[k] = vol
            continue

        if wedge_dim(d, k) > MAX_WEDGE_DIM:
            factors = letter_mats
            mode = "plain"
        else:
            factors = wedge(letter_mats, k)
            mode = "wedge"

        m = factors.shape[-1]
        current = np.zeros((num, m, m))
        scale = np.zeros(num)
        for idx in levels:
            root = parent[idx] < 0
            if np.any(root):
                current[idx[root]] = np.eye(m)
            rest = idx[~root]
            if len(rest):
                prod = current[parent[rest]] @ factors[letter[rest]]
                norms = np.linalg.norm(prod, axis=(1, 2))
                current[rest] = prod / norms[:, None, None]
                scale[rest] = scale[parent[rest]] + np.log(norms)
        if mode == "wedge":
            vol = scale + np.log(np.linalg.norm(current, ord=2, axis=(1, 2)))
        else:
            sigmas = np.linalg.svd(current, compute_uv=False)
            vol = scale + np.log(np.maximum(sigmas[:, :k], 1e-300)).sum(axis=-1)
        result[k] = vol

    return result
