"""
Representations of the supported groups into GL(d, R) and
the empirical side of p-domination: gaps over balls, limit maps,
limit sets and eigenvalue gaps.
"""
import dataclasses
from pathlib import Path
from typing import Optional, Tuple, List, Sequence, Union, Mapping, Any

import numpy as np
from scipy import stats
from tqdm import tqdm

from .ball_walker import Ball, ball
from .cocycle import Verdict
from .config import (
    INVERSE_TOL, PROJECTIVE_TOL, TOL_GAP, BURN_IN, BALL_CAP, LIMIT_RESIDUAL, DEDUPE_RESOLUTION,
    DOMINATION_RADIUS,
)
from .errors import (
    InvalidInput, InvalidRepresentation, DimensionMismatch, NotDominated,
    DidNotConverge, NoGap, UnsupportedFamily, InternalConsistencyError,
)
from .group import (
    GroupPresentation, Word, normalize, word_length, cyclic_representatives, translation_length,
    presentation_from_json, syllables,
)
from . import matgeo
from .matgeo import Subspace
from .util import matrix_from_json, read_json

DEFAULT_LIMIT_DEPTH = 60


@dataclasses.dataclass(frozen=True, eq=False)
class Representation:
    pres: GroupPresentation
    # image of every generator, in generator order
    images: np.ndarray
    unimodular: bool = False
    name: str = ""

    @property
    def d(self) -> int:
        return self.images.shape[-1]

    def image(self, generator: Union[int, str]) -> np.ndarray:
        if isinstance(generator, str):
            generator = self.pres._index(generator)
        return self.images[generator]

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "presentation": self.pres.to_json(),
            "d": self.d,
            "images": {n: self.images[i] for i, n in enumerate(self.pres.names)},
            "unimodular": self.unimodular,
        }


def make_representation(
        pres: GroupPresentation,
        images: Mapping[Union[str, int], Any],
        unimodular: bool = False,
        name: str = "",
) -> Representation:
    """
    Build a representation from the images of (some of) the generators.

    Missing images of inverse generators are computed. Inverse pairs must
    multiply to the identity and relators must evaluate to +-identity.
    """
    by_index = dict()
    for key, value in images.items():
        try:
            index = pres._index(key) if isinstance(key, str) else int(key)
        except InvalidInput:
            raise InvalidRepresentation(f"Image for unknown generator '{key}'")
        by_index[index] = matgeo.check_matrix(value, f"image of '{pres.names[index]}'")

    mats = []
    for i, gen in enumerate(pres.names):
        if i in by_index:
            mats.append(by_index[i])
        elif pres.inverses[i] in by_index:
            mats.append(np.linalg.inv(by_index[pres.inverses[i]]))
        else:
            raise InvalidRepresentation(f"No image for generator '{gen}' or its inverse")

    if len({m.shape for m in mats}) > 1:
        raise DimensionMismatch("Generator images have different dimensions")

    if unimodular:
        d = mats[0].shape[0]
        mats = [m / abs(np.linalg.det(m)) ** (1. / d) for m in mats]

    images = np.array(mats) if mats else np.zeros((0, 2, 2))
    for i, j in enumerate(pres.inverses):
        prod = images[i] @ images[j]
        identity = np.eye(prod.shape[0])
        if i == j:
            # self inverse letters are only inverse up to sign
            ok = matgeo.projective_equal(prod, identity, PROJECTIVE_TOL)
        else:
            scale = max(1., np.linalg.norm(images[i], 2) * np.linalg.norm(images[j], 2))
            ok = np.linalg.norm(prod - identity, 2) <= INVERSE_TOL * scale
        if not ok:
            raise InvalidRepresentation(
                f"Images of '{pres.names[i]}' and '{pres.names[j]}' are not inverse to each other"
            )

    rep = Representation(pres=pres, images=images, unimodular=unimodular, name=name)
    for relator in pres.relators:
        value = evaluate(rep, relator)
        if not matgeo.projective_equal(value, np.eye(rep.d), PROJECTIVE_TOL):
            raise InvalidRepresentation(f"Relator '{pres.format(relator)}' does not evaluate to +-identity")
    return rep


def representation_from_json(data: dict, base_dir: Optional[Path] = None) -> Representation:
    """
    {"presentation": {...}, "d": d, "images": {"a": matrix, ...}, "unimodular": bool}
    """
    from .cone_types import GeodesicAutomaton

    if not isinstance(data, dict):
        raise InvalidInput("Representation must be an object")

    def _load_automaton(pres_data: dict):
        if pres_data.get("automaton"):
            auto_data = pres_data["automaton"]
        elif pres_data.get("automaton_file"):
            auto_data = read_json(Path(base_dir or ".") / pres_data["automaton_file"])
        else:
            raise InvalidInput("Automaton presentations need 'automaton' or 'automaton_file'")
        return GeodesicAutomaton.from_json(auto_data, names=pres_data.get("generators"))

    pres = presentation_from_json(data.get("presentation") or {}, automaton_loader=_load_automaton)
    raw_images = data.get("images")
    if not isinstance(raw_images, dict) or not raw_images:
        raise InvalidInput("Representation needs an 'images' object")
    images = {key: matrix_from_json(value, f"image of '{key}'") for key, value in raw_images.items()}
    rep = make_representation(pres, images, unimodular=bool(data.get("unimodular")), name=data.get("name") or "")
    if data.get("d") is not None and int(data["d"]) != rep.d:
        raise DimensionMismatch(f"Declared d={data['d']} but images are {rep.d}x{rep.d}")
    return rep


# --- evaluation ---

def evaluate(rep: Representation, word: Sequence[int]) -> np.ndarray:
    """
    rho(w0) rho(w1) ... rho(wn)
    """
    result = np.eye(rep.d)
    for x in word:
        result = result @ rep.images[x]
    return result


def evaluate_scaled(rep: Representation, word: Sequence[int]) -> Tuple[np.ndarray, float]:
    """
    Like `evaluate` but as (M, log_scale) with |M|_F = 1, for long words.
    """
    if not word:
        return np.eye(rep.d) / np.sqrt(rep.d), .5 * np.log(rep.d)
    return matgeo.renormalized_product((rep.images[x] for x in word), left_to_right=True)


def ball_products(rep: Representation, b: Ball) -> Tuple[np.ndarray, np.ndarray]:
    """
    The images of all ball elements as (M, log_scale) arrays, each M of unit norm.
    """
    num = len(b)
    mats = np.zeros((num, rep.d, rep.d))
    scale = np.zeros(num)
    for n in range(b.radius + 1):
        idx = b.sphere(n)
        if n == 0:
            mats[idx] = np.eye(rep.d) / np.sqrt(rep.d)
            scale[idx] = .5 * np.log(rep.d)
            continue
        prod = mats[b.parents[idx]] @ rep.images[b.letters[idx]]
        norms = np.linalg.norm(prod, axis=(1, 2))
        mats[idx] = prod / norms[:, None, None]
        scale[idx] = scale[b.parents[idx]] + np.log(norms)
    return mats, scale


def ball_log_gaps(rep: Representation, b: Ball, p: int) -> np.ndarray:
    """
    -log(sigma_{p+1} / sigma_p) of the image of every ball element
    """
    matgeo._check_index(rep.d, p)
    volumes = matgeo.tree_log_volumes(rep.images, b.parents, b.letters, b.lengths, (p - 1, p, p + 1))
    return matgeo.log_gaps_from_volumes(volumes, p)


# --- domination over balls ---

@dataclasses.dataclass
class DominationReport:
    p: int
    radius: int
    per_length_min_gap: List[float]
    per_length_mean_gap: List[float]
    sphere_sizes: List[int]
    lambda_hat: float
    C_hat: float
    burn_in: int
    # element with the smallest gap - lambda_hat * length
    worst_element: str
    min_margin: float
    symmetry_residual: float
    verdict: Verdict
    notes: List[str] = dataclasses.field(default_factory=list)

    def bound(self, length: Union[int, np.ndarray]) -> Union[float, np.ndarray]:
        return self.C_hat * np.exp(-self.lambda_hat * np.asarray(length))

    def rows(self) -> List[dict]:
        return [
            {
                "length": n,
                "count": self.sphere_sizes[n],
                "min_gap": self.per_length_min_gap[n],
                "mean_gap": self.per_length_mean_gap[n],
                "fitted_bound": float(-np.log(self.bound(n))),
            }
            for n in range(self.radius + 1)
        ]

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "radius": self.radius,
            "verdict": self.verdict.value,
            "lambda_hat": {"value": self.lambda_hat, "provenance": "fitted"},
            "C_hat": {"value": self.C_hat, "provenance": "fitted"},
            "burn_in": self.burn_in,
            "worst_element": self.worst_element,
            "min_margin": self.min_margin,
            "symmetry_residual": self.symmetry_residual,
            "per_length_min_gap": self.per_length_min_gap,
            "per_length_mean_gap": self.per_length_mean_gap,
            "sphere_sizes": self.sphere_sizes,
            "notes": self.notes,
        }


def _per_length(gaps: np.ndarray, b: Ball) -> Tuple[List[float], List[float]]:
    mins, means = [], []
    for n in range(b.radius + 1):
        values = gaps[b.lengths == n]
        mins.append(float(values.min()) if len(values) else float("nan"))
        means.append(float(values.mean()) if len(values) else float("nan"))
    return mins, means


def domination_report(
        rep: Representation,
        p: int,
        radius: int,
        burn_in: int = BURN_IN,
        tol_gap: float = TOL_GAP,
        cap: int = BALL_CAP,
        verbose: bool = False,
) -> DominationReport:
    """
    Fit  sigma_{p+1} / sigma_p (rho(g)) <= C exp(-lambda |g|)  over the ball of `radius`.

    Dominated needs a positive slope with per-length minimum gaps
    increasing at stride two after `burn_in`. Products of maximal length
    without any gap give NotDominated, everything else is Inconclusive.
    """
    matgeo._check_index(rep.d, p)
    if radius < burn_in + 2:
        raise InvalidInput(f"Radius {radius} is too small for burn in {burn_in}")

    b = ball(rep.pres, radius, cap=cap, verbose=verbose)
    gaps = ball_log_gaps(rep, b, p)
    mins, means = _per_length(gaps, b)

    dual = p if 2 * p == rep.d else rep.d - p
    dual_gaps = gaps if dual == p else ball_log_gaps(rep, b, dual)
    dual_mins, _ = _per_length(dual_gaps, b)
    finite = [n for n in range(radius + 1) if not np.isnan(mins[n])]
    symmetry_residual = float(max((abs(mins[n] - dual_mins[n]) for n in finite), default=0.))
    if symmetry_residual > 1e-9 * max(1., max(abs(mins[n]) for n in finite)):
        raise InternalConsistencyError(
            f"Gaps of index {p} and {dual} differ by {symmetry_residual} over a symmetric ball"
        )

    lengths = np.array([n for n in finite if n >= burn_in])
    values = np.array([mins[n] for n in lengths])
    notes = []
    if len(lengths) >= 2 and np.ptp(values) > 0:
        fit = stats.linregress(lengths, values)
        lambda_hat = max(0., float(fit.slope))
    else:
        lambda_hat = 0.

    # smallest log C with gap(g) >= lambda |g| - log C on the whole ball
    nonzero = b.lengths > 0
    margins = gaps[nonzero] - lambda_hat * b.lengths[nonzero]
    if len(margins):
        log_c = max(0., float(-margins.min()))
        worst = int(np.flatnonzero(nonzero)[int(np.argmin(margins))])
        min_margin = float(margins.min())
    else:
        log_c, worst, min_margin = 0., 0, 0.
    C_hat = float(np.exp(log_c) * (1. + 1e-9))

    increasing = all(
        mins[n + 2] > mins[n]
        for n in range(burn_in, radius - 1)
        if not np.isnan(mins[n + 2])
    )
    longest = [n for n in finite if n > burn_in]
    if longest and mins[longest[-1]] <= -np.log1p(-tol_gap):
        verdict = Verdict.NotDominated
        notes.append(f"elements of length {longest[-1]} have no gap of index {p}")
    elif lambda_hat > 0 and increasing:
        verdict = Verdict.Dominated
    else:
        verdict = Verdict.Inconclusive
        if not increasing:
            notes.append(f"per-length minimum gaps are not increasing after length {burn_in}")

    return DominationReport(
        p=p,
        radius=radius,
        per_length_min_gap=mins,
        per_length_mean_gap=means,
        sphere_sizes=b.sphere_sizes(),
        lambda_hat=lambda_hat,
        C_hat=C_hat,
        burn_in=burn_in,
        worst_element=rep.pres.format(b.words[worst]),
        min_margin=min_margin,
        symmetry_residual=symmetry_residual,
        verdict=verdict,
        notes=notes,
    )


# --- boundary ---

@dataclasses.dataclass(frozen=True)
class BoundaryRay:
    """
    The eventually periodic geodesic ray prefix * period * period * ...
    """
    prefix: Word
    period: Word

    def __post_init__(self):
        if not self.period:
            raise InvalidInput("Boundary ray needs a non-empty period")

    @classmethod
    def parse(cls, pres: GroupPresentation, text: str) -> "BoundaryRay":
        """
        "u(v)" for u v v v ..., or "(v)"
        """
        text = text.strip()
        if "(" not in text or not text.endswith(")"):
            raise InvalidInput(f"Ray must look like 'prefix(period)', got '{text}'")
        prefix, period = text[:-1].split("(", 1)
        return cls(prefix=pres.parse(prefix), period=pres.parse(period))

    def format(self, pres: GroupPresentation) -> str:
        prefix = pres.format(self.prefix) if self.prefix else ""
        return f"{prefix}({pres.format(self.period)})"

    def word(self, n: int) -> Word:
        """
        The first n letters
        """
        if n <= len(self.prefix):
            return self.prefix[:n]
        rest = n - len(self.prefix)
        repeat = self.period * (rest // len(self.period) + 1)
        return self.prefix + repeat[:rest]

    def prefixes(self, n: int) -> List[Word]:
        return [self.word(k) for k in range(1, n + 1)]

    def check_geodesic(self, pres: GroupPresentation, n: int):
        for k in range(1, n + 1):
            if word_length(pres, self.word(k)) != k:
                raise InvalidInput(f"Ray '{self.format(pres)}' is not geodesic at length {k}")

    def translate(self, pres: GroupPresentation, g: Sequence[int]) -> "BoundaryRay":
        """
        The ray g * self, with the cancellation worked into the prefix.
        """
        g = tuple(g)
        copies = len(g) // len(self.period) + 2
        head = normalize(pres, g + self.prefix + self.period * copies)
        return BoundaryRay(prefix=head, period=self.period)

    def to_json(self) -> dict:
        return {"prefix": list(self.prefix), "period": list(self.period)}


def periodic_rays(pres: GroupPresentation, max_period: int, check_length: int = 12) -> List[BoundaryRay]:
    """
    Rays (v) for the primitive cyclically reduced words v of length <= max_period
    whose powers stay geodesic, one per rotation class.
    """
    b = ball(pres, max_period)
    words, _ = cyclic_representatives(pres, b.words[1:])
    rays = []
    for w in words:
        # skip proper powers
        if any(len(w) % k == 0 and w == w[:k] * (len(w) // k) for k in range(1, len(w))):
            continue
        ray = BoundaryRay(prefix=(), period=w)
        try:
            ray.check_geodesic(pres, max(check_length, 2 * len(w)))
        except InvalidInput:
            continue
        rays.append(ray)
    return rays


@dataclasses.dataclass(frozen=True, eq=False)
class LimitPoint:
    space: Subspace
    # distance of the last two approximants
    residual: float
    depth: int
    # distance to rho(prefix) applied to the attracting subspace of rho(period)
    oracle_residual: Optional[float]
    increments: Tuple[float, ...] = ()

    def to_json(self) -> dict:
        return {
            "space": self.space.to_json(),
            "residual": self.residual,
            "depth": self.depth,
            "oracle_residual": self.oracle_residual,
        }


def _require_dominated(
        rep: Representation,
        p: int,
        report: Optional[DominationReport],
        radius: int = DOMINATION_RADIUS,
        tol_gap: float = TOL_GAP,
        cap: int = BALL_CAP,
) -> DominationReport:
    """
    The report of index p (or d - p), computed over the ball of `radius`
    when not given. Any verdict but Dominated raises NotDominated.
    """
    if report is None:
        report = domination_report(rep, p, radius, tol_gap=tol_gap, cap=cap)
    elif report.p not in (p, rep.d - p):
        raise InvalidInput(f"Domination report of index {report.p} does not apply to index {p}")
    if report.verdict != Verdict.Dominated:
        raise NotDominated(f"Representation is not shown to be {p}-dominated, verdict {report.verdict.value}")
    return report


def limit_map(
        rep: Representation,
        p: int,
        ray: BoundaryRay,
        depth: int = DEFAULT_LIMIT_DEPTH,
        residual_target: float = LIMIT_RESIDUAL,
        report: Optional[DominationReport] = None,
        tol_gap: float = TOL_GAP,
) -> LimitPoint:
    """
    lim U_p(rho(g_n)) over the prefixes g_n of `ray`.

    The prefixes must be geodesic and the representation Dominated,
    `report` is computed when not given.
    """
    matgeo._check_index(rep.d, p)
    if depth < 2:
        raise InvalidInput(f"Depth must be at least 2, got {depth}")
    ray.check_geodesic(rep.pres, depth)
    _require_dominated(rep, p, report, tol_gap=tol_gap)

    word = ray.word(depth)
    product = np.eye(rep.d)
    spaces = []
    for x in word:
        product = product @ rep.images[x]
        product /= np.linalg.norm(product)
        spaces.append(matgeo.top_space(product, p))

    sigmas = matgeo.singular_values(product)
    if sigmas[p] / sigmas[p - 1] >= 1. - tol_gap:
        raise NotDominated(f"No gap of index {p} along the ray '{ray.format(rep.pres)}'")

    increments = tuple(
        matgeo.grassmann_distance(spaces[i], spaces[i + 1])
        for i in range(len(spaces) - 1)
    )
    residual = increments[-1]
    if residual > residual_target:
        raise DidNotConverge(
            f"Limit along '{ray.format(rep.pres)}' did not converge, residual {residual:.3g} at depth {depth}",
            residual=residual, depth=depth,
        )

    oracle_residual = None
    try:
        attracting = matgeo.dominant_subspace(evaluate(rep, ray.period), p)
        oracle = matgeo.image(evaluate(rep, ray.prefix), attracting)
        oracle_residual = matgeo.grassmann_distance(spaces[-1], oracle)
    except NoGap:
        pass

    return LimitPoint(
        space=spaces[-1],
        residual=residual,
        depth=depth,
        oracle_residual=oracle_residual,
        increments=increments,
    )


@dataclasses.dataclass(frozen=True, eq=False)
class LimitSetSample:
    radius: int
    points: Tuple[Subspace, ...]
    num_raw: int
    # per moving element: directed Hausdorff defect and its bound
    invariance: Tuple[dict, ...]

    @property
    def invariant(self) -> bool:
        return all(row["defect"] <= row["bound"] for row in self.invariance)

    def to_json(self) -> dict:
        return {
            "radius": self.radius,
            "num_raw": self.num_raw,
            "points": [pt.to_json() for pt in self.points],
            "invariance": list(self.invariance),
            "invariant": self.invariant,
        }


def _dedupe(spaces: Sequence[Subspace], resolution: float) -> List[Subspace]:
    seen = set()
    result = []
    for s in spaces:
        key = tuple(np.round(matgeo.plucker_embed(s) / resolution).astype(np.int64))
        if key not in seen:
            seen.add(key)
            result.append(s)
    return result


def limit_set_sample(
        rep: Representation,
        p: int,
        radius: int,
        report: Optional[DominationReport] = None,
        resolution: float = DEDUPE_RESOLUTION,
        cap: int = BALL_CAP,
) -> LimitSetSample:
    """
    U_p(rho(g)) over the sphere of `radius`, with a check of
    the rho-invariance of the sample by elements of length <= 2.
    """
    matgeo._check_index(rep.d, p)
    report = _require_dominated(rep, p, report, radius=max(radius, BURN_IN + 2), cap=cap)

    b = ball(rep.pres, radius + 2, cap=cap)
    mats, _ = ball_products(rep, b)

    def _sample(n: int) -> List[Subspace]:
        return [matgeo.top_space(mats[i], p) for i in b.sphere(n)]

    raw = _sample(radius)
    points = _dedupe(raw, resolution)
    near = _dedupe(
        [s for n in range(max(0, radius - 2), radius + 3) if n > 0 for s in _sample(n)],
        resolution,
    )

    invariance = []
    for i in range(1, len(b)):
        if b.lengths[i] > 2:
            continue
        a = evaluate(rep, b.words[i])
        moved = [matgeo.image(a, s) for s in points]
        kappa = float(np.linalg.cond(a, 2))
        invariance.append({
            "element": rep.pres.format(b.words[i]),
            "defect": matgeo.hausdorff_distance(moved, near, directed=True),
            "bound": float(report.C_hat * np.exp(-report.lambda_hat * radius) * kappa + 10 * resolution),
        })

    return LimitSetSample(
        radius=radius,
        points=tuple(points),
        num_raw=len(raw),
        invariance=tuple(invariance),
    )


# --- eigenvalues ---

@dataclasses.dataclass
class EigenvalueGapReport:
    p: int
    rows: List[dict]
    lambda_prime: float
    C_prime: float
    # conjugacy classes are exact for free groups and free products
    exact_classes: bool
    note: str = "A positive eigenvalue gap fit does not certify domination."

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "lambda_prime": {"value": self.lambda_prime, "provenance": "fitted"},
            "C_prime": {"value": self.C_prime, "provenance": "fitted"},
            "exact_classes": self.exact_classes,
            "note": self.note,
            "rows": self.rows,
        }


def eigenvalue_gap_report(
        rep: Representation,
        p: int,
        radius: int,
        n_pow: int = 16,
        cap: int = BALL_CAP,
        verbose: bool = False,
) -> EigenvalueGapReport:
    """
    Ratio of the (p+1)-th to the p-th eigenvalue modulus against the
    translation length, over conjugacy class representatives in the ball.
    """
    matgeo._check_index(rep.d, p)
    b = ball(rep.pres, radius, cap=cap)
    words, exact = cyclic_representatives(rep.pres, b.words[1:])

    iterable = words
    if verbose:
        iterable = tqdm(iterable, desc="eigenvalues")

    rows = []
    for w in iterable:
        moduli = np.sort(np.abs(np.linalg.eigvals(evaluate(rep, w))))[::-1]
        ratio = float(moduli[p] / moduli[p - 1])
        tl = translation_length(rep.pres, w, n_max=n_pow)
        rows.append({
            "word": rep.pres.format(w),
            "length": len(w),
            "translation_length": tl.estimate,
            "translation_upper_bound": tl.upper_bound,
            "chi_ratio": ratio,
            "elliptic": bool(ratio >= 1. - 1e-9),
        })

    usable = [r for r in rows if not r["elliptic"] and r["translation_length"] > 0]
    lambda_prime = 0.
    if len(usable) >= 2:
        x = np.array([r["translation_length"] for r in usable])
        y = np.array([-np.log(r["chi_ratio"]) for r in usable])
        if np.ptp(x) > 0:
            lambda_prime = max(0., float(stats.linregress(x, y).slope))
    log_c = max(
        (lambda_prime * r["translation_length"] + np.log(r["chi_ratio"]) for r in usable),
        default=0.,
    )
    return EigenvalueGapReport(
        p=p,
        rows=rows,
        lambda_prime=lambda_prime,
        C_prime=float(np.exp(max(0., log_c)) * (1. + 1e-9)),
        exact_classes=exact,
    )


# --- diagnostics ---

@dataclasses.dataclass(frozen=True)
class PerturbationCheck:
    scale: float
    seed: int
    base_verdict: Verdict
    perturbed_verdict: Verdict
    perturbed_lambda_hat: float

    @property
    def preserved(self) -> bool:
        return self.base_verdict == self.perturbed_verdict


def perturb(rep: Representation, scale: float, rng: np.random.Generator) -> Representation:
    """
    A nearby representation of the same group.

    Free generators get additive noise of norm `scale`, the factors of a
    free product are conjugated independently by matrices `scale`-close to
    the identity, which keeps the relators.
    """
    pres = rep.pres
    d = rep.d

    def _noise() -> np.ndarray:
        n = rng.standard_normal((d, d))
        return scale * n / np.linalg.norm(n, 2)

    images = dict()
    if pres.family in ("free", "automaton"):
        for i, name in enumerate(pres.names):
            if pres.inverses[i] >= i:
                images[name] = rep.images[i] + _noise()
    elif pres.family == "free_product":
        conjugators = [np.eye(d) + _noise() for _ in range(2)]
        for i, name in enumerate(pres.names):
            factor = syllables(pres, (i,))[0][0]
            c = conjugators[factor]
            images[name] = c @ rep.images[i] @ np.linalg.inv(c)
    else:
        raise UnsupportedFamily(f"Can not perturb representations of family '{pres.family}'")
    return make_representation(pres, images, unimodular=rep.unimodular, name=rep.name)


def perturbation_check(
        rep: Representation,
        p: int,
        radius: int,
        scale: float = 1e-3,
        seed: int = 23,
) -> PerturbationCheck:
    rng = np.random.default_rng(seed)
    base = domination_report(rep, p, radius)
    perturbed = domination_report(perturb(rep, scale, rng), p, radius)
    return PerturbationCheck(
        scale=scale,
        seed=seed,
        base_verdict=base.verdict,
        perturbed_verdict=perturbed.verdict,
        perturbed_lambda_hat=perturbed.lambda_hat,
    )


def _gromov_product(x: BoundaryRay, y: BoundaryRay, depth: int) -> int:
    wx, wy = x.word(depth), y.word(depth)
    n = 0
    while n < depth and wx[n] == wy[n]:
        n += 1
    return n


@dataclasses.dataclass(frozen=True)
class HolderEstimate:
    alpha: float
    num_pairs: int
    rows: Tuple[dict, ...]


def holder_exponent(
        rep: Representation,
        p: int,
        rays: Sequence[BoundaryRay],
        depth: int = DEFAULT_LIMIT_DEPTH,
        report: Optional[DominationReport] = None,
) -> HolderEstimate:
    """
    Empirical exponent alpha in  d(xi(x), xi(y)) <= K exp(-alpha (x|y)),
    a diagnostic only.
    """
    report = _require_dominated(rep, p, report)
    points = [limit_map(rep, p, r, depth=depth, report=report).space for r in rays]
    rows = []
    for i in range(len(rays)):
        for j in range(i + 1, len(rays)):
            overlap = _gromov_product(rays[i], rays[j], depth)
            if overlap >= depth:
                continue
            dist = matgeo.grassmann_distance(points[i], points[j])
            if dist > 1e-14:
                rows.append({"gromov_product": overlap, "distance": dist})
    alpha = float("nan")
    if len(rows) >= 2:
        x = np.array([r["gromov_product"] for r in rows], dtype=float)
        y = np.log([r["distance"] for r in rows])
        if np.ptp(x) > 0:
            alpha = float(-stats.linregress(x, y).slope)
    return HolderEstimate(alpha=alpha, num_pairs=len(rows), rows=tuple(rows))


def transversality_of_limits(
        rep: Representation,
        p: int,
        rays: Sequence[BoundaryRay],
        depth: int = DEFAULT_LIMIT_DEPTH,
        report: Optional[DominationReport] = None,
) -> float:
    """
    Smallest angle between the p-limit of x and the (d-p)-limit of y over rays x != y.
    """
    report = _require_dominated(rep, p, report)
    first = [limit_map(rep, p, r, depth=depth, report=report).space for r in rays]
    second = first if 2 * p == rep.d else [
        limit_map(rep, rep.d - p, r, depth=depth, report=report).space for r in rays
    ]
    angles = [
        matgeo.angle(first[i], second[j])
        for i in range(len(rays))
        for j in range(len(rays))
        if i != j and _gromov_product(rays[i], rays[j], depth) < depth
    ]
    if not angles:
        raise InvalidInput("Need at least two distinct rays")
    return float(min(angles))
