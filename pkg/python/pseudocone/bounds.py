from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import joblib
import numpy as np
from scipy.special import erfc
from scipy.stats import norm

from .fundamental_cone import GeneratorSet
from .gf2codes import Codeword, PseudoconeError
from .pseudogeometry import ChannelParams, Ray, angle_deg, angle_matrix, boundary_distance
from .spanning import CostMatrix, Tree, prim_mst

logger = logging.getLogger(__name__)

_STRIP_WIDTH_SIGMAS = 5e-4
_TRUNCATION_SIGMAS = 12.0
_EQUAL_RADIUS_RTOL = 1e-9
_DEFAULT_TARGET_FER = 1e-2
_CURVE_HEADER = ["snr_db", "lp_ub", "ilp_ub", "tree_cost", "seconds"]


class BoundError(PseudoconeError):
    pass


def q_func(x: Any) -> Any:
    result = 0.5 * erfc(np.asarray(x, dtype=np.float64) / math.sqrt(2.0))
    if np.ndim(result) == 0:
        return float(result)
    return result


def q_inv(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise BoundError(f"Probability must lie in (0, 1), got {p}")
    return float(norm.isf(p))


@dataclass(frozen=True)
class PairGeometry:
    r_i: float
    r_j: float
    theta_deg: float
    sigma: float

    def __post_init__(self) -> None:
        if self.r_i <= 0 or self.r_j <= 0:
            raise BoundError("Boundary distances must be positive")
        if not 0.0 <= self.theta_deg <= 90.0:
            raise BoundError(f"Angle must lie in [0, 90] degrees, got {self.theta_deg}")
        if self.sigma <= 0:
            raise BoundError("Noise standard deviation must be positive")

    @staticmethod
    def from_rays(first: Ray, second: Ray, channel: ChannelParams) -> "PairGeometry":
        return PairGeometry(r_i=boundary_distance(first, channel),
                            r_j=boundary_distance(second, channel),
                            theta_deg=angle_deg(first, second),
                            sigma=channel.sigma)

    @property
    def theta_rad(self) -> float:
        return math.radians(self.theta_deg)

    @property
    def q_i(self) -> float:
        return q_func(self.r_i / self.sigma)

    @property
    def q_j(self) -> float:
        return q_func(self.r_j / self.sigma)


def _pair_terms(r_i: np.ndarray,
                r_j: np.ndarray,
                theta_rad: np.ndarray,
                sigma: float) -> Tuple[np.ndarray, np.ndarray]:
    q_i = q_func(np.asarray(r_i, dtype=np.float64) / sigma)
    q_j = q_func(np.asarray(r_j, dtype=np.float64) / sigma)
    r_far = np.maximum(r_i, r_j)
    sector = np.asarray(theta_rad, dtype=np.float64) / (2.0 * math.pi) * np.exp(-(r_far ** 2) / (2.0 * sigma * sigma))
    q_near = np.maximum(q_i, q_j)
    q_far = np.minimum(q_i, q_j)
    wedge = q_far - sector
    product = q_i * q_j
    use_wedge = wedge >= product
    lower = np.where(use_wedge, wedge, product)
    upper = np.where(use_wedge, q_near + sector, q_i + q_j - product)
    return lower, upper


def tripletwise_upper(geometry: PairGeometry) -> float:
    _, upper = _pair_terms(np.float64(geometry.r_i), np.float64(geometry.r_j),
                           np.float64(geometry.theta_rad), geometry.sigma)
    return float(upper)


def intersection_lower(geometry: PairGeometry) -> float:
    lower, _ = _pair_terms(np.float64(geometry.r_i), np.float64(geometry.r_j),
                           np.float64(geometry.theta_rad), geometry.sigma)
    return float(lower)


def tripletwise_numeric(geometry: PairGeometry,
                        xi_max: Optional[float] = None,
                        dxi: Optional[float] = None) -> float:
    if not math.isclose(geometry.r_i, geometry.r_j, rel_tol=_EQUAL_RADIUS_RTOL):
        raise BoundError("Strip summation needs equal boundary distances")
    if geometry.theta_deg <= 0:
        raise BoundError("Strip summation needs a positive angle")
    sigma = geometry.sigma
    step = _STRIP_WIDTH_SIGMAS * sigma if dxi is None else float(dxi)
    if step <= 0:
        raise BoundError("Strip width must be positive")
    start = geometry.r_j
    stop = start + _TRUNCATION_SIGMAS * sigma if xi_max is None else float(xi_max)
    if stop < start:
        raise BoundError("Truncation point lies left of the intersection")
    theta = geometry.theta_rad
    slope = math.cos(theta) / math.sin(theta)
    intercept = geometry.r_i / math.sin(theta)
    strips = int(math.floor((stop - start) / step))
    left = start + step * np.arange(strips + 1, dtype=np.float64)
    middle = left + 0.5 * step
    below_line = q_func(-(-slope * middle + intercept) / sigma)
    mass = q_func(left / sigma) - q_func((left + step) / sigma)
    return geometry.q_i + math.fsum((below_line * mass).tolist())


def planar_union_mc(geometry: PairGeometry, samples: int, seed: int) -> Tuple[float, float]:
    if samples < 2:
        raise BoundError("Monte-Carlo oracle needs at least 2 samples")
    sigma = geometry.sigma
    theta = geometry.theta_rad
    normal_i = np.array([math.cos(theta), math.sin(theta)])
    normal_j = np.array([1.0, 0.0])
    centre_i = geometry.r_i * normal_i
    centre_j = geometry.r_j * normal_j
    rng = np.random.default_rng(seed)
    pick_i = rng.random(samples) < 0.5
    points = sigma * rng.standard_normal((samples, 2)) + np.where(pick_i[:, None], centre_i, centre_j)
    hit = (points @ normal_i >= geometry.r_i) | (points @ normal_j >= geometry.r_j)
    log_i = (points @ centre_i - 0.5 * float(centre_i @ centre_i)) / (sigma * sigma)
    log_j = (points @ centre_j - 0.5 * float(centre_j @ centre_j)) / (sigma * sigma)
    weights = np.exp(-(np.logaddexp(log_i, log_j) - math.log(2.0)))
    values = np.where(hit, weights, 0.0)
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(samples))


def pairwise_error(ray: Ray, channel: ChannelParams) -> float:
    return q_func(boundary_distance(ray, channel) / channel.sigma)


def _radii(generators: GeneratorSet, channel: ChannelParams) -> np.ndarray:
    return channel.gamma * np.sqrt(generators.pseudo_weights)


def lp_union_bound(generators: GeneratorSet, channel: ChannelParams) -> float:
    if len(generators) == 0:
        raise BoundError("Union bound needs at least one generator")
    terms = q_func(_radii(generators, channel) / channel.sigma)
    return math.fsum(np.atleast_1d(terms).tolist())


def ml_union_bound(codewords: Sequence[Codeword], channel: ChannelParams) -> float:
    weights = np.array([cw.hamming_weight for cw in codewords if cw.hamming_weight > 0], dtype=np.float64)
    if weights.size == 0:
        raise BoundError("ML union bound needs at least one nonzero codeword")
    terms = q_func(channel.gamma * np.sqrt(weights) / channel.sigma)
    return math.fsum(np.atleast_1d(terms).tolist())


def intersection_matrix(radii: np.ndarray, angles_deg: np.ndarray, sigma: float) -> np.ndarray:
    theta = np.radians(angles_deg)
    lower, _ = _pair_terms(radii[:, None], radii[None, :], theta, sigma)
    lower = np.array(lower, dtype=np.float64)
    np.fill_diagonal(lower, 0.0)
    return lower


def hunter_bound(pairwise: Sequence[float],
                 intersections: np.ndarray,
                 edges: Sequence[Tuple[int, int]]) -> float:
    return math.fsum(pairwise) - math.fsum(float(intersections[i, j]) for i, j in edges)


def ilp_union_from_geometry(radii: Sequence[float],
                            angles_deg: np.ndarray,
                            sigma: float) -> Tuple[float, Tree]:
    radii = np.asarray(radii, dtype=np.float64).reshape(-1)
    if radii.size == 0:
        raise BoundError("Union bound needs at least one generator")
    pairwise = np.atleast_1d(q_func(radii / sigma)).tolist()
    if radii.size == 1:
        return math.fsum(pairwise), Tree(1, [], 0.0)
    weights = intersection_matrix(radii, np.asarray(angles_deg, dtype=np.float64), sigma)
    heaviest = prim_mst(CostMatrix(weights).negated())
    tree_weight = math.fsum(float(weights[i, j]) for i, j in heaviest.edges)
    tree = Tree(heaviest.size, heaviest.edges, tree_weight)
    return hunter_bound(pairwise, weights, tree.edges), tree


def _ilp_from_angles(generators: GeneratorSet,
                     angles: np.ndarray,
                     channel: ChannelParams) -> Tuple[float, Tree]:
    return ilp_union_from_geometry(_radii(generators, channel), angles, channel.sigma)


def ilp_union_bound(generators: GeneratorSet, channel: ChannelParams) -> Tuple[float, Tree]:
    if len(generators) == 0:
        raise BoundError("Union bound needs at least one generator")
    angles = angle_matrix(generators.matrix()) if len(generators) > 1 else np.zeros((1, 1))
    return _ilp_from_angles(generators, angles, channel)


@dataclass
class BoundPoint:
    snr_db: float
    lp_ub: float
    ilp_ub: float
    tree_cost: float
    seconds: float
    tree_edges: List[Tuple[int, int]] = field(default_factory=list, compare=False)

    def row(self) -> List[float]:
        return [self.snr_db, self.lp_ub, self.ilp_ub, self.tree_cost, self.seconds]


@dataclass
class BoundCurve:
    points: List[BoundPoint] = field(default_factory=list)
    provenance: Dict[str, Any] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        if name not in _CURVE_HEADER:
            raise BoundError(f"Unknown curve column: {name}")
        return np.array([getattr(point, name) for point in self.points], dtype=np.float64)


def _curve_point(generators: GeneratorSet,
                 angles: np.ndarray,
                 channel: ChannelParams,
                 timing: bool) -> BoundPoint:
    started = time.perf_counter()
    lp_ub = lp_union_bound(generators, channel)
    ilp_ub, tree = _ilp_from_angles(generators, angles, channel)
    seconds = time.perf_counter() - started if timing else 0.0
    logger.info("bounds at %s dB: lp %.6e ilp %.6e", channel.snr_db, lp_ub, ilp_ub)
    return BoundPoint(float(channel.snr_db), lp_ub, ilp_ub, tree.total_cost, seconds, list(tree.edges))


def bound_curve(generators: GeneratorSet,
                snr_grid: Sequence[float],
                rate: float,
                threads: int = 1,
                timing: bool = True) -> BoundCurve:
    if not snr_grid:
        raise BoundError("SNR grid is empty")
    if len(generators) == 0:
        raise BoundError("Generator set is empty")
    angles = angle_matrix(generators.matrix()) if len(generators) > 1 else np.zeros((1, 1))
    channels = [ChannelParams(snr_db=float(snr), rate=float(rate)) for snr in snr_grid]
    if threads > 1:
        points = joblib.Parallel(n_jobs=threads, backend="threading")(
            joblib.delayed(_curve_point)(generators, angles, channel, timing) for channel in channels
        )
    else:
        points = [_curve_point(generators, angles, channel, timing) for channel in channels]
    provenance = {"source": generators.source, "matrix_id": generators.matrix_id,
                  "generators": len(generators), "rate": float(rate)}
    return BoundCurve(points=list(points), provenance=provenance)


def snr_at_fer(snr_db: Sequence[float], values: Sequence[float], target: float = _DEFAULT_TARGET_FER) -> float:
    if target <= 0:
        raise BoundError("Target FER must be positive")
    snr = np.asarray(snr_db, dtype=np.float64)
    fer = np.asarray(values, dtype=np.float64)
    if snr.size != fer.size or snr.size == 0:
        raise BoundError("SNR and value columns must be nonempty and equally long")
    if fer[0] <= target:
        if fer[0] == target:
            return float(snr[0])
        raise BoundError(f"Curve is already below {target} at {snr[0]} dB")
    for k in range(1, snr.size):
        if fer[k] <= target:
            hi, lo = math.log10(fer[k - 1]), math.log10(max(fer[k], np.finfo(float).tiny))
            frac = (hi - math.log10(target)) / (hi - lo)
            return float(snr[k - 1] + frac * (snr[k] - snr[k - 1]))
    raise BoundError(f"Curve never reaches {target}")


def db_gap(curve: BoundCurve, target: float = _DEFAULT_TARGET_FER) -> float:
    snr = curve.column("snr_db")
    return snr_at_fer(snr, curve.column("lp_ub"), target) - snr_at_fer(snr, curve.column("ilp_ub"), target)


def _format_number(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def write_bound_curve(curve: BoundCurve, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(_CURVE_HEADER)
        for point in curve.points:
            writer.writerow([_format_number(v) for v in point.row()])


def write_bound_trees(curve: BoundCurve, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["snr_db", "edge_i", "edge_j"])
        for point in curve.points:
            for i, j in point.tree_edges:
                writer.writerow([_format_number(point.snr_db), i, j])
