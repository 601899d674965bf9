from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import joblib
import numpy as np
from scipy.optimize import linprog

from .gf2codes import BinaryMatrix, PseudoconeError
from .pseudogeometry import GeometryError, Ray, pseudo_weight

logger = logging.getLogger(__name__)

_ENUMERATION_MAX_DIM = 16
_DEFAULT_MAX_RAYS = 200_000
_WEIGHT_TOLERANCE = 1e-9
_FEASIBILITY_TOLERANCE = 1e-9
_SOURCES = {"enumerated", "sampled", "imported"}


class ConeError(PseudoconeError):
    pass


class DimensionGuardError(ConeError):
    pass


class RayBudgetError(ConeError):
    pass


@dataclass(frozen=True)
class InequalitySystem:
    dim: int
    constraints: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ConeError("Cone dimension must be positive")
        for row in self.constraints:
            if len(row) != self.dim:
                raise ConeError(f"Constraint has {len(row)} coefficients, expected {self.dim}")

    @staticmethod
    def orthant(dim: int) -> "InequalitySystem":
        return InequalitySystem(dim, tuple(_unit(dim, i) for i in range(dim)))

    def as_array(self) -> np.ndarray:
        return np.array(self.constraints, dtype=np.float64).reshape(len(self.constraints), self.dim)

    def satisfied_exactly(self, ray: Ray) -> bool:
        return all(sum(a * v for a, v in zip(row, ray.coords) if a) >= 0 for row in self.constraints)

    def satisfied(self, values: np.ndarray, tol: float = _FEASIBILITY_TOLERANCE) -> bool:
        scale = max(1.0, float(np.max(np.abs(values))))
        return bool(np.all(self.as_array() @ np.asarray(values, dtype=np.float64) >= -tol * scale))

    def __len__(self) -> int:
        return len(self.constraints)


def _unit(dim: int, i: int) -> Tuple[int, ...]:
    return tuple(1 if k == i else 0 for k in range(dim))


def cone_inequalities(matrix: BinaryMatrix) -> InequalitySystem:
    zero_rows = matrix.zero_rows()
    if zero_rows:
        raise ConeError(f"Parity-check matrix has an all-zero row: {zero_rows[0] + 1}")
    n = matrix.cols
    rows: List[Tuple[int, ...]] = [_unit(n, i) for i in range(n)]
    for j in range(matrix.rows):
        support = matrix.row_support(j)
        for i in support:
            coeffs = [0] * n
            for other in support:
                coeffs[other] = 1
            coeffs[i] = -1
            rows.append(tuple(coeffs))
    return InequalitySystem(n, tuple(rows))


@dataclass
class GeneratorSet:
    rays: List[Ray]
    source: str = "imported"
    matrix_id: str = ""

    def __post_init__(self) -> None:
        if self.source not in _SOURCES:
            raise ConeError(f"Unknown generator source: {self.source}")
        self.rays = list(self.rays)
        if len(set(self.rays)) != len(self.rays):
            raise ConeError("Generator set contains rays equal up to scale")
        if self.rays and len({ray.n for ray in self.rays}) != 1:
            raise ConeError("Generator set mixes ray lengths")

    @staticmethod
    def build(rays: Iterable[Ray], source: str = "imported", matrix_id: str = "") -> "GeneratorSet":
        unique: Dict[Ray, None] = {}
        for ray in rays:
            unique.setdefault(ray, None)
        return GeneratorSet(list(unique), source=source, matrix_id=matrix_id)

    def __len__(self) -> int:
        return len(self.rays)

    def __iter__(self) -> Iterator[Ray]:
        return iter(self.rays)

    def __getitem__(self, index: int) -> Ray:
        return self.rays[index]

    @property
    def n(self) -> int:
        if not self.rays:
            raise ConeError("Generator set is empty")
        return self.rays[0].n

    @cached_property
    def pseudo_weights(self) -> np.ndarray:
        return np.array([pseudo_weight(ray) for ray in self.rays], dtype=np.float64)

    def matrix(self) -> np.ndarray:
        if not self.rays:
            return np.zeros((0, 0), dtype=np.float64)
        return np.vstack([ray.values for ray in self.rays])

    def contains(self, ray: Ray) -> bool:
        return ray in set(self.rays)

    def index_of(self, ray: Ray) -> int:
        return self.rays.index(ray)

    def merged(self, other: "GeneratorSet") -> "GeneratorSet":
        return GeneratorSet.build(list(self.rays) + list(other.rays), source=self.source, matrix_id=self.matrix_id)

    def subset(self, indices: Sequence[int]) -> "GeneratorSet":
        return GeneratorSet([self.rays[i] for i in indices], source=self.source, matrix_id=self.matrix_id)


@dataclass
class WeightHistogram:
    bin_edges: List[float] = field(default_factory=list)
    counts: List[int] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def rows(self) -> List[Tuple[float, float, int]]:
        return [(self.bin_edges[k], self.bin_edges[k + 1], count) for k, count in enumerate(self.counts)]


def _sort_key(ray: Ray) -> Tuple[Fraction, Tuple[Fraction, ...]]:
    return (ray.l1 * ray.l1 / ray.l2sq, tuple(-v for v in ray.coords))


def _int_ray(values: Sequence[int]) -> Tuple[int, ...]:
    divisor = reduce(math.gcd, (abs(v) for v in values if v), 0)
    if divisor <= 1:
        return tuple(values)
    return tuple(v // divisor for v in values)


def _dot(row: Sequence[int], ray: Sequence[int]) -> int:
    return sum(a * v for a, v in zip(row, ray) if a and v)


def _zero_mask(rows: Sequence[Tuple[int, ...]], ray: Sequence[int]) -> int:
    mask = 0
    for k, row in enumerate(rows):
        if _dot(row, ray) == 0:
            mask |= 1 << k
    return mask


def _mask_rank(rows: Sequence[Tuple[int, ...]], mask: int) -> int:
    selected = [rows[k] for k in range(len(rows)) if (mask >> k) & 1]
    if not selected:
        return 0
    return int(np.linalg.matrix_rank(np.array(selected, dtype=np.float64)))


def enumerate_rays(system: InequalitySystem,
                   max_rays: int = _DEFAULT_MAX_RAYS,
                   matrix_id: str = "") -> GeneratorSet:
    n = system.dim
    if n > _ENUMERATION_MAX_DIM:
        raise DimensionGuardError(f"Exact enumeration is limited to n <= {_ENUMERATION_MAX_DIM}, got n={n}")
    unique_rows = list(dict.fromkeys(system.constraints))
    units = {_unit(n, i) for i in range(n)}
    if not units.issubset(unique_rows):
        raise ConeError("Exact enumeration needs every nonnegativity constraint w_i >= 0")
    pending = sorted((row for row in unique_rows if row not in units),
                     key=lambda row: sum(1 for a in row if a))
    processed: List[Tuple[int, ...]] = [_unit(n, i) for i in range(n)]
    rays: List[Tuple[int, ...]] = [_unit(n, i) for i in range(n)]
    masks: List[int] = [_zero_mask(processed, ray) for ray in rays]

    for step, row in enumerate(pending, start=1):
        values = [_dot(row, ray) for ray in rays]
        positive = [k for k, v in enumerate(values) if v > 0]
        negative = [k for k, v in enumerate(values) if v < 0]
        zero = [k for k, v in enumerate(values) if v == 0]
        bit = 1 << len(processed)
        next_rays: Dict[Tuple[int, ...], int] = {}
        for k in positive:
            next_rays.setdefault(rays[k], masks[k])
        for k in zero:
            next_rays.setdefault(rays[k], masks[k] | bit)
        target_rank = n - 2
        for p in positive:
            for q in negative:
                common = masks[p] & masks[q]
                if bin(common).count("1") < target_rank:
                    continue
                if _mask_rank(processed, common) != target_rank:
                    continue
                combined = _int_ray([values[p] * b - values[q] * a for a, b in zip(rays[p], rays[q])])
                if combined in next_rays:
                    continue
                next_rays[combined] = common | bit
                if len(next_rays) > max_rays:
                    raise RayBudgetError(f"Ray count exceeded budget of {max_rays} at constraint {step}")
        processed.append(row)
        rays = list(next_rays)
        masks = [next_rays[ray] for ray in rays]
        logger.debug("double description step %d/%d: %d rays", step, len(pending), len(rays))
        if len(rays) > max_rays:
            raise RayBudgetError(f"Ray count exceeded budget of {max_rays} at constraint {step}")

    result = sorted((Ray(ray) for ray in rays), key=_sort_key)
    logger.info("enumerated %d extreme rays in dimension %d", len(result), n)
    return GeneratorSet.build(result, source="enumerated", matrix_id=matrix_id)


def _solve_slice(a_ub: np.ndarray, n: int, cost: np.ndarray) -> Optional[np.ndarray]:
    result = linprog(cost,
                     A_ub=a_ub,
                     b_ub=np.zeros(a_ub.shape[0]),
                     A_eq=np.ones((1, n)),
                     b_eq=np.array([float(n)]),
                     bounds=[(0, None)] * n,
                     method="highs-ds")
    if result.status != 0:
        return None
    return np.asarray(result.x, dtype=np.float64)


def sampling_costs(seed: int, trials: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((trials, n)) + rng.uniform(0.0, 1.0, size=(trials, n))


def sample_rays(system: InequalitySystem,
                trials: int,
                seed: int,
                threads: int = 1,
                matrix_id: str = "") -> GeneratorSet:
    if trials < 1:
        raise ConeError("Sampling needs at least one trial")
    n = system.dim
    a_ub = -system.as_array()
    costs = sampling_costs(seed, trials, n)
    if threads > 1:
        solutions = joblib.Parallel(n_jobs=threads, backend="threading")(
            joblib.delayed(_solve_slice)(a_ub, n, cost) for cost in costs
        )
    else:
        solutions = [_solve_slice(a_ub, n, cost) for cost in costs]
    found: Dict[Ray, None] = {}
    for trial, solution in enumerate(solutions):
        if solution is None:
            raise ConeError(f"Sampling LP infeasible at trial {trial}")
        try:
            ray = Ray.from_values(solution)
        except GeometryError:
            logger.warning("sampling trial %d returned a degenerate vertex", trial)
            continue
        if not system.satisfied_exactly(ray):
            logger.debug("sampling trial %d vertex failed exact check after snapping", trial)
            continue
        found.setdefault(ray, None)
    result = sorted(found, key=_sort_key)
    logger.info("sampled %d distinct rays from %d trials", len(result), trials)
    return GeneratorSet.build(result, source="sampled", matrix_id=matrix_id)


def select_subgroup(generators: GeneratorSet,
                    wp_at_most: Optional[float] = None,
                    k_smallest: Optional[int] = None,
                    limit: Optional[int] = None) -> GeneratorSet:
    if len(generators) == 0:
        raise ConeError("Cannot select from an empty generator set")
    if (wp_at_most is None) == (k_smallest is None):
        raise ConeError("Give exactly one of wp_at_most or k_smallest")
    weights = generators.pseudo_weights
    order = sorted(range(len(generators)), key=lambda k: weights[k])
    if wp_at_most is not None:
        chosen = [k for k in order if weights[k] <= wp_at_most + _WEIGHT_TOLERANCE]
        if limit is not None:
            chosen = chosen[:limit]
    else:
        if k_smallest < 0:
            raise ConeError("k_smallest must be nonnegative")
        chosen = order[:k_smallest]
    return generators.subset(chosen)


def minimum_pseudo_weight(generators: GeneratorSet) -> Tuple[float, int]:
    if len(generators) == 0:
        raise ConeError("Generator set is empty")
    weights = generators.pseudo_weights
    smallest = float(weights.min())
    return smallest, int(np.sum(weights <= smallest + _WEIGHT_TOLERANCE))


def weight_histogram(generators: GeneratorSet, bin_width: float) -> WeightHistogram:
    if bin_width <= 0:
        raise ConeError("Histogram bin width must be positive")
    if len(generators) == 0:
        return WeightHistogram()
    indices = np.floor(generators.pseudo_weights / bin_width + _WEIGHT_TOLERANCE).astype(np.int64)
    low, high = int(indices.min()), int(indices.max())
    counts = np.bincount(indices - low, minlength=high - low + 1)
    edges = [(low + k) * bin_width for k in range(high - low + 2)]
    return WeightHistogram(bin_edges=edges, counts=[int(c) for c in counts])


def _format_fraction(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def read_generators(path: str | Path, matrix_id: Optional[str] = None) -> GeneratorSet:
    rays: List[Ray] = []
    arity: Optional[int] = None
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for number, row in enumerate(csv.reader(handle), start=1):
            tokens = [token.strip() for token in row]
            if not tokens or not any(tokens) or tokens[0].startswith("#"):
                continue
            if arity is None:
                arity = len(tokens)
            elif len(tokens) != arity:
                raise ConeError(f"Line {number} has {len(tokens)} entries, expected {arity}")
            try:
                values = [Fraction(token) for token in tokens]
            except (ValueError, ZeroDivisionError) as exc:
                raise ConeError(f"Invalid number on line {number}") from exc
            if any(v < 0 for v in values):
                raise ConeError(f"Negative entry on line {number}")
            if all(v == 0 for v in values):
                raise ConeError(f"All-zero ray on line {number}")
            rays.append(Ray(tuple(values)))
    generators = GeneratorSet.build(rays, source="imported", matrix_id=matrix_id or str(path))
    if len(generators) != len(rays):
        logger.warning("dropped %d duplicate rays from %s", len(rays) - len(generators), path)
    return generators


def write_generators(generators: GeneratorSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        for ray in generators:
            writer.writerow([_format_fraction(v) for v in ray.coords])


def write_histogram(histogram: WeightHistogram, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for lo, hi, count in histogram.rows():
            writer.writerow([repr(float(lo)), repr(float(hi)), count])
