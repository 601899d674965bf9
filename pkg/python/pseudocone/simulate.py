from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import joblib
import numpy as np

from .fundamental_cone import GeneratorSet
from .gf2codes import BinaryMatrix, Codeword, PseudoconeError
from .pseudogeometry import ChannelParams

logger = logging.getLogger(__name__)

_BLOCK_FRAMES = 1024
_DECODE_TOLERANCE = 1e-6
_SIMPLEX_TOLERANCE = 1e-9
_CUT_TOLERANCE = 1e-9
_PIVOT_LIMIT = 10**6
_WILSON_Z = 1.96
_FER_HEADER = ["snr_db", "frames", "errors", "fer", "ci_lo", "ci_hi", "erasures"]

FrameDecoder = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


class SimulationError(PseudoconeError):
    pass


class SimplexCyclingError(SimulationError):
    pass


@dataclass(frozen=True)
class SimConfig:
    snr_db: float
    seed: int
    max_frames: int
    rate: float
    target_errors: int = 100
    threads: int = 1

    def __post_init__(self) -> None:
        if self.target_errors < 1:
            raise SimulationError("target_errors must be at least 1")
        if self.max_frames < self.target_errors:
            raise SimulationError("max_frames must be at least target_errors")
        if not 0 <= self.seed < 2**64:
            raise SimulationError(f"Seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.threads < 1:
            raise SimulationError("threads must be at least 1")
        if float(self.rate) <= 0:
            raise SimulationError(f"Rate must be positive, got {self.rate}")

    @property
    def channel(self) -> ChannelParams:
        return ChannelParams(snr_db=float(self.snr_db), rate=float(self.rate))

    def to_dict(self) -> Dict[str, object]:
        return {"snr_db": float(self.snr_db), "seed": self.seed, "max_frames": self.max_frames,
                "target_errors": self.target_errors, "rate": float(self.rate)}


@dataclass
class FerEstimate:
    snr_db: float
    frames: int
    errors: int
    fer: float
    ci95: Tuple[float, float]
    erasures: int = 0

    def row(self) -> List[object]:
        return [self.snr_db, self.frames, self.errors, self.fer, self.ci95[0], self.ci95[1], self.erasures]


@dataclass
class LpProblem:
    """Minimise ``objective . w`` subject to ``A_ub w <= b_ub`` and the unit box."""

    objective: np.ndarray
    a_ub: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    b_ub: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        self.objective = np.asarray(self.objective, dtype=np.float64)
        n = self.objective.size
        a_ub = np.asarray(self.a_ub, dtype=np.float64)
        self.a_ub = a_ub.reshape(0, n) if a_ub.size == 0 else a_ub
        self.b_ub = np.asarray(self.b_ub, dtype=np.float64).reshape(-1)
        if self.a_ub.shape != (self.b_ub.size, n):
            raise SimulationError(f"Constraint block has shape {self.a_ub.shape}, expected ({self.b_ub.size}, {n})")
        for values in (self.objective, self.a_ub, self.b_ub):
            if not np.all(np.isfinite(values)):
                raise SimulationError("LP coefficients must be finite")

    @property
    def n(self) -> int:
        return int(self.objective.size)


def wilson_interval(errors: int, frames: int, z: float = _WILSON_Z) -> Tuple[float, float]:
    if frames <= 0:
        return (0.0, 1.0)
    p = errors / frames
    z2 = z * z
    denom = 1.0 + z2 / frames
    centre = (p + z2 / (2.0 * frames)) / denom
    half = z * math.sqrt(p * (1.0 - p) / frames + z2 / (4.0 * frames * frames)) / denom
    lo = max(0.0, min(p, centre - half))
    hi = min(1.0, max(p, centre + half))
    return (lo, hi)


def _block_noise(seed: int, block: int, frames: int, n: int) -> np.ndarray:
    generator = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, block, 0]))
    pairs = (n + 1) // 2
    uniforms = generator.random((frames, pairs, 2))
    radius = np.sqrt(-2.0 * np.log1p(-uniforms[..., 0]))
    angle = 2.0 * math.pi * uniforms[..., 1]
    normals = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
    return normals[:, :n]


def received_block(cfg: SimConfig, block: int, frames: int, n: int) -> np.ndarray:
    channel = cfg.channel
    return channel.gamma + channel.sigma * _block_noise(cfg.seed, block, frames, n)


def _run_frames(cfg: SimConfig, n: int, decoder: FrameDecoder) -> FerEstimate:
    blocks = math.ceil(cfg.max_frames / _BLOCK_FRAMES)
    attempted = errors = erasures = 0

    def work(block: int) -> Tuple[np.ndarray, np.ndarray]:
        frames = min(_BLOCK_FRAMES, cfg.max_frames - block * _BLOCK_FRAMES)
        return decoder(received_block(cfg, block, frames, n))

    block = 0
    done = False
    while block < blocks and not done:
        batch = list(range(block, min(blocks, block + cfg.threads)))
        if cfg.threads > 1:
            results = joblib.Parallel(n_jobs=cfg.threads, backend="threading")(
                joblib.delayed(work)(b) for b in batch
            )
        else:
            results = [work(b) for b in batch]
        for error_flags, erasure_flags in results:
            for is_error, is_erasure in zip(error_flags.tolist(), erasure_flags.tolist()):
                attempted += 1
                if is_erasure:
                    erasures += 1
                elif is_error:
                    errors += 1
                if errors >= cfg.target_errors:
                    done = True
                    break
            if done:
                break
        block = batch[-1] + 1

    frames = attempted - erasures
    if erasures:
        logger.warning("%d frames at %s dB were erasures", erasures, cfg.snr_db)
    fer = errors / frames if frames else 0.0
    logger.info("%s dB: %d errors in %d frames", cfg.snr_db, errors, frames)
    return FerEstimate(snr_db=float(cfg.snr_db), frames=frames, errors=errors, fer=fer,
                       ci95=wilson_interval(errors, frames), erasures=erasures)


def mld_subgroup_fer(codewords: Sequence[Codeword], cfg: SimConfig) -> FerEstimate:
    nonzero = [cw.as_array() for cw in codewords if cw.hamming_weight > 0]
    if not nonzero:
        raise SimulationError("Codeword subgroup is empty")
    words = np.vstack(nonzero).astype(np.float64)

    def decode(received: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        flags = np.any(received @ words.T <= 0.0, axis=1)
        return flags, np.zeros_like(flags)

    return _run_frames(cfg, words.shape[1], decode)


def lpd_subgroup_fer(generators: GeneratorSet, cfg: SimConfig) -> FerEstimate:
    if len(generators) == 0:
        raise SimulationError("Generator subgroup is empty")
    rays = generators.matrix()

    def decode(received: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        flags = np.any(received @ rays.T < 0.0, axis=1)
        return flags, np.zeros_like(flags)

    return _run_frames(cfg, rays.shape[1], decode)


def separate_cut(h_row: Sequence[int], omega: np.ndarray) -> Optional[Tuple[np.ndarray, float]]:
    """Most violated odd-subset inequality of one check, or None."""
    row = np.asarray(h_row)
    values = np.asarray(omega, dtype=np.float64)
    support = np.flatnonzero(row)
    if support.size == 0:
        return None
    chosen = values[support] > 0.5
    if int(chosen.sum()) % 2 == 0:
        flip = int(np.argmin(np.abs(1.0 - 2.0 * values[support])))
        chosen[flip] = not chosen[flip]
    inside = support[chosen]
    outside = support[~chosen]
    gap = float(np.sum(1.0 - values[inside]) + np.sum(values[outside]))
    if gap >= 1.0 - _CUT_TOLERANCE:
        return None
    coeffs = np.zeros(values.size, dtype=np.float64)
    coeffs[inside] = 1.0
    coeffs[outside] = -1.0
    return coeffs, float(inside.size - 1)


def simplex_solve(problem: LpProblem) -> Tuple[np.ndarray, float]:
    n = problem.n
    a_ub = np.vstack([problem.a_ub, np.eye(n)])
    b_ub = np.concatenate([problem.b_ub, np.ones(n)])
    if np.any(b_ub < 0):
        raise SimulationError("Slack basis needs nonnegative right-hand sides")
    m = a_ub.shape[0]
    tableau = np.zeros((m + 1, n + m + 1), dtype=np.float64)
    tableau[:m, :n] = a_ub
    tableau[:m, n:n + m] = np.eye(m)
    tableau[:m, -1] = b_ub
    tableau[m, :n] = problem.objective
    basis = list(range(n, n + m))
    pivots = 0
    while True:
        reduced = tableau[m, :-1]
        candidates = np.flatnonzero(reduced < -_SIMPLEX_TOLERANCE)
        if candidates.size == 0:
            break
        entering = int(candidates[0])
        column = tableau[:m, entering]
        rows = np.flatnonzero(column > _SIMPLEX_TOLERANCE)
        if rows.size == 0:
            raise SimulationError("LP is unbounded")
        ratios = tableau[rows, -1] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + _SIMPLEX_TOLERANCE]
        leaving = int(min(tied, key=lambda r: basis[r]))
        tableau[leaving] /= tableau[leaving, entering]
        factors = tableau[:, entering].copy()
        factors[leaving] = 0.0
        tableau -= np.outer(factors, tableau[leaving])
        basis[leaving] = entering
        pivots += 1
        if pivots > _PIVOT_LIMIT:
            raise SimplexCyclingError(f"Simplex exceeded {_PIVOT_LIMIT} pivots")
    solution = np.zeros(n, dtype=np.float64)
    for r, variable in enumerate(basis):
        if variable < n:
            solution[variable] = tableau[r, -1]
    return solution, float(problem.objective @ solution)


def lp_decode(matrix: BinaryMatrix, received: np.ndarray) -> Tuple[np.ndarray, float]:
    cost = np.asarray(received, dtype=np.float64)
    omega = (cost < 0).astype(np.float64)
    objective = float(cost @ omega)
    rows: List[np.ndarray] = []
    rhs: List[float] = []
    seen = set()
    rounds = 0
    while True:
        added = 0
        for j in range(matrix.rows):
            cut = separate_cut(matrix.row(j), omega)
            if cut is None:
                continue
            key = (cut[0].tobytes(), cut[1])
            if key in seen:
                continue
            seen.add(key)
            rows.append(cut[0])
            rhs.append(cut[1])
            added += 1
        if not added:
            break
        rounds += 1
        omega, objective = simplex_solve(LpProblem(cost, np.vstack(rows), np.array(rhs)))
        logger.debug("cut round %d: %d cuts, objective %.6g", rounds, len(rows), objective)
    return omega, objective


def lpd_full_fer(matrix: BinaryMatrix, cfg: SimConfig) -> FerEstimate:
    def decode(received: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        flags = np.zeros(received.shape[0], dtype=bool)
        erased = np.zeros(received.shape[0], dtype=bool)
        for f, y in enumerate(received):
            try:
                omega, objective = lp_decode(matrix, y)
            except SimplexCyclingError:
                erased[f] = True
                continue
            flags[f] = bool(np.any(omega > _DECODE_TOLERANCE) or objective < -_DECODE_TOLERANCE)
        return flags, erased

    return _run_frames(cfg, matrix.cols, decode)


_KINDS = ("ml-sub", "lpd-sub", "lpd-full")


def fer_curve(kind: str, payload: object, snr_grid: Iterable[float], cfg: SimConfig) -> List[FerEstimate]:
    if kind not in _KINDS:
        raise SimulationError(f"Unknown simulation mode: {kind}")
    runners = {"ml-sub": mld_subgroup_fer, "lpd-sub": lpd_subgroup_fer, "lpd-full": lpd_full_fer}
    expected = {"ml-sub": list, "lpd-sub": GeneratorSet, "lpd-full": BinaryMatrix}
    if not isinstance(payload, expected[kind]):
        raise SimulationError(f"Mode {kind} needs {expected[kind].__name__} input")
    return [runners[kind](payload, replace(cfg, snr_db=float(snr))) for snr in snr_grid]


def _format_number(value: object) -> str:
    if isinstance(value, int):
        return str(value)
    number = float(value)
    if number.is_integer():
        return str(int(number))
    return repr(number)


def write_fer_csv(estimates: Iterable[FerEstimate], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(_FER_HEADER)
        for estimate in estimates:
            writer.writerow([_format_number(v) for v in estimate.row()])
