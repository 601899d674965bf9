from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence, Tuple

import numpy as np

from .gf2codes import PseudoconeError

_COS_TOLERANCE = 1e-12
_FLOAT_DENOMINATOR = 10**6


class GeometryError(PseudoconeError):
    pass


def _to_fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    number = float(value)
    if not math.isfinite(number):
        raise GeometryError("Ray coordinates must be finite")
    return Fraction(number)


@dataclass(frozen=True)
class Ray:
    coords: Tuple[Fraction, ...]
    values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        exact = tuple(_to_fraction(v) for v in self.coords)
        if not exact:
            raise GeometryError("Ray must have at least one coordinate")
        if any(v < 0 for v in exact):
            raise GeometryError("Ray coordinates must be nonnegative")
        nonzero = [v for v in exact if v != 0]
        if not nonzero:
            raise GeometryError("Ray must not be the zero vector")
        scale = min(nonzero)
        canonical = tuple(v / scale for v in exact)
        object.__setattr__(self, "coords", canonical)
        values = np.array([float(v) for v in canonical], dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @staticmethod
    def from_values(values: Iterable[Any], max_denominator: int = _FLOAT_DENOMINATOR) -> "Ray":
        raw = [v for v in values]
        floats = [isinstance(v, (float, np.floating)) for v in raw]
        if not any(floats):
            return Ray(tuple(raw))
        array = np.asarray(raw, dtype=np.float64)
        positive = array[array > 1e-9]
        if positive.size == 0:
            raise GeometryError("Ray must not be the zero vector")
        scaled = np.where(array > 1e-9, array / positive.min(), 0.0)
        return Ray(tuple(Fraction(float(v)).limit_denominator(max_denominator) for v in scaled))

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def l1(self) -> Fraction:
        return sum(self.coords, Fraction(0))

    @property
    def l2sq(self) -> Fraction:
        return sum((v * v for v in self.coords), Fraction(0))

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.coords) if v != 0)

    def is_binary(self) -> bool:
        return all(v in (0, 1) for v in self.coords)

    def __len__(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class ChannelParams:
    snr_db: float
    rate: float
    eb: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(float(self.snr_db)):
            raise GeometryError("SNR must be finite")
        if float(self.rate) <= 0:
            raise GeometryError(f"Rate must be positive, got {self.rate}")
        if float(self.eb) <= 0:
            raise GeometryError("Bit energy must be positive")

    @property
    def gamma(self) -> float:
        return math.sqrt(float(self.rate) * float(self.eb))

    @property
    def n0(self) -> float:
        return float(self.eb) * 10.0 ** (-float(self.snr_db) / 10.0)

    @property
    def sigma2(self) -> float:
        return self.n0 / 2.0

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def llr_scale(self) -> float:
        return 4.0 * self.gamma / self.n0

    def llr(self, y: np.ndarray) -> np.ndarray:
        return self.llr_scale * np.asarray(y, dtype=np.float64)

    def with_snr(self, snr_db: float) -> "ChannelParams":
        return ChannelParams(snr_db=snr_db, rate=self.rate, eb=self.eb)


def pseudo_weight(ray: Ray) -> float:
    return float(ray.l1 * ray.l1 / ray.l2sq)


def pseudo_weights(rays: Sequence[Ray]) -> np.ndarray:
    return np.array([pseudo_weight(ray) for ray in rays], dtype=np.float64)


def virtual_point(ray: Ray) -> np.ndarray:
    factor = ray.l1 / ray.l2sq
    return np.array([float(factor * v) for v in ray.coords], dtype=np.float64)


def bpsk_embed(vector: np.ndarray, channel: ChannelParams) -> np.ndarray:
    return channel.gamma * (1.0 - 2.0 * np.asarray(vector, dtype=np.float64))


def boundary_distance(ray: Ray, channel: ChannelParams) -> float:
    return channel.gamma * math.sqrt(pseudo_weight(ray))


def boundary_distance_from_embedding(ray: Ray, channel: ChannelParams) -> float:
    zero = bpsk_embed(np.zeros(ray.n), channel)
    virt = bpsk_embed(virtual_point(ray), channel)
    return float(np.linalg.norm(virt - zero)) / 2.0


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    cos = float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))
    if cos >= 1.0 - _COS_TOLERANCE:
        return 1.0
    return min(1.0, max(0.0, cos))


def angle_deg(first: Ray, second: Ray) -> float:
    if first.n != second.n:
        raise GeometryError(f"Ray lengths differ: {first.n} vs {second.n}")
    return math.degrees(math.acos(_cosine(first.values, second.values)))


def angle_matrix(vectors: np.ndarray) -> np.ndarray:
    array = np.asarray(vectors, dtype=np.float64)
    units = array / np.linalg.norm(array, axis=1)[:, None]
    cos = units @ units.T
    cos = np.clip(cos, 0.0, 1.0)
    cos[cos >= 1.0 - _COS_TOLERANCE] = 1.0
    angles = np.degrees(np.arccos(cos))
    angles = (angles + angles.T) / 2.0
    np.fill_diagonal(angles, 0.0)
    return angles
