"""Codebook data model, the golden-angle centroid law, and nearest-centroid quantization."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from ._nearest import nearest_kernel, worker_count
from .errors import FormatError, NonFiniteRadius, NonFiniteValue

#: Fraction of a full turn between consecutive spiral centroids, (3 - sqrt 5) / 2.
GOLDEN_FRACTION = (3.0 - math.sqrt(5.0)) / 2.0

_CHUNK = 1 << 16


def golden_angle() -> float:
    """Return the golden angle ``2*pi*(3 - sqrt(5))/2`` in radians (~137.5 degrees)."""
    return 2.0 * math.pi * GOLDEN_FRACTION


class Scheme(str, Enum):
    HIGHRATE = "HighRateGQ"
    LLOYDMAX = "LloydMaxGQ"
    RECT = "RectProduct"
    POLAR = "PolarProduct"
    LBG = "LBG"

    @property
    def is_golden(self) -> bool:
        return self in (Scheme.HIGHRATE, Scheme.LLOYDMAX)


@dataclass(frozen=True)
class SourceModel:
    """Circularly-symmetric complex Gaussian with total variance ``sigma2``.

    Each of the real and imaginary parts has variance ``sigma2 / 2``.
    """

    sigma2: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValueError(f"sigma2 must be finite and > 0, got {self.sigma2}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def pdf(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.exp(-(x * x + y * y) / self.sigma2) / (math.pi * self.sigma2)

    def radial_pdf(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r >= 0, 2.0 * r / self.sigma2 * np.exp(-r * r / self.sigma2), 0.0)


def golden_angles(n: int) -> np.ndarray:
    """Angles ``2*pi*phi*k`` for ``k = 1..n``, reduced to ``[0, 2*pi)``."""
    k = np.arange(1, n + 1, dtype=float)
    # reduce the turn count before scaling so large k keep full precision
    turns = np.mod(k * GOLDEN_FRACTION, 1.0)
    return 2.0 * math.pi * turns


def _as_complex_array(values, what: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim == 2 and arr.shape[1] == 2 and not np.iscomplexobj(arr):
        arr = arr[:, 0] + 1j * arr[:, 1]
    arr = np.asarray(arr, dtype=np.complex128).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"{what} contain non-finite values")
    return arr


@dataclass(frozen=True, eq=False)
class Codebook:
    """Ordered complex centroids; index ``n`` (1-based) is ``centroids[n - 1]``."""

    centroids: np.ndarray
    scheme: Scheme
    sigma2: float = 1.0
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        c = _as_complex_array(self.centroids, "centroids")
        if c.size == 0:
            raise ValueError("a codebook needs at least one centroid")
        if not (math.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValueError(f"sigma2 must be finite and > 0, got {self.sigma2}")
        c.setflags(write=False)
        object.__setattr__(self, "centroids", c)
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def N(self) -> int:
        return int(self.centroids.size)

    @property
    def radii(self) -> np.ndarray:
        return np.abs(self.centroids)

    def __len__(self) -> int:
        return self.N

    def __eq__(self, other) -> bool:
        if not isinstance(other, Codebook):
            return NotImplemented
        return (
            self.scheme == other.scheme
            and self.sigma2 == other.sigma2
            and self.centroids.shape == other.centroids.shape
            and self.centroids.tobytes() == other.centroids.tobytes()
            and self.metadata == other.metadata
        )

    __hash__ = None  # type: ignore[assignment]

    def rotated(self, angle: float) -> Codebook:
        return Codebook(self.centroids * np.exp(1j * angle), self.scheme, self.sigma2, self.metadata)

    def scaled(self, factor: float, sigma2: float | None = None) -> Codebook:
        return Codebook(self.centroids * factor, self.scheme,
                        self.sigma2 if sigma2 is None else sigma2, self.metadata)

    def xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Contiguous real and imaginary parts."""
        cached = self.__dict__.get("_xy")
        if cached is None:
            cached = (np.ascontiguousarray(self.centroids.real), np.ascontiguousarray(self.centroids.imag))
            object.__setattr__(self, "_xy", cached)
        return cached


def spiral_centroids(radii: Sequence[float] | np.ndarray, scheme: Scheme = Scheme.HIGHRATE,
                     sigma2: float = 1.0, metadata: dict | None = None) -> Codebook:
    """Place ``radii[n-1] * exp(i*2*pi*phi*n)`` for ``n = 1..N``."""
    r = np.asarray(radii, dtype=float).reshape(-1)
    if r.size == 0:
        raise ValueError("radii must be nonempty")
    if not np.all(np.isfinite(r)):
        bad = int(np.flatnonzero(~np.isfinite(r))[0]) + 1
        raise NonFiniteRadius(f"radius at index {bad} is {r[bad - 1]}")
    if np.any(r < 0):
        raise ValueError("radii must be >= 0")
    c = r * np.exp(1j * golden_angles(r.size))
    return Codebook(c, scheme, sigma2, metadata or {})


def _points_xy(points) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(points)
    if np.iscomplexobj(arr) or arr.ndim <= 1:
        arr = np.asarray(arr, dtype=np.complex128).reshape(-1)
        px, py = np.ascontiguousarray(arr.real), np.ascontiguousarray(arr.imag)
    else:
        px = np.ascontiguousarray(arr[:, 0], dtype=float)
        py = np.ascontiguousarray(arr[:, 1], dtype=float)
    if not (np.all(np.isfinite(px)) and np.all(np.isfinite(py))):
        raise NonFiniteValue("points contain non-finite values")
    return px, py


def nearest(codebook: Codebook, points, workers: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """0-based nearest-centroid indices and squared distances for ``points``."""
    px, py = _points_xy(points)
    idx = np.empty(px.size, dtype=np.int64)
    d2 = np.empty(px.size, dtype=np.float64)
    if px.size == 0:
        return idx, d2
    re, im = codebook.xy()
    workers = worker_count() if workers is None else max(1, workers)
    spans = [(s, min(s + _CHUNK, px.size)) for s in range(0, px.size, _CHUNK)]

    def run(span):
        a, b = span
        tiles = max(1, min(256, int(math.sqrt((b - a) / 32))))
        nearest_kernel(px[a:b], py[a:b], re, im, tiles, idx[a:b], d2[a:b])

    if workers == 1 or len(spans) == 1:
        for span in spans:
            run(span)
    else:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(run, spans))
    return idx, d2


def quantize(codebook: Codebook, point: complex) -> int:
    """1-based index of the centroid nearest to ``point`` (smallest index on ties)."""
    if not np.isfinite(point):
        raise NonFiniteValue(f"point {point} is not finite")
    idx, _ = nearest(codebook, np.array([point], dtype=np.complex128), workers=1)
    return int(idx[0]) + 1


def quantize_batch(codebook: Codebook, points: Iterable[complex] | np.ndarray) -> list[int]:
    """1-based nearest-centroid index for every point."""
    if not isinstance(points, np.ndarray):
        points = np.array(list(points), dtype=np.complex128)
    idx, _ = nearest(codebook, points)
    return (idx + 1).tolist()


# -- serialization -----------------------------------------------------------

def _fmt(x: float) -> str:
    s = format(float(x), ".17g")
    # keep float syntax so -0.0 survives parsing
    return s if any(c in s for c in ".e") else s + ".0"


def codebook_to_json(codebook: Codebook) -> str:
    rows = ",\n    ".join(f"[{_fmt(z.real)}, {_fmt(z.imag)}]" for z in codebook.centroids)
    meta = json.dumps(codebook.metadata, indent=2, sort_keys=True, allow_nan=False)
    meta = meta.replace("\n", "\n  ")
    return (
        "{\n"
        f'  "scheme": {json.dumps(codebook.scheme.value)},\n'
        f'  "N": {codebook.N},\n'
        f'  "sigma2": {_fmt(codebook.sigma2)},\n'
        f'  "centroids": [\n    {rows}\n  ],\n'
        f'  "metadata": {meta}\n'
        "}\n"
    )


def codebook_from_json(text: str) -> Codebook:
    try:
        doc = json.loads(text, parse_constant=lambda s: float(s))
    except json.JSONDecodeError as exc:
        raise FormatError("<document>", f"invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise FormatError("<document>", "top level must be an object")
    for key in ("scheme", "N", "sigma2", "centroids"):
        if key not in doc:
            raise FormatError(key, "missing")
    try:
        scheme = Scheme(doc["scheme"])
    except ValueError:
        raise FormatError("scheme", f"unknown scheme {doc['scheme']!r}") from None
    n = doc["N"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise FormatError("N", f"must be an integer >= 1, got {n!r}")
    sigma2 = doc["sigma2"]
    if not isinstance(sigma2, (int, float)) or not math.isfinite(sigma2) or sigma2 <= 0:
        raise FormatError("sigma2", f"must be finite and > 0, got {sigma2!r}")
    cents = doc["centroids"]
    if not isinstance(cents, list) or len(cents) != n:
        got = len(cents) if isinstance(cents, list) else type(cents).__name__
        raise FormatError("centroids", f"expected {n} entries, got {got}")
    values = []
    for k, pair in enumerate(cents):
        if (not isinstance(pair, list) or len(pair) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pair)):
            raise FormatError(f"centroids[{k}]", "expected [re, im]")
        if not all(math.isfinite(v) for v in pair):
            raise FormatError(f"centroids[{k}]", "non-finite value")
        values.append(complex(float(pair[0]), float(pair[1])))
    meta = doc.get("metadata", {})
    if not isinstance(meta, dict):
        raise FormatError("metadata", "must be an object")
    return Codebook(np.array(values, dtype=np.complex128), scheme, float(sigma2), meta)


def save_codebook(codebook: Codebook, path: str | Path) -> None:
    Path(path).write_text(codebook_to_json(codebook), encoding="utf-8")


def load_codebook(path: str | Path) -> Codebook:
    return codebook_from_json(Path(path).read_text(encoding="utf-8"))
