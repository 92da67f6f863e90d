"""Finite carrier spaces and the vectors living on them.

A carrier is an ordered tuple of distinct point labels.  Subsets of the
carrier are plain Python ints used as bitmasks: bit ``i`` set means the
``i``-th point belongs to the subset.  All set-function machinery in this
package indexes tables of length ``2**d`` by these masks, so carriers are
capped at d = 24 points (a 16M-entry table) and anything larger is refused
up front.

Nonnegative functions on the carrier come in two flavours that share the
same array representation:

* a point function ``f``: the integrand of the nonlinear integrals,
* a sup-measure vector ``g``: the values ``g({x})`` of a maxitive set
  function, evaluated on sets via ``sup_integral`` (max over the set,
  0 on the empty set).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

MAX_CARRIER_SIZE = 24


class CarrierSizeError(ValueError):
    """Raised when an operation would require more than 2**24 subset slots."""


@dataclass(frozen=True)
class TorusTag:
    """Marks a carrier whose points are the discrete torus (Z_n)**dim.

    Point ``(i_1, .., i_dim)`` sits at carrier index
    ``i_1 * n**(dim-1) + ... + i_dim`` so shifts are pure index arithmetic.
    """

    n: int
    dim: int = 1

    def __post_init__(self) -> None:
        if self.n < 1 or self.dim not in (1, 2):
            raise ValueError(f"unsupported torus geometry n={self.n} dim={self.dim}")

    @property
    def size(self) -> int:
        return self.n ** self.dim

    def shifts(self) -> Iterator[tuple[int, ...]]:
        if self.dim == 1:
            for v in range(self.n):
                yield (v,)
        else:
            for v1 in range(self.n):
                for v2 in range(self.n):
                    yield (v1, v2)

    def shift_permutation(self, shift: tuple[int, ...]) -> np.ndarray:
        """Index permutation sending point p to p + shift (mod n per axis)."""
        n = self.n
        if self.dim == 1:
            (v,) = shift
            return np.array([(i + v) % n for i in range(n)], dtype=np.int64)
        v1, v2 = shift
        perm = np.empty(n * n, dtype=np.int64)
        for i in range(n):
            for j in range(n):
                perm[i * n + j] = ((i + v1) % n) * n + (j + v2) % n
        return perm


@dataclass(frozen=True)
class Carrier:
    """Ordered finite ground set.  Labels are opaque strings.

    The label order fixes the bit layout of subset masks and the column
    order of every array tied to this carrier.
    """

    labels: tuple[str, ...]
    torus: Optional[TorusTag] = None
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.labels:
            raise ValueError("carrier needs at least one point")
        if len(self.labels) > MAX_CARRIER_SIZE:
            raise CarrierSizeError(
                f"carrier has {len(self.labels)} points, cap is {MAX_CARRIER_SIZE}"
            )
        if any(not isinstance(lb, str) or not lb for lb in self.labels):
            raise ValueError("labels must be nonempty strings")
        if any("," in lb for lb in self.labels):
            raise ValueError("labels must not contain commas (reserved for subset keys)")
        index = {lb: i for i, lb in enumerate(self.labels)}
        if len(index) != len(self.labels):
            raise ValueError("duplicate labels in carrier")
        if self.torus is not None and self.torus.size != len(self.labels):
            raise ValueError("torus tag size does not match carrier size")
        object.__setattr__(self, "_index", index)

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def index_of(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"label {label!r} not in carrier") from None

    def mask_of(self, labels: Iterable[str]) -> int:
        mask = 0
        for lb in labels:
            mask |= 1 << self.index_of(lb)
        return mask

    def labels_of(self, mask: int) -> tuple[str, ...]:
        self.validate_mask(mask)
        return tuple(self.labels[i] for i in iter_bits(mask))

    def validate_mask(self, mask: int) -> None:
        if not isinstance(mask, (int, np.integer)):
            raise TypeError(f"subset mask must be an int, got {type(mask).__name__}")
        if mask < 0 or mask > self.full_mask:
            raise ValueError(f"mask {mask:#x} outside carrier of size {self.size}")

    def subset_key(self, mask: int) -> str:
        """Canonical JSON key for a subset: comma-joined sorted labels."""
        return ",".join(sorted(self.labels_of(mask)))

    def mask_from_key(self, key: str) -> int:
        return self.mask_of(key.split(","))

    def to_json(self):
        """Plain label list, or an object when a torus tag must survive."""
        if self.torus is None:
            return list(self.labels)
        return {"labels": list(self.labels),
                "torus": {"n": self.torus.n, "dim": self.torus.dim}}

    @classmethod
    def from_json(cls, obj) -> "Carrier":
        if isinstance(obj, dict):
            tor = obj.get("torus")
            tag = TorusTag(n=int(tor["n"]), dim=int(tor["dim"])) if tor else None
            return cls(tuple(obj["labels"]), torus=tag)
        return cls(tuple(obj))


def iter_bits(mask: int) -> Iterator[int]:
    """Indices of set bits, lowest first."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_size(mask: int) -> int:
    return int(mask).bit_count()


def popcounts(size: int) -> np.ndarray:
    """Vector of bit counts for masks 0..size-1 (SWAR, no Python loop)."""
    v = np.arange(size, dtype=np.uint32)
    v = v - ((v >> 1) & 0x55555555)
    v = (v & 0x33333333) + ((v >> 2) & 0x33333333)
    v = (v + (v >> 4)) & 0x0F0F0F0F
    return ((v * 0x01010101) >> 24).astype(np.int64)


def enumerate_subsets(carrier: Carrier, nonempty_only: bool = False) -> range:
    """All subset masks of the carrier in mask order.

    The size cap is enforced here as well as at carrier construction so a
    hand-rolled oversized carrier still fails loudly.
    """
    if carrier.size > MAX_CARRIER_SIZE:
        raise CarrierSizeError(
            f"refusing to enumerate 2**{carrier.size} subsets (cap d={MAX_CARRIER_SIZE})"
        )
    return range(1 if nonempty_only else 0, 1 << carrier.size)


def as_values(carrier: Carrier, values: "np.ndarray | Sequence[float] | dict[str, float]",
              name: str = "values") -> np.ndarray:
    """Coerce point values to a read-only float64 array in carrier order.

    Accepts an array/sequence of length d or a label->value dict (missing
    labels default to 0).  Rejects negatives, NaN and infinities: every
    point function and sup-measure vector in this package is a finite
    nonnegative vector.
    """
    if isinstance(values, dict):
        arr = np.zeros(carrier.size)
        for lb, v in values.items():
            arr[carrier.index_of(lb)] = v
    else:
        arr = np.asarray(values, dtype=float)
        if arr.shape != (carrier.size,):
            raise ValueError(
                f"{name} has shape {arr.shape}, expected ({carrier.size},)"
            )
        arr = arr.copy()
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if np.any(arr < 0):
        raise ValueError(f"{name} must be nonnegative")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PointFunction:
    """Nonnegative function on the carrier, stored in carrier order."""

    carrier: Carrier
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", as_values(self.carrier, self.values, "point function"))

    def __call__(self, label: str) -> float:
        return float(self.values[self.carrier.index_of(label)])

    def to_json(self) -> dict[str, float]:
        return {lb: float(v) for lb, v in zip(self.carrier.labels, self.values)}


@dataclass(frozen=True)
class SupMeasureVector:
    """Values g({x}) of a sup-measure; sets get the max over their points."""

    carrier: Carrier
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", as_values(self.carrier, self.values, "sup-measure vector"))

    def __call__(self, mask: int) -> float:
        return sup_integral(self.values, mask)

    def to_json(self) -> dict[str, float]:
        return {lb: float(v) for lb, v in zip(self.carrier.labels, self.values)}


def sup_integral(g: np.ndarray, mask: int) -> float:
    """max of g over the masked points; the empty set gives 0."""
    if mask == 0:
        return 0.0
    best = 0.0
    for i in iter_bits(mask):
        v = g[i]
        if v > best:
            best = v
    return float(best)


def canonical_json(obj) -> str:
    """Deterministic JSON encoding used for hashing and byte-stable artifacts."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
