"""Integer coefficient sequences on 1..N, dense or sparse."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import CapacityError, ValidationError


@dataclass(frozen=True, eq=False)
class CoefficientSequence:
    """Exact integer values a(1), ..., a(N) of an arithmetic function.

    Dense storage keeps an int64 array of length N + 1 indexed by n (slot 0 is
    always zero). Sparse storage keeps ascending indices with their values;
    indices that are absent mean 0. A sparse sequence may store explicit zeros:
    its ``support`` is the set of stored indices, which is the structural
    support (e.g. all k-th powers for nu), not necessarily the non-zero set.
    """

    limit: int
    dense: np.ndarray | None = None
    indices: np.ndarray | None = None
    values: np.ndarray | None = None
    name: str = field(default="")

    def __post_init__(self):
        if self.limit < 1:
            raise ValidationError(f"sequence limit must be >= 1, got {self.limit}")
        if self.dense is not None:
            if self.dense.shape != (self.limit + 1,) or self.dense.dtype.kind not in "iu":
                raise ValidationError("dense storage must be an integer array of length limit+1")
            if self.dense[0] != 0:
                raise ValidationError("dense slot 0 must be zero")
        else:
            if self.indices is None or self.values is None:
                raise ValidationError("sparse storage needs indices and values")
            if self.indices.shape != self.values.shape:
                raise ValidationError("indices and values differ in length")
            if self.values.dtype.kind not in "iu" or self.indices.dtype.kind not in "iu":
                raise ValidationError("sparse storage must hold integers")
            if self.indices.size:
                if self.indices[0] < 1 or self.indices[-1] > self.limit:
                    raise ValidationError("sparse index outside 1..limit")
                if np.any(np.diff(self.indices) <= 0):
                    raise ValidationError("sparse indices must be strictly ascending")

    # construction helpers

    @classmethod
    def from_dense(cls, arr, name: str = "") -> CoefficientSequence:
        arr = np.asarray(arr, dtype=np.int64)
        return cls(limit=arr.size - 1, dense=arr, name=name)

    @classmethod
    def from_sparse(cls, limit: int, indices, values, name: str = "") -> CoefficientSequence:
        idx = np.asarray(indices, dtype=np.int64)
        val = np.asarray(values, dtype=np.int64)
        order = np.argsort(idx, kind="stable")
        return cls(limit=limit, indices=idx[order], values=val[order], name=name)

    @classmethod
    def from_function(cls, fn, limit: int, name: str = "") -> CoefficientSequence:
        """Dense sequence from a Python callable; intended for oracles and tests."""
        arr = np.zeros(limit + 1, dtype=np.int64)
        for n in range(1, limit + 1):
            arr[n] = fn(n)
        return cls(limit=limit, dense=arr, name=name)

    # queries

    @property
    def is_sparse(self) -> bool:
        return self.dense is None

    @property
    def support(self) -> np.ndarray:
        """Stored indices (sparse) or indices of non-zero values (dense)."""
        if self.is_sparse:
            return self.indices
        return np.flatnonzero(self.dense)

    @property
    def nonzero_support(self) -> np.ndarray:
        if self.is_sparse:
            return self.indices[self.values != 0]
        return np.flatnonzero(self.dense)

    def __getitem__(self, n: int) -> int:
        if not 1 <= n <= self.limit:
            raise CapacityError(f"index {n} outside 1..{self.limit} of sequence {self.name!r}")
        if not self.is_sparse:
            return int(self.dense[n])
        i = np.searchsorted(self.indices, n)
        if i < self.indices.size and self.indices[i] == n:
            return int(self.values[i])
        return 0

    def items(self) -> Iterator[tuple[int, int]]:
        """(n, value) pairs: stored entries when sparse, every n when dense."""
        if self.is_sparse:
            yield from zip(self.indices.tolist(), self.values.tolist())
        else:
            yield from zip(range(1, self.limit + 1), self.dense[1:].tolist())

    def to_dense(self) -> CoefficientSequence:
        if not self.is_sparse:
            return self
        arr = np.zeros(self.limit + 1, dtype=np.int64)
        arr[self.indices] = self.values
        return CoefficientSequence(limit=self.limit, dense=arr, name=self.name)

    def to_sparse(self) -> CoefficientSequence:
        if self.is_sparse:
            return self
        idx = np.flatnonzero(self.dense).astype(np.int64)
        return CoefficientSequence(limit=self.limit, indices=idx,
                                   values=self.dense[idx].astype(np.int64), name=self.name)

    def as_array(self) -> np.ndarray:
        """Dense int64 view indexed 0..N."""
        return self.to_dense().dense

    def truncate(self, limit: int) -> CoefficientSequence:
        if limit > self.limit:
            raise CapacityError(f"cannot extend sequence {self.name!r} from {self.limit} to {limit}")
        if self.is_sparse:
            keep = self.indices <= limit
            return CoefficientSequence(limit=limit, indices=self.indices[keep],
                                       values=self.values[keep], name=self.name)
        return CoefficientSequence(limit=limit, dense=self.dense[: limit + 1].copy(), name=self.name)

    def renamed(self, name: str) -> CoefficientSequence:
        return CoefficientSequence(limit=self.limit, dense=self.dense, indices=self.indices,
                                   values=self.values, name=name)

    def equals(self, other: CoefficientSequence) -> bool:
        return self.limit == other.limit and np.array_equal(self.as_array(), other.as_array())

    def first_mismatch(self, other: CoefficientSequence) -> int | None:
        """Smallest n where the two sequences differ, or None."""
        if self.limit != other.limit:
            raise ValidationError(f"limits differ: {self.limit} vs {other.limit}")
        diff = np.flatnonzero(self.as_array() != other.as_array())
        return int(diff[0]) if diff.size else None

    def __repr__(self):
        kind = f"sparse, {self.indices.size} stored" if self.is_sparse else "dense"
        return f"CoefficientSequence({self.name!r}, limit={self.limit}, {kind})"
