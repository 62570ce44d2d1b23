"""Benchmark schemes expressed as per-element mode masks."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SCHEME_NAMES = ("star-jam", "star", "conv-ris", "conv-ris-jam", "no-ris")


@dataclass(frozen=True)
class Scheme:
    name: str

    def __post_init__(self):
        if self.name not in SCHEME_NAMES:
            raise ValueError(f"unknown scheme {self.name!r}; choose from {', '.join(SCHEME_NAMES)}")

    def split(self, K: int) -> int:
        """Number of elements in the reflect partition of the conventional-RIS schemes."""
        return math.ceil(K / 2)

    def allowed(self, K: int) -> np.ndarray:
        """3 x K boolean mask of modes each element may take (rows reflect, transmit, jam)."""
        m = np.zeros((3, K), dtype=bool)
        if self.name == "star-jam":
            m[:] = True
        elif self.name == "star":
            m[:2] = True
        elif self.name in ("conv-ris", "conv-ris-jam"):
            h = self.split(K)
            m[0, :h] = True
            m[1, h:] = True
            if self.name == "conv-ris-jam":
                m[2, :h] = True
        return m

    def initial_beta(self, K: int) -> np.ndarray:
        """Uniform weight over each element's allowed modes (zero columns stay zero)."""
        m = self.allowed(K).astype(float)
        n = m.sum(axis=0)
        return np.divide(m, n, out=np.zeros_like(m), where=n > 0)

    def jam_capable(self, K: int) -> np.ndarray:
        return np.flatnonzero(self.allowed(K)[2])


def get_scheme(name: str | Scheme) -> Scheme:
    return name if isinstance(name, Scheme) else Scheme(name)
