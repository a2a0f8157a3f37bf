"""Internal Fourier matrix, internal cocycle and Fourier-Bohr amplitudes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .golden import SIGMA, SQRT5, TAU, FourierIndex
from .inflation import InflationRule, PFData, pf_data, substitution_matrix

TWO_PI = 2.0 * math.pi


class InternalFourierMatrix:
    """Evaluates ``B(y)_ij = sum_{t in T[i][j]} exp(2 pi i y . t*)``.

    The starred displacements are flattened into one array so that ``B(y)``
    costs one complex exponential per displacement.
    """

    def __init__(self, rule: InflationRule):
        self.rule = rule
        self.dim = rule.dim
        self.size = rule.size
        rows, cols, shifts = [], [], []
        for i in range(rule.size):
            for j in range(rule.size):
                for t in rule.displacements[i][j]:
                    rows.append(i)
                    cols.append(j)
                    shifts.append(t.star().to_float())
        self._rows = np.array(rows, dtype=np.intp)
        self._cols = np.array(cols, dtype=np.intp)
        self.tstar = np.array(shifts, dtype=float).reshape(-1, self.dim)
        self.M = substitution_matrix(rule)
        self.pf: PFData = pf_data(self.M)

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float).reshape(self.dim)
        phases = np.exp(1j * TWO_PI * (self.tstar @ y))
        B = np.zeros((self.size, self.size), dtype=complex)
        np.add.at(B, (self._rows, self._cols), phases)
        return B

    def batch(self, ys: np.ndarray) -> np.ndarray:
        """``B`` at many points at once; ``ys`` has shape ``(m, d)``."""
        ys = np.asarray(ys, dtype=float).reshape(-1, self.dim)
        phases = np.exp(1j * TWO_PI * (ys @ self.tstar.T))
        B = np.zeros((len(ys), self.size, self.size), dtype=complex)
        for e, (i, j) in enumerate(zip(self._rows, self._cols)):
            B[:, i, j] += phases[:, e]
        return B


def fourier_matrix(rule: InflationRule, y) -> np.ndarray:
    return InternalFourierMatrix(rule)(y)


def cocycle_product(rule_or_B, y, n: int) -> np.ndarray:
    """``B^(n)(y) = B(y) B(sigma y) ... B(sigma^(n-1) y)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    B = rule_or_B if isinstance(rule_or_B, InternalFourierMatrix) else InternalFourierMatrix(rule_or_B)
    y = np.asarray(y, dtype=float).reshape(B.dim)
    out = np.eye(B.size, dtype=complex)
    for _ in range(n):
        out = out @ B(y)
        y = SIGMA * y
    return out


def steps_for_tolerance(y_norm: float, tol: float) -> int:
    """Smallest ``n`` with ``|sigma|^n * max(|y|, 1) < tol``."""
    scale = max(y_norm, 1.0)
    return max(1, math.ceil(math.log(scale / tol) / math.log(TAU)))


@dataclass(frozen=True)
class CocycleLimit:
    c: np.ndarray
    n_used: int
    residual: float
    u: np.ndarray = field(repr=False)

    @property
    def matrix(self) -> np.ndarray:
        """Rank-one limit ``C(y) = |c(y)><u|``."""
        return np.outer(self.c, self.u)


class CocycleEvaluator:
    """Scaled cocycle limits ``C(y)`` and amplitudes for one rule."""

    def __init__(self, rule: InflationRule, tol: float = 1e-9):
        self.B = InternalFourierMatrix(rule)
        self.rule = rule
        self.tol = tol
        self.pf = self.B.pf
        self.dim = rule.dim

    def scaled_product(self, y, n: int | None = None) -> np.ndarray:
        """``|sigma|^(d n) B^(n)(y)``; converges to ``C(y)`` as ``n`` grows."""
        y = np.asarray(y, dtype=float).reshape(self.dim)
        if n is None:
            n = self._steps(y)
        scale = abs(SIGMA) ** self.dim
        out = np.eye(self.B.size, dtype=complex)
        for _ in range(n):
            out = (out @ self.B(y)) * scale
            y = SIGMA * y
        return out

    def _steps(self, y: np.ndarray) -> int:
        # the extra factor covers the Lipschitz constant of c near 0
        return steps_for_tolerance(float(np.max(np.abs(y))), self.tol / 100.0)

    def limit(self, y, tol: float | None = None) -> CocycleLimit:
        y = np.asarray(y, dtype=float).reshape(self.dim)
        tol = self.tol if tol is None else tol
        n = steps_for_tolerance(float(np.max(np.abs(y))), tol / 100.0)
        C = self.scaled_product(y, n)
        c = C @ self.pf.v
        residual = abs(SIGMA) ** n * max(float(np.max(np.abs(y))), 1.0)
        return CocycleLimit(c, n, residual, self.pf.u)

    def c_batch(self, ys: np.ndarray, n: int | None = None) -> np.ndarray:
        """``c(y)`` for many ``y`` at once, shape ``(m, N)``."""
        ys = np.asarray(ys, dtype=float).reshape(-1, self.dim)
        if n is None:
            ymax = float(np.max(np.abs(ys))) if ys.size else 0.0
            n = steps_for_tolerance(ymax, self.tol / 100.0)
        scale = abs(SIGMA) ** self.dim
        vecs = np.broadcast_to(self.pf.v.astype(complex), (len(ys), self.B.size)).copy()
        # accumulate right to left: c = s B(y) s B(sigma y) ... v
        for m in reversed(range(n)):
            vecs = scale * np.einsum("kij,kj->ki", self.B.batch(ys * SIGMA**m), vecs)
        return vecs

    def amplitudes(self, ks: Sequence[FourierIndex]) -> np.ndarray:
        """Fourier-Bohr amplitudes ``A_i(k) = lam / 5^(d/2) * c_i(k*)``."""
        ystar = np.array([k.star_value() for k in ks], dtype=float).reshape(-1, self.dim)
        return self.amplitude_prefactor * self.c_batch(ystar)

    @property
    def amplitude_prefactor(self) -> float:
        return self.pf.lam / SQRT5**self.dim


def limit_C(rule: InflationRule, y, tol: float = 1e-9) -> CocycleLimit:
    return CocycleEvaluator(rule, tol).limit(y, tol)


def fb_amplitude(rule: InflationRule, pf: PFData | None, k: FourierIndex) -> np.ndarray:
    ev = CocycleEvaluator(rule)
    if pf is not None:
        ev.pf = pf
    return ev.amplitudes([k])[0]
