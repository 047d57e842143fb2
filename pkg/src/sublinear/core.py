"""Sub-linear expectations as maxima of per-model means.

A finite family of scenario models stands in for the measure family; every
``sup_P`` becomes a maximum over the rows of a (model x path) matrix.
Means are formed with ``math.fsum`` so the result does not depend on how the
path axis is traversed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np


class EmptyFamilyError(ValueError):
    pass


class NonFiniteStatisticError(ValueError):
    pass


class PairingError(ValueError):
    pass


@dataclass(frozen=True)
class GParams:
    """Variance band [sigma_lo^2, sigma_hi^2]; ``beta`` is always sigma_hi / sigma_lo."""

    sigma_lo: float
    sigma_hi: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma_lo) and math.isfinite(self.sigma_hi)):
            raise ValueError("volatilities must be finite")
        if not 0 < self.sigma_lo <= self.sigma_hi:
            raise ValueError(
                f"need 0 < sigma_lo <= sigma_hi, got sigma_lo={self.sigma_lo}, "
                f"sigma_hi={self.sigma_hi}"
            )

    @property
    def beta(self) -> float:
        return self.sigma_hi / self.sigma_lo

    @property
    def sigma_mid(self) -> float:
        return 0.5 * (self.sigma_lo + self.sigma_hi)

    @property
    def is_classical(self) -> bool:
        return self.sigma_lo == self.sigma_hi

    @classmethod
    def from_beta(cls, beta: float) -> "GParams":
        """Band with sigma_lo + sigma_hi = 2, i.e. sigma_lo = 2/(1+beta)."""
        if beta < 1:
            raise ValueError(f"beta must be >= 1, got {beta}")
        return cls(2.0 / (1.0 + beta), 2.0 * beta / (1.0 + beta))

    def normalized(self) -> "GParams":
        """Band of the limit law of S_n / B_n, i.e. divided by sigma_mid."""
        m = self.sigma_mid
        return GParams(self.sigma_lo / m, self.sigma_hi / m)


@dataclass(frozen=True)
class ModelMean:
    model: str
    mean: float
    stderr: float


@dataclass(frozen=True)
class UpperExpectationEstimate:
    value: float
    per_model: tuple[ModelMean, ...]
    n_paths: int

    @property
    def argmax(self) -> ModelMean:
        return max(self.per_model, key=lambda m: m.mean)


@dataclass(frozen=True)
class EventProbEstimate:
    upper: float
    lower: float
    per_model: tuple[tuple[str, float], ...]
    n_paths: int


def _as_family(stat_values) -> tuple[list[str], np.ndarray]:
    if isinstance(stat_values, Mapping):
        ids = [str(k) for k in stat_values]
        rows = [np.asarray(v, dtype=float).ravel() for v in stat_values.values()]
        if not rows:
            raise EmptyFamilyError("empty family")
        lengths = {len(r) for r in rows}
        if len(lengths) != 1:
            raise ValueError(f"models have different path counts: {sorted(lengths)}")
        mat = np.vstack(rows)
    else:
        mat = np.asarray(stat_values, dtype=float)
        if mat.ndim == 1:
            mat = mat[None, :]
        if mat.ndim != 2:
            raise ValueError("expected a (model x path) matrix")
        ids = [f"m{i}" for i in range(mat.shape[0])]
    if mat.shape[0] == 0:
        raise EmptyFamilyError("empty family")
    if mat.shape[1] == 0:
        raise ValueError("no paths")
    if not np.all(np.isfinite(mat)):
        raise NonFiniteStatisticError("non-finite statistic")
    return ids, mat


def _mean_se(row: np.ndarray) -> tuple[float, float]:
    n = row.size
    mean = math.fsum(row.tolist()) / n
    if n < 2:
        return mean, 0.0
    dev = row - mean
    var = math.fsum((dev * dev).tolist()) / (n - 1)
    return mean, math.sqrt(var / n)


def upper_expect(stat_values) -> UpperExpectationEstimate:
    """max over models of the per-model sample mean.

    ``stat_values`` is a (model x path) array or a mapping model id -> values.
    """
    ids, mat = _as_family(stat_values)
    per_model = tuple(ModelMean(i, *_mean_se(row)) for i, row in zip(ids, mat))
    value = max(m.mean for m in per_model)
    return UpperExpectationEstimate(value, per_model, mat.shape[1])


def lower_expect(stat_values) -> float:
    ids, mat = _as_family(stat_values)
    return -upper_expect(dict(zip(ids, -mat))).value


def event_prob(indicator_values) -> EventProbEstimate:
    ids, mat = _as_family(indicator_values)
    if not np.all((mat == 0.0) | (mat == 1.0)):
        raise ValueError("indicator entries must be 0 or 1")
    n = mat.shape[1]
    counts = mat.sum(axis=1).astype(np.int64)
    freqs = tuple((i, int(c) / n) for i, c in zip(ids, counts))
    return EventProbEstimate(
        upper=int(counts.max()) / n,
        lower=int(counts.min()) / n,
        per_model=freqs,
        n_paths=n,
    )


@dataclass(frozen=True)
class AxiomResult:
    axiom: str
    passed: bool
    lhs: Fraction
    rhs: Fraction


@dataclass(frozen=True)
class AxiomReport:
    results: tuple[AxiomResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self) -> list[str]:
        return [
            f"{r.axiom}: {'pass' if r.passed else 'FAIL'} (lhs={float(r.lhs):.6g}, "
            f"rhs={float(r.rhs):.6g})"
            for r in self.results
        ]


def _exact_matrix(mat: np.ndarray) -> list[list[Fraction]]:
    return [[Fraction(v) for v in row] for row in np.asarray(mat, dtype=float).tolist()]


def _exact_upper(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    n = len(rows[0])
    return max(sum(r, Fraction(0)) / n for r in rows)


def check_axioms(x, y, lam: float = 2.0, c: float = 1.0) -> AxiomReport:
    """Check the four sub-linear expectation axioms on paired evaluations.

    ``x`` and ``y`` are (model x path) matrices evaluated on the same
    (model, path, seed) grid. All arithmetic is done on the exact rational
    values of the inputs, so every check is an equality/inequality with zero
    tolerance.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 2:
        raise PairingError("paired evaluation required")
    if x.shape[0] == 0:
        raise EmptyFamilyError("empty family")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise NonFiniteStatisticError("non-finite statistic")
    if lam < 0:
        raise ValueError("lambda must be >= 0")

    ex, ey = _exact_matrix(x), _exact_matrix(y)
    lam_q, c_q = Fraction(lam), Fraction(c)
    ux, uy = _exact_upper(ex), _exact_upper(ey)

    # monotonicity: compare X with its pointwise minimum against Y
    lo = [[min(a, b) for a, b in zip(rx, ry)] for rx, ry in zip(ex, ey)]
    u_lo = _exact_upper(lo)
    mono = AxiomResult("monotonicity", ux >= u_lo, ux, u_lo)

    const_rows = [[c_q] * len(ex[0]) for _ in ex]
    u_c = _exact_upper(const_rows)
    const = AxiomResult("constant_preserving", u_c == c_q, u_c, c_q)

    s = [[a + b for a, b in zip(rx, ry)] for rx, ry in zip(ex, ey)]
    u_s = _exact_upper(s)
    sub = AxiomResult("sub_additivity", u_s <= ux + uy, u_s, ux + uy)

    scaled = [[lam_q * a for a in rx] for rx in ex]
    u_l = _exact_upper(scaled)
    hom = AxiomResult("positive_homogeneity", u_l == lam_q * ux, u_l, lam_q * ux)

    return AxiomReport((mono, const, sub, hom))
