"""Offline multiple-changepoint detection under a normal likelihood.

Three solvers share one penalized objective

    sum_j C(segment_j) + k * beta

where C is twice the negative maximized segment log-likelihood and k is the
number of changepoints:

* ``pelt``   -- exact minimizer via the pruned dynamic program,
* ``binseg`` -- the classical greedy recursive-split approximation,
* ``exact_oracle`` -- brute-force enumeration for small series, used as an
  independent check on the other two.

Cost models: ``meanvar`` lets both segment mean and variance change,
``variance`` measures deviations about the full-series mean, ``mean`` is a
unit-variance residual sum of squares.  Penalties: AIC, BIC/SIC, MBIC and
manual; MBIC additionally augments each segment cost by log(segment length).

Changepoint index convention: tau_j is the last (0-based) index of segment j,
so a series with changepoints [t1, t2] has segments [0..t1], [t1+1..t2],
[t2+1..n-1].  Ties are always broken toward the smallest index, making every
solver deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, timedelta
from enum import Enum
from itertools import combinations

import numpy as np

from .errors import LengthError, ParameterError, SizeError
from .series import DailySeries

__all__ = [
    "CostModel",
    "PenaltyKind",
    "PenaltySpec",
    "SegmentStats",
    "Segmentation",
    "segment_cost",
    "penalty_value",
    "binseg",
    "pelt",
    "exact_oracle",
]

LOG_2PI = math.log(2.0 * math.pi)
VARIANCE_FLOOR = 1e-8
ORACLE_MAX_N = 40


class CostModel(str, Enum):
    MEAN = "mean"
    VARIANCE = "variance"
    MEANVAR = "meanvar"

    @property
    def diffparam(self) -> int:
        """Number of distribution parameters free to change per segment."""
        return 2 if self is CostModel.MEANVAR else 1

    @property
    def min_segment_length(self) -> int:
        """Variance-bearing models need two points to avoid log(0)."""
        return 1 if self is CostModel.MEAN else 2


class PenaltyKind(str, Enum):
    AIC = "aic"
    BIC = "bic"
    SIC = "sic"
    MBIC = "mbic"
    MANUAL = "manual"


@dataclass(frozen=True)
class PenaltySpec:
    kind: PenaltyKind
    manual_value: float | None = None

    def __post_init__(self):
        kind = PenaltyKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is PenaltyKind.MANUAL:
            if self.manual_value is None or self.manual_value < 0:
                raise ParameterError("manual penalty needs a non-negative value")
        elif self.manual_value is not None:
            raise ParameterError(f"{kind.value} penalty takes no manual value")

    @property
    def augment_costs(self) -> bool:
        return self.kind is PenaltyKind.MBIC


@dataclass(frozen=True)
class SegmentStats:
    start: int
    n: int
    mean: float
    variance: float  # maximum-likelihood (divisor n), matching the cost


@dataclass(frozen=True)
class Segmentation:
    method: str
    model: CostModel
    penalty_kind: PenaltyKind
    penalty: float
    changepoints: tuple[int, ...]
    segments: tuple[SegmentStats, ...]
    objective: float
    degenerate: bool = False  # some segment variance hit the floor
    start_date: date | None = None

    @property
    def changepoint_dates(self) -> list[date]:
        if self.start_date is None:
            return []
        return [self.start_date + timedelta(days=int(t)) for t in self.changepoints]

    def to_json_dict(self) -> dict:
        segments = [{
            "start_date": (None if self.start_date is None
                           else (self.start_date + timedelta(days=s.start)).isoformat()),
            "n": s.n,
            "mean": s.mean,
            "variance": s.variance,
        } for s in self.segments]
        return {
            "method": self.method,
            "model": self.model.value,
            "penalty": {"kind": self.penalty_kind.value, "value": self.penalty},
            "changepoint_indices": [int(t) for t in self.changepoints],
            "changepoint_dates": [d.isoformat() for d in self.changepoint_dates],
            "segments": segments,
            "objective": self.objective,
            "degenerate": self.degenerate,
        }


class _CostEvaluator:
    """O(1) segment costs from cumulative sums, shared by all solvers."""

    def __init__(self, values: np.ndarray, model: CostModel,
                 global_mean: float | None = None, augment: bool = False):
        x = np.asarray(values, dtype=float)
        self.n = len(x)
        self.model = model
        self.augment = augment
        self.floored = False
        self.s1 = np.concatenate(([0.0], np.cumsum(x)))
        self.s2 = np.concatenate(([0.0], np.cumsum(x * x)))
        if model is CostModel.VARIANCE:
            mu = float(np.mean(x)) if global_mean is None else float(global_mean)
            self.global_mean = mu
            dev = (x - mu) ** 2
            self.sg = np.concatenate(([0.0], np.cumsum(dev)))
        else:
            self.global_mean = global_mean

    def cost(self, lo, hi):
        """Twice negative max log-likelihood of segment [lo, hi] (inclusive).

        Accepts scalars or equal-shaped integer arrays.
        """
        lo = np.asarray(lo)
        hi = np.asarray(hi)
        m = (hi - lo + 1).astype(float)
        if np.any(m < self.model.min_segment_length):
            raise LengthError(
                f"{self.model.value} segments need at least "
                f"{self.model.min_segment_length} points")
        if self.model is CostModel.MEAN:
            s1 = self.s1[hi + 1] - self.s1[lo]
            s2 = self.s2[hi + 1] - self.s2[lo]
            out = s2 - s1 * s1 / m
            out = np.maximum(out, 0.0)
        else:
            if self.model is CostModel.MEANVAR:
                s1 = self.s1[hi + 1] - self.s1[lo]
                s2 = self.s2[hi + 1] - self.s2[lo]
                sigma2 = s2 / m - (s1 / m) ** 2
            else:
                sigma2 = (self.sg[hi + 1] - self.sg[lo]) / m
            clipped = np.maximum(sigma2, VARIANCE_FLOOR)
            if np.any(sigma2 < VARIANCE_FLOOR):
                self.floored = True
            out = m * (LOG_2PI + np.log(clipped) + 1.0)
        if self.augment:
            out = out + np.log(m)
        return float(out) if out.ndim == 0 else out


def segment_cost(s: DailySeries, lo: int, hi: int, model: CostModel,
                 global_mean: float | None = None) -> float:
    """Cost of the single segment [lo, hi] of ``s`` under ``model``.

    For the variance model deviations are taken about ``global_mean``
    (defaulting to the full-series mean).  The ML variance is floored at
    1e-8 so constant plateaus stay finite.
    """
    model = CostModel(model)
    if not 0 <= lo <= hi < len(s):
        raise ParameterError(f"invalid segment [{lo}, {hi}] for series of length {len(s)}")
    ev = _CostEvaluator(s.values, model, global_mean=global_mean)
    return ev.cost(lo, hi)


def penalty_value(spec: PenaltySpec, n: int, model: CostModel) -> float:
    """Per-changepoint penalty beta for a series of length n."""
    if n < 2:
        raise ParameterError("penalty needs series length >= 2")
    model = CostModel(model)
    p = model.diffparam
    kind = spec.kind
    if kind is PenaltyKind.AIC:
        return 2.0 * (p + 1)
    if kind in (PenaltyKind.BIC, PenaltyKind.SIC):
        return (p + 1) * math.log(n)
    if kind is PenaltyKind.MBIC:
        return (p + 2) * math.log(n)
    return float(spec.manual_value)


def _check_solver_input(s: DailySeries, model: CostModel):
    n = len(s)
    if n < 2 * model.min_segment_length:
        raise LengthError(
            f"series of length {n} too short for {model.value} segmentation")


def _build_segmentation(method: str, s: DailySeries, model: CostModel,
                        spec: PenaltySpec, beta: float,
                        cps: list[int], objective: float,
                        degenerate: bool) -> Segmentation:
    edges = [0] + [int(t) + 1 for t in cps] + [len(s)]
    segments = []
    for a, b in zip(edges, edges[1:]):
        chunk = s.values[a:b]
        segments.append(SegmentStats(
            start=a, n=b - a,
            mean=float(np.mean(chunk)),
            variance=float(np.mean((chunk - np.mean(chunk)) ** 2)),
        ))
    return Segmentation(
        method=method, model=model, penalty_kind=spec.kind, penalty=beta,
        changepoints=tuple(int(t) for t in cps), segments=tuple(segments),
        objective=float(objective), degenerate=degenerate, start_date=s.start_date,
    )


def pelt(s: DailySeries, model: CostModel, penalty: PenaltySpec) -> Segmentation:
    """Exact penalized segmentation via the pruned dynamic program.

    F(t) = min over admissible s of F(s) + C(s+1..t) + beta, pruning a
    candidate s as soon as F(s) + C(s+1..t) > F(t).  Ties in the minimum go
    to the smallest candidate.
    """
    model = CostModel(model)
    _check_solver_input(s, model)
    n = len(s)
    beta = penalty_value(penalty, n, model)
    if math.isinf(beta):
        ev = _CostEvaluator(s.values, model, augment=penalty.augment_costs)
        cost = ev.cost(0, n - 1)
        return _build_segmentation("pelt", s, model, penalty, beta, [], cost, ev.floored)

    ev = _CostEvaluator(s.values, model, augment=penalty.augment_costs)
    minseg = model.min_segment_length

    # F[t] = best objective for the prefix of length t, with F[0] = -beta so
    # the final F[n] equals total segment cost + k*beta.
    F = np.full(n + 1, np.inf)
    F[0] = -beta
    prev = np.zeros(n + 1, dtype=int)
    candidates = [0]
    # A candidate failing the prune test at time t is provably dominated only
    # from t+minseg onward; with 2-point minimum segments it must survive the
    # intermediate step, so removal is deferred rather than immediate.
    removal_at: dict[int, int] = {}

    for t in range(minseg, n + 1):
        candidates = [c for c in candidates if removal_at.get(c, n + 2) > t]
        cand = np.asarray([c for c in candidates if t - c >= minseg], dtype=int)
        if cand.size == 0:
            continue
        segcost = ev.cost(cand, np.full(cand.shape, t - 1))
        totals = F[cand] + segcost + beta
        best = int(np.argmin(totals))  # first occurrence = smallest candidate
        F[t] = totals[best]
        prev[t] = cand[best]
        for c in cand[F[cand] + segcost > F[t]]:
            removal_at.setdefault(int(c), t + minseg)
        new_candidate = t - minseg + 1
        if new_candidate >= minseg:
            candidates.append(new_candidate)

    cps: list[int] = []
    t = n
    while t > 0:
        start = prev[t]
        if start > 0:
            cps.append(start - 1)
        t = start
    cps.reverse()
    return _build_segmentation("pelt", s, model, penalty, beta, cps, F[n], ev.floored)


def binseg(s: DailySeries, model: CostModel, penalty: PenaltySpec,
           q_max: int) -> Segmentation:
    """Greedy binary segmentation capped at ``q_max`` changepoints.

    Repeatedly takes the admissible split with the largest cost reduction
    Delta = C(segment) - C(left) - C(right), accepting only if Delta > beta.
    Ties go to the smallest split index.
    """
    model = CostModel(model)
    if q_max < 1:
        raise ParameterError(f"q_max must be >= 1, got {q_max}")
    _check_solver_input(s, model)
    n = len(s)
    beta = penalty_value(penalty, n, model)
    ev = _CostEvaluator(s.values, model, augment=penalty.augment_costs)
    minseg = model.min_segment_length

    cps: list[int] = []
    segments = [(0, n - 1)]
    while len(cps) < q_max:
        best_gain = -math.inf
        best_tau = None
        best_seg = None
        for lo, hi in segments:
            taus = np.arange(lo + minseg - 1, hi - minseg + 1)
            if taus.size == 0:
                continue
            whole = ev.cost(lo, hi)
            left = ev.cost(np.full(taus.shape, lo), taus)
            right = ev.cost(taus + 1, np.full(taus.shape, hi))
            gains = whole - left - right
            i = int(np.argmax(gains))
            if gains[i] > best_gain or (gains[i] == best_gain
                                        and best_tau is not None and taus[i] < best_tau):
                best_gain = float(gains[i])
                best_tau = int(taus[i])
                best_seg = (lo, hi)
        if best_tau is None or not best_gain > beta:
            break
        cps.append(best_tau)
        lo, hi = best_seg
        segments.remove(best_seg)
        segments.extend([(lo, best_tau), (best_tau + 1, hi)])

    cps.sort()
    objective = _objective_for(ev, n, cps, beta)
    return _build_segmentation("binseg", s, model, penalty, beta, cps, objective, ev.floored)


def exact_oracle(s: DailySeries, model: CostModel, penalty: PenaltySpec,
                 max_k: int) -> Segmentation:
    """Global optimum by enumerating every segmentation with <= max_k cuts.

    Capped at series length 40; intended purely as an independent check on
    pelt/binseg, so the search is exhaustive enumeration rather than any
    dynamic program.
    """
    model = CostModel(model)
    _check_solver_input(s, model)
    n = len(s)
    if n > ORACLE_MAX_N:
        raise SizeError(f"exact_oracle caps at n={ORACLE_MAX_N}, got {n}")
    if max_k < 0:
        raise ParameterError("max_k must be >= 0")
    beta = penalty_value(penalty, n, model)
    ev = _CostEvaluator(s.values, model, augment=penalty.augment_costs)
    minseg = model.min_segment_length

    best_obj = ev.cost(0, n - 1)
    best_cps: tuple[int, ...] = ()
    if not math.isinf(beta):
        positions = list(range(minseg - 1, n - minseg))
        for k in range(1, max_k + 1):
            if k > len(positions):
                break
            combos = np.asarray(list(combinations(positions, k)), dtype=int)
            if combos.size == 0:
                break
            if k > 1:
                ok = np.all(np.diff(combos, axis=1) >= minseg, axis=1)
                combos = combos[ok]
                if combos.size == 0:
                    continue
            # edges[:, j] = last index of segment j; costs evaluated in bulk
            edges = np.hstack([np.full((len(combos), 1), -1, dtype=int),
                               combos,
                               np.full((len(combos), 1), n - 1, dtype=int)])
            objs = np.full(len(combos), k * beta)
            for j in range(k + 1):
                objs += ev.cost(edges[:, j] + 1, edges[:, j + 1])
            i = int(np.argmin(objs))  # first minimum = lexicographically smallest
            if objs[i] < best_obj - 1e-12:
                best_obj = float(objs[i])
                best_cps = tuple(int(t) for t in combos[i])
    return _build_segmentation("oracle", s, model, penalty, beta,
                               list(best_cps), best_obj, ev.floored)


def _objective_for(ev: _CostEvaluator, n: int, cps: list[int], beta: float) -> float:
    edges = [-1] + list(cps) + [n - 1]
    total = len(cps) * (0.0 if math.isinf(beta) else beta)
    for a, b in zip(edges, edges[1:]):
        total += ev.cost(a + 1, b)
    return total
