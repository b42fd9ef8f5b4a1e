"""Two-sample t-tests, Bonferroni correction, and one-way ANOVA.

The per-problem comparison is the classical pooled-variance Student t-test
with the one-sided alternative "first sample mean is greater"; a Welch
variant sits behind a flag for sensitivity checks.  p-values come from
deterministic special-function evaluation (regularized incomplete beta via
scipy.special), so results are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

from .errors import DomainError, ParameterError

__all__ = [
    "TestKind",
    "TestResult",
    "ProblemComparison",
    "t_test_greater",
    "bonferroni",
    "anova_oneway",
    "multi_compare",
]


class TestKind(str, Enum):
    __test__ = False  # keep pytest from collecting this as a test class

    T_ONE_SIDED_GREATER = "t_one_sided_greater"
    ANOVA_F = "anova_f"


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: float
    p_value: float
    alpha_used: float
    reject: bool
    test_kind: TestKind
    df2: float | None = None  # denominator df, ANOVA only

    def to_json_dict(self) -> dict:
        out = {
            "statistic": self.statistic,
            "df": self.df,
            "p": self.p_value,
            "alpha_used": self.alpha_used,
            "reject": self.reject,
            "test_kind": self.test_kind.value,
        }
        if self.df2 is not None:
            out["df2"] = self.df2
        return out


@dataclass(frozen=True)
class ProblemComparison:
    problem: str
    result: TestResult | None
    error: str | None = None


def t_test_greater(a, b, alpha: float = 0.05, welch: bool = False) -> TestResult:
    """Two-sample t-test of H1: mean(a) > mean(b).

    Pooled-variance Student form by default, df = n1 + n2 - 2.  With both
    sample variances zero the p-value is 0.5 for equal means and 0 or 1 by
    sign otherwise.
    """
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    n1, n2 = len(av), len(bv)
    if n1 < 2 or n2 < 2:
        raise ParameterError("both samples need at least 2 observations")
    m1, m2 = float(np.mean(av)), float(np.mean(bv))
    v1 = float(np.var(av, ddof=1))
    v2 = float(np.var(bv, ddof=1))

    if welch:
        se2 = v1 / n1 + v2 / n2
        if se2 == 0.0:
            return _degenerate_t(m1, m2, float(n1 + n2 - 2), alpha)
        df = se2 ** 2 / ((v1 / n1) ** 2 / (n1 - 1) + (v2 / n2) ** 2 / (n2 - 1))
        t = (m1 - m2) / math.sqrt(se2)
    else:
        df = float(n1 + n2 - 2)
        pooled = ((n1 - 1) * v1 + (n2 - 1) * v2) / df
        if pooled == 0.0:
            return _degenerate_t(m1, m2, df, alpha)
        t = (m1 - m2) / math.sqrt(pooled * (1.0 / n1 + 1.0 / n2))

    p = float(special.stdtr(df, -t))  # upper tail by symmetry
    return TestResult(statistic=float(t), df=float(df), p_value=p,
                      alpha_used=alpha, reject=p < alpha,
                      test_kind=TestKind.T_ONE_SIDED_GREATER)


def bonferroni(alpha: float, m: int) -> float:
    """Family-wise significance cut-off alpha/m."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    if m < 1:
        raise DomainError(f"family size must be >= 1, got {m}")
    return alpha / m


def anova_oneway(groups, alpha: float = 0.05) -> TestResult:
    """One-way ANOVA F-test across k groups.

    F = MS_between / MS_within with df (k-1, N-k); the upper-tail p-value
    comes from the regularized incomplete beta.  With no within-group and no
    between-group variance the statistic is undefined.
    """
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if len(arrays) < 2:
        raise ParameterError("ANOVA needs at least 2 groups")
    if any(len(g) < 2 for g in arrays):
        raise ParameterError("every group needs at least 2 observations")
    k = len(arrays)
    n_total = sum(len(g) for g in arrays)
    grand = float(np.mean(np.concatenate(arrays)))
    ss_between = sum(len(g) * (float(np.mean(g)) - grand) ** 2 for g in arrays)
    ss_within = sum(float(np.sum((g - np.mean(g)) ** 2)) for g in arrays)
    df1 = float(k - 1)
    df2 = float(n_total - k)
    if ss_within == 0.0 and ss_between == 0.0:
        raise DomainError("F undefined: no variance within or between groups")
    if ss_within == 0.0:
        return TestResult(statistic=math.inf, df=df1, df2=df2, p_value=0.0,
                          alpha_used=alpha, reject=True, test_kind=TestKind.ANOVA_F)
    f = (ss_between / df1) / (ss_within / df2)
    p = float(special.fdtrc(df1, df2, f))
    return TestResult(statistic=float(f), df=df1, df2=df2, p_value=p,
                      alpha_used=alpha, reject=p < alpha, test_kind=TestKind.ANOVA_F)


def multi_compare(series_by_problem: dict, alpha: float = 0.05,
                  welch: bool = False) -> list[ProblemComparison]:
    """Per-problem one-sided t-tests at the Bonferroni-corrected level.

    ``series_by_problem`` maps problem name to a (sample_a, sample_b) pair.
    Output is ordered by ascending p-value (errors last, alphabetically);
    problems whose samples are unusable carry an error annotation instead of
    aborting the family.
    """
    if not series_by_problem:
        raise ParameterError("need at least one problem to compare")
    alpha_used = bonferroni(alpha, len(series_by_problem))
    rows: list[ProblemComparison] = []
    for problem, (sample_a, sample_b) in series_by_problem.items():
        try:
            result = t_test_greater(sample_a, sample_b, alpha=alpha_used, welch=welch)
            rows.append(ProblemComparison(problem=problem, result=result))
        except (ParameterError, DomainError) as exc:
            rows.append(ProblemComparison(problem=problem, result=None, error=str(exc)))
    rows.sort(key=lambda r: (r.result is None,
                             r.result.p_value if r.result else 0.0,
                             r.problem))
    return rows


def _degenerate_t(m1: float, m2: float, df: float, alpha: float) -> TestResult:
    if m1 == m2:
        t, p = 0.0, 0.5
    elif m1 > m2:
        t, p = math.inf, 0.0
    else:
        t, p = -math.inf, 1.0
    return TestResult(statistic=t, df=df, p_value=p, alpha_used=alpha,
                      reject=p < alpha, test_kind=TestKind.T_ONE_SIDED_GREATER)
