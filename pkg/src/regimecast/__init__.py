"""Regime-shift statistics and pandemic EMS demand forecasting.

Subpackages: ingest (incident CSVs and daily aggregation), series (the
calendar-aligned container and smoothing), changepoint (PELT, binary
segmentation and the exact enumeration oracle), regression (regime-dummy
time-series regression with ARMA-error order selection), hypotests (the
t/ANOVA battery), synth (seeded synthetic generators), cli (the pipeline
commands).
"""

from .changepoint import (
    CostModel,
    PenaltyKind,
    PenaltySpec,
    Segmentation,
    binseg,
    exact_oracle,
    pelt,
    penalty_value,
    segment_cost,
)
from .hypotests import TestResult, anova_oneway, bonferroni, multi_compare, t_test_greater
from .ingest import (
    IncidentRecord,
    IncidentTable,
    ResponseIntervals,
    Status,
    Stream,
    StreamLabel,
    classify_incident,
    daily_counts,
    parse_hospitalization,
    parse_incidents,
    response_intervals,
)
from .regression import (
    DesignMatrix,
    FitMetrics,
    RegimeModelFit,
    build_design,
    evaluate,
    fit_arma_errors,
    fit_ols,
    predict,
    split_chronological,
    stepwise_select,
)
from .series import (
    DailySeries,
    PeriodSpec,
    moving_average,
    series_from_csv,
    series_to_csv,
    slice_periods,
    summarize,
)
from .synth import (
    DgpSpec,
    RegimeSpec,
    gen_hosp_like,
    gen_piecewise_normal,
    gen_regression_dgp,
    simulate_inar1,
)

__version__ = "0.1.0"
