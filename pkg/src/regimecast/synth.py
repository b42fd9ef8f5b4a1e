"""Reproducible synthetic series standing in for the non-distributable data.

Three generator families:

* piecewise-normal regime series (daily EMS-demand shape),
* a four-regime hospitalization-like series whose variance contrasts make
  the regime boundaries recoverable by variance-model changepoint detection,
* the regression data-generating process that ties a smoothed
  hospitalization regressor to a pandemic-calls target through known
  coefficients, and
* integer count series from the binomial-thinning INAR(1) recursion.

Randomness: every generator draws from ``numpy.random.Generator`` backed by
the 64-bit PCG64 bit generator, seeded through ``numpy.random.SeedSequence``
with the caller's integer seed, so identical (spec, seed) inputs reproduce
byte-identical series.  Where one operation needs several independent
streams they are the numbered children of ``SeedSequence(seed).spawn(...)``
in a fixed order.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .errors import DomainError, ParameterError
from .regression import DesignMatrix, build_design
from .series import DailySeries, moving_average

__all__ = [
    "RegimeSpec",
    "DgpSpec",
    "DgpData",
    "EMS_REGIME_PRESET",
    "HOSP_BOUNDARIES",
    "HOSP_LEVELS",
    "HOSP_SDS",
    "gen_piecewise_normal",
    "gen_hosp_like",
    "gen_regression_dgp",
    "simulate_inar1",
]

# Daily non-pandemic demand: long pre-shock plateau, sharp drop, partial
# rebound.  (length, mean, sd) per regime.
EMS_REGIME_PRESET = ((442, 225.69, 19.43), (56, 155.84, 20.23), (233, 169.53, 14.76))
EMS_START = date(2019, 1, 1)

# Hospitalization-like defaults: four regimes over 267 days; boundaries are
# the last index of each regime.  Levels rise mildly in the surge regimes
# while the noise scale carries the detectable contrast (adjacent effective
# variance ratios stay >= 4 about the global mean).
HOSP_START = date(2020, 4, 9)
HOSP_LENGTH = 267
HOSP_BOUNDARIES = (60, 131, 210)
HOSP_LEVELS = (40.0, 44.0, 40.0, 46.0)
HOSP_SDS = (4.0, 52.0, 6.0, 68.0)


@dataclass(frozen=True)
class RegimeSpec:
    """Piecewise-normal generator spec: per-segment (length, mean, sd)."""

    lengths: tuple[int, ...]
    means: tuple[float, ...]
    sds: tuple[float, ...]
    seed: int
    start_date: date = EMS_START
    round_to_int: bool = False

    def __post_init__(self):
        if not (len(self.lengths) == len(self.means) == len(self.sds)):
            raise ParameterError("lengths, means and sds must align")
        if not self.lengths:
            raise ParameterError("need at least one segment")
        if any(n < 2 for n in self.lengths):
            raise ParameterError("segment lengths must be >= 2")
        if any(sd <= 0 for sd in self.sds):
            raise ParameterError("segment sds must be > 0")
        object.__setattr__(self, "lengths", tuple(int(n) for n in self.lengths))
        object.__setattr__(self, "means", tuple(float(v) for v in self.means))
        object.__setattr__(self, "sds", tuple(float(v) for v in self.sds))

    @classmethod
    def from_triples(cls, triples, seed: int, start_date: date = EMS_START,
                     round_to_int: bool = False) -> "RegimeSpec":
        lengths, means, sds = zip(*triples)
        return cls(lengths=lengths, means=means, sds=sds, seed=seed,
                   start_date=start_date, round_to_int=round_to_int)

    def to_json_dict(self) -> dict:
        return {
            "segments": [{"n": n, "mean": m, "sd": s}
                         for n, m, s in zip(self.lengths, self.means, self.sds)],
            "seed": self.seed,
            "start_date": self.start_date.isoformat(),
            "round_to_int": self.round_to_int,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "RegimeSpec":
        triples = [(seg["n"], seg["mean"], seg["sd"]) for seg in obj["segments"]]
        return cls.from_triples(
            triples, seed=int(obj["seed"]),
            start_date=date.fromisoformat(obj.get("start_date", EMS_START.isoformat())),
            round_to_int=bool(obj.get("round_to_int", False)))


@dataclass(frozen=True)
class DgpSpec:
    """Generative counterpart of the fitted regression model.

    ``coefficients`` is (intercept, hosp slope, regime offsets...);
    ``cp_offsets`` are the last indices of the hosp regimes (the step dummy
    for offset tau turns on at index tau + 1).  ``noise_sd`` is the total
    raw-target noise scale; a ``smooth_frac`` share of its variance lands on
    the smoothed target and the rest is day-level roughness on top of it.
    """

    coefficients: tuple[float, ...] = (15.09774, 0.40327, 13.87507, 7.90718, 6.72668)
    cp_offsets: tuple[int, ...] = (59, 125, 183)
    noise_sd: float = 5.435
    smooth_frac: float = 0.6
    seed: int = 0
    n: int = HOSP_LENGTH
    start_date: date = HOSP_START
    hosp_levels: tuple[float, ...] = HOSP_LEVELS
    hosp_sds: tuple[float, ...] = HOSP_SDS
    smoothing_window: int = 7

    def __post_init__(self):
        if self.noise_sd < 0:
            raise ParameterError("noise_sd must be >= 0")
        if not 0.0 <= self.smooth_frac <= 1.0:
            raise ParameterError("smooth_frac must be in [0, 1]")
        if len(self.coefficients) != 2 + len(self.cp_offsets):
            raise ParameterError("need one coefficient per dummy plus intercept and slope")
        offsets = tuple(int(o) for o in self.cp_offsets)
        for a, b in zip(offsets, offsets[1:]):
            if a >= b:
                raise ParameterError("cp_offsets must be strictly increasing")
        if offsets and not (0 < offsets[0] and offsets[-1] < self.n - 1):
            raise ParameterError("cp_offsets must lie strictly inside the series")
        object.__setattr__(self, "cp_offsets", offsets)
        object.__setattr__(self, "coefficients",
                           tuple(float(c) for c in self.coefficients))

    def to_json_dict(self) -> dict:
        return {
            "coefficients": list(self.coefficients),
            "cp_offsets": list(self.cp_offsets),
            "noise_sd": self.noise_sd,
            "smooth_frac": self.smooth_frac,
            "seed": self.seed,
            "n": self.n,
            "start_date": self.start_date.isoformat(),
            "hosp_levels": list(self.hosp_levels),
            "hosp_sds": list(self.hosp_sds),
            "smoothing_window": self.smoothing_window,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "DgpSpec":
        kwargs = dict(obj)
        if "start_date" in kwargs:
            kwargs["start_date"] = date.fromisoformat(kwargs["start_date"])
        for tuple_key in ("coefficients", "cp_offsets", "hosp_levels", "hosp_sds"):
            if tuple_key in kwargs:
                kwargs[tuple_key] = tuple(kwargs[tuple_key])
        return cls(**kwargs)


@dataclass(frozen=True)
class DgpData:
    """Everything the generated regression problem consists of."""

    spec: DgpSpec
    hosp: DailySeries
    hosp_smoothed: DailySeries
    target_raw: DailySeries
    target_smoothed: DailySeries
    design: DesignMatrix
    cp_dates: tuple[date, ...]  # first day of each post-boundary regime


def _rng(seed) -> np.random.Generator:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(ss))


def gen_piecewise_normal(spec: RegimeSpec) -> DailySeries:
    """Concatenated independent N(mean, sd^2) draws, one block per segment."""
    rng = _rng(spec.seed)
    chunks = [rng.normal(m, s, n)
              for n, m, s in zip(spec.lengths, spec.means, spec.sds)]
    values = np.concatenate(chunks)
    if spec.round_to_int:
        values = np.rint(values)
    return DailySeries(spec.start_date, values)


def gen_hosp_like(seed: int,
                  levels: tuple[float, ...] = HOSP_LEVELS,
                  sds: tuple[float, ...] = HOSP_SDS,
                  boundaries: tuple[int, ...] = HOSP_BOUNDARIES,
                  n: int = HOSP_LENGTH,
                  start_date: date = HOSP_START) -> DailySeries:
    """Four-regime daily hospitalization stand-in, clipped at zero.

    ``boundaries`` hold the last index of each non-final regime; defaults
    give 61/71/79/56-day regimes whose variance contrast about the global
    mean exceeds 4x at every boundary.
    """
    if len(levels) != len(boundaries) + 1 or len(sds) != len(levels):
        raise ParameterError("need one (level, sd) per regime")
    edges = (-1,) + tuple(int(b) for b in boundaries) + (n - 1,)
    for a, b in zip(edges, edges[1:]):
        if b <= a:
            raise ParameterError("boundaries must be strictly increasing inside 0..n-1")
    rng = _rng(seed)
    chunks = []
    for i, (lo, hi) in enumerate(zip(edges, edges[1:])):
        chunks.append(rng.normal(levels[i], sds[i], hi - lo))
    return DailySeries(start_date, np.maximum(np.concatenate(chunks), 0.0))


def gen_regression_dgp(spec: DgpSpec) -> DgpData:
    """Draw one full regression problem from the generative model.

    The smoothed target is exactly design @ coefficients plus iid noise of
    sd noise_sd*sqrt(smooth_frac); the raw target adds independent
    day-level noise carrying the remaining variance share.  With
    noise_sd = 0 the smoothed target interpolates the model exactly.
    """
    hosp_seed, noise_seed = np.random.SeedSequence(spec.seed).spawn(2)
    hosp = gen_hosp_like(hosp_seed, levels=spec.hosp_levels, sds=spec.hosp_sds,
                         boundaries=spec.cp_offsets, n=spec.n,
                         start_date=spec.start_date)
    hosp_smoothed = moving_average(hosp, spec.smoothing_window)
    cp_dates = tuple(spec.start_date + timedelta(days=o + 1) for o in spec.cp_offsets)
    design = build_design(hosp_smoothed, cp_dates)
    signal = design.matrix @ np.asarray(spec.coefficients)

    rng = _rng(noise_seed)
    sd_smooth = spec.noise_sd * np.sqrt(spec.smooth_frac)
    sd_daily = spec.noise_sd * np.sqrt(1.0 - spec.smooth_frac)
    smooth_noise = rng.normal(0.0, sd_smooth, spec.n) if sd_smooth > 0 else np.zeros(spec.n)
    daily_noise = rng.normal(0.0, sd_daily, spec.n) if sd_daily > 0 else np.zeros(spec.n)

    target_smoothed = DailySeries(spec.start_date, signal + smooth_noise)
    target_raw = DailySeries(spec.start_date, target_smoothed.values + daily_noise)
    return DgpData(spec=spec, hosp=hosp, hosp_smoothed=hosp_smoothed,
                   target_raw=target_raw, target_smoothed=target_smoothed,
                   design=design, cp_dates=cp_dates)


def simulate_inar1(alpha: float, innovation_mean: float, n: int, seed: int,
                   start_date: date = EMS_START) -> DailySeries:
    """INAR(1) count series X_t = Binomial(X_{t-1}, alpha) + Poisson(lam).

    X_0 is drawn from the stationary-mean Poisson(lam/(1-alpha)) when
    alpha < 1, otherwise from the innovation distribution itself.
    """
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"thinning probability must be in [0, 1], got {alpha}")
    if innovation_mean < 0.0:
        raise DomainError(f"innovation mean must be >= 0, got {innovation_mean}")
    if n < 1:
        raise ParameterError("need n >= 1")
    rng = _rng(seed)
    innovations = rng.poisson(innovation_mean, n)
    values = np.empty(n, dtype=np.int64)
    if alpha < 1.0:
        values[0] = rng.poisson(innovation_mean / (1.0 - alpha))
    else:
        values[0] = innovations[0]
    for t in range(1, n):
        values[t] = rng.binomial(values[t - 1], alpha) + innovations[t]
    return DailySeries(start_date, values.astype(float))
