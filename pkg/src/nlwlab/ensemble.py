"""Monte Carlo experiments over the randomization of Cauchy data.

Each experiment draws ``samples`` randomized copies of a fixed pair, one per
sample index, computes a per-sample record and then reduces the records in
sample-index order.  Because every draw is addressed by ``(master seed,
sample index)`` the reduced report does not depend on how the samples were
spread over worker processes.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy import stats

from .fourier_field import (
    VOLUME,
    default_resolution,
    japanese,
    synthesize_array,
    wavenumber,
)
from .lp_calculus import _grid_norm, cutoff_symbol, time_norm
from .propagators import evolve_arrays
from .randomize import draw_randomized_pair
from .solver import BlowUpError, check_exponent, continuation_solve, solve_truncated

MIN_TAIL_SAMPLES = 500
MIN_EVENT_SAMPLES = 200
MIN_FIT_COUNT = 10


# ---------------------------------------------------------------------------
# linear statistics
# ---------------------------------------------------------------------------

def _linear_arrays(a, b, t, M, operator):
    if operator == "S":
        return evolve_arrays(a, b, t, M)[0]
    w, jb = wavenumber(M), japanese(M)
    return -(w / jb) * np.sin(t * w) * a + np.cos(t * w) / jb * b


def _spatial_norms(stack, r, resolution):
    """``L^r_x`` norms of a stack of amplitude arrays (Parseval for ``r = 2``)."""
    if r == 2:
        return np.sqrt(VOLUME * np.sum(np.abs(stack) ** 2, axis=(-3, -2, -1)))
    M = (stack.shape[-1] - 1) // 2
    G = default_resolution(M) if resolution is None else resolution
    return np.array([float(_grid_norm(synthesize_array(c, G), r, G)) for c in stack])


@dataclass(frozen=True)
class LinearStatistic:
    """``|| <nabla>^weight S*(t)(u0, u1) ||_{L^q_t L^r_x([t0, t0+T] x T^3)}``.

    ``operator`` is ``"S"`` for the free propagator or ``"tilde"`` for
    ``S~(t)``.  The time integral uses ``n_times`` equispaced samples and the
    trapezoid rule; ``q = inf`` is the maximum over the samples.
    """

    q: float = math.inf
    r: float = 2.0
    T: float = 1.0
    operator: str = "S"
    t0: float = 0.0
    n_times: int = 33
    weight: float = 0.0
    resolution: int | None = None

    def __post_init__(self):
        if self.operator not in ("S", "tilde"):
            raise ValueError("operator must be 'S' or 'tilde'")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not (1 <= self.q) or not (1 <= self.r):
            raise ValueError("exponents must be >= 1")
        if self.n_times < 2:
            raise ValueError("need at least two time samples")

    @classmethod
    def long_time(cls, r, T, operator="S", n_times=33, resolution=None):
        """``L^inf_t L^r_x([0, T])``, the statistic of the long-time estimate."""
        return cls(math.inf, r, T, operator, 0.0, n_times, 0.0, resolution)

    @property
    def label(self):
        q = "inf" if math.isinf(self.q) else f"{self.q:g}"
        r = "inf" if math.isinf(self.r) else f"{self.r:g}"
        op = "S" if self.operator == "S" else "S~"
        w = f"<D>^{self.weight:g} " if self.weight else ""
        return f"{w}{op} L^{q}_[{self.t0:g},{self.t0 + self.T:g}] L^{r}_x"

    def times(self):
        return np.linspace(self.t0, self.t0 + self.T, self.n_times)

    def spatial_series(self, pair):
        """``(times, L^r_x norms)`` along the linear evolution of ``pair``."""
        M = pair.cutoff
        a, b = pair.u0.coeffs, pair.u1.coeffs
        mult = japanese(M) ** self.weight if self.weight else None
        ts = self.times()
        out = np.empty(ts.size)
        chunk = 8
        for i in range(0, ts.size, chunk):
            stack = np.stack([_linear_arrays(a, b, t, M, self.operator) for t in ts[i:i + chunk]])
            if mult is not None:
                stack = stack * mult
            out[i:i + chunk] = _spatial_norms(stack, self.r, self.resolution)
        return ts, out

    def evaluate(self, pair):
        ts, values = self.spatial_series(pair)
        return time_norm(ts, values, self.q)

    def scale(self, pair, s=None, eps=0.01, long_time=False):
        """Denominator of the tail bound: ``|I|^{1/q} ||(u0,u1)||_{H^s}`` or ``max(1,T) ||.||_{H^eps}``."""
        if long_time:
            return max(1.0, self.T) * pair.norm(eps)
        s = pair.s if s is None else s
        inv_q = 0.0 if math.isinf(self.q) else 1.0 / self.q
        return self.T**inv_q * pair.norm(s)


# ---------------------------------------------------------------------------
# report types and small statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailFit:
    """Least-squares fit ``log P(X > lambda) = intercept + slope lambda^2``."""

    slope: float
    intercept: float
    r_squared: float
    points: int
    slope_stderr: float

    @property
    def c_hat(self):
        return -self.slope


@dataclass(frozen=True)
class EventFrequency:
    name: str
    prefactor: float
    count: int
    samples: int
    low: float
    high: float

    @property
    def frequency(self):
        return self.count / self.samples if self.samples else math.nan


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    r_squared: float
    slope_stderr: float


@dataclass
class EnsembleReport:
    """Outcome of one experiment.

    ``records`` holds one JSON-ready dict per sample (or per sample and
    ``N``), sorted by sample index; everything else is reduced from them.
    """

    experiment: str
    sample_count: int
    master_seed: int
    records: list
    norm_samples: dict = field(default_factory=dict)
    lambda_grid: np.ndarray | None = None
    empirical_tail: np.ndarray | None = None
    fit: TailFit | None = None
    events: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    @property
    def sample_indices(self):
        return sorted({r["sample"] for r in self.records})

    def to_ndjson(self, header=None):
        """One JSON object per line: optional header, then the per-sample records."""
        lines = []
        if header is not None:
            lines.append(_dumps(header))
        lines.extend(_dumps(r) for r in self.records)
        return "".join(line + "\n" for line in lines)

    def summary_rows(self):
        """Flat ``(key, value)`` rows for a summary CSV, in a fixed order."""
        rows = [("experiment", self.experiment), ("samples", self.sample_count),
                ("master_seed", self.master_seed)]
        for name, values in self.norm_samples.items():
            v = np.asarray(values, dtype=float)
            rows += [(f"{name}.mean", float(np.mean(v))), (f"{name}.median", float(np.median(v))),
                     (f"{name}.max", float(np.max(v)))]
        if self.fit is not None:
            rows += [("fit.slope", self.fit.slope), ("fit.intercept", self.fit.intercept),
                     ("fit.r_squared", self.fit.r_squared), ("fit.points", self.fit.points)]
        for ev in self.events:
            key = f"event.{ev.name}@{ev.prefactor:g}"
            rows += [(f"{key}.frequency", ev.frequency), (f"{key}.low", ev.low), (f"{key}.high", ev.high)]
        for k in sorted(self.summary):
            rows.append((f"summary.{k}", self.summary[k]))
        for i, d in enumerate(self.diagnostics):
            rows.append((f"diagnostic.{i}", d))
        return rows


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _dumps(record):
    return json.dumps(_clean(record), sort_keys=True, allow_nan=False, separators=(",", ":"))


def wilson_interval(count, n, confidence=0.95):
    if n == 0:
        return math.nan, math.nan
    ci = stats.binomtest(int(count), int(n)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


def loglog_fit(x, y):
    """Regression of ``log y`` on ``log x``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    res = stats.linregress(lx, ly)
    return LogLogFit(float(res.slope), float(res.intercept), float(res.rvalue**2), float(res.stderr))


def lambda_grid(samples, points=24, low_quantile=0.5):
    """Geometric grid from a low quantile of the samples up to their maximum."""
    x = np.asarray(samples, dtype=float)
    hi = float(np.max(x))
    lo = float(np.quantile(x, low_quantile))
    if not lo > 0:
        positive = x[x > 0]
        lo = float(np.min(positive)) if positive.size else hi
    if not hi > lo:
        return np.array([hi])
    return np.geomspace(lo, hi, points)


def empirical_tail(samples, lambdas):
    """Fraction of samples strictly above each ``lambda``."""
    x = np.sort(np.asarray(samples, dtype=float))
    above = x.size - np.searchsorted(x, np.asarray(lambdas, dtype=float), side="right")
    return above / x.size


def fit_gaussian_tail(samples, lambdas, min_count=MIN_FIT_COUNT):
    """Fit ``log tail`` against ``lambda^2`` on grid points with at least ``min_count`` exceedances.

    Returns ``None`` when fewer than three grid points qualify.
    """
    tail = empirical_tail(samples, lambdas)
    counts = np.rint(tail * len(samples))
    keep = counts >= min_count
    if np.count_nonzero(keep) < 3:
        return None
    lam2 = np.asarray(lambdas, dtype=float)[keep] ** 2
    res = stats.linregress(lam2, np.log(tail[keep]))
    return TailFit(float(res.slope), float(res.intercept), float(res.rvalue**2),
                   int(np.count_nonzero(keep)), float(res.stderr))


def binomial_band(probabilities, n, level=0.99):
    """Central ``level`` interval for a binomial proportion with the given success probabilities."""
    lo, hi = stats.binom.interval(level, n, np.asarray(probabilities, dtype=float))
    return lo / n, hi / n


# ---------------------------------------------------------------------------
# deterministic parallel map
# ---------------------------------------------------------------------------

def run_samples(task, samples, workers=1):
    """``[task(i) for i in range(samples)]`` with results in index order.

    ``task`` must be picklable when ``workers > 1``.  Each result depends only
    on its index, so the output is identical for every worker count.
    """
    if workers is None or workers <= 1 or samples <= 1:
        return [task(i) for i in range(samples)]
    chunk = max(1, samples // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(task, range(samples), chunksize=chunk))
    return results


def _flatten(results):
    out = []
    for r in results:
        out.extend(r if isinstance(r, list) else [r])
    return sorted(out, key=lambda rec: (rec["sample"], rec.get("N") or 0))


# ---------------------------------------------------------------------------
# linear tail experiment
# ---------------------------------------------------------------------------

def _tail_task(pair, law, seed, statistic, index):
    rp = draw_randomized_pair(pair, law, seed.for_sample(index))
    return {"sample": index, "statistic": statistic.evaluate(rp)}


def linear_tail_experiment(pair, law, statistic, samples, seed, workers=1, points=24,
                           low_quantile=0.5, long_time=False, eps=0.01):
    """Empirical tail ``P(||S*(t) u^omega|| > lambda)`` of a linear statistic.

    The Gaussian-tail fit uses grid points with at least ten exceedances.  If
    every sample takes the same value the fit is skipped and a diagnostic is
    recorded instead.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    task = partial(_tail_task, pair, law, seed, statistic)
    records = _flatten(run_samples(task, samples, workers))
    values = np.array([r["statistic"] for r in records])
    report = EnsembleReport("tail", samples, seed.master_seed, records,
                            norm_samples={statistic.label: values})
    if samples < MIN_TAIL_SAMPLES:
        report.diagnostics.append(f"only {samples} samples (< {MIN_TAIL_SAMPLES}); tail estimates are coarse")
    report.summary["scale"] = statistic.scale(pair, eps=eps, long_time=long_time)
    report.summary["law"] = str(law)
    spread = float(np.max(values) - np.min(values))
    if spread <= 1e-12 * max(1.0, float(np.max(np.abs(values)))):
        report.lambda_grid = np.array([float(values[0])])
        report.empirical_tail = empirical_tail(values, report.lambda_grid)
        report.diagnostics.append("degenerate: all samples equal; tail is a step function and no fit was made")
        return report
    report.lambda_grid = lambda_grid(values, points, low_quantile)
    report.empirical_tail = empirical_tail(values, report.lambda_grid)
    report.fit = fit_gaussian_tail(values, report.lambda_grid)
    if report.fit is None:
        report.diagnostics.append("fewer than three grid points with >= 10 exceedances; no fit")
    else:
        report.summary["c_hat_normalized"] = report.fit.c_hat * report.summary["scale"] ** 2
    return report


# ---------------------------------------------------------------------------
# uniform-in-N energy experiment
# ---------------------------------------------------------------------------

def _energy_task(pair, law, seed, p, N_list, T, dt_max, resolution, index):
    rp = draw_randomized_pair(pair, law, seed.for_sample(index))
    out = []
    for N in N_list:
        rec = {"sample": index, "N": N}
        try:
            tr = solve_truncated(rp, N, p, T, dt_max=dt_max, resolution=resolution)
            rec.update(sup_energy=tr.sup_energy, final_energy=float(tr.total[-1]), blowup=False,
                       blowup_time=None)
        except BlowUpError as exc:
            rec.update(sup_energy=None, final_energy=None, blowup=True, blowup_time=exc.t)
        out.append(rec)
    return out


def uniform_energy_experiment(pair, law, p, N_list, T, samples, seed, dt_max=1e-2,
                              resolution=None, workers=1):
    """``sup_{t <= T} E(v_N^omega)`` for every ``(N, sample)``.

    The summary holds per-``N`` maxima and medians, the spread
    ``max_N / min_N`` of the medians, and the regression of the medians on
    ``log N`` together with a one-sided p-value for a positive slope.
    """
    check_exponent(p)
    N_list = [int(N) for N in N_list]
    task = partial(_energy_task, pair, law, seed, p, N_list, T, dt_max, resolution)
    records = _flatten(run_samples(task, samples, workers))
    report = EnsembleReport("energy", samples, seed.master_seed, records)
    blowups = [r for r in records if r["blowup"]]
    report.summary["blowups"] = len(blowups)
    for r in blowups:
        report.diagnostics.append(f"blow-up: sample {r['sample']} N={r['N']} t={r['blowup_time']:.6g}")
    medians = []
    for N in N_list:
        vals = np.array([r["sup_energy"] for r in records if r["N"] == N and not r["blowup"]], dtype=float)
        report.norm_samples[f"sup_energy[N={N}]"] = vals
        med = float(np.median(vals)) if vals.size else math.nan
        medians.append(med)
        report.summary[f"median[N={N}]"] = med
        report.summary[f"max[N={N}]"] = float(np.max(vals)) if vals.size else math.nan
    med = np.array(medians)
    if np.all(np.isfinite(med)) and np.min(med) > 0:
        report.summary["spread"] = float(np.max(med) / np.min(med))
    if len(N_list) >= 3 and np.all(np.isfinite(med)):
        res = stats.linregress(np.log(N_list), med)
        df = len(N_list) - 2
        tstat = res.slope / res.stderr if res.stderr > 0 else (math.inf if res.slope > 0 else -math.inf)
        report.summary["trend_slope"] = float(res.slope)
        report.summary["trend_stderr"] = float(res.stderr)
        report.summary["trend_p_positive"] = float(stats.t.sf(tstat, df))
    return report


# ---------------------------------------------------------------------------
# event frequencies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EventSpec:
    """Thresholds of the three events at prefactor one.

    * ``omega1``: ``||<nabla>^alpha z||_{L^{2p/(p-3)}_T L^{2p}_x} <= T^{(p-3)/p} sqrt(log 1/eps) ||(u0,u1)||_{H^alpha}``
    * ``omega2``: the four linear norms defining the good set of the energy bound,
      summed, ``<= max(1,T) sqrt(log 1/eps) ||(u0,u1)||_{H^s}``
    * ``omega3``: for every interval ``I_k`` of length ``t*``,
      ``||z||_{L^{2p/(p-3)}_{I_k} L^{2p}_x} <= K |I_k|^beta`` with ``K = ||(u0,u1)||_{H^0}``
      and ``2 beta = (p-3)/(2p)``.
    """

    eps: float = 0.1
    alpha: float | None = None
    delta: float = 0.01
    points_per_interval: int = 5
    n_times: int = 33
    resolution: int | None = None


def _event_statistics(rp, pair, p, T, t_star, spec):
    M = rp.cutoff
    a, b = rp.u0.coeffs, rp.u1.coeffs
    s = pair.s
    alpha = s / 2.0 if spec.alpha is None else spec.alpha
    G = default_resolution(M) if spec.resolution is None else spec.resolution
    q, r = 2.0 * p / (p - 3.0), 2.0 * p
    weight_alpha = japanese(M) ** alpha
    weight_tilde = japanese(M) ** (s - spec.delta)
    log_eps = math.sqrt(math.log(1.0 / spec.eps))

    def lebesgue(coeffs, rr):
        return float(_grid_norm(synthesize_array(coeffs, G), rr, G))

    # omega1 and omega2 on a global time grid
    ts = np.linspace(0.0, T, spec.n_times)
    n1, z2p, zp1, zk, ztil = (np.empty(ts.size) for _ in range(5))
    rk = 4.0 * (p + 1.0) / (5.0 - p)
    for i, t in enumerate(ts):
        z = _linear_arrays(a, b, t, M, "S")
        grid = synthesize_array(z, G)
        z2p[i] = float(_grid_norm(grid, r, G))
        zp1[i] = float(_grid_norm(grid, p + 1.0, G))
        zk[i] = float(_grid_norm(grid, rk, G))
        n1[i] = lebesgue(weight_alpha * z, r)
        ztil[i] = lebesgue(weight_tilde * _linear_arrays(a, b, t, M, "tilde"), math.inf)
    stat1 = time_norm(ts, n1, q)
    thr1 = T ** ((p - 3.0) / p) * log_eps * pair.norm(alpha)
    stat2 = (time_norm(ts, z2p, r) + float(np.max(zp1)) + float(np.max(zk)) ** 2 + float(np.max(ztil)))
    thr2 = max(1.0, T) * log_eps * pair.norm(s)

    # omega3 interval by interval
    beta = (p - 3.0) / (4.0 * p)
    K = pair.norm(0.0)
    worst = -math.inf
    k = 0
    while k * t_star < T - 1e-12 * max(1.0, T):
        lo, hi = k * t_star, min((k + 1) * t_star, T)
        tk = np.linspace(lo, hi, spec.points_per_interval)
        vals = [lebesgue(_linear_arrays(a, b, t, M, "S"), r) for t in tk]
        norm_k = time_norm(tk, vals, q)
        thr_k = K * (hi - lo) ** beta
        ratio = norm_k / thr_k if thr_k > 0 else (0.0 if norm_k == 0 else math.inf)
        worst = max(worst, ratio)
        k += 1
    return {"omega1": (stat1, thr1), "omega2": (stat2, thr2), "omega3": (worst, 1.0)}


def _event_task(pair, law, seed, p, T, t_star, spec, index):
    rp = draw_randomized_pair(pair, law, seed.for_sample(index))
    st = _event_statistics(rp, pair, p, T, t_star, spec)
    rec = {"sample": index}
    for name, (stat, thr) in st.items():
        rec[f"{name}_statistic"] = stat
        rec[f"{name}_threshold"] = thr
    return rec


EVENT_NAMES = ("omega1", "omega2", "omega3")


def event_frequency_experiment(pair, law, p, T, t_star, samples, seed, prefactors=(1.0, 3.0, 10.0),
                               spec=None, workers=1):
    """Empirical probabilities of the three events and of their intersection.

    An event holds at prefactor ``lam`` when ``statistic <= lam * threshold``;
    the events are nested in ``lam`` so the frequencies are monotone.
    """
    check_exponent(p)
    if not t_star > 0:
        raise ValueError("t* must be positive")
    spec = EventSpec() if spec is None else spec
    task = partial(_event_task, pair, law, seed, p, T, t_star, spec)
    records = _flatten(run_samples(task, samples, workers))
    report = EnsembleReport("events", samples, seed.master_seed, records)
    if samples < MIN_EVENT_SAMPLES:
        report.diagnostics.append(f"only {samples} samples (< {MIN_EVENT_SAMPLES}); intervals are wide")
    for name in EVENT_NAMES:
        report.norm_samples[name] = np.array([r[f"{name}_statistic"] for r in records], dtype=float)
        thr = np.array([r[f"{name}_threshold"] for r in records], dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = report.norm_samples[name] / thr
        # smallest prefactor at which the event holds, per sample
        report.summary[f"{name}.critical_prefactor_median"] = float(np.nanmedian(ratio)) if np.any(np.isfinite(ratio)) else math.nan
    for lam in prefactors:
        hits = {name: np.array([r[f"{name}_statistic"] <= lam * r[f"{name}_threshold"] for r in records])
                for name in EVENT_NAMES}
        hits["all"] = np.logical_and.reduce([hits[n] for n in EVENT_NAMES])
        for name, h in hits.items():
            count = int(np.count_nonzero(h))
            lo, hi = wilson_interval(count, samples)
            report.events.append(EventFrequency(name, float(lam), count, samples, lo, hi))
    return report


# ---------------------------------------------------------------------------
# convergence in N
# ---------------------------------------------------------------------------

def linear_tail_norms(pair, N_list, T, n_times=33):
    """``||z - z_N||_{L^inf_T L^2_x}`` for each ``N`` by Parseval (no transforms)."""
    M = pair.cutoff
    a, b = pair.u0.coeffs, pair.u1.coeffs
    ts = np.linspace(0.0, T, n_times)
    out = np.zeros(len(N_list))
    for t in ts:
        z = evolve_arrays(a, b, t, M)[0]
        power = np.abs(z) ** 2
        for i, N in enumerate(N_list):
            rest = 1.0 - cutoff_symbol(M, N)
            out[i] = max(out[i], math.sqrt(VOLUME * float(np.sum(rest**2 * power))))
    return out


def tail_sum_oracle(M, s, N_list, delta=0.01):
    """``(sum_{N < |n|, |n|_inf <= M} <n>^{-2(s+3/2+delta)})^{1/2}`` and its fitted decay exponent."""
    w = wavenumber(M)
    jb = japanese(M)
    terms = jb ** (-2.0 * (s + 1.5 + delta))
    vals = np.array([math.sqrt(float(np.sum(terms[w > N]))) for N in N_list])
    return vals, -loglog_fit(N_list, vals).slope


def _convergence_task(pair, law, seed, p, T, N_list, dt_max, c, gamma, resolution, n_times, index):
    rp = draw_randomized_pair(pair, law, seed.for_sample(index))
    rec = {"sample": index, "N_list": list(N_list)}
    rec["linear"] = linear_tail_norms(rp, N_list, T, n_times).tolist()
    try:
        res = continuation_solve(rp, p, T, N_list, dt_max=dt_max, c=c, gamma=gamma, resolution=resolution)
        rec["nonlinear"] = [float(res.differences[N][-1]) for N in N_list]
        rec["final_time"] = float(res.times[-1])
        rec["diagnostic"] = res.diagnostic
        rec["blowup"] = False
    except BlowUpError as exc:
        rec.update(nonlinear=None, final_time=exc.t, diagnostic=str(exc), blowup=True)
    return rec


def _decay_fit(N_list, values):
    v = np.asarray(values, dtype=float)
    if np.all(v == 0):
        return None, "exact"
    if np.any(v <= 0):
        return None, "nonpositive"
    return loglog_fit(N_list, v), None


def convergence_experiment(pair, law, p, T, N_list, samples, seed, dt_max=1e-2, c=0.1, gamma=None,
                           resolution=None, n_times=33, workers=1):
    """Decay in ``N`` of ``||z - z_N||_{L^inf_T L^2}`` and of ``w_N(T)``.

    The reference for ``w_N`` is the solution driven by the untruncated free
    wave.  Per-sample slopes are fitted on log-log axes; the summary holds
    the median decay exponents and the fit of the per-``N`` medians.
    """
    check_exponent(p)
    N_list = [int(N) for N in N_list]
    if len(N_list) < 3:
        raise ValueError("need at least three values of N")
    task = partial(_convergence_task, pair, law, seed, p, T, N_list, dt_max, c, gamma, resolution, n_times)
    records = _flatten(run_samples(task, samples, workers))
    report = EnsembleReport("convergence", samples, seed.master_seed, records)
    lin_alpha, non_alpha, non_r2 = [], [], []
    for rec in records:
        fit, flag = _decay_fit(N_list, rec["linear"])
        rec["linear_alpha"] = None if fit is None else -fit.slope
        rec["linear_flag"] = flag
        if fit is not None:
            lin_alpha.append(-fit.slope)
        if rec["blowup"]:
            report.diagnostics.append(f"blow-up: sample {rec['sample']} t={rec['final_time']:.6g}")
            continue
        if rec["diagnostic"]:
            report.diagnostics.append(f"sample {rec['sample']}: {rec['diagnostic']}")
        fit, flag = _decay_fit(N_list, rec["nonlinear"])
        rec["nonlinear_slope"] = None if fit is None else fit.slope
        rec["nonlinear_r_squared"] = None if fit is None else fit.r_squared
        rec["nonlinear_flag"] = flag
        if fit is not None:
            non_alpha.append(-fit.slope)
            non_r2.append(fit.r_squared)
    report.summary["linear_alpha_median"] = float(np.median(lin_alpha)) if lin_alpha else math.nan
    report.summary["nonlinear_alpha_median"] = float(np.median(non_alpha)) if non_alpha else math.nan
    report.summary["nonlinear_r_squared_median"] = float(np.median(non_r2)) if non_r2 else math.nan
    if not lin_alpha:
        report.diagnostics.append("linear differences vanish identically: decay exponent undefined (exact)")
    good = [r for r in records if not r["blowup"] and r.get("nonlinear") is not None]
    if good:
        med = np.median(np.array([r["nonlinear"] for r in good], dtype=float), axis=0)
        report.norm_samples["w_N_median"] = med
        fit, flag = _decay_fit(N_list, med)
        if fit is not None:
            report.summary["median_fit_slope"] = fit.slope
            report.summary["median_fit_r_squared"] = fit.r_squared
        elif flag == "exact":
            report.diagnostics.append("nonlinear differences vanish identically (exact truncation)")
    report.norm_samples["linear_median"] = np.median(np.array([r["linear"] for r in records]), axis=0)
    return report
