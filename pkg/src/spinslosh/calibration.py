"""Fitting the sloshing-model parameters to reference force/torque traces."""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .coupled import run_open_loop
from .exceptions import CalibrationError, SloshError, ValidationError
from .trace import Trace

log = logging.getLogger(__name__)

PARAM_NAMES = ("m0_frac", "a_ratio", "C_f")
WORKERS_ENV = "SPINSLOSH_WORKERS"


@dataclass(frozen=True)
class Bounds:
    """Box bounds, one (lo, hi) pair per named parameter.

    ``lo == hi`` pins a parameter; the optimizer then never moves it.
    """

    lo: tuple
    hi: tuple
    names: tuple = PARAM_NAMES

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size != len(self.names):
            raise ValidationError("bounds need one (lo, hi) pair per parameter", "len(lo) = len(hi) = dim")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValidationError("bounds must be finite", "finite bounds")
        if np.any(lo > hi):
            raise ValidationError(f"lower bound exceeds upper bound: {lo} > {hi}", "lo <= hi")
        object.__setattr__(self, "lo", tuple(lo))
        object.__setattr__(self, "hi", tuple(hi))
        object.__setattr__(self, "names", tuple(self.names))

    @classmethod
    def default(cls):
        return cls((0.0, 0.1, 0.0), (0.99, 1.0, 1.0))

    @classmethod
    def from_pairs(cls, pairs, names=None):
        pairs = list(pairs)
        names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(len(pairs)))
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs), names)

    @property
    def dim(self):
        return len(self.names)

    def clip(self, x):
        return np.clip(x, self.lo, self.hi)

    def contains(self, x):
        x = np.asarray(x)
        return bool(np.all(x >= np.asarray(self.lo)) and np.all(x <= np.asarray(self.hi)))


@dataclass(frozen=True)
class DEConfig:
    """rand/1/bin settings.

    ``popsize`` defaults to 15 per dimension. ``mutation`` is the dither
    range for F, drawn once per generation. The run stops after
    ``max_generations`` or when the population objective standard
    deviation drops to ``atol + tol * |mean|``.
    """

    popsize: int = None
    mutation: tuple = (0.5, 1.0)
    crossover: float = 0.7
    max_generations: int = 1000
    tol: float = 0.01
    atol: float = 0.0
    seed: int = 0
    workers: int = None

    def __post_init__(self):
        if self.popsize is not None and self.popsize < 4:
            raise ValidationError("population must have at least 4 members", "popsize >= 4")
        if not 0.0 <= self.crossover <= 1.0:
            raise ValidationError("crossover rate must lie in [0, 1]", "0 <= CR <= 1")
        lo, hi = self.mutation
        if not 0.0 < lo <= hi <= 2.0:
            raise ValidationError("mutation dither range must satisfy 0 < lo <= hi <= 2", "0 < F_lo <= F_hi <= 2")
        if self.max_generations < 0:
            raise ValidationError("max_generations must be non-negative", "max_generations >= 0")


@dataclass
class CalibrationResult:
    x: np.ndarray
    fun: float
    names: tuple
    generations: int
    nfev: int
    converged: bool
    history: list = field(default_factory=list)

    @property
    def params(self):
        return dict(zip(self.names, (float(v) for v in self.x)))

    def as_dict(self):
        return {
            "params": self.params,
            "objective": float(self.fun),
            "generations": self.generations,
            "nfev": self.nfev,
            "converged": self.converged,
            "history": [float(h) for h in self.history],
        }


def default_workers():
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValidationError(f"{WORKERS_ENV} must be an integer, got {env!r}", f"{WORKERS_ENV} integer") from None
        return max(1, n)
    return 1


def _safe_eval(objective, x):
    try:
        f = float(objective(x))
    except (SloshError, FloatingPointError, ZeroDivisionError) as exc:
        log.debug("objective failed at %s: %s", x, exc)
        return np.inf
    return f if np.isfinite(f) else np.inf


class _Evaluator:
    def __init__(self, objective, workers):
        self.objective = objective
        self.workers = workers
        self.pool = ProcessPoolExecutor(workers) if workers > 1 else None
        self.nfev = 0

    def __call__(self, xs):
        self.nfev += len(xs)
        if self.pool is None:
            return np.array([_safe_eval(self.objective, x) for x in xs])
        # map keeps submission order, so results do not depend on scheduling
        return np.array(list(self.pool.map(_safe_eval, [self.objective] * len(xs), xs)))

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


def differential_evolution(objective, bounds, cfg=None):
    """Minimize ``objective`` over ``bounds`` with rand/1/bin differential evolution.

    Trials are evaluated a generation at a time and selection is greedy
    per member. The returned point is the best ever evaluated, so the
    history of best values is non-increasing.
    """
    cfg = cfg or DEConfig()
    if not isinstance(bounds, Bounds):
        bounds = Bounds.from_pairs(bounds)
    lo, hi = np.asarray(bounds.lo), np.asarray(bounds.hi)
    dim = bounds.dim
    n = cfg.popsize or 15 * dim
    rng = np.random.default_rng(cfg.seed)
    workers = cfg.workers or default_workers()
    ev = _Evaluator(objective, workers)
    try:
        if np.all(lo == hi):
            f = ev([lo.copy()])[0]
            if not np.isfinite(f):
                raise CalibrationError("objective is not finite at the only admissible point")
            return CalibrationResult(lo.copy(), f, bounds.names, 0, ev.nfev, True, [f])

        # stratified (Latin hypercube) initial population
        u = (rng.permuted(np.tile(np.arange(n), (dim, 1)), axis=1).T + rng.random((n, dim))) / n
        pop = lo + u * (hi - lo)
        fit = ev(list(pop))
        if not np.any(np.isfinite(fit)):
            raise CalibrationError("objective is non-finite on the whole initial population")
        best = int(np.argmin(fit))
        best_x, best_f = pop[best].copy(), fit[best]
        history = [best_f]
        converged = False
        gen = 0
        idx = np.arange(n)
        for gen in range(1, cfg.max_generations + 1):
            F = rng.uniform(*cfg.mutation)
            trials = np.empty_like(pop)
            for i in range(n):
                r1, r2, r3 = rng.choice(idx[idx != i], 3, replace=False)
                mutant = pop[r1] + F * (pop[r2] - pop[r3])
                cross = rng.random(dim) < cfg.crossover
                cross[rng.integers(dim)] = True
                trials[i] = np.where(cross, mutant, pop[i])
            trials = np.clip(trials, lo, hi)
            tfit = ev(list(trials))
            better = tfit <= fit
            pop[better] = trials[better]
            fit[better] = tfit[better]
            k = int(np.argmin(fit))
            if fit[k] < best_f:
                best_x, best_f = pop[k].copy(), fit[k]
            history.append(best_f)
            finite = fit[np.isfinite(fit)]
            if finite.size == n and np.std(finite) <= cfg.atol + cfg.tol * abs(np.mean(finite)):
                converged = True
                break
        return CalibrationResult(best_x, best_f, bounds.names, gen, ev.nfev, converged, history)
    finally:
        ev.close()


def dominant_force_channel(trace):
    cols = [c for c in ("Fx", "Fy", "Fz") if c in trace]
    if not cols:
        raise ValidationError("trace has no force channels", "force columns present")
    return max(cols, key=lambda c: float(np.sqrt(np.mean(trace[c] ** 2))) if len(trace) else 0.0)


def default_channels(ref):
    return (dominant_force_channel(ref), "Tz")


def trace_rmse(model, ref, channels=None, weights=None):
    """Weighted RMS error of ``model`` against ``ref`` over their common time window.

    ``ref`` is linearly interpolated onto the model time stamps. Each
    channel's RMSE is divided by the reference RMS of that channel
    (channels whose reference is identically zero are left unscaled)
    before the weighted quadratic mean is taken.
    """
    channels = tuple(channels) if channels is not None else default_channels(ref)
    weights = np.ones(len(channels)) if weights is None else np.asarray(weights, dtype=float)
    if weights.shape != (len(channels),) or np.any(weights < 0) or not weights.sum() > 0:
        raise ValidationError("weights must be non-negative, one per channel, not all zero", "valid weights")
    for c in channels:
        for name, tr in (("model", model), ("reference", ref)):
            if c not in tr:
                raise ValidationError(f"{name} trace lacks channel {c!r}", f"channel {c} present")
    if len(model) == 0 or len(ref) == 0:
        raise ValidationError("empty trace, no overlap window", "non-empty overlap")
    t0 = max(model.t[0], ref.t[0])
    t1 = min(model.t[-1], ref.t[-1])
    mask = (model.t >= t0) & (model.t <= t1)
    if not t1 > t0 or mask.sum() < 2:
        raise ValidationError("model and reference traces do not overlap in time", "non-empty overlap")
    tm = model.t[mask]
    total = 0.0
    for w, c in zip(weights, channels):
        r = np.interp(tm, ref.t, ref[c])
        err = np.sqrt(np.mean((model[c][mask] - r) ** 2))
        scale = np.sqrt(np.mean(r**2))
        total += w * (err / scale if scale > 0 else err) ** 2
    return float(np.sqrt(total / weights.sum()))


class TraceObjective:
    """Picklable objective: open-loop run with trial parameters versus a reference trace."""

    def __init__(self, ref, template, names=PARAM_NAMES, channels=None, weights=None):
        self.ref = ref
        self.template = template
        self.names = tuple(names)
        self.channels = tuple(channels) if channels is not None else default_channels(ref)
        self.weights = weights

    def model(self, x):
        return run_open_loop(self.template.with_params(**dict(zip(self.names, map(float, x)))))

    def __call__(self, x):
        return trace_rmse(self.model(x), self.ref, self.channels, self.weights)


def calibrate(ref_trace, scenario_template, bounds=None, cfg=None, channels=None, weights=None):
    """Identify (m0_frac, a_ratio, C_f) so the open-loop model reproduces ``ref_trace``."""
    bounds = bounds or Bounds.default()
    unknown = set(bounds.names) - set(PARAM_NAMES)
    if unknown:
        raise ValidationError(f"unknown calibration parameters {sorted(unknown)}", f"names in {PARAM_NAMES}")
    if len(ref_trace) < 2 or not ref_trace.t[-1] > ref_trace.t[0]:
        raise ValidationError("reference trace spans no time", "non-empty overlap")
    objective = TraceObjective(ref_trace, scenario_template, bounds.names, channels, weights)
    return differential_evolution(objective, bounds, cfg)


class EMMCalibrator(RegressorMixin, BaseEstimator):
    """Estimator wrapper around :func:`calibrate`.

    ``fit`` accepts either a :class:`Trace` or a time column ``X`` of
    shape (n, 1) together with channel values ``y`` of shape (n, k)
    named by ``channels``. ``predict`` returns the fitted model's
    channels at the requested times.
    """

    def __init__(self, scenario=None, bounds=None, channels=None, weights=None, popsize=None,
                 max_generations=1000, tol=0.01, seed=0, workers=None):
        self.scenario = scenario
        self.bounds = bounds
        self.channels = channels
        self.weights = weights
        self.popsize = popsize
        self.max_generations = max_generations
        self.tol = tol
        self.seed = seed
        self.workers = workers

    def _as_trace(self, X, y):
        if isinstance(X, Trace):
            return X
        if self.channels is None:
            raise ValidationError("channels must be named when fitting from arrays", "channels given")
        X = np.asarray(X, dtype=float).reshape(len(X), -1)
        y = np.asarray(y, dtype=float).reshape(len(X), -1)
        if y.shape[1] != len(self.channels):
            raise ValidationError("y needs one column per channel", "y.shape[1] = len(channels)")
        cols = {"t": X[:, 0]}
        cols.update({c: y[:, j] for j, c in enumerate(self.channels)})
        return Trace(cols)

    def fit(self, X, y=None):
        if self.scenario is None:
            raise ValidationError("a scenario template is required", "scenario given")
        ref = self._as_trace(X, y)
        cfg = DEConfig(popsize=self.popsize, max_generations=self.max_generations, tol=self.tol,
                       seed=self.seed, workers=self.workers)
        res = calibrate(ref, self.scenario, self.bounds, cfg, self.channels, self.weights)
        self.result_ = res
        self.params_ = res.params
        self.channels_ = tuple(self.channels) if self.channels is not None else default_channels(ref)
        self.model_trace_ = run_open_loop(self.scenario.with_params(**self.params_))
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        t = np.asarray(X, dtype=float).reshape(len(X), -1)[:, 0]
        tr = self.model_trace_
        return np.column_stack([np.interp(t, tr.t, tr[c]) for c in self.channels_])
