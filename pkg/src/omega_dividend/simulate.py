"""Monte Carlo estimates of expected discounted dividends under barrier strategies.

Paths follow an Euler scheme for the uncontrolled drifted Brownian motion.
Barriers are enforced by projection: whatever overshoots the active barrier
after a step is paid out as a dividend. Each path draws its normals from its
own counter-based Philox stream keyed by (seed, path index), so results do not
depend on how paths are scheduled.

Two estimators of the same quantity are available:

* ``discounting`` weights each dividend by exp(-r t - omega_t);
* ``killing`` draws a unit exponential level per path, stops paying once the
  omega clock crosses it, and weights dividends by exp(-r t) only.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numba
import numpy as np

from .model import ModelParams
from .strategy import DoubleBarrier, SingleBarrier, Strategy

ESTIMATORS = ("killing", "discounting")
CHUNK = 4096

# state vector layout used by the kernel
_X, _STEP, _CLOCK, _TOTAL, _MODE, _DONE, _RUINED, _DCUM = range(8)
_UPPER, _LOWER = 0.0, 1.0
# done codes
_RUNNING, _RUIN, _KILLED, _TRUNCATED, _HORIZON = 0.0, 1.0, 2.0, 3.0, 4.0


@dataclass(frozen=True)
class PathConfig:
    dt: float
    t_max: float
    seed: int
    n_paths: int
    estimator: str = "discounting"
    antithetic: bool = False
    # a path stops early once exp(-r t - omega_t) * (barrier + mu/r) drops below this
    tail_tol: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be > 0, got {self.dt!r}")
        if not (math.isfinite(self.t_max) and self.t_max > 0):
            raise ValueError(f"t_max must be > 0, got {self.t_max!r}")
        if self.n_paths < 2:
            raise ValueError("need at least two paths for a standard error")
        if self.antithetic and self.n_paths % 2:
            raise ValueError("antithetic sampling needs an even path count")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}")
        if not 0 <= self.seed < 2**63:
            raise ValueError("seed must be a non-negative 63-bit integer")
        if self.tail_tol < 0:
            raise ValueError("tail_tol must be >= 0")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_max / self.dt))


def horizon(params: ModelParams, x_max: float, tol: float) -> float:
    """Smallest t with exp(-r t) (x_max + mu/r) <= tol/2.

    Dividends after t are worth at most that much in expectation, because the
    value of any strategy is bounded by x + mu/r.
    """
    if tol <= 0 or x_max < 0:
        raise ValueError("need tol > 0 and x_max >= 0")
    t = math.log(2.0 * (x_max + params.mu / params.r) / tol) / params.r
    return t if t > 0 else 1.0


def config_for_tolerance(
    params: ModelParams, x_max: float, tol: float, *, dt: float, seed: int, n_paths: int, **kw
) -> PathConfig:
    """PathConfig whose truncation bias is below tol/2, split between the hard
    horizon and the per-path early stop."""
    return PathConfig(
        dt=dt, t_max=horizon(params, x_max, tol / 2), seed=seed, n_paths=n_paths, tail_tol=tol / 4, **kw
    )


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int
    n_ruined: int
    mean_clock_at_end: float
    estimator: str
    total_steps: int
    seconds: float
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


@numba.njit(cache=True)
def _advance(state, z, mu_dt, sig_sdt, q_dt, r_dt, y, b1, c1, b2, killing, e1, log_stop, n_max, trace):
    """Advance one path over the normals ``z``; returns the number used.

    ``log_stop[m]`` is the log-weight below which a path in mode m may stop,
    -inf to disable. ``trace`` is either empty or has shape (len(z), 3).
    """
    x = state[_X]
    k = state[_STEP]
    clock = state[_CLOCK]
    total = state[_TOTAL]
    dcum = state[_DCUM]
    mode = state[_MODE]
    record = trace.shape[0] > 0
    used = 0
    for i in range(z.shape[0]):
        if state[_DONE] != _RUNNING:
            break
        used += 1
        if x < y:
            clock += q_dt
        x = x + mu_dt + sig_sdt * z[i]
        k += 1.0
        if killing and clock >= e1:
            state[_DONE] = _KILLED
        elif x <= 0.0:
            state[_DONE] = _RUIN
            state[_RUINED] = 1.0
        else:
            pay = 0.0
            if mode == _UPPER:
                if x <= c1:
                    mode = _LOWER
                    if x > b1:
                        pay = x - b1
                        x = b1
                elif x > b2:
                    pay = x - b2
                    x = b2
            elif x > b1:
                pay = x - b1
                x = b1
            lw = -r_dt * k if killing else -r_dt * k - clock
            if pay > 0.0:
                total += pay * math.exp(lw)
                dcum += pay
            if lw < log_stop[int(mode)]:
                state[_DONE] = _TRUNCATED
            elif k >= n_max:
                state[_DONE] = _HORIZON
        if record:
            trace[i, 0] = x
            trace[i, 1] = dcum
            trace[i, 2] = clock
    state[_X] = x
    state[_STEP] = k
    state[_CLOCK] = clock
    state[_TOTAL] = total
    state[_DCUM] = dcum
    state[_MODE] = mode
    return used


def _levels(strategy: Strategy) -> tuple[float, float, float]:
    """(b1, c1, b2) in the kernel's convention; a single barrier lives in the lower mode."""
    if isinstance(strategy, SingleBarrier):
        return strategy.b, strategy.b, strategy.b
    if isinstance(strategy, DoubleBarrier):
        return strategy.b1, strategy.c1, strategy.b2
    raise TypeError(f"unsupported strategy {strategy!r}")


def initial_payment(strategy: Strategy, x0: float) -> tuple[float, float, float]:
    """Lump paid at time zero, post-payment surplus and starting mode."""
    b1, c1, b2 = _levels(strategy)
    if isinstance(strategy, SingleBarrier) or x0 <= c1:
        pay = max(x0 - b1, 0.0)
        return pay, x0 - pay, _LOWER
    pay = max(x0 - b2, 0.0)
    return pay, x0 - pay, _UPPER


def path_stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, index], dtype=np.uint64)))


def simulate_path(
    strategy: Strategy,
    x0: float,
    y: float,
    params: ModelParams,
    config: PathConfig,
    rng: np.random.Generator,
    *,
    negate: bool = False,
    trace: bool = False,
):
    """Discounted dividends of a single path.

    Returns (total, info) where info carries the end state and, when ``trace``
    is set, arrays t, X, D_cum, clock sampled at every step.
    """
    if not math.isfinite(x0) or x0 < 0:
        raise ValueError(f"x0 must be finite and >= 0, got {x0!r}")
    if not math.isfinite(y) or y < 0:
        raise ValueError(f"y must be finite and >= 0, got {y!r}")
    killing = config.estimator == "killing"
    e1 = rng.exponential() if killing else math.inf
    b1, c1, b2 = _levels(strategy)
    pay0, x_start, mode = initial_payment(strategy, x0)
    state = np.zeros(8)
    state[_X], state[_TOTAL], state[_DCUM], state[_MODE] = x_start, pay0, pay0, mode
    if x_start <= 0.0:
        state[_DONE], state[_RUINED] = _RUIN, 1.0
    if killing and e1 <= 0.0:
        state[_DONE] = _KILLED

    if config.tail_tol > 0:
        tail = params.mu / params.r
        log_stop = np.array([math.log(config.tail_tol / (b2 + tail)), math.log(config.tail_tol / (b1 + tail))])
    else:
        log_stop = np.array([-np.inf, -np.inf])

    mu_dt = params.mu * config.dt
    sig_sdt = params.sigma * math.sqrt(config.dt) * (-1.0 if negate else 1.0)
    n_max = config.n_steps
    empty = np.empty((0, 3))
    pieces = []
    while state[_DONE] == _RUNNING:
        z = rng.standard_normal(CHUNK)
        buf = np.empty((CHUNK, 3)) if trace else empty
        used = _advance(
            state, z, mu_dt, sig_sdt, params.q * config.dt, params.r * config.dt, y,
            b1, c1, b2, killing, e1, log_stop, float(n_max), buf,
        )  # fmt: skip
        if trace:
            pieces.append(buf[:used])
    info = {
        "steps": int(state[_STEP]),
        "ruined": bool(state[_RUINED]),
        "clock": float(state[_CLOCK]),
        "end": ("running", "ruin", "killed", "truncated", "horizon")[int(state[_DONE])],
    }
    if trace:
        rows = np.concatenate([np.array([[x_start, pay0, 0.0]])] + pieces)
        info["t"] = np.arange(rows.shape[0]) * config.dt
        info["X"], info["D_cum"], info["clock_path"] = rows[:, 0], rows[:, 1], rows[:, 2]
    return float(state[_TOTAL]), info


def mc_value(
    strategy: Strategy, x0: float, y: float, params: ModelParams, config: PathConfig
) -> McEstimate:
    """Average of ``simulate_path`` over independent per-path substreams."""
    start = time.perf_counter()
    n = config.n_paths
    totals = np.empty(n)
    clocks = np.empty(n)
    ruined = 0
    steps = 0
    for i in range(n):
        if config.antithetic:
            rng = path_stream(config.seed, i // 2)
            negate = bool(i % 2)
        else:
            rng = path_stream(config.seed, i)
            negate = False
        totals[i], info = simulate_path(strategy, x0, y, params, config, rng, negate=negate)
        clocks[i] = info["clock"]
        ruined += info["ruined"]
        steps += info["steps"]
    samples = totals.reshape(-1, 2).mean(axis=1) if config.antithetic else totals
    return McEstimate(
        mean=float(np.mean(samples)),
        std_error=float(np.std(samples, ddof=1) / math.sqrt(samples.size)),
        n_paths=n,
        n_ruined=int(ruined),
        mean_clock_at_end=float(np.mean(clocks)),
        estimator=config.estimator,
        total_steps=int(steps),
        seconds=time.perf_counter() - start,
    )


def z_score(a: McEstimate, reference: float) -> float:
    return (a.mean - reference) / a.std_error if a.std_error > 0 else math.inf


def joint_z(a: McEstimate, b: McEstimate) -> float:
    se = math.hypot(a.std_error, b.std_error)
    return (a.mean - b.mean) / se if se > 0 else math.inf


def trace_csv(info: dict) -> str:
    lines = ["t,X,D_cum,clock"]
    for t, x, d, c in zip(info["t"], info["X"], info["D_cum"], info["clock_path"]):
        lines.append(f"{float(t)!r},{float(x)!r},{float(d)!r},{float(c)!r}")
    return "\n".join(lines) + "\n"


def project_runtime(
    strategy: Strategy, x0: float, y: float, params: ModelParams, config: PathConfig, pilot_paths: int = 64
) -> dict:
    """Time a pilot batch and extrapolate to the configured path count."""
    pilot = PathConfig(
        dt=config.dt,
        t_max=config.t_max,
        seed=config.seed,
        n_paths=max(2, pilot_paths - pilot_paths % 2),
        estimator=config.estimator,
        antithetic=config.antithetic,
        tail_tol=config.tail_tol,
    )
    est = mc_value(strategy, x0, y, params, pilot)
    per_path = est.seconds / pilot.n_paths
    return {
        "pilot_paths": pilot.n_paths,
        "pilot_seconds": est.seconds,
        "steps_per_path": est.total_steps / pilot.n_paths,
        "steps_per_second": est.total_steps / est.seconds if est.seconds > 0 else math.inf,
        "projected_seconds": per_path * config.n_paths,
    }
