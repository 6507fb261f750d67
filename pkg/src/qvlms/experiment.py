"""Nonlinear channel identification experiments.

A trial streams unit-variance white Gaussian input through a second-order
Volterra channel, ``d(r) = h . u(r) + eta(r)``, and adapts a filter on the
same regressor. Channel coefficients and initial weights are drawn per
trial from a seeded generator, so every protocol output is a pure function
of its configuration and master seed. Trials are averaged with the
divergence guard applied: a trial whose normalized weight deviation
exceeds the threshold is frozen, marked and excluded from the averages
(never silently dropped).

``run_trial`` and the Monte-Carlo runner share one vectorized kernel that
advances all trials of a chunk in lockstep, so a single trial is
bit-identical whichever entry point produced it.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from qvlms.adapt import QParams, step_size_bound
from qvlms.theory import build_update_matrix, gaussian_autocorrelation
from qvlms.volterra import (
    SQRT2,
    RegressorMode,
    VolterraKernel,
    num_coefficients,
    scaling_diag,
)

__all__ = [
    "ALGORITHMS",
    "AveragedCurves",
    "ChannelSpec",
    "CurveComparison",
    "ExperimentConfig",
    "Protocol1Report",
    "Protocol2Report",
    "TrialCurves",
    "correlation_coefficient",
    "monte_carlo",
    "noise_variance_for_snr",
    "nwd",
    "nwd_db",
    "protocol1",
    "protocol2",
    "run_trial",
    "steady_state_level",
    "trial_seeds",
]

#: Supported adaptation algorithms. "whitened" replaces the diagonal q-gain
#: with the fixed matrix S R^-1 S built from the closed-form input
#: autocorrelation of the active regressor mode.
ALGORITHMS = ("qvlms", "vlms", "whitened")

DIVERGENCE_THRESHOLD = 1e6

_CHUNK = 256


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def nwd(h, w) -> float:
    """Normalized weight deviation ``||h - w||^2 / ||h||^2`` (squared)."""
    hv = np.asarray(h, dtype=np.float64)
    wv = np.asarray(w, dtype=np.float64)
    if hv.shape != wv.shape or hv.ndim != 1:
        raise ValueError(f"shape mismatch: h {hv.shape}, w {wv.shape}")
    denom = float(hv @ hv)
    if denom == 0.0:
        raise ValueError("channel vector must be nonzero")
    diff = hv - wv
    return float(diff @ diff) / denom


def nwd_db(value) -> np.ndarray | float:
    """Power-ratio decibels ``10 log10(value)``; 0 maps to -inf."""
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(value)


def correlation_coefficient(a, b) -> float:
    """Pearson correlation of two equally long curves."""
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape or av.ndim != 1 or av.size < 2:
        raise ValueError("curves must be equally long 1-D vectors of length >= 2")
    ac = av - av.mean()
    bc = bv - bv.mean()
    va = float(ac @ ac)
    vb = float(bc @ bc)
    if va == 0.0 or vb == 0.0:
        raise ValueError("correlation undefined for a constant curve")
    return float(np.clip((ac @ bc) / math.sqrt(va * vb), -1.0, 1.0))


def noise_variance_for_snr(signal_power: float, snr_db: float) -> float:
    """Noise power giving the requested SNR: ``P * 10^(-snr/10)``."""
    if signal_power < 0.0:
        raise ValueError("signal power must be >= 0")
    return float(signal_power) * float(10.0 ** (-float(snr_db) / 10.0))


def steady_state_level(curve, fraction: float = 0.1) -> float:
    """Mean of the trailing ``fraction`` of a curve."""
    c = np.asarray(curve, dtype=np.float64)
    tail = max(1, int(round(c.size * fraction)))
    return float(c[-tail:].mean())


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChannelSpec:
    """Channel family for identification runs.

    ``kernel=None`` describes the random family: each trial draws unit
    Gaussian coefficients and normalizes them to unit norm. A concrete
    kernel pins the same channel for every trial. Noise power is derived
    per channel as ``(h . R h) * 10^(-snr/10)`` with R the closed-form
    autocorrelation of the active regressor mode, so the configured SNR
    holds exactly in expectation.
    """

    memory_length: int = 3
    snr_db: float = 20.0
    regressor_mode: RegressorMode = RegressorMode.RAW
    kernel: VolterraKernel | None = None

    def __post_init__(self):
        if self.kernel is not None and self.kernel.memory_length != self.memory_length:
            raise ValueError(
                f"kernel memory {self.kernel.memory_length} != configured "
                f"memory {self.memory_length}"
            )
        if int(self.memory_length) < 1:
            raise ValueError("memory length must be >= 1")

    @property
    def num_coefficients(self) -> int:
        return num_coefficients(self.memory_length)

    def autocorrelation(self) -> np.ndarray:
        return gaussian_autocorrelation(self.memory_length, self.regressor_mode)

    def signal_power(self, h_flat) -> float:
        h = np.asarray(h_flat, dtype=np.float64)
        return float(h @ self.autocorrelation() @ h)

    def noise_variance(self, h_flat) -> float:
        return noise_variance_for_snr(self.signal_power(h_flat), self.snr_db)


@dataclass(frozen=True)
class ExperimentConfig:
    """Monte-Carlo run description.

    Exactly one of ``step_size`` (absolute) and ``step_size_fraction``
    (fraction of the stability bound ``1 / max_i((q_i+1) lambda_i)``) must
    be set. Per-trial seeds are spawned deterministically from the master
    seed, and the same per-trial streams are reused for every algorithm,
    q and SNR cell, so comparisons are paired.
    """

    iterations: int = 5000
    trials: int = 1000
    master_seed: int = 0
    step_size: float | None = None
    step_size_fraction: float | None = None
    q_values: tuple[float, ...] = (1.0, 5.0, 10.0)
    snr_db_values: tuple[float, ...] = (20.0,)
    algorithms: tuple[str, ...] = ("qvlms",)
    random_init: bool = True
    divergence_threshold: float = DIVERGENCE_THRESHOLD

    def __post_init__(self):
        if int(self.trials) < 1:
            raise ValueError("trials must be >= 1")
        if int(self.iterations) < 1:
            raise ValueError("iterations must be >= 1")
        if (self.step_size is None) == (self.step_size_fraction is None):
            raise ValueError(
                "exactly one of step_size and step_size_fraction must be set"
            )
        if self.step_size is not None and not self.step_size > 0.0:
            raise ValueError("step_size must be positive")
        if self.step_size_fraction is not None and not self.step_size_fraction > 0.0:
            raise ValueError("step_size_fraction must be positive")
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {alg!r}; expected {ALGORITHMS}")
        if any(q <= 0.0 for q in self.q_values):
            raise ValueError("all q values must be positive")
        if not self.divergence_threshold > 0.0:
            raise ValueError("divergence threshold must be positive")


def trial_seeds(master_seed: int, trials: int) -> list[np.random.SeedSequence]:
    """Independent per-trial seed sequences derived from the master seed."""
    return np.random.SeedSequence(int(master_seed)).spawn(int(trials))


def resolve_step_size(config: ExperimentConfig, channel: ChannelSpec,
                      q_value: float = 1.0) -> float:
    """Absolute step size for one run cell.

    Fraction rules resolve against the stability bound computed from the
    closed-form input autocorrelation of the active regressor mode.
    """
    if config.step_size is not None:
        return float(config.step_size)
    k = channel.num_coefficients
    lam = np.linalg.eigvalsh(channel.autocorrelation())
    bound = step_size_bound(QParams.uniform(q_value, k), lam)
    return float(config.step_size_fraction) * bound


def whitened_gain(channel: ChannelSpec) -> np.ndarray:
    """Fixed gain matrix ``S R^-1 S`` for the whitened comparison variant."""
    s = scaling_diag(channel.memory_length).entries
    r = channel.autocorrelation()
    return s[:, None] * np.linalg.inv(r) * s[None, :]


def _cell_gain(algorithm: str, q_value: float,
               channel: ChannelSpec) -> tuple[np.ndarray | None, np.ndarray | None]:
    """(diagonal gain, matrix gain) for one algorithm cell."""
    k = channel.num_coefficients
    if algorithm == "qvlms":
        return QParams.uniform(q_value, k).g, None
    if algorithm == "vlms":
        return np.ones(k), None
    if algorithm == "whitened":
        return None, whitened_gain(channel)
    raise ValueError(f"unknown algorithm {algorithm!r}")


# ---------------------------------------------------------------------------
# trial simulation
# ---------------------------------------------------------------------------

def _draw_channel_and_init(rng: np.random.Generator, channel: ChannelSpec,
                           random_init: bool) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial channel vector and initial weights, in fixed draw order."""
    k = channel.num_coefficients
    if channel.kernel is None:
        v = rng.standard_normal(k)
        h = v / np.linalg.norm(v)
    else:
        h = channel.kernel.flat()
    if random_init:
        w0 = rng.standard_normal(k) / np.sqrt(k)
    else:
        w0 = np.zeros(k)
    return h, w0


def _draw_trial(seed, channel: ChannelSpec, iterations: int, random_init: bool):
    """All randomness of one trial: h, w0, input stream, unit noise stream."""
    rng = np.random.default_rng(seed)
    h, w0 = _draw_channel_and_init(rng, channel, random_init)
    x = rng.standard_normal(iterations + channel.memory_length - 1)
    z = rng.standard_normal(iterations)
    return h, w0, x, z


def _simulate_chunk(h, w0, x, noise, mu, memory_length, mode,
                    gain_diag, gain_matrix, threshold):
    """Advance a chunk of trials in lockstep.

    Arrays are stacked per trial: ``h, w0 (T, K)``, ``x (T, N+M-1)``,
    ``noise (T, N)``. Returns per-trial NWD, absolute weight-error and
    squared prediction-error curves (rows 0 hold the initial state, the
    squared error is NaN there), final weights, and divergence bookkeeping.
    A diverged trial stops adapting and its curve is NaN past the
    triggering iteration.
    """
    t_count, k = h.shape
    n = noise.shape[1]
    m = memory_length
    iu, ju = np.triu_indices(m)
    diag_cols = np.flatnonzero(iu == ju)
    ortho = mode is RegressorMode.ORTHONORMALIZED

    w = w0.copy()
    hh = (h * h).sum(axis=1)
    nwd_curve = np.empty((t_count, n + 1))
    abs_err = np.empty((t_count, n + 1, k))
    sq_err = np.empty((t_count, n + 1))
    delta0 = h - w0
    nwd_curve[:, 0] = (delta0 * delta0).sum(axis=1) / hh
    abs_err[:, 0] = np.abs(delta0)
    sq_err[:, 0] = np.nan
    alive = np.ones(t_count, dtype=bool)
    div_iter = np.full(t_count, -1, dtype=np.int64)

    with np.errstate(over="ignore", invalid="ignore"):
        for r in range(n):
            lin = x[:, r:r + m][:, ::-1]
            quad = lin[:, iu] * lin[:, ju]
            if ortho:
                quad[:, diag_cols] = (lin * lin - 1.0) / SQRT2
            u = np.concatenate([lin, quad], axis=1)
            d = (u * h).sum(axis=1) + noise[:, r]
            e = d - (u * w).sum(axis=1)
            if gain_matrix is None:
                upd = (gain_diag[None, :] * (mu * e)[:, None]) * u
            else:
                upd = (mu * e)[:, None] * (u @ gain_matrix.T)
            w = np.where(alive[:, None], w + upd, w)
            delta = h - w
            cur = (delta * delta).sum(axis=1) / hh
            dead_before = ~alive
            nwd_curve[:, r + 1] = np.where(dead_before, np.nan, cur)
            abs_err[:, r + 1] = np.where(dead_before[:, None], np.nan, np.abs(delta))
            sq_err[:, r + 1] = np.where(dead_before, np.nan, e * e)
            newly_dead = alive & ~(cur <= threshold)
            div_iter[newly_dead] = r + 1
            alive &= ~newly_dead

    return nwd_curve, abs_err, sq_err, w, alive, div_iter


@dataclass(frozen=True)
class TrialCurves:
    """Per-iteration observables of one trial; row 0 is the initial state."""

    nwd: np.ndarray
    abs_weight_error: np.ndarray
    squared_error: np.ndarray
    final_weights: np.ndarray
    channel: np.ndarray
    initial_weights: np.ndarray
    diverged: bool
    divergence_iteration: int | None

    @property
    def nwd_db(self) -> np.ndarray:
        return nwd_db(self.nwd)

    @property
    def mae(self) -> np.ndarray:
        """Per-iteration mean over coefficients of the absolute weight error."""
        return self.abs_weight_error.mean(axis=1)


def run_trial(config: ExperimentConfig, channel: ChannelSpec, seed,
              algorithm: str = "qvlms", q_value: float | None = None) -> TrialCurves:
    """Run a single adaptation trial.

    The trial's channel, initial weights, input and noise streams are all
    drawn from ``seed``; the same seed always reproduces the identical
    ``TrialCurves``, bit for bit.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    q = float(config.q_values[0] if q_value is None else q_value)
    h, w0, x, z = _draw_trial(seed, channel, config.iterations, config.random_init)
    sigma2 = channel.noise_variance(h)
    mu = resolve_step_size(config, channel, q if algorithm == "qvlms" else 1.0)
    gain_diag, gain_matrix = _cell_gain(algorithm, q, channel)
    nwd_curve, abs_err, sq_err, w_final, alive, div_iter = _simulate_chunk(
        h[None, :], w0[None, :], x[None, :], (z * math.sqrt(sigma2))[None, :],
        mu, channel.memory_length, channel.regressor_mode,
        gain_diag, gain_matrix, config.divergence_threshold,
    )
    diverged = not bool(alive[0])
    return TrialCurves(
        nwd=nwd_curve[0],
        abs_weight_error=abs_err[0],
        squared_error=sq_err[0],
        final_weights=w_final[0],
        channel=h,
        initial_weights=w0,
        diverged=diverged,
        divergence_iteration=int(div_iter[0]) if diverged else None,
    )


# ---------------------------------------------------------------------------
# Monte-Carlo averaging
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AveragedCurves:
    """Trial-averaged curves for one (algorithm, q, SNR) cell.

    Averages run over the non-diverged trials only; the diverged count is
    reported alongside. Row 0 of each curve is the initial state.
    """

    algorithm: str
    q_value: float | None
    snr_db: float
    step_size: float
    nwd: np.ndarray
    mae: np.ndarray
    abs_weight_error: np.ndarray
    mse: np.ndarray
    trials: int
    diverged: int
    diverged_mask: np.ndarray = field(repr=False, default=None)

    @property
    def nwd_db(self) -> np.ndarray:
        return nwd_db(self.nwd)

    def steady_state_nwd_db(self, fraction: float = 0.1) -> float:
        return float(nwd_db(steady_state_level(self.nwd, fraction)))


def _run_cell(config: ExperimentConfig, channel: ChannelSpec,
              seeds, algorithm: str, q_value: float | None) -> AveragedCurves:
    """Average one (algorithm, q, snr) cell over all trials, chunked."""
    n = config.iterations
    k = channel.num_coefficients
    q = float(q_value) if q_value is not None else 1.0
    mu = resolve_step_size(config, channel, q if algorithm == "qvlms" else 1.0)
    gain_diag, gain_matrix = _cell_gain(algorithm, q, channel)

    nwd_sum = np.zeros(n + 1)
    mae_sum = np.zeros((n + 1, k))
    mse_sum = np.zeros(n + 1)
    kept = 0
    diverged_mask = np.zeros(len(seeds), dtype=bool)

    for start in range(0, len(seeds), _CHUNK):
        batch = seeds[start:start + _CHUNK]
        t_count = len(batch)
        h = np.empty((t_count, k))
        w0 = np.empty((t_count, k))
        x = np.empty((t_count, n + channel.memory_length - 1))
        noise = np.empty((t_count, n))
        for i, seed in enumerate(batch):
            h[i], w0[i], x[i], z = _draw_trial(seed, channel, n, config.random_init)
            noise[i] = z * math.sqrt(channel.noise_variance(h[i]))
        nwd_curve, abs_err, sq_err, _, alive, _ = _simulate_chunk(
            h, w0, x, noise, mu, channel.memory_length, channel.regressor_mode,
            gain_diag, gain_matrix, config.divergence_threshold,
        )
        diverged_mask[start:start + t_count] = ~alive
        if alive.any():
            nwd_sum += nwd_curve[alive].sum(axis=0)
            mae_sum += abs_err[alive].sum(axis=0)
            # squared error is NaN at row 0 by construction
            mse_sum[1:] += sq_err[alive, 1:].sum(axis=0)
            kept += int(alive.sum())

    if kept == 0:
        raise RuntimeError(
            f"all {len(seeds)} trials diverged (algorithm={algorithm}, "
            f"q={q_value}, snr={channel.snr_db} dB, mu={mu:.3e})"
        )
    mse = np.full(n + 1, np.nan)
    mse[1:] = mse_sum[1:] / kept
    per_coef = mae_sum / kept
    return AveragedCurves(
        algorithm=algorithm,
        q_value=q_value,
        snr_db=channel.snr_db,
        step_size=mu,
        nwd=nwd_sum / kept,
        mae=per_coef.mean(axis=1),
        abs_weight_error=per_coef,
        mse=mse,
        trials=len(seeds),
        diverged=int(diverged_mask.sum()),
        diverged_mask=diverged_mask,
    )


def _config_cells(config: ExperimentConfig):
    for algorithm in config.algorithms:
        if algorithm == "qvlms":
            for q in config.q_values:
                yield algorithm, float(q)
        else:
            yield algorithm, None


def monte_carlo(config: ExperimentConfig, channel: ChannelSpec) -> list[AveragedCurves]:
    """Averaged curves for every (algorithm, q, SNR) cell of the config.

    The channel argument acts as the family template; its SNR is replaced
    by each entry of ``config.snr_db_values``. All cells share the same
    per-trial seeds, so cross-algorithm comparisons are paired.
    """
    seeds = trial_seeds(config.master_seed, config.trials)
    results = []
    for snr in config.snr_db_values:
        cell_channel = replace(channel, snr_db=float(snr))
        for algorithm, q in _config_cells(config):
            results.append(_run_cell(config, cell_channel, seeds, algorithm, q))
    return results


# ---------------------------------------------------------------------------
# evaluation protocol 1: analysis validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurveComparison:
    """Theory/simulation pair for one q value."""

    q_value: float
    step_size: float
    theory_mae: np.ndarray
    simulated_mae: np.ndarray
    simulated_nwd: np.ndarray
    correlation: float
    trials: int
    diverged: int


@dataclass(frozen=True)
class Protocol1Report:
    """Analysis-validation outcome: per-q curve pairs and correlations."""

    comparisons: tuple[CurveComparison, ...]
    average_correlation: float
    master_seed: int
    trials: int
    iterations: int
    snr_db: float
    memory_length: int
    regressor_mode: RegressorMode
    mu_rule: str


def _theory_mae_curve(seeds, channel: ChannelSpec, mu: float,
                      update_matrix: np.ndarray, iterations: int,
                      random_init: bool, keep_mask: np.ndarray) -> np.ndarray:
    """Trial-averaged absolute mean-error trajectory from the recursion.

    Runs the mean recursion from every kept trial's actual initial error
    and averages the absolute values, mirroring how the simulated mean
    absolute weight error is aggregated.
    """
    k = update_matrix.shape[0]
    errors = np.empty((len(seeds), k))
    for i, seed in enumerate(seeds):
        rng = np.random.default_rng(seed)
        h, w0 = _draw_channel_and_init(rng, channel, random_init)
        errors[i] = h - w0
    errors = errors[keep_mask]
    step = np.eye(k) - mu * update_matrix
    out = np.empty(iterations + 1)
    cur = errors
    out[0] = np.abs(cur).mean()
    for t in range(1, iterations + 1):
        cur = cur @ step.T
        out[t] = np.abs(cur).mean()
    return out


def protocol1(master_seed: int, *, trials: int = 1000, iterations: int = 2000,
              snr_db: float = 20.0, q_values: tuple[float, ...] = (1.0, 5.0, 10.0),
              memory_length: int = 3,
              regressor_mode: RegressorMode = RegressorMode.RAW,
              mu_fraction: float = 0.05,
              mu_rule: str = "fraction_of_bound") -> Protocol1Report:
    """Validate the mean-convergence analysis against simulation.

    For each q, the simulated mean absolute weight error (averaged over
    trials and coefficients) is compared against the trajectory predicted
    by the mean weight-error recursion started from the same per-trial
    initial errors; the Pearson correlation of the two curves is reported
    per q together with the average.

    The step size is resolved per q by ``mu_rule``:

    * ``"fraction_of_bound"`` (default): ``mu = mu_fraction / ((q+1) lambda_max)``,
      a fixed fraction of the stability bound. The default fraction 0.05
      keeps the adaptation mean-square stable, which a fraction of the mean
      bound alone does not guarantee.
    * ``"fraction_of_update_eigenvalue"``: ``mu = mu_fraction / lambda_max(A)``
      with ``A = diag(g) R`` the mean-recursion matrix. Twice the step of
      the first rule at the same fraction.
    """
    channel = ChannelSpec(memory_length=memory_length, snr_db=snr_db,
                          regressor_mode=regressor_mode)
    k = channel.num_coefficients
    r_in = channel.autocorrelation()
    lam = np.linalg.eigvalsh(r_in)
    seeds = trial_seeds(master_seed, trials)

    comparisons = []
    for q in q_values:
        qp = QParams.uniform(q, k)
        a_matrix = build_update_matrix(qp, r_in)
        if mu_rule == "fraction_of_bound":
            mu = mu_fraction * step_size_bound(qp, lam)
        elif mu_rule == "fraction_of_update_eigenvalue":
            mu = mu_fraction / float(np.max(np.linalg.eigvals(a_matrix).real))
        else:
            raise ValueError(f"unknown mu rule {mu_rule!r}")
        config = ExperimentConfig(
            iterations=iterations, trials=trials, master_seed=master_seed,
            step_size=mu, q_values=(float(q),), snr_db_values=(snr_db,),
            algorithms=("qvlms",), random_init=True,
        )
        cell = _run_cell(config, channel, seeds, "qvlms", float(q))
        theory = _theory_mae_curve(
            seeds, channel, mu, a_matrix, iterations, True, ~cell.diverged_mask
        )
        comparisons.append(CurveComparison(
            q_value=float(q),
            step_size=mu,
            theory_mae=theory,
            simulated_mae=cell.mae,
            simulated_nwd=cell.nwd,
            correlation=correlation_coefficient(theory, cell.mae),
            trials=trials,
            diverged=cell.diverged,
        ))

    return Protocol1Report(
        comparisons=tuple(comparisons),
        average_correlation=float(np.mean([c.correlation for c in comparisons])),
        master_seed=int(master_seed),
        trials=trials,
        iterations=iterations,
        snr_db=snr_db,
        memory_length=memory_length,
        regressor_mode=regressor_mode,
        mu_rule=mu_rule,
    )


# ---------------------------------------------------------------------------
# evaluation protocol 2: q sensitivity versus conventional VLMS
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Protocol2Report:
    """q-sensitivity outcome: per-cell curves and steady-state advantages.

    ``advantages_db[(q, snr)]`` is the steady-state NWD of conventional
    VLMS minus that of q-VLMS, in dB; positive values favor q-VLMS.
    """

    curves: tuple[AveragedCurves, ...]
    advantages_db: dict
    average_advantage_db: float
    master_seed: int
    trials: int
    iterations: int
    snr_db_values: tuple[float, ...]
    q_values: tuple[float, ...]
    step_size: float
    memory_length: int
    regressor_mode: RegressorMode
    steady_fraction: float

    def cell(self, algorithm: str, snr_db: float,
             q_value: float | None = None) -> AveragedCurves:
        for c in self.curves:
            if (c.algorithm == algorithm and c.snr_db == snr_db
                    and (q_value is None or c.q_value == q_value)):
                return c
        raise KeyError((algorithm, q_value, snr_db))


def protocol2(master_seed: int, *, trials: int = 1000, iterations: int = 2500,
              snr_db_values: tuple[float, ...] = (10.0, 20.0, 30.0),
              q_values: tuple[float, ...] = (2.0, 5.0, 10.0),
              step_size: float = 1e-3, include_whitened: bool = False,
              memory_length: int = 3,
              regressor_mode: RegressorMode = RegressorMode.RAW,
              steady_fraction: float = 0.1) -> Protocol2Report:
    """Compare q-VLMS against conventional VLMS across noise levels.

    Runs every (algorithm, q, SNR) cell at the fixed step size, reports
    the averaged NWD curves, the steady-state NWD (mean of the trailing
    ``steady_fraction`` of iterations) in dB, and the q-VLMS advantage
    over VLMS per cell and on average. ``include_whitened`` adds the
    fixed-gain ``S R^-1 S`` variant's curves for reference.
    """
    algorithms = ("vlms", "qvlms") + (("whitened",) if include_whitened else ())
    config = ExperimentConfig(
        iterations=iterations, trials=trials, master_seed=master_seed,
        step_size=step_size, q_values=tuple(float(q) for q in q_values),
        snr_db_values=tuple(float(s) for s in snr_db_values),
        algorithms=algorithms, random_init=True,
    )
    channel = ChannelSpec(memory_length=memory_length,
                          regressor_mode=regressor_mode)
    curves = monte_carlo(config, channel)

    advantages = {}
    for snr in config.snr_db_values:
        vlms_db = next(
            c for c in curves if c.algorithm == "vlms" and c.snr_db == snr
        ).steady_state_nwd_db(steady_fraction)
        for q in config.q_values:
            q_db = next(
                c for c in curves
                if c.algorithm == "qvlms" and c.snr_db == snr and c.q_value == q
            ).steady_state_nwd_db(steady_fraction)
            advantages[(q, snr)] = vlms_db - q_db

    return Protocol2Report(
        curves=tuple(curves),
        advantages_db=advantages,
        average_advantage_db=float(np.mean(list(advantages.values()))),
        master_seed=int(master_seed),
        trials=trials,
        iterations=iterations,
        snr_db_values=config.snr_db_values,
        q_values=config.q_values,
        step_size=step_size,
        memory_length=memory_length,
        regressor_mode=regressor_mode,
        steady_fraction=steady_fraction,
    )
