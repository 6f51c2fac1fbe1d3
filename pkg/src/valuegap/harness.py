"""Monte-Carlo runner for the model-free vs model-based comparisons.

Experiments
-----------
fig1-quad    LSTD over quadratic values vs the LQR plug-in, error ||P_hat - P||_F^2
fig1-lin     LSTD vs the unconstrained linear plug-in, error ||beta_hat - beta||^2
fig1-diag    LSTD vs the diagonal plug-in on random diagonal systems
fig2-offline separable LSTD vs decoupled plug-in, value MSE under uniform states
fig2-online  same, value MSE averaged over the dataset's states
fig3-ratio   LSTD vs diagonal plug-in on A = lam I, theta = 1, with the limiting ratio

Replication ``k`` uses seed ``base_seed + k``; every random stream inside a
replication is derived from that seed, the dimension and a stream tag, so
rows are reproducible independently of scheduling.
"""
import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import NormalDist

import numpy as np

from .asymptotics import dls_gap_ratio
from .decoupled import mse_uniform_separable, random_decoupled_instance, separable_value, simulate_decoupled
from .estimators import lstd_linear, lstd_quadratic, lstd_separable, mb_decoupled, mb_linear, mb_lqr
from .exceptions import ValueGapError
from .linear import (DIAGONAL, GENERAL, LQR, LinearSystem, lqr_value_matrix, random_stable_diagonal,
                     random_stable_matrix, simulate_linear, stationary_covariance, true_beta)

log = logging.getLogger(__name__)

EXPERIMENTS = ("fig1-quad", "fig1-lin", "fig1-diag", "fig2-offline", "fig2-online", "fig3-ratio")
RATIO_EXPERIMENTS = ("fig2-offline", "fig2-online", "fig3-ratio")

MSE_HEADER = ["d", "Model-free_empirical", "CI_MF_LB", "CI_MF_UB",
              "Model-based_empirical", "CI_MB_LB", "CI_MB_UB"]
RATIO_HEADER = ["d", "Ratio_empirical", "CI_ratios_LB", "CI_ratios_UB", "Ratio_theoretical"]

DEFAULT_DIMS = {
    "fig1-quad": (2, 4, 6, 8, 10, 12, 14, 16, 18, 20),
    "fig1-lin": (5, 10, 20, 30, 40, 50),
    "fig1-diag": (5, 10, 20, 30, 40, 50),
    "fig2-offline": (1, 10, 25, 50, 100, 150, 200),
    "fig2-online": (1, 10, 25, 50, 100, 150, 200),
    "fig3-ratio": (5, 10, 20, 30, 40, 50),
}
DEFAULT_REPS = {"fig1-quad": 80, "fig1-lin": 80, "fig1-diag": 80,
                "fig2-offline": 80, "fig2-online": 80, "fig3-ratio": 100}

MAX_FAILURE_RATE = 0.10
CI_METHOD = "normal mean CI (z * sd / sqrt(k)); ratio of means with delta-method independent-normal propagation"


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    dims: tuple = None
    n: int = 1000
    reps: int = None
    gamma: float = 0.9
    sigma: float = 1.0
    lam: float = 0.9
    N: int = 5
    radius: float = 0.9
    base_seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        dims = tuple(int(d) for d in (self.dims if self.dims is not None else DEFAULT_DIMS[self.experiment]))
        reps = int(self.reps if self.reps is not None else DEFAULT_REPS[self.experiment])
        if not dims or any(d < 1 for d in dims) or any(b <= a for a, b in zip(dims, dims[1:])):
            raise ValueError(f"dims must be a nonempty increasing list of positive integers, got {dims}")
        if reps < 2:
            raise ValueError("reps must be at least 2")
        if self.n < 1:
            raise ValueError("n must be positive")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lam must lie in (0, 1)")
        if self.N < 2:
            raise ValueError("N must be at least 2")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "reps", reps)

    @property
    def is_ratio(self):
        return self.experiment in RATIO_EXPERIMENTS


@dataclass
class ExperimentRow:
    d: int
    mse_mf: tuple
    mse_mb: tuple
    ratio: tuple
    ratio_theoretical: float = None
    successes: int = 0
    failures: int = 0
    errors_mf: list = field(default_factory=list, repr=False)
    errors_mb: list = field(default_factory=list, repr=False)

    @property
    def valid(self):
        return self.failures <= MAX_FAILURE_RATE * (self.successes + self.failures) and self.successes >= 2


def derive_seed(*keys):
    """A 64-bit seed determined by a tuple of non-negative integers."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint64)[0])


def _z(level):
    return 1.96 if level == 0.95 else NormalDist().inv_cdf(0.5 + level / 2)


def confidence_interval(samples, level=0.95):
    """``(lb, mean, ub)`` with half-width ``z * sd / sqrt(k)`` (sample sd, ddof=1)."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("a confidence interval needs at least 2 samples")
    m = float(x.mean())
    h = _z(level) * float(x.std(ddof=1)) / math.sqrt(x.size)
    return (m - h, m, m + h)


def ratio_confidence_interval(num, den, level=0.95):
    """CI for ``mean(num) / mean(den)`` treating both means as independent normals."""
    a = np.asarray(num, dtype=float)
    b = np.asarray(den, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("a confidence interval needs at least 2 samples")
    ma, mb = a.mean(), b.mean()
    r = float(ma / mb)
    rel = math.hypot(a.std(ddof=1) / math.sqrt(a.size) / ma, b.std(ddof=1) / math.sqrt(b.size) / mb)
    h = _z(level) * abs(r) * rel
    return (r - h, r, r + h)


# per-replication recipes: return (model-free error, model-based error) ----------

def _rep_fig1(cfg, d, seed):
    s_inst, s_sim = derive_seed(seed, d, 0), derive_seed(seed, d, 1)
    if cfg.experiment == "fig1-quad":
        A = random_stable_matrix(d, cfg.radius, s_inst)
        system = LinearSystem(A, np.eye(d), cfg.sigma, cfg.gamma, LQR)
        P = lqr_value_matrix(A, np.eye(d), cfg.gamma, cfg.sigma).P
        data = simulate_linear(system, cfg.n, s_sim)
        P_mf = lstd_quadratic(data, cfg.gamma, cfg.sigma).params.P
        P_mb = mb_lqr(data, cfg.gamma, cfg.sigma).params.P
        return float(np.sum((P_mf - P) ** 2)), float(np.sum((P_mb - P) ** 2))
    if cfg.experiment == "fig1-lin":
        A, kind, constraint = random_stable_matrix(d, cfg.radius, s_inst), GENERAL, "unconstrained"
    else:
        A, kind, constraint = random_stable_diagonal(d, cfg.radius, s_inst), DIAGONAL, "diagonal"
    theta = np.ones(d)
    system = LinearSystem(A, theta, cfg.sigma, cfg.gamma, kind)
    beta = true_beta(A, theta, cfg.gamma)
    data = simulate_linear(system, cfg.n, s_sim)
    b_mf = lstd_linear(data, cfg.gamma).params
    b_mb = mb_linear(data, cfg.gamma, constraint).params
    return float(np.sum((b_mf - beta) ** 2)), float(np.sum((b_mb - beta) ** 2))


def _rep_fig3(cfg, d, seed, system, beta, P_inf):
    data = simulate_linear(system, cfg.n, derive_seed(seed, d, 1))
    e_mf = lstd_linear(data, cfg.gamma).params - beta
    e_mb = mb_linear(data, cfg.gamma, "diagonal").params - beta
    # value-space errors under the stationary law, kept for the consistency check
    return (float(e_mf @ e_mf), float(e_mb @ e_mb)), (float(e_mf @ P_inf @ e_mf), float(e_mb @ P_inf @ e_mb))


def _rep_fig2(cfg, d, seed, dmrp, truth):
    data = simulate_decoupled(dmrp, cfg.n, derive_seed(seed, d, 1))
    delta_mf = lstd_separable(data, cfg.gamma).params - truth
    delta_mb = mb_decoupled(data, cfg.gamma).params - truth
    if cfg.experiment == "fig2-offline":
        return mse_uniform_separable(delta_mf), mse_uniform_separable(delta_mb)
    return float(np.mean(delta_mf(data.states) ** 2)), float(np.mean(delta_mb(data.states) ** 2))


def _row_runner(cfg, d, fig2_instance=None):
    """Return (per-replication callable, theoretical ratio or None, extra check)."""
    if cfg.experiment == "fig3-ratio":
        A = cfg.lam * np.eye(d)
        system = LinearSystem(A, np.ones(d), cfg.sigma, cfg.gamma, DIAGONAL)
        beta = true_beta(A, np.ones(d), cfg.gamma)
        P_inf = stationary_covariance(A, cfg.sigma)
        return (lambda seed: _rep_fig3(cfg, d, seed, system, beta, P_inf),
                dls_gap_ratio(d, cfg.lam, cfg.gamma))
    if cfg.experiment.startswith("fig2"):
        dmrp = fig2_instance.prefix(d)
        truth = separable_value(dmrp)
        return (lambda seed: _rep_fig2(cfg, d, seed, dmrp, truth)), None
    return (lambda seed: _rep_fig1(cfg, d, seed)), None


def _safe(fn, seed):
    try:
        return fn(seed)
    except (ValueGapError, np.linalg.LinAlgError) as exc:
        log.debug("replication with seed %d failed: %s", seed, exc)
        return None


def run_experiment(cfg, progress=None):
    """Run every dimension of ``cfg`` and return one ExperimentRow per ``d``.

    ``progress`` is called with each finished row.
    """
    fig2_instance = None
    if cfg.experiment.startswith("fig2"):
        # one instance, nested across d: the d-component MRP is a prefix of the largest
        fig2_instance = random_decoupled_instance(max(cfg.dims), cfg.N, derive_seed(cfg.base_seed, 2**31), cfg.gamma)
    rows = []
    with ThreadPoolExecutor(max_workers=max(1, int(cfg.threads))) as pool:
        for d in cfg.dims:
            fn, theory = _row_runner(cfg, d, fig2_instance)
            seeds = [cfg.base_seed + k for k in range(cfg.reps)]
            results = list(pool.map(lambda s: _safe(fn, s), seeds))
            ok = [r for r in results if r is not None]
            row = _aggregate(cfg, d, ok, len(results) - len(ok), theory)
            rows.append(row)
            if progress is not None:
                progress(row)
    return rows


def _aggregate(cfg, d, ok, failures, theory):
    value_space = None
    if cfg.experiment == "fig3-ratio" and ok:
        value_space = [r[1] for r in ok]
        ok = [r[0] for r in ok]
    e_mf = [r[0] for r in ok]
    e_mb = [r[1] for r in ok]
    nan3 = (math.nan, math.nan, math.nan)
    if len(ok) >= 2:
        mf, mb = confidence_interval(e_mf), confidence_interval(e_mb)
        ratio = ratio_confidence_interval(e_mf, e_mb)
    else:
        mf = mb = ratio = nan3
    if value_space is not None and len(ok) >= 2:
        r_val = np.mean([v[0] for v in value_space]) / np.mean([v[1] for v in value_space])
        if abs(r_val - ratio[1]) > 1e-10 * abs(ratio[1]):
            raise RuntimeError(f"parameter- and value-space ratios disagree at d={d}: {ratio[1]} vs {r_val}")
    if failures:
        log.warning("d=%d: %d of %d replications failed", d, failures, cfg.reps)
    return ExperimentRow(d, mf, mb, ratio, theory, len(ok), failures, e_mf, e_mb)


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.6g}"


def csv_header(experiment):
    return RATIO_HEADER if experiment in RATIO_EXPERIMENTS else MSE_HEADER


def csv_records(rows, experiment):
    for row in rows:
        if experiment in RATIO_EXPERIMENTS:
            lb, point, ub = row.ratio
            yield [str(row.d), _fmt(point), _fmt(lb), _fmt(ub), _fmt(row.ratio_theoretical)]
        else:
            (mf_lb, mf, mf_ub), (mb_lb, mb, mb_ub) = row.mse_mf, row.mse_mb
            yield [str(row.d), _fmt(mf), _fmt(mf_lb), _fmt(mf_ub), _fmt(mb), _fmt(mb_lb), _fmt(mb_ub)]


def write_csv(rows, path, experiment):
    """Write rows in the plotted-data schema (6 significant digits, comma separated)."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(csv_header(experiment))
            w.writerows(csv_records(rows, experiment))
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc


def metadata_path(csv_path):
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + ".meta.txt")


def write_metadata(cfg, rows, csv_path, wall_clock):
    """Line-oriented ``key=value`` sidecar next to the CSV."""
    meta = {k: v for k, v in asdict(cfg).items()}
    meta["dims"] = ",".join(str(d) for d in cfg.dims)
    meta["error_metric"] = ("value-space MSE" if cfg.experiment.startswith("fig2")
                            else "parameter-space squared error")
    meta["ci_method"] = CI_METHOD
    for row in rows:
        meta[f"d{row.d}.successes"] = row.successes
        meta[f"d{row.d}.failures"] = row.failures
        meta[f"d{row.d}.valid"] = row.valid
    meta["wall_clock_seconds"] = f"{wall_clock:.3f}"
    path = metadata_path(csv_path)
    try:
        with open(path, "w") as fh:
            for k, v in meta.items():
                fh.write(f"{k}={v}\n")
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc
    return path


def run_and_write(cfg, out, progress=None):
    start = time.perf_counter()
    rows = run_experiment(cfg, progress)
    write_csv(rows, out, cfg.experiment)
    write_metadata(cfg, rows, out, time.perf_counter() - start)
    return rows
