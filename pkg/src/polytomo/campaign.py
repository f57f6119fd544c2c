"""Config-driven Monte Carlo campaigns: simulate, reconstruct, compare to theory.

A campaign draws ``runs`` independent count vectors from a fixed protocol and
true state, reconstructs each one by maximum likelihood, and aggregates the
fidelities against the truth alongside the theoretical loss model. Per-run
seeds are pre-derived from the base seed (see :mod:`polytomo.sampling`), so
results are identical for any ``jobs`` setting; records are sorted by run
index before any serialization.

Config files are flat ``key=value`` text; unknown keys are rejected. Keys:

    protocol   tetrahedron | cube | octahedron      (required)
    qubits     1..3                                  (required)
    state      ghz | w | ghz_mixture | file:<path>   (required)
    degenerate true | false        (three symmetric qubits; default false)
    mix_weight weight of the white-noise part for ghz_mixture (default 0.5)
    n          expected total event count            (default 1e5)
    runs       number of Monte Carlo runs            (default 200)
    rank       model rank for reconstruction         (default 1)
    base_seed  64-bit campaign seed                  (default 2016)
    tol, max_iter, restarts, intensity_floor         solver settings
    bins       histogram bin count                   (default 20)
"""

from __future__ import annotations

import json
import math
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy
from scipy.stats import ks_2samp

from . import __version__
from .exceptions import CampaignRunError, ConfigError, DegeneratePrecisionModelError
from .estimation import solve_likelihood
from .precision import LossModel, loss_distribution_samples, loss_model
from .protocols import (
    Protocol,
    assign_exposures,
    cube,
    format_protocol,
    octahedron,
    tensor_protocol,
    tetrahedron,
)
from .sampling import MASK64, derive_run_seed, draw_counts
from .states import (
    AmplitudeMatrix,
    DensityMatrix,
    as_density,
    density_from_amplitude,
    fidelity_mixed,
    fidelity_pure,
    ghz,
    ghz_mixture,
    nines,
    w_state,
)
from .symmetric import project_state, reduce_protocol

__all__ = [
    "CampaignConfig",
    "RunRecord",
    "CampaignReport",
    "parse_config",
    "run_campaign",
    "compare_models",
    "ComparisonResult",
    "ks_statistic",
    "ks_test",
    "emit_histogram",
    "write_report",
]

PROTOCOL_BUILDERS = {
    "tetrahedron": tetrahedron,
    "cube": cube,
    "octahedron": octahedron,
}

# Salt XORed into each run's seed to decorrelate solver starts from counts.
INIT_SEED_SALT = 0xA5A5A5A5A5A5A5A5
THEORY_SAMPLE_COUNT = 1_000_000
THEORY_SAMPLE_SEED = 0x7E0
THEORY_GRID_POINTS = 200


@dataclass(frozen=True)
class CampaignConfig:
    protocol: str
    qubits: int
    state: str
    degenerate: bool = False
    mix_weight: float = 0.5
    n: float = 1e5
    runs: int = 200
    rank: int = 1
    base_seed: int = 2016
    tol: float = 1e-10
    max_iter: int = 5000
    restarts: int = 3
    intensity_floor: float = 1e-12
    bins: int = 20

    def __post_init__(self):
        if self.protocol not in PROTOCOL_BUILDERS:
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if not 1 <= self.qubits <= 3:
            raise ConfigError(f"qubits must be 1..3, got {self.qubits}")
        if self.degenerate and self.qubits != 3:
            raise ConfigError("degenerate mode needs qubits=3")
        if self.runs < 1:
            raise ConfigError(f"runs must be at least 1, got {self.runs}")
        if self.n <= 0:
            raise ConfigError(f"n must be positive, got {self.n}")
        if not 0.0 <= self.mix_weight <= 1.0:
            raise ConfigError(f"mix_weight must lie in [0, 1], got {self.mix_weight}")
        if self.bins < 1:
            raise ConfigError(f"bins must be at least 1, got {self.bins}")
        state = self.state
        if state not in ("ghz", "w", "ghz_mixture") and not state.startswith("file:"):
            raise ConfigError(f"unknown state {state!r}")
        dim = self.working_dim
        if not 1 <= self.rank <= dim:
            raise ConfigError(f"rank must lie in [1, {dim}], got {self.rank}")

    @property
    def working_dim(self) -> int:
        return 4 if self.degenerate else 2 ** self.qubits


_BOOL_VALUES = {"true": True, "false": False, "1": True, "0": False}

_CONFIG_PARSERS = {
    "protocol": str,
    "qubits": int,
    "state": str,
    "degenerate": lambda s: _parse_bool(s, "degenerate"),
    "mix_weight": float,
    "n": float,
    "runs": int,
    "rank": int,
    "base_seed": int,
    "tol": float,
    "max_iter": int,
    "restarts": int,
    "intensity_floor": float,
    "bins": int,
}


def _parse_bool(text: str, key: str) -> bool:
    try:
        return _BOOL_VALUES[text.strip().lower()]
    except KeyError:
        raise ConfigError(f"{key} must be true or false, got {text!r}") from None


def parse_config(path) -> CampaignConfig:
    """Read a flat key=value config file, rejecting unknown keys."""
    values = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_PARSERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _CONFIG_PARSERS[key](value.strip())
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    missing = {"protocol", "qubits", "state"} - set(values)
    if missing:
        raise ConfigError(f"{path}: missing required keys {sorted(missing)}")
    return CampaignConfig(**values)


def _load_state_file(path: str, dim: int):
    """Read a state from text: one line of s entries (pure amplitude) or an
    s x s matrix (density), complex entries like 0.5-0.25i."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines()
             if ln.strip() and not ln.lstrip().startswith("#")]
    rows = [[complex(tok.replace("i", "j")) for tok in ln.split()] for ln in lines]
    arr = np.array(rows, dtype=np.complex128)
    if arr.shape == (1, dim):
        vec = arr[0] / np.linalg.norm(arr[0])
        return AmplitudeMatrix(vec)
    if arr.shape == (dim, dim):
        return DensityMatrix(arr)
    raise ConfigError(
        f"{path}: expected 1x{dim} amplitude or {dim}x{dim} density, got {arr.shape}"
    )


def build_protocol(cfg: CampaignConfig) -> Protocol:
    """Tensor protocol for the configured qubits, reduced when degenerate,
    with exposures assigned."""
    single = PROTOCOL_BUILDERS[cfg.protocol]()
    proto = tensor_protocol([single] * cfg.qubits)
    if cfg.degenerate:
        proto = reduce_protocol(proto)
    return assign_exposures(proto, cfg.n)


def build_truth(cfg: CampaignConfig):
    """True state in the working dimension.

    Returns ``(density, pure_amplitude_or_None)``; the amplitude is set when
    the truth is pure so fidelities of rank-1 fits use the exact overlap
    formula.
    """
    dim = cfg.working_dim
    if cfg.state == "ghz":
        pure = ghz(cfg.qubits)
        if cfg.degenerate:
            pure, _ = project_state(pure)
    elif cfg.state == "w":
        pure = w_state(cfg.qubits)
        if cfg.degenerate:
            pure, _ = project_state(pure)
    elif cfg.state == "ghz_mixture":
        rho = ghz_mixture(cfg.mix_weight, dim)
        return rho, None
    else:
        loaded = _load_state_file(cfg.state[len("file:"):], dim)
        if isinstance(loaded, AmplitudeMatrix):
            return density_from_amplitude(loaded), loaded
        return loaded, None
    if pure.dim != dim:
        raise ConfigError(
            f"state dimension {pure.dim} does not match working dimension {dim}"
        )
    return density_from_amplitude(pure), pure


@dataclass(frozen=True)
class RunRecord:
    run: int
    seed: int
    total_counts: int
    iterations: int
    converged: bool
    fidelity: float
    z: float


@dataclass(frozen=True)
class CampaignReport:
    config: dict
    records: list
    mean_fidelity: float
    empirical_loss: float
    theoretical_loss: float | None
    ks_stat: float | None
    ks_pvalue: float | None
    loss: LossModel | None = field(repr=False, default=None)
    provenance: dict = field(default_factory=dict)


def _truth_fidelity(result, rho_true, pure_true, rank) -> float:
    if pure_true is not None and rank == 1:
        return fidelity_pure(result.amplitude, pure_true)
    return fidelity_mixed(rho_true, result.density)


def _execute_run(run: int, cfg: CampaignConfig, protocol, rho_true, pure_true):
    seed = derive_run_seed(cfg.base_seed, run)
    try:
        counts = draw_counts(protocol, rho_true, seed)
        result = solve_likelihood(
            counts, protocol, rank=cfg.rank, tol=cfg.tol, max_iter=cfg.max_iter,
            restarts=cfg.restarts, intensity_floor=cfg.intensity_floor,
            init_seed=(seed ^ INIT_SEED_SALT) & MASK64,
        )
        fid = _truth_fidelity(result, rho_true, pure_true, cfg.rank)
        return RunRecord(
            run=run,
            seed=seed,
            total_counts=counts.total,
            iterations=result.iterations,
            converged=result.converged,
            fidelity=fid,
            z=nines(fid),
        )
    except Exception as exc:
        raise CampaignRunError(f"run {run} (seed {seed}) failed: {exc}") from exc


def _provenance(cfg: CampaignConfig) -> dict:
    return {
        "polytomo": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        "config": asdict(cfg),
    }


def run_campaign(cfg: CampaignConfig, jobs: int = 1) -> CampaignReport:
    """Execute all runs, aggregate, and attach the theoretical loss model.

    The loss model is evaluated once at the true state; when the precision
    model degenerates there (for example a pure truth fitted at full rank),
    the theoretical entries are left empty and the simulation proceeds.
    """
    protocol = build_protocol(cfg)
    rho_true, pure_true = build_truth(cfg)
    try:
        model = loss_model(protocol, rho_true if pure_true is None else pure_true,
                           rank=cfg.rank)
    except DegeneratePrecisionModelError:
        model = None

    indices = range(cfg.runs)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(
                lambda i: _execute_run(i, cfg, protocol, rho_true, pure_true),
                indices,
            ))
    else:
        records = [_execute_run(i, cfg, protocol, rho_true, pure_true)
                   for i in indices]
    records.sort(key=lambda rec: rec.run)

    fidelities = np.array([rec.fidelity for rec in records])
    infidelities = 1.0 - fidelities
    ks_stat = ks_p = None
    if model is not None and cfg.runs >= 20:
        ks_stat, ks_p = ks_test(infidelities, model)
    return CampaignReport(
        config=asdict(cfg),
        records=records,
        mean_fidelity=float(fidelities.mean()),
        empirical_loss=float(cfg.n * infidelities.mean()),
        theoretical_loss=None if model is None else model.scaled_loss,
        ks_stat=ks_stat,
        ks_pvalue=ks_p,
        loss=model,
        provenance=_provenance(cfg),
    )


@dataclass(frozen=True)
class ComparisonResult:
    """Mean-infidelity ratio between full-rank and configured-rank fits."""

    ratio: float
    mean_infidelity_low: float
    mean_infidelity_full: float
    degenerate_comparison: bool


def compare_models(cfg: CampaignConfig, jobs: int = 1) -> ComparisonResult:
    """Fit every run's counts at rank ``cfg.rank`` and at full rank.

    Both fits see identical counts per run. With noiseless-like data both
    infidelities vanish and the ratio is flagged as degenerate instead of
    dividing 0 by 0.
    """
    protocol = build_protocol(cfg)
    rho_true, pure_true = build_truth(cfg)
    if pure_true is None:
        raise ConfigError("model comparison expects a pure true state")
    full_rank = cfg.working_dim

    def one(run: int):
        seed = derive_run_seed(cfg.base_seed, run)
        try:
            counts = draw_counts(protocol, rho_true, seed)
            init = (seed ^ INIT_SEED_SALT) & MASK64
            kwargs = dict(tol=cfg.tol, max_iter=cfg.max_iter, restarts=cfg.restarts,
                          intensity_floor=cfg.intensity_floor, init_seed=init)
            low = solve_likelihood(counts, protocol, rank=cfg.rank, **kwargs)
            full = solve_likelihood(counts, protocol, rank=full_rank, **kwargs)
            return (
                _truth_fidelity(low, rho_true, pure_true, cfg.rank),
                _truth_fidelity(full, rho_true, pure_true, full_rank),
            )
        except Exception as exc:
            raise CampaignRunError(f"run {run} (seed {seed}) failed: {exc}") from exc

    indices = range(cfg.runs)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            pairs = list(pool.map(one, indices))
    else:
        pairs = [one(i) for i in indices]
    low = np.mean([1.0 - f for f, _ in pairs])
    full = np.mean([1.0 - f for _, f in pairs])
    # Both at the solver's convergence floor: the ratio would be 0/0 noise.
    degenerate = low < 1e-9 and full < 1e-9
    return ComparisonResult(
        ratio=math.nan if degenerate else float(full / low),
        mean_infidelity_low=float(low),
        mean_infidelity_full=float(full),
        degenerate_comparison=degenerate,
    )


def _theory_samples(model: LossModel, count: int = THEORY_SAMPLE_COUNT) -> np.ndarray:
    return loss_distribution_samples(model, count, THEORY_SAMPLE_SEED)


def ks_test(infidelities, model: LossModel,
            samples: int = THEORY_SAMPLE_COUNT) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov test of empirical 1-F against the model.

    Returns (statistic, p-value); the theoretical sample is a fixed-seed
    Monte Carlo draw from the chi-square mixture.
    """
    values = np.asarray(infidelities, dtype=float)
    if values.size < 20:
        raise ValueError(f"need at least 20 values for the KS test, got {values.size}")
    theory = _theory_samples(model, samples)
    result = ks_2samp(values, theory)
    return float(result.statistic), float(result.pvalue)


def ks_statistic(infidelities, model: LossModel,
                 samples: int = THEORY_SAMPLE_COUNT) -> float:
    return ks_test(infidelities, model, samples)[0]


def emit_histogram(z_values, bins: int, model: LossModel | None):
    """Histogram tables of the nines variable.

    Returns ``(empirical, theory)``: the empirical table has rows
    ``(bin_left, bin_right, count, density)`` over [min z, max z]; the theory
    table has rows ``(z, density)`` on a 200-point grid histogram of the
    chi-square-mixture samples (empty when no model is available). Densities
    integrate to 1.
    """
    z = np.asarray(z_values, dtype=float)
    if z.size == 0:
        raise ValueError("need at least one z value")
    lo, hi = float(z.min()), float(z.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(z, bins=edges)
    widths = np.diff(edges)
    density = counts / (z.size * widths)
    empirical = [
        (float(edges[i]), float(edges[i + 1]), int(counts[i]), float(density[i]))
        for i in range(bins)
    ]
    theory = []
    if model is not None:
        samples = _theory_samples(model)
        z_theory = -np.log10(np.clip(samples, 1e-15, None))
        t_edges = np.linspace(z_theory.min(), z_theory.max(), THEORY_GRID_POINTS + 1)
        t_counts, _ = np.histogram(z_theory, bins=t_edges)
        t_width = np.diff(t_edges)
        t_density = t_counts / (z_theory.size * t_width)
        centers = (t_edges[:-1] + t_edges[1:]) / 2.0
        theory = [(float(cz), float(cd)) for cz, cd in zip(centers, t_density)]
    return empirical, theory


def _fmt(x) -> str:
    return f"{x:.17g}"


def write_report(report: CampaignReport, outdir) -> None:
    """Write report.json, runs.csv, hist_empirical.csv, hist_theory.csv and
    protocol.txt into ``outdir``.

    CSV files use '.' decimals, ',' separators, LF line endings and 17
    significant digits; identical configs produce byte-identical files.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = CampaignConfig(**report.config)

    with open(out / "runs.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("run,seed,total_counts,iterations,converged,fidelity,z\n")
        for rec in report.records:
            fh.write(
                f"{rec.run},{rec.seed},{rec.total_counts},{rec.iterations},"
                f"{int(rec.converged)},{_fmt(rec.fidelity)},{_fmt(rec.z)}\n"
            )

    empirical, theory = emit_histogram(
        [rec.z for rec in report.records], cfg.bins, report.loss
    )
    with open(out / "hist_empirical.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("bin_left,bin_right,count,density\n")
        for left, right, count, density in empirical:
            fh.write(f"{_fmt(left)},{_fmt(right)},{count},{_fmt(density)}\n")
    with open(out / "hist_theory.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("z,density\n")
        for z, density in theory:
            fh.write(f"{_fmt(z)},{_fmt(density)}\n")

    with open(out / "protocol.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_protocol(build_protocol(cfg)))

    payload = {
        "config": report.config,
        "provenance": report.provenance,
        "aggregates": {
            "mean_fidelity": report.mean_fidelity,
            "empirical_loss": report.empirical_loss,
            "theoretical_loss": report.theoretical_loss,
            "ks_stat": report.ks_stat,
            "ks_pvalue": report.ks_pvalue,
        },
        "loss_model": None if report.loss is None else {
            "coefficients": [float(d) for d in report.loss.coefficients],
            "dof": report.loss.dof,
            "mean_loss": report.loss.mean_loss,
            "scaled_loss": report.loss.scaled_loss,
        },
        "runs": [asdict(rec) for rec in report.records],
    }
    with open(out / "report.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
