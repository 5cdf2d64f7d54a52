"""
Information-loss analysis: theta-grid sweeps that combine the model zoo,
Monte-Carlo measurement and the bound, crossover detection between loss
curves, and the pipelines that regenerate the loss and moment figures.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from src.bound import BoundCase, QuadraticRatioCoeffs, fisher_bound, optimal_beta, quadratic_ratio
from src.errors import (
    DegenerateDirectionError,
    FisherBoundError,
    GridMismatchError,
    InvalidInformationError,
    SweepPointError,
    UnsupportedAnalyticError,
)
from src.models import (
    ModelKind,
    ModelSpec,
    PolynomialMap,
    exact_fisher,
    model_moments,
    soft_limiter_transfer,
)
from src.moments import MomentPoint
from src.montecarlo import (
    MomentCache,
    SimConfig,
    empirical_fisher_check,
    estimate_point,
    fisher_oracle_squaring,
    soft_limiter_point_quadrature,
)

logger = logging.getLogger(__name__)

# Stands in for -inf dB when the bound is exactly zero.
NEG_INF_DB = -999.0

FIG1_GRID = tuple(np.linspace(0.0, 2.0, 81))
SOFT_LIMITER_GRID = tuple(np.linspace(0.0, 1.0, 51))
SOFT_LIMITER_ZETAS = (1.0, 0.75, 0.5, 0.25, 0.1)
IO_GRID = tuple(np.linspace(-1.0, 1.0, 81))


class SweepMode(str, Enum):
    ANALYTIC = "analytic"
    MONTE_CARLO = "montecarlo"
    AUTO = "auto"


@dataclass(frozen=True)
class SweepRecord:
    """One theta-grid row."""

    theta: float
    moments: MomentPoint
    beta_star: float
    s_value: float
    f_exact: Optional[float]
    f_input: float
    loss_db: float
    case: BoundCase

    @property
    def ratio(self) -> float:
        return self.s_value / self.f_input


@dataclass
class FigureTable:
    """Column table for a figure, ready for CSV."""

    name: str
    columns: Tuple[str, ...]
    rows: List[Tuple[float, ...]] = field(default_factory=list)
    notes: Dict[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class VerificationResult:
    name: str
    passed: bool
    detail: str


def hard_limiter_model(gamma: float = 0.0) -> ModelSpec:
    return ModelSpec(ModelKind.HARD_LIMITED_GAUSSIAN, gamma=gamma)


def squaring_model() -> ModelSpec:
    return ModelSpec(ModelKind.SQUARING_GAUSSIAN)


def soft_limiter_model(zeta: float) -> ModelSpec:
    return ModelSpec(ModelKind.SOFT_LIMITER_GAUSSIAN, zeta=zeta)


def information_loss(s_z: float, f_y: float) -> Tuple[float, float]:
    """
    Approximate information loss S_Z/F_Y of a system relative to its input.

    Returns:
        Tuple of (ratio, ratio in dB)
    """
    if not (s_z > 0 and f_y > 0):
        raise InvalidInformationError(f"information values must be positive, got s_z={s_z!r}, f_y={f_y!r}")
    ratio = s_z / f_y
    return ratio, 10.0 * math.log10(ratio)


def loss_db_or_sentinel(s_z: float, f_y: float) -> float:
    if s_z == 0.0:
        return NEG_INF_DB
    return information_loss(s_z, f_y)[1]


def reference_fisher(model: ModelSpec, theta: float, reference: Optional[ModelSpec] = None) -> float:
    """
    Fisher information of the reference the loss is measured against.

    Defaults to the Gaussian input (same maps) for Gaussian-input kinds and
    to the model's own exact F otherwise.
    """
    if reference is None:
        if model.has_gaussian_input:
            reference = ModelSpec(ModelKind.GAUSSIAN_LOC_SCALE, mean_map=model.mean_map,
                                  variance_map=model.variance_map)
        else:
            reference = model

    value = exact_fisher(reference, theta)
    if value is None or not value > 0:
        raise InvalidInformationError(
            f"reference {reference.label()} has no positive Fisher information at theta={theta!r}"
        )
    return value


def worst_case_bound(mu2: float, dmu1: float, mu3bar: float, mu4bar: float) -> float:
    """
    Bound for outputs with constant second moment; zero skewness minimises it,
    where it reduces to dmu1^2/mu2 (attained by additive Gaussian noise).
    """
    return dmu1 * dmu1 / (mu2 * (1.0 - mu3bar * mu3bar / (mu4bar - 1.0)))


def resolve_mode(model: ModelSpec, mode: SweepMode) -> SweepMode:
    if mode is SweepMode.AUTO:
        return SweepMode.ANALYTIC if model.is_analytic else SweepMode.MONTE_CARLO
    if mode is SweepMode.ANALYTIC and not model.is_analytic:
        raise UnsupportedAnalyticError(f"{model.label()} cannot be swept analytically; use montecarlo mode")
    return mode


def _check_grid(grid: Sequence[float]) -> None:
    if len(grid) == 0:
        raise ValueError("grid must contain at least one point")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")


def _reuses_neighbours(grid: Sequence[float], config: SimConfig) -> bool:
    """Uniform grids whose spacing equals the difference step can share one noise stream."""
    if not config.use_common_random_numbers or len(grid) < 3:
        return False
    spacing = np.diff(np.asarray(grid, dtype=float))
    return bool(np.allclose(spacing, config.fd_step, rtol=0.0, atol=1e-12))


def evaluate_point(model: ModelSpec, theta: float, mode: SweepMode, config: SimConfig,
                   index: int = 0, reference: Optional[ModelSpec] = None,
                   cache: Optional[MomentCache] = None) -> SweepRecord:
    """Build one sweep record; mode must already be resolved."""
    if mode is SweepMode.ANALYTIC:
        point = model_moments(model, theta)
    else:
        point = estimate_point(model, theta, config, index, cache)

    f_exact = exact_fisher(model, theta)
    result = fisher_bound(point)
    f_input = reference_fisher(model, theta, reference)
    return SweepRecord(
        theta=theta,
        moments=point,
        beta_star=result.beta_star,
        s_value=result.s_value,
        f_exact=f_exact,
        f_input=f_input,
        loss_db=loss_db_or_sentinel(result.s_value, f_input),
        case=result.case,
    )


def sweep(model: ModelSpec, grid: Sequence[float], config: Optional[SimConfig] = None,
          mode: SweepMode = SweepMode.AUTO, reference: Optional[ModelSpec] = None,
          show_progress: bool = False) -> List[SweepRecord]:
    """
    Evaluate the bound on a theta grid.

    Args:
        model: System to analyse
        grid: Strictly increasing parameter values
        config: Monte-Carlo settings (defaults to SimConfig())
        mode: analytic, montecarlo, or auto (analytic when available)
        reference: Model whose Fisher information normalizes the loss
        show_progress: Display a progress bar

    Returns:
        One record per grid point, in grid order

    Raises:
        SweepPointError: the first failing point, with its theta
    """
    config = config or SimConfig()
    grid = [float(theta) for theta in grid]
    _check_grid(grid)
    mode = resolve_mode(model, mode)

    shared_stream = mode is SweepMode.MONTE_CARLO and _reuses_neighbours(grid, config)
    cache: Optional[MomentCache] = {} if shared_stream else None
    if shared_stream:
        logger.info("%s: grid spacing equals fd_step, reusing neighbouring moments", model.label())

    def task(item: Tuple[int, float]) -> SweepRecord:
        index, theta = item
        started = time.perf_counter()
        try:
            record = evaluate_point(model, theta, mode, config, 0 if shared_stream else index, reference, cache)
        except (FisherBoundError, ValueError) as e:
            raise SweepPointError(theta, e) from e
        logger.debug("%s theta=%r done in %.3fs", model.label(), theta, time.perf_counter() - started)
        return record

    items = list(enumerate(grid))
    description = f"{model.label()} [{mode.value}]"
    if config.workers > 1 and mode is SweepMode.MONTE_CARLO:
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            return list(tqdm(executor.map(task, items), total=len(items), desc=description,
                             disable=not show_progress))
    return [task(item) for item in tqdm(items, desc=description, disable=not show_progress)]


def find_crossover(curve_a: Sequence[Tuple[float, float]],
                   curve_b: Sequence[Tuple[float, float]]) -> Optional[float]:
    """
    First theta where a - b changes sign, linearly interpolated between
    the bracketing grid points; None when the curves never cross.
    """
    if len(curve_a) != len(curve_b) or any(
        not math.isclose(ta, tb, rel_tol=0.0, abs_tol=1e-12) for (ta, _), (tb, _) in zip(curve_a, curve_b)
    ):
        raise GridMismatchError("curves must share the same theta grid")

    thetas = [theta for theta, _ in curve_a]
    diffs = [va - vb for (_, va), (_, vb) in zip(curve_a, curve_b)]
    for i, diff in enumerate(diffs):
        if diff == 0.0:
            return thetas[i]
        if i + 1 < len(diffs) and diff * diffs[i + 1] < 0.0:
            following = diffs[i + 1]
            return thetas[i] + (thetas[i + 1] - thetas[i]) * diff / (diff - following)
    return None


def loss_curve(records: Sequence[SweepRecord]) -> List[Tuple[float, float]]:
    return [(record.theta, record.loss_db) for record in records]


def squaring_vs_hard_limiter(grid: Sequence[float] = FIG1_GRID) -> FigureTable:
    """Loss of the squaring device and the symmetric hard-limiter for a unit-variance Gaussian input."""
    squaring = sweep(squaring_model(), grid, mode=SweepMode.ANALYTIC)
    hard = sweep(hard_limiter_model(0.0), grid, mode=SweepMode.ANALYTIC)
    table = FigureTable("fig1", ("theta", "squaring_loss_db", "hard_limiter_loss_db"))
    table.rows = [(s.theta, s.loss_db, h.loss_db) for s, h in zip(squaring, hard)]
    table.notes["crossover"] = find_crossover(loss_curve(squaring), loss_curve(hard))
    return table


def soft_limiter_io_curve(zetas: Sequence[float] = SOFT_LIMITER_ZETAS,
                          ys: Sequence[float] = IO_GRID) -> FigureTable:
    """Input-to-output mapping of the soft-limiter for several saturation levels."""
    columns = ("y",) + tuple(f"zeta_{zeta:.2f}" for zeta in zetas)
    table = FigureTable("fig2", columns)
    outputs = [soft_limiter_transfer(ys, zeta) for zeta in zetas]
    table.rows = [(float(y),) + tuple(float(z[i]) for z in outputs) for i, y in enumerate(ys)]
    return table


def soft_limiter_moments(zeta: float = 0.5, grid: Sequence[float] = SOFT_LIMITER_GRID,
                         config: Optional[SimConfig] = None, show_progress: bool = False) -> List[SweepRecord]:
    """Measured moments and derivatives of the soft-limiter output."""
    return sweep(soft_limiter_model(zeta), grid, config, SweepMode.MONTE_CARLO, show_progress=show_progress)


def records_table(name: str, records: Sequence[SweepRecord], fields: Sequence[str]) -> FigureTable:
    """Moment-point fields (mu1, dmu2, ...) of sweep records as a column table."""
    table = FigureTable(name, ("theta",) + tuple(fields))
    table.rows = [(r.theta,) + tuple(getattr(r.moments, column) for column in fields) for r in records]
    return table


def hard_limiter_reference_curve(grid: Sequence[float]) -> List[Tuple[float, float]]:
    """Exact hard-limiter loss, the zeta -> 0 limit of the soft-limiter."""
    model = hard_limiter_model(0.0)
    return [(theta, loss_db_or_sentinel(exact_fisher(model, theta), reference_fisher(model, theta)))
            for theta in grid]


def soft_limiter_quadrature_curve(zeta: float, grid: Sequence[float]) -> List[Tuple[float, float]]:
    """Soft-limiter loss curve from quadrature moments, the reference for measured curves."""
    model = soft_limiter_model(zeta)
    curve = []
    for theta in grid:
        s_value = fisher_bound(soft_limiter_point_quadrature(float(theta), zeta)).s_value
        curve.append((float(theta), loss_db_or_sentinel(s_value, reference_fisher(model, theta))))
    return curve


def soft_limiter_losses(zetas: Sequence[float] = SOFT_LIMITER_ZETAS, grid: Sequence[float] = SOFT_LIMITER_GRID,
                        config: Optional[SimConfig] = None, show_progress: bool = False) -> FigureTable:
    """Measured loss curves for each saturation level plus the hard-limiter limit."""
    columns = ("theta",) + tuple(f"zeta_{zeta:.2f}_loss_db" for zeta in zetas) + ("hard_limiter_loss_db",)
    table = FigureTable("fig5", columns)
    curves = [loss_curve(soft_limiter_moments(zeta, grid, config, show_progress)) for zeta in zetas]
    hard = hard_limiter_reference_curve(grid)
    for i, (theta, hard_db) in enumerate(hard):
        table.rows.append((theta,) + tuple(curve[i][1] for curve in curves) + (hard_db,))
    table.notes["max_gap_db"] = {
        zeta: max(abs(curve[i][1] - hard[i][1]) for i in range(len(hard))) for zeta, curve in zip(zetas, curves)
    }
    return table


def random_realizable_point(generator: np.random.Generator, support_size: int = 5) -> MomentPoint:
    """Moments of a random finite discrete distribution with random derivatives (always Pearson-feasible)."""
    support = generator.normal(0.0, 1.0, support_size) * generator.uniform(0.2, 3.0)
    weights = generator.dirichlet(np.ones(support_size))
    mu1 = float(weights @ support)
    deviation = support - mu1
    mu2 = float(weights @ deviation ** 2)
    mu3 = float(weights @ deviation ** 3)
    mu4 = float(weights @ deviation ** 4)
    dmu1, dmu2 = generator.uniform(-3.0, 3.0, 2)
    return MomentPoint.from_central(0.0, mu1, mu2, mu3, mu4, float(dmu1), float(dmu2))


def _max_relative_gap(model: ModelSpec, grid: Sequence[float], target: Callable[[float], float]) -> float:
    worst = 0.0
    for record in sweep(model, grid, mode=SweepMode.ANALYTIC):
        expected = target(record.theta)
        worst = max(worst, abs(record.s_value - expected) / expected)
    return worst


def _tightness_cases() -> List[Tuple[str, ModelSpec, Sequence[float]]]:
    widening = PolynomialMap((1.0, 0.0, 1.0))
    return [
        ("gaussian nu2=1", ModelSpec(ModelKind.GAUSSIAN_LOC_SCALE), np.linspace(-2.0, 2.0, 50)),
        ("gaussian nu2=1+theta^2", ModelSpec(ModelKind.GAUSSIAN_LOC_SCALE, variance_map=widening),
         np.linspace(-2.0, 2.0, 50)),
        ("exponential", ModelSpec(ModelKind.EXPONENTIAL), np.linspace(0.1, 10.0, 50)),
        ("bernoulli", ModelSpec(ModelKind.BERNOULLI), np.linspace(0.05, 0.95, 50)),
        ("poisson", ModelSpec(ModelKind.POISSON), np.linspace(0.1, 10.0, 50)),
        ("hard-limiter gamma=0", hard_limiter_model(0.0), np.linspace(-2.0, 2.0, 50)),
        ("hard-limiter gamma=0.5", hard_limiter_model(0.5), np.linspace(-2.0, 2.0, 50)),
    ]


def _check(name: str, passed: bool, detail: str) -> VerificationResult:
    logger.info("%s: %s (%s)", name, "pass" if passed else "FAIL", detail)
    return VerificationResult(name, bool(passed), detail)


def verify_tightness() -> List[VerificationResult]:
    results = []
    for name, model, grid in _tightness_cases():
        gap = _max_relative_gap(model, grid, lambda theta, m=model: exact_fisher(m, theta))
        results.append(_check(f"tightness {name}", gap <= 1e-9, f"max |S-F|/F = {gap:.2e}"))
    return results


def verify_laplace_gap() -> VerificationResult:
    model = ModelSpec(ModelKind.LAPLACE_SCALE)
    gap = _max_relative_gap(model, np.linspace(0.1, 10.0, 50), lambda theta: 0.8 * exact_fisher(model, theta))
    return _check("laplace S/F = 4/5", gap <= 1e-12, f"max relative deviation = {gap:.2e}")


def verify_squaring() -> List[VerificationResult]:
    model = squaring_model()
    at_one = fisher_bound(model_moments(model, 1.0)).s_value
    at_zero = fisher_bound(model_moments(model, 0.0)).s_value
    margins = []
    for theta in np.linspace(0.0, 2.0, 41):
        margins.append(fisher_oracle_squaring(theta) + 1e-6 - fisher_bound(model_moments(model, theta)).s_value)
    return [
        _check("squaring S(1) = 38/53", abs(at_one - 38.0 / 53.0) <= 1e-12, f"S(1) = {at_one!r}"),
        _check("squaring S(0) = 0", at_zero == 0.0, f"S(0) = {at_zero!r}"),
        _check("squaring S <= F (quadrature)", min(margins) >= 0.0, f"min margin = {min(margins):.2e}"),
    ]


def verify_crossover() -> List[VerificationResult]:
    table = squaring_vs_hard_limiter()
    crossover = table.notes["crossover"]
    hard_at_zero = table.rows[0][2]
    expected = 10.0 * math.log10(2.0 / math.pi)
    return [
        _check("fig1 crossover in (0.70, 0.80)", crossover is not None and 0.70 < crossover < 0.80,
               f"crossover = {crossover!r}"),
        _check("hard-limiter loss at 0", abs(hard_at_zero - expected) <= 1e-4, f"{hard_at_zero:.6f} dB"),
    ]


def verify_random_instances(count: int = 10_000, seed: int = 0) -> List[VerificationResult]:
    """beta*-maximality and dominance over random realizable moment sets."""
    generator = np.random.default_rng(seed)
    worst_maximality = 0.0
    worst_dominance = 0.0
    for _ in range(count):
        point = random_realizable_point(generator)
        coeffs = QuadraticRatioCoeffs.from_point(point)
        beta = optimal_beta(coeffs)
        if math.isfinite(beta) and point.slack > 1e-6:
            peak = quadratic_ratio(beta, coeffs)
            for delta in (1e-3, 1e-1, 1.0):
                for neighbour in (beta - delta, beta + delta):
                    try:
                        excess = (quadratic_ratio(neighbour, coeffs) - peak) / max(1.0, peak)
                        worst_maximality = max(worst_maximality, excess)
                    except DegenerateDirectionError:
                        continue
        s_value = fisher_bound(point).s_value
        deficit = (point.dmu1 ** 2 / point.mu2 - s_value) / max(1.0, s_value)
        worst_dominance = max(worst_dominance, deficit)
    return [
        _check("beta* maximality", worst_maximality <= 1e-12, f"worst excess = {worst_maximality:.2e}"),
        _check("S dominates unoptimized bound", worst_dominance <= 1e-12, f"worst deficit = {worst_dominance:.2e}"),
    ]


def verify_worst_case() -> VerificationResult:
    passed = True
    for variance in (0.5, 1.0, 2.0):
        gaussian = exact_fisher(ModelSpec(ModelKind.GAUSSIAN_LOC_SCALE,
                                          variance_map=PolynomialMap.constant(variance)), 0.0)
        laplace_location = 2.0 / variance
        passed = passed and gaussian <= laplace_location
    return _check("gaussian is worst case", passed, "F_gauss = 1/v <= F_laplace = 2/v for v in {0.5, 1, 2}")


def verify_monte_carlo(config: SimConfig, show_progress: bool = False) -> List[VerificationResult]:
    grid = np.linspace(0.0, 1.0, 21)
    measured = loss_curve(soft_limiter_moments(0.1, grid, config, show_progress))
    exact = soft_limiter_quadrature_curve(0.1, grid)
    error = max(abs(m[1] - e[1]) for m, e in zip(measured, exact))
    results = [_check("soft-limiter zeta=0.1 matches quadrature", error <= 0.05, f"max error = {error:.4f} dB")]

    # Wider saturation keeps more information.
    wide = loss_curve(soft_limiter_moments(1.0, grid, config, show_progress))
    middle = loss_curve(soft_limiter_moments(0.5, grid, config, show_progress))
    violation = max(
        max(m[1] - w[1], n[1] - m[1]) for w, m, n in zip(wide, middle, measured)
    )
    results.append(_check("soft-limiter loss ordered in zeta", violation <= 0.1,
                          f"worst ordering violation = {max(violation, 0.0):.3f} dB"))

    hard = hard_limiter_reference_curve(grid)
    gaps = [max(abs(c[1] - h[1]) for c, h in zip(curve, hard)) for curve in (wide, middle, measured)]
    results.append(_check("soft-limiter approaches hard-limiter as zeta shrinks", gaps[0] > gaps[1] > gaps[2],
                          "max gap for zeta 1, 0.5, 0.1 = " + ", ".join(f"{g:.3f}" for g in gaps) + " dB"))

    model = hard_limiter_model(0.0)
    worst = 0.0
    for index, theta in enumerate((0.0, 0.5, 1.0)):
        estimate = empirical_fisher_check(model, theta, config, index)
        exact = exact_fisher(model, theta)
        worst = max(worst, abs(estimate - exact) / exact)
    results.append(_check("empirical hard-limiter Fisher", worst <= 0.05, f"max relative error = {worst:.3%}"))
    return results


def run_verification(include_monte_carlo: bool = False, config: Optional[SimConfig] = None,
                     show_progress: bool = False) -> List[VerificationResult]:
    """Run the acceptance suites and collect their outcomes."""
    results = verify_tightness()
    results.append(verify_laplace_gap())
    results.extend(verify_squaring())
    results.extend(verify_crossover())
    results.extend(verify_random_instances())
    results.append(verify_worst_case())
    if include_monte_carlo:
        results.extend(verify_monte_carlo(config or SimConfig(n_samples=10_000_000), show_progress))
    return results
