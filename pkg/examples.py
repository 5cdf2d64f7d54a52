#!/usr/bin/env python3
"""
Example usage of fisherbound as a library.

Walks through the moment bound on analytic models, a theta sweep, the
squaring vs hard-limiter comparison and a small Monte-Carlo estimate.
"""

import sys

from src.analysis import SweepMode, soft_limiter_model, squaring_vs_hard_limiter, sweep
from src.bound import crlb_variance, fisher_bound
from src.errors import FisherBoundError
from src.models import ModelKind, ModelSpec, exact_fisher, model_moments
from src.montecarlo import SimConfig, estimate_point


def example_single_bound():
    """Bound vs exact Fisher information at one theta."""
    print("📐 Single-point bound")
    print("=" * 30)

    for kind, theta in [(ModelKind.GAUSSIAN_LOC_SCALE, 0.3), (ModelKind.LAPLACE_SCALE, 1.0),
                        (ModelKind.POISSON, 2.0), (ModelKind.SQUARING_GAUSSIAN, 1.0)]:
        model = ModelSpec(kind)
        point = model_moments(model, theta)
        result = fisher_bound(point)
        exact = exact_fisher(model, theta)
        exact_text = f"{exact:.6f}" if exact is not None else "n/a"
        print(f"\n📝 {model.label()} at theta={theta}:")
        print(f"   S = {result.s_value:.6f}  F = {exact_text}  case = {result.case.value}")
        print(f"   beta* = {result.beta_star:.6g}")


def example_sweep():
    """Information loss of the hard-limiter over a theta grid."""
    print("\n📈 Hard-limiter sweep")
    print("=" * 30)

    model = ModelSpec(ModelKind.HARD_LIMITED_GAUSSIAN)
    for record in sweep(model, [0.0, 0.5, 1.0, 1.5, 2.0], mode=SweepMode.ANALYTIC):
        print(f"   theta={record.theta:.2f}  S={record.s_value:.5f}  loss={record.loss_db:+.3f} dB")

    variance = crlb_variance(exact_fisher(model, 0.0), 100)
    print(f"\n🎯 CRLB on the variance at theta=0 with 100 observations: {variance:.5f}")


def example_crossover():
    """Where squaring overtakes the hard-limiter."""
    print("\n✂️  Squaring vs hard-limiter")
    print("=" * 30)

    table = squaring_vs_hard_limiter()
    crossover = table.notes["crossover"]
    print(f"   {len(table.rows)} grid points, crossover at theta ≈ {crossover:.3f}")


def example_monte_carlo():
    """Soft-limiter moments measured by simulation."""
    print("\n🎲 Monte-Carlo soft-limiter")
    print("=" * 30)

    config = SimConfig(n_samples=200_000, base_seed=42)
    point = estimate_point(soft_limiter_model(0.5), 0.5, config)
    result = fisher_bound(point)
    print(f"   mu1={point.mu1:.4f}  dmu1={point.dmu1:.4f}  mu4bar={point.mu4bar:.4f}")
    print(f"   S ≈ {result.s_value:.4f} ({result.case.value})")


def main():
    """Run examples."""
    print("📊 fisherbound Examples")
    print("=" * 40)

    try:
        example_single_bound()
        example_sweep()
        example_crossover()
        example_monte_carlo()
    except FisherBoundError as e:
        print(f"❌ Error: {e}")
        return 1

    print("\n✅ Done")
    return 0


if __name__ == "__main__":
    sys.exit(main())
