"""Value-of-information analysis and cost-aware sample-size design.

Both operations Monte-Carlo a user-supplied generative pair (prior
sampler for Y, data sampler for z given Y) with common random numbers:
every replicate draws its randomness from a stream seeded by
(seed, replicate index), so the two VOI arms, and all candidate sample
sizes, see identical draws.  Results are bit-reproducible for a fixed
(seed, grid, replicate budget).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import engine
from .errors import NumericError, ValidationError
from .posteriors import GaussianPosterior, SamplePosterior


@dataclass(frozen=True)
class JointModel:
    """Generative pair for preposterior analysis.

    ``prior_sampler(rng) -> y`` draws the predictand; ``data_sampler(rng,
    y, n) -> array`` draws n observations given Y = y; ``posterior_builder
    (z, z_extra) -> Posterior`` turns simulated data into a posterior
    (z may be None when n = 0; z_extra is None without an extra arm).
    ``extra_data_sampler`` supplies the VOI extra-data arm.
    """

    prior_sampler: Callable
    data_sampler: Callable
    posterior_builder: Callable
    extra_data_sampler: Optional[Callable] = None
    n_existing: int = 1
    n_extra: int = 1


@dataclass(frozen=True)
class CostFunction:
    """Sampling cost c(n) = c0 + per_unit * n, or an explicit table."""

    c0: float = 0.0
    per_unit: float = 0.0
    table: Optional[dict] = None

    def __post_init__(self):
        if self.c0 < 0 or self.per_unit < 0:
            raise ValidationError("costs must be nonnegative")
        if self.table is not None:
            ns = sorted(self.table)
            vals = [self.table[n] for n in ns]
            if any(b < a for a, b in zip(vals, vals[1:])):
                raise ValidationError("cost table must be nondecreasing in n")

    def __call__(self, n):
        if self.table is not None:
            if n not in self.table:
                raise ValidationError(f"cost table has no entry for n={n}")
            return float(self.table[n])
        return self.c0 + self.per_unit * n


def _replicate_rng(seed, replicate, purpose):
    return np.random.default_rng(np.random.SeedSequence((int(seed), int(replicate), purpose)))


# purposes are numbered so every (replicate, purpose) pair maps to one stream
_PRIOR, _DATA, _EXTRA, _POSTERIOR = 0, 1, 2, 3


def voi(model, value_fn, n_mc, seed):
    """Monte Carlo value of information of the extra-data arm.

    Returns (voi, std_err).  The existing-data arm and the combined arm
    share the same prior and existing-data draws per replicate, so an
    extra arm that duplicates the existing data yields exactly zero.
    """
    if n_mc < 2:
        raise ValidationError(f"n_mc must be >= 2, got {n_mc}")
    if model.extra_data_sampler is None:
        raise ValidationError("VOI requires an extra_data_sampler")
    diffs = np.empty(n_mc)
    for r in range(n_mc):
        y = model.prior_sampler(_replicate_rng(seed, r, _PRIOR))
        z = model.data_sampler(_replicate_rng(seed, r, _DATA), y, model.n_existing)
        z_extra = model.extra_data_sampler(
            _replicate_rng(seed, r, _EXTRA), y, model.n_extra)
        v_existing = value_fn(model.posterior_builder(z, None), y)
        v_both = value_fn(model.posterior_builder(z, z_extra), y)
        diffs[r] = v_both - v_existing
    est = float(diffs.mean())
    se = float(diffs.std(ddof=1) / math.sqrt(n_mc))
    return est, se


def expected_joint_loss(model, loss, n, n_mc, seed, max_n=None):
    """Monte Carlo E_JL of the EPL-optimal rule at sample size n.

    ``max_n`` lets callers share data draws across candidate sizes:
    each replicate draws max_n observations once and uses the first n.
    """
    if max_n is None:
        max_n = n
    losses = np.empty(n_mc)
    for r in range(n_mc):
        y = model.prior_sampler(_replicate_rng(seed, r, _PRIOR))
        if max_n > 0:
            draws = np.asarray(
                model.data_sampler(_replicate_rng(seed, r, _DATA), y, max_n))
            z = draws[:n] if n > 0 else None
        else:
            z = None
        post = model.posterior_builder(z, None)
        decision = engine.optimize(loss, post)
        value = float(np.asarray(engine._as_lossfn(loss)(decision.action, y)))
        if not np.isfinite(value):
            raise NumericError(
                f"non-finite loss in replicate {r} (seed {seed}, n={n})")
        losses[r] = value
    return float(losses.mean())


def optimal_sample_size(model, loss, tau, cost, n_grid, n_mc, seed):
    """n* = argmin over the grid of tau * E_JL(n) + c(n); ties to smallest n.

    Returns (n_star, curve) where curve is a list of
    (n, objective, e_jl, cost) rows.
    """
    ns = sorted(set(int(n) for n in n_grid))
    if not ns:
        raise ValidationError("n_grid must be nonempty")
    if any(n < 0 for n in ns):
        raise ValidationError("sample sizes must be >= 0")
    if not tau > 0:
        raise ValidationError(f"tau must be > 0, got {tau!r}")
    max_n = max(ns)
    curve = []
    for n in ns:
        ejl = expected_joint_loss(model, loss, n, n_mc, seed, max_n=max_n)
        c = cost(n)
        curve.append((n, tau * ejl + c, ejl, c))
    best = min(curve, key=lambda row: (row[1], row[0]))
    return best[0], curve


# ---------------------------------------------------------------------------
# conjugate templates


def gaussian_known_variance(prior_mean, prior_sd, noise_sd,
                            n_existing=1, n_extra=1, extra_noise_sd=None):
    """Gaussian prior for Y, Gaussian observations with known noise sd.

    The posterior is conjugate, so ``posterior_builder`` returns an exact
    GaussianPosterior.  ``extra_noise_sd=0`` models a perfect-information
    extra arm (the posterior collapses onto the extra-arm mean).
    """
    if not (prior_sd > 0 and noise_sd > 0):
        raise ValidationError("prior_sd and noise_sd must be > 0")
    if extra_noise_sd is None:
        extra_noise_sd = noise_sd

    def prior_sampler(rng):
        return rng.normal(prior_mean, prior_sd)

    def data_sampler(rng, y, n):
        return rng.normal(y, noise_sd, size=n)

    def extra_data_sampler(rng, y, n):
        if extra_noise_sd == 0:
            return np.full(n, y, dtype=float)
        return rng.normal(y, extra_noise_sd, size=n)

    def posterior_builder(z, z_extra=None):
        prec = 1.0 / prior_sd ** 2
        mean_num = prior_mean / prior_sd ** 2
        if z is not None and len(z) > 0:
            prec += len(z) / noise_sd ** 2
            mean_num += np.sum(z) / noise_sd ** 2
        if z_extra is not None and len(z_extra) > 0:
            if extra_noise_sd == 0:
                # perfect information: degenerate posterior at the truth
                return SamplePosterior([float(np.mean(z_extra))])
            prec += len(z_extra) / extra_noise_sd ** 2
            mean_num += np.sum(z_extra) / extra_noise_sd ** 2
        return GaussianPosterior(mean_num / prec, math.sqrt(1.0 / prec))

    return JointModel(prior_sampler, data_sampler, posterior_builder,
                      extra_data_sampler, n_existing, n_extra)


def beta_bernoulli(a, b, n_existing=1, n_extra=1, posterior_draws=4000):
    """Beta(a, b) prior for a success rate with Bernoulli observations.

    The conjugate Beta posterior is represented as a seeded sample cloud
    (``posterior_draws`` draws) so the generic loss machinery applies.
    """
    if not (a > 0 and b > 0):
        raise ValidationError("Beta parameters must be > 0")

    def prior_sampler(rng):
        return rng.beta(a, b)

    def data_sampler(rng, y, n):
        return (rng.random(n) < y).astype(float)

    def extra_data_sampler(rng, y, n):
        return (rng.random(n) < y).astype(float)

    def posterior_builder(z, z_extra=None):
        succ, tot = 0.0, 0
        for arm in (z, z_extra):
            if arm is not None and len(arm) > 0:
                succ += float(np.sum(arm))
                tot += len(arm)
        # deterministic cloud: seed from the sufficient statistics
        rng = np.random.default_rng(
            np.random.SeedSequence((int(succ * 2), int(tot), 12345)))
        return SamplePosterior(rng.beta(a + succ, b + tot - succ,
                                        size=posterior_draws))

    return JointModel(prior_sampler, data_sampler, posterior_builder,
                      extra_data_sampler, n_existing, n_extra)


def neg_posterior_variance(post, truth):
    """VOI value function: the negative posterior variance (accuracy gain)."""
    return -post.moments()[1]
