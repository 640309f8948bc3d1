"""Expected posterior loss and optimal decisions.

``optimize`` dispatches to a closed form whenever the loss family has a
known optimal predictor (mean, median, mode, quantile, LINEX log-MGF,
1/E(1/Y), reweighted mean) and otherwise minimizes the expected
posterior loss numerically: bracket by geometric expansion from the
posterior median, then golden-section (or derivative bisection when the
loss is differentiable) to a 1e-10 relative bracket width.

Also: minimax variants, functional prediction, tail-risk curves and
their lower envelope, and the 0-1-loss threshold yes/no rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NumericError, ValidationError
from .losses import LossFunction, LossSpec, compose
from .posteriors import GammaPosterior, GaussianPosterior, SamplePosterior

_GOLD = (math.sqrt(5.0) - 1.0) / 2.0
_REL_WIDTH = 1e-10
_MAX_EXPAND = 200


@dataclass(frozen=True)
class SolverPath:
    """How an action was obtained: a named closed form or a numeric search."""

    kind: str  # "closed_form" | "numeric"
    name: str
    iterations: int = 0
    bracket: Optional[tuple] = None


@dataclass(frozen=True)
class OptimalDecision:
    action: float
    epl: float
    method: SolverPath


@dataclass(frozen=True)
class TailRiskCurve:
    """Points (kappa, Pr(Y > kappa | z), loss at kappa) for a fixed action."""

    points: tuple  # of (kappa, tail_prob, loss)

    def __post_init__(self):
        tps = [p[1] for p in self.points]
        if any(t2 > t1 + 1e-12 for t1, t2 in zip(tps, tps[1:])):
            raise ValidationError("tail probabilities must be nonincreasing in kappa")

    def to_csv(self):
        lines = ["kappa,tail_prob,loss"]
        for k, tp, lv in self.points:
            lines.append(f"{k!r},{tp!r},{lv!r}")
        return "\n".join(lines) + "\n"


def _as_lossfn(loss):
    return loss if isinstance(loss, LossFunction) else compose(loss)


def _check_domain(lossfn, post):
    if lossfn.positive_domain:
        lo, _ = post.support()
        if lo <= 0:
            raise ValidationError(
                "loss requires y > 0 but the posterior support reaches "
                f"down to {lo}"
            )


def epl(loss, post, a):
    """Expected posterior loss E(L(a, Y) | z)."""
    lossfn = _as_lossfn(loss)
    _check_domain(lossfn, post)
    if lossfn.positive_domain and a <= 0:
        raise ValidationError(f"loss requires action > 0, got {a!r}")
    if isinstance(post, SamplePosterior):
        lv = np.asarray(lossfn(a, post.values), dtype=float)
        bad = ~np.isfinite(lv)
        if np.any(bad):
            y_bad = float(post.values[bad][0])
            raise NumericError(f"loss is not finite at draw y={y_bad!r} for a={a!r}")
        return float(np.dot(post.weights, lv))
    spec = lossfn.spec
    if (isinstance(spec, LossSpec) and spec.family == "SEL"
            and spec.weight is None):
        # E((a - Y)^2 | z) = Var(Y | z) + (a - E(Y | z))^2 exactly
        mean, var = post.moments()
        return float(var + (a - mean) ** 2)
    # a itself is a potential kink of y -> L(a, y) (absolute/pinball losses)
    return post.expect(lambda y: lossfn(a, y), breakpoints=(a,))


# ---------------------------------------------------------------------------
# one-dimensional minimization


def _bracket(f, x0, positive):
    """Expand geometrically from x0 until f increases on both sides."""
    f0 = f(x0)
    step = 0.5 * (1.0 + abs(x0))

    lo, flo = x0, f0
    if positive:
        for _ in range(_MAX_EXPAND):
            cand = lo / 2.0
            fc = f(cand)
            if fc > flo:
                lo = cand
                break
            lo, flo = cand, fc
        else:
            raise NumericError("bracket expansion failed toward 0: EPL keeps decreasing")
    else:
        h = step
        for _ in range(_MAX_EXPAND):
            cand = lo - h
            fc = f(cand)
            if fc > flo:
                lo = cand
                break
            lo, flo = cand, fc
            h *= 2.0
        else:
            raise NumericError("bracket expansion failed (left): EPL appears unbounded below")

    hi, fhi = x0, f0
    h = step
    for _ in range(_MAX_EXPAND):
        cand = hi + h
        fc = f(cand)
        if fc > fhi:
            hi = cand
            break
        hi, fhi = cand, fc
        h *= 2.0
    else:
        raise NumericError("bracket expansion failed (right): EPL appears unbounded below")
    return lo, hi


def _golden(f, lo, hi):
    x1 = hi - _GOLD * (hi - lo)
    x2 = lo + _GOLD * (hi - lo)
    f1, f2 = f(x1), f(x2)
    iterations = 0
    while hi - lo > _REL_WIDTH * (1.0 + abs(lo) + abs(hi)):
        iterations += 1
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLD * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLD * (hi - lo)
            f2 = f(x2)
        if iterations > 400:
            break
    return 0.5 * (lo + hi), iterations


def _derivative_bisect(f, lo, hi):
    """Bisect on a central-difference derivative of a smooth unimodal f."""

    def grad(x):
        h = 1e-6 * (1.0 + abs(x))
        return (f(x + h) - f(x - h)) / (2.0 * h)

    glo, ghi = grad(lo), grad(hi)
    if not (glo < 0 < ghi):
        # the bracket endpoints came from function increase, not sign change;
        # fall back to golden section
        return None
    iterations = 0
    while hi - lo > _REL_WIDTH * (1.0 + abs(lo) + abs(hi)):
        iterations += 1
        mid = 0.5 * (lo + hi)
        g = grad(mid)
        if g < 0:
            lo = mid
        else:
            hi = mid
        if iterations > 200:
            break
    return 0.5 * (lo + hi), iterations


def _minimize(f, x0, positive, differentiable):
    lo, hi = _bracket(f, x0, positive)
    if differentiable:
        out = _derivative_bisect(f, lo, hi)
        if out is not None:
            x, iters = out
            return x, iters, (lo, hi), "derivative_bisection"
    x, iters = _golden(f, lo, hi)
    return x, iters, (lo, hi), "golden_section"


# ---------------------------------------------------------------------------
# dispatch


def _closed_form(spec, post):
    """Return (action, name) when the spec has a known optimal predictor."""
    if spec.family is not None:
        fam, prm = spec.family, spec.params
        if fam == "SEL" or (fam == "MTC" and prm.get("rho") == 2.0):
            return post.moments()[0], "posterior_mean"
        if fam == "MTC" and prm.get("rho") == 1.0:
            return post.quantile(0.5), "posterior_median"
        if fam == "ZERO_ONE":
            return post.mode(), "posterior_mode"
        if fam == "QTL":
            return post.quantile(prm["q"]), "posterior_quantile"
        if fam == "LNX":
            psi = prm["psi"]
            return (-1.0 / psi) * post.log_mgf_neg(psi), "linex_log_mgf"
        if fam == "GAM" or (fam == "PWD" and prm.get("lam") == 1.0):
            inv_mean = post.expect(lambda y: 1.0 / np.asarray(y, dtype=float))
            if inv_mean <= 0:
                raise NumericError("E(1/Y | z) is nonpositive; ratio predictor undefined")
            return 1.0 / inv_mean, "inverse_mean_reciprocal"
        if fam == "PWD" and prm.get("lam") == -1.0:
            return post.moments()[0], "posterior_mean"
        return None
    if spec.compose == "weighted":
        base = spec.components[0]
        if base.family == "GAM" and spec.weight.name == "identity":
            return post.moments()[0], "posterior_mean"
        if base.family == "SEL" or (base.family == "MTC"
                                    and base.params.get("rho") == 2.0):
            w = spec.weight.fn
            if isinstance(post, SamplePosterior):
                return post.reweight(w).moments()[0], "reweighted_mean"
            num = post.expect(lambda y: w(np.asarray(y, dtype=float)) * y)
            den = post.expect(lambda y: w(np.asarray(y, dtype=float)))
            if den <= 0:
                raise NumericError("weight function has nonpositive posterior mass")
            return num / den, "reweighted_mean"
    return None


def optimize(loss, post, force_numeric=False):
    """Minimize E(L(a, Y) | z) over actions a."""
    spec = loss.spec if isinstance(loss, LossFunction) else loss
    lossfn = _as_lossfn(loss)
    _check_domain(lossfn, post)
    if not force_numeric:
        hit = _closed_form(spec, post)
        if hit is not None:
            action, name = hit
            return OptimalDecision(float(action), epl(lossfn, post, action),
                                   SolverPath("closed_form", name))
    x0 = post.quantile(0.5)
    f = lambda a: epl(lossfn, post, a)
    action, iters, bracket, name = _minimize(
        f, x0, lossfn.positive_domain, lossfn.differentiable)
    return OptimalDecision(float(action), f(action),
                           SolverPath("numeric", name, iters, bracket))


def optimize_functional(loss, post, g, force_numeric=False):
    """Minimize E(L(a, g(Y)) | z): the optimal decision about g(Y)."""
    spec = loss.spec if isinstance(loss, LossFunction) else loss
    lossfn = _as_lossfn(loss)
    if isinstance(post, SamplePosterior):
        gv = np.asarray(g(post.values), dtype=float)
        pushed = SamplePosterior(gv, post.weights)
        return optimize(lossfn, pushed, force_numeric=force_numeric)
    # parametric posterior: push through the quadrature
    if not force_numeric and spec.family is not None and (
            spec.family == "SEL"
            or (spec.family == "MTC" and spec.params.get("rho") == 2.0)):
        action = post.expect(lambda y: np.asarray(g(y), dtype=float))
        f = lambda a: post.expect(lambda y: lossfn(a, np.asarray(g(y), dtype=float)))
        return OptimalDecision(float(action), f(action),
                               SolverPath("closed_form", "pushforward_mean"))
    f = lambda a: post.expect(lambda y: lossfn(a, np.asarray(g(y), dtype=float)))
    x0 = post.expect(lambda y: np.asarray(g(y), dtype=float))
    action, iters, bracket, name = _minimize(
        f, x0, lossfn.positive_domain, lossfn.differentiable)
    return OptimalDecision(float(action), f(action),
                           SolverPath("numeric", name, iters, bracket))


# ---------------------------------------------------------------------------
# minimax and tail risk


def _check_grid(grid, name):
    g = np.asarray(grid, dtype=float)
    if g.size == 0:
        raise ValidationError(f"{name} must be nonempty")
    if not np.all(np.isfinite(g)):
        raise ValidationError(f"{name} must be finite")
    return g


def minimax(loss, y_grid, a_grid):
    """argmin over a of max over y of L(a, y); ties to the smallest action."""
    lossfn = _as_lossfn(loss)
    y = _check_grid(y_grid, "y_grid")
    a = np.sort(_check_grid(a_grid, "a_grid"))
    worst = np.array([float(np.max(lossfn(ai, y))) for ai in a])
    return float(a[int(np.argmin(worst))])


def minimax_posterior(loss, post, y_grid, a_grid):
    """argmin over a of max over y of L(a, y) * p(y | z).

    For sample posteriors, p is the normalized mass of the histogram bin
    containing y (zero outside the sampled range).
    """
    lossfn = _as_lossfn(loss)
    y = _check_grid(y_grid, "y_grid")
    a = np.sort(_check_grid(a_grid, "a_grid"))
    p = _posterior_weight_at(post, y)
    worst = np.array([float(np.max(lossfn(ai, y) * p)) for ai in a])
    return float(a[int(np.argmin(worst))])


def _posterior_weight_at(post, y):
    if isinstance(post, SamplePosterior):
        lo, hi = post.support()
        if hi == lo:
            return (np.asarray(y) == lo).astype(float)
        n = post.values.size
        nbins = max(1, int(math.ceil(math.sqrt(n))))
        hist, edges = np.histogram(post.values, bins=nbins, range=(lo, hi),
                                   weights=post.weights)
        idx = np.clip(np.searchsorted(edges, y, side="right") - 1, 0, nbins - 1)
        mass = hist[idx]
        mass = np.where((np.asarray(y) < lo) | (np.asarray(y) > hi), 0.0, mass)
        return mass
    return post.pdf(y)


def tail_risk_curve(loss, post, action, kappa_grid):
    """Locus of (kappa, Pr(Y > kappa | z), L(action, kappa))."""
    lossfn = _as_lossfn(loss)
    kappas = _check_grid(kappa_grid, "kappa_grid")
    if np.any(np.diff(kappas) < 0):
        raise ValidationError("kappa_grid must be sorted ascending")
    pts = tuple(
        (float(k), post.tail_prob(k), float(lossfn(action, k)))
        for k in kappas
    )
    return TailRiskCurve(pts)


def lower_envelope(loss, post, kappa_grid, a_grid):
    """Pointwise minimum over actions of the tail-risk curves."""
    lossfn = _as_lossfn(loss)
    kappas = _check_grid(kappa_grid, "kappa_grid")
    if np.any(np.diff(kappas) < 0):
        raise ValidationError("kappa_grid must be sorted ascending")
    a = _check_grid(a_grid, "a_grid")
    pts = tuple(
        (float(k), post.tail_prob(k), float(np.min(lossfn(a, float(k)))))
        for k in kappas
    )
    return TailRiskCurve(pts)


def threshold_rule(post, kappa):
    """0-1-loss yes/no rule: 'yes' iff Pr(Y > kappa | z) >= 0.5."""
    return "yes" if post.tail_prob(kappa) >= 0.5 else "no"
