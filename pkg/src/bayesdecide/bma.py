"""Bayesian-model-averaged prediction.

Under squared-error loss for every member, the optimal action is the
posterior-probability-weighted combination of member means (closed
form).  With arbitrary per-member losses, the mixture expected posterior
loss is evaluated member-by-member, probability-weighted, and minimized
numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from . import engine
from .errors import ValidationError
from .losses import LossFunction, LossSpec, compose
from .posteriors import DiscretePosterior


@dataclass(frozen=True)
class EnsembleMember:
    label: str
    posterior: object
    loss: LossSpec


class ModelEnsemble:
    """Members (label, posterior, loss) plus a posterior over models."""

    __slots__ = ("members", "model_posterior")

    def __init__(self, members, model_posterior):
        members = tuple(members)
        if not members:
            raise ValidationError("ensemble must have at least one member")
        if isinstance(model_posterior, DiscretePosterior):
            mp = model_posterior
        else:
            mp = DiscretePosterior(model_posterior,
                                   labels=[m.label for m in members])
        if len(mp.probabilities) != len(members):
            raise ValidationError("model posterior must have one entry per member")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "model_posterior", mp)

    def __setattr__(self, name, value):
        raise AttributeError("ModelEnsemble is immutable")


def _mixture_epl(ens, lossfns, a):
    p = ens.model_posterior.probabilities
    return sum(
        pk * engine.epl(lf, member.posterior, a)
        for pk, member, lf in zip(p, ens.members, lossfns)
    )


def bma_predict_sel(ens):
    """Closed-form BMA action under squared-error loss for every member."""
    p = ens.model_posterior.probabilities
    action = sum(pk * m.posterior.moments()[0] for pk, m in zip(p, ens.members))
    sel = compose(LossSpec.sel())
    value = _mixture_epl(ens, [sel] * len(ens.members), action)
    return engine.OptimalDecision(float(action), float(value),
                                  engine.SolverPath("closed_form", "bma_weighted_mean"))


def bma_predict_general(ens):
    """Numeric minimization of the probability-weighted mixture EPL.

    The action space is the intersection of the member losses' domains;
    if a ratio-based member loss needs a > 0 the whole search is carried
    out on the positive half-line.
    """
    lossfns = [compose(m.loss) for m in ens.members]
    positive = any(lf.positive_domain for lf in lossfns)
    for lf, m in zip(lossfns, ens.members):
        if lf.positive_domain:
            lo, _ = m.posterior.support()
            if lo <= 0:
                raise ValidationError(
                    f"member {m.label!r} pairs a positive-domain loss with a "
                    f"posterior whose support reaches {lo}; action domain is empty")

    p = ens.model_posterior.probabilities
    # degenerate model posterior: single-model optimum, full dispatch
    top = ens.model_posterior.argmax()
    if p[top] == 1.0:
        return engine.optimize(ens.members[top].loss, ens.members[top].posterior)

    f = lambda a: _mixture_epl(ens, lossfns, a)
    x0 = sum(pk * m.posterior.quantile(0.5) for pk, m in zip(p, ens.members))
    if positive and x0 <= 0:
        x0 = max(m.posterior.quantile(0.5) for m in ens.members)
    differentiable = all(lf.differentiable for lf in lossfns)
    action, iters, bracket, name = engine._minimize(f, x0, positive, differentiable)
    return engine.OptimalDecision(float(action), f(action),
                                  engine.SolverPath("numeric", name, iters, bracket))
