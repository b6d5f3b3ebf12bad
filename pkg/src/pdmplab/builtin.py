"""Two concrete one-dimensional models with analytically certified constants.

Both live on ``[0, inf)`` with exponential decay between jumps and affine
burst jumps ``x -> beta * x + theta`` with marks on ``[0, 1]``:

* ``modelA`` draws the mark uniformly (constant density),
* ``modelB`` draws it with the place-dependent density
  ``c(x) + (1 - c(x)) * 2 * theta`` where ``c(x) = 1 / (1 + x)``.

Model A additionally has closed-form invariant moments, used as oracles
throughout the test suite.
"""

from __future__ import annotations

import numpy as np

from .model import JumpFamily, ModelError, ModelSpec, SemiFlow

__all__ = [
    "decay_burst_model",
    "place_dependent_model",
    "decay_burst_chain_mean",
    "decay_burst_chain_second_moment",
    "decay_burst_flow_mean",
    "BUILTIN_MODELS",
]


def _decay_flow(a: float) -> SemiFlow:
    return SemiFlow(
        evaluate=lambda t, x: x * np.exp(-a * np.asarray(t, dtype=float)),
        lipschitz_L=1.0,
        growth_alpha=-a,
        J_bound=lambda x: a * np.abs(x),
    )


def _nonneg(x) -> bool:
    return bool(np.all(np.asarray(x) >= -1e-12))


def decay_burst_model(a: float = 1.0, beta: float = 0.5,
                      lambda_min: float = 0.5, lambda_max: float = 4.0) -> ModelSpec:
    """Exponential decay at rate ``a`` with uniform additive bursts.

    Certified constants: L=1, alpha=-a, J(x)=a*x, L_w=beta, L_p=0, pbar=1.
    """
    if a <= 0:
        raise ModelError("decay rate a must be positive")
    if not 0 < beta < 1:
        raise ModelError("burst contraction beta must lie in (0, 1)")
    jumps = JumpFamily(
        theta_lo=0.0,
        theta_hi=1.0,
        apply=lambda th, x: beta * x + th,
        density=lambda x, th: np.ones(np.broadcast(x, th).shape),
        lipschitz_Lw=beta,
        lipschitz_Lp=0.0,
        overlap_pbar=1.0,
    )
    return ModelSpec(
        flow=_decay_flow(a), jumps=jumps,
        lambda_min=lambda_min, lambda_max=lambda_max,
        xbar=0.0, name="modelA", state_contains=_nonneg,
    )


def place_dependent_model(a: float = 1.0, beta: float = 0.5,
                          lambda_min: float = 0.5, lambda_max: float = 4.0) -> ModelSpec:
    """Decay/burst model whose mark density tilts with the pre-jump state.

    The density ``c(x) + (1 - c(x)) * 2 * theta`` with ``c(x) = 1/(1+x)``
    integrates to one for every ``x >= 0``.  Certified constants: L=1,
    alpha=-a, L_w=beta, L_p=1/2, pbar >= 1/2 (the overlap integral equals
    ``1 - |c(x) - c(y)| / 4 >= 3/4``; 1/2 is the declared safe bound).
    """
    if a <= 0:
        raise ModelError("decay rate a must be positive")
    if not 0 < beta < 1:
        raise ModelError("burst contraction beta must lie in (0, 1)")

    def density(x, th):
        c = 1.0 / (1.0 + np.asarray(x, dtype=float))
        return c + (1.0 - c) * 2.0 * np.asarray(th, dtype=float)

    jumps = JumpFamily(
        theta_lo=0.0,
        theta_hi=1.0,
        apply=lambda th, x: beta * x + th,
        density=density,
        lipschitz_Lw=beta,
        lipschitz_Lp=0.5,
        overlap_pbar=0.5,
    )
    return ModelSpec(
        flow=_decay_flow(a), jumps=jumps,
        lambda_min=lambda_min, lambda_max=lambda_max,
        xbar=0.0, name="modelB", state_contains=_nonneg,
    )


def _contraction(a: float, beta: float, lam: float) -> float:
    g = beta * lam / (lam + a)
    if g >= 1.0:
        raise ModelError(f"mean contraction factor {g} >= 1; no invariant moments")
    return g


def decay_burst_chain_mean(a: float, beta: float, lam: float) -> float:
    """Exact invariant mean of the post-jump chain of ``modelA``.

    The chain is ``X' = beta * exp(-a * T) * X + theta`` with ``T ~ Exp(lam)``
    and ``theta ~ U[0,1]`` independent, so the stationary mean solves
    ``m = beta*lam/(lam+a) * m + 1/2``.
    """
    return 0.5 / (1.0 - _contraction(a, beta, lam))


def decay_burst_chain_second_moment(a: float, beta: float, lam: float) -> float:
    """Exact invariant second moment of the post-jump chain of ``modelA``."""
    g1 = _contraction(a, beta, lam)
    g2 = beta**2 * lam / (lam + 2.0 * a)
    m = decay_burst_chain_mean(a, beta, lam)
    return (g1 * m + 1.0 / 3.0) / (1.0 - g2)


def decay_burst_flow_mean(a: float, beta: float, lam: float) -> float:
    """Exact mean of the continuous-time stationary law of ``modelA``.

    Pushing the invariant chain law through the flow at an independent
    ``Exp(lam)`` time multiplies the mean by ``E exp(-a*T) = lam/(lam+a)``.
    """
    return decay_burst_chain_mean(a, beta, lam) * lam / (lam + a)


BUILTIN_MODELS = {
    "modelA": decay_burst_model,
    "modelB": place_dependent_model,
}
