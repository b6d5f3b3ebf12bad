"""Flow-and-jump model interface and runtime audits of its standing assumptions.

A model couples a deterministic semi-flow with a family of random jump maps
selected by a place-dependent mark density.  Every quantitative result the
verification suites certify is stated in terms of the constants declared
here, so the audits below re-check those declarations numerically on
sampled states before anything downstream trusts them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ModelError",
    "SemiFlow",
    "JumpFamily",
    "ModelSpec",
    "AuditEntry",
    "AuditReport",
    "alpha_plus",
    "check_contractivity",
    "audit_flow",
    "audit_jumps",
    "estimate_moment_bound",
    "theta_quadrature",
]

DEFAULT_FLOW_TOL = 1e-9


class ModelError(ValueError):
    """A model definition is internally inconsistent or numerically invalid."""


# Callables are numpy-broadcasting: they accept scalars or arrays of states
# (last axis = coordinates when the state dimension exceeds one).
FlowFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
JumpFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
DensityFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SemiFlow:
    """Deterministic evolution ``evaluate(t, x)`` with declared growth constants.

    ``lipschitz_L`` and ``growth_alpha`` bound the spread of nearby
    trajectories by ``L * exp(alpha * t)``; ``J_bound(x)`` bounds the speed of
    ``t -> evaluate(t, x)`` near ``t = 0`` (times ``exp(alpha * s)`` for the
    elapsed-time factor).
    """

    evaluate: FlowFn
    lipschitz_L: float
    growth_alpha: float
    J_bound: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        if self.lipschitz_L <= 0:
            raise ModelError("lipschitz_L must be positive")


@dataclass(frozen=True)
class JumpFamily:
    """Jump maps ``apply(theta, x)`` drawn with density ``density(x, theta)``.

    Marks live on the closed interval ``[theta_lo, theta_hi]`` under Lebesgue
    reference measure.  ``lipschitz_Lw`` bounds the mean contraction of the
    jump maps, ``lipschitz_Lp`` the state-sensitivity of the density, and
    ``overlap_pbar`` lower-bounds the density overlap on the set of marks
    whose maps do not spread a pair of states.
    """

    theta_lo: float
    theta_hi: float
    apply: JumpFn
    density: DensityFn
    lipschitz_Lw: float
    lipschitz_Lp: float
    overlap_pbar: float

    def __post_init__(self):
        if not self.theta_hi > self.theta_lo:
            raise ModelError("mark interval must have positive length")
        if self.lipschitz_Lw <= 0:
            raise ModelError("lipschitz_Lw must be positive")
        # A constant-in-state density legitimately has sensitivity zero.
        if self.lipschitz_Lp < 0:
            raise ModelError("lipschitz_Lp must be nonnegative")
        if not 0 < self.overlap_pbar <= 1:
            raise ModelError("overlap_pbar must lie in (0, 1]")


@dataclass(frozen=True)
class ModelSpec:
    """A complete model: flow, jumps, admissible jump-rate window, anchor state.

    Construction enforces the contractivity inequality
    ``L * L_w + alpha / lambda < 1`` at both endpoints of
    ``[lambda_min, lambda_max]`` (the left side is monotone in lambda for a
    fixed sign of alpha, so the endpoints cover the interval) together with
    ``lambda_min > max(0, alpha)``.
    """

    flow: SemiFlow
    jumps: JumpFamily
    lambda_min: float
    lambda_max: float
    xbar: float | np.ndarray
    dim: int = 1
    name: str = "custom"
    # Audits sample states uniformly from this box; None -> [0, 8]^dim.
    sample_lo: float = 0.0
    sample_hi: float = 8.0
    state_contains: Callable[[np.ndarray], bool] | None = None

    def __post_init__(self):
        if not 0 < self.lambda_min <= self.lambda_max:
            raise ModelError("need 0 < lambda_min <= lambda_max")
        abar = alpha_plus(self.flow.growth_alpha)
        if not self.lambda_min > abar:
            raise ModelError(
                f"lambda_min={self.lambda_min} must exceed max(0, alpha)={abar}"
            )
        for lam in (self.lambda_min, self.lambda_max):
            if not check_contractivity(self, lam):
                raise ModelError(
                    f"contractivity fails at lambda={lam}: "
                    f"L*L_w + alpha/lambda = "
                    f"{self.flow.lipschitz_L * self.jumps.lipschitz_Lw + self.flow.growth_alpha / lam}"
                )

    def in_state_space(self, x: np.ndarray) -> bool:
        if self.state_contains is None:
            return True
        return bool(self.state_contains(np.asarray(x)))


def alpha_plus(alpha: float) -> float:
    """Nonnegative part of the flow growth exponent."""
    return max(0.0, alpha)


def check_contractivity(spec: ModelSpec, lam: float) -> bool:
    """True iff the jump rate ``lam`` is admissible for ``spec``.

    Requires ``L * L_w + alpha / lam < 1`` and ``lam > max(0, alpha)``.
    """
    if lam <= 0:
        return False
    if lam <= alpha_plus(spec.flow.growth_alpha):
        return False
    lhs = spec.flow.lipschitz_L * spec.jumps.lipschitz_Lw + spec.flow.growth_alpha / lam
    return lhs < 1.0


# ---------------------------------------------------------------------------
# Audits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AuditEntry:
    condition: str
    max_violation: float
    worst_input: tuple
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class AuditReport:
    entries: tuple[AuditEntry, ...]
    tol: float

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, condition: str) -> AuditEntry:
        for e in self.entries:
            if e.condition == condition:
                return e
        raise KeyError(condition)

    def rows(self) -> list[tuple]:
        """CSV-ready rows: (condition id, max violation, worst input, passed)."""
        return [
            (e.condition, e.max_violation, repr(e.worst_input), e.passed)
            for e in self.entries
        ]


def _norm(diff: np.ndarray) -> np.ndarray:
    # Last axis holds coordinates; scalars/1-d state arrays are elementwise.
    diff = np.asarray(diff)
    if diff.ndim <= 1:
        return np.abs(diff)
    return np.linalg.norm(diff, axis=-1)


def _audit_entry(condition: str, violations: np.ndarray, inputs: Sequence[np.ndarray],
                 tol: float, detail: str = "") -> AuditEntry:
    violations = np.maximum(np.asarray(violations, dtype=float), 0.0)
    k = int(np.argmax(violations))
    worst = tuple(float(np.atleast_1d(arr)[k]) for arr in inputs)
    vmax = float(violations[k]) if violations.size else 0.0
    return AuditEntry(condition, vmax, worst, vmax <= tol, detail)


def _sample_states(spec: ModelSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    shape = (count,) if spec.dim == 1 else (count, spec.dim)
    return rng.uniform(spec.sample_lo, spec.sample_hi, size=shape)


def audit_flow(spec: ModelSpec, sample_count: int, t_max: float = 4.0,
               seed: int = 0, tol: float = DEFAULT_FLOW_TOL) -> AuditReport:
    """Sample-based certificate for the declared flow constants.

    Checks, on ``sample_count`` random tuples: the identity at time zero,
    the semigroup property, the pairwise-spread bound
    ``L * exp(alpha*t) * |x - y|`` and the time-regularity bound driven by
    ``J_bound``.  Violations are ``max(0, lhs - rhs)``; the report passes
    when all stay within ``tol``.

    Raises ModelError if the flow ever leaves the declared state space.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    flow = spec.flow
    rng = np.random.default_rng(np.random.SeedSequence((seed, 101)))
    x = _sample_states(spec, sample_count, rng)
    y = _sample_states(spec, sample_count, rng)
    t_raw = rng.uniform(0.0, t_max, size=(sample_count, 2))
    s, t = np.sort(t_raw, axis=1).T

    img = flow.evaluate(t, x)
    if not spec.in_state_space(img):
        bad = np.atleast_1d(img)
        raise ModelError(f"flow left the state space, e.g. value {bad.flat[0]!r}")

    # identity at t = 0
    v_id = _norm(flow.evaluate(np.zeros_like(t), x) - x)
    e_id = _audit_entry("flow-identity", v_id, (x,), tol)

    # semigroup: S(s+t, x) == S(s, S(t, x))
    v_sg = _norm(flow.evaluate(s + t, x) - flow.evaluate(s, flow.evaluate(t, x)))
    e_sg = _audit_entry("flow-semigroup", v_sg, (s, t, x), tol)

    # spread of nearby trajectories
    L, alpha = flow.lipschitz_L, flow.growth_alpha
    lhs = _norm(flow.evaluate(t, x) - flow.evaluate(t, y))
    rhs = L * np.exp(alpha * t) * _norm(x - y)
    e_sp = _audit_entry("flow-space-lipschitz", lhs - rhs, (t, x, y), tol)

    # time regularity: |S(t,x) - S(s,x)| <= (t-s) e^{alpha s} J(x)  (alpha <= 0)
    lhs_t = _norm(flow.evaluate(t, x) - flow.evaluate(s, x))
    expo = np.exp(alpha * (s if alpha <= 0 else t))
    rhs_t = (t - s) * expo * np.asarray(flow.J_bound(x), dtype=float)
    e_tm = _audit_entry("flow-time-lipschitz", lhs_t - rhs_t, (s, t, x), tol)

    return AuditReport((e_id, e_sg, e_sp, e_tm), tol)


def theta_quadrature(jumps: JumpFamily, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite trapezoid nodes and weights on the mark interval.

    The node count is rounded up to the next odd integer so the interval
    midpoint is always a node; the audit integrands may kink there
    (absolute differences and pointwise minima of densities).
    """
    if nodes < 16:
        raise ValueError("need at least 16 quadrature nodes")
    if nodes % 2 == 0:
        nodes += 1
    th = np.linspace(jumps.theta_lo, jumps.theta_hi, nodes)
    h = (jumps.theta_hi - jumps.theta_lo) / (nodes - 1)
    w = np.full(nodes, h)
    w[0] = w[-1] = h / 2.0
    return th, w


def audit_jumps(spec: ModelSpec, sample_count: int, quad_nodes: int = 64,
                seed: int = 0, tol: float = DEFAULT_FLOW_TOL) -> AuditReport:
    """Sample-based certificate for the declared jump-family constants.

    On sampled state pairs (x, y), evaluates the mark integrals behind the
    declared constants by composite quadrature: density normalization, the
    mean-contraction bound ``L_w |x - y|``, the density-sensitivity bound
    ``L_p |x - y|`` and the overlap lower bound ``pbar`` restricted to marks
    whose maps do not spread the pair.  Reports max violations and the
    observed overlap minimum.

    Raises ModelError on any negative density value.
    """
    jumps = spec.jumps
    th, w = theta_quadrature(jumps, quad_nodes)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 202)))
    x = _sample_states(spec, sample_count, rng)
    y = _sample_states(spec, sample_count, rng)

    if spec.dim == 1:
        px = jumps.density(x[:, None], th[None, :])
        py = jumps.density(y[:, None], th[None, :])
        wx = jumps.apply(th[None, :], x[:, None])
        wy = jumps.apply(th[None, :], y[:, None])
        spread = _norm(wx - wy)
    else:
        px = np.stack([jumps.density(x, t) for t in th], axis=1)
        py = np.stack([jumps.density(y, t) for t in th], axis=1)
        spread = np.stack(
            [_norm(jumps.apply(t, x) - jumps.apply(t, y)) for t in th], axis=1
        )
    if px.min() < 0 or py.min() < 0:
        raise ModelError(f"negative density value: min {min(px.min(), py.min())}")

    dxy = _norm(x - y)

    v_norm = np.abs(px @ w - 1.0)
    e_norm = _audit_entry("jump-density-normalized", v_norm, (x,), max(tol, 1e-9))

    lhs_w = (px * spread) @ w
    e_w = _audit_entry("jump-mean-contraction", lhs_w - jumps.lipschitz_Lw * dxy,
                       (x, y), tol)

    lhs_p = np.abs(px - py) @ w
    e_p = _audit_entry("jump-density-sensitivity", lhs_p - jumps.lipschitz_Lp * dxy,
                       (x, y), tol)

    # overlap restricted to non-spreading marks
    mask = spread <= jumps.lipschitz_Lw * dxy[:, None] + 1e-15
    overlap = (np.minimum(px, py) * mask) @ w
    e_ov = _audit_entry(
        "jump-overlap", jumps.overlap_pbar - overlap, (x, y), tol,
        detail=f"observed_pbar={float(overlap.min()):.12g}",
    )

    return AuditReport((e_norm, e_w, e_p, e_ov), tol)


def estimate_moment_bound(spec: ModelSpec, sample_count: int = 64,
                          t_nodes: int = 64, theta_nodes: int = 64,
                          seed: int = 0) -> float:
    """Estimate the anchored first-moment supremand at sampled states.

    Informational only: the supremum over the whole (possibly unbounded)
    state space is not computable, so the largest sampled value is reported
    rather than enforced.
    """
    from numpy.polynomial.laguerre import laggauss

    jumps, flow = spec.jumps, spec.flow
    u, vw = laggauss(t_nodes)
    th, tw = theta_quadrature(jumps, theta_nodes)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 303)))
    xs = _sample_states(spec, sample_count, rng)
    t = u / spec.lambda_min
    worst = 0.0
    img_bar = flow.evaluate(t, np.asarray(spec.xbar, dtype=float))
    jump_norm = _norm(jumps.apply(th[None, :], img_bar[:, None]))  # (t, theta)
    for x in np.atleast_1d(xs):
        img_x = flow.evaluate(t, x)
        dens = jumps.density(img_x[:, None], th[None, :])
        inner = (dens * jump_norm) @ tw
        worst = max(worst, float(np.dot(vw, inner) / spec.lambda_min))
    return worst
