"""Control problem data: dynamics, running cost, discount and their constants.

A problem is a set of callables plus declared Lipschitz/bound constants on an
axis-aligned box domain.  Controls are scalar, live in [0,1] and may only
increase along a trajectory; that constraint lives in the operators, not here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, UnknownProblemError

Vector = np.ndarray


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Immutable problem definition.

    dynamics(x, a) -> velocity vector, cost(x, a) -> scalar running cost.
    Both must be defined on the closed domain box times [0,1].  The declared
    constants are authoritative; `estimate_constants` only cross-checks them.
    """

    dynamics: Callable[[Vector, float], Vector]
    cost: Callable[[Vector, float], float]
    discount: float
    domain: tuple[Vector, Vector]
    lip_g: float
    bound_g: float
    lip_f: float
    bound_f: float
    gamma_override: Optional[float] = None
    name: str = "custom"
    # closed-form value on the a=1 slice, when one is known (used as an oracle)
    analytic_top_slice: Optional[Callable[[Vector], float]] = None

    def __post_init__(self):
        lower = np.asarray(self.domain[0], dtype=float)
        upper = np.asarray(self.domain[1], dtype=float)
        object.__setattr__(self, "domain", (lower, upper))
        if self.discount <= 0:
            raise ConfigurationError(f"discount must be positive, got {self.discount}")
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ConfigurationError("domain corners must be 1-d arrays of equal length")
        if not np.all(lower < upper):
            raise ConfigurationError("domain lower corner must be strictly below upper")
        for c in ("lip_g", "bound_g", "lip_f", "bound_f"):
            if getattr(self, c) < 0:
                raise ConfigurationError(f"{c} must be nonnegative")
        if self.gamma_override is not None and not (0.0 < self.gamma_override < 1.0):
            raise ConfigurationError("gamma_override must lie in (0,1)")

    @property
    def dim(self) -> int:
        return self.domain[0].shape[0]


def holder_exponent(spec: ProblemSpec) -> float:
    """Regularity exponent of the value function.

    1 when discount dominates the dynamics Lipschitz constant, the ratio
    discount/lip_g when it does not, and a user-supplied value in (0,1) in
    the borderline equality case.
    """
    lam, lg = spec.discount, spec.lip_g
    if lam > lg:
        return 1.0
    if lam < lg:
        return lam / lg
    if spec.gamma_override is None:
        raise ConfigurationError(
            "discount equals lip_g: an explicit gamma_override in (0,1) is required"
        )
    return spec.gamma_override


@dataclass
class ConstantsEstimate:
    """Empirical maxima of difference quotients / absolute values, with any
    violations of the declared constants (beyond relative slack)."""

    lip_g: float
    bound_g: float
    lip_f: float
    bound_f: float
    samples: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


_REL_SLACK = 1e-6


def estimate_constants(spec: ProblemSpec, samples: int, seed: int = 0) -> ConstantsEstimate:
    """Sample random pairs in domain x [0,1] and bound the constants from below.

    Uses a single sequential random stream, so a larger sample count extends
    (never reshuffles) a smaller one with the same seed.
    """
    if samples < 2:
        raise ConfigurationError("samples must be >= 2")
    lower, upper = spec.domain
    nu = spec.dim
    rng = np.random.default_rng(seed)
    raw = rng.random((samples, 2 * nu + 2))
    xs = lower + raw[:, :nu] * (upper - lower)
    xbars = lower + raw[:, nu : 2 * nu] * (upper - lower)
    avals = raw[:, 2 * nu]
    abars = raw[:, 2 * nu + 1]

    lg = mg = lf = mf = 0.0
    for x, xb, a, ab in zip(xs, xbars, avals, abars):
        gx = np.asarray(spec.dynamics(x, a), dtype=float)
        gxb = np.asarray(spec.dynamics(xb, ab), dtype=float)
        fx = float(spec.cost(x, a))
        fxb = float(spec.cost(xb, ab))
        mg = max(mg, float(np.linalg.norm(gx)), float(np.linalg.norm(gxb)))
        mf = max(mf, abs(fx), abs(fxb))
        denom = float(np.linalg.norm(x - xb)) + abs(a - ab)
        if denom > 0:
            lg = max(lg, float(np.linalg.norm(gx - gxb)) / denom)
            lf = max(lf, abs(fx - fxb) / denom)

    est = ConstantsEstimate(lip_g=lg, bound_g=mg, lip_f=lf, bound_f=mf, samples=samples)
    for label, measured, declared in (
        ("lip_g", lg, spec.lip_g),
        ("bound_g", mg, spec.bound_g),
        ("lip_f", lf, spec.lip_f),
        ("bound_f", mf, spec.bound_f),
    ):
        if measured > declared * (1.0 + _REL_SLACK) + 1e-300:
            est.violations.append(
                f"{label}: measured {measured:.6g} exceeds declared {declared:.6g}"
            )
    return est


# ---------------------------------------------------------------------------
# builtin problems


def _paper_example_2d() -> ProblemSpec:
    def dynamics(x, a):
        return -(a + 1.0) * np.asarray(x, dtype=float)

    def cost(x, a):
        x = np.asarray(x, dtype=float)
        return a * (0.25 - float(x[0] * x[0] + x[1] * x[1]))

    def top_slice(x):
        x = np.asarray(x, dtype=float)
        return 0.25 - float(x @ x) / 5.0

    # On the closed box [-1,1]^2: |grad_x g| <= 2, |d g/d a| = |x| <= sqrt(2),
    # sup|g| = 2*sqrt(2); |grad_x f| <= 2*sqrt(2), |d f/d a| <= 7/4, sup|f| = 7/4.
    return ProblemSpec(
        dynamics=dynamics,
        cost=cost,
        discount=1.0,
        domain=(np.array([-1.0, -1.0]), np.array([1.0, 1.0])),
        lip_g=2.0,
        bound_g=2.0 * math.sqrt(2.0),
        lip_f=2.0 * math.sqrt(2.0),
        bound_f=7.0 / 4.0,
        name="paper_example_2d",
        analytic_top_slice=top_slice,
    )


BUILTIN_PROBLEMS: dict[str, Callable[[], ProblemSpec]] = {
    "paper_example_2d": _paper_example_2d,
}


def builtin(name: str) -> ProblemSpec:
    """Look up a registered problem by name."""
    try:
        factory = BUILTIN_PROBLEMS[name]
    except KeyError:
        raise UnknownProblemError(
            f"unknown builtin problem {name!r}; known: {sorted(BUILTIN_PROBLEMS)}"
        ) from None
    return factory()
