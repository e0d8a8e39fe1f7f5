"""The full-tails gamma (FTG) family with its gamma and Pareto boundaries.

The interior density on (0, inf) is

    f(x; alpha, theta, rho) = theta (rho + theta x)^(alpha-1)
                              e^-(rho + theta x) / Gamma(alpha, rho)

for any real alpha, theta > 0, rho > 0. Setting rho = 0 (alpha > 0) gives
the ordinary gamma density; letting rho -> 0 with sigma = rho / theta held
fixed and alpha < 0 gives the Pareto density
p(x; alpha, sigma) = -alpha sigma^-1 (1 + x/sigma)^(alpha-1). beta = 1/theta
is a scale parameter, rho truncates the left tail, and -alpha is the Pareto
tail weight, so the family interpolates between exponential-type and
power-law tails.

A quirk worth knowing: at alpha = 1 the interior density collapses to the
exponential with rate theta for *every* rho, so (theta, rho) are not jointly
identifiable there. The fitting code surfaces this as a large standard error
on rho; nothing in this module needs special treatment for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NumericsError
from .specfun import log_upper_inc_gamma

_INTERIOR = "interior"
_GAMMA = "gamma"
_PARETO = "pareto"


@dataclass(frozen=True)
class FtgParams:
    """Parameter point (alpha, theta, rho) with derived dispersion sigma.

    Exactly one of three regimes holds:

    * interior:        theta > 0, rho > 0, any real alpha
    * gamma boundary:  rho == 0, alpha > 0, theta > 0
    * Pareto boundary: theta == 0 (and rho == 0), alpha < 0, sigma > 0

    Use the class directly for the first two; ``FtgParams.from_sigma`` for
    the (alpha, sigma, rho) parameterization preferred during estimation;
    ``FtgParams.pareto`` for the Pareto boundary, where sigma must be given
    explicitly because rho/theta is indeterminate.
    """

    alpha: float
    theta: float
    rho: float
    sigma: float = None  # type: ignore[assignment]  # derived in __post_init__

    def __post_init__(self):
        alpha = float(self.alpha)
        theta = float(self.theta)
        rho = float(self.rho)
        if not all(map(math.isfinite, (alpha, theta, rho))):
            raise ValueError("parameters must be finite")
        if theta < 0.0 or rho < 0.0:
            raise ValueError("theta and rho must be nonnegative")
        if theta > 0.0 and rho > 0.0:
            sigma = rho / theta
        elif rho == 0.0 and theta > 0.0:
            if alpha <= 0.0:
                raise ValueError("gamma boundary (rho = 0) requires alpha > 0")
            sigma = 0.0
        elif theta == 0.0 and rho == 0.0:
            if alpha >= 0.0:
                raise ValueError("Pareto boundary (theta = 0) requires alpha < 0")
            sigma = self.sigma
            if sigma is None or not (float(sigma) > 0.0):
                raise ValueError("Pareto boundary requires an explicit sigma > 0")
            sigma = float(sigma)
        else:
            raise ValueError("rho > 0 with theta = 0 is not a valid regime")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def from_sigma(cls, alpha: float, sigma: float, rho: float) -> "FtgParams":
        """Construct from (alpha, sigma, rho); theta = rho / sigma."""
        sigma = float(sigma)
        rho = float(rho)
        if sigma <= 0.0:
            raise ValueError("sigma must be > 0")
        if rho == 0.0:
            return cls.pareto(alpha, sigma)
        return cls(alpha, rho / sigma, rho)

    @classmethod
    def pareto(cls, alpha: float, sigma: float) -> "FtgParams":
        return cls(alpha, 0.0, 0.0, sigma)

    @classmethod
    def gamma(cls, alpha: float, theta: float) -> "FtgParams":
        return cls(alpha, theta, 0.0)

    @property
    def regime(self) -> str:
        if self.theta == 0.0:
            return _PARETO
        return _GAMMA if self.rho == 0.0 else _INTERIOR

    @property
    def is_interior(self) -> bool:
        return self.regime == _INTERIOR

    @property
    def is_pareto(self) -> bool:
        return self.regime == _PARETO

    @property
    def is_gamma(self) -> bool:
        return self.regime == _GAMMA

    @property
    def log_norm(self) -> float:
        """log Gamma(alpha, rho), the log normalizing constant (interior/gamma)."""
        if self.is_pareto:
            raise ValueError("Pareto boundary has no incomplete-gamma norm")
        if self.rho == 0.0:
            return math.lgamma(self.alpha)
        return log_upper_inc_gamma(self.alpha, self.rho)


@dataclass(frozen=True)
class ParetoParams:
    """Pareto model with survival (1 + x/sigma)^alpha, alpha < 0, sigma > 0."""

    alpha: float
    sigma: float

    def __post_init__(self):
        if not (self.alpha < 0.0):
            raise ValueError(f"Pareto alpha must be < 0, got {self.alpha}")
        if not (self.sigma > 0.0):
            raise ValueError(f"Pareto sigma must be > 0, got {self.sigma}")

    def as_ftg(self) -> FtgParams:
        return FtgParams.pareto(self.alpha, self.sigma)


Model = FtgParams | ParetoParams


def as_ftg(model: Model) -> FtgParams:
    """Coerce an FtgParams or ParetoParams to the FtgParams representation."""
    if isinstance(model, ParetoParams):
        return model.as_ftg()
    return model


@dataclass(frozen=True)
class Moments:
    """First two moments plus the helper mu = e^-rho rho^alpha / Gamma(alpha, rho).

    mean is +inf at the Pareto boundary when alpha >= -1 (the operational-
    risk case of interest); variance is +inf when alpha >= -2.
    """

    mean: float
    variance: float
    mu: float

    @property
    def infinite_mean(self) -> bool:
        return math.isinf(self.mean)


# ----------------------------------------------------------------- densities
def log_pdf(p: FtgParams, x: float) -> float:
    """Log density at x >= 0."""
    if x < 0.0:
        raise ValueError("support is x >= 0")
    if p.is_pareto:
        return (
            math.log(-p.alpha)
            - math.log(p.sigma)
            + (p.alpha - 1.0) * math.log1p(x / p.sigma)
        )
    if p.is_gamma:
        if x == 0.0:
            if p.alpha < 1.0:
                return math.inf
            return math.log(p.theta) if p.alpha == 1.0 else -math.inf
        return (
            p.alpha * math.log(p.theta)
            + (p.alpha - 1.0) * math.log(x)
            - p.theta * x
            - math.lgamma(p.alpha)
        )
    t = p.rho + p.theta * x
    return math.log(p.theta) + (p.alpha - 1.0) * math.log(t) - t - p.log_norm


def pdf(p: FtgParams, x: float) -> float:
    out = log_pdf(p, x)
    return math.exp(out) if out != math.inf else math.inf


def survival(p: FtgParams, x: float) -> float:
    """P(X > x), computed directly as a gamma ratio (never 1 - cdf)."""
    if x < 0.0:
        return 1.0
    if x == 0.0:
        return 1.0
    if p.is_pareto:
        return math.exp(p.alpha * math.log1p(x / p.sigma))
    if p.is_gamma:
        return math.exp(
            log_upper_inc_gamma(p.alpha, p.theta * x) - math.lgamma(p.alpha)
        )
    return math.exp(log_upper_inc_gamma(p.alpha, p.rho + p.theta * x) - p.log_norm)


def cdf(p: FtgParams, x: float) -> float:
    """P(X <= x) = 1 - Gamma(alpha, rho + theta x) / Gamma(alpha, rho)."""
    if x <= 0.0:
        return 0.0
    if p.is_pareto:
        return -math.expm1(p.alpha * math.log1p(x / p.sigma))
    if p.is_gamma:
        return -math.expm1(
            log_upper_inc_gamma(p.alpha, p.theta * x) - math.lgamma(p.alpha)
        )
    return -math.expm1(
        log_upper_inc_gamma(p.alpha, p.rho + p.theta * x) - p.log_norm
    )


def quantile(p: FtgParams, prob: float) -> float:
    """Inverse CDF. prob in [0, 1); bracketing plus Brent refinement.

    The Pareto boundary inverts in closed form; elsewhere the bracket starts
    at the mean and doubles until it straddles, after which scipy's brentq
    polishes to |cdf(x) - prob| <= 1e-10.
    """
    if not 0.0 <= prob < 1.0:
        raise ValueError(f"prob must be in [0, 1), got {prob}")
    if prob == 0.0:
        return 0.0
    if p.is_pareto:
        return p.sigma * ((1.0 - prob) ** (1.0 / p.alpha) - 1.0)
    from scipy.optimize import brentq

    target = 1.0 - prob

    def fun(x: float) -> float:
        return survival(p, x) - target

    m = moments(p).mean
    hi = m if m > 0 else 1.0
    while fun(hi) > 0.0:
        hi *= 2.0
        if hi > 1e306:
            raise NumericsError("quantile bracket expansion ran away")
    return brentq(fun, 0.0, hi, xtol=1e-300, rtol=8.9e-16, maxiter=200)


# ------------------------------------------------------------------- moments
def mgf(p: FtgParams, t: float) -> float:
    """Moment generating function E[e^(tX)], defined for t < theta.

    At the Pareto boundary the MGF exists only for t <= 0; t = 0 gives 1 and
    t < 0 is evaluated by quadrature.
    """
    if t == 0.0:
        return 1.0
    if p.is_pareto:
        if t > 0.0:
            raise ValueError("Pareto boundary has no MGF for t > 0")
        from scipy.integrate import quad

        val, _ = quad(lambda x: math.exp(t * x) * pdf(p, x), 0.0, math.inf,
                      limit=200)
        return val
    if t >= p.theta:
        raise ValueError(f"mgf requires t < theta = {p.theta}, got {t}")
    w = 1.0 - t / p.theta
    if p.is_gamma:
        return math.exp(-p.alpha * math.log(w))
    return math.exp(
        -p.alpha * math.log(w)
        - p.rho * t / p.theta
        + log_upper_inc_gamma(p.alpha, p.rho * w)
        - p.log_norm
    )


def moments(p: FtgParams) -> Moments:
    """Mean and variance from the cumulant function.

    Interior: mean = (alpha - rho + mu)/theta,
    variance = (alpha + (1 + rho - alpha) mu - mu^2)/theta^2 with
    mu = e^-rho rho^alpha / Gamma(alpha, rho).
    """
    if p.is_pareto:
        a = -p.alpha  # tail weight > 0
        mean = p.sigma / (a - 1.0) if a > 1.0 else math.inf
        var = (
            p.sigma**2 * a / ((a - 1.0) ** 2 * (a - 2.0)) if a > 2.0 else math.inf
        )
        return Moments(mean=mean, variance=var, mu=a)
    if p.is_gamma:
        return Moments(mean=p.alpha / p.theta, variance=p.alpha / p.theta**2, mu=0.0)
    mu = math.exp(-p.rho + p.alpha * math.log(p.rho) - p.log_norm)
    mean = (p.alpha - p.rho + mu) / p.theta
    var = (p.alpha + (1.0 + p.rho - p.alpha) * mu - mu * mu) / p.theta**2
    return Moments(mean=mean, variance=var, mu=mu)


def conditional_mean_excess(p: FtgParams, u: float) -> float:
    """E[X | X > u]: the conditional expectation of X given exceedance of u.

    Interior form (alpha - rho + mu')/theta with
    mu' = e^-(rho + theta u) (rho + theta u)^alpha / Gamma(alpha, rho + theta u);
    equivalently u plus the mean of the exceedance distribution truncate(p, u).
    Infinite at the Pareto boundary when alpha >= -1.
    """
    if u < 0.0:
        raise ValueError("threshold must be >= 0")
    if u == 0.0:
        return moments(p).mean
    if p.is_pareto:
        a = -p.alpha
        return u + (p.sigma + u) / (a - 1.0) if a > 1.0 else math.inf
    r2 = p.rho + p.theta * u
    mu2 = math.exp(-r2 + p.alpha * math.log(r2) - log_upper_inc_gamma(p.alpha, r2))
    return (p.alpha - p.rho + mu2) / p.theta


# ------------------------------------------------------- closure transforms
def scale(p: FtgParams, lam: float) -> FtgParams:
    """Distribution of lam * X: FTG(alpha, theta/lam, rho); Pareto (alpha, lam sigma)."""
    if not lam > 0.0:
        raise ValueError("scale factor must be > 0")
    if p.is_pareto:
        return FtgParams.pareto(p.alpha, lam * p.sigma)
    return FtgParams(p.alpha, p.theta / lam, p.rho)


def truncate(p: FtgParams, u: float) -> FtgParams:
    """Exceedance distribution of X - u given X > u: FTG(alpha, theta, rho + theta u)."""
    if u < 0.0:
        raise ValueError("threshold must be >= 0")
    if u == 0.0:
        return p
    if p.is_pareto:
        return FtgParams.pareto(p.alpha, p.sigma + u)
    return FtgParams(p.alpha, p.theta, p.rho + p.theta * u)


# ------------------------------------------------------------ Pareto limit
def pareto_limit_distance(alpha: float, sigma: float, rho: float) -> float:
    """L1 distance between FTG(alpha, rho/sigma, rho) and Pareto(alpha, sigma).

    The density ratio is monotone in x, so the two densities cross exactly
    once; the head |f - p| is integrated by adaptive quadrature in
    y = log(1 + x/sigma) and the tail beyond the crossing is the exact
    difference of the two survival functions. Used by convergence tests for
    the Pareto boundary, not end users.
    """
    if not (alpha < 0.0 and sigma > 0.0 and rho > 0.0):
        raise ValueError("requires alpha < 0, sigma > 0, rho > 0")
    from scipy.integrate import quad

    d0 = log_upper_inc_gamma(alpha, rho)
    # log of f/p at exceedance coordinate y: log_c - rho e^y, with
    # f(x) dy-density = e^(alpha y) * c * e^(-rho e^y), p -> -alpha e^(alpha y)
    log_c = alpha * math.log(rho) - d0 - math.log(-alpha)
    if log_c <= rho:
        raise NumericsError(
            "density ratio never exceeds 1; crossing assumption violated "
            f"(alpha={alpha}, rho={rho})"
        )
    y0 = math.log(log_c / rho)

    log_ratio_scale = alpha * math.log(rho) - d0

    def integrand(y: float) -> float:
        return math.exp(alpha * y) * (
            math.exp(log_ratio_scale - rho * math.exp(y)) + alpha
        )

    head, err = quad(integrand, 0.0, y0, epsabs=1e-14, epsrel=1e-11, limit=400)
    if err > max(1e-12, 1e-6 * abs(head)):
        raise NumericsError(
            f"L1 head quadrature did not converge (err={err:.2e})"
        )
    # tail: integral of (p - f) over (y0, inf) = S_pareto(y0) - S_ftg(y0)
    tail = math.exp(alpha * y0) - math.exp(
        log_upper_inc_gamma(alpha, rho * math.exp(y0)) - d0
    )
    return head + tail
