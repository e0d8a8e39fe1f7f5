"""Maximum-likelihood estimation for the FTG and Pareto families.

Estimation uses the (alpha, sigma, rho) parameterization: for fixed
dispersion sigma the FTG is a full exponential model in the canonical
statistics (1 + x/sigma, log(1 + x/sigma)), so the inner problem in
(alpha, rho) has a unique root of the score, found by a damped Newton
iteration. The outer problem is a one-dimensional search of the profile
log-likelihood over log sigma.

Fitting standardizes the data to unit mean first and maps the optimum back
through the scale closure of the family (alpha and rho are scale-invariant,
sigma picks up the factor), which keeps the optimizer's geometry independent
of the data's units.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import Sample
from .dist import FtgParams, ParetoParams
from .errors import FitError, NumericsError
from .specfun import chi2_survival_1df, inc_gamma_eval, log_upper_inc_gamma

_LOG_RHO_MIN = -600.0
_LOG_RHO_MAX = math.log(700.0)


# ---------------------------------------------------------------- statistics
@dataclass(frozen=True)
class SufficientStats:
    """Sample means of r = 1 + x/sigma and s = log(1 + x/sigma), with the
    sigma-derivatives of both means (used by the score and information)."""

    sigma: float
    n: int
    r_bar: float
    s_bar: float
    r_bar_sigma: float
    s_bar_sigma: float
    r_bar_sigma_sigma: float
    s_bar_sigma_sigma: float


def sufficient_stats(sample, sigma: float) -> SufficientStats:
    if sigma <= 0.0:
        raise ValueError("sigma must be > 0")
    x = Sample.coerce(sample).values
    xbar = float(x.mean())
    ratio = x / sigma
    denom = sigma + x
    return SufficientStats(
        sigma=sigma,
        n=x.size,
        r_bar=1.0 + xbar / sigma,
        s_bar=float(np.log1p(ratio).mean()),
        r_bar_sigma=-xbar / sigma**2,
        s_bar_sigma=-float((x / denom).mean()) / sigma,
        r_bar_sigma_sigma=2.0 * xbar / sigma**3,
        s_bar_sigma_sigma=float((x * (2.0 * sigma + x) / (sigma * denom) ** 2).mean()),
    )


# --------------------------------------------------------------- likelihoods
def loglik_ftg(sample, alpha: float, sigma: float, rho: float) -> float:
    """FTG log-likelihood in the (alpha, sigma, rho) parameterization."""
    st = sufficient_stats(sample, sigma)
    return _loglik_from_stats(st, alpha, rho)


def _loglik_from_stats(st: SufficientStats, alpha: float, rho: float) -> float:
    d = log_upper_inc_gamma(alpha, rho)
    return -st.n * (
        d
        + math.log(st.sigma)
        - alpha * math.log(rho)
        - (alpha - 1.0) * st.s_bar
        + rho * st.r_bar
    )


def loglik_pareto(sample, alpha: float, sigma: float) -> float:
    if alpha >= 0.0:
        raise ValueError("Pareto alpha must be < 0")
    st = sufficient_stats(sample, sigma)
    return st.n * (math.log(-alpha) - math.log(sigma) + (alpha - 1.0) * st.s_bar)


def loglik_sample_free(n: int, alpha: float, sigma: float, rho: float) -> float:
    """Profile log-likelihood value written without the sample.

    Valid only at inner-solve solutions (score in alpha and rho both zero),
    where the sufficient statistics can be eliminated:
    -n (d - log(rho/sigma) - (alpha-1) d_alpha - rho d_rho + alpha).
    """
    ev = inc_gamma_eval(alpha, rho)
    return -n * (
        ev.log_value
        - math.log(rho / sigma)
        - (alpha - 1.0) * ev.d_alpha
        - rho * ev.d_rho
        + alpha
    )


def score_ftg(sample, alpha: float, sigma: float, rho: float):
    """Score vector (l_alpha, l_sigma, l_rho)."""
    st = sufficient_stats(sample, sigma)
    ev = inc_gamma_eval(alpha, rho)
    return _score_from_stats(st, ev, alpha, rho)


def _score_from_stats(st: SufficientStats, ev, alpha: float, rho: float):
    n = st.n
    l_a = -n * (ev.d_alpha - math.log(rho) - st.s_bar)
    l_s = -n * (1.0 / st.sigma - (alpha - 1.0) * st.s_bar_sigma + rho * st.r_bar_sigma)
    l_r = -n * (ev.d_rho - alpha / rho + st.r_bar)
    return l_a, l_s, l_r


def observed_information(sample, alpha: float, sigma: float, rho: float) -> np.ndarray:
    """Observed information (negative Hessian of the log-likelihood), 3x3,
    in the order (alpha, sigma, rho)."""
    st = sufficient_stats(sample, sigma)
    ev = inc_gamma_eval(alpha, rho)
    return _information_from_stats(st, ev, alpha, rho)


def _information_from_stats(st: SufficientStats, ev, alpha: float, rho: float) -> np.ndarray:
    n = st.n
    m = np.array(
        [
            [ev.d_alpha_alpha, -st.s_bar_sigma, ev.d_alpha_rho - 1.0 / rho],
            [
                -st.s_bar_sigma,
                -1.0 / st.sigma**2
                - (alpha - 1.0) * st.s_bar_sigma_sigma
                + rho * st.r_bar_sigma_sigma,
                st.r_bar_sigma,
            ],
            [ev.d_alpha_rho - 1.0 / rho, st.r_bar_sigma, ev.d_rho_rho + alpha / rho**2],
        ]
    )
    return n * m


def pareto_observed_information(sample, alpha: float, sigma: float) -> np.ndarray:
    """2x2 observed information of the Pareto likelihood, order (alpha, sigma)."""
    st = sufficient_stats(sample, sigma)
    n = st.n
    return n * np.array(
        [
            [1.0 / alpha**2, -st.s_bar_sigma],
            [-st.s_bar_sigma, -1.0 / sigma**2 - (alpha - 1.0) * st.s_bar_sigma_sigma],
        ]
    )


# ---------------------------------------------------------------- fit result
@dataclass(frozen=True)
class FitResult:
    """Converged estimate with curvature-based uncertainty.

    observed_info and std_errors are in natural parameter scale; the
    log-scale information (parameters alpha, log sigma, log rho, or
    alpha, log sigma for Pareto) is exposed alongside because the optimizer
    works there and heavy-tail fits are better conditioned in it.
    """

    family: str
    params: FtgParams | ParetoParams
    loglik: float
    score_norm: float
    observed_info: np.ndarray = field(repr=False)
    std_errors: np.ndarray
    converged: bool
    iterations: int
    standardization_factor: float
    observed_info_log: np.ndarray = field(repr=False)
    boundary: str | None = None
    pareto_fit: "FitResult | None" = None

    @property
    def n_params(self) -> int:
        return len(self.std_errors)

    def to_dict(self) -> dict:
        p = self.params
        if isinstance(p, ParetoParams):
            pd = {"family": "pareto", "alpha": p.alpha, "sigma": p.sigma}
        else:
            pd = {
                "family": "ftg",
                "alpha": p.alpha,
                "theta": p.theta,
                "rho": p.rho,
                "sigma": p.sigma,
            }
        return {
            "family": self.family,
            "params": pd,
            "loglik": self.loglik,
            "score_norm": self.score_norm,
            "observed_info": self.observed_info.tolist(),
            "std_errors": self.std_errors.tolist(),
            "converged": self.converged,
            "iterations": self.iterations,
            "standardization_factor": self.standardization_factor,
            "observed_info_log": self.observed_info_log.tolist(),
            "boundary": self.boundary,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        pd = d["params"]
        if pd["family"] == "pareto":
            params: FtgParams | ParetoParams = ParetoParams(pd["alpha"], pd["sigma"])
        elif pd["theta"] == 0.0:
            params = FtgParams.pareto(pd["alpha"], pd["sigma"])
        else:
            params = FtgParams(pd["alpha"], pd["theta"], pd["rho"])
        return cls(
            family=d["family"],
            params=params,
            loglik=d["loglik"],
            score_norm=d["score_norm"],
            observed_info=np.asarray(d["observed_info"]),
            std_errors=np.asarray(d["std_errors"]),
            converged=d["converged"],
            iterations=d["iterations"],
            standardization_factor=d["standardization_factor"],
            observed_info_log=np.asarray(d["observed_info_log"]),
            boundary=d.get("boundary"),
        )


def _std_errors(info: np.ndarray) -> np.ndarray:
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(info)
    diag = np.diag(cov).copy()
    bad = diag <= 0.0
    if np.any(bad):
        # indefinite curvature (ridge / boundary): flag with inf, not nan
        diag[bad] = np.inf
    return np.sqrt(diag)


# --------------------------------------------------------------- inner solve
class InnerBoundaryError(FitError):
    """For this sigma the likelihood supremum over (alpha, rho) sits at the
    Pareto limit rho -> 0 instead of an interior point.

    The family is not steep at that edge: along the slice matching the
    log-statistic, the reachable mean of 1 + x/sigma is capped at
    1 / (1 - s_bar), so samples with r_bar at or above the cap have no
    interior root of the score.
    """

    def __init__(self, sigma: float, s_bar: float, r_bar: float):
        self.sigma = sigma
        self.alpha_limit = -1.0 / s_bar
        super().__init__(
            f"no interior (alpha, rho) optimum at sigma={sigma}: "
            f"r_bar={r_bar:.6g} >= 1/(1 - s_bar)={1.0 / (1.0 - s_bar):.6g}"
        )


def inner_solve(sample, sigma: float, warm_start: tuple[float, float] | None = None,
                tol: float = 1e-9, max_iter: int = 200):
    """Joint root of the alpha- and rho-score equations for fixed sigma.

    Returns (alpha_hat, rho_hat, iterations). Newton in (alpha, log rho)
    with step damping on the likelihood; if Newton stalls, the problem is
    reduced to one dimension by solving alpha out of its strictly monotone
    score equation at each rho and bisecting what remains.

    Raises InnerBoundaryError when no interior root exists (the supremum is
    the Pareto limit), and FitError on outright non-convergence.
    """
    st = sufficient_stats(sample, sigma)
    _check_interior_exists(st)
    return _inner_solve_stats(st, warm_start, tol, max_iter)


def _check_interior_exists(st: SufficientStats) -> None:
    if st.r_bar <= math.exp(st.s_bar) * (1.0 + 1e-12):
        raise FitError(
            "degenerate statistics: mean of 1 + x/sigma does not exceed the "
            "geometric counterpart (all observations equal?)"
        )
    if st.s_bar < 1.0 and st.r_bar * (1.0 - st.s_bar) >= 1.0 - 1e-10:
        raise InnerBoundaryError(st.sigma, st.s_bar, st.r_bar)


def _inner_g(st: SufficientStats, alpha: float, rho: float):
    ev = inc_gamma_eval(alpha, rho)
    g1 = ev.d_alpha - math.log(rho) - st.s_bar
    # d_rho - alpha/rho equals -Gamma(alpha+1, rho) / (rho Gamma(alpha, rho))
    # by the recurrence; the subtracted form cancels catastrophically for
    # small rho, the ratio form never does
    g2 = st.r_bar - math.exp(
        log_upper_inc_gamma(alpha + 1.0, rho) - math.log(rho) - ev.log_value
    )
    return g1, g2, ev


def _inner_solve_stats(st: SufficientStats, warm_start, tol, max_iter):
    if warm_start is None:
        alpha, rho = _inner_default_start(st)
    else:
        alpha, rho = warm_start
        rho = min(max(rho, math.exp(_LOG_RHO_MIN)), math.exp(_LOG_RHO_MAX))
    lt = math.log(rho)
    per_obs = lambda a, r: _loglik_from_stats(st, a, r) / st.n
    merit = per_obs(alpha, rho)
    for it in range(1, max_iter + 1):
        rho = math.exp(lt)
        g1, g2, ev = _inner_g(st, alpha, rho)
        if abs(g1) < tol * max(1.0, abs(st.s_bar)) and abs(g2) < tol * max(1.0, st.r_bar):
            return alpha, rho, it
        if lt < -150.0:
            break  # rho^2 underflow territory: leave it to the 1-d fallback
        j11 = ev.d_alpha_alpha
        j12 = (ev.d_alpha_rho - 1.0 / rho) * rho
        j21 = ev.d_alpha_rho - 1.0 / rho
        j22 = (ev.d_rho_rho + alpha / rho**2) * rho
        det = j11 * j22 - j12 * j21
        if det == 0.0 or not math.isfinite(det):
            break
        da = -(g1 * j22 - g2 * j12) / det
        dt = -(j11 * g2 - j21 * g1) / det
        clip = max(abs(da), abs(dt))
        if clip > 3.0:  # long Newton jumps overshoot the concave region
            da *= 3.0 / clip
            dt *= 3.0 / clip
        step = 1.0
        for _ in range(40):
            a_new = alpha + step * da
            t_new = min(max(lt + step * dt, _LOG_RHO_MIN), _LOG_RHO_MAX)
            m_new = per_obs(a_new, math.exp(t_new))
            if m_new >= merit - 1e-14 * max(1.0, abs(merit)):
                break
            step *= 0.5
        else:
            break
        alpha, lt, merit = a_new, t_new, m_new
    # fallback: eliminate alpha through its strictly monotone score equation
    # and bisect the remaining one-dimensional rho equation
    alpha, rho, ok = _inner_solve_1d(st, alpha, lt)
    if ok:
        g1, g2, _ = _inner_g(st, alpha, rho)
        if abs(g1) < tol * max(1.0, abs(st.s_bar)) and abs(g2) < tol * max(1.0, st.r_bar):
            return alpha, rho, max_iter + 1
    raise FitError(
        f"inner score equations did not converge at sigma={st.sigma} "
        f"(last alpha={alpha}, rho={rho})"
    )


def _alpha_given_rho(st: SufficientStats, rho: float, guess: float) -> float:
    """Solve d_alpha(alpha, rho) = log rho + s_bar; strictly monotone in alpha."""
    from scipy.optimize import brentq

    def g1(a: float) -> float:
        return inc_gamma_eval(a, rho).d_alpha - math.log(rho) - st.s_bar

    cap = 1e6
    lo = hi = min(max(guess, -cap), cap)
    v = g1(lo)
    step = 1.0
    if v > 0.0:
        while v > 0.0 and lo > -cap:
            hi, lo = lo, max(lo - step, -cap)
            v = g1(lo)
            step *= 2.0
        if v > 0.0:
            raise FitError(f"alpha score unbracketable at rho={rho}")
    else:
        while v < 0.0 and hi < cap:
            lo, hi = hi, min(hi + step, cap)
            v = g1(hi)
            step *= 2.0
        if v < 0.0:
            raise FitError(f"alpha score unbracketable at rho={rho}")
    return brentq(g1, lo, hi, xtol=1e-13, maxiter=200)


def _inner_solve_1d(st: SufficientStats, alpha0: float, lt0: float):
    """Scan log rho, solving alpha out of its own equation at each point,
    until the remaining rho-score changes sign; then bisect.

    When no sign change shows up at the current resolution the scan zooms
    onto the grid minimum of |g2|: the existence precheck guarantees a root,
    so it must be hiding in a dip narrower than the spacing.
    """
    guess = {"a": alpha0}

    def g2_of_lt(lt: float) -> float:
        rho = math.exp(lt)
        a = _alpha_given_rho(st, rho, guess["a"])
        guess["a"] = a
        return _inner_g(st, a, rho)[1]

    def scan(grid):
        prev_lt = prev_v = None
        best = None  # (|v|, lt) over evaluable points
        for lt in grid:
            try:
                v = g2_of_lt(float(lt))
            except (ValueError, OverflowError, NumericsError, FitError):
                prev_lt = prev_v = None
                continue
            if best is None or abs(v) < best[0]:
                best = (abs(v), float(lt))
            if prev_v is not None and (v == 0.0 or prev_v * v < 0.0):
                return (prev_lt, prev_v, float(lt), v), best
            prev_lt, prev_v = float(lt), v
        return None, best

    grid = np.unique(
        np.concatenate(
            (
                np.array([lt0]),
                np.linspace(max(lt0 - 12.0, _LOG_RHO_MIN),
                            min(lt0 + 12.0, _LOG_RHO_MAX), 25),
                np.linspace(_LOG_RHO_MIN, _LOG_RHO_MAX, 122),
            )
        )
    )
    bracket, best = scan(grid)
    span = 5.0
    for _ in range(10):
        if bracket is not None or best is None:
            break
        center = best[1]
        local = np.linspace(max(center - span, _LOG_RHO_MIN),
                            min(center + span, _LOG_RHO_MAX), 41)
        bracket, best = scan(local)
        span /= 8.0
    if bracket is None:
        return alpha0, math.exp(lt0), False
    # plain bisection: sign-tracked by hand, immune to the slight
    # evaluation jitter the warm-started alpha solves introduce
    a_lt, a_v, b_lt, b_v = bracket
    for _ in range(80):
        mid = 0.5 * (a_lt + b_lt)
        mv = g2_of_lt(mid)
        if mv == 0.0 or (b_lt - a_lt) < 1e-13:
            a_lt = b_lt = mid
            break
        if (mv > 0.0) == (a_v > 0.0):
            a_lt, a_v = mid, mv
        else:
            b_lt, b_v = mid, mv
    rho = math.exp(0.5 * (a_lt + b_lt))
    return _alpha_given_rho(st, rho, guess["a"]), rho, True


def _inner_default_start(st: SufficientStats):
    # moment-flavored start: Pareto-style alpha, rho from a coarse g2 scan
    alpha = max(-1.0 / st.s_bar, -30.0) if st.s_bar > 0 else 0.5
    best, best_rho = math.inf, 1e-3
    for lt in np.linspace(-30.0, 5.0, 36):
        rho = math.exp(lt)
        try:
            _, g2, _ = _inner_g(st, alpha, rho)
        except (ValueError, OverflowError):
            continue
        if abs(g2) < best:
            best, best_rho = abs(g2), rho
    return alpha, best_rho


# ------------------------------------------------------------- profile fits
def fit_pareto(sample) -> FitResult:
    """Two-parameter Pareto MLE via the closed-form profile alpha(sigma) = -1/s_bar."""
    smp = Sample.coerce(sample)
    x = smp.values
    n = x.size
    if n < 2:
        raise FitError("Pareto fit needs at least 2 observations")
    if np.count_nonzero(x > 0) < 1:
        raise FitError("Pareto fit needs positive observations")
    from scipy.optimize import minimize_scalar

    xbar = float(x.mean())

    def neg_profile(log_sigma: float) -> float:
        sigma = math.exp(log_sigma)
        s_bar = float(np.log1p(x / sigma).mean())
        return -n * (-math.log(s_bar) - log_sigma - 1.0 - s_bar)

    lo, hi = math.log(xbar) - 4.0 * math.log(10.0), math.log(xbar) + 4.0 * math.log(10.0)
    for _ in range(8):
        res = minimize_scalar(neg_profile, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10})
        at_edge = min(res.x - lo, hi - res.x) < 1e-3
        if not at_edge:
            break
        # light-tailed data pushes sigma (and -alpha) to infinity along the
        # exponential limit; past any practical tail weight, stop chasing it
        if -1.0 / float(np.log1p(x / math.exp(res.x)).mean()) < -1e4:
            break
        lo, hi = lo - 4.0, hi + 4.0
    sigma = math.exp(res.x)
    s_bar = float(np.log1p(x / sigma).mean())
    alpha = -1.0 / s_bar
    ll = loglik_pareto(smp, alpha, sigma)
    st = sufficient_stats(smp, sigma)
    score = (
        n * (1.0 / alpha + st.s_bar),
        n * (-1.0 / sigma + (alpha - 1.0) * st.s_bar_sigma),
    )
    info = pareto_observed_information(smp, alpha, sigma)
    jac = np.diag([1.0, sigma])
    info_log = jac @ info @ jac
    score_norm = max(abs(score[0]), abs(score[1]))
    return FitResult(
        family="pareto",
        params=ParetoParams(alpha, sigma),
        loglik=ll,
        score_norm=score_norm,
        observed_info=info,
        std_errors=_std_errors(info),
        converged=bool(score_norm < 1e-6 * n),
        iterations=int(res.nfev),
        standardization_factor=1.0,
        observed_info_log=info_log,
    )


def fit_gamma(sample) -> FitResult:
    """Gamma MLE: moment start, then Newton on the shape equation
    log(alpha) - psi(alpha) = log(xbar) - mean(log x)."""
    from scipy.special import digamma, polygamma

    smp = Sample.coerce(sample)
    x = smp.values
    n = x.size
    if n < 2 or np.any(x <= 0.0):
        raise FitError("gamma fit needs >= 2 strictly positive observations")
    xbar = float(x.mean())
    mean_log = float(np.log(x).mean())
    gap = math.log(xbar) - mean_log  # > 0 unless degenerate
    if gap <= 0.0:
        raise FitError("degenerate sample: all values equal")
    var = float(x.var())
    alpha = xbar * xbar / var if var > 0 else 1.0
    for it in range(20):
        f = math.log(alpha) - digamma(alpha) - gap
        fp = 1.0 / alpha - polygamma(1, alpha)
        step = f / fp
        new = alpha - step
        if new <= 0.0:
            new = alpha / 2.0
        alpha = new
        if abs(f) < 1e-13:
            break
    theta = alpha / xbar
    ll = n * (
        alpha * math.log(theta)
        - math.lgamma(alpha)
        + (alpha - 1.0) * mean_log
        - theta * xbar
    )
    score = (
        n * (math.log(theta) - digamma(alpha) + mean_log),
        n * (alpha / theta - xbar),
    )
    info = n * np.array(
        [[polygamma(1, alpha), -1.0 / theta], [-1.0 / theta, alpha / theta**2]]
    )
    jac = np.diag([1.0, theta])
    score_norm = max(abs(score[0]), abs(score[1]))
    return FitResult(
        family="gamma",
        params=FtgParams.gamma(alpha, theta),
        loglik=ll,
        score_norm=score_norm,
        observed_info=info,
        std_errors=_std_errors(info),
        converged=bool(score_norm < 1e-6 * n),
        iterations=it + 1,
        standardization_factor=1.0,
        observed_info_log=jac @ info @ jac,
    )


class _Profile:
    """Profile log-likelihood over log sigma with warm-started inner solves.

    Where no interior inner optimum exists the profile takes its supremum
    value, which is the Pareto profile at that sigma; genuine numerical
    failures are replaced by a sentinel so the outer search can route
    around them.
    """

    _SENTINEL = -1e15

    def __init__(self, smp: Sample):
        self.smp = smp
        self.cache: dict[float, tuple[float, float]] = {}
        self.best: tuple[float, float] | None = None  # (value, log_sigma)

    def solve(self, log_sigma: float, start=None):
        sigma = math.exp(log_sigma)
        if start is None and self.cache:
            nearest = min(self.cache, key=lambda k: abs(k - log_sigma))
            start = self.cache[nearest]
        a, r, _ = inner_solve(self.smp, sigma, warm_start=start)
        self.cache[log_sigma] = (a, r)
        return a, r

    def pareto_value(self, log_sigma: float) -> float:
        x = self.smp.values
        n = x.size
        s_bar = float(np.log1p(x / math.exp(log_sigma)).mean())
        return n * (-math.log(s_bar) - log_sigma - 1.0 - s_bar)

    def value(self, log_sigma: float, start=None) -> float:
        try:
            a, r = self.solve(log_sigma, start)
        except InnerBoundaryError:
            return self.pareto_value(log_sigma)
        except FitError:
            return self._SENTINEL
        out = loglik_ftg(self.smp, a, math.exp(log_sigma), r)
        if self.best is None or out > self.best[0]:
            self.best = (out, log_sigma)
        return out


def _bracket_maximum(fun, x0: float, lo: float, hi: float, step: float = 0.5):
    """Expand from x0 until fun has a local max strictly inside (a, c).

    Returns (bracket, status): bracket is ((a, x0, c), values) or None;
    status is "ok", or "lo"/"hi" when the maximum ran into that bound.
    """
    x0 = min(max(x0, lo + 1e-9), hi - 1e-9)
    f0 = fun(x0)
    a, c = max(lo, x0 - step), min(hi, x0 + step)
    fa, fc = fun(a), fun(c)
    for _ in range(200):
        if f0 >= fa and f0 >= fc:
            return ((a, x0, c), (fa, f0, fc)), "ok"
        if fa > f0:
            a, x0, c = max(lo, a - 2.0 * (x0 - a)), a, x0
            fa, f0, fc = fun(a), fa, f0
            if x0 == a:
                return None, "lo"
        else:
            a, x0, c = x0, c, min(hi, c + 2.0 * (c - x0))
            fa, f0, fc = f0, fc, fun(c)
            if x0 == c:
                return None, "hi"
    return None, "stuck"


def fit_ftg(sample) -> FitResult:
    """Three-parameter FTG MLE by profile likelihood in sigma.

    Standardizes to unit mean, runs the outer Brent search from two
    initializations (a gamma-model fit and a Pareto-model fit with the
    matching rho), keeps the better optimum, polishes with full Newton
    steps on the three-parameter score, and maps back to the data scale.

    A fit drifting to the Pareto boundary (rho -> 0 with alpha < 0) is
    reported with boundary="pareto" and the Pareto fit attached instead of
    pretending an interior optimum exists.
    """
    smp = Sample.coerce(sample)
    x = smp.values
    n = x.size
    if n < 3:
        raise FitError("FTG fit needs at least 3 observations")
    pos = x[x > 0]
    if pos.size < 2 or np.unique(pos).size < 2:
        raise FitError("FTG fit needs at least two distinct positive values")

    y_smp, xbar = smp.standardized()
    prof = _Profile(y_smp)
    lo, hi = math.log(1e-4), math.log(1e4)

    starts = []
    # Pareto-model initialization, with rho from the rho-score relation
    par_y = fit_pareto(y_smp)
    a_p, s_p = par_y.params.alpha, par_y.params.sigma
    rho_p = _rho_for_pareto_start(a_p, s_p)
    starts.append((math.log(s_p), (a_p, rho_p)))
    # gamma-model initialization at sigma = 1 (unit-mean data)
    if np.all(y_smp.values > 0.0):
        try:
            gam_y = fit_gamma(y_smp)
            starts.append((0.0, (gam_y.params.alpha, gam_y.params.theta)))
        except FitError:
            pass

    from scipy.optimize import minimize_scalar

    best = None
    pinned: set[str] = set()
    for log_sig0, inner0 in starts:
        try:
            try:
                prof.solve(log_sig0, start=inner0)  # seed the warm cache
            except FitError:
                pass  # prof.value degrades gracefully at bad points
            bracket = None
            for attempt in range(6):
                bracket, status = _bracket_maximum(prof.value, log_sig0, lo, hi)
                if bracket is not None or status == "stuck":
                    break
                # the spec'd search window expands when the maximum runs into
                # an edge; a maximum still pinned after ~16 extra decades is a
                # closure-boundary supremum, not a bracketing failure
                if status == "lo":
                    lo -= 3.0 * math.log(10.0)
                elif status == "hi":
                    hi += 3.0 * math.log(10.0)
            if bracket is None:
                if status in ("lo", "hi"):
                    pinned.add(status)
                continue
            (a, b, c), _ = bracket
            minimize_scalar(
                lambda t: -prof.value(t),
                bounds=(a, c),
                method="bounded",
                options={"xatol": 1e-8},
            )
            # read the optimum off the profile's own bookkeeping: the
            # optimizer's final point may sit on a failed-evaluation cliff
            if prof.best is not None and (best is None or prof.best[0] > best[0]):
                best = prof.best
        except FitError:
            continue
    if best is None or best[0] <= _Profile._SENTINEL:
        edge = _edge_supremum_result(smp, xbar, pinned)
        if edge is not None:
            return edge
        raise FitError("profile search failed from every initialization")
    if pinned:
        # an interior bracket was found from one start, but another start ran
        # off to a closure edge; keep whichever likelihood is higher
        edge = _edge_supremum_result(smp, xbar, pinned)
        if edge is not None and edge.loglik > best[0] + 1e-9:
            return edge

    ll_y, log_sig = best
    try:
        alpha, rho = prof.solve(log_sig)
    except InnerBoundaryError:
        return _boundary_result(smp, fit_pareto(smp), xbar)
    sigma = math.exp(log_sig)
    alpha, sigma, rho, iters = _newton_polish(y_smp, alpha, sigma, rho)

    # boundary drift checks (rho is scale-invariant): a vanishing truncation
    # parameter means the optimum lives on the Pareto (alpha < 0) or gamma
    # (alpha > 0) edge of the family
    boundary = None
    pareto_fit = fit_pareto(smp)
    if rho < 1e-10:
        ll_here = loglik_ftg(y_smp, alpha, sigma, rho) - n * math.log(xbar)
        if alpha < 0.0 and ll_here <= pareto_fit.loglik + 1e-6:
            boundary = "pareto"
        elif alpha > 0.0:
            gamma_fit = fit_gamma(smp)
            if ll_here <= gamma_fit.loglik + 1e-6:
                return FitResult(
                    family="ftg",
                    params=gamma_fit.params,
                    loglik=gamma_fit.loglik,
                    score_norm=gamma_fit.score_norm,
                    observed_info=gamma_fit.observed_info,
                    std_errors=gamma_fit.std_errors,
                    converged=gamma_fit.converged,
                    iterations=iters,
                    standardization_factor=xbar,
                    observed_info_log=gamma_fit.observed_info_log,
                    boundary="gamma",
                )
        rho = max(rho, 1e-150)  # keep 1/rho^2 representable below

    # de-standardize: alpha, rho unchanged; sigma scales with the mean
    sigma *= xbar
    params = FtgParams.from_sigma(alpha, sigma, rho)
    ll = loglik_ftg(smp, alpha, sigma, rho)
    score = score_ftg(smp, alpha, sigma, rho)
    score_norm = max(abs(s) for s in score)
    info = observed_information(smp, alpha, sigma, rho)
    jac = np.diag([1.0, sigma, rho])
    if boundary == "pareto":
        return FitResult(
            family="ftg",
            params=params,
            loglik=ll,
            score_norm=score_norm,
            observed_info=info,
            std_errors=_std_errors(info),
            converged=False,
            iterations=iters,
            standardization_factor=xbar,
            observed_info_log=jac @ info @ jac,
            boundary=boundary,
            pareto_fit=pareto_fit,
        )
    return FitResult(
        family="ftg",
        params=params,
        loglik=ll,
        score_norm=score_norm,
        observed_info=info,
        std_errors=_std_errors(info),
        converged=bool(score_norm < 1e-6 * n),
        iterations=iters,
        standardization_factor=xbar,
        observed_info_log=jac @ info @ jac,
    )


def _edge_supremum_result(smp: Sample, xbar: float, pinned: set) -> "FitResult | None":
    """Best closure-boundary model when the profile maximum ran off an edge.

    sigma -> 0 approaches the gamma sub-family, sigma -> inf the Pareto-like
    exponential mimicry; evaluate the attainable boundary fits and report
    the better one with its boundary flag.
    """
    if not pinned:
        return None
    candidates: list[FitResult] = []
    if "lo" in pinned:
        try:
            candidates.append(fit_gamma(smp))
        except FitError:
            pass
    try:
        candidates.append(fit_pareto(smp))
    except FitError:
        pass
    if not candidates:
        return None
    top = max(candidates, key=lambda f: f.loglik)
    if top.family == "gamma":
        return FitResult(
            family="ftg",
            params=top.params,
            loglik=top.loglik,
            score_norm=top.score_norm,
            observed_info=top.observed_info,
            std_errors=top.std_errors,
            converged=top.converged,
            iterations=top.iterations,
            standardization_factor=xbar,
            observed_info_log=top.observed_info_log,
            boundary="gamma",
        )
    return _boundary_result(smp, top, xbar)


def _boundary_result(smp: Sample, pareto_fit: FitResult, xbar: float) -> FitResult:
    """FTG fit that drifted to the Pareto edge: report the boundary model
    with the Pareto fit attached rather than a fake interior optimum."""
    pp = pareto_fit.params
    return FitResult(
        family="ftg",
        params=FtgParams.pareto(pp.alpha, pp.sigma),
        loglik=pareto_fit.loglik,
        score_norm=pareto_fit.score_norm,
        observed_info=pareto_fit.observed_info,
        std_errors=pareto_fit.std_errors,
        converged=False,
        iterations=pareto_fit.iterations,
        standardization_factor=xbar,
        observed_info_log=pareto_fit.observed_info_log,
        boundary="pareto",
        pareto_fit=pareto_fit,
    )


def _rho_for_pareto_start(alpha: float, sigma: float) -> float:
    """Solve d_rho - alpha/rho + 1 + 1/sigma = 0 for the initial rho."""
    from scipy.optimize import brentq

    def h(lt: float) -> float:
        r = math.exp(lt)
        return 1.0 + 1.0 / sigma - math.exp(
            log_upper_inc_gamma(alpha + 1.0, r) - lt - log_upper_inc_gamma(alpha, r)
        )

    grid = np.linspace(-60.0, math.log(500.0), 80)
    vals = []
    for lt in grid:
        try:
            vals.append(h(lt))
        except (ValueError, OverflowError):
            vals.append(math.nan)
    best = 1e-3
    for i in range(len(grid) - 1):
        if math.isnan(vals[i]) or math.isnan(vals[i + 1]):
            continue
        if vals[i] == 0.0:
            return math.exp(grid[i])
        if vals[i] * vals[i + 1] < 0.0:
            return math.exp(brentq(h, grid[i], grid[i + 1], xtol=1e-12))
    finite = [(abs(v), g) for v, g in zip(vals, grid) if not math.isnan(v)]
    if finite:
        best = math.exp(min(finite)[1])
    return best


def _newton_polish(smp: Sample, alpha: float, sigma: float, rho: float,
                   max_iter: int = 60):
    """Full Newton on the (alpha, log sigma, log rho) score, guarded by the
    likelihood, with Levenberg-style damping so nearly flat or indefinite
    curvature (the alpha = 1 ridge) still makes monotone progress."""
    n = len(smp)
    ll = loglik_ftg(smp, alpha, sigma, rho)
    it = 0
    lam = 0.0
    for it in range(1, max_iter + 1):
        if rho < 1e-150:
            break  # curvature in rho is not representable this far down
        st = sufficient_stats(smp, sigma)
        ev = inc_gamma_eval(alpha, rho)
        score = np.array(_score_from_stats(st, ev, alpha, rho))
        if np.max(np.abs(score)) < 1e-9 * n:
            break
        info = _information_from_stats(st, ev, alpha, rho)
        jac = np.diag([1.0, sigma, rho])
        info_log = jac @ info @ jac
        score_log = jac @ score
        ridge_scale = max(float(np.max(np.abs(np.diag(info_log)))), 1.0)
        accepted = False
        for _ in range(40):
            try:
                step = np.linalg.solve(
                    info_log + lam * ridge_scale * np.eye(3), score_log
                )
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                clip = np.max(np.abs(step))
                if clip > 1.0:
                    step = step / clip
                a_new = alpha + step[0]
                s_new = sigma * math.exp(step[1])
                r_new = min(max(rho * math.exp(step[2]),
                                math.exp(_LOG_RHO_MIN)), math.exp(_LOG_RHO_MAX))
                try:
                    ll_new = loglik_ftg(smp, a_new, s_new, r_new)
                except (ValueError, OverflowError):
                    ll_new = -math.inf
                if ll_new > ll - 1e-13 * max(1.0, abs(ll)):
                    alpha, sigma, rho = a_new, s_new, r_new
                    accepted = ll_new > ll
                    ll = max(ll, ll_new)
                    lam = lam / 4.0 if lam > 1e-12 else 0.0
                    break
            lam = max(lam * 8.0, 1e-8)
        if not accepted and lam > 1e6:
            break
    return alpha, sigma, rho, it


def lrt_pareto_vs_ftg(sample) -> tuple[float, float]:
    """Likelihood-ratio test of the Pareto null inside the FTG alternative.

    statistic = 2 (l_FTG - l_Pareto), referenced to chi-square with one
    degree of freedom. The Pareto sits on the rho = 0 edge of the parameter
    space, so the chi-square(1) reference is the conventional (not
    boundary-corrected) choice.
    """
    smp = Sample.coerce(sample)
    ftg = fit_ftg(smp)
    if ftg.boundary == "pareto" and ftg.pareto_fit is not None:
        pareto = ftg.pareto_fit
        ll_ftg = max(ftg.loglik, pareto.loglik)
    else:
        pareto = fit_pareto(smp)
        ll_ftg = ftg.loglik
    if not (ftg.converged or ftg.boundary == "pareto") or not pareto.converged:
        warnings.warn("LRT computed from a fit that did not fully converge")
    stat = 2.0 * (ll_ftg - pareto.loglik)
    stat = max(stat, 0.0)
    return stat, chi2_survival_1df(stat)
