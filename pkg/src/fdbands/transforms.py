"""Moment-based statistics and their residual calculus.

A Transformation is a smooth map H of the vector of pointwise non-centered
sample moments: Cohen's d, variance, skewness g1, excess kurtosis g2, their
normalizing transforms, and the mean as the linear base case.  Each carries
an analytic gradient and Hessian (unit-tested against central differences;
nothing is differentiated numerically at runtime) and a domain guard that
rejects grid points where the statistic degenerates (e.g. zero variance).

The residual construction: with R^(r)_n = X_n^r - mean(X^r) the per-order
moment residuals, the transformed residual curves

    R~_n(s) = grad H(moments(s)) . R_n(s)

sum to zero pointwise and their empirical covariance N^-1 sum R~ R~^T
converges to the covariance of the limiting process of
sqrt(N) (H(sample moments) - H(population moments)).  They drive both the
multiplier bootstrap and the kinematic-formula quantile estimates.

The skewness/kurtosis normalizing transforms follow D'Agostino (Biometrika
1970) and Anscombe & Glynn (Biometrika 1983), with the finite-N constants
as collected by D'Agostino, Belanger & D'Agostino (Am. Stat. 1990); both
transforms are approximately N(0,1) under Gaussianity, which is what the
Gaussianity band tests rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainGuardViolation, SampleTooSmall, ShapeMismatch
from .fdata import Curve, FunctionalSample, Grid
from .moments import (
    MomentEstimates,
    MomentOrders,
    moment_residuals,
    pointwise_moments,
)

# Variance guard: require (m2 - m1^2) > floor * m2.  m2 is the natural
# squared scale of the data, so this is a relative cutoff against
# catastrophic cancellation for near-constant samples.
_REL_VARIANCE_FLOOR = 1e-12
# Kurtosis-transform guard: the inner 1 + (...) expression must stay positive.
_Z2_U_FLOOR = 1e-8

TRANSFORMATION_NAMES = (
    "mean",
    "variance",
    "cohens_d",
    "skewness",
    "kurtosis",
    "skewness_z",
    "kurtosis_z",
)


@dataclass(frozen=True)
class Transformation:
    """A statistic H of K pointwise moments with analytic derivatives.

    The callables accept a (K, T) moment matrix (or a (K,) vector) and
    return (T,), (K, T), (K, K, T) arrays respectively; domain_guard
    returns a (T,) boolean mask of grid points where H is safe to evaluate.
    n is the sample-size index for N-dependent families (math.inf selects
    the limiting member); None for N-free statistics.
    """

    name: str
    orders: MomentOrders
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    domain_guard: Callable[[np.ndarray], np.ndarray]
    n: float | None = None


@dataclass(frozen=True, eq=False)
class DeltaResidualSet:
    """Transformed residual curves plus the derived estimate and se curves."""

    grid: Grid
    residuals: np.ndarray  # N x T
    estimate: Curve
    se: Curve
    transformation: str
    n: int


# --------------------------------------------------------------------------
# shape plumbing
# --------------------------------------------------------------------------

def _wrap(k: int, fn):
    """Adapt a (K,P)->(...,P) implementation to also accept (K,) vectors."""

    def wrapped(m):
        m = np.asarray(m, dtype=float)
        squeeze = m.ndim == 1
        if squeeze:
            m = m[:, None]
        if m.ndim != 2 or m.shape[0] != k:
            raise ShapeMismatch(f"expected a ({k}, T) moment matrix, got shape {m.shape}")
        out = fn(m)
        return out[..., 0] if squeeze else out

    return wrapped


def _build(name, orders, value, gradient, hessian, guard, n=None) -> Transformation:
    k = len(orders)
    return Transformation(
        name=name,
        orders=orders,
        value=_wrap(k, value),
        gradient=_wrap(k, gradient),
        hessian=_wrap(k, hessian),
        domain_guard=_wrap(k, guard),
        n=n,
    )


def _guard_all(m):
    return np.ones(m.shape[1], dtype=bool)


def _guard_variance(m):
    x, y = m[0], m[1]
    return (y - x * x) > _REL_VARIANCE_FLOOR * y


# --------------------------------------------------------------------------
# built-in statistics
# --------------------------------------------------------------------------

def _mean_transformation() -> Transformation:
    orders = MomentOrders((1,))
    return _build(
        "mean",
        orders,
        value=lambda m: m[0].copy(),
        gradient=lambda m: np.ones_like(m),
        hessian=lambda m: np.zeros((1, 1, m.shape[1])),
        guard=_guard_all,
    )


def _variance_transformation() -> Transformation:
    orders = MomentOrders((1, 2))

    def value(m):
        return m[1] - m[0] * m[0]

    def gradient(m):
        return np.stack([-2.0 * m[0], np.ones_like(m[0])])

    def hessian(m):
        h = np.zeros((2, 2, m.shape[1]))
        h[0, 0] = -2.0
        return h

    return _build("variance", orders, value, gradient, hessian, _guard_variance)


def _cohens_d_transformation() -> Transformation:
    orders = MomentOrders((1, 2))

    def value(m):
        x, y = m[0], m[1]
        return x / np.sqrt(y - x * x)

    def gradient(m):
        x, y = m[0], m[1]
        v32 = (y - x * x) ** -1.5
        return np.stack([y * v32, -0.5 * x * v32])

    def hessian(m):
        x, y = m[0], m[1]
        v = y - x * x
        v32 = v**-1.5
        v52 = v**-2.5
        h = np.empty((2, 2, m.shape[1]))
        h[0, 0] = 3.0 * x * y * v52
        h[0, 1] = h[1, 0] = v32 - 1.5 * y * v52
        h[1, 1] = 0.75 * x * v52
        return h

    return _build("cohens_d", orders, value, gradient, hessian, _guard_variance)


def _skewness_transformation() -> Transformation:
    # g1 = m3 / v^(3/2) with v, m3 the central moments expressed through
    # the raw moments (x, y, z) = (m1, m2, m3_raw).
    orders = MomentOrders((1, 2, 3))

    def _pieces(m):
        x, y, z = m
        v = y - x * x
        m3 = z - 3.0 * x * y + 2.0 * x**3
        return x, y, v, m3

    def value(m):
        x, y, v, m3 = _pieces(m)
        return m3 * v**-1.5

    def gradient(m):
        x, y, v, m3 = _pieces(m)
        v32 = v**-1.5
        v52 = v**-2.5
        phi_v = -1.5 * m3 * v52
        g = np.empty((3, m.shape[1]))
        g[0] = phi_v * (-2.0 * x) + v32 * (6.0 * x * x - 3.0 * y)
        g[1] = phi_v - 3.0 * x * v32
        g[2] = v32
        return g

    def hessian(m):
        x, y, v, m3 = _pieces(m)
        one = np.ones_like(x)
        zero = np.zeros_like(x)
        v32 = v**-1.5
        v52 = v**-2.5
        v72 = v**-3.5
        phi_v = -1.5 * m3 * v52
        phi_vv = 3.75 * m3 * v72
        phi_vm = -1.5 * v52
        cv = np.stack([-2.0 * x, one, zero])
        cm = np.stack([6.0 * x * x - 3.0 * y, -3.0 * x, one])
        h = phi_vv * cv[:, None] * cv[None, :]
        h = h + phi_vm * (cv[:, None] * cm[None, :] + cm[:, None] * cv[None, :])
        h[0, 0] += phi_v * (-2.0) + v32 * 12.0 * x
        h[0, 1] += v32 * (-3.0)
        h[1, 0] += v32 * (-3.0)
        return h

    return _build("skewness", orders, value, gradient, hessian, _guard_variance)


def _kurtosis_transformation() -> Transformation:
    # Excess kurtosis g2 = m4 / v^2 - 3, raw moments (x, y, z, w).
    orders = MomentOrders((1, 2, 3, 4))

    def _pieces(m):
        x, y, z, w = m
        v = y - x * x
        m4 = w - 4.0 * x * z + 6.0 * x * x * y - 3.0 * x**4
        return x, y, z, v, m4

    def value(m):
        x, y, z, v, m4 = _pieces(m)
        return m4 / (v * v) - 3.0

    def _cm(x, y, z, one):
        return np.stack([-4.0 * z + 12.0 * x * y - 12.0 * x**3, 6.0 * x * x, -4.0 * x, one])

    def gradient(m):
        x, y, z, v, m4 = _pieces(m)
        one = np.ones_like(x)
        zero = np.zeros_like(x)
        phi_v = -2.0 * m4 * v**-3
        phi_m = v**-2
        cv = np.stack([-2.0 * x, one, zero, zero])
        return phi_v * cv + phi_m * _cm(x, y, z, one)

    def hessian(m):
        x, y, z, v, m4 = _pieces(m)
        one = np.ones_like(x)
        zero = np.zeros_like(x)
        phi_v = -2.0 * m4 * v**-3
        phi_m = v**-2
        phi_vv = 6.0 * m4 * v**-4
        phi_vm = -2.0 * v**-3
        cv = np.stack([-2.0 * x, one, zero, zero])
        cm = _cm(x, y, z, one)
        h = phi_vv * cv[:, None] * cv[None, :]
        h = h + phi_vm * (cv[:, None] * cm[None, :] + cm[:, None] * cv[None, :])
        h[0, 0] += phi_v * (-2.0) + phi_m * (12.0 * y - 36.0 * x * x)
        h[0, 1] += phi_m * 12.0 * x
        h[1, 0] += phi_m * 12.0 * x
        h[0, 2] += phi_m * (-4.0)
        h[2, 0] += phi_m * (-4.0)
        return h

    return _build("kurtosis", orders, value, gradient, hessian, _guard_variance)


# --------------------------------------------------------------------------
# normalizing transforms of skewness / kurtosis
# --------------------------------------------------------------------------

# Limiting (N = infinity) members of the transform families.
Z1_LIMIT_SCALE = 0.335
Z1_LIMIT_RATE = 1.216
Z2_LIMIT_SCALE = 0.8165
Z2_LIMIT_RATE = 0.75


@dataclass(frozen=True)
class ZTransformParams:
    """Sample-size dependent constants of the normalizing transforms.

    Z1 (skewness, D'Agostino 1970): c1 = Var[g1], c2 = kurtosis of g1's
    null distribution, and the derived W, alpha, delta.  Z2 (kurtosis,
    Anscombe-Glynn 1983): b1 = E[g2] + 3, b2 = Var[g2], b3 = squared
    skewness of g2's null distribution, and the derived A.  n = math.inf
    selects the limiting transform; the finite-N fields are then None.
    """

    kind: str
    n: float
    c1: float | None = None
    c2: float | None = None
    w: float | None = None
    alpha: float | None = None
    delta: float | None = None
    b1: float | None = None
    b2: float | None = None
    b3: float | None = None
    a: float | None = None

    @property
    def is_limit(self) -> bool:
        return math.isinf(self.n)

    # -- Z1: x -> delta * asinh(rate * x), odd and strictly increasing.

    def _z1_scale_rate(self):
        if self.is_limit:
            return Z1_LIMIT_SCALE, Z1_LIMIT_RATE
        return self.delta, 1.0 / (self.alpha * math.sqrt(self.c1))

    # -- Z2: a shifted, skewness-corrected Wilson-Hilferty cube-root map.

    def _z2_pieces(self):
        if self.is_limit:
            # scale, base, cube-root coefficient, slope, shift
            return Z2_LIMIT_SCALE, 1.0, 1.0, Z2_LIMIT_RATE, 3.0
        scale = math.sqrt(4.5 * self.a)
        base = 1.0 - 2.0 / (9.0 * self.a)
        coef = (1.0 - 2.0 / self.a) ** (1.0 / 3.0)
        slope = math.sqrt(2.0 / (self.a - 4.0)) / math.sqrt(self.b2)
        return scale, base, coef, slope, 3.0 - self.b1

    def _z2_u(self, x):
        _, _, _, slope, shift = self._z2_pieces()
        return 1.0 + (np.asarray(x, dtype=float) + shift) * slope

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "Z1":
            scale, rate = self._z1_scale_rate()
            return scale * np.arcsinh(rate * x)
        scale, base, coef, _, _ = self._z2_pieces()
        u = self._z2_u(x)
        return scale * (base - coef / np.cbrt(u))

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "Z1":
            scale, rate = self._z1_scale_rate()
            return scale * rate / np.sqrt(1.0 + (rate * x) ** 2)
        scale, _, coef, slope, _ = self._z2_pieces()
        u = self._z2_u(x)
        return scale * coef * (slope / 3.0) / (np.cbrt(u) * u)

    def second_derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "Z1":
            scale, rate = self._z1_scale_rate()
            return -scale * rate**3 * x * (1.0 + (rate * x) ** 2) ** -1.5
        scale, _, coef, slope, _ = self._z2_pieces()
        u = self._z2_u(x)
        return -scale * coef * (4.0 * slope * slope / 9.0) / (np.cbrt(u) * u * u)

    def guard(self, x):
        if self.kind == "Z1":
            return np.ones(np.shape(np.asarray(x)), dtype=bool)
        with np.errstate(invalid="ignore"):
            return self._z2_u(x) > _Z2_U_FLOOR


def z_params(kind: str, n) -> ZTransformParams:
    """Constants of the Z1/Z2 transform for sample size n (or math.inf)."""
    if kind not in ("Z1", "Z2"):
        raise ConfigError(f"unknown transform kind {kind!r}")
    n = float(n)
    if math.isinf(n):
        return ZTransformParams(kind=kind, n=n)
    if kind == "Z1":
        if n < 8:
            raise SampleTooSmall(f"skewness transform needs n >= 8, got {n:g}")
        c1 = 6.0 * (n - 2.0) / ((n + 1.0) * (n + 3.0))
        c2 = (
            3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0)
            / ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0))
        )
        w2 = math.sqrt(2.0 * c2 - 2.0) - 1.0
        w = math.sqrt(w2)
        alpha = math.sqrt(2.0 / (w2 - 1.0))
        delta = 1.0 / math.sqrt(math.log(w))
        return ZTransformParams(kind=kind, n=n, c1=c1, c2=c2, w=w, alpha=alpha, delta=delta)
    if n < 20:
        raise SampleTooSmall(f"kurtosis transform needs n >= 20, got {n:g}")
    b1 = 3.0 * (n - 1.0) / (n + 1.0)
    b2 = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) ** 2 * (n + 3.0) * (n + 5.0))
    sqrt_b3 = (
        6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0))
        * math.sqrt(6.0 * (n + 5.0) * (n + 3.0) / (n * (n - 2.0) * (n - 3.0)))
    )
    b3 = sqrt_b3 * sqrt_b3
    a = 6.0 + 8.0 / sqrt_b3 * (2.0 / sqrt_b3 + math.sqrt(1.0 + 4.0 / b3))
    return ZTransformParams(kind=kind, n=n, b1=b1, b2=b2, b3=b3, a=a)


def _z_composed(name: str, inner: Transformation, params: ZTransformParams) -> Transformation:
    inner_value = inner.value
    inner_grad = inner.gradient
    inner_hess = inner.hessian
    inner_guard = inner.domain_guard

    def value(m):
        return params.apply(inner_value(m))

    def gradient(m):
        return params.derivative(inner_value(m)) * inner_grad(m)

    def hessian(m):
        g = inner_value(m)
        gr = inner_grad(m)
        outer = gr[:, None] * gr[None, :]
        return params.second_derivative(g) * outer + params.derivative(g) * inner_hess(m)

    def guard(m):
        ok = inner_guard(m)
        with np.errstate(all="ignore"):
            g = inner_value(m)
        return ok & params.guard(np.where(ok, g, 0.0))

    return Transformation(
        name=name,
        orders=inner.orders,
        value=value,
        gradient=gradient,
        hessian=hessian,
        domain_guard=guard,
        n=params.n,
    )


def get_transformation(name: str, n=None) -> Transformation:
    """Look up a statistic by registry name.

    n is required context for the N-dependent families (skewness_z,
    kurtosis_z); passing n=None selects their limiting member.
    """
    key = name.strip().lower()
    if key == "mean":
        return _mean_transformation()
    if key == "variance":
        return _variance_transformation()
    if key == "cohens_d":
        return _cohens_d_transformation()
    if key == "skewness":
        return _skewness_transformation()
    if key == "kurtosis":
        return _kurtosis_transformation()
    if key == "skewness_z":
        params = z_params("Z1", math.inf if n is None else n)
        return _z_composed("skewness_z", _skewness_transformation(), params)
    if key == "kurtosis_z":
        params = z_params("Z2", math.inf if n is None else n)
        return _z_composed("kurtosis_z", _kurtosis_transformation(), params)
    raise ConfigError(f"unknown transformation {name!r}; known: {', '.join(TRANSFORMATION_NAMES)}")


# --------------------------------------------------------------------------
# evaluation and residual construction
# --------------------------------------------------------------------------

def _check_guard(t: Transformation, values: np.ndarray, grid: Grid) -> None:
    ok = t.domain_guard(values)
    if not np.all(ok):
        idx = int(np.argmax(~ok))
        raise DomainGuardViolation(
            f"{t.name}: domain guard fails at grid point s={grid.points[idx]:g} (index {idx})"
        )


def evaluate(t: Transformation, moments: MomentEstimates) -> Curve:
    """Pointwise H of the moment rows."""
    _check_guard(t, moments.values, moments.grid)
    return Curve(moments.grid, t.value(moments.values))


def delta_residuals(t: Transformation, sample: FunctionalSample) -> DeltaResidualSet:
    """Transformed residual curves for H applied to the sample's moments.

    residuals[n, t] = grad H(moments(s_t)) . (per-order moment residuals);
    the rows sum to zero at every grid point.  estimate is H at the sample
    moments and se the plug-in standard error of that estimate, i.e.
    sqrt(N^-1 sum_n residual_n(s)^2) / sqrt(N).
    """
    est_m = pointwise_moments(sample, t.orders)
    _check_guard(t, est_m.values, sample.grid)
    grad = t.gradient(est_m.values)
    res = moment_residuals(sample, t.orders)
    residuals = np.einsum("kt,knt->nt", grad, res.values)
    estimate = t.value(est_m.values)
    se = np.sqrt(np.mean(residuals * residuals, axis=0)) / math.sqrt(sample.n)
    return DeltaResidualSet(
        grid=sample.grid,
        residuals=residuals,
        estimate=Curve(sample.grid, estimate),
        se=Curve(sample.grid, se),
        transformation=t.name,
        n=sample.n,
    )


def se_estimate(drs: DeltaResidualSet) -> Curve:
    """Standard error of the estimate curve from the residual spread."""
    r = drs.residuals
    return Curve(drs.grid, np.sqrt(np.mean(r * r, axis=0)) / math.sqrt(drs.n))


def bias_estimate(t: Transformation, sample: FunctionalSample) -> Curve:
    """Second-order plug-in bias of H(sample moments).

    (2N)^-1 sum_{k,k'} d2H/dm_k dm_k' (moments) *
    (moment of order r_k + r_k' - product of the order r_k, r_k' moments).
    Identically zero for linear H.
    """
    est_m = pointwise_moments(sample, t.orders)
    _check_guard(t, est_m.values, sample.grid)
    hess = t.hessian(est_m.values)
    orders = t.orders.orders
    pair_orders = sorted({a + b for a in orders for b in orders})
    pair_m = pointwise_moments(sample, MomentOrders(tuple(pair_orders)))
    pair_lookup = {r: pair_m.values[i] for i, r in enumerate(pair_orders)}
    acc = np.zeros(len(sample.grid))
    for i, ri in enumerate(orders):
        for j, rj in enumerate(orders):
            acc += hess[i, j] * (pair_lookup[ri + rj] - est_m.values[i] * est_m.values[j])
    return Curve(sample.grid, acc / (2.0 * sample.n))


# --------------------------------------------------------------------------
# closed-form Gaussian reference quantities
# --------------------------------------------------------------------------

def gaussian_cohens_d_cov(mu: Curve, sigma: Curve, c11: np.ndarray) -> np.ndarray:
    """Limiting covariance of the normalized Cohen's d estimator, Gaussian data.

    c11 is the covariance function of the data on the same grid (diagonal
    sigma^2); the result is
    c11/(sigma sigma') + c11^2 mu mu' / (2 sigma^3 sigma'^3).
    """
    c11 = np.asarray(c11, dtype=float)
    t = len(mu.grid)
    if c11.shape != (t, t):
        raise ShapeMismatch(f"c11 must be ({t}, {t}), got {c11.shape}")
    if len(sigma.grid) != t:
        raise ShapeMismatch("mu and sigma grids differ")
    s = sigma.values
    m = mu.values
    corr = c11 / np.outer(s, s)
    return corr + c11**2 * np.outer(m, m) / (2.0 * np.outer(s**3, s**3))


def _require_n(n: int, minimum: int, what: str) -> None:
    if n < minimum:
        raise SampleTooSmall(f"{what} needs n >= {minimum}, got {n}")


def gaussian_se_g1(n: int) -> float:
    """Exact sd of the pointwise skewness estimator for Gaussian samples."""
    _require_n(n, 4, "gaussian_se_g1")
    return math.sqrt(6.0 * (n - 2.0) / ((n + 1.0) * (n + 3.0)))


def gaussian_se_g2(n: int) -> float:
    """Exact sd of the pointwise excess-kurtosis estimator for Gaussian samples."""
    _require_n(n, 4, "gaussian_se_g2")
    return math.sqrt(
        24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) ** 2 * (n + 3.0) * (n + 5.0))
    )


def gaussian_bias_g2(n: int) -> float:
    """Exact mean of the pointwise excess-kurtosis estimator for Gaussian samples."""
    _require_n(n, 4, "gaussian_bias_g2")
    return -6.0 / (n + 1.0)
