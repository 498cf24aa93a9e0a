"""Bivariate Gaussian / Clayton / Clayton-survival copulas, their mixture,
and seeded samplers.

Densities are evaluated in log space; the Clayton-survival density is the
reflection f_clayton(1-u1, 1-u2) so it stays consistent with its CDF.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr, ndtri

from .dependence import (
    ORIENT_IDENTITY,
    ORIENT_NEGATED,
    TAIL_CLAYTON,
    TAIL_CLAYTON_SURVIVAL,
    EmpiricalCdf,
)

LOG_FLOOR = 1e-300


def _check_interior(u1, u2):
    u1 = np.asarray(u1, dtype=np.float64)
    u2 = np.asarray(u2, dtype=np.float64)
    if (u1 <= 0).any() or (u1 >= 1).any() or (u2 <= 0).any() or (u2 >= 1).any():
        raise ValueError("copula density arguments must lie in (0, 1)")
    return u1, u2


def gaussian_logpdf(u1, u2, rho: float):
    u1, u2 = _check_interior(u1, u2)
    if not -1 < rho < 1:
        raise ValueError("rho must lie in (-1, 1)")
    x1 = ndtri(u1)
    x2 = ndtri(u2)
    r2 = rho * rho
    return -0.5 * np.log1p(-r2) - (r2 * (x1 * x1 + x2 * x2) - 2 * rho * x1 * x2) / (
        2 * (1 - r2)
    )


def gaussian_density(u1, u2, rho: float):
    return np.exp(gaussian_logpdf(u1, u2, rho))


def clayton_logpdf(u1, u2, theta: float):
    u1, u2 = _check_interior(u1, u2)
    if theta <= 0:
        raise ValueError("theta must be > 0")
    l1 = np.log(u1)
    l2 = np.log(u2)
    # s = u1^-t + u2^-t - 1, computed via log terms to survive small u.
    log_s = np.logaddexp(-theta * l1, -theta * l2)
    s_minus = np.expm1(log_s)  # s - 1 relative to... exp(log_s) - 1 = s
    log_sum = np.log(s_minus)
    return np.log1p(theta) + (-1 - theta) * (l1 + l2) + (-1 / theta - 2) * log_sum


def clayton_density(u1, u2, theta: float):
    return np.exp(clayton_logpdf(u1, u2, theta))


def sclayton_logpdf(u1, u2, theta: float):
    u1, u2 = _check_interior(u1, u2)
    return clayton_logpdf(1.0 - u1, 1.0 - u2, theta)


def sclayton_density(u1, u2, theta: float):
    return np.exp(sclayton_logpdf(u1, u2, theta))


def _check_closed(u1, u2):
    u1 = np.asarray(u1, dtype=np.float64)
    u2 = np.asarray(u2, dtype=np.float64)
    if (u1 < 0).any() or (u1 > 1).any() or (u2 < 0).any() or (u2 > 1).any():
        raise ValueError("copula CDF arguments must lie in [0, 1]")
    return u1, u2


def gaussian_cdf(u1: float, u2: float, rho: float) -> float:
    """Bivariate normal copula CDF via adaptive quadrature (<= 1e-6 abs)."""
    u1, u2 = _check_closed(u1, u2)
    if not -1 < rho < 1:
        raise ValueError("rho must lie in (-1, 1)")
    u1 = float(u1)
    u2 = float(u2)
    if u1 == 0.0 or u2 == 0.0:
        return 0.0
    if u1 == 1.0:
        return u2
    if u2 == 1.0:
        return u1
    a = ndtri(u1)
    b = ndtri(u2)
    denom = np.sqrt(1 - rho * rho)

    def integrand(x):
        return np.exp(-0.5 * x * x) / np.sqrt(2 * np.pi) * ndtr((b - rho * x) / denom)

    val, _ = quad(integrand, -9.0, a, epsabs=1e-9, limit=200)
    return float(val)


def clayton_cdf(u1, u2, theta: float):
    u1, u2 = _check_closed(u1, u2)
    if theta <= 0:
        raise ValueError("theta must be > 0")
    with np.errstate(divide="ignore", over="ignore"):
        s = u1 ** (-theta) + u2 ** (-theta) - 1.0
        out = np.where((u1 > 0) & (u2 > 0), s ** (-1.0 / theta), 0.0)
    return float(out) if out.ndim == 0 else out


def sclayton_cdf(u1, u2, theta: float):
    u1, u2 = _check_closed(u1, u2)
    if theta <= 0:
        raise ValueError("theta must be > 0")
    with np.errstate(divide="ignore", over="ignore"):
        s = (1 - u1) ** (-theta) + (1 - u2) ** (-theta) - 1.0
        tail = np.where((u1 < 1) & (u2 < 1), s ** (-1.0 / theta), 0.0)
    out = np.maximum(u1 + u2 - 1.0 + tail, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CopulaMixtureModel:
    """Gaussian + (Clayton | Clayton-survival) mixture for one channel pair."""

    rho: float
    theta: float
    w: float
    tail_mode: str = TAIL_CLAYTON
    orientation: str = ORIENT_IDENTITY
    n_train: int = 0

    def __post_init__(self):
        if not 0 <= self.rho < 1:
            raise ValueError("rho must lie in [0, 1)")
        if self.theta <= 0:
            raise ValueError("theta must be > 0")
        if not 0 <= self.w <= 1:
            raise ValueError("w must lie in [0, 1]")
        if self.tail_mode not in (TAIL_CLAYTON, TAIL_CLAYTON_SURVIVAL):
            raise ValueError(f"unknown tail_mode {self.tail_mode!r}")
        if self.orientation not in (ORIENT_IDENTITY, ORIENT_NEGATED):
            raise ValueError(f"unknown orientation {self.orientation!r}")

    def to_record(self) -> dict:
        return {
            "rho": self.rho,
            "theta": self.theta,
            "w": self.w,
            "tail_mode": self.tail_mode,
            "orientation": self.orientation,
            "n_train": self.n_train,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "CopulaMixtureModel":
        return cls(**{k: rec[k] for k in
                      ("rho", "theta", "w", "tail_mode", "orientation", "n_train")})


def tail_logpdf(u1, u2, theta: float, tail_mode: str):
    if tail_mode == TAIL_CLAYTON:
        return clayton_logpdf(u1, u2, theta)
    if tail_mode == TAIL_CLAYTON_SURVIVAL:
        return sclayton_logpdf(u1, u2, theta)
    raise ValueError(f"unknown tail_mode {tail_mode!r}")


def mixture_logpdf_params(u1, u2, rho: float, theta: float, w: float, tail_mode: str):
    """log(w * f_gaussian + (1-w) * f_tail), stable in log space."""
    if w >= 1.0:
        return gaussian_logpdf(u1, u2, rho)
    if w <= 0.0:
        return tail_logpdf(u1, u2, theta, tail_mode)
    lg = gaussian_logpdf(u1, u2, rho)
    lc = tail_logpdf(u1, u2, theta, tail_mode)
    return np.logaddexp(np.log(w) + lg, np.log1p(-w) + lc)


def mixture_density(u1, u2, model: CopulaMixtureModel):
    return np.exp(mixture_logpdf_params(u1, u2, model.rho, model.theta, model.w,
                                        model.tail_mode))


def mixture_cdf(u1, u2, model: CopulaMixtureModel):
    """Mixture CDF; used for verification only, not in detection."""
    if model.tail_mode == TAIL_CLAYTON:
        tail = clayton_cdf(u1, u2, model.theta)
    else:
        tail = sclayton_cdf(u1, u2, model.theta)
    return model.w * gaussian_cdf(u1, u2, model.rho) + (1 - model.w) * tail


def clamp_pseudo_obs(u, n_train: int):
    delta = 1.0 / (2.0 * n_train)
    return np.clip(u, delta, 1.0 - delta)


def joint_logpdf_superpixel(hx, hy, ecdf_x: EmpiricalCdf, ecdf_y: EmpiricalCdf,
                            model: CopulaMixtureModel):
    """Log copula density of a feature pair under a fitted model.

    Marginal pdf factors cancel in the detection statistic and are never
    estimated; only the copula factor appears here. Pseudo-observations are
    clamped into [delta, 1-delta] with delta = 1/(2 * n_train).
    """
    if model.n_train < 1:
        raise ValueError("model has no training-set size")
    u = clamp_pseudo_obs(np.asarray(ecdf_x(hx)), model.n_train)
    v = np.asarray(ecdf_y(hy))
    if model.orientation == ORIENT_NEGATED:
        v = 1.0 - v
    v = clamp_pseudo_obs(v, model.n_train)
    return mixture_logpdf_params(u, v, model.rho, model.theta, model.w, model.tail_mode)


def sample_gaussian_pairs(rho: float, n: int, rng: np.random.Generator):
    z = rng.standard_normal((n, 2))
    x1 = z[:, 0]
    x2 = rho * z[:, 0] + np.sqrt(1 - rho * rho) * z[:, 1]
    return ndtr(x1), ndtr(x2)


def sample_clayton_pairs(theta: float, n: int, rng: np.random.Generator):
    """Conditional-inversion Clayton sampler, stable for small theta."""
    u = rng.random(n)
    p = rng.random(n)
    # v = (u^-t * (p^(-t/(1+t)) - 1) + 1)^(-1/t), kept stable for small t
    inner_m1 = np.exp(-theta * np.log(u)) * np.expm1(-theta / (1 + theta) * np.log(p))
    v = np.exp((-1.0 / theta) * np.log1p(inner_m1))
    return u, v


def _clayton_conditional_inverse(u: np.ndarray, p: np.ndarray, theta: float):
    # v = (u^-t * (p^(-t/(1+t)) - 1) + 1)^(-1/t), stable for small t
    inner_m1 = np.exp(-theta * np.log(u)) * np.expm1(-theta / (1 + theta) * np.log(p))
    return np.exp((-1.0 / theta) * np.log1p(inner_m1))


def conditional_sample(model: CopulaMixtureModel, u: np.ndarray,
                       rng: np.random.Generator) -> np.ndarray:
    """Draw v ~ mixture conditional on the first coordinate u.

    For uniform u this reproduces the joint mixture law; it lets callers
    control the spatial structure of u independently of the dependence.
    """
    u = np.asarray(u, dtype=np.float64)
    pick_gauss = rng.random(u.shape) < model.w
    z1 = rng.standard_normal(u.shape)
    vg = ndtr(model.rho * ndtri(u) + np.sqrt(1 - model.rho ** 2) * z1)
    p = rng.random(u.shape)
    if model.tail_mode == TAIL_CLAYTON_SURVIVAL:
        vc = 1.0 - _clayton_conditional_inverse(1.0 - u, p, model.theta)
    else:
        vc = _clayton_conditional_inverse(u, p, model.theta)
    v = np.where(pick_gauss, vg, vc)
    eps = np.finfo(np.float64).tiny
    return np.clip(v, eps, 1 - 1e-16)


def sample_mixture(model: CopulaMixtureModel, n: int, seed: int):
    """n i.i.d. draws from the mixture in (0,1)^2, deterministic per seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    pick_gauss = rng.random(n) < model.w
    gu, gv = sample_gaussian_pairs(model.rho, n, rng)
    cu, cv = sample_clayton_pairs(model.theta, n, rng)
    if model.tail_mode == TAIL_CLAYTON_SURVIVAL:
        cu, cv = 1.0 - cu, 1.0 - cv
    u = np.where(pick_gauss, gu, cu)
    v = np.where(pick_gauss, gv, cv)
    eps = np.finfo(np.float64).tiny
    return np.clip(u, eps, 1 - 1e-16), np.clip(v, eps, 1 - 1e-16)


@dataclass(frozen=True)
class ChannelPairModels:
    """Complete grid of fitted models and their training marginals."""

    cx: int
    cy: int
    models: dict  # (c1, c2) 1-based -> CopulaMixtureModel
    ecdfs_x: tuple  # per channel of X
    ecdfs_y: tuple  # per channel of Y'

    def __post_init__(self):
        expect = {(c1, c2) for c1 in range(1, self.cx + 1) for c2 in range(1, self.cy + 1)}
        if set(self.models) != expect:
            raise ValueError("incomplete channel-pair model grid")

    def model(self, c1: int, c2: int) -> CopulaMixtureModel:
        return self.models[(c1, c2)]

    def to_json(self) -> str:
        recs = {f"{c1},{c2}": m.to_record() for (c1, c2), m in sorted(self.models.items())}
        return json.dumps({"cx": self.cx, "cy": self.cy, "pairs": recs}, indent=2)


def load_model_records(path: str) -> dict:
    """Read the per-pair parameter records from a model JSON file."""
    with open(path) as fh:
        doc = json.load(fh)
    out = {}
    for key, rec in doc["pairs"].items():
        c1, c2 = (int(t) for t in key.split(","))
        out[(c1, c2)] = CopulaMixtureModel.from_record(rec)
    return out
