"""Training-objective kernels with analytic gradients.

Every ``*_grad`` function is checked against central differences in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

DEFAULT_ALPHA = 0.25
DEFAULT_GAMMA = 2.0
DEFAULT_LAMBDA = 1.0
DEFAULT_BETA = 0.01
PROB_CLAMP = 1e-7


def _pair(pred, target):
    pred = np.atleast_1d(np.asarray(pred, dtype=float)).ravel()
    target = np.atleast_1d(np.asarray(target, dtype=float)).ravel()
    if pred.shape != target.shape:
        raise ValueError(f"length mismatch: pred {pred.size} vs target {target.size}")
    return pred, target


def l2_regression(pred, target) -> float:
    """Mean squared difference."""
    pred, target = _pair(pred, target)
    return float(np.mean((pred - target) ** 2))


def l2_regression_grad(pred, target) -> np.ndarray:
    pred, target = _pair(pred, target)
    return 2.0 * (pred - target) / pred.size


def kl_to_standard_normal(mu, logvar) -> float:
    """KL( N(mu, diag(exp(logvar))) || N(0, I) )."""
    mu = np.asarray(mu, dtype=float)
    logvar = np.asarray(logvar, dtype=float)
    # expm1(lv) - lv keeps full precision near logvar = 0
    return float(0.5 * np.sum(mu**2 + np.expm1(logvar) - logvar))


def kl_grad(mu, logvar) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of ``kl_to_standard_normal`` w.r.t. mu and logvar."""
    mu = np.asarray(mu, dtype=float)
    logvar = np.asarray(logvar, dtype=float)
    return mu.copy(), 0.5 * np.expm1(logvar)


@dataclass
class LatentGoal:
    mu: np.ndarray
    logvar: np.ndarray
    eps: np.ndarray

    def __post_init__(self):
        self.mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        self.logvar = np.atleast_1d(np.asarray(self.logvar, dtype=float))
        self.eps = np.atleast_1d(np.asarray(self.eps, dtype=float))
        if self.mu.size < 1 or not (self.mu.shape == self.logvar.shape == self.eps.shape):
            raise ValueError(
                f"latent shapes differ: mu {self.mu.shape}, logvar {self.logvar.shape}, eps {self.eps.shape}"
            )

    @property
    def sample(self) -> np.ndarray:
        return self.mu + np.exp(self.logvar / 2.0) * self.eps

    @classmethod
    def draw(cls, mu, logvar, rng: np.random.Generator):
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        return cls(mu, logvar, rng.standard_normal(mu.shape))

    @classmethod
    def prior(cls, dim: int, rng: np.random.Generator):
        """A draw from N(0, I): mu = 0, logvar = 0."""
        return cls(np.zeros(dim), np.zeros(dim), rng.standard_normal(dim))


@dataclass
class VibBatch:
    pred_dist: np.ndarray
    target_dist: np.ndarray
    pred_waypoints: np.ndarray
    target_waypoints: np.ndarray
    pred_offset: np.ndarray
    target_offset: np.ndarray
    latent: LatentGoal
    lam: float = DEFAULT_LAMBDA
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        pw = np.asarray(self.pred_waypoints, dtype=float)
        tw = np.asarray(self.target_waypoints, dtype=float)
        if pw.shape != tw.shape or pw.ndim != 2 or pw.shape[1] != 2 or pw.shape[0] < 1:
            raise ValueError(f"waypoint arrays must both be (H, 2) with H >= 1, got {pw.shape} and {tw.shape}")
        if np.shape(self.pred_offset) != (2,) or np.shape(self.target_offset) != (2,):
            raise ValueError("GPS offsets must be 2-vectors")
        if self.lam < 0 or self.beta < 0:
            raise ValueError("lambda and beta must be non-negative")

    def actions(self):
        pred = np.concatenate([np.ravel(self.pred_waypoints), np.ravel(self.pred_offset)])
        target = np.concatenate([np.ravel(self.target_waypoints), np.ravel(self.target_offset)])
        return pred, target


class VibLoss(NamedTuple):
    total: float
    dist_term: float
    action_term: float
    kl_term: float


def vib_loss(batch: VibBatch) -> VibLoss:
    """Distance regression + lambda * action regression + beta * KL to the prior."""
    dist_term = l2_regression(batch.pred_dist, batch.target_dist)
    action_term = l2_regression(*batch.actions())
    kl_term = kl_to_standard_normal(batch.latent.mu, batch.latent.logvar)
    total = dist_term + batch.lam * action_term + batch.beta * kl_term
    return VibLoss(total, dist_term, action_term, kl_term)


def focal_loss(p_t: float, alpha: float = DEFAULT_ALPHA, gamma: float = DEFAULT_GAMMA) -> float:
    """-alpha (1 - p_t)^gamma log(p_t) for the probability of the true class."""
    if not 0.0 < p_t < 1.0:
        raise ValueError(f"p_t must lie in (0, 1), got {p_t}")
    return float(-alpha * (1.0 - p_t) ** gamma * np.log(p_t))


def focal_loss_grad(p_t, alpha: float = DEFAULT_ALPHA, gamma: float = DEFAULT_GAMMA):
    """d focal / d p_t (vectorized)."""
    p = np.asarray(p_t, dtype=float)
    q = 1.0 - p
    grad = -alpha * q**gamma / p
    if gamma != 0:
        grad = grad + alpha * gamma * q ** (gamma - 1.0) * np.log(p)
    return grad


def _p_true(prob, labels):
    prob = np.clip(np.asarray(prob, dtype=float), PROB_CLAMP, 1.0 - PROB_CLAMP)
    labels = np.asarray(labels)
    if prob.shape != labels.shape:
        raise ValueError(f"shape mismatch: probabilities {prob.shape} vs labels {labels.shape}")
    return np.where(labels > 0, prob, 1.0 - prob)


def focal_loss_batched(prob, labels, alpha=DEFAULT_ALPHA, gamma=DEFAULT_GAMMA, weights: Optional[np.ndarray] = None) -> float:
    """Mean focal loss over pixels; ``prob`` is P(foreground), clamped to [1e-7, 1 - 1e-7]."""
    p_t = _p_true(prob, labels)
    per_pixel = -alpha * (1.0 - p_t) ** gamma * np.log(p_t)
    if weights is None:
        return float(per_pixel.mean())
    return float(np.sum(per_pixel * weights) / np.sum(weights))


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-np.logaddexp(0.0, -x))


def focal_loss_logits(logits, labels, alpha=DEFAULT_ALPHA, gamma=DEFAULT_GAMMA) -> tuple[float, np.ndarray]:
    """Batched focal loss from logits, with its gradient w.r.t. the logits."""
    logits = np.asarray(logits, dtype=float)
    labels = np.asarray(labels)
    prob = sigmoid(logits)
    loss = focal_loss_batched(prob, labels, alpha, gamma)
    p_t = _p_true(prob, labels)
    # dp_t/ds = +p(1-p) for foreground, -p(1-p) for background; zero where clamped
    clamped = (prob < PROB_CLAMP) | (prob > 1.0 - PROB_CLAMP)
    dpt = np.where(labels > 0, 1.0, -1.0) * prob * (1.0 - prob)
    dpt = np.where(clamped, 0.0, dpt)
    grad = focal_loss_grad(p_t, alpha, gamma) * dpt / logits.size
    return loss, grad
