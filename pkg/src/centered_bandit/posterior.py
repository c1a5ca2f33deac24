"""Weighted ridge posterior for the action-centered Thompson sampler.

The posterior keeps the sufficient statistics ``B`` (precision, starts at the
identity) and ``b_hat`` together with a cached Cholesky factor of ``B``, so
that solving for ``theta_hat``, drawing from ``N(theta_hat, v^2 B^-1)`` and
computing feature widths never needs an explicit matrix inverse.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

_SQRT2 = math.sqrt(2.0)


def normal_cdf(x: float) -> float:
    """Standard normal CDF, accurate to ~1e-16 absolute via ``erfc``."""
    return 0.5 * math.erfc(-x / _SQRT2)


def centered_reward(pi, action_nonzero, reward):
    """``(1[a>0] - pi) * r``; its mean given the candidate is ``pi(1-pi)(r(a) - r(0))``.

    Works elementwise on arrays.
    """
    return (1.0 * action_nonzero - pi) * reward


class PosteriorState:
    """Gaussian posterior over the interaction coefficients.

    Parameters
    ----------
    dim : int
        Feature dimension ``d``.
    v : float
        Posterior scale; draws have covariance ``v**2 * inv(B)``.
    """

    def __init__(self, dim: int, v: float):
        if int(dim) != dim or dim < 1:
            raise ValueError(f"dim must be a positive integer, got {dim!r}")
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"v must be positive and finite, got {v!r}")
        self.dim = int(dim)
        self.v = float(v)
        self.B = np.eye(self.dim)
        self.b_hat = np.zeros(self.dim)
        self.theta_hat = np.zeros(self.dim)
        self.update_count = 0
        self._eye = np.eye(self.dim)
        self._chol = np.eye(self.dim)
        self._chol_inv = np.eye(self.dim)

    # -- updates -----------------------------------------------------------

    def update(self, s, pi: float, action_nonzero: bool, reward: float) -> None:
        """Action-centered update with candidate features ``s``.

        ``B += pi(1-pi) s s^T`` and ``b_hat += s (1[a>0] - pi) r``.
        """
        s = self._check_features(s)
        if not (0.0 < pi < 1.0):
            raise ValueError(f"pi must lie strictly inside (0, 1), got {pi!r}")
        if not math.isfinite(reward):
            raise ValueError(f"reward must be finite, got {reward!r}")
        self._apply(s, pi * (1.0 - pi), centered_reward(pi, bool(action_nonzero), reward))

    def update_unweighted(self, x, reward: float) -> None:
        """Plain linear-TS update: ``B += x x^T``, ``b_hat += x r``."""
        x = self._check_features(x)
        if not math.isfinite(reward):
            raise ValueError(f"reward must be finite, got {reward!r}")
        self._apply(x, 1.0, reward)

    def _apply(self, s: np.ndarray, weight: float, target: float) -> None:
        B = self.B + weight * np.outer(s, s)
        b_hat = self.b_hat + target * s
        chol = np.linalg.cholesky(B)
        theta = cho_solve((chol, True), b_hat, check_finite=False)
        # one refinement step keeps the residual at rounding level
        theta += cho_solve((chol, True), b_hat - B @ theta, check_finite=False)
        self.B, self.b_hat, self.theta_hat = B, b_hat, theta
        self._chol = chol
        self._chol_inv = solve_triangular(chol, self._eye, lower=True, check_finite=False)
        self.update_count += 1

    def _check_features(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if s.shape != (self.dim,):
            raise ValueError(f"expected feature vector of shape ({self.dim},), got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("feature vector contains non-finite values")
        return s

    # -- queries -----------------------------------------------------------

    def sample_theta(self, rng: np.random.Generator) -> np.ndarray:
        """One draw from ``N(theta_hat, v^2 B^-1)``.

        With ``B = L L^T``, ``L^-T z`` has covariance ``B^-1`` for standard
        normal ``z``.
        """
        z = rng.standard_normal(self.dim)
        return self.theta_hat + self.v * (self._chol_inv.T @ z)

    def z_width(self, s) -> float:
        """``sqrt(s^T B^-1 s)``."""
        s = self._check_features(s)
        return float(np.linalg.norm(self._chol_inv @ s))

    def prob_positive(self, s) -> float:
        """``P(s^T theta > 0)`` under the posterior; 0.5 for ``s == 0``."""
        s = self._check_features(s)
        width = float(np.linalg.norm(self._chol_inv @ s))
        if width == 0.0:
            return 0.5
        return normal_cdf(float(s @ self.theta_hat) / (self.v * width))

    @property
    def covariance(self) -> np.ndarray:
        """``v^2 B^-1``."""
        return self.v**2 * (self._chol_inv.T @ self._chol_inv)

    # -- checkpointing -----------------------------------------------------

    def to_text(self) -> str:
        """Plain-text snapshot: ``d``, ``B`` row-major, ``b_hat``, ``v``.

        One group per line, floats in round-trip ``repr`` form. The update
        counter is not part of the snapshot.
        """
        lines = [
            str(self.dim),
            " ".join(repr(float(x)) for x in self.B.ravel()),
            " ".join(repr(float(x)) for x in self.b_hat),
            repr(self.v),
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PosteriorState":
        lines = text.strip().splitlines()
        if len(lines) != 4:
            raise ValueError(f"posterior snapshot needs 4 lines, got {len(lines)}")
        dim = int(lines[0])
        B = np.array([float(x) for x in lines[1].split()])
        b_hat = np.array([float(x) for x in lines[2].split()])
        if B.size != dim * dim or b_hat.size != dim:
            raise ValueError("posterior snapshot sizes do not match its dimension")
        return cls.from_arrays(B.reshape(dim, dim), b_hat, float(lines[3]))

    @classmethod
    def from_arrays(cls, B, b_hat, v: float) -> "PosteriorState":
        """Build a state from given statistics; ``B`` must be symmetric positive definite."""
        B = np.array(B, dtype=float)
        b_hat = np.array(b_hat, dtype=float)
        dim = b_hat.shape[0]
        if B.shape != (dim, dim) or not np.allclose(B, B.T, rtol=0, atol=1e-12):
            raise ValueError("B must be a symmetric matrix matching b_hat")
        state = cls(dim, v)
        try:
            chol = np.linalg.cholesky(B)
        except np.linalg.LinAlgError:
            raise ValueError("B is not positive definite") from None
        state.B, state.b_hat, state._chol = B, b_hat, chol
        state.theta_hat = cho_solve((chol, True), b_hat)
        state._chol_inv = solve_triangular(chol, state._eye, lower=True)
        return state

    def copy(self) -> "PosteriorState":
        other = PosteriorState.__new__(PosteriorState)
        other.dim, other.v, other.update_count = self.dim, self.v, self.update_count
        for name in ("B", "b_hat", "theta_hat", "_eye", "_chol", "_chol_inv"):
            setattr(other, name, getattr(self, name).copy())
        return other

    def __repr__(self) -> str:
        return f"PosteriorState(dim={self.dim}, v={self.v}, updates={self.update_count})"


def new_posterior(d: int, v: float) -> PosteriorState:
    return PosteriorState(d, v)
