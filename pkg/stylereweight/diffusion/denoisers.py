import math
from typing import Protocol, runtime_checkable

import numpy as np

from stylereweight.diffusion.schedule import NoiseSchedule
from stylereweight.errors import ContractError, DomainError


@runtime_checkable
class DenoiserContract(Protocol):
    """Anything that predicts the added noise of x_t at step t, with the shape of x_t."""

    def __call__(self, x_t: np.ndarray, t: int) -> np.ndarray:
        ...


def checked_noise_prediction(denoiser: DenoiserContract, x_t: np.ndarray, t: int) -> np.ndarray:
    eps_hat = np.asarray(denoiser(x_t, t), dtype=np.float64)
    if eps_hat.shape != x_t.shape:
        raise ContractError(
            f"Denoiser returned shape {eps_hat.shape} for an input of shape {x_t.shape} at step {t}."
        )
    return eps_hat


class AnalyticGaussianDenoiser:
    """
    Closed-form optimal noise predictor for data drawn from N(mu, sigma0^2 I).

    The posterior mean E[x0 | x_t] is linear in x_t, which makes every diffusion identity
    checkable without a trained network.
    """

    def __init__(self, mu: np.ndarray, sigma0: float, schedule: NoiseSchedule):
        if not sigma0 > 0:
            raise DomainError(f"sigma0 must be positive, got {sigma0}.")
        self.mu = np.asarray(mu, dtype=np.float64)
        self.sigma0 = float(sigma0)
        self.schedule = schedule

    def posterior_mean(self, x_t: np.ndarray, t: int) -> np.ndarray:
        alpha = self.schedule.alpha(t)
        variance = self.sigma0**2
        return (variance * math.sqrt(alpha) * x_t + (1.0 - alpha) * self.mu) / (alpha * variance + 1.0 - alpha)

    def __call__(self, x_t: np.ndarray, t: int) -> np.ndarray:
        alpha = self.schedule.alpha(t)
        if alpha == 1.0:
            raise DomainError("The analytic denoiser is undefined at t=0, where no noise was added.")
        return (x_t - math.sqrt(alpha) * self.posterior_mean(x_t, t)) / math.sqrt(1.0 - alpha)


class OracleDenoiser:
    """Knows the clean sample and returns the noise that exactly explains x_t."""

    def __init__(self, x0: np.ndarray, schedule: NoiseSchedule):
        self.x0 = np.asarray(x0, dtype=np.float64)
        self.schedule = schedule

    def __call__(self, x_t: np.ndarray, t: int) -> np.ndarray:
        alpha = self.schedule.alpha(t)
        if alpha == 1.0:
            raise DomainError("The oracle denoiser is undefined at t=0, where no noise was added.")
        return (x_t - math.sqrt(alpha) * self.x0) / math.sqrt(1.0 - alpha)


def analytic_gaussian_denoiser(mu: np.ndarray, sigma0: float, schedule: NoiseSchedule) -> AnalyticGaussianDenoiser:
    return AnalyticGaussianDenoiser(mu=mu, sigma0=sigma0, schedule=schedule)
