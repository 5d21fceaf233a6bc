"""Sensing probability and intrusion density models."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import TWO_PI
from .quadrature import integrate_interval


@dataclass(frozen=True)
class SensingModel:
    """Detection probability f(d) of an agent at arc distance d, with df/dd."""

    detect_prob: Callable
    detect_prob_deriv: Callable
    gamma: float | None = None
    name: str = ""

    def __call__(self, d):
        return self.detect_prob(d)


def gaussian_model(gamma: float) -> SensingModel:
    """Gaussian detection falloff exp(-d^2 / gamma^2)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    g2 = float(gamma) ** 2

    def f(d):
        d = np.asarray(d, dtype=float)
        out = np.exp(-(d * d) / g2)
        return float(out) if out.ndim == 0 else out

    def df(d):
        d = np.asarray(d, dtype=float)
        out = (-2.0 * d / g2) * np.exp(-(d * d) / g2)
        return float(out) if out.ndim == 0 else out

    return SensingModel(f, df, gamma=float(gamma), name=f"gaussian(gamma={gamma})")


@dataclass(frozen=True)
class DensityModel:
    """Intrusion likelihood per radian of phase."""

    density: Callable
    normalized: bool = False
    name: str = ""
    quad_n: int = 4096

    def __post_init__(self):
        if self.normalized:
            total = integrate_interval(self.density, 0.0, 0.0, full_circle=True, n=self.quad_n)
            if abs(total - 1.0) > 1e-8:
                raise ValueError(f"density marked normalized but integrates to {total!r}")

    def __call__(self, theta):
        return self.density(theta)

    def total_mass(self) -> float:
        return integrate_interval(self.density, 0.0, 0.0, full_circle=True, n=self.quad_n)


def uniform_density() -> DensityModel:
    c = 1.0 / TWO_PI

    def rho(theta):
        theta = np.asarray(theta, dtype=float)
        out = np.full_like(theta, c)
        return float(out) if out.ndim == 0 else out

    return DensityModel(rho, normalized=True, name="uniform")


def linear_phase_density() -> DensityModel:
    """Density growing linearly with phase, theta / (2*pi^2); unit total mass."""
    c = 1.0 / (2.0 * math.pi ** 2)

    def rho(theta):
        theta = np.asarray(theta, dtype=float)
        out = theta * c
        return float(out) if out.ndim == 0 else out

    return DensityModel(rho, normalized=True, name="linear_phase")


def table_density(samples, normalized: bool = False) -> DensityModel:
    """Density from (theta, rho) samples with periodic linear interpolation."""
    from .geometry import wrap_phase

    pts = sorted((wrap_phase(float(t)), float(r)) for t, r in samples)
    if len(pts) < 2:
        raise ValueError("table density needs at least 2 samples")
    th = np.array([p[0] for p in pts])
    rr = np.array([p[1] for p in pts])
    if np.any(rr < 0.0):
        raise ValueError("density samples must be nonnegative")
    if np.any(np.diff(th) <= 0):
        raise ValueError("table density has duplicate phases")
    th_ext = np.concatenate((th, [th[0] + TWO_PI]))
    rr_ext = np.concatenate((rr, [rr[0]]))

    def rho(theta):
        tw = np.mod(np.asarray(theta, dtype=float) - th[0], TWO_PI) + th[0]
        out = np.interp(tw, th_ext, rr_ext)
        return float(out) if out.ndim == 0 else out

    return DensityModel(rho, normalized=normalized, name="table")


def segment_mass(density: DensityModel, seg_start: float, seg_end: float,
                 full_circle: bool = False, n: int = 1024) -> float:
    """Probability of intrusion through the ccw segment seg_start -> seg_end."""
    return integrate_interval(density.density, seg_start, seg_end,
                              full_circle=full_circle, n=n)
