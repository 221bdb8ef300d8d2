"""Frequency-domain equation of motion and regular-wave power.

Per frequency the farm motion solves

    [-omega^2 (M + A) + G + K_pto + i omega (B + B_pto)] xi = F_e

with M, G, K_pto, B_pto diagonal and A, B the composed farm matrices.
Time-average absorbed power per device is the Hermitian form
0.5 omega^2 B_pto |xi|^2, real and non-negative for B_pto >= 0.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .hydro import NumericalError

PTO_STIFFNESS_BOUNDS = (-5e5, 5e5)
PTO_DAMPING_BOUNDS = (0.0, 5e5)


@dataclass
class PtoSettings:
    """Linear spring-damper power take-off, uniform or per-device."""

    stiffness: np.ndarray
    damping: np.ndarray
    mode: str = "farm-uniform"

    def __post_init__(self):
        self.stiffness = np.atleast_1d(np.asarray(self.stiffness, dtype=np.float64))
        self.damping = np.atleast_1d(np.asarray(self.damping, dtype=np.float64))
        if self.mode not in ("farm-uniform", "per-device"):
            raise ValueError(f"unknown pto mode {self.mode!r}")
        lo, hi = PTO_STIFFNESS_BOUNDS
        if np.any(self.stiffness < lo) or np.any(self.stiffness > hi):
            raise ValueError("pto stiffness outside its design bounds")
        lo, hi = PTO_DAMPING_BOUNDS
        if np.any(self.damping < lo) or np.any(self.damping > hi):
            raise ValueError("pto damping outside its design bounds")
        if self.mode == "farm-uniform":
            if np.unique(self.stiffness).size > 1 or np.unique(self.damping).size > 1:
                raise ValueError("farm-uniform pto requires identical entries")

    def arrays_for(self, n_devices):
        k = self.stiffness
        b = self.damping
        if k.size == 1:
            k = np.full(n_devices, k[0])
        if b.size == 1:
            b = np.full(n_devices, b[0])
        if k.size != n_devices or b.size != n_devices:
            raise ValueError("pto dimensions do not match the device count")
        return k, b


@dataclass
class FarmResponse:
    grid: object
    motion: np.ndarray
    power_regular: np.ndarray


def body_mass(geom, env):
    """Displaced-water mass of the half-submerged cylinder, rho pi R^2 D."""
    return env.water_density * np.pi * geom.radius**2 * geom.draft


def hydrostatic_coefficient(geom, env):
    """Waterplane stiffness G = rho g pi R^2."""
    return env.water_density * env.gravity * np.pi * geom.radius**2


def solve_motion(coeffs, geom, pto, env):
    """Complex heave amplitudes per metre of wave amplitude.

    Assembles the impedance matrix at every grid frequency and solves
    the dense complex systems in one batch. The residual of every solve
    is checked against 1e-9 ``|F_e|``; a singular system is reported
    with its frequency.
    """
    om = coeffs.grid.values
    n_wec = coeffs.n_devices
    k_pto, b_pto = pto.arrays_for(n_wec)
    m = body_mass(geom, env)
    g_hs = hydrostatic_coefficient(geom, env)

    diag = np.zeros((om.size, n_wec, n_wec))
    idx = np.arange(n_wec)
    diag[:, idx, idx] = g_hs + k_pto[None, :] - om[:, None] ** 2 * m
    lhs = (
        diag
        - om[:, None, None] ** 2 * coeffs.added_mass
        + 1j * om[:, None, None] * coeffs.damping
    )
    lhs[:, idx, idx] += 1j * om[:, None] * b_pto[None, :]

    try:
        motion = kernels.solve_batch(lhs, coeffs.excitation)
    except np.linalg.LinAlgError:
        motion = _solve_identifying_failure(lhs, coeffs.excitation, om)
    resid = np.abs(np.einsum("kij,kj->ki", lhs, motion) - coeffs.excitation)
    bad = resid.max(axis=1) > 1e-9 * np.maximum(
        np.abs(coeffs.excitation).max(axis=1), 1e-300
    )
    if bad.any():
        raise NumericalError(
            f"motion solve residual too large at omega={om[np.argmax(bad)]:.6g}"
        )
    power = 0.5 * om[:, None] ** 2 * b_pto[None, :] * np.abs(motion) ** 2
    return FarmResponse(grid=coeffs.grid, motion=motion, power_regular=power)


def _solve_identifying_failure(lhs, rhs, om):
    out = np.empty_like(rhs)
    for j in range(om.size):
        try:
            out[j] = np.linalg.solve(lhs[j], rhs[j])
        except np.linalg.LinAlgError:
            raise NumericalError(f"singular system matrix at omega={om[j]:.6g}")
    return out


def regular_wave_power(response, pto):
    """Per-device and summed farm power, 0.5 omega^2 B_pto |xi|^2.

    Returns
    -------
    per_device : (n_omega, N) array [W per m^2 amplitude]
    farm_total : (n_omega,) array
    """
    om = response.grid.values
    n_wec = response.motion.shape[1]
    _, b_pto = pto.arrays_for(n_wec)
    per_device = 0.5 * om[:, None] ** 2 * b_pto[None, :] * np.abs(response.motion) ** 2
    return per_device, per_device.sum(axis=1)
