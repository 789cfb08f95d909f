"""Adiabatic response: perturbed states, window-restricted current differences,
linear-response scans, time-ordered switching protocols, and the charge pump.

The almost-stationary state reached by adiabatically ramping the half-plane
potential is realized two ways at finite size: as the exact ground state of
H + eps * Lambda_1, and as the time-evolved state under a smooth switching
function.  Current differences are accumulated over a centered window and
reported as a series in the window radius; on an open finite lattice the full
sum vanishes identically (the return current flows along the edges), so the
bulk window carries the response.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conductance import one_body_current_kernels, switch_diagonal
from .errors import GaplessError, IntegrationError
from .fock import FockOperator, local_norm
from .interactions import Interaction, builtin, commutator_interaction, liouvillian
from .lattice import Lattice, center_of
from .spectral import FermiSea, GroundState, fermi_sea, ground_state

SQRT3 = math.sqrt(3.0)


# -- switching functions -------------------------------------------------------

def _bump(u):
    with np.errstate(over="ignore", under="ignore", divide="ignore"):
        return np.where((u > 0) & (u < 1),
                        np.exp(-1.0 / np.clip(u * (1.0 - u), 1e-300, None)), 0.0)


def _smoothstep(u):
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore", under="ignore", divide="ignore"):
        g = np.where(u > 0, np.exp(-1.0 / np.clip(u, 1e-300, None)), 0.0)
        gr = np.where(u < 1, np.exp(-1.0 / np.clip(1.0 - u, 1e-300, None)), 0.0)
    return g / (g + gr)


@dataclass(frozen=True)
class SwitchingFunction:
    """Smooth ramp profiles with derivative supported in [0, 1].

    kind "NE" rises from 0 to 1 (all derivatives vanish at the ends); kind
    "CP" is a pulse with f(0) = f(1) = 0 normalized to unit time integral.
    """

    kind: str

    _CP_NORM = None

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "NE":
            return _smoothstep(u)
        norm = SwitchingFunction._cp_norm()
        return _bump(u) / norm

    def __post_init__(self):
        if self.kind not in ("NE", "CP"):
            raise ValueError("switching kind must be NE or CP")

    @staticmethod
    def _cp_norm():
        if SwitchingFunction._CP_NORM is None:
            from scipy.integrate import quad
            val, _ = quad(lambda v: float(_bump(v)), 0.0, 1.0, epsabs=1e-14)
            SwitchingFunction._CP_NORM = val
        return SwitchingFunction._CP_NORM


NE_SWITCH = SwitchingFunction("NE")
CP_SWITCH = SwitchingFunction("CP")


# -- perturbed states -----------------------------------------------------------

def perturbed_state(H: Interaction, eps: float) -> GroundState:
    """Ground state of H + eps * Lambda_1 (gap re-verified, error if closed)."""
    if eps == 0.0:
        return ground_state(H)
    lam1 = builtin("LAMBDA", H.space, 1)
    return ground_state(H + lam1.scaled(eps))


def perturbed_sea(h: np.ndarray, lat: Lattice, eps: float, mu: float = 0.0) -> FermiSea:
    lam = switch_diagonal(lat, 1)
    return fermi_sea(h + eps * np.diag(lam), mu)


# -- current differences ----------------------------------------------------------

@dataclass
class CurrentDifference:
    value: float
    window_radius: int
    series: list          # [(R, value)]

    def to_dict(self):
        return {"value": self.value, "window_radius": self.window_radius,
                "series": [list(r) for r in self.series]}


def _windowed_sums(site_vals: dict, lat: Lattice, radii) -> list:
    out = []
    for r in radii:
        box = lat.box((0, 0), r)
        out.append((r, float(sum(site_vals.get(s, 0.0) for s in box))))
    return out


def delta_current_free(sea_eps: FermiSea, sea_0: FermiSea, h: np.ndarray,
                       lat: Lattice, R: int) -> CurrentDifference:
    """Windowed sum of per-site current differences, free engine."""
    kernels = one_body_current_kernels(h, lat, 2)
    d = sea_eps.projection - sea_0.projection
    site_vals = {x: float(np.real(sum(v * d[b, a] for a, b, v in kern)))
                 for x, kern in kernels.items()}
    series = _windowed_sums(site_vals, lat, range(1, R + 1))
    return CurrentDifference(series[-1][1], R, series)


def delta_current_mb(gs_eps: GroundState, gs_0: GroundState, H: Interaction,
                     R: int) -> CurrentDifference:
    lat = H.space.lat
    lam2 = builtin("LAMBDA", H.space, 2)
    J = commutator_interaction(H, lam2)
    site_vals = {}
    for x, op in J.local_terms().items():
        site_vals[x] = (gs_eps.expectation(op) - gs_0.expectation(op)).real
    series = _windowed_sums(site_vals, lat, range(1, R + 1))
    return CurrentDifference(series[-1][1], R, series)


# -- response scans ---------------------------------------------------------------

@dataclass
class ResponseScan:
    epsilons: np.ndarray
    delta_j: np.ndarray
    slope: float
    residuals: np.ndarray
    window_radius: int
    residual_exponent: float = math.inf
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "epsilons": self.epsilons.tolist(),
            "delta_j": self.delta_j.tolist(),
            "slope": self.slope,
            "residuals": self.residuals.tolist(),
            "window_radius": self.window_radius,
            "residual_exponent": self.residual_exponent,
        }


def _finish_scan(eps, djs, R, details) -> ResponseScan:
    eps = np.asarray(eps, dtype=float)
    djs = np.asarray(djs, dtype=float)
    nz = eps != 0.0
    slope = float(np.sum(eps[nz] * djs[nz]) / np.sum(eps[nz] ** 2)) if nz.any() else 0.0
    resid = djs - slope * eps
    floor = 1e-11 * max(1.0, float(np.max(np.abs(djs)))) + 1e-15
    mask = nz & (np.abs(resid) > floor)
    if mask.sum() >= 2:
        fit = np.polyfit(np.log(np.abs(eps[mask])), np.log(np.abs(resid[mask])), 1)
        exponent = float(fit[0])
    else:
        # residuals never rise above the numerical floor: superlinear smallness
        # is certified vacuously and the exponent reported as infinite
        exponent = math.inf
    details = dict(details)
    details["residual_floor"] = floor
    return ResponseScan(eps, djs, slope, resid, R, exponent, details)


def linear_response_scan_free(h: np.ndarray, lat: Lattice, eps_list, R: int,
                              mu: float = 0.0) -> ResponseScan:
    sea0 = fermi_sea(h, mu)
    djs = []
    series = {}
    for eps in eps_list:
        if eps == 0.0:
            djs.append(0.0)
            continue
        dc = delta_current_free(perturbed_sea(h, lat, eps, mu), sea0, h, lat, R)
        djs.append(dc.value)
        series[eps] = dc.series
    return _finish_scan(eps_list, djs, R, {"engine": "free", "series": series})


def linear_response_scan_mb(H: Interaction, eps_list, R: int) -> ResponseScan:
    gs0 = ground_state(H)
    djs = []
    for eps in eps_list:
        if eps == 0.0:
            djs.append(0.0)
            continue
        djs.append(delta_current_mb(perturbed_state(H, eps), gs0, H, R).value)
    return _finish_scan(eps_list, djs, R, {"engine": "many_body"})


# -- time-ordered propagation -------------------------------------------------------

def _apply_expmh(g, dt, psi):
    """exp(-i dt g) psi for hermitian g via diagonalization."""
    vals, vecs = np.linalg.eigh(g)
    return vecs @ (np.exp(-1j * dt * vals) * (vecs.conj().T @ psi))


def _cf4_step(psi, h0, v, coupling, t, dt):
    """Fourth-order commutator-free step for H(t) = h0 + coupling(t) * v."""
    c1 = t + dt * (0.5 - SQRT3 / 6.0)
    c2 = t + dt * (0.5 + SQRT3 / 6.0)
    f1 = coupling(c1)
    f2 = coupling(c2)
    a1 = 0.25 - SQRT3 / 6.0
    a2 = 0.25 + SQRT3 / 6.0
    g1 = h0 * (a1 + a2) + v * (a1 * f1 + a2 * f2)
    g2 = h0 * (a1 + a2) + v * (a2 * f1 + a1 * f2)
    psi = _apply_expmh(g2, dt, psi)
    psi = _apply_expmh(g1, dt, psi)
    return psi


def evolve_switched(h0: np.ndarray, v: np.ndarray, coupling, psi0: np.ndarray,
                    t_final: float, tol: float = 1e-10, dt0: float = None,
                    observables=None) -> dict:
    """Propagate under H(t) = h0 + coupling(t) v with adaptive CF4 steps.

    Local error is controlled by comparing one full step against two half
    steps; the step is rejected and halved when the estimate exceeds ``tol``.
    Optional observables (matrices) are sampled at every accepted step.
    """
    psi = psi0.astype(complex).copy()
    t = 0.0
    dt = dt0 if dt0 is not None else min(t_final / 50.0, 0.1)
    dt_min = t_final * 1e-9
    samples = {"t": [0.0]}
    if observables:
        for name, m in observables.items():
            samples[name] = [complex(psi.conj() @ (m @ psi))]
    n_accept = 0
    while t < t_final - 1e-14:
        dt = min(dt, t_final - t)
        full = _cf4_step(psi, h0, v, coupling, t, dt)
        half = _cf4_step(psi, h0, v, coupling, t, dt / 2.0)
        half = _cf4_step(half, h0, v, coupling, t + dt / 2.0, dt / 2.0)
        err = float(np.linalg.norm(full - half))
        if err > tol and dt > dt_min:
            dt *= 0.5
            continue
        psi = half
        t += dt
        n_accept += 1
        if observables:
            samples["t"].append(t)
            for name, m in observables.items():
                samples[name].append(complex(psi.conj() @ (m @ psi)))
        if err < tol / 64.0:
            dt *= 2.0
        if dt < dt_min:
            raise IntegrationError(f"step size underflow at t={t}")
    psi /= np.linalg.norm(psi)
    return {"psi": psi, "t": t, "steps": n_accept, "samples": samples}


def adiabatic_evolve(H: Interaction, eps: float, eta: float,
                     f: SwitchingFunction = NE_SWITCH, t_final: float = None,
                     tol: float = 1e-10, observables=None) -> dict:
    """Evolve the ground state of H under H + eps f(eta t) Lambda_1.

    Returns the final vector, diagnostics, and (for eps = 0) the energy drift,
    which must vanish to integrator accuracy.
    """
    if t_final is None:
        t_final = 1.0 / eta
    gs = ground_state(H, keep_spectrum=False)
    h0 = H.total().dense_matrix()
    v = builtin("LAMBDA", H.space, 1).total().dense_matrix()
    out = evolve_switched(h0, v, lambda t: eps * float(f(eta * t)), gs.vector,
                          t_final, tol=tol, observables=observables)
    e0 = gs.energy
    e_final = float(np.real(out["psi"].conj() @ (h0 @ out["psi"])))
    out["energy_drift"] = abs(e_final - e0) if eps == 0.0 else None
    out["initial"] = gs
    return out


def state_fidelity(psi: np.ndarray, phi: np.ndarray) -> float:
    return float(abs(np.vdot(psi, phi)) ** 2)


def charge_pump(H: Interaction, eps: float, R: int,
                f: SwitchingFunction = CP_SWITCH, tol: float = 1e-10) -> dict:
    """Transported window charge over one pump cycle at eta = eps."""
    if eps == 0.0:
        return {"delta_q": 0.0, "trace": None, "steps": 0, "window_radius": R}
    lat = H.space.lat
    lam2 = builtin("LAMBDA", H.space, 2)
    box = set(lat.box((0, 0), R).sites)
    charge = None
    for region, op in lam2.terms():
        if region.sites[0] in box:
            charge = op if charge is None else charge + op
    mat = charge.dense_matrix() if charge is not None else None
    out = adiabatic_evolve(H, eps, eps, f=f, tol=tol,
                           observables={"Q": mat} if mat is not None else None)
    q = np.array(out["samples"]["Q"]).real
    return {"delta_q": float(q[-1] - q[0]), "trace": out["samples"],
            "steps": out["steps"], "window_radius": R}


# -- stationarity diagnostic -----------------------------------------------------

def neass_residual(vector: np.ndarray, H_eps: Interaction, samples,
                   nu: int = 6) -> float:
    """max over samples of |<psi| [H_eps, A] |psi>| / ||A||_{nu, x}.

    x is taken as the center of each sample's support.  Exact eigenstates give
    values at diagonalization accuracy; adiabatically prepared states measure
    the quality of the almost-stationary state.
    """
    worst = 0.0
    for A in samples:
        la = liouvillian(H_eps, A)
        num = abs(complex(vector.conj() @ (la.matrix @ vector)))
        x = center_of(A.support)
        den = local_norm(A, nu, x)
        worst = max(worst, num / den)
    return worst
