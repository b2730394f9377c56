"""Constitutive laws: orthotropic elasticity, fiber tensile damage, and the
bilinear mixed-mode cohesive law with B-K toughness interpolation.

Units are mm / N / MPa / s throughout; energies per area are N/mm.
Scalar reference implementations are pure (state in, state out); the *Batch
classes are the vectorized twins the explicit solver drives.  Both paths share
the same formulas and are cross-checked in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


class MaterialError(ValueError):
    pass


# ---------------------------------------------------------------------------
# elasticity


def orthotropic_stiffness(e11, e22, e33, g12, g13, g23, nu12, nu13, nu23):
    """6x6 stiffness in Voigt order (11, 22, 33, 12, 13, 23) for the material
    frame with the fiber along axis 1.  Raises if not positive definite."""
    s = np.zeros((6, 6))
    s[0, 0] = 1.0 / e11
    s[1, 1] = 1.0 / e22
    s[2, 2] = 1.0 / e33
    s[0, 1] = s[1, 0] = -nu12 / e11
    s[0, 2] = s[2, 0] = -nu13 / e11
    s[1, 2] = s[2, 1] = -nu23 / e22
    s[3, 3] = 1.0 / g12
    s[4, 4] = 1.0 / g13
    s[5, 5] = 1.0 / g23
    try:
        c = np.linalg.inv(s)
    except np.linalg.LinAlgError as exc:
        raise MaterialError("singular compliance matrix") from exc
    eig = np.linalg.eigvalsh(0.5 * (c + c.T))
    if eig.min() <= 0.0:
        raise MaterialError(f"stiffness not positive definite (min eig {eig.min():g})")
    return 0.5 * (c + c.T)


def rotate_stiffness_z(c, angle_deg: float):
    """Rotate a Voigt stiffness about the 3-axis by angle_deg (1->global x)."""
    m = math.cos(math.radians(angle_deg))
    n = math.sin(math.radians(angle_deg))
    # Reuter-free transformation matrix for Voigt order 11,22,33,12,13,23
    t = np.array([
        [m * m, n * n, 0.0, -2 * m * n, 0.0, 0.0],
        [n * n, m * m, 0.0, 2 * m * n, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        [m * n, -m * n, 0.0, m * m - n * n, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, m, -n],
        [0.0, 0.0, 0.0, 0.0, n, m],
    ])
    # global strain -> material strain uses the inverse; C_g = T^-1 C T^-T
    # with the energy-consistent form below (t maps material->global stress)
    return t @ c @ t.T


# ---------------------------------------------------------------------------
# strength reduction (coarse-mesh cohesive strength adjustment)


def reduced_strength(modulus, toughness, n_elements, element_size,
                     exact_prefactor: bool = False) -> float:
    """Cohesive strength compatible with resolving the process zone over
    n_elements of the given size: sqrt(E Gc / (Ne le)), or with the
    9 pi / 32 prefactor when exact_prefactor is set."""
    if n_elements < 1 or element_size <= 0.0:
        raise MaterialError("need n_elements >= 1 and element_size > 0")
    base = modulus * toughness / (n_elements * element_size)
    if exact_prefactor:
        base *= 9.0 * math.pi / 32.0
    return math.sqrt(base)


def bk_toughness(g1c: float, g2c: float, eta: float, mixity: float) -> float:
    """Benzeggagh-Kenane: G_C = G_IC + (G_IIC - G_IC) * B^eta, B in [0, 1]."""
    if not 0.0 <= mixity <= 1.0:
        raise MaterialError(f"mode mixity {mixity} outside [0, 1]")
    if mixity == 0.0:
        return g1c  # avoid 0**eta edge for eta == 0
    return g1c + (g2c - g1c) * mixity ** eta


# ---------------------------------------------------------------------------
# fiber tensile damage (yarn cracklets)


@dataclass(frozen=True)
class FiberLawParams:
    e11: float            # MPa
    onset_strain: float   # strain at sigma11 = S11
    ultimate_strain: float

    def __post_init__(self):
        if not 0.0 < self.onset_strain < self.ultimate_strain:
            raise MaterialError("need 0 < onset_strain < ultimate_strain")


@dataclass(frozen=True)
class FiberState:
    max_strain: float = 0.0
    damage: float = 0.0


def fiber_damage(eps_max: float, p: FiberLawParams) -> float:
    if eps_max <= p.onset_strain:
        return 0.0
    if eps_max >= p.ultimate_strain:
        return 1.0
    e0, eu = p.onset_strain, p.ultimate_strain
    return eu * (eps_max - e0) / (eps_max * (eu - e0))


def fiber_response(state: FiberState, strain: float, p: FiberLawParams):
    """(stress, new state).  Tension drives damage; compression never
    initiates, but existing damage degrades the modulus either way."""
    eps_max = max(state.max_strain, strain)
    d = max(state.damage, fiber_damage(eps_max, p))
    return (1.0 - d) * p.e11 * strain, FiberState(eps_max, d)


# ---------------------------------------------------------------------------
# bilinear mixed-mode cohesive law (matrix + delamination cracklets)


@dataclass(frozen=True)
class CohesiveParams:
    kn: float    # N/mm^3 penalty, normal
    ks: float    # shear (sliding)
    kt: float    # shear (tearing)
    tn: float    # MPa strengths (already reduced if applicable)
    ts: float
    tt: float
    g1c: float   # N/mm
    g2c: float
    eta: float

    def __post_init__(self):
        for name in ("kn", "ks", "kt", "tn", "ts", "tt", "g1c", "g2c"):
            if getattr(self, name) <= 0.0:
                raise MaterialError(f"{name} must be positive")


@dataclass(frozen=True)
class CohesiveState:
    initiated: bool = False
    delta0: float = 0.0     # effective separation at initiation
    tau0: float = 0.0       # effective traction at initiation
    delta_max: float = 0.0  # peak effective separation seen
    damage: float = 0.0
    dissipated: float = 0.0  # N/mm, work minus recoverable
    work: float = 0.0        # running external work per area
    prev: tuple = (0.0, 0.0, 0.0)
    prev_traction: tuple = (0.0, 0.0, 0.0)


def _effective(delta):
    dn, ds, dt = delta
    return math.sqrt(max(dn, 0.0) ** 2 + ds * ds + dt * dt)


def _mixity(delta, p: CohesiveParams) -> float:
    dn, ds, dt = delta
    gn = 0.5 * p.kn * max(dn, 0.0) ** 2
    gs = 0.5 * (p.ks * ds * ds + p.kt * dt * dt)
    tot = gn + gs
    return gs / tot if tot > 0.0 else 0.0


def cohesive_response(state: CohesiveState, delta, p: CohesiveParams):
    """(traction (3,), new state) for one separation increment.

    Quadratic traction initiation, linear softening in effective separation,
    B-K critical energy at the current mode mixity.  Compression keeps the
    full normal penalty.  Initiation is located exactly by scaling back along
    the (locally proportional) loading ray, so the peak traction does not
    overshoot with finite steps.
    """
    dn, ds, dt = delta
    tn_trial = p.kn * dn
    ts_trial = p.ks * ds
    tt_trial = p.kt * dt

    f = (max(tn_trial, 0.0) / p.tn) ** 2 + (ts_trial / p.ts) ** 2 + (tt_trial / p.tt) ** 2
    initiated = state.initiated
    delta0, tau0 = state.delta0, state.tau0
    if not initiated and f >= 1.0:
        scale = 1.0 / math.sqrt(f)
        delta0 = _effective(delta) * scale
        tau0 = math.sqrt(max(tn_trial, 0.0) ** 2 + ts_trial ** 2 + tt_trial ** 2) * scale
        initiated = True

    dm = _effective(delta)
    delta_max = max(state.delta_max, dm)
    damage = state.damage
    if initiated and delta_max > delta0 > 0.0:
        gc = bk_toughness(p.g1c, p.g2c, p.eta, _mixity(delta, p))
        delta_f = 2.0 * gc / tau0
        if delta_f <= delta0:
            damage = 1.0
        else:
            d_new = delta_f * (delta_max - delta0) / (delta_max * (delta_f - delta0))
            damage = min(1.0, max(damage, d_new))

    tn = p.kn * dn if dn < 0.0 else (1.0 - damage) * p.kn * dn
    traction = (tn, (1.0 - damage) * p.ks * ds, (1.0 - damage) * p.kt * dt)

    # trapezoidal external work, minus currently recoverable energy
    work = state.work
    for i in range(3):
        work += 0.5 * (state.prev_traction[i] + traction[i]) * (delta[i] - state.prev[i])
    stored = 0.5 * (1.0 - damage) * (p.kn * max(dn, 0.0) ** 2 + p.ks * ds * ds + p.kt * dt * dt)
    if dn < 0.0:
        stored += 0.5 * p.kn * dn * dn
    dissipated = max(state.dissipated, work - stored)

    new = CohesiveState(initiated, delta0, tau0, delta_max, damage,
                        dissipated, work, tuple(delta), traction)
    return traction, new


# ---------------------------------------------------------------------------
# vectorized twins


class CohesiveBatch:
    """Array-of-states version of cohesive_response for the solver."""

    def __init__(self, n: int, p: CohesiveParams):
        self.p = p
        self.initiated = np.zeros(n, dtype=bool)
        self.delta0 = np.zeros(n)
        self.tau0 = np.zeros(n)
        self.delta_max = np.zeros(n)
        self.damage = np.zeros(n)
        self.work = np.zeros(n)
        self.dissipated = np.zeros(n)
        self.prev = np.zeros((n, 3))
        self.prev_traction = np.zeros((n, 3))

    def update(self, delta: np.ndarray) -> np.ndarray:
        p = self.p
        dn, ds, dt = delta[:, 0], delta[:, 1], delta[:, 2]
        dn_pos = np.maximum(dn, 0.0)

        f = (p.kn * dn_pos / p.tn) ** 2 + (p.ks * ds / p.ts) ** 2 + (p.kt * dt / p.tt) ** 2
        dm = np.sqrt(dn_pos ** 2 + ds ** 2 + dt ** 2)
        tau_trial = np.sqrt((p.kn * dn_pos) ** 2 + (p.ks * ds) ** 2 + (p.kt * dt) ** 2)

        fresh = (~self.initiated) & (f >= 1.0)
        if np.any(fresh):
            scale = 1.0 / np.sqrt(f[fresh])
            self.delta0[fresh] = dm[fresh] * scale
            self.tau0[fresh] = tau_trial[fresh] * scale
            self.initiated[fresh] = True

        np.maximum(self.delta_max, dm, out=self.delta_max)

        gn = 0.5 * p.kn * dn_pos ** 2
        gs = 0.5 * (p.ks * ds ** 2 + p.kt * dt ** 2)
        tot = gn + gs
        mixity = np.divide(gs, tot, out=np.zeros_like(tot), where=tot > 0.0)
        gc = np.where(mixity > 0.0, p.g1c + (p.g2c - p.g1c) * mixity ** p.eta, p.g1c)

        act = self.initiated & (self.delta_max > self.delta0) & (self.delta0 > 0.0)
        if np.any(act):
            delta_f = 2.0 * gc[act] / self.tau0[act]
            d0 = self.delta0[act]
            dmax = self.delta_max[act]
            span = delta_f - d0
            d_new = np.where(span <= 0.0, 1.0, delta_f * (dmax - d0) / (dmax * np.where(span <= 0.0, 1.0, span)))
            self.damage[act] = np.minimum(1.0, np.maximum(self.damage[act], d_new))

        soft = 1.0 - self.damage
        traction = np.empty_like(delta)
        traction[:, 0] = np.where(dn < 0.0, p.kn * dn, soft * p.kn * dn)
        traction[:, 1] = soft * p.ks * ds
        traction[:, 2] = soft * p.kt * dt

        self.work += 0.5 * np.sum((self.prev_traction + traction) * (delta - self.prev), axis=1)
        stored = 0.5 * soft * (p.kn * dn_pos ** 2 + p.ks * ds ** 2 + p.kt * dt ** 2)
        stored = stored + np.where(dn < 0.0, 0.5 * p.kn * dn ** 2, 0.0)
        np.maximum(self.dissipated, self.work - stored, out=self.dissipated)
        self.stored = stored

        self.prev[:] = delta
        self.prev_traction[:] = traction
        return traction


class FiberBatch:
    """Vectorized yarn-cracklet law: separation-as-strain against the nominal
    1 mm thickness, full stiffness scaled by (1 - D)."""

    NOMINAL_THICKNESS = 1.0  # mm

    def __init__(self, n: int, p: FiberLawParams, g12: float, g13: float):
        self.p = p
        self.k = np.array([p.e11, g12, g13]) / self.NOMINAL_THICKNESS
        self.max_strain = np.zeros(n)
        self.damage = np.zeros(n)
        self.work = np.zeros(n)
        self.dissipated = np.zeros(n)
        self.prev = np.zeros((n, 3))
        self.prev_traction = np.zeros((n, 3))

    def update(self, delta: np.ndarray) -> np.ndarray:
        p = self.p
        eps = delta[:, 0] / self.NOMINAL_THICKNESS
        np.maximum(self.max_strain, eps, out=self.max_strain)

        e0, eu = p.onset_strain, p.ultimate_strain
        em = self.max_strain
        with np.errstate(divide="ignore", invalid="ignore"):
            d = eu * (em - e0) / (em * (eu - e0))
        d = np.where(em <= e0, 0.0, np.where(em >= eu, 1.0, d))
        np.maximum(self.damage, np.clip(d, 0.0, 1.0), out=self.damage)

        traction = (1.0 - self.damage)[:, None] * self.k[None, :] * delta

        self.work += 0.5 * np.sum((self.prev_traction + traction) * (delta - self.prev), axis=1)
        stored = 0.5 * np.sum(traction * delta, axis=1)
        np.maximum(self.dissipated, self.work - stored, out=self.dissipated)
        self.stored = stored

        self.prev[:] = delta
        self.prev_traction[:] = traction
        return traction
