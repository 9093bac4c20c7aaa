"""Stern-Gerlach measurement on a spin-1/2 (y, z) wavepacket.

The atom is a two-component spinor on a periodic ``N x N`` grid over the
(y, z) plane; motion along x only carries the atom to the screen and is
replaced by binning the momentum distribution at ``t = tau``.  The
Hamiltonian is kinetic energy plus ``(mu/2) B(y, z) . sigma`` with

    ideal       B = (0, 0, a - b z)
    corrected   B = (0, b y, a - b z)          (divergence free)
    quadrupole  B = (0, b y, -b z)             (corrected with a = 0)

Units are natural: hbar = 1.  Time stepping is Strang splitting, half a
kinetic step in momentum space, the exact 2x2 spin rotation per grid point,
then the other half kinetic step.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import operators as ops
from .errors import NumericalGuardError, ValidationError
from .nonideality import StochasticMatrix, check_stochastic
from .operators import SX, SY, SZ, BivariateEffectSet, EffectSet
from .premeasurement import ProbabilityRecord, fit_effects

VARIANTS = ("ideal", "corrected", "quadrupole")
SPINS = {
    "z+": np.array([1, 0], dtype=complex),
    "z-": np.array([0, 1], dtype=complex),
    "x+": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "x-": np.array([1, -1], dtype=complex) / np.sqrt(2),
    "y+": np.array([1, 1j], dtype=complex) / np.sqrt(2),
    "y-": np.array([1, -1j], dtype=complex) / np.sqrt(2),
}
# fixed non-symmetric reference spinor for conservation checks
GENERIC_SPIN = np.array([np.cos(0.6), np.exp(0.7j) * np.sin(0.6)])

MAX_PHASE_PER_STEP = np.pi / 4
AUTO_PHASE_PER_STEP = np.pi / 8


@dataclass(frozen=True)
class SgParams:
    """Field, packet and grid parameters (hbar = 1).

    ``H = P^2/(2m) + (mu/2) B.sigma`` with ``B = (0, 0, a - b z)`` (ideal),
    ``(0, b y, a - b z)`` (corrected) or the corrected field at ``a = 0``
    (quadrupole).  ``Lx - sigma_x/2`` is conserved by the corrected field
    only when ``a = 0``, hence the default.  The grid covers
    ``[-extent, extent)`` in both directions.
    """

    a: float = 0.0
    b: float = 4.0
    mu: float = 1.0
    m: float = 1.0
    tau: float = 2.0
    grid_n: int = 128
    extent: float = 20.0
    packet_width: float = 1.0
    steps: int | None = None  # None: smallest count keeping the spin phase/step <= pi/8
    variant: str = "ideal"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValidationError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        n = int(self.grid_n)
        if n < 16 or n & (n - 1):
            raise ValidationError("grid_n must be a power of two >= 16")
        if self.extent <= 0 or self.tau <= 0 or self.m <= 0 or self.packet_width <= 0:
            raise ValidationError("extent, tau, m and packet_width must be positive")
        if self.packet_width > self.extent / 8:
            raise ValidationError("packet_width must be at most extent/8")
        if self.steps is not None and int(self.steps) < 1:
            raise ValidationError("steps must be >= 1")

    @property
    def field_offset(self) -> float:
        return 0.0 if self.variant == "quadrupole" else self.a

    def with_(self, **kw) -> "SgParams":
        return replace(self, **kw)

    def resolved_steps(self) -> int:
        if self.steps is not None:
            return int(self.steps)
        vmax = float(np.max(_field_strength(self, *Grid(self).mesh())))
        return max(1, math.ceil(vmax * self.tau / AUTO_PHASE_PER_STEP))


def load_params(path, **overrides) -> SgParams:
    """Read parameters from a JSON object or ``key = value`` lines.

    Unknown keys raise ``ValidationError``; ``overrides`` win over the file.
    """
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
        if not isinstance(raw, dict):
            raise ValidationError("JSON config must be an object")
    except json.JSONDecodeError:
        raw = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"cannot parse config line {line!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            raw[k] = v
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return params_from_mapping(raw)


_ALIASES = {"gridN": "grid_n", "packetWidth": "packet_width"}


def params_from_mapping(raw: dict) -> SgParams:
    known = {f.name: f for f in fields(SgParams)}
    kw = {}
    for key, val in raw.items():
        key = _ALIASES.get(key, key)
        if key not in known:
            raise ValidationError(f"unknown parameter {key!r}")
        if key == "variant":
            kw[key] = str(val)
        elif key in ("grid_n", "steps"):
            kw[key] = None if val in (None, "", "auto", "null") else int(val)
        else:
            kw[key] = float(val)
    return SgParams(**kw)


def params_to_dict(params: SgParams) -> dict:
    return asdict(params)


class Grid:
    """Periodic (y, z) grid with matching FFT momenta."""

    def __init__(self, params: SgParams):
        n, L = int(params.grid_n), float(params.extent)
        self.n = n
        self.dx = 2 * L / n
        self.x = -L + self.dx * np.arange(n)
        self.k = 2 * np.pi * np.fft.fftfreq(n, d=self.dx)
        self.cell = self.dx * self.dx

    def mesh(self):
        return np.meshgrid(self.x, self.x, indexing="ij")

    def kmesh(self):
        return np.meshgrid(self.k, self.k, indexing="ij")


@dataclass(frozen=True, eq=False)
class GridState:
    """Spinor wavefunction ``psi[s, iy, iz]`` on the grid, s = (+, -) of sigma_z."""

    psi: np.ndarray
    params: SgParams
    time: float = 0.0

    def __post_init__(self):
        psi = np.array(self.psi, dtype=complex)
        n = self.params.grid_n
        if psi.shape != (2, n, n):
            raise ValidationError(f"psi must have shape (2, {n}, {n})")
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)

    @property
    def grid(self) -> Grid:
        return Grid(self.params)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.cell)

    def spin_density(self) -> np.ndarray:
        """Reduced 2x2 spin density operator (spatial part traced out)."""
        flat = self.psi.reshape(2, -1)
        return flat @ flat.conj().T * self.grid.cell

    def spin_expectations(self) -> np.ndarray:
        rho = self.spin_density()
        return np.array([ops.expectation(s, rho) for s in (SX, SY, SZ)])

    def momentum_density(self) -> np.ndarray:
        """``|psi~(ky, kz)|^2`` summed over spin, normalized to total mass 1."""
        pk = np.fft.fft2(self.psi, norm="ortho")
        dens = np.sum(np.abs(pk) ** 2, axis=0)
        return dens / dens.sum()

    def momentum_expectations(self) -> np.ndarray:
        g = self.grid
        dens = self.momentum_density()
        ky, kz = g.kmesh()
        return np.array([np.sum(dens * ky), np.sum(dens * kz)])

    def lx_expectation(self) -> float:
        """``<Y P_z - Z P_y>`` with spectral derivatives."""
        g = self.grid
        y, z = g.mesh()
        ky, kz = g.kmesh()
        pk = np.fft.fft2(self.psi)
        dz = np.fft.ifft2(kz * pk)
        dy = np.fft.ifft2(ky * pk)
        val = np.sum(np.conj(self.psi) * (y * dz - z * dy)) * g.cell
        return float(val.real)


def build_initial_state(params: SgParams, spin) -> GridState:
    """Zero-mean-momentum Gaussian packet at the origin times ``spin``.

    ``spin`` is a normalized 2-vector or a key of :data:`SPINS`.  The
    position density has standard deviation ``packet_width`` per axis.
    """
    spin = ops.ket(SPINS[spin] if isinstance(spin, str) else spin)
    if spin.size != 2:
        raise ValidationError("spin state must have two components")
    g = Grid(params)
    y, z = g.mesh()
    w = params.packet_width
    phi = np.exp(-(y ** 2 + z ** 2) / (4 * w * w))
    phi /= np.sqrt(np.sum(phi ** 2) * g.cell)
    return GridState(spin[:, None, None] * phi[None], params)


def _field(params: SgParams, y, z):
    """Coefficients (v_y, v_z) of the spin potential ``v_y sigma_y + v_z sigma_z``."""
    half = 0.5 * params.mu
    vz = half * (params.field_offset - params.b * z)
    if params.variant == "ideal":
        vy = np.zeros_like(y)
    else:
        vy = half * params.b * y
    return vy, vz


def _field_strength(params: SgParams, y, z):
    vy, vz = _field(params, y, z)
    return np.hypot(vy, vz)


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    py: np.ndarray
    pz: np.ndarray
    sigma: np.ndarray  # shape (len(t), 3): <sx>, <sy>, <sz>
    norm: np.ndarray


def evolve_sg(state: GridState, params: SgParams | None = None, record: bool = False):
    """Propagate ``state`` to ``t = tau``.

    Returns the final :class:`GridState`, or ``(state, Trajectory)`` when
    ``record`` is set.  Raises ``NumericalGuardError`` if the spin rotation
    angle per step anywhere on the grid exceeds pi/4.
    """
    params = state.params if params is None else params
    g = Grid(params)
    steps = params.resolved_steps()
    dt = params.tau / steps
    y, z = g.mesh()
    vy, vz = _field(params, y, z)
    vmag = np.hypot(vy, vz)
    if float(np.max(vmag)) * dt > MAX_PHASE_PER_STEP:
        raise NumericalGuardError(
            f"spin phase per step {np.max(vmag) * dt:.3g} exceeds pi/4; increase steps")
    # exp(-i dt (vy sy + vz sz)) = c I - i (dt sinc) (vy sy + vz sz)
    c = np.cos(vmag * dt)
    s = dt * np.sinc(vmag * dt / np.pi)
    ky, kz = g.kmesh()
    half_kin = np.exp(-0.25j * dt * (ky ** 2 + kz ** 2) / params.m)

    psi = np.array(state.psi)
    rec = [] if record else None

    def observe(pk, t):
        dens = np.sum(np.abs(pk) ** 2, axis=0)
        tot = dens.sum()
        flat = psi.reshape(2, -1)
        rho = flat @ flat.conj().T
        rho = rho / np.trace(rho).real
        rec.append((t, np.sum(dens * ky) / tot, np.sum(dens * kz) / tot,
                    [ops.expectation(S, rho) for S in (SX, SY, SZ)], tot * g.cell))

    if record:
        observe(np.fft.fft2(psi, norm="ortho"), state.time)
    for n in range(steps):
        pk = np.fft.fft2(psi) * half_kin
        psi = np.fft.ifft2(pk)
        up, dn = psi[0], psi[1]
        # (vy sy + vz sz) psi = (vz up - i vy dn, i vy up - vz dn)
        new_up = c * up - 1j * s * (vz * up - 1j * vy * dn)
        new_dn = c * dn - 1j * s * (1j * vy * up - vz * dn)
        psi = np.stack([new_up, new_dn])
        pk = np.fft.fft2(psi) * half_kin
        psi = np.fft.ifft2(pk)
        if record:
            observe(pk / g.n, state.time + (n + 1) * dt)
    out = GridState(psi, params, state.time + params.tau)
    if not record:
        return out
    t, py, pz, sig, nrm = zip(*rec)
    return out, Trajectory(np.array(t), np.array(py), np.array(pz), np.array(sig), np.array(nrm))


def _sign_weights(k: np.ndarray) -> np.ndarray:
    """Weight of each momentum in the positive bin; the zero line counts half."""
    return np.where(k > 0, 1.0, np.where(k == 0, 0.5, 0.0))


UNIVARIATE_LABELS = ("pz>0", "pz<0")
ROW_LABELS = ("py>0", "py<0")


def readout_momentum_bins(state: GridState, variant: str | None = None) -> ProbabilityRecord:
    """Screen statistics from the momentum distribution.

    Univariate variants give ``(pz>0, pz<0)`` (upper/lower screen half).
    The quadrupole variant gives the four joint sign bins in row-major
    order ``(py>0, pz>0), (py>0, pz<0), (py<0, pz>0), (py<0, pz<0)``.
    """
    variant = state.params.variant if variant is None else variant
    dens = state.momentum_density()
    k = state.grid.k
    wz = _sign_weights(k)
    if variant != "quadrupole":
        up = float(np.sum(dens * wz[None, :]))
        return ProbabilityRecord(UNIVARIATE_LABELS, [up, 1.0 - up])
    wy = _sign_weights(k)
    rows = np.stack([wy, 1 - wy])
    cols = np.stack([wz, 1 - wz])
    joint = np.einsum("ay,yz,bz->ab", rows, dens, cols)
    joint = joint / joint.sum()
    labels = [f"{r},{c}" for r in ROW_LABELS for c in UNIVARIATE_LABELS]
    return ProbabilityRecord(labels, joint.ravel())


def run(params: SgParams, spin="z+") -> ProbabilityRecord:
    """Prepare, evolve and read out one spin input."""
    return readout_momentum_bins(evolve_sg(build_initial_state(params, spin), params))


def calibrate(params: SgParams) -> StochasticMatrix:
    """Nonideality matrix from the two sigma_z eigenstate inputs.

    Column ``k'`` holds the screen statistics for input ``|z k'>``.
    """
    if params.variant == "quadrupole":
        raise ValidationError("calibration is defined for the univariate variants")
    cols = [run(params, s).probabilities for s in ("z+", "z-")]
    return check_stochastic(np.column_stack(cols))


def spin_probe_table(params: SgParams, probes=("z+", "z-", "x+", "y+")):
    """Run each probe spinor; returns (probe density operators, probability rows, labels)."""
    rhos, rows, labels = [], [], None
    for p in probes:
        vec = SPINS[p] if isinstance(p, str) else np.asarray(p, dtype=complex)
        rec = run(params, vec)
        rhos.append(np.outer(vec, vec.conj()))
        rows.append(rec.probabilities)
        labels = rec.labels
    return np.array(rhos), np.array(rows), labels


def extract_spin_povm(params: SgParams, probes=("z+", "z-", "x+", "y+")):
    """Detector tomography of the spin measurement realized by the screen.

    Returns an :class:`EffectSet` for univariate variants and a
    :class:`BivariateEffectSet` (rows: sign of P_y, columns: sign of P_z)
    for the quadrupole variant.
    """
    rhos, table, labels = spin_probe_table(params, probes)
    effects = ops.hermitian_part(fit_effects(rhos, table))
    if params.variant == "quadrupole":
        return BivariateEffectSet(effects.reshape(2, 2, 2, 2), ROW_LABELS, UNIVARIATE_LABELS)
    return EffectSet(effects, labels)


def observable_value(state: GridState, observable: str) -> float:
    if observable == "sigma_z":
        return float(state.spin_expectations()[2])
    if observable == "Lx_minus_half_sigma_x":
        return state.lx_expectation() - 0.5 * float(state.spin_expectations()[0])
    raise ValidationError(f"unknown observable {observable!r}")


def conserved_quantity_residual(params: SgParams, observable: str, spin=None) -> float:
    """``|<O>(tau) - <O>(0)|`` for ``O`` in {sigma_z, Lx_minus_half_sigma_x}.

    The reference input is :data:`GENERIC_SPIN` times the Gaussian packet.
    """
    spin = GENERIC_SPIN if spin is None else spin
    s0 = build_initial_state(params, spin)
    s1 = evolve_sg(s0, params)
    return abs(observable_value(s1, observable) - observable_value(s0, observable))


def field_divergence_check(variant: str, params: SgParams | None = None) -> float:
    """Analytic ``div B`` of the modeled field (constant in space).

    ``B`` is the field with ``H_int = (mu/2) B . sigma``: ``-b`` for the
    one-component ideal field, 0 for the corrected and quadrupole fields.
    """
    params = SgParams(variant=variant) if params is None else params.with_(variant=variant)
    b = params.b
    d_by_dy = 0.0 if variant == "ideal" else b
    d_bz_dz = -b
    return d_by_dy + d_bz_dz


def strict_correlation(params: SgParams) -> dict:
    """Correct-bin probabilities for ``|z+>`` and ``|z->`` inputs (upper bin <-> z+ for b > 0)."""
    p_plus = run(params, "z+").probabilities[0]
    p_minus = run(params, "z-").probabilities[1]
    return {"z+": float(p_plus), "z-": float(p_minus)}
