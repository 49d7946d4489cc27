"""Dimensional setups and the measurement time they need, with validity checks.

All frequencies are angular (rad/s) and all times are in seconds. The
detector sits on port II; the effective port factor ``2 kappa_2 / kappa``
is 1 for a symmetric cavity and tends to 2 when port I is closed.
"""

import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from .errors import CapExceededError, DomainError
from .fidelity_opt import FidelityOptimum, fidelity_joint_optimum
from .statistics import DimensionlessDeltaK, DimensionlessDX

__all__ = [
    "Dimensionless",
    "MeasurementTimeEstimate",
    "PhysicalSetup",
    "RegimeReport",
    "PLATFORMS",
    "TableRow",
    "check_regime",
    "estimate_measurement_time",
    "from_dimensionless",
    "table_setup",
    "to_dimensionless",
    "verdict",
]

TWO_PI = 2.0 * math.pi
T_CAP = 1e4


@dataclass(frozen=True)
class PhysicalSetup:
    """Dimensional parameters of a dispersive readout.

    ``t_m`` may be ``None`` when the setup is only used to estimate the
    measurement time.
    """

    g: float
    omega_q: float
    omega_r: float
    omega_d: float
    kappa_1: float
    kappa_2: float
    eta: float
    alpha_res_sq: float
    t_m: Optional[float]
    t_0: float
    T1: float
    n_bins: int = 1

    def __post_init__(self):
        for name in ("g", "omega_q", "omega_r", "omega_d", "kappa_2", "alpha_res_sq", "t_0", "T1"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be finite and > 0, got {v!r}")
        if not (math.isfinite(self.kappa_1) and self.kappa_1 >= 0):
            raise DomainError(f"kappa_1 must be finite and >= 0, got {self.kappa_1!r}")
        if not (0.0 < self.eta <= 1.0):
            raise DomainError(f"eta must lie in (0, 1], got {self.eta!r}")
        if self.omega_q == self.omega_r:
            raise DomainError("omega_q must differ from omega_r")
        if self.t_m is not None and not (math.isfinite(self.t_m) and self.t_m > 0):
            raise DomainError(f"t_m must be finite and > 0, got {self.t_m!r}")
        if int(self.n_bins) != self.n_bins or self.n_bins < 1:
            raise DomainError(f"n_bins must be a positive integer, got {self.n_bins!r}")

    @property
    def lam(self):
        """Signed mixing parameter g / (omega_q - omega_r)."""
        return self.g / (self.omega_q - self.omega_r)

    @property
    def n_cr(self):
        """Critical photon number (2 lambda)^-2."""
        return 1.0 / (4.0 * self.lam**2)

    @property
    def pull(self):
        """Signed dispersive pull g lambda."""
        return self.g * self.lam

    @property
    def kappa(self):
        return self.kappa_1 + self.kappa_2

    @property
    def port_factor(self):
        return 2.0 * self.kappa_2 / self.kappa

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class Dimensionless:
    """Both dimensionless forms of a setup, plus canonicalization flags.

    Unpacks as ``dx, deltak = to_dimensionless(p)``.

    Attributes:
        degenerate: Drive on the bare cavity, so both states look alike.
        states_swapped: Detuning and pull had opposite signs; the 'up' mean
            of the canonical form belongs to the ground state.
        port_factor: ``2 kappa_2 / kappa``.
    """

    dx: DimensionlessDX
    deltak: DimensionlessDeltaK
    degenerate: bool
    states_swapped: bool
    port_factor: float

    def __iter__(self):
        yield self.dx
        yield self.deltak


def to_dimensionless(p: PhysicalSetup) -> Dimensionless:
    """Map a setup onto ``(D, X, tau_m)`` and ``(Delta, K, T_m)``.

    Signs are folded into the canonical sector ``D, X >= 0`` using the
    reflection symmetry of the statistics.

    Raises:
        DomainError: If ``t_m`` is missing.
    """
    if p.t_m is None:
        raise DomainError("t_m is required for the dimensionless time")
    half = 0.5 * p.kappa
    detuning = p.omega_d - p.omega_r
    pull = p.pull
    tau = p.eta * p.kappa_2 * p.alpha_res_sq * p.t_m
    dx = DimensionlessDX(abs(detuning) / half, abs(pull) / half, tau)
    k = half / abs(pull)
    deltak = DimensionlessDeltaK(abs(detuning) / abs(pull), k, tau / k)
    return Dimensionless(
        dx=dx,
        deltak=deltak,
        degenerate=detuning == 0.0,
        states_swapped=detuning * pull < 0.0,
        port_factor=p.port_factor,
    )


def from_dimensionless(dx: DimensionlessDX, pull, eta, alpha_res_sq, port_factor=1.0):
    """Invert :func:`to_dimensionless` given the pull and the detector data.

    Returns:
        ``(omega_d - omega_r, pull, kappa, t_m)`` with the detuning carrying
        the sign of ``pull``.
    """
    if dx.X == 0.0:
        raise DomainError("zero pull cannot be inverted")
    half = abs(pull) / dx.X
    kappa = 2.0 * half
    kappa_2 = port_factor * half
    t_m = dx.tau_m / (eta * kappa_2 * alpha_res_sq)
    return math.copysign(dx.D * half, pull), pull, kappa, t_m


def verdict(ratio):
    """Map a smallness ratio onto ok / marginal / violated."""
    if ratio <= 0.1:
        return "ok"
    if ratio <= 0.3:
        return "marginal"
    return "violated"


@dataclass(frozen=True)
class RegimeReport:
    """Validity ratios of the dispersive model and their verdicts.

    ``settling_ratio`` is ``t_0 kappa`` and must be large; its verdict uses
    the reciprocal. ``t1_ratio_tm`` is ``None`` without a counting time.
    """

    dispersive_ratio: float
    rwa_ratio: float
    settling_ratio: float
    t1_ratio_t0: float
    t1_ratio_tm: Optional[float]
    verdicts: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(v == "ok" for v in self.verdicts.values())

    def as_dict(self):
        return dict(self.__dict__)


def check_regime(p: PhysicalSetup, n_ch=None) -> RegimeReport:
    """Evaluate the dispersive, RWA, settling and relaxation conditions.

    Args:
        p: The setup.
        n_ch: Characteristic intracavity photon number; defaults to
            ``alpha_res_sq``, the population of a resonant drive.
    """
    n_ch = p.alpha_res_sq if n_ch is None else float(n_ch)
    if n_ch < 0:
        raise DomainError(f"n_ch must be >= 0, got {n_ch!r}")
    disp = (n_ch + 1.0) / p.n_cr
    rwa = abs(p.omega_r - p.omega_q) / (p.omega_r + p.omega_q)
    settle = p.t_0 * p.kappa
    t0 = p.t_0 / p.T1
    tm = None if p.t_m is None else (p.t_m / p.n_bins) / p.T1
    verdicts = {
        "dispersive": verdict(disp),
        "rwa": verdict(rwa),
        "settling": verdict(1.0 / settle),
        "t1_settling": verdict(t0),
    }
    if tm is not None:
        verdicts["t1_measurement"] = verdict(tm)
    return RegimeReport(disp, rwa, settle, t0, tm, verdicts)


@dataclass(frozen=True)
class MeasurementTimeEstimate:
    """Shortest counting time that reaches a target fidelity.

    Unpacks as ``t_m, optimum = estimate_measurement_time(...)``.

    Attributes:
        t_m: Counting time in seconds.
        T_m: Dimensionless time at the target.
        optimum: Joint optimum at ``T_m``.
        omega_dr: Drive-cavity detuning to configure (rad/s).
        kappa: Total cavity damping to configure (rad/s).
    """

    t_m: float
    T_m: float
    optimum: FidelityOptimum
    omega_dr: float
    kappa: float

    def __iter__(self):
        yield self.t_m
        yield self.optimum


def _min_time(target, cap):
    # smallest effective time whose symmetric joint optimum reaches target
    def f(T):
        return fidelity_joint_optimum(T).fidelity

    lo, hi = 0.0, 1.0
    while f(hi) < target:
        lo, hi = hi, 2.0 * hi
        if hi > cap:
            if f(cap) < target:
                raise CapExceededError(f"fidelity {target} needs T_m above the cap {cap}")
            hi = cap
            break
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if f(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def estimate_measurement_time(p: PhysicalSetup, target_fidelity, asymmetric=False, T_cap=T_CAP):
    """Counting time needed to reach ``target_fidelity`` at the joint optimum.

    The optimal fidelity is nondecreasing in the effective time, so a
    bisection finds the smallest sufficient value ``T_eff``. It converts to
    seconds through ``t_m = T_eff / (eta |g lambda| |alpha|^2 f)`` with
    ``f = 2`` for an asymmetric cavity and 1 otherwise. ``p.t_m`` is ignored.

    Returns:
        MeasurementTimeEstimate; its ``T_m`` is the nominal
        ``eta t_m |g lambda| |alpha|^2``, so ``T_eff = f T_m``.

    Raises:
        DomainError: If the target lies outside ``[0.5, 0.9999]``.
        CapExceededError: If the target needs ``T_eff > T_cap``.
    """
    target = float(target_fidelity)
    if not (0.5 <= target <= 0.9999):
        raise DomainError(f"target fidelity must lie in [0.5, 0.9999], got {target!r}")
    factor = 2.0 if asymmetric else 1.0
    T_eff = _min_time(target, T_cap)
    T_m = T_eff / factor
    opt = fidelity_joint_optimum(T_m, asymmetric)
    pull = abs(p.pull)
    return MeasurementTimeEstimate(
        t_m=T_m / (p.eta * pull * p.alpha_res_sq),
        T_m=T_m,
        optimum=opt,
        omega_dr=opt.delta_opt * pull,
        kappa=2.0 * opt.k_opt * pull,
    )


@dataclass(frozen=True)
class TableRow:
    """A published platform estimate; frequencies as printed (MHz, GHz).

    ``carrier_GHz`` is not part of the published row. It is a typical
    cavity frequency for the platform, used only by the RWA check.
    """

    name: str
    g_MHz: float
    detuning_GHz: float
    alpha_res_sq: float
    t95: float
    t99: float
    T1: float
    carrier_GHz: float
    eta: float = 0.9


PLATFORMS = (
    TableRow("transmon", 86.0, 1.0, 1.0, 0.7e-6, 1.2e-6, 20e-6, 6.0),
    TableRow("quantum-dot", 21000.0, 1000.0, 10.0, 1.2e-9, 2.0e-9, 11e-9, 325e3),
    TableRow("bec", 1000.0, 1000.0, 1000.0, 5.1e-9, 11.0e-9, 53e-9, 384e3),
    TableRow("n-defects", 17.0, 0.1, 0.01, 17.6e-6, 30.6e-6, 20.0, 2.9),
)


def table_setup(row: TableRow, units="cyclic", t_m=None) -> PhysicalSetup:
    """Build a symmetric setup from a published row.

    ``units="cyclic"`` reads the printed numbers as f = omega / 2 pi;
    ``units="angular"`` reads them directly as angular frequencies. The
    cavity damping is set to the pull (K = 1) and the drive sits on the
    upper-pulled resonance; neither affects time estimates, which choose
    their own optimum.
    """
    if units not in ("cyclic", "angular"):
        raise DomainError(f"units must be 'cyclic' or 'angular', got {units!r}")
    scale = TWO_PI if units == "cyclic" else 1.0
    g = row.g_MHz * 1e6 * scale
    omega_r = row.carrier_GHz * 1e9 * scale
    omega_q = omega_r + row.detuning_GHz * 1e9 * scale
    pull = g * g / (omega_q - omega_r)
    return PhysicalSetup(
        g=g,
        omega_q=omega_q,
        omega_r=omega_r,
        omega_d=omega_r + pull,
        kappa_1=pull,
        kappa_2=pull,
        eta=row.eta,
        alpha_res_sq=row.alpha_res_sq,
        t_m=t_m,
        t_0=10.0 / (2.0 * pull),
        T1=row.T1,
    )


def with_time(p: PhysicalSetup, t_m) -> PhysicalSetup:
    return replace(p, t_m=t_m)
