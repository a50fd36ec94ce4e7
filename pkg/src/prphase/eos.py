"""Peng-Robinson bulk thermodynamics for a single species.

Helmholtz free-energy density of the homogeneous fluid, split into three
parts (all in J/m^3, with c the molar density in mol/m^3):

    f_ideal(c)      = c * vartheta0 + c*R*T*ln(c)
    f_repulsion(c)  = -c*R*T * ln(1 - beta*c)
    f_attraction(c) = alpha*c / (2*sqrt(2)*beta)
                        * ln[ (1 + (1 - sqrt 2) beta c) / (1 + (1 + sqrt 2) beta c) ]

with the usual mixture-free parameters

    alpha(T) = 0.45724 * R^2 Tc^2 / Pc * [1 + m*(1 - sqrt(T/Tc))]^2
    beta     = 0.07780 * R Tc / Pc

and m a cubic/quadratic polynomial in the acentric factor omega.  The
chemical potential is mu_b = d f_b / d c and the pressure follows from the
Legendre transform P = c*mu_b - f_b, which reduces to the familiar

    P = c R T / (1 - beta c) - alpha c^2 / (1 + 2 beta c - (beta c)^2).

The influence (gradient-energy) coefficient kappa is a fluid constant tied
to alpha, beta and omega; it multiplies |grad c|^2 / 2 in the interface
energy.

All quantities are SI: K, Pa, mol/m^3, J/m^3, J/mol.  The admissible
density range is 0 < c < 1/beta; every evaluator raises ``DomainError``
rather than returning infinities outside it.  Functions accept scalars or
numpy arrays and return matching shapes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, ParameterError

ArrayLike = Union[float, np.ndarray]

#: CODATA molar gas constant, J/(mol K).
R_DEFAULT = 8.31446261815324

_SQRT2 = math.sqrt(2.0)
# Reject densities with beta*c this close to the packing singularity.
_BC_LIMIT = 1.0 - 1e-12


@dataclass(frozen=True)
class Substance:
    """Critical-point data identifying a pure species.

    T_c in K, P_c in Pa, omega dimensionless (acentric factor).
    """

    name: str
    T_c: float
    P_c: float
    omega: float

    def __post_init__(self):
        for key in ("T_c", "P_c", "omega"):
            v = getattr(self, key)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ParameterError(f"substance {self.name!r}: {key} must be finite, got {v!r}")
        if self.T_c <= 0:
            raise ParameterError(f"substance {self.name!r}: T_c must be positive, got {self.T_c}")
        if self.P_c <= 0:
            raise ParameterError(f"substance {self.name!r}: P_c must be positive, got {self.P_c}")


#: Built-in species presets, keyed by lower-case name.
PRESETS = {
    "nc4": Substance(name="nC4", T_c=425.2, P_c=38.0e5, omega=0.199),
    "n-butane": Substance(name="nC4", T_c=425.2, P_c=38.0e5, omega=0.199),
}


def get_substance(name: str) -> Substance:
    """Look up a built-in substance preset by (case-insensitive) name."""
    key = name.strip().lower()
    if key not in PRESETS:
        known = sorted(set(s.name for s in PRESETS.values()))
        raise ParameterError(f"unknown substance preset {name!r}; built-ins: {known}")
    return PRESETS[key]


def load_substance(path: str) -> Substance:
    """Load a substance from a plain-text key/value block.

    The file holds one ``key = value`` pair per line with keys ``name``,
    ``Tc_K``, ``Pc_bar`` and ``omega``; blank lines and ``#`` comments are
    ignored.  Pressures are given in bar and converted to Pa here.
    """
    fields = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
    missing = [k for k in ("name", "Tc_K", "Pc_bar", "omega") if k not in fields]
    if missing:
        raise ParameterError(f"{path}: missing substance keys {missing}")
    try:
        return Substance(
            name=fields["name"],
            T_c=float(fields["Tc_K"]),
            P_c=float(fields["Pc_bar"]) * 1.0e5,
            omega=float(fields["omega"]),
        )
    except ValueError as exc:
        raise ParameterError(f"{path}: non-numeric substance value ({exc})") from exc


@dataclass(frozen=True)
class EosParams:
    """Derived model constants for one substance at one temperature.

    Attributes
    ----------
    T : float
        Temperature in K.
    R : float
        Molar gas constant in J/(mol K).
    vartheta0 : float
        Reference chemical potential offset in J/mol (shifts mu_b by a
        constant and f_ideal by vartheta0*c; no effect on phase behaviour).
    m : float
        Acentric-factor polynomial value (dimensionless).
    alpha : float
        Attraction parameter in Pa m^6/mol^2.
    beta : float
        Covolume in m^3/mol.
    kappa : float
        Influence coefficient in J m^5 / mol^2 (as conventionally printed).
    """

    T: float
    R: float
    vartheta0: float
    m: float
    alpha: float
    beta: float
    kappa: float

    def __post_init__(self):
        for key in ("T", "R", "vartheta0", "m", "alpha", "beta", "kappa"):
            v = getattr(self, key)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ParameterError(f"EosParams.{key} must be finite, got {v!r}")
        if self.T <= 0:
            raise ParameterError(f"EosParams.T must be positive, got {self.T}")
        if self.R <= 0:
            raise ParameterError(f"EosParams.R must be positive, got {self.R}")
        if self.alpha < 0:
            raise ParameterError(f"EosParams.alpha must be nonnegative, got {self.alpha}")
        if self.beta <= 0:
            raise ParameterError(f"EosParams.beta must be positive, got {self.beta}")

    @property
    def c_max(self) -> float:
        """Upper end of the physical density domain, 1/beta."""
        return 1.0 / self.beta


def acentric_polynomial(omega: float) -> float:
    """m(omega), switching from the quadratic to the cubic fit above 0.49."""
    if not math.isfinite(omega):
        raise ParameterError(f"omega must be finite, got {omega!r}")
    if omega <= 0.49:
        return 0.37464 + 1.54226 * omega - 0.26992 * omega**2
    return 0.379642 + 1.485030 * omega - 0.164423 * omega**2 + 0.016666 * omega**3


def derive_eos_params(
    substance: Substance,
    T: float,
    vartheta0: float = 0.0,
    R: float = R_DEFAULT,
) -> EosParams:
    """Evaluate all temperature-dependent model constants.

    Warns (without failing) when T >= T_c, where the model has no
    two-phase region.
    """
    if not (isinstance(T, (int, float)) and math.isfinite(T) and T > 0):
        raise ParameterError(f"temperature must be finite and positive, got {T!r}")
    if not (math.isfinite(vartheta0)):
        raise ParameterError(f"vartheta0 must be finite, got {vartheta0!r}")
    if not (math.isfinite(R) and R > 0):
        raise ParameterError(f"R must be finite and positive, got {R!r}")
    if T >= substance.T_c:
        warnings.warn(
            f"T = {T} K is at or above the critical temperature {substance.T_c} K "
            f"of {substance.name}; no liquid/vapour coexistence exists there",
            stacklevel=2,
        )

    omega = substance.omega
    m = acentric_polynomial(omega)
    T_r = T / substance.T_c
    alpha = (
        0.45724 * R**2 * substance.T_c**2 / substance.P_c
        * (1.0 + m * (1.0 - math.sqrt(T_r))) ** 2
    )
    beta = 0.07780 * R * substance.T_c / substance.P_c

    a0 = -1.0e-16 / (1.2326 + 1.3757 * omega)
    a1 = 1.0e-16 / (0.9051 + 1.5410 * omega)
    kappa = alpha * beta ** (2.0 / 3.0) * (a0 * (1.0 - T_r) + a1)

    return EosParams(T=float(T), R=float(R), vartheta0=float(vartheta0),
                     m=m, alpha=alpha, beta=beta, kappa=kappa)


@dataclass(frozen=True)
class FreeEnergyBreakdown:
    """Bulk free-energy density split by mechanism (each in J/m^3)."""

    ideal: ArrayLike
    repulsion: ArrayLike
    attraction: ArrayLike
    total: ArrayLike


def _require_admissible(c: np.ndarray, p: EosParams, what: str) -> None:
    """Raise DomainError naming the violated bound unless 0 < c < 1/beta."""
    if not np.all(np.isfinite(c)):
        raise DomainError(f"{what}: density must be finite")
    if np.any(c <= 0.0):
        bad = float(np.min(c))
        raise DomainError(f"{what}: density must be positive (lower bound c > 0 failed, min c = {bad})")
    bc = p.beta * np.asarray(c)
    if np.any(bc >= _BC_LIMIT):
        bad = float(np.max(bc))
        raise DomainError(
            f"{what}: density too close to the packing limit "
            f"(upper bound beta*c < 1 failed, max beta*c = {bad})"
        )


def bulk_free_energy(c: ArrayLike, p: EosParams) -> FreeEnergyBreakdown:
    """Homogeneous free-energy density f_b(c) and its three contributions."""
    c = np.asarray(c, dtype=float)
    _require_admissible(c, p, "bulk_free_energy")
    RT = p.R * p.T
    bc = p.beta * c
    ideal = c * p.vartheta0 + c * RT * np.log(c)
    repulsion = -c * RT * np.log1p(-bc)
    attraction = (
        p.alpha * c / (2.0 * _SQRT2 * p.beta)
        * np.log((1.0 + (1.0 - _SQRT2) * bc) / (1.0 + (1.0 + _SQRT2) * bc))
    )
    return FreeEnergyBreakdown(
        ideal=ideal, repulsion=repulsion, attraction=attraction,
        total=ideal + repulsion + attraction,
    )


def bulk_chemical_potential(c: ArrayLike, p: EosParams) -> ArrayLike:
    """mu_b(c) = d f_b / d c, in J/mol."""
    c = np.asarray(c, dtype=float)
    _require_admissible(c, p, "bulk_chemical_potential")
    RT = p.R * p.T
    bc = p.beta * c
    mu_ideal = p.vartheta0 + RT * (np.log(c) + 1.0)
    mu_rep = -RT * np.log1p(-bc) + RT * bc / (1.0 - bc)
    mu_attr = (
        p.alpha / (2.0 * _SQRT2 * p.beta)
        * np.log((1.0 + (1.0 - _SQRT2) * bc) / (1.0 + (1.0 + _SQRT2) * bc))
        - p.alpha * c / (1.0 + 2.0 * bc - bc * bc)
    )
    return mu_ideal + mu_rep + mu_attr


def pressure(c: ArrayLike, p: EosParams) -> ArrayLike:
    """Equation-of-state pressure P(c) in Pa."""
    c = np.asarray(c, dtype=float)
    _require_admissible(c, p, "pressure")
    RT = p.R * p.T
    bc = p.beta * c
    return c * RT / (1.0 - bc) - p.alpha * c * c / (1.0 + 2.0 * bc - bc * bc)
