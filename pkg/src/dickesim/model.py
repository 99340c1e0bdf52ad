"""Physical parameters, units convention, and phonon-mode specification.

Units: the spin drive Rabi frequency sets the frequency unit and 1/rabi the
time unit, so every rate carried by :class:`ModelParams` is dimensionless.
Rates are plain inverse times (no 2*pi). :class:`DressingParams` is the one
exception: it holds absolute laboratory rates (e.g. MHz) and is converted to
model units only by :mod:`dickesim.dressing`.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModeSpec",
    "ModelParams",
    "DressingParams",
    "validate_params",
    "com_mode",
    "normal_modes_3ion",
]

# 3-ion transverse mode data: frequency ratios and orthonormal mode vectors.
THREE_ION_FREQ_RATIOS = (1.0, np.sqrt(3.0), np.sqrt(5.8))
THREE_ION_MODE_VECTORS = (
    (1.0 / np.sqrt(3.0), 1.0 / np.sqrt(3.0), 1.0 / np.sqrt(3.0)),
    (1.0 / np.sqrt(2.0), 0.0, -1.0 / np.sqrt(2.0)),
    (1.0 / np.sqrt(6.0), -2.0 / np.sqrt(6.0), 1.0 / np.sqrt(6.0)),
)


def _frozen_array(values, dtype=float):
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ModeSpec:
    """Phonon modes included in the model.

    Attributes
    ----------
    frequencies : ndarray, shape (M,)
        Mode frequencies in units of the Rabi frequency, ascending; the
        first entry is the fundamental (centre-of-mass) frequency.
    coupling : ndarray, shape (N, M)
        Spin-phonon coupling matrix. Column 0 is homogeneous (every ion
        couples identically to the centre-of-mass mode); every higher
        column sums to zero over ions.
    """

    frequencies: np.ndarray
    coupling: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "frequencies", _frozen_array(self.frequencies))
        coupling = np.atleast_2d(np.asarray(self.coupling, dtype=float))
        object.__setattr__(self, "coupling", _frozen_array(coupling))

    @property
    def count(self):
        return len(self.frequencies)

    @property
    def n_ions(self):
        return self.coupling.shape[0]


@dataclass(frozen=True)
class ModelParams:
    """All physical constants of the driven, dissipative spin-phonon model.

    Every rate is in units of ``rabi``. ``trap_frequency=None`` requests the
    default scaling trap_frequency = n_ions * rabi, filled in by
    :func:`validate_params`; likewise ``modes=None`` requests a single
    centre-of-mass mode.
    """

    n_ions: int
    rabi: float = 1.0
    detuning: float = 0.0
    coupling: float = 0.0
    trap_frequency: float | None = None
    spin_decay: float = 0.0
    phonon_decay: float = 0.0
    modes: ModeSpec | None = None

    def single_mode(self):
        """True when only the centre-of-mass mode is included."""
        return self.modes is None or self.modes.count == 1

    def with_(self, **changes):
        """Copy with fields replaced, re-validated.

        Unless new ``modes`` are passed explicitly, the mode specification is
        rebuilt to match the new parameters: single-mode specs are
        regenerated, multi-mode specs have frequencies and couplings
        rescaled (which preserves the mode vectors).
        """
        if "modes" not in changes and self.modes is not None and self.modes.count > 1:
            raw = dataclasses.replace(self, **changes)
            omega = raw.trap_frequency
            if omega is None:
                omega = raw.n_ions * raw.rabi
            freq_scale = omega / self.modes.frequencies[0]
            if self.coupling > 0:
                cpl_scale = raw.coupling / self.coupling
            elif raw.coupling == self.coupling:
                cpl_scale = 1.0
            else:
                raise ValueError("cannot rescale a multi-mode coupling matrix from coupling = 0")
            changes["modes"] = ModeSpec(
                self.modes.frequencies * freq_scale, self.modes.coupling * cpl_scale
            )
        elif "modes" not in changes:
            changes["modes"] = None
        return validate_params(dataclasses.replace(self, **changes))


@dataclass(frozen=True)
class DressingParams:
    """Raw three-level dressing-scheme rates, all in one absolute unit.

    gamma1, gamma2 are the inverse lifetimes of the fast excited state into
    the two lower states; drive_* describe the strong dressing laser and
    probe_* the weak laser driving the effective two-level transition.
    """

    gamma1: float
    gamma2: float
    drive_rabi: float
    drive_detuning: float
    probe_detuning: float
    probe_rabi: float

    def __post_init__(self):
        if self.gamma1 <= 0:
            raise ValueError("gamma1 must be > 0")
        if self.gamma2 <= 0:
            raise ValueError("gamma2 must be > 0")
        if self.drive_rabi < 0:
            raise ValueError("drive_rabi must be >= 0")


def com_mode(n_ions, trap_frequency, coupling):
    """Single centre-of-mass ModeSpec: homogeneous coupling to every ion."""
    return ModeSpec(
        frequencies=[trap_frequency],
        coupling=np.full((n_ions, 1), float(coupling)),
    )


def normal_modes_3ion(trap_frequency, coupling):
    """Three-ion ModeSpec built from the axial normal modes of a 3-ion chain.

    Mode frequencies are (1, sqrt(3), sqrt(5.8)) times ``trap_frequency``.
    Coupling columns are proportional to the orthonormal mode vectors
    b1 = (1,1,1)/sqrt(3), b2 = (1,0,-1)/sqrt(2), b3 = (1,-2,1)/sqrt(6),
    normalised so that the centre-of-mass column equals ``coupling`` for
    every ion (V_im = coupling * sqrt(3) * (b_m)_i).
    """
    b = np.array(THREE_ION_MODE_VECTORS).T  # columns are mode vectors
    matrix = float(coupling) * np.sqrt(3.0) * b
    freqs = float(trap_frequency) * np.array(THREE_ION_FREQ_RATIOS)
    return ModeSpec(frequencies=freqs, coupling=matrix)


def validate_params(p: ModelParams) -> ModelParams:
    """Check every invariant of ModelParams, filling requested defaults.

    Returns a fully populated copy; raises ValueError naming the first
    violated invariant.
    """
    if not isinstance(p.n_ions, (int, np.integer)) or p.n_ions < 1:
        raise ValueError("n_ions must be a positive integer")
    if p.rabi <= 0:
        raise ValueError("rabi must be > 0")
    if p.spin_decay < 0:
        raise ValueError("spin_decay must be >= 0")
    if p.phonon_decay < 0:
        raise ValueError("phonon_decay must be >= 0")
    if p.coupling < 0:
        raise ValueError("coupling must be >= 0")

    omega = p.trap_frequency
    if omega is None:
        omega = p.n_ions * p.rabi
    if omega <= 0:
        raise ValueError("trap_frequency must be > 0")

    modes = p.modes
    if modes is None:
        modes = com_mode(p.n_ions, omega, p.coupling)
    _check_modes(modes, p.n_ions, omega, p.coupling)

    return dataclasses.replace(p, trap_frequency=float(omega), modes=modes)


def _check_modes(modes: ModeSpec, n_ions, omega, coupling, tol=1e-9):
    freqs = modes.frequencies
    matrix = modes.coupling
    m = modes.count
    if not 1 <= m <= n_ions:
        raise ValueError("mode count must be in [1, n_ions]")
    if matrix.shape != (n_ions, m):
        raise ValueError("coupling matrix must be n_ions x mode-count")
    if np.any(np.diff(freqs) <= 0):
        raise ValueError("mode frequencies must be strictly ascending")
    if abs(freqs[0] - omega) > tol * max(1.0, abs(omega)):
        raise ValueError("first mode frequency must equal trap_frequency")
    if np.any(np.abs(matrix[:, 0] - coupling) > tol * max(1.0, abs(coupling))):
        raise ValueError("mode 1 coupling must be homogeneous and equal the coupling strength")
    for col in range(1, m):
        if abs(matrix[:, col].sum()) > 1e-10 * max(1.0, np.abs(matrix[:, col]).max()):
            raise ValueError("mode m>1 must sum to zero")


def params_to_dict(p: ModelParams) -> dict:
    """JSON-serialisable summary of a validated parameter set."""
    d = {
        "n_ions": int(p.n_ions),
        "rabi": p.rabi,
        "detuning": p.detuning,
        "coupling": p.coupling,
        "trap_frequency": p.trap_frequency,
        "spin_decay": p.spin_decay,
        "phonon_decay": p.phonon_decay,
    }
    if p.modes is not None:
        d["mode_frequencies"] = [float(f) for f in p.modes.frequencies]
        d["mode_coupling"] = p.modes.coupling.tolist()
    return d
