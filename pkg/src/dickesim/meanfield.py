"""Semiclassical dynamics of the driven, dissipative spin-phonon system.

Two dynamical systems live here:

* the collective single-mode system for the phonon amplitude A = <a> and the
  macroscopic spin per ion J_k = <sum_i S_i^k>/N, in which the oscillator
  equation carries trap_frequency/N and phonon damping enters as
  phonon_decay/N (trap_frequency -> trap_frequency - i*phonon_decay);
* the site-resolved multi-mode system with one complex amplitude per phonon
  mode and one spin vector per ion, in which each mode is damped at
  phonon_decay directly.

Both are implemented literally; they share fixed points but not transients.
The map between them is J = mean over ions of the site spins, with identical
amplitudes; it is exact for N = 1 and at fixed points.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .model import ModelParams, validate_params

__all__ = [
    "MeanFieldState",
    "MultiModeState",
    "Trajectory",
    "IntegrationError",
    "rhs_collective",
    "rhs_multimode",
    "integrate",
    "spins_down_vacuum",
    "embed_collective",
    "collective_view",
    "write_trajectory_csv",
]

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12


class IntegrationError(RuntimeError):
    """Raised when the adaptive integrator fails; carries the failure time."""

    def __init__(self, message, t_fail):
        super().__init__(f"{message} (t = {t_fail:g})")
        self.t_fail = t_fail


@dataclass(frozen=True)
class MeanFieldState:
    """Collective phase-space point: phonon amplitude and spin per ion."""

    amplitude: complex
    spin: np.ndarray  # (Jx, Jy, Jz)

    def __post_init__(self):
        object.__setattr__(self, "spin", np.array(self.spin, dtype=float))

    def flat(self):
        a = complex(self.amplitude)
        return np.array([a.real, a.imag, *self.spin])

    @staticmethod
    def from_flat(y):
        return MeanFieldState(amplitude=complex(y[0], y[1]), spin=y[2:5])

    def norm(self):
        return float(np.sqrt(np.sum(self.flat() ** 2)))


@dataclass(frozen=True)
class MultiModeState:
    """Site-resolved phase-space point: M mode amplitudes, N spin vectors."""

    amplitudes: np.ndarray  # complex, shape (M,)
    spins: np.ndarray  # shape (N, 3)

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", np.array(self.amplitudes, dtype=complex))
        object.__setattr__(self, "spins", np.array(self.spins, dtype=float))

    def flat(self):
        # layout: ReA_1..ReA_M, ImA_1..ImA_M, Sx_1..Sx_N, Sy_1..Sy_N, Sz_1..Sz_N
        return np.concatenate(
            [self.amplitudes.real, self.amplitudes.imag, self.spins.T.ravel()]
        )

    @staticmethod
    def from_flat(y, n_modes):
        amps = y[:n_modes] + 1j * y[n_modes : 2 * n_modes]
        spins = y[2 * n_modes :].reshape(3, -1).T
        return MultiModeState(amplitudes=amps, spins=spins)

    def norm(self):
        return float(np.sqrt(np.sum(self.flat() ** 2)))


def collective_rhs_flat(p: ModelParams):
    """RHS of the collective system on flat vectors [ReA, ImA, Jx, Jy, Jz]."""
    om = p.trap_frequency
    kap = p.phonon_decay
    n = p.n_ions
    v = p.coupling
    gam = p.spin_decay
    rabi = p.rabi
    det = p.detuning

    def rhs(t, y):
        re_a, im_a, jx, jy, jz = y
        eff = 2.0 * v * re_a + det
        return np.array(
            [
                (-kap * re_a + om * im_a) / n,
                (-om * re_a - kap * im_a) / n - v * jz,
                -0.5 * gam * jx - eff * jy,
                -0.5 * gam * jy - rabi * jz + eff * jx,
                -gam * (jz + 0.5) + rabi * jy,
            ]
        )

    return rhs


def multimode_rhs_flat(p: ModelParams):
    """Site-resolved RHS on flat vectors (2M amplitudes, then 3N spins)."""
    freqs = p.modes.frequencies
    vmat = p.modes.coupling  # (N, M)
    m = p.modes.count
    kap = p.phonon_decay
    gam = p.spin_decay
    rabi = p.rabi
    det = p.detuning

    def rhs(t, y):
        re = y[:m]
        im = y[m : 2 * m]
        sx, sy, sz = y[2 * m :].reshape(3, -1)
        eff = vmat @ (2.0 * re) + det  # per-ion V_im (A_m + A_m*) + detuning
        d_re = -kap * re + freqs * im
        d_im = -freqs * re - kap * im - vmat.T @ sz
        d_sx = -0.5 * gam * sx - eff * sy
        d_sy = -0.5 * gam * sy - rabi * sz + eff * sx
        d_sz = -gam * (sz + 0.5) + rabi * sy
        return np.concatenate([d_re, d_im, d_sx, d_sy, d_sz])

    return rhs


def rhs_collective(state: MeanFieldState, p: ModelParams) -> MeanFieldState:
    """Time derivative of a collective state.

    Only defined for a single (centre-of-mass) mode; multi-mode parameter
    sets must use :func:`rhs_multimode`.
    """
    p = validate_params(p)
    if not p.single_mode():
        raise ValueError("collective dynamics require a single-mode ModeSpec")
    dy = collective_rhs_flat(p)(0.0, state.flat())
    return MeanFieldState.from_flat(dy)


def rhs_multimode(state: MultiModeState, p: ModelParams) -> MultiModeState:
    """Time derivative of a site-resolved multi-mode state."""
    p = validate_params(p)
    m = p.modes.count
    n = p.n_ions
    if state.amplitudes.shape != (m,) or state.spins.shape != (n, 3):
        raise ValueError(
            f"state dimensions {state.amplitudes.shape}, {state.spins.shape} "
            f"do not match ModeSpec ({n} ions, {m} modes)"
        )
    dy = multimode_rhs_flat(p)(0.0, state.flat())
    return MultiModeState.from_flat(dy, m)


@dataclass
class Trajectory:
    """Sampled solution of either semiclassical system.

    ``amplitudes`` has shape (n_times, M) and ``spins`` (n_times, S, 3)
    where S = 1 for the collective system and S = N for the site-resolved
    one. ``metadata`` records the parameters and solver tolerances.
    """

    times: np.ndarray
    amplitudes: np.ndarray
    spins: np.ndarray
    multimode: bool
    metadata: dict = field(default_factory=dict)

    def state_at(self, idx):
        if self.multimode:
            return MultiModeState(self.amplitudes[idx], self.spins[idx])
        return MeanFieldState(self.amplitudes[idx, 0], self.spins[idx, 0])

    @property
    def states(self):
        return [self.state_at(i) for i in range(len(self.times))]

    def displacement(self, mode=0):
        """Re A_m(t), the oscillator displacement of one mode."""
        return self.amplitudes[:, mode].real


def spins_down_vacuum(p: ModelParams, multimode=False):
    """Experiment-like initial condition: all spins down, phonon vacuum."""
    p = validate_params(p)
    if multimode:
        return MultiModeState(
            amplitudes=np.zeros(p.modes.count, dtype=complex),
            spins=np.tile([0.0, 0.0, -0.5], (p.n_ions, 1)),
        )
    return MeanFieldState(amplitude=0.0, spin=[0.0, 0.0, -0.5])


def embed_collective(state: MeanFieldState, p: ModelParams) -> MultiModeState:
    """Map a collective state to homogeneous site-resolved coordinates.

    Every ion receives the collective spin vector; the fundamental mode
    keeps the amplitude and all higher modes start empty.
    """
    p = validate_params(p)
    amps = np.zeros(p.modes.count, dtype=complex)
    amps[0] = state.amplitude
    return MultiModeState(amplitudes=amps, spins=np.tile(state.spin, (p.n_ions, 1)))


def collective_view(state: MultiModeState) -> MeanFieldState:
    """Project site-resolved coordinates back to (A_1, mean spin)."""
    return MeanFieldState(amplitude=state.amplitudes[0], spin=state.spins.mean(axis=0))


def integrate(
    state0,
    p: ModelParams,
    t_final,
    rtol=DEFAULT_RTOL,
    atol=DEFAULT_ATOL,
    sample_times=None,
    method="DOP853",
) -> Trajectory:
    """Integrate either semiclassical system with an embedded adaptive RK pair.

    Parameters
    ----------
    state0 : MeanFieldState or MultiModeState
        Which system runs is inferred from the state type.
    t_final : float
        End time (> 0) in units of 1/rabi.
    rtol : float
        Relative tolerance, in (0, 1e-3].
    sample_times : array_like, optional
        Output sample times (dense output interpolates between steps);
        defaults to 1001 uniform samples on [0, t_final].
    """
    p = validate_params(p)
    if t_final <= 0:
        raise ValueError("t_final must be > 0")
    if not 0 < rtol <= 1e-3:
        raise ValueError("rtol must be in (0, 1e-3]")

    multimode = isinstance(state0, MultiModeState)
    if multimode:
        rhs = multimode_rhs_flat(p)
        n_modes = p.modes.count
        if state0.amplitudes.shape != (n_modes,) or state0.spins.shape != (p.n_ions, 3):
            raise ValueError("initial state does not match ModeSpec dimensions")
    else:
        if not p.single_mode():
            raise ValueError("collective dynamics require a single-mode ModeSpec")
        rhs = collective_rhs_flat(p)
        n_modes = 1

    if sample_times is None:
        sample_times = np.linspace(0.0, t_final, 1001)
    else:
        sample_times = np.asarray(sample_times, dtype=float)

    sol = solve_ivp(
        rhs,
        (0.0, float(t_final)),
        state0.flat(),
        method=method,
        rtol=rtol,
        atol=atol,
        t_eval=sample_times,
        dense_output=False,
    )
    if not sol.success:
        raise IntegrationError(sol.message, sol.t[-1] if len(sol.t) else 0.0)

    y = sol.y.T  # (n_times, dim)
    amps = y[:, :n_modes] + 1j * y[:, n_modes : 2 * n_modes]
    spins = y[:, 2 * n_modes :].reshape(len(sol.t), 3, -1).transpose(0, 2, 1)
    return Trajectory(
        times=sol.t.copy(),
        amplitudes=amps,
        spins=spins,
        multimode=multimode,
        metadata={"params": p, "rtol": rtol, "atol": atol, "method": method},
    )


def write_trajectory_csv(traj: Trajectory, path, fmt="%.17g"):
    """Write a trajectory as CSV.

    Site-resolved runs emit ``t, ReA_1.., ImA_1.., Sx_1.., Sy_1.., Sz_1..``;
    collective runs emit ``t, ReA, ImA, Jx, Jy, Jz``.
    """
    n_t = len(traj.times)
    m = traj.amplitudes.shape[1]
    if traj.multimode:
        n = traj.spins.shape[1]
        header = (
            ["t"]
            + [f"ReA_{j + 1}" for j in range(m)]
            + [f"ImA_{j + 1}" for j in range(m)]
            + [f"Sx_{i + 1}" for i in range(n)]
            + [f"Sy_{i + 1}" for i in range(n)]
            + [f"Sz_{i + 1}" for i in range(n)]
        )
        body = np.hstack(
            [
                traj.times[:, None],
                traj.amplitudes.real,
                traj.amplitudes.imag,
                traj.spins[:, :, 0],
                traj.spins[:, :, 1],
                traj.spins[:, :, 2],
            ]
        )
    else:
        header = ["t", "ReA", "ImA", "Jx", "Jy", "Jz"]
        body = np.hstack(
            [
                traj.times[:, None],
                traj.amplitudes.real,
                traj.amplitudes.imag,
                traj.spins[:, 0, :],
            ]
        )
    assert body.shape == (n_t, len(header))
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in body:
            fh.write(",".join(fmt % x for x in row) + "\n")
