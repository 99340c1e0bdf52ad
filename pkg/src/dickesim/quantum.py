"""Exact quantum engine on a truncated spin (x) Fock space.

Builds sparse operators for the driven spin-phonon Hamiltonian and its
spin-decay dissipator, runs quantum-jump Monte Carlo (MCWF) trajectories
with time-stamped, ion-resolved emission records (optionally with photon
recoil on the fundamental mode), and provides a dense Lindblad propagator
as a ground-truth oracle for ensemble averages.

Basis ordering: ion spins first (ion 0 slowest), then one Fock factor per
included mode. Per ion the basis is (|down>, |up>) with Sz|up> = +1/2|up>.
"""

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .model import ModelParams, validate_params, params_to_dict

__all__ = [
    "HilbertSpec",
    "RecoilSpec",
    "PureState",
    "DensityOperator",
    "EmissionRecord",
    "ObservableSeries",
    "Operators",
    "CutoffError",
    "default_fock_cutoff",
    "build_operators",
    "build_hamiltonian",
    "build_jump_operators",
    "recoil_density",
    "sample_recoil_x",
    "displacement_factor",
    "spins_down_vacuum_state",
    "mcwf_trajectory",
    "mcwf_ensemble",
    "lindblad_oracle",
    "write_emission_jsonl",
    "read_emission_jsonl",
]

DIMENSION_LIMIT = 2**20
ORACLE_ENTRY_LIMIT = 10**4  # dense rho propagation: dim**2 entries
LAMB_DICKE_DEFAULT = 0.1


class CutoffError(RuntimeError):
    """Fock truncation too small for the state being propagated."""


@dataclass(frozen=True)
class HilbertSpec:
    """Truncated product space: n_ions spin-1/2 plus one Fock factor per mode.

    ``mode_indices`` selects columns of the model's ModeSpec;
    ``fock_cutoffs`` gives the top Fock level n_max kept for each of them
    (levels 0..n_max).
    """

    n_ions: int
    fock_cutoffs: tuple
    mode_indices: tuple = (0,)

    def __post_init__(self):
        object.__setattr__(self, "fock_cutoffs", tuple(int(n) for n in self.fock_cutoffs))
        object.__setattr__(self, "mode_indices", tuple(int(m) for m in self.mode_indices))
        if len(self.fock_cutoffs) != len(self.mode_indices):
            raise ValueError("need one Fock cutoff per included mode")
        if self.dimension > DIMENSION_LIMIT:
            raise ValueError(
                f"Hilbert dimension {self.dimension} exceeds the limit {DIMENSION_LIMIT}"
            )

    @property
    def n_modes(self):
        return len(self.mode_indices)

    @property
    def dimension(self):
        dim = 2**self.n_ions
        for n in self.fock_cutoffs:
            dim *= n + 1
        return dim


def default_fock_cutoff(p: ModelParams) -> int:
    """Truncation-safe cutoff from the expected dark-state displacement.

    The displaced phase has |<a>| of roughly coupling/(2*rabi); the cutoff
    n_max = ceil(|A|^2 + 6|A| + 10) keeps the top of the ladder empty across
    the studied coupling range (a runtime population guard backs this up).
    """
    p = validate_params(p)
    a = p.coupling / (2.0 * p.rabi)
    return int(np.ceil(a * a + 6.0 * a + 10.0))


@dataclass(frozen=True)
class RecoilSpec:
    """Photon-recoil options for spontaneous emission.

    The emission direction cosine x in [-1, 1] follows the dipole pattern
    (3/8)(1 + x^2) (normalised); each jump applies the momentum kick
    exp(i * eta * x * (a + a^dagger)) to the fundamental mode.
    """

    enabled: bool = False
    eta: float = LAMB_DICKE_DEFAULT

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be >= 0")


@dataclass
class PureState:
    """State vector over the spin (x) Fock product basis."""

    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)

    @property
    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self):
        return PureState(self.amplitudes / self.norm)


@dataclass
class DensityOperator:
    """Hermitian, unit-trace matrix on the same basis."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)

    @staticmethod
    def from_pure(psi: PureState):
        v = psi.normalized().amplitudes
        return DensityOperator(np.outer(v, v.conj()))

    @property
    def trace(self):
        return complex(np.trace(self.matrix))

    def hermiticity_defect(self):
        return float(np.abs(self.matrix - self.matrix.conj().T).max())


@dataclass
class EmissionRecord:
    """Time-stamped, ion-resolved photon emissions from one trajectory.

    Each event is (t, ion) or, with recoil on, (t, ion, x).
    """

    events: list
    t_final: float
    seed: object
    n_ions: int
    recoil: RecoilSpec = field(default_factory=RecoilSpec)

    def times(self):
        return np.array([e[0] for e in self.events])

    def ions(self):
        return np.array([e[1] for e in self.events], dtype=int)

    def count(self):
        return len(self.events)


@dataclass
class ObservableSeries:
    """Per-trajectory expectation values at the requested sample times."""

    times: np.ndarray
    jz: np.ndarray  # <sum_i S_i^z>/N
    occupations: np.ndarray  # (n_times, n_modes)
    amplitudes: np.ndarray  # complex <a_m>, (n_times, n_modes)

    def write_csv(self, path, fmt="%.17g"):
        m = self.occupations.shape[1]
        header = (
            ["t", "Jz"]
            + [f"n_{j + 1}" for j in range(m)]
            + [f"ReA_{j + 1}" for j in range(m)]
            + [f"ImA_{j + 1}" for j in range(m)]
        )
        body = np.hstack(
            [
                self.times[:, None],
                self.jz[:, None],
                self.occupations,
                self.amplitudes.real,
                self.amplitudes.imag,
            ]
        )
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in body:
                fh.write(",".join(fmt % x for x in row) + "\n")


# --------------------------------------------------------------------------
# operator construction


def _single_spin(op, i, n_ions, tail_dim):
    """Embed a 2x2 operator on ion i, identity elsewhere (sparse)."""
    left = sp.identity(2**i, format="csr")
    right = sp.identity(2 ** (n_ions - i - 1) * tail_dim, format="csr")
    return sp.kron(sp.kron(left, sp.csr_matrix(op)), right, format="csr")


def _mode_operator(op, k, h: HilbertSpec):
    """Embed a Fock-factor operator on included mode k, identity elsewhere."""
    dim_before = 2**h.n_ions
    for n in h.fock_cutoffs[:k]:
        dim_before *= n + 1
    dim_after = 1
    for n in h.fock_cutoffs[k + 1 :]:
        dim_after *= n + 1
    return sp.kron(
        sp.kron(sp.identity(dim_before, format="csr"), sp.csr_matrix(op)),
        sp.identity(dim_after, format="csr"),
        format="csr",
    )


def _annihilation(n_max):
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1)


_SX = 0.5 * np.array([[0.0, 1.0], [1.0, 0.0]])
_SZ = 0.5 * np.array([[-1.0, 0.0], [0.0, 1.0]])  # basis (|down>, |up>)
_SMINUS = np.array([[0.0, 1.0], [0.0, 0.0]])


@dataclass
class Operators:
    """Sparse operator set shared by the MCWF engine and the oracle."""

    params: ModelParams
    hilbert: HilbertSpec
    hamiltonian: sp.csr_matrix
    jump_ops: list
    jz_total: sp.csr_matrix
    mode_annihilation: list
    mode_number: list
    top_level_masks: list  # boolean masks of the two highest Fock levels per mode


def build_operators(p: ModelParams, h: HilbertSpec) -> Operators:
    p = validate_params(p)
    if h.n_ions != p.n_ions:
        raise ValueError("HilbertSpec ion count does not match the model")
    if max(h.mode_indices) >= p.modes.count:
        raise ValueError("mode index outside the model's ModeSpec")

    tail_dim = 1
    for n in h.fock_cutoffs:
        tail_dim *= n + 1

    sz_ops = [_single_spin(_SZ, i, h.n_ions, tail_dim) for i in range(h.n_ions)]
    sx_ops = [_single_spin(_SX, i, h.n_ions, tail_dim) for i in range(h.n_ions)]
    sminus_ops = [_single_spin(_SMINUS, i, h.n_ions, tail_dim) for i in range(h.n_ions)]

    ann, num, qpos = [], [], []
    for k, n_max in enumerate(h.fock_cutoffs):
        a = _annihilation(n_max)
        ann.append(_mode_operator(a, k, h))
        num.append(_mode_operator(a.T @ a, k, h))
        qpos.append(_mode_operator(a + a.T, k, h))

    ham = sp.csr_matrix((h.dimension, h.dimension), dtype=complex)
    for i in range(h.n_ions):
        ham = ham + p.rabi * sx_ops[i] + p.detuning * sz_ops[i]
    for k, mode_idx in enumerate(h.mode_indices):
        ham = ham + p.modes.frequencies[mode_idx] * num[k]
        for i in range(h.n_ions):
            v_im = p.modes.coupling[i, mode_idx]
            if v_im != 0.0:
                ham = ham + v_im * (sz_ops[i] @ qpos[k])

    root_gamma = np.sqrt(p.spin_decay)
    jumps = [root_gamma * sm for sm in sminus_ops] if p.spin_decay > 0 else []

    jz_total = sz_ops[0]
    for op in sz_ops[1:]:
        jz_total = jz_total + op

    masks = []
    for k, n_max in enumerate(h.fock_cutoffs):
        proj = _mode_operator(np.diag([1.0 if n >= n_max - 1 else 0.0 for n in range(n_max + 1)]), k, h)
        masks.append(np.asarray(proj.diagonal(), dtype=bool))

    return Operators(
        params=p,
        hilbert=h,
        hamiltonian=ham.tocsr(),
        jump_ops=[j.tocsr() for j in jumps],
        jz_total=jz_total.tocsr(),
        mode_annihilation=ann,
        mode_number=num,
        top_level_masks=masks,
    )


def build_hamiltonian(p: ModelParams, h: HilbertSpec):
    """Sparse Hermitian Hamiltonian on the truncated product basis."""
    return build_operators(p, h).hamiltonian


def build_jump_operators(p: ModelParams, h: HilbertSpec, recoil: RecoilSpec | None = None):
    """Spontaneous-emission jump family: sqrt(gamma) S_i^- per ion.

    With recoil enabled the family is a continuum: the per-ion channel rates
    are unchanged (the direction average of L_i(x)^dag L_i(x) collapses to
    gamma S_i^+ S_i^-), and each jump additionally applies the displacement
    exp(i eta x (a + a^dag)) with x drawn from the dipole pattern. Recoil
    acts on the fundamental mode and requires it to be the only included one.
    """
    recoil = recoil or RecoilSpec()
    if recoil.enabled and (len(h.mode_indices) != 1 or h.mode_indices[0] != 0):
        raise ValueError("recoil requires exactly the fundamental mode in the Hilbert space")
    return build_operators(p, h).jump_ops


def recoil_density(x):
    """Normalised dipole emission pattern on [-1, 1]: (3/8)(1 + x^2)."""
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= 1.0, 0.375 * (1.0 + x * x), 0.0)


def sample_recoil_x(rng, size=None):
    """Draw direction cosines from the dipole pattern by inverse CDF.

    The CDF u = (3/8)(x + x^3/3) + 1/2 inverts through the depressed cubic
    x^3 + 3x = 8(u - 1/2), solved in closed form (single real root).
    """
    u = rng.random(size)
    s = 4.0 * (u - 0.5)
    root = np.sqrt(s * s + 1.0)
    return np.cbrt(s + root) + np.cbrt(s - root)


_DISPLACEMENT_CACHE = {}


def displacement_factor(n_max, eta, x):
    """Dense (n_max+1)^2 matrix exp(i*eta*x*(a+a^dag)) on one Fock factor."""
    key = n_max
    if key not in _DISPLACEMENT_CACHE:
        a = _annihilation(n_max)
        evals, evecs = np.linalg.eigh(a + a.T)
        _DISPLACEMENT_CACHE[key] = (evals, evecs)
    evals, evecs = _DISPLACEMENT_CACHE[key]
    phase = np.exp(1j * eta * x * evals)
    return (evecs * phase) @ evecs.T


def spins_down_vacuum_state(h: HilbertSpec) -> PureState:
    """|down...down> (x) |0...0>, the experiment-like start."""
    amps = np.zeros(h.dimension, dtype=complex)
    amps[0] = 1.0
    return PureState(amps)


# --------------------------------------------------------------------------
# quantum-jump Monte Carlo


def _expectations(ops: Operators, psi):
    norm2 = float(np.vdot(psi, psi).real)
    jz = float(np.vdot(psi, ops.jz_total @ psi).real) / (ops.hilbert.n_ions * norm2)
    occ = np.array(
        [float(np.vdot(psi, n_op @ psi).real) / norm2 for n_op in ops.mode_number]
    )
    amp = np.array([complex(np.vdot(psi, a_op @ psi)) / norm2 for a_op in ops.mode_annihilation])
    return jz, occ, amp


def _check_cutoff(ops: Operators, psi, t):
    norm2 = float(np.vdot(psi, psi).real)
    for k, mask in enumerate(ops.top_level_masks):
        top = float(np.sum(np.abs(psi[mask]) ** 2)) / norm2
        if top > 1e-6:
            n_max = ops.hilbert.fock_cutoffs[k]
            raise CutoffError(
                f"population {top:.2e} in the top two Fock levels of mode "
                f"{ops.hilbert.mode_indices[k] + 1} at t={t:g}; "
                f"increase its cutoff (currently n_max={n_max}, try {n_max + 5})"
            )


def mcwf_trajectory(
    psi0,
    p: ModelParams,
    h: HilbertSpec,
    recoil: RecoilSpec | None = None,
    t_final=100.0,
    dt_max=0.05,
    seed=0,
    sample_times=None,
    rtol=1e-6,
    atol=1e-9,
    record_norms=False,
):
    """One quantum-jump Monte Carlo trajectory.

    Deterministic (non-Hermitian) evolution under
    H_eff = H - (i/2) sum_i L_i^dag L_i runs with an embedded adaptive RK
    integrator (max step ``dt_max``); a jump fires when the decaying norm^2
    crosses a uniform draw, with the crossing time located by root
    refinement on the dense output. The jump channel (emitting ion) is drawn
    proportionally to <L_i^dag L_i>; with recoil enabled, a direction cosine
    is drawn from the dipole pattern and the corresponding displacement kick
    applied. The state is renormalised after each jump.

    Two independent RNG streams derive from ``seed``: one for jump
    thresholds/channels, one for recoil directions, so recoil at eta=0
    reproduces the recoil-off trajectory exactly.

    Returns (ObservableSeries, EmissionRecord); with ``record_norms`` the
    series gains a ``norm_log`` attribute listing (t, norm) at every
    integrator step between jumps.
    """
    p = validate_params(p)
    recoil = recoil or RecoilSpec()
    if recoil.enabled and (len(h.mode_indices) != 1 or h.mode_indices[0] != 0):
        raise ValueError("recoil requires exactly the fundamental mode in the Hilbert space")
    ops = build_operators(p, h)

    psi = np.asarray(psi0.amplitudes if isinstance(psi0, PureState) else psi0, dtype=complex)
    if abs(np.linalg.norm(psi) - 1.0) > 1e-9:
        raise ValueError("psi0 must be normalised")

    if sample_times is None:
        sample_times = np.linspace(0.0, t_final, 201)
    sample_times = np.asarray(sample_times, dtype=float)

    heff_rhs_matrix = (-1j) * ops.hamiltonian
    for L in ops.jump_ops:
        heff_rhs_matrix = heff_rhs_matrix - 0.5 * (L.getH() @ L)
    heff_rhs_matrix = heff_rhs_matrix.tocsr()

    def rhs(t, y):
        return heff_rhs_matrix @ y

    rng_jump = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))
    rng_recoil = np.random.default_rng(np.random.SeedSequence([int(seed), 1]))

    def draw_threshold():
        r = rng_jump.random()
        while r < 1e-12:  # avoid norm underflow chasing a ~zero threshold
            r = rng_jump.random()
        return r

    dissipative = len(ops.jump_ops) > 0
    threshold = draw_threshold() if dissipative else None

    events = []
    norm_log = [] if record_norms else None
    n_t = len(sample_times)
    jz_out = np.empty(n_t)
    occ_out = np.empty((n_t, h.n_modes))
    amp_out = np.empty((n_t, h.n_modes), dtype=complex)

    def store(idx, t):
        jz_out[idx], occ_out[idx], amp_out[idx] = _expectations(ops, psi)
        _check_cutoff(ops, psi, t)

    t_now = float(sample_times[0])
    idx = 0
    if sample_times[0] == 0.0:
        store(0, 0.0)
        idx = 1

    while idx < n_t:
        t_target = float(sample_times[idx])
        if t_target <= t_now:
            store(idx, t_now)
            idx += 1
            continue

        if dissipative:
            event = lambda t, y: float(np.vdot(y, y).real) - threshold
            event.terminal = True
            event.direction = -1
            events_arg = [event]
        else:
            events_arg = None

        sol = solve_ivp(
            rhs,
            (t_now, t_target),
            psi,
            method="DOP853",
            rtol=rtol,
            atol=atol,
            max_step=dt_max,
            events=events_arg,
            dense_output=False,
        )
        if not sol.success:
            raise RuntimeError(f"MCWF integration failed at t={sol.t[-1]:g}: {sol.message}")
        if record_norms:
            norm_log.extend(zip(sol.t.tolist(), np.linalg.norm(sol.y, axis=0).tolist()))

        if dissipative and sol.status == 1:  # jump fired inside the segment
            t_jump = float(sol.t_events[0][0])
            psi = sol.y_events[0][0]
            weights = np.array([float(np.linalg.norm(L @ psi) ** 2) for L in ops.jump_ops])
            total = weights.sum()
            if total <= 0.0 or float(np.vdot(psi, psi).real) < 1e-14:
                raise RuntimeError(f"norm underflow at t={t_jump:g}")
            channel = int(np.searchsorted(np.cumsum(weights) / total, rng_jump.random()))
            channel = min(channel, len(ops.jump_ops) - 1)
            psi = ops.jump_ops[channel] @ psi
            if recoil.enabled:
                x = float(sample_recoil_x(rng_recoil))
                if recoil.eta > 0.0:
                    n_max = h.fock_cutoffs[0]
                    d = displacement_factor(n_max, recoil.eta, x)
                    psi = (psi.reshape(-1, n_max + 1) @ d.T).ravel()
                events.append((t_jump, channel, x))
            else:
                events.append((t_jump, channel))
            psi = psi / np.linalg.norm(psi)
            threshold = draw_threshold()
            t_now = t_jump
        else:
            psi = sol.y[:, -1]
            t_now = t_target
            store(idx, t_now)
            idx += 1

    series = ObservableSeries(
        times=sample_times.copy(), jz=jz_out, occupations=occ_out, amplitudes=amp_out
    )
    if record_norms:
        series.norm_log = norm_log
    record = EmissionRecord(
        events=events, t_final=float(t_final), seed=seed, n_ions=p.n_ions, recoil=recoil
    )
    return series, record


def derive_seed(master_seed, index):
    """Per-trajectory seed from (master seed, trajectory index)."""
    return int(np.random.SeedSequence([int(master_seed), int(index)]).generate_state(1)[0])


def _trajectory_item(args):
    psi0_amps, p, h, recoil, t_final, dt_max, seed, sample_times = args
    return mcwf_trajectory(
        PureState(psi0_amps),
        p,
        h,
        recoil=recoil,
        t_final=t_final,
        dt_max=dt_max,
        seed=seed,
        sample_times=sample_times,
    )


def mcwf_ensemble(
    p: ModelParams,
    h: HilbertSpec,
    n_trajectories,
    master_seed,
    recoil: RecoilSpec | None = None,
    t_final=100.0,
    dt_max=0.05,
    sample_times=None,
    workers=1,
    psi0=None,
):
    """Independent MCWF trajectories with per-index derived seeds.

    Trajectory i uses the RNG stream seeded by (master_seed, i), so results
    do not depend on scheduling or worker count. Returns a list of
    (ObservableSeries, EmissionRecord) in trajectory order.
    """
    from .parallel import parallel_map

    p = validate_params(p)
    if psi0 is None:
        psi0 = spins_down_vacuum_state(h)
    amps = np.asarray(psi0.amplitudes if isinstance(psi0, PureState) else psi0, dtype=complex)

    items = [
        (amps, p, h, recoil, t_final, dt_max, derive_seed(master_seed, i), sample_times)
        for i in range(n_trajectories)
    ]
    results = parallel_map(_trajectory_item, items, workers=workers)
    failed = [r for r in results if not r.ok]
    if failed:
        raise RuntimeError(f"{len(failed)} trajectories failed; first: {failed[0].error}")
    return [r.value for r in results]


# --------------------------------------------------------------------------
# Lindblad oracle


def lindblad_oracle(
    rho0,
    p: ModelParams,
    h: HilbertSpec,
    t_final=100.0,
    sample_times=None,
    rtol=1e-9,
    atol=1e-12,
):
    """Direct dense integration of the master equation (recoil-free).

    Ground truth for MCWF ensemble averages on small instances; the dense
    density matrix restricts use to dimension**2 <= 10^4.
    """
    p = validate_params(p)
    dim = h.dimension
    if dim * dim > ORACLE_ENTRY_LIMIT:
        raise ValueError(f"oracle limited to dimension^2 <= {ORACLE_ENTRY_LIMIT}, got {dim}^2")
    ops = build_operators(p, h)
    ham = ops.hamiltonian.toarray()
    jumps = [L.toarray() for L in ops.jump_ops]
    jdj = [L.conj().T @ L for L in jumps]

    rho_init = np.asarray(
        rho0.matrix if isinstance(rho0, DensityOperator) else rho0, dtype=complex
    )
    if rho_init.shape != (dim, dim):
        raise ValueError("rho0 has the wrong shape")

    def rhs(t, y):
        rho = y.reshape(dim, dim)
        drho = -1j * (ham @ rho - rho @ ham)
        for L, LdL in zip(jumps, jdj):
            drho += L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL)
        return drho.ravel()

    if sample_times is None:
        sample_times = np.linspace(0.0, t_final, 201)
    sample_times = np.asarray(sample_times, dtype=float)

    sol = solve_ivp(
        rhs,
        (float(sample_times[0]), float(sample_times[-1])),
        rho_init.ravel(),
        method="DOP853",
        rtol=rtol,
        atol=atol,
        t_eval=sample_times,
    )
    if not sol.success:
        raise RuntimeError(f"oracle integration failed: {sol.message}")
    rhos = sol.y.T.reshape(len(sample_times), dim, dim)
    return sample_times.copy(), rhos


def oracle_expectations(ops: Operators, rhos):
    """<Jz>/N time series from an oracle density-matrix stack."""
    jz = np.array([float(np.trace(ops.jz_total.toarray() @ rho).real) for rho in rhos])
    return jz / ops.hilbert.n_ions


# --------------------------------------------------------------------------
# emission-record files


def write_emission_jsonl(record: EmissionRecord, p: ModelParams, path):
    """JSON-lines emission file: a header object, then one object per event."""
    header = {
        "t_final": record.t_final,
        "seed": record.seed,
        "n_ions": record.n_ions,
        "recoil": {"enabled": record.recoil.enabled, "eta": record.recoil.eta},
        "params": params_to_dict(validate_params(p)),
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for ev in record.events:
            obj = {"t": ev[0], "ion": int(ev[1])}
            if len(ev) > 2:
                obj["x"] = ev[2]
            fh.write(json.dumps(obj) + "\n")


def read_emission_jsonl(path):
    """Inverse of :func:`write_emission_jsonl`; returns (EmissionRecord, header)."""
    with open(path) as fh:
        header = json.loads(fh.readline())
        events = []
        for line in fh:
            obj = json.loads(line)
            if "x" in obj:
                events.append((obj["t"], obj["ion"], obj["x"]))
            else:
                events.append((obj["t"], obj["ion"]))
    recoil = RecoilSpec(**header.get("recoil", {}))
    record = EmissionRecord(
        events=events,
        t_final=header["t_final"],
        seed=header["seed"],
        n_ions=header["n_ions"],
        recoil=recoil,
    )
    return record, header
