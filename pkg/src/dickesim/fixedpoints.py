"""Steady states of the semiclassical dynamics and their classification.

Finds fixed points by damped Newton iteration, attaches Jacobian spectra and
stability labels, locates Hopf bifurcations along the bright branch, detects
limit cycles by direct integration, and composes everything into a dynamical
phase label per parameter point.
"""

from dataclasses import dataclass, replace

import numpy as np

from .model import ModelParams, validate_params
from . import meanfield as mf

__all__ = [
    "STABLE",
    "UNSTABLE",
    "SADDLE",
    "MARGINAL",
    "BRIGHT",
    "DARK",
    "OTHER",
    "PHASE_LABELS",
    "FixedPoint",
    "BifurcationPoint",
    "LimitCycle",
    "UnclassifiableError",
    "bright_state_v0",
    "dark_state_gamma0",
    "critical_coupling_gamma0",
    "analytic_jacobian_collective",
    "finite_difference_jacobian",
    "newton_fixed_point",
    "find_fixed_points",
    "classify_stability",
    "branch_label",
    "detect_hopf",
    "detect_limit_cycle",
    "classify_phase",
    "analyze_cell",
]

STABLE = "Stable"
UNSTABLE = "Unstable"
SADDLE = "Saddle"
MARGINAL = "Marginal"

BRIGHT = "Bright"
DARK = "Dark"
OTHER = "Other"

PHASE_LABELS = ("B", "D", "B+D", "PL", "PL+D", "Crossover")

RESIDUAL_TOL = 1e-10
STABILITY_EPS = 1e-7
DEDUP_TOL = 1e-6
FD_STEP = 1e-6


class UnclassifiableError(RuntimeError):
    """No stable attractor (fixed point or limit cycle) was identified."""


@dataclass(frozen=True)
class FixedPoint:
    """A steady state with its Jacobian spectrum and labels."""

    state: object  # MeanFieldState or MultiModeState
    residual: float
    jacobian_eigenvalues: np.ndarray
    stability: str
    branch: str


@dataclass(frozen=True)
class BifurcationPoint:
    """Parameter point where a complex eigenvalue pair crosses the axis."""

    params: ModelParams
    coupling: float
    eigenvalue_pair: tuple
    kind: str = "Hopf"


@dataclass(frozen=True)
class LimitCycle:
    """Self-sustained oscillation of the displacement Re A.

    ``amplitude`` is the peak-to-peak excursion of Re A over the sampled
    window; ``period`` the mean interval between upward mean-crossings.
    """

    amplitude: float
    period: float


# --------------------------------------------------------------------------
# analytic seeds and reference formulas


def bright_state_v0(p: ModelParams) -> mf.MeanFieldState:
    """Closed-form steady state of the decoupled (V=0) spin equations.

    For spin_decay > 0 this is the unique Bloch steady state; the phonon
    amplitude follows from the linear phonon relation (zero at V=0).
    """
    p = validate_params(p)
    gam, rabi, det = p.spin_decay, p.rabi, p.detuning
    if gam <= 0:
        return mf.MeanFieldState(0.0, [0.0, 0.0, 0.0])
    c = (gam**2 / 2 + 2 * det**2) / rabi**2
    jz = -0.5 * c / (1.0 + c)
    jy = gam * (jz + 0.5) / rabi
    jx = -2.0 * det * jy / gam
    return mf.MeanFieldState(_phonon_from_spin(jz, p), [jx, jy, jz])


def dark_state_gamma0(p: ModelParams):
    """Zero-damping dark steady state, or None when it does not exist.

    Solves the stationary conditions at spin_decay -> 0: Jy = 0,
    Jx = -rabi*omega/(2*N*V^2), spin on the Bloch sphere with Jz < 0.
    Requires detuning = 0 for the closed form; used as a Newton seed
    otherwise.
    """
    p = validate_params(p)
    v, rabi, om, n = p.coupling, p.rabi, p.trap_frequency, p.n_ions
    if v <= 0:
        return None
    jx = -rabi * om / (2 * n * v**2)
    if abs(jx) > 0.5:
        return None
    jz = -np.sqrt(0.25 - jx**2)
    return mf.MeanFieldState(_phonon_from_spin(jz, p), [jx, 0.0, jz])


def critical_coupling_gamma0(p: ModelParams) -> float:
    """Coupling above which the dark fixed point is stable as spin_decay -> 0+.

    Equals (sqrt(2) * rabi * trap_frequency / n_ions) ** (1/2).
    """
    p = validate_params(p)
    return float(np.sqrt(np.sqrt(2.0) * p.rabi * p.trap_frequency / p.n_ions))


def _phonon_from_spin(jz, p: ModelParams):
    """Linear phonon relation A = -i V Jz N / (i omega + kappa)."""
    return -1j * p.coupling * jz * p.n_ions / (1j * p.trap_frequency + p.phonon_decay)


# --------------------------------------------------------------------------
# Jacobians


def analytic_jacobian_collective(state: mf.MeanFieldState, p: ModelParams):
    """Exact Jacobian of the collective system at a state (5x5)."""
    om, kap, n = p.trap_frequency, p.phonon_decay, p.n_ions
    v, gam, rabi, det = p.coupling, p.spin_decay, p.rabi, p.detuning
    re_a = complex(state.amplitude).real
    jx, jy, _ = state.spin
    eff = 2.0 * v * re_a + det
    return np.array(
        [
            [-kap / n, om / n, 0.0, 0.0, 0.0],
            [-om / n, -kap / n, 0.0, 0.0, -v],
            [-2.0 * v * jy, 0.0, -0.5 * gam, -eff, 0.0],
            [2.0 * v * jx, 0.0, eff, -0.5 * gam, -rabi],
            [0.0, 0.0, 0.0, rabi, -gam],
        ]
    )


def finite_difference_jacobian(f, y, step=FD_STEP):
    """Central finite-difference Jacobian of f(y) (vector valued)."""
    y = np.asarray(y, dtype=float)
    dim = len(y)
    jac = np.empty((dim, dim))
    for k in range(dim):
        dy = np.zeros(dim)
        dy[k] = step
        jac[:, k] = (f(y + dy) - f(y - dy)) / (2.0 * step)
    return jac


# --------------------------------------------------------------------------
# Newton solver


def newton_fixed_point(f, y0, tol=RESIDUAL_TOL, max_iter=200, max_halvings=20, polish_tol=1e-14):
    """Damped Newton iteration on f(y) = 0.

    Halves the step (up to ``max_halvings`` times) whenever the residual
    norm would increase, and keeps iterating well below ``tol`` (towards
    ``polish_tol``) so that solutions are sharp even in directions with
    near-zero Jacobian eigenvalues (e.g. at very small spin_decay).
    Returns (y, residual_norm, converged) with converged = residual < tol.
    """
    y = np.array(y0, dtype=float)
    fy = f(y)
    res = np.linalg.norm(fy)
    history = []
    for _ in range(max_iter):
        if res < polish_tol:
            break
        history.append(res)
        if len(history) > 5 and res > 0.99 * history[-6]:
            break  # stalled (typically FD noise floor or no nearby root)
        jac = finite_difference_jacobian(f, y)
        try:
            step = np.linalg.solve(jac, fy)
        except np.linalg.LinAlgError:
            break
        scale = 1.0
        improved = False
        for _ in range(max_halvings + 1):
            y_new = y - scale * step
            f_new = f(y_new)
            res_new = np.linalg.norm(f_new)
            if res_new < res:
                improved = True
                break
            scale *= 0.5
        if not improved:
            break
        y, fy, res = y_new, f_new, res_new
    return y, res, res < tol


# --------------------------------------------------------------------------
# classification


def _stability_from_eigenvalues(eigs, eps=STABILITY_EPS):
    re = eigs.real
    max_re, min_re = re.max(), re.min()
    if max_re < -eps:
        return STABLE
    if np.abs(re).max() <= eps:
        return MARGINAL
    if max_re > eps and min_re < -eps:
        return SADDLE
    if max_re > eps:
        return UNSTABLE
    return MARGINAL


def branch_label(state, p: ModelParams) -> str:
    """Bright/Dark/Other label from polarisation and displacement.

    Dark: mean Jz < -0.4. Bright: mean Jz > -0.2 and |Re A_1| below
    0.1 * max(1, V / (2 rabi)). Everything else: Other.
    """
    if isinstance(state, mf.MultiModeState):
        jz = state.spins[:, 2].mean()
        x = state.amplitudes[0].real
    else:
        jz = state.spin[2]
        x = complex(state.amplitude).real
    if jz < -0.4:
        return DARK
    if jz > -0.2 and abs(x) < 0.1 * max(1.0, p.coupling / (2.0 * p.rabi)):
        return BRIGHT
    return OTHER


def classify_stability(fp, p: ModelParams, jacobian="fd") -> FixedPoint:
    """Attach the Jacobian spectrum and a stability label to a fixed point.

    Accepts either a FixedPoint (re-classified) or a bare state whose
    residual is already below tolerance. ``jacobian`` selects the central
    finite-difference scheme ("fd") or, for the collective system, the
    analytic Jacobian ("analytic").
    """
    p = validate_params(p)
    state = fp.state if isinstance(fp, FixedPoint) else fp

    if isinstance(state, mf.MultiModeState):
        rhs = mf.multimode_rhs_flat(p)
        n_modes = p.modes.count
        unflat = lambda y: mf.MultiModeState.from_flat(y, n_modes)
    else:
        rhs = mf.collective_rhs_flat(p)
        unflat = mf.MeanFieldState.from_flat

    y = state.flat()
    residual = float(np.linalg.norm(rhs(0.0, y)))
    if jacobian == "analytic":
        if isinstance(state, mf.MultiModeState):
            raise ValueError("analytic Jacobian is only available for the collective system")
        jac = analytic_jacobian_collective(state, p)
    else:
        jac = finite_difference_jacobian(lambda z: rhs(0.0, z), y)
    eigs = np.linalg.eigvals(jac)
    eigs = eigs[np.argsort(-eigs.real)]
    return FixedPoint(
        state=unflat(y),
        residual=residual,
        jacobian_eigenvalues=eigs,
        stability=_stability_from_eigenvalues(eigs),
        branch=branch_label(state, p),
    )


# --------------------------------------------------------------------------
# fixed-point search


def _bloch_seed_grid():
    """12 deterministic points on the Bloch sphere (3 latitudes x 4 azimuths)."""
    seeds = []
    for theta in (np.pi / 4, np.pi / 2, 3 * np.pi / 4):
        for phi in (0.0, np.pi / 2, np.pi, 3 * np.pi / 2):
            seeds.append(
                0.5
                * np.array(
                    [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
                )
            )
    return seeds


def _collective_seeds(p: ModelParams):
    seeds = []
    for spin in _bloch_seed_grid():
        seeds.append(mf.MeanFieldState(_phonon_from_spin(spin[2], p), spin))
    seeds.append(bright_state_v0(p))
    dark = dark_state_gamma0(p)
    if dark is not None:
        seeds.append(dark)
    return seeds


def _multimode_seeds(p: ModelParams):
    """Embedded collective fixed points plus homogeneity-breaking kicks."""
    base = [fp.state for fp in find_fixed_points(replace(p, modes=None))]
    base += _collective_seeds(p)
    seeds = []
    for st in base:
        emb = mf.embed_collective(st, p) if isinstance(st, mf.MeanFieldState) else st
        seeds.append(emb)
        for m in range(p.modes.count):
            for kick in (0.1, -0.1):
                amps = emb.amplitudes.copy()
                amps[m] += kick
                seeds.append(mf.MultiModeState(amps, emb.spins))
        for i in range(p.n_ions):
            for kick in (0.1, -0.1):
                spins = emb.spins.copy()
                spins[i, 2] += kick
                seeds.append(mf.MultiModeState(emb.amplitudes, spins))
    return seeds


def find_fixed_points(p: ModelParams, seeds=None):
    """Locate steady states by damped Newton from a deterministic seed set.

    The default seeds are a 12-point Bloch-sphere grid (phonon amplitude set
    by the linear phonon relation) plus the analytic bright and dark states;
    site-resolved searches additionally perturb each mode amplitude and each
    ion's polarisation by +-0.1 to expose inhomogeneous solutions. Converged
    solutions closer than 1e-6 are merged. Returns classified fixed points
    sorted by mean Jz (brightest last); an empty list means no convergence
    from any seed.
    """
    p = validate_params(p)
    multimode = not p.single_mode()
    if multimode:
        rhs = mf.multimode_rhs_flat(p)
        default_seeds = _multimode_seeds(p)
        n_modes = p.modes.count
        unflat = lambda y: mf.MultiModeState.from_flat(y, n_modes)
    else:
        rhs = mf.collective_rhs_flat(p)
        default_seeds = _collective_seeds(p)
        unflat = mf.MeanFieldState.from_flat

    all_seeds = default_seeds + list(seeds or [])
    f = lambda y: rhs(0.0, y)

    solutions = []
    for seed in all_seeds:
        y0 = seed.flat() if hasattr(seed, "flat") else np.asarray(seed, dtype=float)
        y, res, ok = newton_fixed_point(f, y0)
        if not ok or res >= RESIDUAL_TOL:
            continue
        if any(np.linalg.norm(y - y_known) < DEDUP_TOL for y_known in solutions):
            continue
        solutions.append(y)

    fps = [classify_stability(unflat(y), p) for y in solutions]
    fps.sort(key=lambda fp: _mean_jz(fp.state))
    return fps


def _mean_jz(state):
    if isinstance(state, mf.MultiModeState):
        return float(state.spins[:, 2].mean())
    return float(state.spin[2])


# --------------------------------------------------------------------------
# Hopf detection along the bright branch


def _max_re_complex_pair(eigs, im_tol=1e-8):
    """Largest real part among eigenvalues with nonzero imaginary part."""
    complex_part = eigs[np.abs(eigs.imag) > im_tol]
    if len(complex_part) == 0:
        return None
    return float(complex_part.real.max())


def _continue_bright(p: ModelParams, v, state_prev):
    """One continuation step of the bright branch to coupling v."""
    pv = p.with_(coupling=v)
    rhs = mf.collective_rhs_flat(pv)
    f = lambda y: rhs(0.0, y)
    y, res, ok = newton_fixed_point(f, state_prev.flat())
    if not ok:
        return None, pv
    if np.linalg.norm(y - state_prev.flat()) > 0.5:
        return None, pv  # jumped off the branch
    return classify_stability(mf.MeanFieldState.from_flat(y), pv), pv


def detect_hopf(p: ModelParams, couplings=None, re_tol=1e-8):
    """Sweep coupling along the bright branch and locate Hopf crossings.

    Tracks the bright fixed point by Newton continuation over ``couplings``
    (default: 400 points from 0.01 to 1.5 in units of rabi), monitors the
    largest real part among complex eigenvalue pairs, and bisects every sign
    change down to |Re lambda| < ``re_tol``. Returns a (possibly empty) list
    of BifurcationPoints. The sweep stops where the branch ends.
    """
    p = validate_params(p)
    if couplings is None:
        couplings = np.linspace(0.01, 1.5, 400) * p.rabi
    couplings = np.asarray(couplings, dtype=float)

    state = bright_state_v0(p.with_(coupling=couplings[0]))
    branch = []  # (v, FixedPoint, max Re of complex pair)
    for v in couplings:
        fp, pv = _continue_bright(p, v, state)
        if fp is None:
            break
        state = fp.state
        branch.append((v, fp, _max_re_complex_pair(fp.jacobian_eigenvalues)))

    crossings = []
    for (v_lo, fp_lo, f_lo), (v_hi, fp_hi, f_hi) in zip(branch, branch[1:]):
        if f_lo is None or f_hi is None or f_lo == 0.0 or np.sign(f_lo) == np.sign(f_hi):
            continue
        crossing = _bisect_hopf(p, v_lo, v_hi, fp_lo.state, re_tol)
        if crossing is not None:
            crossings.append(crossing)
    return crossings


def _bisect_hopf(p, v_lo, v_hi, state_lo, re_tol, max_iter=60):
    fp_best = None
    state = state_lo
    f_lo = None
    for _ in range(max_iter):
        v_mid = 0.5 * (v_lo + v_hi)
        fp, pv = _continue_bright(p, v_mid, state)
        if fp is None:
            return None
        state = fp.state
        f_mid = _max_re_complex_pair(fp.jacobian_eigenvalues)
        if f_mid is None:
            return None
        fp_best = (v_mid, fp, pv)
        if abs(f_mid) < re_tol:
            break
        if f_lo is None:
            base = _continue_bright(p, v_lo, state)[0]
            f_lo = _max_re_complex_pair(base.jacobian_eigenvalues) if base else None
            if f_lo is None:
                return None
        if np.sign(f_mid) == np.sign(f_lo):
            v_lo, f_lo = v_mid, f_mid
        else:
            v_hi = v_mid
    v_mid, fp, pv = fp_best
    eigs = fp.jacobian_eigenvalues
    idx = np.argmax(np.where(np.abs(eigs.imag) > 1e-8, eigs.real, -np.inf))
    lam = eigs[idx]
    return BifurcationPoint(params=pv, coupling=float(v_mid), eigenvalue_pair=(lam, np.conj(lam)))


# --------------------------------------------------------------------------
# limit-cycle detection


def detect_limit_cycle(
    p: ModelParams,
    state0,
    t_total=5000.0,
    min_amplitude=1e-3,
    period_tol=0.01,
    rtol=1e-9,
):
    """Integrate from ``state0`` and test the late-time displacement signal.

    Integrates for ``t_total`` (units 1/rabi), discards the first half, and
    inspects X(t) = Re A_1(t): a limit cycle is reported when the
    peak-to-peak excursion exceeds ``min_amplitude`` and the intervals
    between successive upward crossings of the window mean agree to
    ``period_tol`` (relative). Returns LimitCycle or None.
    """
    p = validate_params(p)
    n_samples = max(20000, int(t_total * 10))
    sample_times = np.linspace(0.5 * t_total, t_total, n_samples)
    traj = mf.integrate(state0, p, t_total, rtol=rtol, sample_times=sample_times)
    x = traj.displacement()
    amplitude = float(x.max() - x.min())
    if amplitude <= min_amplitude:
        return None

    xc = x - x.mean()
    up = np.nonzero((xc[:-1] < 0) & (xc[1:] >= 0))[0]
    if len(up) < 3:
        return None
    # linear interpolation of each crossing time
    t = traj.times
    frac = -xc[up] / (xc[up + 1] - xc[up])
    t_cross = t[up] + frac * (t[up + 1] - t[up])
    intervals = np.diff(t_cross)
    mean_period = intervals.mean()
    if mean_period <= 0 or (intervals.max() - intervals.min()) > period_tol * mean_period:
        return None
    return LimitCycle(amplitude=amplitude, period=float(mean_period))


# --------------------------------------------------------------------------
# phase classification


@dataclass(frozen=True)
class CellResult:
    """Everything classify_phase derives for one parameter point."""

    params: ModelParams
    fixed_points: tuple
    bright_stable: bool
    dark_stable: bool
    hopf_unstable_focus: bool
    limit_cycle: LimitCycle | None
    label: str  # one of PHASE_LABELS or "Unclassifiable"


def _unstable_focus(fp: FixedPoint) -> bool:
    """Post-Hopf signature: leading unstable eigenvalue is a complex pair."""
    eigs = fp.jacobian_eigenvalues
    lead = eigs[np.argmax(eigs.real)]
    return lead.real > STABILITY_EPS and abs(lead.imag) > 1e-8


def analyze_cell(p: ModelParams, lc_time=5000.0, lc_rtol=1e-9) -> CellResult:
    """Fixed points, Hopf signature, optional limit-cycle hunt, phase label.

    Limit-cycle integration only runs when it can change the label: when a
    non-dark unstable focus exists (the bright branch has undergone a Hopf
    bifurcation) or when no stable fixed point was found at all. The hunt
    starts from the unstable focus, nudged off the fixed point.
    """
    p = validate_params(p)
    fps = find_fixed_points(p)
    bright_stable = any(fp.stability == STABLE and fp.branch == BRIGHT for fp in fps)
    dark_stable = any(fp.stability == STABLE and fp.branch == DARK for fp in fps)
    any_stable = any(fp.stability == STABLE for fp in fps)
    hopf_foci = [fp for fp in fps if _unstable_focus(fp) and fp.branch != DARK]

    cycle = None
    if hopf_foci or not any_stable:
        if hopf_foci:
            # tiny kick off the unstable focus: grows onto a cycle if one
            # exists, but cannot itself register as finite amplitude
            s0 = hopf_foci[0].state
            start = mf.MeanFieldState(s0.amplitude + 1e-4, s0.spin + [0.0, 0.0, 1e-4])
        else:
            start = mf.spins_down_vacuum(p)
        cycle = detect_limit_cycle(p, start, t_total=lc_time, rtol=lc_rtol)

    if cycle is not None and dark_stable:
        label = "PL+D"
    elif cycle is not None:
        label = "PL"
    elif bright_stable and dark_stable:
        label = "B+D"
    elif bright_stable:
        label = "B"
    elif dark_stable:
        label = "D"
    elif any_stable:
        label = "Crossover"
    else:
        label = "Unclassifiable"

    return CellResult(
        params=p,
        fixed_points=tuple(fps),
        bright_stable=bright_stable,
        dark_stable=dark_stable,
        hopf_unstable_focus=bool(hopf_foci),
        limit_cycle=cycle,
        label=label,
    )


def classify_phase(p: ModelParams, lc_time=5000.0) -> str:
    """Dynamical phase label for one parameter point.

    Returns one of PHASE_LABELS; raises UnclassifiableError when neither a
    stable fixed point nor a limit cycle is found.
    """
    cell = analyze_cell(p, lc_time=lc_time)
    if cell.label == "Unclassifiable":
        raise UnclassifiableError(
            f"no stable attractor at V={p.coupling:g}, gamma={p.spin_decay:g}, "
            f"delta={p.detuning:g}, kappa={p.phonon_decay:g}"
        )
    return cell.label
