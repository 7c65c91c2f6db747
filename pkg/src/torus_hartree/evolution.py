"""Time integration of the momentum-space Hartree flow.

The coefficient ODE is

    i d/dt alpha(n) = (4 pi^2 |n|^2 / L^2) alpha(n)
                      + sum_k alpha(n-k) Vhat(2 pi k / L) beta(k),

truncated to |n|_inf <= M by projecting the nonlinear term back onto the
cutoff.  Three interchangeable schemes are provided: Strang splitting
(both sub-flows exact: the kinetic one is a diagonal phase, the
nonlinear one is an exact phase because the convolution potential only
sees |Psi|^2, which a phase multiplication preserves), classical RK4 on
the same right-hand side, and a Picard/Duhamel collocation solver used
as an oracle inside its certified contraction horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss, legvander
from scipy.fft import next_fast_len

from . import diagnostics
from .field import SpectralState, TorusLattice, autocorrelation, wiener_norm
from .potential import PotentialModel

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "Lifespan",
    "InstabilityError",
    "LifespanGuardError",
    "ContractionError",
    "ConvergenceError",
    "rhs",
    "step_split",
    "step_rk4",
    "picard_solve",
    "lifespan_guard",
    "lifespan_guard_value",
    "evolve",
]


class InstabilityError(RuntimeError):
    """Non-finite coefficients appeared during a step."""


class LifespanGuardError(ValueError):
    """Requested horizon at or beyond the certified contraction time."""

    def __init__(self, message, guard):
        super().__init__(message)
        self.guard = guard


class ContractionError(RuntimeError):
    """Picard iterates left the contraction ball."""


class ConvergenceError(RuntimeError):
    """Picard iteration or its quadrature failed to converge."""


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "split_strang"
    dt: float = 1e-3
    dealiasing: bool = True
    picard_tol: float = 1e-10
    picard_tau: float = 1.5
    picard_max_iter: int = 100

    def __post_init__(self):
        if self.method not in ("split_strang", "rk4", "picard"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.picard_tau > 1.0:
            raise ValueError("contraction factor tau must exceed 1")
        if not self.picard_tol > 0.0:
            raise ValueError("picard tolerance must be positive")
        if self.picard_max_iter < 1:
            raise ValueError("picard_max_iter must be >= 1")


class _Kernel:
    """FFT workspace for one (lattice, model, grid) combination.

    With dealiasing the grid has at least 4M+2 points per axis, which
    makes the projected nonlinear term exact for cutoff-M data; without
    it the native 2M+1 grid is used and products alias.
    """

    def __init__(self, lattice: TorusLattice, model: PotentialModel, dealias: bool):
        self.lattice = lattice
        self.dealias = bool(dealias)
        G = next_fast_len(2 * lattice.size) if dealias else lattice.size
        self.G = G
        self.idx = lattice.embed_indexer(G)
        f = np.fft.fftfreq(G, 1.0 / G)
        radii = (2.0 * math.pi / lattice.L) * np.sqrt(
            f[:, None, None] ** 2 + f[None, :, None] ** 2 + f[None, None, :] ** 2)
        self.vhat = model.fourier_profile_radial(radii)
        self._phases = {}

    def field(self, alpha):
        cube = np.zeros((self.G,) * 3, dtype=complex)
        cube[self.idx] = alpha
        return self.G**3 * np.fft.ifftn(cube)

    def crop(self, phi):
        return np.fft.fftn(phi)[self.idx] / self.G**3

    def convolved_density(self, phi):
        """(V_L * |phi|^2)(x) on the grid; phi is the unit-density field."""
        return np.fft.ifftn(np.fft.fftn(np.abs(phi) ** 2) * self.vhat).real

    def nonlinear(self, alpha):
        """Projected convolution term P_M[(V_L * |phi|^2) phi] in coefficients."""
        phi = self.field(alpha)
        return self.crop(self.convolved_density(phi) * phi)

    def half_kinetic_phase(self, dt):
        key = float(dt)
        ph = self._phases.get(key)
        if ph is None:
            ph = np.exp(-0.5j * key * self.lattice.omega)
            self._phases[key] = ph
        return ph


@lru_cache(maxsize=16)
def _get_kernel(model: PotentialModel, lattice: TorusLattice, dealias: bool) -> _Kernel:
    # models hash by identity; lattices by value
    return _Kernel(lattice, model, dealias)


def rhs(state: SpectralState, model: PotentialModel, method: str = "fft"):
    """d alpha / dt as a complex array on the lattice.

    'fft' computes the nonlinearity pseudospectrally on the dealiased
    grid; 'direct' performs the explicit double sum through the
    autocorrelation and serves as the oracle.
    """
    lat = state.lattice
    if method == "fft":
        nl = _get_kernel(model, lat, True).nonlinear(state.alpha)
    elif method == "direct":
        corr = autocorrelation(state, "direct")
        dl = corr.lattice
        vhat = model.fourier_profile_radial(
            (2.0 * math.pi / lat.L) * np.sqrt(dl.norm_sq))
        coeff = vhat * corr.beta
        a = state.alpha
        n = lat.size
        M2 = 2 * lat.M
        nl = np.zeros_like(a)
        for k1 in range(-M2, M2 + 1):
            b1lo, b1hi = max(0, k1), min(n - 1, n - 1 + k1)
            for k2 in range(-M2, M2 + 1):
                b2lo, b2hi = max(0, k2), min(n - 1, n - 1 + k2)
                for k3 in range(-M2, M2 + 1):
                    b3lo, b3hi = max(0, k3), min(n - 1, n - 1 + k3)
                    c = coeff[k1 + M2, k2 + M2, k3 + M2]
                    nl[b1lo:b1hi + 1, b2lo:b2hi + 1, b3lo:b3hi + 1] += (
                        c * a[b1lo - k1:b1hi - k1 + 1,
                              b2lo - k2:b2hi - k2 + 1,
                              b3lo - k3:b3hi - k3 + 1])
    else:
        raise ValueError(f"unknown rhs method {method!r}")
    return -1j * (lat.omega * state.alpha + nl)


def _check_finite(alpha, t):
    if not np.all(np.isfinite(alpha.view(float))):
        raise InstabilityError(f"non-finite coefficients at t = {t:.9g}")


def step_split(state: SpectralState, model: PotentialModel, dt: float,
               kernel: _Kernel | None = None, dealias: bool = True) -> SpectralState:
    """One Strang step: half kinetic phase, exact nonlinear phase, half kinetic."""
    if kernel is None:
        kernel = _get_kernel(model, state.lattice, dealias)
    half = kernel.half_kinetic_phase(dt)
    a = half * state.alpha
    phi = kernel.field(a)
    phi = phi * np.exp(-1j * dt * kernel.convolved_density(phi))
    a = half * kernel.crop(phi)
    t1 = state.t + dt
    _check_finite(a, t1)
    return state.with_alpha(a, t=t1)


def step_rk4(state: SpectralState, model: PotentialModel, dt: float,
             kernel: _Kernel | None = None, dealias: bool = True) -> SpectralState:
    """Classical RK4 on the coefficient ODE; no renormalization applied."""
    if kernel is None:
        kernel = _get_kernel(model, state.lattice, dealias)
    omega = state.lattice.omega

    def f(a):
        return -1j * (omega * a + kernel.nonlinear(a))

    a0 = state.alpha
    k1 = f(a0)
    k2 = f(a0 + (0.5 * dt) * k1)
    k3 = f(a0 + (0.5 * dt) * k2)
    k4 = f(a0 + dt * k3)
    a1 = a0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    t1 = state.t + dt
    _check_finite(a1, t1)
    return state.with_alpha(a1, t=t1)


class Lifespan(NamedTuple):
    guard: float
    t_star: float


def lifespan_guard_value(rho: float, b: float, psi_a2_norm_sq: float) -> float:
    """Guard rho / (12 b |Psi|_{A^2}^2) from the raw physical norm."""
    return float(rho) / (12.0 * float(b) * float(psi_a2_norm_sq))


def lifespan_guard(state: SpectralState, model: PotentialModel) -> Lifespan:
    """Certified contraction horizon for the state, plus the density-free
    reference horizon t_star = 1/(12 b).

    The physical A^2 norm is sqrt(rho) times the coefficient norm, so rho
    cancels and the guard is 1 / (12 b wiener_norm(state, 2)^2).
    """
    w2 = wiener_norm(state, 2)
    return Lifespan(guard=lifespan_guard_value(state.rho, model.b, state.rho * w2 * w2),
                    t_star=1.0 / (12.0 * model.b))


def _collocation_matrix(nodes, t):
    """Integration matrix Q with (Q h)_i = int_0^{s_i} interpolant(h) ds."""
    q = nodes.size
    vander = legvander(nodes, q)  # columns P_0 .. P_q
    B = np.empty((q, q))
    B[:, 0] = nodes + 1.0
    for m in range(1, q):
        B[:, m] = (vander[:, m + 1] - vander[:, m - 1]) / (2 * m + 1)
    return 0.5 * t * np.linalg.solve(vander[:, :q].T, B.T).T


def picard_solve(state: SpectralState, model: PotentialModel, t_target: float,
                 tau: float = 1.5, tol: float = 1e-10,
                 max_iter: int = 100) -> SpectralState:
    """Solve the Duhamel fixed point up to t_target by collocation.

    Works in the rotating frame g(s) = exp(i omega s) alpha(s), where the
    Duhamel map reads g = alpha0 - i int_0^t exp(i omega s) NL(alpha(s)) ds.
    The integral is evaluated on Gauss-Legendre nodes through the exact
    integration matrix of the degree q-1 interpolant, with q doubling
    until the endpoint moves by less than 0.1 tol.  Iterates start at the
    free flight (g = alpha0) and must stay inside the contraction ball of
    radius tau times the initial A^2 norm.
    """
    t = float(t_target)
    if t < 0.0:
        raise ValueError("t_target must be non-negative")
    if not tau > 1.0:
        raise ValueError("contraction factor tau must exceed 1")
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    if t == 0.0:
        return state
    guard = lifespan_guard(state, model).guard
    if t >= guard:
        raise LifespanGuardError(
            f"t_target = {t:.6g} is not below the lifespan guard {guard:.6g}",
            guard)

    lat = state.lattice
    kernel = _get_kernel(model, lat, True)
    omega = lat.omega
    w2 = lat.a2_weight

    def a2norm(arr):
        return lat.ordered_sum(w2 * np.abs(arr))

    a0 = state.alpha
    ball = tau * a2norm(a0)
    prev_end = None
    for q in (8, 16, 32, 64):
        nodes, weights = leggauss(q)
        s_nodes = 0.5 * t * (nodes + 1.0)
        Q = _collocation_matrix(nodes, t)
        rot = [np.exp(1j * s * omega) for s in s_nodes]
        g = [a0.copy() for _ in range(q)]

        def node_terms(g_list):
            return [rot[i] * kernel.nonlinear(np.conj(rot[i]) * g_list[i])
                    for i in range(q)]

        converged = False
        for _ in range(max_iter):
            h = node_terms(g)
            g_new = [a0 - 1j * sum(Q[i, j] * h[j] for j in range(q))
                     for i in range(q)]
            delta = max(a2norm(g_new[i] - g[i]) for i in range(q))
            g = g_new
            worst = max(a2norm(gi) for gi in g)
            if worst > ball:
                raise ContractionError(
                    f"iterate norm {worst:.6g} left the contraction ball "
                    f"{ball:.6g} (tau = {tau})")
            if delta < tol:
                converged = True
                break
        if not converged:
            raise ConvergenceError(
                f"no fixed point within {max_iter} iterations (last delta "
                f"{delta:.3g}, tol {tol:.3g})")

        h = node_terms(g)
        integral = sum((0.5 * t * weights[j]) * h[j] for j in range(q))
        end = np.exp(-1j * omega * t) * (a0 - 1j * integral)
        if prev_end is not None and a2norm(end - prev_end) < 0.1 * tol:
            return state.with_alpha(end, t=state.t + t)
        prev_end = end
    raise ConvergenceError("Duhamel quadrature did not settle at 64 nodes")


@dataclass
class Trajectory:
    """Recorded output of evolve: diagnostics stream plus optional states."""

    records: list
    final_state: SpectralState
    context: "diagnostics.TrajectoryContext"
    states: list | None = dataclass_field(default=None)

    def __post_init__(self):
        ts = [r.t for r in self.records]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("record times must increase strictly")


def evolve(state: SpectralState, model: PotentialModel, t_final: float,
           config: IntegratorConfig | None = None, stride: int = 1,
           keep_states: bool = True) -> Trajectory:
    """Advance by fixed steps, emitting a record every ``stride`` steps.

    The first and final instants are always recorded; a shortened final
    step covers any remainder of t_final.  Record times are k * dt
    computed from the step index, not accumulated.
    """
    if config is None:
        config = IntegratorConfig()
    t_final = float(t_final)
    if t_final <= 0.0:
        raise ValueError("t_final must be positive")
    stride = int(stride)
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if config.method == "picard":
        guard = lifespan_guard(state, model).guard
        if t_final >= guard:
            raise LifespanGuardError(
                f"t_final = {t_final:.6g} is not below the lifespan guard "
                f"{guard:.6g}", guard)

    kernel = _get_kernel(model, state.lattice, config.dealiasing)
    if config.method == "split_strang":
        def step(s, h):
            return step_split(s, model, h, kernel=kernel)
    elif config.method == "rk4":
        def step(s, h):
            return step_rk4(s, model, h, kernel=kernel)
    else:
        def step(s, h):
            return picard_solve(s, model, h, tau=config.picard_tau,
                                tol=config.picard_tol,
                                max_iter=config.picard_max_iter)

    dt = config.dt
    t0 = state.t
    n_full = int(math.floor(t_final / dt + 1e-12))
    remainder = t_final - n_full * dt
    do_partial = remainder > 1e-12 * dt

    context = diagnostics.TrajectoryContext.from_state(state, model)
    records = [diagnostics.make_record(state, model, context)]
    states = [state] if keep_states else None

    current = state
    for k in range(1, n_full + 1):
        current = step(current, dt)
        current = current.with_alpha(current.alpha, t=t0 + k * dt)
        if k % stride == 0 or (k == n_full and not do_partial):
            records.append(diagnostics.make_record(current, model, context))
            if keep_states:
                states.append(current)
    if do_partial:
        current = step(current, remainder)
        current = current.with_alpha(current.alpha, t=t0 + t_final)
        records.append(diagnostics.make_record(current, model, context))
        if keep_states:
            states.append(current)

    return Trajectory(records=records, final_state=current,
                      context=context, states=states)
