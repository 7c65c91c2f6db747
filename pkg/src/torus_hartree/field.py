"""Momentum-space representation of the order parameter.

The order parameter on the box [-L/2, L/2)^3 at density rho is carried
as truncated Fourier coefficients alpha(n), |n|_inf <= M, normalized so
that sum |alpha|^2 = 1 (the physical field is then sqrt(rho) times the
unit-density synthesis).  All scalar reductions run in one fixed order,
shells of |n|^2 then lexicographic, so results are bit-reproducible
across runs and thread counts.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.random import Generator, Philox, SeedSequence
from scipy.fft import next_fast_len

__all__ = [
    "TorusLattice",
    "SpectralState",
    "AutoCorrelation",
    "autocorrelation",
    "wiener_norm",
    "s_sum",
    "t_sum",
    "to_physical",
    "to_spectral",
    "make_state",
    "random_state",
    "time_reversal",
    "pointwise_product",
    "save_state",
    "load_state",
]

SNAPSHOT_FORMAT = "torus-hartree-state"
SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class TorusLattice:
    """Cubic truncation {n in Z^3 : |n|_inf <= M} of the momentum lattice.

    Arrays indexed by lattice site use axis index n_i + M.
    """

    L: float
    M: int

    def __post_init__(self):
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "M", int(self.M))
        if self.L <= 0.0:
            raise ValueError("L must be positive")
        if self.M < 1:
            raise ValueError("M must be >= 1")

    @property
    def size(self) -> int:
        return 2 * self.M + 1

    @property
    def shape(self):
        return (self.size,) * 3

    @cached_property
    def n1d(self):
        a = np.arange(-self.M, self.M + 1)
        a.setflags(write=False)
        return a

    @cached_property
    def norm_sq(self):
        n = self.n1d
        out = (n[:, None, None] ** 2 + n[None, :, None] ** 2
               + n[None, None, :] ** 2).astype(float)
        out.setflags(write=False)
        return out

    @cached_property
    def omega(self):
        """Kinetic symbol 4 pi^2 |n|^2 / L^2 per site."""
        out = (4.0 * math.pi**2 / self.L**2) * self.norm_sq
        out.setflags(write=False)
        return out

    @cached_property
    def a2_weight(self):
        """Order-2 Wiener weight 1 + (2 pi |n| / L)^2 per site."""
        out = 1.0 + (2.0 * math.pi / self.L) ** 2 * self.norm_sq
        out.setflags(write=False)
        return out

    @cached_property
    def order(self):
        """Flat-index permutation: |n|^2 shells, then lexicographic n."""
        n = self.n1d
        g = np.broadcast_arrays(n[:, None, None], n[None, :, None],
                                n[None, None, :])
        perm = np.lexsort((g[2].ravel(), g[1].ravel(), g[0].ravel(),
                           self.norm_sq.ravel()))
        perm.setflags(write=False)
        return perm

    def ordered_sum(self, values) -> float:
        """Reduce a per-site array in the fixed deterministic order."""
        v = np.asarray(values)
        if v.size != self.size**3:
            raise ValueError("array does not match lattice size")
        return float(np.sum(v.ravel()[self.order]))

    def index_of(self, n):
        """Array index triple of lattice vector n; raises if outside."""
        n = np.asarray(n, dtype=int).reshape(3)
        if np.any(np.abs(n) > self.M):
            raise ValueError(f"mode {tuple(int(v) for v in n)} outside cutoff M={self.M}")
        return tuple(int(v) + self.M for v in n)

    def embed_indexer(self, G: int):
        """Fancy index placing lattice data into a size-G FFT cube."""
        if G < self.size:
            raise ValueError(f"grid size {G} too small for cutoff M={self.M}")
        w = self.n1d % G
        return np.ix_(w, w, w)


@dataclass(frozen=True)
class SpectralState:
    """Coefficients alpha on a lattice, at density rho and time t.

    The constructor does not force sum |alpha|^2 = 1: integrator
    internals legitimately hold unnormalized intermediates, and mass
    drift is itself a diagnostic.  State builders and snapshot loading
    do validate normalization.
    """

    lattice: TorusLattice
    rho: float
    t: float
    alpha: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "t", float(self.t))
        if self.rho <= 0.0:
            raise ValueError("rho must be positive")
        a = np.ascontiguousarray(self.alpha, dtype=complex)
        if a.shape != self.lattice.shape:
            raise ValueError(f"alpha shape {a.shape} != lattice shape {self.lattice.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)

    @property
    def mass(self) -> float:
        """sum |alpha|^2 in the deterministic order (1 when normalized)."""
        a = self.alpha
        return self.lattice.ordered_sum(a.real**2 + a.imag**2)

    def with_alpha(self, alpha, t=None) -> "SpectralState":
        return SpectralState(self.lattice, self.rho,
                             self.t if t is None else float(t), alpha)


@dataclass(frozen=True)
class AutoCorrelation:
    """beta(k) = sum_m conj(alpha(m)) alpha(m+k) on the difference lattice.

    The difference lattice shares L and has cutoff 2M, on which beta is
    exact for truncated alpha.
    """

    lattice: TorusLattice
    beta: np.ndarray

    def __post_init__(self):
        b = np.ascontiguousarray(self.beta, dtype=complex)
        if b.shape != self.lattice.shape:
            raise ValueError("beta shape does not match difference lattice")
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)


def difference_lattice(lattice: TorusLattice) -> TorusLattice:
    return TorusLattice(lattice.L, 2 * lattice.M)


def autocorrelation(state: SpectralState, method: str = "fft") -> AutoCorrelation:
    """Compute beta on the difference lattice.

    'fft' embeds alpha in a zero-padded cube and reads the circular
    autocorrelation off ifftn(|fftn|^2); padding to at least 4M+1 per
    axis makes wraparound images vanish.  'direct' performs the explicit
    shifted sum and serves as the oracle.
    """
    lat = state.lattice
    M = lat.M
    diff = difference_lattice(lat)
    if method == "fft":
        P = next_fast_len(4 * M + 1)
        cube = np.zeros((P, P, P), dtype=complex)
        cube[lat.embed_indexer(P)] = state.alpha
        corr = np.fft.ifftn(np.abs(np.fft.fftn(cube)) ** 2)
        beta = corr[diff.embed_indexer(P)]
        return AutoCorrelation(diff, beta)
    if method == "direct":
        a = state.alpha
        n = lat.size
        beta = np.empty(diff.shape, dtype=complex)
        for k1 in range(-2 * M, 2 * M + 1):
            lo1, hi1 = max(0, -k1), min(n - 1, n - 1 - k1)
            for k2 in range(-2 * M, 2 * M + 1):
                lo2, hi2 = max(0, -k2), min(n - 1, n - 1 - k2)
                for k3 in range(-2 * M, 2 * M + 1):
                    lo3, hi3 = max(0, -k3), min(n - 1, n - 1 - k3)
                    left = a[lo1:hi1 + 1, lo2:hi2 + 1, lo3:hi3 + 1]
                    right = a[lo1 + k1:hi1 + k1 + 1,
                              lo2 + k2:hi2 + k2 + 1,
                              lo3 + k3:hi3 + k3 + 1]
                    beta[k1 + 2 * M, k2 + 2 * M, k3 + 2 * M] = np.vdot(left, right)
        return AutoCorrelation(diff, beta)
    raise ValueError(f"unknown autocorrelation method {method!r}")


def wiener_norm(state: SpectralState, r: int) -> float:
    """Weighted coefficient-space Wiener norm of order r in {0, 2}.

    r = 0 is the plain absolute sum (coinciding with s_sum); r = 2 uses
    the weight 1 + (2 pi |n| / L)^2.  This is the norm of the
    unit-density field; multiply by sqrt(rho) for the physical one.
    """
    if r not in (0, 2):
        raise ValueError("wiener_norm supports r in {0, 2}")
    a = np.abs(state.alpha)
    if r == 0:
        return state.lattice.ordered_sum(a)
    return state.lattice.ordered_sum(state.lattice.a2_weight * a)


def s_sum(state: SpectralState) -> float:
    """S = sum |alpha(n)|; controls the sup of the unit-density field."""
    return state.lattice.ordered_sum(np.abs(state.alpha))


def t_sum(state: SpectralState) -> float:
    """T = sum (4 pi^2 |n|^2 / L^2) |alpha(n)|; controls the Laplacian sup."""
    return state.lattice.ordered_sum(state.lattice.omega * np.abs(state.alpha))


def to_physical(state: SpectralState, g: int = 2) -> np.ndarray:
    """Synthesize the field on a (g*(2M+1))^3 collocation grid.

    Grid points are x_j = j L / G.  g = 2 is alias-free for quartic
    quantities.  Returns the physical-scale field (includes sqrt(rho)).
    """
    g = int(g)
    if g < 1:
        raise ValueError("grid factor g must be >= 1")
    lat = state.lattice
    G = g * lat.size
    cube = np.zeros((G, G, G), dtype=complex)
    cube[lat.embed_indexer(G)] = state.alpha
    return math.sqrt(state.rho) * G**3 * np.fft.ifftn(cube)


def to_spectral(field, lattice: TorusLattice, rho: float, t: float = 0.0) -> SpectralState:
    """Project physical-grid values back onto the truncated lattice."""
    field = np.asarray(field, dtype=complex)
    if field.ndim != 3 or len(set(field.shape)) != 1:
        raise ValueError("field must be a cube")
    G = field.shape[0]
    if G < lattice.size:
        raise ValueError(f"grid size {G} too small for cutoff M={lattice.M}")
    hat = np.fft.fftn(field)
    alpha = hat[lattice.embed_indexer(G)] / (G**3 * math.sqrt(rho))
    return SpectralState(lattice, rho, t, alpha)


def pointwise_product(a: SpectralState, b: SpectralState) -> SpectralState:
    """Coefficients of the pointwise product of two unit-density fields.

    Exact linear convolution of the coefficient arrays, returned on the
    doubled lattice (cutoff 2M).  Normalization is not preserved; the
    result is a Wiener-algebra element, not a physical state.
    """
    if a.lattice != b.lattice:
        raise ValueError("operands must share a lattice")
    lat = a.lattice
    G = next_fast_len(2 * lat.size - 1)
    ca = np.zeros((G, G, G), dtype=complex)
    cb = np.zeros_like(ca)
    idx = lat.embed_indexer(G)
    ca[idx] = a.alpha
    cb[idx] = b.alpha
    prod = np.fft.ifftn(np.fft.fftn(ca) * np.fft.fftn(cb))
    diff = difference_lattice(lat)
    return SpectralState(diff, a.rho, a.t, prod[diff.embed_indexer(G)])


def _normalize(alpha, where: str):
    norm = math.sqrt(float(np.sum(np.abs(alpha) ** 2)))
    if not (norm > 0.0 and math.isfinite(norm)):
        raise ValueError(f"{where}: state is not normalizable (norm {norm})")
    return alpha / norm


def make_state(family: str, lattice: TorusLattice, rho: float, **params) -> SpectralState:
    """Construct a normalized initial state.

    Families:
      plane_wave(k0, theta=0): alpha = exp(i theta) delta_{k0}.
      two_mode(k0=(0,0,0), escape_exponent): weights sqrt(rho/(rho+1))
        on k0 and sqrt(1/(rho+1)) on (floor(rho**a * L), 0, 0).
      perturbed_condensate(k0=(0,0,0), theta=0, eps, s, seed): condensate
        phase exp(i theta) at k0 plus random-phase tail with magnitudes
        eps (1 + |n - k0|)**(-s), then renormalized.
    """
    canonical = {
        "plane_wave": "plane_wave", "plane-wave": "plane_wave",
        "two_mode": "two_mode", "two-mode": "two_mode",
        "perturbed_condensate": "perturbed_condensate",
        "perturbed-condensate": "perturbed_condensate",
        "perturbed": "perturbed_condensate",
    }
    if family not in canonical:
        raise ValueError(f"unknown state family {family!r}; known: "
                         "plane_wave, two_mode, perturbed_condensate")
    family = canonical[family]
    rho = float(rho)
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    alpha = np.zeros(lattice.shape, dtype=complex)

    if family == "plane_wave":
        k0 = params.pop("k0", (0, 0, 0))
        theta = float(params.pop("theta", 0.0))
        _reject_extra(params)
        alpha[lattice.index_of(k0)] = np.exp(1j * theta)
        return SpectralState(lattice, rho, 0.0, alpha)

    if family == "two_mode":
        k0 = tuple(int(v) for v in np.asarray(params.pop("k0", (0, 0, 0))).reshape(3))
        a_exp = float(params.pop("escape_exponent"))
        _reject_extra(params)
        n_esc = (int(math.floor(rho**a_exp * lattice.L)), 0, 0)
        if n_esc == k0:
            raise ValueError("escape mode collides with the condensate mode")
        alpha[lattice.index_of(k0)] = math.sqrt(rho / (rho + 1.0))
        alpha[lattice.index_of(n_esc)] = math.sqrt(1.0 / (rho + 1.0))
        return SpectralState(lattice, rho, 0.0, alpha)

    # perturbed_condensate
    k0 = np.asarray(params.pop("k0", (0, 0, 0)), dtype=int).reshape(3)
    theta = float(params.pop("theta", 0.0))
    eps = float(params.pop("eps"))
    s = float(params.pop("s"))
    seed = params.pop("seed")
    _reject_extra(params)
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    if s <= 0.0:
        raise ValueError("tail exponent s must be positive")
    idx0 = lattice.index_of(k0)
    rng = Generator(Philox(seed if isinstance(seed, SeedSequence) else int(seed)))
    phases = rng.uniform(0.0, 2.0 * math.pi, size=lattice.shape)
    n = lattice.n1d
    dist = np.sqrt((n[:, None, None] - k0[0]) ** 2
                   + (n[None, :, None] - k0[1]) ** 2
                   + (n[None, None, :] - k0[2]) ** 2)
    alpha = eps * (1.0 + dist) ** (-s) * np.exp(1j * phases)
    alpha[idx0] = np.exp(1j * theta)
    return SpectralState(lattice, rho, 0.0, _normalize(alpha, "perturbed_condensate"))


def _reject_extra(params):
    if params:
        raise ValueError(f"unexpected parameters: {sorted(params)}")


def random_state(lattice: TorusLattice, rho: float = 1.0, seed=0) -> SpectralState:
    """Normalized state with iid complex-gaussian coefficients (test utility)."""
    rng = Generator(Philox(seed if isinstance(seed, SeedSequence) else int(seed)))
    alpha = rng.normal(size=lattice.shape) + 1j * rng.normal(size=lattice.shape)
    return SpectralState(lattice, float(rho), 0.0, _normalize(alpha, "random_state"))


def time_reversal(state: SpectralState) -> SpectralState:
    """The conjugate-reflection alpha(n) -> conj(alpha(-n)).

    Conjugating a flow by this map reverses its time direction, so
    evolve, reverse, evolve, reverse returns the initial state.
    """
    return state.with_alpha(np.conj(state.alpha[::-1, ::-1, ::-1]))


def save_state(state: SpectralState, path, family=None, seed=None):
    """Write a snapshot: JSON header plus base64 coefficient block.

    Coefficients are little-endian float64 pairs (re, im) in the
    deterministic lattice order.
    """
    lat = state.lattice
    flat = state.alpha.ravel()[lat.order]
    buf = np.empty(2 * flat.size, dtype="<f8")
    buf[0::2] = flat.real
    buf[1::2] = flat.imag
    doc = {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "L": lat.L,
        "M": lat.M,
        "rho": state.rho,
        "t": state.t,
        "family": family,
        "seed": seed,
        "encoding": "base64/float64-le",
        "order": "shell-lex",
        "data": base64.b64encode(buf.tobytes()).decode("ascii"),
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_state(path) -> SpectralState:
    """Read a snapshot written by save_state; validates normalization."""
    with open(path, "r", encoding="ascii") as fh:
        doc = json.load(fh)
    if doc.get("format") != SNAPSHOT_FORMAT:
        raise ValueError(f"{path}: not a state snapshot")
    if doc.get("version") != SNAPSHOT_VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {doc.get('version')}")
    lat = TorusLattice(doc["L"], doc["M"])
    buf = np.frombuffer(base64.b64decode(doc["data"]), dtype="<f8")
    if buf.size != 2 * lat.size**3:
        raise ValueError(f"{path}: coefficient block has wrong length")
    flat = buf[0::2] + 1j * buf[1::2]
    alpha = np.empty(lat.size**3, dtype=complex)
    alpha[lat.order] = flat
    state = SpectralState(lat, doc["rho"], doc["t"], alpha.reshape(lat.shape))
    if abs(state.mass - 1.0) > 1e-9:
        raise ValueError(f"{path}: snapshot mass {state.mass!r} deviates from 1")
    return state
