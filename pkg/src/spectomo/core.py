"""Spectral-domain representation of single-photon states.

Angular frequencies live on a uniform grid and every integral over omega is
a Riemann sum with weight `d_omega` (`d_omega**2` for double integrals). A
density matrix stores the kernel rho(omega_i, omega_j), which carries units
of seconds, so unit trace means `sum(diag(rho)) * d_omega == 1` and purity
is `sum(|rho|**2) * d_omega**2`. The conjugate delay grid tau_k = k * d_tau
with `d_tau * d_omega * n == 2*pi` is where discrete Fourier transforms of
kernel bands naturally live; keeping the conjugacy exact is what makes the
measurement inversion in `reconstruction` an identity on noiseless data.

Continuum bra-kets normalize as <omega|omega'> = delta(omega - omega'),
which on the grid becomes a Kronecker delta divided by d_omega; that single
convention fixes all unit bookkeeping below.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .diagnostics import emit
from .errors import DataFormatError, GridMismatchError

# Tolerances enforced at construction time.
NORM_TOL = 1e-12        # amplitude normalization
TRACE_TOL = 1e-10       # kernel trace
PSD_TOL = 1e-10         # min eigenvalue >= -PSD_TOL * max eigenvalue
CLIP_WARN = 1e-6        # grid-edge mass loss worth warning about

DENSITY_MATRIX_UNITS = "SI-rad-per-s"


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform angular-frequency grid with its conjugate delay grid.

    omega_i = omega_min + i * d_omega for 0 <= i < n. The delay grid has n
    points tau_k = k * d_tau starting at 0, with d_tau = 2*pi / (n * d_omega).
    """

    omega_min: float
    d_omega: float
    n: int

    def __post_init__(self):
        if not self.d_omega > 0:
            raise ValueError(f"d_omega must be positive, got {self.d_omega}")
        if self.n < 2:
            raise ValueError(f"need at least 2 grid points, got {self.n}")

    @property
    def d_tau(self) -> float:
        return 2.0 * math.pi / (self.n * self.d_omega)

    @property
    def omega_max(self) -> float:
        return self.omega_min + (self.n - 1) * self.d_omega

    @property
    def span(self) -> float:
        return (self.n - 1) * self.d_omega

    @cached_property
    def omegas(self) -> np.ndarray:
        arr = self.omega_min + self.d_omega * np.arange(self.n)
        arr.flags.writeable = False
        return arr

    @cached_property
    def taus(self) -> np.ndarray:
        arr = self.d_tau * np.arange(self.n)
        arr.flags.writeable = False
        return arr

    def omega(self, i: int) -> float:
        return self.omega_min + i * self.d_omega

    def compatible_with(self, other: "FrequencyGrid") -> bool:
        return (
            self.n == other.n
            and math.isclose(self.d_omega, other.d_omega, rel_tol=1e-12, abs_tol=0.0)
            and math.isclose(
                self.omega_min, other.omega_min, rel_tol=1e-12, abs_tol=1e-12 * self.d_omega
            )
        )

    def require_compatible(self, other: "FrequencyGrid") -> None:
        if not self.compatible_with(other):
            raise GridMismatchError(f"grids differ: {self} vs {other}")


def make_grid(omega_center: float, span: float, n: int) -> FrequencyGrid:
    """Grid of n points covering [omega_center - span/2, omega_center + span/2]."""
    if not span > 0:
        raise ValueError(f"span must be positive, got {span}")
    if n < 2:
        raise ValueError(f"need at least 2 grid points, got {n}")
    return FrequencyGrid(omega_min=omega_center - span / 2.0, d_omega=span / (n - 1), n=n)


@dataclass(frozen=True)
class PureSpectralAmplitude:
    """Spectral amplitude psi(omega_i) of a pure wavepacket.

    Units are s**(1/2): sum(|psi|**2) * d_omega == 1. Use `from_samples` to
    normalize arbitrary sample values onto the grid.
    """

    grid: FrequencyGrid
    psi: np.ndarray

    def __post_init__(self):
        psi = np.array(self.psi, dtype=np.complex128)
        if psi.shape != (self.grid.n,):
            raise ValueError(f"psi must have shape ({self.grid.n},), got {psi.shape}")
        norm = float(np.vdot(psi, psi).real) * self.grid.d_omega
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(
                f"amplitude not normalized: sum |psi|^2 d_omega = {norm!r}; "
                "use PureSpectralAmplitude.from_samples"
            )
        psi.flags.writeable = False
        object.__setattr__(self, "psi", psi)

    @classmethod
    def from_samples(cls, grid: FrequencyGrid, values) -> "PureSpectralAmplitude":
        """Normalize raw samples so that sum(|psi|**2) * d_omega == 1."""
        v = np.asarray(values, dtype=np.complex128)
        norm = float(np.vdot(v, v).real) * grid.d_omega
        if not norm > 0.0:
            raise ValueError("cannot normalize an identically zero amplitude")
        return cls(grid, v / math.sqrt(norm))


@dataclass(frozen=True)
class SpectralDensityMatrix:
    """Discretized spectral density kernel rho(omega_i, omega_j).

    Invariants (checked at construction; use `from_kernel` for arbitrary
    matrices, which also symmetrizes, renormalizes and runs the
    positive-semidefiniteness check):
      * exactly Hermitian,
      * unit trace within TRACE_TOL,
      * real, nonnegative diagonal.

    The `cache` dict memoizes derived quantities (cross-section transforms);
    it is append-only and excluded from equality.
    """

    grid: FrequencyGrid
    rho: np.ndarray
    cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        n = self.grid.n
        m = np.array(self.rho, dtype=np.complex128)
        if m.shape != (n, n):
            raise ValueError(f"kernel must have shape ({n}, {n}), got {m.shape}")
        herm_dev = float(np.max(np.abs(m - m.conj().T)))
        if herm_dev > 0.0:
            raise ValueError(
                f"kernel must be exactly Hermitian (max deviation {herm_dev:.3e}); "
                "use SpectralDensityMatrix.from_kernel"
            )
        tr = float(np.trace(m).real) * self.grid.d_omega
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"kernel trace must be 1 within {TRACE_TOL}, got {tr!r}")
        diag = m.diagonal().real
        if diag.min() < -PSD_TOL:
            raise ValueError(f"diagonal must be nonnegative, min {diag.min():.3e}")
        m.flags.writeable = False
        object.__setattr__(self, "rho", m)

    @classmethod
    def from_kernel(
        cls,
        grid: FrequencyGrid,
        kernel,
        *,
        renormalize: bool = True,
        psd_tol: float = PSD_TOL,
    ) -> "SpectralDensityMatrix":
        """Build a state from an arbitrary kernel matrix.

        Symmetrizes to (K + K^dag)/2 (a no-op on already-Hermitian input),
        optionally renormalizes the trace to 1, and rejects kernels whose
        minimum eigenvalue is below -psd_tol times the maximum one.
        """
        m = np.array(kernel, dtype=np.complex128)
        if m.shape != (grid.n, grid.n):
            raise ValueError(f"kernel must have shape ({grid.n}, {grid.n}), got {m.shape}")
        m = (m + m.conj().T) / 2.0
        tr = float(np.trace(m).real) * grid.d_omega
        if renormalize:
            if not tr > 0.0:
                raise ValueError(f"cannot renormalize kernel with trace {tr!r}")
            m = m / tr
        w = np.linalg.eigvalsh(m) * grid.d_omega
        w_max = float(w[-1])
        if w_max <= 0.0 or float(w[0]) < -psd_tol * w_max:
            raise ValueError(
                f"kernel is not positive semidefinite: eigenvalues in "
                f"[{w[0]:.3e}, {w_max:.3e}], tolerance {psd_tol:.1e}"
            )
        return cls(grid, m)

    def trace(self) -> float:
        return float(np.trace(self.rho).real) * self.grid.d_omega

    def eigenvalues(self) -> np.ndarray:
        """Dimensionless spectral weights (eigenvalues of rho * d_omega), ascending."""
        return np.linalg.eigvalsh(self.rho) * self.grid.d_omega


def gaussian_pure(
    grid: FrequencyGrid, omega0: float, sigma: float, chirp: float = 0.0
) -> PureSpectralAmplitude:
    """Gaussian wavepacket: |psi|^2 has standard deviation sigma around omega0.

    `chirp` (units s^2) adds a quadratic spectral phase exp(i*chirp*(omega-omega0)^2),
    which leaves |psi|^2 unchanged. Warns if the +-4 sigma support is not
    fully covered by the grid, and separately if more than CLIP_WARN of the
    probability mass falls outside the grid edges.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if omega0 - 4 * sigma < grid.omega_min or omega0 + 4 * sigma > grid.omega_max:
        emit(
            "grid-coverage",
            f"gaussian at omega0={omega0}, sigma={sigma} is not covered to 4 sigma "
            f"by grid [{grid.omega_min}, {grid.omega_max}]",
            omega0=omega0,
            sigma=sigma,
        )
    z_hi = (grid.omega_max - omega0) / (sigma * math.sqrt(2.0))
    z_lo = (omega0 - grid.omega_min) / (sigma * math.sqrt(2.0))
    clipped = 0.5 * math.erfc(z_hi) + 0.5 * math.erfc(z_lo)
    if clipped > CLIP_WARN:
        emit(
            "mass-clipping",
            f"{clipped:.3e} of the wavepacket mass lies outside the grid and is "
            "absorbed by renormalization",
            clipped_mass=clipped,
        )
    x = grid.omegas - omega0
    samples = np.exp(-(x**2) / (4.0 * sigma**2) + 1j * chirp * x**2)
    return PureSpectralAmplitude.from_samples(grid, samples)


def density_from_pure(psi: PureSpectralAmplitude) -> SpectralDensityMatrix:
    """Rank-1 kernel psi(omega_1) * conj(psi(omega_2)); purity 1 by construction."""
    kernel = np.outer(psi.psi, psi.psi.conj())
    return SpectralDensityMatrix.from_kernel(psi.grid, kernel, renormalize=False)


def mix(components) -> SpectralDensityMatrix:
    """Convex mixture sum_k w_k * rho_k of states on a shared grid.

    `components` is a sequence of (weight, SpectralDensityMatrix) pairs with
    nonnegative weights summing to 1 within 1e-12.
    """
    components = list(components)
    if not components:
        raise ValueError("mixture needs at least one component")
    weights = [float(w) for w, _ in components]
    if min(weights) < 0.0:
        raise ValueError(f"weights must be nonnegative, got {weights}")
    total = sum(weights)
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1 within 1e-12, got {total!r}")
    grid = components[0][1].grid
    for _, state in components[1:]:
        grid.require_compatible(state.grid)
    kernel = np.zeros((grid.n, grid.n), dtype=np.complex128)
    for w, state in components:
        kernel += w * state.rho
    return SpectralDensityMatrix.from_kernel(grid, kernel)


def time_jitter_state(psi: PureSpectralAmplitude, jitter_std: float) -> SpectralDensityMatrix:
    """Mixture of a pure wavepacket over Gaussian-distributed emission times.

    A shift of the center time t_c multiplies psi(omega) by a phase linear in
    omega, so averaging over a zero-mean Gaussian t_c with standard deviation
    `jitter_std` multiplies the kernel by the characteristic function
    exp(-jitter_std**2 * (omega_1 - omega_2)**2 / 2). The diagonal (and hence
    the measured spectrum) is exactly |psi|^2 for every jitter strength.
    """
    if jitter_std < 0:
        raise ValueError(f"jitter_std must be nonnegative, got {jitter_std}")
    omegas = psi.grid.omegas
    delta = omegas[:, None] - omegas[None, :]
    damping = np.exp(-0.5 * (jitter_std * delta) ** 2)
    kernel = np.outer(psi.psi, psi.psi.conj()) * damping
    return SpectralDensityMatrix.from_kernel(psi.grid, kernel, renormalize=False)


def frequency_jitter_state(
    psi: PureSpectralAmplitude, jitter_std: float
) -> SpectralDensityMatrix:
    """Mixture of a pure wavepacket over Gaussian-distributed center frequencies.

    The center-frequency integral is discretized as grid-aligned shifts
    m * d_omega with |m * d_omega| <= 6 * jitter_std and renormalized Gaussian
    weights. Components shifted past the grid edges lose mass; the final
    trace renormalization absorbs that, with a warning above CLIP_WARN.
    """
    if jitter_std < 0:
        raise ValueError(f"jitter_std must be nonnegative, got {jitter_std}")
    if jitter_std == 0:
        return density_from_pure(psi)
    grid = psi.grid
    n = grid.n
    m_max = int(math.ceil(6.0 * jitter_std / grid.d_omega))
    shifts = np.arange(-m_max, m_max + 1)
    weights = np.exp(-0.5 * (shifts * grid.d_omega / jitter_std) ** 2)
    weights /= weights.sum()
    kernel = np.zeros((n, n), dtype=np.complex128)
    for m_shift, w in zip(shifts, weights):
        shifted = np.zeros(n, dtype=np.complex128)
        if m_shift >= 0:
            shifted[m_shift:] = psi.psi[: n - m_shift]
        else:
            shifted[: n + m_shift] = psi.psi[-m_shift:]
        kernel += w * np.outer(shifted, shifted.conj())
    clipped = 1.0 - float(np.trace(kernel).real) * grid.d_omega
    if clipped > CLIP_WARN:
        emit(
            "mass-clipping",
            f"{clipped:.3e} of the jittered mass was shifted off the grid and is "
            "absorbed by renormalization",
            clipped_mass=clipped,
        )
    return SpectralDensityMatrix.from_kernel(grid, kernel)


def purity(state: SpectralDensityMatrix) -> float:
    """tr(rho^2) of the kernel: sum |rho_ij|^2 * d_omega^2. 1 iff pure."""
    return float(np.vdot(state.rho, state.rho).real) * state.grid.d_omega**2


def hs_overlap(a: SpectralDensityMatrix, b: SpectralDensityMatrix) -> float:
    """Hilbert-Schmidt overlap tr(rho_a rho_b); the distinguishability measure.

    Real for Hermitian inputs; the (rounding-level) imaginary residue is
    discarded.
    """
    a.grid.require_compatible(b.grid)
    value = complex(np.vdot(b.rho, a.rho)) * a.grid.d_omega**2
    return value.real


def hs_distance(a: np.ndarray, b: np.ndarray, grid: FrequencyGrid) -> float:
    """Hilbert-Schmidt distance sqrt(sum |a - b|^2 * d_omega^2) between kernels."""
    diff = np.asarray(a) - np.asarray(b)
    return math.sqrt(float(np.vdot(diff, diff).real)) * grid.d_omega


@dataclass(frozen=True)
class ValidationReport:
    """Deviations of a kernel from the density-matrix contract."""

    trace: float
    trace_deviation: float
    hermiticity_deviation: float
    min_eigenvalue: float
    max_eigenvalue: float
    min_diagonal: float
    trace_ok: bool
    hermitian_ok: bool
    psd_ok: bool
    diagonal_ok: bool

    @property
    def ok(self) -> bool:
        return self.trace_ok and self.hermitian_ok and self.psd_ok and self.diagonal_ok

    def summary(self) -> str:
        def mark(flag: bool) -> str:
            return "ok" if flag else "FAIL"

        return "\n".join(
            [
                f"trace        {self.trace:.12g} (deviation {self.trace_deviation:.3e}) [{mark(self.trace_ok)}]",
                f"hermiticity  max deviation {self.hermiticity_deviation:.3e} [{mark(self.hermitian_ok)}]",
                f"eigenvalues  min {self.min_eigenvalue:.3e}, max {self.max_eigenvalue:.3e} [{mark(self.psd_ok)}]",
                f"diagonal     min {self.min_diagonal:.3e} [{mark(self.diagonal_ok)}]",
            ]
        )


def validate(state, grid: FrequencyGrid | None = None) -> ValidationReport:
    """Report trace, Hermiticity, positivity and diagonal checks.

    Accepts a SpectralDensityMatrix or a raw matrix plus its grid. Raw
    matrices are symmetrized only for the eigenvalue report; the Hermiticity
    deviation is measured on the input as given.
    """
    if isinstance(state, SpectralDensityMatrix):
        m, grid = state.rho, state.grid
    else:
        if grid is None:
            raise ValueError("grid is required when validating a raw matrix")
        m = np.asarray(state, dtype=np.complex128)
        if m.shape != (grid.n, grid.n):
            raise ValueError(f"matrix must have shape ({grid.n}, {grid.n}), got {m.shape}")
    herm_dev = float(np.max(np.abs(m - m.conj().T)))
    tr = float(np.trace(m).real) * grid.d_omega
    w = np.linalg.eigvalsh((m + m.conj().T) / 2.0) * grid.d_omega
    min_eig, max_eig = float(w[0]), float(w[-1])
    diag = m.diagonal()
    min_diag = float(diag.real.min())
    diag_imag = float(np.max(np.abs(diag.imag)))
    return ValidationReport(
        trace=tr,
        trace_deviation=abs(tr - 1.0),
        hermiticity_deviation=herm_dev,
        min_eigenvalue=min_eig,
        max_eigenvalue=max_eig,
        min_diagonal=min_diag,
        trace_ok=abs(tr - 1.0) <= TRACE_TOL,
        hermitian_ok=herm_dev == 0.0,
        psd_ok=min_eig >= -PSD_TOL * max(max_eig, 0.0),
        diagonal_ok=diag_imag == 0.0 and min_diag >= -PSD_TOL,
    )


# ---------------------------------------------------------------------------
# Density-matrix interchange format (JSON)
# ---------------------------------------------------------------------------

def density_matrix_to_dict(state: SpectralDensityMatrix, units: str = DENSITY_MATRIX_UNITS) -> dict:
    """Interchange dict: row-major [re, im] pairs, lower triangle derived from upper."""
    n = state.grid.n
    m = state.rho
    pairs = []
    for i in range(n):
        for j in range(n):
            v = m[i, j] if i <= j else m[j, i].conjugate()
            pairs.append([float(v.real), float(v.imag)])
    return {
        "omega_min": state.grid.omega_min,
        "d_omega": state.grid.d_omega,
        "n": n,
        "units": units,
        "rho": pairs,
    }


def density_matrix_from_dict(doc: dict) -> SpectralDensityMatrix:
    try:
        omega_min = float(doc["omega_min"])
        d_omega = float(doc["d_omega"])
        n = int(doc["n"])
        pairs = doc["rho"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"malformed density-matrix document: {exc}") from exc
    if len(pairs) != n * n:
        raise DataFormatError(f"expected {n * n} kernel entries, got {len(pairs)}")
    try:
        flat = np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise DataFormatError(f"kernel entries must be [re, im] pairs: {exc}") from exc
    kernel = flat.reshape(n, n)
    try:
        grid = FrequencyGrid(omega_min=omega_min, d_omega=d_omega, n=n)
        return SpectralDensityMatrix.from_kernel(grid, kernel, renormalize=False)
    except ValueError as exc:
        raise DataFormatError(f"file does not hold a physical density matrix: {exc}") from exc


def save_density_matrix(path, state: SpectralDensityMatrix, units: str = DENSITY_MATRIX_UNITS) -> None:
    Path(path).write_text(json.dumps(density_matrix_to_dict(state, units)) + "\n")


def load_density_matrix(path) -> SpectralDensityMatrix:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DataFormatError(f"{path}: expected a JSON object")
    return density_matrix_from_dict(doc)
