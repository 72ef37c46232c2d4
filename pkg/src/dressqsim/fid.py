"""Free-induction-decay readout.

The signal ``V(t) = V0 sum_a p_a Tr[U_a(t) rho0 U_a(t)^dag O]`` oscillates at
the eigenvalue gaps ``E_u - E_v``. A component ``exp(-i w t)`` is reported
at frequency ``+w`` on the spectrum axis.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, ContractViolation
from .evolution import Propagator, TimeGrid, check_density_matrix, map_channels
from .linalg import DEFAULT_POLICY, PAULI_X, PAULI_Y, NumericalPolicy, Spectrum, as_matrix, eigh, pairwise_sum
from .models import site_operator

__all__ = [
    "FidConfig",
    "Peak",
    "GapMatch",
    "MatchReport",
    "FidResult",
    "ladder_observable",
    "check_sampling",
    "fid_signal",
    "dft_spectrum",
    "extract_peaks",
    "match_gaps",
    "run_fid",
]

_CHUNK = 512


@dataclass(frozen=True)
class FidConfig:
    """Readout settings. ``observable`` is a matrix; see :func:`ladder_observable`."""

    grid: TimeGrid
    observable: np.ndarray
    V0: float = 1.0
    window: str = "none"

    def __post_init__(self):
        if self.window not in ("none", "hann"):
            raise ConfigError(f"unknown window {self.window!r}", key="fid.window")


@dataclass(frozen=True)
class Peak:
    omega: float
    amplitude: float
    power: float


@dataclass(frozen=True)
class GapMatch:
    omega: float
    gap: float
    delta: float
    matched: bool


@dataclass
class MatchReport:
    tolerance: float
    matches: list[GapMatch]
    unmatched_gaps: list[dict] = field(default_factory=list)

    @property
    def all_matched(self) -> bool:
        return all(m.matched for m in self.matches)

    def to_dict(self) -> dict:
        return {
            "tolerance": self.tolerance,
            "all_matched": self.all_matched,
            "matches": [asdict(m) for m in self.matches],
            "unmatched_gaps": self.unmatched_gaps,
        }


@dataclass
class FidResult:
    times: np.ndarray
    signal: np.ndarray
    frequencies: np.ndarray
    power: np.ndarray
    peaks: list[Peak]
    bin_width: float
    report: MatchReport | None = None


def ladder_observable(dims, site: int) -> np.ndarray:
    """``sigma^x_k + i sigma^y_k`` on two-level site ``k``."""
    if dims[site] != 2:
        raise ConfigError(f"site {site} has dimension {dims[site]}, ladder observable needs a qubit", key="fid.observable")
    return site_operator(PAULI_X + 1j * PAULI_Y, site, dims)


def check_sampling(spectrum: Spectrum, dt: float) -> None:
    """Every gap must sit below the Nyquist frequency ``pi / dt``."""
    width = float(spectrum.eigenvalues[-1] - spectrum.eigenvalues[0])
    if width > 0 and not dt < np.pi / width:
        raise ConfigError(
            f"dt = {dt:g} aliases the spectrum (width {width:.6g}); need dt < {np.pi / width:.6g}",
            key="fid.grid.dt",
        )


def _channel_signal(H, rho0, O, times, policy) -> np.ndarray:
    prop = Propagator(H, policy)
    out = np.empty(len(times), dtype=complex)
    for start in range(0, len(times), _CHUNK):
        U = prop.batch(times[start : start + _CHUNK])
        rho_t = U @ rho0 @ np.conj(np.swapaxes(U, 1, 2))
        out[start : start + _CHUNK] = np.einsum("tij,ji->t", rho_t, O)
    return out


def fid_signal(
    H_list,
    rho0,
    cfg: FidConfig,
    policy: NumericalPolicy = DEFAULT_POLICY,
    threads: int = 1,
    reference: Spectrum | None = None,
) -> np.ndarray:
    """Complex FID signal on ``cfg.grid`` for the weighted channels ``H_list``.

    ``reference`` is the noiseless spectrum used for the sampling guard; the
    first channel's spectrum is used when omitted.
    """
    H_list = list(H_list)
    if not H_list:
        raise ContractViolation("empty channel list")
    rho0 = check_density_matrix(rho0, policy)
    O = as_matrix(cfg.observable)
    if O.shape != rho0.shape:
        raise ContractViolation(f"observable shape {O.shape} does not match rho0 {rho0.shape}")
    check_sampling(reference if reference is not None else eigh(H_list[0][1], policy), cfg.grid.dt)
    times = cfg.grid.times
    terms = map_channels(lambda item: item[0] * _channel_signal(item[1], rho0, O, times, policy), H_list, threads)
    return cfg.V0 * pairwise_sum(terms)


def _window(name: str, n: int) -> np.ndarray:
    if name == "none":
        return np.ones(n)
    if name == "hann":
        return np.hanning(n)
    raise ConfigError(f"unknown window {name!r}", key="fid.window")


def dft_spectrum(signal, grid: TimeGrid, window: str = "none"):
    """Two-sided power spectrum ``|sum_n w_n x_n exp(+i w t_n)|^2``.

    Returns ``(frequencies, power)`` with frequencies ascending, in the
    same energy units as the Hamiltonian.
    """
    x = np.asarray(signal, dtype=complex)
    n = len(x)
    if n < 8:
        raise ContractViolation("need at least 8 samples for a spectrum")
    spec = n * np.fft.ifft(_window(window, n) * x)
    freqs = 2 * np.pi * np.fft.fftfreq(n, d=grid.dt)
    return np.fft.fftshift(freqs), np.fft.fftshift(np.abs(spec) ** 2)


def extract_peaks(frequencies, power, threshold_ratio: float, window_sum: float | None = None) -> list[Peak]:
    """Local maxima above ``threshold_ratio * max(power)``, sorted by amplitude.

    Neighbours wrap around the frequency axis. Each maximum is refined by a
    parabola through the log-power of the three bins around it.
    ``window_sum`` converts peak power to tone amplitude (defaults to the
    number of bins, i.e. no window).
    """
    f = np.asarray(frequencies, dtype=float)
    p = np.asarray(power, dtype=float)
    if p.size == 0:
        raise ContractViolation("empty spectrum")
    if not 0 < threshold_ratio < 1:
        raise ContractViolation("threshold_ratio must lie in (0, 1)")
    top = p.max()
    if top <= 0:
        return []
    norm = float(window_sum if window_sum is not None else p.size)
    df = f[1] - f[0] if f.size > 1 else 0.0
    left, right = np.roll(p, 1), np.roll(p, -1)
    idx = np.flatnonzero((p > left) & (p >= right) & (p >= threshold_ratio * top))
    peaks = []
    for i in idx:
        a, b, c = left[i], p[i], right[i]
        if a > 0 and c > 0:
            la, lb, lc = np.log(a), np.log(b), np.log(c)
            denom = la - 2 * lb + lc
            shift = 0.5 * (la - lc) / denom if denom < 0 else 0.0
            peak_power = float(np.exp(lb - 0.25 * (la - lc) * shift))
        else:
            denom = a - 2 * b + c
            shift = 0.5 * (a - c) / denom if denom < 0 else 0.0
            peak_power = float(b - 0.25 * (a - c) * shift)
        peaks.append(Peak(float(f[i] + shift * df), float(np.sqrt(peak_power)) / norm, peak_power))
    peaks.sort(key=lambda pk: -pk.amplitude)
    return peaks


def _distinct_gaps(spectrum: Spectrum, merge_tol: float):
    """Distinct values of ``E_u - E_v`` with the index pairs producing them."""
    g = spectrum.gaps()
    order = np.argsort(g, axis=None)
    flat = g.ravel()[order]
    groups: list[tuple[float, list]] = []
    d = spectrum.dim
    for pos, value in zip(order, flat):
        pair = divmod(int(pos), d)
        if groups and value - groups[-1][1][-1][0] <= merge_tol:
            groups[-1][1].append((value, pair))
        else:
            groups.append((value, [(value, pair)]))
    return [(float(np.mean([v for v, _ in members])), [pr for _, pr in members]) for _, members in groups]


def match_gaps(
    peaks,
    spectrum: Spectrum,
    tol: float,
    rho0=None,
    observable=None,
    floor: float = 1e-3,
) -> MatchReport:
    """Match each peak to the nearest noiseless gap ``E_u - E_v``.

    With ``rho0`` and ``observable`` given, gaps whose transition amplitude
    ``|sum rho_uv O_vu|`` exceeds ``floor`` but which no peak matched are
    listed as ``unmatched_gaps``.
    """
    scale = 1.0 + float(np.max(np.abs(spectrum.eigenvalues)))
    gaps = _distinct_gaps(spectrum, 1e-9 * scale)
    values = np.array([g for g, _ in gaps])
    matches = []
    hit = np.zeros(len(gaps), dtype=bool)
    for pk in peaks:
        j = int(np.argmin(np.abs(values - pk.omega)))
        delta = abs(values[j] - pk.omega)
        matches.append(GapMatch(pk.omega, float(values[j]), float(delta), bool(delta <= tol)))
        hit[j] |= delta <= tol
    unmatched = []
    if rho0 is not None and observable is not None:
        v = spectrum.eigenvectors
        rho_e = v.conj().T @ np.asarray(rho0) @ v
        obs_e = v.conj().T @ np.asarray(observable) @ v
        for j, (value, pairs) in enumerate(gaps):
            amp = abs(sum(rho_e[u, w] * obs_e[w, u] for u, w in pairs))
            if amp > floor and not hit[j]:
                unmatched.append({"gap": value, "amplitude": float(amp)})
    return MatchReport(tol, matches, unmatched)


def run_fid(
    H_list,
    H,
    rho0,
    cfg: FidConfig,
    threshold_ratio: float = 0.05,
    tol: float | None = None,
    policy: NumericalPolicy = DEFAULT_POLICY,
    threads: int = 1,
) -> FidResult:
    """Signal, spectrum, peaks and gap matching against the noiseless ``H``."""
    reference = eigh(H, policy)
    signal = fid_signal(H_list, rho0, cfg, policy, threads, reference=reference)
    freqs, power = dft_spectrum(signal, cfg.grid, cfg.window)
    window_sum = float(_window(cfg.window, cfg.grid.n_samples).sum())
    peaks = extract_peaks(freqs, power, threshold_ratio, window_sum)
    bin_width = 2 * np.pi / (cfg.grid.n_samples * cfg.grid.dt)
    report = match_gaps(peaks, reference, bin_width if tol is None else tol, rho0, cfg.observable)
    return FidResult(cfg.grid.times, signal, freqs, power, peaks, bin_width, report)
