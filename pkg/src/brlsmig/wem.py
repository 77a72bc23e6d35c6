"""2-D shot-profile split-step modeling/migration operator pair.

Model space is a reflectivity grid ``(nz, nx)`` flattened row-major
(depth-major); data space is one shot's traces ``(n_receivers, n_t)``
flattened row-major.  All spectral content lives strictly between DC and
Nyquist, so time synthesis and analysis stay exact transposes of each
other with a uniform 2/n_t weight.

Sign conventions, fixed once for the whole module: time synthesis is
``d(t) = (2/n_t) sum_j Re[D_j exp(+2*pi*i*j*t/n_t)]``, so a travel-time
delay ``tau`` multiplies a spectral component by ``exp(-i*omega*tau)``.
Continuing the source wavefield down and the scattered field back up both
accumulate delay, i.e. multiply by ``exp(-i*k_z*dz)`` per step; the
adjoint (migration) applies the conjugate phases in reverse order, which
is the classic cross-correlation imaging condition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linop import LinearOperator

__all__ = [
    "Grid2D",
    "VelocityModel",
    "Reflectivity",
    "AcquisitionGeometry",
    "ShotGather",
    "Wavelet",
    "ricker",
    "band_bins",
    "split_step_extrapolate",
    "SplitStepPropagator",
    "ShotOperator",
    "shot_operator",
    "survey_operators",
    "survey_forward",
    "survey_adjoint",
]


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid2D:
    """Regularly sampled 2-D field; axis 0 is the fast (depth/time) axis."""

    values: np.ndarray
    d1: float
    d2: float
    o1: float = 0.0
    o2: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"grid values must be 2-D, got shape {v.shape}")
        if not (self.d1 > 0 and self.d2 > 0):
            raise ValueError(f"grid spacings must be positive, got {self.d1}, {self.d2}")
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class VelocityModel:
    """Propagation velocity v(z, x) in m/s on a Grid2D."""

    grid: Grid2D

    def __post_init__(self):
        v = self.grid.values
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("velocities must be strictly positive and finite")

    @property
    def values(self) -> np.ndarray:
        return self.grid.values

    @property
    def nz(self) -> int:
        return self.grid.shape[0]

    @property
    def nx(self) -> int:
        return self.grid.shape[1]

    @property
    def dz(self) -> float:
        return self.grid.d1

    @property
    def dx(self) -> float:
        return self.grid.d2


@dataclass(frozen=True)
class Reflectivity:
    """Dimensionless reflectivity m(z, x), same shape as its velocity grid."""

    grid: Grid2D

    def __post_init__(self):
        if not np.all(np.isfinite(self.grid.values)):
            raise ValueError("reflectivity must be finite-valued")

    @property
    def values(self) -> np.ndarray:
        return self.grid.values

    def ravel(self) -> np.ndarray:
        return self.grid.values.ravel()


@dataclass(frozen=True)
class AcquisitionGeometry:
    """Shot positions, per-shot receiver offsets, and the recording axis.

    Positions and offsets are lateral grid indices; an off-end survey has
    all offsets on one side of the shot.
    """

    shot_positions: tuple
    receiver_offsets: tuple
    n_t: int
    dt: float

    def __post_init__(self):
        object.__setattr__(self, "shot_positions", tuple(int(s) for s in self.shot_positions))
        object.__setattr__(self, "receiver_offsets", tuple(int(o) for o in self.receiver_offsets))
        if not self.shot_positions:
            raise ValueError("geometry needs at least one shot")
        if not self.receiver_offsets:
            raise ValueError("geometry needs at least one receiver offset")
        if self.n_t < 2 or self.dt <= 0:
            raise ValueError(f"invalid recording axis: n_t={self.n_t}, dt={self.dt}")

    @property
    def n_shots(self) -> int:
        return len(self.shot_positions)

    @property
    def receivers_per_shot(self) -> int:
        return len(self.receiver_offsets)

    def receiver_positions(self, shot_index: int) -> np.ndarray:
        s = self.shot_positions[shot_index]
        return np.array([s + o for o in self.receiver_offsets], dtype=int)


@dataclass(frozen=True)
class ShotGather:
    """Recorded traces for one source position, shape (n_receivers, n_t)."""

    shot_index: int
    traces: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.traces, dtype=np.float64)
        if t.ndim != 2:
            raise ValueError(f"traces must be 2-D, got shape {t.shape}")
        if not np.all(np.isfinite(t)):
            raise ValueError("traces contain non-finite values")
        object.__setattr__(self, "traces", t)

    def ravel(self) -> np.ndarray:
        return self.traces.ravel()


@dataclass(frozen=True)
class Wavelet:
    """Source time signature, peak absolute amplitude normalized to 1."""

    samples: np.ndarray
    dt: float
    dominant_frequency: float
    delay: float


def ricker(
    dominant_frequency: float, dt: float, n_samples: int, delay: float = 0.0
) -> Wavelet:
    """Ricker wavelet: (1 - 2 u^2) exp(-u^2) with u = pi f (t - delay).

    The peak value is 1 at t = delay; the dominant frequency must be below
    Nyquist.
    """
    nyquist = 1.0 / (2.0 * dt)
    if dominant_frequency >= nyquist:
        raise ValueError(
            f"dominant frequency {dominant_frequency} Hz is at or above "
            f"Nyquist {nyquist} Hz"
        )
    if dominant_frequency <= 0:
        raise ValueError(f"dominant frequency must be positive, got {dominant_frequency}")
    t = np.arange(int(n_samples)) * dt
    u = np.pi * dominant_frequency * (t - delay)
    w = (1.0 - 2.0 * u**2) * np.exp(-(u**2))
    w = w / np.max(np.abs(w))
    return Wavelet(samples=w, dt=dt, dominant_frequency=dominant_frequency, delay=delay)


# ---------------------------------------------------------------------------
# extrapolation
# ---------------------------------------------------------------------------

def band_bins(n_t: int, dt: float, band: tuple[float, float]) -> np.ndarray:
    """DFT bin indices whose frequencies fall inside ``band`` (Hz).

    Bins are restricted to 0 < j < n_t/2 (DC and Nyquist excluded) so the
    synthesis/analysis pair keeps a uniform weight.
    """
    f_min, f_max = band
    nyquist = 1.0 / (2.0 * dt)
    if not (0.0 < f_min < f_max < nyquist):
        raise ValueError(
            f"band must satisfy 0 < f_min < f_max < Nyquist ({nyquist} Hz), "
            f"got ({f_min}, {f_max})"
        )
    freqs = np.arange(n_t // 2 + 1) / (n_t * dt)
    bins = np.nonzero((freqs >= f_min) & (freqs <= f_max))[0]
    bins = bins[(bins > 0) & (bins < n_t // 2)]
    if bins.size == 0:
        raise ValueError(f"band ({f_min}, {f_max}) Hz selects no DFT bins")
    return bins


def split_step_extrapolate(
    field,
    velocity_row,
    dz: float,
    omega: float,
    dx: float,
    direction: str,
    ref_slowness: float | None = None,
) -> np.ndarray:
    """One depth step of split-step extrapolation at a single frequency.

    Stage (a): phase shift in the lateral-wavenumber domain with the
    reference slowness (lateral mean of 1/v by default), zeroing evanescent
    components where kx^2 > (omega * s_ref)^2.  Stage (b): space-domain
    phase correction for the residual slowness s(x) - s_ref.

    ``direction="down"`` accumulates delay (multiplies by exp(-i k_z dz));
    ``direction="up"`` applies the conjugate phases, so a down step followed
    by an up step restores the propagating part of the field.
    """
    field = np.asarray(field, dtype=np.complex128)
    v = np.asarray(velocity_row, dtype=np.float64)
    if field.shape != v.shape:
        raise ValueError(
            f"field length {field.shape} does not match velocity row {v.shape}"
        )
    if direction == "down":
        sign = -1.0
    elif direction == "up":
        sign = 1.0
    else:
        raise ValueError(f"direction must be 'down' or 'up', got {direction!r}")

    slowness = 1.0 / v
    s_ref = float(np.mean(slowness)) if ref_slowness is None else float(ref_slowness)
    kx = 2.0 * np.pi * np.fft.fftfreq(field.size, d=dx)
    kz_sq = (omega * s_ref) ** 2 - kx**2
    phase_k = np.where(
        kz_sq >= 0.0,
        np.exp(1j * sign * np.sqrt(np.maximum(kz_sq, 0.0)) * dz),
        0.0,
    )
    out = np.fft.ifft(phase_k * np.fft.fft(field))
    out *= np.exp(1j * sign * omega * (slowness - s_ref) * dz)
    return out


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


class SplitStepPropagator:
    """Precomputed depth-step phase tables for one velocity model and band.

    The lateral axis is zero-padded to the next power of two at least
    ``pad_factor`` times the grid width (wraparound suppression); live
    cells sit centered in the padded axis.  The step between depth rows
    ``iz`` and ``iz + 1`` uses the velocity row ``iz``, with the reference
    slowness taken as the lateral mean over the live cells and the padding
    filled by edge replication.

    Tables are immutable after construction and shared by every shot
    operator over the same model, so repeated applications are cheap and
    safe to run concurrently.
    """

    def __init__(
        self,
        velocity: VelocityModel,
        n_t: int,
        dt: float,
        band: tuple[float, float],
        pad_factor: float = 1.5,
    ):
        self.velocity = velocity
        self.n_t = int(n_t)
        self.dt = float(dt)
        self.band = (float(band[0]), float(band[1]))
        self.bins = band_bins(self.n_t, self.dt, self.band)
        self.omegas = 2.0 * np.pi * self.bins / (self.n_t * self.dt)

        nz, nx = velocity.nz, velocity.nx
        self.nz, self.nx = nz, nx
        self.n_pad = _next_pow2(max(nx, int(np.ceil(pad_factor * nx))))
        self.pad_left = (self.n_pad - nx) // 2

        slowness = 1.0 / velocity.values  # (nz, nx)
        self.ref_slowness = slowness.mean(axis=1)  # per-depth lateral mean
        pad_r = self.n_pad - nx - self.pad_left
        slow_pad = np.pad(slowness, ((0, 0), (self.pad_left, pad_r)), mode="edge")

        kx = 2.0 * np.pi * np.fft.fftfreq(self.n_pad, d=velocity.dx)
        nf = self.omegas.size
        dz = velocity.dz

        # delay-accumulating ("down"-sign) phases; adjoints conjugate these
        self._phase_k = np.empty((nz - 1, nf, self.n_pad), dtype=np.complex128)
        self._phase_x = np.empty((nz - 1, nf, self.n_pad), dtype=np.complex128)
        for iz in range(nz - 1):
            kz_sq = (self.omegas[:, None] * self.ref_slowness[iz]) ** 2 - kx[None, :] ** 2
            self._phase_k[iz] = np.where(
                kz_sq >= 0.0, np.exp(-1j * np.sqrt(np.maximum(kz_sq, 0.0)) * dz), 0.0
            )
            residual = slow_pad[iz] - self.ref_slowness[iz]
            self._phase_x[iz] = np.exp(
                -1j * self.omegas[:, None] * residual[None, :] * dz
            )

    @property
    def n_freqs(self) -> int:
        return self.omegas.size

    def step(self, fields: np.ndarray, iz: int) -> np.ndarray:
        """Delay-accumulating step across layer ``iz`` for all band
        frequencies at once; ``fields`` has shape (n_freqs, n_pad)."""
        out = np.fft.ifft(self._phase_k[iz] * np.fft.fft(fields, axis=1), axis=1)
        out *= self._phase_x[iz]
        return out

    def step_conj(self, fields: np.ndarray, iz: int) -> np.ndarray:
        """Exact conjugate transpose of :meth:`step` (phases conjugated,
        stage order reversed)."""
        out = np.fft.fft(fields * np.conj(self._phase_x[iz]), axis=1)
        out = np.fft.ifft(np.conj(self._phase_k[iz]) * out, axis=1)
        return out

    def source_wavefield(self, spectrum: np.ndarray, shot_pad_ix: int) -> np.ndarray:
        """Downward-continued point-source wavefield, shape (nz, n_freqs, n_pad)."""
        s = np.zeros((self.nz, self.n_freqs, self.n_pad), dtype=np.complex128)
        s[0, :, shot_pad_ix] = spectrum
        for iz in range(self.nz - 1):
            s[iz + 1] = self.step(s[iz], iz)
        return s


# ---------------------------------------------------------------------------
# shot operator
# ---------------------------------------------------------------------------

class ShotOperator(LinearOperator):
    """Linearized (Born) de-migration operator for a single shot.

    Forward: downward-continue the source wavefield, scatter against the
    reflectivity at every depth, upward-continue the accumulated scattered
    field, sample at the receivers, and synthesize time traces.  Adjoint:
    the exact numerical transpose of that chain, i.e. split-step migration
    with the zero-lag cross-correlation imaging condition.
    """

    def __init__(
        self,
        propagator: SplitStepPropagator,
        geometry: AcquisitionGeometry,
        wavelet: Wavelet,
        shot_index: int,
    ):
        prop = propagator
        if not (0 <= shot_index < geometry.n_shots):
            raise ValueError(
                f"shot_index {shot_index} out of range for {geometry.n_shots} shots"
            )
        if geometry.n_t != prop.n_t or geometry.dt != prop.dt:
            raise ValueError("geometry recording axis does not match propagator")
        if abs(wavelet.dt - geometry.dt) > 1e-12:
            raise ValueError(
                f"wavelet dt {wavelet.dt} does not match recording dt {geometry.dt}"
            )
        if wavelet.samples.size > geometry.n_t:
            raise ValueError(
                f"wavelet has {wavelet.samples.size} samples, longer than the "
                f"{geometry.n_t}-sample recording"
            )

        shot_ix = geometry.shot_positions[shot_index]
        rec_ix = geometry.receiver_positions(shot_index)
        if not (0 <= shot_ix < prop.nx):
            raise ValueError(
                f"shot {shot_index} at lateral index {shot_ix} is outside the "
                f"grid (0..{prop.nx - 1})"
            )
        if np.any(rec_ix < 0) or np.any(rec_ix >= prop.nx):
            bad = rec_ix[(rec_ix < 0) | (rec_ix >= prop.nx)]
            raise ValueError(
                f"shot {shot_index}: receiver indices {bad.tolist()} are outside "
                f"the grid (0..{prop.nx - 1})"
            )

        self.propagator = prop
        self.geometry = geometry
        self.wavelet = wavelet
        self.shot_index = int(shot_index)
        self._shot_pad_ix = prop.pad_left + shot_ix
        self._rec_pad_ix = prop.pad_left + rec_ix
        self._spectrum = np.fft.rfft(wavelet.samples, n=geometry.n_t)[prop.bins]
        self._live = slice(prop.pad_left, prop.pad_left + prop.nx)
        super().__init__(
            model_dim=prop.nz * prop.nx,
            data_dim=geometry.receivers_per_shot * geometry.n_t,
        )

    def _forward(self, x):
        prop = self.propagator
        nz, nx, n_t = prop.nz, prop.nx, prop.n_t
        refl = x.reshape(nz, nx)
        src = prop.source_wavefield(self._spectrum, self._shot_pad_ix)

        rpad = np.zeros(prop.n_pad)
        rpad[self._live] = refl[nz - 1]
        scattered = src[nz - 1] * rpad[None, :]
        for iz in range(nz - 2, -1, -1):
            scattered = prop.step(scattered, iz)
            rpad = np.zeros(prop.n_pad)
            rpad[self._live] = refl[iz]
            scattered += src[iz] * rpad[None, :]

        d_freq = scattered[:, self._rec_pad_ix]  # (n_freqs, n_rec)
        spec = np.zeros(
            (self.geometry.receivers_per_shot, n_t // 2 + 1), dtype=np.complex128
        )
        spec[:, prop.bins] = d_freq.T
        traces = np.fft.irfft(spec, n=n_t, axis=1)
        return traces.ravel()

    def _adjoint(self, y):
        prop = self.propagator
        nz, n_t = prop.nz, prop.n_t
        traces = y.reshape(self.geometry.receivers_per_shot, n_t)
        d_freq = (2.0 / n_t) * np.fft.rfft(traces, axis=1)[:, prop.bins].T

        field = np.zeros((prop.n_freqs, prop.n_pad), dtype=np.complex128)
        for j, ix in enumerate(self._rec_pad_ix):
            field[:, ix] += d_freq[:, j]  # loop keeps duplicates exact

        src = prop.source_wavefield(self._spectrum, self._shot_pad_ix)
        image = np.empty((nz, prop.nx))
        image[0] = np.sum((np.conj(src[0]) * field).real, axis=0)[self._live]
        for iz in range(nz - 1):
            field = prop.step_conj(field, iz)
            image[iz + 1] = np.sum((np.conj(src[iz + 1]) * field).real, axis=0)[
                self._live
            ]
        return image.ravel()


# ---------------------------------------------------------------------------
# survey-level helpers
# ---------------------------------------------------------------------------

def shot_operator(
    velocity: VelocityModel,
    geometry: AcquisitionGeometry,
    wavelet: Wavelet,
    shot_index: int,
    band: tuple[float, float],
    pad_factor: float = 1.5,
) -> ShotOperator:
    """Build the Born de-migration operator for one shot."""
    prop = SplitStepPropagator(velocity, geometry.n_t, geometry.dt, band, pad_factor)
    return ShotOperator(prop, geometry, wavelet, shot_index)


def survey_operators(
    velocity: VelocityModel,
    geometry: AcquisitionGeometry,
    wavelet: Wavelet,
    band: tuple[float, float],
    pad_factor: float = 1.5,
) -> list[ShotOperator]:
    """One operator per shot, all sharing a single propagator table."""
    prop = SplitStepPropagator(velocity, geometry.n_t, geometry.dt, band, pad_factor)
    return [
        ShotOperator(prop, geometry, wavelet, i) for i in range(geometry.n_shots)
    ]


def survey_forward(
    velocity: VelocityModel,
    geometry: AcquisitionGeometry,
    wavelet: Wavelet,
    reflectivity: Reflectivity,
    band: tuple[float, float],
) -> list[ShotGather]:
    """Model noise-free data for every shot."""
    if reflectivity.grid.shape != velocity.grid.shape:
        raise ValueError(
            f"reflectivity shape {reflectivity.grid.shape} does not match "
            f"velocity shape {velocity.grid.shape}"
        )
    ops = survey_operators(velocity, geometry, wavelet, band)
    gathers = []
    for op in ops:
        traces = op.forward(reflectivity.ravel()).reshape(
            geometry.receivers_per_shot, geometry.n_t
        )
        gathers.append(ShotGather(shot_index=op.shot_index, traces=traces))
    return gathers


def survey_adjoint(
    velocity: VelocityModel,
    geometry: AcquisitionGeometry,
    wavelet: Wavelet,
    gathers,
    band: tuple[float, float],
) -> Reflectivity:
    """Migration stack: sum of per-shot adjoint images in shot order."""
    gathers = list(gathers)
    if len(gathers) != geometry.n_shots:
        raise ValueError(
            f"{len(gathers)} gathers supplied for {geometry.n_shots} shots"
        )
    ops = survey_operators(velocity, geometry, wavelet, band)
    image = np.zeros(velocity.nz * velocity.nx)
    for op, gather in zip(ops, gathers):
        image += op.adjoint(gather.ravel())
    grid = Grid2D(
        image.reshape(velocity.nz, velocity.nx), d1=velocity.dz, d2=velocity.dx
    )
    return Reflectivity(grid=grid)
