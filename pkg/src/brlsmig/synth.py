"""Synthetic experiment factory.

Builds velocity models, normal-incidence reflectivity, off-end acquisition
geometries, and noisy Born data sized for desk-scale runs.  The default
``ExperimentSpec`` keeps the survey shape of a 240-shot marine-style line
at roughly 1/8 scale (30 shots, window q=5 sliding by k=3); full-scale
values are documented in the README.  Everything is deterministic given
the spec, including the seeded noise draw.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .rls import DataBlock
from .wem import (
    AcquisitionGeometry,
    Grid2D,
    Reflectivity,
    VelocityModel,
    ricker,
    survey_operators,
)

__all__ = [
    "ExperimentSpec",
    "make_geometry",
    "make_velocity",
    "reflectivity_from_velocity",
    "synthesize_data",
]

MODEL_KINDS = ("constant", "layered", "lens", "from_file")
RECEIVER_SIDES = ("left", "right")


@dataclass(frozen=True)
class ExperimentSpec:
    """Complete description of one synthetic experiment.

    Defaults are the desk-scale configuration used throughout the test
    suite; every field can be overridden (see :mod:`brlsmig.config` for
    the file form).
    """

    model_kind: str = "layered"
    nz: int = 60
    nx: int = 200
    dz: float = 10.0
    dx: float = 10.0
    # constant / lens background velocity
    v0: float = 2000.0
    # layered model: interface depth cells and layer velocities
    layer_interfaces: tuple = (18, 32, 46)
    layer_velocities: tuple = (1700.0, 2000.0, 2300.0, 2600.0)
    # lens model: Gaussian low-velocity anomaly
    lens_amplitude: float = 300.0
    lens_center_z: int = 30
    lens_center_x: int = 100
    lens_radius: float = 12.0
    velocity_file: str | None = None
    # acquisition: off-end, receivers trailing one side of the shot
    n_shots: int = 30
    shot_start: int = 58
    shot_interval: int = 4
    receivers_per_shot: int = 24
    receiver_spacing: int = 2
    receiver_near_offset: int = 2
    receiver_side: str = "left"
    # recording and wavelet
    f_dom: float = 20.0
    dt: float = 0.004
    n_t: int = 300
    delay: float = 0.1
    f_min: float = 5.0
    f_max: float = 35.0
    noise_level: float = 0.0
    # window configuration and solver settings
    q: int = 5
    k: int = 3
    lam: float = 0.0
    cg_tolerance: float = 1e-6
    cg_max_iterations: int = 200
    lsm_iterations: int = 8
    seed: int = 1234

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(
                f"model_kind must be one of {MODEL_KINDS}, got {self.model_kind!r}"
            )
        if self.receiver_side not in RECEIVER_SIDES:
            raise ValueError(
                f"receiver_side must be one of {RECEIVER_SIDES}, "
                f"got {self.receiver_side!r}"
            )
        for name in ("nz", "nx", "n_shots", "receivers_per_shot", "n_t"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not (self.dz > 0 and self.dx > 0 and self.dt > 0):
            raise ValueError("grid and time spacings must be positive")
        if not (1 <= self.k <= self.q <= self.n_shots):
            raise ValueError(
                f"window must satisfy 1 <= k <= q <= n_shots, got "
                f"q={self.q}, k={self.k}, n_shots={self.n_shots}"
            )
        if self.noise_level < 0:
            raise ValueError(f"noise_level must be >= 0, got {self.noise_level}")
        geom = self.geometry()
        lo = min(min(geom.receiver_positions(i).min(), geom.shot_positions[i])
                 for i in range(geom.n_shots))
        hi = max(max(geom.receiver_positions(i).max(), geom.shot_positions[i])
                 for i in range(geom.n_shots))
        if lo < 0 or hi >= self.nx:
            raise ValueError(
                f"acquisition spans lateral cells {lo}..{hi}, outside the "
                f"grid 0..{self.nx - 1}"
            )

    @property
    def band(self) -> tuple[float, float]:
        return (self.f_min, self.f_max)

    def geometry(self) -> AcquisitionGeometry:
        return make_geometry(self)

    def wavelet(self):
        return ricker(self.f_dom, self.dt, self.n_t, self.delay)

    def with_(self, **overrides) -> "ExperimentSpec":
        return replace(self, **overrides)


def make_geometry(spec: ExperimentSpec) -> AcquisitionGeometry:
    shots = tuple(
        spec.shot_start + i * spec.shot_interval for i in range(spec.n_shots)
    )
    sign = -1 if spec.receiver_side == "left" else 1
    offsets = tuple(
        sign * (spec.receiver_near_offset + i * spec.receiver_spacing)
        for i in range(spec.receivers_per_shot)
    )
    return AcquisitionGeometry(
        shot_positions=shots, receiver_offsets=offsets, n_t=spec.n_t, dt=spec.dt
    )


def make_velocity(spec: ExperimentSpec) -> VelocityModel:
    """Build the velocity model named by ``spec.model_kind``."""
    if spec.model_kind == "constant":
        values = np.full((spec.nz, spec.nx), spec.v0)
    elif spec.model_kind == "layered":
        if len(spec.layer_velocities) != len(spec.layer_interfaces) + 1:
            raise ValueError(
                f"layered model needs one more velocity than interfaces, got "
                f"{len(spec.layer_velocities)} velocities for "
                f"{len(spec.layer_interfaces)} interfaces"
            )
        interfaces = list(spec.layer_interfaces)
        if interfaces != sorted(interfaces) or (
            interfaces and not (0 < interfaces[0] and interfaces[-1] < spec.nz)
        ):
            raise ValueError(
                f"layer interfaces must be increasing depth cells inside "
                f"(0, {spec.nz}), got {interfaces}"
            )
        values = np.empty((spec.nz, spec.nx))
        bounds = [0, *interfaces, spec.nz]
        for v, lo, hi in zip(spec.layer_velocities, bounds[:-1], bounds[1:]):
            values[lo:hi, :] = v
    elif spec.model_kind == "lens":
        z = np.arange(spec.nz)[:, None]
        x = np.arange(spec.nx)[None, :]
        r_sq = (z - spec.lens_center_z) ** 2 + (x - spec.lens_center_x) ** 2
        values = spec.v0 - spec.lens_amplitude * np.exp(
            -r_sq / (2.0 * spec.lens_radius**2)
        )
    else:  # from_file
        from .gridfile import read_grid

        if not spec.velocity_file:
            raise ValueError("model_kind 'from_file' requires velocity_file")
        grid = read_grid(spec.velocity_file)
        if grid.kind != "velocity":
            raise ValueError(
                f"{spec.velocity_file}: expected a velocity grid, got kind "
                f"{grid.kind!r}"
            )
        if grid.values.shape != (spec.nz, spec.nx):
            raise ValueError(
                f"{spec.velocity_file}: grid is {grid.values.shape}, spec "
                f"expects ({spec.nz}, {spec.nx})"
            )
        return VelocityModel(
            Grid2D(grid.values.astype(np.float64), d1=grid.d1, d2=grid.d2)
        )
    return VelocityModel(Grid2D(values, d1=spec.dz, d2=spec.dx))


def reflectivity_from_velocity(velocity: VelocityModel) -> Reflectivity:
    """Normal-incidence reflectivity r = (v_below - v_above)/(v_below + v_above).

    Defined on the upper cell of each pair; the last depth row is zero.
    """
    v = velocity.values
    r = np.zeros_like(v)
    r[:-1, :] = (v[1:, :] - v[:-1, :]) / (v[1:, :] + v[:-1, :])
    return Reflectivity(Grid2D(r, d1=velocity.dz, d2=velocity.dx))


def synthesize_data(spec: ExperimentSpec) -> tuple[list[DataBlock], Reflectivity]:
    """Generate survey data: one DataBlock per shot, in acquisition order.

    Data are Born-modeled from the ground-truth reflectivity of the spec's
    velocity model, with optional white Gaussian noise scaled by
    ``noise_level`` times the signal RMS over the whole survey.  Identical
    specs (seed included) give bit-identical blocks.
    """
    velocity = make_velocity(spec)
    truth = reflectivity_from_velocity(velocity)
    geometry = spec.geometry()
    wavelet = spec.wavelet()
    ops = survey_operators(velocity, geometry, wavelet, spec.band)

    clean = [op.forward(truth.ravel()) for op in ops]
    if spec.noise_level > 0:
        rms = float(np.sqrt(np.mean(np.concatenate(clean) ** 2)))
        rng = np.random.default_rng(spec.seed)
        data = [
            d + spec.noise_level * rms * rng.standard_normal(d.size) for d in clean
        ]
    else:
        data = clean

    blocks = [
        DataBlock(block_index=i, operator=op, data=d)
        for i, (op, d) in enumerate(zip(ops, data))
    ]
    return blocks, truth
