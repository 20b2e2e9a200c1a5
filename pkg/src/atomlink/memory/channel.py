"""Monte-Carlo dephasing channel of the trapped-atom memory.

Each trajectory draws thermal initial conditions and one quasi-static field
noise sample, integrates the atomic motion in the Gaussian trap, and
accumulates the exact spin-1 rotation driven by the local field.  Averaging
the unitaries over trajectories gives a completely positive trace-preserving
qutrit channel, stored as a superoperator acting on row-major vectorized
density matrices.

The memory qubit is quantized along the bias axis (lab y), so lab axes map
to spin axes as (z, x, y) -> (F1, F2, F3).

Reproducibility contract: trajectory k draws from a Philox stream keyed by
(seed, k), the y noise component is a deterministic stratified normal grid
over the trajectory index, and chunked reduction uses a fixed chunk size, so
results are bit-identical for any worker count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from ..quantum import DensityMatrix
from .fields import FieldEnvironment, fictitious_field_y
from .spin import rotation_step
from .trap import TrapParams, thermal_sigmas, yoshida4_step

_UP, _ZERO, _DOWN = 2, 1, 0   # qutrit indices of m = +1, 0, -1

_UP_X = np.zeros(3, dtype=complex)
_UP_X[_UP] = 1.0 / np.sqrt(2.0)
_UP_X[_DOWN] = 1.0 / np.sqrt(2.0)
_UP_Y = np.zeros(3, dtype=complex)
_UP_Y[_UP] = 1.0 / np.sqrt(2.0)
_UP_Y[_DOWN] = 1j / np.sqrt(2.0)

_SIGMA_X = np.zeros((3, 3), dtype=complex)
_SIGMA_X[_UP, _DOWN] = 1.0
_SIGMA_X[_DOWN, _UP] = 1.0
_SIGMA_Y = np.zeros((3, 3), dtype=complex)
_SIGMA_Y[_UP, _DOWN] = -1j
_SIGMA_Y[_DOWN, _UP] = 1j
_SIGMA_Z = np.zeros((3, 3), dtype=complex)
_SIGMA_Z[_UP, _UP] = 1.0
_SIGMA_Z[_DOWN, _DOWN] = -1.0


@dataclass(frozen=True)
class QutritChannel:
    """CPTP map on the memory qutrit, stored as a 9x9 superoperator."""

    superop: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.superop, dtype=complex)
        if s.shape != (9, 9):
            raise ValueError("superoperator must be 9x9")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "superop", s)

    @classmethod
    def identity(cls) -> "QutritChannel":
        eye = np.eye(3, dtype=complex)
        return cls(np.einsum("ij,kl->ikjl", eye, eye).reshape(9, 9))

    @property
    def s4(self) -> np.ndarray:
        return self.superop.reshape(3, 3, 3, 3)

    def apply_matrix(self, rho: np.ndarray) -> np.ndarray:
        out = (self.superop @ np.asarray(rho, dtype=complex).reshape(9)).reshape(3, 3)
        return (out + out.conj().T) / 2.0

    def apply(self, rho: DensityMatrix) -> DensityMatrix:
        if rho.spec.subsystem_dims != (3,):
            raise ValueError("expected a single-qutrit state")
        return DensityMatrix(rho.spec, self.apply_matrix(rho.matrix))

    def apply_to_subsystem(self, rho: DensityMatrix, subsystem: int) -> DensityMatrix:
        dims = rho.spec.subsystem_dims
        if subsystem < 0 or subsystem >= len(dims) or dims[subsystem] != 3:
            raise ValueError("subsystem must index a qutrit")
        n = len(dims)
        t = rho.matrix.reshape(dims + dims)
        letters = "abcdefgh"
        ket = list(letters[:n])
        bra = list(letters[n : 2 * n])
        ket_out = ket.copy()
        bra_out = bra.copy()
        ket_out[subsystem] = "y"
        bra_out[subsystem] = "z"
        sub = (
            "yz" + ket[subsystem] + bra[subsystem] + ","
            + "".join(ket + bra) + "->" + "".join(ket_out + bra_out)
        )
        out = np.einsum(sub, self.s4, t).reshape(rho.matrix.shape)
        return DensityMatrix(rho.spec, (out + out.conj().T) / 2.0)

    def choi(self) -> np.ndarray:
        return self.s4.transpose(0, 2, 1, 3).reshape(9, 9)

    def trace_preservation_error(self) -> float:
        reduced = np.einsum("iijl->jl", self.s4)
        return float(np.max(np.abs(reduced - np.eye(3))))

    def coherence_amplitude(self) -> complex:
        """Survival amplitude of the |up><down| memory coherence."""
        return complex(self.s4[_UP, _DOWN, _UP, _DOWN])

    def visibility(self) -> float:
        return float(abs(self.coherence_amplitude()))


@dataclass(frozen=True)
class DephasingChannelFamily:
    """Channels of one memory sampled on a time grid.

    ``channel_at(t)`` returns the lab-frame map, which includes the
    deterministic Larmor precession of the bias field.
    ``rotating_channel_at(t)`` removes that mean rotation; this is the frame
    of the calibrated analyzers and what the protocol composition uses.
    """

    times: np.ndarray
    superops: np.ndarray          # (T, 9, 9)
    meta: dict = field(default_factory=dict)

    def _index_of(self, t: float) -> int:
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > 1e-12 + 1e-9 * max(abs(t), 1e-6):
            raise KeyError(f"time {t} not sampled (nearest {self.times[idx]})")
        return idx

    def channel_at(self, t: float) -> QutritChannel:
        return QutritChannel(self.superops[self._index_of(t)])

    def rotating_channel_at(self, t: float) -> QutritChannel:
        idx = self._index_of(t)
        b_spin = np.asarray(self.meta.get("bias_spin", (0.0, 0.0, 0.0)), dtype=float)
        if float(self.times[idx]) == 0.0 or np.all(b_spin == 0.0):
            return QutritChannel(self.superops[idx])
        r = rotation_step(b_spin.reshape(1, 3), float(self.times[idx]))[0]
        undo = r.conj().T
        unrotate = np.einsum("ij,kl->ikjl", undo, undo.conj()).reshape(9, 9)
        return QutritChannel(unrotate @ self.superops[idx])

    def envelope(self) -> np.ndarray:
        s4 = self.superops.reshape(-1, 3, 3, 3, 3)
        return np.abs(s4[:, _UP, _DOWN, _UP, _DOWN])

    def expectation_curve(self, basis: str) -> np.ndarray:
        rho0, op = {
            "X": (np.outer(_UP_X, _UP_X.conj()), _SIGMA_X),
            "Y": (np.outer(_UP_Y, _UP_Y.conj()), _SIGMA_Y),
            "Z": (np.diag([0.0, 0.0, 1.0]).astype(complex), _SIGMA_Z),
        }[basis.upper()]
        out = np.empty(len(self.times))
        vec = rho0.reshape(9)
        for i, s in enumerate(self.superops):
            rho_t = (s @ vec).reshape(3, 3)
            out[i] = np.trace(op @ rho_t).real
        return out


@dataclass(frozen=True)
class CoherenceEnvelope:
    """Visibility envelope and per-basis expectation curves on a time grid."""

    times: np.ndarray
    visibility: np.ndarray
    curves: dict

    def __post_init__(self):
        if len(self.times) and self.times[0] == 0.0 and self.visibility[0] < 0.99:
            raise ValueError("envelope at t=0 must be >= 0.99 for ideal readout")

    def one_over_e_time(self) -> float:
        """First crossing of 1/e, linearly interpolated."""
        target = 1.0 / np.e
        v = self.visibility
        below = np.nonzero(v < target)[0]
        if len(below) == 0:
            return float("inf")
        i = below[0]
        if i == 0:
            return float(self.times[0])
        t0, t1 = self.times[i - 1], self.times[i]
        v0, v1 = v[i - 1], v[i]
        return float(t0 + (v0 - target) / (v0 - v1) * (t1 - t0))


def _trajectory_seeds(seed: int, indices: np.ndarray):
    for idx in indices:
        yield np.random.Generator(np.random.Philox(key=[np.uint64(seed), np.uint64(idx)]))


def _chunk_superops(trap, env, temperature, indices, n_total, seed,
                    sample_steps, n_steps, spin_dt, substeps):
    """Superoperator partial sums of one trajectory chunk at every sample step."""
    c = len(indices)
    sig_pos, sig_v = thermal_sigmas(trap, temperature)
    pos = np.empty((c, 3))
    vel = np.empty((c, 3))
    noise = np.empty((c, 3))
    for row, gen in enumerate(_trajectory_seeds(seed, indices)):
        z = gen.normal(size=6)
        pos[row] = z[:3] * sig_pos
        vel[row] = z[3:] * sig_v
        nz = gen.normal(size=2)
        noise[row, 0] = nz[0] * env.shot_noise_sigma[0]
        noise[row, 2] = nz[1] * env.shot_noise_sigma[2]
    # stratified quasi-static y noise over the global trajectory index
    noise[:, 1] = env.shot_noise_sigma[1] * ndtri((indices + 0.5) / n_total)

    n_times = 1 + max((max(v) for v in sample_steps.values()), default=0)
    partials = np.zeros((n_times, 3, 3, 3, 3), dtype=complex)
    u = np.tile(np.eye(3, dtype=complex), (c, 1, 1))
    if 0 in sample_steps:
        for t_idx in sample_steps[0]:
            partials[t_idx] += np.einsum("nij,nkl->ikjl", u, u.conj())

    acc = trap.acceleration(pos)
    h = spin_dt / substeps
    mid_idx = (substeps - 1) // 2
    bias = env.bias_field
    for step in range(n_steps):
        mid = pos
        for s in range(substeps):
            pos, vel, acc = yoshida4_step(trap, pos, vel, h, acc)
            if s == mid_idx:
                mid = pos
        b_lab = noise + bias
        b_y = b_lab[:, 1] + fictitious_field_y(trap, env, mid)
        # lab (z, x, y) -> spin (F1, F2, F3); quantization along the y bias
        b_spin = np.stack([b_lab[:, 2], b_lab[:, 0], b_y], axis=1)
        u = rotation_step(b_spin, spin_dt) @ u
        key = step + 1
        if key in sample_steps:
            acc_s4 = np.einsum("nij,nkl->ikjl", u, u.conj())
            for t_idx in sample_steps[key]:
                partials[t_idx] += acc_s4
    return partials


def dephasing_channel_family(trap: TrapParams, env: FieldEnvironment,
                             temperature: float, times, n_trajectories: int,
                             seed: int, spin_dt: float = 1e-7,
                             motion_substeps: int = 2, chunk_size: int = 2048,
                             n_jobs: int = 1) -> DephasingChannelFamily:
    """Build the averaged memory channel at each requested time.

    ``times`` must sit on the spin-step grid.  The result is deterministic
    given (seed, n_trajectories) regardless of chunking workers.
    """
    if n_trajectories < 100:
        raise ValueError("n_trajectories must be >= 100")
    if seed < 0:
        raise ValueError("seed must be >= 0")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("sample times must be >= 0")
    steps = np.round(times / spin_dt).astype(int)
    if np.max(np.abs(steps * spin_dt - times)) > 1e-12:
        raise ValueError("every sample time must be a multiple of spin_dt")
    sample_steps: dict[int, list[int]] = {}
    for t_idx, s in enumerate(steps):
        sample_steps.setdefault(int(s), []).append(t_idx)
    n_steps = int(steps.max()) if len(steps) else 0

    chunks = [
        np.arange(i, min(i + chunk_size, n_trajectories))
        for i in range(0, n_trajectories, chunk_size)
    ]

    def work(indices):
        return _chunk_superops(trap, env, temperature, indices, n_trajectories,
                               seed, sample_steps, n_steps, spin_dt, motion_substeps)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            partials = list(pool.map(work, chunks))
    else:
        partials = [work(ch) for ch in chunks]
    total = partials[0]
    for p in partials[1:]:
        total = total + p
    superops = (total / n_trajectories).reshape(len(times), 9, 9)
    bias = env.bias_field
    meta = {
        "temperature": temperature,
        "n_trajectories": n_trajectories,
        "seed": seed,
        "spin_dt": spin_dt,
        "motion_substeps": motion_substeps,
        "chunk_size": chunk_size,
        # lab (z, x, y) -> spin (F1, F2, F3)
        "bias_spin": (float(bias[2]), float(bias[0]), float(bias[1])),
    }
    return DephasingChannelFamily(times, superops, meta)


def dephasing_channel(trap: TrapParams, env: FieldEnvironment, temperature: float,
                      readout_time: float, n_trajectories: int, seed: int,
                      **kwargs) -> QutritChannel:
    """Averaged memory channel at a single readout time."""
    family = dephasing_channel_family(
        trap, env, temperature, [readout_time], n_trajectories, seed, **kwargs
    )
    return family.channel_at(readout_time)


def coherence_envelope(family: DephasingChannelFamily,
                       bases=("X", "Y", "Z")) -> CoherenceEnvelope:
    """Envelope and basis expectation curves from a channel family."""
    order = np.argsort(family.times)
    if not np.all(order == np.arange(len(family.times))):
        raise ValueError("time grid must be sorted")
    curves = {b: family.expectation_curve(b) for b in bases}
    return CoherenceEnvelope(family.times, family.envelope(), curves)
