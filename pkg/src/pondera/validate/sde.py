"""Time-domain simulation of the linearized dynamics.

The quantum noises are replaced by classical Gaussian processes carrying
the same symmetrized spectra, which is exact for symmetrized output
spectra of a linear system: each vacuum quadrature is white with unit
intensity, the Brownian force is white at its classical value
``(gamma_m / w_m) 2 k_B T / hbar``, amplitude noise is white with
intensity ``S_eps``. Frequency noise is either white or the output of a
resonant filter (:class:`ResonantNoise`).

State ``(dq, dp, dX, dY[, f1, f2])`` with ``dX, dY`` the intracavity
quadratures and ``f`` the optional frequency-noise filter. The output
quadratures ``X_out = sqrt(2 k1) dX - X1 - 2 eps`` and
``Y_out = sqrt(2 k1) dY - Y1`` contain white feed-through and are
recorded by an integrate-and-dump observer that also demodulates at
``omega_d``. The observer is part of the linear system, so each step is
propagated exactly: the step ``dt`` only sets the output sampling and
has no truncation error.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np
from scipy import linalg, signal, special
from scipy.constants import hbar, k as k_B

from ..errors import IntegratorError, UnstableError
from ..params import SteadyState, SystemConfig, stability_check, steady_state
from ..spectra import averaged_spectrum, quadrature_spectra


class ResonantNoise:
    """Band-limited noise PSD from a damped resonator driven by white noise.

    ``S(w) = level * |H(w)|^2 / |H(center)|^2`` with
    ``H(w) = d / (d^2 + center^2)`` and ``d = width/2 - i w``, so the
    PSD peaks near ``+-center`` with full width ``width``. Instances are
    plain callables and can be used as ``NoiseBudget.freq_noise``; the
    simulator recognizes them and synthesizes the matching process.
    """

    def __init__(self, level: float, center: float, width: float):
        if level < 0 or center < 0 or width <= 0:
            raise ValueError("level and center must be non-negative, width positive")
        self.level, self.center, self.width = float(level), float(center), float(width)
        self.white = self.level / abs(self._h(self.center)) ** 2

    def _h(self, w):
        d = 0.5 * self.width - 1j * np.asarray(w, dtype=float)
        return d / (d ** 2 + self.center ** 2)

    def __call__(self, w):
        return self.white * np.abs(self._h(w)) ** 2

    def state_space(self):
        g, c = 0.5 * self.width, self.center
        M = np.array([[-g, -c], [c, -g]])
        return M, np.array([1.0, 0.0]), np.array([1.0, 0.0])

    def __repr__(self):
        return f"ResonantNoise(level={self.level!r}, center={self.center!r}, width={self.width!r})"


def demod_step(omega_d: float, periods: int) -> float:
    """Time step spanning an integer number of demodulation periods."""
    return 2 * math.pi * periods / omega_d


# white inputs, all with unit-normalized intensity unless scaled in _model
INPUTS = ("X1", "Y1", "X2", "Y2", "xi", "eps", "phidot")


@dataclass
class _Model:
    F: np.ndarray
    B: np.ndarray
    S: np.ndarray
    n_state: int


def _model(config: SystemConfig, steady: SteadyState, omega_d: float, channels):
    cav, mech = config.cavity, config.mech
    wm, gm = mech.omega_m, mech.gamma_m
    kappa, k1, k2 = cav.kappa, cav.kappa1, cav.kappa2
    delta, g0 = steady.detuning, steady.g0
    ar, ai = steady.alpha.real, steady.alpha.imag
    s1, s2 = math.sqrt(2 * k1), math.sqrt(2 * k2)

    spec = config.noise.freq_noise
    filtered = isinstance(spec, ResonantNoise) and "freq" in channels
    if "freq" in channels and not filtered:
        if callable(spec) or isinstance(spec, tuple):
            raise IntegratorError("only constant or ResonantNoise frequency noise can be synthesized")
    am = config.noise.ampl_noise
    if "ampl" in channels and (callable(am) or isinstance(am, tuple)):
        raise IntegratorError("only constant amplitude noise can be synthesized")
    n = 6 if filtered else 4
    A = np.zeros((n, n))
    A[0, 1] = wm
    A[1, :4] = [-wm, -gm, g0 * ar, g0 * ai]
    A[2, :4] = [-2 * g0 * ai, 0.0, -kappa, delta]
    A[3, :4] = [2 * g0 * ar, 0.0, -delta, -kappa]
    B = np.zeros((n, len(INPUTS)))
    B[2, 0], B[3, 1], B[2, 2], B[3, 3] = s1, s1, s2, s2
    B[1, 4] = 1.0
    B[2, 5] = 2 * s1
    # frequency noise enters as i alpha phidot in the field equation
    fvec = np.array([-2 * ai, 2 * ar])
    if filtered:
        M, Bf, Cf = spec.state_space()
        A[4:, 4:] = M
        B[4:, 6] = Bf
        A[2:4, 4:] = np.outer(fvec, Cf)
    else:
        B[2:4, 6] = fvec

    # outputs X_out and Y_out
    C = np.zeros((2, n))
    C[0, 2], C[1, 3] = s1, s1
    D = np.zeros((2, len(INPUTS)))
    D[0, 0], D[0, 5], D[1, 1] = -1.0, -2.0, -1.0

    rate_T = 0.0
    if mech.temperature > 0:
        rate_T = gm / wm * 2 * k_B * mech.temperature / hbar
    S = np.diag([
        *(1.0 if "vacuum" in channels else 0.0 for _ in range(4)),
        rate_T if "thermal" in channels else 0.0,
        float(config.noise.ampl_psd(np.array(0.0))) if "ampl" in channels else 0.0,
        (spec.white if filtered else float(config.noise.freq_psd(np.array(0.0))))
        if "freq" in channels else 0.0,
    ])

    # observers: one (re, im) pair per output quadrature, du/dt = i omega_d u + y
    m = 4 if omega_d else 2
    N = n + m
    F = np.zeros((N, N))
    F[:n, :n] = A
    Bt = np.zeros((N, len(INPUTS)))
    Bt[:n] = B
    for j in range(2):
        if omega_d:
            r, i = n + 2 * j, n + 2 * j + 1
            F[r, i], F[i, r] = -omega_d, omega_d
        else:
            r = n + j
        F[r, :n] = C[j]
        Bt[r] = D[j]
    return _Model(F, Bt, S, n)


def _psd_sqrt(Q):
    w, V = np.linalg.eigh(0.5 * (Q + Q.T))
    return V * np.sqrt(np.clip(w, 0.0, None))


def exact_discretization(F, B, S, dt):
    """Transition matrix and integrated noise covariance over one step.

    ``Phi = exp(F dt)`` and ``Q = int_0^dt exp(F s) B S B^T exp(F^T s) ds``,
    both from the eigen-decomposition of ``F``. Only decaying or
    oscillating exponentials appear, so strongly damped modes cannot
    overflow.
    """
    lam, V = np.linalg.eig(F)
    Vi = np.linalg.inv(V)
    Phi = (V * np.exp(lam * dt)) @ Vi
    Mq = Vi @ (B @ S @ B.T) @ Vi.conj().T
    s = lam[:, None] + lam[None, :].conj()
    small = np.abs(s * dt) < 1e-12
    E = np.where(small, dt, np.expm1(np.where(small, 0, s) * dt) / np.where(small, 1, s))
    Q = V @ (Mq * E) @ V.conj().T
    return Phi.real, 0.5 * (Q.real + Q.real.T)


@dataclass(frozen=True)
class TrajectoryBundle:
    """Sampled output quadratures of one simulated run.

    ``X_out`` and ``Y_out`` hold the time average of each output
    quadrature over consecutive steps of length ``dt``, multiplied by
    ``exp(-i omega_d (t - t_k))`` inside the average. With
    ``omega_d = 0`` they are real.
    """

    seed: int
    dt: float
    duration: float
    omega_d: float
    X_out: np.ndarray
    Y_out: np.ndarray
    channels: tuple
    intensities: dict
    config_hash: str

    def quadrature(self, phi: float) -> np.ndarray:
        return math.cos(phi) * self.X_out + math.sin(phi) * self.Y_out

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.X_out.size)

    def to_csv(self, path) -> None:
        header = (f"dt={self.dt!r}\nduration={self.duration!r}\nseed={self.seed}\n"
                  f"omega_d={self.omega_d!r}\nconfig_hash={self.config_hash}\n"
                  "columns=t,X_re,X_im,Y_re,Y_im")
        data = np.column_stack([self.times, self.X_out.real, np.imag(self.X_out),
                                self.Y_out.real, np.imag(self.Y_out)])
        np.savetxt(path, data, delimiter=",", header=header, fmt="%.12e")


ALL_CHANNELS = ("vacuum", "thermal", "freq", "ampl")


def sde_simulate(config: SystemConfig, steady: SteadyState | None = None, *, dt: float,
                 duration: float, seed: int = 0, omega_d: float | None = None,
                 channels=ALL_CHANNELS, chunk: int = 1 << 17) -> TrajectoryBundle:
    """Simulate the output quadratures of the linearized system.

    Parameters
    ----------
    dt : float
        Output sampling step. With demodulation, ``omega_d * dt`` must be a
        multiple of ``2 pi`` (see :func:`demod_step`).
    omega_d : float, optional
        Demodulation frequency, ``w_m`` by default. ``0`` records the plain
        step averages.
    channels : iterable of str
        Noise sources to include, from ``vacuum``, ``thermal``, ``freq``,
        ``ampl``.

    Raises
    ------
    UnstableError
        If the operating point is unstable.
    IntegratorError
        On an invalid step, or when the demodulation frequency is not
        commensurate with ``dt`` or lies beyond the sampled band.
    """
    if steady is None:
        steady = steady_state(config)
    if not stability_check(config, steady).is_stable:
        raise UnstableError("refusing to simulate an unstable operating point")
    if not (dt > 0 and duration >= dt):
        raise IntegratorError("need dt > 0 and duration >= dt")
    wd = config.mech.omega_m if omega_d is None else float(omega_d)
    if wd:
        cycles = wd * dt / (2 * math.pi)
        if abs(cycles - round(cycles)) > 1e-9 * max(1.0, cycles) or round(cycles) < 1:
            raise IntegratorError("omega_d * dt must be a positive multiple of 2 pi")
    channels = tuple(c for c in ALL_CHANNELS if c in set(channels))
    model = _model(config, steady, wd, channels)
    Phi, Q = exact_discretization(model.F, model.B, model.S, dt)
    n = model.n_state
    Lq = _psd_sqrt(Q)
    Sig = linalg.solve_continuous_lyapunov(model.F[:n, :n], -model.B[:n] @ model.S @ model.B[:n].T)
    L0 = _psd_sqrt(Sig)

    Pxx, Pux = Phi[:n, :n], Phi[n:, :n]
    mu, W = np.linalg.eig(Pxx)
    Wi = np.linalg.inv(W)
    rng = np.random.default_rng(seed)
    steps = int(round(duration / dt))
    x0 = L0 @ rng.standard_normal(n)
    y = Wi @ x0
    out = np.empty((steps, Phi.shape[0] - n))
    done = 0
    while done < steps:
        m = min(chunk, steps - done)
        noise = rng.standard_normal((m, Phi.shape[0])) @ Lq.T
        drive = noise[:, :n] @ Wi.T
        ys = np.empty((m, n), dtype=complex)
        for j in range(n):
            s = signal.lfilter([1.0], [1.0, -mu[j]], drive[:, j], zi=[mu[j] * y[j]])[0]
            ys[0, j] = y[j]
            ys[1:, j] = s[:-1]
            y[j] = s[-1]
        xs = (ys @ W.T).real
        out[done:done + m] = xs @ Pux.T + noise[:, n:]
        done += m
    out /= dt
    if wd:
        Xo = out[:, 0] + 1j * out[:, 1]
        Yo = out[:, 2] + 1j * out[:, 3]
    else:
        Xo, Yo = out[:, 0], out[:, 1]
    names = ("vacuum", "vacuum", "vacuum", "vacuum", "thermal", "ampl", "freq")
    intens = {c: float(model.S[INPUTS.index(nm), INPUTS.index(nm)])
              for nm, c in zip(INPUTS, names) if c in channels}
    return TrajectoryBundle(seed, dt, steps * dt, wd, Xo, Yo, channels, intens,
                            config_fingerprint(config))


def config_fingerprint(config: SystemConfig) -> str:
    return f"{zlib.crc32(repr(config).encode()):08x}"


def expected_sampled_psd(freqs, config: SystemConfig, steady: SteadyState, dt: float,
                         omega_d: float, phi: float, n_alias: int = 64):
    """Two-sided PSD expected for the sampled, demodulated output.

    ``P(f) = sum_n S(omega_d + 2 pi f + n w_s) sinc^2((2 pi f + n w_s) dt / 2)``
    with ``w_s = 2 pi / dt``; the sum accounts for the step average and
    for aliasing. ``S`` is the analytic homodyne spectrum at phase ``phi``.
    Terms beyond ``|n| = n_alias`` are added in closed form with ``S`` held
    at its value on the last alias on each side.
    """
    nu = 2 * np.pi * np.asarray(freqs, dtype=float)
    ws = 2 * np.pi / dt
    n = np.arange(-n_alias, n_alias + 1)
    arg = nu[:, None] + n[None, :] * ws
    w = np.abs(omega_d + arg)
    dec = quadrature_spectra(w.ravel(), config, steady)
    S = averaged_spectrum(dec, phi).reshape(w.shape)
    x = nu * dt / (2 * np.pi)
    # sum_{n > N} sinc^2(x + n) = sin^2(pi x) / pi^2 * psi_1(N + 1 + x)
    s2 = np.sin(np.pi * x) ** 2 / np.pi ** 2
    tail = s2 * (S[:, -1] * special.polygamma(1, n_alias + 1 + x)
                 + S[:, 0] * special.polygamma(1, n_alias + 1 - x))
    return np.sum(S * np.sinc(arg * dt / (2 * np.pi)) ** 2, axis=1) + tail
