"""Frequency-domain oracle: solve the linearized equations numerically.

The linearized Langevin equations are Fourier transformed and the 4x4
system in ``(dq, dp, da, da_dag)`` is solved directly at every frequency,
with one right-hand side per noise channel. Nothing here uses the closed
forms of :mod:`pondera.transfer`, so agreement between the two is a
genuine check.

Channels, each entering with unit weight::

    a1, a1_dag   input-port vacuum (sources sqrt(2 k1) in the a / a_dag rows)
    a2, a2_dag   loss-port vacuum (sources sqrt(2 k2))
    phidot       laser frequency noise (i alpha in the a row, -i alpha* in a_dag)
    xi           Brownian force (p row)
    eps          real amplitude noise added to the input vacuum
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..params import SteadyState, SystemConfig
from ..spectra import Contributions, SpectrumDecomposition, input_noise_spectra


def _system(w, config: SystemConfig, steady: SteadyState):
    n = w.size
    wm, gm = config.mech.omega_m, config.mech.gamma_m
    kappa, delta = config.cavity.kappa, steady.detuning
    a, g0 = steady.alpha, steady.g0
    M = np.zeros((n, 4, 4), dtype=complex)
    iw = 1j * w
    # dq' = wm p
    M[:, 0, 0] = -iw
    M[:, 0, 1] = -wm
    # dp' = -wm q - gm p + g0 (a* da + a da_dag) + xi
    M[:, 1, 0] = wm
    M[:, 1, 1] = gm - iw
    M[:, 1, 2] = -g0 * np.conj(a)
    M[:, 1, 3] = -g0 * a
    # da' = -(kappa + i delta) da + i g0 a dq + sources
    M[:, 2, 0] = -1j * g0 * a
    M[:, 2, 2] = kappa + 1j * delta - iw
    # da_dag' = -(kappa - i delta) da_dag - i g0 a* dq + sources
    M[:, 3, 0] = 1j * g0 * np.conj(a)
    M[:, 3, 3] = kappa - 1j * delta - iw
    return M


CHANNELS = ("a1", "a1_dag", "a2", "a2_dag", "phidot", "xi", "eps")


def _sources(config: SystemConfig, steady: SteadyState):
    s1 = math.sqrt(2 * config.cavity.kappa1)
    s2 = math.sqrt(2 * config.cavity.kappa2)
    a = steady.alpha
    R = np.zeros((4, len(CHANNELS)), dtype=complex)
    R[2, 0] = s1
    R[3, 1] = s1
    R[2, 2] = s2
    R[3, 3] = s2
    R[2, 4] = 1j * a
    R[3, 4] = -1j * np.conj(a)
    R[1, 5] = 1.0
    R[2, 6] = s1
    R[3, 6] = s1
    return R


@dataclass(frozen=True)
class OracleCoefficients:
    """Output-field coefficients of each channel from the direct solve.

    ``channels[:, k]`` is the coefficient of channel ``CHANNELS[k]`` in
    ``a1_out(w)``. ``singular`` marks frequencies where the matrix could
    not be inverted, which happens only on an instability pole.
    ``unit`` holds the output response to a unit source in the ``da`` and
    ``da_dag`` rows, the quantities called nu3 and nu4.
    """

    omega: np.ndarray
    channels: np.ndarray
    unit: np.ndarray
    singular: np.ndarray

    def _ch(self, name):
        return self.channels[:, CHANNELS.index(name)]

    @property
    def nu1(self):
        return self._ch("a1")

    @property
    def nu2(self):
        return self._ch("a1_dag")

    @property
    def nu3(self):
        return self.unit[:, 0]

    @property
    def nu4(self):
        return self.unit[:, 1]

    @property
    def nuT(self):
        return self._ch("xi")

    @property
    def c_phi(self):
        return self._ch("phidot")

    @property
    def amplitude(self):
        return self._ch("eps")


def fourier_matrix_oracle(omega, config: SystemConfig, steady: SteadyState,
                          perturb: dict | None = None) -> OracleCoefficients:
    """Solve the Fourier-domain linear system at each frequency.

    ``perturb`` maps channel names to additive offsets applied to the
    solved coefficients; it exists only to check that the validator
    notices a wrong answer.
    """
    w = np.atleast_1d(np.asarray(omega, dtype=float)).ravel()
    M = _system(w, config, steady)
    R = _sources(config, steady)
    # extra column: unit source in each cavity row, used when kappa2 = 0
    R = np.concatenate([R, np.array([[0, 0], [0, 0], [1, 0], [0, 1]], dtype=complex)], axis=1)
    singular = np.zeros(w.size, dtype=bool)
    rhs = np.broadcast_to(R, (w.size,) + R.shape)
    try:
        X = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        X = np.full((w.size,) + R.shape, np.nan + 0j)
        for i in range(w.size):
            try:
                X[i] = np.linalg.solve(M[i], R)
            except np.linalg.LinAlgError:
                singular[i] = True
    ok = ~singular
    if ok.any():
        # one step of iterative refinement with the residual in extended
        # precision; near a sharp mechanical resonance plain LU loses ~eps*Q
        Ml, Xl = M[ok].astype(np.clongdouble), X[ok].astype(np.clongdouble)
        res = (rhs[ok].astype(np.clongdouble) - Ml @ Xl).astype(complex)
        X[ok] = (Xl + np.linalg.solve(M[ok], res).astype(np.clongdouble)).astype(complex)
    s1 = math.sqrt(2 * config.cavity.kappa1)
    out = s1 * X[:, 2, :]
    # input-output relation removes the reflected input
    out[:, CHANNELS.index("a1")] -= 1.0
    out[:, CHANNELS.index("eps")] -= 1.0
    if perturb:
        for name, delta in perturb.items():
            out[:, CHANNELS.index(name)] += delta
    n = len(CHANNELS)
    return OracleCoefficients(w, out[:, :n], out[:, n:], singular)


def _quadrature_psd(c_pos, c_neg, d_pos=None, d_neg=None, phi=0.0):
    """Symmetrized PSD of the phase-phi output quadrature from one channel.

    For a vacuum pair with coefficients ``c`` (on b) and ``d`` (on b_dag)
    this is ``(|A(w)|^2 + |A(-w)|^2)/2``. For a real classical noise
    (``d`` omitted) it is ``|H(w)|^2`` per unit input PSD.
    """
    e = np.exp(-1j * phi)
    if d_pos is None:
        return np.abs(e * c_pos + np.conj(e * c_neg)) ** 2
    A_pos = e * c_pos + np.conj(e * d_neg)
    A_neg = e * c_neg + np.conj(e * d_pos)
    return 0.5 * (np.abs(A_pos) ** 2 + np.abs(A_neg) ** 2)


def oracle_homodyne(omega, config: SystemConfig, steady: SteadyState, phi: float,
                    perturb: dict | None = None) -> Contributions:
    """Homodyne spectrum contributions from the direct solve."""
    w = np.asarray(omega, dtype=float)
    p = fourier_matrix_oracle(w, config, steady, perturb)
    m = fourier_matrix_oracle(-w, config, steady, perturb)
    noise = input_noise_spectra(w, config)
    ch = lambda o, n: o.channels[:, CHANNELS.index(n)]
    quan = _quadrature_psd(ch(p, "a1"), ch(m, "a1"), ch(p, "a1_dag"), ch(m, "a1_dag"), phi)
    quan = quan + _quadrature_psd(ch(p, "a2"), ch(m, "a2"), ch(p, "a2_dag"), ch(m, "a2_dag"), phi)
    freq = _quadrature_psd(ch(p, "phidot"), ch(m, "phidot"), phi=phi) * noise.S_phi
    ampl = _quadrature_psd(ch(p, "eps"), ch(m, "eps"), phi=phi) * noise.S_eps
    ther = _quadrature_psd(ch(p, "xi"), ch(m, "xi"), phi=phi) * noise.S_T
    shape = w.shape
    return Contributions(*(v.reshape(shape) for v in (quan, freq, ampl, ther)))


def oracle_spectra(omega, config: SystemConfig, steady: SteadyState,
                   perturb: dict | None = None) -> SpectrumDecomposition:
    """Quadrature decomposition assembled from the direct solve.

    The cross spectrum follows from ``S(pi/4) = (S_X + S_Y)/2 + S_XY``.
    """
    X = oracle_homodyne(omega, config, steady, 0.0, perturb)
    Y = oracle_homodyne(omega, config, steady, math.pi / 2, perturb)
    D = oracle_homodyne(omega, config, steady, math.pi / 4, perturb)
    XY = Contributions(*(getattr(D, k) - 0.5 * (getattr(X, k) + getattr(Y, k))
                         for k in ("quan", "freq", "ampl", "ther")))
    return SpectrumDecomposition(np.asarray(omega, dtype=float), X, Y, XY)
