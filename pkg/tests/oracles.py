"""Reference solutions that share no code with the package integrator."""

import math

import numpy as np
from scipy.linalg import expm


def torrey_resonant_p_minus1(omega, gamma, t):
    """Closed-form damped Rabi transfer on resonance, start in |+1>.

    Bloch equations with coherence decay ``gamma`` and no T1:
    w'' + gamma w' + omega^2 w = 0, w(0) = 1, w'(0) = 0.
    """
    mu2 = omega * omega - gamma * gamma / 4
    if mu2 > 0:
        mu = math.sqrt(mu2)
        w = math.exp(-gamma * t / 2) * (math.cos(mu * t) + gamma / (2 * mu) * math.sin(mu * t))
    elif mu2 < 0:
        mu = math.sqrt(-mu2)
        w = math.exp(-gamma * t / 2) * (math.cosh(mu * t) + gamma / (2 * mu) * math.sinh(mu * t))
    else:
        w = math.exp(-gamma * t / 2) * (1 + gamma * t / 2)
    return (1 - w) / 2


def bloch_p_minus1(omega, delta, gamma, t):
    """Detuned damped Rabi transfer from the 3x3 Bloch generator, matrix exponential."""
    m = np.array([[-gamma, -delta, 0.0], [delta, -gamma, -omega], [0.0, omega, 0.0]])
    w = (expm(m * t) @ np.array([0.0, 0.0, 1.0]))[2]
    return (1 - w) / 2
