"""LSTM and GRU cells with hand-written backward passes.

Weights use the row-vector convention: ``z = x @ Wx + h @ Wh + b``.
A state is a tuple of ``(B, H)`` arrays: ``(h, c)`` for LSTM, ``(h,)`` for GRU.
"""

from __future__ import annotations

import numpy as np


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class LSTM:
    n_gates = 4
    n_state = 2

    @staticmethod
    def zero_state(batch: int, hidden: int, dtype=np.float64):
        return (np.zeros((batch, hidden), dtype), np.zeros((batch, hidden), dtype))

    @staticmethod
    def forward(p, prefix, x, state):
        h_prev, c_prev = state
        H = h_prev.shape[1]
        z = x @ p[prefix + "Wx"] + h_prev @ p[prefix + "Wh"] + p[prefix + "b"]
        i = sigmoid(z[:, :H])
        f = sigmoid(z[:, H:2 * H])
        o = sigmoid(z[:, 2 * H:3 * H])
        g = np.tanh(z[:, 3 * H:])
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        return (h, c), (x, h_prev, c_prev, i, f, o, g, tc)

    @staticmethod
    def backward(p, prefix, dstate, cache, grads):
        dh, dc = dstate
        x, h_prev, c_prev, i, f, o, g, tc = cache
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        dz = np.concatenate([
            dc * g * i * (1.0 - i),
            dc * c_prev * f * (1.0 - f),
            do * o * (1.0 - o),
            dc * i * (1.0 - g * g),
        ], axis=1)
        grads[prefix + "Wx"] += x.T @ dz
        grads[prefix + "Wh"] += h_prev.T @ dz
        grads[prefix + "b"] += dz.sum(axis=0)
        dx = dz @ p[prefix + "Wx"].T
        dh_prev = dz @ p[prefix + "Wh"].T
        return dx, (dh_prev, dc * f)


class GRU:
    n_gates = 3
    n_state = 1

    @staticmethod
    def zero_state(batch: int, hidden: int, dtype=np.float64):
        return (np.zeros((batch, hidden), dtype),)

    @staticmethod
    def forward(p, prefix, x, state):
        (h_prev,) = state
        H = h_prev.shape[1]
        Wh = p[prefix + "Wh"]
        ax = x @ p[prefix + "Wx"] + p[prefix + "b"]
        z = sigmoid(ax[:, :H] + h_prev @ Wh[:, :H])
        r = sigmoid(ax[:, H:2 * H] + h_prev @ Wh[:, H:2 * H])
        rh = r * h_prev
        n = np.tanh(ax[:, 2 * H:] + rh @ Wh[:, 2 * H:])
        h = (1.0 - z) * n + z * h_prev
        return (h,), (x, h_prev, z, r, rh, n)

    @staticmethod
    def backward(p, prefix, dstate, cache, grads):
        (dh,) = dstate
        x, h_prev, z, r, rh, n = cache
        H = h_prev.shape[1]
        Wh = p[prefix + "Wh"]
        dn = dh * (1.0 - z)
        dz = dh * (h_prev - n)
        dh_prev = dh * z
        dan = dn * (1.0 - n * n)
        drh = dan @ Wh[:, 2 * H:].T
        dr = drh * h_prev
        dh_prev = dh_prev + drh * r
        daz = dz * z * (1.0 - z)
        dar = dr * r * (1.0 - r)
        dax = np.concatenate([daz, dar, dan], axis=1)
        gWh = grads[prefix + "Wh"]
        gWh[:, :H] += h_prev.T @ daz
        gWh[:, H:2 * H] += h_prev.T @ dar
        gWh[:, 2 * H:] += rh.T @ dan
        grads[prefix + "Wx"] += x.T @ dax
        grads[prefix + "b"] += dax.sum(axis=0)
        dx = dax @ p[prefix + "Wx"].T
        dh_prev = dh_prev + daz @ Wh[:, :H].T + dar @ Wh[:, H:2 * H].T
        return dx, (dh_prev,)


CELLS = {"lstm": LSTM, "gru": GRU}
