"""Forward steps and their reverse-mode derivatives for each regression family.

All steps act on a batch of sequences at one time index: ``x`` is ``(B, d)``
and scalar outputs are ``(B,)``. A family step receives the previous latent
state and the previous output (the latter only matters for ARX and ANN-I)
and returns the new output, the new state and a cache for the backward pass.
``back`` accumulates parameter gradients into ``G`` and returns the gradient
with respect to the previous state and the previous output.
"""

import numpy as np

from ..exceptions import ConfigurationError

NONRECURSIVE, NRT, RT = "nonrecursive", "NRT", "RT"


def glorot(rng, fan_in, fan_out, shape=None):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out) if shape is None else shape)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class Family:
    name = ""
    modes = ()
    hyper_names = ()

    def init(self, n_in, hyper, rng):
        raise NotImplementedError

    def weight_names(self, params):
        return tuple(k for k in params if not k.startswith("b"))

    def init_state(self, params, batch):
        return ()

    def step(self, P, x, state, prev):
        raise NotImplementedError

    def back(self, P, cache, dy, dstate, G):
        raise NotImplementedError


def _mlp_init(n_in, depth, width, rng):
    P = {}
    fan = n_in
    for i in range(depth):
        P[f"W{i}"] = glorot(rng, fan, width)
        P[f"b{i}"] = np.zeros(width)
        fan = width
    P["W_out"] = glorot(rng, fan, 1)
    P["b_out"] = np.zeros(1)
    return P


def _mlp_depth(P):
    return sum(1 for k in P if k.startswith("W") and k != "W_out")


def _mlp_forward(P, x):
    acts, zs = [x], []
    a = x
    for i in range(_mlp_depth(P)):
        z = a @ P[f"W{i}"] + P[f"b{i}"]
        a = np.maximum(z, 0.0)
        zs.append(z)
        acts.append(a)
    return a @ P["W_out"][:, 0] + P["b_out"][0], (acts, zs)


def _mlp_back(P, cache, dy, G):
    acts, zs = cache
    G["W_out"][:, 0] += acts[-1].T @ dy
    G["b_out"][0] += dy.sum()
    da = np.outer(dy, P["W_out"][:, 0])
    for i in reversed(range(len(zs))):
        dz = da * (zs[i] > 0)
        G[f"W{i}"] += acts[i].T @ dz
        G[f"b{i}"] += dz.sum(axis=0)
        da = dz @ P[f"W{i}"].T


class ANN(Family):
    """Feed-forward ReLU network of the current features only."""

    name = "ANN"
    modes = (NONRECURSIVE,)
    hyper_names = ("depth", "width", "alpha")

    def init(self, n_in, hyper, rng):
        return _mlp_init(n_in, int(hyper["depth"]), int(hyper["width"]), rng)

    def step(self, P, x, state, prev):
        y, cache = _mlp_forward(P, x)
        return y, (), cache

    def back(self, P, cache, dy, dstate, G):
        _mlp_back(P, cache, dy, G)
        return (), np.zeros_like(dy)


class ANNI(Family):
    """Previous output plus a feed-forward increment."""

    name = "ANN-I"
    modes = (NRT, RT)
    hyper_names = ("depth", "width", "alpha")

    def init(self, n_in, hyper, rng):
        return _mlp_init(n_in, int(hyper["depth"]), int(hyper["width"]), rng)

    def step(self, P, x, state, prev):
        inc, cache = _mlp_forward(P, x)
        return prev + inc, (), cache

    def back(self, P, cache, dy, dstate, G):
        _mlp_back(P, cache, dy, G)
        return (), dy


class ARX(Family):
    """Linear autoregression on the previous output with exogenous features."""

    name = "ARX"
    modes = (NRT, RT)
    hyper_names = ("alpha",)

    def init(self, n_in, hyper, rng):
        return {"W_x": glorot(rng, n_in, 1)[:, 0],
                "W_prev": glorot(rng, 1, 1)[:, 0],
                "b": np.zeros(1)}

    def step(self, P, x, state, prev):
        return x @ P["W_x"] + P["W_prev"][0] * prev + P["b"][0], (), (x, prev)

    def back(self, P, cache, dy, dstate, G):
        x, prev = cache
        G["W_x"] += x.T @ dy
        G["W_prev"][0] += prev @ dy
        G["b"][0] += dy.sum()
        return (), P["W_prev"][0] * dy


class LARX(Family):
    """Linear latent dynamics with a linear readout."""

    name = "LARX"
    modes = (RT,)
    hyper_names = ("latent", "alpha")

    def init(self, n_in, hyper, rng):
        nh = int(hyper["latent"])
        return {"W_x": glorot(rng, n_in, nh), "W_h": glorot(rng, nh, nh), "b_h": np.zeros(nh),
                "W_out": glorot(rng, nh, 1)[:, 0], "b_out": np.zeros(1)}

    def init_state(self, P, batch):
        return (np.zeros((batch, P["W_h"].shape[0])),)

    def step(self, P, x, state, prev):
        (hp,) = state
        h = x @ P["W_x"] + hp @ P["W_h"] + P["b_h"]
        return h @ P["W_out"] + P["b_out"][0], (h,), (x, hp, h)

    def back(self, P, cache, dy, dstate, G):
        x, hp, h = cache
        G["W_out"] += h.T @ dy
        G["b_out"][0] += dy.sum()
        dh = np.outer(dy, P["W_out"])
        if dstate:
            dh += dstate[0]
        G["W_x"] += x.T @ dh
        G["W_h"] += hp.T @ dh
        G["b_h"] += dh.sum(axis=0)
        return (dh @ P["W_h"].T,), np.zeros_like(dy)


def _recurrent_init(n_in, depth, width, gates, rng, forget_bias=False):
    P = {}
    fan = n_in
    for i in range(depth):
        P[f"W{i}"] = glorot(rng, fan, gates * width)
        P[f"U{i}"] = glorot(rng, width, gates * width)
        b = np.zeros(gates * width)
        if forget_bias:
            b[width:2 * width] = 1.0
        P[f"b{i}"] = b
        fan = width
    P["W_out"] = glorot(rng, fan, 1)[:, 0]
    P["b_out"] = np.zeros(1)
    return P


def _depth(P):
    return sum(1 for k in P if k.startswith("U"))


class RNN(Family):
    """Stacked tanh recurrent layers with a linear readout of the last layer."""

    name = "RNN"
    modes = (RT,)
    hyper_names = ("depth", "width", "alpha")

    def init(self, n_in, hyper, rng):
        return _recurrent_init(n_in, int(hyper["depth"]), int(hyper["width"]), 1, rng)

    def init_state(self, P, batch):
        return tuple(np.zeros((batch, P[f"U{i}"].shape[0])) for i in range(_depth(P)))

    def step(self, P, x, state, prev):
        a, hs = x, []
        inputs = []
        for i in range(_depth(P)):
            inputs.append(a)
            a = np.tanh(a @ P[f"W{i}"] + state[i] @ P[f"U{i}"] + P[f"b{i}"])
            hs.append(a)
        return a @ P["W_out"] + P["b_out"][0], tuple(hs), (inputs, state, hs)

    def back(self, P, cache, dy, dstate, G):
        inputs, hprev, hs = cache
        d = len(hs)
        G["W_out"] += hs[-1].T @ dy
        G["b_out"][0] += dy.sum()
        dh = np.outer(dy, P["W_out"])
        dprev_state = [None] * d
        for i in reversed(range(d)):
            if dstate:
                dh = dh + dstate[i]
            dz = dh * (1.0 - hs[i] ** 2)
            G[f"W{i}"] += inputs[i].T @ dz
            G[f"U{i}"] += hprev[i].T @ dz
            G[f"b{i}"] += dz.sum(axis=0)
            dprev_state[i] = dz @ P[f"U{i}"].T
            dh = dz @ P[f"W{i}"].T
        return tuple(dprev_state), np.zeros_like(dy)


class LSTM(Family):
    """Stacked LSTM cells (input, forget, candidate, output gate order).

    The state tuple holds the hidden blocks of every layer followed by the
    cell blocks; the readout uses the hidden block of the last layer.
    """

    name = "LSTM"
    modes = (RT,)
    hyper_names = ("depth", "width", "alpha")

    def init(self, n_in, hyper, rng):
        return _recurrent_init(n_in, int(hyper["depth"]), int(hyper["width"]), 4, rng,
                               forget_bias=True)

    def init_state(self, P, batch):
        d = _depth(P)
        p = P["U0"].shape[0]
        return tuple(np.zeros((batch, p)) for _ in range(2 * d))

    def step(self, P, x, state, prev):
        d = _depth(P)
        a = x
        hs, cs, caches = [], [], []
        for i in range(d):
            p = P[f"U{i}"].shape[0]
            hp, cp = state[i], state[d + i]
            z = a @ P[f"W{i}"] + hp @ P[f"U{i}"] + P[f"b{i}"]
            ig = _sigmoid(z[:, :p])
            fg = _sigmoid(z[:, p:2 * p])
            gg = np.tanh(z[:, 2 * p:3 * p])
            og = _sigmoid(z[:, 3 * p:])
            c = fg * cp + ig * gg
            tc = np.tanh(c)
            h = og * tc
            caches.append((a, hp, cp, ig, fg, gg, og, tc))
            hs.append(h)
            cs.append(c)
            a = h
        return a @ P["W_out"] + P["b_out"][0], tuple(hs + cs), caches

    def back(self, P, cache, dy, dstate, G):
        d = len(cache)
        G["W_out"] += (cache[-1][6] * cache[-1][7]).T @ dy
        G["b_out"][0] += dy.sum()
        dh = np.outer(dy, P["W_out"])
        dh_prev = [None] * d
        dc_prev = [None] * d
        for i in reversed(range(d)):
            a, hp, cp, ig, fg, gg, og, tc = cache[i]
            if dstate:
                dh = dh + dstate[i]
                dc_next = dstate[d + i]
            else:
                dc_next = 0.0
            do = dh * tc
            dc = dh * og * (1.0 - tc * tc) + dc_next
            dz = np.concatenate([dc * gg * ig * (1.0 - ig),
                                 dc * cp * fg * (1.0 - fg),
                                 dc * ig * (1.0 - gg * gg),
                                 do * og * (1.0 - og)], axis=1)
            G[f"W{i}"] += a.T @ dz
            G[f"U{i}"] += hp.T @ dz
            G[f"b{i}"] += dz.sum(axis=0)
            dh_prev[i] = dz @ P[f"U{i}"].T
            dc_prev[i] = dc * fg
            dh = dz @ P[f"W{i}"].T
        return tuple(dh_prev + dc_prev), np.zeros_like(dy)


FAMILIES = {f.name: f for f in (ANN(), ARX(), ANNI(), LARX(), RNN(), LSTM())}
SEQUENCE_FAMILIES = tuple(FAMILIES)
ALL_FAMILIES = ("kNN",) + SEQUENCE_FAMILIES + ("GP",)


def get_family(name):
    key = {k.lower(): k for k in ALL_FAMILIES}.get(str(name).lower())
    if key is None:
        raise ConfigurationError(
            f"unknown regression family {name!r}; registered families: {list(ALL_FAMILIES)}")
    return key
