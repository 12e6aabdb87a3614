"""Parameter sampling, surrogate campaigns and response/feature datasets."""

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .dynsys import prolong
from .exceptions import CardinalityError, DomainError, ShapeError
from .features import extract_features, kind_uses_residual
from .integrator import _history_term, integrate


def sub_seed(master, *tags):
    """Deterministic 64-bit child seed of ``master`` for a tag path.

    String tags are mapped to integers with CRC-32 so that the result does
    not depend on Python's randomized string hashing.
    """
    key = tuple(zlib.crc32(t.encode()) if isinstance(t, str) else int(t) for t in tags)
    ss = np.random.SeedSequence(int(master), spawn_key=key)
    return int(ss.generate_state(1, np.uint64)[0])


def sample_parameters(domain, count, seed):
    """``count`` i.i.d. uniform samples from the box ``domain`` (rows lo, hi)."""
    domain = np.asarray(domain, dtype=float)
    if domain.ndim != 2 or domain.shape[1] != 2 or domain.shape[0] < 1:
        raise DomainError(f"domain must be an (N_mu, 2) array, got shape {domain.shape}")
    if np.any(domain[:, 1] < domain[:, 0]) or not np.all(np.isfinite(domain)):
        raise DomainError("parameter domain is empty")
    if int(count) != count or count < 1:
        raise ValueError("count must be a positive integer")
    rng = np.random.default_rng(seed)
    u = rng.random((int(count), domain.shape[0]))
    return domain[:, 0] + u * (domain[:, 1] - domain[:, 0])


@dataclass(frozen=True)
class CoarseTimeGrid:
    """Strictly increasing fine-grid indices sampled by the regression models."""

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx or idx[0] < 1 or any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("coarse time indices must be positive and strictly increasing")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_stride(cls, stride, count):
        return cls(tuple(stride * n for n in range(1, count + 1)))

    def __len__(self):
        return len(self.indices)

    @property
    def tau(self):
        """Fine index of each coarse index 0..card, with tau(0) = 0."""
        return np.array((0,) + self.indices)

    def check(self, n_steps):
        if self.indices[-1] > n_steps:
            raise ShapeError(
                f"coarse index {self.indices[-1]} exceeds the {n_steps} fine time steps")


@dataclass
class Sequence:
    """Responses and features of one parameter instance on the coarse grid."""

    mu: np.ndarray
    fine_index: np.ndarray
    times: np.ndarray
    features: np.ndarray
    delta_x: np.ndarray
    delta_q: np.ndarray
    initial_errors: tuple = (0.0, 0.0)
    instance: int = -1

    def __len__(self):
        return len(self.fine_index)

    def response(self, name):
        if name in ("state-norm", "delta_x"):
            return self.delta_x
        if name in ("qoi", "delta_q"):
            return self.delta_q
        raise ValueError(f"unknown response {name!r}; use 'state-norm' or 'qoi'")

    def initial_error(self, name):
        return self.initial_errors[0 if name in ("state-norm", "delta_x") else 1]


@dataclass
class Dataset:
    kind: str
    grid: CoarseTimeGrid
    sequences: List[Sequence] = field(default_factory=list)

    def __len__(self):
        return len(self.sequences)

    def subset(self, ids):
        ids = set(int(i) for i in ids)
        return Dataset(self.kind, self.grid, [s for s in self.sequences if s.instance in ids])


@dataclass
class InstanceResult:
    """Raw campaign output for one parameter instance."""

    mu: np.ndarray
    fine_index: np.ndarray
    times: np.ndarray
    residuals: np.ndarray
    delta_x: np.ndarray
    delta_q: np.ndarray
    initial_errors: tuple
    instance: int = -1


class GalerkinSurrogate:
    """Reduced model whose states are lifted back to the full space."""

    def __init__(self, rom, basis, fom):
        self.rom, self.basis, self.fom = rom, basis, fom

    def solve(self, scheme, grid, mu):
        traj = integrate(self.rom, scheme, grid, mu)
        return self.basis.x_ref(self.fom, mu) + traj.states @ self.basis.columns.T


class CoarseSurrogate:
    """Low-fidelity model prolonged into the full space."""

    def __init__(self, coarse, prolongation):
        self.coarse, self.prolongation = coarse, prolongation

    def solve(self, scheme, grid, mu):
        traj = integrate(self.coarse, scheme, grid, mu)
        return prolong(self.prolongation, traj.states, mu)


def compute_residuals(system, scheme, states, dt, mu, fine_indices):
    """Full-order residuals of a state sequence at the given fine indices.

    Each residual uses the sequence's own previous states as history, so for
    a surrogate trajectory this is the residual of the surrogate solution.
    """
    states = np.asarray(states, dtype=float)
    out = np.empty((len(fine_indices), states.shape[1]))
    a0, b0 = scheme.alphas[0], scheme.betas[0]
    for j, n in enumerate(fine_indices):
        if n < 1 or n >= len(states):
            raise ShapeError(f"fine index {n} is outside 1..{len(states) - 1}")
        w = states[n]
        history = [states[n - i] for i in range(1, scheme.width(n) + 1)]
        r = a0 * w + _history_term(system, scheme, history, n, mu, dt)
        if b0 != 0.0:
            r = r - dt * b0 * system.velocity(w, n * dt, mu)
        out[j] = r
    return out


def compute_responses(system, fom_states, sur_states, times, mu, fine_indices):
    """State-norm and QoI errors at the given fine indices."""
    dx = np.array([np.linalg.norm(fom_states[n] - sur_states[n]) for n in fine_indices])
    dq = np.array([system.qoi(fom_states[n], times[n], mu) - system.qoi(sur_states[n], times[n], mu)
                   for n in fine_indices])
    return dx, dq


def run_instance(system, scheme, grid, coarse, surrogate, mu, instance=-1):
    """Solve the full model and the surrogate and collect raw error data."""
    fom = integrate(system, scheme, grid, mu).states
    sur = surrogate.solve(scheme, grid, mu)
    if sur.shape != fom.shape:
        raise ShapeError(f"surrogate states {sur.shape} do not match full states {fom.shape}")
    return assemble_raw(system, scheme, grid, coarse, fom, sur, mu, instance)


def assemble_raw(system, scheme, grid, coarse, fom, sur, mu, instance=-1):
    coarse.check(grid.n_steps)
    idx = np.asarray(coarse.indices)
    times = grid.times
    res = compute_residuals(system, scheme, sur, grid.dt, mu, idx)
    dx, dq = compute_responses(system, fom, sur, times, mu, idx)
    d0x, d0q = compute_responses(system, fom, sur, times, mu, [0])
    return InstanceResult(mu=np.asarray(mu, dtype=float), fine_index=idx, times=times[idx],
                          residuals=res, delta_x=dx, delta_q=dq,
                          initial_errors=(float(d0x[0]), float(d0q[0])), instance=instance)


def assemble_dataset(fom, surrogate, system, scheme, spec, coarse, mu=None, instance=-1):
    """One dataset sequence from a full and a (full-space) surrogate trajectory.

    ``fom`` and ``surrogate`` are :class:`Trajectory` objects or state arrays
    sharing one fine time grid; when arrays are given ``mu`` and the grid must
    come from ``fom``.
    """
    grid = fom.grid
    mu = fom.mu if mu is None else mu
    fs = np.asarray(fom.states, dtype=float)
    ss = np.asarray(getattr(surrogate, "states", surrogate), dtype=float)
    if ss.shape != fs.shape:
        raise ShapeError(f"surrogate states {ss.shape} do not match full states {fs.shape}")
    raw = assemble_raw(system, scheme, grid, coarse, fs, ss, mu, instance)
    return sequence_from_raw(raw, spec)


def sequence_from_raw(raw, spec):
    uses = kind_uses_residual(spec.kind)
    feats = np.array([
        extract_features(spec, raw.mu, t, spec.residual_input(r) if uses else None)
        for t, r in zip(raw.times, raw.residuals)])
    return Sequence(mu=raw.mu, fine_index=raw.fine_index, times=raw.times, features=feats,
                    delta_x=raw.delta_x, delta_q=raw.delta_q,
                    initial_errors=raw.initial_errors, instance=raw.instance)


def run_campaign(system, scheme, grid, coarse, surrogate, mus, threads=1):
    """Raw error data for every parameter instance, in input order."""
    mus = np.asarray(mus, dtype=float)

    def task(i):
        return run_instance(system, scheme, grid, coarse, surrogate, mus[i], instance=i)

    if threads == 1 or len(mus) < 2:
        return [task(i) for i in range(len(mus))]
    with ThreadPoolExecutor(max_workers=threads if threads > 0 else None) as pool:
        return list(pool.map(task, range(len(mus))))


def build_dataset(raws, spec, coarse):
    return Dataset(spec.kind, coarse, [sequence_from_raw(r, spec) for r in raws])


@dataclass(frozen=True)
class SplitConfig:
    """Instance counts of the train/validation/test and noise-train splits."""

    n_train: int
    n_val: int
    n_test: int
    n_noise_train: int
    seed: int = 0

    def __post_init__(self):
        for name in ("n_train", "n_val", "n_test", "n_noise_train"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 0:
                raise ValueError(f"{name} must be a nonnegative integer")
        if self.n_train != 4 * self.n_val:
            raise ValueError(
                f"training count {self.n_train} must be four times validation count {self.n_val}")
        if self.n_noise_train > self.n_test:
            raise ValueError("noise-train set must be a subset of the test set")

    @property
    def total(self):
        return self.n_train + self.n_val + self.n_test


def split_indices(n_instances, cfg):
    """Instance ids for train, val, test, noise-train and noise-test.

    Instances are i.i.d. draws, so train/val/test take consecutive blocks;
    smaller training sets are prefixes of the training block. The noise-train
    subset is a seeded random draw from the test block.
    """
    if n_instances < cfg.total:
        raise CardinalityError(
            f"{n_instances} instances cannot fill a {cfg.n_train}/{cfg.n_val}/{cfg.n_test} split")
    train = list(range(cfg.n_train))
    val = list(range(cfg.n_train, cfg.n_train + cfg.n_val))
    test = list(range(cfg.n_train + cfg.n_val, cfg.total))
    rng = np.random.default_rng(sub_seed(cfg.seed, "noise-split"))
    chosen = set(rng.choice(test, size=cfg.n_noise_train, replace=False).tolist()) if test else set()
    noise_train = [i for i in test if i in chosen]
    noise_test = [i for i in test if i not in chosen]
    return {"train": train, "val": val, "test": test,
            "noise_train": noise_train, "noise_test": noise_test}


def split_dataset(dataset, cfg):
    """Split a dataset by instance id; returns a dict of datasets."""
    ids = split_indices(len(dataset), cfg)
    by_id = {s.instance: s for s in dataset.sequences}
    return {k: Dataset(dataset.kind, dataset.grid, [by_id[i] for i in v]) for k, v in ids.items()}


def training_prefix(ids, n_train, n_val):
    """Smaller training/validation sets as prefixes of the full ones."""
    if n_train != 4 * n_val:
        raise ValueError("training count must be four times validation count")
    if n_train > len(ids["train"]) or n_val > len(ids["val"]):
        raise CardinalityError("requested prefix is larger than the available split")
    return ids["train"][:n_train], ids["val"][:n_val]

