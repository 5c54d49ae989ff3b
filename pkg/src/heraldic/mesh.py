"""Universal interferometer meshes and finite-difference gradient descent.

A mesh is a fixed arrangement of N(N-1)/2 nearest-neighbour elements, each a
phase shifter on the upper arm followed by a real beam splitter, closed by a
column of N output phases. Reck meshes stack the elements in a triangle,
Clements meshes in alternating brick layers. Parameters are radians, two
per element (theta, phi) in element order, then the output phases.

Descent minimizes either a gate loss, built from the heralded fidelity F and
actuation probability P of the scheme the mesh defines::

    L = lambda_F (1 - F) + lambda_P max(0, P_goal - P)

or the squared Frobenius distance to a target single-photon unitary. The
gradient is taken by central differences; a step that fails to lower the
loss halves the learning rate and is retried. A quasi-Newton variant (BFGS on
the same finite-difference gradient) is available for ill-conditioned fits,
where plain steps converge only linearly.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import _kernels as K
from .fock import DEFAULT_PHOTON_CAP, BeamSplitter, PhaseShifter, PhotonCapError
from .metrics import PNR, _readout, fidelity
from .schemes import TARGETS, Scheme, TargetGate

RECK = "reck"
CLEMENTS = "clements"
MESH_KINDS = (RECK, CLEMENTS)
GRADIENT = "gradient"
BFGS = "bfgs"
DESCENT_METHODS = (GRADIENT, BFGS)


def _reck_pairs(n: int) -> list:
    pairs = []
    for diagonal in range(1, n):
        for top in range(diagonal - 1, -1, -1):
            pairs.append((top, top + 1))
    return pairs


def _clements_pairs(n: int) -> list:
    pairs = []
    for layer in range(n):
        pairs += [(top, top + 1) for top in range(layer % 2, n - 1, 2)]
    return pairs


@dataclass(frozen=True)
class MeshDesign:
    kind: str
    mode_count: int
    pairs: tuple = field(init=False)

    def __post_init__(self):
        if self.kind not in MESH_KINDS:
            raise ValueError(f"unknown mesh kind {self.kind!r}; choose from {MESH_KINDS}")
        if self.mode_count < 2:
            raise ValueError("a mesh needs at least 2 modes")
        build = _reck_pairs if self.kind == RECK else _clements_pairs
        object.__setattr__(self, "pairs", tuple(build(self.mode_count)))
        object.__setattr__(self, "_pair_array", np.array(self.pairs, dtype=np.int64).reshape(-1, 2))

    @property
    def element_count(self) -> int:
        return len(self.pairs)

    @property
    def n_params(self) -> int:
        return 2 * self.element_count + self.mode_count

    def elements(self, params: np.ndarray) -> list:
        """Optical elements in propagation order; angles converted to degrees."""
        params = np.asarray(params, dtype=np.float64)
        out = []
        for k, (a, b) in enumerate(self.pairs):
            out.append(PhaseShifter(a, _deg(params[2 * k + 1])))
            out.append(BeamSplitter(a, b, _deg(params[2 * k]), "0"))
        base = 2 * self.element_count
        for mode in range(self.mode_count):
            out.append(PhaseShifter(mode, _deg(params[base + mode])))
        return out

    def kernel_arrays(self, params: np.ndarray):
        """Flat element arrays for the Fock kernels, straight from radians."""
        n_el = self.element_count
        total = 2 * n_el + self.mode_count
        kinds = np.empty(total, dtype=np.int64)
        mode_a = np.empty(total, dtype=np.int64)
        mode_b = np.zeros(total, dtype=np.int64)
        thetas = np.zeros(total)
        phis = np.zeros(total)
        pairs = np.array(self.pairs, dtype=np.int64).reshape(-1, 2)
        kinds[0:2 * n_el:2] = K.PS
        kinds[1:2 * n_el:2] = K.BS
        mode_a[0:2 * n_el:2] = pairs[:, 0]
        mode_a[1:2 * n_el:2] = pairs[:, 0]
        mode_b[1:2 * n_el:2] = pairs[:, 1]
        phis[0:2 * n_el:2] = params[1:2 * n_el:2]
        thetas[1:2 * n_el:2] = params[0:2 * n_el:2]
        kinds[2 * n_el:] = K.PS
        mode_a[2 * n_el:] = np.arange(self.mode_count)
        phis[2 * n_el:] = params[2 * n_el:]
        return kinds, mode_a, mode_b, thetas, phis

    def unitaries(self, params: np.ndarray) -> np.ndarray:
        """Single-photon matrices ``U[out, in]`` for a batch of parameter rows."""
        x = np.ascontiguousarray(np.atleast_2d(np.asarray(params, dtype=np.float64)))
        return K.mesh_unitaries(x, self._pair_array, self.mode_count)

    def unitary(self, params: np.ndarray) -> np.ndarray:
        return self.unitaries(params)[0]

    def to_scheme(self, params: np.ndarray, herald: "HeraldSpec", name: str = "") -> Scheme:
        return Scheme(self.mode_count, tuple(self.elements(params)), herald.signal_modes, herald.ancilla_modes,
                      herald.ancilla_input, herald.herald_pattern, name=name)


def _deg(rad: float) -> float:
    return math.degrees(float(rad)) % 360.0


def build_mesh(kind: str, mode_count: int) -> MeshDesign:
    return MeshDesign(kind, mode_count)


@dataclass(frozen=True)
class HeraldSpec:
    signal_modes: tuple = (0, 1, 2, 3)
    ancilla_modes: tuple = (4, 5, 6, 7)
    ancilla_input: tuple = (1, 1, 0, 0)
    herald_pattern: tuple = (1, 1, 0, 0)

    def __post_init__(self):
        for attr in ("signal_modes", "ancilla_modes", "ancilla_input", "herald_pattern"):
            object.__setattr__(self, attr, tuple(int(v) for v in getattr(self, attr)))

    @property
    def mode_count(self) -> int:
        return len(self.signal_modes) + len(self.ancilla_modes)


@dataclass(frozen=True)
class DescentConfig:
    kind: str = CLEMENTS
    herald: HeraldSpec = HeraldSpec()
    target: str = "cz"
    lambda_F: float = 1.0
    lambda_P: float = 0.1
    P_goal: float = 2 / 27
    eta: float = 0.5
    h: float = 1e-5
    max_iterations: int = 2000
    restarts: int = 50
    seed: int = 0
    grad_tol: float = 1e-9
    eta_min: float = 1e-12
    loss_tol: float = 0.0
    eta_growth: float = 1.0
    method: str = GRADIENT

    def __post_init__(self):
        if self.method not in DESCENT_METHODS:
            raise ValueError(f"unknown descent method {self.method!r}")
        if self.h <= 0 or self.eta <= 0:
            raise ValueError("h and eta must be positive")
        if self.eta_growth < 1:
            raise ValueError("eta_growth must be at least 1")
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}")
        if self.kind not in MESH_KINDS:
            raise ValueError(f"unknown mesh kind {self.kind!r}")
        if self.restarts < 1 or self.max_iterations < 0:
            raise ValueError("need at least one restart and non-negative iterations")

    @property
    def mode_count(self) -> int:
        return self.herald.mode_count

    @classmethod
    def from_dict(cls, doc: dict) -> "DescentConfig":
        doc = dict(doc)
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        if "herald" in doc:
            doc["herald"] = HeraldSpec(**doc["herald"])
        return cls(**doc)

    def to_dict(self) -> dict:
        return asdict(self)


class GateObjective:
    """Gate loss of a mesh under a herald specification."""

    def __init__(self, design: MeshDesign, herald: HeraldSpec, target: TargetGate, lambda_F: float = 1.0,
                 lambda_P: float = 0.1, P_goal: float = 2 / 27, photon_cap: int = DEFAULT_PHOTON_CAP):
        if herald.mode_count != design.mode_count:
            raise ValueError("herald mode count differs from mesh size")
        self.design = design
        self.herald = herald
        self.target = target
        self.lambda_F, self.lambda_P, self.P_goal = lambda_F, lambda_P, P_goal
        layout = (design.mode_count, herald.signal_modes, herald.ancilla_modes, herald.ancilla_input,
                  herald.herald_pattern)
        self.readout = _readout(layout, PNR, False)
        basis = self.readout.basis
        if basis.photons > photon_cap:
            raise PhotonCapError(f"{basis.photons} photons exceeds cap {photon_cap}")
        kinds, mode_a, mode_b, _, _ = design.kernel_arrays(np.zeros(design.n_params))
        self.partners = np.empty((kinds.shape[0], basis.dim, basis.photons + 1), dtype=np.int64)
        for e in range(kinds.shape[0]):
            self.partners[e] = basis.partner(int(mode_a[e]), int(mode_b[e])) if kinds[e] == K.BS else -1

    def metrics(self, params: np.ndarray):
        """``(F, P)`` of the scheme the parameters define."""
        basis = self.readout.basis
        vecs = np.zeros((basis.dim, 4), dtype=np.complex128)
        vecs[self.readout.inputs, np.arange(4)] = 1.0
        kinds, mode_a, mode_b, thetas, phis = self.design.kernel_arrays(params)
        out = K.evolve_dense(vecs, basis.occ, self.partners, kinds, mode_a, mode_b, thetas, phis, basis.photons)
        m = out[self.readout.logical]
        return fidelity(m, self.target), float(np.vdot(m, m).real / 4)

    def loss_from(self, F: float, P: float) -> float:
        return self.lambda_F * (1.0 - F) + self.lambda_P * max(0.0, self.P_goal - P)

    def __call__(self, params: np.ndarray):
        F, P = self.metrics(params)
        return self.loss_from(F, P), {"F": F, "P": P}

    def batch(self, rows: np.ndarray) -> np.ndarray:
        return np.array([self(r)[0] for r in rows])


class UnitaryObjective:
    """Squared Frobenius distance between the mesh matrix and a target."""

    def __init__(self, design: MeshDesign, target: np.ndarray):
        self.design = design
        self.target = np.asarray(target, dtype=np.complex128)

    def batch(self, rows: np.ndarray) -> np.ndarray:
        diff = self.design.unitaries(rows) - self.target
        return np.sum(np.abs(diff) ** 2, axis=(1, 2))

    def __call__(self, params: np.ndarray):
        value = float(self.batch(params)[0])
        return value, {"distance": math.sqrt(value)}


def fd_gradient(objective, x: np.ndarray, h: float) -> np.ndarray:
    """Central-difference gradient, all probe points evaluated as one batch."""
    n = x.shape[0]
    probes = np.repeat(x[None, :], 2 * n, axis=0)
    idx = np.arange(n)
    probes[2 * idx, idx] += h
    probes[2 * idx + 1, idx] -= h
    values = objective.batch(probes)
    return (values[0::2] - values[1::2]) / (2 * h)


@dataclass
class RestartResult:
    params: np.ndarray
    loss: float
    info: dict
    trajectory: list
    accepted: int
    stopped: str


def descend_from(objective, x0: np.ndarray, eta: float, h: float, max_iterations: int, grad_tol: float = 1e-9,
                 eta_min: float = 1e-12, loss_tol: float = 0.0, eta_growth: float = 1.0) -> RestartResult:
    """Gradient descent from ``x0`` with step halving on non-decrease.

    ``eta_growth`` > 1 lengthens the step after every accepted move; the
    default keeps it fixed until a halving.
    """
    x = np.array(x0, dtype=np.float64)
    loss, info = objective(x)
    trajectory = [{"iteration": 0, "loss": loss, **info}]
    accepted = 0
    stopped = "max_iterations"
    for it in range(1, max_iterations + 1):
        if loss < loss_tol:
            stopped = "loss_tol"
            break
        grad = fd_gradient(objective, x, h)
        if np.linalg.norm(grad) < grad_tol:
            stopped = "gradient"
            break
        while eta >= eta_min:
            trial = x - eta * grad
            trial_loss, trial_info = objective(trial)
            if trial_loss < loss:
                break
            eta /= 2
        else:
            stopped = "step"
            break
        x, loss, info = trial, trial_loss, trial_info
        accepted += 1
        trajectory.append({"iteration": it, "loss": loss, "eta": eta, **info})
        eta *= eta_growth
    return RestartResult(x, loss, info, trajectory, accepted, stopped)


def quasi_newton_from(objective, x0: np.ndarray, h: float, max_iterations: int, grad_tol: float = 1e-9,
                      loss_tol: float = 0.0) -> RestartResult:
    """BFGS descent from ``x0`` on central-difference gradients.

    Stops when the gradient norm falls below ``grad_tol``, when no further
    decrease is possible, or after the first iterate with loss under
    ``loss_tol``.
    """
    x = np.array(x0, dtype=np.float64)
    loss, info = objective(x)
    trajectory = [{"iteration": 0, "loss": loss, **info}]
    if loss < loss_tol or max_iterations == 0:
        return RestartResult(x, loss, info, trajectory, 0, "loss_tol" if loss < loss_tol else "max_iterations")
    best = {"x": x, "loss": loss, "info": info}

    def callback(intermediate_result):
        point = intermediate_result.x
        value, point_info = objective(point)
        trajectory.append({"iteration": len(trajectory), "loss": value, **point_info})
        if value < best["loss"]:
            best.update(x=np.array(point), loss=value, info=point_info)
        if value < loss_tol:
            raise StopIteration

    result = minimize(lambda p: objective(p)[0], x, jac=lambda p: fd_gradient(objective, p, h), method="BFGS",
                      callback=callback, options={"gtol": grad_tol, "maxiter": max_iterations})
    if best["loss"] < loss_tol:
        stopped = "loss_tol"
    elif result.nit >= max_iterations:
        stopped = "max_iterations"
    elif result.status == 0:
        stopped = "gradient"
    else:
        stopped = "step"
    return RestartResult(best["x"], best["loss"], best["info"], trajectory, len(trajectory) - 1, stopped)


@dataclass
class DescentResult:
    design: MeshDesign
    best: RestartResult
    restarts: list

    def scheme(self, herald: HeraldSpec, name: str = "descent_best") -> Scheme:
        return self.design.to_scheme(self.best.params, herald, name)

    def trajectory_lines(self):
        for r, result in enumerate(self.restarts):
            for point in result.trajectory:
                yield json.dumps({"restart": r, **point})


def _starts(seed: int, restarts: int, n: int) -> list:
    streams = np.random.SeedSequence(seed).spawn(restarts)
    return [np.random.default_rng(s).uniform(0, 2 * np.pi, n) for s in streams]


def _run_restarts(objective, starts, config: DescentConfig, threads: int):
    def one(x0):
        if config.method == BFGS:
            return quasi_newton_from(objective, x0, config.h, config.max_iterations, config.grad_tol, config.loss_tol)
        return descend_from(objective, x0, config.eta, config.h, config.max_iterations, config.grad_tol,
                            config.eta_min, config.loss_tol, config.eta_growth)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, starts))
    return [one(x0) for x0 in starts]


def descend(config: DescentConfig, x0: Optional[np.ndarray] = None, threads: int = 1,
            photon_cap: int = DEFAULT_PHOTON_CAP) -> DescentResult:
    """Gate search over a mesh: best result across random restarts.

    With ``x0`` a single run starts there instead of at random points.
    """
    design = build_mesh(config.kind, config.mode_count)
    objective = GateObjective(design, config.herald, TARGETS[config.target], config.lambda_F, config.lambda_P,
                              config.P_goal, photon_cap)
    starts = [np.asarray(x0, dtype=np.float64)] if x0 is not None else _starts(config.seed, config.restarts,
                                                                               design.n_params)
    results = _run_restarts(objective, starts, config, threads)
    best = min(results, key=lambda r: r.loss)
    return DescentResult(design, best, results)


def unitary_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


def fit_unitary(kind: str, target: np.ndarray, seed: int = 0, restarts: int = 8, max_iterations: int = 20000,
                tol: float = 1e-6, eta: float = 0.1, h: float = 1e-5, eta_growth: float = 1.5,
                method: str = BFGS) -> RestartResult:
    """Fit mesh parameters to a target unitary; stops at the first restart closer than ``tol``.

    The default quasi-Newton method converges superlinearly; ``method="gradient"``
    runs the plain step-halving rule with ``eta`` and ``eta_growth``.
    """
    if method not in DESCENT_METHODS:
        raise ValueError(f"unknown descent method {method!r}")
    target = np.asarray(target, dtype=np.complex128)
    design = build_mesh(kind, target.shape[0])
    objective = UnitaryObjective(design, target)
    best = None
    for x0 in _starts(seed, restarts, design.n_params):
        if method == BFGS:
            result = quasi_newton_from(objective, x0, h, max_iterations, grad_tol=0.0, loss_tol=tol ** 2)
        else:
            result = descend_from(objective, x0, eta, h, max_iterations, grad_tol=0.0, loss_tol=tol ** 2,
                                  eta_growth=eta_growth)
        if best is None or result.loss < best.loss:
            best = result
        if best.loss < tol ** 2:
            break
    return best


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a complex Gaussian matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
