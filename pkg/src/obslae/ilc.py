"""Iterative learning control through the lifted (supervector) form.

Plant, repeated over trials k with the same x0, w and v::

    x(t+1) = A x(t) + B u(t) + w(t)
    y(t)   = C x(t) + v(t)

With relative degree r, inputs u(0..N-1) only reach outputs y(r..r+N-1), and
stacking those windows gives ``Y = G U + X0 + D W + V`` with G block lower
triangular Toeplitz in the Markov parameters ``C A^(i+r-1) B``. Learning the
input is then the equation ``Y_d - X0 - D W - V = G U``.

Signals are 2-D arrays with one row per time step. Disturbances are indexed
by absolute time: ``w[t]`` for t = 0..N+r-2 and ``v[t]`` for t = 0..N+r-1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels, lalg
from .errors import DimensionError, NonFiniteError, ZeroTransferError
from .lalg import DEFAULT_TOL


def _signal(a, name: str, width: int, min_rows: int) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    if arr.ndim == 1 and width == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[1] != width:
        raise DimensionError(f"{name} must have {width} columns, got shape {arr.shape}")
    if arr.shape[0] < min_rows:
        raise DimensionError(f"{name} needs at least {min_rows} time samples, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class LtiPlant:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    x0: np.ndarray
    horizon_n: int
    w: np.ndarray | None = None
    v: np.ndarray | None = None

    def __post_init__(self):
        a = lalg.as_matrix(self.a, "A")
        b = lalg.as_matrix(self.b, "B")
        c = lalg.as_matrix(self.c, "C")
        x0 = lalg.as_vector(self.x0, "x0")
        n_s = a.shape[0]
        if a.shape != (n_s, n_s) or b.shape[0] != n_s or c.shape[1] != n_s or x0.shape[0] != n_s:
            raise DimensionError(f"inconsistent plant shapes A{a.shape} B{b.shape} C{c.shape} x0{x0.shape}")
        if int(self.horizon_n) < 1:
            raise ValueError("horizon_n must be positive")
        for name, val in (("A", a), ("B", b), ("C", c), ("x0", x0)):
            object.__setattr__(self, name.lower(), val)
        object.__setattr__(self, "horizon_n", int(self.horizon_n))
        if self.w is not None:
            object.__setattr__(self, "w", _signal(self.w, "w", n_s, 1))
        if self.v is not None:
            object.__setattr__(self, "v", _signal(self.v, "v", c.shape[0], 1))

    @property
    def n_s(self) -> int:
        return self.a.shape[0]

    @property
    def n_i(self) -> int:
        return self.b.shape[1]

    @property
    def n_o(self) -> int:
        return self.c.shape[0]

    def w_at(self, t: int) -> np.ndarray:
        if self.w is None:
            return np.zeros(self.n_s)
        if t >= self.w.shape[0]:
            raise DimensionError(f"w has no sample for t={t}")
        return self.w[t]

    def v_at(self, t: int) -> np.ndarray:
        if self.v is None:
            return np.zeros(self.n_o)
        if t >= self.v.shape[0]:
            raise DimensionError(f"v has no sample for t={t}")
        return self.v[t]


@dataclass(frozen=True)
class LiftedSystem:
    r: int
    g: np.ndarray
    d: np.ndarray
    x0_term: np.ndarray
    y_tilde_d: np.ndarray
    y_d: np.ndarray
    w: np.ndarray
    v: np.ndarray
    markov: tuple[np.ndarray, ...]

    @property
    def offset(self) -> np.ndarray:
        """X0 + D W + V, the input-independent part of the stacked output."""
        return self.x0_term + lalg.matmul(self.d, self.w) + self.v


@dataclass(frozen=True)
class IlcRun:
    """Trial k = 0..iterations: inputs[k], outputs[k] are supervectors."""

    inputs: np.ndarray
    outputs: np.ndarray
    errors: np.ndarray
    iterations: int


def relative_degree(plant: LtiPlant, tol: float = DEFAULT_TOL) -> int:
    """Smallest r >= 1 with C A^(r-1) B nonzero."""
    a_pow_b = plant.b
    c_scale = lalg.max_abs(plant.c)
    for j in range(plant.n_s):
        markov = lalg.matmul(plant.c, a_pow_b)
        # Zero up to cancellation at the scale of the factors being multiplied.
        if lalg.max_abs(markov) > tol * plant.n_s * c_scale * lalg.max_abs(a_pow_b):
            return j + 1
        a_pow_b = lalg.matmul(plant.a, a_pow_b)
    raise ZeroTransferError("C A^j B vanishes for every j < n_s, so the input never reaches the output")


def _powers_times_b_and_c(plant: LtiPlant, count: int) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """[C A^j for j < count], [C A^j B for j < count]."""
    ca = [plant.c]
    for _ in range(1, count):
        ca.append(lalg.matmul(ca[-1], plant.a))
    cab = [lalg.matmul(m, plant.b) for m in ca]
    return ca, cab


def lift(plant: LtiPlant, y_d, tol: float = DEFAULT_TOL) -> LiftedSystem:
    """Supervector form of the plant over the window t = r..r+N-1.

    ``y_d`` holds the reference at t = r..r+N-1, one row per step.
    """
    r = relative_degree(plant, tol)
    n, n_i, n_o, n_s = plant.horizon_n, plant.n_i, plant.n_o, plant.n_s
    ref = _signal(y_d, "y_d", n_o, n)[:n]
    ca, cab = _powers_times_b_and_c(plant, r + n)

    markov = tuple(lalg._frozen(np.array(cab[i + r - 1])) for i in range(n))
    g = np.zeros((n * n_o, n * n_i))
    for i in range(n):
        for j in range(i + 1):
            g[i * n_o:(i + 1) * n_o, j * n_i:(j + 1) * n_i] = markov[i - j]

    n_w = n + r - 1
    d = np.zeros((n * n_o, n_w * n_s))
    for i in range(n):
        for j in range(r + i):
            d[i * n_o:(i + 1) * n_o, j * n_s:(j + 1) * n_s] = ca[r + i - 1 - j]

    x0_term = np.concatenate([lalg.matmul(ca[r + i], plant.x0) for i in range(n)])
    w = np.concatenate([plant.w_at(t) for t in range(n_w)])
    v = np.concatenate([plant.v_at(t) for t in range(r, r + n)])
    y_sup = ref.reshape(-1).copy()
    y_tilde = y_sup - (x0_term + lalg.matmul(d, w) + v)
    return LiftedSystem(
        r=r,
        g=lalg._frozen(g),
        d=lalg._frozen(d),
        x0_term=lalg._frozen(x0_term),
        y_tilde_d=lalg._frozen(y_tilde),
        y_d=lalg._frozen(y_sup),
        w=lalg._frozen(w),
        v=lalg._frozen(v),
        markov=markov,
    )


def simulate_time_domain(plant: LtiPlant, u, r: int | None = None) -> np.ndarray:
    """Run the recursion from x0 and return y(r..r+N-1), one row per step.

    Inputs beyond t = N-1 are taken as zero; they cannot reach the window.
    """
    if r is None:
        r = relative_degree(plant)
    n = plant.horizon_n
    u = _signal(u, "u", plant.n_i, n)
    a = np.ascontiguousarray(plant.a)
    b = np.ascontiguousarray(plant.b)
    c = np.ascontiguousarray(plant.c)
    x = np.array(plant.x0)
    zero_u = np.zeros(plant.n_i)
    out = np.empty((n, plant.n_o))
    last = r + n - 1
    for t in range(last + 1):
        if t >= r:
            out[t - r] = _kernels.matvec(c, x) + plant.v_at(t)
        if t < last:
            ut = np.ascontiguousarray(u[t]) if t < n else zero_u
            x = _kernels.matvec(a, x) + _kernels.matvec(b, ut) + plant.w_at(t)
    out.flags.writeable = False
    return out


def ptype_gain(f0, n: int) -> np.ndarray:
    """Block-diagonal lifted gain I_N (x) F0 of the P-type law."""
    f0 = lalg.as_matrix(f0, "F0")
    if int(n) < 1:
        raise DimensionError("N must be positive")
    return lalg._frozen(np.kron(np.eye(int(n)), f0))


def tracking_errors(y_d: np.ndarray, y: np.ndarray) -> float:
    """max over the window of ||y_d(t) - y(t)||_2."""
    diff = np.asarray(y_d) - np.asarray(y)
    return float(max(lalg.norm2(np.ascontiguousarray(row)) for row in diff))


def run_ilc(plant: LtiPlant, y_d, f, u0, iters: int) -> IlcRun:
    """Apply U_{k+1} = U_k + F (Y_d - Y_k) with Y_k measured by simulation.

    ``u0`` is the first trial's input, one row per step (t = 0..N-1).
    Records trials 0..iters.
    """
    r = relative_degree(plant)
    n, n_i, n_o = plant.horizon_n, plant.n_i, plant.n_o
    ref = _signal(y_d, "y_d", n_o, n)[:n]
    u = np.array(_signal(u0, "u0", n_i, n)[:n]).reshape(-1)
    f = lalg.as_matrix(f, "F")
    if f.shape != (n * n_i, n * n_o):
        raise DimensionError(f"F must be {n * n_i}x{n * n_o}, got {f.shape}")
    if int(iters) < 0:
        raise ValueError("iters must be non-negative")
    f = np.ascontiguousarray(f)
    y_sup = ref.reshape(-1)

    inputs = np.empty((iters + 1, n * n_i))
    outputs = np.empty((iters + 1, n * n_o))
    errors = np.empty(iters + 1)
    for k in range(iters + 1):
        y = simulate_time_domain(plant, u.reshape(n, n_i), r)
        if not np.all(np.isfinite(y)):
            raise NonFiniteError(f"output of trial {k} is not finite")
        inputs[k] = u
        outputs[k] = y.reshape(-1)
        errors[k] = tracking_errors(ref, y)
        if k < iters:
            u = u + _kernels.matvec(f, np.ascontiguousarray(y_sup - outputs[k]))
            if not np.all(np.isfinite(u)):
                raise NonFiniteError(f"input of trial {k + 1} is not finite")
    for arr in (inputs, outputs, errors):
        arr.flags.writeable = False
    return IlcRun(inputs=inputs, outputs=outputs, errors=errors, iterations=int(iters))
