"""Three-layer restricted Boltzmann machine variational ground states.

The ansatz over n visible spins sigma in {+1,-1}^n is

    psi(sigma) = sqrt(P(sigma)) * s(sigma),

where P is the Gibbs marginal of a hidden layer of m spins,

    P(sigma) = exp(sum_i a_i sigma_i) * prod_j 2 cosh(b_j + sum_i w_ij sigma_i) / Z,

and s(sigma) = tanh(c + sum_i d_i sigma_i) supplies the sign structure.
A physical basis of size N <= 2^n occupies the string-integers 0..N-1;
surplus strings are unphysical and their amplitudes are forced to zero.
Energies are Rayleigh quotients against a Hamiltonian embedded in the
2^n space.  Training is plain gradient descent on finite-difference
gradients, optionally warm-started from a previously converged point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DegenerateStateError,
    EncodingError,
    InvalidDimensionError,
)
from .operators import TruncatedOperator

_FD_STEP = 1e-4
_NORM_FLOOR = 1e-150


@dataclass(frozen=True)
class RbmParams:
    """Trainable parameters: visible/hidden biases, sign layer, weights."""

    a: np.ndarray
    b: np.ndarray
    c: float
    d: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(self.a, dtype=np.float64)
        b = np.ascontiguousarray(self.b, dtype=np.float64)
        d = np.ascontiguousarray(self.d, dtype=np.float64)
        w = np.ascontiguousarray(self.w, dtype=np.float64)
        if a.ndim != 1 or b.ndim != 1 or d.ndim != 1 or w.ndim != 2:
            raise ConfigError("a, b, d must be vectors and w a matrix")
        if w.shape != (a.size, b.size):
            raise ConfigError(
                f"weight shape {w.shape} does not match (visible, hidden) = ({a.size}, {b.size})"
            )
        if d.size != a.size:
            raise ConfigError("sign weights d must have one entry per visible spin")
        parts = np.concatenate([a, b, [self.c], d, w.ravel()])
        if not np.all(np.isfinite(parts)):
            raise ConfigError("parameters must all be finite")
        for arr in (a, b, d, w):
            arr.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def m(self) -> int:
        return self.b.size

    @property
    def k(self) -> float:
        """Rescaling factor max(1, |w_ij|/2), recomputed on every read."""
        top = float(np.max(np.abs(self.w))) if self.w.size else 0.0
        return max(1.0, 0.5 * top)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.a, self.b, [self.c], self.d, self.w.ravel()])

    @classmethod
    def from_vector(cls, vec, n: int, m: int) -> "RbmParams":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != 2 * n + m + 1 + n * m:
            raise ConfigError(f"expected {2 * n + m + 1 + n * m} entries, got {vec.size}")
        a, rest = vec[:n], vec[n:]
        b, rest = rest[:m], rest[m:]
        c, rest = float(rest[0]), rest[1:]
        d, w = rest[:n], rest[n:].reshape(n, m)
        return cls(a=a, b=b, c=c, d=d, w=w)


@dataclass(frozen=True)
class BasisEncoding:
    """Binary encoding of a Fock basis of size N into n = ceil(log2 N) spins.

    String-integer x (little-endian bits, bit 1 -> sigma = +1) labels both
    the spin configuration and the Fock state |x>; integers >= N are
    unphysical surplus strings.
    """

    fock_dim: int
    n: int
    strings: np.ndarray = field(repr=False)
    physical: np.ndarray = field(repr=False)

    def encode(self, x: int) -> tuple:
        if not 0 <= x < self.fock_dim:
            raise EncodingError(f"basis index {x} outside [0, {self.fock_dim})")
        return tuple(int(v) for v in self.strings[x])

    def decode(self, sigma) -> int:
        sigma = _check_sigma(sigma, self.n)
        bits = (sigma > 0).astype(np.int64)
        x = int(bits @ (1 << np.arange(self.n)))
        if x >= self.fock_dim:
            raise EncodingError(f"string {tuple(int(v) for v in sigma)} is unphysical")
        return x


@dataclass(frozen=True)
class VariationalState:
    """Normalized amplitudes over the 2^n strings plus the pre-normalization norm."""

    amplitudes: np.ndarray = field(repr=False)
    norm: float

    def __post_init__(self):
        amp = np.ascontiguousarray(self.amplitudes, dtype=np.float64)
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)


def make_encoding(fock_dim: int) -> BasisEncoding:
    if fock_dim < 2:
        raise InvalidDimensionError(f"basis size must be >= 2, got {fock_dim}")
    n = max(1, int(math.ceil(math.log2(fock_dim))))
    size = 1 << n
    x = np.arange(size)
    bits = (x[:, None] >> np.arange(n)) & 1
    strings = np.where(bits == 1, 1.0, -1.0)
    strings.flags.writeable = False
    physical = x < fock_dim
    physical.flags.writeable = False
    return BasisEncoding(fock_dim=fock_dim, n=n, strings=strings, physical=physical)


def random_params(n: int, m: int, seed: int) -> RbmParams:
    """Uniform [-0.05, 0.05] biases and weights; c = 0.1 avoids s == 0."""
    rng = np.random.default_rng(seed)
    return RbmParams(
        a=rng.uniform(-0.05, 0.05, n),
        b=rng.uniform(-0.05, 0.05, m),
        c=0.1,
        d=rng.uniform(-0.05, 0.05, n),
        w=rng.uniform(-0.05, 0.05, (n, m)),
    )


def _check_sigma(sigma, n: int) -> np.ndarray:
    arr = np.asarray(sigma, dtype=np.float64)
    if arr.shape != (n,):
        raise EncodingError(f"expected a spin string of length {n}, got shape {arr.shape}")
    if not np.all(np.abs(arr) == 1.0):
        raise EncodingError("spin entries must be +1 or -1")
    return arr


def _log2cosh(t: np.ndarray) -> np.ndarray:
    # log(2 cosh t) = |t| + log1p(exp(-2|t|)), overflow-safe
    at = np.abs(t)
    return at + np.log1p(np.exp(-2.0 * at))


def _gibbs_batch(theta: np.ndarray, strings: np.ndarray, n: int, m: int):
    """Exact Gibbs marginals P and sign values s for a batch of parameter vectors.

    theta has shape (B, n_params); returns (P, s) each of shape (B, 2^n).
    """
    size = strings.shape[0]
    a = theta[:, :n]
    b = theta[:, n : n + m]
    c = theta[:, n + m]
    d = theta[:, n + m + 1 : 2 * n + m + 1]
    w = theta[:, 2 * n + m + 1 :].reshape(-1, n, m)
    act = a @ strings.T  # (B, 2^n)
    hid = np.einsum("xn,bnm->bxm", strings, w, optimize=True) + b[:, None, :]
    logu = act + _log2cosh(hid).sum(axis=2)
    logu -= logu.max(axis=1, keepdims=True)
    p = np.exp(logu)
    p /= p.sum(axis=1, keepdims=True)
    s = np.tanh(c[:, None] + d @ strings.T)
    assert p.shape == (theta.shape[0], size)
    return p, s


def _amplitudes_from(p_row: np.ndarray, s_row: np.ndarray, physical: np.ndarray):
    amp = np.sqrt(np.clip(p_row, 0.0, None)) * s_row
    amp = np.where(physical, amp, 0.0)
    norm = float(np.linalg.norm(amp))
    if not np.isfinite(norm) or norm <= _NORM_FLOOR:
        raise DegenerateStateError(
            "variational state has (near-)zero norm; sign layer may be identically zero"
        )
    return amp / norm, norm


def _resolve_p(params: RbmParams, encoding: BasisEncoding, p_source, seed):
    if isinstance(p_source, str):
        if p_source != "exact":
            raise ConfigError(f"unknown probability source '{p_source}'")
        p, _ = _gibbs_batch(params.to_vector()[None, :], encoding.strings, params.n, params.m)
        return p[0]
    if callable(p_source):
        p = np.asarray(p_source(params, seed), dtype=np.float64)
    else:
        p = np.asarray(p_source, dtype=np.float64)
    if p.shape != (encoding.strings.shape[0],):
        raise ConfigError(
            f"distribution must cover all {encoding.strings.shape[0]} strings, got shape {p.shape}"
        )
    if np.any(p < 0.0) or not np.all(np.isfinite(p)):
        raise ConfigError("distribution entries must be finite and nonnegative")
    total = p.sum()
    if total <= 0.0:
        raise DegenerateStateError("distribution sums to zero")
    return p / total  # renormalization keeps energies scale-invariant


def probability(params: RbmParams, sigma) -> float:
    """Exact hidden-layer-traced Gibbs marginal of one spin string."""
    sigma = _check_sigma(sigma, params.n)
    size = 1 << params.n
    x = np.arange(size)
    bits = (x[:, None] >> np.arange(params.n)) & 1
    strings = np.where(bits == 1, 1.0, -1.0)
    p, _ = _gibbs_batch(params.to_vector()[None, :], strings, params.n, params.m)
    idx = int((sigma > 0).astype(np.int64) @ (1 << np.arange(params.n)))
    return float(p[0, idx])


def sign_value(params: RbmParams, sigma) -> float:
    """Sign-layer output tanh(c + d . sigma), strictly inside (-1, 1)."""
    sigma = _check_sigma(sigma, params.n)
    return float(np.tanh(params.c + params.d @ sigma))


def build_state(params: RbmParams, encoding: BasisEncoding, p_source="exact",
                seed=None) -> VariationalState:
    """Normalized wavefunction sqrt(P) * s with unphysical strings zeroed.

    ``p_source`` selects where P comes from: "exact" (closed-form trace),
    an explicit distribution array over the 2^n strings, or a callable
    (params, seed) -> distribution.
    """
    if params.n != encoding.n:
        raise EncodingError(
            f"params have {params.n} visible spins but encoding needs {encoding.n}"
        )
    p = _resolve_p(params, encoding, p_source, seed)
    _, s = _gibbs_batch(params.to_vector()[None, :], encoding.strings, params.n, params.m)
    amp, norm = _amplitudes_from(p, s[0], encoding.physical)
    return VariationalState(amplitudes=amp, norm=norm)


def embed_operator(op, encoding: BasisEncoding) -> np.ndarray:
    """Physical operator as the top-left block of the 2^n string space."""
    matrix = op.entries if isinstance(op, TruncatedOperator) else np.asarray(op, dtype=np.float64)
    dim = encoding.fock_dim
    if matrix.shape != (dim, dim):
        raise InvalidDimensionError(
            f"operator shape {matrix.shape} does not match basis size {dim}"
        )
    size = encoding.strings.shape[0]
    out = np.zeros((size, size))
    out[:dim, :dim] = matrix
    return out


def energy(params: RbmParams, h_embedded, encoding: BasisEncoding, p_source="exact",
           seed=None) -> float:
    """Rayleigh quotient of the embedded Hamiltonian in the RBM state."""
    h = np.asarray(h_embedded, dtype=np.float64)
    size = encoding.strings.shape[0]
    if h.shape != (size, size):
        raise InvalidDimensionError(
            f"embedded Hamiltonian must be {size}x{size}, got {h.shape}"
        )
    state = build_state(params, encoding, p_source, seed)
    return float(state.amplitudes @ (h @ state.amplitudes))


def _exact_energies(theta: np.ndarray, n: int, m: int, h: np.ndarray,
                    encoding: BasisEncoding) -> np.ndarray:
    p, s = _gibbs_batch(theta, encoding.strings, n, m)
    amp = np.sqrt(p) * s
    amp[:, ~encoding.physical] = 0.0
    norms = np.linalg.norm(amp, axis=1)
    if np.any(~np.isfinite(norms)) or np.any(norms <= _NORM_FLOOR):
        raise DegenerateStateError("variational state has (near-)zero norm")
    amp /= norms[:, None]
    return np.einsum("bx,xy,by->b", amp, h, amp, optimize=True)


def gradient(params: RbmParams, h_embedded, encoding: BasisEncoding, p_source="exact",
             seed=None) -> RbmParams:
    """Central finite-difference energy gradient, step 1e-4 per parameter.

    In sampled mode (callable p_source) both sides of every difference
    reuse the same seed, so the sampling noise cancels to first order.
    """
    h = np.asarray(h_embedded, dtype=np.float64)
    base = params.to_vector()
    n, m = params.n, params.m
    count = base.size
    if isinstance(p_source, str) and p_source == "exact":
        theta = np.repeat(base[None, :], 2 * count, axis=0)
        idx = np.arange(count)
        theta[2 * idx, idx] += _FD_STEP
        theta[2 * idx + 1, idx] -= _FD_STEP
        energies = _exact_energies(theta, n, m, h, encoding)
        grad = (energies[0::2] - energies[1::2]) / (2.0 * _FD_STEP)
    else:
        grad = np.empty(count)
        for i in range(count):
            plus = base.copy()
            minus = base.copy()
            plus[i] += _FD_STEP
            minus[i] -= _FD_STEP
            e_plus = energy(RbmParams.from_vector(plus, n, m), h, encoding, p_source, seed)
            e_minus = energy(RbmParams.from_vector(minus, n, m), h, encoding, p_source, seed)
            grad[i] = (e_plus - e_minus) / (2.0 * _FD_STEP)
    return RbmParams.from_vector(grad, n, m)


def train(h_embedded, encoding: BasisEncoding, init: RbmParams | None = None,
          lr: float = 0.01, iters: int = 30000, p_source="exact",
          seed: int = 0) -> tuple:
    """Plain gradient descent; returns final params and the energy trace.

    ``init=None`` draws the seeded random initialization; passing the
    converged params of a neighbouring point warm-starts the descent.
    A degenerate initial state gets its sign bias reset to 0.1 once.
    """
    if lr <= 0.0:
        raise ConfigError(f"learning rate must be positive, got {lr}")
    if iters < 1:
        raise ConfigError(f"need at least one iteration, got {iters}")
    h = np.asarray(h_embedded, dtype=np.float64)
    size = encoding.strings.shape[0]
    if h.shape != (size, size):
        raise InvalidDimensionError(
            f"embedded Hamiltonian must be {size}x{size}, got {h.shape}"
        )
    n = encoding.n
    if init is None:
        init = random_params(n, n, seed)
    elif not isinstance(init, RbmParams):
        init, _, _ = load_checkpoint(init)  # warm start from a checkpoint file
    if init.n != n:
        raise EncodingError(
            f"initial params have {init.n} visible spins but encoding needs {n}"
        )
    try:
        build_state(init, encoding, "exact")
    except DegenerateStateError:
        init = RbmParams(a=init.a, b=init.b, c=0.1, d=init.d, w=init.w)
        build_state(init, encoding, "exact")  # re-raises if still degenerate

    m = init.m
    base = init.to_vector()
    count = base.size
    trace = np.empty(iters)
    exact = isinstance(p_source, str) and p_source == "exact"
    idx = np.arange(count)
    for it in range(iters):
        if exact:
            theta = np.repeat(base[None, :], 2 * count + 1, axis=0)
            theta[2 * idx + 1, idx] += _FD_STEP
            theta[2 * idx + 2, idx] -= _FD_STEP
            energies = _exact_energies(theta, n, m, h, encoding)
            trace[it] = energies[0]
            grad = (energies[1::2] - energies[2::2]) / (2.0 * _FD_STEP)
        else:
            step_seed = None if seed is None else seed + it
            params_it = RbmParams.from_vector(base, n, m)
            trace[it] = energy(params_it, h, encoding, p_source, step_seed)
            grad = gradient(params_it, h, encoding, p_source, step_seed).to_vector()
        base = base - lr * grad
    return RbmParams.from_vector(base, n, m), trace


def save_checkpoint(path, params: RbmParams, seed: int, iteration: int) -> None:
    """Named-array container with everything needed to resume or warm-start."""
    np.savez(
        path,
        a=params.a,
        b=params.b,
        c=np.array([params.c]),
        d=params.d,
        w=params.w,
        seed=np.array([seed], dtype=np.int64),
        iteration=np.array([iteration], dtype=np.int64),
    )


def load_checkpoint(path):
    with np.load(path) as data:
        params = RbmParams(
            a=data["a"], b=data["b"], c=float(data["c"][0]), d=data["d"], w=data["w"]
        )
        return params, int(data["seed"][0]), int(data["iteration"][0])
