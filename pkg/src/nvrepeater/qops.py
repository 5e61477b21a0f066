"""Dense operator algebra and Lindblad propagation.

Operators are plain complex ``numpy`` arrays. Density matrices are
vectorized by column stacking, ``vec(rho) = rho.flatten(order="F")``, so
that ``vec(A @ rho @ B) = kron(B.T, A) @ vec(rho)``. Every superoperator
in the package follows this convention.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

MAX_DIM = 32
HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = -1e-8


class DimensionError(ValueError):
    """Operands live on Hilbert spaces of different dimension."""


class NumericalError(ArithmeticError):
    """A propagation or solve produced an invalid result."""


class DegenerateSteadyStateError(NumericalError):
    def __init__(self, multiplicity: int):
        super().__init__(f"steady state is not unique: kernel dimension {multiplicity}")
        self.multiplicity = multiplicity


@dataclass(frozen=True)
class LindbladTerm:
    """A dissipator ``rate * D[collapse]``."""

    rate: float
    collapse: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.rate) or self.rate < 0:
            raise ValueError(f"Lindblad rate must be finite and non-negative, got {self.rate}")
        op = np.asarray(self.collapse, dtype=complex)
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise DimensionError(f"collapse operator must be square, got shape {op.shape}")
        object.__setattr__(self, "collapse", op)

    @property
    def dim(self) -> int:
        return self.collapse.shape[0]


# --- elementary operators ------------------------------------------------

def destroy(n: int) -> np.ndarray:
    """Annihilation operator on a Fock space truncated to ``n`` levels."""
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def basis(n: int, k: int) -> np.ndarray:
    v = np.zeros(n, dtype=complex)
    v[k] = 1.0
    return v


def projector(n: int, k: int) -> np.ndarray:
    p = np.zeros((n, n), dtype=complex)
    p[k, k] = 1.0
    return p


def transition(n: int, i: int, j: int) -> np.ndarray:
    """``|i><j|`` on an ``n``-level space."""
    op = np.zeros((n, n), dtype=complex)
    op[i, j] = 1.0
    return op


def dag(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def kron(a: np.ndarray, *rest: np.ndarray) -> np.ndarray:
    """Tensor product, left factor varying slowest."""
    out = np.asarray(a, dtype=complex)
    for b in rest:
        out = np.kron(out, np.asarray(b, dtype=complex))
    return out


def ket2dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def expect(op: np.ndarray, rho: np.ndarray) -> float:
    return float(np.real(np.trace(op @ rho)))


def is_hermitian(a: np.ndarray, tol: float = 1e-12) -> bool:
    norm = np.linalg.norm(a)
    if norm == 0:
        return True
    return np.linalg.norm(a - dag(a)) <= tol * norm


def ptrace(rho: np.ndarray, dims: tuple[int, ...], keep: tuple[int, ...]) -> np.ndarray:
    """Partial trace of ``rho`` on subsystems with sizes ``dims``."""
    n = len(dims)
    keep = tuple(sorted(keep))
    t = rho.reshape(dims + dims)
    drop = [k for k in range(n) if k not in keep]
    # trace the highest axes first so remaining axis numbers stay valid
    for k in sorted(drop, reverse=True):
        nk = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + nk)
    d = int(np.prod([dims[k] for k in keep]))
    return t.reshape(d, d)


# --- vectorization -------------------------------------------------------

def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).flatten(order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.shape[0])))
    return v.reshape((d, d), order="F")


def spre(a: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> a @ rho``."""
    return np.kron(np.eye(a.shape[0]), a)


def spost(a: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> rho @ a``."""
    return np.kron(a.T, np.eye(a.shape[0]))


def sprepost(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> a @ rho @ b``."""
    return np.kron(b.T, a)


def jump_superop(a: np.ndarray, rate: float = 1.0) -> np.ndarray:
    """Superoperator of the bare jump ``rho -> rate * a rho a^dag``."""
    return rate * sprepost(a, dag(a))


# --- Lindblad generator --------------------------------------------------

def _check_dims(*ops: np.ndarray) -> int:
    dims = {op.shape for op in ops}
    if len(dims) != 1:
        raise DimensionError(f"operator shapes disagree: {sorted(dims)}")
    shape = dims.pop()
    if len(shape) != 2 or shape[0] != shape[1]:
        raise DimensionError(f"operators must be square, got {shape}")
    return shape[0]


def dissipator_apply(term: LindbladTerm, rho: np.ndarray) -> np.ndarray:
    """``rate * (A rho A^dag - {A^dag A, rho}/2)``."""
    a = term.collapse
    _check_dims(a, rho)
    ada = dag(a) @ a
    return term.rate * (a @ rho @ dag(a) - 0.5 * (ada @ rho + rho @ ada))


def dissipator(term: LindbladTerm) -> np.ndarray:
    a = term.collapse
    ada = dag(a) @ a
    return term.rate * (sprepost(a, dag(a)) - 0.5 * spre(ada) - 0.5 * spost(ada))


def build_liouvillian(H: np.ndarray, terms=()) -> np.ndarray:
    """Column-stacked generator of ``-i[H, rho] + sum_r D_r[rho]``."""
    H = np.asarray(H, dtype=complex)
    d = _check_dims(H, *[t.collapse for t in terms])
    if d > MAX_DIM:
        raise DimensionError(f"Hilbert space dimension {d} exceeds {MAX_DIM}")
    L = -1j * (spre(H) - spost(H))
    for term in terms:
        if term.rate:
            L = L + dissipator(term)
    return L


# --- propagation ---------------------------------------------------------

_PROPAGATOR_CACHE: dict[tuple, np.ndarray] = {}
_CACHE_LIMIT = 64


def propagator(L: np.ndarray, t: float) -> np.ndarray:
    """``expm(L t)`` by scaling and squaring, memoized on ``(L, t)``."""
    if t < 0:
        raise ValueError(f"propagation time must be non-negative, got {t}")
    key = (hash(L.tobytes()), L.shape, float(t))
    P = _PROPAGATOR_CACHE.get(key)
    if P is None:
        with np.errstate(over="ignore", invalid="ignore"):
            P = scipy.linalg.expm(L * t)
        if not np.all(np.isfinite(P)):
            raise NumericalError(
                f"non-finite propagator for t={t}; check the input rates")
        if len(_PROPAGATOR_CACHE) >= _CACHE_LIMIT:
            _PROPAGATOR_CACHE.pop(next(iter(_PROPAGATOR_CACHE)))
        _PROPAGATOR_CACHE[key] = P
    return P


def propagate(L: np.ndarray, rho0: np.ndarray, t: float) -> np.ndarray:
    if t == 0:
        return np.array(rho0, dtype=complex)
    return unvec(propagator(L, t) @ vec(rho0))


def trajectory(L: np.ndarray, rho0: np.ndarray, times) -> np.ndarray:
    """States on a uniform time grid starting at ``times[0] == 0``.

    Returns an array of shape ``(len(times), d, d)``.
    """
    times = np.asarray(times, dtype=float)
    if times[0] != 0:
        raise ValueError("time grid must start at 0")
    steps = np.diff(times)
    if len(steps) and not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise ValueError("time grid must be uniform")
    v = vec(rho0)
    out = np.empty((len(times), v.shape[0]), dtype=complex)
    out[0] = v
    if len(steps):
        P = propagator(L, steps[0])
        for k in range(1, len(times)):
            out[k] = P @ out[k - 1]
    d = rho0.shape[0]
    return out.reshape(len(times), d, d, order="C").transpose(0, 2, 1)


def steady_state(L: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Normalized null vector of ``L``.

    Raises ``DegenerateSteadyStateError`` if the kernel is not one
    dimensional.
    """
    _, s, vh = np.linalg.svd(L)
    scale = max(s[0], 1.0)
    null = np.flatnonzero(s <= tol * scale)
    if len(null) != 1:
        if len(null) == 0:
            raise NumericalError(
                f"generator has no kernel (smallest singular value {s[-1]:.3e})")
        raise DegenerateSteadyStateError(len(null))
    rho = unvec(vh[-1].conj())
    tr = np.trace(rho)
    if abs(tr) < 1e-14:
        raise NumericalError("null vector is traceless; not a state")
    rho = rho / tr
    return 0.5 * (rho + dag(rho))


# --- state diagnostics ---------------------------------------------------

def check_density_matrix(rho: np.ndarray, normalized: bool = True,
                         positivity_tol: float = POSITIVITY_TOL) -> None:
    """Raise ``NumericalError`` if ``rho`` is not a valid (sub)state."""
    if not np.all(np.isfinite(rho)):
        raise NumericalError("density matrix has non-finite entries")
    herm = np.linalg.norm(rho - dag(rho))
    if herm > HERMITIAN_TOL * max(1.0, np.linalg.norm(rho)):
        raise NumericalError(f"density matrix not Hermitian (deviation {herm:.3e})")
    evals = np.linalg.eigvalsh(0.5 * (rho + dag(rho)))
    if evals[0] < positivity_tol:
        raise NumericalError(f"negative eigenvalue {evals[0]:.3e}")
    tr = np.real(np.trace(rho))
    if normalized and abs(tr - 1) > 1e-9:
        raise NumericalError(f"trace {tr:.12f} != 1")
    if not normalized and not (-1e-12 <= tr <= 1 + 1e-9):
        raise NumericalError(f"trace {tr:.12f} outside [0, 1]")
