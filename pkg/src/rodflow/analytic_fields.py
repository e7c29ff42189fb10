"""Closed algebra of trigonometric fields with exact derivatives.

A TrigScalar is a finite sum  sum_m a_m cos(k_m . x + phi_m).  Sums, products
(via the product-to-sum identity) and derivatives of any order stay inside
the class, so material derivatives, Hessians and Laplacians of manufactured
fields are exact to machine precision -- no spatial grid needed.  This is
what lets the d = 3 closure identities be checked pointwise.

Vector/tensor fields are plain nested lists of TrigScalar; evaluate() maps
them to numpy arrays with the component axes trailing, matching the closure
kernels' shape conventions.

The module also carries the deterministic forcing/initial-data presets used
by the 2D convergence experiments.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "TrigScalar",
    "grad",
    "dot",
    "evaluate",
    "random_scalar",
    "divfree_vector",
    "convergence_forcing",
    "bump_density",
]


class TrigScalar:
    """sum_m amps[m] * cos(wavevecs[m] . x + phases[m])."""

    def __init__(self, amps, wavevecs, phases):
        self.amps = np.atleast_1d(np.asarray(amps, dtype=float))
        self.wavevecs = np.atleast_2d(np.asarray(wavevecs, dtype=float))
        self.phases = np.atleast_1d(np.asarray(phases, dtype=float))
        if not (len(self.amps) == len(self.wavevecs) == len(self.phases)):
            raise ValueError("inconsistent term counts")

    @property
    def dim(self):
        return self.wavevecs.shape[1]

    @classmethod
    def zero(cls, dim):
        return cls(np.zeros(1), np.zeros((1, dim)), np.zeros(1))

    @classmethod
    def constant(cls, value, dim):
        return cls(np.array([value]), np.zeros((1, dim)), np.zeros(1))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        arg = x @ self.wavevecs.T + self.phases  # (..., m)
        return (np.cos(arg) * self.amps).sum(axis=-1)

    # -- algebra ----------------------------------------------------------
    def __add__(self, other):
        if np.isscalar(other):
            other = TrigScalar.constant(float(other), self.dim)
        return TrigScalar(
            np.concatenate([self.amps, other.amps]),
            np.concatenate([self.wavevecs, other.wavevecs]),
            np.concatenate([self.phases, other.phases]),
        )

    __radd__ = __add__

    def __neg__(self):
        return TrigScalar(-self.amps, self.wavevecs, self.phases)

    def __sub__(self, other):
        return self + (-other if isinstance(other, TrigScalar) else -float(other))

    def __mul__(self, other):
        if np.isscalar(other):
            return TrigScalar(self.amps * float(other), self.wavevecs, self.phases)
        # cos(A) cos(B) = (cos(A+B) + cos(A-B)) / 2, termwise
        a = 0.5 * np.outer(self.amps, other.amps).ravel()
        kp = (self.wavevecs[:, None, :] + other.wavevecs[None, :, :]).reshape(-1, self.dim)
        km = (self.wavevecs[:, None, :] - other.wavevecs[None, :, :]).reshape(-1, self.dim)
        pp = (self.phases[:, None] + other.phases[None, :]).ravel()
        pm = (self.phases[:, None] - other.phases[None, :]).ravel()
        return TrigScalar(np.concatenate([a, a]),
                          np.concatenate([kp, km]),
                          np.concatenate([pp, pm]))

    __rmul__ = __mul__

    # -- calculus ---------------------------------------------------------
    def deriv(self, i):
        """d/dx_i, exactly: shifts each phase by pi/2 and scales by k_i."""
        return TrigScalar(self.amps * self.wavevecs[:, i],
                          self.wavevecs, self.phases + 0.5 * np.pi)

    def laplacian(self):
        k2 = (self.wavevecs ** 2).sum(axis=1)
        return TrigScalar(-self.amps * k2, self.wavevecs, self.phases)


def grad(s: TrigScalar):
    return [s.deriv(i) for i in range(s.dim)]


def dot(vec, s_grad):
    """vec . grad(s) style contraction of two lists of TrigScalar."""
    out = vec[0] * s_grad[0]
    for a, b in zip(vec[1:], s_grad[1:]):
        out = out + a * b
    return out


def evaluate(obj, x):
    """Recursively evaluate nested lists of TrigScalar at points x (..., d).

    Nesting depth becomes trailing axes: a list of d scalars -> (..., d),
    a d x d nested list -> (..., d, d), etc.
    """
    if isinstance(obj, TrigScalar):
        return obj(x)
    parts = [evaluate(o, x) for o in obj]
    return np.stack(parts, axis=-_depth(obj))


def _depth(obj):
    d = 0
    while isinstance(obj, (list, tuple)):
        d += 1
        obj = obj[0]
    return d


def random_scalar(rng, dim, *, nterms=3, kmax=2, amplitude=1.0):
    """Random band-limited trig scalar with integer-multiple-of-2pi wavevectors."""
    k = 2.0 * np.pi * rng.integers(-kmax, kmax + 1, size=(nterms, dim))
    amps = amplitude * rng.uniform(-1.0, 1.0, size=nterms)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=nterms)
    return TrigScalar(amps, k, phases)


def divfree_vector(rng, dim, *, nterms=3, kmax=2, amplitude=1.0):
    """Random exactly divergence-free velocity field as a list of TrigScalars.

    d = 2: perpendicular gradient of a stream function; d = 3: curl of a
    random vector potential.
    """
    if dim == 2:
        psi = random_scalar(rng, 2, nterms=nterms, kmax=kmax, amplitude=amplitude)
        return [-psi.deriv(1), psi.deriv(0)]
    if dim == 3:
        a = [random_scalar(rng, 3, nterms=nterms, kmax=kmax, amplitude=amplitude)
             for _ in range(3)]
        return [a[2].deriv(1) - a[1].deriv(2),
                a[0].deriv(2) - a[2].deriv(0),
                a[1].deriv(0) - a[0].deriv(1)]
    raise ValueError("dim must be 2 or 3")


# ---------------------------------------------------------------------------
# deterministic presets for the 2D experiments
# ---------------------------------------------------------------------------

def convergence_forcing(grid, amplitude: float = 1.0):
    """Smooth, steady, mean-zero body force on the unit torus, (n, n, 2)."""
    tp = 2.0 * np.pi
    x, y = grid.x, grid.y
    hx = amplitude * (np.sin(tp * y) + 0.5 * np.cos(tp * (x + 2 * y)))
    hy = amplitude * (np.sin(tp * x) - 0.5 * np.cos(tp * (2 * x - y)))
    h = np.stack([hx, hy], axis=-1)
    return h - h.mean(axis=(0, 1))


def bump_density(grid, amplitude: float = 0.5):
    """Smooth positive density with unit spatial mean, (n, n)."""
    if not (0 <= amplitude < 1):
        raise ValueError("amplitude must lie in [0, 1) to keep the density positive")
    tp = 2.0 * np.pi
    x, y = grid.x, grid.y
    bump = (np.cos(tp * x) * np.sin(tp * y)
            + 0.5 * np.sin(tp * (x + y))) / 1.5
    return 1.0 + amplitude * bump
