"""Configuration-space hopping Hamiltonians for Z(N) link fields.

The dynamics raises or lowers one link at a time; every amplitude depends
only on the plaquettes adjacent to that link. A symmetric rule of the
plaquette values is turned into the Hermitian pair (kappa+, kappa-) by
evaluating it halfway between the two configurations an elementary move
connects, which preserves charge conjugation and parity exactly.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np
import scipy.sparse as sp

from . import linop, zn
from .errors import (
    ChargeConjugationError,
    GroundStateSignError,
    HermiticityError,
    HilbertDimensionError,
    HopquantError,
    ReflectionSymmetryError,
)
from .evolution import fit_order
from .linop import SparseHermitianOperator

DIMENSION_CAP = 2 ** 24


class GaugeHoppingSpec:
    """Rule producing link-move amplitudes from adjacent plaquette values.

    Subclasses define ``response(pvals, n)``: a real, even, N-periodic
    function of the adjacent plaquette values (rows of ``pvals``). The
    Hermitian pair is derived from it; overriding ``amplitudes`` directly is
    possible but forfeits the built-in symmetry guarantees.
    """

    translation_invariant = True

    def response(self, pvals, n):
        raise NotImplementedError

    def amplitudes(self, lattice, link_idx, pvals, shift_signs, link_values=None):
        """(kappa+, kappa-) for every configuration, midpoint evaluation.

        ``pvals`` has one row per adjacent plaquette (source-configuration
        values); ``shift_signs`` is the per-plaquette change under a unit
        raise of this link.
        """
        half = 0.5 * np.asarray(shift_signs, dtype=float)[:, np.newaxis]
        up = self.response(pvals + half, lattice.n)
        down = self.response(pvals - half, lattice.n)
        return up, down


@dataclass
class MaxwellPreset(GaugeHoppingSpec):
    """Electric hopping strength plus plaquette-modulated magnetic weight.

    Each plaquette's (1 - cos) contribution is spread over its four links
    and two move directions, hence the 1/8 weight.
    """

    electric: float
    magnetic: float

    def response(self, pvals, n):
        # reduce mod n first so equivalent arguments evaluate bitwise equal
        pvals = np.mod(np.asarray(pvals, dtype=float), n)
        mag = 2.0 * np.sin(np.pi * pvals / n) ** 2  # 1 - cos(2 pi p / n), stable near 0
        total = mag.sum(axis=0)
        return -self.electric + (self.magnetic / 8.0) * total


@dataclass
class CallableResponseSpec(GaugeHoppingSpec):
    """Wrap an arbitrary response function fn(pvals, n) -> amplitude."""

    fn: callable
    translation_invariant: bool = True

    def response(self, pvals, n):
        return self.fn(np.asarray(pvals, dtype=float), n)


def _config_digits(lattice):
    dim = lattice.hilbert_dim
    idx = np.arange(dim, dtype=np.int64)
    return [(idx // lattice.n ** k) % lattice.n for k in range(lattice.n_links)]


def _plaquette_values(lattice, digits):
    vals = []
    for s, i, k in lattice.plaquettes:
        total = np.zeros(lattice.hilbert_dim, dtype=np.int64)
        for l_idx, sign in lattice.plaquette_links(s, i, k):
            total = total + sign * digits[l_idx]
        vals.append(np.mod(total, lattice.n))
    return vals


def build_gauge_hamiltonian(lattice, spec, cap=DIMENSION_CAP, tol=1e-12):
    """Assemble the strictly off-diagonal one-link-move Hamiltonian.

    Raises ``HermiticityError`` ("spec violates unitary hopping") when the
    supplied amplitude pair is not Hermitian-compatible.
    """
    dim = lattice.hilbert_dim
    if dim > cap:
        raise HilbertDimensionError(
            f"configuration space of dimension {dim} exceeds cap {cap}")
    n = lattice.n
    digits = _config_digits(lattice)
    plaq = _plaquette_values(lattice, digits)
    idx = np.arange(dim, dtype=np.int64)
    rows, cols, data = [], [], []
    for l_idx in range(lattice.n_links):
        adj = lattice.link_adjacency(l_idx)
        if adj:
            pv = np.stack([plaq[p] for p, _ in adj]).astype(float)
            signs = np.array([sg for _, sg in adj], dtype=float)
        else:
            pv = np.zeros((0, dim))
            signs = np.zeros(0)
        up, down = spec.amplitudes(lattice, l_idx, pv, signs,
                                   link_values=digits[l_idx])
        up = np.broadcast_to(np.asarray(up), (dim,))
        down = np.broadcast_to(np.asarray(down), (dim,))
        d = digits[l_idx]
        weight = n ** l_idx
        col_up = idx + (((d + 1) % n) - d) * weight
        col_down = idx + (((d - 1) % n) - d) * weight
        rows.extend([idx, idx])
        cols.extend([col_up, col_down])
        data.extend([up, down])
    data = np.concatenate(data)
    if np.isrealobj(data) or np.abs(data.imag).max() == 0.0:
        data = data.real.astype(float)
    mat = sp.coo_matrix((data, (np.concatenate(rows), np.concatenate(cols))),
                        shape=(dim, dim))
    try:
        return SparseHermitianOperator(mat, check=True, tol=tol)
    except HermiticityError as exc:
        raise HermiticityError(
            f"spec violates unitary hopping: {exc}", defect=exc.defect) from exc


def reference_ks_hamiltonian(lattice, electric, magnetic, cap=DIMENSION_CAP,
                             tol=1e-12):
    """Independent oracle: diagonal magnetic term plus electric link hopping.

    H = electric * sum_links (2 - raise - lower)
      + magnetic * sum_plaquettes (1 - cos(2 pi p / N)).
    """
    dim = lattice.hilbert_dim
    if dim > cap:
        raise HilbertDimensionError(
            f"configuration space of dimension {dim} exceeds cap {cap}")
    n = lattice.n
    digits = _config_digits(lattice)
    plaq = _plaquette_values(lattice, digits)
    idx = np.arange(dim, dtype=np.int64)
    rows, cols, data = [], [], []
    diag = np.full(dim, 2.0 * electric * lattice.n_links)
    for p in plaq:
        diag = diag + magnetic * 2.0 * np.sin(np.pi * p / n) ** 2
    rows.append(idx)
    cols.append(idx)
    data.append(diag)
    hop = np.full(dim, -electric)
    for l_idx in range(lattice.n_links):
        d = digits[l_idx]
        weight = n ** l_idx
        for step in (+1, -1):
            rows.append(idx)
            cols.append(idx + (((d + step) % n) - d) * weight)
            data.append(hop)
    mat = sp.coo_matrix((np.concatenate(data),
                         (np.concatenate(rows), np.concatenate(cols))),
                        shape=(dim, dim))
    return SparseHermitianOperator(mat, check=True, tol=tol)


# --- symmetry checks ---------------------------------------------------------

@dataclass
class SymmetryReport:
    gauge: float
    charge_conjugation: float
    parity: float
    mode: str

    @property
    def max_norm(self):
        return max(self.gauge, self.charge_conjugation, self.parity)


def commutator_norm(op, sigma, probes=0, rng=None):
    """Max-norm of [H, P_sigma], exactly or via random-vector probes."""
    h = op.matrix
    inv = np.empty_like(sigma)
    inv[sigma] = np.arange(sigma.size)
    if probes <= 0:
        hp = h.tocsc()[:, sigma].tocsr()
        ph = h[inv, :]
        delta = (hp - ph).tocoo()
        return float(np.abs(delta.data).max()) if delta.nnz else 0.0
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for _ in range(probes):
        v = rng.standard_normal(op.dimension) + 1j * rng.standard_normal(op.dimension)
        v /= np.linalg.norm(v)
        r = h @ v[inv] - (h @ v)[inv]
        worst = max(worst, float(np.abs(r).max()))
    return worst


def allowed_parity_centers(lattice):
    """All half-integer centers whose reflection maps the link set onto itself."""
    centers = []
    for twice in product(*(range(2 * L) for L in lattice.dims)):
        s0 = tuple(c / 2.0 for c in twice)
        try:
            zn.parity_permutation(lattice, s0)
        except HopquantError:
            continue
        centers.append(s0)
    return centers


def symmetry_commutator_norms(op, lattice, centers=None, probes=0, seed=0):
    """Max commutator norms of H with every gauge generator, C, and parity."""
    rng = np.random.default_rng(seed)
    gauge = 0.0
    for sigma in zn.site_generator_permutations(lattice):
        gauge = max(gauge, commutator_norm(op, sigma, probes=probes, rng=rng))
    conj = commutator_norm(op, zn.charge_conjugation_permutation(lattice),
                           probes=probes, rng=rng)
    if centers is None:
        centers = allowed_parity_centers(lattice)
    parity = 0.0
    for s0 in centers:
        sigma = zn.parity_permutation(lattice, s0)
        parity = max(parity, commutator_norm(op, sigma, probes=probes, rng=rng))
    return SymmetryReport(gauge=gauge, charge_conjugation=conj, parity=parity,
                          mode="probes" if probes > 0 else "exact")


# --- spectra -----------------------------------------------------------------

@dataclass
class SpectrumResult:
    values: np.ndarray
    gaps: np.ndarray  # E_i - E_0 for i >= 1


def spectrum(op, count, dense_cutoff=linop.DENSE_CUTOFF, seed=linop.EIGS_SEED,
             oversample=10):
    """Lowest ``count`` eigenvalues and their gaps from the ground state.

    On the iterative path a few extra pairs are requested with a widened
    search space so that degenerate multiplets are fully resolved before
    truncating back to ``count``.
    """
    if op.dimension <= dense_cutoff or count > op.dimension - 2:
        values, _ = linop.eigs_extremal(op, count, dense_cutoff=dense_cutoff,
                                        seed=seed)
    else:
        k = min(op.dimension - 2, count + oversample)
        ncv = min(op.dimension, max(6 * k + 1, 40))
        values, _ = linop.eigs_extremal(op, k, dense_cutoff=dense_cutoff,
                                        seed=seed, ncv=ncv)
        values = values[:count]
    return SpectrumResult(values=values, gaps=values[1:] - values[0])


@dataclass
class GapComparison:
    gaps_hopping: np.ndarray
    gaps_reference: np.ndarray
    deviations: np.ndarray  # relative to the largest reference gap

    @property
    def max_deviation(self):
        return float(self.deviations.max()) if self.deviations.size else 0.0


def compare_to_reference(op_hop, op_ref, count, dense_cutoff=linop.DENSE_CUTOFF,
                         seed=linop.EIGS_SEED):
    """Relative differences of the lowest ``count`` energy gaps."""
    ga = spectrum(op_hop, count + 1, dense_cutoff=dense_cutoff, seed=seed).gaps
    gb = spectrum(op_ref, count + 1, dense_cutoff=dense_cutoff, seed=seed).gaps
    scale = max(float(np.abs(gb).max()), 1e-300)
    return GapComparison(gaps_hopping=ga, gaps_reference=gb,
                         deviations=np.abs(ga - gb) / scale)


# --- continuum constants -----------------------------------------------------

@dataclass
class ContinuumConstants:
    inv_eps0: float
    inv_mu0: float
    eps0: float
    mu0: float
    vacuum_energy_per_link: float
    vacuum_energy: float  # None when the lattice size is not supplied
    light_speed: float    # None when degenerate or sign-indefinite
    degenerate: bool
    kappa0: float
    kappa2: float


def _probe_response(spec, n, pattern):
    pv = np.asarray(pattern, dtype=float)[:, np.newaxis]
    out = np.asarray(spec.response(pv, n), dtype=float)
    return float(out.reshape(-1)[0])


def extract_continuum_constants(spec, n, spacing=1.0, hbar=1.0, charge=1.0,
                                n_links=None, require_ground_state=False,
                                detection_tol=1e-10):
    """Read the quadratic flux response of a translation-invariant rule.

    The constant part is read at zero plaquettes; the quadratic part comes
    from symmetric second differences over plaquette probes p = +-1, +-2
    (the finest probes an integer-valued plaquette admits), combined with one
    Richardson step. Odd components and transverse mixing are rejected.
    """
    if not getattr(spec, "translation_invariant", True):
        raise HopquantError("extraction requires a translation-invariant spec")
    kappa0 = _probe_response(spec, n, [0.0, 0.0])
    scale = 1.0 + abs(kappa0)
    # odd (flux-linear) components must vanish for charge conjugation
    for q in (1, 2):
        for pattern in ([q, 0], [0, q], [q, q]):
            plus = _probe_response(spec, n, pattern)
            minus = _probe_response(spec, n, [-c for c in pattern])
            scale = max(scale, abs(plus))
            if abs(plus - minus) > detection_tol * scale:
                raise ChargeConjugationError(
                    "C-violating spec: odd flux component "
                    f"{abs(plus - minus):.3e} at probe {pattern}")
    # transverse mixing must vanish for reflection symmetry
    mixed = (_probe_response(spec, n, [1, 1, 1, 1])
             - _probe_response(spec, n, [1, 1, -1, -1])
             - _probe_response(spec, n, [-1, -1, 1, 1])
             + _probe_response(spec, n, [-1, -1, -1, -1]))
    if abs(mixed) > detection_tol * scale:
        raise ReflectionSymmetryError(
            f"reflection symmetry violated: mixed response {abs(mixed):.3e}")
    # quadratic response by Richardson-combined central differences
    diffs = []
    for q in (1, 2):
        flux_step = 2.0 * np.pi * hbar * q / (charge * spacing ** 2 * n)
        second = (_probe_response(spec, n, [q, q])
                  + _probe_response(spec, n, [-q, -q])
                  - 2.0 * kappa0)
        diffs.append(second / flux_step ** 2)
    curvature = (4.0 * diffs[0] - diffs[1]) / 3.0
    kappa2 = hbar ** 2 / (2.0 * charge ** 2 * spacing ** 4) * curvature
    inv_eps0 = -(4.0 * np.pi ** 2 * spacing / (charge ** 2 * n ** 2)) * 2.0 * kappa0
    inv_mu0 = (4.0 * charge ** 2 * spacing / hbar ** 2) * 2.0 * kappa2
    degenerate = inv_eps0 == 0.0 or inv_mu0 == 0.0
    prod = inv_eps0 * inv_mu0
    if require_ground_state and prod <= 0.0:
        raise GroundStateSignError(
            "relative sign of the extracted constants admits no ground state")
    return ContinuumConstants(
        inv_eps0=inv_eps0,
        inv_mu0=inv_mu0,
        eps0=1.0 / inv_eps0 if inv_eps0 != 0.0 else np.inf,
        mu0=1.0 / inv_mu0 if inv_mu0 != 0.0 else np.inf,
        vacuum_energy_per_link=2.0 * kappa0,
        vacuum_energy=2.0 * kappa0 * n_links if n_links is not None else None,
        light_speed=float(np.sqrt(prod)) if prod > 0.0 else None,
        degenerate=degenerate,
        kappa0=kappa0,
        kappa2=kappa2,
    )


# --- expansion consistency ---------------------------------------------------

@dataclass
class GaussianLinkFunctional:
    """Smooth closed-form functional of a handful of link potentials."""

    weights: np.ndarray

    @property
    def size(self):
        return len(self.weights)

    def value(self, a_vals):
        return float(np.exp(-0.5 * np.dot(self.weights, np.asarray(a_vals) ** 2)))

    def d1(self, a_vals, i):
        return -self.weights[i] * a_vals[i] * self.value(a_vals)

    def d2(self, a_vals, i):
        w = self.weights[i]
        return (w ** 2 * a_vals[i] ** 2 - w) * self.value(a_vals)


@dataclass
class LinearLinkFunctional:
    """Linear functional; its expansion remainder vanishes identically."""

    coeffs: np.ndarray

    @property
    def size(self):
        return len(self.coeffs)

    def value(self, a_vals):
        return float(np.dot(self.coeffs, a_vals))

    def d1(self, a_vals, i):
        return float(self.coeffs[i])

    def d2(self, a_vals, i):
        return 0.0


@dataclass
class TaylorReport:
    spacings: list
    clock_orders: list
    expansion_remainders: list
    expansion_order: float
    amplitude_remainders: list
    amplitude_order: float


def taylor_consistency_check(spec, n_values, a_values, functional=None,
                             flux=0.7, hbar=1.0, charge=1.0, seed=5):
    """Numerically verify the two truncations behind the continuum limit.

    ``n_values`` and ``a_values`` are zipped into a scaling path (N growing
    as the spacing shrinks). For each point, the wavefunction remainder is
    the unit-link-step difference of the functional minus its first and
    second derivative terms; the amplitude remainder compares the rule
    against its own quadratic flux model at fixed flux.
    """
    if len(n_values) != len(a_values):
        raise ValueError("n_values and a_values must pair up into one path")
    if len(a_values) < 3:
        raise ValueError("need >=3 path points to fit orders")
    rng = np.random.default_rng(seed)
    if functional is None:
        functional = GaussianLinkFunctional(weights=1.0 + rng.random(3))
    a_fixed = rng.uniform(-0.4, 0.4, size=functional.size)
    exp_rem, amp_rem = [], []
    for n, a in zip(n_values, a_values):
        step = 2.0 * np.pi * hbar / (charge * n * a)
        worst = 0.0
        for i in range(len(a_fixed)):
            for sign in (+1.0, -1.0):
                shifted = a_fixed.copy()
                shifted[i] += sign * step
                lhs = functional.value(shifted) - functional.value(a_fixed)
                kept = (sign * step * functional.d1(a_fixed, i)
                        + 0.5 * step ** 2 * functional.d2(a_fixed, i))
                worst = max(worst, abs(lhs - kept))
        exp_rem.append(worst)
        consts = extract_continuum_constants(spec, n, spacing=a, hbar=hbar,
                                             charge=charge)
        p = charge * n * a ** 2 * flux / (2.0 * np.pi * hbar)
        resp = _probe_response(spec, n, [p, p])
        model = consts.kappa0 + (charge ** 2 * a ** 4 / hbar ** 2) \
            * consts.kappa2 * flux ** 2
        amp_rem.append(abs(resp - model))
    return TaylorReport(
        spacings=list(a_values),
        clock_orders=list(n_values),
        expansion_remainders=exp_rem,
        expansion_order=fit_order(a_values, exp_rem) if min(exp_rem) > 0 else np.inf,
        amplitude_remainders=amp_rem,
        amplitude_order=fit_order(a_values, amp_rem) if min(amp_rem) > 0 else np.inf,
    )
