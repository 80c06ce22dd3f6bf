"""Z(N) link configurations on 2D/3D lattices and their exact symmetries.

Link variables live in {0, ..., N-1} on lattice edges. Configurations are
enumerated little-endian over a fixed link ordering (site-major, then
direction), so every symmetry acts as an explicit permutation of basis
indices.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import HopquantError


class LinkLattice:
    """Spatial lattice carrying one Z(N) variable per link.

    ``dims`` has 2 or 3 extents. Periodic extents must be at least 2; open
    extents of 1 collapse that direction (no links along it), which permits
    single-link and single-plaquette systems.
    """

    def __init__(self, dims, n, boundary="periodic", spacing=1.0):
        dims = tuple(int(d) for d in dims)
        if len(dims) not in (2, 3):
            raise ValueError("link lattice must have 2 or 3 extents")
        if n < 2:
            raise ValueError("clock order must be at least 2")
        if boundary not in ("periodic", "open"):
            raise ValueError(f"unknown boundary {boundary!r}")
        if any(d < 1 for d in dims) or (boundary == "periodic" and any(d < 2 for d in dims)):
            raise ValueError(f"extents {dims} invalid for {boundary} boundary")
        if spacing <= 0:
            raise ValueError("spacing must be positive")
        self.dims = dims
        self.n = int(n)
        self.boundary = boundary
        self.spacing = float(spacing)
        self.sites = [tuple(s) for s in np.ndindex(*dims)]
        self._site_index = {s: i for i, s in enumerate(self.sites)}
        self.links = []
        for s in self.sites:
            for k in range(self.ndim):
                if boundary == "periodic" or s[k] + 1 < dims[k]:
                    if dims[k] >= 2:
                        self.links.append((s, k))
        if not self.links:
            raise ValueError(f"extents {dims} with {boundary} boundary carry no links")
        self._link_index = {lk: i for i, lk in enumerate(self.links)}
        self.plaquettes = []
        for s in self.sites:
            for i in range(self.ndim):
                for k in range(i + 1, self.ndim):
                    if self._plaquette_exists(s, i, k):
                        self.plaquettes.append((s, i, k))

    @property
    def ndim(self):
        return len(self.dims)

    @property
    def n_sites(self):
        return len(self.sites)

    @property
    def n_links(self):
        return len(self.links)

    @property
    def hilbert_dim(self):
        return self.n ** self.n_links

    def site_index(self, s):
        return self._site_index[tuple(s)]

    def link_index(self, s, k):
        key = (tuple(s), k)
        if key not in self._link_index:
            raise HopquantError(f"link {key} does not exist on this lattice")
        return self._link_index[key]

    def shift_site(self, s, k, step=1):
        """Site displaced along axis k; None when it leaves an open lattice."""
        out = list(s)
        out[k] += step
        if self.boundary == "periodic":
            out[k] %= self.dims[k]
        elif not 0 <= out[k] < self.dims[k]:
            return None
        return tuple(out)

    def _plaquette_exists(self, s, i, k):
        if self.dims[i] < 2 or self.dims[k] < 2:
            return False
        if self.boundary == "open" and (s[i] + 1 >= self.dims[i] or s[k] + 1 >= self.dims[k]):
            return False
        return True

    def plaquette_links(self, s, i, k):
        """The four (link index, sign) pairs forming plaquette (s, i, k)."""
        s = tuple(s)
        si = self.shift_site(s, i)
        sk = self.shift_site(s, k)
        if si is None or sk is None:
            raise HopquantError(f"plaquette ({s}, {i}, {k}) leaves the open lattice")
        return [(self.link_index(s, i), +1),
                (self.link_index(si, k), +1),
                (self.link_index(sk, i), -1),
                (self.link_index(s, k), -1)]

    def link_adjacency(self, link_idx):
        """Plaquettes containing a link, as (plaquette index, sign) pairs."""
        if not hasattr(self, "_adjacency"):
            adj = [[] for _ in range(self.n_links)]
            for p_idx, (s, i, k) in enumerate(self.plaquettes):
                for l_idx, sign in self.plaquette_links(s, i, k):
                    adj[l_idx].append((p_idx, sign))
            self._adjacency = adj
        return self._adjacency[link_idx]

    def __repr__(self):
        return (f"LinkLattice(dims={self.dims}, n={self.n}, "
                f"boundary={self.boundary!r})")


class LinkConfig:
    """One basis state: an integer in {0, ..., N-1} per link."""

    def __init__(self, lattice, values):
        values = np.asarray(values, dtype=np.int64) % lattice.n
        if values.shape != (lattice.n_links,):
            raise ValueError(f"need {lattice.n_links} link values, got {values.shape}")
        self.lattice = lattice
        self.values = values

    @classmethod
    def zeros(cls, lattice):
        return cls(lattice, np.zeros(lattice.n_links, dtype=np.int64))

    @classmethod
    def from_index(cls, lattice, index):
        if not 0 <= index < lattice.hilbert_dim:
            raise ValueError("index out of range")
        vals = np.empty(lattice.n_links, dtype=np.int64)
        for k in range(lattice.n_links):
            index, vals[k] = divmod(index, lattice.n)
        return cls(lattice, vals)

    @property
    def index(self):
        """Little-endian mixed-radix linear index."""
        idx = 0
        for v in self.values[::-1]:
            idx = idx * self.lattice.n + int(v)
        return idx

    def get(self, s, k):
        return int(self.values[self.lattice.link_index(s, k)])

    def __eq__(self, other):
        return (isinstance(other, LinkConfig)
                and self.lattice is other.lattice
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((id(self.lattice), self.values.tobytes()))


def plaquette(config, s, i, k):
    """p = l(s,i) + l(s+i,k) - l(s+k,i) - l(s,k) mod N."""
    lat = config.lattice
    total = sum(sign * config.values[l_idx]
                for l_idx, sign in lat.plaquette_links(s, i, k))
    return int(total) % lat.n


@dataclass
class PlaquetteField:
    """All plaquette values of one configuration, stored mod N."""

    lattice: LinkLattice
    values: np.ndarray

    def wrapped(self):
        return wrap_plaquette(self.values, self.lattice.n)

    def flux(self, hbar=1.0, charge=1.0):
        return flux_from_plaquette(self.values, self.lattice.n,
                                   self.lattice.spacing, hbar=hbar, charge=charge)


def plaquette_field(config):
    lat = config.lattice
    vals = np.array([plaquette(config, s, i, k) for s, i, k in lat.plaquettes],
                    dtype=np.int64)
    return PlaquetteField(lattice=lat, values=vals)


def apply_gauge(config, g):
    """Relabel links by l'(s,k) = l(s,k) + g(s+k) - g(s) mod N."""
    lat = config.lattice
    g = _gauge_array(lat, g)
    new = config.values.copy()
    for idx, (s, k) in enumerate(lat.links):
        head = lat.shift_site(s, k)
        new[idx] += g[lat.site_index(head)] - g[lat.site_index(s)]
    return LinkConfig(lat, new)


def _gauge_array(lattice, g):
    if isinstance(g, dict):
        arr = np.zeros(lattice.n_sites, dtype=np.int64)
        for s, v in g.items():
            arr[lattice.site_index(s)] = v
        return arr
    arr = np.asarray(g, dtype=np.int64)
    if arr.shape == tuple(lattice.dims):
        arr = arr.ravel()
    if arr.shape != (lattice.n_sites,):
        raise ValueError("gauge transform must supply one value per site")
    return arr


def charge_conjugate(config):
    """Negate every link value mod N; an involution for all N."""
    return LinkConfig(config.lattice, -config.values)


def _parity_center(lattice, s0):
    twice = np.asarray(s0, dtype=float) * 2.0
    if np.any(np.abs(twice - np.round(twice)) > 1e-9):
        raise ValueError("parity center must have half-integer coordinates")
    if len(twice) != lattice.ndim:
        raise ValueError("parity center must match lattice dimensionality")
    return np.round(twice).astype(np.int64)


def parity_transform(config, s0):
    """Point reflection about s0 combined with negation.

    Link (s, k) receives -l(2*s0 - s - e_k, k). On open lattices the source
    link must exist, otherwise an error is raised.
    """
    lat = config.lattice
    twice = _parity_center(lat, s0)
    new = np.empty_like(config.values)
    for idx, (s, k) in enumerate(lat.links):
        src = twice - np.asarray(s, dtype=np.int64)
        src[k] -= 1
        if lat.boundary == "periodic":
            src = src % np.asarray(lat.dims)
        elif np.any(src < 0) or np.any(src >= np.asarray(lat.dims)):
            raise HopquantError(
                f"parity image of link ({s}, {k}) leaves the open lattice")
        key = (tuple(int(c) for c in src), k)
        if key not in lat._link_index:
            raise HopquantError(f"parity image link {key} does not exist")
        new[idx] = -config.values[lat._link_index[key]]
    return LinkConfig(lat, new)


def wrap_plaquette(p, n):
    """Principal representative of p mod N in (-N/2, N/2]; ties go positive."""
    p = np.asarray(p)
    r = np.mod(p, n)
    out = np.where(r > n / 2, r - n, r)
    if np.isscalar(p) or p.ndim == 0:
        return int(out)
    return out.astype(np.int64)


def flux_from_plaquette(p, n, spacing, hbar=1.0, charge=1.0):
    """Magnetic flux density on the principal branch of the plaquette phase."""
    w = wrap_plaquette(p, n)
    return 2.0 * np.pi * hbar / (charge * spacing ** 2 * n) * w


# --- permutation representations over the full configuration basis ---------

def _digit(lattice, link_idx, indices):
    return (indices // lattice.n ** link_idx) % lattice.n


def _link_weight(lattice, link_idx):
    return lattice.n ** link_idx


def permutation_from_link_map(lattice, assignments):
    """Permutation sigma with sigma[j] = index of the transformed config.

    ``assignments`` maps each destination link index to (source link index,
    sign, shift): new value = sign * old[source] + shift mod N.
    """
    dim = lattice.hilbert_dim
    idx = np.arange(dim, dtype=np.int64)
    sigma = np.zeros(dim, dtype=np.int64)
    for dest, (src, sign, shift) in assignments.items():
        d = _digit(lattice, src, idx)
        sigma += ((sign * d + shift) % lattice.n) * _link_weight(lattice, dest)
    return sigma


def gauge_permutation(lattice, g):
    g = _gauge_array(lattice, g)
    assignments = {}
    for idx, (s, k) in enumerate(lattice.links):
        head = lattice.shift_site(s, k)
        delta = int(g[lattice.site_index(head)] - g[lattice.site_index(s)])
        assignments[idx] = (idx, 1, delta)
    return permutation_from_link_map(lattice, assignments)


def site_generator_permutations(lattice, sites=None):
    """Unit gauge increments, one per site; they generate the full gauge group."""
    sites = lattice.sites if sites is None else [tuple(s) for s in sites]
    perms = []
    for s in sites:
        g = np.zeros(lattice.n_sites, dtype=np.int64)
        g[lattice.site_index(s)] = 1
        perms.append(gauge_permutation(lattice, g))
    return perms


def charge_conjugation_permutation(lattice):
    assignments = {idx: (idx, -1, 0) for idx in range(lattice.n_links)}
    return permutation_from_link_map(lattice, assignments)


def parity_permutation(lattice, s0):
    twice = _parity_center(lattice, s0)
    assignments = {}
    for idx, (s, k) in enumerate(lattice.links):
        src = twice - np.asarray(s, dtype=np.int64)
        src[k] -= 1
        if lattice.boundary == "periodic":
            src = src % np.asarray(lattice.dims)
        elif np.any(src < 0) or np.any(src >= np.asarray(lattice.dims)):
            raise HopquantError("parity center incompatible with open lattice")
        key = (tuple(int(c) for c in src), k)
        if key not in lattice._link_index:
            raise HopquantError(f"parity image link {key} does not exist")
        assignments[idx] = (lattice._link_index[key], -1, 0)
    return permutation_from_link_map(lattice, assignments)


def link_shift_permutation(lattice, direction, step=1):
    """Raise every link along one direction by ``step`` units."""
    assignments = {}
    for idx, (s, k) in enumerate(lattice.links):
        assignments[idx] = (idx, 1, step if k == direction else 0)
    return permutation_from_link_map(lattice, assignments)


def single_link_raise_permutation(lattice, link_idx, step=1):
    assignments = {idx: (idx, 1, step if idx == link_idx else 0)
                   for idx in range(lattice.n_links)}
    return permutation_from_link_map(lattice, assignments)


# --- gauge-invariant subspace ----------------------------------------------

@dataclass
class InvariantSubspace:
    """Orbit decomposition of the basis under the gauge group.

    The invariant subspace of the permutation representation is spanned by
    one uniform superposition per orbit.
    """

    dimension: int
    labels: np.ndarray
    orbit_sizes: np.ndarray

    def basis(self):
        """Sparse (hilbert_dim x dimension) matrix of orthonormal columns."""
        dim = self.labels.size
        data = 1.0 / np.sqrt(self.orbit_sizes[self.labels])
        return sp.csr_matrix((data, (np.arange(dim), self.labels)),
                             shape=(dim, self.dimension))

    def projector(self):
        b = self.basis()
        return b @ b.T


def project_gauge_invariant(lattice, sites=None):
    """Decompose the basis into gauge orbits; equivalent to group averaging.

    ``sites`` restricts which gauge generators act; an empty list leaves the
    full space invariant.
    """
    dim = lattice.hilbert_dim
    if sites is not None and len(sites) == 0:
        return InvariantSubspace(dimension=dim,
                                 labels=np.arange(dim, dtype=np.int64),
                                 orbit_sizes=np.ones(dim, dtype=np.int64))
    gens = site_generator_permutations(lattice, sites)
    rep = np.arange(dim, dtype=np.int64)
    # orbit minimum as fixed point of rep[i] <- min(rep[i], rep[sigma(i)])
    changed = True
    while changed:
        changed = False
        for sigma in gens:
            inv = np.empty_like(sigma)
            inv[sigma] = np.arange(dim)
            for perm in (sigma, inv):
                new = np.minimum(rep, rep[perm])
                if not np.array_equal(new, rep):
                    rep = new
                    changed = True
        # propagate within chains: rep of rep
        new = rep[rep]
        if not np.array_equal(new, rep):
            rep = new
            changed = True
    reps, labels, counts = np.unique(rep, return_inverse=True, return_counts=True)
    return InvariantSubspace(dimension=reps.size, labels=labels,
                             orbit_sizes=counts)
