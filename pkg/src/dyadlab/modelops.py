"""Multilinear dyadic model operators on matrix-valued grid functions.

A shift of linearity n pairs n+1 functions against Haar-type functions
of descendants of a base cube K: slot j pairs f_j with h_{Q_j}^eta for
some Q_j with Q_j^(k_j) = K, cancellative (eta != 0) on at least two
slots and h^0 elsewhere.  Coefficients are normalized by

    |a| <= prod_j |Q_j|^(1/2) / |K|^n.

A paraproduct has one cancellative slot and n averaged slots per cube,
with Carleson-normalized coefficients.  Both act as trace-paired
(n+1)-linear forms; adjoints come from cyclic invariance of the trace.

``reduce_shift`` rewrites a shift so that all non-cancellative slots sit
at depth zero: each non-cancellative slot of positive depth is expanded
through the martingale identity E_K^k = sum_{l<k} Delta_K^l + E_K,
turning Delta-parts into cancellative slots at intermediate levels and
leaving an averaged part at K.  Coefficients pick up the pairing factors
gamma(Q, L) = <h_L, h^0_Q> of modulus |Q|^(1/2)/|L|^(1/2); the rewritten
terms satisfy the same normalization and their forms sum back to the
original form value.

Evaluation strategy: every pairing <f_j, h_Q^eta> for every cube and
sign pattern is precomputed in one bottom-up sweep (HaarPyramid), after
which a form is a contraction over its coefficient table.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .lattice import (
    Cube,
    GridFunction,
    HaarPyramid,
    Lattice,
    from_aligned,
    _cell_block,
)

NORMALIZATION_SLACK = 1e-12

# coefficient keys: (K, (Q_1..Q_{n+1}), (eta_1..eta_{n+1})) with eta as bitmasks
CoeffKey = tuple[Cube, tuple[Cube, ...], tuple[int, ...]]


def _coeff_bound(K: Cube, qs: Sequence[Cube], n: int) -> float:
    prod = 1.0
    for q in qs:
        prod *= q.measure() ** 0.5
    return prod / K.measure() ** n


class ShiftSpec:
    """An n-linear dyadic shift bound to a lattice.

    ``cancellative`` holds 1-based slot indices (at least two).  The
    coefficient table maps (K, cubes, eta masks) to complex scalars;
    out-of-bound coefficients are rejected, or projected onto the
    normalization bound when ``clamp`` is set.
    """

    def __init__(self, lattice: Lattice, n: int, complexity: Sequence[int],
                 cancellative: Iterable[int], coeffs: Mapping[CoeffKey, complex],
                 clamp: bool = False):
        complexity = tuple(int(k) for k in complexity)
        cancellative = frozenset(int(j) for j in cancellative)
        if n < 1:
            raise ValueError("linearity must be >= 1")
        if len(complexity) != n + 1 or any(k < 0 for k in complexity):
            raise ValueError("complexity must be n+1 non-negative integers")
        if len(cancellative) < 2 or not cancellative <= set(range(1, n + 2)):
            raise ValueError("need at least two cancellative slots in 1..n+1")
        self.lattice = lattice
        self.n = n
        self.complexity = complexity
        self.cancellative = cancellative
        self.coeffs = dict(self._validate(coeffs, clamp))

    @property
    def kappa(self) -> int:
        return max(self.complexity)

    def _validate(self, coeffs, clamp):
        lat, n = self.lattice, self.n
        for key, a in coeffs.items():
            K, qs, etas = key
            if len(qs) != n + 1 or len(etas) != n + 1:
                raise ValueError("coefficient key has wrong arity")
            for j, (q, eta) in enumerate(zip(qs, etas), start=1):
                depth = q.level - K.level
                if depth != self.complexity[j - 1] or q.ancestor(depth) != K:
                    raise ValueError(f"cube in slot {j} is not a depth-k_{j} descendant of K")
                if j in self.cancellative:
                    if not 1 <= eta < (1 << lat.dim):
                        raise ValueError(f"slot {j} needs a cancellative eta")
                    if q.level >= lat.depth:
                        raise ValueError("cancellative slot cube at the finest level")
                else:
                    if eta != 0:
                        raise ValueError(f"slot {j} must carry eta = 0")
                if q.level > lat.depth:
                    raise ValueError("cube below the lattice depth")
            bound = _coeff_bound(K, qs, n)
            if abs(a) > bound * (1.0 + NORMALIZATION_SLACK):
                if not clamp:
                    raise ValueError(f"coefficient {a} exceeds the bound {bound}")
                a = a / abs(a) * bound
            yield key, complex(a)


class ParaproductSpec:
    """An n-linear dyadic paraproduct: one Haar slot, n averaged slots.

    Coefficients are keyed by (cube, eta mask) and must satisfy the
    Carleson condition sup_{K0} (|K0|^-1 sum_{K <= K0} |a_K|^2)^(1/2)
    <= 1, verified exhaustively over the lattice.
    """

    def __init__(self, lattice: Lattice, n: int, haar_position: int,
                 coeffs: Mapping[tuple[Cube, int], complex], check: bool = True):
        if n < 1:
            raise ValueError("linearity must be >= 1")
        if not 1 <= haar_position <= n + 1:
            raise ValueError("haar position out of range")
        self.lattice = lattice
        self.n = n
        self.haar_position = haar_position
        self.coeffs = {}
        for (K, eta), a in coeffs.items():
            if not 1 <= eta < (1 << lattice.dim):
                raise ValueError("paraproduct coefficients need cancellative eta")
            if K.level >= lattice.depth:
                raise ValueError("coefficient cube at the finest level")
            self.coeffs[(K, eta)] = complex(a)
        if check:
            c = self.carleson_constant()
            if c > 1.0 + 1e-9:
                raise ValueError(f"coefficients violate the Carleson condition ({c})")

    def carleson_constant(self) -> float:
        """Exhaustive sup over top cubes of the normalized square function."""
        lat = self.lattice
        best = 0.0
        for K0 in lat.cubes():
            tot = 0.0
            for (K, _eta), a in self.coeffs.items():
                if K0.contains(K):
                    tot += abs(a) ** 2
            best = max(best, (tot / K0.measure()) ** 0.5)
        return best


@dataclass(frozen=True)
class ReducedShiftTerm:
    """One term of the depth-zero rewrite of a shift.

    ``levels`` are the per-slot depths below K, ``cancellative`` the
    slots carrying cancellative Haar functions (superset of the original
    ones), and ``labels`` record what each originally non-cancellative
    slot became: ("expect",) for the averaged part at K or
    ("delta", l) for the cancellative part at depth l.
    """

    lattice: Lattice
    n: int
    levels: tuple[int, ...]
    cancellative: frozenset[int]
    labels: tuple[tuple, ...]
    coeffs: dict = field(hash=False)

    def check_normalization(self) -> float:
        """Max of |b| / bound over the table (should be <= 1)."""
        worst = 0.0
        for (K, ls, _etas), b in self.coeffs.items():
            worst = max(worst, abs(b) / _coeff_bound(K, ls, self.n))
        return worst


# ---------------------------------------------------------------------------
# random generators
# ---------------------------------------------------------------------------

def make_random_shift(lat: Lattice, n: int, complexity: Sequence[int],
                      cancellative: Iterable[int], seed: int, scale: float = 1.0,
                      blocks: int = 8, tuples_per_block: int = 8) -> ShiftSpec:
    """Random shift with coefficients of modulus scale * bound.

    Fills at most ``blocks`` base cubes K and ``tuples_per_block`` cube
    tuples per K; each tuple gets one coefficient per admissible
    combination of cancellative sign patterns, with independent uniform
    phases.  Deterministic in the seed.
    """
    if not 0.0 <= scale <= 1.0:
        raise ValueError("scale must lie in [0, 1]")
    complexity = tuple(int(k) for k in complexity)
    canc = frozenset(int(j) for j in cancellative)
    if len(canc) < 2:
        raise ValueError("need at least two cancellative slots")
    max_level = min(
        lat.depth - k - (1 if (j + 1) in canc else 0)
        for j, k in enumerate(complexity)
    )
    if max_level < 0:
        raise ValueError("complexity incompatible with the lattice depth")
    rng = np.random.default_rng(seed)
    all_K = [Q for lv in range(max_level + 1) for Q in lat.cubes(lv)]
    picks = rng.choice(len(all_K), size=min(blocks, len(all_K)), replace=False)
    coeffs = {}
    d = lat.dim
    canc_etas = list(range(1, 1 << d))
    for ki in picks:
        K = all_K[int(ki)]
        descendants = []
        for j, k in enumerate(complexity):
            level = K.level + k
            width = 1 << k
            opts = [Cube(level, tuple(i * width + int(o)
                                      for i, o in zip(K.index, off)))
                    for off in np.ndindex(*(width,) * d)]
            descendants.append(opts)
        for _ in range(tuples_per_block):
            qs = tuple(opts[int(rng.integers(len(opts)))] for opts in descendants)
            eta_choices = [canc_etas if (j + 1) in canc else [0]
                           for j in range(n + 1)]
            for etas in itertools.product(*eta_choices):
                if scale == 0.0:
                    continue
                phase = np.exp(2j * np.pi * rng.uniform())
                coeffs[(K, qs, tuple(etas))] = scale * phase * _coeff_bound(K, qs, n)
    return ShiftSpec(lat, n, complexity, canc, coeffs)


def bmo_norm(h: GridFunction) -> float:
    """Dyadic BMO norm: exhaustive sup over cubes K0 of
    (|K0|^-1 sum over Haar coefficients inside K0)^(1/2)."""
    if h.value_shape != ():
        raise ValueError("BMO norm is for scalar functions")
    lat = h.lattice
    pyr = HaarPyramid(h)
    best = 0.0
    for K0 in lat.cubes():
        tot = 0.0
        for lv in range(K0.level, lat.depth):
            arr = pyr.levels[lv]
            blk = tuple(slice(i << (lv - K0.level), (i + 1) << (lv - K0.level))
                        for i in K0.index)
            tot += float((np.abs(arr[blk + (slice(1, None),)]) ** 2).sum())
        best = max(best, (tot / K0.measure()) ** 0.5)
    return best


def make_bmo_coeffs(lat: Lattice, h: GridFunction) -> dict[tuple[Cube, int], complex]:
    """Haar coefficients of h normalized by its dyadic BMO norm.

    The output satisfies the Carleson condition with constant exactly
    one, attained at the sup cube.  Constant h is rejected.
    """
    nrm = bmo_norm(h)
    if nrm <= 0.0:
        raise ValueError("constant function has zero BMO norm")
    pyr = HaarPyramid(h)
    out = {}
    for lv in range(lat.depth):
        for Q in lat.cubes(lv):
            for eta in range(1, 1 << lat.dim):
                c = pyr.coef(Q, eta)
                if c != 0:
                    out[(Q, eta)] = c / nrm
    return out


# ---------------------------------------------------------------------------
# form evaluation
# ---------------------------------------------------------------------------

def _check_inputs(lat: Lattice, fs: Sequence[GridFunction], arity: int):
    if len(fs) != arity:
        raise ValueError(f"expected {arity} functions")
    vs = fs[0].value_shape
    for f in fs:
        if f.lattice != lat:
            raise ValueError("function lattice does not match the operator")
        if f.value_shape != vs:
            raise ValueError("functions have mixed value shapes")
    if vs != () and (len(vs) != 2 or vs[0] != vs[1]):
        raise ValueError("form inputs must be scalar or square-matrix valued")
    return vs


def _tau_product(mats: Sequence) -> complex:
    prod = mats[0]
    for m in mats[1:]:
        prod = prod @ m if getattr(prod, "ndim", 0) == 2 else prod * m
    if getattr(prod, "ndim", 0) == 2:
        return complex(np.trace(prod))
    return complex(prod)


def eval_shift_form(spec: ShiftSpec | ReducedShiftTerm,
                    fs: Sequence[GridFunction]) -> complex:
    """Trace-paired form value: sum over the coefficient table of
    a * tau(prod_j <f_j, h_{Q_j}>), matrix product in slot order."""
    lat = spec.lattice
    vs = _check_inputs(lat, fs, spec.n + 1)
    pyrs = [HaarPyramid(f) for f in fs]
    scalar = vs == ()
    if scalar:
        total = 0.0 + 0.0j
        for (K, qs, etas), a in spec.coeffs.items():
            prod = 1.0 + 0.0j
            for j in range(spec.n + 1):
                prod *= pyrs[j].coef(qs[j], etas[j])
            total += a * prod
        return complex(total)
    items = list(spec.coeffs.items())
    if not items:
        return 0j
    n1 = spec.n + 1
    acc = np.empty((len(items),) + vs, dtype=np.complex128)
    coefs = np.empty(len(items), dtype=np.complex128)
    for i, ((K, qs, etas), a) in enumerate(items):
        coefs[i] = a
        acc[i] = pyrs[0].coef(qs[0], etas[0])
    for j in range(1, n1):
        stack = np.empty((len(items),) + vs, dtype=np.complex128)
        for i, ((K, qs, etas), _a) in enumerate(items):
            stack[i] = pyrs[j].coef(qs[j], etas[j])
        acc = acc @ stack
    traces = np.einsum("kii->k", acc)
    return complex((coefs * traces).sum())


def eval_shift_form_naive(spec: ShiftSpec | ReducedShiftTerm,
                          fs: Sequence[GridFunction]) -> complex:
    """Direct enumeration oracle: build every Haar function on the grid
    and integrate the pairings term by term."""
    from .lattice import haar, pairing
    lat = spec.lattice
    _check_inputs(lat, fs, spec.n + 1)
    total = 0j
    for (K, qs, etas), a in spec.coeffs.items():
        mats = []
        for j in range(spec.n + 1):
            h = haar(lat, (qs[j], etas[j]))
            mats.append(pairing(fs[j], h))
        total += a * _tau_product(mats)
    return complex(total)


def _cyclic_order(n1: int, j0: int) -> list[int]:
    """Slots j0+1, ..., n+1, 1, ..., j0 (1-based)."""
    return [(j0 + i - 1) % n1 + 1 for i in range(1, n1 + 1)]


def eval_paraproduct_form(spec: ParaproductSpec,
                          fs: Sequence[GridFunction]) -> complex:
    """Paraproduct form: per cube, the trace of the cyclic product of n
    averages times the Haar pairing of the slot at ``haar_position``."""
    lat = spec.lattice
    vs = _check_inputs(lat, fs, spec.n + 1)
    order = _cyclic_order(spec.n + 1, spec.haar_position)
    pyrs = {j: HaarPyramid(fs[j - 1]) for j in order}
    # averages from the non-cancellative pairing: <f>_K = <f, h^0_K> |K|^-1/2
    total = 0j
    for (K, eta), a in spec.coeffs.items():
        mats = []
        root = K.measure() ** 0.5
        for j in order[:-1]:
            mats.append(pyrs[j].coef(K, 0) / root)
        mats.append(pyrs[order[-1]].coef(K, eta))
        total += a * _tau_product(mats)
    return complex(total)


def adjoint_eval(spec, j0: int, fs: Sequence[GridFunction]) -> GridFunction:
    """The slot-j0 adjoint applied to the remaining n functions.

    Returns the matrix-valued function g with form(f_1..f_{n+1}) equal
    to integral of tau(g f_{j0}); the matrix product inside is taken in
    the cyclic order j0+1, ..., j0-1 as dictated by trace invariance.
    """
    lat = spec.lattice
    n1 = spec.n + 1
    if not 1 <= j0 <= n1:
        raise ValueError("adjoint slot out of range")
    vs = _check_inputs(lat, fs, spec.n)
    others = [j for j in _cyclic_order(n1, j0) if j != j0]
    supplied = {j: fs[i] for i, j in enumerate(sorted(others))}
    pyrs = {j: HaarPyramid(supplied[j]) for j in others}
    N = 1 if vs == () else vs[0]
    out = np.zeros((lat.cells_per_axis,) * lat.dim + vs, dtype=np.complex128)

    def haar_patch(Q: Cube, eta: int):
        w = 1 << (lat.depth - Q.level)
        patch = np.full((w,) * lat.dim, Q.measure() ** -0.5, dtype=np.complex128)
        for a in range(lat.dim):
            if (eta >> a) & 1:
                sgn = np.ones(w)
                sgn[w // 2:] = -1.0
                patch = patch * sgn.reshape((1,) * a + (w,) + (1,) * (lat.dim - a - 1))
        return patch

    if isinstance(spec, ParaproductSpec):
        order = _cyclic_order(n1, spec.haar_position)
        for (K, eta), a in spec.coeffs.items():
            root = K.measure() ** 0.5
            mats = []
            for j in order:
                if j == j0:
                    continue
                if j == spec.haar_position:
                    mats.append(pyrs[j].coef(K, eta))
                else:
                    mats.append(pyrs[j].coef(K, 0) / root)
            # reorder cyclically so the factors follow j0+1..j0-1
            start = order.index(j0)
            seq = order[start + 1:] + order[:start]
            mats_by_slot = {}
            i = 0
            for j in order:
                if j != j0:
                    mats_by_slot[j] = mats[i]
                    i += 1
            prod = _matrix_chain([mats_by_slot[j] for j in seq], N)
            if j0 == spec.haar_position:
                patch = haar_patch(K, eta)
            else:
                patch = haar_patch(K, 0) / root  # = 1_K / |K|
            _accumulate(out, lat, K, a * prod, patch, vs)
    else:
        for (K, qs, etas), a in spec.coeffs.items():
            seq = [j for j in _cyclic_order(n1, j0) if j != j0]
            mats = [pyrs[j].coef(qs[j - 1], etas[j - 1]) for j in seq]
            prod = _matrix_chain(mats, N)
            patch = haar_patch(qs[j0 - 1], etas[j0 - 1])
            _accumulate(out, lat, qs[j0 - 1], a * prod, patch, vs)
    return from_aligned(lat, out)


def _matrix_chain(mats, N):
    if not mats:
        return 1.0 + 0j if N == 1 else np.eye(N, dtype=np.complex128)
    prod = mats[0]
    for m in mats[1:]:
        prod = prod @ m if getattr(prod, "ndim", 0) == 2 else prod * m
    return prod


def _accumulate(out, lat, Q, value, patch, vs):
    blk = _cell_block(lat, Q)
    if vs == ():
        out[blk] += value * patch
    else:
        out[blk] += patch[(Ellipsis,) + (None,) * len(vs)] * value


def form_value(spec, fs: Sequence[GridFunction]) -> complex:
    if isinstance(spec, ParaproductSpec):
        return eval_paraproduct_form(spec, fs)
    return eval_shift_form(spec, fs)


# ---------------------------------------------------------------------------
# complexity reduction
# ---------------------------------------------------------------------------

def reduce_shift(spec: ShiftSpec) -> list[ReducedShiftTerm]:
    """Rewrite a shift as depth-zero-average terms.

    Every non-cancellative slot with positive depth is expanded into
    its averaged part at K plus one cancellative part per intermediate
    depth; a shift with all slots cancellative comes back unchanged as
    a single term.  The sum of the returned forms equals the original
    form on any inputs, and every term obeys the shift normalization.
    """
    lat = spec.lattice
    n1 = spec.n + 1
    d = lat.dim
    expand_slots = [j for j in range(1, n1 + 1)
                    if j not in spec.cancellative and spec.complexity[j - 1] > 0]
    options: dict[int, list[tuple]] = {}
    for j in expand_slots:
        k = spec.complexity[j - 1]
        options[j] = [("expect",)] + [("delta", l) for l in range(k)]
    fixed_labels = {j: ("canc",) if j in spec.cancellative else ("expect",)
                    for j in range(1, n1 + 1) if j not in expand_slots}

    terms = []
    for combo in itertools.product(*(options[j] for j in expand_slots)):
        choice = dict(zip(expand_slots, combo))
        labels = []
        levels = []
        canc = set(spec.cancellative)
        for j in range(1, n1 + 1):
            if j in choice:
                labels.append(choice[j])
                if choice[j][0] == "delta":
                    levels.append(choice[j][1])
                    canc.add(j)
                else:
                    levels.append(0)
            else:
                labels.append(fixed_labels[j])
                levels.append(spec.complexity[j - 1] if j in spec.cancellative else 0)
        coeffs: dict[CoeffKey, complex] = {}
        for (K, qs, etas), a in spec.coeffs.items():
            # per-slot replacement cubes and gamma factors
            slot_variants = []
            for j in range(1, n1 + 1):
                Q = qs[j - 1]
                if j not in choice:
                    if j in spec.cancellative or spec.complexity[j - 1] == 0:
                        slot_variants.append([(Q, etas[j - 1], 1.0)])
                    else:
                        # unreachable: slot would be in expand_slots
                        raise AssertionError
                    continue
                kind = choice[j]
                if kind[0] == "expect":
                    gamma = (Q.measure() / K.measure()) ** 0.5
                    slot_variants.append([(K, 0, gamma)])
                else:
                    l = kind[1]
                    Lj = Q.ancestor(Q.level - K.level - l)
                    # sign of h^eta_L on Q = sign at the depth-1 child of L over Q
                    child = Q.ancestor(Q.level - Lj.level - 1)
                    bits = tuple(child.index[a] - 2 * Lj.index[a] for a in range(d))
                    mag = (Q.measure() ** 0.5) / (Lj.measure() ** 0.5)
                    variants = []
                    for eta in range(1, 1 << d):
                        par = sum(((eta >> a) & 1) * bits[a] for a in range(d))
                        variants.append((Lj, eta, ((-1.0) ** par) * mag))
                    slot_variants.append(variants)
            for picks in itertools.product(*slot_variants):
                Ls = tuple(p[0] for p in picks)
                es = tuple(p[1] for p in picks)
                g = 1.0
                for p in picks:
                    g *= p[2]
                key = (K, Ls, es)
                coeffs[key] = coeffs.get(key, 0j) + a * g
        terms.append(ReducedShiftTerm(lat, spec.n, tuple(levels),
                                      frozenset(canc), tuple(labels), coeffs))
    return terms


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _cube_to_json(Q: Cube):
    return [Q.level, list(Q.index)]


def _cube_from_json(obj) -> Cube:
    return Cube(int(obj[0]), tuple(int(i) for i in obj[1]))


def shift_to_json(spec: ShiftSpec) -> str:
    entries = []
    for (K, qs, etas), a in sorted(spec.coeffs.items(),
                                   key=lambda kv: repr(kv[0])):
        entries.append({
            "K": _cube_to_json(K),
            "Qs": [_cube_to_json(q) for q in qs],
            "etas": list(etas),
            "re": float(a.real),
            "im": float(a.imag),
        })
    return json.dumps({
        "n": spec.n,
        "complexity": list(spec.complexity),
        "cancellative": sorted(spec.cancellative),
        "dim": spec.lattice.dim,
        "depth": spec.lattice.depth,
        "shift": list(spec.lattice.shift),
        "coeffs": entries,
    }, sort_keys=True)


def shift_from_json(text: str, clamp: bool = False) -> ShiftSpec:
    """Load a shift; normalization is re-validated (or clamped).

    Missing ``etas`` entries default to the fully cancellative pattern
    on cancellative slots and zero elsewhere.
    """
    from .lattice import build_lattice
    obj = json.loads(text)
    lat = build_lattice(obj["dim"], obj["depth"], obj.get("shift"))
    canc = set(obj["cancellative"])
    n = obj["n"]
    full = (1 << lat.dim) - 1
    coeffs = {}
    for ent in obj["coeffs"]:
        K = _cube_from_json(ent["K"])
        qs = tuple(_cube_from_json(q) for q in ent["Qs"])
        if "etas" in ent:
            etas = tuple(int(e) for e in ent["etas"])
        else:
            etas = tuple(full if (j + 1) in canc else 0 for j in range(n + 1))
        coeffs[(K, qs, etas)] = complex(ent["re"], ent["im"])
    return ShiftSpec(lat, n, obj["complexity"], canc, coeffs, clamp=clamp)


def paraproduct_to_json(spec: ParaproductSpec) -> str:
    entries = [{"K": _cube_to_json(K), "eta": eta,
                "re": float(a.real), "im": float(a.imag)}
               for (K, eta), a in sorted(spec.coeffs.items(),
                                         key=lambda kv: repr(kv[0]))]
    return json.dumps({
        "n": spec.n,
        "haar_position": spec.haar_position,
        "dim": spec.lattice.dim,
        "depth": spec.lattice.depth,
        "shift": list(spec.lattice.shift),
        "coeffs": entries,
    }, sort_keys=True)


def paraproduct_from_json(text: str) -> ParaproductSpec:
    from .lattice import build_lattice
    obj = json.loads(text)
    lat = build_lattice(obj["dim"], obj["depth"], obj.get("shift"))
    coeffs = {}
    for ent in obj["coeffs"]:
        coeffs[(_cube_from_json(ent["K"]), int(ent.get("eta", (1 << lat.dim) - 1)))] = \
            complex(ent["re"], ent["im"])
    return ParaproductSpec(lat, obj["n"], obj["haar_position"], coeffs)
