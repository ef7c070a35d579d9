"""Annular, bubble and weakly flat regions of a curvature density, and the recursive cover.

Notation: ``zeta(x, r)`` is the mass of ``B_r(x)`` and ``zbar(x, r)`` the largest
mass of an ``r``-ball centred within ``B_r(x)``; ``q = gamma**K0`` is the
energy quantum.

Region conventions (cells by centre): a ball is ``{d <= r}``, an annulus
``{s <= d <= r}``, a bubble ``{d <= r}`` minus the open balls ``{d < r_i}``.

The cover is built from a work list of balls. Each ball is handled by the
first applicable route:

1. ``bubble``: the ball itself is a bubble region without excisions;
2. ``weakly_flat``: a nearby centre carries a weakly flat ball containing it,
   which yields an annulus, an inner bubble and child balls;
3. ``vitali``: every centre shows an energy drop, children are the small balls
   of a Vitali cover;
4. ``excision``: a bubble on the ball itself with its bad cells excised.

Every child ball must lower the ledger value ``zbar`` by ``q / 10``; the
recursion depth is bounded by ``10 Lambda / q + 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BallTooLarge, InsufficientResolution, RefinementBreaksCover
from .lattice import Ball, ScalarField, ball_mask, vitali_cover

WEAKLY_FLAT = "weakly_flat"
ANNULAR = "annular"
BUBBLE = "bubble"

# refinement shrinks outer radii by 3/4 and doubles inner ones; margins below keep the cover
_MARGIN = 4.0 / 3.0
_CHILD = 8.0 / 3.0


@dataclass(frozen=True)
class DecompConfig:
    gamma: float = 0.5
    K0: int = 3
    eps0: float = 0.1
    Lambda: float | None = None
    test_mode: bool = False
    n_override: int | None = None
    c_override: float | None = None
    pigeon_offset: int | None = None
    guard_exponent: int | None = None
    guard_cells: float | None = None
    annular_rule: str = "gamma_s"

    def __post_init__(self):
        if not 0 < self.gamma <= 0.5:
            raise ValueError("gamma must lie in (0, 1/2]")
        if self.K0 < 1:
            raise ValueError("K0 must be a positive integer")
        if self.eps0 <= 0:
            raise ValueError("eps0 must be positive")
        if self.annular_rule not in ("gamma_s", "verbatim"):
            raise ValueError("annular_rule is 'gamma_s' or 'verbatim'")

    @classmethod
    def testing(cls, **kw):
        """Desk-scale configuration: overridable constants and a relaxed guard."""
        base = dict(test_mode=True, eps0=1.0, c_override=0.2, pigeon_offset=0)
        base.update(kw)
        return cls(**base)

    @property
    def quantum(self):
        return self.gamma**self.K0

    def budget(self, e):
        """``Lambda``: configured, else the total mass plus one quantum."""
        if self.Lambda is not None:
            return float(self.Lambda)
        return e.integral() + self.quantum

    def n_max(self, lam):
        if self.n_override is not None:
            return int(self.n_override)
        return int(math.ceil(10 * lam / self.eps0))

    def c_min(self, lam):
        if self.c_override is not None:
            return float(self.c_override)
        q = self.quantum
        return (2 * q) ** (10 + math.ceil(lam * q**-1 / self.gamma))

    @property
    def offset(self):
        if self.pigeon_offset is not None:
            return self.pigeon_offset
        return 0 if self.test_mode else 10

    @property
    def guard(self):
        """``(exponent, cells)``: ``gamma**exponent * r_top >= cells * h`` must hold."""
        exp = self.guard_exponent
        cells = self.guard_cells
        if exp is None:
            exp = self.K0 if self.test_mode else self.K0 + 2
        if cells is None:
            cells = 0.5 if self.test_mode else 4.0
        return exp, cells

    def as_dict(self):
        return {
            "gamma": self.gamma,
            "K0": self.K0,
            "eps0": self.eps0,
            "Lambda": self.Lambda,
            "test_mode": self.test_mode,
            "n_override": self.n_override,
            "c_override": self.c_override,
            "pigeon_offset": self.offset,
            "guard": list(self.guard),
            "annular_rule": self.annular_rule,
        }


@dataclass(frozen=True)
class Region:
    tag: str
    center: tuple
    radii: tuple
    excised: tuple = ()
    stage: int = 1

    @property
    def outer(self):
        return self.radii[-1]

    def mask(self, lattice):
        if self.tag == ANNULAR:
            s, r = self.radii
            return ball_mask(lattice, self.center, r) & ~ball_mask(lattice, self.center, s, strict=True)
        m = ball_mask(lattice, self.center, self.outer)
        for b in self.excised:
            m &= ~ball_mask(lattice, b.center, b.radius, strict=True)
        return m

    def as_dict(self):
        return {
            "tag": self.tag,
            "center": list(self.center),
            "radii": list(self.radii),
            "excised": [{"center": list(b.center), "radius": b.radius} for b in self.excised],
            "stage": self.stage,
        }

    @classmethod
    def from_dict(cls, d):
        exc = tuple(Ball(tuple(int(v) for v in b["center"]), float(b["radius"])) for b in d["excised"])
        return cls(d["tag"], tuple(int(v) for v in d["center"]), tuple(float(v) for v in d["radii"]), exc, int(d["stage"]))


@dataclass
class Decomposition:
    regions: list
    target: Ball
    ledger: list = field(default_factory=list)
    routes: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    Lambda: float = 0.0
    refined: bool = False
    parents: list = field(default_factory=list)

    @property
    def counts(self):
        na = sum(r.tag == ANNULAR for r in self.regions)
        nb = sum(r.tag == BUBBLE for r in self.regions)
        return na, nb

    @property
    def depth(self):
        return len(self.ledger)

    def cover_radius(self):
        return self.target.radius * (0.75 if self.refined else 1.0)

    def as_dict(self):
        return {
            "target": {"center": list(self.target.center), "radius": self.target.radius},
            "regions": [r.as_dict() for r in self.regions],
            "ledger": list(self.ledger),
            "routes": [list(r) for r in self.routes],
            "counts": list(self.counts),
            "config": dict(self.config),
            "Lambda": self.Lambda,
            "refined": self.refined,
            "parents": [r.as_dict() for r in self.parents],
        }

    def to_json(self):
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d):
        t = d["target"]
        return cls(
            regions=[Region.from_dict(r) for r in d["regions"]],
            target=Ball(tuple(int(v) for v in t["center"]), float(t["radius"])),
            ledger=list(d["ledger"]),
            routes=[tuple(r) for r in d["routes"]],
            config=dict(d["config"]),
            Lambda=float(d["Lambda"]),
            refined=bool(d["refined"]),
            parents=[Region.from_dict(r) for r in d.get("parents", [])],
        )


# --- energy functionals -----------------------------------------------------


def _site(e, x):
    return tuple(int(v) for v in e.lattice.wrap(x))


def zeta(e, x, r):
    return float(e.mass_field(e.lattice.radius_key(r))[_site(e, x)])


def zbar(e, x, r):
    return float(e.sup_field(e.lattice.radius_key(r))[_site(e, x)])


def _zbar_field(e, r):
    return e.sup_field(e.lattice.radius_key(r))


def clipped(e):
    """View of ``e`` on the clipped box: balls are cut at the domain edge, never wrapped."""
    if e.lattice.periodic:
        return ScalarField(e.lattice.with_geometry("box"), e.values)
    return e


def _check_guard(e, r, cfg, what="scale"):
    exp, cells = cfg.guard
    if cfg.gamma**exp * r < cells * e.lattice.spacing * (1 - 1e-12):
        raise InsufficientResolution(
            f"{what} {r:g}: gamma^{exp} * r falls below {cells:g} cells"
        )


# --- predicates ---------------------------------------------------------------


def is_weakly_flat(e, p, r, cfg):
    """``|zbar(p, 2r) - zbar(p, gamma**K0 r)| < gamma**K0``."""
    _check_guard(e, r, cfg)
    q = cfg.quantum
    return abs(zbar(e, p, 2 * r) - zbar(e, p, q * r)) < q


def _sites_in(lattice, center, r):
    return [tuple(int(v) for v in s) for s in np.argwhere(ball_mask(lattice, center, r))]


def is_annular(e, p, s, r, cfg):
    """Conditions (1) at ``p`` and (2) over ``B_{q r}(p)`` of the annular definition.

    Condition (2) compares against scale ``gamma * s`` by default; with
    ``annular_rule="verbatim"`` the scale ``s / gamma`` is used, which together
    with (1) cannot hold at ``x = p`` because ``zbar`` is nondecreasing.
    """
    q = cfg.quantum
    if s > 5 * q * r * (1 + 1e-12):
        raise ValueError(f"inner radius {s:g} exceeds 5 gamma^K0 r = {5 * q * r:g}")
    _check_guard(e, r, cfg)
    if not abs(zbar(e, p, 2 * r) - zbar(e, p, s)) < q:
        return False
    inner = s * cfg.gamma if cfg.annular_rule == "gamma_s" else s / cfg.gamma
    mask = ball_mask(e.lattice, p, q * r)
    gap = np.abs(_zbar_field(e, 2 * r) - _zbar_field(e, inner))
    return bool(np.all(gap[mask] >= q))


@dataclass
class BubbleCheck:
    count: bool
    radii: bool
    drop: bool
    local: bool
    bad_cells: int = 0

    @property
    def ok(self):
        return self.count and self.radii and self.drop and self.local

    def as_dict(self):
        return {"count": self.count, "radii": self.radii, "drop": self.drop, "local": self.local,
                "bad_cells": self.bad_cells, "ok": self.ok}


def _rx_min(lattice, r):
    """Smallest search-grid radius ``j * h / 2`` not below ``r``."""
    half = lattice.spacing / 2
    return max(1, math.ceil(r / half - 1e-9)) * half


def bad_cells(e, center, r, cfg, lam, region_mask=None):
    """Cells of the region without a light ball of radius ``>= c r`` around them.

    Ball mass is monotone in the radius, so the smallest admissible radius ``c r`` decides;
    every grid radius with the same cell set gives the same answer.
    """
    lat = e.lattice
    c = cfg.c_min(lam)
    heavy = e.mass_field(lat.radius_key(c * r)) >= cfg.eps0 / 2
    if region_mask is None:
        region_mask = ball_mask(lat, center, r)
    return heavy & region_mask


def is_bubble(e, region, cfg, lam=None):
    """Per-condition check of the bubble definition for ``region``."""
    lam = cfg.budget(e) if lam is None else lam
    p, r = region.center, region.outer
    c = cfg.c_min(lam)
    q = cfg.quantum
    top = zbar(e, p, r)
    count = len(region.excised) <= cfg.n_max(lam)
    radii = all(b.radius >= c * r * (1 - 1e-12) for b in region.excised)
    drop = all(zbar(e, b.center, b.radius) < top - q for b in region.excised)
    bad = bad_cells(e, p, r, cfg, lam, region.mask(e.lattice))
    n_bad = int(np.count_nonzero(bad))
    return BubbleCheck(count, radii, drop, n_bad == 0, n_bad)


def k_index(e, x, cfg, r_top):
    """``(K_x, capped)``: largest ``K`` in ``[1, K_max]`` with ``|zbar(x, r) - zbar(x, gamma^K r)| < q``.

    ``K_max`` is the largest ``K`` whose scale passes the resolution guard;
    ``K_x = 0`` when even ``K = 1`` fails.
    """
    k_max = _k_cap(e, cfg, r_top)
    q = cfg.quantum
    top = zbar(e, x, r_top)
    k = 0
    for K in range(1, k_max + 1):
        if abs(top - zbar(e, x, cfg.gamma**K * r_top)) < q:
            k = K
        else:
            break
    return k, k == k_max


def _k_cap(e, cfg, r_top):
    _, cells = cfg.guard
    h = e.lattice.spacing
    k = 0
    while cfg.gamma ** (k + 1) * r_top >= cells * h * (1 - 1e-12):
        k += 1
    return max(k, 1)


def _k_field(e, cfg, r_top, sites):
    """Vectorized ``k_index`` over ``sites``."""
    k_max = _k_cap(e, cfg, r_top)
    q = cfg.quantum
    idx = tuple(np.array(sites).T)
    top = _zbar_field(e, r_top)[idx]
    ks = np.zeros(len(sites), dtype=int)
    alive = np.ones(len(sites), dtype=bool)
    for K in range(1, k_max + 1):
        ok = np.abs(top - _zbar_field(e, cfg.gamma**K * r_top)[idx]) < q
        alive &= ok
        ks[alive] = K
    return ks


# --- construction -------------------------------------------------------------


class _Builder:
    def __init__(self, e, cfg):
        self.e = e
        self.cfg = cfg
        self.lam = cfg.budget(e)
        self.q = cfg.quantum
        self.h = e.lattice.spacing
        self.regions = []
        self.routes = []

    # a child must sit strictly below its parent in the ledger
    def _ledger_ok(self, child_val, parent_val):
        return child_val < parent_val - self.q / 10

    def try_bubble(self, z, rho, stage):
        reg = Region(BUBBLE, z, (rho,), (), stage)
        if not np.any(bad_cells(self.e, z, rho, self.cfg, self.lam)):
            return [reg], []
        return None

    def excision(self, x, rho_b, stage, parent_val):
        """Bubble ``B_{rho_b}(x)`` with its bad cells excised; children cover the holes.

        Excision radii come from the pigeonhole ladder ``rho_b (2q)**(offset + j)``,
        clamped to the grid, and the largest radius meeting the drop and ledger
        conditions is used.
        """
        e, cfg, lam = self.e, self.cfg, self.lam
        lat = e.lattice
        bad = bad_cells(e, x, rho_b, cfg, lam)
        if not bad.any():
            return [Region(BUBBLE, x, (rho_b,), (), stage)], []
        bad_sites = [tuple(int(v) for v in s) for s in np.argwhere(bad)]
        c = cfg.c_min(lam)
        top = zbar(e, x, rho_b)
        for r_e in self._excision_ladder(rho_b, c):
            cover = vitali_cover(lat, bad_sites, [r_e] * len(bad_sites))
            if len(cover) > cfg.n_max(lam):
                continue
            vals = [zbar(e, b.center, b.radius) for b in cover]
            if not all(v < top - self.q for v in vals):
                continue
            kids = []
            for b in cover:
                rc = _CHILD * r_e
                kv = zbar(e, b.center, rc)
                if not self._ledger_ok(kv, parent_val):
                    break
                kids.append((b.center, rc, kv))
            else:
                reg = Region(BUBBLE, x, (rho_b,), tuple(cover), stage)
                return [reg], kids
        return None

    def _excision_ladder(self, rho_b, c):
        """Candidate excision radii, largest first, all on the half-cell grid."""
        cfg = self.cfg
        step = 2 * self.q
        half = self.h / 2
        out = []
        j_max = 1 + math.ceil(self.lam / (self.q * cfg.gamma))
        for j in range(1, j_max + 1):
            r = rho_b * step ** (cfg.offset + j)
            r = max(half, math.floor(r / half + 1e-9) * half)
            if r < c * rho_b * (1 - 1e-12):
                r = _rx_min(self.e.lattice, c * rho_b)
            if r not in out:
                out.append(r)
            if r <= half:
                break
        # the pigeonhole ladder is coarse (factor 1/4); fill in the grid between its rungs
        grid = sorted({k * half for k in range(1, int(out[0] / half) + 1)} | set(out), reverse=True)
        return [r for r in grid if r >= c * rho_b * (1 - 1e-12)]

    def weakly_flat_step(self, x0_hint, r, stage, parent_val, argmax=True):
        """Annulus, inner bubble and children for the weakly flat ball ``B_{2r}(p)``."""
        e, cfg = self.e, self.cfg
        lat = e.lattice
        p = x0_hint
        sites = _sites_in(lat, p, r)
        if argmax:
            ks = _k_field(e, cfg, r, sites)
            best = int(np.argmax(ks))  # first maximum in site order
            x0, K = sites[best], int(ks[best])
        else:
            x0, K = p, k_index(e, p, cfg, r)[0]
        d = float(lat.distance(lat.site_point(p), lat.site_point(x0)))
        r_a = r + _MARGIN * d
        regions = []
        s = None
        for cand in self._annulus_radii(K, r_a):
            if is_annular(e, x0, cand, r_a, cfg):
                s = cand
                break
        if s is not None:
            regions.append(Region(ANNULAR, x0, (s, r_a), (), stage))
            rho_b = _CHILD * s
        else:
            rho_b = r_a
        sub = self.excision(x0, rho_b, stage, parent_val)
        if sub is None:
            return None
        regs, kids = sub
        return regions + regs, kids, (x0, K, s)

    def _annulus_radii(self, K, r_a):
        """``5 gamma^K r`` first, then every grid radius below ``5 q r``, largest first."""
        cfg = self.cfg
        half = self.h / 2
        cap = 5 * self.q * r_a
        first = 5 * cfg.gamma**K * r_a
        out = [first] if half <= first <= cap * (1 + 1e-12) else []
        k = int(math.floor(cap / half + 1e-9))
        out += [j * half for j in range(k, 0, -1) if j * half != first]
        return out

    def vitali_step(self, z, rho, stage, parent_val):
        e, cfg = self.e, self.cfg
        lat = e.lattice
        rc = self.q * rho
        # single-cell children carry no scale below them; leave such balls to the excision route
        if rc < self.h * (1 - 1e-12):
            return None
        sites = _sites_in(lat, z, rho)
        cover = vitali_cover(lat, sites, [0.75 * rc] * len(sites))
        top = _zbar_field(e, 4 * rho) if lat.max_radius >= 4 * rho else None
        if top is None:
            return None
        small = _zbar_field(e, rc)
        kids = []
        for b in cover:
            v = float(small[b.center])
            if not (v < float(top[b.center]) - self.q and self._ledger_ok(v, parent_val)):
                return None
            kids.append((b.center, rc, v))
        return [], kids

    def find_weakly_flat(self, z, rho):
        """Nearest site ``x`` (then lexicographic) whose ball ``B_{rho + 4d/3}(x)`` is weakly flat."""
        e, cfg = self.e, self.cfg
        lat = e.lattice
        sites = _sites_in(lat, z, rho)
        zp = lat.site_point(z)
        d = lat.distance(zp, np.array([lat.site_point(s) for s in sites]))
        order = np.lexsort(tuple(np.array(sites).T[::-1]) + (np.round(d / self.h, 9),))
        for i in order:
            rr = rho + _MARGIN * float(d[i])
            try:
                if is_weakly_flat(e, sites[i], rr, cfg):
                    return sites[i], rr
            except (InsufficientResolution, BallTooLarge):
                continue
        return None

    def process(self, z, rho, stage, parent_val, allow_shortcut=True):
        """Regions and child balls for one pending ball, by the first applicable route."""
        if allow_shortcut:
            res = self.try_bubble(z, rho, stage)
            if res is not None:
                return res, "bubble"
        wf = self.find_weakly_flat(z, rho)
        if wf is not None:
            x, rr = wf
            res = self.weakly_flat_step(x, rr, stage, parent_val)
            if res is not None:
                return res[:2], "weakly_flat"
        res = self.vitali_step(z, rho, stage, parent_val)
        if res is not None:
            return res, "vitali"
        res = self.excision(z, rho, stage, parent_val)
        if res is not None:
            return res, "excision"
        raise InsufficientResolution(
            f"no route decomposes B_{rho:g}({z}) at stage {stage}"
        )

    def run(self, pending, first=None):
        """Work-list recursion; ``first`` optionally handles stage 1."""
        max_stage = int(10 * self.lam / self.q) + 1
        ledger = []
        stage = 1
        while pending:
            if stage > max_stage:
                raise InsufficientResolution("ledger exhausted before the cover closed")
            ledger.append(max(v for _, _, v in pending))
            nxt = []
            for z, rho, val in sorted(pending, key=lambda t: (t[0], t[1])):
                if first is not None and stage == 1:
                    (regs, kids), route = first(z, rho, val)
                else:
                    (regs, kids), route = self.process(z, rho, stage, val)
                self.regions.extend(regs)
                self.routes.append((stage, list(z), rho, route))
                nxt.extend(kids)
            pending = nxt
            stage += 1
        return ledger


def _finish(b, target, ledger, cfg):
    return Decomposition(
        regions=b.regions,
        target=target,
        ledger=ledger,
        routes=b.routes,
        config=cfg.as_dict(),
        Lambda=b.lam,
    )


def decompose_ball(e, p, r, cfg):
    """Cover ``B_r(p)`` by annular and bubble regions (on the clipped box)."""
    e = clipped(e)
    p = tuple(int(v) for v in p)
    _check_guard(e, r, cfg, "top radius")
    b = _Builder(e, cfg)
    target = Ball(p, r)
    if zeta(e, p, r) < cfg.eps0 / 2:
        reg = Region(BUBBLE, p, (r,), (), 1)
        b.regions.append(reg)
        b.routes.append((1, list(p), r, "shortcut"))
        return _finish(b, target, [zbar(e, p, r)], cfg)
    ledger = b.run([(p, r, zbar(e, p, r))])
    return _finish(b, target, ledger, cfg)


def decompose_weakly_flat(e, p, r, cfg):
    """Cover ``B_r(p)`` starting from the weakly flat ball ``B_{2r}(p)`` (on the clipped box)."""
    e = clipped(e)
    p = tuple(int(v) for v in p)
    if not is_weakly_flat(e, p, r, cfg):
        raise ValueError(f"B_{2 * r:g}({p}) is not weakly flat")
    b = _Builder(e, cfg)
    target = Ball(p, r)
    if zeta(e, p, 2 * r) < cfg.eps0 / 2:
        b.regions.append(Region(BUBBLE, p, (r,), (), 1))
        b.routes.append((1, list(p), r, "shortcut"))
        return _finish(b, target, [zbar(e, p, r)], cfg)

    def first(z, rho, val):
        res = b.weakly_flat_step(z, rho, 1, val)
        if res is None:
            raise InsufficientResolution(f"weakly flat step fails on B_{rho:g}({z})")
        return res[:2], "weakly_flat"

    ledger = b.run([(p, r, zbar(e, p, r))], first=first)
    return _finish(b, target, ledger, cfg)


def refine_cover(d, e=None):
    """Shrink annuli ``A_{s,r} -> A_{2s, 3r/4}`` and bubbles ``B_r minus B_{r_i} -> B_{3r/4} minus B_{2 r_i}``.

    The shrunk regions must still cover ``B_{3R/4}`` of the target; the
    lattice is taken from ``e`` (required for the coverage check).
    """
    if d.refined:
        parents = d.parents
    else:
        parents = list(d.regions)
    out = []
    for reg in d.regions:
        if reg.tag == ANNULAR:
            s, r = reg.radii
            out.append(replace(reg, radii=(2 * s, 0.75 * r)))
        else:
            exc = tuple(Ball(b.center, 2 * b.radius) for b in reg.excised)
            out.append(replace(reg, radii=(0.75 * reg.outer,), excised=exc))
    new = replace(d, regions=out, refined=True, parents=parents)
    if d.refined:
        # a second shrink targets B_{(3/4)^2 R}
        new = replace(new, target=Ball(d.target.center, 0.75 * d.target.radius))
    if e is not None and not coverage(clipped(e).lattice, new):
        raise RefinementBreaksCover("shrunk regions no longer cover the target ball")
    return new


# --- certification (independent re-evaluation) ----------------------------------


def coverage(lattice, d):
    """True iff every cell of the (possibly shrunk) target ball lies in some region."""
    want = ball_mask(lattice, d.target.center, d.cover_radius())
    have = np.zeros(lattice.dims, dtype=bool)
    for reg in d.regions:
        have |= reg.mask(lattice)
    return bool(np.all(have[want]))


def _recount_sup(values, lattice, r):
    f = ScalarField(lattice, values)
    return f.sup_field(lattice.radius_key(r))


def ledger_bound(cfg, lam, stages):
    """Region-count bound from ``P_{l+1} = 2 P_l (1 + N + N_1)``, ``P_1 = max(N + 2, N_1)``.

    ``N_1`` bounds a Vitali family of ``(3/4) q``-balls in a unit ball with disjoint
    fifth-radius balls (volume packing).
    """
    q = cfg.quantum
    n = cfg.n_max(lam) + 2
    n1 = int(math.ceil((1 + 20 / (3 * q)) ** 4))
    p = max(n, n1)
    for _ in range(1, max(stages, 1)):
        p = 2 * p * (1 + n + n1)
    return p


@dataclass
class CertifyReport:
    predicates: bool
    coverage: bool
    counts: bool
    ledger: bool
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return self.predicates and self.coverage and self.counts and self.ledger

    def as_dict(self):
        return {
            "predicates": self.predicates,
            "coverage": self.coverage,
            "counts": self.counts,
            "ledger": self.ledger,
            "ok": self.ok,
            "failures": list(self.failures),
        }


def certify(e, d, cfg=None):
    """Re-verify a decomposition from scratch.

    Uses a fresh copy of the density (no shared caches) and its own evaluation
    of every definition: (a) region predicates, (b) rasterized coverage of the
    target ball, (c) region count against the recurrence bound, (d) ledger
    monotonicity and budget.
    """
    if cfg is None:
        cfg = DecompConfig(**{k: v for k, v in d.config.items() if k in (
            "gamma", "K0", "eps0", "Lambda", "test_mode", "n_override", "c_override", "annular_rule")},
            pigeon_offset=d.config.get("pigeon_offset"),
            guard_exponent=d.config.get("guard", [None, None])[0],
            guard_cells=d.config.get("guard", [None, None])[1])
    e = clipped(e)
    lat = e.lattice
    vals = np.array(e.values)
    lam = d.Lambda
    q = cfg.gamma**cfg.K0
    c = cfg.c_min(lam)
    n_max = cfg.n_max(lam)
    failures = []
    sup_cache = {}

    def sup(r):
        k = lat.radius_key(r)
        if k not in sup_cache:
            sup_cache[k] = _recount_sup(vals, lat, r)
        return sup_cache[k]

    def zb(x, r):
        return float(sup(r)[tuple(x)])

    fresh = ScalarField(lat, vals)
    check = d.parents if d.refined else d.regions
    for i, reg in enumerate(check):
        p = reg.center
        if reg.tag == ANNULAR:
            s, r = reg.radii
            inner = s * cfg.gamma if cfg.annular_rule == "gamma_s" else s / cfg.gamma
            ok = s <= 5 * q * r * (1 + 1e-12) and abs(zb(p, 2 * r) - zb(p, s)) < q
            if ok:
                near = ball_mask(lat, p, q * r)
                ok = bool(np.all(np.abs(sup(2 * r) - sup(inner))[near] >= q))
            if not ok:
                failures.append(f"region {i}: annular predicate")
        elif reg.tag == BUBBLE:
            r = reg.outer
            top = zb(p, r)
            if len(reg.excised) > n_max:
                failures.append(f"region {i}: too many excised balls")
            for b in reg.excised:
                if b.radius < c * r * (1 - 1e-12):
                    failures.append(f"region {i}: excised radius below c r")
                if not zb(b.center, b.radius) < top - q:
                    failures.append(f"region {i}: excised ball lacks the energy drop")
            light = fresh.mass_field(lat.radius_key(c * r)) < cfg.eps0 / 2
            if not np.all(light[reg.mask(lat)]):
                failures.append(f"region {i}: a cell has no light ball of radius >= c r")
        else:
            failures.append(f"region {i}: unexpected tag {reg.tag}")
    predicates = not any("region" in f for f in failures)
    cov = coverage(lat, d)
    if not cov:
        failures.append("coverage: target ball not covered")
    na, nb = d.counts
    counts = na + nb <= ledger_bound(cfg, lam, d.depth)
    if not counts:
        failures.append("counts: above the recurrence bound")
    led = list(d.ledger)
    ledger = bool(led) and all(b < a - q / 10 for a, b in zip(led, led[1:]))
    ledger = ledger and all(v < lam - (l + 1) * q / 10 + 1e-12 for l, v in enumerate(led)) if led else False
    ledger = ledger and len(led) <= int(10 * lam / q) + 1
    if not ledger:
        failures.append("ledger: not strictly decreasing within budget")
    return CertifyReport(predicates, cov, counts, ledger, failures)
