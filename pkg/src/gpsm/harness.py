"""Batch verification suites and machine-readable reports."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import complex_oracle as co
from .clifford import Signature, conjugate_array, gp, paravector_array, reverse_array
from .corpus import (bump, gaussian, holomorphic_reduction, non_slice_field, random_bumps,
                     shifted_kernel)
from .fields import FieldFunction, constant_field
from .kernels import KernelParams, SliceEmbedding, calE_array
from .operators import FDScheme, gpsm_residual
from .quadrature import VolumeRes, boundary_rule, fibered_boundary_rule
from .slices import (SliceDomain, random_unit_vectors, representation_formula, stem_to_points)
from .transforms import (ApproachPath, BoundaryData, LtParams, PompeiuRes, TeodorescuRes,
                         cauchy_boundary_integral, cauchy_pompeiu, exterior_cauchy,
                         field_orbit_violation, norm_estimate_experiment, plemelj_limits,
                         slice_preservation_check, teodorescu_detailed,
                         teodorescu_monogenicity_check)

SCHEMA_VERSION = 1
FORMATS = ("jsonl", "csv")


class ConfigError(ValueError):
    """Invalid experiment configuration (usage error)."""


# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a suite run depends on.

    Attributes:
        domain: ``{"kind": "ball", "center": [...], "radius": r}`` or
            ``{"kind": "box", "center": [...], "halfwidths": [...]}`` in stem
            coordinates; ``None`` picks the unit disc at p=0, q=1 and the
            ball of radius 1 about ``(0, .., 0, 2)`` otherwise.
        res_boundary: boundary rule resolution (``2 * res_boundary`` circle nodes).
        res_slice: radial Gauss–Legendre nodes of slice-volume rules; the
            polar direction count is twice this.
        res_eta: half-sphere resolution of fibered rules.
        levels: length of the δ-exclusion schedule.
        tol: overrides the main tolerance of every selected suite.
        t: integrability exponent of the norm experiment.
        ensemble: size of the norm-experiment ensemble.
    """

    p: int = 0
    q: int = 2
    domain: Optional[dict] = None
    res_boundary: int = 32
    res_slice: int = 24
    res_eta: int = 16
    levels: int = 5
    fd_order: int = 2
    fd_step: object = "auto"
    tol: Optional[float] = None
    seed: int = 0
    suites: tuple = ()
    out: Optional[str] = None
    format: str = "jsonl"
    t: float = 4.0
    ensemble: int = 50

    def __post_init__(self):
        try:
            Signature(self.p, self.q)
        except ValueError as e:
            raise ConfigError(f"p, q: {e}") from None
        for name in ("res_boundary", "res_slice", "res_eta"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 2:
                raise ConfigError(f"{name}: must be an integer >= 2, got {v!r}")
        if self.q == 2 and self.res_eta % 2:
            raise ConfigError("res_eta: must be even when q = 2")
        if not isinstance(self.levels, int) or self.levels < 0:
            raise ConfigError(f"levels: must be a non-negative integer, got {self.levels!r}")
        if self.fd_order not in (2, 4):
            raise ConfigError(f"fd_order: must be 2 or 4, got {self.fd_order!r}")
        if self.fd_step != "auto" and not (isinstance(self.fd_step, (int, float)) and self.fd_step > 0):
            raise ConfigError(f"fd_step: must be positive or 'auto', got {self.fd_step!r}")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError(f"tol: must be positive, got {self.tol!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format: must be one of {FORMATS}")
        unknown = [s for s in self.suites if s not in SUITES]
        if unknown:
            raise ConfigError(f"suites: unknown {unknown}; choose from {sorted(SUITES)}")
        object.__setattr__(self, "suites", tuple(self.suites))
        self.slice_domain()

    @property
    def sig(self) -> Signature:
        return Signature(self.p, self.q)

    @property
    def fd(self) -> FDScheme:
        return FDScheme(self.fd_order, self.fd_step)

    def domain_spec(self) -> dict:
        if self.domain is not None:
            return dict(self.domain)
        if (self.p, self.q) == (0, 1):
            return {"kind": "ball", "center": [0.0, 0.0], "radius": 1.0}
        return {"kind": "ball", "center": [0.0] * (self.p + 1) + [2.0], "radius": 1.0}

    def slice_domain(self) -> SliceDomain:
        spec = self.domain_spec()
        try:
            kind = spec["kind"]
            center = [float(v) for v in spec["center"]]
            if len(center) != self.p + 2:
                raise ConfigError(f"domain: center needs p+2 = {self.p + 2} coordinates")
            if kind == "ball":
                return SliceDomain.ball(center, float(spec["radius"]))
            if kind == "box":
                return SliceDomain.box(center, [float(v) for v in spec["halfwidths"]])
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"domain: {e}") from None
        raise ConfigError(f"domain: kind must be 'ball' or 'box', got {kind!r}")

    def teo_res(self) -> TeodorescuRes:
        return TeodorescuRes(VolumeRes(2 * self.res_slice, self.res_slice, max(2, self.res_slice // 4)),
                             self.res_eta, self.levels)

    def pompeiu_res(self) -> PompeiuRes:
        return PompeiuRes(self.res_boundary, self.teo_res())

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["suites"] = list(self.suites)
        d["domain"] = self.domain_spec()
        return d

    def hash(self) -> str:
        """Hash of every field that can change numerical results."""
        d = self.to_dict()
        for k in ("out", "format", "suites"):
            d.pop(k)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        d = dict(d)
        if "suites" in d:
            d["suites"] = tuple(d["suites"])
        return cls(**d)

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"config file: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(data)


# ---------------------------------------------------------------- records


def _clean(v):
    """JSON-ready copy with floats rounded-trip exactly and arrays as lists."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if np.isfinite(f) else repr(f)
    return v


def record(check: str, measured: dict, tolerance, passed: bool, inputs: Optional[dict] = None) -> dict:
    return {"check": check, "inputs": inputs or {}, "measured": measured,
            "tolerance": tolerance, "passed": bool(passed)}


@dataclass
class Report:
    config: ExperimentConfig
    records: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r["passed"] for r in self.records)

    def payload(self) -> list:
        """Records without wall times; identical across reruns of one config."""
        return [{k: v for k, v in r.items() if k != "wall_time"} for r in self.records]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["schema_version", "config_hash", "suite", "check", "passed", "tolerance",
                "wall_time", "measured", "inputs"]
        w = csv.DictWriter(buf, fieldnames=cols)
        w.writeheader()
        for r in self.records:
            row = {c: r.get(c) for c in cols}
            row["measured"] = json.dumps(r["measured"], sort_keys=True)
            row["inputs"] = json.dumps(r["inputs"], sort_keys=True)
            row["tolerance"] = json.dumps(r["tolerance"])
            w.writerow(row)
        return buf.getvalue()

    def write(self, path: Optional[str] = None, fmt: Optional[str] = None) -> str:
        fmt = fmt or self.config.format
        text = self.to_jsonl() if fmt == "jsonl" else self.to_csv()
        if path:
            with open(path, "w") as fh:
                fh.write(text)
        return text


# ---------------------------------------------------------------- suites

SUITES: dict = {}


def suite(name: str):
    def deco(fn: Callable[[ExperimentConfig], list]):
        SUITES[name] = fn
        return fn
    return deco


def _tol(cfg: ExperimentConfig, default: float) -> float:
    return default if cfg.tol is None else cfg.tol


def _rel(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


@suite("algebra-selftest")
def algebra_selftest(cfg: ExperimentConfig, samples: int = 1000) -> list:
    """Generator relations, associativity, anti-automorphisms, paravector inverse."""
    sig = cfg.sig
    n = sig.n
    rng = np.random.default_rng(cfg.seed)
    tol = _tol(cfg, 1e-12)
    E = np.eye(sig.dim)[[1 << i for i in range(n)]]
    worst = 0.0
    for i in range(n):
        for j in range(n):
            lhs = gp(E[i], E[j], n) + gp(E[j], E[i], n)
            rhs = np.zeros(sig.dim)
            rhs[0] = -2.0 if i == j else 0.0
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    A, B, C = (rng.standard_normal((samples, sig.dim)) for _ in range(3))
    nrm = lambda X: np.linalg.norm(X, axis=-1)
    scale3 = nrm(A) * nrm(B) * nrm(C)
    assoc = float(np.max(nrm(gp(gp(A, B, n), C, n) - gp(A, gp(B, C, n), n)) / scale3))
    AB = gp(A, B, n)
    scale2 = nrm(A) * nrm(B)
    conj = float(np.max(nrm(conjugate_array(AB) - gp(conjugate_array(B), conjugate_array(A), n)) / scale2))
    rev = float(np.max(nrm(reverse_array(AB) - gp(reverse_array(B), reverse_array(A), n)) / scale2))
    X = rng.standard_normal((samples, sig.point_dim))
    P = paravector_array(X, n)
    Pinv = conjugate_array(P) / np.sum(X * X, axis=1)[:, None]
    one = np.zeros(sig.dim)
    one[0] = 1.0
    inv = float(max(np.max(nrm(gp(P, Pinv, n) - one)), np.max(nrm(gp(Pinv, P, n) - one))))
    inp = {"p": sig.p, "q": sig.q, "samples": samples}
    return [
        record("anticommutation", {"max_abs": worst}, 0.0, worst == 0.0, inp),
        record("associativity", {"max_rel": assoc}, tol, assoc <= tol, inp),
        record("conjugation_anti_automorphism", {"max_rel": conj}, tol, conj <= tol, inp),
        record("reversion_anti_automorphism", {"max_rel": rev}, tol, rev <= tol, inp),
        record("paravector_inverse", {"max_abs": inv}, tol, inv <= tol, inp),
    ]


KERNEL_STEPS = (8e-3, 4e-3, 2e-3, 1e-3)


def kernel_residual_points(rng, k: int, y, sig: Signature, dmin: float = 1.5, dmax: float = 2.5):
    """``k`` points whose stem distance to ``y`` and its mirror lies in ``[dmin, dmax]``."""
    y = np.asarray(y, dtype=float)
    ym = y.copy()
    ym[-1] = -ym[-1]
    out = []
    while len(out) < k:
        Y = y + rng.uniform(-dmax, dmax, (4 * k, sig.stem_dim))
        Y[:, -1] = np.abs(Y[:, -1])
        d = np.minimum(np.linalg.norm(Y - y, axis=1), np.linalg.norm(Y - ym, axis=1))
        ok = (d >= dmin) & (d <= dmax) & (Y[:, -1] > 0.2)
        out.extend(Y[ok])
    Y = np.array(out[:k])
    return stem_to_points(Y, random_unit_vectors(rng, k, sig.q), sig)


@suite("kernel-residual")
def kernel_residual(cfg: ExperimentConfig, n_points: int = 50, steps=KERNEL_STEPS) -> list:
    """ϑ̄ 𝓔_y by finite differences at off-orbit points, under step halving."""
    sig = cfg.sig
    rng = np.random.default_rng(cfg.seed)
    eta = SliceEmbedding.first(sig.q).vec
    y = np.r_[np.zeros(sig.p + 1), 1.0]
    X = kernel_residual_points(rng, n_points, y, sig)
    f = FieldFunction(lambda P: calE_array(y, eta, P, sig), sig, name="calE_y")
    res = np.array([gpsm_residual(f, X, FDScheme(cfg.fd_order, h)) for h in steps])
    orders = np.log2(res[:-1] / res[1:])
    tol = _tol(cfg, 1e-6)
    ok_order = bool(np.all(np.abs(orders - cfg.fd_order) <= 0.3))
    inp = {"p": sig.p, "q": sig.q, "points": n_points, "steps": list(steps)}
    return [
        record("observed_order", {"orders": orders, "residuals": res}, [cfg.fd_order - 0.3, cfg.fd_order + 0.3],
               ok_order, inp),
        record("finest_residual", {"residual": res[-1]}, tol, res[-1] <= tol, inp),
    ]


@suite("representation")
def representation(cfg: ExperimentConfig, n_functions: int = 100) -> list:
    """Values at ``x_p + r w`` rebuilt from ``x_p + r w1`` and ``x_p + r w2``."""
    sig = cfg.sig
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(n_functions):
        c = rng.uniform(-1, 1, sig.stem_dim)
        f = gaussian(c, rng.uniform(1.0, 2.0), rng.standard_normal(sig.dim), sig,
                     rng.standard_normal(sig.dim), check=False).f
        xp = c[:-1] + rng.uniform(-0.5, 0.5, sig.p + 1)
        r = rng.uniform(0.1, 1.5)
        w = random_unit_vectors(rng, 1, sig.q)[0]
        while True:
            w1, w2 = random_unit_vectors(rng, 2, sig.q)
            if np.linalg.norm(w1 - w2) >= 0.1:
                break
        pt = lambda v: np.concatenate([xp, r * v])
        rec = representation_formula(f(pt(w1)), f(pt(w2)), w1, w2, w, sig)
        worst = max(worst, _rel(rec.coeffs, f(pt(w))))
    tol = _tol(cfg, 1e-12)
    return [record("reconstruction", {"max_abs": worst}, tol, worst <= tol,
                   {"p": sig.p, "q": sig.q, "functions": n_functions})]


def _piece_size(pr) -> float:
    return pr.radius if hasattr(pr, "radius") else min(pr.halfwidths)


def _interior_points(rng, D: SliceDomain, sig: Signature, k: int, margin: float):
    """Points whose stem lies ``margin`` inside D (a negative margin counts
    as a fraction of the piece size)."""
    if margin < 0:
        margin = -margin * min(_piece_size(pr) for pr in D.pieces)
    Y = D.sample(rng, k, margin=margin)
    return stem_to_points(Y, random_unit_vectors(rng, k, sig.q), sig)


# interior points of Cauchy-type checks keep 30% of the piece size from Γ;
# the trapezoid error there decays like 0.7^(nodes)
CORE = -0.3


@suite("cauchy-verify")
def cauchy_verify(cfg: ExperimentConfig, n_points: int = 20) -> list:
    """Boundary Cauchy integral of monogenic functions at interior points."""
    sig = cfg.sig
    rng = np.random.default_rng(cfg.seed)
    D = cfg.slice_domain()
    params = KernelParams(sig)
    eta = params.eta
    out = []
    if (sig.p, sig.q) == (0, 1):
        tol = _tol(cfg, 1e-8)
        radius = np.sqrt(rng.uniform(0, 0.49, n_points))
        ang = rng.uniform(0, 2 * np.pi, n_points)
        X = np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1)
        cases = {"z^2": holomorphic_reduction("z^k", sig, k=2), "1/(z-2)": holomorphic_reduction("1/(z-c)", sig, c=2.0)}
        for name, t in cases.items():
            bd = BoundaryData(t.f, fibered_boundary_rule(D, sig, 1, cfg.res_boundary), eta, D)
            vals = np.array([cauchy_boundary_integral(bd, x, params).coeffs for x in X])
            err = float(np.max(np.linalg.norm(vals - t.f(X), axis=1)))
            ref = np.array([co.cauchy_integral(t.analytic_derivatives, complex(*x)) for x in X])
            err_oracle = float(np.max(np.abs(co.to_complex(vals) - ref)))
            out.append(record(f"cauchy_{name}", {"max_abs": err, "max_abs_vs_oracle": err_oracle}, tol,
                              max(err, err_oracle) <= tol,
                              {"nodes": 2 * cfg.res_boundary, "points": n_points}))
        return out
    tol = _tol(cfg, 1e-6)
    lo, hi = D.bounding_box()
    c = hi.copy()
    c[-1] += 1.0
    f = shifted_kernel(c, params, D).f
    X = _interior_points(rng, D, sig, n_points, CORE)
    fx = f(X)
    bd = BoundaryData(f, boundary_rule(D, n=cfg.res_boundary), eta, D)
    v_slice = np.array([cauchy_boundary_integral(bd, x, params, kernel="calE").coeffs for x in X])
    bdf = BoundaryData(f, fibered_boundary_rule(D, sig, cfg.res_eta, cfg.res_boundary), eta, D)
    v_fib = np.array([cauchy_boundary_integral(bdf, x, params, kernel="K").coeffs for x in X])
    scale = float(np.max(np.linalg.norm(fx, axis=1)))
    e1 = float(np.max(np.linalg.norm(v_slice - fx, axis=1))) / scale
    e2 = float(np.max(np.linalg.norm(v_fib - fx, axis=1))) / scale
    inp = {"p": sig.p, "q": sig.q, "points": n_points, "function": "shifted kernel"}
    out.append(record("cauchy_slice_reading", {"max_rel": e1}, tol, e1 <= tol, inp))
    out.append(record("cauchy_completion_reading", {"max_rel": e2}, tol, e2 <= tol, inp))
    return out


@suite("exterior-verify")
def exterior_verify(cfg: ExperimentConfig, n_points: int = 20) -> list:
    """Exterior Cauchy formula on both sides of Γ = ∂U_η."""
    sig = cfg.sig
    rng = np.random.default_rng(cfg.seed)
    D = cfg.slice_domain()
    params = KernelParams(sig)
    eta = params.eta
    brule = boundary_rule(D, n=cfg.res_boundary)
    tol = _tol(cfg, 1e-8 if sig.q == 1 else 1e-6)
    if (sig.p, sig.q) == (0, 1):
        pole = np.array([0.3, 0.0])
        f = holomorphic_reduction("1/(z-c)", sig, c=0.3).f
        name = "1/(z-0.3)"
    else:
        pole = np.asarray(D.pieces[0].center, dtype=float)
        f = shifted_kernel(pole, params).f
        name = "shifted kernel, pole inside"
    Xout = _exterior_points(rng, D, sig, n_points, 0.5 * _piece_size(D.pieces[0]), 2.0)
    Xin = _interior_points(rng, D, sig, 4 * n_points, CORE)
    far = np.linalg.norm(_stem_of(Xin, sig) - pole, axis=1) >= 0.2
    Xin = Xin[far][:n_points]
    bd = BoundaryData(f, brule, eta, D)
    zero = np.zeros(sig.dim)
    sc = max(float(np.max(np.linalg.norm(f(Xout), axis=1))), 1.0)
    vo = np.array([exterior_cauchy(bd, x, zero, params).coeffs for x in Xout])
    vi = np.array([exterior_cauchy(bd, x, zero, params).coeffs for x in Xin])
    e_out = float(np.max(np.linalg.norm(vo + f(Xout), axis=1))) / sc
    e_in = float(np.max(np.linalg.norm(vi, axis=1))) / sc
    inp = {"function": name, "f_inf": 0.0}
    out = [record("kernel_exterior", {"max_abs": e_out}, tol, e_out <= tol, dict(inp, points=len(Xout))),
           record("kernel_interior", {"max_abs": e_in}, tol, e_in <= tol, dict(inp, points=len(Xin)))]
    const = np.zeros(sig.dim)
    const[0] = 1.5
    if sig.dim > 1:
        const[-1] = -0.5
    cf = constant_field(const, sig)
    bdc = BoundaryData(cf, brule, eta, D)
    vo = np.array([exterior_cauchy(bdc, x, const, params).coeffs for x in Xout])
    vi = np.array([exterior_cauchy(bdc, x, const, params).coeffs for x in Xin])
    e_co = float(np.max(np.linalg.norm(vo, axis=1)))
    e_ci = float(np.max(np.linalg.norm(vi - const, axis=1)))
    out.append(record("constant_exterior", {"max_abs": e_co}, tol, e_co <= tol, {"points": len(Xout)}))
    out.append(record("constant_interior", {"max_abs": e_ci}, tol, e_ci <= tol, {"points": len(Xin)}))
    return out


def _stem_of(X, sig: Signature) -> np.ndarray:
    from .slices import points_to_stem
    return points_to_stem(X, sig)


def _exterior_points(rng, D: SliceDomain, sig: Signature, k: int, dmin: float, dmax: float):
    lo, hi = D.bounding_box()
    out = []
    while len(out) < k:
        Y = lo - dmax + (hi - lo + 2 * dmax) * rng.random((8 * k, sig.stem_dim))
        Y[:, -1] = np.abs(Y[:, -1])
        d = D.signed_distance(Y)
        ok = (d >= dmin) & (d <= dmax) & (Y[:, -1] > 0.05)
        out.extend(Y[ok])
    Y = np.array(out[:k])
    return stem_to_points(Y, random_unit_vectors(rng, k, sig.q), sig)


@suite("plemelj-verify")
def plemelj_verify(cfg: ExperimentConfig, n_points: int = 4) -> list:
    """One-sided boundary limits, the jump identity and the complex oracle."""
    sig = cfg.sig
    D = cfg.slice_domain()
    params = KernelParams(sig)
    eta = params.eta
    tol = _tol(cfg, 1e-2)
    pr = D.pieces[0]
    ang = 2 * np.pi * np.arange(n_points) / n_points + 0.3
    if sig.q == 1 and sig.p == 0:
        tfun = holomorphic_reduction("z^k", sig, k=1)
        f = tfun.f
    else:
        rng = np.random.default_rng(cfg.seed)
        f = gaussian(pr.center, 0.8, rng.standard_normal(sig.dim), sig, rng.standard_normal(sig.dim),
                     check=False).f
    out = []
    worst_jump = worst_oracle = worst_pv = 0.0
    bd = BoundaryData(f, boundary_rule(D, n=cfg.res_boundary), eta, D)
    for a in ang:
        u = np.zeros(sig.stem_dim)
        u[0], u[-1] = np.cos(a), np.sin(a)
        x0 = np.asarray(pr.center) + pr.radius * u
        inner, outer, pv, _ = plemelj_limits(bd, ApproachPath(tuple(x0)), params)
        fx = f(stem_to_points(x0, eta.vec, sig))
        sc = max(float(np.linalg.norm(fx)), 1e-300)
        worst_jump = max(worst_jump, _rel((inner - outer).coeffs, fx) / sc)
        worst_pv = max(worst_pv, _rel(inner.coeffs, pv.coeffs + 0.5 * fx) / sc)
        if sig.q == 1 and sig.p == 0:
            ri, ro, rp = co.sokhotski(tfun.analytic_derivatives, complex(*x0))
            got = [inner.coeffs, outer.coeffs, pv.coeffs]
            ref = [co.from_complex(v) for v in (ri, ro, rp)]
            worst_oracle = max(worst_oracle, max(_rel(g, r) / max(np.linalg.norm(r), sc) for g, r in zip(got, ref)))
    inp = {"p": sig.p, "q": sig.q, "boundary_points": n_points}
    out.append(record("jump_identity", {"max_rel": worst_jump}, tol, worst_jump <= tol, inp))
    out.append(record("principal_value_identity", {"max_rel": worst_pv}, tol, worst_pv <= tol, inp))
    if sig.q == 1 and sig.p == 0:
        out.append(record("sokhotski_oracle", {"max_rel": worst_oracle}, tol, worst_oracle <= tol, inp))
    return out


POMPEIU_LEVELS = (PompeiuRes(4, TeodorescuRes(VolumeRes(8, 4, 2), 4, 3)),
                  PompeiuRes(8, TeodorescuRes(VolumeRes(16, 8, 3), 8, 4)))


@suite("pompeiu-verify")
def pompeiu_verify(cfg: ExperimentConfig, n_points: int = 10) -> list:
    """Cauchy–Pompeiu reconstruction of a smooth non-monogenic field.

    ϑ̄f is taken by finite differences, as for a black-box field.  The
    reconstruction is repeated on two coarser resolutions to show
    monotone improvement toward the configured one.
    """
    sig = cfg.sig
    rng = np.random.default_rng(cfg.seed)
    D = cfg.slice_domain()
    eta = SliceEmbedding.first(sig.q)
    centre = np.asarray(D.pieces[0].center, dtype=float)
    f = gaussian(centre, 0.7, rng.standard_normal(sig.dim), sig, rng.standard_normal(sig.dim), D).f
    X = _interior_points(rng, D, sig, n_points, 0.1)
    fx = f(X)
    sc = float(np.max(np.linalg.norm(fx, axis=1)))
    errs = []
    for res in POMPEIU_LEVELS + (cfg.pompeiu_res(),):
        rec = np.array([cauchy_pompeiu(f, D, eta, x, res, cfg.fd, analytic=False)[0].coeffs for x in X])
        errs.append(float(np.max(np.linalg.norm(rec - fx, axis=1))) / sc)
    tol = _tol(cfg, 2e-2)
    mono = all(b < a for a, b in zip(errs[:-1], errs[1:]))
    inp = {"p": sig.p, "q": sig.q, "points": n_points, "function": "gaussian"}
    return [record("reconstruction", {"max_rel": errs[-1]}, tol, errs[-1] <= tol, inp),
            record("refinement_monotone", {"errors": errs}, "strictly decreasing", mono, inp)]


def _teo_bump(cfg: ExperimentConfig, rng):
    sig = cfg.sig
    D = cfg.slice_domain()
    pr = D.pieces[0]
    centre = np.asarray(pr.center, dtype=float)
    R = 0.8 * (pr.radius if hasattr(pr, "radius") else min(pr.halfwidths))
    R = min(R, 0.9 * centre[-1])
    return D, centre, R, bump(centre, R, rng.standard_normal(sig.dim), sig, rng.standard_normal(sig.dim), D)


MONOGENICITY_STEPS = (4e-2, 2e-2, 1e-2)


@suite("teodorescu-verify")
def teodorescu_verify(cfg: ExperimentConfig, n_points: int = 10, n_outside: int = 5,
                      n_existence: int = 100) -> list:
    """Left inverse on a bump, ϑ̄T f = 0 outside Ω_D, and existence everywhere."""
    sig = cfg.sig
    rng = np.random.default_rng(cfg.seed)
    D, centre, R, tb = _teo_bump(cfg, rng)
    f = tb.f
    res = cfg.teo_res()
    inp = {"p": sig.p, "q": sig.q}
    Y = SliceDomain.ball(centre, 0.75 * R).sample(rng, n_points)
    X = stem_to_points(Y, random_unit_vectors(rng, n_points, sig.q), sig)
    fx = f(X)
    vals = np.array([teodorescu_detailed(f.vartheta_bar, D, x, None, res)[0].coeffs for x in X])
    err = float(np.max(np.linalg.norm(vals - fx, axis=1)) / np.max(np.linalg.norm(fx, axis=1)))
    out = [record("left_inverse", {"max_rel": err}, _tol(cfg, 2e-2), err <= _tol(cfg, 2e-2),
                  dict(inp, points=n_points))]
    Xo = _exterior_points(rng, D, sig, n_outside, 0.3, 1.0)
    resid = np.array([teodorescu_monogenicity_check(f, D, sig, Xo, FDScheme(2, h), None, res)
                      for h in MONOGENICITY_STEPS])
    orders = np.log2(resid[:-1] / resid[1:])
    ok = bool(np.all(np.abs(orders - 2.0) <= 0.3))
    out.append(record("outside_monogenic_order", {"residuals": resid, "orders": orders}, [1.7, 2.3], ok,
                      dict(inp, points=n_outside, steps=list(MONOGENICITY_STEPS))))
    g = gaussian(centre, 0.6, rng.standard_normal(sig.dim), sig, rng.standard_normal(sig.dim), D).f
    k_in = n_existence * 3 // 5
    Xe = np.concatenate([_interior_points(rng, D, sig, k_in, 1e-3),
                         _exterior_points(rng, D, sig, n_existence - k_in, 1e-3, 3.0)])
    finite = True
    worst = 0.0
    for x in Xe:
        v, info = teodorescu_detailed(g, D, x, None, res)
        finite &= bool(np.all(np.isfinite(v.coeffs)))
        for r in info["ratios"]:
            if len(r):
                worst = max(worst, float(np.max(r)))
    out.append(record("existence", {"all_finite": finite, "max_delta_ratio": worst}, 0.5,
                      finite and worst < 0.5, dict(inp, points=len(Xe), levels=res.levels)))
    return out


NORM_LEVELS = ((8, 4, TeodorescuRes(VolumeRes(16, 8, 4), 4, 0)),
               (16, 8, TeodorescuRes(VolumeRes(32, 16, 8), 8, 0)))


@suite("norm-estimate")
def norm_estimate(cfg: ExperimentConfig) -> list:
    """Empirical ``|T f|_t / |f|_t`` over a random bump ensemble at two resolutions."""
    sig = cfg.sig
    lt = LtParams(cfg.t, sig.q, sig.p)
    if not lt.estimate_ok:
        raise ConfigError(f"t: {cfg.t} violates t > max(2p-1, 2q-1) or q > 1 for (p, q) = ({sig.p}, {sig.q})")
    D = cfg.slice_domain()
    rng = np.random.default_rng(cfg.seed)
    ens = random_bumps(rng, cfg.ensemble, D, sig)
    runs = [norm_estimate_experiment(ens, D, sig, lt, res=res, n_eta=ne, n_slice=ns) for ns, ne, res in NORM_LEVELS]
    m0, m1 = runs[0].max_ratio, runs[1].max_ratio
    change = abs(m1 - m0) / m1
    rho = runs[1].spearman
    inp = {"p": sig.p, "q": sig.q, "t": cfg.t, "ensemble": cfg.ensemble}
    return [record("max_ratio_stable", {"max_ratio": [m0, m1], "relative_change": change}, 0.1, change <= 0.1, inp),
            record("no_growth_trend", {"spearman": rho, "ratios": runs[1].ratios}, 0.3, abs(rho) < 0.3, inp)]


@suite("slice-preservation")
def slice_preservation(cfg: ExperimentConfig, n_triples: int = 20) -> list:
    """Orbit-triple consistency of T f; the non-slice field itself as negative control."""
    sig = cfg.sig
    if sig.q < 2:
        raise ConfigError("q: slice preservation needs q >= 2")
    rng = np.random.default_rng(cfg.seed)
    D, centre, R, tb = _teo_bump(cfg, rng)
    res = TeodorescuRes(cfg.teo_res().vol, cfg.res_eta, 0)
    XS = D.sample(rng, n_triples, margin=0.02)
    v = slice_preservation_check(tb.f, D, sig, None, res, stem_points=XS, seed=cfg.seed)
    tol = _tol(cfg, 2e-2)
    neg = non_slice_field(sig, domain=D).f
    v_neg = field_orbit_violation(neg, XS, sig, cfg.seed)
    v_tneg = slice_preservation_check(neg, D, sig, None, res, stem_points=XS, seed=cfg.seed)
    inp = {"p": sig.p, "q": sig.q, "triples": n_triples}
    need = 10 * max(tol, v)
    return [record("induced_bump", {"violation": v}, tol, v <= tol, inp),
            record("negative_control", {"violation": v_neg, "violation_of_T": v_tneg}, need, v_neg >= need, inp)]


# ---------------------------------------------------------------- drivers


def run(cfg: ExperimentConfig, suites=None) -> Report:
    """Run suites sequentially; a suite that raises is recorded as failed."""
    report = Report(cfg)
    h = cfg.hash()
    for name in (cfg.suites if suites is None else suites):
        t0 = time.perf_counter()
        try:
            recs = SUITES[name](cfg)
        except ConfigError:
            raise
        except Exception as e:  # noqa: BLE001 - surfaced in the report
            recs = [record("error", {"error": f"{type(e).__name__}: {e}"}, None, False)]
        wall = time.perf_counter() - t0
        for r in recs:
            r = dict(r, suite=name, schema_version=SCHEMA_VERSION, config_hash=h, wall_time=wall)
            report.records.append(_clean(r))
    return report


def _main_error(records) -> Optional[float]:
    vals = []
    for r in records:
        for k in ("max_abs", "max_rel", "residual", "violation"):
            if k in r["measured"] and isinstance(r["measured"][k], float):
                vals.append(r["measured"][k])
    return max(vals) if vals else None


def refine(cfg: ExperimentConfig, name: str, level: int) -> ExperimentConfig:
    """Configuration for refinement ``level`` of a suite (level 0 is ``cfg``)."""
    k = 2 ** level
    if name == "kernel-residual":
        base = cfg.fd_step if cfg.fd_step != "auto" else 8e-3
        return cfg.replace(fd_step=base / k)
    return cfg.replace(res_boundary=cfg.res_boundary * k, res_slice=cfg.res_slice * k,
                       res_eta=cfg.res_eta * k)


def convergence_table(cfg: ExperimentConfig, name: str, levels) -> Report:
    """Rerun one suite over refinement levels and report observed orders.

    For ``kernel-residual`` the refinement halves the finite-difference
    step; otherwise every resolution doubles.  The observed order between
    levels is ``log2(e_k / e_{k+1})``; a level whose error does not drop is
    flagged as not converging.
    """
    levels = list(levels)
    if len(levels) < 3:
        raise ConfigError("levels: a convergence table needs at least 3 levels")
    if name not in SUITES:
        raise ConfigError(f"suite: unknown {name!r}")
    report = Report(cfg)
    errs = []
    t0 = time.perf_counter()
    for lv in levels:
        c = refine(cfg, name, lv)
        if name == "kernel-residual":
            sig = c.sig
            rng = np.random.default_rng(c.seed)
            y = np.r_[np.zeros(sig.p + 1), 1.0]
            X = kernel_residual_points(rng, 50, y, sig)
            eta = SliceEmbedding.first(sig.q).vec
            f = FieldFunction(lambda P: calE_array(y, eta, P, sig), sig)
            errs.append(gpsm_residual(f, X, c.fd))
        else:
            errs.append(_main_error(run(c, [name]).records))
    e = np.asarray(errs, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        orders = np.log2(e[:-1] / e[1:])
    converging = [bool(b < a) for a, b in zip(e[:-1], e[1:])]
    rec = record("convergence", {"levels": levels, "errors": e, "orders": orders, "converging": converging},
                 None, all(converging), {"suite": name})
    rec = dict(rec, suite="convergence", schema_version=SCHEMA_VERSION, config_hash=cfg.hash(),
               wall_time=time.perf_counter() - t0)
    report.records.append(_clean(rec))
    return report
