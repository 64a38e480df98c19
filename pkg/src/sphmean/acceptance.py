"""Numerical acceptance criteria, shared by ``sphmean selftest`` and the tests.

Each ``criterion_*`` function returns a :class:`CriterionResult` holding every
measured quantity next to its threshold.
"""

from __future__ import annotations

import filecmp
import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig
from .forward import (
    Bump,
    Phantom,
    eval_phantom,
    forward_data,
    spherical_mean,
    wave_from_means_even,
    wave_from_means_odd,
)
from .geometry import Ellipsoid, SmoothConvexDomain2D, ball_volume
from .inversion import (
    backproject_table,
    filter_data,
    make_grid,
    means_constant,
    reconstruct_elliptical,
    reconstruct_means,
    reconstruction_error,
    universal_backprojection_wave,
)
from .kernels import KernelEvaluator, kernel_k, smoothing_K
from .transforms import (
    ProfileGrid,
    ddr_stack,
    hilbert_transform,
    pv_integral,
    radon_indicator,
    radon_indicator_numeric,
)

__all__ = [
    "CriterionResult",
    "criterion_1",
    "criterion_2",
    "criterion_3",
    "criterion_4",
    "criterion_5",
    "criterion_6",
    "criterion_7",
    "criterion_8",
    "run_suite",
    "ellipse_setup",
    "ball_setup",
]


@dataclass
class Check:
    name: str
    measured: float
    threshold: float
    op: str = "<="

    @property
    def passed(self) -> bool:
        if self.op == "==":
            return self.measured == self.threshold
        return bool(self.measured <= self.threshold)

    def text(self) -> str:
        return f"{self.name}={self.measured:.3g} {self.op} {self.threshold:.3g}"


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0
    time_limit: float = math.inf

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks) and self.seconds < self.time_limit

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        parts = "; ".join(c.text() for c in self.checks)
        limit = f" < {self.time_limit:.0f}s" if math.isfinite(self.time_limit) else ""
        return f"[{status}] criterion {self.number} {self.title}: {parts}; runtime={self.seconds:.1f}s{limit}"

    def as_dict(self) -> dict:
        return {
            "criterion": self.number,
            "title": self.title,
            "passed": self.passed,
            "seconds": self.seconds,
            "time_limit": self.time_limit if math.isfinite(self.time_limit) else None,
            "checks": [{"name": c.name, "measured": c.measured, "threshold": c.threshold,
                        "op": c.op, "passed": c.passed} for c in self.checks],
        }


class _Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


# ----------------------------------------------------------- shared setups


def ellipse_setup():
    domain = Ellipsoid([1.0, 0.7])
    phantom = Phantom([Bump((0.3, 0.1), 0.25, 6, 1.0), Bump((-0.35, -0.15), 0.2, 6, 0.6)])
    return domain, phantom


def ball_setup():
    domain = Ellipsoid([1.0, 1.0, 1.0])
    phantom = Phantom([Bump((0.2, -0.1, 0.15), 0.35, 7, 1.0)])
    return domain, phantom


def superellipse_setup():
    domain = SmoothConvexDomain2D.superellipse(a=1.0, b=0.8, p=3.0, smoothing=0.2)
    phantom = Phantom([Bump((0.25, 0.1), 0.3, 6, 1.0), Bump((-0.3, -0.2), 0.25, 6, 0.7)])
    return domain, phantom


def _truth(grid, phantom):
    return grid.with_values(eval_phantom(phantom, grid.interior_points()))


def _pairs_inside(rng, sampler, contains, count):
    out = []
    while len(out) < count:
        x0, x1 = sampler(rng), sampler(rng)
        if contains(x0) and contains(x1) and np.linalg.norm(x1 - x0) > 1e-3:
            out.append((x0, x1))
    return out


# --------------------------------------------------------------- criteria


def criterion_1() -> CriterionResult:
    res = CriterionResult(1, "transform goldens", time_limit=5.0)
    with _Timer() as tm:
        prof = ProfileGrid.from_function(lambda s: np.sqrt(np.maximum(0.0, 1.0 - s * s)), -4.0, 4.0, 8192)
        h = hilbert_transform(prof)
        res.checks.append(Check("|Hphi(0.5)+0.5|", abs(float(h(0.5)) + 0.5), 1e-3))
        res.checks.append(Check("|Hphi(2)-(-2+sqrt3)|", abs(float(h(2.0)) - (-2.0 + math.sqrt(3.0))), 1e-3))
        rng = np.random.default_rng(11)
        for n in (2, 3, 4):
            ball = Ellipsoid([1.0] * n)
            omega = rng.normal(size=n)
            omega /= np.linalg.norm(omega)
            ref = ball_volume(n - 1)
            res.checks.append(Check(f"analytic R(n={n})", abs(radon_indicator(ball, omega, 0.0) - ref), 1e-10))
            res.checks.append(Check(f"numeric R(n={n})", abs(radon_indicator_numeric(ball, omega, 0.0) - ref), 1e-6))
    res.seconds = tm.seconds
    return res


def criterion_2(count: int = 100, seed: int = 2) -> CriterionResult:
    res = CriterionResult(2, "ellipse kernel vanishes", time_limit=30.0)
    with _Timer() as tm:
        a = np.array([1.0, 0.7])
        rng = np.random.default_rng(seed)

        def in_ellipse(x):
            return float(np.sum((x / a) ** 2)) < 0.9**2

        pairs = _pairs_inside(rng, lambda g: g.uniform(-a, a), in_ellipse, count)
        analytic = KernelEvaluator(Ellipsoid(a), route="analytic")
        res.checks.append(Check("max|k| analytic", max(abs(kernel_k(analytic, *p)) for p in pairs), 0.0, "=="))
        numeric = KernelEvaluator(SmoothConvexDomain2D.ellipse(*a), route="chebyshev", quantum=None)
        k_num = max(abs(kernel_k(numeric, *p)) for p in pairs)
        sup, _ = superellipse_setup()
        ref_ev = KernelEvaluator(sup, route="chebyshev", quantum=None)
        rng = np.random.default_rng(seed)
        sup_pairs = _pairs_inside(rng, lambda g: g.uniform([-1.0, -0.8], [1.0, 0.8]),
                                  lambda x: bool(sup.contains(x / 0.9)), count)
        ref = float(np.median([abs(kernel_k(ref_ev, *p)) for p in sup_pairs]))
        res.checks.append(Check("max|k| numeric / ref", k_num / ref, 1e-5))
    res.seconds = tm.seconds
    return res


def _ellipse_error(boundary, radii, grid_res, variant="b"):
    domain, phantom = ellipse_setup()
    data = forward_data(phantom, domain, boundary, radii)
    grid = make_grid(domain, grid_res)
    recon = reconstruct_means(data, domain, grid, variant=variant)
    return reconstruction_error(_truth(grid, phantom), recon)["relative_l2"]


def criterion_3() -> CriterionResult:
    res = CriterionResult(3, "exact inversion, n=2 ellipse (b)", time_limit=120.0)
    with _Timer() as tm:
        e1 = _ellipse_error(512, 2048, 64)
        e2 = _ellipse_error(1024, 4096, 128)
        res.checks.append(Check("rel_l2", e1, 0.02))
        res.checks.append(Check("rel_l2 ratio on doubling", e2 / e1 if e1 > 0 else 0.0, 0.6))
    res.seconds = tm.seconds
    return res


def criterion_4() -> CriterionResult:
    res = CriterionResult(4, "exact inversion, n=3 ball", time_limit=600.0)
    with _Timer() as tm:
        domain, phantom = ball_setup()
        data = forward_data(phantom, domain, 64, 1024)
        grid = make_grid(domain, 24)
        recon = reconstruct_elliptical(data, domain, grid)
        res.checks.append(Check("rel_l2", reconstruction_error(_truth(grid, phantom), recon)["relative_l2"], 0.02))
    res.seconds = tm.seconds
    return res


def criterion_5() -> CriterionResult:
    res = CriterionResult(5, "variant (a) vs (b)", time_limit=math.inf)
    with _Timer() as tm:
        for label, (domain, phantom), (nb, nr, ng) in (
            ("n=2 ellipse", ellipse_setup(), (512, 2048, 64)),
            ("n=3 ball", ball_setup(), (64, 1024, 24)),
        ):
            data = forward_data(phantom, domain, nb, nr)
            grid = make_grid(domain, ng)
            ra = reconstruct_means(data, domain, grid, variant="a")
            rb = reconstruct_means(data, domain, grid, variant="b")
            res.checks.append(Check(f"rel diff {label}", reconstruction_error(rb, ra)["relative_l2"], 0.01))
    res.seconds = tm.seconds
    return res


def criterion_6(probes: int = 20, seed: int = 6) -> CriterionResult:
    res = CriterionResult(6, "identity f = BP + Kf on superellipse", time_limit=300.0)
    with _Timer() as tm:
        domain, phantom = superellipse_setup()
        data = forward_data(phantom, domain, 512, 2048)
        rng = np.random.default_rng(seed)
        pts = []
        while len(pts) < probes:
            p = rng.uniform([-1.0, -0.8], [1.0, 0.8])
            if domain.contains(p / 0.85):
                pts.append(p)
        pts = np.array(pts)
        from .inversion import _pv_table

        filt = filter_data(data, 2, "b")
        table = _pv_table(filt, domain.diameter)
        bp = means_constant(2) * backproject_table(table, data.step, data.boundary, pts, "b")
        ev = KernelEvaluator(domain)
        kf = np.array([smoothing_K(ev, phantom, p, 64, 320) for p in pts])
        grid = make_grid(domain, 128)
        fmax = float(np.max(np.abs(eval_phantom(phantom, grid.interior_points()))))
        resid = np.abs(eval_phantom(phantom, pts) - bp - kf) / fmax
        res.checks.append(Check("max|f-BP-Kf|/max|f|", float(resid.max()), 0.05))
    res.seconds = tm.seconds
    return res


def criterion_7() -> CriterionResult:
    res = CriterionResult(7, "wave-data back-projection", time_limit=600.0)
    with _Timer() as tm:
        domain, phantom = ball_setup()
        data = forward_data(phantom, domain, 64, 1024)
        grid = make_grid(domain, 24)
        wave = wave_from_means_odd(data)
        rw = universal_backprojection_wave(wave, domain, grid)
        res.checks.append(Check("n=3 ball rel_l2", reconstruction_error(_truth(grid, phantom), rw)["relative_l2"], 0.02))
        domain, phantom = ellipse_setup()
        data = forward_data(phantom, domain, 512, 2048)
        grid = make_grid(domain, 64)
        rm = reconstruct_means(data, domain, grid)
        rw = universal_backprojection_wave(wave_from_means_even(data), domain, grid)
        res.checks.append(Check("n=2 wave vs means", reconstruction_error(rm, rw)["relative_l2"], 0.02))
    res.seconds = tm.seconds
    return res


def _pipeline_bytes(tmp: Path, cfg: RunConfig, tag: str):
    from .cli import run_forward, run_reconstruct

    out = tmp / tag
    run_forward(cfg, out / "data")
    run_reconstruct(cfg, out / "data", out)
    return out


def criterion_8() -> CriterionResult:
    res = CriterionResult(8, "micro-properties", time_limit=math.inf)
    with _Timer() as tm:
        rng = np.random.default_rng(8)
        worst = 0.0
        for domain, phantom in (ellipse_setup(), ball_setup()):
            for _ in range(20):
                x = rng.uniform(-0.5, 0.5, size=domain.dimension)
                worst = max(worst, abs(spherical_mean(phantom, x, 0.0) - eval_phantom(phantom, x)))
        res.checks.append(Check("|Mf(x,0)-f(x)|", worst, 0.0, "=="))

        domain, phantom = ellipse_setup()
        other = Phantom([Bump((0.0, 0.2), 0.3, 8, -0.4)])
        d1 = forward_data(phantom, domain, 128, 512)
        d2 = forward_data(other, domain, 128, 512)
        d12 = d1.with_values(d1.values + d2.values)
        grid = make_grid(domain, 32)
        r1 = reconstruct_means(d1, domain, grid).values
        r2 = reconstruct_means(d2, domain, grid).values
        r12 = reconstruct_means(d12, domain, grid).values
        scale = float(np.max(np.abs(r12)))
        res.checks.append(Check("linearity defect / scale", float(np.max(np.abs(r12 - r1 - r2))) / scale, 1e-12))

        one = ProfileGrid(np.ones(2001), 0.0, 2.0 / 2000)
        res.checks.append(Check("|PV golden + ln3/2|", abs(pv_integral(one, 1.0) + 0.5 * math.log(3.0)), 1e-8))

        r4 = ProfileGrid.from_function(lambda r: r**4, 0.0, 2.0, 201)
        r2p = ProfileGrid.from_function(lambda r: r**2, 0.0, 2.0, 201)
        exact = max(float(np.max(np.abs(ddr_stack(r4, 2).samples - 2.0))),
                    float(np.max(np.abs(ddr_stack(r2p, 1).samples - 1.0))))
        res.checks.append(Check("ddr_stack polynomial defect", exact, 1e-9))

        cfg = RunConfig(domain=domain.to_spec(), phantom=phantom.to_spec(), dimension=2,
                        boundary_res=64, radial_res=256, grid_res=16)
        with tempfile.TemporaryDirectory() as tmp:
            a = _pipeline_bytes(Path(tmp), cfg, "run1")
            b = _pipeline_bytes(Path(tmp), cfg, "run2")
            names = ["data/values.csv", "data/boundary.csv", "data/metadata.json", "recon.csv", "recon.pgm"]
            same = all(filecmp.cmp(a / f, b / f, shallow=False) for f in names)
        res.checks.append(Check("files differing between reruns", 0.0 if same else 1.0, 0.0, "=="))
    res.seconds = tm.seconds
    return res


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
}
QUICK = (1, 2, 3, 8)


def run_suite(level: str = "quick") -> list[CriterionResult]:
    numbers = QUICK if level == "quick" else tuple(CRITERIA)
    return [CRITERIA[k]() for k in numbers]
