"""End-to-end acceptance checks.

Ten criteria, each printing one PASS/FAIL line. Fixtures are frozen (seeds,
sizes, tolerances), oracles are closed forms, and runtime budgets are
asserted where a criterion carries one.
"""

import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy import integrate

import fundlim as fl
from fundlim.cli import EXIT_OK, main
from fundlim.controllers import StaticGain, ZeroController

from conftest import assert_complex_sets_close, companion_realization

pytestmark = pytest.mark.filterwarnings("ignore::fundlim.AnalysisWarning")

MASTER_SEED = 20250816


@contextmanager
def criterion(capsys, number, name, budget_seconds=None):
    start = time.perf_counter()
    failed = False
    try:
        yield
        elapsed = time.perf_counter() - start
        if budget_seconds is not None:
            assert elapsed < budget_seconds, (
                f"criterion {number:02d} took {elapsed:.1f}s, budget {budget_seconds}s"
            )
    except BaseException:
        failed = True
        raise
    finally:
        with capsys.disabled():
            print(f"ACCEPTANCE {number:02d} {name}: {'FAIL' if failed else 'PASS'}", flush=True)


def scalar_plant(a):
    return fl.StateSpaceModel([[a]], [1.0], [1.0])


def static_gain_error_variance(a, c, sigma):
    # Stationary variance of e = d - c x in the loop x+ = (a - c) x + d.
    return sigma**2 * (c**2 / (1.0 - (a - c) ** 2) + 1.0)


def test_01_constant_fidelity(capsys):
    with criterion(capsys, 1, "constant fidelity", budget_seconds=1.0):
        assert abs(fl.cp_constant(2.0) - 0.241971) <= 1e-6
        assert fl.cp_constant(2.0) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi * math.e), abs=1e-15)
        assert fl.cp_constant(math.inf) == 0.5
        assert 0.495 <= fl.cp_constant(1000.0) <= 0.5


def test_02_stable_plant_tightness(capsys):
    with criterion(capsys, 2, "stable-plant tightness (p=2, Gaussian)", budget_seconds=30.0):
        cfg = fl.SimulationConfig(horizon=200, trajectories=100_000, seed=1)
        result = fl.run_closed_loop(scalar_plant(0.5), ZeroController(), fl.GaussianIID(1.0), cfg)
        report = fl.error_bound_p2(
            fl.analyze_plant(scalar_plant(0.5)), fl.entropy_summary(fl.GaussianIID(1.0))
        )
        assert report.bound_value == pytest.approx(1.0, rel=1e-12)
        ratio = result.error_tail[2.0] / report.bound_value
        assert 0.98 <= ratio <= 1.03
        assert fl.verify_bound(result, report).satisfied


def test_03_unstable_plant_tightness(capsys):
    with criterion(capsys, 3, "unstable-plant tightness (p=2, Gaussian)", budget_seconds=60.0):
        a, c, sigma = 2.0, 1.5, 1.0
        # The variance-optimal static gain for a = 2 is c = 1.5 and lands
        # exactly on the information floor 4 sigma^2.
        floor = static_gain_error_variance(a, c, sigma)
        assert floor == pytest.approx(4.0, rel=1e-12)

        cfg = fl.SimulationConfig(horizon=300, trajectories=100_000, seed=2)
        result = fl.run_closed_loop(scalar_plant(a), StaticGain(c), fl.GaussianIID(sigma), cfg)
        report = fl.error_bound_p2(
            fl.analyze_plant(scalar_plant(a)), fl.entropy_summary(fl.GaussianIID(sigma))
        )
        assert report.variance_floor() == pytest.approx(4.0, rel=1e-12)
        tail_variance = result.error_tail[2.0] ** 2
        assert 0.95 <= tail_variance / 4.0 <= 1.05
        assert fl.verify_bound(result, report).satisfied


def test_04_suboptimal_controller_strictness(capsys):
    with criterion(capsys, 4, "strictness under a suboptimal controller", budget_seconds=60.0):
        a, c, sigma = 2.0, 2.0, 1.0  # deadbeat gain, not variance-optimal
        assert static_gain_error_variance(a, c, sigma) == pytest.approx(5.0, rel=1e-12)

        cfg = fl.SimulationConfig(horizon=300, trajectories=100_000, seed=2)
        result = fl.run_closed_loop(scalar_plant(a), StaticGain(c), fl.GaussianIID(sigma), cfg)
        tail_variance = result.error_tail[2.0] ** 2
        assert abs(tail_variance / 4.0 - 1.25) <= 0.05


def test_05_sup_norm_tightness(capsys):
    with criterion(capsys, 5, "p=inf tightness (uniform)", budget_seconds=10.0):
        cfg = fl.SimulationConfig(
            horizon=100, trajectories=10_000, seed=3, p_list=(math.inf,)
        )
        result = fl.run_closed_loop(scalar_plant(0.5), ZeroController(), fl.UniformIID(1.0), cfg)
        report = fl.error_bound_pinf(
            fl.analyze_plant(scalar_plant(0.5)), fl.entropy_summary(fl.UniformIID(1.0))
        )
        assert report.bound_value == pytest.approx(1.0, rel=1e-12)
        sample_max = result.error_tail[math.inf]
        assert 0.999 <= sample_max <= 1.0
        assert fl.verify_bound(result, report).satisfied


def test_06_prediction_floor_coincidence(capsys):
    with criterion(capsys, 6, "one-step prediction floor coincidence", budget_seconds=5.0):
        dist = fl.GaussianAR((0.9,), 1.0)
        spectrum = dist.power_spectrum(8192)
        assert abs(fl.szego_log_integral(spectrum)) <= 1e-3

        chars = fl.analyze_plant(scalar_plant(0.5))
        report = fl.error_bound_spectral(2.0, chars, spectrum, dist.negentropy_rate())
        assert abs(report.variance_floor() - 1.0) <= 1e-3


def test_07_zero_machinery(capsys):
    with criterion(capsys, 7, "transmission zero machinery"):
        model = companion_realization([1.0, -2.0], [1.0, 0.0, 0.0])  # (z - 2) / z^2
        chars = fl.analyze_plant(model)
        assert_complex_sets_close(chars.finite_zeros, [2.0], atol=1e-8)
        assert chars.nmp_zero_product == pytest.approx(2.0, abs=1e-8)
        assert chars.markov_gain == pytest.approx(1.0, abs=1e-12)

        report = fl.output_bound(2.0, chars, fl.entropy_summary(fl.GaussianIID(1.0)))
        assert abs(report.bound_value - 2.0) <= 1e-9


def test_08_negentropy_closed_form(capsys):
    with criterion(capsys, 8, "negentropy closed form"):
        expected = 0.5 * math.log2(2.0 * math.pi * math.e / 3.0) - 1.0
        got = fl.UniformIID(1.0).negentropy_rate()
        assert got == pytest.approx(expected, abs=1e-12)
        assert abs(got - 0.2546) <= 1e-4
        assert fl.GaussianIID(1.0).negentropy_rate() == 0.0
        assert fl.GaussianIID(0.37).negentropy_rate() == 0.0
        assert fl.GaussianAR((0.9,), 1.0).negentropy_rate() == 0.0
        assert fl.GaussianAR((0.5, -0.25), 2.0).negentropy_rate() == 0.0


def random_companion(rng, allow_unstable=True):
    """Random SISO realization with poles kept away from the unit circle."""
    n = int(rng.integers(1, 5))
    poles = []
    while len(poles) < n:
        if n - len(poles) >= 2 and rng.random() < 0.4:
            r = rng.uniform(0.2, 0.95) if (not allow_unstable or rng.random() < 0.5) else rng.uniform(1.05, 2.5)
            theta = rng.uniform(0.1, math.pi - 0.1)
            poles += [r * np.exp(1j * theta), r * np.exp(-1j * theta)]
        else:
            mag = rng.uniform(0.2, 0.95) if (not allow_unstable or rng.random() < 0.5) else rng.uniform(1.05, 2.5)
            poles.append(mag * (1.0 if rng.random() < 0.5 else -1.0))
    den = np.real(np.poly(poles))
    deg_num = int(rng.integers(0, n))
    num = rng.normal(size=deg_num + 1)
    num[0] = np.sign(num[0]) * (abs(num[0]) + 0.5)
    return companion_realization(num, den), poles


def random_disturbance(rng):
    kind = int(rng.integers(0, 4))
    if kind == 0:
        return fl.GaussianIID(float(rng.uniform(0.3, 3.0)))
    if kind == 1:
        return fl.UniformIID(float(rng.uniform(0.3, 3.0)))
    if kind == 2:
        return fl.GeneralizedGaussianIID(float(rng.uniform(1.0, 8.0)), float(rng.uniform(0.3, 3.0)))
    order = int(rng.integers(1, 4))
    coeffs = np.real(np.poly(rng.uniform(-0.85, 0.85, size=order)))
    return fl.GaussianAR(tuple(-coeffs[1:]), float(rng.uniform(0.3, 3.0)))


def test_09_property_suites(capsys):
    with criterion(capsys, 9, "randomized property suites", budget_seconds=120.0):
        rng = np.random.default_rng(MASTER_SEED)

        # (i) plant-aware floor dominates the plant-free floor; they agree
        # exactly when every pole sits inside the closed unit disk.
        for _ in range(100):
            model, poles = random_companion(rng)
            chars = fl.analyze_plant(model)
            summary = fl.entropy_summary(random_disturbance(rng))
            p = math.inf if rng.random() < 0.2 else float(rng.uniform(1.0, 16.0))
            plant_aware = fl.error_bound_lti(p, chars, summary)
            plant_free = fl.error_bound_generic(p, summary)
            assert plant_aware.bound_value >= plant_free.bound_value
            if max(abs(z) for z in poles) <= 1.0:
                assert chars.unstable_pole_product == 1.0
                assert plant_aware.bound_value == plant_free.bound_value
            else:
                assert plant_aware.bound_value > plant_free.bound_value

        # (ii) plant characteristics survive a change of state coordinates.
        for _ in range(100):
            model, _ = random_companion(rng)
            n = model.n
            q, _ = np.linalg.qr(rng.normal(size=(n, n)))
            t = q @ np.diag(rng.uniform(0.5, 2.0, size=n))
            moved = fl.StateSpaceModel(
                t @ model.A @ np.linalg.inv(t), t @ model.B, model.C @ np.linalg.inv(t)
            )
            ref, got = fl.analyze_plant(model), fl.analyze_plant(moved)
            assert got.relative_degree == ref.relative_degree
            assert got.markov_gain == pytest.approx(ref.markov_gain, rel=1e-7, abs=1e-9)
            assert got.unstable_pole_product == pytest.approx(ref.unstable_pole_product, rel=1e-7)
            assert got.nmp_zero_product == pytest.approx(ref.nmp_zero_product, rel=1e-5)
            assert_complex_sets_close(got.finite_zeros, ref.finite_zeros, atol=1e-5)

        # (iii) scaling the disturbance by s > 0 scales every bound by s.
        for _ in range(100):
            model, _ = random_companion(rng)
            chars = fl.analyze_plant(model)
            dist = random_disturbance(rng)
            s = float(2.0 ** rng.uniform(-3.0, 3.0))
            p = math.inf if rng.random() < 0.2 else float(rng.uniform(1.0, 16.0))
            base_summary, moved_summary = fl.entropy_summary(dist), fl.entropy_summary(dist.scaled(s))
            pairs = [
                (
                    fl.error_bound_lti(p, chars, base_summary),
                    fl.error_bound_lti(p, chars, moved_summary),
                ),
                (
                    fl.error_bound_generic(p, base_summary),
                    fl.error_bound_generic(p, moved_summary),
                ),
                (
                    fl.output_bound(p, chars, base_summary),
                    fl.output_bound(p, chars, moved_summary),
                ),
                (
                    fl.error_bound_spectral(2.0, chars, dist.power_spectrum(1024), dist.negentropy_rate()),
                    fl.error_bound_spectral(
                        2.0, chars, dist.scaled(s).power_spectrum(1024), dist.scaled(s).negentropy_rate()
                    ),
                ),
            ]
            for base, moved in pairs:
                assert moved.bound_value == pytest.approx(s * base.bound_value, rel=1e-9)

        # (iv) the spectral route agrees with the entropy route.
        chars = fl.analyze_plant(scalar_plant(0.5))
        for _ in range(100):
            dist = random_disturbance(rng)
            spectral = fl.error_bound_spectral(
                2.0, chars, dist.power_spectrum(4096), dist.negentropy_rate()
            )
            direct = fl.error_bound_p2(chars, fl.entropy_summary(dist))
            assert spectral.bound_value == pytest.approx(direct.bound_value, rel=1e-3)

        # (v) max-entropy density: unit mass and the stated moment constraint.
        # Pure relative quadrature control: the p-th moment can sit near
        # 1e-9, far below quad's default absolute tolerance.
        quad_opts = {"epsabs": 0.0, "epsrel": 1e-10, "limit": 200}
        for _ in range(100):
            p = float(rng.uniform(1.0, 20.0))
            mu = float(2.0 ** rng.uniform(-3.0, 3.0))
            mass, _ = integrate.quad(
                lambda x: fl.max_entropy_pdf(p, mu, x), 0, np.inf, **quad_opts
            )
            assert abs(2.0 * mass - 1.0) <= 1e-6
            moment, _ = integrate.quad(
                lambda x: x**p * fl.max_entropy_pdf(p, mu, x), 0, np.inf, **quad_opts
            )
            assert abs(2.0 * moment / mu**p - 1.0) <= 1e-6


def test_10_report_determinism(capsys, tmp_path):
    with criterion(capsys, 10, "report determinism"):
        plant = tmp_path / "plant.json"
        plant.write_text(json.dumps({"A": [[0.5]], "B": [1.0], "C": [1.0]}))
        dist = tmp_path / "dist.json"
        dist.write_text(json.dumps({"type": "iid_gaussian", "sigma": 1.0}))

        def one_run(tag):
            out_dir = tmp_path / tag
            code = main([
                "verify", "--plant", str(plant), "--dist", str(dist),
                "--controller", "gain:0.3", "--horizon", "80", "--traj", "5000",
                "--seed", "7", "--p", "2,inf", "--out", str(out_dir),
            ])
            assert code == EXIT_OK
            payload = json.loads((out_dir / "verify_report.json").read_text())
            del payload["manifest"]["timestamp"]
            return (
                json.dumps(payload, indent=2, sort_keys=True).encode(),
                (out_dir / "verify_norms.csv").read_bytes(),
            )

        first_report, first_csv = one_run("first")
        second_report, second_csv = one_run("second")
        assert first_report == second_report
        assert first_csv == second_csv
