import numpy as np
import pytest
from scipy.integrate import quad

from cracktip.annuli import (VERDICTS, AnnulusEnergies, convexity_check, decay_chain,
                             default_c_hat, dichotomy, energies, energy_density,
                             three_annuli_check)
from cracktip.errors import DomainError
from cracktip.linearized import ModalSolution, slow_mode, synthesize_decaying, zero_trajectory
from cracktip.numerics import CylinderGrid
from cracktip.spectrum import nu

ETA = 0.05


@pytest.fixture(scope="module")
def cylinder():
    return CylinderGrid.make(0.0, 4.0, 257, 401)


def random_genuine(rng, k_max=10):
    modes = {}
    for k in range(2, k_max + 1):
        # growing coefficients are damped so that neither branch dominates trivially
        modes[k] = (float(rng.normal()), float(rng.normal()) * np.exp(-(0.5 + nu(k)) * 2.0))
    return ModalSolution(modes)


class TestEnergies:
    def test_zero(self, cylinder):
        e = energies(zero_trajectory(cylinder), 0.0, 1.0)
        assert (e.E, e.F, e.G) == (0.0, 0.0, 0.0)

    def test_k2_closed_form(self):
        mu = nu(2) - 0.5
        closed = (nu(2) ** 4 + mu ** 4) * (1 - np.exp(-2 * mu)) / (2 * mu)
        assert closed == pytest.approx(5.5585018745, rel=1e-9)
        modal = ModalSolution({2: (np.exp(mu * 1.0), 0.0)})  # unit coefficient at t = 1
        assert energies(modal, 1.0, 2.0).E == pytest.approx(closed, rel=1e-10)

    def test_k2_quadrature_oracle(self, cylinder):
        # independent adaptive quadrature of the same integrand, on the sampled path
        mu = nu(2) - 0.5
        ref, _ = quad(lambda t: (nu(2) ** 4 + mu ** 4) * np.exp(-2 * mu * t), 0.0, 1.0)
        traj = synthesize_decaying({2: 1.0}, grid=cylinder)
        sampled = energies(traj, 0.0, 1.0, path="finite-difference")
        assert sampled.path == "finite-difference"
        assert sampled.E == pytest.approx(ref, rel=1e-5)

    def test_slow_mode_content(self, cylinder):
        e = energies(slow_mode(1, 0, 0, cylinder), 0.0, 1.0)
        assert e.E < 1e-20 and e.F > 1

    def test_g_is_max(self):
        modal = ModalSolution({2: (1.0, 0.0), 3: (0.0, 1e-3)})
        e = energies(modal, 0.0, 1.0, c0=0.3)
        assert e.G == max(e.E, 0.3 * e.F)

    def test_quadratic_scaling(self, cylinder):
        traj = synthesize_decaying({2: 0.3, 4: -1.0}, lambda_inf=0.2, grid=cylinder)
        base = energies(traj, 1.0, 2.0)
        for c in (-2.0, 0.5, 3.0):
            assert energies(traj.scaled(c), 1.0, 2.0).G == pytest.approx(c * c * base.G, rel=1e-12)

    def test_range_errors(self, cylinder):
        traj = zero_trajectory(cylinder)
        with pytest.raises(DomainError):
            energies(traj, 3.5, 4.5)
        with pytest.raises(DomainError):
            energies(traj, 1.0, 1.0)
        with pytest.raises(DomainError):
            energies(traj, 0.0, 1.0, c0=0.0)

    def test_negative_energy_rejected(self):
        with pytest.raises(DomainError):
            AnnulusEnergies(-1.0, 0.0, 0.0, (0.0, 1.0))


class TestDichotomy:
    def test_rule(self):
        assert dichotomy(1.0, 0.5, 0.1, ETA) == "hypothesis_false"
        assert dichotomy(1.0, 1.0, 1.1, ETA) == "implication_holds"
        assert dichotomy(1.0, 1.0, 1.0, ETA) == "VIOLATION"
        assert dichotomy(0.0, 0.0, 0.0, ETA) == "hypothesis_false"

    def test_growth_control(self):
        v = three_annuli_check(ModalSolution({2: (0.0, 1.0)}), 0.0, ETA)
        assert v.verdict == "implication_holds"
        first, middle, last = v.values
        assert middle / first == pytest.approx(np.exp(2 * (0.5 + nu(2))), rel=1e-8)

    def test_decay_control(self):
        v = three_annuli_check(ModalSolution({2: (1.0, 0.0)}), 0.0, ETA)
        assert v.verdict == "hypothesis_false"
        assert v.values[1] / v.values[0] == pytest.approx(np.exp(-2 * (nu(2) - 0.5)), rel=1e-8)

    def test_zero(self, cylinder):
        assert three_annuli_check(zero_trajectory(cylinder), 0.0, ETA).verdict == "hypothesis_false"

    def test_slow_mode_precondition(self, cylinder):
        slow = slow_mode(1, 0, 0, cylinder)
        v = three_annuli_check(slow, 0.0, ETA, which="G")
        assert v.verdict == "precondition_violated"
        assert v.condition_values[0] == pytest.approx(-1.5 * np.pi, abs=1e-6)
        # all content sits in the slow block: E vanishes and G = c0 F
        assert all(a.E < 1e-20 and a.G == a.c0 * a.F for a in v.annuli)

    def test_rederived_condition_also_excludes_slow_mode(self, cylinder):
        v = three_annuli_check(slow_mode(1, 0, 0, cylinder), 0.0, ETA, which="G", condition="rederived")
        assert v.verdict == "precondition_violated"

    def test_g_on_decaying_modes(self, cylinder):
        traj = synthesize_decaying({2: 1.0, 3: 0.5}, grid=cylinder)
        v = three_annuli_check(traj, 0.0, ETA, which="G", condition="rederived")
        assert v.verdict == "hypothesis_false"

    def test_random_genuine_never_violate(self):
        rng = np.random.default_rng(20240)
        seen = set()
        for _ in range(200):
            v = three_annuli_check(random_genuine(rng), 0.0, ETA)
            assert v.verdict != "VIOLATION"
            seen.add(v.verdict)
        assert seen <= set(VERDICTS)

    def test_validation(self, cylinder):
        traj = zero_trajectory(cylinder)
        with pytest.raises(DomainError):
            three_annuli_check(traj, 2.0)
        with pytest.raises(DomainError):
            three_annuli_check(traj, 0.0, which="F")
        with pytest.raises(DomainError):
            three_annuli_check(traj, 0.0, eta=1.5)

    def test_report(self):
        d = three_annuli_check(ModalSolution({2: (0.0, 1.0)}), 0.0).as_dict()
        assert d["verdict"] == "implication_holds" and len(d["annuli"]) == 3


class TestDecayChain:
    def test_geometric_decay(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            modal = ModalSolution({k: (float(rng.normal()), 0.0) for k in range(2, 11)})
            ratios = decay_chain(modal, 6)
            assert np.all(ratios <= 1 - ETA)

    def test_single_mode_ratio(self):
        ratios = decay_chain(ModalSolution({3: (1.0, 0.0)}), 4, which="E")
        np.testing.assert_allclose(ratios, np.exp(-2 * (nu(3) - 0.5)), rtol=1e-10)


class TestConvexity:
    def test_c_hat(self):
        assert default_c_hat() == pytest.approx(2 * (nu(2) - 0.5) ** 2)

    @pytest.mark.parametrize("k", [2, 3, 7])
    @pytest.mark.parametrize("C,D", [(1.0, 0.0), (0.0, 1.0), (1.0, -1.0), (2.0, 0.5)])
    def test_single_mode_margin(self, k, C, D):
        modal = ModalSolution({k: (C, D)})
        h = energy_density(modal, np.linspace(-1, 1, 201))
        margin = convexity_check(modal, (-1.0, 1.0))
        assert margin >= -1e-9 * np.max(h)

    def test_h_second_derivative(self):
        modal = ModalSolution({2: (1.0, 0.3), 4: (-0.5, 0.01)})
        t, e = 0.4, 1e-3
        fd = (energy_density(modal, t + e) - 2 * energy_density(modal, t) + energy_density(modal, t - e)) / e ** 2
        assert energy_density(modal, t, 2) == pytest.approx(fd, rel=1e-5)

    def test_zero(self, cylinder):
        assert convexity_check(zero_trajectory(cylinder), (0.5, 3.5)) == 0.0

    def test_sampled_path(self, cylinder):
        traj = synthesize_decaying({2: 1.0, 3: -0.4}, grid=cylinder)
        from cracktip.linearized import LinearizedTrajectory
        sampled = LinearizedTrajectory(traj.grid, traj.v, traj.lam)
        assert convexity_check(sampled, (0.5, 3.5)) >= 0
