from itertools import product
from math import comb

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from oracles import UnreducedSystem
from sparseips.errors import CycleError, IntegratorError
from sparseips.graphs import DegreeDistribution as DD
from sparseips.lfode import (
    LawVector,
    LocalFieldODE,
    build_initial_law,
    class_count,
    dopri5,
    enumerate_configs,
    integrate,
    marginalize,
    mean_field_ode,
    ode_rhs,
    output_grid,
    psi,
    rk4,
)
from sparseips.models import STAR, ModelSpec, builtin

SIR = builtin("sir", {"beta": 1.0, "gamma": 0.5})


def constant_model(c=1.0, states=(0, 1)):
    """Every state below the top jumps +1 at rate c."""
    return ModelSpec(
        name="const",
        states=states,
        jumps=(1,),
        rate=lambda j, t, a, nb: c if a < states[-1] else 0.0,
        declared_edges={(a, a + 1) for a in states[:-1]},
        rate_bound=lambda d, t: c,
    )


def frozen_model(states=(0, 1, 2)):
    return ModelSpec(
        name="frozen",
        states=states,
        jumps=(1,),
        rate=lambda j, t, a, nb: 0.0,
        declared_edges=set(),
        rate_bound=lambda d, t: 0.0,
    )


class TestEnumeration:
    def test_sir_delta2(self):
        sp = enumerate_configs(DD.delta(2), SIR)
        assert len(sp) == 18
        assert sp.multiplicity.sum() == 27

    def test_binary_delta1(self):
        assert len(enumerate_configs(DD.delta(1), (0, 1))) == 4

    def test_delta0(self):
        sp = enumerate_configs(DD.delta(0), SIR)
        assert len(sp) == 3
        assert sp.config(0).entries == (0,)

    def test_index_bijective(self):
        sp = enumerate_configs(DD({1: 0.5, 3: 0.5}), SIR)
        for i in range(len(sp)):
            assert sp.canonical(sp.config(i).entries) == i
        assert sp.lookup(sp.root, sp.counts).tolist() == list(range(len(sp)))

    def test_canonical_sorts_and_pads(self):
        sp = enumerate_configs(DD.delta(3), SIR)
        i = sp.canonical((0, 2, 1, 0))
        assert sp.config(i).entries == (0, 0, 1, 2)
        assert sp.describe(i) == "S|S,I,R"
        sp2 = enumerate_configs(DD({1: 0.5, 3: 0.5}), SIR)
        assert sp2.describe(sp2.canonical((1, 0, STAR, STAR))) == "I|S,*,*"
        # padding in the middle is not a configuration
        assert sp2.canonical((1, STAR, 0, STAR)) == -1
        # degree 2 is outside the support
        assert sp2.canonical((1, 0, 0, STAR)) == -1

    def test_random_counts_against_brute_force(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            m = int(rng.integers(1, 5))
            support = sorted(set(rng.integers(0, 5, size=rng.integers(1, 4)).tolist()))
            theta = DD({k: 1 / len(support) for k in support})
            states = tuple(range(m))
            ordered = {(a[0],) + tuple(sorted(a[1:])) for k in support for a in product(states, repeat=k + 1)}
            sp = enumerate_configs(theta, states)
            assert len(sp) == len(ordered) == class_count(m, support)
            assert len(sp) == m * sum(comb(k + m - 1, m - 1) for k in support)


class TestInitialLaw:
    def test_point_mass(self):
        p = build_initial_law(DD.delta(2), {0: 1.0}, SIR.states)
        i = p.space.canonical((0, 0, 0))
        assert p.values[i] == 1.0 and p.total == 1.0
        assert np.array_equal(marginalize(p), [1.0, 0.0, 0.0])

    def test_product_values(self):
        p = build_initial_law(DD.delta(1), {0: 0.9, 1: 0.1}, SIR.states)
        assert p.ordered_probability((0, 0)) == pytest.approx(0.81)
        assert p.ordered_probability((0, 1)) == pytest.approx(0.09)
        assert p.ordered_probability((1, 0)) == pytest.approx(0.09)
        assert p.ordered_probability((1, 1)) == pytest.approx(0.01)

    def test_marginal_recovers_q(self):
        theta = DD({0: 0.1, 2: 0.3, 3: 0.6})
        q = np.array([0.5, 0.3, 0.2])
        p = build_initial_law(theta, q, SIR.states)
        assert p.total == pytest.approx(1.0, abs=1e-14)
        assert np.allclose(marginalize(p), q, atol=1e-14)

    def test_rejects_bad_q(self):
        with pytest.raises(ValueError):
            build_initial_law(DD.delta(1), [0.5, 0.6, 0.0], SIR.states)


class TestPsi:
    def test_root_slot(self):
        sp = enumerate_configs(DD.delta(2), SIR)
        p = build_initial_law(DD.delta(2), {0: 0.9, 1: 0.1}, space=sp)
        assert psi(0.0, p, (0, 1, 1), 0, 0, 1) == 2.0
        # shifted root leaves the state space
        assert psi(0.0, p, (0, 1, 1), 0, 1, 1) == 0.0
        # shifted root S -> pre-jump configuration of an I root
        assert psi(0.0, p, (1, 1, 1), 0, 1, 1) == 2.0

    def test_empty_cell(self):
        sp = enumerate_configs(DD.delta(2), SIR)
        p = build_initial_law(DD.delta(2), {0: 1.0}, space=sp)
        # no I roots with an S neighbor
        assert psi(0.0, p, (0, 1, 0), 1, 0, 1) == 0.0

    def test_constant_rate(self):
        m = constant_model(c=1.7)
        sp = enumerate_configs(DD.delta(1), m)
        p = build_initial_law(DD.delta(1), {0: 0.5, 1: 0.5}, space=sp)
        assert psi(0.0, p, (1, 0), 1, 0, 1) == pytest.approx(1.7)

    def test_neighbor_slot_matches_literal_ratio(self):
        theta = DD({1: 0.5, 2: 0.5})
        sp = enumerate_configs(theta, SIR)
        rng = np.random.default_rng(1)
        w = rng.random(len(sp))
        p = LawVector(sp, w / w.sum())
        u = UnreducedSystem(SIR, theta)
        f = np.array([p.ordered_probability(c + (STAR,) * (3 - len(c))) for c in u.configs])
        for a in [(1, 0, 0), (0, 1, 1), (1, 0, 2), (0, 1, 0)]:
            for v in (1, 2):
                for ell in (0, 1):
                    assert psi(0.0, p, a, v, ell, 1) == pytest.approx(u.psi(0.0, f, a, v, ell, 1), rel=1e-12)


class TestRHS:
    def test_zero_rates(self):
        sp = enumerate_configs(DD.delta(2), frozen_model())
        p = build_initial_law(DD.delta(2), [0.2, 0.3, 0.5], space=sp)
        assert np.all(ode_rhs(0.0, p) == 0.0)

    @pytest.mark.parametrize("theta", [DD.delta(1), DD.delta(2), DD({1: 0.3, 2: 0.3, 3: 0.4})])
    def test_mass_conserved(self, theta):
        sp = enumerate_configs(theta, SIR)
        rng = np.random.default_rng(2)
        w = rng.random(len(sp))
        p = LawVector(sp, w / w.sum())
        assert abs(ode_rhs(0.0, p).sum()) < 1e-14

    @pytest.mark.parametrize(
        "name,params,q",
        [
            ("sir", {"beta": 1.0, "gamma": 0.5}, {0: 0.9, 1: 0.1}),
            ("voter", {}, {-1: 0.2, 0: 0.5, 1: 0.3}),
            ("seizure", {"alpha_plus": 0.1, "alpha_minus": 0.3, "beta": 1.0}, {0: 0.6, 1: 0.2, 2: 0.1, 3: 0.1}),
            ("hawkes_threshold", {"M": 2, "alpha": 0.5, "u": 0.2}, {0: 0.7, 1: 0.3}),
        ],
    )
    @pytest.mark.parametrize("theta", [DD.delta(1), DD.delta(2), DD({1: 0.5, 2: 0.5})])
    def test_rhs_matches_unreduced(self, name, params, q, theta):
        m = builtin(name, params)
        u = UnreducedSystem(m, theta)
        sp = enumerate_configs(theta, m)
        rng = np.random.default_rng(3)
        w = rng.random(len(sp))
        w /= w.sum()
        f = np.array([w[sp.canonical(c + (STAR,) * (theta.d_max + 1 - len(c)))] for c in u.configs])
        f /= sp.multiplicity[[sp.canonical(c + (STAR,) * (theta.d_max + 1 - len(c))) for c in u.configs]]
        reduced = LocalFieldODE(m, theta, sp).rhs(0.0, w)
        assert np.max(np.abs(u.class_masses(u.rhs(0.0, f), sp) - reduced)) < 1e-15


class TestIntegrate:
    def test_pure_death_delta0(self):
        m = constant_model(1.0)
        theta = DD.delta(0)
        p0 = build_initial_law(theta, {0: 1.0}, m.states)
        sol = integrate(m, theta, p0, 3.0, rtol=1e-10, atol=1e-12, grid_step=0.5)
        t, mu = sol.grid_marginals()
        assert np.allclose(mu[:, 0], np.exp(-t), atol=1e-9)

    def test_rk4_fallback(self):
        m = constant_model(1.0)
        theta = DD.delta(1)
        p0 = build_initial_law(theta, {0: 1.0}, m.states)
        sol = integrate(m, theta, p0, 2.0, method="rk4", h=1e-3, grid_step=0.5)
        t, mu = sol.grid_marginals()
        assert np.allclose(mu[:, 0], np.exp(-t), atol=1e-10)

    def test_cyclic_model_refused(self):
        m = builtin("sis", {})
        p0 = build_initial_law(DD.delta(1), {0: 0.5, 1: 0.5}, m.states)
        with pytest.raises(CycleError):
            integrate(m, DD.delta(1), p0, 1.0)

    def test_theta_mismatch(self):
        p0 = build_initial_law(DD.delta(1), {0: 1.0}, SIR.states)
        with pytest.raises(ValueError):
            integrate(SIR, DD.delta(2), p0, 1.0)

    def test_mass_and_grid(self):
        theta = DD({2: 0.5, 3: 0.5})
        p0 = build_initial_law(theta, {0: 0.9, 1: 0.1}, SIR.states)
        sol = integrate(SIR, theta, p0, 5.0, grid_step=0.25)
        t, law = sol.grid()
        assert np.allclose(t, np.arange(21) * 0.25)
        assert np.max(np.abs(law.sum(axis=1) - 1.0)) <= 1e-8
        assert law.min() >= -1e-10
        assert sol.stats.get("clamped_mass", 0.0) <= 1e-8

    @pytest.mark.parametrize("k,expected", [(2, 0.6375087359206993), (3, 0.12884112982985424)])
    def test_sir_regular_tree_closed_form(self, k, expected):
        # edge-based closed form on the k-regular tree: S(t) = s0 * phi(t)^k with
        # phi' = -beta * (phi - s0 * phi^(k-1) - gamma / beta * (1 - phi)), phi(0) = 1
        beta, gamma, s0 = 1.0, 0.5, 0.9
        ref = solve_ivp(
            lambda t, y: [-beta * (y[0] - s0 * y[0] ** (k - 1)) + gamma * (1 - y[0])],
            (0, 5), [1.0], method="DOP853", rtol=1e-13, atol=1e-14,
        )
        assert s0 * ref.y[0, -1] ** k == pytest.approx(expected, abs=1e-10)
        theta = DD.delta(k)
        p0 = build_initial_law(theta, {0: s0, 1: 1 - s0}, SIR.states)
        sol = integrate(SIR, theta, p0, 5.0, rtol=1e-10, atol=1e-12)
        assert sol.marginals()[-1, 0] == pytest.approx(expected, abs=1e-8)


@pytest.mark.parametrize(
    "name,params,q,theta",
    [
        ("sir", {"beta": 1.0, "gamma": 0.5}, {0: 0.9, 1: 0.1}, DD.delta(1)),
        ("sir", {"beta": 1.0, "gamma": 0.5}, {0: 0.9, 1: 0.1}, DD.delta(2)),
        ("voter", {}, {-1: 0.2, 0: 0.5, 1: 0.3}, DD.delta(2)),
        ("seizure", {"alpha_plus": 0.1, "alpha_minus": 0.3, "beta": 1.0}, {0: 0.675, 1: 0.225, 2: 0.075, 3: 0.025}, DD.delta(1)),
    ],
)
def test_reduced_matches_unreduced_trajectory(name, params, q, theta):
    m = builtin(name, params)
    u = UnreducedSystem(m, theta)
    qv = {s: q.get(s, 0.0) for s in m.states}
    ref = solve_ivp(u.rhs, (0, 3), u.product_law(qv), method="DOP853", rtol=1e-12, atol=1e-14,
                    t_eval=output_grid(3.0, 0.5))
    p0 = build_initial_law(theta, qv, m.states)
    sol = integrate(m, theta, p0, 3.0, rtol=1e-12, atol=1e-14, grid_step=0.5)
    _, law = sol.grid()
    assert np.max(np.abs(u.marginals(ref.y.T) - law @ p0.space.root_onehot)) <= 1e-9
    classes = np.array([u.class_masses(y, p0.space) for y in ref.y.T])
    assert np.max(np.abs(classes - law)) <= 1e-9


def test_unreduced_stays_symmetric():
    theta = DD.delta(2)
    u = UnreducedSystem(SIR, theta)
    ref = solve_ivp(u.rhs, (0, 2), u.product_law({0: 0.8, 1: 0.15, 2: 0.05}), method="DOP853",
                    rtol=1e-12, atol=1e-14)
    f = ref.y[:, -1]
    for i, c in enumerate(u.configs):
        swapped = (c[0], c[2], c[1])
        assert f[i] == pytest.approx(f[u.index[swapped]], abs=1e-13)


class TestMeanField:
    def test_zero_rates(self):
        traj = mean_field_ode(frozen_model(), DD.delta(2), [0.2, 0.3, 0.5], 2.0, grid_step=1.0)
        assert np.allclose(traj.y, [0.2, 0.3, 0.5])

    def test_degree_zero_matches_ode(self):
        m = constant_model(0.7, states=(0, 1, 2))
        theta = DD.delta(0)
        q = [0.6, 0.3, 0.1]
        _, mf = mean_field_ode(m, theta, q, 3.0, rtol=1e-10, atol=1e-12, grid_step=0.5).grid()
        sol = integrate(m, theta, build_initial_law(theta, q, m.states), 3.0, rtol=1e-10, atol=1e-12, grid_step=0.5)
        assert np.allclose(mf, sol.grid_marginals()[1], atol=1e-9)

    @pytest.mark.parametrize("kernel", ["annealed", "complete"])
    def test_voter_symmetry(self, kernel):
        voter = builtin("voter", {})
        _, mu = mean_field_ode(voter, DD.delta(2), [0.2, 0.6, 0.2], 4.0, kernel=kernel, grid_step=0.5).grid()
        assert np.allclose(mu[:, 0], mu[:, 2], atol=1e-12)

    def test_sir_annealed_is_pair_independent(self):
        # annealed SIR on delta_k: dS/dt = -beta * k * S * I
        theta = DD.delta(3)
        _, mu = mean_field_ode(SIR, theta, [0.9, 0.1, 0.0], 2.0, rtol=1e-10, atol=1e-12, grid_step=2.0).grid()
        ref = solve_ivp(lambda t, y: [-3 * y[0] * y[1], 3 * y[0] * y[1] - 0.5 * y[1]], (0, 2), [0.9, 0.1],
                        rtol=1e-12, atol=1e-14)
        assert mu[-1, 0] == pytest.approx(ref.y[0, -1], abs=1e-8)

    def test_complete_kernel_needs_field_rate(self):
        with pytest.raises(ValueError):
            mean_field_ode(SIR, DD.delta(2), [0.9, 0.1, 0.0], 1.0, kernel="complete")


class TestIntegrator:
    def test_exponential(self):
        traj = dopri5(lambda t, y: -y, [1.0], 2.0, rtol=1e-10, atol=1e-12, grid=output_grid(2.0, 0.5))
        t, y = traj.grid()
        assert np.allclose(y[:, 0], np.exp(-t), atol=1e-9)

    def test_rk4_order(self):
        errs = []
        for h in (0.1, 0.05):
            traj = rk4(lambda t, y: np.cos(t) * y, [1.0], 1.0, h)
            errs.append(abs(traj.y[-1, 0] - np.exp(np.sin(1.0))))
        assert errs[0] / errs[1] == pytest.approx(16, rel=0.2)

    def test_underflow(self):
        with pytest.raises(IntegratorError):
            dopri5(lambda t, y: 1.0 / (1.0 - t) ** 2 * np.ones_like(y), [0.0], 2.0)

    def test_grid_with_remainder(self):
        assert np.allclose(output_grid(1.0, 0.3), [0.0, 0.3, 0.6, 0.9, 1.0])
