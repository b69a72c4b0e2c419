import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_instance, random_sequence
from rplink.aggregation import Assignment, MarkovMatrix, build_transition_matrix, reconstruct_truth
from rplink.bench import RunReport
from rplink.formulation import (
    BINARY,
    CONTINUOUS,
    RELAXED_BINARY,
    Cyclic,
    FixedValues,
    FormulationError,
    FullChronological,
    Markov,
    NoEnforcement,
    VarKey,
    build_milp,
    fixed_values_from_solution,
    relaxation_set,
    write_lp,
)
from rplink.formulation.build import FAMILY_ORDER
from rplink.schedule import Schedule
from rplink.system import DemandSeries, StorageUnit, SystemInstance, ThermalGenerator


def gen(**kw):
    base = dict(id="g1", capacity=1.0, ramp_up=0.4, ramp_down=0.3, min_up=3, min_down=2, var_cost=1.0)
    base.update(kw)
    return ThermalGenerator(**base)


def system(K=24, N=2, gens=None, stos=()):
    gens = (gen(),) if gens is None else tuple(gens)
    return SystemInstance(gens, tuple(stos), DemandSeries((0.5,) * (K * N), 10.0, 1.0), K)


def row_map(milp):
    """Rows keyed by (family, rp, k, entity) with terms as a dict."""
    return {(c.family, c.rp, c.k, c.entity): (dict(c.terms), c.sense, c.rhs) for c in milp.constraints}


def pv(role, rp, k, ent="g1"):
    return VarKey(role, rp, k, ent)


class TestEquivalences:
    def test_single_rp_markov_equals_cyclic(self):
        inst = system(K=6, N=3, stos=[StorageUnit("s1", 2.0, 1.0, 1.0, 0.9, 0.95, 0.3)])
        a = Assignment.from_sequence([1, 1, 1])
        m = build_transition_matrix(a)
        assert m.pred_prob.tolist() == [[1.0]]
        assert row_map(build_milp(inst, a, Markov(m))) == row_map(build_milp(inst, a, Cyclic()))

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), K=st.sampled_from([3, 4, 6]), N=st.integers(1, 5), data=st.data())
    def test_identity_markov_equals_cyclic(self, seed, K, N, data):
        rng = np.random.default_rng(seed)
        R = data.draw(st.integers(1, N))
        inst = random_instance(rng, int(rng.integers(1, 3)), int(rng.integers(0, 2)), N, K)
        a = Assignment.from_sequence(random_sequence(rng, N, R))
        mk = build_milp(inst, a, Markov(MarkovMatrix.identity(R)))
        cy = build_milp(inst, a, Cyclic())
        assert row_map(mk) == row_map(cy)
        assert mk.objective == cy.objective
        assert [v.kind for v in mk.variables] == [v.kind for v in cy.variables]

    def test_truth_with_identity_assignment_equals_rp_model_objective_terms(self):
        inst = system(K=4, N=3)
        truth = build_milp(inst, None, FullChronological())
        assert truth.rp_weights == (1, 1, 1)
        # period 1 is preceded by period 3 (closed horizon)
        terms, _, _ = row_map(truth)[("rampup", 1, 1, "g1")]
        assert terms == {pv("p", 1, 1): 1.0, pv("p", 3, 4): -1.0}


class TestBoundaryRows:
    def test_no_enforcement_ramp_counts(self):
        inst = system(K=24, N=3)
        a = Assignment.from_sequence([1, 2, 1])
        ne = build_milp(inst, a, NoEnforcement())
        for rp in (1, 2):
            assert sum(1 for _ in ne.rows("rampup", rp)) == 23
            assert sum(1 for _ in ne.rows("rampdn", rp)) == 23
            assert sorted(c.k for c in ne.rows("rampup", rp)) == list(range(2, 25))
        for method in (Cyclic(), Markov(build_transition_matrix(a))):
            milp = build_milp(inst, a, method)
            for rp in (1, 2):
                assert sum(1 for _ in milp.rows("rampup", rp)) == 24

    def test_markov_ramp_expansion(self):
        inst = system(K=24, N=3)
        a = Assignment.from_sequence([1, 2, 1])
        matrix = MarkovMatrix(np.array([[0.7, 0.4], [0.3, 0.6]]))
        rows = row_map(build_milp(inst, a, Markov(matrix)))
        terms, sense, rhs = rows[("rampup", 1, 1, "g1")]
        assert terms == {pv("p", 1, 1): 1.0, pv("p", 1, 24): -0.7, pv("p", 2, 24): -0.3}
        assert sense == "<=" and rhs == 0.4
        terms, _, rhs = rows[("rampdn", 1, 1, "g1")]
        assert terms == {pv("p", 1, 1): -1.0, pv("p", 1, 24): 0.7, pv("p", 2, 24): 0.3}
        assert rhs == 0.3

    def test_markov_minup_window_expansion(self):
        inst = system(K=6, N=2)  # MU=3
        a = Assignment.from_sequence([1, 2])
        matrix = MarkovMatrix(np.array([[0.25, 1.0], [0.75, 0.0]]))
        terms, _, _ = row_map(build_milp(inst, a, Markov(matrix)))[("minup", 1, 1, "g1")]
        assert terms == {
            pv("su", 1, 1): 1.0,
            pv("su", 1, 5): 0.25,
            pv("su", 2, 5): 0.75,
            pv("su", 1, 6): 0.25,
            pv("su", 2, 6): 0.75,
            pv("u", 1, 1): -1.0,
        }

    def test_cyclic_logic_and_window(self):
        inst = system(K=6, N=1)
        a = Assignment.from_sequence([1])
        rows = row_map(build_milp(inst, a, Cyclic()))
        assert rows[("logic", 1, 1, "g1")][0] == {
            pv("u", 1, 1): 1.0, pv("su", 1, 1): -1.0, pv("sd", 1, 1): 1.0, pv("u", 1, 6): -1.0
        }
        assert rows[("mindown", 1, 1, "g1")][0] == {pv("sd", 1, 1): 1.0, pv("sd", 1, 6): 1.0, pv("u", 1, 1): 1.0}

    def test_no_enforcement_edges(self):
        s = StorageUnit("s1", 2.0, 1.0, 1.0, 0.9, 0.8, initial_level_fraction=0.25)
        inst = system(K=6, N=2, stos=[s])
        rows = row_map(build_milp(inst, Assignment.from_sequence([1, 2]), NoEnforcement()))
        assert ("logic", 1, 1, "g1") not in rows
        assert ("rampup", 2, 1, "g1") not in rows
        # window truncated at the period start
        assert rows[("minup", 1, 2, "g1")][0] == {pv("su", 1, 1): 1.0, pv("su", 1, 2): 1.0, pv("u", 1, 2): -1.0}
        terms, sense, rhs = rows[("stor", 1, 1, "s1")]
        assert VarKey("l", 1, 6, "s1") not in terms
        assert sense == "=" and rhs == pytest.approx(0.5)
        assert terms[VarKey("gdis", 1, 1, "s1")] == pytest.approx(1 / 0.8)

    def test_fixed_values_edges(self):
        s = StorageUnit("s1", 2.0, 1.0, 1.0)
        inst = system(K=6, N=2, stos=[s])
        fp = {("p", 1, "g1"): 0.6, ("u", 1, "g1"): 1.0, ("l", 1, "s1"): 1.5,
              ("p", 2, "g1"): 0.0, ("u", 2, "g1"): 0.0, ("l", 2, "s1"): 0.0}
        rows = row_map(build_milp(inst, Assignment.from_sequence([1, 2]), FixedValues(fp)))
        assert rows[("rampup", 1, 1, "g1")] == ({pv("p", 1, 1): 1.0}, "<=", pytest.approx(0.4 + 0.6))
        assert rows[("logic", 1, 1, "g1")][2] == pytest.approx(1.0)
        assert rows[("stor", 1, 1, "s1")][2] == pytest.approx(1.5)
        # switching history before the period is zero: window keeps only in-period terms
        assert rows[("minup", 1, 1, "g1")][0] == {pv("su", 1, 1): 1.0, pv("u", 1, 1): -1.0}

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), N=st.integers(2, 7), data=st.data())
    def test_boundary_weights_are_convex(self, seed, N, data):
        rng = np.random.default_rng(seed)
        R = data.draw(st.integers(2, N))
        inst = random_instance(rng, 2, 1, N, 4)
        a = Assignment.from_sequence(random_sequence(rng, N, R))
        milp = build_milp(inst, a, Markov(build_transition_matrix(a)))
        substituted = [c for c in milp.constraints if c.boundary_weights]
        assert substituted
        for c in substituted:
            for ws in c.boundary_weights:
                assert all(w > 0 for w in ws)
                assert abs(math.fsum(ws) - 1.0) <= 1e-12


class TestStructure:
    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), method=st.sampled_from(["ne", "fixed", "cyclic", "markov", "truth"]))
    def test_catalog_integrity(self, seed, method):
        rng = np.random.default_rng(seed)
        N, R = 4, 3
        inst = random_instance(rng, 2, 1, N, 4)
        a = Assignment.from_sequence(random_sequence(rng, N, R))
        m = {
            "ne": NoEnforcement(),
            "fixed": FixedValues({(role, r, e): 0.0 for r in range(1, R + 1)
                                  for role, e in [("p", "g1"), ("u", "g1"), ("p", "g2"), ("u", "g2"), ("l", "s1")]}),
            "cyclic": Cyclic(),
            "markov": Markov(build_transition_matrix(a)),
            "truth": FullChronological(),
        }[method]
        milp = build_milp(reconstruct_truth(inst, a) if method == "truth" else inst, a, m)
        assert milp.undeclared_references() == []
        used = {k for c in milp.constraints for k, _ in c.terms} | {k for k, _ in milp.objective}
        assert {v.key for v in milp.variables} <= used
        for v in milp.variables:
            if v.kind in (BINARY, RELAXED_BINARY):
                assert (v.lb, v.ub) == (0.0, 1.0)
        names = [c.name for c in milp.constraints]
        assert len(set(names)) == len(names)
        order = [(FAMILY_ORDER[c.family], c.rp, c.k, c.entity) for c in milp.constraints]
        assert order == sorted(order)
        keys = [v.key.sort_key() for v in milp.variables]
        assert keys == sorted(keys)

    def test_variable_kinds(self):
        inst = system(K=4, N=2, gens=[gen(), gen(id="g2", relaxed_uc=True)])
        milp = build_milp(inst, Assignment.from_sequence([1, 2]), Cyclic())
        kinds = {(v.key.role, v.key.entity): v.kind for v in milp.variables}
        assert kinds[("u", "g1")] == BINARY
        assert kinds[("u", "g2")] == RELAXED_BINARY
        assert kinds[("su", "g1")] == CONTINUOUS

    def test_objective_weights(self):
        inst = system(K=2, N=3, gens=[gen(commit_cost=0.5, startup_cost=0.0)])
        milp = build_milp(inst, Assignment.from_sequence([1, 2, 1]), Cyclic())
        obj = dict(milp.objective)
        assert obj[pv("p", 1, 1)] == 2.0 and obj[pv("p", 2, 1)] == 1.0
        assert obj[pv("u", 1, 2)] == 1.0
        assert pv("su", 1, 1) not in obj
        assert obj[VarKey("pns", 1, 1, "")] == 20.0

    def test_errors(self):
        inst = system(K=4, N=2)
        a = Assignment.from_sequence([1, 2])
        with pytest.raises(FormulationError, match="missing"):
            build_milp(inst, a, FixedValues({("p", 1, "g1"): 0.0}))
        with pytest.raises(FormulationError, match="shape"):
            build_milp(inst, a, Markov(MarkovMatrix.identity(3)))
        with pytest.raises(FormulationError, match="periods"):
            build_milp(inst, Assignment.identity(3), Cyclic())
        with pytest.raises(FormulationError, match="not finite"):
            fp = {(r, rp, "g1"): 0.0 for r in ("p", "u") for rp in (1, 2)}
            fp[("p", 2, "g1")] = math.nan
            build_milp(inst, a, FixedValues(fp))


class TestRelaxation:
    def test_window(self):
        inst = system(K=6, N=2)  # MU=3, MD=2
        a = Assignment.from_sequence([1, 2])
        rs = relaxation_set(inst, Markov(build_transition_matrix(a)))
        expected = {VarKey(r, rp, k, "g1") for r in ("u", "su", "sd") for rp in (1, 2) for k in (1, 2, 3)}
        assert set(rs) == expected
        milp = build_milp(inst, a, Markov(build_transition_matrix(a)))
        relaxed_u = {v.key for v in milp.variables if v.kind == RELAXED_BINARY}
        assert relaxed_u == {k for k in expected if k.role == "u"}

    def test_identity_is_empty(self):
        inst = system(K=6, N=2)
        assert len(relaxation_set(inst, Markov(MarkovMatrix.identity(2)))) == 0
        assert len(relaxation_set(inst, Cyclic())) == 0

    def test_relaxed_generator_not_added(self):
        inst = system(K=6, N=2, gens=[gen(relaxed_uc=True)])
        a = Assignment.from_sequence([1, 2])
        assert len(relaxation_set(inst, Markov(build_transition_matrix(a)))) == 0


def schedule_for(milp, values, inst):
    return Schedule(
        period_length=milp.period_length,
        rps=tuple(range(1, len(milp.rp_weights) + 1)),
        weights=milp.rp_weights,
        generator_ids=tuple(g.id for g in inst.generators),
        storage_ids=tuple(s.id for s in inst.storages),
        demand={},
        values=values,
    )


class TestFixedFromSolution:
    def test_extracts_last_step(self):
        s = StorageUnit("s1", 2.0, 1.0, 1.0)
        inst = system(K=3, N=2, stos=[s])
        milp = build_milp(inst, None, FullChronological())
        values = {v.key: float(v.key.k) / 10 + v.key.rp for v in milp.variables}
        fv = fixed_values_from_solution(RunReport("truth", "optimal", schedule=schedule_for(milp, values, inst)))
        assert fv.values == {
            ("p", 1, "g1"): 1.3, ("u", 1, "g1"): 1.3, ("l", 1, "s1"): 1.3,
            ("p", 2, "g1"): 2.3, ("u", 2, "g1"): 2.3, ("l", 2, "s1"): 2.3,
        }

    def test_missing_storage_level(self):
        s = StorageUnit("s1", 2.0, 1.0, 1.0)
        inst = system(K=3, N=1, stos=[s])
        milp = build_milp(inst, None, FullChronological())
        values = {v.key: 0.0 for v in milp.variables if v.key.role != "l"}
        with pytest.raises(FormulationError, match="l_s1_r1_k3"):
            fixed_values_from_solution(RunReport("truth", "optimal", schedule=schedule_for(milp, values, inst)))

    def test_no_schedule(self):
        with pytest.raises(FormulationError):
            fixed_values_from_solution(RunReport("cyclic", "infeasible"))


class TestLpFormat:
    def test_deterministic_and_named(self):
        inst = system(K=4, N=2, stos=[StorageUnit("s1", 2.0, 1.0, 1.0)])
        a = Assignment.from_sequence([1, 2])
        m = Markov(MarkovMatrix(np.array([[0.5, 1.0], [0.5, 0.0]])))
        text = write_lp(build_milp(inst, a, m))
        assert text == write_lp(build_milp(inst, a, m))
        lines = text.splitlines()
        assert lines[0] == "\\ markov"
        assert lines[1] == "Minimize"
        assert " c1_bal: + 1.0 p_g1_r1_k1 + 1.0 gdis_s1_r1_k1 - 1.0 c_s1_r1_k1 + 1.0 pns_r1_k1 - 1.0 eps_r1_k1 = 0.5" in lines
        assert lines[-1] == "End"
        binaries = lines[lines.index("Binaries") + 1 : -1]
        # relaxed commitment steps (k <= 3) drop out of the Binaries section
        assert " ".join(binaries).split() == ["u_g1_r1_k4", "u_g1_r2_k4"]

    def test_long_rows_wrap(self):
        gens = [gen(id=f"generator_{i:03d}") for i in range(40)]
        inst = SystemInstance(tuple(gens), (), DemandSeries((1.0,) * 4, 10.0, 1.0), 4)
        text = write_lp(build_milp(inst, Assignment.from_sequence([1]), Cyclic()))
        assert max(len(line) for line in text.splitlines()) <= 210
        assert any(line.startswith("  + ") for line in text.splitlines())

    def test_engine_reads_it(self, tmp_path):
        highspy = pytest.importorskip("highspy")
        inst = system(K=4, N=3, stos=[StorageUnit("s1", 2.0, 1.0, 1.0)])
        a = Assignment.from_sequence([1, 2, 1])
        milp = build_milp(inst, a, Markov(build_transition_matrix(a)))
        (tmp_path / "m.lp").write_text(write_lp(milp))
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        assert h.readModel(str(tmp_path / "m.lp")) == highspy.HighsStatus.kOk
        lp = h.getLp()
        assert lp.num_col_ == len(milp.variables)
        assert lp.num_row_ == len(milp.constraints)


@pytest.mark.parametrize("seed", range(6))
def test_cyclic_optimum_satisfies_no_enforcement_rows(seed):
    from rplink.solver import solve

    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 2, 0, 1, 6)
    a = Assignment.from_sequence([1])
    cyc = build_milp(inst, a, Cyclic())
    sol = solve(cyc)
    ne = build_milp(inst, a, NoEnforcement())
    assert {v.key for v in ne.variables} == {v.key for v in cyc.variables}
    assert max(c.residual(sol.values) for c in ne.constraints) <= 1e-7
    assert len(ne.constraints) < len(cyc.constraints)
