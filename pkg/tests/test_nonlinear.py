import warnings
from itertools import combinations

import numpy as np
import pytest

from dcgmarkov import (
    Dataset,
    LinearSEM,
    QuadratureGrid,
    RecoverabilityWarning,
    bilinear_feedback_density,
    bilinear_feedback_density_grid,
    bilinear_feedback_model,
    bilinear_feedback_solution,
    catalog,
    ci_factorization_check,
    d_separated,
    entailed_ci_nonlinear,
    enumerate_entailed_ci,
    errors,
    expr,
    fisher_z_test,
    implied_covariance,
    parse_model,
    random_graph,
    sample,
    simulate,
    solve_equilibrium,
)
from dcgmarkov.nonlinear import _solve_rows


# ---------------------------------------------------------------- expression language

def test_expression_parse_and_evaluate():
    node = expr.parse("-(A + 2.5) * B - 1e-1")
    assert expr.variables(node) == {"A", "B"}
    assert expr.evaluate(node, {"A": 1.5, "B": 2.0}) == pytest.approx(-8.1)


def test_expression_parse_error_positions():
    with pytest.raises(errors.ParseError) as info:
        expr.parse("A + ", line=3, col=4)
    assert info.value.line == 3
    with pytest.raises(errors.ParseError):
        expr.parse("A ? B")
    with pytest.raises(errors.ParseError):
        expr.parse("(A + B")


def test_affine_form_extraction():
    node = expr.parse("2*A + B*C - 3")
    const, coeffs = expr.affine_form(node, frozenset({"A", "B"}), {"C": 4.0})
    assert const == -3 and coeffs == {"A": 2.0, "B": 4.0}
    with pytest.raises(expr.NotAffine):
        expr.affine_form(node, frozenset({"B", "C"}), {"A": 0.0})


# ---------------------------------------------------------------- model parsing

def test_parse_bilinear_model(bilinear_model):
    g = bilinear_model.induced_graph
    assert g.vertices == ("X", "Y", "Z", "W")
    assert g.edges == {("W", "Z"), ("Y", "Z"), ("Z", "W"), ("X", "W")}
    assert bilinear_model.error_distributions["e_X"].sd == 1.0


def test_parse_single_vertex():
    spec = parse_model("X = e_X")
    assert spec.induced_graph.vertices == ("X",)
    assert spec.induced_graph.edges == frozenset()


def test_parse_unknown_symbol():
    with pytest.raises(errors.UnknownSymbol):
        parse_model("Z = Q + e_Z")
    with pytest.raises(errors.UnknownSymbol):
        parse_model("Z = e_W; W = e_W")  # someone else's error term


def test_parse_duplicate_and_missing():
    with pytest.raises(errors.DuplicateEquation):
        parse_model("X = e_X; X = e_X")
    with pytest.raises(errors.MissingEquation):
        parse_model("error e_Q ~ normal(0, 1)\nX = e_X")


def test_parse_self_reference_is_self_loop():
    with pytest.raises(errors.SelfLoop):
        parse_model("X = X + e_X")


def test_parse_error_declarations():
    spec = parse_model("X = e_X; Y = X + e_Y\nerror e_Y ~ normal(1.5, 2.0)")
    assert spec.error_distributions["e_Y"].mean == 1.5
    assert spec.error_distributions["e_Y"].sd == 2.0
    assert spec.error_distributions["e_X"].mean == 0.0
    with pytest.raises(errors.ParseError):
        parse_model("X = e_X\nerror e_X ~ normal(0, -1)")


def test_parse_reserved_error_prefix():
    with pytest.raises(errors.ParseError):
        parse_model("e_X = 2")


def test_recoverability_warning():
    with pytest.warns(RecoverabilityWarning):
        parse_model("X = e_X; Y = (X + e_Y) * X")
    with pytest.warns(RecoverabilityWarning):
        parse_model("X = 2")  # no noise at all
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        parse_model("X = e_X; Y = X + e_Y; Z = Y * e_Z")  # additive and multiplicative forms


# ---------------------------------------------------------------- equilibria

def test_solve_matches_closed_form_including_expanding_draws(bilinear_model):
    for errs in [(2.0, 3.0, 0.5, -1.0), (0.3, 0.4, 1.0, 1.0), (-2.5, 1.7, 0.2, 0.9)]:
        got = solve_equilibrium(
            bilinear_model, dict(zip(("e_X", "e_Y", "e_Z", "e_W"), errs))
        )
        want = bilinear_feedback_solution(*errs)
        for v in ("X", "Y", "Z", "W"):
            assert got[v] == pytest.approx(float(want[v]), rel=1e-12, abs=1e-12)


def test_solve_singular_locus(bilinear_model):
    with pytest.raises(errors.NoConvergence):
        solve_equilibrium(bilinear_model, {"e_X": 2.0, "e_Y": 0.5, "e_Z": 0.1, "e_W": 0.1})
    with pytest.raises(errors.SingularPoint):
        bilinear_feedback_solution(2.0, 0.5, 0.1, 0.1)


def test_solve_acyclic_substitution_ignores_damping():
    spec = parse_model("X = e_X; Y = 2*X + e_Y; Z = Y - X + e_Z")
    errs = {"e_X": 1.0, "e_Y": -0.5, "e_Z": 0.25}
    a = solve_equilibrium(spec, errs, damping=0.5)
    b = solve_equilibrium(spec, errs, damping=0.9)
    assert a == b
    assert a["Z"] == pytest.approx(2 * 1.0 - 0.5 - 1.0 + 0.25)


def test_solve_requires_all_error_values(bilinear_model):
    with pytest.raises(ValueError):
        solve_equilibrium(bilinear_model, {"e_X": 0.0})


def test_iterative_method_agrees_inside_contraction(bilinear_model):
    errs = {"e_X": 0.5, "e_Y": 0.5, "e_Z": 1.0, "e_W": 1.0}
    auto = solve_equilibrium(bilinear_model, errs)
    iterated = solve_equilibrium(bilinear_model, errs, method="iterate")
    for v in auto:
        assert iterated[v] == pytest.approx(auto[v], rel=1e-9, abs=1e-9)


def test_iterative_method_diverges_outside_contraction(bilinear_model):
    # an equilibrium exists here (e_X * e_Y = 6 != 1) but the damped map expands
    with pytest.raises(errors.NoConvergence):
        solve_equilibrium(
            bilinear_model,
            {"e_X": 2.0, "e_Y": 3.0, "e_Z": 0.5, "e_W": -1.0},
            method="iterate",
        )


def test_closed_form_agreement_over_draw_batch(bilinear_model):
    rng = np.random.default_rng(5)
    draws = rng.standard_normal((10_000, 4))
    draws = draws[np.abs(draws[:, 0] * draws[:, 1] - 1) > 1e-6]
    arrays = dict(zip(("e_X", "e_Y", "e_Z", "e_W"), draws.T))
    values, ok = _solve_rows(bilinear_model, arrays)
    assert ok.all()
    want = bilinear_feedback_solution(*draws.T)
    for v in ("Z", "W"):
        rel = np.abs(values[v] - want[v]) / np.maximum(np.abs(want[v]), 1e-12)
        assert rel.max() < 1e-9


def test_nonaffine_cycle_solved_by_iteration():
    spec = parse_model("A = 0.2*B*B + e_A; B = 0.3*A + e_B")
    got = solve_equilibrium(spec, {"e_A": 0.5, "e_B": -0.25})
    a, b = got["A"], got["B"]
    assert a == pytest.approx(0.2 * b * b + 0.5, abs=1e-10)
    assert b == pytest.approx(0.3 * a - 0.25, abs=1e-10)


# ---------------------------------------------------------------- sampling

def test_sample_bilinear_marginals(bilinear_model):
    data = sample(bilinear_model, 100_000, seed=7)
    assert data.columns == ("X", "Y", "Z", "W")
    assert data.rejected == 0  # the exact solve only rejects the measure-zero locus
    x, y = data.column("X"), data.column("Y")
    assert abs(x.mean()) < 0.02 and abs(y.mean()) < 0.02
    assert abs(x.var() - 1) < 0.02 and abs(y.var() - 1) < 0.02
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.02


def test_sample_determinism(bilinear_model):
    a = sample(bilinear_model, 500, seed=11)
    b = sample(bilinear_model, 500, seed=11)
    assert np.array_equal(a.values, b.values)


def test_sample_rejects_bad_n(bilinear_model):
    with pytest.raises(ValueError):
        sample(bilinear_model, 0, seed=1)


def test_sample_reports_rejections():
    spec = parse_model("A = B*B + e_A; B = A + e_B")
    data = sample(spec, 400, seed=2)
    assert data.rejected > 0
    assert len(data) == 400


def test_sample_excessive_rejection():
    # the steep quadratic loop loses its equilibrium for most error draws
    spec = parse_model("A = 4*B*B + e_A; B = 4*A*A + e_B")
    with pytest.raises(errors.ExcessiveRejection):
        sample(spec, 400, seed=2)


def test_acyclic_linear_model_agrees_with_linear_simulation():
    spec = parse_model("X = e_X; Y = 0.7*X + e_Y")
    nonlinear_data = sample(spec, 200_000, seed=1)
    sem = LinearSEM(spec.induced_graph, {("X", "Y"): 0.7}, {"X": 1.0, "Y": 1.0})
    linear_data = simulate(sem, 200_000, seed=2)
    a = np.cov(nonlinear_data.values, rowvar=False)
    b = np.cov(linear_data.values, rowvar=False)
    assert np.abs(a - b).max() < 0.02


# ---------------------------------------------------------------- the worked density

def test_density_scalar_matches_grid():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(20, 4))
    grid_vals = bilinear_feedback_density_grid(*pts.T)
    for point, want in zip(pts, grid_vals):
        assert bilinear_feedback_density(*point) == pytest.approx(float(want), rel=1e-14)


def test_density_singular_point():
    with pytest.raises(errors.SingularPoint):
        bilinear_feedback_density(2.0, 0.5, 0.0, 0.0)
    assert bilinear_feedback_density_grid(2.0, 0.5, 0.0, 0.0) == 0.0


def test_density_nonnegative():
    rng = np.random.default_rng(4)
    pts = rng.uniform(-8, 8, size=(200, 4))
    assert np.all(bilinear_feedback_density_grid(*pts.T) >= 0)


def _boxed_density_mass(nodes: int, invert_jacobian: bool = False) -> float:
    """Simpson quadrature of the worked density over [-8, 8]^4, chunked along x."""
    axis = np.linspace(-8.0, 8.0, nodes)
    h = axis[1] - axis[0]
    weights = np.ones(nodes)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    weights *= h / 3.0
    ys = axis[:, None, None]
    zs = axis[None, :, None]
    ws = axis[None, None, :]
    total = 0.0
    for i, x in enumerate(axis):
        f = bilinear_feedback_density_grid(x, ys, zs, ws)
        if invert_jacobian:
            jac = np.abs(1.0 - x * ys)
            f = f / np.maximum(jac, 1e-300) ** 2
        total += weights[i] * np.einsum("j,k,l,jkl->", weights, weights, weights, f)
    return float(total)


def test_density_normalization_matches_monte_carlo_box_mass():
    """The quadrature mass of the box equals the closed-form samplers' hit rate.

    This pins the change-of-variables factor: with the inverted Jacobian the
    box integral is several times too large. The distribution has heavy
    tails, so the box holds about 95% of the mass rather than all of it.
    """
    rng = np.random.default_rng(42)
    draws = rng.standard_normal((4, 2_000_000))
    sol = bilinear_feedback_solution(*draws)
    inside = np.ones(draws.shape[1], dtype=bool)
    for v in ("X", "Y", "Z", "W"):
        inside &= np.abs(sol[v]) <= 8
    mc_mass = float(inside.mean())

    quad_mass = _boxed_density_mass(nodes=121)
    assert quad_mass == pytest.approx(mc_mass, abs=2e-3)
    assert 0.93 < quad_mass < 0.97

    wrong = _boxed_density_mass(nodes=61, invert_jacobian=True)
    assert abs(wrong - mc_mass) > 1.0


def test_sample_histogram_matches_density(bilinear_model):
    """Coarse 4-D binning of samples agrees with quadrature bin masses."""
    n = 400_000
    data = sample(bilinear_model, n, seed=19).values
    edges = np.linspace(-2.0, 2.0, 6)
    counts, _ = np.histogramdd(data, bins=[edges] * 4)
    observed = counts / n

    sub = 5  # Simpson nodes per bin per axis
    masses = np.zeros_like(observed)
    for i in range(5):
        for j in range(5):
            for k in range(5):
                for m in range(5):
                    axes = [
                        np.linspace(edges[t], edges[t + 1], sub)
                        for t in (i, j, k, m)
                    ]
                    h = [a[1] - a[0] for a in axes]
                    w = np.ones(sub)
                    w[1:-1:2] = 4.0
                    w[2:-1:2] = 2.0
                    grids = np.meshgrid(*axes, indexing="ij")
                    f = bilinear_feedback_density_grid(*grids)
                    masses[i, j, k, m] = np.einsum(
                        "i,j,k,l,ijkl->", w * h[0] / 3, w * h[1] / 3, w * h[2] / 3, w * h[3] / 3, f
                    )

    sigma = np.sqrt(masses * (1 - masses) / n)
    deviation = np.abs(observed - masses) / np.maximum(sigma, 1e-9)
    assert deviation.max() < 6.0


# ---------------------------------------------------------------- factorization check

def test_factorization_violation_for_bilinear_density():
    report = ci_factorization_check(
        bilinear_feedback_density_grid,
        ("X", "Y", "Z", "W"),
        "X",
        "Y",
        [{"Z": 1.0, "W": 1.0}],
        vectorized=True,
    )
    assert report.max_violation > 0.01
    assert report.points_evaluated == 1 and not report.skipped


def test_factorization_product_density_control():
    def product(x, y, z, w):
        return float(
            np.exp(-(x * x + y * y + z * z + w * w) / 2) / (2 * np.pi) ** 2
        )

    report = ci_factorization_check(
        product, ("X", "Y", "Z", "W"), "X", "Y", [{"Z": 1.0, "W": 1.0}]
    )
    assert report.max_violation < 1e-8


def test_factorization_gaussian_linearized_control(bilinear):
    sem = LinearSEM(bilinear, {e: 0.5 for e in bilinear.edges}, {v: 1.0 for v in bilinear.vertices})
    cov = implied_covariance(sem).values
    prec = np.linalg.inv(cov)
    norm = 1.0 / np.sqrt((2 * np.pi) ** 4 * np.linalg.det(cov))

    def gaussian(x, y, z, w):
        pts = np.stack(np.broadcast_arrays(x, y, z, w), axis=-1)
        quad = np.einsum("...i,ij,...j->...", pts, prec, pts)
        return norm * np.exp(-quad / 2)

    report = ci_factorization_check(
        gaussian, ("X", "Y", "Z", "W"), "X", "Y", [{"Z": 1.0, "W": 1.0}], vectorized=True
    )
    assert report.max_violation < 1e-6


def test_factorization_underflow_skip():
    report = ci_factorization_check(
        bilinear_feedback_density_grid,
        ("X", "Y", "Z", "W"),
        "X",
        "Y",
        [{"Z": 1000.0, "W": 1000.0}],
        vectorized=True,
    )
    assert report.skipped == ({"Z": 1000.0, "W": 1000.0},)
    assert report.points_evaluated == 0


def test_factorization_validates_inputs():
    with pytest.raises(errors.NonDisjointSets):
        ci_factorization_check(bilinear_feedback_density_grid, ("X", "Y", "Z", "W"), "X", "X", [])
    with pytest.raises(ValueError):
        ci_factorization_check(
            bilinear_feedback_density_grid, ("X", "Y", "Z", "W"), "X", "Y", [{"Z": 0.0}]
        )
    with pytest.raises(ValueError):
        QuadratureGrid(nodes=100)


# ---------------------------------------------------------------- sound entailment

def test_entailed_ci_nonlinear_bilinear(bilinear):
    def stmts(items):
        return {(s.x, s.y, s.z) for s in items}

    sound = stmts(entailed_ci_nonlinear(bilinear))
    plain = stmts(enumerate_entailed_ci(bilinear))
    pair_given_cycle = (frozenset({"X"}), frozenset({"Y"}), frozenset({"Z", "W"}))
    marginal_pair = (frozenset({"X"}), frozenset({"Y"}), frozenset())
    assert marginal_pair in sound
    assert pair_given_cycle not in sound
    assert pair_given_cycle in plain


def test_entailed_ci_nonlinear_dag_identity(chain):
    assert entailed_ci_nonlinear(chain) == enumerate_entailed_ci(chain)


def test_entailed_ci_nonlinear_edgeless_all():
    from dcgmarkov import build_graph

    g = build_graph(["A", "B", "C"], [])
    assert len(entailed_ci_nonlinear(g)) == 6


def test_soundness_sandwich_random_graphs():
    rng = np.random.default_rng(17)
    for _ in range(30):
        g = random_graph(int(rng.integers(2, 6)), float(rng.uniform(0.2, 0.5)), rng)
        assert set(entailed_ci_nonlinear(g)) <= set(enumerate_entailed_ci(g))


# ---------------------------------------------------------------- conjecture probe (non-blocking)

def _random_cyclic_model(rng):
    while True:
        g = random_graph(int(rng.integers(3, 6)), 0.35, rng)
        if not g.is_acyclic():
            break
    lines = []
    for v in g.vertices:
        parents = g.sort(g.parents(v))
        terms = []
        for p in parents:
            c = float(rng.uniform(0.2, 0.6)) * float(rng.choice([-1.0, 1.0]))
            if parents and rng.random() < 0.3:
                q = parents[int(rng.integers(len(parents)))]
                terms.append(f"{c:.3f}*{p}*{q}")
            else:
                terms.append(f"{c:.3f}*{p}")
        terms.append(f"e_{v}")
        lines.append(f"{v} = " + " + ".join(terms))
    return parse_model("\n".join(lines))


def test_conjecture_probe_logs_candidates_without_failing():
    """Search for statements outside the collapsed-graph set that look independent.

    A hit is only a candidate counterexample to the necessity conjecture, not
    a test failure: it is printed for follow-up. The Fisher-z screen has no
    power against purely variance-linked dependence, so hits here are weak
    evidence at best.
    """
    rng = np.random.default_rng(2718)
    candidates = []
    for _ in range(6):
        spec = _random_cyclic_model(rng)
        g = spec.induced_graph
        outside = [
            s
            for s in enumerate_entailed_ci(g)
            if s not in set(entailed_ci_nonlinear(g))
        ]
        if not outside:
            continue
        try:
            data = sample(spec, 4000, seed=int(rng.integers(2**32)))
        except errors.ExcessiveRejection:
            continue
        for s in outside[:2]:
            result = fisher_z_test(data, next(iter(s.x)), next(iter(s.y)), sorted(s.z), alpha=1e-3)
            if result.independent:
                candidates.append((sorted(s.x), sorted(s.y), sorted(s.z)))
    if candidates:
        print(f"conjecture probe: {len(candidates)} statement(s) passed the weak screen:")
        for x, y, z in candidates:
            print(f"  {x} vs {y} given {z}")
