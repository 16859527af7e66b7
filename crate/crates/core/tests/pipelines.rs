//! Cross-module pipelines: every reduction's back-mapped solutions must
//! verify against the source instance at the source ε, and query
//! accounting must respect the per-reduction cost bound.

use kkm_core::ledger::OracleKind;
use kkm_core::oracles::{triangle_vertices, DensitySegment, SpernerInstance};
use kkm_core::reductions;
use kkm_core::solvers::{self, SolveOptions};
use kkm_core::verify::{self, SampleMode};
use kkm_core::{
    make_piecewise_cake, make_quasilinear_market, make_weighted_argmax_rkkm, Instance,
    ProblemSolution, QueryLedger,
};

fn first_positive_coloring(size: u32) -> SpernerInstance {
    let colors: Vec<u8> = triangle_vertices(size)
        .map(|v| if v[0] > 0 { 0 } else if v[1] > 0 { 1 } else { 2 })
        .collect();
    SpernerInstance::triangle_from_colors(size, colors).unwrap()
}

#[test]
fn lifted_market_assigns_new_house_to_new_agent_and_backmaps() {
    let source = make_quasilinear_market(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
    let eps = 0.1;
    let (lifted, red) = reductions::lift_market(&source, eps).unwrap();
    let ledger = QueryLedger::new();
    let sol = solvers::solve_housing(&lifted, &ledger, eps, SolveOptions::default()).unwrap();
    assert_eq!(sol.perm.image(2), 2, "new agent must take the new house");
    let report =
        verify::verify_solution(&Instance::Housing(lifted.clone()), &ledger, &sol, eps).unwrap();
    assert!(report.passed, "{:?}", report.violations);
    let back = red
        .backmap(&ledger, ProblemSolution::Point(sol))
        .unwrap()
        .into_point()
        .unwrap();
    let report =
        verify::verify_solution(&Instance::Housing(source), &ledger, &back, eps).unwrap();
    assert!(report.passed, "{:?}", report.violations);
}

#[test]
fn lifted_market_satisfies_gale_assumptions() {
    let source = make_quasilinear_market(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
    let (lifted, _) = reductions::lift_market(&source, 0.1).unwrap();
    let ledger = QueryLedger::new();
    let report = verify::check_gale_assumptions(&lifted, &ledger, 64, 5).unwrap();
    assert!(report.passed, "{:?}", report.violations);
}

#[test]
fn housing_round_trip_through_coverings() {
    // housing -> rkkm -> housing: solutions of the inner market verify at
    // the outer ε after two back-maps
    let source = make_quasilinear_market(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
    let eps = 0.2;
    let (rkkm, red1) = reductions::housing_to_rkkm(&source, eps).unwrap();
    let inner_eps = red1.target_epsilon.unwrap();
    let (market2, red2) = reductions::rkkm_to_housing(&rkkm, inner_eps).unwrap();
    let ledger = QueryLedger::new();
    let sol =
        solvers::solve_housing(&market2, &ledger, red2.target_epsilon.unwrap(), SolveOptions::default())
            .unwrap();
    let mid = red2.backmap(&ledger, ProblemSolution::Point(sol)).unwrap();
    let back = red1.backmap(&ledger, mid).unwrap().into_point().unwrap();
    let report = verify::verify_solution(&Instance::Housing(source), &ledger, &back, eps).unwrap();
    assert!(report.passed, "{:?}", report.violations);
}

#[test]
fn rkkm_to_housing_recovers_zero_prices_for_flat_weights() {
    let src = make_weighted_argmax_rkkm(&[1.0, 1.0, 1.0]).unwrap();
    let eps = 0.3;
    let (market, red) = reductions::rkkm_to_housing(&src, eps).unwrap();
    let ledger = QueryLedger::new();
    let sol = solvers::solve_housing(&market, &ledger, red.target_epsilon.unwrap(), SolveOptions::default())
        .unwrap();
    // the covering's common point is the barycenter, whose prices are zero
    for &p in sol.point.coords() {
        assert!(p <= red.target_epsilon.unwrap() + 1e-9, "price {p} too far from 0");
    }
    let back = red
        .backmap(&ledger, ProblemSolution::Point(sol))
        .unwrap()
        .into_point()
        .unwrap();
    let report = verify::verify_solution(&Instance::Rkkm(src), &ledger, &back, eps).unwrap();
    assert!(report.passed, "{:?}", report.violations);
}

#[test]
fn sparsify_backmap_verifies_at_source_epsilon() {
    for weights in [vec![1.0, 1.0], vec![1.0, 2.0, 3.0], vec![2.0, 1.0, 1.0, 1.0]] {
        let src = make_weighted_argmax_rkkm(&weights).unwrap();
        let eps = 0.2;
        let (sparse, red) = reductions::sparsify(&src, eps).unwrap();
        let ledger = QueryLedger::new();
        let sol = solvers::solve_rkkm(&sparse, &ledger, red.target_epsilon.unwrap(), SolveOptions::default())
            .unwrap();
        let back = red
            .backmap(&ledger, ProblemSolution::Point(sol))
            .unwrap()
            .into_point()
            .unwrap();
        assert!(back.epsilon_achieved <= eps);
        let report = verify::verify_solution(&Instance::Rkkm(src), &ledger, &back, eps).unwrap();
        assert!(report.passed, "weights {weights:?}: {:?}", report.violations);
    }
}

#[test]
fn sparsified_coverings_pass_sparseness_checks() {
    let src = make_weighted_argmax_rkkm(&[1.0, 2.0, 3.0]).unwrap();
    let (sparse, _) = reductions::sparsify(&src, 0.2).unwrap();
    let ledger = QueryLedger::new();
    let report =
        verify::check_rkkm_sparseness(&sparse, &ledger, 128, 9, SampleMode::LowDiscrepancy)
            .unwrap();
    assert!(report.passed, "{:?}", report.violations);
    let report =
        verify::check_rkkm_coverings(&sparse, &ledger, 32, 9, SampleMode::LowDiscrepancy).unwrap();
    assert!(report.passed, "{:?}", report.violations);
}

#[test]
fn cake_pipeline_is_envy_free_and_dispatches_at_two_players() {
    let uniform = vec![DensitySegment { from: 0.0, to: 1.0, density: 1.0 }];
    // d = 2 goes through bisection
    let cake2 = make_piecewise_cake(&[uniform.clone(), uniform.clone()]).unwrap();
    let ledger = QueryLedger::new();
    let sol = solvers::solve_cake(&cake2, &ledger, 0.05, SolveOptions::default()).unwrap();
    let report = verify::verify_solution(&Instance::Cake(cake2), &ledger, &sol, 0.05).unwrap();
    assert!(report.passed, "{:?}", report.violations);
    assert!(ledger.count_scope_kind("cake", OracleKind::Utility) < 400);

    // d = 3 with a non-uniform player
    let split = vec![
        DensitySegment { from: 0.0, to: 0.5, density: 1.5 },
        DensitySegment { from: 0.5, to: 1.0, density: 0.5 },
    ];
    let cake3 = make_piecewise_cake(&[split, uniform.clone(), uniform]).unwrap();
    let ledger = QueryLedger::new();
    let sol = solvers::solve_cake(&cake3, &ledger, 0.25, SolveOptions::default()).unwrap();
    let report = verify::verify_solution(&Instance::Cake(cake3), &ledger, &sol, 0.25).unwrap();
    assert!(report.passed, "{:?}", report.violations);
}

#[test]
fn sperner_triangle_chain_recovers_a_trichromatic_cell() {
    let triangle = first_positive_coloring(8);
    let ledger = QueryLedger::new();
    // validate the hand-built coloring first
    let report = verify::check_sperner_coloring(&triangle, &ledger, 0).unwrap();
    assert!(report.passed, "{:?}", report.violations);

    let (kkm, red1) = reductions::sperner2d_to_kkm(&triangle).unwrap();
    let eps_kkm = red1.target_epsilon.unwrap();
    let (rkkm, red2) = reductions::kkm_to_rkkm(&kkm, eps_kkm).unwrap();
    let ledger = QueryLedger::new();
    let sol = solvers::solve_rkkm(&rkkm, &ledger, red2.target_epsilon.unwrap(), SolveOptions::default())
        .unwrap();
    let kkm_sol = red2.backmap(&ledger, ProblemSolution::Point(sol)).unwrap();
    // the KKM-level solution verifies at ε = 1/8 with per-set witnesses
    let point_sol = match &kkm_sol {
        ProblemSolution::Point(s) => s.clone(),
        _ => panic!("expected a point"),
    };
    let report =
        verify::verify_solution(&Instance::Kkm(kkm.clone()), &ledger, &point_sol, eps_kkm).unwrap();
    assert!(report.passed, "{:?}", report.violations);

    // the 1/8-solution point lies strictly inside its containing cell
    let y = point_sol.point.coords();
    let tri = kkm_core::triangulation::containing_triangle_cell(y, 8).unwrap();
    for i in 0..3 {
        let lo = tri.vertices.iter().map(|v| v[i] as f64).fold(f64::INFINITY, f64::min);
        let hi = tri.vertices.iter().map(|v| v[i] as f64).fold(0.0f64, f64::max);
        assert!(y[i] > lo + 1e-9 && y[i] < hi - 1e-9, "point {y:?} not interior to {tri:?}");
    }

    let cell = red1.backmap(&ledger, kkm_sol).unwrap().into_triangle_cell().unwrap();
    let mut seen = [false; 3];
    for &c in &cell.colors {
        seen[c as usize] = true;
    }
    assert!(seen.iter().all(|&b| b), "recovered cell is not trichromatic: {cell:?}");
    assert_eq!(cell.vertices, tri.vertices);
    let report = verify::verify_trichromatic_cell(&triangle, &ledger, &cell).unwrap();
    assert!(report.passed, "{:?}", report.violations);
}

#[test]
fn reduced_sperner_coloring_satisfies_face_conditions_and_has_a_cell() {
    // the covering-induced cube coloring avoids every color whose
    // barycentric coordinate vanishes; that guarantees a panchromatic cell
    // inside the descending-sorted large simplex even though the literal
    // per-coordinate cube conditions can fail off it
    for weights in [vec![1.0, 1.0, 1.0], vec![2.0, 1.0, 1.0], vec![1.0, 2.0, 3.0]] {
        let src = make_weighted_argmax_rkkm(&weights).unwrap();
        let (sperner, red) = reductions::rkkm_to_sperner(&src, 0.5).unwrap();
        let kkm_core::SpernerVariant::Cube { dim, size } = sperner.variant() else { panic!() };
        assert_eq!(dim, weights.len() - 1);
        let ledger = QueryLedger::new();
        // face-form boundary conditions, exhaustively
        let mut v = vec![0u32; dim];
        loop {
            let c = sperner.query_color(&ledger, &v).unwrap() as usize;
            let alpha = kkm_core::triangulation::barycentric(&v, size).unwrap();
            assert!(alpha.scaled()[c] > 0, "color {c} with vanishing coordinate at {v:?}");
            let mut carry = dim;
            while carry > 0 {
                if v[carry - 1] < size {
                    v[carry - 1] += 1;
                    break;
                }
                v[carry - 1] = 0;
                carry -= 1;
            }
            if carry == 0 {
                break;
            }
        }
        // a panchromatic cell exists and back-maps to a verified solution
        let cell = solvers::solve_sperner_bruteforce(&sperner, &ledger, SolveOptions::default())
            .unwrap();
        let report = verify::verify_panchromatic_cell(&sperner, &ledger, &cell).unwrap();
        assert!(report.passed, "{:?}", report.violations);
        let back = red
            .backmap(&ledger, ProblemSolution::CubeCell(cell))
            .unwrap()
            .into_point()
            .unwrap();
        let report = verify::verify_solution(&Instance::Rkkm(src), &ledger, &back, 0.5).unwrap();
        assert!(report.passed, "weights {weights:?}: {:?}", report.violations);
    }
}

#[test]
fn query_costs_respect_per_reduction_bounds() {
    // cake: d utilities per covering query
    let uniform = vec![DensitySegment { from: 0.0, to: 1.0, density: 1.0 }];
    let cake = make_piecewise_cake(&[uniform.clone(), uniform.clone(), uniform]).unwrap();
    let (rkkm, _) = reductions::cake_to_rkkm(&cake, 0.1).unwrap();
    let ledger = QueryLedger::new();
    let x = kkm_core::SimplexPoint::new(vec![0.2, 0.3, 0.5]).unwrap();
    rkkm.query_covering(&ledger, 1, &x, 2).unwrap();
    assert_eq!(ledger.count_scope_kind("cake", OracleKind::Utility), 3);

    // coloring: at most n covering queries per color query
    let src = make_weighted_argmax_rkkm(&[1.0, 2.0, 3.0]).unwrap();
    let (sperner, _) = reductions::rkkm_to_sperner(&src, 0.5).unwrap();
    let before = ledger.count_scope_kind("rkkm", OracleKind::Covering);
    sperner.query_color(&ledger, &[3, 1]).unwrap();
    let after = ledger.count_scope_kind("rkkm", OracleKind::Covering);
    assert!(after - before <= 3);
}

#[test]
fn solve_housing_single_agent() {
    let market = make_quasilinear_market(&[vec![0.5]]).unwrap();
    let ledger = QueryLedger::new();
    let sol = solvers::solve_housing(&market, &ledger, 0.1, SolveOptions::default()).unwrap();
    assert_eq!(sol.point.coords(), &[0.0]);
    assert_eq!(sol.perm.as_slice(), &[0]);
    let report =
        verify::verify_solution(&Instance::Housing(market), &ledger, &sol, 0.1).unwrap();
    assert!(report.passed, "{:?}", report.violations);
}
