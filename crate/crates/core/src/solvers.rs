//! Terminal search procedures and the end-to-end pipelines.
//!
//! Two coverings on the segment are solved by bisection; everything else
//! funnels through sparsification and the Sperner reduction into a
//! lexicographic brute-force scan of the Kuhn triangulation. Vertex colors
//! are computed row by row (a row fixes the first coordinate) and memoized
//! across the cells that share them, so a full failed scan costs exactly
//! `(N+1)^d` color queries and early exits cost proportionally less. Row
//! coloring can fan out to worker threads; results and query counts do not
//! depend on the worker count. There is no path-following cell walk: the
//! exhaustive scan matches the query budget the pipelines are sized for,
//! and anything cleverer would be a separate solver, not a variant of it.

use crate::error::{Error, Result};
use crate::geometry::{l1_distance, Permutation};
use crate::ledger::QueryLedger;
use crate::oracles::{CakeInstance, HousingInstance, KkmInstance, RkkmInstance, SpernerInstance, SpernerVariant};
use crate::reductions;
use crate::solution::{PanchromaticCell, ProblemSolution, Solution, SolutionPoint};
use crate::triangulation::label;
use itertools::Itertools;
use std::collections::HashMap;
use std::sync::Mutex;

/// Execution knobs; defaults are single-threaded and cache-free.
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Worker threads for vertex coloring. Outputs and query counts are
    /// identical for any value.
    pub workers: usize,
    /// Cache covering queries outside the oracles; the ledger then counts
    /// oracle hits, not cache hits.
    pub memoize: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { workers: 1, memoize: false }
    }
}

/// Bisection for two coverings of the segment.
///
/// Maintains `x ∈ C⁰₀` and `y ∈ C¹₁` (initialized at the corners, which
/// the covering property forces into those sets) and halves the bracket
/// until it is within ε, or returns the midpoint as an exact solution with
/// the swapped assignment when it escapes both invariant sets.
pub fn solve_rkkm_2(inst: &RkkmInstance, ledger: &QueryLedger, eps: f64) -> Result<Solution> {
    if inst.n() != 2 {
        return Err(Error::DimensionMismatch(inst.n(), 2));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::EpsilonRange(eps));
    }
    let ctx = ledger.ctx(inst.table());
    let mut x = [1.0f64, 0.0];
    let mut y = [0.0f64, 1.0];
    if !inst.query_covering_ctx(&ctx, 0, &x, 0) {
        return Err(Error::InvariantBroken("corner e0 is not in covering 0, set 0".into()));
    }
    if !inst.query_covering_ctx(&ctx, 1, &y, 1) {
        return Err(Error::InvariantBroken("corner e1 is not in covering 1, set 1".into()));
    }
    for _ in 0..256 {
        let gap = l1_distance(&x, &y)?;
        if gap <= eps {
            break;
        }
        let z = [(x[0] + y[0]) / 2.0, (x[1] + y[1]) / 2.0];
        let keep_left = inst.query_covering_ctx(&ctx, 0, &z, 0);
        let keep_right = inst.query_covering_ctx(&ctx, 1, &z, 1);
        if !keep_left && !keep_right {
            // the covering property puts z in C⁰₁ ∩ C¹₀: exact, swapped
            return Ok(Solution {
                point: SolutionPoint::Simplex(z.to_vec()),
                perm: Permutation::new(vec![1, 0])?,
                witnesses: vec![z.to_vec(), z.to_vec()],
                epsilon_achieved: 0.0,
                queries: ledger.snapshot(),
            });
        }
        if keep_left {
            x = z;
        }
        if keep_right {
            y = z;
        }
    }
    let gap = l1_distance(&x, &y)?;
    if gap > eps {
        return Err(Error::InvariantBroken("bisection failed to converge".into()));
    }
    Ok(Solution {
        point: SolutionPoint::Simplex(x.to_vec()),
        perm: Permutation::identity(2),
        witnesses: vec![x.to_vec(), y.to_vec()],
        epsilon_achieved: gap,
        queries: ledger.snapshot(),
    })
}

/// Lexicographic brute-force scan for a panchromatic cell of a cube
/// Sperner instance.
pub fn solve_sperner_bruteforce(
    inst: &SpernerInstance,
    ledger: &QueryLedger,
    opts: SolveOptions,
) -> Result<PanchromaticCell> {
    let SpernerVariant::Cube { dim, size } = inst.variant() else {
        return Err(Error::Format("brute force runs on cube instances".into()));
    };
    if size == 0 || dim == 0 {
        return Err(Error::Domain("degenerate cube".into()));
    }
    let width_u128 = (size as u128 + 1).pow(dim as u32 - 1);
    if width_u128 > 1 << 34 {
        return Err(Error::Domain(format!("triangulation too large: {width_u128} vertices per row")));
    }
    let width = width_u128 as usize;
    let workers = opts.workers.max(1);
    let ctx = ledger.ctx(inst.table());

    let color_row = |row: u32, buf: &mut Vec<u8>| {
        buf.resize(width, 0);
        let decode = |mut idx: usize, v: &mut [u32]| {
            v[0] = row;
            for c in (1..dim).rev() {
                v[c] = (idx % (size as usize + 1)) as u32;
                idx /= size as usize + 1;
            }
        };
        if workers <= 1 || width < 1024 {
            let mut v = vec![0u32; dim];
            for (idx, slot) in buf.iter_mut().enumerate() {
                decode(idx, &mut v);
                *slot = inst.query_color_ctx(&ctx, &v);
            }
        } else {
            let chunk = width.div_ceil(workers);
            std::thread::scope(|s| {
                for (c, slice) in buf.chunks_mut(chunk).enumerate() {
                    let ctx = ctx.clone();
                    s.spawn(move || {
                        let mut v = vec![0u32; dim];
                        for (off, slot) in slice.iter_mut().enumerate() {
                            decode(c * chunk + off, &mut v);
                            *slot = inst.query_color_ctx(&ctx, &v);
                        }
                    });
                }
            });
        }
    };

    let perms: Vec<Vec<usize>> = (0..dim).permutations(dim).collect();
    let full_mask: u64 = (1u64 << (dim + 1)) - 1;
    let mut cur = Vec::new();
    let mut next = Vec::new();
    color_row(0, &mut cur);
    let rest_index = |v: &[u32]| -> usize {
        v[1..].iter().fold(0usize, |acc, &c| acc * (size as usize + 1) + c as usize)
    };
    let mut vertices: Vec<Vec<u32>> = vec![vec![0; dim]; dim + 1];
    for row in 0..size {
        color_row(row + 1, &mut next);
        // anchors with first coordinate `row`, remaining coordinates in
        // lexicographic order
        let anchor_count = (size as usize).pow(dim as u32 - 1);
        let mut anchor = vec![0u32; dim];
        for a_idx in 0..anchor_count {
            anchor[0] = row;
            let mut t = a_idx;
            for c in (1..dim).rev() {
                anchor[c] = (t % size as usize) as u32;
                t /= size as usize;
            }
            for perm in &perms {
                vertices[0].copy_from_slice(&anchor);
                for (k, &axis) in perm.iter().enumerate() {
                    let (head, tail) = vertices.split_at_mut(k + 1);
                    tail[0].copy_from_slice(&head[k]);
                    tail[0][axis] += 1;
                }
                let mut mask = 0u64;
                for v in &vertices {
                    let color = if v[0] == row { cur[rest_index(v)] } else { next[rest_index(v)] };
                    mask |= 1u64 << color;
                }
                if mask == full_mask {
                    let labels = vertices
                        .iter()
                        .map(|v| label(v, size))
                        .collect::<Result<Vec<u8>>>()?;
                    let colors = vertices
                        .iter()
                        .map(|v| if v[0] == row { cur[rest_index(v)] } else { next[rest_index(v)] })
                        .collect();
                    return Ok(PanchromaticCell {
                        anchor: anchor.clone(),
                        perm: Permutation::new(perm.clone())?,
                        vertices: vertices.clone(),
                        labels,
                        colors,
                        queries: ledger.snapshot(),
                    });
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Err(Error::NoPanchromaticCell)
}

/// Wrap an instance's covering oracle in an external cache. Cache hits do
/// not reach the source, so the ledger counts true oracle hits only.
type MemoKey = (usize, usize, Vec<u64>);

fn memoize_coverings(inst: &RkkmInstance) -> RkkmInstance {
    let inner = inst.clone();
    let cache: Mutex<HashMap<MemoKey, bool>> = Mutex::new(HashMap::new());
    RkkmInstance::on_table(
        inst.table().clone(),
        inst.n(),
        inst.is_sparse(),
        &format!("{}.memo", inst.scope()),
        std::sync::Arc::new(move |ctx, covering, x, set| {
            let key = (covering, set, x.iter().map(|v| v.to_bits()).collect::<Vec<u64>>());
            if let Some(&hit) = cache.lock().unwrap().get(&key) {
                return hit;
            }
            let val = inner.query_covering_ctx(ctx, covering, x, set);
            cache.lock().unwrap().insert(key, val);
            val
        }),
    )
}

/// Solve a Rainbow-KKM instance at `eps`.
///
/// `n = 2` dispatches to bisection; otherwise the pipeline is
/// sparsify → Sperner reduction → brute force → back-map, with total
/// covering queries at most `n(N+1)^{n−1}` for `N = ⌈n/ε″⌉` at the
/// post-sparsification `ε″ = ε/2`.
pub fn solve_rkkm(
    inst: &RkkmInstance,
    ledger: &QueryLedger,
    eps: f64,
    opts: SolveOptions,
) -> Result<Solution> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::EpsilonRange(eps));
    }
    let work = if opts.memoize { memoize_coverings(inst) } else { inst.clone() };
    match work.n() {
        0 => Err(Error::Domain("empty covering family".into())),
        1 => {
            let ctx = ledger.ctx(work.table());
            if !work.query_covering_ctx(&ctx, 0, &[1.0], 0) {
                return Err(Error::InvariantBroken("singleton covering misses the point".into()));
            }
            Ok(Solution {
                point: SolutionPoint::Simplex(vec![1.0]),
                perm: Permutation::identity(1),
                witnesses: vec![vec![1.0]],
                epsilon_achieved: 0.0,
                queries: ledger.snapshot(),
            })
        }
        2 => solve_rkkm_2(&work, ledger, eps),
        _ => {
            let (sparse, desparsify) = reductions::sparsify(&work, eps)?;
            let inner_eps = desparsify.target_epsilon.expect("sparsify sets a target");
            let (sperner, desperner) = reductions::rkkm_to_sperner(&sparse, inner_eps)?;
            let cell = solve_sperner_bruteforce(&sperner, ledger, opts)?;
            let sol = desperner.backmap(ledger, ProblemSolution::CubeCell(cell))?;
            let mut sol = desparsify.backmap(ledger, sol)?.into_point()?;
            sol.queries = ledger.snapshot();
            Ok(sol)
        }
    }
}

/// Solve a housing market: map to coverings at `ε/n²`, solve, pull prices
/// back through the inverse homeomorphism.
pub fn solve_housing(
    inst: &HousingInstance,
    ledger: &QueryLedger,
    eps: f64,
    opts: SolveOptions,
) -> Result<Solution> {
    let (rkkm, red) = reductions::housing_to_rkkm(inst, eps)?;
    let inner = solve_rkkm(&rkkm, ledger, red.target_epsilon.unwrap(), opts)?;
    let mut sol = red.backmap(ledger, ProblemSolution::Point(inner))?.into_point()?;
    sol.queries = ledger.snapshot();
    Ok(sol)
}

/// Solve a cake instance: an ε-envy-free cut via coverings at `ε/(4K)`.
pub fn solve_cake(
    inst: &CakeInstance,
    ledger: &QueryLedger,
    eps: f64,
    opts: SolveOptions,
) -> Result<Solution> {
    let (rkkm, red) = reductions::cake_to_rkkm(inst, eps)?;
    let inner = solve_rkkm(&rkkm, ledger, red.target_epsilon.unwrap(), opts)?;
    let mut sol = red.backmap(ledger, ProblemSolution::Point(inner))?.into_point()?;
    sol.queries = ledger.snapshot();
    Ok(sol)
}

/// Solve a single KKM covering of the scaled triangle at absolute
/// tolerance `eps` by cloning it into three identical coverings.
pub fn solve_kkm(
    inst: &KkmInstance,
    ledger: &QueryLedger,
    eps: f64,
    opts: SolveOptions,
) -> Result<Solution> {
    let (rkkm, red) = reductions::kkm_to_rkkm(inst, eps)?;
    let inner = solve_rkkm(&rkkm, ledger, red.target_epsilon.unwrap(), opts)?;
    let mut sol = red.backmap(ledger, ProblemSolution::Point(inner))?.into_point()?;
    sol.queries = ledger.snapshot();
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::OracleKind;
    use crate::oracles::make_weighted_argmax_rkkm;

    #[test]
    fn bisection_on_flat_coverings_collapses_to_midpoint() {
        let inst = make_weighted_argmax_rkkm(&[1.0, 1.0]).unwrap();
        let ledger = QueryLedger::new();
        let sol = solve_rkkm_2(&inst, &ledger, 1e-6).unwrap();
        // C⁰₀ = {x₀ ≥ x₁}, C¹₁ = {x₁ ≥ x₀}: both hold at the midpoint, so the
        // bracket collapses immediately.
        assert!((sol.point.coords()[0] - 0.5).abs() <= 1e-6);
        assert_eq!(sol.perm.as_slice(), &[0, 1]);
        assert_eq!(sol.witnesses.len(), 2);
        assert!(sol.epsilon_achieved <= 1e-6);
    }

    #[test]
    fn bisection_query_budget() {
        let inst = make_weighted_argmax_rkkm(&[3.0, 1.0]).unwrap();
        for eps in [1e-2, 1e-4, 1e-6] {
            let ledger = QueryLedger::new();
            let sol = solve_rkkm_2(&inst, &ledger, eps).unwrap();
            assert!(sol.epsilon_achieved <= eps);
            let budget = 4 * (2.0 / eps).log2().ceil() as u64 + 4;
            assert!(ledger.total() <= budget, "{} > {budget}", ledger.total());
        }
    }

    #[test]
    fn bisection_with_unit_epsilon_is_constant_work() {
        // the interval starts at length 2, so eps = 1 needs one halving
        let inst = make_weighted_argmax_rkkm(&[1.0, 2.0]).unwrap();
        let ledger = QueryLedger::new();
        let sol = solve_rkkm_2(&inst, &ledger, 1.0).unwrap();
        assert!(sol.epsilon_achieved <= 1.0);
        assert!(ledger.total() <= 8);
    }

    #[test]
    fn bisection_detects_swap_solutions() {
        // C⁰₀ only near e0, C¹₁ only near e1: the first midpoint is in
        // neither, giving an exact swapped solution.
        let inst = RkkmInstance::from_oracle(2, true, "swap", |_, covering, x, set| {
            if covering == 0 {
                if set == 0 { x[0] >= 0.9 } else { x[0] <= 0.9 }
            } else if set == 1 {
                x[1] >= 0.9
            } else {
                x[1] <= 0.9
            }
        });
        let ledger = QueryLedger::new();
        let sol = solve_rkkm_2(&inst, &ledger, 1e-3).unwrap();
        assert_eq!(sol.perm.as_slice(), &[1, 0]);
        assert_eq!(sol.epsilon_achieved, 0.0);
        assert_eq!(sol.point.coords(), &[0.5, 0.5]);
    }

    #[test]
    fn bisection_rejects_broken_invariants() {
        let inst = RkkmInstance::from_oracle(2, true, "broken", |_, _, _, _| false);
        let ledger = QueryLedger::new();
        assert!(matches!(
            solve_rkkm_2(&inst, &ledger, 0.1),
            Err(Error::InvariantBroken(_))
        ));
    }

    #[test]
    fn bruteforce_on_1d_instance() {
        let inst = SpernerInstance::cube_from_colors(1, 4, vec![0, 0, 0, 1, 1]).unwrap();
        let ledger = QueryLedger::new();
        let cell = solve_sperner_bruteforce(&inst, &ledger, SolveOptions::default()).unwrap();
        assert_eq!(cell.anchor, vec![2]);
        assert_eq!(cell.vertices, vec![vec![2], vec![3]]);
        assert_eq!(cell.colors, vec![0, 1]);
        assert_eq!(cell.labels, vec![0, 1]);
    }

    #[test]
    fn bruteforce_smallest_square() {
        // N = 1, d = 2: the boundary rules pin three of the four corners, a
        // panchromatic cell is forced; assert the property only.
        let c = |v: &[u32]| -> u8 {
            match (v[0], v[1]) {
                (0, 0) => 0,
                (1, 0) => 1,
                (0, 1) => 2,
                _ => 1,
            }
        };
        let colors: Vec<u8> = (0..=1u32)
            .flat_map(|a| (0..=1u32).map(move |b| c(&[a, b])))
            .collect();
        let inst = SpernerInstance::cube_from_colors(2, 1, colors).unwrap();
        let ledger = QueryLedger::new();
        let cell = solve_sperner_bruteforce(&inst, &ledger, SolveOptions::default()).unwrap();
        let mut seen = [false; 3];
        for &c in &cell.colors {
            seen[c as usize] = true;
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn bruteforce_failed_scan_costs_every_vertex_once() {
        // all-zero coloring has no panchromatic cell; the scan colors each
        // of the (N+1)^d vertices exactly once
        let n_side = 3u32;
        let inst = SpernerInstance::cube_from_colors(2, n_side, vec![0; 16]).unwrap();
        let ledger = QueryLedger::new();
        let err = solve_sperner_bruteforce(&inst, &ledger, SolveOptions::default());
        assert!(matches!(err, Err(Error::NoPanchromaticCell)));
        assert_eq!(
            ledger.count_scope_kind("sperner", OracleKind::Coloring),
            ((n_side + 1) * (n_side + 1)) as u64
        );
    }

    #[test]
    fn bruteforce_worker_count_does_not_change_results() {
        let src = make_weighted_argmax_rkkm(&[1.0, 2.0, 3.0]).unwrap();
        let mut outputs = Vec::new();
        for workers in [1usize, 4] {
            let ledger = QueryLedger::new();
            let sol = solve_rkkm(
                &src,
                &ledger,
                0.25,
                SolveOptions { workers, memoize: false },
            )
            .unwrap();
            outputs.push((sol.point.coords().to_vec(), sol.perm.clone(), ledger.total()));
        }
        assert_eq!(outputs[0], outputs[1]);
    }

    #[test]
    fn solve_rkkm_finds_common_point_of_identical_coverings() {
        let inst = make_weighted_argmax_rkkm(&[1.0, 2.0, 3.0]).unwrap();
        let ledger = QueryLedger::new();
        let eps = 0.25;
        let sol = solve_rkkm(&inst, &ledger, eps, SolveOptions::default()).unwrap();
        let target = [1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0];
        // independent confirmation that the full intersection clusters at the
        // target: dense grid scan over the simplex
        let covering = crate::oracles::make_weighted_argmax_covering(&[1.0, 2.0, 3.0]).unwrap();
        let pitch = 60u32;
        for a in 0..=pitch {
            for b in 0..=(pitch - a) {
                let x = [
                    a as f64 / pitch as f64,
                    b as f64 / pitch as f64,
                    (pitch - a - b) as f64 / pitch as f64,
                ];
                if (0..3).all(|j| covering.contains(&x, j)) {
                    let d = l1_distance(&x, &target).unwrap();
                    assert!(d <= 0.1, "grid point {x:?} in all sets but {d} from the target");
                }
            }
        }
        let d = l1_distance(sol.point.coords(), &target).unwrap();
        assert!(d <= eps, "solution {:?} is {d} away from the common point", sol.point);
        assert!(sol.epsilon_achieved <= eps);
        // query ceiling: n(N+1)^{n-1} at N = ceil(n / (eps/2))
        let n_side = (3.0 / (eps / 2.0)).ceil() as u64;
        let budget = 3 * (n_side + 1).pow(2);
        assert!(ledger.count_scope_kind("rkkm", OracleKind::Covering) <= budget);
    }

    #[test]
    fn solve_rkkm_n2_dispatches_to_bisection() {
        let inst = make_weighted_argmax_rkkm(&[1.0, 1.0]).unwrap();
        let ledger = QueryLedger::new();
        let sol = solve_rkkm(&inst, &ledger, 1e-5, SolveOptions::default()).unwrap();
        assert!(sol.epsilon_achieved <= 1e-5);
        // logarithmic, not linear in 1/eps
        assert!(ledger.total() < 100);
    }

    #[test]
    fn solve_rkkm_n1_trivial() {
        let inst = make_weighted_argmax_rkkm(&[2.0]).unwrap();
        let ledger = QueryLedger::new();
        let sol = solve_rkkm(&inst, &ledger, 0.1, SolveOptions::default()).unwrap();
        assert_eq!(sol.point.coords(), &[1.0]);
    }

    #[test]
    fn memoization_reduces_oracle_hits_but_not_answers() {
        let src = make_weighted_argmax_rkkm(&[1.0, 1.0, 2.0]).unwrap();
        let plain_ledger = QueryLedger::new();
        let plain = solve_rkkm(&src, &plain_ledger, 0.5, SolveOptions::default()).unwrap();
        let memo_ledger = QueryLedger::new();
        let memo = solve_rkkm(
            &src,
            &memo_ledger,
            0.5,
            SolveOptions { workers: 1, memoize: true },
        )
        .unwrap();
        assert_eq!(plain.point.coords(), memo.point.coords());
        let plain_hits = plain_ledger.count_scope_kind("rkkm", OracleKind::Covering);
        let memo_hits = memo_ledger.count_scope_kind("rkkm", OracleKind::Covering);
        assert!(memo_hits <= plain_hits);
    }
}
