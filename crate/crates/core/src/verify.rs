//! Sampled validation of instance assumptions and exact validation of
//! solutions through their witnesses.
//!
//! Face sampling defaults to a deterministic low-discrepancy sequence
//! (Kronecker recurrence mapped to the simplex through sorted spacings);
//! a seeded uniform sampler is available behind a flag. All checks are
//! deterministic given the seed.

use crate::error::{Error, Result};
use crate::geometry::{l1_distance, Permutation, PriceVector, SimplexPoint};
use crate::ledger::QueryLedger;
use crate::oracles::{triangle_vertices, HousingInstance, Instance, RkkmInstance, SpernerInstance, SpernerVariant};
use crate::solution::{PanchromaticCell, Solution, TrichromaticCell};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One failed check: which rule, on which input, and what went wrong.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    pub input: String,
    pub detail: String,
}

/// Outcome of a verification run. `passed` holds exactly when there are no
/// violations; notes record caveats that are not violations.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Report {
    pub passed: bool,
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
}

impl Report {
    fn finish(mut self) -> Self {
        self.passed = self.violations.is_empty();
        self
    }

    fn violation(&mut self, check: &str, input: impl std::fmt::Debug, detail: impl Into<String>) {
        self.violations.push(Violation {
            check: check.to_string(),
            input: format!("{input:?}"),
            detail: detail.into(),
        });
    }
}

/// How faces are sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleMode {
    /// Kronecker low-discrepancy sequence (default; reproducible and
    /// well-spread).
    LowDiscrepancy,
    /// Seeded uniform draws.
    UniformRandom,
}

/// Deterministic points on the (k−1)-simplex.
pub fn simplex_samples(k: usize, count: usize, seed: u64, mode: SampleMode) -> Vec<Vec<f64>> {
    assert!(k >= 1);
    if k == 1 {
        // the 0-simplex has a single point
        return vec![vec![1.0]];
    }
    let mut out = Vec::with_capacity(count);
    match mode {
        SampleMode::LowDiscrepancy => {
            // generalized golden-ratio recurrence in k-1 dims
            let mut gamma = 1.0f64;
            for _ in 0..32 {
                gamma = (1.0 + gamma).powf(1.0 / (k as f64));
            }
            let alphas: Vec<f64> = (1..k).map(|j| (1.0 / gamma.powi(j as i32)).fract()).collect();
            let offset = (seed as f64 * 0.754_877_666_246_693).fract();
            for t in 0..count {
                let mut cuts: Vec<f64> = alphas
                    .iter()
                    .enumerate()
                    .map(|(j, a)| (offset + (t as f64 + 1.0) * a + 0.37 * j as f64).fract())
                    .collect();
                cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                out.push(spacings(&cuts));
            }
        }
        SampleMode::UniformRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..count {
                let mut cuts: Vec<f64> = (1..k).map(|_| rng.gen::<f64>()).collect();
                cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                out.push(spacings(&cuts));
            }
        }
    }
    out
}

fn spacings(cuts: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    let mut point = Vec::with_capacity(cuts.len() + 1);
    for &c in cuts {
        point.push(c - prev);
        prev = c;
    }
    point.push(1.0 - prev);
    point
}

fn embed_face(n: usize, support: &[usize], point: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for (slot, &i) in support.iter().enumerate() {
        x[i] = point[slot];
    }
    x
}

/// Check the KKM covering property of one covering given as a closure:
/// every face `F_S` must be covered by the union of its sets.
pub fn check_kkm_covering(
    n: usize,
    samples_per_face: usize,
    seed: u64,
    mode: SampleMode,
    mut oracle: impl FnMut(&[f64], usize) -> Result<bool>,
) -> Result<Report> {
    if n > 12 {
        return Err(Error::TooManySubsets(n));
    }
    let mut report = Report::default();
    for bits in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|i| bits & (1 << i) != 0).collect();
        let k = support.len();
        let count = if k == 1 { 1 } else { samples_per_face };
        for point in simplex_samples(k, count, seed ^ bits as u64, mode) {
            let x = embed_face(n, &support, &point);
            let covered = support.iter().try_fold(false, |acc, &i| -> Result<bool> {
                Ok(acc || oracle(&x, i)?)
            })?;
            if !covered {
                report.violation(
                    "kkm-face-coverage",
                    (&support, &x),
                    "face point not covered by the union over its support",
                );
            }
        }
    }
    Ok(report.finish())
}

/// Convenience: run [`check_kkm_covering`] on every covering of an
/// instance.
pub fn check_rkkm_coverings(
    inst: &RkkmInstance,
    ledger: &QueryLedger,
    samples_per_face: usize,
    seed: u64,
    mode: SampleMode,
) -> Result<Report> {
    let mut merged = Report::default();
    for covering in 0..inst.n() {
        let rep = check_kkm_covering(inst.n(), samples_per_face, seed, mode, |x, i| {
            inst.query_covering(ledger, covering, &SimplexPoint::new(x.to_vec())?, i)
        })?;
        merged.violations.extend(rep.violations);
        merged.notes.extend(rep.notes);
    }
    Ok(merged.finish())
}

/// Sparseness: covering set `i` must miss the face opposite vertex `i`.
pub fn check_sparseness(
    n: usize,
    samples: usize,
    seed: u64,
    mode: SampleMode,
    mut oracle: impl FnMut(&[f64], usize) -> Result<bool>,
) -> Result<Report> {
    let mut report = Report::default();
    if n == 1 {
        report.notes.push("sparseness is vacuous for a single set".into());
        return Ok(report.finish());
    }
    for i in 0..n {
        let support: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        for point in simplex_samples(n - 1, samples, seed ^ (i as u64) << 8, mode) {
            let x = embed_face(n, &support, &point);
            if oracle(&x, i)? {
                report.violation(
                    "sparseness",
                    (i, &x),
                    "set intersects the face opposite its vertex",
                );
            }
        }
    }
    Ok(report.finish())
}

pub fn check_rkkm_sparseness(
    inst: &RkkmInstance,
    ledger: &QueryLedger,
    samples: usize,
    seed: u64,
    mode: SampleMode,
) -> Result<Report> {
    let mut merged = Report::default();
    for covering in 0..inst.n() {
        let rep = check_sparseness(inst.n(), samples, seed, mode, |x, i| {
            inst.query_covering(ledger, covering, &SimplexPoint::new(x.to_vec())?, i)
        })?;
        merged.violations.extend(rep.violations);
        merged.notes.extend(rep.notes);
    }
    Ok(merged.finish())
}

/// Sampled checks of the market assumptions: no demand at price 1, and
/// some demanded house everywhere on Σₙ. Closedness cannot be sampled and
/// is reported as a note.
pub fn check_gale_assumptions(
    inst: &HousingInstance,
    ledger: &QueryLedger,
    samples: usize,
    seed: u64,
) -> Result<Report> {
    let n = inst.n();
    let mut report = Report::default();
    report
        .notes
        .push("closedness of preference sets is not sample-testable; generators carry it by construction".into());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // (ii): price at or above 1 kills demand for that house
    for _ in 0..samples {
        let j = rng.gen_range(0..n);
        let mut p = vec![0.0; n];
        for (idx, v) in p.iter_mut().enumerate() {
            *v = if idx == j { 1.0 + rng.gen::<f64>() * 0.25 } else { rng.gen::<f64>() };
        }
        // keep the vector on the oracle's natural domain
        let p = PriceVector::new(p)?;
        for agent in 0..n {
            if inst.query_preference(ledger, agent, &p, Some(j))? {
                report.violation(
                    "gale-ii",
                    (agent, j, p.coords()),
                    "house demanded although its price is at least 1",
                );
            }
        }
    }
    // (iii): everywhere on Σₙ every agent demands something
    for _ in 0..samples {
        let mut p: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let z = rng.gen_range(0..n);
        p[z] = 0.0;
        let p = PriceVector::new(p)?;
        for agent in 0..n {
            let mut any = false;
            for j in 0..n {
                if inst.query_preference(ledger, agent, &p, Some(j))? {
                    any = true;
                    break;
                }
            }
            if !any {
                report.violation(
                    "gale-iii",
                    (agent, p.coords()),
                    "agent demands no house at a point of Sigma_n",
                );
            }
        }
    }
    Ok(report.finish())
}

/// Boundary conditions of a Sperner coloring. Triangle instances are
/// checked exhaustively; cube instances exhaustively up to `N ≤ 64, d ≤ 3`
/// and on seeded boundary samples above that.
pub fn check_sperner_coloring(
    inst: &SpernerInstance,
    ledger: &QueryLedger,
    seed: u64,
) -> Result<Report> {
    let mut report = Report::default();
    match inst.variant() {
        SpernerVariant::Triangle { size } => {
            for v in triangle_vertices(size) {
                let c = inst.query_color(ledger, &v)?;
                if c > 2 {
                    report.violation("sperner-color-range", v, format!("color {c} out of range"));
                    continue;
                }
                if v[c as usize] == 0 {
                    report.violation(
                        "sperner-zero-face",
                        v,
                        format!("color {c} forbidden where coordinate {c} is zero"),
                    );
                }
            }
        }
        SpernerVariant::Cube { dim, size } => {
            let exhaustive = dim <= 3 && size <= 64;
            let check = |v: &[u32], report: &mut Report| -> Result<()> {
                let c = inst.query_color(ledger, v)?;
                if c as usize > dim {
                    report.violation("sperner-color-range", v, format!("color {c} out of range"));
                    return Ok(());
                }
                for (k, &coord) in v.iter().enumerate() {
                    if coord == 0 && c as usize == k + 1 {
                        report.violation(
                            "sperner-zero-face",
                            v,
                            format!("color {c} forbidden where coordinate {k} is zero"),
                        );
                    }
                }
                if c == 0 && v.contains(&size) {
                    report.violation(
                        "sperner-far-face",
                        v,
                        "color 0 forbidden where some coordinate is at N",
                    );
                }
                Ok(())
            };
            if exhaustive {
                let mut v = vec![0u32; dim];
                loop {
                    if v.iter().any(|&c| c == 0 || c == size) {
                        check(&v, &mut report)?;
                    }
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
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..4096 {
                    let mut v: Vec<u32> = (0..dim).map(|_| rng.gen_range(0..=size)).collect();
                    let pin = rng.gen_range(0..dim);
                    v[pin] = if rng.gen::<bool>() { 0 } else { size };
                    check(&v, &mut report)?;
                }
                report.notes.push("cube too large for exhaustive boundary check; sampled".into());
            }
        }
    }
    Ok(report.finish())
}

/// Exact witness-based validation of a point solution against its
/// instance.
pub fn verify_solution(
    inst: &Instance,
    ledger: &QueryLedger,
    sol: &Solution,
    eps: f64,
) -> Result<Report> {
    let mut report = Report::default();
    let n = match inst {
        Instance::Housing(h) => h.n(),
        Instance::Rkkm(r) => r.n(),
        Instance::Kkm(_) => 3,
        Instance::Cake(c) => c.players(),
        Instance::Sperner(_) => {
            return Err(Error::MissingWitnesses(
                "Sperner solutions are cells; use verify_panchromatic_cell".into(),
            ))
        }
    };
    if !matches!(inst, Instance::Cake(_)) && sol.witnesses.len() != n {
        return Err(Error::MissingWitnesses(format!(
            "expected {n} witnesses, found {}",
            sol.witnesses.len()
        )));
    }
    if sol.perm.as_slice().len() != n || !Permutation::is_valid(sol.perm.as_slice()) {
        report.violation("perm-bijection", sol.perm.as_slice(), "assignment is not a permutation");
        return Ok(report.finish());
    }
    let point = sol.point.coords();
    match inst {
        Instance::Housing(h) => {
            for i in 0..n {
                let w = &sol.witnesses[i];
                match l1_distance(point, w) {
                    Ok(d) if d <= eps + 1e-12 => {}
                    Ok(d) => report.violation(
                        "witness-distance",
                        (i, w),
                        format!("distance {d} exceeds epsilon {eps}"),
                    ),
                    Err(_) => {
                        report.violation("witness-distance", (i, w), "dimension mismatch");
                        continue;
                    }
                }
                let wp = PriceVector::new(w.clone())?;
                if !h.query_preference(ledger, i, &wp, Some(sol.perm.image(i)))? {
                    report.violation(
                        "witness-membership",
                        (i, w),
                        format!("agent {i} does not demand house {} at its witness", sol.perm.image(i)),
                    );
                }
            }
        }
        Instance::Rkkm(r) => {
            for i in 0..n {
                let w = &sol.witnesses[i];
                match l1_distance(point, w) {
                    Ok(d) if d <= eps + 1e-12 => {}
                    Ok(d) => report.violation(
                        "witness-distance",
                        (i, w),
                        format!("distance {d} exceeds epsilon {eps}"),
                    ),
                    Err(_) => {
                        report.violation("witness-distance", (i, w), "dimension mismatch");
                        continue;
                    }
                }
                match SimplexPoint::new(w.clone()) {
                    Ok(sp) if sp.in_simplex(1e-6) => {
                        if !r.query_covering(ledger, i, &sp, sol.perm.image(i))? {
                            report.violation(
                                "witness-membership",
                                (i, w),
                                format!("witness not in covering {i}, set {}", sol.perm.image(i)),
                            );
                        }
                    }
                    _ => report.violation("witness-domain", (i, w), "witness off the simplex"),
                }
            }
        }
        Instance::Kkm(k) => {
            for i in 0..n {
                let w = &sol.witnesses[i];
                match l1_distance(point, w) {
                    Ok(d) if d <= eps + 1e-12 => {}
                    Ok(d) => report.violation(
                        "witness-distance",
                        (i, w),
                        format!("distance {d} exceeds epsilon {eps}"),
                    ),
                    Err(_) => {
                        report.violation("witness-distance", (i, w), "dimension mismatch");
                        continue;
                    }
                }
                if !k.query_covering(ledger, w, sol.perm.image(i))? {
                    report.violation(
                        "witness-membership",
                        (i, w),
                        format!("witness not in covering set {}", sol.perm.image(i)),
                    );
                }
            }
        }
        Instance::Cake(c) => {
            // direct envy check: d² utility evaluations
            let cut = SimplexPoint::new(point.to_vec())?;
            let mut piece_utils = vec![vec![0.0f64; n]; n];
            for (player, row) in piece_utils.iter_mut().enumerate() {
                for (k, slot) in row.iter_mut().enumerate() {
                    let (a, b) = crate::reductions::cut_piece(&cut, k)?;
                    *slot = c.eval_utility(ledger, player, a, b)?;
                }
            }
            for (player, row) in piece_utils.iter().enumerate() {
                let own = row[sol.perm.image(player)];
                for (k, &other) in row.iter().enumerate() {
                    if own < other - eps - 1e-12 {
                        report.violation(
                            "envy",
                            (player, k),
                            format!("player {player} values piece {k} at {other} but gets {own}"),
                        );
                    }
                }
            }
        }
        Instance::Sperner(_) => unreachable!(),
    }
    Ok(report.finish())
}

/// Re-query a claimed panchromatic cell: colors must be a full palette and
/// labels a full label set.
pub fn verify_panchromatic_cell(
    inst: &SpernerInstance,
    ledger: &QueryLedger,
    cell: &PanchromaticCell,
) -> Result<Report> {
    let SpernerVariant::Cube { dim, .. } = inst.variant() else {
        return Err(Error::Format("panchromatic cells belong to cube instances".into()));
    };
    let mut report = Report::default();
    let mut colors_seen = vec![false; dim + 1];
    let mut labels_seen = vec![false; dim + 1];
    for (i, v) in cell.vertices.iter().enumerate() {
        let c = inst.query_color(ledger, v)? as usize;
        if c != cell.colors[i] as usize {
            report.violation("cell-color-mismatch", v, "recorded color disagrees with oracle");
        }
        if c <= dim {
            colors_seen[c] = true;
        }
        let l = cell.labels[i] as usize;
        if l <= dim {
            labels_seen[l] = true;
        }
    }
    if !colors_seen.iter().all(|&b| b) {
        report.violation("panchromatic", &cell.vertices, "cell does not carry every color");
    }
    if !labels_seen.iter().all(|&b| b) {
        report.violation("labels", &cell.vertices, "cell does not carry every label");
    }
    Ok(report.finish())
}

/// Re-query a claimed trichromatic triangle cell.
pub fn verify_trichromatic_cell(
    inst: &SpernerInstance,
    ledger: &QueryLedger,
    cell: &TrichromaticCell,
) -> Result<Report> {
    let SpernerVariant::Triangle { .. } = inst.variant() else {
        return Err(Error::Format("trichromatic cells belong to triangle instances".into()));
    };
    let mut report = Report::default();
    let mut seen = [false; 3];
    for (i, v) in cell.vertices.iter().enumerate() {
        let c = inst.query_color(ledger, v)?;
        if c != cell.colors[i] {
            report.violation("cell-color-mismatch", v, "recorded color disagrees with oracle");
        }
        seen[c as usize] = true;
    }
    if !seen.iter().all(|&b| b) {
        report.violation("trichromatic", cell.vertices, "cell does not carry all three colors");
    }
    Ok(report.finish())
}
