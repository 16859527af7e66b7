//! Instance-to-instance reductions.
//!
//! Each reduction builds a target instance whose oracles delegate to the
//! source (so source queries stay metered at the source scope) and returns
//! a [`Reduction`] record carrying the ε bookkeeping and a solution
//! back-mapper. Per target query, the source pays at most: 1 (market
//! lifting, sparsification, both market/covering directions), `d` (cake),
//! 3 (triangle Sperner to KKM), 1 (KKM to Rainbow-KKM) and `n`
//! (Rainbow-KKM to Sperner) oracle calls.

use crate::error::{Error, Result};
use crate::geometry::{self, Permutation, SimplexPoint, TOL};
use crate::ledger::QueryLedger;
use crate::oracles::{CakeInstance, HousingInstance, KkmInstance, RkkmInstance, SpernerInstance, SpernerVariant};
use crate::solution::{ProblemSolution, Solution, SolutionPoint, TrichromaticCell};
use crate::triangulation::{barycentric, containing_triangle_cell, label, nearest_triangle_vertices};

type BackmapFn = Box<dyn Fn(&QueryLedger, ProblemSolution) -> Result<ProblemSolution> + Send + Sync>;

/// A forward-constructed target instance's ε bookkeeping plus the map from
/// target solutions back to source solutions.
pub struct Reduction {
    pub name: &'static str,
    /// Approximation parameter the source instance is solved for.
    pub source_epsilon: Option<f64>,
    /// Approximation parameter the target must be solved at so that the
    /// back-mapped solution meets `source_epsilon`.
    pub target_epsilon: Option<f64>,
    backmap: BackmapFn,
}

impl Reduction {
    pub fn backmap(&self, ledger: &QueryLedger, sol: ProblemSolution) -> Result<ProblemSolution> {
        (self.backmap)(ledger, sol)
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::EpsilonRange(eps));
    }
    Ok(())
}

/// Zero out entries `≤ δ` and renormalize. Errors when nothing survives.
pub fn project_sparse(x: &SimplexPoint, delta: f64) -> Result<SimplexPoint> {
    if !(delta > 0.0 && delta < 0.25) {
        return Err(Error::Domain(format!("delta {delta} outside (0, 1/4)")));
    }
    if !x.in_simplex(TOL) {
        return Err(Error::Domain(format!("{:?} is not on the simplex", x.coords())));
    }
    SimplexPoint::new(project_sparse_coords(x.coords(), delta)?)
}

fn project_sparse_coords(x: &[f64], delta: f64) -> Result<Vec<f64>> {
    let mut kept = 0.0;
    for &v in x {
        if v > delta {
            kept += v;
        }
    }
    if kept <= 0.0 {
        return Err(Error::DegenerateInput);
    }
    Ok(x.iter().map(|&v| if v > delta { v / kept } else { 0.0 }).collect())
}

/// Endpoints of the k-th piece of a cut: `[Σ_{j<k} x_j, Σ_{j≤k} x_j]`.
pub fn cut_piece(x: &SimplexPoint, k: usize) -> Result<(f64, f64)> {
    if k >= x.n() {
        return Err(Error::IndexOutOfRange(format!("piece {k} of {}", x.n())));
    }
    let a: f64 = x.coords()[..k].iter().sum();
    let b = a + x.coords()[k];
    Ok((a.clamp(0.0, 1.0), b.clamp(0.0, 1.0)))
}

fn child_scope(parent: &str, suffix: &str) -> String {
    format!("{parent}.{suffix}")
}

/// Embed an n-agent market into an (n+1)-agent market with the same ε.
///
/// The new agent wants the new house at any price up to 3/4 and an old
/// house only when that house is free and the new house is expensive; old
/// agents keep their preferences on the first n coordinates and accept the
/// new house only at price exactly zero. Any ε-equilibrium then assigns
/// the new house to the new agent, and dropping the last coordinate is an
/// ε-equilibrium of the source.
pub fn lift_market(src: &HousingInstance, eps: f64) -> Result<(HousingInstance, Reduction)> {
    check_epsilon(eps)?;
    let n = src.n();
    let inner = src.clone();
    let target = HousingInstance::on_table(
        src.table().clone(),
        n + 1,
        &child_scope(src.scope(), "lift"),
        std::sync::Arc::new(move |ctx, agent, q, house| {
            let Some(j) = house else { return true };
            if agent < n {
                if j < n {
                    inner.query_preference_ctx(ctx, agent, &q[..n], Some(j))
                } else {
                    q[n] == 0.0
                }
            } else if j < n {
                q[j] == 0.0 && q[n] >= 0.75
            } else {
                q[n] <= 0.75
            }
        }),
    );
    let backmap: BackmapFn = Box::new(move |_, sol| {
        let sol = sol.into_point()?;
        let coords = sol.point.coords();
        if coords.len() != n + 1 {
            return Err(Error::DimensionMismatch(coords.len(), n + 1));
        }
        if sol.perm.image(n) != n {
            return Err(Error::InvariantBroken(
                "lifted equilibrium does not assign the new house to the new agent".into(),
            ));
        }
        let point = SolutionPoint::Prices(coords[..n].to_vec());
        let perm = Permutation::new(sol.perm.as_slice()[..n].to_vec())?;
        let witnesses: Vec<Vec<f64>> = sol.witnesses[..n].iter().map(|w| w[..n].to_vec()).collect();
        let epsilon_achieved = Solution::measure_epsilon(point.coords(), &witnesses);
        Ok(ProblemSolution::Point(Solution {
            point,
            perm,
            witnesses,
            epsilon_achieved,
            queries: sol.queries,
        }))
    });
    Ok((
        target,
        Reduction {
            name: "lift-market",
            source_epsilon: Some(eps),
            target_epsilon: Some(eps),
            backmap,
        },
    ))
}

/// Replace a covering family by a sparse one: `D_i = {x : x_i ≥ δ and
/// τ(x) ∈ C_i}` with `δ = ε/(8n)`, solved at `ε′ = ε/2`. Back-mapping
/// projects the point and the witnesses through τ.
pub fn sparsify(src: &RkkmInstance, eps: f64) -> Result<(RkkmInstance, Reduction)> {
    check_epsilon(eps)?;
    let n = src.n();
    let delta = eps / (8.0 * n as f64);
    let inner = src.clone();
    let target = RkkmInstance::on_table(
        src.table().clone(),
        n,
        true,
        &child_scope(src.scope(), "sparse"),
        std::sync::Arc::new(move |ctx, covering, x, set| {
            if x[set] < delta {
                return false;
            }
            match project_sparse_coords(x, delta) {
                Ok(tx) => inner.query_covering_ctx(ctx, covering, &tx, set),
                Err(_) => false,
            }
        }),
    );
    let backmap: BackmapFn = Box::new(move |_, sol| {
        let sol = sol.into_point()?;
        let point = SolutionPoint::Simplex(project_sparse_coords(sol.point.coords(), delta)?);
        let witnesses = sol
            .witnesses
            .iter()
            .map(|w| project_sparse_coords(w, delta))
            .collect::<Result<Vec<_>>>()?;
        let epsilon_achieved = Solution::measure_epsilon(point.coords(), &witnesses);
        Ok(ProblemSolution::Point(Solution {
            point,
            perm: sol.perm,
            witnesses,
            epsilon_achieved,
            queries: sol.queries,
        }))
    });
    Ok((
        target,
        Reduction {
            name: "sparsify",
            source_epsilon: Some(eps),
            target_epsilon: Some(eps / 2.0),
            backmap,
        },
    ))
}

/// Market to covering family: covering `i`, set `j` holds the φ-image of
/// preference set `P^i_j` on Σₙ. Solved at `ε′ = ε/n²` because the inverse
/// map is n²-Lipschitz. The produced coverings are sparse.
pub fn housing_to_rkkm(src: &HousingInstance, eps: f64) -> Result<(RkkmInstance, Reduction)> {
    check_epsilon(eps)?;
    let n = src.n();
    let inner = src.clone();
    let target = RkkmInstance::on_table(
        src.table().clone(),
        n,
        true,
        &child_scope(src.scope(), "rkkm"),
        std::sync::Arc::new(move |ctx, covering, x, set| {
            let p = geometry::phi_inverse_coords(x);
            inner.query_preference_ctx(ctx, covering, &p, Some(set))
        }),
    );
    let backmap: BackmapFn = Box::new(move |_, sol| {
        let sol = sol.into_point()?;
        let point = SolutionPoint::Prices(geometry::phi_inverse_coords(sol.point.coords()));
        let witnesses: Vec<Vec<f64>> = sol
            .witnesses
            .iter()
            .map(|w| geometry::phi_inverse_coords(w))
            .collect();
        let epsilon_achieved = Solution::measure_epsilon(point.coords(), &witnesses);
        Ok(ProblemSolution::Point(Solution {
            point,
            perm: sol.perm,
            witnesses,
            epsilon_achieved,
            queries: sol.queries,
        }))
    });
    Ok((
        target,
        Reduction {
            name: "housing-to-rkkm",
            source_epsilon: Some(eps),
            target_epsilon: Some(eps / (n * n) as f64),
            backmap,
        },
    ))
}

/// Covering family to market: preference set `P^i_j` is the φ-preimage of
/// covering set `C^i_j`; prices off Σₙ are demanded by nobody. Requires a
/// sparse source so the market satisfies the price-1 bounding assumption.
/// Solved at `ε′ = ε/n` because φ is n-Lipschitz.
pub fn rkkm_to_housing(src: &RkkmInstance, eps: f64) -> Result<(HousingInstance, Reduction)> {
    check_epsilon(eps)?;
    if !src.is_sparse() {
        return Err(Error::NotSparse);
    }
    let n = src.n();
    let inner = src.clone();
    let target = HousingInstance::on_table(
        src.table().clone(),
        n,
        &child_scope(src.scope(), "housing"),
        std::sync::Arc::new(move |ctx, agent, p, house| {
            let Some(j) = house else { return true };
            if !geometry::in_sigma_coords(p, TOL) {
                return false;
            }
            let x = geometry::phi_coords(p);
            inner.query_covering_ctx(ctx, agent, &x, j)
        }),
    );
    let backmap: BackmapFn = Box::new(move |_, sol| {
        let sol = sol.into_point()?;
        let point = SolutionPoint::Simplex(geometry::phi_coords(sol.point.coords()));
        let witnesses: Vec<Vec<f64>> =
            sol.witnesses.iter().map(|w| geometry::phi_coords(w)).collect();
        let epsilon_achieved = Solution::measure_epsilon(point.coords(), &witnesses);
        Ok(ProblemSolution::Point(Solution {
            point,
            perm: sol.perm,
            witnesses,
            epsilon_achieved,
            queries: sol.queries,
        }))
    });
    Ok((
        target,
        Reduction {
            name: "rkkm-to-housing",
            source_epsilon: Some(eps),
            target_epsilon: Some(eps / n as f64),
            backmap,
        },
    ))
}

/// Cake to covering family: covering `i`, set `j` holds the cuts where
/// piece `j` is weakly best for player `i`; one membership query costs `d`
/// utility evaluations. Solved at `ε′ = ε/(4K)`.
pub fn cake_to_rkkm(src: &CakeInstance, eps: f64) -> Result<(RkkmInstance, Reduction)> {
    check_epsilon(eps)?;
    let d = src.players();
    let inner = src.clone();
    let target = RkkmInstance::on_table(
        src.table().clone(),
        d,
        true,
        &child_scope(src.scope(), "rkkm"),
        std::sync::Arc::new(move |ctx, covering, x, set| {
            let mut best = f64::NEG_INFINITY;
            let mut chosen = f64::NEG_INFINITY;
            let mut a = 0.0f64;
            for (k, &len) in x.iter().enumerate() {
                let b = (a + len).clamp(0.0, 1.0);
                let u = inner.eval_utility_ctx(ctx, covering, a.min(b), b);
                if k == set {
                    chosen = u;
                }
                if u > best {
                    best = u;
                }
                a = b;
            }
            chosen >= best - crate::oracles::TIE_TOL
        }),
    );
    let backmap: BackmapFn = Box::new(move |_, sol| {
        let sol = sol.into_point()?;
        let point = SolutionPoint::Cut(sol.point.coords().to_vec());
        let witnesses = sol.witnesses;
        let epsilon_achieved = Solution::measure_epsilon(point.coords(), &witnesses);
        Ok(ProblemSolution::Point(Solution {
            point,
            perm: sol.perm,
            witnesses,
            epsilon_achieved,
            queries: sol.queries,
        }))
    });
    Ok((
        target,
        Reduction {
            name: "cake-to-rkkm",
            source_epsilon: Some(eps),
            target_epsilon: Some(eps / (4.0 * src.lipschitz())),
            backmap,
        },
    ))
}

/// Triangle Sperner to a KKM covering of the scaled triangle: set `i` holds
/// the points with an i-colored nearest lattice vertex (at most 3 coloring
/// queries each). Any 1/8-approximate KKM point lies strictly inside a
/// trichromatic cell, which the back-mapper recovers by rounding.
pub fn sperner2d_to_kkm(src: &SpernerInstance) -> Result<(KkmInstance, Reduction)> {
    let SpernerVariant::Triangle { size } = src.variant() else {
        return Err(Error::Format("sperner2d-to-kkm needs a triangle instance".into()));
    };
    let inner = src.clone();
    let target = KkmInstance::on_table(
        src.table().clone(),
        size,
        true,
        &child_scope(src.scope(), "kkm"),
        std::sync::Arc::new(move |ctx, y, set| {
            match nearest_triangle_vertices(y, size) {
                Ok(nearest) => nearest
                    .iter()
                    .any(|v| inner.query_color_ctx(ctx, v) == set as u8),
                Err(_) => false,
            }
        }),
    );
    let inner = src.clone();
    let backmap: BackmapFn = Box::new(move |ledger, sol| {
        let sol = sol.into_point()?;
        let cell = containing_triangle_cell(sol.point.coords(), size)?;
        let mut colors = [0u8; 3];
        for (slot, v) in colors.iter_mut().zip(cell.vertices.iter()) {
            *slot = inner.query_color(ledger, v)?;
        }
        Ok(ProblemSolution::TriangleCell(TrichromaticCell { vertices: cell.vertices, colors }))
    });
    Ok((
        target,
        Reduction {
            name: "sperner2d-to-kkm",
            source_epsilon: None,
            target_epsilon: Some(0.125),
            backmap,
        },
    ))
}

/// One KKM covering of the scaled triangle to three identical coverings of
/// the unit simplex, solved at `ε′ = ε/N`. Back-mapping rescales the point
/// and redistributes the per-covering witnesses to the sets they certify.
pub fn kkm_to_rkkm(src: &KkmInstance, eps: f64) -> Result<(RkkmInstance, Reduction)> {
    check_epsilon(eps)?;
    let scale = src.scale() as f64;
    let inner = src.clone();
    let target = RkkmInstance::on_table(
        src.table().clone(),
        3,
        src.is_sparse(),
        &child_scope(src.scope(), "rkkm"),
        std::sync::Arc::new(move |ctx, _covering, x, set| {
            let y = [x[0] * scale, x[1] * scale, x[2] * scale];
            inner.query_covering_ctx(ctx, &y, set)
        }),
    );
    let backmap: BackmapFn = Box::new(move |_, sol| {
        let sol = sol.into_point()?;
        let scale_up = |w: &[f64]| -> Vec<f64> { w.iter().map(|&v| v * scale).collect() };
        let point = SolutionPoint::Prices(scale_up(sol.point.coords()));
        // witness for covering i certifies set π(i); store it under the set
        let mut witnesses = vec![Vec::new(); 3];
        for (i, w) in sol.witnesses.iter().enumerate() {
            witnesses[sol.perm.image(i)] = scale_up(w);
        }
        let epsilon_achieved = Solution::measure_epsilon(point.coords(), &witnesses);
        Ok(ProblemSolution::Point(Solution {
            point,
            perm: Permutation::identity(3),
            witnesses,
            epsilon_achieved,
            queries: sol.queries,
        }))
    });
    Ok((
        target,
        Reduction {
            name: "kkm-to-rkkm",
            source_epsilon: Some(eps),
            target_epsilon: Some(eps / scale),
            backmap,
        },
    ))
}

/// Covering family to a cube Sperner instance on `[0,N]^{n−1}` with
/// `N = ⌈n/ε⌉`: a vertex is colored by the first covering set (of the
/// covering picked by the vertex's label) containing its barycentric
/// coordinates — at most n covering queries per color. A panchromatic cell
/// back-maps to the barycentric point of its label-0 vertex plus the
/// permutation read off the colors.
pub fn rkkm_to_sperner(src: &RkkmInstance, eps: f64) -> Result<(SpernerInstance, Reduction)> {
    check_epsilon(eps)?;
    if !src.is_sparse() {
        return Err(Error::NotSparse);
    }
    let n = src.n();
    if n < 2 {
        return Err(Error::Domain("need at least two coverings".into()));
    }
    let dim = n - 1;
    let side = (n as f64 / eps).ceil() as u32;
    let inner = src.clone();
    let target = SpernerInstance::on_table(
        src.table().clone(),
        SpernerVariant::Cube { dim, size: side },
        &child_scope(src.scope(), "sperner"),
        std::sync::Arc::new(move |ctx, v| {
            let alpha = barycentric(v, side).expect("vertex checked by caller");
            let beta = alpha.as_f64();
            let l = label(v, side).expect("vertex checked by caller") as usize;
            for j in 0..beta.len() {
                if inner.query_covering_ctx(ctx, l, &beta, j) {
                    return j as u8;
                }
            }
            // unreachable for genuine KKM coverings; keeps the oracle total
            (beta.len() - 1) as u8
        }),
    );
    let backmap: BackmapFn = Box::new(move |_, sol| {
        let cell = sol.into_cube_cell()?;
        let mut by_label: Vec<Option<(&Vec<u32>, u8)>> = vec![None; n];
        for (i, v) in cell.vertices.iter().enumerate() {
            let l = cell.labels[i] as usize;
            if l >= n || by_label[l].is_some() {
                return Err(Error::InvariantBroken("cell labels are not a full set".into()));
            }
            by_label[l] = Some((v, cell.colors[i]));
        }
        let mut perm = Vec::with_capacity(n);
        let mut witnesses = Vec::with_capacity(n);
        let mut point = Vec::new();
        for (l, entry) in by_label.iter().enumerate() {
            let (v, color) = entry.expect("all labels present");
            let alpha = barycentric(v, side)?.as_f64();
            if l == 0 {
                point = alpha.clone();
            }
            perm.push(color as usize);
            witnesses.push(alpha);
        }
        let perm = Permutation::new(perm)
            .map_err(|_| Error::InvariantBroken("cell colors are not a permutation".into()))?;
        let epsilon_achieved = Solution::measure_epsilon(&point, &witnesses);
        Ok(ProblemSolution::Point(Solution {
            point: SolutionPoint::Simplex(point),
            perm,
            witnesses,
            epsilon_achieved,
            queries: cell.queries,
        }))
    });
    Ok((
        target,
        Reduction {
            name: "rkkm-to-sperner",
            source_epsilon: Some(eps),
            target_epsilon: None,
            backmap,
        },
    ))
}
