//! Black-box problem instances.
//!
//! An instance bundles a dimension, a claim sheet (e.g. "this covering is
//! sparse"), and oracle closures. All oracles are pure and deterministic;
//! query counting happens in the `query_*` entry points, never inside the
//! oracles themselves. Reductions wrap instances by building new closures
//! that delegate to the source's `*_ctx` methods, so source queries keep
//! being counted at the source scope.

use crate::error::{Error, Result};
use crate::geometry::{PriceVector, SimplexPoint, TOL};

/// Comparison slack inside generator oracles. The families are defined
/// with weak inequalities over the reals; the slack keeps exact-arithmetic
/// ties (e.g. 0.9 - 0.8 vs 0.1) from breaking under f64 rounding.
pub const TIE_TOL: f64 = 1e-12;
use crate::ledger::{LedgerCtx, OracleId, OracleKind, OracleTable, QueryLedger};
use std::sync::Arc;

pub type PreferenceFn = Arc<dyn Fn(&LedgerCtx, usize, &[f64], Option<usize>) -> bool + Send + Sync>;
pub type CoveringFn = Arc<dyn Fn(&LedgerCtx, usize, &[f64], usize) -> bool + Send + Sync>;
pub type KkmCoveringFn = Arc<dyn Fn(&LedgerCtx, &[f64], usize) -> bool + Send + Sync>;
pub type UtilityFn = Arc<dyn Fn(&LedgerCtx, usize, f64, f64) -> f64 + Send + Sync>;
pub type ColoringFn = Arc<dyn Fn(&LedgerCtx, &[u32]) -> u8 + Send + Sync>;

/// A housing market in the preference-set model: `n` agents, each with a
/// preference oracle over prices. House index `None` stands for "demand
/// nothing"; generators make that set all of price space.
#[derive(Clone)]
pub struct HousingInstance {
    n: usize,
    scope: Arc<str>,
    table: Arc<OracleTable>,
    slots: Arc<Vec<usize>>,
    oracle: PreferenceFn,
}

impl HousingInstance {
    pub fn from_oracle(
        n: usize,
        scope: &str,
        oracle: impl Fn(&LedgerCtx, usize, &[f64], Option<usize>) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self::on_table(OracleTable::new(), n, scope, Arc::new(oracle))
    }

    pub(crate) fn on_table(
        table: Arc<OracleTable>,
        n: usize,
        scope: &str,
        oracle: PreferenceFn,
    ) -> Self {
        let scope: Arc<str> = Arc::from(scope);
        let slots = (0..n)
            .map(|i| {
                table.register(OracleId {
                    scope: scope.clone(),
                    kind: OracleKind::Preference,
                    index: i,
                })
            })
            .collect();
        Self { n, scope, table, slots: Arc::new(slots), oracle }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scope(&self) -> &str {
        &self.scope
    }

    pub fn table(&self) -> &Arc<OracleTable> {
        &self.table
    }

    /// Does agent `i` demand `house` at prices `p`? Counts one query
    /// against oracle (preference, i).
    pub fn query_preference(
        &self,
        ledger: &QueryLedger,
        agent: usize,
        p: &PriceVector,
        house: Option<usize>,
    ) -> Result<bool> {
        if agent >= self.n {
            return Err(Error::IndexOutOfRange(format!("agent {agent} of {}", self.n)));
        }
        if let Some(j) = house {
            if j >= self.n {
                return Err(Error::IndexOutOfRange(format!("house {j} of {}", self.n)));
            }
        }
        if p.n() != self.n {
            return Err(Error::DimensionMismatch(p.n(), self.n));
        }
        let ctx = ledger.ctx(&self.table);
        Ok(self.query_preference_ctx(&ctx, agent, p.coords(), house))
    }

    #[inline]
    pub fn query_preference_ctx(
        &self,
        ctx: &LedgerCtx,
        agent: usize,
        p: &[f64],
        house: Option<usize>,
    ) -> bool {
        ctx.bump(self.slots[agent]);
        (self.oracle)(ctx, agent, p, house)
    }
}

/// A family of `n` KKM coverings of Δₙ₋₁, one covering oracle per index.
#[derive(Clone)]
pub struct RkkmInstance {
    n: usize,
    sparse: bool,
    scope: Arc<str>,
    table: Arc<OracleTable>,
    slots: Arc<Vec<usize>>,
    oracle: CoveringFn,
}

impl RkkmInstance {
    pub fn from_oracle(
        n: usize,
        sparse: bool,
        scope: &str,
        oracle: impl Fn(&LedgerCtx, usize, &[f64], usize) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self::on_table(OracleTable::new(), n, sparse, scope, Arc::new(oracle))
    }

    pub(crate) fn on_table(
        table: Arc<OracleTable>,
        n: usize,
        sparse: bool,
        scope: &str,
        oracle: CoveringFn,
    ) -> Self {
        let scope: Arc<str> = Arc::from(scope);
        let slots = (0..n)
            .map(|i| {
                table.register(OracleId {
                    scope: scope.clone(),
                    kind: OracleKind::Covering,
                    index: i,
                })
            })
            .collect();
        Self { n, sparse, scope, table, slots: Arc::new(slots), oracle }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Whether the generator (or reduction) claims every covering misses
    /// its opposite face.
    pub fn is_sparse(&self) -> bool {
        self.sparse
    }

    pub fn scope(&self) -> &str {
        &self.scope
    }

    pub fn table(&self) -> &Arc<OracleTable> {
        &self.table
    }

    /// Is `x` in set `set` of covering `covering`? Counts one query.
    pub fn query_covering(
        &self,
        ledger: &QueryLedger,
        covering: usize,
        x: &SimplexPoint,
        set: usize,
    ) -> Result<bool> {
        if covering >= self.n || set >= self.n {
            return Err(Error::IndexOutOfRange(format!(
                "covering {covering}, set {set} of {}",
                self.n
            )));
        }
        if x.n() != self.n {
            return Err(Error::DimensionMismatch(x.n(), self.n));
        }
        if !x.in_simplex(TOL) {
            return Err(Error::Domain(format!("{:?} is not on the simplex", x.coords())));
        }
        let ctx = ledger.ctx(&self.table);
        Ok(self.query_covering_ctx(&ctx, covering, x.coords(), set))
    }

    #[inline]
    pub fn query_covering_ctx(&self, ctx: &LedgerCtx, covering: usize, x: &[f64], set: usize) -> bool {
        ctx.bump(self.slots[covering]);
        (self.oracle)(ctx, covering, x, set)
    }
}

/// A single KKM covering of the scaled triangle `N·Δ₂` (points sum to N).
#[derive(Clone)]
pub struct KkmInstance {
    scale: u32,
    sparse: bool,
    scope: Arc<str>,
    table: Arc<OracleTable>,
    slot: usize,
    oracle: KkmCoveringFn,
}

impl KkmInstance {
    pub fn from_oracle(
        scale: u32,
        sparse: bool,
        scope: &str,
        oracle: impl Fn(&LedgerCtx, &[f64], usize) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self::on_table(OracleTable::new(), scale, sparse, scope, Arc::new(oracle))
    }

    pub(crate) fn on_table(
        table: Arc<OracleTable>,
        scale: u32,
        sparse: bool,
        scope: &str,
        oracle: KkmCoveringFn,
    ) -> Self {
        let scope: Arc<str> = Arc::from(scope);
        let slot = table.register(OracleId {
            scope: scope.clone(),
            kind: OracleKind::Covering,
            index: 0,
        });
        Self { scale, sparse, scope, table, slot, oracle }
    }

    /// Side length N of the scaled triangle.
    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn is_sparse(&self) -> bool {
        self.sparse
    }

    pub fn scope(&self) -> &str {
        &self.scope
    }

    pub fn table(&self) -> &Arc<OracleTable> {
        &self.table
    }

    /// Is the scaled point `x` (entries summing to N) in covering set `set`?
    pub fn query_covering(&self, ledger: &QueryLedger, x: &[f64], set: usize) -> Result<bool> {
        if set >= 3 {
            return Err(Error::IndexOutOfRange(format!("set {set} of 3")));
        }
        let n = self.scale as f64;
        let sum: f64 = x.iter().sum();
        if x.len() != 3 || x.iter().any(|&v| v < -TOL * n) || (sum - n).abs() > TOL * n.max(1.0) {
            return Err(Error::Domain(format!("{x:?} is not on the scaled triangle")));
        }
        let ctx = ledger.ctx(&self.table);
        Ok(self.query_covering_ctx(&ctx, x, set))
    }

    #[inline]
    pub fn query_covering_ctx(&self, ctx: &LedgerCtx, x: &[f64], set: usize) -> bool {
        ctx.bump(self.slot);
        (self.oracle)(ctx, x, set)
    }
}

/// A cake with `d` hungry players; utilities are interval integrals with a
/// declared Lipschitz constant.
#[derive(Clone)]
pub struct CakeInstance {
    d: usize,
    lipschitz: f64,
    scope: Arc<str>,
    table: Arc<OracleTable>,
    slots: Arc<Vec<usize>>,
    oracle: UtilityFn,
}

impl CakeInstance {
    pub fn from_oracle(
        d: usize,
        lipschitz: f64,
        scope: &str,
        oracle: impl Fn(&LedgerCtx, usize, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let table = OracleTable::new();
        let scope: Arc<str> = Arc::from(scope);
        let slots = (0..d)
            .map(|i| {
                table.register(OracleId {
                    scope: scope.clone(),
                    kind: OracleKind::Utility,
                    index: i,
                })
            })
            .collect();
        Self { d, lipschitz, scope, table, slots: Arc::new(slots), oracle: Arc::new(oracle) }
    }

    pub fn players(&self) -> usize {
        self.d
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn scope(&self) -> &str {
        &self.scope
    }

    pub fn table(&self) -> &Arc<OracleTable> {
        &self.table
    }

    /// Utility of `[a, b]` for `player`. Counts one query.
    pub fn eval_utility(&self, ledger: &QueryLedger, player: usize, a: f64, b: f64) -> Result<f64> {
        if player >= self.d {
            return Err(Error::IndexOutOfRange(format!("player {player} of {}", self.d)));
        }
        if !(0.0 - TOL..=1.0 + TOL).contains(&a) || !(0.0 - TOL..=1.0 + TOL).contains(&b) || a > b + TOL {
            return Err(Error::InvalidInterval(a, b));
        }
        let ctx = ledger.ctx(&self.table);
        Ok(self.eval_utility_ctx(&ctx, player, a.clamp(0.0, 1.0), b.clamp(0.0, 1.0)))
    }

    #[inline]
    pub fn eval_utility_ctx(&self, ctx: &LedgerCtx, player: usize, a: f64, b: f64) -> f64 {
        ctx.bump(self.slots[player]);
        (self.oracle)(ctx, player, a, b.max(a))
    }
}

/// Which lattice a Sperner instance colors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpernerVariant {
    /// Equilateral triangle `N·Δ₂`; vertices are nonnegative integer
    /// triples summing to N, colors are `{0,1,2}` with `c(v) ≠ i` when
    /// `v_i = 0`.
    Triangle { size: u32 },
    /// Kuhn-triangulated cube `[0,N]^d`; colors are `{0..d}` with
    /// `c(v) ≠ k+1` when `v_k = 0` and `c(v) ≠ 0` when some `v_k = N`.
    Cube { dim: usize, size: u32 },
}

/// A vertex coloring given as an oracle.
#[derive(Clone)]
pub struct SpernerInstance {
    variant: SpernerVariant,
    scope: Arc<str>,
    table: Arc<OracleTable>,
    slot: usize,
    oracle: ColoringFn,
}

impl SpernerInstance {
    pub fn from_oracle(
        variant: SpernerVariant,
        scope: &str,
        oracle: impl Fn(&LedgerCtx, &[u32]) -> u8 + Send + Sync + 'static,
    ) -> Self {
        Self::on_table(OracleTable::new(), variant, scope, Arc::new(oracle))
    }

    pub(crate) fn on_table(
        table: Arc<OracleTable>,
        variant: SpernerVariant,
        scope: &str,
        oracle: ColoringFn,
    ) -> Self {
        let scope: Arc<str> = Arc::from(scope);
        let slot = table.register(OracleId {
            scope: scope.clone(),
            kind: OracleKind::Coloring,
            index: 0,
        });
        Self { variant, scope, table, slot, oracle }
    }

    /// Triangle instance backed by a flat color array in row-major order
    /// (rows by `v_0`, then `v_1`; `v_2` is determined).
    pub fn triangle_from_colors(size: u32, colors: Vec<u8>) -> Result<Self> {
        if size == 0 {
            return Err(Error::Format("triangle size must be positive".into()));
        }
        let want = triangle_vertex_count(size);
        if colors.len() != want {
            return Err(Error::Format(format!(
                "triangle of size {size} needs {want} colors, got {}",
                colors.len()
            )));
        }
        if colors.iter().any(|&c| c > 2) {
            return Err(Error::Format("triangle colors must be in 0..=2".into()));
        }
        let colors = Arc::new(colors);
        Ok(Self::from_oracle(
            SpernerVariant::Triangle { size },
            "sperner",
            move |_, v| colors[triangle_vertex_index(size, v)],
        ))
    }

    /// Cube instance backed by a flat row-major color array (last
    /// coordinate fastest).
    pub fn cube_from_colors(dim: usize, size: u32, colors: Vec<u8>) -> Result<Self> {
        if dim == 0 || size == 0 {
            return Err(Error::Format("cube dimension and size must be positive".into()));
        }
        let want = (size as usize + 1).pow(dim as u32);
        if colors.len() != want {
            return Err(Error::Format(format!(
                "cube {dim}^{size} needs {want} colors, got {}",
                colors.len()
            )));
        }
        if colors.iter().any(|&c| c as usize > dim) {
            return Err(Error::Format(format!("cube colors must be in 0..={dim}")));
        }
        let colors = Arc::new(colors);
        Ok(Self::from_oracle(
            SpernerVariant::Cube { dim, size },
            "sperner",
            move |_, v| colors[cube_vertex_index(size, v)],
        ))
    }

    pub fn variant(&self) -> SpernerVariant {
        self.variant
    }

    pub fn scope(&self) -> &str {
        &self.scope
    }

    pub fn table(&self) -> &Arc<OracleTable> {
        &self.table
    }

    /// Color of lattice vertex `v`. Counts one query.
    pub fn query_color(&self, ledger: &QueryLedger, v: &[u32]) -> Result<u8> {
        self.validate_vertex(v)?;
        let ctx = ledger.ctx(&self.table);
        Ok(self.query_color_ctx(&ctx, v))
    }

    #[inline]
    pub fn query_color_ctx(&self, ctx: &LedgerCtx, v: &[u32]) -> u8 {
        ctx.bump(self.slot);
        (self.oracle)(ctx, v)
    }

    fn validate_vertex(&self, v: &[u32]) -> Result<()> {
        match self.variant {
            SpernerVariant::Triangle { size } => {
                if v.len() != 3 || v.iter().map(|&x| x as u64).sum::<u64>() != size as u64 {
                    return Err(Error::Domain(format!("{v:?} is not a triangle lattice vertex")));
                }
            }
            SpernerVariant::Cube { dim, size } => {
                if v.len() != dim || v.iter().any(|&x| x > size) {
                    return Err(Error::Domain(format!("{v:?} is not a cube lattice vertex")));
                }
            }
        }
        Ok(())
    }
}

/// Number of lattice vertices of the size-N triangle: (N+1)(N+2)/2.
pub fn triangle_vertex_count(size: u32) -> usize {
    let n = size as usize;
    (n + 1) * (n + 2) / 2
}

/// Row-major index of a triangle vertex (row = v₀, column = v₁).
pub fn triangle_vertex_index(size: u32, v: &[u32]) -> usize {
    let n = size as usize;
    let r = v[0] as usize;
    // rows 0..r have widths (N+1), (N), ...
    r * (n + 1) - r * (r.saturating_sub(1)) / 2 + v[1] as usize
}

/// Row-major index of a cube vertex (last coordinate fastest).
pub fn cube_vertex_index(size: u32, v: &[u32]) -> usize {
    let base = size as usize + 1;
    v.iter().fold(0usize, |acc, &c| acc * base + c as usize)
}

/// All triangle lattice vertices in row-major order.
pub fn triangle_vertices(size: u32) -> impl Iterator<Item = [u32; 3]> {
    (0..=size).flat_map(move |a| (0..=(size - a)).map(move |b| [a, b, size - a - b]))
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// Quasilinear housing market: agent `i` demands house `j` at prices `p`
/// when `v_ij − p_j` is a (weakly) largest nonnegative surplus. All
/// comparisons are weak so preference sets are closed.
pub fn make_quasilinear_market(values: &[Vec<f64>]) -> Result<HousingInstance> {
    let n = values.len();
    if n == 0 || values.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidValues);
    }
    if values.iter().flatten().any(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::InvalidValues);
    }
    let values: Arc<Vec<Vec<f64>>> = Arc::new(values.to_vec());
    Ok(HousingInstance::from_oracle(n, "housing", move |_, agent, p, house| {
        let Some(j) = house else { return true };
        let surplus = |k: usize| values[agent][k] - p[k];
        let sj = surplus(j);
        sj >= -TIE_TOL && (0..p.len()).all(|k| sj >= surplus(k) - TIE_TOL)
    }))
}

/// Membership test for the weighted-argmax covering: set `j` holds the
/// points where `x_j / w_j` is (weakly) maximal.
#[derive(Clone, Debug)]
pub struct ArgmaxCovering {
    weights: Arc<Vec<f64>>,
}

impl ArgmaxCovering {
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn contains(&self, x: &[f64], j: usize) -> bool {
        let ratio = |k: usize| x[k] / self.weights[k];
        let rj = ratio(j);
        (0..x.len()).all(|k| rj >= ratio(k) - TIE_TOL)
    }

    /// The point every set shares: weights normalized to sum one.
    pub fn common_point(&self) -> SimplexPoint {
        let s: f64 = self.weights.iter().sum();
        SimplexPoint::new(self.weights.iter().map(|w| w / s).collect()).unwrap()
    }
}

/// A single sparse KKM covering of Δₙ₋₁ from positive weights.
pub fn make_weighted_argmax_covering(weights: &[f64]) -> Result<ArgmaxCovering> {
    if weights.is_empty() || weights.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
        return Err(Error::InvalidWeights);
    }
    Ok(ArgmaxCovering { weights: Arc::new(weights.to_vec()) })
}

/// Rainbow-KKM instance made of `n` identical weighted-argmax coverings.
pub fn make_weighted_argmax_rkkm(weights: &[f64]) -> Result<RkkmInstance> {
    let covering = make_weighted_argmax_covering(weights)?;
    let n = covering.n();
    Ok(RkkmInstance::from_oracle(n, true, "rkkm", move |_, _covering, x, j| {
        covering.contains(x, j)
    }))
}

/// One density segment of a piecewise-constant cake valuation.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DensitySegment {
    pub from: f64,
    pub to: f64,
    pub density: f64,
}

/// Piecewise-constant cake: per player, segments must partition `[0,1]`
/// with strictly positive densities. The declared Lipschitz constant is the
/// maximal density.
pub fn make_piecewise_cake(densities: &[Vec<DensitySegment>]) -> Result<CakeInstance> {
    let d = densities.len();
    if d == 0 {
        return Err(Error::InvalidDensity("no players".into()));
    }
    let mut k = 0.0f64;
    for (i, segs) in densities.iter().enumerate() {
        if segs.is_empty() {
            return Err(Error::InvalidDensity(format!("player {i}: no segments")));
        }
        let mut cursor = 0.0;
        for s in segs {
            if (s.from - cursor).abs() > 1e-12 {
                return Err(Error::InvalidDensity(format!(
                    "player {i}: gap or overlap at {}",
                    s.from
                )));
            }
            if !(s.density > 0.0 && s.density.is_finite()) || s.to <= s.from {
                return Err(Error::InvalidDensity(format!(
                    "player {i}: bad segment [{}, {}] x {}",
                    s.from, s.to, s.density
                )));
            }
            cursor = s.to;
            k = k.max(s.density);
        }
        if (cursor - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDensity(format!("player {i}: segments end at {cursor}")));
        }
    }
    let densities: Arc<Vec<Vec<DensitySegment>>> = Arc::new(densities.to_vec());
    Ok(CakeInstance::from_oracle(d, k, "cake", move |_, player, a, b| {
        densities[player]
            .iter()
            .map(|s| s.density * (b.min(s.to) - a.max(s.from)).max(0.0))
            .sum()
    }))
}

/// Instance kinds the CLI and the verifier dispatch on.
#[derive(Clone)]
pub enum Instance {
    Housing(HousingInstance),
    Rkkm(RkkmInstance),
    Kkm(KkmInstance),
    Cake(CakeInstance),
    Sperner(SpernerInstance),
}

impl Instance {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Instance::Housing(_) => "housing",
            Instance::Rkkm(_) => "rkkm",
            Instance::Kkm(_) => "kkm",
            Instance::Cake(_) => "cake",
            Instance::Sperner(i) => match i.variant() {
                SpernerVariant::Triangle { .. } => "sperner-triangle",
                SpernerVariant::Cube { .. } => "sperner-cube",
            },
        }
    }
}
