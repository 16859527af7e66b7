//! Kuhn triangulation of the cube, barycentric coordinates, the walk-based
//! vertex labeling, and the 2D triangle lattice.
//!
//! The cube `[0,N]^d` splits into unit cubes, each into `d!` simplicial
//! cells indexed by a coordinate order. The same cube also splits into `d!`
//! scale-N "large simplices"; every cell lies inside one of them, and each
//! lattice vertex gets barycentric coordinates with respect to the large
//! simplex containing it. Those coordinates only depend on the multiset of
//! the vertex's coordinates, which is what makes them well-defined when a
//! vertex sits on several large simplices.

use crate::error::{Error, Result};
use crate::geometry::Permutation;
use itertools::Itertools;

/// One simplicial cell: the smallest corner of its unit cube plus the
/// coordinate order in which the staircase to the opposite corner ascends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub anchor: Vec<u32>,
    pub perm: Permutation,
}

/// Barycentric coordinates of a lattice vertex, stored exactly as integer
/// multiples of `1/N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BarycentricCoords {
    scaled: Vec<u64>,
    denom: u64,
}

impl BarycentricCoords {
    pub fn scaled(&self) -> &[u64] {
        &self.scaled
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.scaled.iter().map(|&s| s as f64 / self.denom as f64).collect()
    }

    /// Exact L1 distance to another coordinate vector, as a fraction over
    /// the common denominator.
    pub fn l1_scaled(&self, other: &BarycentricCoords) -> u64 {
        self.scaled
            .iter()
            .zip(&other.scaled)
            .map(|(&a, &b)| a.abs_diff(b))
            .sum()
    }
}

fn check_cube_point(x: &[f64], side: u32) -> Result<()> {
    let n = side as f64;
    if side == 0 || x.is_empty() || x.iter().any(|&v| !(v >= -1e-9 && v <= n + 1e-9)) {
        return Err(Error::Domain(format!("{x:?} is not inside [0, {side}]^d")));
    }
    Ok(())
}

fn check_cube_vertex(v: &[u32], side: u32) -> Result<()> {
    if side == 0 || v.is_empty() || v.iter().any(|&c| c > side) {
        return Err(Error::Domain(format!("{v:?} is not a vertex of [0, {side}]^d")));
    }
    Ok(())
}

/// Cell of the Kuhn triangulation containing `x`. On shared faces the
/// lexicographically smallest `(anchor, perm)` among containing cells is
/// returned: anchors take the smaller feasible corner, the order breaks
/// fractional-part ties by smaller coordinate index.
pub fn containing_cell(x: &[f64], side: u32) -> Result<Cell> {
    check_cube_point(x, side)?;
    let d = x.len();
    let mut anchor = vec![0u32; d];
    let mut frac = vec![0.0f64; d];
    for i in 0..d {
        let xi = x[i].clamp(0.0, side as f64);
        let a = (xi.ceil() - 1.0).max(0.0).min((side - 1) as f64) as u32;
        anchor[i] = a;
        frac[i] = xi - a as f64;
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| frac[b].partial_cmp(&frac[a]).unwrap().then(a.cmp(&b)));
    Ok(Cell { anchor, perm: Permutation::new(order).unwrap() })
}

/// The `d+1` vertices of a cell: the anchor, then one unit step per
/// position of the cell's coordinate order.
pub fn cell_vertices(cell: &Cell) -> Vec<Vec<u32>> {
    let d = cell.anchor.len();
    let mut out = Vec::with_capacity(d + 1);
    let mut v = cell.anchor.clone();
    out.push(v.clone());
    for k in 0..d {
        v[cell.perm.image(k)] += 1;
        out.push(v.clone());
    }
    out
}

/// Barycentric coordinates of lattice vertex `v` with respect to the large
/// simplex containing it: with `s` the coordinates sorted descending,
/// `N·α = (N − s₀, s₀ − s₁, …, s_{d−2} − s_{d−1}, s_{d−1})`.
pub fn barycentric(v: &[u32], side: u32) -> Result<BarycentricCoords> {
    check_cube_vertex(v, side)?;
    let mut s: Vec<u64> = v.iter().map(|&c| c as u64).collect();
    s.sort_unstable_by(|a, b| b.cmp(a));
    let n = side as u64;
    let d = v.len();
    let mut scaled = Vec::with_capacity(d + 1);
    scaled.push(n - s[0]);
    for k in 0..d - 1 {
        scaled.push(s[k] - s[k + 1]);
    }
    scaled.push(s[d - 1]);
    Ok(BarycentricCoords { scaled, denom: n })
}

/// Vertex label `L(v) = Σ_i i · N·α(v)_i  mod (d+1)`.
pub fn label(v: &[u32], side: u32) -> Result<u8> {
    let alpha = barycentric(v, side)?;
    let modulus = v.len() as u64 + 1;
    let sum: u64 = alpha
        .scaled()
        .iter()
        .enumerate()
        .map(|(i, &s)| (i as u64 % modulus) * (s % modulus) % modulus)
        .sum();
    Ok((sum % modulus) as u8)
}

/// Lattice vertices of the scaled triangle `N·Δ₂` nearest to `x` in L1.
///
/// Candidates are every floor/ceil rounding of the coordinates that sums to
/// N; the full subset at minimal distance is returned, sorted
/// lexicographically.
pub fn nearest_triangle_vertices(x: &[f64], side: u32) -> Result<Vec<[u32; 3]>> {
    let n = side as f64;
    let sum: f64 = x.iter().sum();
    if x.len() != 3 || x.iter().any(|&v| v < -1e-9) || (sum - n).abs() > 1e-6 {
        return Err(Error::Domain(format!("{x:?} is not on the scaled triangle {side}")));
    }
    let mut candidates: Vec<[u32; 3]> = Vec::new();
    for mask in 0..8u32 {
        let mut v = [0u32; 3];
        let mut total = 0u64;
        let mut ok = true;
        for i in 0..3 {
            let xi = x[i].max(0.0);
            let c = if mask & (1 << i) != 0 { xi.ceil() } else { xi.floor() };
            if c > n {
                ok = false;
                break;
            }
            v[i] = c as u32;
            total += c as u64;
        }
        if ok && total == side as u64 && !candidates.contains(&v) {
            candidates.push(v);
        }
    }
    let dist = |v: &[u32; 3]| -> f64 { (0..3).map(|i| (x[i] - v[i] as f64).abs()).sum() };
    let best = candidates.iter().map(dist).fold(f64::INFINITY, f64::min);
    let mut nearest: Vec<[u32; 3]> =
        candidates.into_iter().filter(|v| dist(v) <= best + 1e-12).collect();
    nearest.sort_unstable();
    Ok(nearest)
}

/// A unit cell of the triangle lattice, stored as its three vertices in
/// lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriangleCell {
    pub vertices: [[u32; 3]; 3],
}

impl TriangleCell {
    fn upward(base: [u32; 3]) -> Self {
        let mut vs = [
            [base[0] + 1, base[1], base[2]],
            [base[0], base[1] + 1, base[2]],
            [base[0], base[1], base[2] + 1],
        ];
        vs.sort_unstable();
        Self { vertices: vs }
    }

    fn downward(top: [u32; 3]) -> Self {
        let mut vs = [
            [top[0] - 1, top[1], top[2]],
            [top[0], top[1] - 1, top[2]],
            [top[0], top[1], top[2] - 1],
        ];
        vs.sort_unstable();
        Self { vertices: vs }
    }

    /// Weak containment of a scaled triangle point.
    pub fn contains(&self, x: &[f64]) -> bool {
        // upward cells are {y >= base}, downward cells are {y <= top}
        let lo: Vec<f64> = (0..3)
            .map(|i| self.vertices.iter().map(|v| v[i] as f64).fold(f64::INFINITY, f64::min))
            .collect();
        let hi: Vec<f64> = (0..3)
            .map(|i| self.vertices.iter().map(|v| v[i] as f64).fold(0.0f64, f64::max))
            .collect();
        (0..3).all(|i| x[i] >= lo[i] - 1e-9 && x[i] <= hi[i] + 1e-9)
    }
}

/// All unit cells of the size-N triangle, upward then downward, each in
/// lexicographic order.
pub fn triangle_cells(side: u32) -> Vec<TriangleCell> {
    let mut out = Vec::new();
    if side == 0 {
        return out;
    }
    for a in 0..side {
        for b in 0..(side - a) {
            out.push(TriangleCell::upward([a, b, side - 1 - a - b]));
        }
    }
    if side >= 2 {
        for a in 0..=(side - 2) {
            for b in 0..=(side - 2 - a) {
                out.push(TriangleCell::downward([a + 1, b + 1, side - a - b - 1]));
            }
        }
    }
    out
}

/// Cell of the triangle lattice containing `x`; the lexicographically
/// smallest vertex set wins when `x` sits on a shared edge or vertex.
pub fn containing_triangle_cell(x: &[f64], side: u32) -> Result<TriangleCell> {
    let n = side as f64;
    let sum: f64 = x.iter().sum();
    if x.len() != 3 || x.iter().any(|&v| v < -1e-9) || (sum - n).abs() > 1e-6 {
        return Err(Error::Domain(format!("{x:?} is not on the scaled triangle {side}")));
    }
    let mut best: Option<TriangleCell> = None;
    let mut consider = |cell: TriangleCell| {
        if cell.contains(x) && best.as_ref().is_none_or(|b| cell.vertices < b.vertices) {
            best = Some(cell);
        }
    };
    let f: Vec<i64> = x.iter().map(|&v| v.floor() as i64).collect();
    for da in -1..=1i64 {
        for db in -1..=1i64 {
            let (a, b) = (f[0] + da, f[1] + db);
            if a < 0 || b < 0 {
                continue;
            }
            let rest = side as i64 - 1 - a - b;
            if rest >= 0 {
                consider(TriangleCell::upward([a as u32, b as u32, rest as u32]));
            }
            let rest = side as i64 + 1 - a - b;
            if a >= 1 && b >= 1 && rest >= 1 {
                consider(TriangleCell::downward([a as u32, b as u32, rest as u32]));
            }
        }
    }
    best.ok_or_else(|| Error::Domain(format!("no triangle cell contains {x:?}")))
}

/// All cells of the Kuhn triangulation in lexicographic `(anchor, perm)`
/// order. Intended for exhaustive checks at small sizes.
pub fn cube_cells(dim: usize, side: u32) -> Vec<Cell> {
    let perms: Vec<Vec<usize>> = (0..dim).permutations(dim).collect();
    let mut anchors: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..dim {
        anchors = anchors
            .into_iter()
            .flat_map(|a| {
                (0..side).map(move |c| {
                    let mut b = a.clone();
                    b.push(c);
                    b
                })
            })
            .collect();
    }
    let mut out = Vec::with_capacity(anchors.len() * perms.len());
    for anchor in anchors {
        for p in &perms {
            out.push(Cell { anchor: anchor.clone(), perm: Permutation::new(p.clone()).unwrap() });
        }
    }
    out
}
