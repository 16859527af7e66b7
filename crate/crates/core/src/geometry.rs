//! Points, domains, permutations and the homeomorphism between them.
//!
//! Price vectors live on `Σₙ`, the part of the unit cube where at least one
//! coordinate is zero. Simplex points live on the standard simplex `Δₙ₋₁`.
//! The piecewise-linear map [`phi`] carries `Σₙ` homeomorphically onto
//! `Δₙ₋₁`; [`phi_inverse`] is its inverse. Both are defined region by
//! region: sorting the input picks the region, then a staircase of scaled
//! differences produces the output.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Membership tolerance for Σₙ and Δₙ₋₁.
pub const TOL: f64 = 1e-9;

/// A vector of house prices, intended to lie on Σₙ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceVector(Vec<f64>);

/// A barycentric mass vector, intended to lie on Δₙ₋₁.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint(Vec<f64>);

/// A permutation of `0..n`, stored as its image array.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation(Vec<usize>);

impl PriceVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() || entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("prices must be finite and non-empty".into()));
        }
        Ok(Self(entries))
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// Membership in Σₙ: entries in `[0, 1]` and some entry at zero, all up
    /// to `tol`.
    pub fn in_sigma(&self, tol: f64) -> bool {
        let min = self.0.iter().cloned().fold(f64::INFINITY, f64::min);
        self.0.iter().all(|&v| v >= -tol && v <= 1.0 + tol) && min <= tol
    }

    /// Clamp onto Σₙ exactly: clip to `[0, 1]` and force the minimal entry
    /// to zero. Rejects points farther than `tol` from Σₙ.
    pub fn project_to_sigma(&self, tol: f64) -> Result<PriceVector> {
        if !self.in_sigma(tol) {
            return Err(Error::Domain(format!("point {:?} is not on Sigma_n", self.0)));
        }
        let mut v: Vec<f64> = self.0.iter().map(|&x| x.clamp(0.0, 1.0)).collect();
        let argmin = min_index(&v);
        v[argmin] = 0.0;
        Ok(PriceVector(v))
    }
}

impl SimplexPoint {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() || entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("simplex point must be finite and non-empty".into()));
        }
        Ok(Self(entries))
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// Membership in Δₙ₋₁ up to `tol`.
    pub fn in_simplex(&self, tol: f64) -> bool {
        let sum: f64 = self.0.iter().sum();
        self.0.iter().all(|&v| v >= -tol) && (sum - 1.0).abs() <= tol
    }

    pub fn barycenter(n: usize) -> SimplexPoint {
        SimplexPoint(vec![1.0 / n as f64; n])
    }

    pub fn unit(n: usize, i: usize) -> SimplexPoint {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        SimplexPoint(v)
    }
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &i in &image {
            if i >= n || seen[i] {
                return Err(Error::Domain(format!("{image:?} is not a permutation")));
            }
            seen[i] = true;
        }
        Ok(Self(image))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    /// Image of position `k` (0-based).
    pub fn image(&self, k: usize) -> usize {
        self.0[k]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (pos, &img) in self.0.iter().enumerate() {
            inv[img] = pos;
        }
        Permutation(inv)
    }

    pub fn is_valid(image: &[usize]) -> bool {
        Permutation::new(image.to_vec()).is_ok()
    }
}

fn min_index(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// Permutation sorting `p` into descending order, ties broken by smallest
/// original index first.
pub fn sort_permutation(p: &PriceVector) -> Permutation {
    let mut idx: Vec<usize> = (0..p.n()).collect();
    idx.sort_by(|&a, &b| p.coords()[b].partial_cmp(&p.coords()[a]).unwrap().then(a.cmp(&b)));
    Permutation(idx)
}

/// Permutation sorting coordinates ascending, stable. Used for the inverse
/// map, whose regions Δ_π are ascending chains.
pub fn ascending_permutation(x: &[f64]) -> Permutation {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap().then(a.cmp(&b)));
    Permutation(idx)
}

/// The homeomorphism Σₙ → Δₙ₋₁.
///
/// With π the descending order of `p`, the image accumulates
/// `(p_{π(k-1)} − p_{π(k)})/(n−k)` on top of `(1 − p_{π(0)})/n`, written to
/// coordinate π(k). Ties in `p` do not affect the value: tied positions
/// receive identical accumulated masses.
pub fn phi(p: &PriceVector) -> Result<SimplexPoint> {
    let p = p.project_to_sigma(TOL)?;
    Ok(SimplexPoint(phi_coords(p.coords())))
}

/// The inverse map Δₙ₋₁ → Σₙ.
///
/// With π the ascending order of `x`:
/// `p_{π(k)} = 1 − x_{π(0)} − … − x_{π(k−1)} − (n−k)·x_{π(k)}`.
pub fn phi_inverse(x: &SimplexPoint) -> Result<PriceVector> {
    if !x.in_simplex(TOL) {
        return Err(Error::Domain(format!("point {:?} is not on the simplex", x.coords())));
    }
    PriceVector::new(phi_inverse_coords(x.coords()))
}

/// Σₙ membership on raw coordinates.
pub(crate) fn in_sigma_coords(p: &[f64], tol: f64) -> bool {
    let min = p.iter().cloned().fold(f64::INFINITY, f64::min);
    p.iter().all(|&v| v >= -tol && v <= 1.0 + tol) && min <= tol
}

/// Unchecked forward map on raw coordinates; clamps onto Σₙ first.
pub(crate) fn phi_coords(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut q: Vec<f64> = p.iter().map(|&v| v.clamp(0.0, 1.0)).collect();
    let argmin = min_index(&q);
    q[argmin] = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| q[b].partial_cmp(&q[a]).unwrap().then(a.cmp(&b)));
    let mut x = vec![0.0; n];
    let mut acc = (1.0 - q[order[0]]) / n as f64;
    x[order[0]] = acc;
    for k in 1..n {
        acc += (q[order[k - 1]] - q[order[k]]) / (n - k) as f64;
        x[order[k]] = acc;
    }
    x
}

/// Unchecked inverse map on raw coordinates; assumes `x` is close to Δₙ₋₁.
pub(crate) fn phi_inverse_coords(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let pi = ascending_permutation(x);
    let mut p = vec![0.0; n];
    let mut prefix = 0.0;
    for k in 0..n {
        let xi = x[pi.image(k)];
        p[pi.image(k)] = (1.0 - prefix - (n - k) as f64 * xi).clamp(0.0, 1.0);
        prefix += xi;
    }
    // The largest coordinate of x maps to the zero price; pin it exactly.
    p[pi.image(n - 1)] = 0.0;
    p
}

/// L1 distance between two coordinate slices.
pub fn l1_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pv(v: &[f64]) -> PriceVector {
        PriceVector::new(v.to_vec()).unwrap()
    }

    fn sp(v: &[f64]) -> SimplexPoint {
        SimplexPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sort_permutation_descending_with_stable_ties() {
        assert_eq!(sort_permutation(&pv(&[0.2, 0.9, 0.0])).as_slice(), &[1, 0, 2]);
        assert_eq!(sort_permutation(&pv(&[0.5, 0.5])).as_slice(), &[0, 1]);
        assert_eq!(sort_permutation(&pv(&[0.0, 0.0, 0.0])).as_slice(), &[0, 1, 2]);
    }

    #[test]
    fn phi_examples() {
        let x = phi(&pv(&[0.0, 0.0, 0.0])).unwrap();
        for &v in x.coords() {
            assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-12);
        }
        let x = phi(&pv(&[1.0, 0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(x.coords()[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x.coords()[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(x.coords()[2], 0.5, epsilon = 1e-12);
        let x = phi(&pv(&[1.0, 1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(x.coords()[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x.coords()[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x.coords()[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn phi_inverse_examples() {
        let p = phi_inverse(&sp(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])).unwrap();
        for &v in p.coords() {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        }
        let p = phi_inverse(&sp(&[0.0, 0.5, 0.5])).unwrap();
        assert_abs_diff_eq!(p.coords()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.coords()[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.coords()[2], 0.0, epsilon = 1e-12);
        let p = phi_inverse(&sp(&[1.0 / 6.0, 1.0 / 3.0, 0.5])).unwrap();
        assert_abs_diff_eq!(p.coords()[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.coords()[1], 1.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.coords()[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn phi_rejects_points_off_sigma() {
        assert!(phi(&pv(&[0.5, 0.5])).is_err());
        assert!(phi_inverse(&sp(&[0.7, 0.7])).is_err());
    }

    #[test]
    fn l1_distance_examples() {
        assert_abs_diff_eq!(l1_distance(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 2.0);
        assert_abs_diff_eq!(l1_distance(&[0.3, 0.3], &[0.3, 0.3]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            l1_distance(&[0.2, 0.3, 0.5], &[0.25, 0.3, 0.45]).unwrap(),
            0.1,
            epsilon = 1e-12
        );
        assert!(l1_distance(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn corner_mapping() {
        // p with all-but-one entry at 1 maps to the unit vector of the zero entry.
        for n in 2..6usize {
            for z in 0..n {
                let mut p = vec![1.0; n];
                p[z] = 0.0;
                let x = phi(&pv(&p)).unwrap();
                for (i, &v) in x.coords().iter().enumerate() {
                    let want = if i == z { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(v, want, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn tie_break_does_not_change_phi() {
        // Evaluate phi with an adversarial (reversed) tie order and compare.
        fn phi_with_order(p: &[f64], order: &[usize]) -> Vec<f64> {
            let n = p.len();
            let mut x = vec![0.0; n];
            let mut acc = (1.0 - p[order[0]]) / n as f64;
            x[order[0]] = acc;
            for k in 1..n {
                acc += (p[order[k - 1]] - p[order[k]]) / (n - k) as f64;
                x[order[k]] = acc;
            }
            x
        }
        let p = [0.4, 0.4, 0.0, 0.4];
        let stable = phi(&pv(&p)).unwrap();
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).unwrap().then(b.cmp(&a)));
        let reversed_ties = phi_with_order(&p, &order);
        for (a, b) in stable.coords().iter().zip(&reversed_ties) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    fn sigma_point(n: usize) -> impl Strategy<Value = PriceVector> {
        (proptest::collection::vec(0.0f64..=1.0, n), 0..n)
            .prop_map(|(mut v, z)| {
                v[z] = 0.0;
                PriceVector::new(v).unwrap()
            })
    }

    fn simplex_point(n: usize) -> impl Strategy<Value = SimplexPoint> {
        proptest::collection::vec(1e-12f64..=1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum();
            SimplexPoint::new(v.into_iter().map(|x| x / s).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn round_trip_from_sigma(p in (2usize..7).prop_flat_map(sigma_point)) {
            let x = phi(&p).unwrap();
            prop_assert!(x.in_simplex(TOL));
            let back = phi_inverse(&x).unwrap();
            prop_assert!(l1_distance(p.coords(), back.coords()).unwrap() <= 1e-9);
        }

        #[test]
        fn round_trip_from_simplex(x in (2usize..7).prop_flat_map(simplex_point)) {
            let p = phi_inverse(&x).unwrap();
            prop_assert!(p.in_sigma(TOL));
            let fwd = phi(&p).unwrap();
            prop_assert!(l1_distance(x.coords(), fwd.coords()).unwrap() <= 1e-9);
        }

        #[test]
        fn region_preservation(p in (2usize..7).prop_flat_map(sigma_point)) {
            // p ∈ Σ_π implies φ(p) ∈ Δ_π: descending prices become ascending masses.
            let pi = sort_permutation(&p);
            let x = phi(&p).unwrap();
            for k in 1..p.n() {
                prop_assert!(x.coords()[pi.image(k - 1)] <= x.coords()[pi.image(k)] + 1e-12);
            }
        }

        #[test]
        fn lipschitz_bounds(
            (p, q) in (2usize..7).prop_flat_map(|n| (sigma_point(n), sigma_point(n)))
        ) {
            let n = p.n() as f64;
            let d = l1_distance(p.coords(), q.coords()).unwrap();
            if d > 1e-12 {
                let df = l1_distance(phi(&p).unwrap().coords(), phi(&q).unwrap().coords()).unwrap();
                prop_assert!(df <= n * d + 1e-9);
            }
        }

        #[test]
        fn inverse_lipschitz_bound(
            (x, y) in (2usize..7).prop_flat_map(|n| (simplex_point(n), simplex_point(n)))
        ) {
            let n = x.n() as f64;
            let d = l1_distance(x.coords(), y.coords()).unwrap();
            if d > 1e-12 {
                let df = l1_distance(
                    phi_inverse(&x).unwrap().coords(),
                    phi_inverse(&y).unwrap().coords(),
                ).unwrap();
                prop_assert!(df <= n * n * d + 1e-9);
            }
        }
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::new(vec![1, 0, 2]).is_ok());
        assert!(Permutation::new(vec![1, 1, 2]).is_err());
        assert!(Permutation::new(vec![3, 0, 1]).is_err());
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        assert_eq!(p.inverse().as_slice(), &[1, 2, 0]);
    }
}
