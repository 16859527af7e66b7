//! Solution records shared by solvers, reductions and the verifier.

use crate::error::{Error, Result};
use crate::geometry::Permutation;
use crate::triangulation::{Cell, TriangleCell};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// The located object of a point-style solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "coords", rename_all = "kebab-case")]
pub enum SolutionPoint {
    /// Price vector on Σₙ (housing) or the scaled triangle (KKM).
    Prices(Vec<f64>),
    /// Point of Δₙ₋₁.
    Simplex(Vec<f64>),
    /// A cut of the cake, i.e. piece lengths on Δ_{d−1}.
    Cut(Vec<f64>),
}

impl SolutionPoint {
    pub fn coords(&self) -> &[f64] {
        match self {
            SolutionPoint::Prices(c) | SolutionPoint::Simplex(c) | SolutionPoint::Cut(c) => c,
        }
    }
}

/// A point, an assignment, and one oracle-certified witness per agent.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Solution {
    pub point: SolutionPoint,
    pub perm: Permutation,
    /// Witness points, one per agent/covering, in the same coordinates as
    /// `point`.
    pub witnesses: Vec<Vec<f64>>,
    /// Maximal L1 distance from `point` to a witness.
    pub epsilon_achieved: f64,
    /// Ledger snapshot at the time the solution was produced.
    pub queries: BTreeMap<String, u64>,
}

impl Solution {
    pub fn measure_epsilon(point: &[f64], witnesses: &[Vec<f64>]) -> f64 {
        witnesses
            .iter()
            .map(|w| point.iter().zip(w).map(|(a, b)| (a - b).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// A panchromatic cell of a cube Sperner instance, with the labels and
/// colors observed during the scan.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PanchromaticCell {
    pub anchor: Vec<u32>,
    pub perm: Permutation,
    /// Vertices in staircase order from the anchor.
    pub vertices: Vec<Vec<u32>>,
    pub labels: Vec<u8>,
    pub colors: Vec<u8>,
    pub queries: BTreeMap<String, u64>,
}

impl PanchromaticCell {
    pub fn cell(&self) -> Cell {
        Cell { anchor: self.anchor.clone(), perm: self.perm.clone() }
    }
}

/// A trichromatic cell of a triangle Sperner instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrichromaticCell {
    pub vertices: [[u32; 3]; 3],
    pub colors: [u8; 3],
}

impl TrichromaticCell {
    pub fn triangle_cell(&self) -> TriangleCell {
        TriangleCell { vertices: self.vertices }
    }
}

/// What a solved (or back-mapped) problem hands over: reductions between
/// point problems map `Point` to `Point`, the Sperner ends of the chains
/// carry cells instead.
#[derive(Clone, Debug)]
pub enum ProblemSolution {
    Point(Solution),
    CubeCell(PanchromaticCell),
    TriangleCell(TrichromaticCell),
}

impl ProblemSolution {
    pub fn into_point(self) -> Result<Solution> {
        match self {
            ProblemSolution::Point(s) => Ok(s),
            other => Err(Error::MissingWitnesses(format!(
                "expected a point solution, got {}",
                other.kind()
            ))),
        }
    }

    pub fn into_cube_cell(self) -> Result<PanchromaticCell> {
        match self {
            ProblemSolution::CubeCell(c) => Ok(c),
            other => Err(Error::MissingWitnesses(format!(
                "expected a panchromatic cell, got {}",
                other.kind()
            ))),
        }
    }

    pub fn into_triangle_cell(self) -> Result<TrichromaticCell> {
        match self {
            ProblemSolution::TriangleCell(c) => Ok(c),
            other => Err(Error::MissingWitnesses(format!(
                "expected a trichromatic cell, got {}",
                other.kind()
            ))),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ProblemSolution::Point(_) => "point",
            ProblemSolution::CubeCell(_) => "cube-cell",
            ProblemSolution::TriangleCell(_) => "triangle-cell",
        }
    }
}
