//! Static SVG renderings of 2D-renderable instances: triangle Sperner
//! lattices, three-covering families on the simplex, and cubes of
//! dimension at most two. Vertex colors and covering regions are obtained
//! by querying the oracles at lattice or grid points.

use crate::commands;
use anyhow::{bail, Context, Result};
use kkm_core::formats;
use kkm_core::oracles::triangle_vertices;
use kkm_core::{Instance, QueryLedger, SimplexPoint, SpernerVariant};
use std::path::Path;
use std::process::ExitCode;

const PALETTE: [&str; 4] = ["#e6b422", "#d7263d", "#1b6ca8", "#3a7d44"];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 40.0;

pub fn run(instance_path: &Path, solution: Option<&Path>, out: Option<&Path>) -> Result<ExitCode> {
    let spec = formats::parse_instance(
        &std::fs::read_to_string(instance_path)
            .with_context(|| format!("reading {}", instance_path.display()))?,
    )?;
    let built = formats::build_instance(&spec)?;
    let marker = match solution {
        Some(path) => commands::solution_point(&commands::parse_solution_file(path)?)
            .map(|p| p.coords().to_vec()),
        None => None,
    };
    let svg = match &built.instance {
        Instance::Sperner(s) => match s.variant() {
            SpernerVariant::Triangle { size } => triangle_svg(s, size, marker.as_deref())?,
            SpernerVariant::Cube { dim, size } if dim <= 2 => cube_svg(s, dim, size)?,
            SpernerVariant::Cube { dim, .. } => {
                bail!("not renderable: cube of dimension {dim} exceeds 2")
            }
        },
        Instance::Rkkm(r) if r.n() == 3 => rkkm_svg(r, marker.as_deref())?,
        other => bail!(
            "not renderable: {} (supported: triangle Sperner, 3-covering families, cubes of dimension <= 2)",
            other.kind_name()
        ),
    };
    match out {
        Some(p) => std::fs::write(p, &svg).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{svg}"),
    }
    Ok(ExitCode::from(0))
}

/// Barycentric triple (normalized) to canvas coordinates; corner 0 bottom
/// left, corner 1 bottom right, corner 2 on top.
fn tri_pos(x: &[f64]) -> (f64, f64) {
    let side = WIDTH - 2.0 * MARGIN;
    let h = side * 3f64.sqrt() / 2.0;
    let px = MARGIN + side * (x[1] + 0.5 * x[2]);
    let py = HEIGHT - MARGIN - h * x[2];
    (px, py)
}

fn svg_open(buf: &mut String) {
    buf.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    ));
}

fn marker_path(buf: &mut String, x: f64, y: f64) {
    buf.push_str(&format!(
        "<path d=\"M {} {} L {} {} M {} {} L {} {}\" stroke=\"black\" stroke-width=\"2.5\"/>\n",
        x - 7.0,
        y - 7.0,
        x + 7.0,
        y + 7.0,
        x - 7.0,
        y + 7.0,
        x + 7.0,
        y - 7.0
    ));
}

fn triangle_svg(
    inst: &kkm_core::SpernerInstance,
    size: u32,
    marker: Option<&[f64]>,
) -> Result<String> {
    let ledger = QueryLedger::new();
    let mut buf = String::new();
    svg_open(&mut buf);
    let n = size as f64;
    // lattice edges
    for v in triangle_vertices(size) {
        let from = [v[0] as f64 / n, v[1] as f64 / n, v[2] as f64 / n];
        for delta in [[-1i64, 1, 0], [-1, 0, 1], [0, -1, 1]] {
            let to = [v[0] as i64 + delta[0], v[1] as i64 + delta[1], v[2] as i64 + delta[2]];
            if to.iter().all(|&c| c >= 0) {
                let to = [to[0] as f64 / n, to[1] as f64 / n, to[2] as f64 / n];
                let (x1, y1) = tri_pos(&from);
                let (x2, y2) = tri_pos(&to);
                buf.push_str(&format!(
                    "<line x1=\"{x1:.1}\" y1=\"{y1:.1}\" x2=\"{x2:.1}\" y2=\"{y2:.1}\" \
                     stroke=\"#999\" stroke-width=\"1\"/>\n"
                ));
            }
        }
    }
    // one dot per lattice vertex, colored by the oracle
    for v in triangle_vertices(size) {
        let color = inst.query_color(&ledger, &v)? as usize;
        let (x, y) = tri_pos(&[v[0] as f64 / n, v[1] as f64 / n, v[2] as f64 / n]);
        buf.push_str(&format!(
            "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"6\" fill=\"{}\" stroke=\"black\"/>\n",
            PALETTE[color.min(3)]
        ));
    }
    if let Some(m) = marker {
        if m.len() == 3 {
            let total: f64 = m.iter().sum();
            let norm: Vec<f64> = m.iter().map(|v| v / total).collect();
            let (x, y) = tri_pos(&norm);
            marker_path(&mut buf, x, y);
        }
    }
    buf.push_str("</svg>\n");
    Ok(buf)
}

fn rkkm_svg(inst: &kkm_core::RkkmInstance, marker: Option<&[f64]>) -> Result<String> {
    let ledger = QueryLedger::new();
    let mut buf = String::new();
    svg_open(&mut buf);
    // sampled covering regions of the first covering: each grid point is
    // painted with the smallest set containing it
    let resolution = 48u32;
    for a in 0..=resolution {
        for b in 0..=(resolution - a) {
            let c = resolution - a - b;
            let x = SimplexPoint::new(vec![
                a as f64 / resolution as f64,
                b as f64 / resolution as f64,
                c as f64 / resolution as f64,
            ])?;
            let mut set = 3usize;
            for j in 0..3 {
                if inst.query_covering(&ledger, 0, &x, j)? {
                    set = j;
                    break;
                }
            }
            let (px, py) = tri_pos(x.coords());
            buf.push_str(&format!(
                "<circle cx=\"{px:.1}\" cy=\"{py:.1}\" r=\"3.5\" fill=\"{}\" fill-opacity=\"0.8\"/>\n",
                PALETTE[set.min(3)]
            ));
        }
    }
    // outline
    let corners = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]];
    for w in corners.windows(2) {
        let (x1, y1) = tri_pos(&w[0]);
        let (x2, y2) = tri_pos(&w[1]);
        buf.push_str(&format!(
            "<line x1=\"{x1:.1}\" y1=\"{y1:.1}\" x2=\"{x2:.1}\" y2=\"{y2:.1}\" stroke=\"black\" stroke-width=\"1.5\"/>\n"
        ));
    }
    if let Some(m) = marker {
        if m.len() == 3 {
            let (x, y) = tri_pos(m);
            marker_path(&mut buf, x, y);
        }
    }
    buf.push_str("</svg>\n");
    Ok(buf)
}

fn cube_svg(inst: &kkm_core::SpernerInstance, dim: usize, size: u32) -> Result<String> {
    let ledger = QueryLedger::new();
    let mut buf = String::new();
    svg_open(&mut buf);
    let span = (WIDTH.min(HEIGHT) - 2.0 * MARGIN) / size as f64;
    let pos = |v: &[u32]| -> (f64, f64) {
        let x = MARGIN + v[0] as f64 * span;
        let y = if dim == 2 { HEIGHT - MARGIN - v[1] as f64 * span } else { HEIGHT / 2.0 };
        (x, y)
    };
    // grid lines
    for t in 0..=size {
        let (x1, y1) = pos(&[t, 0]);
        if dim == 2 {
            let (x2, y2) = pos(&[t, size]);
            buf.push_str(&format!(
                "<line x1=\"{x1:.1}\" y1=\"{y1:.1}\" x2=\"{x2:.1}\" y2=\"{y2:.1}\" stroke=\"#ccc\"/>\n"
            ));
            let (hx1, hy1) = pos(&[0, t]);
            let (hx2, hy2) = pos(&[size, t]);
            buf.push_str(&format!(
                "<line x1=\"{hx1:.1}\" y1=\"{hy1:.1}\" x2=\"{hx2:.1}\" y2=\"{hy2:.1}\" stroke=\"#ccc\"/>\n"
            ));
        } else {
            let _ = (x1, y1);
        }
    }
    let mut vertices: Vec<Vec<u32>> = Vec::new();
    if dim == 1 {
        vertices.extend((0..=size).map(|a| vec![a]));
    } else {
        for a in 0..=size {
            for b in 0..=size {
                vertices.push(vec![a, b]);
            }
        }
    }
    for v in vertices {
        let color = inst.query_color(&ledger, &v)? as usize;
        let (x, y) = pos(&v);
        buf.push_str(&format!(
            "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"6\" fill=\"{}\" stroke=\"black\"/>\n",
            PALETTE[color.min(3)]
        ));
    }
    buf.push_str("</svg>\n");
    Ok(buf)
}
