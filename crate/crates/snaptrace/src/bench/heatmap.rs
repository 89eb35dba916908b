//! Posterior heatmaps: run inference at every sweepable cell of a
//! grid-like domain and render the posteriors as a portable pixmap (P3)
//! plus a JSON table.
//!
//! Each goal gets a color (gem letters map to their conventional colors);
//! a cell's fill is the posterior-weighted blend of goal colors. Cells
//! whose estimate had no valid samples render white with a black ×, walls
//! render near-black, masked cells mid-gray, and cells skipped by the
//! sweep (e.g. closed doors under the current inventory) light gray.

use rayon::prelude::*;
use serde::Serialize;

use crate::bench::report::{PolicyEcho, SamplerEcho};
use crate::bench::{sweep_states, InferenceEngine};
use crate::domains::ParsedDomain;
use crate::mdp::Domain;
use crate::policy::PolicyConfig;
use crate::posterior::{posterior_over_goals, GoalPosterior, GoalPrior};
use crate::sampler::{Method, SamplerConfig};

#[derive(Debug, Clone)]
pub struct HeatmapOptions {
    pub method: Method,
    pub sampler: SamplerConfig,
    pub policy: PolicyConfig,
    pub prior: GoalPrior,
    /// Inventory context appended to every swept cell (keys domains).
    pub context: String,
    pub mask: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatmapCell {
    pub row: usize,
    pub col: usize,
    /// `ok`, `no_valid`, `wall`, `masked`, or `skipped`.
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub posterior: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatmapReport {
    pub command: &'static str,
    pub domain_kind: &'static str,
    pub width: usize,
    pub height: usize,
    pub method: String,
    pub seed: u64,
    pub sampler: SamplerEcho,
    pub policy: PolicyEcho,
    pub goals: Vec<String>,
    /// RGB fill color per goal, aligned with `goals`.
    pub colors: Vec<[u8; 3]>,
    /// Row-major over the full rectangle, `width × height` entries.
    pub cells: Vec<HeatmapCell>,
}

/// Pixels per cell interior; 1px borders separate cells.
const CELL_PX: usize = 24;
const STRIDE: usize = CELL_PX + 1;

const BORDER: [u8; 3] = [40, 40, 40];
const WALL: [u8; 3] = [30, 30, 30];
const MASKED: [u8; 3] = [128, 128, 128];
const SKIPPED: [u8; 3] = [200, 200, 200];
const WHITE: [u8; 3] = [255, 255, 255];
const BLACK: [u8; 3] = [0, 0, 0];

/// Conventional fills for gem letters, then a fallback cycle for anything
/// else (chain goals, unusual labels).
fn goal_color(label: &str, index: usize) -> [u8; 3] {
    match label.strip_prefix("gem ").unwrap_or(label) {
        "r" => [220, 60, 60],
        "g" => [60, 180, 90],
        "b" => [70, 110, 240],
        "y" => [240, 200, 60],
        "p" => [220, 90, 200],
        _ => {
            const CYCLE: [[u8; 3]; 6] = [
                [230, 120, 40],
                [0, 160, 160],
                [140, 90, 220],
                [160, 200, 40],
                [90, 140, 100],
                [200, 80, 120],
            ];
            CYCLE[index % CYCLE.len()]
        }
    }
}

pub fn render_heatmap(
    parsed: &ParsedDomain,
    opts: &HeatmapOptions,
) -> Result<HeatmapReport, String> {
    opts.sampler.validate()?;
    let specs = sweep_states(parsed, &opts.context, &opts.mask)?;
    let (width, height) = match parsed {
        ParsedDomain::Chain(d) => (d.cells(), 1),
        ParsedDomain::Grid(d) => (d.width(), d.height()),
        ParsedDomain::Keys(d) => (d.width(), d.height()),
        ParsedDomain::Blocks(_) => {
            return Err("cannot render a heatmap for a blocks domain".into())
        }
    };
    let posteriors = match parsed {
        ParsedDomain::Chain(d) => sweep_posteriors(d, |s| d.parse_snapshot(s), &specs, opts)?,
        ParsedDomain::Grid(d) => sweep_posteriors(d, |s| d.parse_snapshot(s), &specs, opts)?,
        ParsedDomain::Keys(d) => sweep_posteriors(d, |s| d.parse_snapshot(s), &specs, opts)?,
        ParsedDomain::Blocks(_) => unreachable!("rejected above"),
    };

    let is_wall = |row: usize, col: usize| -> bool {
        match parsed {
            ParsedDomain::Grid(d) => d.is_wall(d.cell(row, col)),
            ParsedDomain::Keys(d) => d.is_wall(d.cell(row, col)),
            _ => false,
        }
    };

    let mut by_cell = vec![None; width * height];
    for ((row, col), posterior) in posteriors {
        by_cell[row * width + col] = Some(posterior);
    }
    let mut cells = Vec::with_capacity(width * height);
    for row in 0..height {
        for col in 0..width {
            let (status, posterior) = if is_wall(row, col) {
                ("wall", None)
            } else if opts.mask.contains(&(row, col)) {
                ("masked", None)
            } else {
                match by_cell[row * width + col].take() {
                    Some(p) if p.is_valid() => ("ok", Some(p.probs.clone())),
                    Some(_) => ("no_valid", None),
                    None => ("skipped", None),
                }
            };
            cells.push(HeatmapCell { row, col, status, posterior });
        }
    }

    let goals = parsed.goal_labels();
    let colors = goals
        .iter()
        .enumerate()
        .map(|(i, label)| goal_color(label, i))
        .collect();
    Ok(HeatmapReport {
        command: "heatmap",
        domain_kind: parsed.kind(),
        width,
        height,
        method: opts.method.to_string(),
        seed: opts.sampler.seed,
        sampler: (&opts.sampler).into(),
        policy: (&opts.policy).into(),
        goals,
        colors,
        cells,
    })
}

fn sweep_posteriors<D: Domain>(
    domain: &D,
    parse: impl Fn(&str) -> Result<D::State, String>,
    specs: &[(usize, usize, String)],
    opts: &HeatmapOptions,
) -> Result<Vec<((usize, usize), GoalPosterior)>, String> {
    let engine = InferenceEngine::new(domain, &opts.policy).map_err(|e| e.to_string())?;
    let caches = engine.caches(&opts.sampler, opts.method);
    let states: Vec<((usize, usize), D::State)> = specs
        .iter()
        .map(|(row, col, spec)| Ok(((*row, *col), parse(spec)?)))
        .collect::<Result<_, String>>()?;
    states
        .par_iter()
        .map(|((row, col), x)| {
            let est =
                engine.likelihoods_with_caches(x, &opts.sampler, opts.method, caches.as_deref());
            let posterior = posterior_over_goals(&est, &opts.prior).map_err(|e| e.to_string())?;
            Ok(((*row, *col), posterior))
        })
        .collect()
}

impl HeatmapReport {
    fn fill(&self, cell: &HeatmapCell) -> [u8; 3] {
        match cell.status {
            "wall" => WALL,
            "masked" => MASKED,
            "skipped" => SKIPPED,
            "no_valid" => WHITE,
            _ => {
                let p = cell.posterior.as_ref().expect("ok cells carry a posterior");
                let mut rgb = [0.0f64; 3];
                for (weight, color) in p.iter().zip(&self.colors) {
                    for (acc, &channel) in rgb.iter_mut().zip(color.iter()) {
                        *acc += weight * channel as f64;
                    }
                }
                [rgb[0].round() as u8, rgb[1].round() as u8, rgb[2].round() as u8]
            }
        }
    }

    /// Render as a plain-text portable pixmap (P3).
    pub fn to_ppm(&self) -> String {
        let px_w = self.width * STRIDE + 1;
        let px_h = self.height * STRIDE + 1;
        let mut out = format!("P3\n{px_w} {px_h}\n255\n");
        for py in 0..px_h {
            for px in 0..px_w {
                let rgb = if px % STRIDE == 0 || py % STRIDE == 0 {
                    BORDER
                } else {
                    let col = px / STRIDE;
                    let row = py / STRIDE;
                    let cell = &self.cells[row * self.width + col];
                    let bx = (px - (col * STRIDE + 1)) as i64;
                    let by = (py - (row * STRIDE + 1)) as i64;
                    let on_cross = (bx - by).abs() <= 1
                        || (bx + by - (CELL_PX as i64 - 1)).abs() <= 1;
                    if cell.status == "no_valid" && on_cross {
                        BLACK
                    } else {
                        self.fill(cell)
                    }
                };
                out.push_str(&format!("{} {} {}\n", rgb[0], rgb[1], rgb[2]));
            }
        }
        out
    }
}
