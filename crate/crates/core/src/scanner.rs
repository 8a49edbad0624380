//! AC validation sweep.
//!
//! The aggregated active power `P` is stepped from `Σp_min` to `Σp_max`.
//! With the dispatch fixed by the shift keys, every `(P, Q)` pair fully
//! determines the nodal injections, so finding the extreme feasible `Q`
//! for a given `P` reduces to bisection on power-flow feasibility.
//!
//! Two areas come out of the sweep: the *admissible* area of aggregated
//! generator setpoints, and the *resulting* area seen through the network,
//! i.e. each admissible point minus the series and shunt losses of its
//! power-flow solution.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::acpf::{check_limits_with, LimitTolerance, PfOptions, PfSolution, PowerFlowModel};
use crate::capability::{analyze, generator_bounds, AnalysisOptions, GskMapping, ReducedDemand};
use crate::error::{ModelError, ScanError};
use crate::netmodel::NetworkCase;
use crate::polytope2d::{convex_hull, intersect, ConvexPolygon, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub n_p_samples: usize,
    /// Absolute bisection tolerance on Q (pu).
    pub q_tolerance: f64,
    /// Grid used to find a first feasible Q for each P.
    pub coarse_points: usize,
    pub parallel: bool,
    pub pf: PfOptions,
    pub limits: LimitTolerance,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            n_p_samples: 100,
            q_tolerance: 1e-4,
            coarse_points: 33,
            parallel: false,
            pf: PfOptions::default(),
            limits: LimitTolerance::default(),
        }
    }
}

/// Feasibility oracle for aggregated setpoints.
pub struct Oracle<'a> {
    case: &'a NetworkCase,
    model: PowerFlowModel,
    map: &'a GskMapping,
    demand: ReducedDemand,
    v0: f64,
    limits: LimitTolerance,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub feasible: bool,
    pub solution: PfSolution,
}

impl<'a> Oracle<'a> {
    pub fn new(case: &'a NetworkCase, map: &'a GskMapping, config: &ScanConfig) -> Result<Self, ModelError> {
        Ok(Self {
            case,
            model: PowerFlowModel::new(case, config.pf)?,
            map,
            demand: ReducedDemand::from_case(case),
            v0: case.v0(),
            limits: config.limits,
        })
    }

    /// Dispatches `(P, Q)` through the shift keys and checks all limits.
    /// A non-converged power flow counts as infeasible.
    pub fn evaluate(&self, setpoint: Point) -> Result<Evaluation, ModelError> {
        let (p, q) = self.map.dispatch(setpoint, &self.demand);
        let solution = self.model.solve(&p, &q, self.v0)?;
        let feasible = solution.converged
            && check_limits_with(&solution, self.case, self.limits).is_empty();
        Ok(Evaluation { feasible, solution })
    }
}

/// Extreme feasible points of one P row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extremes {
    pub q_min: f64,
    pub q_max: f64,
    /// Slack injection at the lower / upper extreme.
    pub feeder_at_min: Point,
    pub feeder_at_max: Point,
    /// Setpoint minus network losses at the lower / upper extreme.
    pub resulting_at_min: Point,
    pub resulting_at_max: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSample {
    pub p: f64,
    /// `None` when no Q within the generator bounds is feasible.
    pub extremes: Option<Extremes>,
    pub solves: usize,
    pub nonconverged: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub admissible: ConvexPolygon,
    pub resulting: ConvexPolygon,
    pub samples: Vec<ScanSample>,
    /// Number of extreme-point traces (two per feasible row).
    pub traces: usize,
    pub solves: usize,
    #[serde(skip)]
    pub scan_seconds: f64,
}

struct RowTracer<'o, 'a> {
    oracle: &'o Oracle<'a>,
    p: f64,
    solves: usize,
    nonconverged: usize,
}

impl RowTracer<'_, '_> {
    fn eval(&mut self, q: f64) -> Result<Evaluation, ModelError> {
        self.solves += 1;
        let e = self.oracle.evaluate(Point::new(self.p, q))?;
        if !e.solution.converged {
            self.nonconverged += 1;
        }
        Ok(e)
    }

    /// Bisects between a feasible `good` and an infeasible `bad`.
    fn bisect(
        &mut self,
        mut good: (f64, PfSolution),
        mut bad: f64,
        tol: f64,
    ) -> Result<(f64, PfSolution), ModelError> {
        while (bad - good.0).abs() > tol {
            let mid = 0.5 * (good.0 + bad);
            let e = self.eval(mid)?;
            if e.feasible {
                good = (mid, e.solution);
            } else {
                bad = mid;
            }
        }
        Ok(good)
    }
}

/// Traces the feasible Q interval of a single P row.
pub fn scan_row(oracle: &Oracle<'_>, p: f64, q_bounds: (f64, f64), config: &ScanConfig) -> Result<ScanSample, ModelError> {
    let (q_lo, q_hi) = q_bounds;
    let mut tracer = RowTracer {
        oracle,
        p,
        solves: 0,
        nonconverged: 0,
    };

    let k = config.coarse_points.max(2);
    let mid = 0.5 * (q_lo + q_hi);
    let mut grid: Vec<f64> = (0..k)
        .map(|j| q_lo + (q_hi - q_lo) * j as f64 / (k - 1) as f64)
        .collect();
    grid.sort_by(|a, b| (a - mid).abs().total_cmp(&(b - mid).abs()).then(a.total_cmp(b)));
    grid.dedup();

    let mut infeasible = Vec::new();
    let mut anchor = None;
    for &q in &grid {
        let e = tracer.eval(q)?;
        if e.feasible {
            anchor = Some((q, e.solution));
            break;
        }
        infeasible.push(q);
    }
    let Some(anchor) = anchor else {
        return Ok(ScanSample {
            p,
            extremes: None,
            solves: tracer.solves,
            nonconverged: tracer.nonconverged,
        });
    };

    let a = anchor.0;
    let nearest_above = infeasible.iter().copied().filter(|&q| q > a).fold(None, |m: Option<f64>, q| Some(m.map_or(q, |m| m.min(q))));
    let nearest_below = infeasible.iter().copied().filter(|&q| q < a).fold(None, |m: Option<f64>, q| Some(m.map_or(q, |m| m.max(q))));

    let upper = match nearest_above {
        Some(bad) => tracer.bisect(anchor.clone(), bad, config.q_tolerance)?,
        None if a >= q_hi => anchor.clone(),
        None => {
            let e = tracer.eval(q_hi)?;
            if e.feasible {
                (q_hi, e.solution)
            } else {
                tracer.bisect(anchor.clone(), q_hi, config.q_tolerance)?
            }
        }
    };
    let lower = match nearest_below {
        Some(bad) => tracer.bisect(anchor, bad, config.q_tolerance)?,
        None if a <= q_lo => anchor,
        None => {
            let e = tracer.eval(q_lo)?;
            if e.feasible {
                (q_lo, e.solution)
            } else {
                tracer.bisect(anchor, q_lo, config.q_tolerance)?
            }
        }
    };

    let resulting = |q: f64, s: &PfSolution| Point::new(p - s.loss_p, q - s.loss_q);
    Ok(ScanSample {
        p,
        extremes: Some(Extremes {
            q_min: lower.0,
            q_max: upper.0,
            feeder_at_min: Point::new(lower.1.slack_p, lower.1.slack_q),
            feeder_at_max: Point::new(upper.1.slack_p, upper.1.slack_q),
            resulting_at_min: resulting(lower.0, &lower.1),
            resulting_at_max: resulting(upper.0, &upper.1),
        }),
        solves: tracer.solves,
        nonconverged: tracer.nonconverged,
    })
}

/// Runs the full sweep.
pub fn scan(case: &NetworkCase, map: &GskMapping, config: &ScanConfig) -> Result<ScanResult, ScanError> {
    if config.n_p_samples < 2 {
        return Err(ScanError::TooFewSamples(config.n_p_samples));
    }
    let start = Instant::now();
    let oracle = Oracle::new(case, map, config)?;
    let bounds = generator_bounds(&case.generators);
    let n = config.n_p_samples;
    let p_values: Vec<f64> = (0..n)
        .map(|i| bounds.p_min + (bounds.p_max - bounds.p_min) * i as f64 / (n - 1) as f64)
        .collect();
    let q_bounds = (bounds.q_min, bounds.q_max);

    let samples: Vec<ScanSample> = if config.parallel {
        p_values
            .par_iter()
            .map(|&p| scan_row(&oracle, p, q_bounds, config))
            .collect::<Result<_, _>>()?
    } else {
        p_values
            .iter()
            .map(|&p| scan_row(&oracle, p, q_bounds, config))
            .collect::<Result<_, _>>()?
    };

    let feasible: Vec<&Extremes> = samples.iter().filter_map(|s| s.extremes.as_ref()).collect();
    if feasible.len() < 3 {
        return Err(ScanError::TooFewFeasible(feasible.len()));
    }
    let admissible_pts: Vec<Point> = samples
        .iter()
        .filter_map(|s| s.extremes.as_ref().map(|e| (s.p, e)))
        .flat_map(|(p, e)| [Point::new(p, e.q_min), Point::new(p, e.q_max)])
        .collect();
    let resulting_pts: Vec<Point> = feasible
        .iter()
        .flat_map(|e| [e.resulting_at_min, e.resulting_at_max])
        .collect();

    Ok(ScanResult {
        admissible: convex_hull(&admissible_pts),
        resulting: convex_hull(&resulting_pts),
        traces: 2 * feasible.len(),
        solves: samples.iter().map(|s| s.solves).sum(),
        samples,
        scan_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Error and fill factor of a polyhedral area against a reference area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    /// `1 − |ref ∩ poly| / |poly|`; `None` when `poly` has no area.
    pub error: Option<f64>,
    /// `|ref ∩ poly| / |ref|`; `None` when `ref` has no area.
    pub fill_factor: Option<f64>,
    pub intersection_area: f64,
    pub reference_area: f64,
    pub poly_area: f64,
}

pub fn compute_metrics(reference: &ConvexPolygon, poly: &ConvexPolygon) -> Metrics {
    let inter = intersect(reference, poly).area();
    let ref_area = reference.area();
    let poly_area = poly.area();
    Metrics {
        error: (poly_area > 0.0).then(|| (1.0 - inter / poly_area).clamp(0.0, 1.0)),
        fill_factor: (ref_area > 0.0).then(|| (inter / ref_area).clamp(0.0, 1.0)),
        intersection_area: inter,
        reference_area: ref_area,
        poly_area,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRecord {
    pub n_buses: usize,
    pub t_poly: f64,
    pub t_scan: f64,
}

impl BenchRecord {
    pub const CSV_HEADER: &'static str = "n_buses,t_poly_s,t_scan_s";

    pub fn csv_row(&self) -> String {
        format!("{},{:.6e},{:.6e}", self.n_buses, self.t_poly, self.t_scan)
    }
}

/// Wall-clock time of the polyhedral pipeline and of a sequential scan on
/// the same case.
pub fn benchmark(case: &NetworkCase, options: AnalysisOptions, config: &ScanConfig) -> Result<BenchRecord, ScanError> {
    let start = Instant::now();
    let analysis = analyze(case, options)?;
    let t_poly = start.elapsed().as_secs_f64();

    let sequential = ScanConfig {
        parallel: false,
        ..*config
    };
    let start = Instant::now();
    scan(case, &analysis.gsk, &sequential)?;
    let t_scan = start.elapsed().as_secs_f64();
    Ok(BenchRecord {
        n_buses: case.n_buses(),
        t_poly,
        t_scan,
    })
}

/// Least-squares slope of `ln(t)` against bus count.
pub fn semilog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, t)| *t > 0.0)
        .map(|&(n, t)| (n, t.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
