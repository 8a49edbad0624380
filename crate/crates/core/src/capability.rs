//! Feeder PQ capability polygon.
//!
//! Aggregated feeder setpoints `(P, Q)` are spread over the generators by
//! generation shift keys, giving nodal injections `T·[P; Q] − [p_d; q_d]`.
//! Pushing those through the linear TDFs turns every voltage band and
//! branch rating into halfspaces in the (P, Q) plane; together with the
//! generator rectangle they bound the capability polygon.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::admittance::{build_matrices, AdmittanceSet};
use crate::error::ModelError;
use crate::lintdf::{build_tdfs, LinearOptions, TdfSet};
use crate::netmodel::{Generator, NetworkCase};
use crate::polytope2d::{
    minimal_representation, polygon_from_halfspaces, BoundingBox, ConvexPolygon, Family,
    HalfspaceSet, Point, Tag,
};

/// Generation shift keys and the resulting aggregation matrix `T`.
#[derive(Debug, Clone)]
pub struct GskMapping {
    pub gsk_p: Vec<f64>,
    pub gsk_q: Vec<f64>,
    /// Generator-to-bus incidence over the non-slack buses.
    pub c_g: DMatrix<f64>,
    /// `[[C_g·gsk_p, 0], [0, C_g·gsk_q]]`, shape `2(n_b−1) × 2`.
    pub t: DMatrix<f64>,
}

impl GskMapping {
    /// Non-slack nodal injections for the aggregated setpoint `(P, Q)`.
    pub fn dispatch(&self, setpoint: Point, demand: &ReducedDemand) -> (Vec<f64>, Vec<f64>) {
        let m = self.c_g.nrows();
        let p = (0..m)
            .map(|i| self.t[(i, 0)] * setpoint.p - demand.p[i])
            .collect();
        let q = (0..m)
            .map(|i| self.t[(m + i, 1)] * setpoint.q - demand.q[i])
            .collect();
        (p, q)
    }
}

fn shift_keys(caps: impl Iterator<Item = f64>, what: &str) -> Result<Vec<f64>, ModelError> {
    let caps: Vec<f64> = caps.collect();
    if caps.iter().any(|&c| c < 0.0) {
        return Err(ModelError::Gsk(format!("negative {what} capability")));
    }
    let total: f64 = caps.iter().sum();
    if !(total > 0.0) {
        return Err(ModelError::Gsk(format!("all-zero {what} capability")));
    }
    Ok(caps.into_iter().map(|c| c / total).collect())
}

/// Shift keys proportional to maximum active and reactive capability.
///
/// A generator at the slack bus has a zero row in `C_g`: its share is
/// absorbed by the slack and never reaches the network.
pub fn build_gsk(case: &NetworkCase) -> Result<GskMapping, ModelError> {
    let gsk_p = shift_keys(case.generators.iter().map(|g| g.p_max), "active")?;
    let gsk_q = shift_keys(case.generators.iter().map(|g| g.q_max), "reactive")?;

    let reduced = reduced_positions(case);
    let m = case.n_buses() - 1;
    let ng = case.generators.len();
    let mut c_g = DMatrix::zeros(m, ng);
    for (k, g) in case.generators.iter().enumerate() {
        if let Some(r) = reduced[g.bus] {
            c_g[(r, k)] = 1.0;
        }
    }
    let col_p = &c_g * DVector::from_column_slice(&gsk_p);
    let col_q = &c_g * DVector::from_column_slice(&gsk_q);
    let mut t = DMatrix::zeros(2 * m, 2);
    t.view_mut((0, 0), (m, 1)).copy_from(&col_p);
    t.view_mut((m, 1), (m, 1)).copy_from(&col_q);
    Ok(GskMapping {
        gsk_p,
        gsk_q,
        c_g,
        t,
    })
}

/// Position of each bus among the non-slack buses (`None` for the slack).
fn reduced_positions(case: &NetworkCase) -> Vec<Option<usize>> {
    let slack = case.slack_index();
    let mut k = 0;
    (0..case.n_buses())
        .map(|i| {
            if Some(i) == slack {
                None
            } else {
                k += 1;
                Some(k - 1)
            }
        })
        .collect()
}

/// Demand at the non-slack buses.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDemand {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl ReducedDemand {
    pub fn from_case(case: &NetworkCase) -> Self {
        let idx = case.non_slack_indices();
        Self {
            p: idx.iter().map(|&i| case.p_d[i]).collect(),
            q: idx.iter().map(|&i| case.q_d[i]).collect(),
        }
    }

    pub fn stacked(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.p.len() + self.q.len(),
            self.p.iter().chain(self.q.iter()).copied(),
        )
    }
}

/// Aggregated generator bounds `[Σp_min, Σp_max] × [Σq_min, Σq_max]`.
pub fn generator_bounds(gens: &[Generator]) -> BoundingBox {
    BoundingBox {
        p_min: gens.iter().map(|g| g.p_min).sum(),
        p_max: gens.iter().map(|g| g.p_max).sum(),
        q_min: gens.iter().map(|g| g.q_min).sum(),
        q_max: gens.iter().map(|g| g.q_max).sum(),
    }
}

/// The generator rectangle as four halfspaces.
pub fn generator_box(gens: &[Generator]) -> HalfspaceSet {
    let b = generator_bounds(gens);
    let mut hs = HalfspaceSet::new();
    hs.push_row(1.0, 0.0, b.p_max, Tag::new(Family::Generator, 0, 0));
    hs.push_row(-1.0, 0.0, -b.p_min, Tag::new(Family::Generator, 0, 1));
    hs.push_row(0.0, 1.0, b.q_max, Tag::new(Family::Generator, 1, 0));
    hs.push_row(0.0, -1.0, -b.q_min, Tag::new(Family::Generator, 1, 1));
    hs
}

fn check_dims(tdf: &TdfSet, map: &GskMapping, demand: &ReducedDemand) -> Result<(), ModelError> {
    let m = tdf.n_reduced();
    if map.t.nrows() != 2 * m || demand.p.len() != m || demand.q.len() != m {
        return Err(ModelError::Dimension(format!(
            "{m} non-slack buses but T has {} rows and demand {}/{} entries",
            map.t.nrows(),
            demand.p.len(),
            demand.q.len()
        )));
    }
    Ok(())
}

/// Voltage band halfspaces, two per non-slack bus.
///
/// `v_min` / `v_max` are indexed by full bus position; `bus_ids` maps each
/// reduced row to that position (used for both limits and tags).
pub fn voltage_halfspaces(
    tdf: &TdfSet,
    map: &GskMapping,
    demand: &ReducedDemand,
    bus_ids: &[usize],
    v_min: &[f64],
    v_max: &[f64],
    v0: f64,
) -> Result<HalfspaceSet, ModelError> {
    check_dims(tdf, map, demand)?;
    if bus_ids.len() != tdf.n_reduced() {
        return Err(ModelError::Dimension("bus id list length".into()));
    }
    let coeff = &tdf.v_tdf * &map.t;
    let shift = &tdf.v_tdf * demand.stacked();
    let mut hs = HalfspaceSet::new();
    for (r, &bus) in bus_ids.iter().enumerate() {
        let (a_p, a_q) = (coeff[(r, 0)], coeff[(r, 1)]);
        hs.push_row(a_p, a_q, v_max[bus] - v0 + shift[r], Tag::new(Family::Voltage, bus, 0));
        hs.push_row(-a_p, -a_q, -v_min[bus] + v0 - shift[r], Tag::new(Family::Voltage, bus, 1));
    }
    Ok(hs)
}

/// Inscribed regular polygon of the apparent power disc.
///
/// Row `k` reads `coeffs[k]·(p_f, q_f) ≤ s`, with the edge normal at angle
/// `(2k+1)π/n` scaled by `1/cos(π/n)` so the right-hand side is the rating
/// itself. For `n = 8` the first row is `p_f + (√2−1)·q_f ≤ s`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonApprox {
    pub n_sides: usize,
    pub coeffs: Vec<[f64; 2]>,
    /// One rating per branch row; 0 means unlimited.
    pub ratings: Vec<f64>,
}

impl PolygonApprox {
    /// The n-gon realized for rating `s` in the `(p_f, q_f)` plane.
    pub fn realized(&self, s: f64) -> ConvexPolygon {
        let mut hs = HalfspaceSet::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            hs.push_row(c[0], c[1], s, Tag::new(Family::Branch, 0, k));
        }
        let bbox = BoundingBox {
            p_min: -2.0 * s,
            p_max: 2.0 * s,
            q_min: -2.0 * s,
            q_max: 2.0 * s,
        };
        polygon_from_halfspaces(&hs, &bbox)
    }
}

pub fn branch_polygon_rows(n_sides: usize, s_ratings: &[f64]) -> Result<PolygonApprox, ModelError> {
    if n_sides < 4 || !n_sides.is_multiple_of(2) {
        return Err(ModelError::PolygonApprox(format!(
            "n_sides must be even and at least 4, got {n_sides}"
        )));
    }
    if let Some(s) = s_ratings.iter().find(|s| !(**s >= 0.0)) {
        return Err(ModelError::PolygonApprox(format!("invalid rating {s}")));
    }
    let n = n_sides as f64;
    let inv = 1.0 / (PI / n).cos();
    let coeffs = (0..n_sides)
        .map(|k| {
            let alpha = (2 * k + 1) as f64 * PI / n;
            [alpha.cos() * inv, alpha.sin() * inv]
        })
        .collect();
    Ok(PolygonApprox {
        n_sides,
        coeffs,
        ratings: s_ratings.to_vec(),
    })
}

/// Branch rating halfspaces, `n_sides` per rated branch.
///
/// `branch_ids[row]` is the case position of PTDF branch row `row`.
pub fn branch_halfspaces(
    tdf: &TdfSet,
    map: &GskMapping,
    demand: &ReducedDemand,
    approx: &PolygonApprox,
    branch_ids: &[usize],
) -> Result<HalfspaceSet, ModelError> {
    check_dims(tdf, map, demand)?;
    let nl = tdf.n_branches();
    if approx.ratings.len() != nl || branch_ids.len() != nl {
        return Err(ModelError::Dimension(format!(
            "{nl} branches but {} ratings and {} ids",
            approx.ratings.len(),
            branch_ids.len()
        )));
    }
    let coeff = &tdf.ptdf * &map.t;
    // Flow at (P, Q) = 0: −PTDF·d + offset.
    let base = &tdf.branch_offset - &tdf.ptdf * demand.stacked();
    let mut hs = HalfspaceSet::new();
    for l in 0..nl {
        let s = approx.ratings[l];
        if s <= 0.0 {
            continue;
        }
        for (k, c) in approx.coeffs.iter().enumerate() {
            let a_p = c[0] * coeff[(l, 0)] + c[1] * coeff[(nl + l, 0)];
            let a_q = c[0] * coeff[(l, 1)] + c[1] * coeff[(nl + l, 1)];
            let rhs = s - c[0] * base[l] - c[1] * base[nl + l];
            hs.push_row(a_p, a_q, rhs, Tag::new(Family::Branch, branch_ids[l], k));
        }
    }
    Ok(hs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapabilityOptions {
    pub n_sides: usize,
    /// Bounding box growth relative to the generator rectangle.
    pub bbox_inflation: f64,
}

impl Default for CapabilityOptions {
    fn default() -> Self {
        Self {
            n_sides: 8,
            bbox_inflation: 0.1,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Families {
    pub generator: HalfspaceSet,
    pub voltage: HalfspaceSet,
    pub branch: HalfspaceSet,
}

impl Families {
    pub fn combined(&self) -> HalfspaceSet {
        let mut all = self.generator.clone();
        all.extend(&self.voltage);
        all.extend(&self.branch);
        all
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CapabilityResult {
    pub polygon: ConvexPolygon,
    /// Binding halfspaces only.
    pub halfspaces: HalfspaceSet,
    pub families: Families,
    pub bbox: BoundingBox,
    pub empty: bool,
    pub diagnostics: Vec<String>,
}

impl CapabilityResult {
    /// Polygon of a single family, clipped to the same box.
    pub fn family_polygon(&self, family: Family) -> ConvexPolygon {
        let hs = match family {
            Family::Generator => &self.families.generator,
            Family::Voltage => &self.families.voltage,
            Family::Branch => &self.families.branch,
            Family::Box => return self.bbox.polygon(),
        };
        polygon_from_halfspaces(hs, &self.bbox)
    }
}

/// Builds all three families and intersects them.
pub fn capability_polygon(
    case: &NetworkCase,
    adm: &AdmittanceSet,
    tdf: &TdfSet,
    map: &GskMapping,
    options: CapabilityOptions,
) -> Result<CapabilityResult, ModelError> {
    let demand = ReducedDemand::from_case(case);
    let bus_ids = case.non_slack_indices();
    let v_min: Vec<f64> = case.buses.iter().map(|b| b.v_min).collect();
    let v_max: Vec<f64> = case.buses.iter().map(|b| b.v_max).collect();
    let ratings: Vec<f64> = adm
        .branch_index
        .iter()
        .map(|&i| case.branches[i].s_rating)
        .collect();

    let families = Families {
        generator: generator_box(&case.generators),
        voltage: voltage_halfspaces(tdf, map, &demand, &bus_ids, &v_min, &v_max, tdf.v0)?,
        branch: branch_halfspaces(
            tdf,
            map,
            &demand,
            &branch_polygon_rows(options.n_sides, &ratings)?,
            &adm.branch_index,
        )?,
    };
    let bbox = generator_bounds(&case.generators).inflated(options.bbox_inflation);
    let all = families.combined();
    let polygon = polygon_from_halfspaces(&all, &bbox);
    let reduced = minimal_representation(&all, &bbox);

    let mut diagnostics = Vec::new();
    for t in &all.contradictions {
        diagnostics.push(format!("{} constraint {}/{} cannot be met at any setpoint", t.family, t.index, t.facet));
    }
    if polygon.is_empty() {
        diagnostics.push("capability polygon is empty: no feasible feeder setpoint".into());
    }
    Ok(CapabilityResult {
        empty: polygon.is_empty(),
        polygon,
        halfspaces: reduced.set,
        families,
        bbox,
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AnalysisOptions {
    pub linear: LinearOptions,
    pub capability: CapabilityOptions,
}

/// Everything the polyhedral pipeline produces for one case.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub admittance: AdmittanceSet,
    pub tdf: TdfSet,
    pub gsk: GskMapping,
    pub capability: CapabilityResult,
}

/// Admittances → TDFs → GSKs → capability polygon.
pub fn analyze(case: &NetworkCase, options: AnalysisOptions) -> Result<Analysis, ModelError> {
    let admittance = build_matrices(case)?;
    let tdf = build_tdfs(case, &admittance, options.linear)?;
    let gsk = build_gsk(case)?;
    let capability = capability_polygon(case, &admittance, &tdf, &gsk, options.capability)?;
    Ok(Analysis {
        admittance,
        tdf,
        gsk,
        capability,
    })
}
