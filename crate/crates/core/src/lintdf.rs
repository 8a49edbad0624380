//! Lossless linear power flow and the transfer distribution factors built
//! from it.
//!
//! The block system
//!
//! ```text
//! [ -Im Y'_b   Re Y_b ] [θ]   [p]
//! [ -Re Y'_b  -Im Y_b ] [v] = [q]
//! ```
//!
//! is reduced by deleting the slack bus's angle and magnitude rows/columns
//! and inverted. The top half of the inverse is ΘTDF, the bottom half VTDF:
//! `[θ; v] = TDF·[p; q] + [1·θ0; 1·v0]` over the non-slack buses. The
//! extended PTDF maps the same injections onto from-end active and reactive
//! branch flows.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::admittance::AdmittanceSet;
use crate::error::ModelError;
use crate::netmodel::NetworkCase;

/// Condition number above which a warning is logged.
pub const CONDITION_WARNING: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearOptions {
    /// Carry the constant branch flow caused by charging, shunts and taps
    /// at the slack voltage. With this off, branch flows are a pure linear
    /// map of the injections.
    pub branch_offset: bool,
}

impl Default for LinearOptions {
    fn default() -> Self {
        Self {
            branch_offset: true,
        }
    }
}

/// Transfer distribution factors of one case.
///
/// Injection columns are ordered `[p; q]` over the non-slack buses in
/// ascending bus position. PTDF rows are `[p_f; q_f]` over the in-service
/// branches.
#[derive(Debug, Clone)]
pub struct TdfSet {
    pub theta_tdf: DMatrix<f64>,
    pub v_tdf: DMatrix<f64>,
    pub ptdf: DMatrix<f64>,
    pub branch_offset: DVector<f64>,
    pub slack_index: usize,
    pub theta0: f64,
    pub v0: f64,
    /// 1-norm condition estimate of the reduced system.
    pub condition: f64,
}

impl TdfSet {
    pub fn n_buses(&self) -> usize {
        self.theta_tdf.nrows() + 1
    }

    /// Number of reduced (non-slack) buses.
    pub fn n_reduced(&self) -> usize {
        self.theta_tdf.nrows()
    }

    pub fn n_branches(&self) -> usize {
        self.ptdf.nrows() / 2
    }

    /// Stacked `[ΘTDF; VTDF]`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let m = self.n_reduced();
        let mut out = DMatrix::zeros(2 * m, 2 * m);
        out.rows_mut(0, m).copy_from(&self.theta_tdf);
        out.rows_mut(m, m).copy_from(&self.v_tdf);
        out
    }

    fn injection(&self, p: &[f64], q: &[f64]) -> Result<DVector<f64>, ModelError> {
        let m = self.n_reduced();
        if p.len() != m || q.len() != m {
            return Err(ModelError::Dimension(format!(
                "expected {m} non-slack injections, got p={} q={}",
                p.len(),
                q.len()
            )));
        }
        Ok(DVector::from_iterator(
            2 * m,
            p.iter().chain(q.iter()).copied(),
        ))
    }

    /// Voltage angles and magnitudes at every bus (slack included).
    pub fn eval_voltages(&self, p: &[f64], q: &[f64]) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
        let x = self.injection(p, q)?;
        let theta_r = &self.theta_tdf * &x;
        let v_r = &self.v_tdf * &x;
        let mut theta = Vec::with_capacity(self.n_buses());
        let mut v = Vec::with_capacity(self.n_buses());
        let mut k = 0;
        for i in 0..self.n_buses() {
            if i == self.slack_index {
                theta.push(self.theta0);
                v.push(self.v0);
            } else {
                theta.push(theta_r[k] + self.theta0);
                v.push(v_r[k] + self.v0);
                k += 1;
            }
        }
        Ok((theta, v))
    }

    /// From-end active and reactive branch flows.
    pub fn eval_branch_flows(&self, p: &[f64], q: &[f64]) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
        let x = self.injection(p, q)?;
        let flows = &self.ptdf * x + &self.branch_offset;
        let nl = self.n_branches();
        Ok((
            flows.rows(0, nl).iter().copied().collect(),
            flows.rows(nl, nl).iter().copied().collect(),
        ))
    }
}

/// Real block matrix of the lossless linear power flow over all buses.
pub fn build_linear_system(adm: &AdmittanceSet) -> DMatrix<f64> {
    block_matrix(&adm.y_b_adj, &adm.y_b)
}

/// `[[-Im A', Re A], [-Re A', -Im A]]` for nodal or branch matrices.
fn block_matrix(
    adjusted: &DMatrix<num_complex::Complex64>,
    standard: &DMatrix<num_complex::Complex64>,
) -> DMatrix<f64> {
    let (r, c) = standard.shape();
    let mut out = DMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let a = adjusted[(i, j)];
            let s = standard[(i, j)];
            out[(i, j)] = -a.im;
            out[(i, c + j)] = s.re;
            out[(r + i, j)] = -a.re;
            out[(r + i, c + j)] = -s.im;
        }
    }
    out
}

fn drop_slack_columns(m: &DMatrix<f64>, n: usize, slack: usize) -> DMatrix<f64> {
    m.clone().remove_columns_at(&[slack, n + slack])
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverts the slack-reduced system and splits it into ΘTDF and VTDF.
/// The returned set has an empty PTDF; see [`compute_ptdf`].
pub fn compute_tdfs(
    system: &DMatrix<f64>,
    slack_index: usize,
    theta0: f64,
    v0: f64,
) -> Result<TdfSet, ModelError> {
    let n = system.nrows() / 2;
    if system.nrows() != 2 * n || system.ncols() != 2 * n || slack_index >= n {
        return Err(ModelError::Dimension(format!(
            "system is {}x{}, slack index {slack_index}",
            system.nrows(),
            system.ncols()
        )));
    }
    let reduced = drop_slack_columns(system, n, slack_index)
        .remove_rows_at(&[slack_index, n + slack_index]);
    let m = n - 1;
    let inverse = reduced
        .clone()
        .lu()
        .try_inverse()
        .ok_or(ModelError::Singular)?;
    if inverse.iter().any(|x| !x.is_finite()) {
        return Err(ModelError::Singular);
    }
    let condition = one_norm(&reduced) * one_norm(&inverse);
    if !(condition < 1e16) {
        return Err(ModelError::Singular);
    }
    if condition > CONDITION_WARNING {
        log::warn!("reduced linear power-flow matrix is ill-conditioned (cond₁ ≈ {condition:.3e})");
    }

    Ok(TdfSet {
        theta_tdf: inverse.rows(0, m).into_owned(),
        v_tdf: inverse.rows(m, m).into_owned(),
        ptdf: DMatrix::zeros(0, 2 * m),
        branch_offset: DVector::zeros(0),
        slack_index,
        theta0,
        v0,
        condition,
    })
}

/// Extended PTDF and the constant branch flow at zero reduced injections.
pub fn compute_ptdf(
    tdf: &TdfSet,
    adm: &AdmittanceSet,
    options: LinearOptions,
) -> Result<(DMatrix<f64>, DVector<f64>), ModelError> {
    let n = adm.n_buses();
    if n != tdf.n_buses() {
        return Err(ModelError::Dimension(format!(
            "admittance set has {n} buses, TDFs {}",
            tdf.n_buses()
        )));
    }
    let full = block_matrix(&adm.y_f_adj, &adm.y_f);
    let reduced = drop_slack_columns(&full, n, tdf.slack_index);
    let ptdf = reduced * tdf.stacked();

    let mut offset = DVector::zeros(full.nrows());
    if options.branch_offset {
        let base = DVector::from_fn(2 * n, |i, _| if i < n { tdf.theta0 } else { tdf.v0 });
        offset = full * base;
    }
    Ok((ptdf, offset))
}

/// Full linear pipeline for a case: block system, TDFs and PTDF.
pub fn build_tdfs(
    case: &NetworkCase,
    adm: &AdmittanceSet,
    options: LinearOptions,
) -> Result<TdfSet, ModelError> {
    let slack = case
        .slack_index()
        .ok_or_else(|| ModelError::Dimension("case has no slack bus".into()))?;
    let system = build_linear_system(adm);
    let mut tdf = compute_tdfs(&system, slack, 0.0, case.v0())?;
    let (ptdf, offset) = compute_ptdf(&tdf, adm, options)?;
    tdf.ptdf = ptdf;
    tdf.branch_offset = offset;
    Ok(tdf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdfKind {
    Theta,
    Voltage,
    Branch,
}

/// CSV dump of one factor matrix: one row per bus or branch channel, one
/// column per injection channel.
pub fn tdf_csv(tdf: &TdfSet, case: &NetworkCase, adm: &AdmittanceSet, kind: TdfKind) -> String {
    let buses = case.non_slack_indices();
    let mut out = String::from("row");
    for prefix in ["p", "q"] {
        for &b in &buses {
            let _ = write!(out, ",{prefix}_{}", case.buses[b].id);
        }
    }
    out.push('\n');

    let (matrix, labels): (&DMatrix<f64>, Vec<String>) = match kind {
        TdfKind::Theta => (
            &tdf.theta_tdf,
            buses.iter().map(|&b| format!("theta_{}", case.buses[b].id)).collect(),
        ),
        TdfKind::Voltage => (
            &tdf.v_tdf,
            buses.iter().map(|&b| format!("v_{}", case.buses[b].id)).collect(),
        ),
        TdfKind::Branch => (
            &tdf.ptdf,
            ["pf", "qf"]
                .iter()
                .flat_map(|p| adm.branch_index.iter().map(move |l| format!("{p}_{l}")))
                .collect(),
        ),
    };
    for (r, label) in labels.iter().enumerate() {
        out.push_str(label);
        for x in matrix.row(r).iter() {
            let _ = write!(out, ",{x:e}");
        }
        out.push('\n');
    }
    out
}
