//! Nodal and branch admittance matrices, standard and adjusted.
//!
//! The adjusted ("primed") variants keep series admittance, tap ratio and
//! phase shift but drop line charging and bus shunts. They feed the angle
//! coupling blocks of the lossless linear power-flow model.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::ModelError;
use crate::netmodel::{Branch, NetworkCase};

/// The four entries of a π-model branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchAdmittance {
    pub ff: Complex64,
    pub ft: Complex64,
    pub tf: Complex64,
    pub tt: Complex64,
}

fn series_admittance(branch: &Branch) -> Option<Complex64> {
    let z = Complex64::new(branch.r_s, branch.x_s);
    (z.norm_sqr() > 0.0).then(|| z.inv())
}

fn pi_model(branch: &Branch, charging: f64) -> Option<BranchAdmittance> {
    let y = series_admittance(branch)?;
    let half = Complex64::new(0.0, charging / 2.0);
    let tap = branch.tap;
    let shift = branch.shift;
    Some(BranchAdmittance {
        ff: (y + half) / (tap * tap),
        ft: -y / (tap * Complex64::from_polar(1.0, -shift)),
        tf: -y / (tap * Complex64::from_polar(1.0, shift)),
        tt: y + half,
    })
}

/// Standard π-model entries.
pub fn branch_admittances(branch: &Branch) -> Option<BranchAdmittance> {
    pi_model(branch, branch.b_c)
}

/// π-model entries with the charge susceptance omitted.
pub fn adjusted_branch_admittances(branch: &Branch) -> Option<BranchAdmittance> {
    pi_model(branch, 0.0)
}

/// Admittance and incidence matrices of the in-service network.
///
/// Branch rows follow the order of in-service branches in the case;
/// `branch_index[row]` gives the position in `NetworkCase::branches`.
#[derive(Debug, Clone)]
pub struct AdmittanceSet {
    pub y_b: DMatrix<Complex64>,
    pub y_b_adj: DMatrix<Complex64>,
    pub y_f: DMatrix<Complex64>,
    pub y_f_adj: DMatrix<Complex64>,
    pub y_t: DMatrix<Complex64>,
    pub y_t_adj: DMatrix<Complex64>,
    pub c_f: DMatrix<f64>,
    pub c_t: DMatrix<f64>,
    pub branch_index: Vec<usize>,
}

impl AdmittanceSet {
    pub fn n_buses(&self) -> usize {
        self.y_b.nrows()
    }

    pub fn n_branches(&self) -> usize {
        self.y_f.nrows()
    }

    /// Branch-node incidence `C_f - C_t`.
    pub fn c_br(&self) -> DMatrix<f64> {
        &self.c_f - &self.c_t
    }
}

/// Assembles all admittance matrices. Out-of-service branches are skipped.
pub fn build_matrices(case: &NetworkCase) -> Result<AdmittanceSet, ModelError> {
    let n = case.n_buses();
    let branch_index: Vec<usize> = case.in_service_branches().map(|(i, _)| i).collect();
    let nl = branch_index.len();
    let zero = Complex64::new(0.0, 0.0);

    let mut set = AdmittanceSet {
        y_b: DMatrix::from_element(n, n, zero),
        y_b_adj: DMatrix::from_element(n, n, zero),
        y_f: DMatrix::from_element(nl, n, zero),
        y_f_adj: DMatrix::from_element(nl, n, zero),
        y_t: DMatrix::from_element(nl, n, zero),
        y_t_adj: DMatrix::from_element(nl, n, zero),
        c_f: DMatrix::zeros(nl, n),
        c_t: DMatrix::zeros(nl, n),
        branch_index,
    };

    for row in 0..nl {
        let idx = set.branch_index[row];
        let br = &case.branches[idx];
        let std = branch_admittances(br).ok_or(ModelError::ZeroImpedance(idx))?;
        let adj = adjusted_branch_admittances(br).ok_or(ModelError::ZeroImpedance(idx))?;
        let (f, t) = (br.from, br.to);

        set.c_f[(row, f)] = 1.0;
        set.c_t[(row, t)] = 1.0;
        set.y_f[(row, f)] = std.ff;
        set.y_f[(row, t)] = std.ft;
        set.y_t[(row, f)] = std.tf;
        set.y_t[(row, t)] = std.tt;
        set.y_f_adj[(row, f)] = adj.ff;
        set.y_f_adj[(row, t)] = adj.ft;
        set.y_t_adj[(row, f)] = adj.tf;
        set.y_t_adj[(row, t)] = adj.tt;

        for (y, e) in [(&mut set.y_b, std), (&mut set.y_b_adj, adj)] {
            y[(f, f)] += e.ff;
            y[(f, t)] += e.ft;
            y[(t, f)] += e.tf;
            y[(t, t)] += e.tt;
        }
    }

    for (i, bus) in case.buses.iter().enumerate() {
        set.y_b[(i, i)] += Complex64::new(bus.shunt_g, bus.shunt_b);
    }
    Ok(set)
}
