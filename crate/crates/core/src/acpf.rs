//! Full-Newton AC power flow in polar coordinates.
//!
//! Used as the validation oracle for the linear model. It only shares the
//! π-model branch entries with the rest of the crate; the nodal matrix is
//! assembled here in sparse row form.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::admittance::{branch_admittances, BranchAdmittance};
use crate::error::ModelError;
use crate::netmodel::NetworkCase;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfOptions {
    /// Convergence threshold on the largest power mismatch (pu).
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PfOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PfSolution {
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    /// Case positions of the in-service branches, in flow order.
    pub branch_index: Vec<usize>,
    pub p_f: Vec<f64>,
    pub q_f: Vec<f64>,
    pub p_t: Vec<f64>,
    pub q_t: Vec<f64>,
    /// Net injection at the slack bus.
    pub slack_p: f64,
    pub slack_q: f64,
    /// Series plus shunt losses.
    pub loss_p: f64,
    pub loss_q: f64,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
}

struct BranchEntry {
    from: usize,
    to: usize,
    y: BranchAdmittance,
}

/// Network prepared for repeated power-flow solves.
pub struct PowerFlowModel {
    n: usize,
    slack: usize,
    /// Row-wise nonzeros of the nodal admittance matrix.
    rows: Vec<Vec<(usize, Complex64)>>,
    shunts: Vec<Complex64>,
    branches: Vec<BranchEntry>,
    branch_index: Vec<usize>,
    /// Position among the non-slack buses.
    reduced: Vec<Option<usize>>,
    non_slack: Vec<usize>,
    options: PfOptions,
}

impl PowerFlowModel {
    pub fn new(case: &NetworkCase, options: PfOptions) -> Result<Self, ModelError> {
        let n = case.n_buses();
        let slack = case
            .slack_index()
            .ok_or_else(|| ModelError::Dimension("case has no slack bus".into()))?;
        let mut dense = vec![std::collections::BTreeMap::<usize, Complex64>::new(); n];
        let mut branches = Vec::new();
        let mut branch_index = Vec::new();
        for (idx, br) in case.in_service_branches() {
            let y = branch_admittances(br).ok_or(ModelError::ZeroImpedance(idx))?;
            let (f, t) = (br.from, br.to);
            *dense[f].entry(f).or_default() += y.ff;
            *dense[f].entry(t).or_default() += y.ft;
            *dense[t].entry(f).or_default() += y.tf;
            *dense[t].entry(t).or_default() += y.tt;
            branches.push(BranchEntry { from: f, to: t, y });
            branch_index.push(idx);
        }
        let shunts: Vec<Complex64> = case
            .buses
            .iter()
            .map(|b| Complex64::new(b.shunt_g, b.shunt_b))
            .collect();
        for (i, &ysh) in shunts.iter().enumerate() {
            *dense[i].entry(i).or_default() += ysh;
        }
        let non_slack = case.non_slack_indices();
        let mut reduced = vec![None; n];
        for (k, &i) in non_slack.iter().enumerate() {
            reduced[i] = Some(k);
        }
        Ok(Self {
            n,
            slack,
            rows: dense.into_iter().map(|m| m.into_iter().collect()).collect(),
            shunts,
            branches,
            branch_index,
            reduced,
            non_slack,
            options,
        })
    }

    pub fn n_buses(&self) -> usize {
        self.n
    }

    fn currents(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(k, y)| y * v[k]).sum())
            .collect()
    }

    /// Solves from a flat start with the slack held at `v0∠0`.
    ///
    /// `p_inj` / `q_inj` are net injections at the non-slack buses.
    pub fn solve(&self, p_inj: &[f64], q_inj: &[f64], v0: f64) -> Result<PfSolution, ModelError> {
        let m = self.non_slack.len();
        if p_inj.len() != m || q_inj.len() != m {
            return Err(ModelError::Dimension(format!(
                "expected {m} non-slack injections, got p={} q={}",
                p_inj.len(),
                q_inj.len()
            )));
        }
        let mut vm = vec![1.0; self.n];
        let mut va = vec![0.0; self.n];
        vm[self.slack] = v0;

        let mut jac = DMatrix::<f64>::zeros(2 * m, 2 * m);
        let mut mismatch = DVector::<f64>::zeros(2 * m);
        let mut iterations = 0;
        let mut converged = false;
        let mut max_mismatch;
        loop {
            let v: Vec<Complex64> = (0..self.n).map(|i| Complex64::from_polar(vm[i], va[i])).collect();
            let cur = self.currents(&v);
            max_mismatch = 0.0f64;
            for (k, &i) in self.non_slack.iter().enumerate() {
                let s = v[i] * cur[i].conj();
                mismatch[k] = s.re - p_inj[k];
                mismatch[m + k] = s.im - q_inj[k];
                max_mismatch = max_mismatch.max(mismatch[k].abs()).max(mismatch[m + k].abs());
            }
            if !max_mismatch.is_finite() {
                break;
            }
            if max_mismatch < self.options.tolerance {
                converged = true;
                break;
            }
            if iterations >= self.options.max_iterations {
                break;
            }

            jac.fill(0.0);
            for (r, &i) in self.non_slack.iter().enumerate() {
                let vi = v[i];
                let ui = vi / vm[i];
                for &(k, y) in &self.rows[i] {
                    let Some(c) = self.reduced[k] else { continue };
                    let (d_theta, d_vm) = if k == i {
                        let j_s = Complex64::i() * vi * cur[i].conj();
                        (
                            j_s - Complex64::i() * vm[i] * vm[i] * y.conj(),
                            ui * cur[i].conj() + vi * (y * ui).conj(),
                        )
                    } else {
                        let yv = y * v[k];
                        (
                            -Complex64::i() * vi * yv.conj(),
                            vi * (yv / vm[k]).conj(),
                        )
                    };
                    jac[(r, c)] = d_theta.re;
                    jac[(m + r, c)] = d_theta.im;
                    jac[(r, m + c)] = d_vm.re;
                    jac[(m + r, m + c)] = d_vm.im;
                }
            }
            let Some(step) = jac.clone().lu().solve(&mismatch) else {
                break;
            };
            for (k, &i) in self.non_slack.iter().enumerate() {
                va[i] -= step[k];
                vm[i] -= step[m + k];
            }
            iterations += 1;
            if vm.iter().chain(va.iter()).any(|x| !x.is_finite()) || vm.iter().any(|x| !(0.05..=5.0).contains(x)) {
                break;
            }
        }

        Ok(self.finish(vm, va, converged, iterations, max_mismatch))
    }

    fn finish(
        &self,
        vm: Vec<f64>,
        va: Vec<f64>,
        converged: bool,
        iterations: usize,
        max_mismatch: f64,
    ) -> PfSolution {
        let v: Vec<Complex64> = (0..self.n).map(|i| Complex64::from_polar(vm[i], va[i])).collect();
        let nl = self.branches.len();
        let (mut p_f, mut q_f, mut p_t, mut q_t) = (
            Vec::with_capacity(nl),
            Vec::with_capacity(nl),
            Vec::with_capacity(nl),
            Vec::with_capacity(nl),
        );
        let mut loss = Complex64::new(0.0, 0.0);
        for br in &self.branches {
            let (vf, vt) = (v[br.from], v[br.to]);
            let sf = vf * (br.y.ff * vf + br.y.ft * vt).conj();
            let st = vt * (br.y.tf * vf + br.y.tt * vt).conj();
            p_f.push(sf.re);
            q_f.push(sf.im);
            p_t.push(st.re);
            q_t.push(st.im);
            loss += sf + st;
        }
        for (i, ysh) in self.shunts.iter().enumerate() {
            loss += vm[i] * vm[i] * ysh.conj();
        }
        let cur = self.currents(&v);
        let slack = v[self.slack] * cur[self.slack].conj();
        PfSolution {
            v: vm,
            theta: va,
            branch_index: self.branch_index.clone(),
            p_f,
            q_f,
            p_t,
            q_t,
            slack_p: slack.re,
            slack_q: slack.im,
            loss_p: loss.re,
            loss_q: loss.im,
            converged,
            iterations,
            max_mismatch,
        }
    }
}

/// One-shot solve; see [`PowerFlowModel::solve`].
pub fn solve_pf(
    case: &NetworkCase,
    p_inj: &[f64],
    q_inj: &[f64],
    v0: f64,
) -> Result<PfSolution, ModelError> {
    PowerFlowModel::new(case, PfOptions::default())?.solve(p_inj, q_inj, v0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    VoltageHigh,
    VoltageLow,
    RatingFrom,
    RatingTo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Bus position or case branch position.
    pub index: usize,
    pub value: f64,
    pub limit: f64,
    /// How far beyond the limit (always positive).
    pub margin: f64,
}

/// Allowed overshoot before a limit counts as violated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitTolerance {
    /// Absolute, pu.
    pub voltage: f64,
    /// Relative to the rating.
    pub rating: f64,
}

impl Default for LimitTolerance {
    fn default() -> Self {
        Self {
            voltage: 1e-9,
            rating: 1e-9,
        }
    }
}

/// Voltage bands at every bus and the true apparent-power circle at both
/// ends of every rated branch. Boundaries count as feasible.
pub fn check_limits(sol: &PfSolution, case: &NetworkCase) -> Vec<Violation> {
    check_limits_with(sol, case, LimitTolerance::default())
}

pub fn check_limits_with(sol: &PfSolution, case: &NetworkCase, tol: LimitTolerance) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, (bus, &v)) in case.buses.iter().zip(&sol.v).enumerate() {
        if v > bus.v_max + tol.voltage {
            out.push(Violation {
                kind: ViolationKind::VoltageHigh,
                index: i,
                value: v,
                limit: bus.v_max,
                margin: v - bus.v_max,
            });
        }
        if v < bus.v_min - tol.voltage {
            out.push(Violation {
                kind: ViolationKind::VoltageLow,
                index: i,
                value: v,
                limit: bus.v_min,
                margin: bus.v_min - v,
            });
        }
    }
    for (row, &idx) in sol.branch_index.iter().enumerate() {
        let s = case.branches[idx].s_rating;
        if s <= 0.0 {
            continue;
        }
        let ends = [
            (ViolationKind::RatingFrom, sol.p_f[row].hypot(sol.q_f[row])),
            (ViolationKind::RatingTo, sol.p_t[row].hypot(sol.q_t[row])),
        ];
        for (kind, flow) in ends {
            if flow > s * (1.0 + tol.rating) {
                out.push(Violation {
                    kind,
                    index: idx,
                    value: flow,
                    limit: s,
                    margin: flow - s,
                });
            }
        }
    }
    out
}
