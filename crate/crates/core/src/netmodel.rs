//! Grid data model and case-file ingestion.
//!
//! All quantities inside a [`NetworkCase`] are per-unit on `base_mva`.
//! Two input formats are understood:
//!
//! * the native JSON schema ([`CaseFormat::NativeJson`]), where powers are
//!   given in MW / MVAr / MVA, impedances in per-unit and shift angles in
//!   degrees (MATPOWER conventions);
//! * a subset of the MATPOWER `.m` case format ([`CaseFormat::MatpowerSubset`])
//!   covering `mpc.baseMVA`, `mpc.bus`, `mpc.gen` and `mpc.branch`.
//!
//! Bus, branch and generator cross references inside a parsed case are
//! positions into `NetworkCase::buses`, not the external bus ids.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::CaseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Load,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    /// External bus id as written in the case file.
    pub id: usize,
    pub kind: BusKind,
    pub v_min: f64,
    pub v_max: f64,
    pub shunt_g: f64,
    pub shunt_b: f64,
    /// Voltage magnitude setpoint; only meaningful at the slack bus.
    pub v_set: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// Position of the from-bus in `NetworkCase::buses`.
    pub from: usize,
    /// Position of the to-bus in `NetworkCase::buses`.
    pub to: usize,
    pub r_s: f64,
    pub x_s: f64,
    /// Total line charging susceptance.
    pub b_c: f64,
    pub tap: f64,
    /// Phase shift in radians.
    pub shift: f64,
    /// Apparent power limit; 0 means unlimited.
    pub s_rating: f64,
    pub in_service: bool,
}

impl Branch {
    /// A plain untapped, unshifted, uncharged, unrated line.
    pub fn line(from: usize, to: usize, r_s: f64, x_s: f64) -> Self {
        Self {
            from,
            to,
            r_s,
            x_s,
            b_c: 0.0,
            tap: 1.0,
            shift: 0.0,
            s_rating: 0.0,
            in_service: true,
        }
    }

    pub fn is_rated(&self) -> bool {
        self.s_rating > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    /// Position of the connection bus in `NetworkCase::buses`.
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    /// Nodal active demand, one entry per bus.
    pub p_d: Vec<f64>,
    /// Nodal reactive demand, one entry per bus.
    pub q_d: Vec<f64>,
}

impl NetworkCase {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    /// Index of the (first) slack bus.
    pub fn slack_index(&self) -> Option<usize> {
        self.buses.iter().position(|b| b.kind == BusKind::Slack)
    }

    /// Bus positions other than the slack, in ascending order.
    pub fn non_slack_indices(&self) -> Vec<usize> {
        let slack = self.slack_index();
        (0..self.buses.len()).filter(|&i| Some(i) != slack).collect()
    }

    /// Slack voltage magnitude `v0`.
    pub fn v0(&self) -> f64 {
        self.slack_index().map_or(1.0, |s| self.buses[s].v_set)
    }

    /// In-service branches together with their position in `branches`.
    pub fn in_service_branches(&self) -> impl Iterator<Item = (usize, &Branch)> {
        self.branches.iter().enumerate().filter(|(_, b)| b.in_service)
    }

    pub fn n_in_service(&self) -> usize {
        self.branches.iter().filter(|b| b.in_service).count()
    }

    /// Buses not reachable from the slack through in-service branches.
    pub fn unreachable_buses(&self) -> Vec<usize> {
        let n = self.buses.len();
        let Some(root) = self.slack_index() else {
            return Vec::new();
        };
        let mut adj = vec![Vec::new(); n];
        for (_, br) in self.in_service_branches() {
            if br.from < n && br.to < n {
                adj[br.from].push(br.to);
                adj[br.to].push(br.from);
            }
        }
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        (0..n).filter(|&i| !seen[i]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseFormat {
    NativeJson,
    MatpowerSubset,
}

impl std::str::FromStr for CaseFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" | "native-json" => Ok(Self::NativeJson),
            "matpower" | "m" | "matpower-subset" => Ok(Self::MatpowerSubset),
            other => Err(format!("unknown case format `{other}`")),
        }
    }
}

/// One violated invariant found by [`validate_case`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub subject: String,
    pub message: String,
}

impl Diagnostic {
    fn new(subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            subject: subject.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

/// Lists every violated invariant of `case`. Never fails and never mutates.
pub fn validate_case(case: &NetworkCase) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let n = case.buses.len();
    if !(case.base_mva.is_finite() && case.base_mva > 0.0) {
        out.push(Diagnostic::new("case", "base_mva must be positive"));
    }

    let slacks: Vec<usize> = case
        .buses
        .iter()
        .filter(|b| b.kind == BusKind::Slack)
        .map(|b| b.id)
        .collect();
    match slacks.len() {
        0 => out.push(Diagnostic::new("case", "missing slack bus")),
        1 => {}
        _ => out.push(Diagnostic::new(
            "case",
            format!("multiple slack buses {slacks:?}"),
        )),
    }

    for bus in &case.buses {
        let subject = format!("bus {}", bus.id);
        if !(bus.v_min > 0.0) {
            out.push(Diagnostic::new(&subject, "v_min must be positive"));
        }
        if bus.v_min == bus.v_max {
            out.push(Diagnostic::new(&subject, "degenerate voltage band"));
        } else if bus.v_min > bus.v_max {
            out.push(Diagnostic::new(&subject, "v_min exceeds v_max"));
        }
        if bus.kind == BusKind::Slack && !(bus.v_set > 0.0) {
            out.push(Diagnostic::new(&subject, "slack v_set must be positive"));
        }
    }

    for (i, br) in case.branches.iter().enumerate() {
        let subject = format!("branch {i}");
        if br.from >= n || br.to >= n {
            out.push(Diagnostic::new(&subject, "endpoint references a missing bus"));
        } else if br.from == br.to {
            out.push(Diagnostic::new(&subject, "from and to bus coincide"));
        }
        if !(br.r_s * br.r_s + br.x_s * br.x_s > 0.0) {
            out.push(Diagnostic::new(&subject, "zero series impedance"));
        }
        if !(br.tap > 0.0) {
            out.push(Diagnostic::new(&subject, "tap ratio must be positive"));
        }
        if !(br.s_rating >= 0.0) {
            out.push(Diagnostic::new(&subject, "negative apparent power rating"));
        }
    }

    for (i, g) in case.generators.iter().enumerate() {
        let subject = format!("generator {i}");
        if g.bus >= n {
            out.push(Diagnostic::new(&subject, "connected to a missing bus"));
        }
        if g.p_min > g.p_max {
            out.push(Diagnostic::new(&subject, "p_min exceeds p_max"));
        }
        if g.q_min > g.q_max {
            out.push(Diagnostic::new(&subject, "q_min exceeds q_max"));
        }
    }

    if case.p_d.len() != n || case.q_d.len() != n {
        out.push(Diagnostic::new(
            "case",
            format!(
                "demand vectors have lengths {}/{} but there are {n} buses",
                case.p_d.len(),
                case.q_d.len()
            ),
        ));
    }

    if slacks.len() == 1 && out.iter().all(|d| !d.message.contains("missing bus")) {
        let lost = case.unreachable_buses();
        if !lost.is_empty() {
            let ids: Vec<usize> = lost.iter().map(|&i| case.buses[i].id).collect();
            out.push(Diagnostic::new(
                "case",
                format!("disconnected buses {ids:?}"),
            ));
        }
    }
    out
}

/// Parses a case file and converts it to per-unit.
pub fn parse_case(text: &str, format: CaseFormat) -> Result<NetworkCase, CaseError> {
    let raw = match format {
        CaseFormat::NativeJson => serde_json::from_str::<RawCase>(text).map_err(|e| {
            CaseError::Syntax {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            }
        })?,
        CaseFormat::MatpowerSubset => parse_matpower(text)?,
    };
    raw.into_case()
}

/// Serializes a case to the native JSON schema (physical units).
pub fn to_native_json(case: &NetworkCase) -> String {
    let raw = RawCase::from_case(case);
    serde_json::to_string_pretty(&raw).expect("case serialization cannot fail")
}

/// A value near `guess` that `forward` maps back onto `target` exactly,
/// so that writing and re-reading a case is lossless. Falls back to
/// `guess` when no float within a few ulps qualifies.
fn exact_preimage(target: f64, guess: f64, forward: impl Fn(f64) -> f64) -> f64 {
    if !guess.is_finite() || forward(guess) == target {
        return guess;
    }
    let (mut lo, mut hi) = (guess, guess);
    for _ in 0..8 {
        lo = lo.next_down();
        hi = hi.next_up();
        if forward(lo) == target {
            return lo;
        }
        if forward(hi) == target {
            return hi;
        }
    }
    guess
}

fn default_one() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

fn default_v_min() -> f64 {
    0.9
}

fn default_v_max() -> f64 {
    1.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBus {
    id: usize,
    kind: BusKind,
    #[serde(default = "default_v_min")]
    v_min: f64,
    #[serde(default = "default_v_max")]
    v_max: f64,
    #[serde(default = "default_one")]
    v_set: f64,
    #[serde(default)]
    pd_mw: f64,
    #[serde(default)]
    qd_mvar: f64,
    #[serde(default)]
    gs_mw: f64,
    #[serde(default)]
    bs_mvar: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBranch {
    from: usize,
    to: usize,
    r: f64,
    x: f64,
    #[serde(default)]
    b: f64,
    #[serde(default = "default_one")]
    tap: f64,
    #[serde(default)]
    shift_deg: f64,
    #[serde(default)]
    rate_mva: f64,
    #[serde(default = "default_true")]
    in_service: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    bus: usize,
    #[serde(default)]
    p_min_mw: f64,
    p_max_mw: f64,
    q_min_mvar: f64,
    q_max_mvar: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    #[serde(default)]
    name: String,
    base_mva: f64,
    buses: Vec<RawBus>,
    branches: Vec<RawBranch>,
    #[serde(default)]
    generators: Vec<RawGenerator>,
}

impl RawCase {
    fn into_case(self) -> Result<NetworkCase, CaseError> {
        let base = self.base_mva;
        if !(base.is_finite() && base > 0.0) {
            return Err(CaseError::Field {
                line: 0,
                field: "base_mva".into(),
                message: "must be positive".into(),
            });
        }

        let mut index = HashMap::with_capacity(self.buses.len());
        for (pos, b) in self.buses.iter().enumerate() {
            if index.insert(b.id, pos).is_some() {
                return Err(CaseError::DuplicateBus(b.id));
            }
        }
        let slacks: Vec<usize> = self
            .buses
            .iter()
            .filter(|b| b.kind == BusKind::Slack)
            .map(|b| b.id)
            .collect();
        match slacks.len() {
            0 => return Err(CaseError::MissingSlack),
            1 => {}
            _ => return Err(CaseError::MultipleSlack(slacks)),
        }

        let lookup = |id: usize, what: String| {
            index
                .get(&id)
                .copied()
                .ok_or(CaseError::UnknownBus { what, id })
        };

        let buses = self
            .buses
            .iter()
            .map(|b| Bus {
                id: b.id,
                kind: b.kind,
                v_min: b.v_min,
                v_max: b.v_max,
                shunt_g: b.gs_mw / base,
                shunt_b: b.bs_mvar / base,
                v_set: b.v_set,
            })
            .collect();
        let p_d = self.buses.iter().map(|b| b.pd_mw / base).collect();
        let q_d = self.buses.iter().map(|b| b.qd_mvar / base).collect();

        let mut branches = Vec::with_capacity(self.branches.len());
        for (i, br) in self.branches.iter().enumerate() {
            branches.push(Branch {
                from: lookup(br.from, format!("branch {i}"))?,
                to: lookup(br.to, format!("branch {i}"))?,
                r_s: br.r,
                x_s: br.x,
                b_c: br.b,
                tap: br.tap,
                shift: br.shift_deg.to_radians(),
                s_rating: br.rate_mva / base,
                in_service: br.in_service,
            });
        }

        let mut generators = Vec::with_capacity(self.generators.len());
        for (i, g) in self.generators.iter().enumerate() {
            generators.push(Generator {
                bus: lookup(g.bus, format!("generator {i}"))?,
                p_min: g.p_min_mw / base,
                p_max: g.p_max_mw / base,
                q_min: g.q_min_mvar / base,
                q_max: g.q_max_mvar / base,
            });
        }

        let case = NetworkCase {
            name: self.name,
            base_mva: base,
            buses,
            branches,
            generators,
            p_d,
            q_d,
        };

        let lost = case.unreachable_buses();
        if !lost.is_empty() {
            return Err(CaseError::Disconnected(
                lost.iter().map(|&i| case.buses[i].id).collect(),
            ));
        }
        let diagnostics = validate_case(&case);
        if !diagnostics.is_empty() {
            return Err(CaseError::Invalid(
                diagnostics.iter().map(ToString::to_string).collect(),
            ));
        }
        Ok(case)
    }

    fn from_case(case: &NetworkCase) -> Self {
        let base = case.base_mva;
        let id = |pos: usize| case.buses[pos].id;
        let physical = |pu: f64| exact_preimage(pu, pu * base, |y| y / base);
        RawCase {
            name: case.name.clone(),
            base_mva: base,
            buses: case
                .buses
                .iter()
                .enumerate()
                .map(|(i, b)| RawBus {
                    id: b.id,
                    kind: b.kind,
                    v_min: b.v_min,
                    v_max: b.v_max,
                    v_set: b.v_set,
                    pd_mw: physical(case.p_d[i]),
                    qd_mvar: physical(case.q_d[i]),
                    gs_mw: physical(b.shunt_g),
                    bs_mvar: physical(b.shunt_b),
                })
                .collect(),
            branches: case
                .branches
                .iter()
                .map(|br| RawBranch {
                    from: id(br.from),
                    to: id(br.to),
                    r: br.r_s,
                    x: br.x_s,
                    b: br.b_c,
                    tap: br.tap,
                    shift_deg: exact_preimage(br.shift, br.shift.to_degrees(), f64::to_radians),
                    rate_mva: physical(br.s_rating),
                    in_service: br.in_service,
                })
                .collect(),
            generators: case
                .generators
                .iter()
                .map(|g| RawGenerator {
                    bus: id(g.bus),
                    p_min_mw: physical(g.p_min),
                    p_max_mw: physical(g.p_max),
                    q_min_mvar: physical(g.q_min),
                    q_max_mvar: physical(g.q_max),
                })
                .collect(),
        }
    }
}

// MATPOWER column positions (0-based).
const BUS_I: usize = 0;
const BUS_TYPE: usize = 1;
const PD: usize = 2;
const QD: usize = 3;
const GS: usize = 4;
const BS: usize = 5;
const VM: usize = 7;
const VMAX: usize = 11;
const VMIN: usize = 12;

const GEN_BUS: usize = 0;
const QMAX: usize = 3;
const QMIN: usize = 4;
const VG: usize = 5;
const GEN_STATUS: usize = 7;
const PMAX: usize = 8;
const PMIN: usize = 9;

const F_BUS: usize = 0;
const T_BUS: usize = 1;
const BR_R: usize = 2;
const BR_X: usize = 3;
const BR_B: usize = 4;
const RATE_A: usize = 5;
const TAP: usize = 8;
const SHIFT: usize = 9;
const BR_STATUS: usize = 10;

struct Row {
    line: usize,
    values: Vec<f64>,
}

/// Appends the matrix rows found on one line; returns true when the line
/// closes the matrix with `]`.
fn push_rows(
    line: &str,
    table: &str,
    line_no: usize,
    rows: &mut Vec<Row>,
) -> Result<bool, CaseError> {
    let (body, closes) = match line.find(']') {
        Some(pos) => (&line[..pos], true),
        None => (line, false),
    };
    for chunk in body.split(';').map(str::trim).filter(|c| !c.is_empty()) {
        let values = chunk
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>().map_err(|_| CaseError::Field {
                    line: line_no,
                    field: format!("mpc.{table}"),
                    message: format!("cannot parse `{t}` as a number"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(Row {
            line: line_no,
            values,
        });
    }
    Ok(closes)
}

fn parse_matpower(text: &str) -> Result<RawCase, CaseError> {
    let mut base_mva = None;
    let mut tables: HashMap<String, Vec<Row>> = HashMap::new();
    let mut current: Option<(String, Vec<Row>)> = None;
    let mut name = String::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('%').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }

        if let Some((table, rows)) = current.as_mut() {
            if push_rows(line, table, line_no, rows)? {
                let (table, rows) = current.take().expect("inside a table");
                tables.insert(table, rows);
            }
            continue;
        }

        if let Some(rest) = line.strip_prefix("function") {
            if let Some((_, fname)) = rest.split_once('=') {
                name = fname.trim().trim_end_matches(';').to_string();
            }
            continue;
        }

        let Some(rest) = line.strip_prefix("mpc.") else {
            continue;
        };
        let Some((key, value)) = rest.split_once('=') else {
            return Err(CaseError::Syntax {
                line: line_no,
                column: 1,
                message: "expected `mpc.<field> = ...`".into(),
            });
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "baseMVA" => {
                let v = value.trim_end_matches(';').trim();
                base_mva = Some(v.parse::<f64>().map_err(|_| CaseError::Field {
                    line: line_no,
                    field: "mpc.baseMVA".into(),
                    message: format!("cannot parse `{v}` as a number"),
                })?);
            }
            "bus" | "gen" | "branch" => {
                let Some(after) = value.strip_prefix('[') else {
                    return Err(CaseError::Syntax {
                        line: line_no,
                        column: raw_line.find('=').map_or(1, |p| p + 2),
                        message: format!("expected `[` to open mpc.{key}"),
                    });
                };
                let mut rows = Vec::new();
                // Data may start on the opening line.
                if push_rows(after, key, line_no, &mut rows)? {
                    tables.insert(key.to_string(), rows);
                } else {
                    current = Some((key.to_string(), rows));
                }
            }
            // Other fields (version, gencost, areas, ...) are outside the subset.
            _ => {}
        }
    }

    if let Some((table, _)) = current {
        return Err(CaseError::Syntax {
            line: text.lines().count(),
            column: 1,
            message: format!("unterminated mpc.{table} matrix"),
        });
    }
    let base_mva = base_mva.ok_or(CaseError::Field {
        line: 0,
        field: "mpc.baseMVA".into(),
        message: "missing".into(),
    })?;

    let need = |rows: &[Row], table: &str, width: usize| -> Result<(), CaseError> {
        for r in rows {
            if r.values.len() < width {
                return Err(CaseError::Field {
                    line: r.line,
                    field: format!("mpc.{table}"),
                    message: format!("expected at least {width} columns, found {}", r.values.len()),
                });
            }
        }
        Ok(())
    };
    let bus_rows = tables.remove("bus").unwrap_or_default();
    let gen_rows = tables.remove("gen").unwrap_or_default();
    let branch_rows = tables.remove("branch").unwrap_or_default();
    need(&bus_rows, "bus", 13)?;
    need(&gen_rows, "gen", 10)?;
    need(&branch_rows, "branch", 11)?;

    let mut buses = Vec::with_capacity(bus_rows.len());
    for r in &bus_rows {
        let v = &r.values;
        let kind = match v[BUS_TYPE] as i64 {
            3 => BusKind::Slack,
            1 | 2 => BusKind::Load,
            other => {
                return Err(CaseError::Field {
                    line: r.line,
                    field: "mpc.bus BUS_TYPE".into(),
                    message: format!("unsupported bus type {other}"),
                })
            }
        };
        buses.push(RawBus {
            id: v[BUS_I] as usize,
            kind,
            v_min: v[VMIN],
            v_max: v[VMAX],
            v_set: v[VM],
            pd_mw: v[PD],
            qd_mvar: v[QD],
            gs_mw: v[GS],
            bs_mvar: v[BS],
        });
    }

    let slack_ids: Vec<usize> = buses
        .iter()
        .filter(|b| b.kind == BusKind::Slack)
        .map(|b| b.id)
        .collect();
    let mut generators = Vec::new();
    for r in &gen_rows {
        let v = &r.values;
        if v[GEN_STATUS] <= 0.0 {
            continue;
        }
        let bus = v[GEN_BUS] as usize;
        if slack_ids.contains(&bus) {
            // A generator at the slack models the upstream grid; its voltage
            // setpoint becomes the slack reference.
            if let Some(b) = buses.iter_mut().find(|b| b.id == bus) {
                b.v_set = v[VG];
            }
            continue;
        }
        generators.push(RawGenerator {
            bus,
            p_min_mw: v[PMIN],
            p_max_mw: v[PMAX],
            q_min_mvar: v[QMIN],
            q_max_mvar: v[QMAX],
        });
    }

    let branches = branch_rows
        .iter()
        .map(|r| {
            let v = &r.values;
            RawBranch {
                from: v[F_BUS] as usize,
                to: v[T_BUS] as usize,
                r: v[BR_R],
                x: v[BR_X],
                b: v[BR_B],
                tap: if v[TAP] == 0.0 { 1.0 } else { v[TAP] },
                shift_deg: v[SHIFT],
                rate_mva: v[RATE_A],
                in_service: v[BR_STATUS] > 0.0,
            }
        })
        .collect();

    Ok(RawCase {
        name,
        base_mva,
        buses,
        branches,
        generators,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TWO_BUS: &str = r#"{
        "base_mva": 1.0,
        "buses": [
            {"id": 1, "kind": "slack", "v_set": 1.0},
            {"id": 2, "kind": "load"}
        ],
        "branches": [{"from": 1, "to": 2, "r": 0.0, "x": 0.1}],
        "generators": [{"bus": 2, "p_max_mw": 1.0, "q_min_mvar": -0.5, "q_max_mvar": 0.5}]
    }"#;

    #[test]
    fn parses_minimal_two_bus() {
        let case = parse_case(TWO_BUS, CaseFormat::NativeJson).unwrap();
        assert_eq!(case.n_buses(), 2);
        assert_eq!(case.n_in_service(), 1);
        assert_eq!(case.slack_index(), Some(0));
        assert_eq!(case.v0(), 1.0);
    }

    #[test]
    fn rejects_two_slacks() {
        let text = TWO_BUS.replace(r#""kind": "load""#, r#""kind": "slack""#);
        let err = parse_case(&text, CaseFormat::NativeJson).unwrap_err();
        assert!(matches!(err, CaseError::MultipleSlack(_)));
        assert!(err.to_string().contains("multiple slack buses"));
    }

    #[test]
    fn rejects_missing_slack_duplicates_and_islands() {
        let no_slack = TWO_BUS.replace(r#""kind": "slack""#, r#""kind": "load""#);
        assert!(matches!(
            parse_case(&no_slack, CaseFormat::NativeJson),
            Err(CaseError::MissingSlack)
        ));

        let dup = TWO_BUS.replace(r#""id": 2"#, r#""id": 1"#);
        assert!(matches!(
            parse_case(&dup, CaseFormat::NativeJson),
            Err(CaseError::DuplicateBus(1))
        ));

        let island = TWO_BUS.replace(
            r#""r": 0.0, "x": 0.1}"#,
            r#""r": 0.0, "x": 0.1, "in_service": false}"#,
        );
        assert!(matches!(
            parse_case(&island, CaseFormat::NativeJson),
            Err(CaseError::Disconnected(ids)) if ids == vec![2]
        ));
    }

    #[test]
    fn syntax_error_reports_location() {
        let broken = TWO_BUS.replace(r#""kind": "load"}"#, r#""kind": "load",}"#);
        match parse_case(&broken, CaseFormat::NativeJson) {
            Err(CaseError::Syntax { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    const MATPOWER: &str = "function mpc = case2m
% two bus test
mpc.version = '2';
mpc.baseMVA = 10;
mpc.bus = [
\t1\t3\t0\t0\t0\t0\t1\t1.02\t0\t20\t1\t1.1\t0.9;
\t2\t1\t2\t1\t0\t0.5\t1\t1\t0\t20\t1\t1.05\t0.95;
];
mpc.gen = [
\t1\t0\t0\t10\t-10\t1.01\t10\t1\t10\t0;
\t2\t0\t0\t3\t-3\t1\t10\t1\t4\t0;
];
mpc.branch = [
\t1\t2\t0.01\t0.1\t0.02\t5\t5\t5\t0\t0\t1\t-360\t360;
];
mpc.gencost = [
\t2\t0\t0\t3\t0\t1\t0;
];
";

    #[test]
    fn matpower_subset_converts_to_per_unit() {
        let case = parse_case(MATPOWER, CaseFormat::MatpowerSubset).unwrap();
        assert_eq!(case.name, "case2m");
        assert_eq!(case.base_mva, 10.0);
        assert_eq!(case.branches[0].s_rating, 0.5);
        assert_eq!(case.branches[0].tap, 1.0);
        assert_eq!(case.p_d[1], 0.2);
        assert_eq!(case.q_d[1], 0.1);
        assert_eq!(case.buses[1].shunt_b, 0.05);
        // Slack generator is the upstream grid; its VG sets v0.
        assert_eq!(case.generators.len(), 1);
        assert_eq!(case.v0(), 1.01);
        assert_eq!(case.generators[0].p_max, 0.4);
        assert_eq!(case.generators[0].q_min, -0.3);
    }

    #[test]
    fn matpower_bad_number_reports_line() {
        let text = MATPOWER.replace("0.01\t0.1", "0.01\tx");
        match parse_case(&text, CaseFormat::MatpowerSubset) {
            Err(CaseError::Field { line, .. }) => assert_eq!(line, 14),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_reports_generator_and_band() {
        let mut case = parse_case(TWO_BUS, CaseFormat::NativeJson).unwrap();
        assert!(validate_case(&case).is_empty());

        case.generators[0].p_min = 2.0;
        let diags = validate_case(&case);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].subject, "generator 0");

        case.generators[0].p_min = 0.0;
        case.buses[1].v_min = 1.0;
        case.buses[1].v_max = 1.0;
        let diags = validate_case(&case);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].message, "degenerate voltage band");
    }

    #[test]
    fn serialization_round_trips() {
        let case = parse_case(MATPOWER, CaseFormat::MatpowerSubset).unwrap();
        let again = parse_case(&to_native_json(&case), CaseFormat::NativeJson).unwrap();
        assert_eq!(case, again);
    }
}
