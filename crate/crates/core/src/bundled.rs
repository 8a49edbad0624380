//! Desk-scale test grids shipped with the crate.

use crate::netmodel::{parse_case, Branch, Bus, BusKind, CaseFormat, Generator, NetworkCase};

pub const TWO_BUS_JSON: &str = include_str!("../cases/two_bus.json");
pub const LV_FEEDER_JSON: &str = include_str!("../cases/lv_feeder.json");
pub const MV_FEEDER_JSON: &str = include_str!("../cases/mv_feeder.json");

fn load(text: &str) -> NetworkCase {
    parse_case(text, CaseFormat::NativeJson).expect("bundled case is valid")
}

/// Slack plus one load bus behind an `0.02 + j0.1` line.
pub fn two_bus() -> NetworkCase {
    load(TWO_BUS_JSON)
}

/// Residential low-voltage cable feeder, 18 buses, R/X ≈ 2.
pub fn lv_feeder() -> NetworkCase {
    load(LV_FEEDER_JSON)
}

/// Medium-voltage feeder behind an HV/MV transformer.
pub fn mv_feeder() -> NetworkCase {
    load(MV_FEEDER_JSON)
}

/// All bundled case files, by name.
pub fn all() -> Vec<(&'static str, NetworkCase)> {
    vec![
        ("two_bus", two_bus()),
        ("lv_feeder", lv_feeder()),
        ("mv_feeder", mv_feeder()),
    ]
}

/// Deterministic radial network with `n_buses` buses.
///
/// Bus 0 is the slack. Every fourth bus starts a lateral off the bus
/// halfway up the trunk, the rest extend the previous bus. Every fifth bus
/// hosts a generator and every bus carries a small load.
pub fn synthetic_radial(n_buses: usize) -> NetworkCase {
    assert!(n_buses >= 2, "need at least two buses");
    let buses = (0..n_buses)
        .map(|i| Bus {
            id: i + 1,
            kind: if i == 0 { BusKind::Slack } else { BusKind::Load },
            v_min: 0.9,
            v_max: 1.1,
            shunt_g: 0.0,
            shunt_b: 0.0,
            v_set: 1.0,
        })
        .collect();
    let branches = (1..n_buses)
        .map(|i| {
            let parent = if i % 4 == 0 { i / 2 } else { i - 1 };
            let mut br = Branch::line(parent, i, 0.004, 0.002);
            if i == 1 {
                br.s_rating = 0.6;
            }
            br
        })
        .collect();
    let generators = (1..n_buses)
        .filter(|i| i % 5 == 0)
        .map(|bus| Generator {
            bus,
            p_min: 0.0,
            p_max: 0.02,
            q_min: -0.01,
            q_max: 0.01,
        })
        .collect();
    let p_d: Vec<f64> = (0..n_buses).map(|i| if i == 0 { 0.0 } else { 0.002 }).collect();
    let q_d = p_d.iter().map(|p| 0.3 * p).collect();
    NetworkCase {
        name: format!("synthetic-radial-{n_buses}"),
        base_mva: 1.0,
        buses,
        branches,
        generators,
        p_d,
        q_d,
    }
}
