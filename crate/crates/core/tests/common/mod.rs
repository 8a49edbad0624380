#![allow(dead_code)]

use proptest::collection::vec;
use proptest::prelude::*;

use pqcap::netmodel::{Branch, Bus, BusKind, Generator, NetworkCase};

/// Which branch and bus features random cases may use.
#[derive(Debug, Clone, Copy)]
pub struct Features {
    pub taps: bool,
    pub shifts: bool,
    pub charging: bool,
    pub shunts: bool,
    pub mesh: bool,
}

impl Features {
    pub const PLAIN: Features = Features {
        taps: false,
        shifts: false,
        charging: false,
        shunts: false,
        mesh: true,
    };
    pub const ALL: Features = Features {
        taps: true,
        shifts: true,
        charging: true,
        shunts: true,
        mesh: true,
    };
}

#[derive(Debug, Clone)]
struct BusDraw {
    parent: f64,
    r: f64,
    x: f64,
    tap: f64,
    shift: f64,
    b_c: f64,
    g_sh: f64,
    b_sh: f64,
    p_d: f64,
    q_d: f64,
    gen: Option<(f64, f64)>,
}

fn bus_draw() -> impl Strategy<Value = BusDraw> {
    (
        (0.0..1.0f64, 0.001..0.05f64, 0.005..0.1f64, 0.95..1.05f64, -5.0..5.0f64),
        (0.0..0.02f64, 0.0..0.01f64, -0.02..0.02f64, 0.0..0.1f64, -0.03..0.03f64),
        proptest::option::of((0.05..0.5f64, 0.02..0.3f64)),
    )
        .prop_map(|((parent, r, x, tap, shift), (b_c, g_sh, b_sh, p_d, q_d), gen)| BusDraw {
            parent,
            r,
            x,
            tap,
            shift,
            b_c,
            g_sh,
            b_sh,
            p_d,
            q_d,
            gen,
        })
}

/// Random connected case with `2..=max_buses` buses, one slack at a random
/// position and at least one generator away from the slack.
pub fn arb_case(max_buses: usize, features: Features) -> impl Strategy<Value = NetworkCase> {
    (2..=max_buses)
        .prop_flat_map(|n| (Just(n), 0..n, vec(bus_draw(), n), proptest::option::of((0..n, 0..n))))
        .prop_map(move |(n, slack, draws, extra)| build(n, slack, &draws, extra, features))
}

fn build(n: usize, slack: usize, draws: &[BusDraw], extra: Option<(usize, usize)>, f: Features) -> NetworkCase {
    let buses = (0..n)
        .map(|i| Bus {
            id: 10 + 3 * i,
            kind: if i == slack { BusKind::Slack } else { BusKind::Load },
            v_min: 0.9,
            v_max: 1.1,
            shunt_g: if f.shunts { draws[i].g_sh } else { 0.0 },
            shunt_b: if f.shunts { draws[i].b_sh } else { 0.0 },
            v_set: 1.0,
        })
        .collect();
    let line = |from: usize, to: usize, d: &BusDraw| {
        let mut br = Branch::line(from, to, d.r, d.x);
        if f.taps {
            br.tap = d.tap;
        }
        if f.shifts {
            br.shift = d.shift.to_radians();
        }
        if f.charging {
            br.b_c = d.b_c;
        }
        br.s_rating = 0.5 + d.x * 10.0;
        br
    };
    let mut branches: Vec<Branch> = (1..n)
        .map(|i| {
            let parent = ((draws[i].parent * i as f64) as usize).min(i - 1);
            line(parent, i, &draws[i])
        })
        .collect();
    if let (true, Some((a, b))) = (f.mesh, extra) {
        if a != b {
            branches.push(line(a, b, &draws[0]));
        }
    }
    let mut generators: Vec<Generator> = draws
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != slack)
        .filter_map(|(i, d)| {
            d.gen.map(|(p, q)| Generator {
                bus: i,
                p_min: 0.0,
                p_max: p,
                q_min: -q,
                q_max: q,
            })
        })
        .collect();
    if generators.is_empty() {
        generators.push(Generator {
            bus: if slack == n - 1 { 0 } else { n - 1 },
            p_min: 0.0,
            p_max: 0.2,
            q_min: -0.1,
            q_max: 0.1,
        });
    }
    let mut p_d: Vec<f64> = draws.iter().map(|d| d.p_d).collect();
    let mut q_d: Vec<f64> = draws.iter().map(|d| d.q_d).collect();
    p_d[slack] = 0.0;
    q_d[slack] = 0.0;
    NetworkCase {
        name: format!("random-{n}"),
        base_mva: 10.0,
        buses,
        branches,
        generators,
        p_d,
        q_d,
    }
}
