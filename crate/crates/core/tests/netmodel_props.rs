mod common;

use proptest::prelude::*;

use common::{arb_case, Features};
use pqcap::netmodel::to_native_json;
use pqcap::{parse_case, CaseFormat};

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn parse_is_deterministic_and_round_trips(case in arb_case(8, Features::ALL)) {
        let text = to_native_json(&case);
        let first = parse_case(&text, CaseFormat::NativeJson).unwrap();
        let second = parse_case(&text, CaseFormat::NativeJson).unwrap();
        prop_assert_eq!(&first, &second);

        let again = parse_case(&to_native_json(&first), CaseFormat::NativeJson).unwrap();
        prop_assert_eq!(&again, &first);
    }

    #[test]
    fn per_unit_conversion(
        base in 0.5..200.0f64,
        pd in -50.0..50.0f64,
        qd in -50.0..50.0f64,
        gs in -5.0..5.0f64,
        bs in -5.0..5.0f64,
        pmax in 0.0..80.0f64,
        qmax in 0.0..80.0f64,
        rate in 0.1..300.0f64,
    ) {
        let text = format!(r#"{{
            "name": "pu", "base_mva": {base:e},
            "buses": [
                {{"id": 1, "kind": "slack"}},
                {{"id": 2, "kind": "load", "pd_mw": {pd:e}, "qd_mvar": {qd:e}, "gs_mw": {gs:e}, "bs_mvar": {bs:e}}}
            ],
            "branches": [{{"from": 1, "to": 2, "r": 0.01, "x": 0.05, "rate_mva": {rate:e}}}],
            "generators": [{{"bus": 2, "p_min_mw": 0.0, "p_max_mw": {pmax:e}, "q_min_mvar": {qn:e}, "q_max_mvar": {qmax:e}}}]
        }}"#, qn = -qmax);
        let case = parse_case(&text, CaseFormat::NativeJson).unwrap();
        let g = &case.generators[0];
        let pairs = [
            (case.p_d[1], pd),
            (case.q_d[1], qd),
            (case.buses[1].shunt_g, gs),
            (case.buses[1].shunt_b, bs),
            (case.branches[0].s_rating, rate),
            (g.p_max, pmax),
            (g.q_min, -qmax),
            (g.q_max, qmax),
        ];
        for (pu, physical) in pairs {
            prop_assert!(rel_close(pu * base, physical), "{} * {} != {}", pu, base, physical);
        }
    }
}
