use diqkd_cc::cglmp::{cglmp_value, idmax_closed_form, local_visibility_max_entangled, Settings};
use diqkd_cc::keyrate::{
    critical_visibility, keyrate_curve, q_l_analytic, rub_analytic, rub_analytic_closed_form, rub_lp, Branch,
    KeyRateModel,
};
use diqkd_cc::polytope::{is_local, max_local_weight};
use diqkd_cc::quantum::{cglmp_state, maximally_entangled_state, protocol_table};
use diqkd_cc::scenario::Visibility;

fn vis(v: f64) -> Visibility {
    Visibility::new(v).unwrap()
}

#[test]
fn lp_matches_analytic_local_weight() {
    for d in 2..=6 {
        let p_nl = protocol_table(&maximally_entangled_state(d)).unwrap();
        let vl = local_visibility_max_entangled(d).unwrap();
        for v in [vl, 0.75, 0.85, 0.95, 1.0] {
            let dec = max_local_weight(&p_nl.mix_with_white_noise(vis(v)), &p_nl).unwrap();
            assert!((dec.q_l - q_l_analytic(d, vis(v)).unwrap()).abs() < 1e-6, "d={d} V={v}");
        }
    }
}

#[test]
fn decompositions_reconstruct_observed_table() {
    for d in 2..=5 {
        for p_nl in [
            protocol_table(&maximally_entangled_state(d)).unwrap(),
            protocol_table(&cglmp_state(d).unwrap()).unwrap(),
        ] {
            for v in [0.5, 0.7, 0.8, 0.9, 1.0] {
                let obs = p_nl.mix_with_white_noise(vis(v));
                let dec = max_local_weight(&obs, &p_nl).unwrap();
                let back = dec.reconstruct(*obs.scenario(), &p_nl).unwrap();
                assert!(back.max_abs_diff(&obs) <= 1e-8, "d={d} V={v}");
                assert!((dec.q_l + dec.q_nl - 1.0).abs() <= 1e-8);
                assert!(dec.weights.values().all(|w| *w >= 0.0));
            }
        }
    }
}

#[test]
fn lp_branch_matches_analytic_rate() {
    for d in 2..=6 {
        for v in [0.85, 0.90, 0.95] {
            let lp = rub_lp(d, vis(v), Branch::LpMaxEntangled).unwrap().r_ub;
            let an = rub_analytic(d, vis(v)).unwrap().r_ub;
            assert!((lp - an).abs() < 1e-6, "d={d} V={v}: {lp} vs {an}");
        }
    }
}

#[test]
fn local_visibility_is_the_locality_threshold() {
    for d in 2..=6 {
        let p = protocol_table(&maximally_entangled_state(d)).unwrap();
        let vl = 2.0 / idmax_closed_form(d).unwrap();
        assert!(is_local(&p.mix_with_white_noise(vis(vl))).unwrap(), "d={d}");
        assert!(!is_local(&p.mix_with_white_noise(vis(vl + 1e-3))).unwrap(), "d={d}");
        let mixed = cglmp_value(&p.mix_with_white_noise(vis(vl)), Settings::default()).unwrap();
        assert!((mixed - 2.0).abs() < 1e-10);
    }
}

#[test]
fn cglmp_state_rate_below_max_entangled_for_d3() {
    let max = KeyRateModel::new(3, Branch::AnalyticMaxEntangled).unwrap();
    let cglmp = KeyRateModel::new(3, Branch::LpCglmpState).unwrap();
    for i in 0..=38 {
        let v = 0.81 + 0.005 * i as f64;
        let (a, b) = (max.point(vis(v)).unwrap(), cglmp.point(vis(v)).unwrap());
        assert!(b.r_ub < a.r_ub, "V={v}");
    }
}

#[test]
fn pa_zeros() {
    let z3 = KeyRateModel::new(3, Branch::LpCglmpState)
        .unwrap()
        .pa_zero_visibility()
        .unwrap();
    assert!((z3 - 0.687).abs() < 0.01, "{z3}");
    let v3 = cglmp_value(&protocol_table(&cglmp_state(3).unwrap()).unwrap(), Settings::default()).unwrap();
    assert!((z3 - 2.0 / v3).abs() < 1e-6, "{z3} vs {}", 2.0 / v3);
    let z2 = KeyRateModel::new(2, Branch::LpMaxEntangled)
        .unwrap()
        .pa_zero_visibility()
        .unwrap();
    assert!((z2 - 0.5f64.sqrt()).abs() < 1e-6, "{z2}");
}

#[test]
fn critical_visibilities_bracket_the_root() {
    for (d, branch) in [
        (2, Branch::LpCglmpState),
        (3, Branch::LpCglmpState),
        (4, Branch::AnalyticMaxEntangled),
    ] {
        let c = critical_visibility(d, branch).unwrap();
        let m = KeyRateModel::new(d, branch).unwrap();
        assert!(m.point(vis(c.v_crit - 1e-6)).unwrap().r_ub < 0.0);
        assert!(m.point(vis(c.v_crit + 1e-6)).unwrap().r_ub > 0.0);
    }
}

#[test]
fn analytic_rate_strictly_increasing_above_local_visibility() {
    for d in [2, 3, 5, 8] {
        let vl = local_visibility_max_entangled(d).unwrap();
        let pts = keyrate_curve(d, Branch::AnalyticMaxEntangled, vl + 1e-9, 1.0, 100).unwrap();
        for w in pts.windows(2) {
            assert!(w[1].r_ub > w[0].r_ub, "d={d} at V={}", w[1].v);
        }
        assert_eq!(pts.last().unwrap().r_ub, 1.0);
        for p in &pts {
            let closed = rub_analytic_closed_form(d, vis(p.v)).unwrap();
            assert!((closed - p.r_ub).abs() < 1e-12);
        }
    }
}

#[test]
fn curve_endpoints_and_crossing() {
    let pts = keyrate_curve(3, Branch::AnalyticMaxEntangled, 0.80, 1.0, 21).unwrap();
    assert_eq!(pts.len(), 21);
    assert_eq!(pts[0].v, 0.80);
    assert_eq!(pts[20].v, 1.0);
    let r = |v: f64| pts.iter().find(|p| (p.v - v).abs() < 1e-9).unwrap().r_ub;
    assert!(r(0.82) < 0.0 && r(0.83) > 0.0);
}

#[test]
fn lp_curve_is_monotone() {
    let pts = keyrate_curve(3, Branch::LpCglmpState, 0.6, 1.0, 41).unwrap();
    for w in pts.windows(2) {
        assert!(w[1].q_l <= w[0].q_l + 1e-9);
        assert!(w[1].r_ub >= w[0].r_ub - 1e-9);
    }
}
