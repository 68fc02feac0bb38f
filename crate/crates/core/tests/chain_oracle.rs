mod common;

use aoi_arq::chain::{build_chain, hitting_moments, mean_hitting, second_moment_hitting};
use aoi_arq::{ChainKind, LinkParams};
use proptest::prelude::*;

const PATH_LEN: usize = 60;
const PROBS: [f64; 3] = [0.25, 0.5, 0.75];

fn lp(p1: f64, p2: f64) -> LinkParams {
    LinkParams::new(p1, p2).unwrap()
}

#[test]
fn grouped_paths_equal_literal_enumeration() {
    for kind in [ChainKind::NonArq, ChainKind::Arq] {
        for (p1, p2) in [(0.25, 0.75), (0.5, 0.5), (0.9, 0.3)] {
            let chain = build_chain(kind, lp(p1, p2));
            let grouped = common::passage_distribution(&chain, 0, 16);
            let literal = common::enumerate_paths(&chain, 0, 16);
            for (a, b) in grouped.pmf.iter().zip(&literal) {
                assert!((a - b).abs() < 1e-15, "{kind:?} ({p1}, {p2}): {a} vs {b}");
            }
        }
    }
}

#[test]
fn truncated_moments_within_tail_bound() {
    for kind in [ChainKind::NonArq, ChainKind::Arq] {
        for p1 in PROBS {
            for p2 in PROBS {
                let chain = build_chain(kind, lp(p1, p2));
                let h = hitting_moments(&chain).unwrap();
                let t = common::passage_distribution(&chain, 0, PATH_LEN);
                for (power, exact) in [(1, h.mean[0]), (2, h.second_moment[0])] {
                    let partial = t.moment(power);
                    let bound = common::tail_bound(&chain, &t, power);
                    let gap = exact - partial;
                    // Plus summation round-off of the 60-term series.
                    let roundoff = 1e-12 * exact;
                    assert!(
                        gap >= -roundoff && gap <= bound + roundoff,
                        "{kind:?} ({p1}, {p2}) power {power}: exact {exact}, partial {partial}, bound {bound}"
                    );
                }
            }
        }
    }
}

#[test]
fn tail_bound_is_tight_enough_to_matter() {
    // At p = 0.75 the remaining tail after 60 steps is tiny, so the bound must be too.
    let chain = build_chain(ChainKind::Arq, lp(0.75, 0.75));
    let t = common::passage_distribution(&chain, 0, PATH_LEN);
    assert!(common::tail_bound(&chain, &t, 2) < 1e-20);
}

#[test]
fn deterministic_chain_passage() {
    let chain = build_chain(ChainKind::NonArq, lp(1.0, 1.0));
    let t = common::passage_distribution(&chain, 0, 10);
    assert_eq!(t.pmf[1], 1.0);
    assert_eq!(t.moment(1), 2.0);
    assert_eq!(t.moment(2), 4.0);
}

fn grid() -> impl Strategy<Value = f64> {
    (1u32..=100).prop_map(|k| f64::from(k) / 100.0)
}

proptest! {
    #[test]
    fn solver_matches_closed_form_moments(p1 in grid(), p2 in grid()) {
        let params = lp(p1, p2);
        let tol = |x: f64| 1e-10 * x.max(1.0);

        let noarq = build_chain(ChainKind::NonArq, params);
        let m = mean_hitting(&noarq).unwrap();
        let n = second_moment_hitting(&noarq, &m).unwrap();
        let e_z = (1.0 + p1) / (p1 * p2);
        let e_z2 = 2.0 * (1.0 + p1).powi(2) / (p1 * p2).powi(2) - 1.0 / p2 - 3.0 / (p1 * p2);
        prop_assert!((m[0] - e_z).abs() <= tol(e_z));
        prop_assert!((n[0] - e_z2).abs() <= tol(e_z2));

        let arq = build_chain(ChainKind::Arq, params);
        let m = mean_hitting(&arq).unwrap();
        let n = second_moment_hitting(&arq, &m).unwrap();
        let e_z = 1.0 / p1 + 1.0 / p2;
        let e_z2 = 2.0 / (p1 * p1) + 2.0 / (p2 * p2) + 2.0 / (p1 * p2) - e_z;
        prop_assert!((m[0] - e_z).abs() <= tol(e_z));
        prop_assert!((n[0] - e_z2).abs() <= tol(e_z2));
    }

    #[test]
    fn moments_respect_jensen(p1 in grid(), p2 in grid(), arq in any::<bool>()) {
        let kind = if arq { ChainKind::Arq } else { ChainKind::NonArq };
        let chain = build_chain(kind, lp(p1, p2));
        let h = hitting_moments(&chain).unwrap();
        prop_assert_eq!(h.mean[chain.target], 0.0);
        prop_assert_eq!(h.second_moment[chain.target], 0.0);
        for i in 0..chain.len() {
            prop_assert!(h.mean[i].is_finite() && h.mean[i] >= 0.0);
            prop_assert!(h.second_moment[i] >= h.mean[i] * h.mean[i] * (1.0 - 1e-12));
        }
    }
}
