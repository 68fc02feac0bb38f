//! Experiment harness: three-way verification of a single operating point,
//! parameter sweeps, and their CSV/SVG artifacts.

mod plot;
mod table;

pub use plot::{emit_plot, render_svg, PlotAxis};
pub use table::{emit_csv, format_sig6, parse_csv, read_csv, sort_rows, to_csv_string, CSV_HEADER};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    self, aoi_from_moments, check_probability, AoIResult, LinkParams, SchemeMoments,
};
use crate::chain::{build_chain, build_single_chain, hitting_moments};
use crate::error::{Error, Result};
use crate::scheme::Scheme;
use crate::sim::{self, SimConfig, DEFAULT_WARMUP, RNG_ID};

/// Grid used when a sweep names no probabilities: 0.2, 0.3, ..., 1.0.
pub fn default_grid() -> Vec<f64> {
    (2..=10).map(|k| f64::from(k) / 10.0).collect()
}

/// How `p1_values` and `p2_values` combine into operating points.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Every `(p1, p2)` combination.
    #[default]
    Cartesian,
    /// `p1 = p2` for each value of `p1_values`; `p2_values` may be left empty.
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub schemes: Vec<Scheme>,
    pub p1_values: Vec<f64>,
    #[serde(default)]
    pub p2_values: Vec<f64>,
    #[serde(default)]
    pub pairing: Pairing,
    /// Slots per simulation run.
    pub horizon: u64,
    /// Base seed; each point and replication derives its own.
    pub seed: u64,
    #[serde(default = "one")]
    pub replications: u32,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
}

fn one() -> u32 {
    1
}

fn default_warmup() -> usize {
    DEFAULT_WARMUP
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes selected".into()));
        }
        if self.p1_values.is_empty() {
            return Err(Error::Config("p1_values is empty".into()));
        }
        let needs_p2 =
            self.pairing == Pairing::Cartesian && self.schemes.iter().any(|s| s.is_two_hop());
        if needs_p2 && self.p2_values.is_empty() {
            return Err(Error::Config("p2_values is empty".into()));
        }
        for &p in &self.p1_values {
            check_probability("p1", p)?;
        }
        for &p in &self.p2_values {
            check_probability("p2", p)?;
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least one slot".into()));
        }
        Ok(())
    }

    /// Operating points in output order: scheme, then `p1`, then `p2`.
    ///
    /// Single-hop schemes sweep `p1_values` as `q` and record `p2 = 1`.
    pub fn points(&self) -> Result<Vec<(Scheme, LinkParams)>> {
        self.validate()?;
        let mut schemes = self.schemes.clone();
        schemes.sort();
        schemes.dedup();
        let p1 = sorted_unique(&self.p1_values);
        let p2 = sorted_unique(&self.p2_values);

        let mut out = Vec::new();
        for scheme in schemes {
            if !scheme.is_two_hop() {
                for &q in &p1 {
                    out.push((scheme, LinkParams::single(q)?));
                }
                continue;
            }
            match self.pairing {
                Pairing::Cartesian => {
                    for &a in &p1 {
                        for &b in &p2 {
                            out.push((scheme, LinkParams::new(a, b)?));
                        }
                    }
                }
                Pairing::Diagonal => {
                    for &a in &p1 {
                        out.push((scheme, LinkParams::new(a, a)?));
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn run_info(&self) -> RunInfo {
        RunInfo::new(self.seed, self.horizon)
    }
}

fn sorted_unique(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Provenance stamped onto every artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunInfo {
    pub tool_version: String,
    pub rng: String,
    pub base_seed: u64,
    pub horizon: u64,
}

impl RunInfo {
    pub fn new(base_seed: u64, horizon: u64) -> Self {
        Self {
            tool_version: format!("aoi-arq {}", crate::VERSION),
            rng: RNG_ID.to_string(),
            base_seed,
            horizon,
        }
    }
}

/// One operating point evaluated three ways.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub p1: f64,
    pub p2: f64,
    pub analytic_aoi: f64,
    pub solver_aoi: f64,
    pub sim_aoi: f64,
    pub sim_std_error: f64,
    pub cycles: u64,
    /// Why the point could not be evaluated; the numeric fields are NaN then.
    #[serde(skip)]
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(scheme: Scheme, params: LinkParams, error: &Error) -> Self {
        Self {
            scheme,
            p1: params.p1(),
            p2: params.p2(),
            analytic_aoi: f64::NAN,
            solver_aoi: f64::NAN,
            sim_aoi: f64::NAN,
            sim_std_error: f64::NAN,
            cycles: 0,
            error: Some(error.to_string()),
        }
    }

    /// Simulation more than three standard errors away from the closed form.
    pub fn disagrees(&self) -> bool {
        (self.sim_aoi - self.analytic_aoi).abs() > 3.0 * self.sim_std_error
    }

    pub fn params(&self) -> Result<LinkParams> {
        LinkParams::new(self.p1, self.p2)
    }
}

/// Average AoI from the protocol chain's first-passage moments.
///
/// `E[Z]` and `E[Z²]` are the hitting moments from the start state. The age a
/// delivery leaves behind is independent of the next interval, so `E[τZ]`
/// factors into `E[τ] E[Z]`: `E[τ] = 1` (single hop), `E[Z]` (single hop with
/// ARQ), `2` (two hops) or `1 + E[X]` (two hops with ARQ), where `E[X]` is the
/// relay's own hitting time.
pub fn solver_aoi(scheme: Scheme, params: LinkParams) -> Result<AoIResult> {
    let (chain, start) = if scheme.is_two_hop() {
        (build_chain(scheme.chain_kind(), params), 0)
    } else {
        (build_single_chain(params.q())?, 0)
    };
    let h = hitting_moments(&chain)?;
    let e_z = h.mean[start];
    let e_tau = match scheme {
        Scheme::SingleNonArq => 1.0,
        Scheme::SingleArq => e_z,
        Scheme::TwoNonArq => 2.0,
        Scheme::TwoArq => {
            let relay = chain
                .index_of("2")
                .expect("two-hop chain has a relay state");
            1.0 + h.mean[relay]
        }
    };
    let moments = SchemeMoments {
        e_z,
        e_z2: h.second_moment[start],
        e_tau_z: e_tau * e_z,
    };
    Ok(AoIResult {
        average_aoi: aoi_from_moments(&moments),
        moments,
    })
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one replication at one operating point.
///
/// Depends only on the base seed, the scheme and the exact probability values,
/// so a point can be re-run alone with the same result it had in a sweep.
pub fn derive_seed(base: u64, scheme: Scheme, params: LinkParams, replication: u32) -> u64 {
    [
        scheme.id(),
        params.p1().to_bits(),
        params.p2().to_bits(),
        u64::from(replication),
    ]
    .into_iter()
    .fold(splitmix64(base), |acc, word| splitmix64(acc ^ word))
}

/// Warmup actually applied: the request, capped so at least half of the
/// cycles after the first stay measured.
pub fn effective_warmup(cycles: usize, requested: usize) -> usize {
    requested.min(cycles.saturating_sub(1) / 2)
}

/// Evaluates one point: closed form, chain solver, and `replications`
/// independent simulations pooled into one estimate.
pub fn run_point(
    scheme: Scheme,
    params: LinkParams,
    horizon: u64,
    base_seed: u64,
    replications: u32,
    warmup: usize,
) -> Result<SweepRow> {
    let analytic = analytic::aoi(scheme, params)?;
    let solver = solver_aoi(scheme, params)?;

    let mut estimates = Vec::with_capacity(replications as usize);
    for rep in 0..replications.max(1) {
        let seed = derive_seed(base_seed, scheme, params, rep);
        let cycles = sim::simulate(&SimConfig::new(scheme, params, horizon, seed)?)?;
        let stats = sim::stats(&cycles, effective_warmup(cycles.len(), warmup))?;
        estimates.push(stats);
    }
    let r = estimates.len() as f64;
    let sim_aoi = estimates.iter().map(|s| s.average_aoi).sum::<f64>() / r;
    let sim_std_error = estimates
        .iter()
        .map(|s| s.std_error * s.std_error)
        .sum::<f64>()
        .sqrt()
        / r;
    let cycles = estimates.iter().map(|s| s.cycle_count as u64).sum();

    Ok(SweepRow {
        scheme,
        p1: params.p1(),
        p2: params.p2(),
        analytic_aoi: analytic.average_aoi,
        solver_aoi: solver.average_aoi,
        sim_aoi,
        sim_std_error,
        cycles,
        error: None,
    })
}

/// Single-replication check of one point with the default warmup.
pub fn verify(params: LinkParams, scheme: Scheme, horizon: u64, seed: u64) -> Result<SweepRow> {
    run_point(scheme, params, horizon, seed, 1, DEFAULT_WARMUP)
}

/// Evaluates every point of `spec` in parallel. A failing point is recorded
/// in its row and the sweep carries on.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let points = spec.points()?;
    Ok(points
        .into_par_iter()
        .map(|(scheme, params)| {
            run_point(
                scheme,
                params,
                spec.horizon,
                spec.seed,
                spec.replications,
                spec.warmup,
            )
            .unwrap_or_else(|e| SweepRow::failed(scheme, params, &e))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(p1: f64, p2: f64) -> LinkParams {
        LinkParams::new(p1, p2).unwrap()
    }

    #[test]
    fn solver_matches_closed_forms() {
        for scheme in Scheme::ALL {
            for (p1, p2) in [(0.2, 0.9), (0.5, 0.5), (1.0, 1.0), (0.73, 0.11)] {
                let params = if scheme.is_two_hop() {
                    lp(p1, p2)
                } else {
                    LinkParams::single(p1).unwrap()
                };
                let a = analytic::aoi(scheme, params).unwrap().average_aoi;
                let s = solver_aoi(scheme, params).unwrap().average_aoi;
                assert!((a - s).abs() < 1e-10, "{scheme} {p1} {p2}: {a} vs {s}");
            }
        }
    }

    #[test]
    fn verify_deterministic_point_is_exact() {
        let row = verify(lp(1.0, 1.0), Scheme::TwoNonArq, 1_000, 4).unwrap();
        assert_eq!(row.analytic_aoi, 3.0);
        assert!((row.solver_aoi - 3.0).abs() < 1e-12);
        assert_eq!(row.sim_aoi, 3.0);
        assert_eq!(row.sim_std_error, 0.0);
        assert!(!row.disagrees());
    }

    #[test]
    fn verify_tiny_horizon_still_measures() {
        let row = verify(lp(1.0, 1.0), Scheme::TwoNonArq, 6, 4).unwrap();
        assert_eq!(row.sim_aoi, 3.0);
        assert!(verify(lp(1.0, 1.0), Scheme::TwoNonArq, 3, 4).is_err());
    }

    #[test]
    fn seeds_depend_on_point_not_grid() {
        let a = derive_seed(9, Scheme::TwoArq, lp(0.5, 0.2), 0);
        assert_eq!(a, derive_seed(9, Scheme::TwoArq, lp(0.5, 0.2), 0));
        assert_ne!(a, derive_seed(9, Scheme::TwoNonArq, lp(0.5, 0.2), 0));
        assert_ne!(a, derive_seed(9, Scheme::TwoArq, lp(0.2, 0.5), 0));
        assert_ne!(a, derive_seed(9, Scheme::TwoArq, lp(0.5, 0.2), 1));
        assert_ne!(a, derive_seed(10, Scheme::TwoArq, lp(0.5, 0.2), 0));
    }

    #[test]
    fn points_order_and_pairing() {
        let spec = SweepSpec {
            schemes: vec![Scheme::TwoArq, Scheme::SingleNonArq, Scheme::TwoArq],
            p1_values: vec![0.6, 0.2],
            p2_values: vec![1.0, 0.4],
            pairing: Pairing::Cartesian,
            horizon: 10,
            seed: 0,
            replications: 1,
            warmup: 0,
        };
        let pts: Vec<(Scheme, f64, f64)> = spec
            .points()
            .unwrap()
            .into_iter()
            .map(|(s, p)| (s, p.p1(), p.p2()))
            .collect();
        assert_eq!(
            pts,
            vec![
                (Scheme::SingleNonArq, 0.2, 1.0),
                (Scheme::SingleNonArq, 0.6, 1.0),
                (Scheme::TwoArq, 0.2, 0.4),
                (Scheme::TwoArq, 0.2, 1.0),
                (Scheme::TwoArq, 0.6, 0.4),
                (Scheme::TwoArq, 0.6, 1.0),
            ]
        );
        let diag = SweepSpec {
            pairing: Pairing::Diagonal,
            p2_values: vec![],
            schemes: vec![Scheme::TwoNonArq],
            ..spec
        };
        assert_eq!(diag.points().unwrap().len(), 2);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let good = SweepSpec {
            schemes: vec![Scheme::TwoArq],
            p1_values: vec![0.5],
            p2_values: vec![0.5],
            pairing: Pairing::Cartesian,
            horizon: 100,
            seed: 0,
            replications: 1,
            warmup: 0,
        };
        assert!(good.validate().is_ok());
        for bad in [
            SweepSpec {
                schemes: vec![],
                ..good.clone()
            },
            SweepSpec {
                p1_values: vec![],
                ..good.clone()
            },
            SweepSpec {
                p2_values: vec![],
                ..good.clone()
            },
            SweepSpec {
                p1_values: vec![0.0],
                ..good.clone()
            },
            SweepSpec {
                p2_values: vec![1.5],
                ..good.clone()
            },
            SweepSpec {
                replications: 0,
                ..good.clone()
            },
            SweepSpec {
                horizon: 0,
                ..good.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn failing_point_is_recorded_in_row() {
        let spec = SweepSpec {
            schemes: vec![Scheme::TwoNonArq],
            p1_values: vec![0.01],
            p2_values: vec![0.01],
            pairing: Pairing::Cartesian,
            horizon: 2,
            seed: 0,
            replications: 1,
            warmup: 0,
        };
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].error.is_some());
        assert!(rows[0].sim_aoi.is_nan());
    }

    #[test]
    fn replications_pool_errors() {
        let one = run_point(Scheme::TwoArq, lp(0.5, 0.5), 20_000, 3, 1, 10).unwrap();
        let four = run_point(Scheme::TwoArq, lp(0.5, 0.5), 20_000, 3, 4, 10).unwrap();
        assert!(four.cycles > 3 * one.cycles);
        assert!(four.sim_std_error < one.sim_std_error);
    }

    #[test]
    fn spec_reads_from_toml() {
        let spec = SweepSpec::from_toml(
            r#"
            schemes = ["two-noarq", "two-arq"]
            p1_values = [0.2, 0.4]
            pairing = "diagonal"
            horizon = 1000
            seed = 5
            "#,
        )
        .unwrap();
        assert_eq!(spec.pairing, Pairing::Diagonal);
        assert_eq!(spec.replications, 1);
        assert_eq!(spec.warmup, DEFAULT_WARMUP);
        assert!(SweepSpec::from_toml("schemes = []\nbogus = 1").is_err());
    }
}
