//! Analytic network evaluation of a placement.
//!
//! Every FAP shares one channel with the gateway. A flow with demand `T_i`
//! on a link of rate `C_i` needs airtime `a_i = T_i / C_i`. When the airtimes
//! fit (`sum a_i <= 1`) every demand is delivered and the spare airtime is
//! split equally on top. Otherwise the unit of airtime is shared max-min
//! fairly and the network is saturated.
//!
//! Delay is an M/M/1 estimate per flow with fixed-size packets: arrivals at
//! the demanded rate, service at the rate the granted airtime sustains. A
//! flow whose service rate does not exceed its arrival rate has no finite
//! mean delay and reports `None`. These figures are model estimates, not
//! packet-level measurements.

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, ParseError};
use crate::format::sig9;
use crate::geometry::Point3;
use crate::problem::{feasible_at, PlacementProblem, PlacementSolution};
use crate::radio::{mcs_for_snr, rate_for_snr};
use crate::scenario::Scenario;

pub const PACKET_SIZE_BITS: f64 = 1500.0 * 8.0;

/// Added to achieved SNRs before the MCS lookup so that links placed exactly
/// on a threshold are not demoted by rounding.
pub const SNR_SLACK_DB: f64 = 1e-6;

/// Rounding allowance on the total airtime before a network counts as saturated.
pub const AIRTIME_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowStats {
    pub fap_id: u32,
    #[serde(serialize_with = "sig9::serialize")]
    pub snr_db: f64,
    /// `None` when the link is below every MCS threshold.
    pub mcs_index: Option<u8>,
    pub link_rate_bps: u64,
    #[serde(serialize_with = "sig9::serialize")]
    pub demand_bps: f64,
    #[serde(serialize_with = "sig9::serialize")]
    pub airtime_share: f64,
    #[serde(serialize_with = "sig9::serialize")]
    pub throughput_bps: f64,
    #[serde(serialize_with = "sig9::serialize_opt")]
    pub delay_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub flows: Vec<FlowStats>,
    #[serde(serialize_with = "sig9::serialize")]
    pub aggregate_throughput_bps: f64,
    /// Arrival-weighted mean over flows; `None` if any flow is unstable.
    #[serde(serialize_with = "sig9::serialize_opt")]
    pub mean_delay_s: Option<f64>,
    pub saturated: bool,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self, ParseError> {
        crate::scenario::parse_document(text, origin)
    }
}

pub fn evaluate(s: &Scenario, sol: &PlacementSolution) -> Result<EvaluationReport, EvalError> {
    evaluate_with_load(s, sol, 1.0)
}

/// Like [`evaluate`] with every demand scaled by `load_factor`.
pub fn evaluate_with_load(
    s: &Scenario,
    sol: &PlacementSolution,
    load_factor: f64,
) -> Result<EvaluationReport, EvalError> {
    if !(load_factor > 0.0) || !load_factor.is_finite() {
        return Err(EvalError::InvalidSolution(format!("load factor must be positive, got {load_factor}")));
    }
    if !sol.is_optimal() {
        return Err(EvalError::InvalidSolution(format!("status is {}", sol.status)));
    }
    let prob = PlacementProblem::from_scenario(s);
    let report = feasible_at(sol.fgw_position, sol.p_t_dbm, &prob);
    if !report.feasible {
        return Err(EvalError::InvalidSolution(describe_violation(&report)));
    }
    Ok(evaluate_placement(s, sol.fgw_position, sol.p_t_dbm, load_factor))
}

/// Evaluates a gateway at `position` transmitting at `p_t_dbm` without
/// checking that the placement satisfies the link constraints, for what-if
/// analysis of perturbed solutions.
pub fn evaluate_placement(s: &Scenario, position: Point3, p_t_dbm: f64, load_factor: f64) -> EvaluationReport {
    let k_db = PlacementProblem::from_scenario(s).k_db;
    let table = &s.radio.mcs_table;
    let mut flows: Vec<FlowStats> = s
        .faps
        .iter()
        .map(|f| {
            let d = position.distance(f.position());
            let snr_db = k_db + p_t_dbm - 20.0 * d.log10();
            FlowStats {
                fap_id: f.id,
                snr_db,
                mcs_index: mcs_for_snr(snr_db + SNR_SLACK_DB, table).map(|e| e.index),
                link_rate_bps: rate_for_snr(snr_db + SNR_SLACK_DB, table),
                demand_bps: f.demand_bps as f64 * load_factor,
                airtime_share: 0.0,
                throughput_bps: 0.0,
                delay_s: None,
            }
        })
        .collect();

    let needed: Vec<f64> = flows
        .iter()
        .map(|f| if f.link_rate_bps == 0 { f64::INFINITY } else { f.demand_bps / f.link_rate_bps as f64 })
        .collect();
    // a flow below every MCS threshold cannot carry anything; the rest share the channel
    let live: Vec<f64> = needed.iter().copied().filter(|a| a.is_finite()).collect();
    let live_total: f64 = live.iter().sum();
    let saturated = live.len() < needed.len() || live_total > 1.0 + AIRTIME_TOL;
    let live_shares = if live.is_empty() {
        Vec::new()
    } else if live_total > 1.0 + AIRTIME_TOL {
        max_min_airtime(&live)
    } else {
        spread_leftover(&live)
    };
    let mut next = live_shares.iter();
    let shares: Vec<f64> =
        needed.iter().map(|a| if a.is_finite() { *next.next().expect("one share per live flow") } else { 0.0 }).collect();

    for ((flow, share), need) in flows.iter_mut().zip(&shares).zip(&needed) {
        flow.airtime_share = *share;
        flow.throughput_bps = if share >= need { flow.demand_bps } else { share * flow.link_rate_bps as f64 };
        let service = share * flow.link_rate_bps as f64 / PACKET_SIZE_BITS;
        let arrival = flow.demand_bps / PACKET_SIZE_BITS;
        flow.delay_s = (service > arrival).then(|| 1.0 / (service - arrival));
    }

    // the channel as a whole cannot carry more than c_max
    let carried: f64 = flows.iter().map(|f| f.throughput_bps).sum();
    let c_max = s.radio.c_max_bps as f64;
    if carried > c_max {
        flows.iter_mut().for_each(|f| f.throughput_bps *= c_max / carried);
    }

    let aggregate_throughput_bps = flows.iter().map(|f| f.throughput_bps).sum();
    let mean_delay_s = flows
        .iter()
        .map(|f| f.delay_s.map(|d| (d, f.demand_bps)))
        .collect::<Option<Vec<_>>>()
        .map(|pairs| {
            let weight: f64 = pairs.iter().map(|p| p.1).sum();
            pairs.iter().map(|(d, w)| d * w).sum::<f64>() / weight
        });
    EvaluationReport { flows, aggregate_throughput_bps, mean_delay_s, saturated }
}

/// Empirical complementary CDF as `(x, P(X > x))` steps, opening with
/// `(min, 1.0)` and closing at `(max, 0.0)`. Empty input gives no rows.
pub fn ccdf(values: &[f64]) -> Vec<(f64, f64)> {
    let sorted = sorted_finite(values);
    let Some(first) = sorted.first() else { return Vec::new() };
    let n = sorted.len() as f64;
    let mut rows = vec![(*first, 1.0)];
    for (i, v) in sorted.iter().enumerate() {
        if sorted.get(i + 1) != Some(v) {
            rows.push((*v, (n - (i + 1) as f64) / n));
        }
    }
    rows
}

/// Empirical CDF as `(x, P(X <= x))` at each distinct value, ending at 1.0.
pub fn cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let sorted = sorted_finite(values);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .filter(|(i, v)| sorted.get(i + 1) != Some(v))
        .map(|(i, v)| (*v, (i + 1) as f64 / n))
        .collect()
}

fn sorted_finite(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn describe_violation(r: &crate::problem::FeasibilityReport) -> String {
    if !r.in_venue {
        "gateway outside the venue".into()
    } else if !r.power_in_range {
        "transmission power out of range".into()
    } else if !r.separated {
        "gateway closer than d_min to a FAP".into()
    } else {
        format!("link constraint violated by {:.3e} m", -r.min_margin_m())
    }
}

/// Unsaturated: every flow gets what it needs plus an equal slice of the rest.
fn spread_leftover(needed: &[f64]) -> Vec<f64> {
    let spare = (1.0 - needed.iter().sum::<f64>()).max(0.0) / needed.len() as f64;
    needed.iter().map(|a| a + spare).collect()
}

/// Water-filling: the level `L` with `sum min(a_i, L) = 1`.
fn max_min_airtime(needed: &[f64]) -> Vec<f64> {
    let mut sorted = needed.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut remaining = 1.0;
    let mut level = f64::INFINITY;
    for (k, a) in sorted.iter().enumerate() {
        let fair = remaining / (sorted.len() - k) as f64;
        if *a > fair {
            level = fair;
            break;
        }
        remaining -= a;
    }
    needed.iter().map(|a| a.min(level)).collect()
}
