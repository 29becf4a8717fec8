//! Reproduction checks over the scenario registry, shared by the
//! `verify-paper` command and the acceptance suite.

use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::gate::{
    branch_occupation, gate_diagonal, run_gate, GateSetup, GateTask, PulseMode,
};
use crate::model::{
    apply_doppler, build_branch, Channel, DriveSet, Layout, Modulation, Occupation, OracleSpace,
    PhysicalParams, Role, Scheme, Species,
};
use crate::optimizer::{self, tranquility_ratios, OptimizationTask, Refinement};
use crate::propagator::{self, initial_state, norm, propagate, propagate_pulse, wrap, DEFAULT_TOL};
use crate::relay;
use crate::scenario::{registry_ids, registry_scenario, Scenario, ScenarioConfig};
use crate::units::{khz, mhz};
use crate::waveform::WaveformSpec;

/// One line of a verification table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub group: String,
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub passed: bool,
    pub seconds: f64,
}

impl CheckRow {
    fn new(group: &str, name: impl Into<String>, value: f64, limit: impl Into<String>, passed: bool, seconds: f64) -> Self {
        Self {
            group: group.to_string(),
            name: name.into(),
            value,
            limit: limit.into(),
            passed,
            seconds,
        }
    }

    pub fn failed(group: &str, name: impl Into<String>, why: &str) -> Self {
        Self::new(group, name, f64::NAN, format!("error: {why}"), false, 0.0)
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<10} {:<34} {:>12.4e}  {:<22} {:>7.2}s",
            if self.passed { "PASS" } else { "FAIL" },
            self.group,
            self.name,
            self.value,
            self.limit,
            self.seconds
        )
    }
}

pub const RAW_LIMIT: f64 = 5e-3;
pub const RAW_SECONDS: f64 = 5.0;
pub const REFINED_LIMIT: f64 = 1e-4;
pub const REFINED_SECONDS: f64 = 300.0;
pub const REFINE_BUDGET: usize = 2000;
pub const TRANQUILITY_LIMIT: f64 = 1e-9;

/// Raw reproduction of one registry scenario.
pub fn raw_check(id: &str) -> CheckRow {
    let t = Instant::now();
    match registry_scenario(id).map_err(|e| e.to_string()).and_then(|s| run_gate(&s.setup).map_err(|e| e.to_string())) {
        Ok(r) => {
            let dt = t.elapsed().as_secs_f64();
            CheckRow::new(
                "raw",
                id,
                r.error,
                format!("<= {RAW_LIMIT:e}, < {RAW_SECONDS}s"),
                r.error <= RAW_LIMIT && dt < RAW_SECONDS,
                dt,
            )
        }
        Err(e) => CheckRow::failed("raw", id, &e),
    }
}

/// Refinement within ±5 units; returns the row and the refinement.
pub fn refined_check(id: &str, budget: usize, seed: u64) -> (CheckRow, Option<Refinement>) {
    let t = Instant::now();
    match optimizer::refine_published(id, budget, seed) {
        Ok(r) => {
            let dt = t.elapsed().as_secs_f64();
            let monotone = r.result.history.windows(2).all(|w| w[1] <= w[0]);
            let ok = r.refined_error < REFINED_LIMIT
                && r.refined_error <= r.raw_error
                && monotone
                && dt < REFINED_SECONDS;
            (
                CheckRow::new(
                    "refined",
                    format!("{id} ({} evals)", r.result.evaluations),
                    r.refined_error,
                    format!("< {REFINED_LIMIT:e}, < {REFINED_SECONDS}s"),
                    ok,
                    dt,
                ),
                Some(r),
            )
        }
        Err(e) => (CheckRow::failed("refined", id, &e.to_string()), None),
    }
}

/// Least-squares slope of log(y) against log(x).
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Largest change of the branch phases of the gate diagonal between the
/// shifted and unshifted cases, after each is locally compensated.
pub fn compensated_phase_deviation(reference: &[Complex64], shifted: &[Complex64], task: GateTask) -> f64 {
    let comp = |d: &[Complex64]| crate::gate::compensate_local_phases(task, d).map(|(_, m, _)| m);
    match (comp(reference), comp(shifted)) {
        (Ok(a), Ok(b)) => a
            .iter()
            .zip(&b)
            .map(|(x, y)| wrap(y.arg() - x.arg()).abs())
            .fold(0.0, f64::max),
        _ => f64::NAN,
    }
}

/// Doppler data for one pulse mode over `kv_khz`: (errors, phase deviations).
pub fn doppler_series(setup: &GateSetup, pulse: PulseMode, kv_khz: &[f64]) -> Result<(Vec<f64>, Vec<f64>), String> {
    let base = GateSetup {
        pulse,
        params: apply_doppler(&setup.params, [0.0; 3], 1.0),
        ..setup.clone()
    };
    let reference = gate_diagonal(&base).map_err(|e| e.to_string())?;
    let mut errors = Vec::new();
    let mut devs = Vec::new();
    for &kv in kv_khz {
        let s = GateSetup {
            params: apply_doppler(&setup.params, [khz(kv); 3], 1.0),
            ..base.clone()
        };
        let d = gate_diagonal(&s).map_err(|e| e.to_string())?;
        errors.push(crate::gate::GateReport::from_diagonal(s.task, pulse, &d).map_err(|e| e.to_string())?.error);
        devs.push(compensated_phase_deviation(&reference, &d, s.task));
    }
    Ok((errors, devs))
}

pub const DOPPLER_KV_KHZ: f64 = 25.0;
pub const SLOPE_KV_KHZ: [f64; 5] = [5.0, 10.0, 15.0, 20.0, 25.0];

/// Dual-pulse Doppler insensitivity on a (refined) dual-pulse scenario.
pub fn doppler_checks(scenario: &Scenario) -> Vec<CheckRow> {
    let g = "doppler";
    let t = Instant::now();
    let setup = &scenario.setup;
    let dual = doppler_series(setup, PulseMode::Dual, &SLOPE_KV_KHZ);
    let single = doppler_series(setup, PulseMode::Repeated, &SLOPE_KV_KHZ);
    let (Ok((dual_err, dual_dev)), Ok((single_err, single_dev))) = (dual, single) else {
        return vec![CheckRow::failed(g, "doppler series", "propagation failed")];
    };
    let dt = t.elapsed().as_secs_f64();
    let last = SLOPE_KV_KHZ.len() - 1;
    let ratio = single_err[last] / dual_err[last];
    let kv: Vec<f64> = SLOPE_KV_KHZ.to_vec();
    let dual_slope = loglog_slope(&kv, &dual_dev);
    let single_slope = loglog_slope(&kv, &single_dev);
    vec![
        CheckRow::new(g, "dual error at kv=25 kHz", dual_err[last], "< 1e-3", dual_err[last] < 1e-3, dt),
        CheckRow::new(g, "single/dual error ratio at 25 kHz", ratio, ">= 5", ratio >= 5.0, 0.0),
        CheckRow::new(g, "dual phase-deviation slope", dual_slope, ">= 1.8", dual_slope >= 1.8, 0.0),
        CheckRow::new(
            g,
            "single phase-deviation slope",
            single_slope,
            "in [0.8, 1.2]",
            (0.8..=1.2).contains(&single_slope),
            0.0,
        ),
    ]
}

/// CCZ residual and error on a (refined) CCZ scenario.
pub fn ccz_checks(scenario: &Scenario) -> Vec<CheckRow> {
    let t = Instant::now();
    match run_gate(&scenario.setup) {
        Ok(r) => {
            let dt = t.elapsed().as_secs_f64();
            vec![
                CheckRow::new("ccz", "refined error", r.error, "< 1e-4", r.error < 1e-4, dt),
                CheckRow::new("ccz", "|chi - pi|", r.residual.abs(), "< 1e-3 rad", r.residual.abs() < 1e-3, 0.0),
            ]
        }
        Err(e) => vec![CheckRow::failed("ccz", "refined error", &e.to_string())],
    }
}

/// Overlap between reduced and product-space propagation of one branch.
pub fn oracle_overlap(occ: Occupation, drives: &DriveSet, params: &PhysicalParams) -> Result<f64, String> {
    let reduced = build_branch(occ, drives, params).map_err(|e| e.to_string())?;
    let space = OracleSpace::new(occ, drives, params).map_err(|e| e.to_string())?;
    let full = space.hamiltonian();
    let a = propagate_pulse(&reduced, &initial_state(&reduced), DEFAULT_TOL).map_err(|e| e.to_string())?;
    let b = propagate_pulse(full, &initial_state(full), DEFAULT_TOL).map_err(|e| e.to_string())?;
    let embedded = space.embed(reduced.basis(), &a).map_err(|e| e.to_string())?;
    let overlap: Complex64 = embedded.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
    Ok(overlap.norm())
}

/// Reduced-vs-product-space equivalence for all seven occupations, both
/// schemes and both blockade strengths.
pub fn oracle_checks() -> Vec<CheckRow> {
    let mut rows = Vec::new();
    let t = Instant::now();
    let cases = [("fig2a", 50.0), ("figS4c", 100.0), ("fig3a", 50.0), ("figS7a", 100.0)];
    let mut worst: f64 = 1.0;
    let mut detail = Vec::new();
    for (id, b) in cases {
        let s = match registry_scenario(id) {
            Ok(s) => s,
            Err(e) => {
                rows.push(CheckRow::failed("oracle", id, &e.to_string()));
                continue;
            }
        };
        let params = s.setup.params.clone().with_blockade(mhz(b));
        let mut local: f64 = 1.0;
        for k in 1..8u8 {
            let occ = Occupation::new(k & 4 != 0, k & 2 != 0, k & 1 != 0);
            match oracle_overlap(occ, &s.setup.drives, &params) {
                Ok(o) => local = local.min(o),
                Err(e) => {
                    rows.push(CheckRow::failed("oracle", format!("{id} {occ}"), &e));
                    local = 0.0;
                }
            }
        }
        worst = worst.min(local);
        detail.push(format!("{}:{b}", s.config.scheme));
    }
    let dt = t.elapsed().as_secs_f64();
    rows.push(CheckRow::new(
        "oracle",
        "min overlap, 7 branches x 4 settings",
        worst,
        ">= 1 - 1e-8, < 30s",
        worst >= 1.0 - 1e-8 && dt < 30.0,
        dt,
    ));
    rows
}

pub fn relay_checks(trials: usize, seed: u64) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    for depth in 1..=3 {
        let t = Instant::now();
        let n = if depth == 1 { trials } else { trials.min(20) };
        match relay::bootstrap_chain(depth, n, seed) {
            Ok(r) => {
                let dt = t.elapsed().as_secs_f64();
                rows.push(CheckRow::new(
                    "relay",
                    format!("depth {depth}: max deviation ({} outcomes)", r.outcomes.len()),
                    r.max_deviation,
                    "<= 1e-12",
                    r.max_deviation <= 1e-12,
                    dt,
                ));
                rows.push(CheckRow::new(
                    "relay",
                    format!("depth {depth}: |sum p - 1|"),
                    r.probability_sum_error,
                    "<= 1e-14",
                    r.probability_sum_error <= 1e-14,
                    0.0,
                ));
            }
            Err(e) => rows.push(CheckRow::failed("relay", format!("depth {depth}"), &e.to_string())),
        }
    }
    rows
}

fn single_atom(rabi_mhz: f64, detuning_mhz: f64) -> DriveSet {
    let c = |v: f64| WaveformSpec::constant(v).expect("finite");
    DriveSet::new(
        Scheme::OnePhoton,
        Modulation::AmplitudeOnly,
        vec![
            (Channel::new(Species::Buffer, Role::Rabi), c(rabi_mhz)),
            (Channel::new(Species::Buffer, Role::Detuning), c(detuning_mhz)),
            (Channel::new(Species::Qubit, Role::Rabi), c(0.0)),
            (Channel::new(Species::Qubit, Role::Detuning), c(0.0)),
        ],
    )
    .expect("valid drive set")
}

/// Norm drift, analytic two-level cases, composition and time reversal.
pub fn propagator_checks() -> Vec<CheckRow> {
    let g = "propagator";
    let mut rows = Vec::new();
    let buffer = Occupation::new(false, true, false);
    let params = PhysicalParams::default();

    let t = Instant::now();
    let mut drift: f64 = 0.0;
    let mut failed = None;
    for id in ["fig2a", "fig3a", "fig5"] {
        let Ok(s) = registry_scenario(id) else { continue };
        for label in s.setup.task.labels() {
            let Ok(Some(occ)) = branch_occupation(s.setup.task, s.setup.params.layout, &label) else { continue };
            match crate::gate::branch_hamiltonian(occ, &s.setup.drives, &s.setup.params)
                .map_err(|e| e.to_string())
                .and_then(|h| propagate_pulse(&h, &initial_state(&h), DEFAULT_TOL).map_err(|e| e.to_string()))
            {
                Ok(psi) => drift = drift.max((norm(&psi) - 1.0).abs()),
                Err(e) => failed = Some(e),
            }
        }
    }
    rows.push(match failed {
        Some(e) => CheckRow::failed(g, "norm drift", &e),
        None => CheckRow::new(g, "norm drift per pulse", drift, "<= 1e-9", drift <= 1e-9, t.elapsed().as_secs_f64()),
    });

    // π pulse: Ω = 2π × 2 MHz for 0.25 µs
    let h = build_branch(buffer, &single_atom(2.0, 0.0), &params).expect("branch");
    let psi = propagate_pulse(&h, &initial_state(&h), DEFAULT_TOL).expect("propagation");
    let ground = psi[h.initial_index()].norm_sqr();
    rows.push(CheckRow::new(g, "Rabi pi pulse ground population", ground, "<= 1e-8", ground <= 1e-8, 0.0));

    // Rabi oscillation at intermediate times vs sin²(Ωt/2)
    let omega = mhz(2.0);
    let mut worst: f64 = 0.0;
    for k in 1..=5 {
        let t1 = 0.05 * k as f64;
        let psi = propagate(&h, &initial_state(&h), 0.0, t1, DEFAULT_TOL).expect("propagation");
        let exact = (omega * t1 / 2.0).sin().powi(2);
        worst = worst.max((psi[1 - h.initial_index()].norm_sqr() - exact).abs());
    }
    rows.push(CheckRow::new(g, "Rabi population vs sin^2", worst, "<= 1e-8", worst <= 1e-8, 0.0));

    // free phase: Δ = 2π × 4 MHz, start in |r⟩
    let h = build_branch(buffer, &single_atom(0.0, 4.0), &params).expect("branch");
    let mut psi0 = vec![Complex64::new(0.0, 0.0); 2];
    let r = 1 - h.initial_index();
    psi0[r] = Complex64::new(1.0, 0.0);
    let mut worst: f64 = 0.0;
    for k in 1..=5 {
        let t1 = 0.05 * k as f64;
        let psi = propagate(&h, &psi0, 0.0, t1, DEFAULT_TOL).expect("propagation");
        let expected = Complex64::from_polar(1.0, -mhz(4.0) * t1);
        worst = worst.max((psi[r] - expected).norm());
    }
    rows.push(CheckRow::new(g, "free phase vs exp(-i D t)", worst, "<= 1e-8", worst <= 1e-8, 0.0));

    // composition and time reversal on the three-body fig2a branch
    if let Ok(s) = registry_scenario("fig2a") {
        let occ = Occupation::new(true, true, true);
        let h = build_branch(occ, &s.setup.drives, &s.setup.params).expect("branch");
        let psi0 = initial_state(&h);
        let whole = propagate_pulse(&h, &psi0, DEFAULT_TOL).expect("propagation");
        let mid = propagate(&h, &psi0, 0.0, 0.1, DEFAULT_TOL).expect("propagation");
        let split = propagate(&h, &mid, 0.1, h.duration(), DEFAULT_TOL).expect("propagation");
        let comp = whole.iter().zip(&split).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        rows.push(CheckRow::new(g, "composition deviation", comp, "<= 1e-8", comp <= 1e-8, 0.0));

        let back = propagator::propagate_sequence(&[&h.time_reversed()], &whole, DEFAULT_TOL);
        let rev = match back {
            Ok(b) => b.iter().zip(&psi0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max),
            Err(_) => f64::NAN,
        };
        rows.push(CheckRow::new(g, "time-reversal deviation", rev, "<= 1e-8", rev <= 1e-8, 0.0));
    }
    rows
}

/// Endpoint-derivative ratio of every time-varying registry channel and of
/// the given extra (e.g. optimized) scenarios.
pub fn tranquility_checks(extra: &[Scenario]) -> Vec<CheckRow> {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let registry: Vec<Scenario> = registry_ids().into_iter().filter_map(|id| registry_scenario(id).ok()).collect();
    for s in registry.iter().chain(extra) {
        for (_, r) in tranquility_ratios(s) {
            worst = worst.max(r);
            count += 1;
        }
    }
    vec![CheckRow::new(
        "tranquility",
        format!("max endpoint/peak derivative ({count} waveforms)"),
        worst,
        "<= 1e-9",
        worst <= TRANQUILITY_LIMIT,
        0.0,
    )]
}

/// Two-body CZ without buffer atom: two qubit atoms with direct blockade
/// B = 2π × 50 MHz, one-photon, modulated Ω and Δ on the qubit channels.
/// The buffer channels are tied to zero so they are not searched.
pub fn baseline_scenario() -> Scenario {
    let mut channels = std::collections::BTreeMap::new();
    channels.insert("Omega1".to_string(), "0*Omega2".to_string());
    channels.insert("Delta1".to_string(), "0*Delta2".to_string());
    channels.insert("Omega2".to_string(), "[30.0, 0.0, 0.0, 0.0, 0.0, 0.0]".to_string());
    channels.insert("Delta2".to_string(), "[0.0, 0.0, 0.0, 0.0, 0.0, 0.0]".to_string());
    let config = ScenarioConfig {
        id: "two-body".into(),
        figure: "two-body baseline".into(),
        scheme: Scheme::OnePhoton,
        modulation: Modulation::Hybrid,
        task: GateTask::Cz,
        dual_pulse: false,
        duration_us: crate::waveform::DEFAULT_DURATION,
        claimed_error: 1e-4,
        params: crate::scenario::ParamsConfig {
            layout: Layout::Direct,
            ..Default::default()
        },
        channels,
    };
    Scenario::from_config(config).expect("baseline scenario")
}

pub const BASELINE_BUDGET: usize = 20_000;

/// Optimizer task for the two-body baseline over the default search box.
pub fn baseline_task(budget: usize, seed: u64) -> OptimizationTask {
    OptimizationTask::new(baseline_scenario())
        .expect("free channels")
        .with_budget(budget)
        .with_seed(seed)
        .with_starts(8)
}

pub fn baseline_check(budget: usize, seed: u64) -> (CheckRow, Option<Scenario>) {
    let t = Instant::now();
    let task = baseline_task(budget, seed);
    match optimizer::optimize(&task) {
        Ok(r) => {
            let dt = t.elapsed().as_secs_f64();
            let s = task.instantiate(&r.best).ok();
            (
                CheckRow::new(
                    "baseline",
                    format!("two-body CZ ({} evals)", r.evaluations),
                    r.best_error,
                    "< 1e-4 within 2e4 evals",
                    r.best_error < 1e-4 && r.evaluations <= BASELINE_BUDGET,
                    dt,
                ),
                s,
            )
        }
        Err(e) => (CheckRow::failed("baseline", "two-body CZ", &e.to_string()), None),
    }
}
