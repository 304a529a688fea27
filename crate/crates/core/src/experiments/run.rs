use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{ControllerSpec, ObjectiveSpec, Scenario, SeedSet};
use crate::error::{config, Error, Result};
use crate::freeway::{DetectorReading, FreewayScenario, FreewaySim};
use crate::ramp_control::{AlineaParams, AlineaState, HeroController, HeroReading, MetalineState, RampMode};
use crate::signal_control::{FlexCommand, MpFixedState, MpFlexState, ScootState};
use crate::urban::{SignalPlan, SpatEvent, UrbanNetwork, UrbanSim};

/// One control period of a freeway run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampRow {
    pub t: f64,
    pub ramp: String,
    /// Rate applied from `t` on.
    pub rate: f64,
    /// Downstream occupancy over the period that just ended, percent.
    pub occupancy: f64,
    pub queue_m: f64,
    pub mode: String,
}

/// One detector read at a control boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorRow {
    pub t: f64,
    pub detector: String,
    pub flow_veh_h: f64,
    pub speed_m_s: f64,
    pub occupancy_pct: f64,
}

/// One per-phase signal decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub t: f64,
    pub cycle: u64,
    pub intersection: String,
    pub phase: usize,
    pub green_s: f64,
    pub t_c: Option<f64>,
    pub offset_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunTrace {
    pub ramps: Vec<RampRow>,
    pub detectors: Vec<DetectorRow>,
    pub decisions: Vec<DecisionRow>,
    pub spat: Vec<SpatEvent>,
}

/// Outcome of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_id: String,
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
    pub objective: f64,
}

/// Runs one seed; `trace` switches on the per-period logs.
pub fn simulate(scenario: &Scenario, controller: &ControllerSpec, seed: u64, trace: bool) -> Result<(BTreeMap<String, f64>, RunTrace)> {
    controller.check_compatible(scenario)?;
    match scenario {
        Scenario::Freeway(s) => run_freeway(s, controller, seed, trace),
        Scenario::Urban(n) => run_urban(n, controller, seed, trace),
    }
}

/// One seed, reduced to a record.
pub fn run_once(scenario: &Scenario, controller: &ControllerSpec, config_id: &str, seed: u64, objective: &ObjectiveSpec) -> Result<RunRecord> {
    let wrap = |e: Error| Error::Run { config: config_id.to_string(), seed, source: Box::new(e) };
    let (metrics, _) = simulate(scenario, controller, seed, false).map_err(wrap)?;
    let value = objective.evaluate(&metrics).map_err(wrap)?;
    Ok(RunRecord { config_id: config_id.to_string(), seed, metrics, objective: value })
}

/// Every seed of the set, in parallel; records come back in seed order.
pub fn run_replications(
    scenario: &Scenario,
    controller: &ControllerSpec,
    config_id: &str,
    seeds: &SeedSet,
    objective: &ObjectiveSpec,
) -> Result<Vec<RunRecord>> {
    objective.validate()?;
    scenario.validate()?;
    seeds.seeds().par_iter().map(|&s| run_once(scenario, controller, config_id, s, objective)).collect()
}

/// Builds the controller against the scenario without simulating, so
/// parameter problems surface as configuration errors up front.
pub fn check_setup(scenario: &Scenario, controller: &ControllerSpec) -> Result<()> {
    scenario.validate()?;
    controller.check_compatible(scenario)?;
    match scenario {
        Scenario::Freeway(sc) => ramp_logic(sc, controller).map(|_| ()),
        Scenario::Urban(net) => {
            let dims = net.intersections.iter().map(|i| i.phases.len());
            match controller {
                ControllerSpec::None => Ok(()),
                ControllerSpec::MpFixed { params } => dims.into_iter().try_for_each(|n| MpFixedState::new(params.clone(), n).map(|_| ())),
                ControllerSpec::MpFlex { params } => dims.into_iter().try_for_each(|n| MpFlexState::new(params.clone(), n, 0, net.dt, 0).map(|_| ())),
                ControllerSpec::ScootScats { params, group } => ScootState::new(params.clone(), group, net).map(|_| ()),
                other => config(format!("controller `{}` cannot drive signals", other.kind())),
            }
        }
    }
}

enum RampLogic {
    Open,
    Alinea(Vec<AlineaState>),
    Metaline(MetalineState),
    Hero(Box<HeroController>),
}

fn ramp_params(sc: &FreewayScenario, base: &AlineaParams, overrides: &BTreeMap<String, AlineaParams>) -> Result<Vec<AlineaParams>> {
    if let Some(id) = overrides.keys().find(|id| sc.ramp_index(id).is_none()) {
        return Err(Error::Lookup { kind: "ramp", id: id.clone() });
    }
    let ps: Vec<AlineaParams> = sc.on_ramps.iter().map(|r| overrides.get(&r.id).unwrap_or(base).clone()).collect();
    for p in &ps {
        p.validate(sc.dt)?;
    }
    Ok(ps)
}

fn ramp_logic(sc: &FreewayScenario, c: &ControllerSpec) -> Result<(RampLogic, u64, Vec<f64>)> {
    let n = sc.on_ramps.len();
    let open_period = (sc.metric_cycle_s / sc.dt).round() as u64;
    Ok(match c {
        ControllerSpec::None => (RampLogic::Open, open_period, vec![100.0; n]),
        ControllerSpec::Alinea { params, overrides } | ControllerSpec::PiAlinea { params, overrides } => {
            let ps = ramp_params(sc, params, overrides)?;
            let period = ps.first().map_or(open_period, |p| p.measurement_period as u64);
            if ps.iter().any(|p| p.measurement_period as u64 != period) {
                return config("all ramps must share one measurement_period");
            }
            let rates = ps.iter().map(|p| p.max_rate).collect();
            (RampLogic::Alinea(ps.into_iter().map(AlineaState::new).collect()), period, rates)
        }
        ControllerSpec::Metaline { params } => {
            params.validate(sc.dt)?;
            if params.n_ramps() != n {
                return config(format!("METALINE is set up for {} ramps, scenario has {n}", params.n_ramps()));
            }
            let st = MetalineState::new(params.clone());
            let rates = st.prev_rates.clone();
            (RampLogic::Metaline(st), params.measurement_period as u64, rates)
        }
        ControllerSpec::Hero { params, alinea_controllers } => {
            let mut children = Vec::with_capacity(n);
            for r in &sc.on_ramps {
                let p = alinea_controllers.get(&r.id).ok_or_else(|| Error::Config(format!("HERO has no ALINEA settings for ramp `{}`", r.id)))?;
                p.validate(sc.dt)?;
                children.push(p.clone());
            }
            if let Some(id) = alinea_controllers.keys().find(|id| sc.ramp_index(id).is_none()) {
                return Err(Error::Lookup { kind: "ramp", id: id.clone() });
            }
            let period = (params.hero_period / sc.dt).round() as u64;
            let rates = children.iter().map(|p| p.max_rate).collect();
            let q_sat = sc.on_ramps.iter().map(|r| r.q_sat).collect();
            (RampLogic::Hero(Box::new(HeroController::new(params.clone(), children, q_sat)?)), period, rates)
        }
        other => return config(format!("controller `{}` cannot meter ramps", other.kind())),
    })
}

fn run_freeway(sc: &FreewayScenario, c: &ControllerSpec, seed: u64, trace: bool) -> Result<(BTreeMap<String, f64>, RunTrace)> {
    let (mut logic, period, mut rates) = ramp_logic(sc, c)?;
    let mut sim = FreewaySim::new(sc.clone(), seed)?;
    let mut out = RunTrace::default();
    let det_of = |readings: &[DetectorReading], id: &str| readings.iter().find(|r| r.id == id).cloned();
    while !sim.is_finished() {
        sim.step(&rates)?;
        if sim.t_step() % period != 0 {
            continue;
        }
        let readings = sim.read_detectors();
        let occ: Vec<f64> = sc
            .on_ramps
            .iter()
            .map(|r| det_of(&readings, &r.downstream_detector).map_or(0.0, |d| d.occupancy_pct))
            .collect();
        let queue: Vec<(f64, f64)> = sc
            .on_ramps
            .iter()
            .map(|r| det_of(&readings, &r.queue_detector).map_or((0.0, 0.0), |d| (d.queue_m.unwrap_or(0.0), d.arrivals)))
            .collect();
        let mut modes = vec![RampMode::Normal.label().to_string(); rates.len()];
        match &mut logic {
            RampLogic::Open => {}
            RampLogic::Alinea(states) => {
                rates = states.iter_mut().zip(&occ).map(|(s, o)| s.update(*o)).collect();
            }
            RampLogic::Metaline(st) => rates = st.update(&occ)?,
            RampLogic::Hero(h) => {
                let rd: Vec<HeroReading> =
                    occ.iter().zip(&queue).map(|(o, (q, a))| HeroReading { queue_m: *q, arrivals: *a, occupancy: *o }).collect();
                rates = h.update(&rd)?;
                modes = h
                    .modes
                    .iter()
                    .map(|m| match m {
                        RampMode::Slave { master } => format!("slave:{}", sc.on_ramps[*master].id),
                        m => m.label().to_string(),
                    })
                    .collect();
            }
        }
        if trace {
            let t = sim.time_s();
            for (i, r) in sc.on_ramps.iter().enumerate() {
                out.ramps.push(RampRow { t, ramp: r.id.clone(), rate: rates[i], occupancy: occ[i], queue_m: sim.ramp_queue_m(i), mode: modes[i].clone() });
            }
            for d in readings.iter().filter(|d| d.queue_m.is_none()) {
                out.detectors.push(DetectorRow { t, detector: d.id.clone(), flow_veh_h: d.flow_veh_h, speed_m_s: d.speed_m_s, occupancy_pct: d.occupancy_pct });
            }
        }
    }
    let m = sim.metrics();
    let metrics = BTreeMap::from([
        ("mean_queue_length_m".to_string(), m.mean_queue_length_m),
        ("mean_occupancy_violation".to_string(), m.mean_occupancy_violation),
        ("total_time_spent_veh_s".to_string(), m.total_time_spent_veh_s),
        ("throughput_veh".to_string(), m.exited),
        ("max_ledger_residual".to_string(), m.max_ledger_residual),
    ]);
    Ok((metrics, out))
}

enum SignalLogic {
    Programmed,
    Fixed(Vec<MpFixedState>),
    Flex(Vec<MpFlexState>),
    Scoot(Box<ScootState>),
}

fn log_plan(out: &mut RunTrace, t: f64, cycle: u64, id: &str, plan: &SignalPlan) {
    for (j, g) in plan.greens.iter().enumerate() {
        out.decisions.push(DecisionRow {
            t,
            cycle,
            intersection: id.to_string(),
            phase: j,
            green_s: *g,
            t_c: Some(plan.cycle_s),
            offset_s: Some(plan.offset_s),
        });
    }
}

fn run_urban(net: &UrbanNetwork, c: &ControllerSpec, seed: u64, trace: bool) -> Result<(BTreeMap<String, f64>, RunTrace)> {
    let mut sim = UrbanSim::new(net.clone(), seed)?;
    sim.record_spat(trace);
    let n_int = net.intersections.len();
    let n_phases: Vec<usize> = net.intersections.iter().map(|i| i.phases.len()).collect();
    let mut out = RunTrace::default();
    let mut cycles = vec![0u64; n_int];
    let (mut logic, period) = match c {
        ControllerSpec::None => (SignalLogic::Programmed, 0),
        ControllerSpec::MpFixed { params } => {
            let st = n_phases.iter().map(|&n| MpFixedState::new(params.clone(), n)).collect::<Result<Vec<_>>>()?;
            (SignalLogic::Fixed(st), params.measurement_period as u64)
        }
        ControllerSpec::MpFlex { params } => {
            let mut st = Vec::with_capacity(n_int);
            for (n, &np) in n_phases.iter().enumerate() {
                let start = sim.active_phase(n).unwrap_or(0);
                sim.set_phase(n, start, false)?;
                // decorrelate tie-breaks between intersections
                st.push(MpFlexState::new(params.clone(), np, start, net.dt, seed.wrapping_mul(1_000_003).wrapping_add(n as u64))?);
            }
            (SignalLogic::Flex(st), params.measurement_period as u64)
        }
        ControllerSpec::ScootScats { params, group } => {
            let mut st = ScootState::new(params.clone(), group, net)?;
            for (node, plan) in st.initial_plans() {
                sim.apply_signal_plan(node, plan.clone())?;
                if trace {
                    log_plan(&mut out, 0.0, 0, &net.intersections[node].id, &plan);
                }
            }
            (SignalLogic::Scoot(Box::new(st)), params.measurement_period as u64)
        }
        other => return config(format!("controller `{}` cannot drive signals", other.kind())),
    };
    while !sim.is_finished() {
        sim.step()?;
        let t = sim.time_s();
        let sample = period > 0 && sim.t_step() % period == 0;
        match &mut logic {
            SignalLogic::Programmed => {
                for (n, count) in cycles.iter_mut().enumerate() {
                    if sim.take_cycle_complete(n) {
                        *count += 1;
                    }
                }
            }
            SignalLogic::Fixed(states) => {
                for n in 0..n_int {
                    if sample {
                        states[n].sample(&sim.read_pressures(n)?)?;
                    }
                    if sim.take_cycle_complete(n) {
                        cycles[n] += 1;
                        let plan = states[n].cycle_end()?;
                        if trace {
                            log_plan(&mut out, t, cycles[n], &net.intersections[n].id, &plan);
                        }
                        sim.apply_signal_plan(n, plan)?;
                    }
                }
            }
            SignalLogic::Flex(states) => {
                if sample {
                    for n in 0..n_int {
                        let ending = states[n].active_phase();
                        if let FlexCommand::Switch(j) = states[n].step(&sim.read_pressures(n)?)? {
                            sim.set_phase(n, j, true)?;
                            if trace {
                                // one row per completed green
                                out.decisions.push(DecisionRow {
                                    t,
                                    cycle: cycles[n],
                                    intersection: net.intersections[n].id.clone(),
                                    phase: ending,
                                    green_s: states[n].elapsed_s(),
                                    t_c: None,
                                    offset_s: None,
                                });
                            }
                            cycles[n] += 1;
                        }
                    }
                }
            }
            SignalLogic::Scoot(st) => {
                if sample {
                    let q: Vec<f64> = (0..net.links.len()).map(|z| sim.queue_veh(z)).collect();
                    st.sample_queues(&q)?;
                }
                let nodes = st.member_nodes();
                let lead = sim.take_cycle_complete(nodes[0]);
                for &n in &nodes[1..] {
                    sim.take_cycle_complete(n);
                }
                if lead {
                    cycles[nodes[0]] += 1;
                    let sat = nodes.iter().map(|&n| sim.read_saturation(n)).collect::<Result<Vec<_>>>()?;
                    for (node, plan) in st.cycle_end(net, &sat)? {
                        if trace {
                            log_plan(&mut out, t, cycles[nodes[0]], &net.intersections[node].id, &plan);
                        }
                        sim.apply_signal_plan(node, plan)?;
                    }
                }
            }
        }
    }
    if trace {
        out.spat = sim.spat().to_vec();
    }
    let m = sim.metrics();
    let metrics = BTreeMap::from([
        ("mean_queue_length_m".to_string(), m.mean_queue_length_m),
        ("mean_queue_veh".to_string(), m.mean_queue_veh),
        ("total_time_spent_veh_s".to_string(), m.total_time_spent_veh_s),
        ("throughput_veh".to_string(), m.exited),
        ("max_ledger_residual".to_string(), m.max_ledger_residual),
    ]);
    Ok((metrics, out))
}
