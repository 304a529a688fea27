use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::network::{Target, UrbanNetwork};
use super::signal::{Color, Signal, SignalPlan};
use crate::error::{contract, Error, Result};
use crate::freeway::{profile_probability, ArrivalProcess};
use crate::ledger::{to_f64, to_veh, Veh};

/// Vehicle spacing used to express queues in metres.
pub const QUEUE_SPACING_M: f64 = 7.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatEvent {
    pub t: f64,
    pub intersection: String,
    pub phase: usize,
    pub color: Color,
}

/// Degree of saturation of one incoming link over the last cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSaturation {
    pub link: usize,
    pub d: f64,
    pub queue_veh: f64,
    /// Green time of the link was zero; `d` reported as 0.
    pub degenerate: bool,
}

/// `(discharged + residual) / (s * g)`; `None` when the link saw no green.
pub fn degree_of_saturation(discharged: f64, residual: f64, sat_flow: f64, green_s: f64) -> Option<f64> {
    (green_s > 0.0).then(|| (discharged + residual) / (sat_flow * green_s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct UrbanMetrics {
    /// Mean queue on intersection approaches, metres (7.5 m per vehicle).
    pub mean_queue_length_m: f64,
    pub mean_queue_veh: f64,
    pub total_time_spent_veh_s: f64,
    pub entered: f64,
    pub exited: f64,
    pub max_ledger_residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct SatAcc {
    green_steps: u64,
    discharged: Veh,
    queue_at_green_end: Veh,
}

#[derive(Debug, Clone)]
pub struct UrbanSim {
    net: UrbanNetwork,
    phase_links: Vec<Vec<Vec<usize>>>,
    incoming: Vec<Vec<usize>>,
    approach_links: Vec<usize>,
    targets: Vec<Vec<(Target, f64)>>,
    source_link: Vec<usize>,
    node_of_link: Vec<Option<usize>>,

    t_step: u64,
    transit: Vec<VecDeque<Veh>>,
    transit_sum: Vec<Veh>,
    queue: Vec<Veh>,
    origin: Vec<Veh>,
    signals: Vec<Signal>,
    sat: Vec<SatAcc>,
    rng: ChaCha8Rng,
    entered: Veh,
    exited: Veh,
    ledger_residual: Veh,
    max_ledger_residual: Veh,

    queue_sum: f64,
    tts: f64,
    metric_steps: u64,

    record_spat: bool,
    last_colors: Vec<Vec<Option<Color>>>,
    spat: Vec<SpatEvent>,
}

impl UrbanSim {
    pub fn new(net: UrbanNetwork, seed: u64) -> Result<Self> {
        net.validate()?;
        let n_links = net.links.len();
        let phase_links: Vec<_> = (0..net.intersections.len()).map(|n| net.phase_links(n)).collect();
        let incoming: Vec<_> = (0..net.intersections.len()).map(|n| net.incoming(n)).collect();
        let approach_links: Vec<usize> = (0..n_links).filter(|z| net.links[*z].to.is_some()).collect();
        let targets = (0..n_links).map(|z| net.turn_targets(z)).collect();
        let source_link = net.sources.iter().map(|s| net.link_index(&s.link).expect("validated")).collect();
        let node_of_link = net.links.iter().map(|l| l.to.as_ref().and_then(|id| net.intersection_index(id))).collect();
        let transit = net
            .links
            .iter()
            .map(|l| VecDeque::from(vec![0; net.steps_per(l.freeflow_tt_s) as usize]))
            .collect();
        let signals = net
            .intersections
            .iter()
            .map(|n| {
                Signal::new(
                    n.phases.len(),
                    n.transition_s,
                    net.dt,
                    SignalPlan { greens: n.initial_greens.clone(), cycle_s: n.initial_cycle_s, offset_s: 0.0 },
                )
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Config(e.to_string()))?;
        let last_colors = net.intersections.iter().map(|n| vec![None; n.phases.len()]).collect();
        Ok(Self {
            phase_links,
            incoming,
            approach_links,
            targets,
            source_link,
            node_of_link,
            t_step: 0,
            transit,
            transit_sum: vec![0; n_links],
            queue: vec![0; n_links],
            origin: vec![0; net.sources.len()],
            signals,
            sat: vec![SatAcc::default(); n_links],
            rng: ChaCha8Rng::seed_from_u64(seed),
            entered: 0,
            exited: 0,
            ledger_residual: 0,
            max_ledger_residual: 0,
            queue_sum: 0.0,
            tts: 0.0,
            metric_steps: 0,
            record_spat: false,
            last_colors,
            spat: Vec::new(),
            net,
        })
    }

    pub fn network(&self) -> &UrbanNetwork {
        &self.net
    }

    /// Keeps a SPAT change log (off by default).
    pub fn record_spat(&mut self, on: bool) {
        self.record_spat = on;
    }

    pub fn spat(&self) -> &[SpatEvent] {
        &self.spat
    }

    pub fn t_step(&self) -> u64 {
        self.t_step
    }

    pub fn time_s(&self) -> f64 {
        self.t_step as f64 * self.net.dt
    }

    pub fn is_finished(&self) -> bool {
        self.t_step >= self.net.horizon_steps()
    }

    pub fn queue_veh(&self, link: usize) -> f64 {
        to_f64(self.queue[link])
    }

    /// Transit plus queue.
    pub fn link_occupancy(&self, link: usize) -> f64 {
        to_f64(self.queue[link] + self.transit_sum[link])
    }

    fn stock(&self) -> Veh {
        self.queue.iter().sum::<Veh>() + self.transit_sum.iter().sum::<Veh>() + self.origin.iter().sum::<Veh>()
    }

    pub fn vehicles_in_system(&self) -> f64 {
        to_f64(self.stock())
    }

    pub fn entered(&self) -> f64 {
        to_f64(self.entered)
    }

    pub fn exited(&self) -> f64 {
        to_f64(self.exited)
    }

    pub fn ledger_residual(&self) -> f64 {
        to_f64(self.ledger_residual)
    }

    pub fn active_phase(&self, n: usize) -> Option<usize> {
        self.signals[n].active()
    }

    pub fn phase_color(&self, n: usize, phase: usize) -> Color {
        self.signals[n].color(phase)
    }

    pub fn green_elapsed_s(&self, n: usize) -> f64 {
        self.signals[n].green_elapsed_s()
    }

    pub fn current_plan(&self, n: usize) -> Option<&SignalPlan> {
        self.signals[n].plan()
    }

    /// True once per completed programmed cycle; the flag clears on read.
    pub fn take_cycle_complete(&mut self, n: usize) -> bool {
        self.signals[n].take_cycle_complete()
    }

    fn check_node(&self, n: usize) -> Result<()> {
        if n >= self.signals.len() {
            return Err(Error::Lookup { kind: "intersection", id: n.to_string() });
        }
        Ok(())
    }

    /// Queues a fixed-order plan, adopted at the intersection's next cycle boundary.
    pub fn apply_signal_plan(&mut self, n: usize, plan: SignalPlan) -> Result<()> {
        self.check_node(n)?;
        self.signals[n].apply_plan(plan)
    }

    /// Switches to `phase` through one transition interval.
    pub fn set_phase(&mut self, n: usize, phase: usize, force_transition: bool) -> Result<()> {
        self.check_node(n)?;
        self.signals[n].set_phase(phase, force_transition)
    }

    /// Queue sums per phase; links shared by several phases count in each.
    pub fn read_pressures(&self, n: usize) -> Result<Vec<f64>> {
        self.check_node(n)?;
        Ok(self.phase_links[n].iter().map(|links| links.iter().map(|z| self.queue_veh(*z)).sum()).collect())
    }

    /// Degree of saturation of every incoming link since the last read; resets the accumulators.
    pub fn read_saturation(&mut self, n: usize) -> Result<Vec<LinkSaturation>> {
        self.check_node(n)?;
        let dt = self.net.dt;
        let mut out = Vec::with_capacity(self.incoming[n].len());
        for &z in &self.incoming[n] {
            let acc = std::mem::take(&mut self.sat[z]);
            let g = acc.green_steps as f64 * dt;
            let s = self.net.links[z].sat_flow;
            let (d, degenerate) = match degree_of_saturation(to_f64(acc.discharged), to_f64(acc.queue_at_green_end), s, g) {
                Some(d) => (d, false),
                None => (0.0, true),
            };
            out.push(LinkSaturation { link: z, d, queue_veh: self.queue_veh(z), degenerate });
        }
        Ok(out)
    }

    /// Puts vehicles at the back of a link queue before a run; counted as entered.
    pub fn preload_queue(&mut self, link: usize, vehicles: f64) -> Result<()> {
        if link >= self.queue.len() || !(vehicles >= 0.0) {
            return contract(format!("cannot preload link {link} with {vehicles} vehicles"));
        }
        let add = to_veh(vehicles).min(self.space(link));
        self.queue[link] += add;
        self.entered += add;
        Ok(())
    }

    fn space(&self, z: usize) -> Veh {
        (to_veh(self.net.links[z].storage_veh) - self.queue[z] - self.transit_sum[z]).max(0)
    }

    fn arrivals(&mut self) {
        let t = self.time_s();
        let whole_second = (t - t.round()).abs() < 1e-9;
        for (k, s) in self.net.sources.iter().enumerate() {
            let p = profile_probability(&s.profile, t);
            let n = match self.net.arrivals {
                ArrivalProcess::Fluid => to_veh(p * f64::from(s.streams) * self.net.dt),
                ArrivalProcess::Bernoulli if whole_second => {
                    to_veh((0..s.streams).filter(|_| self.rng.random_bool(p)).count() as f64)
                }
                ArrivalProcess::Bernoulli => 0,
            };
            self.origin[k] += n;
            self.entered += n;
        }
    }

    fn log_spat(&mut self) {
        if !self.record_spat {
            return;
        }
        let t = self.time_s();
        for n in 0..self.signals.len() {
            for p in 0..self.last_colors[n].len() {
                let c = self.signals[n].color(p);
                if self.last_colors[n][p] != Some(c) {
                    self.last_colors[n][p] = Some(c);
                    self.spat.push(SpatEvent { t, intersection: self.net.intersections[n].id.clone(), phase: p, color: c });
                }
            }
        }
    }

    /// Advances one `dt`.
    pub fn step(&mut self) -> Result<()> {
        if self.is_finished() {
            return contract("simulation horizon already reached");
        }
        let dt = self.net.dt;
        for s in &mut self.signals {
            s.begin_step();
        }
        self.log_spat();
        self.arrivals();

        let n_links = self.net.links.len();
        let mut green = vec![false; n_links];
        for (n, sig) in self.signals.iter().enumerate() {
            if let Some(j) = sig.active() {
                for &z in &self.phase_links[n][j] {
                    green[z] = true;
                }
            }
        }
        let mut space: Vec<Veh> = (0..n_links).map(|z| self.space(z)).collect();
        let mut entering: Vec<Veh> = vec![0; n_links];
        let mut discharged: Vec<Veh> = vec![0; n_links];
        for z in 0..n_links {
            let link = &self.net.links[z];
            let served = self.node_of_link[z].is_none() || green[z];
            if !served || self.queue[z] == 0 {
                continue;
            }
            let mut x = (link.sat_flow * dt).min(to_f64(self.queue[z]));
            for (t, beta) in &self.targets[z] {
                if let Target::Link(k) = t {
                    if *beta > 0.0 {
                        x = x.min(to_f64(space[*k]) / beta);
                    }
                }
            }
            let mut moved = 0;
            for (t, beta) in &self.targets[z] {
                let a = to_veh(beta * x);
                match t {
                    Target::Link(k) => {
                        let a = a.min(space[*k]);
                        space[*k] -= a;
                        entering[*k] += a;
                        moved += a;
                    }
                    Target::Exit => {
                        self.exited += a;
                        moved += a;
                    }
                }
            }
            self.queue[z] -= moved;
            discharged[z] = moved;
        }
        for (k, &z) in self.source_link.iter().enumerate() {
            let cap = to_veh(self.net.links[z].sat_flow * dt);
            let a = self.origin[k].min(cap).min(space[z]);
            space[z] -= a;
            self.origin[k] -= a;
            entering[z] += a;
        }
        for z in 0..n_links {
            let line = &mut self.transit[z];
            if line.is_empty() {
                self.queue[z] += entering[z];
            } else {
                line.push_back(entering[z]);
                self.transit_sum[z] += entering[z];
                let done = line.pop_front().unwrap_or(0);
                self.transit_sum[z] -= done;
                self.queue[z] += done;
            }
        }
        for z in 0..n_links {
            if green[z] && self.node_of_link[z].is_some() {
                let acc = &mut self.sat[z];
                acc.green_steps += 1;
                acc.discharged += discharged[z];
                acc.queue_at_green_end = self.queue[z];
            }
        }
        for s in &mut self.signals {
            s.end_step();
        }
        self.t_step += 1;

        self.ledger_residual = self.entered - self.exited - self.stock();
        self.max_ledger_residual = self.max_ledger_residual.max(self.ledger_residual.abs());
        if self.t_step > self.net.warmup_steps() {
            self.metric_steps += 1;
            if !self.approach_links.is_empty() {
                let q: Veh = self.approach_links.iter().map(|z| self.queue[*z]).sum();
                self.queue_sum += to_f64(q) / self.approach_links.len() as f64;
            }
            self.tts += self.vehicles_in_system() * dt;
        }
        Ok(())
    }

    pub fn metrics(&self) -> UrbanMetrics {
        let steps = self.metric_steps.max(1) as f64;
        let mean_q = self.queue_sum / steps;
        UrbanMetrics {
            mean_queue_length_m: mean_q * QUEUE_SPACING_M,
            mean_queue_veh: mean_q,
            total_time_spent_veh_s: self.tts,
            entered: to_f64(self.entered),
            exited: to_f64(self.exited),
            max_ledger_residual: to_f64(self.max_ledger_residual),
        }
    }
}
