use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// Fixed-order programme for one intersection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalPlan {
    /// Green seconds per phase, in phase order.
    pub greens: Vec<f64>,
    pub cycle_s: f64,
    /// Onset of phase 0 relative to group time zero.
    pub offset_s: f64,
}

/// Signal aspect of one phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Color {
    #[serde(rename = "G")]
    Green,
    #[serde(rename = "y")]
    Yellow,
    #[serde(rename = "r")]
    Red,
}

impl Color {
    pub fn code(self) -> char {
        match self {
            Color::Green => 'G',
            Color::Yellow => 'y',
            Color::Red => 'r',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Segment {
    phase: usize,
    green: bool,
    steps: u64,
}

#[derive(Debug, Clone, PartialEq)]
struct StepPlan {
    plan: SignalPlan,
    greens: Vec<u64>,
    cycle: u64,
    offset: u64,
}

#[derive(Debug, Clone, PartialEq)]
enum Mode {
    Programmed {
        current: StepPlan,
        pending: Option<StepPlan>,
        segments: Vec<Segment>,
        seg: usize,
        left: u64,
        boundary: bool,
    },
    Direct {
        target: usize,
        left: u64,
    },
}

/// Signal controller state of one intersection.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Signal {
    n_phases: usize,
    tl_steps: u64,
    dt: f64,
    active: Option<usize>,
    yellow: Option<usize>,
    green_steps: u64,
    cycle_complete: bool,
    mode: Mode,
}

impl Signal {
    pub(crate) fn new(n_phases: usize, transition_s: f64, dt: f64, initial: SignalPlan) -> Result<Self> {
        let tl_steps = (transition_s / dt).round() as u64;
        let mut s = Self {
            n_phases,
            tl_steps,
            dt,
            active: None,
            yellow: None,
            green_steps: 0,
            cycle_complete: false,
            mode: Mode::Direct { target: 0, left: 0 },
        };
        let plan = s.to_steps(initial)?;
        let segments = s.segments(&plan, 0);
        // place the clock so that phase 0 starts at group time = offset
        let mut skip = (plan.cycle - plan.offset % plan.cycle) % plan.cycle;
        let mut seg = 0;
        while skip >= segments[seg].steps {
            skip -= segments[seg].steps;
            seg += 1;
        }
        let left = segments[seg].steps - skip;
        let first = segments[seg];
        s.set_display(first);
        s.mode = Mode::Programmed { current: plan, pending: None, segments, seg, left, boundary: false };
        Ok(s)
    }

    fn to_steps(&self, plan: SignalPlan) -> Result<StepPlan> {
        if plan.greens.len() != self.n_phases {
            return contract(format!("plan has {} greens for {} phases", plan.greens.len(), self.n_phases));
        }
        if plan.greens.iter().any(|g| !(g.is_finite() && *g > 0.0)) || !(plan.offset_s.is_finite() && plan.offset_s >= 0.0) {
            return contract(format!("greens must be > 0 and offset >= 0, got {:?} / {}", plan.greens, plan.offset_s));
        }
        let greens: Vec<u64> = plan.greens.iter().map(|g| ((g / self.dt).round() as u64).max(1)).collect();
        let cycle = (plan.cycle_s / self.dt).round() as u64;
        let need = greens.iter().sum::<u64>() + self.n_phases as u64 * self.tl_steps;
        if cycle < need {
            return contract(format!(
                "cycle {} s shorter than greens plus transitions {} s",
                plan.cycle_s,
                need as f64 * self.dt
            ));
        }
        let offset = ((plan.offset_s / self.dt).round() as u64) % cycle;
        Ok(StepPlan { plan, greens, cycle, offset })
    }

    fn segments(&self, p: &StepPlan, extension: u64) -> Vec<Segment> {
        Self::build(p, extension, self.n_phases, self.tl_steps)
    }

    /// Green, transition, green, ... with slack on the last green and an
    /// offset-shift extension on the first.
    fn build(p: &StepPlan, extension: u64, n_phases: usize, tl_steps: u64) -> Vec<Segment> {
        let slack = p.cycle - p.greens.iter().sum::<u64>() - n_phases as u64 * tl_steps;
        let mut out = Vec::with_capacity(2 * n_phases);
        for (j, g) in p.greens.iter().enumerate() {
            let mut steps = *g;
            if j == 0 {
                steps += extension;
            }
            if j + 1 == n_phases {
                steps += slack;
            }
            out.push(Segment { phase: j, green: true, steps });
            if tl_steps > 0 {
                out.push(Segment { phase: j, green: false, steps: tl_steps });
            }
        }
        out
    }

    fn set_display(&mut self, seg: Segment) {
        let new_active = seg.green.then_some(seg.phase);
        if new_active != self.active {
            self.green_steps = 0;
        }
        self.active = new_active;
        self.yellow = (!seg.green).then_some(seg.phase);
    }

    /// Installs a plan; it takes effect at the next cycle boundary.
    pub(crate) fn apply_plan(&mut self, plan: SignalPlan) -> Result<()> {
        let sp = self.to_steps(plan)?;
        match &mut self.mode {
            Mode::Programmed { pending, .. } => {
                *pending = Some(sp);
                Ok(())
            }
            Mode::Direct { .. } => contract("intersection is under direct phase control"),
        }
    }

    /// Direct phase command. Re-selecting the active phase is a no-op
    /// unless `force` asks for a transition back into the same phase.
    pub(crate) fn set_phase(&mut self, phase: usize, force: bool) -> Result<()> {
        if phase >= self.n_phases {
            return contract(format!("phase {phase} does not exist ({} phases)", self.n_phases));
        }
        if let Mode::Direct { target, left } = &mut self.mode {
            if *left > 0 {
                *target = phase;
                return Ok(());
            }
            if self.active == Some(phase) && !force {
                return Ok(());
            }
        } else if self.active.is_none() {
            // mid-transition in programmed mode: keep the running interval
            let left = match &self.mode {
                Mode::Programmed { left, .. } => *left,
                Mode::Direct { .. } => unreachable!(),
            };
            self.mode = Mode::Direct { target: phase, left };
            return Ok(());
        } else if self.active == Some(phase) && !force {
            // take over without interrupting the running green
            self.mode = Mode::Direct { target: phase, left: 0 };
            return Ok(());
        }
        if self.tl_steps == 0 {
            self.yellow = None;
            self.active = Some(phase);
            self.green_steps = 0;
            self.mode = Mode::Direct { target: phase, left: 0 };
        } else {
            self.yellow = self.active;
            self.active = None;
            self.green_steps = 0;
            self.mode = Mode::Direct { target: phase, left: self.tl_steps };
        }
        Ok(())
    }

    /// Adopts a pending plan at a cycle boundary. Called before service.
    pub(crate) fn begin_step(&mut self) {
        let mut display = None;
        if let Mode::Programmed { current, pending, segments, seg, left, boundary } = &mut self.mode {
            if *boundary {
                let mut extension = 0;
                if let Some(next) = pending.take() {
                    extension = (next.offset + next.cycle - current.offset % next.cycle) % next.cycle;
                    *current = next;
                }
                let built = Self::build(current, extension, self.n_phases, self.tl_steps);
                *segments = built;
                *seg = 0;
                *left = segments[0].steps;
                *boundary = false;
                display = Some(segments[0]);
            }
        }
        if let Some(d) = display {
            self.set_display(d);
        }
    }

    /// Advances the clock by one step after service.
    pub(crate) fn end_step(&mut self) {
        if self.active.is_some() {
            self.green_steps += 1;
        }
        let mut display = None;
        match &mut self.mode {
            Mode::Programmed { segments, seg, left, boundary, .. } => {
                *left -= 1;
                if *left == 0 {
                    *seg += 1;
                    if *seg == segments.len() {
                        *boundary = true;
                        self.cycle_complete = true;
                    } else {
                        *left = segments[*seg].steps;
                        display = Some(segments[*seg]);
                    }
                }
            }
            Mode::Direct { target, left } => {
                if *left > 0 {
                    *left -= 1;
                    if *left == 0 {
                        display = Some(Segment { phase: *target, green: true, steps: 0 });
                    }
                }
            }
        }
        if let Some(d) = display {
            self.set_display(d);
        }
    }

    pub(crate) fn active(&self) -> Option<usize> {
        self.active
    }

    pub(crate) fn color(&self, phase: usize) -> Color {
        if self.active == Some(phase) {
            Color::Green
        } else if self.yellow == Some(phase) {
            Color::Yellow
        } else {
            Color::Red
        }
    }

    pub(crate) fn green_elapsed_s(&self) -> f64 {
        self.green_steps as f64 * self.dt
    }

    pub(crate) fn take_cycle_complete(&mut self) -> bool {
        std::mem::take(&mut self.cycle_complete)
    }

    pub(crate) fn plan(&self) -> Option<&SignalPlan> {
        match &self.mode {
            Mode::Programmed { current, .. } => Some(&current.plan),
            Mode::Direct { .. } => None,
        }
    }
}
