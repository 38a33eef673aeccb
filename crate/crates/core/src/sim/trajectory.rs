use std::io::{self, Write};

use super::SimError;
use crate::model::{CurrentVector, FluxVector, SimplexVector, StateSpace};

/// One jump `from -> to` at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub from: usize,
    pub to: usize,
}

/// The occupation state right after a jump (or at time zero): anchor time
/// `s`, accumulated sojourn `s L_s`, and the current state.
///
/// Between jumps `L_t = (s L_s + (t - s) delta_x) / t`, with `L_0 = delta_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationAnchor {
    time: f64,
    sojourn: Vec<f64>,
    state: usize,
}

impl OccupationAnchor {
    pub fn start(d: usize, x0: usize) -> Self {
        Self { time: 0.0, sojourn: vec![0.0; d], state: x0 }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn state(&self) -> usize {
        self.state
    }

    /// `L_s` at the anchor time.
    pub fn measure(&self) -> SimplexVector {
        if self.time == 0.0 {
            return SimplexVector::dirac(self.sojourn.len(), self.state);
        }
        SimplexVector::from_unnormalized(self.sojourn.clone())
    }

    /// Writes `L_t` for `t >= s` (no jump in between) into `out`.
    pub fn occupation_into(&self, t: f64, out: &mut [f64]) {
        if t <= 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            out[self.state] = 1.0;
            return;
        }
        for (o, s) in out.iter_mut().zip(&self.sojourn) {
            *o = s / t;
        }
        out[self.state] += (t - self.time) / t;
    }

    pub fn occupation(&self, t: f64) -> SimplexVector {
        let mut out = vec![0.0; self.sojourn.len()];
        self.occupation_into(t, &mut out);
        SimplexVector::from_unnormalized(out)
    }

    /// Records a jump to `to` at time `t`.
    pub fn advance(&mut self, t: f64, to: usize) {
        self.sojourn[self.state] += t - self.time;
        self.time = t;
        self.state = to;
    }
}

/// A simulated path on `[0, horizon]`: initial state and jump events.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    space: StateSpace,
    x0: usize,
    horizon: f64,
    events: Vec<JumpEvent>,
}

impl Trajectory {
    /// Validates the chaining and time-ordering invariants.
    pub fn new(space: StateSpace, x0: usize, horizon: f64, events: Vec<JumpEvent>) -> Result<Self, SimError> {
        if x0 >= space.dim() {
            return Err(SimError::InvalidState(x0));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(SimError::InvalidHorizon(horizon));
        }
        let mut state = x0;
        let mut last = 0.0;
        for (k, ev) in events.iter().enumerate() {
            if ev.from != state || ev.to == ev.from || ev.to >= space.dim() {
                return Err(SimError::InvalidTrajectory(format!("event {k} does not chain from state {state}")));
            }
            if !(ev.time > last) || ev.time > horizon {
                return Err(SimError::InvalidTrajectory(format!("event {k} at time {} out of order", ev.time)));
            }
            state = ev.to;
            last = ev.time;
        }
        Ok(Self { space, x0, horizon, events })
    }

    pub(crate) fn from_parts(space: StateSpace, x0: usize, horizon: f64, events: Vec<JumpEvent>) -> Self {
        Self { space, x0, horizon, events }
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn x0(&self) -> usize {
        self.x0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn events(&self) -> &[JumpEvent] {
        &self.events
    }

    fn check_time(&self, t: f64) -> Result<(), SimError> {
        if t > 0.0 && t <= self.horizon {
            Ok(())
        } else {
            Err(SimError::OutOfRange { t, horizon: self.horizon })
        }
    }

    /// Number of events with time `<= t`.
    fn events_up_to(&self, t: f64) -> usize {
        self.events.partition_point(|e| e.time <= t)
    }

    /// `X_t`, taken right-continuous.
    pub fn state_at(&self, t: f64) -> usize {
        match self.events_up_to(t) {
            0 => self.x0,
            k => self.events[k - 1].to,
        }
    }

    /// The anchor in force at time `t`: after the last jump at or before `t`.
    pub fn anchor_at(&self, t: f64) -> OccupationAnchor {
        let mut anchor = OccupationAnchor::start(self.space.dim(), self.x0);
        for ev in &self.events[..self.events_up_to(t)] {
            anchor.advance(ev.time, ev.to);
        }
        anchor
    }

    /// `L_t = (1/t) int_0^t delta_{X_s} ds`, summed over sojourns.
    pub fn occupation_at(&self, t: f64) -> Result<SimplexVector, SimError> {
        self.check_time(t)?;
        Ok(self.occupation_unchecked(t))
    }

    pub(crate) fn occupation_unchecked(&self, t: f64) -> SimplexVector {
        let mut time_in = vec![0.0; self.space.dim()];
        let mut state = self.x0;
        let mut last = 0.0;
        for ev in self.events.iter().take_while(|e| e.time < t) {
            time_in[state] += ev.time - last;
            last = ev.time;
            state = ev.to;
        }
        time_in[state] += t - last;
        SimplexVector::from_unnormalized(time_in)
    }

    /// Per-edge jump counts over `(0, t]`.
    pub fn counts_at(&self, t: f64) -> Vec<u64> {
        let mut counts = vec![0u64; self.space.num_edges()];
        for ev in &self.events[..self.events_up_to(t)] {
            counts[self.space.edge_index(ev.from, ev.to)] += 1;
        }
        counts
    }

    /// `R_t^{xy}` = number of `x -> y` jumps in `(0, t]` divided by `t`.
    pub fn flux_at(&self, t: f64) -> Result<FluxVector, SimError> {
        self.check_time(t)?;
        Ok(self.flux_unchecked(t))
    }

    pub(crate) fn flux_unchecked(&self, t: f64) -> FluxVector {
        let values = self.counts_at(t).into_iter().map(|c| c as f64 / t).collect();
        FluxVector::new(self.space, values).expect("counts are nonnegative")
    }

    /// `J_t^{xy} = R_t^{xy} - R_t^{yx}`.
    pub fn current_at(&self, t: f64) -> Result<CurrentVector, SimError> {
        Ok(CurrentVector::from_flux(&self.flux_at(t)?))
    }

    /// Completed sojourns `(state, duration)`; the final sojourn, censored
    /// by the horizon, is excluded.
    pub fn holding_times(&self) -> Vec<(usize, f64)> {
        let mut last = 0.0;
        self.events
            .iter()
            .map(|ev| {
                let h = (ev.from, ev.time - last);
                last = ev.time;
                h
            })
            .collect()
    }

    /// CSV with header `time,from,to`; states are 1-based.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time,from,to")?;
        for ev in &self.events {
            writeln!(w, "{},{},{}", ev.time, ev.from + 1, ev.to + 1)?;
        }
        Ok(())
    }
}
