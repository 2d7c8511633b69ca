//! Idle → Growing → Jammed pneumatic workflow of the spine box.
//!
//! Valve roles: v1 vents to atmosphere, v2 feeds the pressure regulator,
//! v3 opens the spine volume of the box, v4 connects the vacuum pump.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Sensor range of the box pressure transducer, Pa gauge.
pub const SENSOR_RANGE: (f64, f64) = (-100_000.0, 100_000.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SystemState {
    #[default]
    Idle,
    Growing,
    Jammed,
}

impl SystemState {
    pub const ALL: [SystemState; 3] = [SystemState::Idle, SystemState::Growing, SystemState::Jammed];

    pub fn name(self) -> &'static str {
        match self {
            SystemState::Idle => "idle",
            SystemState::Growing => "growing",
            SystemState::Jammed => "jammed",
        }
    }
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    StartGrow,
    Jam,
    Release,
}

impl Event {
    pub const ALL: [Event; 3] = [Event::StartGrow, Event::Jam, Event::Release];

    pub fn name(self) -> &'static str {
        match self {
            Event::StartGrow => "start_grow",
            Event::Jam => "jam",
            Event::Release => "release",
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Event {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Event::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown event `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Valve {
    Open,
    Closed,
}

impl Valve {
    pub fn is_open(self) -> bool {
        self == Valve::Open
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ValveConfig {
    pub v1: Valve,
    pub v2: Valve,
    pub v3: Valve,
    pub v4: Valve,
}

impl ValveConfig {
    pub fn as_array(&self) -> [Valve; 4] {
        [self.v1, self.v2, self.v3, self.v4]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegulatorSetpoint {
    /// Box pressure target, Pa gauge.
    pub box_pressure: f64,
    /// Vacuum line target, Pa gauge.
    pub vacuum: f64,
}

impl RegulatorSetpoint {
    /// The setpoint that governs the box in this state.
    pub fn active(&self) -> f64 {
        if self.vacuum != 0.0 {
            self.vacuum
        } else {
            self.box_pressure
        }
    }
}

pub fn valve_config(state: SystemState) -> ValveConfig {
    use Valve::{Closed, Open};
    match state {
        SystemState::Idle => ValveConfig {
            v1: Open,
            v2: Closed,
            v3: Open,
            v4: Closed,
        },
        SystemState::Growing => ValveConfig {
            v1: Closed,
            v2: Open,
            v3: Open,
            v4: Closed,
        },
        SystemState::Jammed => ValveConfig {
            v1: Open,
            v2: Closed,
            v3: Closed,
            v4: Open,
        },
    }
}

pub fn setpoint(state: SystemState) -> RegulatorSetpoint {
    match state {
        SystemState::Idle => RegulatorSetpoint {
            box_pressure: 0.0,
            vacuum: 0.0,
        },
        SystemState::Growing => RegulatorSetpoint {
            box_pressure: 10_000.0,
            vacuum: 0.0,
        },
        SystemState::Jammed => RegulatorSetpoint {
            box_pressure: 0.0,
            vacuum: -70_000.0,
        },
    }
}

/// Only the forward cycle is allowed.
pub fn step(state: SystemState, event: Event) -> Result<SystemState> {
    match (state, event) {
        (SystemState::Idle, Event::StartGrow) => Ok(SystemState::Growing),
        (SystemState::Growing, Event::Jam) => Ok(SystemState::Jammed),
        (SystemState::Jammed, Event::Release) => Ok(SystemState::Idle),
        _ => Err(Error::Transition { state, event }),
    }
}

/// Growth and retraction both need the pressurized growing regime.
pub fn may_change_length(state: SystemState) -> bool {
    state == SystemState::Growing
}

/// Single-owner runtime wrapper around [`step`].
#[derive(Debug, Clone, Default)]
pub struct StateMachine {
    state: SystemState,
}

impl StateMachine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self) -> SystemState {
        self.state
    }

    pub fn valves(&self) -> ValveConfig {
        valve_config(self.state)
    }

    pub fn setpoint(&self) -> RegulatorSetpoint {
        setpoint(self.state)
    }

    /// On error the state is left unchanged.
    pub fn apply(&mut self, event: Event) -> Result<SystemState> {
        self.state = step(self.state, event)?;
        Ok(self.state)
    }
}

/// `t_s,state,v1,v2,v3,v4,setpoint_kpa`.
pub fn log_row(t: f64, state: SystemState) -> String {
    let v = valve_config(state);
    let flag = |v: Valve| if v.is_open() { "open" } else { "closed" };
    format!(
        "{t},{state},{},{},{},{},{}",
        flag(v.v1),
        flag(v.v2),
        flag(v.v3),
        flag(v.v4),
        setpoint(state).active() / 1000.0
    )
}
