use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::SimError;

/// Largest heading change a single decision may command.
pub const MAX_HEADING_CHANGE: f64 = PI / 6.0;

/// Number of full-speed heading choices.
const FULL_SPEED_HEADINGS: usize = 6;

/// Heading changes offered at half speed and at rest.
const COARSE_HEADINGS: [f64; 3] = [-MAX_HEADING_CHANGE, 0.0, MAX_HEADING_CHANGE];

/// Cardinality of the discrete action set (6 full-speed + 3 half-speed + 3 stopped).
pub const ACTION_COUNT: usize = FULL_SPEED_HEADINGS + 2 * COARSE_HEADINGS.len();

/// A commanded speed and change of heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub speed: f64,
    pub heading_change: f64,
}

impl Action {
    pub const STOP: Action = Action {
        speed: 0.0,
        heading_change: 0.0,
    };

    pub fn new(speed: f64, heading_change: f64) -> Self {
        Self { speed, heading_change }
    }
}

/// Speed class of an action, relative to the agent's preferred speed.
fn speed_fraction(index: usize) -> f64 {
    if index < FULL_SPEED_HEADINGS {
        1.0
    } else if index < FULL_SPEED_HEADINGS + COARSE_HEADINGS.len() {
        0.5
    } else {
        0.0
    }
}

fn heading_change(index: usize) -> f64 {
    if index < FULL_SPEED_HEADINGS {
        let step = 2.0 * MAX_HEADING_CHANGE / (FULL_SPEED_HEADINGS - 1) as f64;
        -MAX_HEADING_CHANGE + step * index as f64
    } else {
        COARSE_HEADINGS[(index - FULL_SPEED_HEADINGS) % COARSE_HEADINGS.len()]
    }
}

/// The ordered discrete action set for one preferred speed.
///
/// Index layout is fixed: `0..6` are full-speed headings from -pi/6 to +pi/6,
/// `6..9` are half speed at `[-pi/6, 0, pi/6]`, `9..12` are zero speed at the same headings.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    pref_speed: f64,
    actions: Vec<Action>,
}

impl ActionSet {
    pub fn new(pref_speed: f64) -> Result<Self, SimError> {
        build_action_set(pref_speed)
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<Action> {
        self.actions.get(index).copied()
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn pref_speed(&self) -> f64 {
        self.pref_speed
    }
}

pub fn build_action_set(pref_speed: f64) -> Result<ActionSet, SimError> {
    if !(pref_speed > 0.0 && pref_speed.is_finite()) {
        return Err(SimError::InvalidPrefSpeed(pref_speed));
    }
    let actions = (0..ACTION_COUNT)
        .map(|i| Action::new(speed_fraction(i) * pref_speed, heading_change(i)))
        .collect();
    Ok(ActionSet { pref_speed, actions })
}

/// Action for `index` without allocating a whole set.
pub fn action_at(pref_speed: f64, index: usize) -> Option<Action> {
    (index < ACTION_COUNT).then(|| Action::new(speed_fraction(index) * pref_speed, heading_change(index)))
}
