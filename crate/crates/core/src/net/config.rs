use serde::{Deserialize, Serialize};

use super::NetError;
use crate::obs::{DEFAULT_MAX_OTHERS, EGO_DIM, OTHER_DIM};
use crate::sim::ACTION_COUNT;

/// Shape of the policy/value network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    pub other_obs_dim: usize,
    pub ego_dim: usize,
    pub lstm_hidden: usize,
    pub fc_widths: [usize; 2],
    pub action_count: usize,
    pub max_sequence: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            other_obs_dim: OTHER_DIM,
            ego_dim: EGO_DIM,
            lstm_hidden: 64,
            fc_widths: [256, 256],
            action_count: ACTION_COUNT,
            max_sequence: DEFAULT_MAX_OTHERS,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        let dims = [
            self.other_obs_dim,
            self.ego_dim,
            self.lstm_hidden,
            self.fc_widths[0],
            self.fc_widths[1],
            self.action_count,
            self.max_sequence,
        ];
        if dims.contains(&0) {
            return Err(NetError::InvalidConfig(format!(
                "all dimensions must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// Width of the vector the LSTM cell sees each step: `[h, x]`.
    pub fn lstm_input(&self) -> usize {
        self.lstm_hidden + self.other_obs_dim
    }

    /// Width of the feed-forward input `[h_n, ego]`.
    pub fn encoded_dim(&self) -> usize {
        self.lstm_hidden + self.ego_dim
    }
}
