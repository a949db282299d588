use crate::config::AgentConfig;

/// Step-wise decayed exploration temperature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TemperatureSchedule {
    pub initial: f64,
    pub rate: f64,
    pub every: u64,
}

impl TemperatureSchedule {
    pub fn from_agent(cfg: &AgentConfig) -> Self {
        Self {
            initial: cfg.temp_initial,
            rate: cfg.temp_decay_rate,
            every: cfg.temp_decay_every,
        }
    }

    pub fn at(&self, step: u64) -> f64 {
        temperature(step, self.initial, self.rate, self.every)
    }
}

/// `initial * rate^floor(step / every)`.
pub fn temperature(step: u64, initial: f64, rate: f64, every: u64) -> f64 {
    let k = (step / every.max(1)).min(i32::MAX as u64) as i32;
    initial * rate.powi(k)
}
