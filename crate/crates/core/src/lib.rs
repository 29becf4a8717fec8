pub mod cli;
pub mod gate;
pub mod model;
pub mod optimizer;
pub mod propagator;
pub mod relay;
pub mod scenario;
pub mod units;
pub mod verify;
pub mod waveform;
