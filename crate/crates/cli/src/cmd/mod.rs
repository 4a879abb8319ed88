pub mod evaluate;
pub mod features;
pub mod separate;
pub mod sweep;
pub mod synth;
