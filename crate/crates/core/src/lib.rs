pub mod classifier;
pub mod collector;
pub mod machine;
pub mod metrics;
pub mod roofline;
pub mod workloads;
pub mod cli;
