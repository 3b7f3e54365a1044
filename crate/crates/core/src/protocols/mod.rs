//! End-to-end pipelines built from the optics and detection blocks.

mod events;
mod params;
mod swap;
mod sweep;
mod teleport;

pub use events::{error_event_probs, simulated_error_events, ErrorEvents};
pub use params::ExperimentParams;
pub use swap::{
    lo_swap, sfg_herald, sfg_swap, visibility_x, visibility_z, CoincidenceTable, SfgHerald,
    VisibilityReport,
};
pub use sweep::{format_sig, run_sweep};
pub use teleport::{
    coherent_polarized, qfc_teleport_strong_pump, teleport, QfcReport, TeleportReport,
};
