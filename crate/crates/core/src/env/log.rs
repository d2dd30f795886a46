use std::io::Write;

use serde::Serialize;

use super::{RandomizationSpec, Termination};

/// Summary of one finished episode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub ret: f64,
    /// Policy steps.
    pub length: usize,
    pub sim_time: f64,
    pub termination: Termination,
    /// Largest foot reaction magnitude over the episode, N.
    pub peak_force: f64,
    pub v_cmd: f64,
    /// Base x at the end of the episode, m.
    pub distance: f64,
    pub scales: RandomizationSpec,
}

pub const EPISODE_HEADER: &str = "episode,return,length,sim_time,termination,peak_force,v_cmd,distance,\
mass,inertia,com,damping,friction,motor_constant,delay,leg_length";

/// One CSV line (no trailing newline) matching [`EPISODE_HEADER`].
pub fn episode_csv_row(r: &EpisodeRecord) -> String {
    let scales: Vec<String> = r.scales.category_scales().iter().map(|v| format!("{v}")).collect();
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.episode,
        r.ret,
        r.length,
        r.sim_time,
        r.termination.as_str(),
        r.peak_force,
        r.v_cmd,
        r.distance,
        scales.join(",")
    )
}

pub fn write_episode_csv<W: Write>(rows: &[EpisodeRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{EPISODE_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", episode_csv_row(r))?;
    }
    Ok(())
}
