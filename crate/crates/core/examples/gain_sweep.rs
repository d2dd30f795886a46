//! Trains position-mode policies across a range of PD gain scales next to a
//! torque-mode policy on the same budget, and prints the final rewards.
//!
//! cargo run --release --example gain_sweep -- [samples per cell] [task squat|walk]

use tbrl::env::{ActionMode, Task};
use tbrl::harness::{create_run_dir, train_cells, Cell, RunConfig};

fn main() {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let samples: u64 = args.next().map(|s| s.parse().expect("samples")).unwrap_or(100_000);
    let task: Task = args.next().map(|s| s.parse().expect("task")).unwrap_or(Task::Walk);
    let base = RunConfig { task, total_samples: samples, out_dir: std::env::temp_dir().join("tbrl-gain-sweep"), ..RunConfig::default() };
    let dir = create_run_dir(&base.out_dir, "sweep").expect("run dir");

    let mut cells: Vec<Cell> = [0.25, 1.0, 4.0, 16.0]
        .into_iter()
        .map(|s_p| Cell::new(format!("position-sp{s_p}"), RunConfig { mode: ActionMode::Position, s_p, ..base.clone() }))
        .collect();
    cells.push(Cell::new("torque", RunConfig { mode: ActionMode::Torque, ..base.clone() }));

    let results = train_cells(&cells, &dir, 1);
    println!("{task}, {samples} samples per cell ({})", dir.display());
    for r in &results {
        let note = r.error.as_deref().unwrap_or("");
        // Episode reward is NaN when no episode ended in the last tenth of the budget.
        let episode = if r.final_reward.is_nan() { "    n/a".to_string() } else { format!("{:>7.1}", r.final_reward) };
        println!("  {:<18} final reward {episode}  per step {:.3} {note}", r.label, r.final_step_reward);
    }
}
