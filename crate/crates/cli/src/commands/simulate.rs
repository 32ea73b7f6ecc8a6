use qalign_core::sim::{simulate_panel, PanelConfig, Rating, RaterMode, PANEL_RNG};
use qalign_core::wire::NamedLevels;
use serde::Serialize;

use crate::args::SimulateArgs;
use crate::io::{output, write_line};
use crate::Outcome;

#[derive(Debug, Serialize)]
struct PanelRecord<'a> {
    panel: u64,
    seed: u64,
    rng: &'a str,
    mode: RaterMode,
    ratings: Vec<Rating>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frequencies: Option<NamedLevels<f64>>,
    mos: f64,
}

pub fn run(args: &SimulateArgs) -> anyhow::Result<Outcome> {
    let mut out = output(args.out.as_deref())?;
    for panel in 0..args.panels {
        let seed = args.seed.wrapping_add(panel);
        let config = PanelConfig::new(args.raters, args.mode.into(), args.true_score, args.noise, seed)?;
        let (ratings, result) = simulate_panel(&config);
        let record = PanelRecord {
            panel,
            seed,
            rng: PANEL_RNG,
            mode: config.mode,
            ratings,
            frequencies: result.frequencies,
            mos: result.mos,
        };
        write_line(&mut out, &record)?;
    }
    out.flush()?;
    Ok(Outcome { ok: args.panels as usize, ..Outcome::default() })
}
