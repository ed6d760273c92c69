//! The built-in scenarios, shipped as files under `scenarios/`.

use crate::error::CliResult;
use crate::report::Report;
use crate::scenario::{run, RunOptions, Scenario};

pub const GALLERY: [(&str, &str); 7] = [
    ("pseudosphere", include_str!("../scenarios/pseudosphere.json")),
    ("pseudosphere-backlund", include_str!("../scenarios/pseudosphere-backlund.json")),
    ("lie-transform", include_str!("../scenarios/lie-transform.json")),
    ("cylinder-darboux", include_str!("../scenarios/cylinder-darboux.json")),
    ("catenoid-christoffel", include_str!("../scenarios/catenoid-christoffel.json")),
    ("discrete-darboux-plane", include_str!("../scenarios/discrete-darboux-plane.json")),
    ("discrete-t-transform", include_str!("../scenarios/discrete-t-transform.json")),
];

pub fn scenarios() -> CliResult<Vec<Scenario>> {
    GALLERY.iter().map(|(_, text)| Scenario::from_json(text)).collect()
}

/// Runs every gallery scenario; each writes into its own directory.
pub fn gallery(opts: &RunOptions) -> CliResult<Report> {
    let mut report = Report::new(serde_json::json!({ "gallery": GALLERY.map(|(n, _)| n) }));
    for s in scenarios()? {
        let mut r = run(&s, opts)?;
        for e in &mut r.entries {
            e.name = format!("{}/{}", s.name, e.name);
        }
        r.notes = r.notes.into_iter().map(|n| format!("{}: {n}", s.name)).collect();
        report.absorb(r);
    }
    report.recompute();
    Ok(report)
}
