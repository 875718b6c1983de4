#![no_main]

use conformal_poisson_cli::{Command, RunConfig};
use libfuzzer_sys::fuzz_target;

const COMMANDS: [Command; 8] = [
    Command::VerifyInequality,
    Command::Carleman,
    Command::Solve,
    Command::Continuation,
    Command::KazdanWarner,
    Command::TrialEnergy,
    Command::BlowupDiagnostic,
    Command::GridConvergence,
];

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = RunConfig::from_json(text) else { return };
    for cmd in COMMANDS {
        if let Ok(resolved) = cfg.clone().resolve(cmd) {
            // the echoed config must parse back to itself
            let echo = serde_json::to_string(&resolved).unwrap();
            assert_eq!(RunConfig::from_json(&echo).unwrap(), resolved);
        }
    }
});
