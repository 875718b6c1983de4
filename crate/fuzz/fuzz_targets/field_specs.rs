#![no_main]

use conformal_poisson_cli::{KSpec, VSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(k) = KSpec::parse(text) {
        let _ = k.build(3);
    }
    let _ = VSpec::parse(text);
});
