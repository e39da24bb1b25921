#![no_main]

use libfuzzer_sys::fuzz_target;
use ncb_cli::Document;
use ncb_core::opsys::{build_opsys, SystemOptions};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = Document::parse(text) else { return };
    if let Ok(seq) = doc.to_params() {
        if seq.d() <= 8 && seq.len() <= 3 && seq.target_dims().iter().all(|&n| n <= 3) {
            let _ = build_opsys(&seq, SystemOptions::default());
        }
    }
});
