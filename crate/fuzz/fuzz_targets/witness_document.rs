#![no_main]

use libfuzzer_sys::fuzz_target;
use ncb_cli::Document;
use ncb_core::classify::witness_defects;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = Document::parse(text) else { return };
    if let Ok(w) = doc.to_witness() {
        let _ = witness_defects(&w);
    }
});
