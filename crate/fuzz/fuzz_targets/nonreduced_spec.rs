#![no_main]

use libfuzzer_sys::fuzz_target;
use ncb_cli::Document;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = Document::parse(text) else { return };
    if let Ok(spec) = doc.to_nonreduced() {
        let back = Document::from_nonreduced(&spec);
        assert!(back.to_nonreduced().is_ok());
    }
});
