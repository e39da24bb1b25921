#![no_main]

use libfuzzer_sys::fuzz_target;
use ncb_cli::Document;
use ncb_core::opsys::SystemOptions;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = Document::parse(text) else { return };
    if let Ok((n, span)) = doc.opsys_span() {
        if n <= 4 && span.len() <= 16 {
            let _ = doc.to_opsys(SystemOptions::default());
        }
    }
});
