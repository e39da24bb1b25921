#![no_main]

use libfuzzer_sys::fuzz_target;
use ncb_cli::Document;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(doc) = Document::parse(text) {
            let again = Document::parse(&doc.to_json()).expect("serialized document parses");
            assert_eq!(again.kind, doc.kind);
        }
    }
});
