use ncb_cli::document::{Document, Kind};
use ncb_core::classify::{witness_defects, EquivalenceWitness};
use ncb_core::matlin::{identity, pauli};
use ncb_core::nonreduced::random_spec;
use ncb_core::opsys::{random_param_sequence, OperatorSystem, SystemOptions, VerifyOptions};
use proptest::prelude::*;

fn reparse(doc: &Document) -> Document {
    Document::parse(&doc.to_json()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn params_round_trip(seed in any::<u64>(), two in any::<bool>()) {
        let dims: &[usize] = if two { &[1, 2] } else { &[2] };
        let seq = random_param_sequence(3, dims, seed, &VerifyOptions::default()).unwrap();
        let doc = Document::from_params(&seq);
        let back = reparse(&doc);
        prop_assert_eq!(&back, &doc);
        let seq2 = back.to_params().unwrap();
        prop_assert_eq!(seq2.target_dims(), seq.target_dims());
        for (a, b) in seq.maps().iter().zip(seq2.maps()) {
            prop_assert_eq!(a.generators(), b.generators());
        }
    }

    #[test]
    fn nonreduced_round_trip(seed in 0u64..1000) {
        let spec = random_spec(2, &[1, 1], &[1], seed, &VerifyOptions::default()).unwrap();
        let doc = Document::from_nonreduced(&spec);
        let back = reparse(&doc).to_nonreduced().unwrap();
        prop_assert_eq!(back.n_gamma(), spec.n_gamma());
        prop_assert_eq!(back.n_omega(), spec.n_omega());
        prop_assert_eq!(back.omega[0].generators(), spec.omega[0].generators());
        prop_assert_eq!(Document::from_nonreduced(&back), doc);
    }
}

#[test]
fn opsys_round_trip() {
    let s = OperatorSystem::from_spanning(2, &[identity(2), pauli::x(), pauli::z()], SystemOptions::default()).unwrap();
    let doc = Document::from_opsys(&s);
    assert_eq!(doc.kind, Kind::Opsys);
    let t = reparse(&doc).to_opsys(SystemOptions::default()).unwrap();
    assert!(t.space().same_span(s.space(), 1e-12));
}

#[test]
fn witness_round_trip() {
    let seq = random_param_sequence(3, &[2], 0, &VerifyOptions::default()).unwrap();
    let w = EquivalenceWitness::identity(&seq);
    let back = reparse(&Document::from_witness(&w)).to_witness().unwrap();
    assert_eq!(back.sigma, w.sigma);
    assert_eq!(back.theta, w.theta);
    assert!(witness_defects(&back).is_none());
}

#[test]
fn kind_mismatch_is_reported() {
    let seq = random_param_sequence(3, &[2], 0, &VerifyOptions::default()).unwrap();
    let doc = Document::from_params(&seq);
    let err = doc.to_opsys(SystemOptions::default()).unwrap_err();
    assert_eq!(err.to_string(), "expected kind \"opsys\", found \"params\"");
    assert!(doc.to_witness().is_err());
}

#[test]
fn unknown_version_is_rejected() {
    let text = r#"{"version":"ncb-2","kind":"report","payload":{}}"#;
    assert!(Document::parse(text).is_err());
    let text = r#"{"version":"ncb-1","kind":"bogus","payload":{}}"#;
    assert!(Document::parse(text).is_err());
}
