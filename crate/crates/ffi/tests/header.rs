//! Guards the generated C header that ships with the crate.

use std::path::Path;

#[test]
fn generated_header_declares_the_public_surface() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/twoway_qkd.h");
    let header = std::fs::read_to_string(&path).expect("build.rs regenerates the header");
    assert!(header.contains("#ifndef TWOWAY_QKD_H"));
    for symbol in [
        "TwqConfig",
        "TwqTranscript",
        "twq_config_new",
        "twq_config_set",
        "twq_config_free",
        "twq_run",
        "twq_transcript_verdict",
        "twq_transcript_qber",
        "twq_transcript_save",
        "twq_transcript_free",
        "twq_fidelity_bound",
        "twq_critical_info",
        "twq_critical_mu",
        "twq_eve_info",
        "twq_last_error",
        "TWQ_OK",
        "TWQ_VERDICT_ACCEPTED",
    ] {
        assert!(header.contains(symbol), "header lacks {symbol}");
    }
}
