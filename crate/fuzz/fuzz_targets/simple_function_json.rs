#![no_main]

use libfuzzer_sys::fuzz_target;
use lorentz_core::{LorentzIndex, SimpleFunction};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = serde_json::from_str::<SimpleFunction>(text) {
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<SimpleFunction>(&json).unwrap(), g);
    }
    if let Ok(idx) = serde_json::from_str::<LorentzIndex>(text) {
        assert!(idx.p_conj() > &lorentz_core::rational::int(1) || idx.p().is_infinite());
    }
});
