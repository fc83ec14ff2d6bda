#![no_main]

use libfuzzer_sys::fuzz_target;
use lorentz_core::AtomId;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(a) = text.parse::<AtomId>() {
        assert_eq!(a.to_string().parse::<AtomId>().ok(), Some(a));
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<AtomId>(&json).ok(), Some(a));
    }
});
