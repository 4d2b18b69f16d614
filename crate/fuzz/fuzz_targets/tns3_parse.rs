//! Feeds arbitrary bytes to the TNS3 parser: it must reject or accept
//! without panicking, and never allocate past its entry budget.

#![no_main]

use libfuzzer_sys::fuzz_target;
use ttensor::io::parse_tensor;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_tensor(text);
    }
});
