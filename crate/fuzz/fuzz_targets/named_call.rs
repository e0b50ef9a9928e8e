#![no_main]

use libfuzzer_sys::fuzz_target;
use nussbaum_pi::expr::parse_named_call;

fuzz_target!(|data: &str| {
    let _ = parse_named_call(data);
});
