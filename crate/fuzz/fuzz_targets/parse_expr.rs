#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(e) = cofj::parse_expr(text) else {
        return;
    };
    let q = cofj::parse_expr(&e.to_string()).expect("printed expression reparses");
    assert_eq!(e, q);
});
