#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(p) = cofj::parse_program(text) else {
        return;
    };
    let printed = p.to_string();
    let q = cofj::parse_program(&printed).expect("printed program reparses");
    assert_eq!(p, q);
    // Validation must not panic either.
    let _ = cofj::classtable::Program::from_source(p);
});
