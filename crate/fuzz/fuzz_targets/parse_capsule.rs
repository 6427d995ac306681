#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(c) = cofj::parse_capsule(text) else {
        return;
    };
    let d = cofj::parse_capsule(&c.to_string()).expect("printed capsule reparses");
    assert_eq!(d, c.canonical());
    assert_eq!(d.canonical(), d);
});
