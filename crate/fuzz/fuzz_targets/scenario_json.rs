#![no_main]

use crane_core::scenario::ScenarioFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = ScenarioFile::parse(text) {
        // whatever parses must print and re-parse to the same thing
        let again = ScenarioFile::parse(&file.to_json()).expect("printed config re-parses");
        assert_eq!(again.to_json(), file.to_json());
        let _ = file.validate();
    }
});
