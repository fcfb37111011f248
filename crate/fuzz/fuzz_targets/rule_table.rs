#![no_main]

use crane_core::fuzzy::FuzzyRuleTable;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = text.parse::<FuzzyRuleTable>() {
        assert_eq!(table.to_string().parse::<FuzzyRuleTable>().unwrap(), table);
    }
});
