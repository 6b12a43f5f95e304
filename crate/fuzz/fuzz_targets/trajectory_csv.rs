#![no_main]

use libfuzzer_sys::fuzz_target;
use vaa_observer::trajectory::TrajectoryRecord;

fuzz_target!(|data: &[u8]| {
    if let Ok(record) = TrajectoryRecord::read_csv(data) {
        let back = TrajectoryRecord::from_csv_str(&record.to_csv_string()).expect("re-read of written trajectory");
        assert_eq!(back, record);
    }
});
