//! Parse a small flight file with a few bad rows, clean it for one
//! airport and print the conservation report.

use congestion::ingest::{clean, parse_records, ColumnMapping, IngestReport};
use congestion::series::SeriesConfig;

const DATA: &str = "\
flight_id,origin,destination,sched_dep,actual_dep,sched_arr,actual_arr,dep_delay_s
CZ301,CAN,PEK,2023-03-01T08:00,2023-03-01T08:12,2023-03-01T11:05,2023-03-01T11:20,720
CZ302,PEK,CAN,2023-03-01T13:00,2023-03-01T13:40,2023-03-01T16:10,2023-03-01T16:55,2400
CZ303,CAN,SHA,2023-03-01T09:00,,2023-03-01T11:10,,
CZ304,CAN,CAN,2023-03-01T09:00,2023-03-01T09:00,2023-03-01T10:00,2023-03-01T10:00,0
CZ305,CAN,XIY,2023-03-01T02:10,2023-03-01T02:20,2023-03-01T05:00,2023-03-01T05:10,600
MU555,PVG,PEK,2023-03-01T10:00,2023-03-01T10:05,2023-03-01T12:20,2023-03-01T12:30,300
CZ306,CAN,KMG,2023-03-01T23:30,2023-03-02T00:40,2023-03-02T02:10,2023-03-02T03:15,4200
";

fn main() {
    let parsed = parse_records(DATA.as_bytes(), &ColumnMapping::default()).expect("readable input");
    for reject in &parsed.rejects {
        println!("line {}: {}", reject.line, reject.reason);
    }
    let airport = "CAN".parse().unwrap();
    let cleaned = clean(parsed.records.iter().cloned(), airport, &SeriesConfig::default());
    let report = IngestReport::new(&parsed, &cleaned);
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    for m in cleaned.movements() {
        println!("{:?} at {} delayed {:+.0} min", m.role, m.actual, m.delay_min());
    }
}
