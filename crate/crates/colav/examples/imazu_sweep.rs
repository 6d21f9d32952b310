//! Run the full 22-case Imazu benchmark under the supervised guidance law
//! and print a one-line summary per case.

use colav::scenario::{imazu_case, METERS_PER_NMI};
use colav::sim::{simulate, Algorithm};

fn main() {
    let algorithm = match std::env::args().nth(1).as_deref() {
        Some("vo") => Algorithm::Vo,
        _ => Algorithm::Proposed,
    };
    let start = std::time::Instant::now();
    for n in 1..=22u32 {
        let sc = imazu_case(n).expect("built-in case");
        let t0 = std::time::Instant::now();
        let res = simulate(&sc, algorithm);
        let j1 = res
            .records
            .iter()
            .map(|r| r.d_min)
            .fold(f64::INFINITY, f64::min);
        let verdict = if j1 >= sc.c_s { "pass" } else { "FAIL" };
        println!(
            "case {n:2}: min dist {:9.6} nmi ({:8.3} m) {verdict}  status {:?}  switches {:2}  sat {}  wall {:.2?}",
            j1 / METERS_PER_NMI,
            j1,
            res.status,
            res.switch_log.len(),
            res.saturation_count,
            t0.elapsed(),
        );
    }
    println!("total wall time {:.2?}", start.elapsed());
}
