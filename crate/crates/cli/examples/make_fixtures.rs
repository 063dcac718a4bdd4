//! Regenerates the synthetic illiquid price files in `fixtures/`.
//!
//! cargo run -p illiquid --example make_fixtures

use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use illiquid_core::markov::{State, TransitionMatrix};
use illiquid_core::regime::{simulate_combined, CombinedParams, SdeParams, WindowInfo, DEFAULT_DIVERGENCE_CEILING};
use illiquid_core::rng::stream;
use illiquid_core::sde::{GbmParams, XouParams};
use illiquid_core::timeseries::{weekday_calendar, PriceSeries};

struct Fixture {
    name: &'static str,
    sde: SdeParams,
    p: f64,
    q: f64,
    s0: f64,
    days: usize,
    seed: u64,
    wsj: bool,
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&dir).unwrap();
    let specs = [
        Fixture {
            name: "illiquid_gbm_a",
            sde: SdeParams::Gbm(GbmParams::new(0.0005, 0.02)),
            p: 0.8,
            q: 0.6,
            s0: 25.0,
            days: 400,
            seed: 1,
            wsj: true,
        },
        Fixture {
            name: "illiquid_gbm_b",
            sde: SdeParams::Gbm(GbmParams::new(-0.0003, 0.03)),
            p: 0.9,
            q: 0.3,
            s0: 140.0,
            days: 400,
            seed: 2,
            wsj: false,
        },
        Fixture {
            name: "illiquid_xou_a",
            sde: SdeParams::Xou(XouParams::new(0.05, 40f64.ln(), 0.02, 1.0)),
            p: 0.7,
            q: 0.7,
            s0: 38.0,
            days: 400,
            seed: 3,
            wsj: true,
        },
        Fixture {
            name: "illiquid_xou_b",
            sde: SdeParams::Xou(XouParams::new(0.1, 12f64.ln(), 0.04, 1.0)),
            p: 0.85,
            q: 0.5,
            s0: 11.0,
            days: 400,
            seed: 4,
            wsj: false,
        },
    ];
    let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    for s in specs {
        let dates: Vec<NaiveDate> = weekday_calendar(start, start + chrono::Days::new(s.days as u64 * 2))
            .into_iter()
            .take(s.days)
            .collect();
        let w = PriceSeries::from_parts(&dates[..2], &[1.0, 2.0]).unwrap();
        let params = CombinedParams {
            sde: s.sde,
            chain: TransitionMatrix::new(s.p, s.q).unwrap(),
            sde_window: WindowInfo::of(&w, true),
            chain_window: WindowInfo::of(&w, false),
        };
        let path = simulate_combined(&params, s.s0, State::Move, s.days - 1, &mut stream(s.seed), DEFAULT_DIVERGENCE_CEILING);
        let mut closes = vec![s.s0];
        closes.extend(path.closes.iter().map(|c| (c * 100.0).round() / 100.0));
        let mut out = String::new();
        if s.wsj {
            out.push_str("Date, Open, High, Low, Close, Volume\n");
            for (d, c) in dates.iter().zip(&closes).rev() {
                writeln!(out, "{},{c:.2},{c:.2},{c:.2},{c:.2},{}", d.format("%m/%d/%Y"), 1000).unwrap();
            }
        } else {
            out.push_str("date,close\n");
            for (d, c) in dates.iter().zip(&closes) {
                writeln!(out, "{d},{c}").unwrap();
            }
        }
        std::fs::write(dir.join(format!("{}.csv", s.name)), out).unwrap();
    }
}
