//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Criteria run one after another so each
//! elapsed time is its own.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use excode_core::fixtures::{self, Fixture};
use excode_core::sim::{RandomScenario, TraceEvent};
use excode_core::{
    build_topology, run, xor_decode, xor_encode, MetricsReport, NativePacket, NodeId, PacketUid, Position, Route,
    Scheme, SimTime, TraceLog,
};
use excode_sim::{write_csv, Row};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

/// Number of random fields in the decode-correctness sweep.
const SWEEP_SEEDS: u64 = 100;
/// Seeds averaged for the throughput and delay orderings.
const ORDER_SEEDS: u64 = 20;
const ORDER_FLOWS: usize = 10;
/// Relative band allowed on each mean ordering.
const BAND: f64 = 0.01;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Every report produced by the suite, for the invariant criterion.
#[derive(Default)]
struct Ledger {
    reports: Vec<(String, MetricsReport)>,
}

impl Ledger {
    fn run(&mut self, tag: &str, scenario: excode_core::Scenario) -> (MetricsReport, TraceLog) {
        let (m, t) = run(scenario).expect("acceptance scenarios are valid");
        self.reports.push((tag.to_string(), m.clone()));
        (m, t)
    }

    fn fixture(&mut self, f: &Fixture) -> (MetricsReport, TraceLog) {
        let tag = format!("{}/{}", f.name, f.scenario.scheme);
        self.run(&tag, f.scenario.clone())
    }
}

fn encoders(trace: &TraceLog) -> Vec<NodeId> {
    trace
        .records()
        .iter()
        .filter(|r| r.event == TraceEvent::Encode)
        .map(|r| r.node)
        .collect()
}

fn decoders(trace: &TraceLog) -> Vec<NodeId> {
    let mut v: Vec<NodeId> = trace
        .records()
        .iter()
        .filter(|r| r.event == TraceEvent::Decode)
        .map(|r| r.node)
        .collect();
    v.sort();
    v.dedup();
    v
}

fn complete(m: &MetricsReport) -> bool {
    m.delivered == m.generated && m.payload_mismatches == 0 && m.decode_failures == 0
}

fn chain(l: &mut Ledger) -> Outcome {
    let mut tx = Vec::new();
    let mut pass = true;
    for (scheme, want) in [(Scheme::NonCoding, 4), (Scheme::Excode, 3), (Scheme::Cope, 3)] {
        let (m, _) = l.fixture(&fixtures::chain(scheme));
        pass &= m.total_tx == want && complete(&m);
        tx.push(format!("{scheme}={}", m.total_tx));
    }
    outcome(pass, format!("transmissions {}", tx.join(" ")))
}

fn relay_with_remote_destinations(l: &mut Ledger) -> Outcome {
    let f = fixtures::remote_destinations(Scheme::Excode);
    let dsts: Vec<NodeId> = f.scenario.flows.iter().map(|fl| fl.dst).collect();
    let (m, trace) = l.fixture(&f);
    let enc = encoders(&trace);
    let dec = decoders(&trace);
    let excode_ok = enc == vec![f.relay] && dsts.iter().all(|d| dec.contains(d)) && complete(&m);

    let (c, _) = l.fixture(&fixtures::remote_destinations(Scheme::Cope));
    let cope_ok = c.encode_count == 0 && complete(&c);
    outcome(
        excode_ok && cope_ok,
        format!(
            "excode encodes at {:?} (relay {}), destinations {:?} decode; cope encodes {}",
            enc.iter().map(|n| f.labels[n.index()]).collect::<Vec<_>>(),
            f.labels[f.relay.index()],
            dsts.iter().map(|n| f.labels[n.index()]).collect::<Vec<_>>(),
            c.encode_count
        ),
    )
}

fn long_crossing_flows(l: &mut Ledger) -> Outcome {
    let f = fixtures::crossing_flows(Scheme::Excode);
    let topology = f.scenario.validate().expect("fixture is valid");
    let routes = f.scenario.routes(&topology).expect("fixture is connected");
    let min_hops = routes.iter().map(|r| r.hops()).min().unwrap_or(0);
    let interior = routes
        .iter()
        .all(|r| matches!(r.position_of(f.relay), Some(i) if i > 0 && i < r.hops()));
    let (m, trace) = l.fixture(&f);
    let enc = encoders(&trace);
    let excode_ok = !enc.is_empty() && enc.iter().all(|&n| n == f.relay) && complete(&m);
    let (c, _) = l.fixture(&fixtures::crossing_flows(Scheme::Cope));
    let cope_ok = c.encode_count == 0 && complete(&c);
    outcome(
        min_hops >= 5 && interior && excode_ok && cope_ok,
        format!(
            "min hops {min_hops}; excode encodes {} at relay {}, payload mismatches {}; cope encodes {}",
            m.encode_count,
            f.labels[f.relay.index()],
            m.payload_mismatches + c.payload_mismatches,
            c.encode_count
        ),
    )
}

fn sweep_flows(seed: u64) -> usize {
    1 + (seed % 8) as usize
}

/// Reports for the random sweep, indexed `[seed][scheme]` in `Scheme::ALL`
/// order (excode, cope, none).
fn random_sweep(l: &mut Ledger) -> Vec<[MetricsReport; 3]> {
    (0..SWEEP_SEEDS)
        .map(|seed| {
            let params = RandomScenario {
                flows: sweep_flows(seed),
                ..RandomScenario::default()
            };
            Scheme::ALL.map(|scheme| {
                let scenario = params.build(scheme, seed).expect("random field is valid");
                l.run(&format!("sweep/{scheme}/{seed}"), scenario).0
            })
        })
        .collect()
}

fn decode_correctness(sweep: &[[MetricsReport; 3]]) -> Outcome {
    let failures: u64 = sweep.iter().flatten().map(|m| m.decode_failures).sum();
    let mismatches: u64 = sweep.iter().flatten().map(|m| m.payload_mismatches).sum();
    let encodes: u64 = sweep.iter().flatten().map(|m| m.encode_count).sum();
    outcome(
        failures == 0 && mismatches == 0 && sweep.len() as u64 >= 100,
        format!(
            "{} scenarios x 3 schemes, {encodes} encodes, decode failures {failures}, payload mismatches {mismatches}",
            sweep.len()
        ),
    )
}

fn opportunity_superset(sweep: &[[MetricsReport; 3]]) -> Outcome {
    let losers: Vec<u64> = sweep
        .iter()
        .filter(|r| r[0].encode_count < r[1].encode_count)
        .map(|r| r[0].seed)
        .collect();
    let mean_flows = sweep.iter().map(|r| r[0].flows as f64).sum::<f64>() / sweep.len() as f64;
    let gap = |rows: &[&[MetricsReport; 3]]| {
        let n = rows.len().max(1) as f64;
        rows.iter()
            .map(|r| r[0].encoded_fraction - r[1].encoded_fraction)
            .sum::<f64>()
            / n
    };
    let all: Vec<&[MetricsReport; 3]> = sweep.iter().collect();
    let loaded: Vec<&[MetricsReport; 3]> = sweep.iter().filter(|r| r[0].flows >= 4).collect();
    let (g_all, g_loaded) = (gap(&all), gap(&loaded));
    outcome(
        losers.is_empty() && mean_flows >= 4.0 && g_all > 0.0 && g_loaded > 0.0,
        format!(
            "pairs with fewer excode encodes {:?}; mean flows {mean_flows:.2}; encoded fraction gap {g_all:.4} (all), {g_loaded:.4} (flows >= 4)",
            losers
        ),
    )
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n.max(1) as f64
}

fn orderings(l: &mut Ledger) -> Outcome {
    let params = RandomScenario {
        flows: ORDER_FLOWS,
        ..RandomScenario::default()
    };
    let runs: Vec<[MetricsReport; 3]> = (0..ORDER_SEEDS)
        .map(|seed| {
            Scheme::ALL.map(|scheme| {
                let scenario = params.build(scheme, seed).expect("random field is valid");
                l.run(&format!("order/{scheme}/{seed}"), scenario).0
            })
        })
        .collect();
    let thr = [0, 1, 2].map(|i| mean(runs.iter().map(|r| r[i].throughput_kbps)));
    let delay = [0, 1, 2].map(|i| mean(runs.iter().filter_map(|r| r[i].mean_delay_s)));
    let ok_thr = thr[0] >= thr[1] * (1.0 - BAND) && thr[1] >= thr[2] * (1.0 - BAND);
    let ok_delay = delay[0] <= delay[2] * (1.0 + BAND);
    let gain = |a: f64, b: f64| 100.0 * (a / b - 1.0);
    outcome(
        ok_thr && ok_delay,
        format!(
            "{ORDER_SEEDS} seeds, {ORDER_FLOWS} flows: throughput kb/s excode {:.1} cope {:.1} none {:.1} \
             (excode {:+.2}% vs cope, {:+.2}% vs none); delay s excode {:.3} cope {:.3} none {:.3} ({:+.2}% vs none)",
            thr[0],
            thr[1],
            thr[2],
            gain(thr[0], thr[1]),
            gain(thr[0], thr[2]),
            delay[0],
            delay[1],
            delay[2],
            gain(delay[0], delay[2]),
        ),
    )
}

fn xor_properties() -> Outcome {
    let positions: Vec<Position> = (0..4).map(|i| Position::new(150.0 * i as f64, 0.0)).collect();
    let t = build_topology(&positions, 200.0).expect("line topology");
    let native = |flow: u32, seq: u64, path: [u32; 3], payload: Vec<u8>| {
        let route = Route::new(&t, path.into_iter().map(NodeId).collect()).expect("valid path");
        NativePacket::new(PacketUid::new(flow, seq), route, Arc::from(payload), SimTime(seq))
    };
    let pairs = (1usize..1500).prop_flat_map(|n| {
        (
            prop::collection::vec(any::<u8>(), n),
            prop::collection::vec(any::<u8>(), n),
            0u64..1_000_000,
        )
    });
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let result = runner.run(&pairs, |(a, b, seq)| {
        let p = native(0, seq, [0, 1, 2], a.clone());
        let q = native(1, seq + 1, [3, 2, 1], b.clone());
        let pq = xor_encode(&p, &q).expect("same length, different flows");
        let qp = xor_encode(&q, &p).expect("same length, different flows");
        // commutative payload
        prop_assert_eq!(&pq.payload[..], &qp.payload[..]);
        // XOR is its own inverse
        let twice: Vec<u8> = pq.payload.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        prop_assert_eq!(&twice[..], &a[..]);
        // decode recovers each side exactly
        prop_assert_eq!(xor_decode(&pq, &q).expect("q is a constituent"), p.clone());
        prop_assert_eq!(xor_decode(&qp, &p).expect("p is a constituent"), q.clone());
        Ok(())
    });
    match result {
        Ok(()) => outcome(true, "1000 random payload pairs: roundtrip, commutativity, involution"),
        Err(e) => outcome(false, format!("{e}")),
    }
}

fn csv_bytes(m: &MetricsReport) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&[Row::from(m)], &mut buf).expect("writing to memory");
    buf
}

fn determinism(l: &mut Ledger) -> Outcome {
    let params = RandomScenario {
        flows: ORDER_FLOWS,
        duration: 30.0,
        ..RandomScenario::default()
    };
    let mut pass = true;
    let mut digests = Vec::new();
    for scheme in Scheme::ALL {
        // seed 1 codes under excode within 30 s
        let mut scenario = params.build(scheme, 1).expect("random field is valid");
        scenario.keep_trace = true;
        let (m1, t1) = l.run(&format!("determinism/{scheme}/a"), scenario.clone());
        let (m2, t2) = l.run(&format!("determinism/{scheme}/b"), scenario);
        pass &= t1.digest() == t2.digest() && t1.render() == t2.render() && csv_bytes(&m1) == csv_bytes(&m2);
        if scheme == Scheme::Excode {
            pass &= m1.encode_count > 0;
        }
        digests.push(format!("{scheme}={:016x} ({} encodes)", t1.digest(), m1.encode_count));
    }
    outcome(pass, format!("trace digests {}", digests.join(" ")))
}

fn invariants(l: &Ledger) -> Outcome {
    let bad: Vec<&str> = l
        .reports
        .iter()
        .filter(|(_, m)| !m.invariants_hold())
        .map(|(tag, _)| tag.as_str())
        .collect();
    let conservation: u64 = l.reports.iter().map(|(_, m)| m.conservation_violations).sum();
    let fifo: u64 = l.reports.iter().map(|(_, m)| m.fifo_violations).sum();
    outcome(
        bad.is_empty(),
        format!(
            "{} runs checked, conservation violations {conservation}, FIFO violations {fifo}, failing runs {:?}",
            l.reports.len(),
            bad
        ),
    )
}

fn report(id: u32, name: &str, limit: Duration, started: Instant, o: Outcome, all: &mut bool) {
    let elapsed = started.elapsed();
    let pass = o.pass && elapsed <= limit;
    *all &= pass;
    println!(
        "C{id} {} {name}: {} [{:.2} s / limit {} s]",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut l = Ledger::default();
    let mut all = true;

    let t = Instant::now();
    let o = chain(&mut l);
    report(1, "chain", secs(1), t, o, &mut all);

    let t = Instant::now();
    let o = relay_with_remote_destinations(&mut l);
    report(2, "remote destinations", secs(1), t, o, &mut all);

    let t = Instant::now();
    let o = long_crossing_flows(&mut l);
    report(3, "long crossing flows", secs(1), t, o, &mut all);

    let t = Instant::now();
    let sweep = random_sweep(&mut l);
    let o = decode_correctness(&sweep);
    report(4, "random decode correctness", secs(120), t, o, &mut all);

    // reuses the sweep above; the time shown is for the comparison only
    let t = Instant::now();
    let o = opportunity_superset(&sweep);
    report(5, "opportunity superset", secs(120), t, o, &mut all);

    let t = Instant::now();
    let o = orderings(&mut l);
    report(6, "throughput and delay ordering", secs(300), t, o, &mut all);

    let t = Instant::now();
    let o = xor_properties();
    report(7, "xor properties", secs(5), t, o, &mut all);

    let t = Instant::now();
    let o = determinism(&mut l);
    report(8, "determinism", secs(60), t, o, &mut all);

    let t = Instant::now();
    let o = invariants(&l);
    report(9, "invariants", secs(1), t, o, &mut all);

    if all {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
