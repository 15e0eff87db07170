//! Release acceptance run. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use twrn_core::allocator::{random_problem, solve_slot, SlotParams, SolverOptions};
use twrn_core::engine::{mean_and_stderr, run_episode, run_episodes, sweep, EpisodeMetrics, PolicyKind, SimConfig, SweepParam};
use twrn_core::fading::sample_gain_table;
use twrn_core::rates::{
    df_one_way_capacity, four_slot_one_way_sum_rate, harvested_energy, link_rate, two_slot_twrn_sum_rate, SubslotPartition,
};

/// Conservation sums are compared at this absolute tolerance; bounds and
/// the pre-arrival clipping are compared exactly.
const CONSERVATION_TOL: f64 = 1e-12;
const IDENTITY_TOL: f64 = 1e-12;
const SPOT_TOL: f64 = 1e-12;

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn twrn(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_twrn")).args(args).output().expect("binary runs")
}

fn oracle_equivalence() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let out = twrn(&[
        "oracle-check", "--count", "50", "-K", "2", "--grid", "25", "--tolerance", "0.02",
        "--out", dir.path().to_str().unwrap(),
    ]);
    let elapsed = start.elapsed();
    let report = fs::read_to_string(dir.path().join("oracle_check.csv")).unwrap_or_default();
    let worst = report
        .lines()
        .skip(1)
        .filter_map(|l| l.split(',').nth(5)?.parse::<f64>().ok())
        .fold(f64::INFINITY, f64::min);
    outcome(
        out.status.code() == Some(0) && elapsed < Duration::from_secs(60),
        format!("exit {:?}, worst relative gap {worst:.3e}, {:.1}s (limit 60s)", out.status.code(), elapsed.as_secs_f64()),
    )
}

fn monotone_sweeps() -> Outcome {
    let cfg = SimConfig { policy: PolicyKind::Optimal, ..SimConfig::default() };
    let values = [0.5, 1.0, 2.0, 4.0];
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for param in [SweepParam::BufferCapacity, SweepParam::BatteryCapacity] {
        let rows = sweep(&cfg, param, &values, 200).unwrap();
        let means: Vec<f64> = rows.iter().map(|r| r.mean).collect();
        pass &= means.windows(2).all(|w| w[1] >= w[0]);
        parts.push(format!("{}: {}", param.name(), means.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join(" <= ")));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    outcome(pass, format!("{}; {:.1}s (limit 300s)", parts.join("; "), elapsed.as_secs_f64()))
}

fn convergence() -> Outcome {
    let opts = SolverOptions::default();
    let mut pass = true;
    let mut worst = 0;
    for seed in 1..=20 {
        let p = random_problem(seed, 5, SlotParams::default(), 2.0, 1.0).unwrap();
        let sol = solve_slot(&p, &opts).unwrap();
        pass &= sol.all_converged && sol.max_iterations <= 200 && sol.trace.is_non_decreasing();
        worst = worst.max(sol.max_iterations);
    }
    outcome(pass, format!("20 instances, K=5, delta=1e-4: max {worst} inner iterations (cap 200), traces non-decreasing"))
}

fn check_episode(m: &EpisodeMetrics, violations: &mut Vec<String>) {
    let mut states = m.initial_states.clone();
    let mut delivered = 0.0;
    for (rec, after) in m.slots.iter().zip(&m.trajectory) {
        let o = &rec.outcome;
        let mut fail = |what: &str| violations.push(format!("seed {} slot {}: {what}", m.seed, rec.slot + 1));
        let (b, a) = (o.before, o.after);
        if b != states[o.relay] {
            fail("state handed to the slot differs from the carried state");
        }
        for (i, s) in after.iter().enumerate() {
            if i != o.relay && *s != states[i] {
                fail("unselected relay changed");
            }
            for q in [s.buf_a, s.buf_b] {
                if !(0.0..=q.capacity()).contains(&q.level()) {
                    fail("buffer out of [0, B_max]");
                }
            }
            if !(0.0..=s.battery.capacity()).contains(&s.battery.level()) {
                fail("battery out of [0, E_max]");
            }
        }
        for (q0, q1, offered, admitted, dropped, departed) in [
            (b.buf_a.level(), a.buf_a.level(), o.offered.r_ab, o.admitted.r_ab, o.dropped.r_ab, o.departed.r_ab),
            (b.buf_b.level(), a.buf_b.level(), o.offered.r_ba, o.admitted.r_ba, o.dropped.r_ba, o.departed.r_ba),
        ] {
            if departed > q0 {
                fail("departure exceeds the pre-arrival backlog");
            }
            if (q0 + admitted - departed - q1).abs() > CONSERVATION_TOL || (offered - admitted - dropped).abs() > CONSERVATION_TOL {
                fail("bit conservation");
            }
        }
        let (e0, e1) = (b.battery.level(), a.battery.level());
        if (o.harvested - o.stored - o.spilled).abs() > CONSERVATION_TOL || (e0 + o.stored - o.drawn - e1).abs() > CONSERVATION_TOL {
            fail("energy conservation");
        }
        if o.drawn > o.demand {
            fail("drew more than demanded");
        }
        delivered += o.departed.sum();
        states = after.clone();
    }
    if (delivered - m.sum_throughput).abs() > CONSERVATION_TOL {
        violations.push(format!("seed {}: throughput does not match departures", m.seed));
    }
}

fn conservation() -> Outcome {
    let b_values = [0.25, 0.5, 1.0, 2.0, 4.0];
    let e_values = [0.1, 0.5, 1.0, 2.0, 4.0, 8.0];
    let mut violations = Vec::new();
    let mut slots = 0;
    for i in 0..1000usize {
        let cfg = SimConfig {
            seed: 10_000 + i as u64,
            policy: PolicyKind::ALL[i % PolicyKind::ALL.len()],
            relays: 1 + i % 5,
            slots: 1 + (i * 7) % 8,
            buffer_capacity: b_values[i % b_values.len()],
            battery_capacity: e_values[(i / 3) % e_values.len()],
            mac_sum_constraint: i % 4 == 3,
            ..SimConfig::default()
        };
        let m = run_episode(&cfg).unwrap();
        slots += m.slots.len();
        check_episode(&m, &mut violations);
    }
    let detail = match violations.first() {
        None => format!("1000 episodes, {slots} slots, all policies: 0 violations (sums to {CONSERVATION_TOL:e})"),
        Some(v) => format!("{} violation(s), first: {v}", violations.len()),
    };
    outcome(violations.is_empty(), detail)
}

fn slot_structure() -> Outcome {
    let table = sample_gain_table(2024, 100, 2).unwrap();
    let mut worst = 0.0f64;
    for n in 0..100 {
        // SNRs spread over roughly -10..+30 dB
        let snr_sr = 10.0 * table.gain(n, 0).sr * table.gain(n, 1).sr;
        let snr_rd = 10.0 * table.gain(n, 0).rd * table.gain(n, 1).rd;
        let two = two_slot_twrn_sum_rate(snr_sr, snr_rd).unwrap();
        let four = four_slot_one_way_sum_rate(snr_sr, snr_rd).unwrap();
        worst = worst.max((two - 2.0 * four).abs());
    }
    outcome(worst <= IDENTITY_TOL, format!("100 SNR pairs: max |two-slot - 2 x four-slot| = {worst:e} (tol {IDENTITY_TOL:e})"))
}

fn spot_checks() -> Outcome {
    let df = df_one_way_capacity(1.0, 1.0).unwrap();
    let link = link_rate(1.0, 1.0).unwrap();
    let harvest = harvested_energy(SubslotPartition::new(0.5).unwrap(), 1.0, 1.0, 1.0, 1.0, 0.8).unwrap();
    let pass = (df - 0.5).abs() <= SPOT_TOL && (link - 1.0).abs() <= SPOT_TOL && (harvest - 0.8).abs() <= SPOT_TOL;
    outcome(pass, format!("df(1,1) = {df}, link(1,1) = {link}, harvest(0.5,1,1,1,1,0.8) = {harvest} (tol {SPOT_TOL:e})"))
}

fn policy_dominance() -> Outcome {
    let totals = |policy| -> Vec<f64> {
        let cfg = SimConfig { policy, episodes: 100, ..SimConfig::default() };
        run_episodes(&cfg).unwrap().iter().map(|m| m.sum_throughput).collect()
    };
    let opt = totals(PolicyKind::Optimal);
    let mm = totals(PolicyKind::MaxMinSnr);
    let rnd = totals(PolicyKind::Random);
    let diff = |a: &[f64], b: &[f64]| mean_and_stderr(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>());
    let (m_opt, m_mm, m_rnd) = (mean_and_stderr(&opt).0, mean_and_stderr(&mm).0, mean_and_stderr(&rnd).0);
    // max-min over random is judged on the paired difference, two standard errors
    let (mm_rnd, mm_rnd_se) = diff(&mm, &rnd);
    let (opt_rnd, _) = diff(&opt, &rnd);
    let pass = m_opt >= m_mm && mm_rnd >= -2.0 * mm_rnd_se && opt_rnd > 0.0;
    outcome(
        pass,
        format!(
            "means optimal {m_opt:.4} >= max-min {m_mm:.4} >= random {m_rnd:.4}; paired max-min - random {mm_rnd:.4} (se {mm_rnd_se:.4}); optimal - random {opt_rnd:.4}"
        ),
    )
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ok_a = twrn(&["simulate", "--seed", "7", "--out", a.path().to_str().unwrap()]).status.success();
    let ok_b = twrn(&["simulate", "--seed", "7", "--out", b.path().to_str().unwrap()]).status.success();
    let ta = fs::read(a.path().join("trajectory.csv")).unwrap_or_default();
    let tb = fs::read(b.path().join("trajectory.csv")).unwrap_or_default();
    outcome(ok_a && ok_b && !ta.is_empty() && ta == tb, format!("two runs, {} bytes each, identical: {}", ta.len(), ta == tb))
}

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("buffer/battery capacity monotonicity", monotone_sweeps),
        ("dual iteration convergence", convergence),
        ("conservation suite", conservation),
        ("two-way slot structure", slot_structure),
        ("formula spot checks", spot_checks),
        ("policy dominance", policy_dominance),
        ("simulation determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!("{} [{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
