//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use twinsync::agent::{update_dual, update_q, Action, AgentState, DualState, QTable, ACTION_COUNT};
use twinsync::metrics::normalized_load;
use twinsync::predictor::{fit_ar, PredictorParams, HORIZONS_MS};
use twinsync::sim::{
    evaluate, sweep_fixed_policies, train, EvalSummary, TradeoffTable, TrainReport,
};
use twinsync::{
    Channel, ChannelConfig, DeliveryOutcome, Horizon, PredictorState, RunConfig, SamplePacket,
};

struct Verdict {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(id: &'static str, title: &'static str, pass: bool, detail: String) -> Verdict {
    Verdict {
        id,
        title,
        pass,
        detail,
    }
}

struct Baseline {
    cfg: RunConfig,
    report: TrainReport,
    train_time: Duration,
    eval: EvalSummary,
    eval_time: Duration,
    sweep: TradeoffTable,
}

fn baseline() -> Baseline {
    let cfg = RunConfig::default();
    let t0 = Instant::now();
    let report = train(&cfg).expect("training runs");
    let train_time = t0.elapsed();
    let t1 = Instant::now();
    let eval = evaluate(&report.checkpoint, &cfg, 20).expect("evaluation runs");
    let eval_time = t1.elapsed();
    let sweep = sweep_fixed_policies(&cfg).expect("sweep runs");
    Baseline {
        cfg,
        report,
        train_time,
        eval,
        eval_time,
        sweep,
    }
}

fn a1(b: &Baseline) -> Verdict {
    let limit = 1.05 * b.cfg.mse_threshold();
    let fast = b.train_time < Duration::from_secs(300) && b.eval_time < Duration::from_secs(30);
    verdict(
        "A1",
        "constraint satisfaction",
        b.eval.episodes.len() == 20 && b.eval.mse_mean <= limit && fast,
        format!(
            "eval mse {:.6} <= {:.6} over {} episodes; train {:.1}s, eval {:.2}s",
            b.eval.mse_mean,
            limit,
            b.eval.episodes.len(),
            b.train_time.as_secs_f64(),
            b.eval_time.as_secs_f64()
        ),
    )
}

fn a2(b: &Baseline) -> Verdict {
    let Some(oracle) = b
        .sweep
        .best_feasible(b.cfg.channel.p_loss, b.cfg.mse_threshold())
    else {
        return verdict(
            "A2",
            "near-oracle load",
            false,
            "no feasible fixed policy".into(),
        );
    };
    verdict(
        "A2",
        "near-oracle load",
        b.eval.load_mean <= 1.10 * oracle.avg_load,
        format!(
            "trained load {:.4} ({:.1}%) vs oracle {} at {:.4}, limit {:.4}; reference load 13%",
            b.eval.load_mean,
            100.0 * b.eval.load_mean,
            oracle.action,
            oracle.avg_load,
            1.10 * oracle.avg_load
        ),
    )
}

/// Frontier loads per budget for one loss probability; infeasible is +inf.
fn frontier_loads(t: &TradeoffTable, p: f64) -> Vec<(f64, f64)> {
    t.frontier_for(p)
        .map(|f| (f.e_budget, f.min_load.unwrap_or(f64::INFINITY)))
        .collect()
}

fn a3(b: &Baseline) -> Verdict {
    let mut violations = 0;
    let mut details = Vec::new();
    let mut enough = true;
    for &p in &[0.0, 0.1] {
        let loads = frontier_loads(&b.sweep, p);
        let feasible = loads.iter().filter(|l| l.1.is_finite()).count();
        enough &= feasible >= 8;
        violations += loads.windows(2).filter(|w| w[1].1 > w[0].1).count();
        details.push(format!("p_loss {p}: {feasible} feasible budgets"));
    }
    verdict(
        "A3",
        "frontier monotone in budget",
        enough && violations == 0,
        format!("{}; {violations} violations", details.join(", ")),
    )
}

fn a4(b: &Baseline) -> Verdict {
    let lossless = frontier_loads(&b.sweep, 0.0);
    let lossy = frontier_loads(&b.sweep, 0.1);
    let mut compared = 0;
    let mut violations = 0;
    for (x, y) in lossless.iter().zip(&lossy) {
        assert_eq!(x.0, y.0);
        if x.1.is_finite() && y.1.is_finite() {
            compared += 1;
            if x.1 > y.1 {
                violations += 1;
            }
        }
    }
    verdict(
        "A4",
        "lossless frontier dominates",
        compared > 0 && violations == 0,
        format!("{compared} common budgets, {violations} violations"),
    )
}

fn a5() -> Verdict {
    const N: u64 = 100_000;
    let ch = Channel::new(ChannelConfig {
        p_loss: 0.1,
        base_delay_ms: 10,
        jitter_ms: 5,
        seed: 2024,
    })
    .unwrap();
    let pkt = |seq| SamplePacket {
        seq,
        measure_tick: seq,
        angle_deg: 0.0,
    };
    let lost = (0..N)
        .filter(|&s| ch.transmit(&pkt(s)) == DeliveryOutcome::Lost)
        .count();
    let rate = lost as f64 / N as f64;
    let mut cells = [0u64; 6];
    for s in 0..N {
        cells[ch.jitter_draw(s) as usize] += 1;
    }
    let e = N as f64 / 6.0;
    let chi2: f64 = cells.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
    verdict(
        "A5",
        "channel statistics",
        (rate - 0.1).abs() <= 0.006 && chi2 < 20.515,
        format!("loss rate {rate:.5}; jitter chi-square {chi2:.3} (critical 20.515, 5 df)"),
    )
}

fn a6() -> Verdict {
    // LINEAR on affine signals, loss patterns drawn from a lossy channel.
    let mut worst: f64 = 0.0;
    let mut patterns = 0;
    for seed in 0..300u64 {
        let ch = Channel::new(ChannelConfig {
            p_loss: 0.6,
            base_delay_ms: 0,
            jitter_ms: 0,
            seed,
        })
        .unwrap();
        let (a, b) = (seed as f64 * 0.3 - 45.0, (seed % 17) as f64 * 0.004 - 0.03);
        let period = [1, 5, 10, 50, 100][seed as usize % 5];
        let mut p = PredictorState::from_params(&PredictorParams::default()).unwrap();
        p.set_period_ms(period as f64);
        let mut newest = None;
        for seq in 0..40u64 {
            let tick = seq * period;
            let pkt = SamplePacket {
                seq,
                measure_tick: tick,
                angle_deg: a + b * tick as f64,
            };
            if let DeliveryOutcome::Delivered { arrival_tick } = ch.transmit(&pkt) {
                p.ingest(arrival_tick, &pkt);
                newest = Some(tick);
            }
        }
        let Some(m) = newest.filter(|_| p.history().len() >= 2) else {
            continue;
        };
        patterns += 1;
        for &h in &HORIZONS_MS {
            let want = a + b * (m + h as u64) as f64;
            worst = worst.max((p.twin_value(Horizon::new(h).unwrap()) - want).powi(2));
        }
    }

    let ridge = PredictorParams::default().ridge;
    let mut coef_err: f64 = 0.0;
    for truth in [
        vec![1.5, -0.7],
        vec![0.6, 0.3, -0.2],
        vec![1.2, -0.5, 0.2, -0.1],
    ] {
        let order = truth.len();
        let mut x: Vec<f64> = (0..order).map(|i| 1.0 + i as f64 * 0.5).collect();
        for k in order..32 {
            let next = (0..order).map(|j| truth[j] * x[k - 1 - j]).sum();
            x.push(next);
        }
        let fit = fit_ar(&x, order, ridge).expect("well-posed window");
        for (f, t) in fit.iter().zip(&truth) {
            coef_err = coef_err.max((f - t).abs());
        }
    }
    verdict(
        "A6",
        "predictor exactness",
        patterns > 100 && worst <= 1e-9 && coef_err <= 1e-6,
        format!("LINEAR worst sq error {worst:.2e} over {patterns} loss patterns; AR coefficient error {coef_err:.2e}"),
    )
}

fn a7() -> Verdict {
    // Two states, two actions; (cost, next) per (s, a).
    let mdp = [[(1.0, 1usize), (2.0, 0usize)], [(0.5, 0), (3.0, 1)]];
    let gamma = 0.9;
    let mut vi = [[0.0f64; 2]; 2];
    for _ in 0..100_000 {
        let v = [vi[0][0].min(vi[0][1]), vi[1][0].min(vi[1][1])];
        vi = [0, 1].map(|s| [0, 1].map(|a| mdp[s][a].0 + gamma * v[mdp[s][a].1]));
    }
    let mut q = QTable::new(2);
    for s in 0..2 {
        for a in 2..ACTION_COUNT {
            q.set(AgentState(s), Action::from_index(a), 1e9);
        }
    }
    for _ in 0..10_000 {
        for (s, row) in mdp.iter().enumerate() {
            for (a, &(c, s2)) in row.iter().enumerate() {
                update_q(
                    &mut q,
                    AgentState(s),
                    Action::from_index(a),
                    c,
                    AgentState(s2),
                    0.5,
                    gamma,
                );
            }
        }
    }
    let mut q_err: f64 = 0.0;
    for (s, row) in vi.iter().enumerate() {
        for (a, v) in row.iter().enumerate() {
            q_err = q_err.max((q.get(AgentState(s), Action::from_index(a)) - v).abs());
        }
    }

    // Dyadic values keep the hand computation exact.
    let mut dual = DualState {
        lambda: 1.0,
        kappa: 0.5,
        e_max: 0.25,
        lambda_max: 2.0,
    };
    let steps = [
        (0.75, 1.25),
        (0.0, 1.125),
        (0.25, 1.125),
        (4.5, 2.0),
        (-4.75, 0.0),
        (0.5, 0.125),
    ];
    let mut dual_ok = true;
    for (mse, want) in steps {
        dual = update_dual(dual, mse);
        dual_ok &= dual.lambda == want;
    }
    let worked = update_dual(
        DualState {
            lambda: 1.0,
            kappa: 100.0,
            e_max: 0.005,
            lambda_max: 1e4,
        },
        0.007,
    );
    dual_ok &= (worked.lambda - 1.2).abs() < 1e-12;
    verdict(
        "A7",
        "learning backup correctness",
        q_err <= 1e-6 && dual_ok,
        format!("max |Q - value iteration| {q_err:.2e}; dual trajectory exact: {dual_ok}"),
    )
}

fn cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_twinsync"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn full_run(dir: &Path, jobs: &str) -> bool {
    let out = dir.to_str().unwrap();
    let ckpt = dir.join("policy.ckpt");
    cli(&["train", "--seed", "11", "--jobs", jobs, "--out", out])
        && cli(&[
            "eval",
            "--seed",
            "11",
            "--jobs",
            jobs,
            "--out",
            out,
            "--checkpoint",
            ckpt.to_str().unwrap(),
        ])
        && cli(&["sweep", "--seed", "11", "--jobs", jobs, "--out", out])
}

fn a8() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let (x, y) = (tmp.path().join("x"), tmp.path().join("y"));
    if !(full_run(&x, "1") && full_run(&y, "3")) {
        return verdict("A8", "determinism", false, "a run failed".into());
    }
    let files = [
        "policy.ckpt",
        "learning_curve.csv",
        "eval.csv",
        "tradeoff.csv",
        "frontier.csv",
    ];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| fs::read(x.join(f)).ok() != fs::read(y.join(f)).ok() || !x.join(f).exists())
        .collect();
    verdict(
        "A8",
        "determinism",
        differing.is_empty(),
        format!(
            "{} files compared across two runs (1 vs 3 worker threads); differing: {differing:?}",
            files.len()
        ),
    )
}

fn a9() -> Verdict {
    let cases = [(150, 1000), (15, 100), (4500, 30_000)];
    let loads: Vec<f64> = cases
        .iter()
        .map(|&(n, ms)| normalized_load(n, ms))
        .collect();
    verdict(
        "A9",
        "load normalization",
        loads.iter().all(|&l| l == 0.15),
        format!("150 packets/s over 1 s, 100 ms and 30 s windows -> {loads:?}"),
    )
}

fn main() {
    let b = baseline();
    println!(
        "selected episode {} (validation load {:.4}, mse {:.6}), final lambda {:.3}",
        b.report.selected_episode,
        b.report.validation.0,
        b.report.validation.1,
        b.report.checkpoint.lambda
    );
    let verdicts = [a1(&b), a2(&b), a3(&b), a4(&b), a5(), a6(), a7(), a8(), a9()];
    for v in &verdicts {
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("{} {status} {}: {}", v.id, v.title, v.detail);
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        verdicts.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
