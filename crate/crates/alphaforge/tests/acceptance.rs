//! Acceptance suite: one test per release criterion, each ending in a
//! single PASS line with its pinned tolerance.

mod common;

use std::sync::OnceLock;

use alphaforge::backtest::{simulate, Side, StrategyConfig};
use alphaforge::dsl::{canonicalize, parse};
use alphaforge::eval::evaluate;
use alphaforge::evolution::{
    engine::fault_index, evolve, EvolutionConfig, Generation, MiningContext, Phase, SplitIndices,
    StepKind, StepOutcome, Trajectory,
};
use alphaforge::metrics::{annualized_metrics, calmar_ratio, icir, predictive_metrics};
use alphaforge::panel::synth::{generate, SynthConfig, PLANTED_EXPRESSION};
use alphaforge::panel::PanelOf;
use alphaforge::providers::HeuristicProvider;
use alphaforge::structure::{subtree_similarity, ComplexityWeights, GateConfig};

// ---------------------------------------------------------------------------
// Shared seeded mining run (criteria on pools, planted signal, lineage,
// and determinism all inspect the same run).

struct MiningRun {
    ctx: MiningContext,
    generations: Vec<Generation>,
    log: String,
}

fn run_mining(seed: u64) -> MiningRun {
    let panel = generate(&SynthConfig {
        symbols: 20,
        days: 500,
        seed: 1,
        signal_strength: 0.1,
    });
    let ctx = MiningContext::new(
        &panel,
        SplitIndices::positional(500, 0.6, 0.2),
        StrategyConfig {
            topk: 5,
            n_drop: 1,
            ..Default::default()
        },
        GateConfig::default(),
        ComplexityWeights::default(),
    )
    .unwrap();
    let cfg = EvolutionConfig {
        n_directions: 3,
        n_iterations: 3,
        factors_per_hypothesis: 3,
        parent_selection_size: None,
        lambda: 0.05,
        seed,
    };
    let provider = HeuristicProvider::new(seed);
    let mut log = String::new();
    let generations = evolve(&ctx, &cfg, &provider, |t| {
        log.push_str(&serde_json::to_string(t).unwrap());
        log.push('\n');
    })
    .unwrap();
    MiningRun {
        ctx,
        generations,
        log,
    }
}

fn mining_run() -> &'static MiningRun {
    static RUN: OnceLock<MiningRun> = OnceLock::new();
    RUN.get_or_init(|| run_mining(1234))
}

// ---------------------------------------------------------------------------

#[test]
fn calmar_consistency() {
    let cr = calmar_ratio(0.2775, -0.0798).unwrap();
    assert!(
        (cr - 3.477).abs() <= 0.001,
        "CR(0.2775, -0.0798) = {cr}, expected 3.477 ± 0.001"
    );
    println!("PASS: Calmar consistency — CR(ARR 0.2775, MDD -0.0798) = {cr:.4} within ±0.001");
}

#[test]
fn evaluator_oracle_equivalence() {
    let mut r = common::rng(0xE0A1);
    let mut cells = 0usize;
    for case in 0..500 {
        let n = 1 + (case % 5);
        let t = 4 + (case % 27);
        let panel = common::random_panel(&mut r, n, t);
        let expr = common::random_expr(&mut r, 4, 8);
        let lib = evaluate(&expr, &panel).unwrap();
        let reference = common::oracle(&expr, &panel);
        for i in 0..n {
            for c in 0..t {
                let a = lib.values.get(i, c);
                let b = reference[i][c];
                assert_eq!(
                    a.is_finite(),
                    b.is_finite(),
                    "mask mismatch at ({i},{c}) of case {case}: {} — lib {a}, oracle {b}",
                    canonicalize(&expr)
                );
                if a.is_finite() {
                    assert!(
                        (a - b).abs() <= 1e-10,
                        "value mismatch at ({i},{c}) of case {case}: {} — lib {a}, oracle {b}",
                        canonicalize(&expr)
                    );
                }
                cells += 1;
            }
        }
    }
    println!("PASS: evaluator oracle equivalence — 500 cases, {cells} cells within 1e-10, identical masks");
}

#[test]
fn parser_round_trip() {
    let mut r = common::rng(0x90A2);
    for case in 0..10_000 {
        let expr = common::random_expr(&mut r, 4, 30);
        let s0 = canonicalize(&expr);
        let parsed = parse(&s0)
            .unwrap_or_else(|e| panic!("case {case}: canonical text {s0:?} failed to parse: {e}"));
        let s1 = canonicalize(&parsed);
        assert_eq!(s1, s0, "case {case}: canonicalization is not a fixpoint");
    }
    println!("PASS: parser round-trip — 10000 expressions satisfy parse∘canonicalize fixpoint");
}

#[test]
fn subtree_similarity_brute_force() {
    let mut r = common::rng(0x51B1);
    let mut corpus = Vec::new();
    while corpus.len() < 50 {
        let e = common::random_expr(&mut r, 2, 8);
        if e.node_count() <= 8 {
            corpus.push(e);
        }
    }
    let mut pairs = 0usize;
    for a in &corpus {
        for b in &corpus {
            assert_eq!(
                subtree_similarity(a, b),
                common::brute_similarity(a, b),
                "similarity mismatch for {} vs {}",
                canonicalize(a),
                canonicalize(b)
            );
            pairs += 1;
        }
    }
    println!("PASS: subtree similarity equals brute force on {pairs} pairs of 50 trees ≤ 8 nodes");
}

// ---------------------------------------------------------------------------
// Golden backtest ledger: 6 symbols with constant per-symbol daily growth,
// rotating scores, topk = 3, n_drop = 1, five simulated dates.

#[test]
fn backtest_golden_ledger() {
    let growth: [f64; 6] = [0.01, 0.02, 0.0, -0.01, 0.03, -0.02];
    let base: [f64; 6] = [100.0, 90.0, 80.0, 70.0, 60.0, 50.0];
    let n = 6;
    let t_len = 7;
    let symbols: Vec<String> = ["A", "B", "C", "D", "E", "F"].iter().map(|s| s.to_string()).collect();
    let dates: Vec<String> = (0..t_len).map(|d| format!("d{d}")).collect();
    let mut panel: PanelOf<f64> = PanelOf::new(symbols, dates).unwrap();
    for s in 0..n {
        for t in 0..t_len {
            let open = base[s] * (1.0 + growth[s]).powi(t as i32);
            use alphaforge::dsl::FeatureField as F;
            panel.feature_mut(F::Open).set(s, t, open);
            // close(s,t) = open(s,t+1): zero overnight gap, all tradable
            panel.feature_mut(F::Close).set(s, t, open * (1.0 + growth[s]));
            panel.feature_mut(F::High).set(s, t, open);
            panel.feature_mut(F::Low).set(s, t, open);
            panel.feature_mut(F::Vwap).set(s, t, open);
            panel.feature_mut(F::Volume).set(s, t, 1000.0);
        }
    }
    // Score column t ranks symbol (t) lowest, rotating one step per day:
    // col 0: A>B>C>D>E>F; col 1: F>A>B>C>D>E; ...
    let mut scores = alphaforge::Matrix::invalid(n, t_len);
    for t in 0..t_len {
        for s in 0..n {
            let rank = (s + t) % n; // 0 = best
            scores.set(s, t, (n - rank) as f64);
        }
    }
    let cfg = StrategyConfig {
        topk: 3,
        n_drop: 1,
        ..Default::default()
    };
    let result = simulate(&scores, &panel, &cfg, 1, 6).unwrap();
    assert_eq!(result.daily.len(), 5);

    // Hand-derived holdings and portfolio returns.
    let expected_holdings: [&[&str]; 5] = [
        &["A", "B", "C"],
        &["A", "B", "F"],
        &["A", "E", "F"],
        &["D", "E", "F"],
        &["C", "D", "E"],
    ];
    let expected_r_port = [
        (0.01 + 0.02 + 0.0) / 3.0,
        (0.01 + 0.02 - 0.02) / 3.0,
        (0.01 + 0.03 - 0.02) / 3.0,
        (-0.01 + 0.03 - 0.02) / 3.0,
        (0.0 - 0.01 + 0.03) / 3.0,
    ];
    // Buy-and-hold benchmark: S_k = Σ_s (1+g_s)^k, day i return S_i/S_{i-1} − 1.
    let s_k = |k: i32| -> f64 { growth.iter().map(|g| (1.0 + g).powi(k)).sum::<f64>() };
    let expected_cost = [
        cfg.buy_fee, // full formation
        cfg.buy_fee / 3.0 + cfg.sell_fee / 3.0,
        cfg.buy_fee / 3.0 + cfg.sell_fee / 3.0,
        cfg.buy_fee / 3.0 + cfg.sell_fee / 3.0,
        cfg.buy_fee / 3.0 + cfg.sell_fee / 3.0,
    ];
    let expected_turnover = [1.0, 2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
    for (i, d) in result.daily.iter().enumerate() {
        assert_eq!(d.date, format!("d{}", i + 1));
        assert_eq!(d.holdings, expected_holdings[i], "holdings on day {i}");
        assert!((d.portfolio_return - expected_r_port[i]).abs() < 1e-12, "r_port day {i}");
        let r_bench = s_k(i as i32 + 1) / s_k(i as i32) - 1.0;
        assert!((d.benchmark_return - r_bench).abs() < 1e-12, "bench day {i}");
        assert!((d.transaction_cost - expected_cost[i]).abs() < 1e-12, "cost day {i}");
        assert!((d.turnover - expected_turnover[i]).abs() < 1e-12, "turnover day {i}");
        let excess = expected_r_port[i] - r_bench - expected_cost[i];
        assert!((d.excess_after_cost - excess).abs() < 1e-12, "excess day {i}");
    }

    // Trades: first-day formation buys, then one sell + one buy per day.
    let expected_trades: [(&str, &str, Side, f64); 11] = [
        ("d1", "A", Side::Buy, 0.0005 / 3.0),
        ("d1", "B", Side::Buy, 0.0005 / 3.0),
        ("d1", "C", Side::Buy, 0.0005 / 3.0),
        ("d2", "C", Side::Sell, 0.0015 / 3.0),
        ("d2", "F", Side::Buy, 0.0005 / 3.0),
        ("d3", "B", Side::Sell, 0.0015 / 3.0),
        ("d3", "E", Side::Buy, 0.0005 / 3.0),
        ("d4", "A", Side::Sell, 0.0015 / 3.0),
        ("d4", "D", Side::Buy, 0.0005 / 3.0),
        ("d5", "F", Side::Sell, 0.0015 / 3.0),
        ("d5", "C", Side::Buy, 0.0005 / 3.0),
    ];
    assert_eq!(result.trades.len(), expected_trades.len());
    for (trade, (date, sym, side, fee)) in result.trades.iter().zip(expected_trades.iter()) {
        assert_eq!(trade.date, *date);
        assert_eq!(trade.symbol, *sym);
        assert_eq!(trade.side, *side);
        assert!((trade.fee - fee).abs() < 1e-12);
    }
    println!("PASS: backtest golden ledger — 5 days, 11 trades, all fields within 1e-12");
}

#[test]
fn metric_hand_cases() {
    // IC/RankIC = 0.8 on the 4-point example.
    let f = alphaforge::Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]);
    let y = alphaforge::Matrix::from_rows(&[vec![1.0], vec![3.0], vec![2.0], vec![4.0]]);
    let pm = predictive_metrics(&f, &y, None);
    assert!((pm.ic_mean - 0.8).abs() < 1e-12, "IC = {}", pm.ic_mean);
    assert!((pm.rank_ic_mean - 0.8).abs() < 1e-12, "RankIC = {}", pm.rank_ic_mean);
    // MDD = −0.05 on the 3-day example (curve 0.02, −0.01, −0.03).
    let sm = annualized_metrics(&[0.02, -0.03, -0.02], false);
    assert!((sm.mdd - (-0.05)).abs() < 1e-12, "MDD = {}", sm.mdd);
    // ICIR = 2.0.
    let r = icir(&[0.02, 0.04, 0.06]).unwrap();
    assert!((r - 2.0).abs() < 1e-12, "ICIR = {r}");
    println!("PASS: metric hand cases — IC 0.8, RankIC 0.8, MDD -0.05, ICIR 2.0, all exact");
}

#[test]
fn pool_soundness_and_monotonicity() {
    let run = mining_run();
    assert_eq!(run.generations.len(), 4, "3 iterations + round 0");
    let mut last_best = f64::NEG_INFINITY;
    for g in &run.generations {
        let pool = &g.snapshot.pool;
        let cap = (pool.cap_ratio * pool.total_mined as f64).floor() as usize;
        assert!(
            pool.admitted.len() <= cap,
            "round {}: {} admitted over cap {cap}",
            g.round,
            pool.admitted.len()
        );
        for (i, row) in g.snapshot.correlations.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if i != j && c.is_finite() {
                    assert!(
                        c.abs() < pool.corr_threshold,
                        "round {}: |corr| = {} at ({i},{j})",
                        g.round,
                        c.abs()
                    );
                }
            }
        }
        if let Some(best) = pool.best_rank_ic() {
            assert!(
                best >= last_best - 1e-12,
                "round {}: best RankIC {best} below previous {last_best}",
                g.round
            );
            last_best = best;
        }
    }
    let final_pool = &run.generations.last().unwrap().snapshot.pool;
    assert!(!final_pool.admitted.is_empty(), "final pool is empty");
    println!(
        "PASS: pool soundness + monotonicity — 4 snapshots, pairwise |corr| < 0.7, cap 50%, best RankIC non-decreasing (final {:.4})",
        last_best
    );
}

#[test]
fn planted_signal_recovery() {
    let run = mining_run();
    let ic_on = |expression: &str, dates: Option<&[usize]>| -> f64 {
        let e = parse(expression).unwrap();
        let fm = evaluate(&e, &run.ctx.panel).unwrap();
        predictive_metrics(&fm.values, &run.ctx.labels, dates).ic_mean
    };
    // The planted signal scores IC 0.1 ± 0.03 over the full panel.
    let planted_ic = ic_on(PLANTED_EXPRESSION, None);
    assert!(
        (planted_ic - 0.1).abs() <= 0.03,
        "planted expression test IC = {planted_ic}, expected 0.1 ± 0.03"
    );
    // The run's best pool factor reaches test-split IC ≥ 0.05.
    let pool = &run.generations.last().unwrap().snapshot.pool;
    let best = pool
        .admitted
        .iter()
        .max_by(|a, b| a.report.rank_ic_mean.partial_cmp(&b.report.rank_ic_mean).unwrap())
        .expect("non-empty pool");
    let best_ic = ic_on(&best.expression, Some(&run.ctx.split.test));
    assert!(
        best_ic >= 0.05,
        "best pool factor {} test IC = {best_ic}, expected ≥ 0.05",
        best.expression
    );
    println!(
        "PASS: planted-signal recovery — planted IC {planted_ic:.4} (0.1 ± 0.03), best pool factor {} IC {best_ic:.4} ≥ 0.05",
        best.expression
    );
}

#[test]
fn mutation_prefix_freeze_and_lineage_from_log() {
    let run = mining_run();
    let trajectories: Vec<Trajectory> = run
        .log
        .lines()
        .map(|l| serde_json::from_str(l).expect("log line deserializes"))
        .collect();
    assert!(!trajectories.is_empty());
    let by_id: std::collections::HashMap<&str, &Trajectory> =
        trajectories.iter().map(|t| (t.id.as_str(), t)).collect();

    let mut mutations = 0usize;
    let mut crossovers = 0usize;
    for t in &trajectories {
        assert_eq!(t.schema, "trajectory.v1");
        // Step indices are contiguous with a single terminal evaluation.
        for (i, s) in t.steps.iter().enumerate() {
            assert_eq!(s.index, i, "{}: non-contiguous step index", t.id);
        }
        let evals: Vec<usize> = t
            .steps
            .iter()
            .filter(|s| s.kind == StepKind::Evaluation)
            .map(|s| s.index)
            .collect();
        assert_eq!(evals, vec![t.steps.len() - 1], "{}: evaluation step", t.id);

        match t.phase {
            Phase::Original => assert!(t.parent_ids.is_empty(), "{}: original with parents", t.id),
            Phase::Mutation => {
                mutations += 1;
                assert_eq!(t.parent_ids.len(), 1, "{}: mutation parent count", t.id);
                let parent = by_id[t.parent_ids[0].as_str()];
                assert!(parent.round < t.round, "{}: lineage round order", t.id);
                // The frozen prefix (through the parent's fault step) is
                // byte-identical, recomputed from the log alone.
                let k = fault_index(parent);
                assert!(t.steps.len() > k, "{}: child shorter than frozen prefix", t.id);
                for i in 0..=k {
                    assert_eq!(
                        t.steps[i].canonical_bytes(),
                        parent.steps[i].canonical_bytes(),
                        "{}: frozen step {i} differs from parent {}",
                        t.id,
                        parent.id
                    );
                }
                // Inherited factors reference steps inside the frozen prefix.
                for f in &t.factors {
                    if f.step_index < k {
                        assert!(parent
                            .factors
                            .iter()
                            .any(|pf| pf.factor_id == f.factor_id && pf.step_index == f.step_index));
                    }
                }
            }
            Phase::Crossover => {
                crossovers += 1;
                assert!(t.parent_ids.len() >= 2, "{}: crossover parent count", t.id);
                for pid in &t.parent_ids {
                    assert!(by_id[pid.as_str()].round < t.round, "{}: lineage round order", t.id);
                }
            }
        }
        // Failed steps carry a reason.
        for s in &t.steps {
            if let StepOutcome::Failed(reason) = &s.outcome {
                assert!(!reason.is_empty(), "{}: empty failure reason", t.id);
            }
        }
    }
    assert!(mutations > 0, "run contains no mutations");
    assert!(crossovers > 0, "run contains no crossovers");
    println!(
        "PASS: prefix-freeze + lineage — {} trajectories ({mutations} mutations, {crossovers} crossovers) verified from the JSONL log alone",
        trajectories.len()
    );
}

#[test]
fn determinism_byte_identical_logs() {
    let first = mining_run();
    let second = run_mining(1234);
    assert_eq!(
        first.log, second.log,
        "two identically seeded runs produced different trajectory logs"
    );
    assert!(!first.log.is_empty());
    println!(
        "PASS: determinism — two seed-1234 runs produced byte-identical {}-line trajectory logs",
        first.log.lines().count()
    );
}

// Supplementary sanity: strategy metrics on a mined factor stay finite.
#[test]
fn mined_factor_reports_are_well_formed() {
    let run = mining_run();
    for g in &run.generations {
        for t in &g.trajectories {
            for f in &t.factors {
                assert!(f.report.n_dates > 0);
                assert!(f.report.ic_mean.is_finite());
                assert_eq!(f.report.expression, f.expression);
            }
        }
    }
    // Labels discard the final two dates by construction.
    let (n, t) = run.ctx.labels.shape();
    assert_eq!((n, t), (20, 500));
    println!("PASS: mined factor reports well-formed");
}

