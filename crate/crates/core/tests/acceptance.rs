//! Acceptance criteria, one PASS/FAIL line each.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bspre_core::codegen::{concatenate, generate, GenParams, CONCAT_OVERHEAD_STEPS};
use bspre_core::env::{PixelMode, PixelStream, PixelStreamConfig};
use bspre_core::harness::{run_to_vec, Experiment, RunConfig};
use bspre_core::infomath::*;
use bspre_core::learning::*;
use bspre_core::network::{ConceptId, ConceptKind, Depository, EngineParams};
use bspre_core::vm::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn prob(p: f64) -> Probability {
    Probability::new(p).unwrap()
}

fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            return x;
        }
    }
}

fn random_input<R: Rng>(rng: &mut R, len: usize) -> FeatureVector {
    FeatureVector::new((0..len).map(|_| rng.random::<i16>()).collect()).unwrap()
}

fn codelet(text: &str) -> Codelet {
    Codelet::new(assemble(text).unwrap()).unwrap()
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_kl, mut worst_add) = (0.0f64, 0.0f64);
    for _ in 0..100_000 {
        let (pa, pb) = (open_unit(&mut rng), open_unit(&mut rng));
        let direct = -pa.ln() / std::f64::consts::LN_2;
        let kl = kl_self_information(prob(pa)).unwrap();
        let si = self_information(prob(pa)).unwrap();
        worst_kl = worst_kl.max((kl - si).abs()).max((kl - direct).abs());
        let joint = -(pa * pb).ln() / std::f64::consts::LN_2;
        let sum = combined_information(prob(pa), prob(pb)).unwrap();
        let merged = self_information(prob(pa * pb)).unwrap();
        worst_add = worst_add.max((sum - merged).abs()).max((sum - joint).abs());
    }
    let elapsed = start.elapsed();
    ensure(worst_kl <= 1e-12, format!("KL form off by {worst_kl:e}"))?;
    ensure(
        worst_add <= 1e-9,
        format!("additivity off by {worst_add:e}"),
    )?;
    ensure(
        elapsed < Duration::from_secs(1),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "max errors {worst_kl:.1e} / {worst_add:.1e} in {elapsed:.2?}"
    ))
}

fn criterion_2() -> Check {
    let f = |p: f64| intrinsic_reward(prob(p));
    let (mut best, mut lo, mut hi) = (0.0, 0.0, 1.0);
    for _ in 0..8 {
        let step = (hi - lo) / 1000.0;
        best = (0..=1000)
            .map(|i| lo + step * i as f64)
            .max_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap();
        lo = (best - step).max(0.0);
        hi = (best + step).min(1.0);
    }
    let target = (-1.0f64).exp();
    ensure((best - target).abs() <= 1e-6, format!("argmax {best}"))?;
    ensure(
        (reward_argmax().value() - target).abs() <= 1e-12,
        "reward_argmax is not 1/e",
    )?;
    ensure(
        (f(best) - 0.530738).abs() <= 1e-6,
        format!("max value {}", f(best)),
    )?;
    Ok(format!("argmax {best:.9}, max {:.9}", f(best)))
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let inv_e = (-1.0f64).exp();
    let mut below = 0;
    for _ in 0..10_000 {
        let (pa, pb) = (prob(open_unit(&mut rng)), prob(open_unit(&mut rng)));
        ensure(
            sequence_reward(pa, pb) > merged_reward(pa, pb),
            format!("split not better at ({}, {})", pa.value(), pb.value()),
        )?;
        if pa.value() < inv_e - 1e-3 {
            below += 1;
            ensure(
                first_step_dominates(pa, pb),
                format!("first step loses at ({}, {})", pa.value(), pb.value()),
            )?;
        }
    }
    ensure(
        !first_step_dominates(prob(0.5), prob(0.9)),
        "witness (0.5, 0.9) dominates",
    )?;
    Ok(format!("10000 pairs, {below} below 1/e, witness holds"))
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for stream in 0..1000 {
        let len = rng.random_range(0..=5000);
        let bias: f64 = rng.random();
        let outcomes: Vec<bool> = (0..len).map(|_| rng.random_bool(bias)).collect();
        let mut w = OutcomeWindow::new(1000);
        for &o in &outcomes {
            w.record(o);
            ensure(
                w.len() <= 1000,
                format!("stream {stream}: window grew to {}", w.len()),
            )?;
        }
        let tail = &outcomes[outcomes.len().saturating_sub(1000)..];
        let pos = tail.iter().filter(|&&o| o).count();
        ensure(
            w.n_pos() == pos && w.n_neg() == tail.len() - pos,
            format!("stream {stream}: counts differ"),
        )?;
        ensure(
            w.outcomes().eq(tail.iter().copied()),
            format!("stream {stream}: contents differ"),
        )?;
        match w.probability() {
            Ok(p) => ensure(
                p.value() == pos as f64 / tail.len() as f64,
                format!("stream {stream}: p differs"),
            )?,
            Err(_) => ensure(tail.is_empty(), format!("stream {stream}: missing p"))?,
        }
    }
    Ok("1000 streams match the recount".into())
}

fn criterion_5() -> Check {
    ensure(
        instruction_set().len() == 65,
        format!("{} opcodes", instruction_set().len()),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = GenParams::default();
    for i in 0..1000 {
        let c = generate(&params, &mut rng).unwrap();
        let input = [random_input(&mut rng, 8)];
        let a = execute(&c, &input, DEFAULT_FUEL).unwrap();
        let b = execute(&c, &input, DEFAULT_FUEL).unwrap();
        ensure(a == b, format!("pair {i} differs between runs"))?;
    }
    let spin = codelet("JMP 0000\nJZ 0003\nRET\nEXIT");
    let out = execute(&spin, &[FeatureVector::empty()], 77).unwrap();
    ensure(
        out.outcome == Outcome::FuelExhausted && out.steps_used == 77,
        "fuel path",
    )?;
    let wrap = |text: &str, input: i16| {
        let c = codelet(&format!(
            "MOV A, var1[00]\n{text}\nAPPEND A\nRET\nJZ 0003\nEXIT"
        ));
        execute(&c, &[FeatureVector::new(vec![input]).unwrap()], 100)
            .unwrap()
            .outcome
    };
    let one = |v: i16| Outcome::Positive(FeatureVector::new(vec![v]).unwrap());
    ensure(wrap("ADD A, 1", i16::MAX) == one(i16::MIN), "ADD wrap")?;
    ensure(wrap("SUB A, 1", i16::MIN) == one(i16::MAX), "SUB wrap")?;
    ensure(wrap("MUL A, 2", 0x4000) == one(i16::MIN), "MUL wrap")?;
    ensure(wrap("NEG A", i16::MIN) == one(i16::MIN), "NEG wrap")?;
    Ok("65 opcodes, 1000 deterministic pairs, fuel and wrap checks".into())
}

fn criterion_6() -> Check {
    let params = GenParams::default();
    for seed in 0..10_000u64 {
        let c = generate(&params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        ensure(
            validate(c.program()).is_empty(),
            format!("seed {seed} invalid"),
        )?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let corpus: Vec<Codelet> = (0..10_000)
        .map(|_| generate(&params, &mut rng).unwrap())
        .collect();
    let mut both = 0;
    for c in &corpus {
        ensure(validate(c.program()).is_empty(), "corpus codelet invalid")?;
        let (mut pos, mut neg) = (false, false);
        for _ in 0..100 {
            match execute(c, &[random_input(&mut rng, 8)], DEFAULT_FUEL)
                .unwrap()
                .outcome
            {
                Outcome::Positive(_) => pos = true,
                _ => neg = true,
            }
        }
        both += usize::from(pos && neg);
    }
    let share = both as f64 / corpus.len() as f64;
    ensure(
        share >= 0.10,
        format!("only {:.1}% split their inputs", share * 100.0),
    )?;
    Ok(format!(
        "20000 valid; {:.1}% of the seed-7 corpus splits its inputs",
        share * 100.0
    ))
}

fn criterion_7() -> Check {
    const FUEL: u32 = 4096;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let params = GenParams::default();
    let (mut compared, mut max_overhead) = (0u32, 0i64);
    for pair in 0..500 {
        let first = generate(&params, &mut rng).unwrap();
        let second = generate(&params, &mut rng).unwrap();
        let joined = concatenate(&first, &second).map_err(|e| format!("pair {pair}: {e}"))?;
        ensure(
            validate(joined.program()).is_empty(),
            format!("pair {pair}: result invalid"),
        )?;
        for _ in 0..100 {
            let x = [random_input(&mut rng, 8)];
            let a = execute(&first, &x, FUEL).unwrap();
            let (expected, steps) = match &a.outcome {
                Outcome::Positive(o) => {
                    let b = execute(&second, std::slice::from_ref(o), FUEL).unwrap();
                    (b.outcome, a.steps_used + b.steps_used)
                }
                other => (other.clone(), a.steps_used),
            };
            if expected == Outcome::FuelExhausted || steps + CONCAT_OVERHEAD_STEPS > FUEL {
                continue;
            }
            let c = execute(&joined, &x, FUEL).unwrap();
            ensure(
                c.outcome == expected,
                format!("pair {pair}: {:?} vs {:?}", c.outcome, expected),
            )?;
            let overhead = i64::from(c.steps_used) - i64::from(steps);
            ensure(
                overhead <= i64::from(CONCAT_OVERHEAD_STEPS),
                format!("pair {pair}: overhead {overhead}"),
            )?;
            max_overhead = max_overhead.max(overhead);
            compared += 1;
        }
    }
    ensure(
        compared >= 45_000,
        format!("only {compared} comparisons within fuel"),
    )?;
    Ok(format!(
        "{compared} executions agree; max overhead {max_overhead} <= K = {CONCAT_OVERHEAD_STEPS}"
    ))
}

fn criterion_8() -> Check {
    let s = |q, p| Successor { q, p };
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let i = |q, reward, successors| TdInputs {
        q,
        reward,
        alpha: 0.1,
        gamma: 0.9,
        successors,
    };
    let pair = [s(2.0, 0.5), s(1.0, 0.5)];
    ensure(
        close(
            td_update_max(&i(0.1, 1.0, &pair)),
            0.1 + 0.1 * (1.0 + 0.9 * 2.0 - 0.1),
        ),
        "max example",
    )?;
    ensure(
        close(td_update_max(&i(0.5, 0.0, &[])), 0.45),
        "max without successors",
    )?;
    let even = [s(2.0, 1.0), s(4.0, 1.0)];
    ensure(
        close(td_update_mean(&i(0.0, 0.0, &even)), 0.1 * 0.9 * 3.0),
        "mean example",
    )?;
    let skew = [s(10.0, 0.2), s(0.5, 0.8)];
    ensure(
        close(mean_successor(&skew), (0.2 * 10.0 + 0.8 * 0.5) / 1.0),
        "weighted mean",
    )?;
    ensure(mean_successor(&[s(3.0, 0.0)]) == 0.0, "zero weights")?;

    for (rule, bootstrap) in [
        (TdRule::Max, 2.0),
        (TdRule::Mean, (0.2 * 10.0 + 0.8 * 0.5) / 1.0),
    ] {
        let succ: &[Successor] = if rule == TdRule::Max { &pair } else { &skew };
        let mut q = 0.1;
        for _ in 0..2000 {
            q = td_update(rule, &i(q, 0.3, succ));
        }
        let fixed = 0.3 + 0.9 * bootstrap;
        ensure(
            (q - fixed).abs() <= 1e-9,
            format!("{} rule settles at {q}, expected {fixed}", rule.name()),
        )?;
    }
    Ok("hand examples exact; both rules reach r + gamma * bootstrap".into())
}

fn criterion_9() -> Check {
    let quiet = EngineParams {
        exploration: false,
        ..EngineParams::default()
    };
    for (case, qs) in [vec![1.0, 3.0], vec![0.2, 0.5, 1.3, 2.0], vec![5.0]]
        .into_iter()
        .enumerate()
    {
        let mut dep = Depository::with_sensors(quiet.clone(), 900 + case as u64, 1).unwrap();
        let tail = ConceptId(0);
        let id = codelet("APPEND var1[00]\nRET\nJZ 0001\nEXIT");
        let mut heads = Vec::new();
        for &q in &qs {
            let h = dep.add_concept(ConceptKind::Codelet(id.clone())).unwrap();
            dep.add_action(tail, h, 0).unwrap();
            dep.set_q(tail, h, 0, q);
            heads.push(h);
        }
        let mut counts = vec![0u32; qs.len()];
        let n = 100_000;
        for _ in 0..n {
            let head = dep.select_action(tail).unwrap().head;
            counts[heads.iter().position(|&h| h == head).unwrap()] += 1;
        }
        for (k, &c) in counts.iter().enumerate() {
            let expected = selection_probability(&qs, k).unwrap().value();
            ensure(
                (expected - qs[k] / qs.iter().sum::<f64>()).abs() < 1e-15,
                "selection formula",
            )?;
            let freq = f64::from(c) / f64::from(n);
            ensure(
                (freq - expected).abs() <= 0.01,
                format!("case {case} action {k}: {freq} vs {expected}"),
            )?;
        }
    }
    for q_const in [0.5, 1.0, 3.0] {
        ensure(
            exploration_probability(q_const, q_const).value() == 0.5,
            "equal-sum point",
        )?;
    }
    let ps: Vec<f64> = (0..=400)
        .map(|i| exploration_probability(1.0, i as f64 * 0.25).value())
        .collect();
    ensure(
        ps.windows(2).all(|w| w[1] < w[0]),
        "exploration not strictly decreasing",
    )?;
    Ok("frequencies within 0.01 over 1e5 draws; P_exp(q, q) = 0.5; strictly decreasing".into())
}

fn criterion_10() -> Check {
    let cfg = RunConfig {
        ticks: 20_000,
        seed: 42,
        workers: 1,
        ..RunConfig::default()
    };
    let start = Instant::now();
    let first = run_to_vec(&cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let s = &first.summary;
    ensure(
        elapsed <= Duration::from_secs(60),
        format!("run took {elapsed:?}"),
    )?;
    let (surv, pruned) = match (s.surviving_dev, s.pruned_dev) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err("no surviving or no pruned concepts".into()),
    };
    ensure(
        surv < pruned,
        format!("(a) surviving {surv:.4} >= pruned {pruned:.4}"),
    )?;
    let mid = s
        .surviving_p
        .iter()
        .filter(|p| (0.2..=0.6).contains(*p))
        .count();
    ensure(mid >= 1, "(b) no surviving concept with p in [0.2, 0.6]")?;
    let second = run_to_vec(&cfg).map_err(|e| e.to_string())?;
    ensure(
        first.metrics == second.metrics && first.snapshot == second.snapshot,
        "(c) rerun differs",
    )?;
    Ok(format!(
        "{elapsed:.2?}; (a) {surv:.4} < {pruned:.4}; (b) {mid} in [0.2, 0.6]; (c) {} metric bytes identical",
        first.metrics.len()
    ))
}

fn criterion_11() -> Check {
    let cheap = codelet("MOV A, var1[00]\nCMP A, 127\nJLE 0005\nAPPEND A\nRET\nEXIT");
    let padded_text = format!(
        "{}MOV A, var1[00]\nCMP A, 127\nJLE 0030\nAPPEND A\nRET\nEXIT",
        "NOP\n".repeat(25)
    );
    let padded = codelet(&padded_text);

    let env = PixelStream::new(PixelStreamConfig {
        mode: PixelMode::Uniform,
        seed: 11,
    })
    .unwrap();
    let (mut tc, mut tp) = (TimingStats::default(), TimingStats::default());
    let (mut wc, mut wp) = (OutcomeWindow::default(), OutcomeWindow::default());
    for t in 0..2000 {
        let x = [env.frame(t)];
        let a = execute(&cheap, &x, DEFAULT_FUEL).unwrap();
        let b = execute(&padded, &x, DEFAULT_FUEL).unwrap();
        ensure(a.is_positive() == b.is_positive(), "partitions differ")?;
        ensure(b.steps_used >= 5 * a.steps_used, "padding below 5x")?;
        tc.record(a.steps_used);
        tp.record(b.steps_used);
        wc.record(a.is_positive());
        wp.record(b.is_positive());
    }
    let p = wc.probability().unwrap();
    ensure(p == wp.probability().unwrap(), "unequal p")?;
    let rc = effective_reward(intrinsic_reward(p), &tc).unwrap();
    let rp = effective_reward(intrinsic_reward(p), &tp).unwrap();
    ensure(rp <= rc / 5.0, format!("padded {rp} vs cheap {rc}"))?;

    // Head-to-head: no exploration, prune threshold between the two
    // settled values.
    let params = EngineParams {
        exploration: false,
        prune_threshold: 0.05,
        ..EngineParams::default()
    };
    let mut dep = Depository::with_sensors(params, 42, 1).unwrap();
    let tail = ConceptId(0);
    let slow = dep.add_concept(ConceptKind::Codelet(padded)).unwrap();
    let fast = dep.add_concept(ConceptKind::Codelet(cheap)).unwrap();
    dep.add_action(tail, slow, 0).unwrap();
    dep.add_action(tail, fast, 0).unwrap();
    let (mut slow_gone, mut fast_gone) = (None, None);
    for t in 1..=5000u64 {
        let report = dep.tick(&[env.frame(10_000 + t)]).unwrap();
        for c in &report.pruned {
            if c.id == slow && slow_gone.is_none() {
                slow_gone = Some(t);
            }
            if c.id == fast && fast_gone.is_none() {
                fast_gone = Some(t);
            }
        }
    }
    let slow_t = slow_gone.ok_or("padded concept never pruned")?;
    ensure(
        fast_gone.is_none_or(|f| f > slow_t),
        format!("cheap pruned at {fast_gone:?}, padded at {slow_t}"),
    )?;
    Ok(format!(
        "reward ratio {:.3}; padded pruned at tick {slow_t}, cheap survives",
        rp / rc
    ))
}

fn criterion_12() -> Check {
    let cfg = RunConfig {
        ticks: 100,
        seed: 42,
        ..RunConfig::default()
    };
    let mut straight = Experiment::new(&cfg).map_err(|e| e.to_string())?;
    let mut expected = Vec::new();
    for t in 1..=100 {
        let r = straight.step().map_err(|e| e.to_string())?;
        if t > 50 {
            expected.push(r);
        }
    }
    let mut first = Experiment::new(&cfg).map_err(|e| e.to_string())?;
    first.run_ticks(50, None).map_err(|e| e.to_string())?;
    let bytes = first.depository().snapshot();
    let mut resumed = Experiment::resume(&cfg, &bytes).map_err(|e| e.to_string())?;
    let mut got = Vec::new();
    for _ in 0..50 {
        got.push(resumed.step().map_err(|e| e.to_string())?);
    }
    ensure(got == expected, "tick reports differ after restore")?;
    let (a, b) = (
        straight.depository().snapshot(),
        resumed.depository().snapshot(),
    );
    ensure(a == b, "final snapshots differ")?;
    let executions: usize = got.iter().map(|r| r.executions.len()).sum();
    Ok(format!(
        "50 resumed ticks ({executions} executions) match; final snapshots equal ({} bytes)",
        a.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("reward calculus identities", criterion_1),
        ("reward optimum at 1/e", criterion_2),
        ("split dominance", criterion_3),
        ("window estimator", criterion_4),
        ("vm", criterion_5),
        ("generator validity", criterion_6),
        ("concatenation", criterion_7),
        ("td rules", criterion_8),
        ("selection and exploration", criterion_9),
        ("end-to-end letter run", criterion_10),
        ("economics", criterion_11),
        ("persistence", criterion_12),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", n + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why}", n + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
