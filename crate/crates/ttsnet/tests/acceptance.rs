//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero when any fails.
//!
//! The end-to-end benchmark trains the full reference configuration and
//! dominates the runtime.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use ttsnet::experiment::{run_experiment, CorpusSource, ExperimentConfig, Method};
use ttsnet::ThreadPoolExecutor;
use ttsnet_core::dataset::{generate_synthetic, SyntheticConfig};
use ttsnet_core::descriptors::{lcs_similarity, NeuronSet, PngGroup};
use ttsnet_core::eval::evaluate_objects;
use ttsnet_core::hmm::{forward_log_likelihood, DiscreteHmm, EmConfig, Posteriors};
use ttsnet_core::metrics::{auc, cohen_kappa, f1, format_median_mad, mad, weighted_f1};
use ttsnet_core::objects::ObjectConfig;
use ttsnet_core::snn::{
    build_network, map_levels, quantize, schedule_stimuli, simulate_plastic, single_neuron_spikes, stdp_delta, KernelPair,
    KernelPreset, StdpConfig, A_MINUS, A_PLUS, N_EXCITATORY, W_MAX,
};
use ttsnet_core::stats::median_lower;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn neuron_dynamics() -> Outcome {
    let start = Instant::now();
    let spikes = |p: KernelPreset| single_neuron_spikes(&p.kernel(), 10.0, 500.0, 0.1);
    let rs = spikes(KernelPreset::Rs);
    check(rs.len() >= 5, format!("RS fired {} spikes", rs.len()))?;
    let isi: Vec<f64> = rs.windows(2).map(|w| w[1] - w[0]).collect();
    check(isi[1..].windows(2).all(|w| w[1] >= w[0] - 1e-9), format!("RS intervals {isi:?}"))?;
    let fs = spikes(KernelPreset::Fs);
    check(fs.len() > rs.len(), format!("FS {} spikes vs RS {}", fs.len(), rs.len()))?;
    for p in [KernelPreset::Ib, KernelPreset::Ch] {
        let s = spikes(p);
        check(s.windows(2).any(|w| w[1] - w[0] < 10.0), format!("{} has no burst", p.name()))?;
    }
    let lts = spikes(KernelPreset::Lts);
    check(!lts.is_empty(), "LTS silent")?;
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("RS {} / FS {} / LTS {} spikes in {elapsed:.1?}", rs.len(), fs.len(), lts.len()))
}

fn stdp_suite() -> Outcome {
    for dt in [1.0f64, 5.0, 10.0, 20.0] {
        let plus = stdp_delta(0.0, dt);
        let minus = stdp_delta(dt, 0.0);
        check((plus - A_PLUS * (-dt / 20.0).exp()).abs() <= 1e-12, format!("potentiation at {dt}: {plus}"))?;
        check((minus + A_MINUS * (-dt / 20.0).exp()).abs() <= 1e-12, format!("depression at {dt}: {minus}"))?;
        check(plus > 0.0 && minus < 0.0, format!("sign at {dt}"))?;
    }
    let mags: Vec<f64> = [1.0, 5.0, 10.0, 20.0].iter().map(|&dt| stdp_delta(0.0, dt)).collect();
    check(mags.windows(2).all(|w| w[1] < w[0]), "potentiation not decaying in |dt|")?;
    let mags: Vec<f64> = [1.0, 5.0, 10.0, 20.0].iter().map(|&dt| -stdp_delta(dt, 0.0)).collect();
    check(mags.windows(2).all(|w| w[1] < w[0]), "depression not decaying in |dt|")?;

    // Oversized rates drive weights into both bounds.
    let levels = map_levels(40, 3).map_err(|e| e.to_string())?;
    let column: Vec<u8> = (0..40).map(|i| (i * 7 % 40) as u8).collect();
    let schedule = schedule_stimuli(&column, &levels).map_err(|e| e.to_string())?;
    let (mut at_max, mut at_zero) = (false, false);
    for (a_plus, a_minus) in [(50.0, 0.0), (0.0, 50.0), (25.0, 30.0)] {
        let mut net = build_network(KernelPair::RS_LTS, 11).map_err(|e| e.to_string())?;
        let before = net.clone();
        let cfg = StdpConfig { a_plus, a_minus, ..Default::default() };
        simulate_plastic(&mut net, &schedule, 250, &cfg).map_err(|e| e.to_string())?;
        for (b, a) in before.synapses().iter().zip(net.synapses()) {
            if (b.pre as usize) < N_EXCITATORY {
                check((0.0..=W_MAX).contains(&a.weight), format!("weight {} escaped [0, 10]", a.weight))?;
                at_max |= a.weight == W_MAX;
                at_zero |= a.weight == 0.0;
            } else {
                check(a.weight == b.weight, "inhibitory weight changed")?;
            }
        }
    }
    check(at_max && at_zero, "weights never reached the clamp bounds")?;
    Ok("exact decay at 1/5/10/20 ms, clamp reached both bounds, inhibitory fixed".into())
}

fn quantizer_suite() -> Outcome {
    let levels = 40;
    check(quantize(-3.0, -1.0, 1.0, levels) == 0, "below r1")?;
    check(quantize(-1.0, -1.0, 1.0, levels) == 0, "at r1")?;
    check(quantize(1.0, -1.0, 1.0, levels) == levels - 1, "at r99")?;
    check(quantize(7.0, -1.0, 1.0, levels) == levels - 1, "above r99")?;
    check(quantize(0.0, -1.0, 1.0, levels) == levels / 2, "midpoint")?;
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..10_000 {
        let r1 = rng.random_range(-100.0..100.0);
        let r99 = r1 + rng.random_range(1e-6..100.0);
        let a = rng.random_range(r1 - 50.0..r99 + 50.0);
        let b = rng.random_range(r1 - 50.0..r99 + 50.0);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let v = rng.random_range(2..=256usize);
        let (ql, qh) = (quantize(lo, r1, r99, v), quantize(hi, r1, r99, v));
        check(ql <= qh && qh < v, format!("not monotone: {lo} -> {ql}, {hi} -> {qh} over [{r1}, {r99}]"))?;
    }
    Ok("boundaries exact, monotone over 10^4 random triples".into())
}

fn random_hmm(rng: &mut StdRng, k: usize, s: usize) -> DiscreteHmm {
    let mut dist = |n: usize| {
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let t: f64 = w.iter().sum();
        w.into_iter().map(|x| x / t).collect::<Vec<f64>>()
    };
    DiscreteHmm { pi: dist(k), trans: (0..k).map(|_| dist(k)).collect(), emit: (0..k).map(|_| dist(s)).collect() }
}

/// Joint probability of every state path, with per-frame state marginals.
#[allow(clippy::needless_range_loop)]
fn enumerate_paths(h: &DiscreteHmm, obs: &[usize]) -> (f64, Vec<Vec<f64>>) {
    let k = h.pi.len();
    let mut total = 0.0;
    let mut marg = vec![vec![0.0; k]; obs.len()];
    for code in 0..k.pow(obs.len() as u32) {
        let path: Vec<usize> = (0..obs.len()).map(|t| code / k.pow(t as u32) % k).collect();
        let mut p = h.pi[path[0]] * h.emit[path[0]][obs[0]];
        for t in 1..obs.len() {
            p *= h.trans[path[t - 1]][path[t]] * h.emit[path[t]][obs[t]];
        }
        total += p;
        for (t, &s) in path.iter().enumerate() {
            marg[t][s] += p;
        }
    }
    (total, marg)
}

#[allow(clippy::needless_range_loop)]
fn hmm_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(4);
    let mut cases = 0;
    for k in 1..=3 {
        for s in 1..=4 {
            for len in 1..=4 {
                let h = random_hmm(&mut rng, k, s);
                for code in 0..s.pow(len as u32) {
                    let obs: Vec<usize> = (0..len).map(|t| code / s.pow(t as u32) % s).collect();
                    let (p, marg) = enumerate_paths(&h, &obs);
                    let log_emit: Vec<f64> =
                        obs.iter().flat_map(|&o| (0..k).map(move |j| (o, j))).map(|(o, j)| h.emit[j][o].ln()).collect();
                    let ll = forward_log_likelihood(&h.pi, &h.trans, &log_emit);
                    check((ll.exp() - p).abs() <= 1e-10, format!("k={k} s={s} obs={obs:?}: {} vs {p}", ll.exp()))?;
                    let post = Posteriors::compute(&h.pi, &h.trans, &log_emit).ok_or("posteriors failed")?;
                    for t in 0..len {
                        for j in 0..k {
                            let want = marg[t][j] / p;
                            let got = post.gamma[t * k + j];
                            check((got - want).abs() <= 1e-10, format!("gamma k={k} obs={obs:?} t={t}: {got} vs {want}"))?;
                        }
                    }
                    cases += 1;
                }
            }
        }
    }
    let cfg = EmConfig { max_iter: 60, tol: 0.0, restarts: 1 };
    for seed in 0..100u64 {
        let mut rng = StdRng::seed_from_u64(1000 + seed);
        let (k, s) = (rng.random_range(1..=4), rng.random_range(2..=5));
        let seqs: Vec<Vec<u8>> = (0..rng.random_range(1..6))
            .map(|_| (0..rng.random_range(1..30)).map(|_| rng.random_range(0..s) as u8).collect())
            .collect();
        let mut h = random_hmm(&mut rng, k, s);
        let trace = h.train(&seqs, &cfg).map_err(|e| e.to_string())?;
        let lls = &trace.log_likelihoods;
        check(lls.windows(2).all(|w| w[1] >= w[0] - 1e-8), format!("seed {seed}: log-likelihood fell: {lls:?}"))?;
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(30), format!("took {elapsed:?}"))?;
    Ok(format!("{cases} sequences match enumeration; 100 Baum-Welch runs monotone; {elapsed:.1?}"))
}

fn set_similarity(a: &BTreeSet<u16>, b: &BTreeSet<u16>) -> f64 {
    let inter = a.intersection(b).count();
    if inter == a.len() || inter == b.len() {
        1.0
    } else {
        inter as f64 / a.union(b).count() as f64
    }
}

/// Longest subsequence of `p` that embeds in order into `q`, by trying every
/// subset of `p`.
fn brute_lcs(p: &[BTreeSet<u16>], q: &[BTreeSet<u16>], eps: f64) -> usize {
    let mut best = 0;
    for mask in 0u32..(1 << p.len()) {
        let pick: Vec<&BTreeSet<u16>> = (0..p.len()).filter(|i| mask >> i & 1 == 1).map(|i| &p[i]).collect();
        if pick.len() <= best {
            continue;
        }
        let mut j = 0;
        let embeds = pick.iter().all(|a| {
            while j < q.len() && set_similarity(a, &q[j]) < eps {
                j += 1;
            }
            let ok = j < q.len();
            j += 1;
            ok
        });
        if embeds {
            best = pick.len();
        }
    }
    best
}

fn lcs_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let random_seq = |rng: &mut StdRng| -> Vec<BTreeSet<u16>> {
        let len = rng.random_range(1..=8);
        (0..len)
            .map(|_| {
                let mut s = BTreeSet::new();
                for _ in 0..rng.random_range(1..=3) {
                    s.insert(rng.random_range(0..6u16));
                }
                s
            })
            .collect()
    };
    let group = |seq: &[BTreeSet<u16>]| PngGroup {
        sequence: seq.iter().map(|s| NeuronSet::from_neurons(&s.iter().copied().collect::<Vec<_>>()).unwrap()).collect(),
    };
    for case in 0..500 {
        let (p, q) = (random_seq(&mut rng), random_seq(&mut rng));
        let eps = [0.3, 0.5, 0.75, 1.0][case % 4];
        let want = brute_lcs(&p, &q, eps) as f64 / p.len().min(q.len()) as f64;
        let got = lcs_similarity(&group(&p), &group(&q), eps).map_err(|e| e.to_string())?;
        check(got == want, format!("case {case}: {got} vs {want}"))?;
    }
    Ok("500 random pairs match subsequence enumeration exactly".into())
}

fn metric_suite() -> Outcome {
    check(f1(8, 2, 2) == 0.8, "f1(8,2,2)")?;
    check(f1(5, 0, 0) == 1.0, "perfect f1")?;
    check(f1(0, 5, 0) == 0.0, "degenerate f1")?;
    let w = |f: &[f64], n: &[usize]| weighted_f1(f, n).unwrap();
    check(w(&[0.2, 0.6], &[10, 10]) == (0.2 + 0.6) / 2.0, "equal weights")?;
    check(w(&[0.7], &[13]) == 0.7, "single class")?;
    check(w(&[1.0, 0.0], &[90, 10]) == 0.9, "(90, 10)")?;
    check(weighted_f1(&[0.5], &[0]).is_err(), "empty classes accepted")?;
    check(auc(&[1.0; 10]).unwrap() == 1.0, "auc of ones")?;
    check(auc(&[0.5; 10]).unwrap() == 0.5, "auc of halves")?;
    let mut spike = [0.0; 10];
    spike[9] = 1.0;
    check(auc(&spike).unwrap() == 0.1, "auc point mass")?;
    check(auc(&[1.0; 9]).is_err(), "missing tau accepted")?;
    check(mad(&[0.9, 0.9, 0.9]).unwrap() == 0.0, "mad constant")?;
    let m = mad(&[0.8, 0.9, 1.0]).unwrap();
    check((m - 0.1).abs() < 1e-15, format!("mad (0.8, 0.9, 1.0) = {m}"))?;
    check(mad(&[]).is_err(), "mad of nothing")?;
    check(format_median_mad(&[0.922, 0.932, 0.942]).unwrap() == "0.932 ± 0.010", "table format")?;
    check(cohen_kappa(&[0, 1, 1, 0, 1], &[0, 1, 1, 0, 1]).unwrap() == 1.0, "kappa identical")?;
    check(cohen_kappa(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap() == 0.5, "kappa hand example")?;
    check(cohen_kappa(&[0, 1], &[0]).is_err(), "kappa length mismatch")?;
    let mut rng = StdRng::seed_from_u64(6);
    let a: Vec<u8> = (0..10_000).map(|_| rng.random_range(0..2)).collect();
    let b: Vec<u8> = (0..10_000).map(|_| rng.random_range(0..2)).collect();
    let k = cohen_kappa(&a, &b).unwrap();
    check(k.abs() < 0.05, format!("independent kappa {k}"))?;
    for _ in 0..1000 {
        let c: f64 = rng.random_range(0.0..=1.0);
        let got = auc(&[c; 10]).unwrap();
        check((got - c).abs() <= 1e-12, format!("auc(const {c}) = {got}"))?;
    }
    Ok(format!("all worked examples exact; independent kappa {k:.4}"))
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig::default();
    let exec = ThreadPoolExecutor::new(4).map_err(|e| e.to_string())?;
    // The budget is 10 minutes on four cores; fewer cores get a
    // proportionally longer allowance.
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get()).min(4);
    let budget = Duration::from_secs(600 * 4 / cores as u64);
    let start = Instant::now();
    let summary = run_experiment(&cfg, dir.path(), &exec).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let t = &summary.methods["ttsnet"];
    let png = &summary.methods["png"];
    let give = &summary.always_give;
    let report = format!(
        "TTSNet F1(0.1) {:.3} F1(1.0) {:.3} AUC {:.3}; PNG AUC {:.3}; always-give AUC {:.3}; {:.0?} on {} threads, {} cores",
        t.f1_mean[0],
        t.f1_mean[9],
        t.auc,
        png.auc,
        give.auc,
        elapsed,
        exec.threads(),
        cores
    );
    let mut failures = Vec::new();
    if t.f1_mean[9] < 0.90 {
        failures.push("F1(1.0) < 0.90");
    }
    if t.f1_mean[9] < t.f1_mean[0] {
        failures.push("F1(1.0) < F1(0.1)");
    }
    if t.auc <= give.auc {
        failures.push("AUC not above always-give");
    }
    if t.auc <= png.auc {
        failures.push("AUC not above PNG");
    }
    if elapsed > budget {
        failures.push("over the time budget");
    }
    if failures.is_empty() {
        Ok(report)
    } else {
        Err(format!("{}: {report}", failures.join(", ")))
    }
}

fn object_benchmark() -> Outcome {
    let corpus = generate_synthetic(&SyntheticConfig::default(), 7).map_err(|e| e.to_string())?;
    let exec = ThreadPoolExecutor::new(4).map_err(|e| e.to_string())?;
    let folds = evaluate_objects(&corpus, &ObjectConfig::default(), 7, &exec).map_err(|e| e.to_string())?;
    let hmm: Vec<f64> = folds.iter().map(|f| f.hmm_weighted_f1).collect();
    let bigram: Vec<f64> = folds.iter().map(|f| f.bigram_weighted_f1).collect();
    let (mh, mb) = (median_lower(&hmm).unwrap(), median_lower(&bigram).unwrap());
    let report = format!(
        "{} folds; HMM {}, bigram {}, uniform {:.3}",
        folds.len(),
        format_median_mad(&hmm).unwrap(),
        format_median_mad(&bigram).unwrap(),
        1.0 / 6.0
    );
    check(folds.len() == 12, format!("{} folds", folds.len()))?;
    check(mh > 1.0 / 6.0, format!("HMM not above uniform: {report}"))?;
    check(mh > mb, format!("HMM not above bigram: {report}"))?;
    Ok(report)
}

fn determinism() -> Outcome {
    let cfg = ExperimentConfig {
        corpus: CorpusSource::Synthetic(SyntheticConfig {
            n_subjects: 3,
            events_per_subject: 16,
            trials_per_subject: 4,
            ..Default::default()
        }),
        ttsnet: ttsnet_core::ttsnet::TtsnetConfig {
            stdp: ttsnet_core::snn::TrainConfig { presentations: 30, ..Default::default() },
            ..Default::default()
        },
        png: ttsnet_core::baselines::PngConfig { templates_per_class: 3, ..Default::default() },
        ishii: ttsnet_core::baselines::IshiiConfig { c_grid: vec![1.0, 10.0], gamma_grid: vec![0.01], ..Default::default() },
        ..Default::default()
    };
    let mut outputs = Vec::new();
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, threads) in dirs.iter().zip([1, 1, 4]) {
        let exec = ThreadPoolExecutor::new(threads).map_err(|e| e.to_string())?;
        run_experiment(&cfg, dir.path(), &exec).map_err(|e| e.to_string())?;
        let mut files = vec!["summary.json".to_string()];
        files.extend(Method::ALL.iter().map(|m| format!("curve_{}.csv", m.name())));
        let bytes: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(dir.path().join(f)).unwrap()).collect();
        outputs.push(bytes);
    }
    check(outputs[0] == outputs[1], "repeat run differs")?;
    check(outputs[0] == outputs[2], "4-thread run differs")?;
    Ok("summary.json and 4 curve CSVs byte-identical across repeat and --threads 4".into())
}

fn main() {
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [Criterion; 9] = [
        ("1 neuron dynamics", neuron_dynamics),
        ("2 stdp", stdp_suite),
        ("3 quantizer", quantizer_suite),
        ("4 hmm oracle", hmm_oracle),
        ("5 lcs oracle", lcs_oracle),
        ("6 metrics", metric_suite),
        ("7 end-to-end benchmark", end_to_end),
        ("8 object prediction", object_benchmark),
        ("9 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        match run() {
            Ok(detail) => println!("criterion {name}: PASS ({detail})"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL ({detail})");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
