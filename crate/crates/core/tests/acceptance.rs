//! Quantitative acceptance suite. Prints one line per criterion and exits
//! with status 1 if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use lora_tbma::baseline::distinct_resources;
use lora_tbma::channel::{ScenarioKind, SPEED_OF_LIGHT};
use lora_tbma::rng::{derive_seed, rng_from_seed};
use lora_tbma::*;

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

/// Upper tail of the standard normal by composite Simpson quadrature of the
/// density on `[x, x + 12]`.
fn q_quadrature(x: f64) -> f64 {
    let steps = 20_000;
    let h = 12.0 / steps as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
    let mut acc = pdf(x) + pdf(x + 12.0);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * pdf(x + i as f64 * h);
    }
    acc * h / 3.0
}

fn ser_oracle(snr: f64, n: usize) -> f64 {
    ((n - 1) as f64 * q_quadrature(snr.sqrt())).min(1.0)
}

/// Exact error rate of `n` orthogonal equal-energy signals with coherent
/// detection, `1 - ∫ φ(z) Φ(z + √(2 snr))^(n-1) dz`.
fn ser_exact_orthogonal(snr: f64, n: usize) -> f64 {
    let a = (2.0 * snr).sqrt();
    let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    let cdf = |z: f64| 0.5 * libm::erfc(-z / 2f64.sqrt());
    let steps = 24_000;
    let h = 24.0 / steps as f64;
    let g = |z: f64| phi(z) * cdf(z + a).powi(n as i32 - 1);
    let mut acc = g(-12.0) + g(12.0);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(-12.0 + i as f64 * h);
    }
    1.0 - acc * h / 3.0
}

/// Linear SNR at which `ser_oracle` equals `target`, by bisection.
fn snr_for_ser(target: f64, n: usize) -> f64 {
    let (mut lo, mut hi) = (1.0, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ser_oracle(mid, n) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn within_budget(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn round_trip() -> Outcome {
    let start = Instant::now();
    let mut failures = 0usize;
    let mut checked = 0usize;
    for n in [8, 64, 256] {
        for f_mod in [0.0, 0.5] {
            let cfg = ModulationConfig::with_levels(n)
                .and_then(|c| c.with_spreading_rate(f_mod))
                .unwrap();
            let modem = Modem::new(cfg.clone());
            let params = cfg.chirp_params();
            for m in 0..n {
                let sym = Measurement::new(m, n).unwrap();
                let via_modem = modem.demodulate(&modem.transmit(sym).unwrap()).unwrap();
                let tone = if f_mod == 0.0 {
                    modulate_single_tone(sym, &cfg).unwrap()
                } else {
                    analytic_tone(sym, &cfg).unwrap()
                };
                let on_air = spread(&tone, &params).unwrap();
                let back = demodulate(&despread(&on_air, &params).unwrap(), &cfg).unwrap();
                checked += 2;
                failures += usize::from(via_modem.symbol != sym);
                failures += usize::from(back.symbol != sym);
            }
        }
    }
    let t = start.elapsed();
    outcome(
        failures == 0 && within_budget(t, 10.0),
        format!(
            "{failures}/{checked} symbol errors, {:.2} s (limit 10 s)",
            t.as_secs_f64()
        ),
    )
}

fn transform_fidelity() -> Outcome {
    let start = Instant::now();
    let n = 256;
    let mut rng = rng_from_seed(2);
    let (mut worst_pair, mut worst_parseval) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let coeffs = dct_forward(&x).unwrap();
        let back = dct_inverse(&coeffs).unwrap();
        let ex: f64 = x.iter().map(|v| v * v).sum();
        let ec: f64 = coeffs.iter().map(|v| v * v).sum();
        let diff: f64 = x.iter().zip(&back).map(|(a, b)| (a - b).powi(2)).sum();
        worst_pair = worst_pair.max((diff / ex).sqrt());
        worst_parseval = worst_parseval.max((ec - ex).abs() / ex);
    }
    let t = start.elapsed();
    outcome(
        worst_pair <= 1e-10 && worst_parseval <= 1e-10 && within_budget(t, 1.0),
        format!(
            "pair {worst_pair:.2e}, Parseval {worst_parseval:.2e} (tol 1e-10), {:.2} s (limit 1 s)",
            t.as_secs_f64()
        ),
    )
}

fn ser_agreement() -> Outcome {
    let start = Instant::now();
    let n = 256;
    let snr = 16.0;
    let predicted = ser_oracle(snr, n);
    let library = symbol_error_probability(snr, n).unwrap();
    let exact = ser_exact_orthogonal(snr, n);
    let modem = Modem::new(ModulationConfig::with_levels(n).unwrap());
    let ch = ChannelRealization::from_symbol_snr(snr, 1.0, 1.0).unwrap();
    let symbols = 100_000usize;
    let chunks = 100usize;
    let errors: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from_seed(derive_seed(&[3, c as u64]));
            let mut errs = 0;
            for _ in 0..symbols / chunks {
                let sym = Measurement::from_index(rng.random_range(0..n));
                let y = apply_channel(&modem.transmit(sym).unwrap(), &ch, &mut rng);
                errs += usize::from(modem.demodulate(&y).unwrap().symbol != sym);
            }
            errs
        })
        .sum();
    let ser = errors as f64 / symbols as f64;
    let rel = (ser - predicted).abs() / predicted;
    let t = start.elapsed();
    outcome(
        rel <= 0.3
            && (predicted - 8.076e-3).abs() < 5e-7
            && (library - predicted).abs() < 1e-9
            && within_budget(t, 60.0),
        format!(
            "SER {ser:.4e} vs predicted {predicted:.4e} ({:+.1}%, tol 30%); \
             exact orthogonal-signalling SER {exact:.4e}; {:.1} s (limit 60 s)",
            100.0 * (ser - predicted) / predicted,
            t.as_secs_f64()
        ),
    )
}

fn noise_scaling() -> Outcome {
    let start = Instant::now();
    let n = 256;
    let n0 = 1.0 / 16.0;
    let modem = Modem::new(ModulationConfig::with_levels(n).unwrap());
    let trials = 10_000usize;
    let users = [10usize, 100, 1000];
    let mut points = Vec::new();
    for &l in &users {
        let mut rng = rng_from_seed(derive_seed(&[4, l as u64]));
        let ms = sample_measurements(128.0, 16.0, l, n, &mut rng).unwrap();
        let exact = EmpiricalMeasure::from_measurements(&ms, n).unwrap();
        let sum_sq: f64 = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_from_seed(derive_seed(&[4, l as u64, t as u64]));
                let y = superpose(&ms, None, &modem, n0, &mut rng).unwrap();
                let r = recover_empirical_measure(&y, l, &modem).unwrap();
                r.values()
                    .iter()
                    .zip(exact.values())
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
            })
            .sum();
        let var = sum_sq / (trials * n) as f64;
        points.push(((l as f64).log10(), var.log10()));
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let t = start.elapsed();
    outcome(
        (slope + 2.0).abs() <= 0.1 && within_budget(t, 120.0),
        format!(
            "log-log slope {slope:.4} (target -2 +/- 0.1), {:.1} s (limit 120 s)",
            t.as_secs_f64()
        ),
    )
}

fn nmse_ordering() -> Outcome {
    let start = Instant::now();
    let n = 256;
    let snr_db = 10.0 * snr_for_ser(1e-2, n).log10();
    let users = [10usize, 100, 1000];
    let cfg = ExperimentConfig {
        snr_db: vec![snr_db],
        users: users.to_vec(),
        sigma_x: 4.0,
        trials: 200,
        seed: 5,
        ..ExperimentConfig::default()
    };
    let out = sweep(&cfg).unwrap();
    let nmse = |s: Scheme, l: usize| out.aggregate(s, l, snr_db).unwrap().nmse_db;
    let tbma: Vec<f64> = users.iter().map(|&l| nmse(Scheme::Tbma, l)).collect();
    let tdma: Vec<f64> = users.iter().map(|&l| nmse(Scheme::Tdma, l)).collect();
    let ordered = tbma[2] < tbma[1] && tbma[1] < tbma[0];
    let gap = tdma[1] - tbma[1];
    let spread = tdma.iter().cloned().fold(f64::MIN, f64::max)
        - tdma.iter().cloned().fold(f64::MAX, f64::min);
    let t = start.elapsed();
    let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
    outcome(
        ordered && gap >= 3.0 && spread < 1.0 && within_budget(t, 300.0),
        format!(
            "snr {snr_db:.2} dB; TBMA NMSE [{:.2}, {:.2}, {:.2}] dB ordered {}; \
             TBMA(100) gain over TDMA(100) {gap:.2} dB (>= 3) {}; \
             TDMA NMSE [{:.2}, {:.2}, {:.2}] dB spread {spread:.2} dB (< 1) {}; {:.1} s",
            tbma[0],
            tbma[1],
            tbma[2],
            mark(ordered),
            mark(gap >= 3.0),
            tdma[0],
            tdma[1],
            tdma[2],
            mark(spread < 1.0),
            t.as_secs_f64()
        ),
    )
}

fn kl_decreasing() -> Outcome {
    let start = Instant::now();
    let users = [10usize, 50, 100, 500, 1000];
    let cfg = ExperimentConfig {
        schemes: vec![Scheme::Tbma],
        snr_db: vec![30.0],
        users: users.to_vec(),
        trials: 200,
        seed: 6,
        ..ExperimentConfig::default()
    };
    let out = sweep(&cfg).unwrap();
    let kl: Vec<f64> = users
        .iter()
        .map(|&l| out.aggregate(Scheme::Tbma, l, 30.0).unwrap().mean_kl)
        .collect();
    let decreasing = kl.windows(2).all(|w| w[1] < w[0]);
    let t = start.elapsed();
    let shown: Vec<String> = kl.iter().map(|v| format!("{v:.4}")).collect();
    outcome(
        decreasing && within_budget(t, 300.0),
        format!(
            "mean KL at 30 dB [{}], {:.1} s (limit 300 s)",
            shown.join(", "),
            t.as_secs_f64()
        ),
    )
}

fn link_budget() -> Outcome {
    let (d, f) = (600e3, 915e6);
    let oracle = 20.0 * (4.0 * PI * d * f / SPEED_OF_LIGHT).log10();
    let fspl = free_space_path_loss(d, f).unwrap();
    let ul = scenario_preset(ScenarioKind::Ul)
        .budget
        .path_loss_db()
        .unwrap();
    let dl = scenario_preset(ScenarioKind::Dl)
        .budget
        .path_loss_db()
        .unwrap();
    let snr = |k| scenario_preset(k).link_snr_db().unwrap();
    let geo = snr(ScenarioKind::IslGeo);
    let others = [
        snr(ScenarioKind::Ul),
        snr(ScenarioKind::Dl),
        snr(ScenarioKind::IslLeo),
    ];
    let fspl_ok = [oracle, fspl, ul, dl]
        .iter()
        .all(|v| (v - 147.2).abs() <= 0.1)
        && (fspl - oracle).abs() < 1e-9;
    let order_ok = others.iter().all(|&s| geo < s);
    outcome(
        fspl_ok && order_ok,
        format!(
            "FSPL {fspl:.3} dB (oracle {oracle:.3}, target 147.2 +/- 0.1); \
             SNR ISL-GEO {geo:.1} dB vs UL/DL/ISL-LEO {:.1}/{:.1}/{:.1} dB",
            others[0], others[1], others[2]
        ),
    )
}

fn estimator_consistency() -> Outcome {
    let start = Instant::now();
    let n = 256;
    let sigma = 16.0;
    let model = ParameterModel::full_range(n, sigma).unwrap();
    let mut rng = rng_from_seed(8);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let theta: f64 = rng.random_range(0.0..(n - 1) as f64);
        let r = EmpiricalMeasure::new(discretize_gaussian(theta, sigma, n).unwrap());
        let est = ml_estimate(&r, &model).unwrap();
        worst = worst.max((est.theta - theta).abs());
    }
    let t = start.elapsed();
    outcome(
        worst <= 0.1 + 1e-9 && within_budget(t, 30.0),
        format!(
            "worst |theta_hat - theta| {worst:.4} (tol 0.1), {:.2} s (limit 30 s)",
            t.as_secs_f64()
        ),
    )
}

fn determinism() -> Outcome {
    let cfg = ExperimentConfig {
        snr_db: vec![0.0, 15.0],
        users: vec![10, 100],
        trials: 20,
        seed: 9,
        ..ExperimentConfig::default()
    };
    let run = || {
        let mut buf = Vec::new();
        sweep(&cfg).unwrap().write_csv(&mut buf).unwrap();
        buf
    };
    let (a, b) = (run(), run());
    outcome(
        a == b,
        format!("{} vs {} bytes, identical: {}", a.len(), b.len(), a == b),
    )
}

fn resource_accounting() -> Outcome {
    let n = 256;
    let mut ok = true;
    let mut rows = Vec::new();
    for l in [10usize, 50, 100, 500, 1000] {
        let tdma = resource_report(Scheme::Tdma, l, n).unwrap();
        let tbma = resource_report(Scheme::Tbma, l, n).unwrap();
        let mut rng = rng_from_seed(derive_seed(&[10, l as u64]));
        let used = distinct_resources(&sample_measurements(128.0, 16.0, l, n, &mut rng).unwrap());
        ok &= tdma.time_slots == l * tbma.time_slots;
        ok &= tbma.occupied_resources <= n && used <= tbma.occupied_resources;
        rows.push(format!(
            "L={l}: delay {}/{} tones {}<={n}",
            tdma.time_slots, tbma.time_slots, used
        ));
    }
    outcome(ok, rows.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("round-trip", round_trip),
        ("transform-fidelity", transform_fidelity),
        ("ser-agreement", ser_agreement),
        ("noise-scaling", noise_scaling),
        ("nmse-ordering", nmse_ordering),
        ("kl-decreasing", kl_decreasing),
        ("link-budget", link_budget),
        ("estimator-consistency", estimator_consistency),
        ("determinism", determinism),
        ("resource-accounting", resource_accounting),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {name}: {}", i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
