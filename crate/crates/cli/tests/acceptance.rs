//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Criteria that name a command run the real binary.
//!
//! Run with `cargo test -p smallcell-cli --test acceptance`.

use smallcell::montecarlo::{estimate_sinr_rate, sample_patterns, TypicalUserDraws};
use smallcell::network::pmf_cutoff;
use smallcell::rate::{all_on_rate, user_share};
use smallcell::{
    appendix_objectives, avg_rate, efficiency, hyp2f1, outage, rho, user_count_pmf, void_probability, EstimatorOutput,
    Hyp2F1Args, NetworkParams, PowerMode, QuadratureConfig, Scenario, SimConfig,
};
use std::process::Command;
use std::time::{Duration, Instant};

const PER_KM2: f64 = 1e-6;
const LAMBDA_U: f64 = 370.0 * PER_KM2;

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new(summary: impl Into<String>) -> Self {
        Self {
            pass: true,
            summary: summary.into(),
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: impl Into<String>) {
        let detail = detail.into();
        self.details.push(format!("[{}] {detail}", if ok { "ok" } else { "FAILED" }));
        self.pass &= ok;
    }
}

fn smallcell(args: &[&str], single_thread: bool) -> (String, Duration, Option<i32>) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_smallcell"));
    cmd.args(args);
    if single_thread {
        cmd.env("RAYON_NUM_THREADS", "1");
    }
    let start = Instant::now();
    let out = cmd.output().expect("smallcell binary runs");
    let elapsed = start.elapsed();
    if !out.stderr.is_empty() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    (String::from_utf8(out.stdout).expect("utf-8 output"), elapsed, out.status.code())
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.expect("well-formed csv"))
        .collect()
}

fn num(record: &csv::StringRecord, i: usize) -> f64 {
    record[i].parse().expect("numeric cell")
}

fn agree(a: &EstimatorOutput, value: f64) -> bool {
    (a.mean - value).abs() <= a.half_width_95
}

fn efficiency_peak() -> Outcome {
    let mut o = Outcome::new("efficiency peak of the on-off network at 370 users/km²");
    let (text, elapsed, code) = smallcell(&["optimize", "--mode", "on-off", "--format", "csv"], true);
    o.check(code == Some(0), format!("optimize exit status {code:?}"));
    let Some(row) = csv_rows(&text).into_iter().next() else {
        o.check(false, "no output row");
        return o;
    };
    let (lambda_star, eta_star) = (num(&row, 2), num(&row, 3));
    o.check(
        (300.0..=366.0).contains(&lambda_star),
        format!("λ* = {lambda_star:.2} /km², window [300, 366]"),
    );
    o.check(
        (0.21..=0.27).contains(&eta_star),
        format!("η* = {eta_star:.4} bit/s/Hz/W, window [0.21, 0.27]"),
    );
    o.check(
        elapsed < Duration::from_secs(60),
        format!("single-threaded runtime {:.2} s < 60 s", elapsed.as_secs_f64()),
    );
    o
}

fn outage_calibration() -> Outcome {
    let mut o = Outcome::new("outage at 5 dB: analytic value 0.26 ± 0.02 and Monte Carlo agreement");
    let params = NetworkParams::picocell();
    let quad = QuadratureConfig::default();
    let threshold = 10f64.powf(0.5);
    let scenario = Scenario::new(LAMBDA_U, LAMBDA_U, PowerMode::AllOn).unwrap();
    let analytic = outage(&scenario, threshold, &params, &quad).unwrap().value;
    o.check(
        (analytic - 0.26).abs() <= 0.02,
        format!("analytic all-on outage {analytic:.4}, target 0.26 ± 0.02"),
    );
    let config = SimConfig::for_density(LAMBDA_U, 2, 200);
    let patterns = sample_patterns(LAMBDA_U, LAMBDA_U, &config).unwrap();
    let est = TypicalUserDraws::collect(&patterns, PowerMode::AllOn, &params, &config).outage(threshold);
    o.check(est.n_draws >= 10_000, format!("{} SINR draws", est.n_draws));
    o.check(
        agree(&est, analytic),
        format!(
            "Monte Carlo {:.4} ± {:.4} vs analytic {analytic:.4}",
            est.mean, est.half_width_95
        ),
    );
    o
}

fn user_rate_agreement() -> Outcome {
    let mut o = Outcome::new("user rate, analytic vs Monte Carlo at μ ∈ {0.5, 1, 2, 4}, both modes");
    let (text, elapsed, code) = smallcell(
        &["user-rate-sweep", "--mu", "0.5,1,2,4", "--realizations", "200", "--seed", "3"],
        false,
    );
    o.check(code == Some(0), format!("user-rate-sweep exit status {code:?}"));
    let rows = csv_rows(&text);
    o.check(rows.len() == 8, format!("{} rows", rows.len()));
    for row in &rows {
        let (mu, mode) = (num(row, 0), &row[1]);
        let (analytic, mc, hw) = (num(row, 2), num(row, 3), num(row, 4));
        o.check(
            (analytic - mc).abs() <= hw,
            format!(
                "μ = {mu}, {mode}: analytic {analytic:.4}, Monte Carlo {mc:.4} ± {hw:.4} (gap {:+.4})",
                mc - analytic
            ),
        );
    }
    for pair in rows.chunks(2) {
        if let [all_on, on_off] = pair {
            let mu = num(all_on, 0);
            o.check(
                num(on_off, 2) >= num(all_on, 2) && num(on_off, 3) >= num(all_on, 3),
                format!("μ = {mu}: on-off ≥ all-on (analytic and Monte Carlo)"),
            );
        }
    }
    o.check(
        elapsed < Duration::from_secs(600),
        format!("runtime {:.1} s < 600 s", elapsed.as_secs_f64()),
    );
    o
}

fn dominance() -> Outcome {
    let mut o = Outcome::new("on-off efficiency ≥ all-on efficiency on 32 log points over [30, 370] BSs/km²");
    let (text, _, code) = smallcell(
        &["efficiency-sweep", "--lambda-b-min", "30", "--lambda-b-max", "370", "--points", "32"],
        false,
    );
    o.check(code == Some(0), format!("efficiency-sweep exit status {code:?}"));
    let rows = csv_rows(&text);
    let eta = |mode: &str| -> Vec<f64> { rows.iter().filter(|r| &r[2] == mode).map(|r| num(r, 3)).collect() };
    let (e1, e2) = (eta("all-on"), eta("on-off"));
    o.check(e1.len() == 32 && e2.len() == 32, format!("{} + {} points", e1.len(), e2.len()));
    let worst = e1.iter().zip(&e2).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min);
    o.check(
        e1.iter().zip(&e2).all(|(a, b)| b >= a),
        format!("smallest margin η₂ − η₁ = {worst:.3e}"),
    );
    o
}

fn density_independence() -> Outcome {
    let mut o = Outcome::new("all-on link rate independent of BS density (100, 333, 1000 /km²)");
    let params = NetworkParams::picocell();
    let quad = QuadratureConfig::default();
    let densities = [100.0 * PER_KM2, 333.0 * PER_KM2, 1000.0 * PER_KM2];
    let analytic: Vec<f64> = densities
        .iter()
        .map(|&lb| avg_rate(&Scenario::new(lb, LAMBDA_U, PowerMode::AllOn).unwrap(), &params, &quad).unwrap().value)
        .collect();
    let spread = analytic.iter().map(|c| (c / analytic[0] - 1.0).abs()).fold(0.0, f64::max);
    o.check(
        spread <= 2.0 * quad.rel_tol,
        format!("analytic C₁ = {:.10}, max relative spread {spread:.1e} ≤ {:.0e}", analytic[0], 2.0 * quad.rel_tol),
    );
    let est: Vec<EstimatorOutput> = densities
        .iter()
        .map(|&lb| {
            let config = SimConfig::for_density(lb, 5, 200);
            let patterns = sample_patterns(lb, LAMBDA_U, &config).unwrap();
            estimate_sinr_rate(&patterns, PowerMode::AllOn, &params, &config)
        })
        .collect();
    let mut overlap = true;
    for i in 0..3 {
        for j in i + 1..3 {
            overlap &= (est[i].mean - est[j].mean).abs() <= est[i].half_width_95 + est[j].half_width_95;
        }
    }
    let shown: Vec<String> = est.iter().map(|e| format!("{:.4} ± {:.4}", e.mean, e.half_width_95)).collect();
    o.check(overlap, format!("Monte Carlo intervals overlap: {}", shown.join(", ")));
    o
}

fn property_suites() -> Outcome {
    let mut o = Outcome::new("property suites");
    let params = NetworkParams::picocell();
    let quad = QuadratureConfig::default();

    let mut pmf_ok = true;
    let mut p0_ok = true;
    for mu in [0.01, 0.1, 0.5, 1.0, 2.0, 4.0, 10.0, 50.0] {
        let (mut mass, mut mean) = (0.0, 0.0);
        for n in 0..=pmf_cutoff(mu) {
            let p = user_count_pmf(n, mu);
            mass += p;
            mean += n as f64 * p;
        }
        pmf_ok &= (mass - 1.0).abs() < 1e-10 && (mean - mu).abs() < 1e-8 * mu.max(1.0);
        p0_ok &= (user_count_pmf(0, mu) - void_probability(mu)).abs() < 1e-14;
    }
    o.check(pmf_ok, "cell-count pmf sums to 1 with mean μ");
    o.check(p0_ok, "pmf at n = 0 equals the void probability");

    let mut hyp_ok = true;
    for z in [0.1, 0.7, 0.99, 2.0, 9.0, 1e3] {
        let f = hyp2f1(Hyp2F1Args::new(1.0, 1.0, 2.0, -z)).unwrap();
        hyp_ok &= (f - z.ln_1p() / z).abs() < 1e-13 * f;
        let s = z.sqrt();
        let g = hyp2f1(Hyp2F1Args::new(0.5, 1.0, 1.5, -z)).unwrap();
        hyp_ok &= (g - s.atan() / s).abs() < 1e-13 * g;
        let (a, b, c) = (0.3, 0.8, 1.9);
        let lhs = hyp2f1(Hyp2F1Args::new(a, b, c, -z)).unwrap();
        let rhs = hyp2f1(Hyp2F1Args::new(b, a, c, -z)).unwrap();
        hyp_ok &= (lhs - rhs).abs() < 1e-12 * lhs;
    }
    o.check(hyp_ok, "₂F₁ logarithm, arctangent and symmetry identities");
    let alpha4 = [1e-3, 0.5, 3.0, 40.0, 1e6]
        .iter()
        .all(|&t: &f64| (rho(t, 4.0).unwrap() / (t.sqrt() * t.sqrt().atan()) - 1.0).abs() < 1e-12);
    o.check(alpha4, "ρ(T, 4) = √T arctan √T");

    let mus: Vec<f64> = (0..200).map(|k| 1e-4 * 1.08f64.powi(k)).collect();
    let share_ok = mus.windows(2).all(|w| user_share(w[1]) < user_share(w[0]))
        && (user_share(1e-9) - 1.0).abs() < 1e-9;
    o.check(share_ok, "(1 − p₀(μ))/μ decreasing with limit 1 at μ → 0");

    let loose = QuadratureConfig {
        rel_tol: 1e-6,
        abs_tol: 1e-9,
        ..quad
    };
    let tight = QuadratureConfig {
        rel_tol: 5e-7,
        abs_tol: 5e-10,
        ..quad
    };
    let mut halving_ok = true;
    for mode in PowerMode::BOTH {
        for mu in [0.5, 1.0, 2.0] {
            let s = Scenario::from_load(LAMBDA_U, mu, mode).unwrap();
            let a = avg_rate(&s, &params, &loose).unwrap();
            let b = avg_rate(&s, &params, &tight).unwrap();
            halving_ok &= (a.value - b.value).abs() <= a.abs_error_estimate;
        }
    }
    o.check(halving_ok, "halving the quadrature tolerance moves C_k by less than the error estimate");

    let c1 = all_on_rate(&params, &quad).unwrap().value;
    let mut recip = 0.0_f64;
    for mu in [0.25, 0.5, 1.0] {
        let s = Scenario::from_load(LAMBDA_U, mu, PowerMode::AllOn).unwrap();
        let eta = efficiency(&s, &params, &quad).unwrap().eta;
        let obj = appendix_objectives(mu, LAMBDA_U, &params).unwrap();
        recip = recip.max((1.0 / eta / (obj.g / (obj.q * c1)) - 1.0).abs());
    }
    o.check(recip < 1e-12, format!("1/η₁ = g/(q C₁), max relative gap {recip:.1e}"));

    let dump = |seed: &str| smallcell(&["dump-pattern", "--seed", seed, "--realization", "7"], false).0;
    let sweep = || smallcell(&["user-rate-sweep", "--mu", "1", "--realizations", "8", "--seed", "11"], false).0;
    let same = dump("4") == dump("4") && sweep() == sweep();
    o.check(same && dump("4") != dump("5"), "identical seed gives byte-identical output");
    o
}

fn optimal_density_curve() -> Outcome {
    let mut o = Outcome::new("optimal density against user density (100…1000 /km²) and the fixed-load curve");
    let (text, _, code) = smallcell(
        &[
            "optimize",
            "--mode",
            "on-off",
            "--lambda-u",
            "100,200,300,400,500,600,700,800,900,1000",
            "--format",
            "csv",
        ],
        false,
    );
    o.check(code == Some(0), format!("optimize exit status {code:?}"));
    let rows = csv_rows(&text);
    let star: Vec<f64> = rows.iter().map(|r| num(r, 2)).collect();
    o.check(
        star.len() == 10 && star.windows(2).all(|w| w[1] >= w[0]),
        format!(
            "λ* = [{}] nondecreasing",
            star.iter().map(|v| format!("{v:.1}")).collect::<Vec<_>>().join(", ")
        ),
    );
    let below = rows.iter().all(|r| num(r, 7) <= num(r, 3));
    let load = rows.first().map(|r| num(r, 6)).unwrap_or(f64::NAN);
    o.check(below, format!("fixed-load (μ₀ = {load:.4}) efficiency never above the optimum"));
    o
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 7] = [
        (1, efficiency_peak),
        (2, outage_calibration),
        (3, user_rate_agreement),
        (4, dominance),
        (5, density_independence),
        (6, property_suites),
        (7, optimal_density_curve),
    ];
    let mut failed = Vec::new();
    for (id, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        println!(
            "{} criterion {id}: {} ({:.1} s)",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.summary,
            start.elapsed().as_secs_f64()
        );
        for d in &outcome.details {
            println!("       {d}");
        }
        if !outcome.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 7 criteria pass");
    } else {
        println!("acceptance: {} of 7 criteria fail: {failed:?}", failed.len());
        std::process::exit(1);
    }
}
