//! Acceptance criteria, one pass/fail line each. Set `FHNN_ACCEPT_ONLY`
//! to a comma-separated list of criterion numbers to run a subset.

use std::time::Instant;

use chrono::NaiveDate;
use fhnn_core::config::{Preset, RunConfig};
use fhnn_core::data::{make_windows, SplitSpec, Window, WindowSpec};
use fhnn_core::experiments::{run_trends, TrendsReport};
use fhnn_core::metrics::{median, nse, pooled_nse, windowed_nse};
use fhnn_core::model::{mse, Forecaster, ModelConfig, ModelKind};
use fhnn_core::numerics::{compare_grads, finite_diff_grad, Checkpoint, Matrix};
use fhnn_core::synthetic::{make_fleet, simulate, CatchmentParams, FleetConfig, Regime, Stores};
use fhnn_core::training::{
    fit, median_windowed_nse, predict_ensemble, predict_set, prepare_basin, train_ensemble, train_local, Part, Target,
    TrainConfig, TrainedModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// tolerances
const GRAD_EPS: f64 = 1e-5;
const GRAD_REL: f64 = 1e-4;
const GRAD_ABS: f64 = 1e-8;
const GRAD_SECONDS: f64 = 60.0;
const AFFINE_TOL: f64 = 1e-9;
const AFFINE_TRIALS: usize = 100;
const OVERFIT_NSE: f64 = 0.95;
const OVERFIT_EPOCHS: usize = 500;
const OVERFIT_WINDOWS: usize = 200;
const OVERFIT_SECONDS: f64 = 600.0;
const OVERFIT_LR: f64 = 0.005;
const OVERFIT_BATCH: usize = 4;
const PRETRAIN_GAIN: f64 = 0.02;
const PRETRAIN_GAP: f64 = 0.10;
const PRETRAIN_MIN_BASINS: usize = 5;
const MASS_TOL: f64 = 1e-8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_window(rng: &mut ChaCha8Rng, d_x: usize, t: usize, k: usize) -> Window {
    let mut v = |n: usize| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
    Window {
        x_hist: Matrix::from_vec(t, d_x, v(t * d_x)).unwrap(),
        y_hist: v(t),
        x_fcst: Matrix::from_vec(k, d_x, v(k * d_x)).unwrap(),
        y_fcst: v(k),
        basin: 0,
        t_start: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap(),
        origin: t,
    }
}

fn tiny(kind: ModelKind) -> ModelConfig {
    ModelConfig { kind, d_x: 2, h_enc: 3, m: 2, s: 4, d_z: 6, t_in: 8, k: 3, z_to_cell: false, onehot: 0 }
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let mut worst_rel: f64 = 0.0;
    let mut failures = Vec::new();
    let mut checked = 0;
    for (kind, tf) in [(ModelKind::Fhnn, false), (ModelKind::Lstm, false), (ModelKind::LstmAr, false), (ModelKind::LstmAr, true)] {
        for seed in 0..3u64 {
            let cfg = tiny(kind);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let w = random_window(&mut rng, cfg.d_x, cfg.t_in, cfg.k);
            let mut model = Forecaster::new(cfg, seed).unwrap();
            model.params_mut().zero_grads();
            model.loss_and_grad(&w, 1.0, tf).unwrap();
            let analytic = model.params().grads().to_vec();
            let probe = model.clone();
            let mut ps = model.params().clone();
            let numeric = finite_diff_grad(
                |p| {
                    let mut m = probe.clone();
                    m.params_mut().copy_values_from(p)?;
                    let y = if tf { m.predict_teacher_forced(&w)? } else { m.predict(&w)? };
                    mse(&y, &w.y_fcst)
                },
                &mut ps,
                GRAD_EPS,
            )
            .unwrap();
            let cmp = compare_grads(model.params().names(), &analytic, &numeric);
            checked += cmp.entries.len();
            worst_rel = worst_rel.max(cmp.max_rel_error(1e-6));
            if !cmp.passes(GRAD_REL, GRAD_ABS) || cmp.max_rel_error(1e-6) >= GRAD_REL {
                failures.push(format!("{kind}{} seed {seed}: {}", if tf { " (teacher forced)" } else { "" }, cmp.summary(GRAD_REL, GRAD_ABS)));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs < GRAD_SECONDS;
    outcome(
        pass,
        format!(
            "fhnn/lstm/lstm_ar x 3 seeds, {checked} entries, max rel err (|g|>=1e-6) {worst_rel:.2e}, {secs:.1}s{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn nse_suite() -> Outcome {
    let mut bad = Vec::new();
    let y = [1.0, 2.0, 3.0];
    if nse(&y, &y).unwrap() != 1.0 {
        bad.push("perfect forecast");
    }
    if nse(&y, &[2.0, 2.0, 2.0]).unwrap() != 0.0 {
        bad.push("climatology");
    }
    if nse(&y, &[1.0, 2.0, 4.0]).unwrap() != 0.5 {
        bad.push("(1,2,3) vs (1,2,4)");
    }
    if nse(&[2.0, 2.0], &[1.0, 3.0]).is_ok() {
        bad.push("constant observations");
    }
    let one = windowed_nse(&[y.to_vec()], &[vec![1.0, 2.0, 4.0]]).unwrap();
    if one.mean != 0.5 {
        bad.push("single window");
    }
    // window NSEs 0.4 and 0.8
    let w = windowed_nse(&[vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]], &[vec![0.0, 1.0, 2.0 + 1.2f64.sqrt()], vec![0.0, 1.0, 2.0 + 0.4f64.sqrt()]]).unwrap();
    if (w.mean - 0.6).abs() > 1e-15 {
        bad.push("two windows");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..AFFINE_TRIALS {
        let n = rng.random_range(2..50);
        let obs: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let pred: Vec<f64> = obs.iter().map(|v| v + rng.random_range(-2.0..2.0)).collect();
        let (a, b) = (rng.random_range(0.01..100.0), rng.random_range(-100.0..100.0));
        let t = |v: &[f64]| v.iter().map(|x| a * x + b).collect::<Vec<f64>>();
        let d = (nse(&obs, &pred).unwrap() - nse(&t(&obs), &t(&pred)).unwrap()).abs();
        worst = worst.max(d);
    }
    if worst > AFFINE_TOL {
        bad.push("affine invariance");
    }
    outcome(bad.is_empty(), format!("examples exact, {AFFINE_TRIALS} affine transforms max diff {worst:.1e}{}", if bad.is_empty() { String::new() } else { format!("; failed: {}", bad.join(", ")) }))
}

fn overfit() -> Outcome {
    let preset = RunConfig::preset(Preset::NwsNcrfc);
    let mut fc = FleetConfig::new(1, 4, Regime::WetFlashy, 5);
    fc.steps_per_year = preset.steps_per_year;
    let fleet = make_fleet(&fc).unwrap();
    let raw = &fleet.basins[0].series;
    let cfg = preset.model(ModelKind::Fhnn, raw.d_x());
    let n_train = raw.len() - 2;
    let stride = (n_train - cfg.t_in - cfg.k) / (OVERFIT_WINDOWS - 1);
    let ts = &raw.timestamps;
    let split = SplitSpec { train_start: None, train_end: ts[n_train - 1], val_end: ts[n_train], test_end: ts[n_train + 1] };
    let data = prepare_basin(raw, 0, &split, None, None, Target::Observed).unwrap();
    let mut set = data.windows(WindowSpec::new(cfg.t_in, cfg.k, stride).unwrap(), Part::Train).unwrap();
    set.windows.truncate(OVERFIT_WINDOWS);
    let n = set.windows.len();
    let tc = TrainConfig {
        lr: OVERFIT_LR,
        batch_size: OVERFIT_BATCH,
        max_epochs: OVERFIT_EPOCHS,
        patience: OVERFIT_EPOCHS,
        target_train_nse: Some(OVERFIT_NSE),
        max_seconds: Some(OVERFIT_SECONDS),
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let model = Forecaster::new(cfg, 0).unwrap();
    let out = fit(model, None, std::slice::from_ref(&set), &[], &tc).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let final_nse = median_windowed_nse(&out.model, std::slice::from_ref(&set)).unwrap().unwrap_or(f64::NAN);
    let epochs = out.history.epochs();
    let (obs, preds) = predict_set(&out.model, &set).unwrap();
    let per_window: Vec<f64> = obs.iter().zip(&preds).filter_map(|(o, p)| nse(o, p).ok()).collect();
    let below = per_window.iter().filter(|&&v| v < OVERFIT_NSE).count();
    let pooled = pooled_nse(&obs, &preds).unwrap();
    let pass = n == OVERFIT_WINDOWS && final_nse >= OVERFIT_NSE && epochs <= OVERFIT_EPOCHS && secs < OVERFIT_SECONDS;
    outcome(
        pass,
        format!(
            "{n} windows (T=720, K=28, h_enc=11, d_z=32), lr {OVERFIT_LR}, batch {OVERFIT_BATCH}: train windowed NSE {final_nse:.4} after {epochs} epochs, {secs:.0}s; per-window median {:.4}, {below} windows below {OVERFIT_NSE}; pooled {pooled:.4}",
            median(&per_window)
        ),
    )
}

fn trends_report() -> TrendsReport {
    let cfg = RunConfig::preset(Preset::Desk);
    let start = Instant::now();
    let r = run_trends(&cfg).unwrap();
    eprintln!("trend experiments: {:.0}s", start.elapsed().as_secs_f64());
    r
}

fn memory(r: &TrendsReport) -> Outcome {
    let s = r.summary().unwrap();
    let rr = r.memory.runoff_ratios();
    let (lo, hi) = rr.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let pass = s.fhnn_median >= s.lstm_ar_median && s.gain_runoff_spearman < 0.0 && s.gain_low_half > s.gain_high_half;
    outcome(
        pass,
        format!(
            "{} basins, runoff ratio {lo:.2}-{hi:.2}; median test NSE fhnn {:.4} vs lstm_ar {:.4}; gain low-rr half {:+.4} vs high half {:+.4}; spearman(gain, rr) {:.3}",
            rr.len(),
            s.fhnn_median,
            s.lstm_ar_median,
            s.gain_low_half,
            s.gain_high_half,
            s.gain_runoff_spearman
        ),
    )
}

fn pretraining(r: &TrendsReport) -> Outcome {
    let s = r.summary().unwrap();
    let n = r.pretraining.rows.len();
    let pass = n >= PRETRAIN_MIN_BASINS
        && s.pretrained_median >= s.scratch_limited_median + PRETRAIN_GAIN
        && s.pretrained_median >= s.scratch_all_median - PRETRAIN_GAP;
    outcome(
        pass,
        format!(
            "{n} basins; median test NSE pretrained+finetuned {:.4}, scratch 2yr {:.4} (need +{PRETRAIN_GAIN}), scratch all data {:.4} (need within {PRETRAIN_GAP})",
            s.pretrained_median, s.scratch_limited_median, s.scratch_all_median
        ),
    )
}

fn global(r: &TrendsReport) -> Outcome {
    let s = r.summary().unwrap();
    let pass = s.fhnn_global_median >= s.fhnn_local_median
        && s.lstm_ar_global_median >= s.lstm_ar_local_median
        && s.fhnn_global_median >= s.lstm_ar_global_median;
    outcome(
        pass,
        format!(
            "1 year per basin, median test NSE fhnn global {:.4} / local {:.4}; lstm_ar global {:.4} / local {:.4}",
            s.fhnn_global_median, s.fhnn_local_median, s.lstm_ar_global_median, s.lstm_ar_local_median
        ),
    )
}

fn tiny_trends() -> RunConfig {
    let mut c = RunConfig::preset(Preset::Desk);
    c.n_basins = 2;
    c.years = 4;
    c.train_years = 2;
    c.val_years = 1;
    c.test_years = 1;
    c.limited_years = 1;
    c.h_enc = 3;
    c.d_z = 4;
    c.t_in = 40;
    c.k = 5;
    c.m = 3;
    c.s = 10;
    c.ensemble = 2;
    c.train.max_epochs = 2;
    c.train.train_stride = 7;
    c
}

fn structure() -> Outcome {
    let mut bad: Vec<String> = Vec::new();
    // trajectory lengths
    for (cfg, expect) in [
        (tiny(ModelKind::Fhnn), (8, 4, 2)),
        (ModelConfig::nws(ModelKind::Fhnn, 2), (720, 180, 26)),
        (ModelConfig { t_in: 11, m: 3, s: 5, ..tiny(ModelKind::Fhnn) }, (11, 4, 3)),
    ] {
        let model = Forecaster::new(cfg.clone(), 1).unwrap();
        let w = random_window(&mut ChaCha8Rng::seed_from_u64(1), cfg.d_x, cfg.t_in, cfg.k);
        let st = model.encode(&w.x_hist, &w.y_hist).unwrap();
        let got = (st.fast.len(), st.medium.len(), st.slow.len());
        if got != expect || got.1 != cfg.t_in.div_ceil(cfg.m) || got.2 != cfg.t_in.div_ceil(cfg.s) {
            bad.push(format!("trajectory lengths {got:?} for T={} m={} s={}", cfg.t_in, cfg.m, cfg.s));
        }
    }
    // window count
    let fleet = make_fleet(&FleetConfig { steps_per_year: 50, ..FleetConfig::new(1, 2, Regime::Moderate, 3) }).unwrap();
    let series = &fleet.basins[0].series;
    for (t, k, stride) in [(10, 3, 1), (7, 5, 4), (30, 28, 9), (50, 50, 1), (99, 1, 1)] {
        let spec = WindowSpec::new(t, k, stride).unwrap();
        let n = make_windows(series, spec).unwrap().len();
        if n != (series.len() - t - k) / stride + 1 || n != spec.count(series.len()) {
            bad.push(format!("window count {n} for T={t} K={k} stride={stride}"));
        }
    }
    // mass conservation
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = 400;
        let precip: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.4) { rng.random_range(0.0..30.0) } else { 0.0 }).collect();
        let temp: Vec<f64> = (0..n).map(|_| rng.random_range(-15.0..25.0)).collect();
        let p = CatchmentParams {
            ddf: rng.random_range(0.5..5.0),
            t_snow: rng.random_range(-2.0..2.0),
            soil_cap: rng.random_range(10.0..200.0),
            et_coeff: rng.random_range(0.0..0.02),
            frac_fast: rng.random_range(0.0..1.0),
            k_fast: rng.random_range(0.05..0.9),
            k_slow: rng.random_range(0.001..0.1),
        };
        let init = Stores { snow: rng.random_range(0.0..20.0), soil: rng.random_range(0.0..10.0), fast: 1.0, slow: 5.0 };
        let out = simulate(&precip, &temp, &p, init).unwrap();
        let inflow: f64 = precip.iter().sum();
        let outflow: f64 = out.flow.iter().sum::<f64>() + out.et.iter().sum::<f64>();
        let d_store = out.stores.last().unwrap().total() - init.total();
        worst = worst.max((inflow - outflow - d_store).abs() / inflow.max(init.total()));
    }
    if worst > MASS_TOL {
        bad.push(format!("mass residual {worst:.1e}"));
    }
    // checkpoint round trip
    let c = tiny_trends();
    let s = &make_fleet(&c.fleet()).unwrap().basins[0].series;
    let split = c.year_split(s).unwrap();
    let tm = train_local(&c.model(ModelKind::Fhnn, 2), s, &split, &c.train).unwrap();
    let mut bytes = Vec::new();
    tm.to_checkpoint().write_to(&mut bytes).unwrap();
    let back = TrainedModel::from_checkpoint(&Checkpoint::read_from(bytes.as_slice()).unwrap()).unwrap();
    let mut again = Vec::new();
    back.to_checkpoint().write_to(&mut again).unwrap();
    let same_preds = predict_ensemble(std::slice::from_ref(&tm), s, &split, Part::Test, Target::Observed).unwrap()
        == predict_ensemble(std::slice::from_ref(&back), s, &split, Part::Test, Target::Observed).unwrap();
    let same_bits = tm.model.params().values().iter().zip(back.model.params().values()).all(|(a, b)| {
        a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits())
    });
    if bytes != again || !same_preds || !same_bits || back.basins != tm.basins {
        bad.push("checkpoint round trip".into());
    }
    // trends reruns
    let render = |r: &TrendsReport| {
        format!("{}{}{}{}", r.memory.to_csv(), r.pretraining.to_csv(), r.global.to_csv(), r.summary().unwrap().render())
    };
    let a = render(&run_trends(&c).unwrap());
    let b = render(&run_trends(&c).unwrap());
    if a != b {
        bad.push("trends rerun differs".into());
    }
    outcome(
        bad.is_empty(),
        format!(
            "trajectory lengths, window counts, mass residual {worst:.1e}, checkpoint bit-exact ({} bytes), trends rerun identical ({} bytes){}",
            bytes.len(),
            a.len(),
            if bad.is_empty() { String::new() } else { format!("; failed: {}", bad.join(", ")) }
        ),
    )
}

fn ensemble_property() -> Outcome {
    let c = tiny_trends();
    let fleet = make_fleet(&c.fleet()).unwrap();
    let mut sets = 0;
    let mut bad = Vec::new();
    for b in &fleet.basins {
        let s = &b.series;
        let split = c.year_split(s).unwrap();
        let cfg = TrainConfig { max_epochs: 3, ..c.train.clone() };
        let members = train_ensemble(3, &cfg, |tc| train_local(&c.model(ModelKind::Fhnn, 2), s, &split, tc)).unwrap();
        for part in [Part::Train, Part::Val, Part::Test] {
            let (obs, ens) = predict_ensemble(&members, s, &split, part, Target::Observed).unwrap();
            let flat = |v: &[Vec<f64>]| v.iter().flatten().copied().collect::<Vec<f64>>();
            let ens_mse = mse(&flat(&ens), &flat(&obs)).unwrap();
            let mean_member = members
                .iter()
                .map(|m| {
                    let (_, p) = predict_ensemble(std::slice::from_ref(m), s, &split, part, Target::Observed).unwrap();
                    mse(&flat(&p), &flat(&obs)).unwrap()
                })
                .sum::<f64>()
                / members.len() as f64;
            sets += 1;
            if ens_mse > mean_member {
                bad.push(format!("{} {part:?}: {ens_mse} > {mean_member}", s.basin_id));
            }
        }
    }
    outcome(bad.is_empty(), format!("{sets} evaluation sets, 3 members each{}", if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }))
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let only: Option<Vec<usize>> = std::env::var("FHNN_ACCEPT_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let wanted = |i: usize| only.as_ref().is_none_or(|o| o.contains(&i));
    let mut failed = 0;
    let mut report = |i: usize, name: &str, o: Outcome| {
        println!("{} criterion {i} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    };
    if wanted(1) {
        report(1, "gradient exactness", gradients());
    }
    if wanted(2) {
        report(2, "NSE oracles", nse_suite());
    }
    if wanted(3) {
        report(3, "overfit sanity", overfit());
    }
    if wanted(4) || wanted(5) || wanted(6) {
        let r = trends_report();
        if wanted(4) {
            report(4, "memory-advantage trend", memory(&r));
        }
        if wanted(5) {
            report(5, "pretraining benefit", pretraining(&r));
        }
        if wanted(6) {
            report(6, "global vs local", global(&r));
        }
    }
    if wanted(7) {
        report(7, "structural invariants", structure());
    }
    if wanted(8) {
        report(8, "ensemble property", ensemble_property());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
