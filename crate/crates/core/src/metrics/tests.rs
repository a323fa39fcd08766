use chrono::{NaiveDate, TimeDelta};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::data::{BasinSeries, Window};
use crate::error::Error;
use crate::model::{Forecaster, ModelConfig, ModelKind};
use crate::numerics::Matrix;

#[test]
fn nse_examples() {
    assert_eq!(nse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
    assert_eq!(nse(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap(), 0.0);
    assert_eq!(nse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap(), 0.5);
    assert!(matches!(nse(&[2.0, 2.0], &[1.0, 2.0]), Err(Error::UndefinedNse)));
    assert!(matches!(nse(&[2.0], &[2.0]), Err(Error::UndefinedNse)));
    assert!(nse(&[1.0, 2.0], &[1.0]).is_err());
}

#[test]
fn nse_of_mean_is_zero() {
    let y = [0.3, 1.7, 2.2, 9.1, 4.4];
    let m = y.iter().sum::<f64>() / 5.0;
    assert_eq!(nse(&y, &[m; 5]).unwrap(), 0.0);
}

#[test]
fn windowed_examples() {
    let one = windowed_nse(&[vec![1.0, 2.0, 3.0]], &[vec![1.0, 2.0, 4.0]]).unwrap();
    assert_eq!(one.mean, 0.5);
    // NSE 0.4: residual SS 1.2 against SS 2; NSE 0.8: residual SS 0.4
    let obs = vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]];
    let r04 = 1.2f64.sqrt();
    let r08 = 0.4f64.sqrt();
    let preds = vec![vec![1.0, 2.0, 3.0 + r04], vec![1.0, 2.0 + r08, 3.0], vec![5.0, 5.0, 5.0]];
    let w = windowed_nse(&obs, &preds).unwrap();
    assert!((w.mean - 0.6).abs() < 1e-12);
    assert_eq!((w.n_scored, w.n_skipped), (2, 1));
    assert!(windowed_nse(&obs[2..], &preds[2..]).is_err());
    let perfect = windowed_nse(&obs[..2], &obs[..2]).unwrap();
    assert_eq!(perfect.mean, 1.0);
}

#[test]
fn pooled_concatenates() {
    let obs = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
    let preds = vec![vec![1.0, 2.0], vec![3.0, 5.0]];
    assert_eq!(pooled_nse(&obs, &preds).unwrap(), nse(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 5.0]).unwrap());
}

fn series(precip: Vec<f64>, flow: Vec<f64>) -> BasinSeries {
    let n = precip.len();
    BasinSeries::regular(
        "rr",
        NaiveDate::from_ymd_opt(2000, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap(),
        TimeDelta::days(1),
        vec!["precip".into()],
        Matrix::from_vec(n, 1, precip).unwrap(),
        flow,
        None,
    )
    .unwrap()
}

#[test]
fn runoff_ratio_examples() {
    let p = vec![1.0, 0.0, 3.0, 2.0];
    assert_eq!(runoff_ratio(&series(p.clone(), p.clone()), 0..4).unwrap(), 1.0);
    assert_eq!(runoff_ratio(&series(p.clone(), vec![0.0; 4]), 0..4).unwrap(), 0.0);
    assert!(runoff_ratio(&series(vec![0.0; 4], vec![1.0; 4]), 0..4).is_err());
    assert_eq!(runoff_ratio(&series(p, vec![0.5, 0.5, 0.5, 0.5]), 2..4).unwrap(), 0.2);
}

fn eval(id: &str, w: f64) -> BasinEval {
    BasinEval {
        basin_id: id.into(),
        horizon: 7,
        n_windows: 10,
        n_skipped: 1,
        nse_windowed: Some(w),
        nse_pooled: Some(w - 0.1),
        runoff_ratio: 0.3,
    }
}

#[test]
fn summarize_examples() {
    let r = summarize(vec![eval("a", 0.5), eval("b", 0.7), eval("c", 0.9)]).unwrap();
    let a = r.aggregate(7).unwrap();
    assert!((a.mean_windowed - 0.7).abs() < 1e-15);
    assert_eq!(a.median_windowed, 0.7);
    let single = summarize(vec![eval("a", 0.42)]).unwrap();
    let a = single.aggregate(7).unwrap();
    assert_eq!((a.mean_windowed, a.median_windowed), (0.42, 0.42));
    assert!(summarize(vec![]).is_err());
    assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
}

#[test]
fn undefined_basins_are_excluded() {
    let mut b = eval("flat", 0.0);
    b.nse_windowed = None;
    b.nse_pooled = None;
    let r = summarize(vec![eval("a", 0.5), b]).unwrap();
    assert_eq!(r.aggregate(7).unwrap().n_basins, 1);
    assert_eq!(r.aggregate(7).unwrap().median_windowed, 0.5);
}

#[test]
fn report_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = vec![eval("a", 0.123456789012345), eval("b", -1.0 / 3.0)];
    rows[1].horizon = 3;
    rows.push(BasinEval { nse_windowed: None, nse_pooled: None, ..eval("c", 0.0) });
    let r = summarize(rows).unwrap();
    let p = dir.path().join("report.csv");
    r.write_csv(&p).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("basin_id,horizon,n_windows,n_skipped,nse_windowed,nse_pooled,runoff_ratio\n"));
    assert!(text.contains("__mean__") && text.contains("__median__"));
    assert_eq!(EvalReport::read_csv(&p).unwrap().basins, r.basins);
}

fn window(t: usize, k: usize, seed: u64) -> Window {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = |n: usize| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
    Window {
        x_hist: Matrix::from_vec(t, 2, v(2 * t)).unwrap(),
        y_hist: v(t),
        x_fcst: Matrix::from_vec(k, 2, v(2 * k)).unwrap(),
        y_fcst: v(k),
        basin: 0,
        t_start: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap(),
        origin: t,
    }
}

#[test]
fn export_states_row_counts_nws() {
    let mut model = Forecaster::new(ModelConfig::nws(ModelKind::Fhnn, 2), 1).unwrap();
    for i in 0..model.params().len() {
        model.params_mut().value_mut(i).fill(0.0);
    }
    let w = window(720, 28, 1);
    let st = model.encode(&w.x_hist, &w.y_hist).unwrap();
    assert_eq!(st.fast.hidden.cols(), 11);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("states.csv");
    export_states(&st, &p).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 720 + 180 + 26);
    assert!(rows.iter().all(|r| r.ends_with(",0")));
    assert!(rows.last().unwrap().starts_with("slow,25,719,"));
}

#[test]
fn state_means_average_hidden_dims() {
    let model = Forecaster::new(ModelConfig::nws(ModelKind::Fhnn, 2), 3).unwrap();
    let w = window(720, 28, 3);
    let st = model.encode(&w.x_hist, &w.y_hist).unwrap();
    let rows = state_rows(&st).unwrap();
    let r = &rows[720 + 5];
    assert_eq!((r.scale, r.step_index, r.original_time_index), ("medium", 5, 23));
    let expect = st.medium.hidden.row(5).iter().sum::<f64>() / 11.0;
    assert_eq!(r.mean_hidden_value, expect);
}

#[test]
fn svg_plots_are_written() {
    let model = Forecaster::new(ModelConfig { t_in: 40, k: 4, ..ModelConfig::nws(ModelKind::Fhnn, 2) }, 0).unwrap();
    let w = window(40, 4, 0);
    let st = model.encode(&w.x_hist, &w.y_hist).unwrap();
    let panels = plot::state_panels(&[("a".into(), st.clone()), ("b&c".into(), st)]);
    assert_eq!(panels.len(), 6);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("states.svg");
    plot::write_svg(&p, &panels, 3).unwrap();
    let svg = std::fs::read_to_string(&p).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<polyline").count(), 6);
    assert!(svg.contains("b&amp;c"));
    assert!(plot::write_svg(&p, &[], 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn nse_affine_invariant(
        y in prop::collection::vec(-10.0f64..10.0, 3..30),
        noise in prop::collection::vec(-2.0f64..2.0, 30),
        a in 0.01f64..100.0,
        b in -1e3f64..1e3,
    ) {
        let y_hat: Vec<f64> = y.iter().zip(&noise).map(|(v, n)| v + n).collect();
        let base = match nse(&y, &y_hat) { Ok(v) => v, Err(_) => return Ok(()) };
        let ty: Vec<f64> = y.iter().map(|v| a * v + b).collect();
        let th: Vec<f64> = y_hat.iter().map(|v| a * v + b).collect();
        let t = nse(&ty, &th).unwrap();
        prop_assert!((t - base).abs() <= 1e-9 * base.abs().max(1.0), "{base} vs {t}");
    }

    #[test]
    fn summarize_is_order_invariant(vals in prop::collection::vec(-2.0f64..1.0, 1..12), seed in 0u64..1000) {
        let rows: Vec<BasinEval> = vals.iter().enumerate().map(|(i, &v)| eval(&format!("b{i}"), v)).collect();
        let mut shuffled = rows.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let a = summarize(rows).unwrap();
        let b = summarize(shuffled).unwrap();
        prop_assert_eq!(a.aggregates[0].median_windowed, b.aggregates[0].median_windowed);
        prop_assert!((a.aggregates[0].mean_windowed - b.aggregates[0].mean_windowed).abs() < 1e-12);
    }
}
