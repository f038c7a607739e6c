//! Scratch tuning harness (not part of the suite; run with --ignored).

use std::time::Instant;

use chrono::NaiveDate;
use elastiq_core::data::{PERIODS_PER_DAY};
use elastiq_core::metrics::percentile;
use elastiq_core::sim::*;

fn start() -> chrono::NaiveDateTime {
    NaiveDate::from_ymd_opt(2024, 1, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap()
}

fn thermal_scenario(days: usize) -> SimScenario {
    SimScenario {
        start: start(),
        days,
        price: PriceProcessSpec {
            mean_level: 40.0,
            reversion: 0.35,
            volatility: 0.06,
            spike_intensity: 0.05,
            spike_ln_mean: 1.0,
            spike_ln_sd: 0.25,
            diurnal: DayShape::Sine {
                level: 1.0,
                amplitude: 0.15,
                peak_period: 68,
            },
            seed: 101,
        },
        weather: WeatherSpec {
            temp_mean_c: 31.0,
            temp_daily_amp_c: 3.0,
            temp_seasonal_amp_c: 2.0,
            temp_noise_sd_c: 0.8,
            rh_mean_pct: 55.0,
            rh_daily_amp_pct: 12.0,
            dewpoint_offset_c: 9.0,
            seed: 102,
        },
        forecaster: ForecasterSpec {
            ar_order: 4,
            elevation_factor: 2.2,
            half_life: 6.0,
        },
        consumer: ConsumerSpec::Thermal {
            baseline: DayShape::Sine {
                level: 6.0,
                amplitude: 1.5,
                peak_period: 60,
            },
            r_thermal: 2.0,
            c_thermal: 1.6,
            comfort_center_c: 23.0,
            comfort_halfband_c: 0.0,
            discomfort_weight: 10.0,
            hvac_max_mw: 6.0,
            init_indoor_c: 24.0,
        },
        holidays: vec![],
    }
}

fn valid_anchor(t: usize) -> bool {
    let q = (t % PERIODS_PER_DAY) as u32 + 1;
    (24..=80).contains(&q)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

#[test]
#[ignore]
fn thermal_oracle_statistics() {
    let t0 = Instant::now();
    let sc = thermal_scenario(60);
    let trace = simulate_scenario(&sc).unwrap();
    println!("simulate: {:?}", t0.elapsed());

    let prices = &trace.prices;
    let threshold = percentile(prices, 0.95);
    let spikes: Vec<usize> = (0..prices.len())
        .filter(|t| prices[*t] >= threshold)
        .collect();
    println!(
        "threshold {threshold:.1}, {} spike periods of {}",
        spikes.len(),
        prices.len()
    );

    // classify anchors
    let is_post_spike = |t: usize| -> bool {
        spikes
            .iter()
            .any(|s| *s < t && t <= s + 8 && prices[t] < threshold)
    };
    let anchors: Vec<usize> = (30..trace.len() - 9).filter(|t| valid_anchor(*t)).collect();
    let t1 = Instant::now();
    let step = 3; // subsample for speed
    let mut post = Vec::new();
    let mut normal = Vec::new();
    let mut e2_neg = 0usize;
    let mut e0s = Vec::new();
    let mut n_eval = 0;
    for &a in anchors.iter().step_by(step) {
        let o = oracle_elasticity(&trace, a, 3.0).unwrap();
        n_eval += 1;
        e0s.push(o.values[0]);
        if o.values[2] < -0.1 {
            e2_neg += 1;
        }
        let pool: Vec<f64> = o.values.iter().map(|v| v.abs()).collect();
        if prices[a] >= threshold {
            // spike anchor itself: skip from both buckets
        } else if is_post_spike(a) {
            post.extend(pool);
        } else {
            normal.extend(pool);
        }
    }
    println!("oracle {} anchors: {:?}", n_eval, t1.elapsed());
    println!(
        "median |e| post-spike {:.6} vs normal {:.6} (ratio {:.4})",
        median(post.clone()),
        median(normal.clone()),
        median(post) / median(normal)
    );
    println!(
        "e0 median {:.3}, p10 {:.3}, p90 {:.3}",
        median(e0s.clone()),
        percentile(&e0s, 0.10),
        percentile(&e0s, 0.90)
    );
    println!("anchors with e2 < -0.1: {} / {n_eval}", e2_neg);
    // per-tau medians over normal anchors
    for tau in 0..9 {
        let mut normal_tau = Vec::new();
        let mut post_tau = Vec::new();
        for &a in anchors.iter().step_by(step) {
            let o = oracle_elasticity(&trace, a, 3.0).unwrap();
            if prices[a] >= threshold {
            } else if is_post_spike(a) {
                post_tau.push(o.values[tau].abs());
            } else {
                normal_tau.push(o.values[tau].abs());
            }
        }
        println!(
            "tau {tau}: normal median {:.4} post median {:.4}",
            median(normal_tau),
            median(post_tau)
        );
    }
}

#[test]
#[ignore]
fn thermal_decide_speed() {
    let sc = thermal_scenario(20);
    let t0 = Instant::now();
    let trace = simulate_scenario(&sc).unwrap();
    println!(
        "20 days: {:?} ({:.2} ms/period)",
        t0.elapsed(),
        t0.elapsed().as_secs_f64() * 1000.0 / trace.len() as f64
    );
}

use elastiq_core::data::{build_samples, partition_samples, split_index, Scaler, SeriesDataset, SplitSpec};
use elastiq_core::estimator::{build_synthetic_set, estimate, fit_bundle, EstimatorConfig};
use elastiq_core::metrics::{breakdown, compute_metrics, ElasticityVector};
use elastiq_core::nn::TrainConfig;
use elastiq_core::baselines::*;

fn quick_train(iters: usize, lr: f64, seed: u64) -> TrainConfig {
    TrainConfig { batch_size: 256, max_iters: iters, learning_rate: lr, seed, ..TrainConfig::default() }
}

#[test]
#[ignore]
fn thermal_end_to_end() {
    let t0 = Instant::now();
    let sc = thermal_scenario(240);
    let trace = simulate_scenario(&sc).unwrap();
    let dataset = trace.to_dataset().unwrap();
    let boundary = split_index(&dataset, &SplitSpec::TestFraction(0.2)).unwrap();
    let train_ds = SeriesDataset::new(dataset.records()[..boundary].to_vec()).unwrap();
    let scaler = Scaler::fit(&train_ds).unwrap();
    let cfg = EstimatorConfig {
        t_in: 12,
        stage1: quick_train(8000, 2e-3, 31),
        stage2: quick_train(12000, 2e-3, 32),
        ..EstimatorConfig::default()
    };
    let samples = build_samples(&dataset, &scaler, cfg.t_in, 9).unwrap();
    let (train_s, test_s) = partition_samples(samples, boundary);
    println!("samples: {} train, {} test ({:?})", train_s.len(), test_s.len(), t0.elapsed());

    let anchors: Vec<usize> = test_s.iter().map(|s| s.anchor).collect();
    let oracle = oracle_all(&trace, &anchors, 3.0).unwrap();
    let truth: Vec<ElasticityVector> = oracle.iter().map(|o| o.to_vector()).collect();
    println!("oracle done {:?}", t0.elapsed());

    let t1 = Instant::now();
    let (bundle, r1, _r2) = fit_bundle(&train_s, None, &scaler, &cfg).unwrap();
    println!("smlstm trained in {:?} (stage1 final loss {:.6})", t1.elapsed(), r1.final_train_loss);
    let synth = build_synthetic_set(&train_s, &bundle.params_p, &scaler, &cfg).unwrap();
    let kept = synth.iter().filter(|s| s.wf > 0.0).count();
    let etas: Vec<f64> = synth.iter().map(|s| s.eta).collect();
    println!("synthetic: {}/{} kept, eta median {:.4}", kept, synth.len(), {
        let mut e = etas.clone(); e.sort_by(|a,b| a.partial_cmp(b).unwrap()); e[e.len()/2]
    });
    let sml: Vec<ElasticityVector> = test_s.iter().map(|s| estimate(s, &bundle).unwrap()).collect();
    let (rmse_sml, mae_sml) = compute_metrics(&sml, &truth).unwrap();
    println!("SmLSTM rmse {:.4} mae {:.4}", rmse_sml, mae_sml);

    let llr = llr_estimate(&dataset, &anchors, &LlrConfig::default()).unwrap();
    let (rmse_llr, _) = compute_metrics(&llr.vectors, &truth).unwrap();
    println!("LLR rmse {:.4} ({} flagged)", rmse_llr, llr.flagged.len());

    let means = clock_means(&train_ds);
    let kfa = kfa_estimate(&dataset, &anchors, &means, &KfaConfig::default()).unwrap();
    let (rmse_kfa, _) = compute_metrics(&kfa, &truth).unwrap();
    println!("KFA rmse {:.4}", rmse_kfa);

    let snn_cfg = Snn2Config {
        stage1: quick_train(1500, 2e-3, 33),
        stage2: quick_train(2000, 2e-3, 34),
        ..Snn2Config::default()
    };
    let snn = snn2_fit(&train_s, &scaler, &snn_cfg).unwrap();
    let snn_est = snn2_estimate(&test_s, &snn).unwrap();
    let (rmse_snn, _) = compute_metrics(&snn_est, &truth).unwrap();
    println!("2SNN rmse {:.4}", rmse_snn);

    // synthetic-target sign quality on train anchors with strong negative e2
    let train_anchors: Vec<usize> = train_s.iter().map(|s| s.anchor).collect();
    let train_oracle = oracle_all(&trace, &train_anchors, 3.0).unwrap();
    let mut syn_strong = 0; let mut syn_ok = 0;
    for (k, o) in train_oracle.iter().enumerate() {
        if o.values[2] < -0.1 {
            syn_strong += 1;
            if synth[k].targets[2] < 0.0 { syn_ok += 1; }
        }
    }
    println!("train e2<-0.1: {syn_strong}; synthetic sign agreement {:.3}", syn_ok as f64 / syn_strong.max(1) as f64);
    // can the stage-2 head fit its own targets' signs? (train anchors, synthetic e2 < -0.1)
    let mut fit_n = 0; let mut fit_ok = 0;
    for (k, s) in synth.iter().enumerate() {
        if s.targets[2] < -0.1 {
            fit_n += 1;
            let pred = estimate(&train_s[k], &bundle).unwrap();
            if pred.values[2] < 0.0 { fit_ok += 1; }
        }
    }
    println!("stage2 self-fit on own targets e2<-0.1: {:.3} of {fit_n}", fit_ok as f64 / fit_n.max(1) as f64);
    let (rmse_llr_own, _) = compute_metrics(&llr.vectors.iter().zip(&truth).map(|(v, t)| {
        let mut e = v.clone(); e.values[1..].copy_from_slice(&t.values[1..]); e
    }).collect::<Vec<_>>(), &truth).unwrap();
    println!("LLR own-only rmse contribution {:.4}", rmse_llr_own);

    // sign agreement on strong negative e2 anchors
    let mut strong = 0; let mut sml_ok = 0; let mut kfa_ok = 0;
    for (k, t) in truth.iter().enumerate() {
        if t.values[2] < -0.1 {
            strong += 1;
            if sml[k].values[2] < 0.0 { sml_ok += 1; }
            if kfa[k].values[2] < 0.0 { kfa_ok += 1; }
        }
    }
    println!("e2<-0.1 anchors: {strong}; sign agreement SmLSTM {:.3} KFA {:.3}",
        sml_ok as f64 / strong as f64, kfa_ok as f64 / strong as f64);
    // bias diagnostics on e2
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let true_e2: Vec<f64> = truth.iter().map(|t| t.values[2]).collect();
    let sml_e2: Vec<f64> = sml.iter().map(|t| t.values[2]).collect();
    let syn_e2: Vec<f64> = synth.iter().map(|s| s.targets[2]).collect();
    println!("e2 means: true {:.4} syn {:.4} sml {:.4}", mean(&true_e2), mean(&syn_e2), mean(&sml_e2));
    let neg_idx: Vec<usize> = (0..truth.len()).filter(|&k| truth[k].values[2] < -0.1).collect();
    let sml_on_neg: Vec<f64> = neg_idx.iter().map(|&k| sml[k].values[2]).collect();
    let true_on_neg: Vec<f64> = neg_idx.iter().map(|&k| truth[k].values[2]).collect();
    println!("on e2<-0.1 subset: true mean {:.4}, sml mean {:.4}", mean(&true_on_neg), mean(&sml_on_neg));

    // per-tau rmse for smlstm vs llr
    for tau in [0usize, 1, 2, 4, 8] {
        let per = |est: &[ElasticityVector]| -> f64 {
            let mut sq = 0.0;
            for (e, t) in est.iter().zip(&truth) {
                let d = e.values[tau] - t.values[tau];
                sq += d * d;
            }
            (sq / est.len() as f64).sqrt()
        };
        println!("tau {tau}: sml {:.4} llr {:.4} 2snn {:.4}", per(&sml), per(&llr.vectors), per(&snn_est));
    }

    // spike bucket comparison
    let prices: Vec<f64> = test_s.iter().map(|s| s.anchor_price).collect();
    let train_prices: Vec<f64> = train_ds.prices().collect();
    let thr = elastiq_core::metrics::percentile(&train_prices, 0.95);
    let rep = breakdown("smlstm", &sml, &truth, &prices, thr, 0, String::new()).unwrap();
    println!("SmLSTM spike rmse {:?} normal rmse {:?}", rep.spike_rmse, rep.normal_rmse);
    println!("total {:?}", t0.elapsed());
}

fn linear_scenario(days: usize) -> SimScenario {
    SimScenario {
        start: start(),
        days,
        price: PriceProcessSpec {
            mean_level: 40.0,
            reversion: 0.35,
            volatility: 0.09,
            spike_intensity: 0.02,
            spike_ln_mean: 0.8,
            spike_ln_sd: 0.3,
            diurnal: DayShape::Sine {
                level: 1.0,
                amplitude: 0.2,
                peak_period: 68,
            },
            seed: 201,
        },
        weather: WeatherSpec {
            temp_mean_c: 27.0,
            temp_daily_amp_c: 5.0,
            temp_seasonal_amp_c: 3.0,
            temp_noise_sd_c: 0.8,
            rh_mean_pct: 55.0,
            rh_daily_amp_pct: 12.0,
            dewpoint_offset_c: 10.0,
            seed: 202,
        },
        forecaster: ForecasterSpec {
            ar_order: 4,
            elevation_factor: 2.0,
            half_life: 5.0,
        },
        consumer: ConsumerSpec::Linear {
            baseline: DayShape::Sine {
                level: 35.0,
                amplitude: 4.0,
                peak_period: 60,
            },
            coeffs: vec![-0.30, -0.05, -0.04, -0.03, -0.03, -0.02, -0.02, -0.01, -0.01],
            p_min: 1.0,
            p_max: 120.0,
        },
        holidays: vec![],
    }
}

#[test]
#[ignore]
fn linear_end_to_end() {
    let t0 = Instant::now();
    let sc = linear_scenario(120);
    let trace = simulate_scenario(&sc).unwrap();
    let dataset = trace.to_dataset().unwrap();
    let boundary = split_index(&dataset, &SplitSpec::TestFraction(0.2)).unwrap();
    let train_ds = SeriesDataset::new(dataset.records()[..boundary].to_vec()).unwrap();
    let scaler = Scaler::fit(&train_ds).unwrap();
    let cfg = EstimatorConfig {
        t_in: 25,
        stage1: quick_train(3000, 2e-3, 41),
        stage2: quick_train(3000, 2e-3, 42),
        ..EstimatorConfig::default()
    };
    let samples = build_samples(&dataset, &scaler, cfg.t_in, 9).unwrap();
    let (train_s, test_s) = partition_samples(samples, boundary);

    let anchors: Vec<usize> = test_s.iter().map(|s| s.anchor).collect();
    let oracle = oracle_all(&trace, &anchors, 3.0).unwrap();
    let truth: Vec<ElasticityVector> = oracle.iter().map(|o| o.to_vector()).collect();
    let e0s: Vec<f64> = truth.iter().map(|t| t.values[0]).collect();
    println!(
        "true e0: median {:.3} p10 {:.3} p90 {:.3}",
        median(e0s.clone()),
        elastiq_core::metrics::percentile(&e0s, 0.10),
        elastiq_core::metrics::percentile(&e0s, 0.90)
    );

    let t1 = Instant::now();
    let (bundle, r1, _) = fit_bundle(&train_s, None, &scaler, &cfg).unwrap();
    println!(
        "smlstm trained in {:?} (stage1 final loss {:.6})",
        t1.elapsed(),
        r1.final_train_loss
    );
    let synth = build_synthetic_set(&train_s, &bundle.params_p, &scaler, &cfg).unwrap();
    let kept = synth.iter().filter(|s| s.wf > 0.0).count();
    println!("synthetic kept {}/{}", kept, synth.len());
    let sml: Vec<ElasticityVector> = test_s.iter().map(|s| estimate(s, &bundle).unwrap()).collect();
    let (rmse, mae) = compute_metrics(&sml, &truth).unwrap();
    // mean signed error on e0
    let mse0: f64 = sml
        .iter()
        .zip(&truth)
        .map(|(e, t)| e.values[0] - t.values[0])
        .sum::<f64>()
        / sml.len() as f64;
    println!("SmLSTM rmse {rmse:.4} mae {mae:.4} e0 mean signed error {mse0:.4}");

    let llr = llr_estimate(&dataset, &anchors, &LlrConfig::default()).unwrap();
    let (rmse_llr, _) = compute_metrics(&llr.vectors, &truth).unwrap();
    let means = clock_means(&train_ds);
    let kfa = kfa_estimate(&dataset, &anchors, &means, &KfaConfig::default()).unwrap();
    let (rmse_kfa, _) = compute_metrics(&kfa, &truth).unwrap();
    let snn_cfg = Snn2Config {
        stage1: quick_train(3000, 2e-3, 43),
        stage2: quick_train(3000, 2e-3, 44),
        ..Snn2Config::default()
    };
    let snn = snn2_fit(&train_s, &scaler, &snn_cfg).unwrap();
    let snn_est = snn2_estimate(&test_s, &snn).unwrap();
    let (rmse_snn, _) = compute_metrics(&snn_est, &truth).unwrap();
    println!("LLR {rmse_llr:.4} KFA {rmse_kfa:.4} 2SNN {rmse_snn:.4}");
    println!("total {:?}", t0.elapsed());
}
