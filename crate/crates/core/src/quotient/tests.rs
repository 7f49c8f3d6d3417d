use super::*;

fn cfg2() -> SnowflakeConfig {
    SnowflakeConfig::line(0.5, 2, 8.0).unwrap()
}

fn d(s: &str) -> Dyadic {
    s.parse().unwrap()
}

/// Floyd-Warshall over endpoints generated straight from the defining
/// formula, in floating point, on `[lo, hi]`.
fn floyd_oracle(l: u32, s: f64, lo: f64, hi: f64, max_level: u32, x: f64, y: f64) -> f64 {
    let h = 0.5f64.powi(l as i32);
    let mut pts = vec![x, y];
    let mut pairs = vec![];
    for n in 1..=max_level {
        let step = h.powi(n as i32 - 1);
        let mut m = ((lo / step) - 2.0).floor() as i64;
        while (m as f64) * step <= hi + step {
            let p = step * (m as f64 + 0.5);
            let q = p + h.powi(n as i32 + 1);
            if p >= lo && q <= hi {
                pts.push(p);
                pts.push(q);
                pairs.push((pts.len() - 2, pts.len() - 1));
            }
            m += 1;
        }
    }
    let v = pts.len();
    let mut dm = vec![vec![0.0; v]; v];
    for i in 0..v {
        for j in 0..v {
            dm[i][j] = (pts[i] - pts[j]).abs().powf(s);
        }
    }
    for (a, b) in pairs {
        dm[a][b] = 0.0;
        dm[b][a] = 0.0;
    }
    for (i, pi) in pts.iter().enumerate() {
        for (j, pj) in pts.iter().enumerate() {
            if pi == pj {
                dm[i][j] = 0.0;
            }
        }
    }
    for k in 0..v {
        for i in 0..v {
            for j in 0..v {
                let c = dm[i][k] + dm[k][j];
                if c < dm[i][j] {
                    dm[i][j] = c;
                }
            }
        }
    }
    dm[0][1]
}

#[test]
fn shortcut_pair_is_at_distance_zero() {
    let cfg = cfg2();
    for n in 1..=3 {
        let r = distance(&cfg, &d("1/2"), &d("9/16"), n, &DistanceOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.witness.pairs.is_empty());
        r.witness.validate(&cfg, &d("1/2"), &d("9/16")).unwrap();
    }
}

#[test]
fn diagonal_is_zero() {
    let cfg = cfg2();
    let r = distance(&cfg, &d("5/32"), &d("5/32"), 3, &DistanceOptions::default()).unwrap();
    assert_eq!(r.value, 0.0);
    assert_eq!(r.history, vec![0.0; 4]);
}

#[test]
fn unit_interval_golden() {
    let cfg = cfg2();
    let r = distance(&cfg, &Dyadic::zero(), &Dyadic::one(), 3, &DistanceOptions::default()).unwrap();
    let oracle = floyd_oracle(2, 0.5, 0.0, 1.0, 3, 0.0, 1.0);
    assert!((r.value - oracle).abs() < 1e-12, "{} vs {oracle}", r.value);
    // no detour through a shortcut beats the single walk at this range
    assert_eq!(r.value, 1.0);
    assert_eq!(r.witness.pairs.len(), 1);
}

#[test]
fn short_range_golden() {
    let cfg = cfg2();
    let (x, y) = (d("15/32"), d("19/32"));
    let r = distance(&cfg, &x, &y, 4, &DistanceOptions::default()).unwrap();
    let oracle = floyd_oracle(2, 0.5, 0.0, 1.0, 4, 15.0 / 32.0, 19.0 / 32.0);
    assert!((r.value - oracle).abs() < 1e-12, "{} vs {oracle}", r.value);
    assert!((r.value - 0.34213615223817384).abs() < 1e-15);
    let start = 0.125f64.sqrt();
    assert_eq!(r.history[..3], [start; 3]);
}

#[test]
fn matches_oracle_on_scattered_pairs() {
    let cfg = cfg2();
    let pts = ["0", "3/1024", "51/256", "341/1024", "1/2", "37/64", "7/8", "1"].map(d);
    for a in &pts {
        for b in &pts {
            let r = distance_in_window(&cfg, &Dyadic::zero(), &Dyadic::one(), a, b, 3, &DistanceOptions::default()).unwrap();
            let oracle = floyd_oracle(2, 0.5, 0.0, 1.0, 3, a.to_f64().unwrap(), b.to_f64().unwrap());
            assert!((r.value - oracle).abs() < 1e-12, "{a} {b}: {} vs {oracle}", r.value);
        }
    }
}

#[test]
fn restricted_example() {
    let cfg = cfg2();
    let iv = GridInterval::new(1, 0);
    let r = distance_restricted(&cfg, &iv, &d("1/8"), &d("9/64"), 2, &DistanceOptions::default()).unwrap();
    assert_eq!(r.value, 0.0);
    let bad = GridInterval::new(1, 2);
    assert!(matches!(
        distance_restricted(&cfg, &bad, &d("1/2"), &d("5/8"), 2, &DistanceOptions::default()),
        Err(Error::Contract(_))
    ));
    assert!(matches!(
        distance_restricted(&cfg, &iv, &d("1/8"), &d("1/2"), 2, &DistanceOptions::default()),
        Err(Error::Contract(_))
    ));
}

#[test]
fn localizing_window_examples() {
    let cfg = cfg2();
    let w = localizing_window(&cfg, &d("1/8"), &d("9/64"));
    let iv = w.interval.unwrap();
    assert!(is_clean(&cfg, &iv));
    assert!(w.contains(&d("1/8")) && w.contains(&d("9/64")));
    // both points sit in [0,1]; nothing finer than the unit interval holds 0 and 1
    let w = localizing_window(&cfg, &Dyadic::zero(), &Dyadic::one());
    assert_eq!(w.interval, Some(GridInterval::new(0, 0)));
    let w = localizing_window(&cfg, &d("1/2"), &d("3/2"));
    assert_eq!((w.lo, w.hi, w.interval), (d("0"), d("2"), None));
}

#[test]
fn history_and_witness_are_consistent() {
    let cfg = cfg2();
    let (x, y) = (d("3/1024"), d("700/1024"));
    let r = distance(&cfg, &x, &y, 4, &DistanceOptions::default()).unwrap();
    assert_eq!(r.history.len(), 5);
    assert_eq!(r.history[0], snow_exact(&cfg, &x, &y).unwrap());
    for w in r.history.windows(2) {
        assert!(w[1] <= w[0]);
    }
    r.witness.validate(&cfg, &x, &y).unwrap();
    assert!((r.witness.cost - r.value).abs() < 1e-12);
    assert_eq!(r.last_decrement(), r.history[3] - r.history[4]);
}

#[test]
fn hierarchical_matches_flat() {
    let cfg = cfg2();
    let solver = HierarchicalSolver::new(cfg.clone(), DistanceOptions::default());
    let pts = ["0", "3/1024", "51/256", "341/1024", "1/2", "37/64", "7/8", "1", "123/128"].map(d);
    for a in &pts {
        for b in &pts {
            let flat = distance(&cfg, a, b, 4, &DistanceOptions::default()).unwrap();
            let hier = solver.distance(a, b, 4).unwrap();
            assert!((flat.value - hier.value).abs() < 1e-12, "{a} {b}");
            for (f, h) in flat.history.iter().zip(&hier.history) {
                assert!((f - h).abs() < 1e-12);
            }
            assert_eq!(solver.value(a, b, 4).unwrap(), hier.value);
        }
    }
    assert!(solver.cached_depths().contains(&4));
}

#[test]
fn hierarchical_falls_back_across_units() {
    let cfg = cfg2();
    let (x, y) = (d("3/4"), d("5/4"));
    let flat = distance(&cfg, &x, &y, 3, &DistanceOptions::default()).unwrap();
    let hier = distance_hierarchical(&cfg, &x, &y, 3, &DistanceOptions::default()).unwrap();
    assert_eq!(flat.value, hier.value);
}

#[test]
fn hierarchical_falls_back_past_skeleton_limit() {
    let cfg = cfg2();
    let solver = HierarchicalSolver::new(cfg.clone(), DistanceOptions::default()).with_skeleton_limit(50);
    let (x, y) = (d("1/2"), d("129/256"));
    let flat = distance(&cfg, &x, &y, 4, &DistanceOptions::default()).unwrap();
    assert_eq!(solver.distance(&x, &y, 4).unwrap().value, flat.value);
    assert_eq!(solver.value(&x, &y, 4).unwrap(), flat.value);
    assert!(solver.cached_depths().iter().all(|&k| k < 4));
}

#[test]
fn real_inputs_are_snapped_with_correction() {
    let cfg = cfg2();
    let r = distance_real(&cfg, 0.3, 0.7, 2, &DistanceOptions::default()).unwrap();
    assert!(r.snap_correction > 0.0);
    assert!(r.value <= 0.4f64.sqrt());
    let exact = distance_real(&cfg, 0.5, 0.5625, 2, &DistanceOptions::default()).unwrap();
    assert_eq!((exact.value, exact.snap_correction), (0.0, 0.0));
}

#[test]
fn product_semidistance_examples() {
    let cfg = SnowflakeConfig::new(vec![0.5, 0.75], 2, 8.0).unwrap();
    let o = DistanceOptions::default();
    assert_eq!(product_semidistance(&cfg, &[0.5, 0.0], &[0.5625, 0.0], 2, &o).unwrap(), 0.0);
    let v = product_semidistance(&cfg, &[0.3, 0.1], &[0.3, 0.6], 2, &o).unwrap();
    assert_eq!(v, 0.5f64.powf(0.75));
    assert_eq!(product_semidistance(&cfg, &[0.2, 0.4], &[0.2, 0.4], 2, &o).unwrap(), 0.0);
    assert!(product_semidistance(&cfg, &[0.2], &[0.2, 0.4], 2, &o).is_err());
}

#[test]
fn distance_matrix_agrees_with_queries() {
    let cfg = cfg2();
    let pts = ["0", "1/4", "5/16", "1/2", "3/4", "1"].map(d);
    let m = distance_matrix(&cfg, &Dyadic::zero(), &Dyadic::one(), &pts, 3, &DistanceOptions::default()).unwrap();
    for (i, a) in pts.iter().enumerate() {
        for (j, b) in pts.iter().enumerate() {
            let q = distance_in_window(&cfg, &Dyadic::zero(), &Dyadic::one(), a, b, 3, &DistanceOptions::default()).unwrap();
            assert!((m[i * pts.len() + j] - q.value).abs() < 1e-12);
        }
    }
}

#[test]
fn resource_limit_names_the_estimate() {
    let cfg = cfg2();
    let opts = DistanceOptions { max_vertices: 100, ..Default::default() };
    let err = distance(&cfg, &Dyadic::zero(), &Dyadic::one(), 6, &opts).unwrap_err();
    assert!(matches!(err, Error::Resource(ref m) if m.contains("vertices")), "{err}");
    assert!(distance(&cfg, &Dyadic::zero(), &Dyadic::one(), 2, &DistanceOptions::with_tol(0.0)).is_err());
}
