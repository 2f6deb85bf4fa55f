//! Monte Carlo against the exact law of the self-normalized sum for Gaussian
//! data: √n X̄/S has Student's t law with n - 1 degrees of freedom.

use selfnorm::*;

/// Upper tail of Student's t with 4 degrees of freedom.
fn t4_sf(t: f64) -> f64 {
    // F(t) = 1/2 + (3/4) x (1 - x²/3) with x = t / √(4 + t²)
    let x = t / (4.0 + t * t).sqrt();
    0.5 - 0.75 * x * (1.0 - x * x / 3.0)
}

#[test]
fn t4_tail_oracle_is_right() {
    // P(T₄ ≥ 2/√3) = 5/32
    assert!((t4_sf(2.0 / 3f64.sqrt()) - 5.0 / 32.0).abs() < 1e-15);
    assert_eq!(t4_sf(0.0), 0.5);
    // t_{4, 0.975} = 2.776445
    assert!((t4_sf(2.776_445) - 0.025).abs() < 1e-7);
}

#[test]
fn normal_tail_matches_exact_law() {
    let d = make_builtin("normal").unwrap();
    let grid: Vec<f64> = (1..=19).map(|k| k as f64 * 0.05).collect();
    let cfg = McConfig {
        reps: 1_000_000,
        seed: 77,
        ..McConfig::default()
    };
    let est = estimate_tail_grid(&d, 5, &grid, &cfg).unwrap();
    for (b, e) in grid.iter().zip(est) {
        let exact = t4_sf(t_of_b(*b, 5).unwrap());
        assert!((e.p_hat - exact).abs() <= 4.0 * e.std_err.max(1e-6), "b={b}: {} vs {exact}", e.p_hat);
    }
}

#[test]
fn student_t_simulation_matches_exact_law() {
    let d = make_builtin("normal").unwrap();
    let cfg = McConfig {
        reps: 400_000,
        seed: 5,
        ..McConfig::default()
    };
    for t in [-1.0, 0.5, 2.0, 3.5] {
        let e = estimate_student_t_tail(&d, 5, t, &cfg).unwrap();
        assert!((e.p_hat - t4_sf(t)).abs() <= 4.0 * e.std_err, "t={t}: {}", e.p_hat);
    }
}
