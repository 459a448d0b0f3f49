//! Classification and base-point tests against independent oracles.

use jumpfd::exprjet::{eval_expr, parse_expr};
use jumpfd::geometry::{classify_points, GridSpec, PointClass};

/// Brute-force count of irregular nodes: a direct double loop over interior
/// nodes evaluating the nine signs, with no shared code path beyond the
/// expression evaluator.
fn brute_force_irregular_count(grid: &GridSpec, psi_text: &str) -> usize {
    let psi = parse_expr(psi_text).unwrap();
    let mut count = 0;
    for j in 1..grid.n2 {
        for i in 1..grid.n1 {
            let mut plus = 0;
            let mut minus = 0;
            for k in -1i32..=1 {
                for l in -1i32..=1 {
                    let x = grid.x((i as i32 + k) as usize);
                    let y = grid.y((j as i32 + l) as usize);
                    if eval_expr(&psi, x, y).unwrap() >= 0.0 {
                        plus += 1;
                    } else {
                        minus += 1;
                    }
                }
            }
            if plus > 0 && minus > 0 {
                count += 1;
            }
        }
    }
    count
}

#[test]
fn irregular_count_matches_brute_force() {
    let pi = std::f64::consts::PI;
    let grid = GridSpec::new(-pi, pi, -pi, pi, 32).unwrap();
    let psi = parse_expr("x^2+y^2-2").unwrap();
    let classes = classify_points(&grid, &psi).unwrap();
    assert_eq!(
        classes.irregular_count(),
        brute_force_irregular_count(&grid, "x^2+y^2-2")
    );
}

/// The distinct level-set / domain pairs of the built-in benchmark problems.
fn benchmark_geometries() -> Vec<(&'static str, f64)> {
    let pi = std::f64::consts::PI;
    vec![
        ("x^4+2*y^4-2", 3.0),
        ("x^2+y^2-2", pi),
        ("y^2-2*x^2+x^4-1", pi),
        ("2*x^4+y^2-1/2", 2.5),
        ("y^2+2*x^2/(x^2+1)-1", 2.0 * pi / 3.0),
        ("x^4+2*y^4-2", pi),
        ("2*x^4+y^2-1/2", 2.0),
    ]
}

#[test]
fn base_points_stay_inside_the_open_square() {
    for (psi_text, half_width) in benchmark_geometries() {
        let psi = parse_expr(psi_text).unwrap();
        for j_level in 3..=6u32 {
            let n = 1usize << j_level;
            let grid = GridSpec::new(-half_width, half_width, -half_width, half_width, n).unwrap();
            let classes = classify_points(&grid, &psi).unwrap();
            for (i, j, irr) in classes.irregular() {
                assert!(
                    irr.v0.abs() < 1.0 && irr.w0.abs() < 1.0,
                    "{psi_text} J={j_level} node ({i},{j}): offsets ({}, {})",
                    irr.v0,
                    irr.w0
                );
                // The base point must sit on Γ.
                let scale = eval_expr(&psi, grid.x(i), grid.y(j)).unwrap().abs();
                let on_curve = eval_expr(&psi, irr.base.0, irr.base.1).unwrap().abs();
                assert!(
                    on_curve <= 1e-12 * scale.max(1.0),
                    "{psi_text} J={j_level}: |psi(base)| = {on_curve}"
                );
                // Consistency of the stored offsets with the node position.
                let back_x = irr.base.0 + irr.v0 * grid.h;
                let back_y = irr.base.1 + irr.w0 * grid.h;
                assert!((back_x - grid.x(i)).abs() <= 1e-12);
                assert!((back_y - grid.y(j)).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn membership_sets_partition_everywhere() {
    let pi = std::f64::consts::PI;
    let grid = GridSpec::new(-pi, pi, -pi, pi, 24).unwrap();
    let psi = parse_expr("y^2-2*x^2+x^4-1").unwrap();
    let classes = classify_points(&grid, &psi).unwrap();
    let mut saw_irregular = false;
    for (_, _, class) in classes.iter() {
        if let PointClass::Irregular(irr) = class {
            saw_irregular = true;
            assert!(!irr.d_plus.is_empty() && !irr.d_minus.is_empty());
            assert_eq!(irr.d_plus.len() + irr.d_minus.len(), 9);
            let mut all: Vec<_> = irr.d_plus.iter().chain(irr.d_minus.iter()).collect();
            all.sort_unstable();
            all.dedup();
            assert_eq!(all.len(), 9, "d+ and d− overlap");
        }
    }
    assert!(saw_irregular);
}
