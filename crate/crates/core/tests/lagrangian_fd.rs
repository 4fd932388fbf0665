mod common;

use sheath::lagrangian::{det_expansion_check, solve_lagrangian};
use sheath::{Mat2, Vec2};

use common::{lagrangian_force as force, lagrangian_grad_u0 as grad_u0, lagrangian_u0 as u0, orders};

fn end(a: Vec2) -> Vec2 {
    solve_lagrangian(&force(), a, u0(a), grad_u0(a), 0.0, 0.6, 1e-3).unwrap().end()
}

#[test]
fn variational_gamma_matches_central_differences() {
    let a = Vec2::new(1.1, 0.4);
    let p = solve_lagrangian(&force(), a, u0(a), grad_u0(a), 0.0, 0.6, 1e-3).unwrap();
    let gamma = *p.gamma.last().unwrap();
    let errs: Vec<f64> = [4e-2, 2e-2, 1e-2]
        .iter()
        .map(|&h| {
            let e1 = Vec2::new(h, 0.0);
            let e2 = Vec2::new(0.0, h);
            let c1 = (end(a + e1) - end(a - e1)) / (2.0 * h);
            let c2 = (end(a + e2) - end(a - e2)) / (2.0 * h);
            (Mat2::new(c1.x, c2.x, c1.y, c2.y) - gamma).abs().max()
        })
        .collect();
    let o = orders(&errs);
    assert!(o.iter().all(|&q| q > 1.8), "{errs:?} {o:?}");
}

#[test]
fn det_gamma_expands_like_identity_plus_t_grad_u0() {
    let a = Vec2::new(0.9, -0.3);
    let p = solve_lagrangian(&force(), a, u0(a), grad_u0(a), 0.0, 0.5, 1e-3).unwrap();
    let r = det_expansion_check(&p, grad_u0(a)).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(r.exponent.unwrap() >= 1.9, "{r:?}");
}
